//! Training, evaluation and the resumable sweep.

use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;

use super::config::SweepConfig;
use super::manifest::{FileRef, RunEntry, RunManifest, RunStatus};
use super::tables::{curve_csv, features_csv, read_features, FeatureRow};
use crate::behavior::{extract_features, record, EnvTrace, FeatureParams, TrajectoryLog};
use crate::error::{Error, Result};
use crate::ppo::{train, Environment, IterationStats, PolicyArtifact, PourEnv};
use crate::reward::build_weight_grid;

/// Trains grid cell `index` with `seed`.
pub fn train_policy(config: &SweepConfig, index: usize, seed: u64) -> Result<(PolicyArtifact, Vec<IterationStats>)> {
    let grid = build_weight_grid(&config.reward, &config.mutation)?;
    let weights = *grid
        .get(index)
        .ok_or_else(|| Error::usage(format!("grid index {index} out of range 0..{}", grid.len())))?;
    let mut env = PourEnv::new(config.env.clone(), weights, config.control_substeps)?;
    let out = train(&mut env, &config.ppo, seed)?;
    let artifact = PolicyArtifact::new(out.params, weights, config.env.clone(), config.control_substeps, Some(index), seed);
    Ok((artifact, out.curve))
}

/// One evaluation episode with mean actions and the frozen normaliser.
pub fn rollout(artifact: &PolicyArtifact, env_seed: u64) -> Result<EnvTrace> {
    let cfg = &artifact.env;
    let params = &artifact.policy;
    let mut env = PourEnv::new(cfg.clone(), artifact.weights, artifact.control_substeps)?;
    let mut raw = env.reset(env_seed)?;
    let mut trace = EnvTrace::new(cfg);
    let mut before = env.state().expect("reset done").arm.cup_pose(cfg);
    loop {
        let action = params.mean(&params.obs_norm.normalize(&raw))?;
        let step = env.step_visit(&action, |state, tr| {
            trace.push(&before, state, tr);
            before = state.arm.cup_pose(cfg);
        })?;
        if step.done {
            return Ok(trace);
        }
        raw = step.observation;
    }
}

pub struct Evaluation {
    pub log: TrajectoryLog,
    pub row: FeatureRow,
}

/// Evaluates `episodes` episodes with environment seeds `seed_base + e`.
pub fn evaluate(artifact: &PolicyArtifact, episodes: usize, seed_base: u64, params: &FeatureParams) -> Result<Vec<Evaluation>> {
    (0..episodes)
        .map(|e| {
            let eval_seed = seed_base + e as u64;
            let log = record(&rollout(artifact, eval_seed)?);
            let features = extract_features(&log, params)?;
            Ok(Evaluation {
                row: FeatureRow {
                    config_index: artifact.config_index.unwrap_or(0),
                    seed: artifact.seed,
                    episode: e,
                    eval_seed,
                    weights: artifact.weights,
                    features,
                },
                log,
            })
        })
        .collect()
}

/// Trains the run and records its artifact and curve in `entry`.
pub fn train_job(root: &Path, config: &SweepConfig, entry: &mut RunEntry) -> Result<PolicyArtifact> {
    let dir = RunEntry::dir_name(entry.config_index, entry.seed);
    let start = Instant::now();
    let (artifact, curve) = train_policy(config, entry.config_index, entry.seed)?;
    entry.train_seconds = Some(start.elapsed().as_secs_f64());
    entry.artifact = Some(FileRef::create(root, &format!("{dir}/policy.json"), artifact.to_json()?.as_bytes())?);
    entry.curve = Some(FileRef::create(root, &format!("{dir}/curve.csv"), &curve_csv(&curve)?)?);
    entry.features = None;
    entry.trajectories.clear();
    entry.status = RunStatus::Trained;
    entry.error = None;
    Ok(artifact)
}

/// Evaluates a trained run and records its logs and features in `entry`.
pub fn eval_job(root: &Path, config: &SweepConfig, artifact: &PolicyArtifact, entry: &mut RunEntry) -> Result<()> {
    let dir = RunEntry::dir_name(entry.config_index, entry.seed);
    let evals = evaluate(artifact, config.evals_per_policy, config.eval_seed_base, &config.features)?;
    entry.trajectories.clear();
    if config.write_trajectories {
        for ev in &evals {
            let rel = format!("{dir}/ep{:03}.jsonl", ev.row.episode);
            entry.trajectories.push(FileRef::create(root, &rel, ev.log.to_jsonl().as_bytes())?);
        }
    }
    let rows: Vec<FeatureRow> = evals.into_iter().map(|e| e.row).collect();
    entry.features = Some(FileRef::create(root, &format!("{dir}/features.csv"), &features_csv(&rows)?)?);
    entry.status = RunStatus::Done;
    entry.error = None;
    Ok(())
}

/// Trains (unless a valid artifact exists) and evaluates one run.
pub fn run_job(root: &Path, config: &SweepConfig, mut entry: RunEntry) -> Result<RunEntry> {
    let artifact = match &entry.artifact {
        Some(a) if entry.trained_ok(root) => PolicyArtifact::load(&root.join(&a.path))?,
        _ => train_job(root, config, &mut entry)?,
    };
    eval_job(root, config, &artifact, &mut entry)?;
    Ok(entry)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepProgress {
    pub completed_now: usize,
    pub skipped: usize,
    pub remaining: usize,
    pub failed: Vec<String>,
}

/// Runs every run of the manifest that is not yet complete, at most
/// `max_runs` of them, on `config.worker_count()` threads.
pub fn sweep(root: &Path, config: &SweepConfig, max_runs: Option<usize>, log: impl Fn(&str) + Sync) -> Result<(RunManifest, SweepProgress)> {
    let manifest = RunManifest::open(root, config)?;
    let (todo, done): (Vec<RunEntry>, Vec<RunEntry>) = manifest.runs.iter().cloned().partition(|r| !r.done_ok(root));
    let take = max_runs.unwrap_or(usize::MAX).min(todo.len());
    let jobs: Vec<RunEntry> = todo[..take].to_vec();
    let total = jobs.len();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count())
        .build()
        .map_err(|e| Error::Runtime(format!("starting worker pool: {e}")))?;
    let shared = Mutex::new((manifest, 0usize));
    let failed = Mutex::new(Vec::new());
    pool.install(|| {
        jobs.into_par_iter().for_each(|entry| {
            let key = (entry.config_index, entry.seed);
            let result = run_job(root, config, entry.clone());
            let mut guard = shared.lock().expect("manifest lock");
            let (manifest, finished) = &mut *guard;
            *finished += 1;
            let slot = manifest.entry_mut(key.0, key.1);
            match result {
                Ok(updated) => {
                    *slot = updated;
                    log(&format!("[{}/{}] config {:02} seed {} done", finished, total, key.0, key.1));
                }
                Err(e) => {
                    slot.status = RunStatus::Failed;
                    slot.error = Some(e.to_string());
                    log(&format!("[{}/{}] config {:02} seed {} failed: {e}", finished, total, key.0, key.1));
                    failed.lock().expect("failure list").push(format!("config {} seed {}: {e}", key.0, key.1));
                }
            }
            manifest.updated_unix = super::manifest::now_unix();
            if let Err(e) = manifest.save(root) {
                failed.lock().expect("failure list").push(format!("saving manifest: {e}"));
            }
        })
    });
    let (manifest, _) = shared.into_inner().expect("manifest lock");
    let mut failed = failed.into_inner().expect("failure list");
    failed.sort();
    let remaining = manifest.runs.iter().filter(|r| r.status != RunStatus::Done).count();
    Ok((
        manifest,
        SweepProgress {
            completed_now: take - failed.len().min(take),
            skipped: done.len(),
            remaining,
            failed,
        },
    ))
}

/// Feature rows of every completed run, ordered by (config index, seed, episode).
pub fn collect_features(root: &Path, manifest: &RunManifest) -> Result<Vec<FeatureRow>> {
    let mut rows = Vec::new();
    for r in &manifest.runs {
        if let Some(f) = &r.features {
            let path = root.join(&f.path);
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            rows.extend(read_features(&bytes)?);
        }
    }
    rows.sort_by_key(|r| (r.config_index, r.seed, r.episode));
    Ok(rows)
}
