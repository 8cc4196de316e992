//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::config::SweepConfig;
use super::io::write_atomic;
use super::manifest::RunManifest;
use super::report::{cell_aggregates, grid_svg, label_rows};
use super::run::{collect_features, evaluate, sweep, train_job};
use super::tables::{append_features, features_csv, labels_csv, read_features, read_labels, summary_csv};
use crate::behavior::LabelOverrides;
use crate::error::{Error, Result};
use crate::ppo::PolicyArtifact;
use crate::reward::build_weight_grid;

pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const GRID_FILE: &str = "grid.svg";

#[derive(Debug, Parser)]
#[command(name = "pourlab", version, about = "Reward-weight sweeps on a simulated pouring task")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML file layered over the built-in profile.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Results directory (overrides `output_dir`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Base training seed (overrides `seed`).
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads (overrides `workers`).
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Start from the small smoke-test profile instead of the desk profile.
    #[arg(long, global = true)]
    pub ci: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one policy for a weight-grid cell.
    Train {
        /// Grid cell, row-major with the time weight outer. Defaults to the baseline cell.
        #[arg(long)]
        index: Option<usize>,
    },
    /// Train and evaluate every cell and seed, then classify and report.
    Sweep {
        /// Stop after this many runs; rerun to resume.
        #[arg(long, value_name = "N")]
        max_runs: Option<usize>,
    },
    /// Roll out a saved policy and append its features.
    Eval {
        #[arg(long, value_name = "PATH")]
        policy: PathBuf,
        #[arg(long, value_name = "N")]
        episodes: Option<usize>,
        /// Environment seed of the first episode.
        #[arg(long, value_name = "N")]
        seed_base: Option<u64>,
    },
    /// Label the features table.
    Classify {
        /// Manual relabelling file (lines of `config seed episode Label`).
        #[arg(long, value_name = "PATH")]
        overrides: Option<PathBuf>,
    },
    /// Write the per-cell summary table and grid figure from the labels.
    Report,
}

impl GlobalArgs {
    pub fn resolve(&self) -> Result<SweepConfig> {
        let mut cfg = match &self.config {
            Some(p) => SweepConfig::load(p, self.ci)?,
            None => SweepConfig::profile(self.ci),
        };
        if let Some(o) = &self.out {
            cfg.output_dir = o.display().to_string();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = cli.global.resolve()?;
    let root = PathBuf::from(&cfg.output_dir);
    match cli.command {
        Command::Train { index } => cmd_train(&root, &cfg, index),
        Command::Sweep { max_runs } => cmd_sweep(&root, &cfg, max_runs),
        Command::Eval {
            policy,
            episodes,
            seed_base,
        } => cmd_eval(&root, &cfg, &policy, episodes.unwrap_or(cfg.evals_per_policy), seed_base.unwrap_or(cfg.eval_seed_base)),
        Command::Classify { overrides } => cmd_classify(&root, &cfg, overrides.as_deref()),
        Command::Report => cmd_report(&root, &cfg),
    }
}

pub fn cmd_train(root: &Path, cfg: &SweepConfig, index: Option<usize>) -> Result<()> {
    let cells = cfg.mutation.grid_len();
    let index = index.unwrap_or(cfg.mutation.baseline_index());
    if index >= cells {
        return Err(Error::usage(format!("--index {index} is out of range 0..{cells}")));
    }
    let mut manifest = RunManifest::open(root, cfg)?;
    let mut entry = manifest.entry_mut(index, cfg.seed).clone();
    let artifact = train_job(root, cfg, &mut entry)?;
    *manifest.entry_mut(index, cfg.seed) = entry.clone();
    manifest.updated_unix = super::manifest::now_unix();
    manifest.save(root)?;
    let w = artifact.weights;
    eprintln!("trained cell {index} (w_t {}, w_e {}) seed {}", w.w_t, w.w_e, cfg.seed);
    println!("{}", root.join(&entry.artifact.expect("set by training").path).display());
    Ok(())
}

pub fn cmd_sweep(root: &Path, cfg: &SweepConfig, max_runs: Option<usize>) -> Result<()> {
    let (manifest, progress) = sweep(root, cfg, max_runs, |m| eprintln!("{m}"))?;
    if !progress.failed.is_empty() {
        return Err(Error::Runtime(format!("{} run(s) failed: {}", progress.failed.len(), progress.failed.join("; "))));
    }
    if progress.remaining > 0 {
        eprintln!("{} run(s) remaining; rerun `sweep` to continue", progress.remaining);
        return Ok(());
    }
    let rows = collect_features(root, &manifest)?;
    write_atomic(&root.join(FEATURES_FILE), &features_csv(&rows)?)?;
    cmd_classify(root, cfg, None)?;
    cmd_report(root, cfg)
}

pub fn cmd_eval(root: &Path, cfg: &SweepConfig, policy: &Path, episodes: usize, seed_base: u64) -> Result<()> {
    if episodes < 1 {
        return Err(Error::usage("--episodes must be >= 1"));
    }
    let artifact = PolicyArtifact::load(policy)?;
    let evals = evaluate(&artifact, episodes, seed_base, &cfg.features)?;
    let stem = policy.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "policy".into());
    let dir = root.join(format!("eval-{stem}"));
    for ev in &evals {
        write_atomic(&dir.join(format!("ep{:03}.jsonl", ev.row.episode)), ev.log.to_jsonl().as_bytes())?;
    }
    let rows: Vec<_> = evals.into_iter().map(|e| e.row).collect();
    append_features(&root.join(FEATURES_FILE), &rows)?;
    eprintln!("{} episode(s) logged under {}", rows.len(), dir.display());
    Ok(())
}

pub fn cmd_classify(root: &Path, cfg: &SweepConfig, overrides: Option<&Path>) -> Result<()> {
    let rows = read_features(&read(&root.join(FEATURES_FILE))?)?;
    let overrides = match overrides.map(Path::to_path_buf).or_else(|| cfg.label_overrides.as_ref().map(PathBuf::from)) {
        Some(p) => LabelOverrides::parse(&String::from_utf8_lossy(&read(&p)?))?,
        None => LabelOverrides::default(),
    };
    let labels = label_rows(&rows, &cfg.classifier, cfg.mutation.baseline_index(), cfg.env.duration(), &overrides)?;
    write_atomic(&root.join(LABELS_FILE), &labels_csv(&labels)?)
}

pub fn cmd_report(root: &Path, cfg: &SweepConfig) -> Result<()> {
    let path = root.join(LABELS_FILE);
    if !path.exists() {
        return Err(Error::Runtime(format!("{} not found; run `classify` or `sweep` first", path.display())));
    }
    let labels = read_labels(&read(&path)?)?;
    if labels.is_empty() {
        return Err(Error::Runtime(format!("{} holds no rows", path.display())));
    }
    let grid = match RunManifest::load(root)? {
        Some(m) => m.grid,
        None => build_weight_grid(&cfg.reward, &cfg.mutation)?,
    };
    let cells = cell_aggregates(&labels, grid.len())?;
    write_atomic(&root.join(SUMMARY_FILE), &summary_csv(&grid, &cells)?)?;
    write_atomic(&root.join(GRID_FILE), grid_svg(&grid, &cells).as_bytes())?;
    for (i, a) in cells.iter().enumerate() {
        println!("{i:2} {:<10} {}/{}", a.majority, a.counts[&a.majority], a.counted);
    }
    Ok(())
}
