use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamHyper {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates for one parameter buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// One bias-corrected Adam step, in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, hyper: &AdamHyper) {
    debug_assert_eq!(params.len(), grads.len());
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - hyper.beta1.powi(t);
    let c2 = 1.0 - hyper.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_params_and_decays_moments() {
        let h = AdamHyper::with_lr(0.1);
        let mut st = AdamState { m: vec![0.5], v: vec![0.25], t: 3 };
        let mut p = vec![1.0];
        adam_step(&mut p, &[0.0], &mut st, &h);
        assert!((st.m[0] - 0.45).abs() < 1e-15);
        assert!((st.v[0] - 0.24975).abs() < 1e-15);
        // moments are non-zero, so the parameter still moves; with fresh moments it must not
        let mut fresh = AdamState::new(1);
        let mut q = vec![1.0];
        adam_step(&mut q, &[0.0], &mut fresh, &h);
        assert_eq!(q[0], 1.0);
        assert_eq!(fresh.m[0], 0.0);
    }

    #[test]
    fn first_step_closed_form() {
        // m̂ = g, v̂ = g², so Δ = -lr · g / (|g| + eps)
        let h = AdamHyper::with_lr(1e-3);
        for g in [0.37, -2.5] {
            let mut st = AdamState::new(1);
            let mut p = vec![0.0];
            adam_step(&mut p, &[g], &mut st, &h);
            let expected = -1e-3 * g / (g.abs() + 1e-8);
            assert!((p[0] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn deterministic() {
        let run = || {
            let h = AdamHyper::with_lr(0.01);
            let mut st = AdamState::new(3);
            let mut p = vec![0.1, 0.2, 0.3];
            for k in 0..50 {
                let g: Vec<f64> = p.iter().map(|x| x * (k as f64).sin()).collect();
                adam_step(&mut p, &g, &mut st, &h);
            }
            p.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}
