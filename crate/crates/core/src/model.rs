//! Model state: variational latent distribution, per-component kernel
//! hyperparameters, stick-breaking state, and the bijection between a
//! constrained state and the flat unconstrained vector the optimizer works
//! on.
//!
//! Positive quantities travel through log/exp; responsibility rows through a
//! row-wise softmax; latent means and inducing inputs are untransformed.

use nalgebra::{DMatrix, DVector};

use crate::config::{Mode, ModelConfig};
use crate::error::{Error, Result};

/// Factorized Gaussian over the latent coordinates plus inducing inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalLatent {
    /// N×Q means of q(X).
    pub mu: DMatrix<f64>,
    /// N×Q diagonal variances of q(X); strictly positive.
    pub sigma: DMatrix<f64>,
    /// M×Q inducing input locations.
    pub xu: DMatrix<f64>,
}

impl VariationalLatent {
    pub fn validate(&self) -> Result<()> {
        if self.mu.shape() != self.sigma.shape() {
            return Err(Error::InvalidInput("mu/sigma shape mismatch".into()));
        }
        if self.xu.ncols() != self.mu.ncols() {
            return Err(Error::InvalidInput("xu latent dimension mismatch".into()));
        }
        if self.mu.iter().any(|v| !v.is_finite()) || self.xu.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("latent means".into()));
        }
        if self.sigma.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(
                "latent variances must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

/// Kernel hyperparameters and noise precision for each of the T components.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentParams {
    /// T signal variances σ²ₜ.
    pub signal_var: DVector<f64>,
    /// T×Q ARD weights γₜ.
    pub ard: DMatrix<f64>,
    /// T noise precisions βₜ.
    pub noise_prec: DVector<f64>,
}

impl ComponentParams {
    pub fn n_components(&self) -> usize {
        self.signal_var.len()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.signal_var.len();
        if self.ard.nrows() != t || self.noise_prec.len() != t {
            return Err(Error::InvalidInput("component count mismatch".into()));
        }
        let all_pos = self
            .signal_var
            .iter()
            .chain(self.ard.iter())
            .chain(self.noise_prec.iter())
            .all(|v| *v > 0.0 && v.is_finite());
        if !all_pos {
            return Err(Error::InvalidInput(
                "kernel hyperparameters must be strictly positive and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Variational state of the truncated stick-breaking process.
#[derive(Debug, Clone, PartialEq)]
pub struct DpState {
    /// (T−1) Beta shape parameters.
    pub a: DVector<f64>,
    /// (T−1) Beta rate parameters.
    pub b: DVector<f64>,
    /// D×T responsibilities; each row lies on the simplex.
    pub phi: DMatrix<f64>,
    /// Gamma shape of q(α).
    pub w1: f64,
    /// Gamma rate of q(α).
    pub w2: f64,
}

impl DpState {
    pub fn validate(&self) -> Result<()> {
        let t = self.phi.ncols();
        if self.a.len() + 1 != t || self.b.len() + 1 != t {
            return Err(Error::InvalidInput(format!(
                "stick parameters must have length T-1 = {}",
                t - 1
            )));
        }
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !self.a.iter().chain(self.b.iter()).all(|&v| pos(v)) || !pos(self.w1) || !pos(self.w2) {
            return Err(Error::InvalidInput(
                "stick and Gamma parameters must be positive".into(),
            ));
        }
        for d in 0..self.phi.nrows() {
            let row = self.phi.row(d);
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidInput(format!(
                    "phi row {d} has entries outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidInput(format!(
                    "phi row {d} sums to {sum}, not 1"
                )));
            }
        }
        Ok(())
    }
}

/// Complete model state. Immutable value type: every operation that changes
/// it produces a new state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub config: ModelConfig,
    pub latent: VariationalLatent,
    pub components: ComponentParams,
    pub dp: DpState,
    pub mode: Mode,
}

impl ModelState {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.config.validate_mode(&self.mode)?;
        self.latent.validate()?;
        self.components.validate()?;
        self.dp.validate()?;
        let (n, q, m, t, d) = (
            self.config.n,
            self.config.q,
            self.config.m,
            self.config.t,
            self.config.d,
        );
        if self.latent.mu.shape() != (n, q) || self.latent.xu.shape() != (m, q) {
            return Err(Error::InvalidInput("latent shape mismatch".into()));
        }
        if self.components.n_components() != t
            || self.components.ard.ncols() != q
            || self.dp.phi.shape() != (d, t)
        {
            return Err(Error::InvalidInput("component shape mismatch".into()));
        }
        match &self.mode {
            Mode::BGpLvm => {
                if t != 1 || self.dp.phi.iter().any(|&p| p != 1.0) {
                    return Err(Error::InvalidInput(
                        "bgplvm state must have a single all-ones responsibility column".into(),
                    ));
                }
            }
            Mode::MrdFixed(assign) => {
                for (d, &g) in assign.iter().enumerate() {
                    for t in 0..self.dp.phi.ncols() {
                        let expect = if t == g { 1.0 } else { 0.0 };
                        if self.dp.phi[(d, t)] != expect {
                            return Err(Error::InvalidInput(
                                "mrd state responsibilities must be one-hot at the fixed assignment"
                                    .into(),
                            ));
                        }
                    }
                }
            }
            Mode::DpGpLvm => {}
        }
        Ok(())
    }

    /// Length of the unconstrained parameter vector for this config/mode.
    pub fn param_len(config: &ModelConfig, mode: &Mode) -> usize {
        let (n, q, m, t, d) = (config.n, config.q, config.m, config.t, config.d);
        let base = 2 * n * q + m * q + t * (q + 2);
        match mode {
            Mode::BGpLvm => base,
            Mode::MrdFixed(_) => base + 2 * (t - 1) + 2,
            Mode::DpGpLvm => base + 2 * (t - 1) + d * t + 2,
        }
    }
}

fn softmax_row(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Map a flat unconstrained vector to a constrained model state.
///
/// Layout, in order: mu (N×Q row-major), log sigma, xu (M×Q row-major),
/// log signal_var (T), log ard (T×Q row-major), log noise_prec (T); then for
/// modes with stick machinery: log a, log b (T−1 each), for dpgplvm the phi
/// logits (D×T row-major), and finally log w1, log w2.
pub fn transform_unconstrained(
    raw: &DVector<f64>,
    config: &ModelConfig,
    mode: &Mode,
) -> Result<ModelState> {
    let expected = ModelState::param_len(config, mode);
    if raw.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: raw.len(),
        });
    }
    if let Some(idx) = raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "unconstrained parameter at index {idx}"
        )));
    }
    let (n, q, m, t, d) = (config.n, config.q, config.m, config.t, config.d);
    let mut at = 0usize;
    let mut take = |len: usize| {
        let slice: Vec<f64> = raw.as_slice()[at..at + len].to_vec();
        at += len;
        slice
    };

    let mu = DMatrix::from_row_iterator(n, q, take(n * q));
    let sigma = DMatrix::from_row_iterator(n, q, take(n * q).into_iter().map(f64::exp));
    let xu = DMatrix::from_row_iterator(m, q, take(m * q));
    let signal_var = DVector::from_iterator(t, take(t).into_iter().map(f64::exp));
    let ard = DMatrix::from_row_iterator(t, q, take(t * q).into_iter().map(f64::exp));
    let noise_prec = DVector::from_iterator(t, take(t).into_iter().map(f64::exp));

    let dp = match mode {
        Mode::BGpLvm => DpState {
            a: DVector::zeros(0),
            b: DVector::zeros(0),
            phi: DMatrix::from_element(d, 1, 1.0),
            w1: config.s1,
            w2: config.s2,
        },
        Mode::MrdFixed(assign) => {
            let a = DVector::from_vec(take(t - 1).into_iter().map(f64::exp).collect());
            let b = DVector::from_vec(take(t - 1).into_iter().map(f64::exp).collect());
            let mut phi = DMatrix::zeros(d, t);
            for (dd, &g) in assign.iter().enumerate() {
                phi[(dd, g)] = 1.0;
            }
            let w = take(2);
            DpState {
                a,
                b,
                phi,
                w1: w[0].exp(),
                w2: w[1].exp(),
            }
        }
        Mode::DpGpLvm => {
            let a = DVector::from_vec(take(t - 1).into_iter().map(f64::exp).collect());
            let b = DVector::from_vec(take(t - 1).into_iter().map(f64::exp).collect());
            let logits = take(d * t);
            let mut phi = DMatrix::zeros(d, t);
            for dd in 0..d {
                let row = softmax_row(&logits[dd * t..(dd + 1) * t]);
                for (tt, &p) in row.iter().enumerate() {
                    phi[(dd, tt)] = p;
                }
            }
            let w = take(2);
            DpState {
                a,
                b,
                phi,
                w1: w[0].exp(),
                w2: w[1].exp(),
            }
        }
    };
    debug_assert_eq!(at, expected);

    Ok(ModelState {
        config: config.clone(),
        latent: VariationalLatent { mu, sigma, xu },
        components: ComponentParams {
            signal_var,
            ard,
            noise_prec,
        },
        dp,
        mode: mode.clone(),
    })
}

/// Inverse of [`transform_unconstrained`]. Responsibility rows map to
/// mean-centered log probabilities, so `transform(inverse(state))`
/// reproduces the constrained values exactly while the logits themselves are
/// only canonical up to the softmax gauge.
pub fn inverse_transform(state: &ModelState) -> DVector<f64> {
    let mut out = Vec::with_capacity(ModelState::param_len(&state.config, &state.mode));
    let push_rows = |out: &mut Vec<f64>, m: &DMatrix<f64>, f: fn(f64) -> f64| {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.push(f(m[(i, j)]));
            }
        }
    };
    let id = |x: f64| x;
    push_rows(&mut out, &state.latent.mu, id);
    push_rows(&mut out, &state.latent.sigma, f64::ln);
    push_rows(&mut out, &state.latent.xu, id);
    out.extend(state.components.signal_var.iter().map(|v| v.ln()));
    push_rows(&mut out, &state.components.ard, f64::ln);
    out.extend(state.components.noise_prec.iter().map(|v| v.ln()));
    match &state.mode {
        Mode::BGpLvm => {}
        Mode::MrdFixed(_) => {
            out.extend(state.dp.a.iter().map(|v| v.ln()));
            out.extend(state.dp.b.iter().map(|v| v.ln()));
            out.push(state.dp.w1.ln());
            out.push(state.dp.w2.ln());
        }
        Mode::DpGpLvm => {
            out.extend(state.dp.a.iter().map(|v| v.ln()));
            out.extend(state.dp.b.iter().map(|v| v.ln()));
            for d in 0..state.dp.phi.nrows() {
                let logs: Vec<f64> = state.dp.phi.row(d).iter().map(|p| p.ln()).collect();
                let mean = logs.iter().sum::<f64>() / logs.len() as f64;
                out.extend(logs.iter().map(|l| l - mean));
            }
            out.push(state.dp.w1.ln());
            out.push(state.dp.w2.ln());
        }
    }
    DVector::from_vec(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::OptimizerConfig;
    use proptest::prelude::*;

    fn test_config(mode: &Mode) -> ModelConfig {
        ModelConfig {
            q: 2,
            t: if matches!(mode, Mode::BGpLvm) { 1 } else { 3 },
            m: 2,
            n: 4,
            d: 5,
            s1: 1.0,
            s2: 1.0,
            jitter: 1e-6,
            optimizer: OptimizerConfig::default(),
            seed: 0,
        }
    }

    #[test]
    fn zero_raw_maps_to_unit_positives_and_uniform_phi() {
        let mode = Mode::DpGpLvm;
        let config = test_config(&mode);
        let raw = DVector::zeros(ModelState::param_len(&config, &mode));
        let state = transform_unconstrained(&raw, &config, &mode).unwrap();
        assert_eq!(state.latent.sigma[(0, 0)], 1.0);
        assert_eq!(state.components.signal_var[0], 1.0);
        assert_eq!(state.components.noise_prec[2], 1.0);
        assert!((state.dp.phi[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
        assert!((state.dp.phi[(4, 2)] - 1.0 / 3.0).abs() < 1e-15);
        state.validate().unwrap();
    }

    #[test]
    fn length_mismatch_is_structural_error() {
        let mode = Mode::DpGpLvm;
        let config = test_config(&mode);
        let raw = DVector::zeros(3);
        assert!(matches!(
            transform_unconstrained(&raw, &config, &mode),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn non_finite_raw_is_numeric_error() {
        let mode = Mode::BGpLvm;
        let config = test_config(&mode);
        let mut raw = DVector::zeros(ModelState::param_len(&config, &mode));
        raw[3] = f64::NAN;
        assert!(matches!(
            transform_unconstrained(&raw, &config, &mode),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn positive_roundtrip_example() {
        let mode = Mode::BGpLvm;
        let config = test_config(&mode);
        let mut raw = DVector::zeros(ModelState::param_len(&config, &mode));
        // signal_var slot for the single component follows mu/sigma/xu.
        let idx = 2 * 4 * 2 + 2 * 2;
        raw[idx] = 2.5f64.ln();
        let state = transform_unconstrained(&raw, &config, &mode).unwrap();
        assert!((state.components.signal_var[0] - 2.5).abs() < 2.5 * 1e-12);
    }

    proptest! {
        #[test]
        fn transform_inverse_roundtrip(raw_seed in proptest::collection::vec(-3.0f64..3.0, 53)) {
            let mode = Mode::DpGpLvm;
            let config = test_config(&mode);
            let len = ModelState::param_len(&config, &mode);
            prop_assert_eq!(len, 53);
            let raw = DVector::from_vec(raw_seed);
            let state = transform_unconstrained(&raw, &config, &mode).unwrap();
            let packed = inverse_transform(&state);
            let state2 = transform_unconstrained(&packed, &config, &mode).unwrap();
            // Constrained values round-trip to 1e-12 relative.
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1e-300);
            for (x, y) in state.latent.sigma.iter().zip(state2.latent.sigma.iter()) {
                prop_assert!(close(*x, *y));
            }
            for (x, y) in state.components.ard.iter().zip(state2.components.ard.iter()) {
                prop_assert!(close(*x, *y));
            }
            for (x, y) in state.dp.phi.iter().zip(state2.dp.phi.iter()) {
                prop_assert!(close(*x, *y));
            }
            prop_assert!(close(state.dp.w1, state2.dp.w1));
        }
    }

    #[test]
    fn bgplvm_state_exposes_single_component() {
        let mode = Mode::BGpLvm;
        let config = test_config(&mode);
        let raw = DVector::zeros(ModelState::param_len(&config, &mode));
        let state = transform_unconstrained(&raw, &config, &mode).unwrap();
        assert_eq!(state.components.n_components(), 1);
        assert_eq!(state.dp.phi.ncols(), 1);
        assert!(state.dp.phi.iter().all(|&p| p == 1.0));
    }
}
