//! Deterministic model initialization.
//!
//! Latent means start at the first Q principal-component scores of the
//! column-centered data; latent variances at one; inducing inputs at a
//! seeded subset of the means. Stick parameters and kernel hyperparameters
//! are drawn from standard log-Normals, responsibilities from a standard
//! normal pushed through the softmax, and q(α) starts at its prior.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{Mode, ModelConfig};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::model::{ComponentParams, DpState, ModelState, VariationalLatent};

/// First `q` principal-component scores (U·S columns) of the column-centered
/// matrix. Fails when the centered matrix has rank below `q`.
fn pca_scores(y: &DataMatrix, q: usize) -> Result<DMatrix<f64>> {
    let n = y.nrows();
    let d = y.ncols();
    let means = y.column_means();
    // Masked entries are mean-imputed for initialization only, which after
    // centering makes them exact zeros.
    let mut centered = DMatrix::<f64>::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            if y.mask[(i, j)] {
                centered[(i, j)] = y.values[(i, j)] - means[j];
            }
        }
    }
    let svd = centered.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd requested u");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let smax = svd.singular_values[order[0]];
    let tol = (n.max(d) as f64) * f64::EPSILON * smax.max(f64::MIN_POSITIVE);
    let rank = order
        .iter()
        .filter(|&&k| svd.singular_values[k] > tol)
        .count();
    if rank < q {
        return Err(Error::RankDeficient {
            required: q,
            achieved: rank,
        });
    }
    let mut scores = DMatrix::<f64>::zeros(n, q);
    for (col, &k) in order.iter().take(q).enumerate() {
        let s = svd.singular_values[k];
        for i in 0..n {
            scores[(i, col)] = u[(i, k)] * s;
        }
    }
    Ok(scores)
}

fn lognormal_vec(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_iterator(len, (0..len).map(|_| rng.sample::<f64, _>(StandardNormal).exp()))
}

fn lognormal_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // Row-major fill so the draw order is part of the format.
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.sample::<f64, _>(StandardNormal).exp())
        .collect();
    DMatrix::from_row_iterator(rows, cols, data)
}

/// Build the starting state for training. Pure function of `(y, config,
/// mode)`: equal inputs give bit-identical states.
pub fn initialize(y: &DataMatrix, config: &ModelConfig, mode: &Mode) -> Result<ModelState> {
    config.validate()?;
    config.validate_mode(mode)?;
    if y.nrows() != config.n || y.ncols() != config.d {
        return Err(Error::InvalidInput(format!(
            "data is {}x{} but config says {}x{}",
            y.nrows(),
            y.ncols(),
            config.n,
            config.d
        )));
    }
    y.validate_min_observed(config.m)?;
    let (n, q, m, t, d) = (config.n, config.q, config.m, config.t, config.d);

    let mu = pca_scores(y, q)?;
    let sigma = DMatrix::from_element(n, q, 1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // Draw order is fixed: inducing subset, sticks, responsibilities,
    // then kernel hyperparameters. Changing it changes every seeded run.
    let mut idx = rand::seq::index::sample(&mut rng, n, m).into_vec();
    idx.sort_unstable();
    let mut xu = DMatrix::<f64>::zeros(m, q);
    for (r, &i) in idx.iter().enumerate() {
        xu.set_row(r, &mu.row(i));
    }

    let (a, b, phi) = match mode {
        Mode::BGpLvm => (
            DVector::zeros(0),
            DVector::zeros(0),
            DMatrix::from_element(d, 1, 1.0),
        ),
        Mode::MrdFixed(assign) => {
            let a = lognormal_vec(&mut rng, t - 1);
            let b = lognormal_vec(&mut rng, t - 1);
            let mut phi = DMatrix::zeros(d, t);
            for (dd, &g) in assign.iter().enumerate() {
                phi[(dd, g)] = 1.0;
            }
            (a, b, phi)
        }
        Mode::DpGpLvm => {
            let a = lognormal_vec(&mut rng, t - 1);
            let b = lognormal_vec(&mut rng, t - 1);
            let mut phi = DMatrix::zeros(d, t);
            for dd in 0..d {
                let logits: Vec<f64> = (0..t)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
                let sum: f64 = exps.iter().sum();
                for tt in 0..t {
                    phi[(dd, tt)] = exps[tt] / sum;
                }
            }
            (a, b, phi)
        }
    };

    let signal_var = lognormal_vec(&mut rng, t);
    let ard = lognormal_mat(&mut rng, t, q);
    let noise_prec = lognormal_vec(&mut rng, t);

    let state = ModelState {
        config: config.clone(),
        latent: VariationalLatent { mu, sigma, xu },
        components: ComponentParams {
            signal_var,
            ard,
            noise_prec,
        },
        dp: DpState {
            a,
            b,
            phi,
            w1: config.s1,
            w2: config.s2,
        },
        mode: mode.clone(),
    };
    state.validate()?;
    Ok(state)
}
