//! ARD squared-exponential kernel and its Gaussian expectations ψ₀, Ψ₁, Ψ₂
//! under the factorized latent posterior, plus responsibility-weighted
//! mixtures of per-component statistics.
//!
//! Every expectation is assembled in log space per entry and exponentiated
//! once, so widely spread ARD weights and variances cannot overflow;
//! underflow flushes to zero.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::VariationalLatent;

/// Kernel sufficient statistics for one component (or one mixture).
#[derive(Debug, Clone, PartialEq)]
pub struct PsiStats {
    /// Σᵢ E[κ(xᵢ, xᵢ)] — N·σ² for a stationary kernel.
    pub psi0: f64,
    /// N×M matrix of E[κ(xᵢ, xᵘⱼ)].
    pub psi1: DMatrix<f64>,
    /// M×M matrix of Σᵢ E[κ(xᵢ, xᵘⱼ)κ(xᵘⱼ', xᵢ)], symmetrized.
    pub psi2: DMatrix<f64>,
}

/// κ(xᵢ, xⱼ) = σ²·exp(−½ Σ_q γ_q (x₁ᵢ_q − x₂ⱼ_q)²) for every row pair.
pub fn ard_se(
    x1: &DMatrix<f64>,
    x2: &DMatrix<f64>,
    sigma2: f64,
    gamma: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let q = x1.ncols();
    if x2.ncols() != q || gamma.len() != q {
        return Err(Error::InvalidInput(format!(
            "latent dimension mismatch: {} vs {} vs {}",
            q,
            x2.ncols(),
            gamma.len()
        )));
    }
    if !sigma2.is_finite()
        || sigma2 <= 0.0
        || gamma.iter().any(|g| !g.is_finite() || *g <= 0.0)
        || x1.iter().chain(x2.iter()).any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("kernel inputs".into()));
    }
    let log_sigma2 = sigma2.ln();
    let mut k = DMatrix::<f64>::zeros(x1.nrows(), x2.nrows());
    for i in 0..x1.nrows() {
        for j in 0..x2.nrows() {
            let mut e = 0.0;
            for qq in 0..q {
                let diff = x1[(i, qq)] - x2[(j, qq)];
                e += gamma[qq] * diff * diff;
            }
            k[(i, j)] = (log_sigma2 - 0.5 * e).exp();
        }
    }
    Ok(k)
}

/// ψ₀ over `n` samples: the integrand κ(x, x) = σ² is constant, so the
/// latent posterior drops out entirely.
pub fn psi0(sigma2: f64, n: usize) -> f64 {
    n as f64 * sigma2
}

pub(crate) fn psi1_impl(
    mu: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    xu: &DMatrix<f64>,
    sigma2: f64,
    gamma: &DVector<f64>,
) -> DMatrix<f64> {
    let (n, q) = mu.shape();
    let m = xu.nrows();
    let log_sigma2 = sigma2.ln();
    let mut out = DMatrix::<f64>::zeros(n, m);
    let mut denom = vec![0.0f64; q];
    let mut half_log = vec![0.0f64; q];
    for i in 0..n {
        let mut log_det = 0.0;
        for qq in 0..q {
            let dq = gamma[qq] * sigma[(i, qq)] + 1.0;
            denom[qq] = dq;
            half_log[qq] = dq.ln();
            log_det += half_log[qq];
        }
        for j in 0..m {
            let mut quad = 0.0;
            for qq in 0..q {
                let diff = mu[(i, qq)] - xu[(j, qq)];
                quad += gamma[qq] * diff * diff / denom[qq];
            }
            out[(i, j)] = (log_sigma2 - 0.5 * log_det - 0.5 * quad).exp();
        }
    }
    out
}

/// N×M matrix of Ψ₁ expectations.
pub fn psi1(latent: &VariationalLatent, sigma2: f64, gamma: &DVector<f64>) -> DMatrix<f64> {
    psi1_impl(&latent.mu, &latent.sigma, &latent.xu, sigma2, gamma)
}

/// Ψ₂ restricted to a subset of sample rows (`None` = all rows). Each
/// (j, j') entry is the sum over samples of the closed-form integrand; the
/// result is symmetrized by averaging with its transpose.
pub(crate) fn psi2_impl(
    mu: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    xu: &DMatrix<f64>,
    sigma2: f64,
    gamma: &DVector<f64>,
    rows: Option<&[usize]>,
) -> DMatrix<f64> {
    let q = mu.ncols();
    let m = xu.nrows();
    let two_log_sigma2 = 2.0 * sigma2.ln();
    let mut out = DMatrix::<f64>::zeros(m, m);
    let all_rows: Vec<usize>;
    let rows = match rows {
        Some(r) => r,
        None => {
            all_rows = (0..mu.nrows()).collect();
            &all_rows
        }
    };
    let mut denom = vec![0.0f64; q];
    for &i in rows {
        let mut log_det = 0.0;
        for qq in 0..q {
            let dq = 2.0 * gamma[qq] * sigma[(i, qq)] + 1.0;
            denom[qq] = dq;
            log_det += dq.ln();
        }
        for j in 0..m {
            for jp in j..m {
                let mut dist = 0.0;
                let mut quad = 0.0;
                for qq in 0..q {
                    let delta = xu[(j, qq)] - xu[(jp, qq)];
                    let mid = 0.5 * (xu[(j, qq)] + xu[(jp, qq)]);
                    let dev = mu[(i, qq)] - mid;
                    dist += gamma[qq] * delta * delta;
                    quad += gamma[qq] / denom[qq] * dev * dev;
                }
                let s = (two_log_sigma2 - 0.5 * log_det - 0.25 * dist - quad).exp();
                out[(j, jp)] += s;
                if jp != j {
                    out[(jp, j)] += s;
                }
            }
        }
    }
    // The summand is symmetric in (j, j') so the matrix already is; the
    // explicit average guards against any float asymmetry creeping in.
    let sym = (&out + out.transpose()) * 0.5;
    sym
}

/// M×M matrix of Ψ₂ expectations over all samples.
pub fn psi2(latent: &VariationalLatent, sigma2: f64, gamma: &DVector<f64>) -> DMatrix<f64> {
    psi2_impl(&latent.mu, &latent.sigma, &latent.xu, sigma2, gamma, None)
}

/// Responsibility-weighted mixture of per-component statistics. Returns the
/// mixed `PsiStats`, the mixed inducing kernel matrix and the mixed noise
/// precision for one dimension.
pub fn mixture_stats(
    phi_d: &[f64],
    per_component: &[PsiStats],
    kuu: &[DMatrix<f64>],
    beta: &DVector<f64>,
) -> Result<(PsiStats, DMatrix<f64>, f64)> {
    let t = phi_d.len();
    if per_component.len() != t || kuu.len() != t || beta.len() != t {
        return Err(Error::InvalidInput(format!(
            "mixture over {t} components needs {t} statistics/kernels/precisions"
        )));
    }
    let sum: f64 = phi_d.iter().sum();
    if (sum - 1.0).abs() > 1e-8 || phi_d.iter().any(|&p| !(0.0..=1.0 + 1e-8).contains(&p)) {
        return Err(Error::InvalidInput(format!(
            "responsibilities must lie on the simplex (sum = {sum})"
        )));
    }
    let (n, m) = per_component[0].psi1.shape();
    let mut psi0 = 0.0;
    let mut psi1 = DMatrix::<f64>::zeros(n, m);
    let mut psi2 = DMatrix::<f64>::zeros(m, m);
    let mut kuu_mix = DMatrix::<f64>::zeros(m, m);
    let mut beta_mix = 0.0;
    for tt in 0..t {
        let w = phi_d[tt];
        psi0 += w * per_component[tt].psi0;
        psi1 += w * &per_component[tt].psi1;
        psi2 += w * &per_component[tt].psi2;
        kuu_mix += w * &kuu[tt];
        beta_mix += w * beta[tt];
    }
    Ok((PsiStats { psi0, psi1, psi2 }, kuu_mix, beta_mix))
}
