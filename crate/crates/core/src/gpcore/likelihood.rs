use crate::corrparam::CorrMatrix;
use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky};
use crate::space::MixedPoint;
use crate::Scalar;

use super::kernel::{build_r, KernelConfig};

/// Lower bound on the profiled process variance.
pub const SIGMA2_FLOOR: f64 = 1e-12;

/// Profiled (concentrated) likelihood quantities for one hyperparameter set.
#[derive(Debug, Clone)]
pub struct Concentrated<T> {
    /// GLS estimate of the constant trend.
    pub mu_hat: T,
    pub sigma2_hat: T,
    pub log_det: T,
    /// `n·log σ̂² + log det R`, minimized over the hyperparameters.
    pub objective: T,
    pub chol: Cholesky<T>,
    /// `R⁻¹(y - μ̂·1)`.
    pub alpha: Vec<T>,
}

/// Evaluates the concentrated objective with the kernel's own
/// cross-correlation matrix.
pub fn concentrated_nll<T: Scalar>(
    config: &KernelConfig<T>,
    points: &[MixedPoint<T>],
    y: &[T],
) -> Result<Concentrated<T>> {
    let p = config.corr_matrix()?;
    concentrated_with(config, p.as_ref(), points, y)
}

pub(crate) fn concentrated_with<T: Scalar>(
    config: &KernelConfig<T>,
    p: Option<&CorrMatrix<T>>,
    points: &[MixedPoint<T>],
    y: &[T],
) -> Result<Concentrated<T>> {
    let n = points.len();
    if n != y.len() {
        return Err(Error::Arity {
            what: "responses",
            expected: n,
            got: y.len(),
        });
    }
    let (_, chol) = build_r(points, config, p)?;
    let ones = vec![T::one(); n];
    let rinv_one = chol.solve(&ones);
    let rinv_y = chol.solve(y);
    let mu_hat = dot(&ones, &rinv_y) / dot(&ones, &rinv_one);
    let resid: Vec<T> = y.iter().map(|v| *v - mu_hat).collect();
    let alpha = chol.solve(&resid);
    let nf = T::from_usize_lossy(n);
    let sigma2_hat = (dot(&resid, &alpha) / nf).max(T::lit(SIGMA2_FLOOR));
    let log_det = chol.log_det();
    let objective = nf * sigma2_hat.ln() + log_det;
    if !objective.is_finite() {
        return Err(Error::IllConditioned { pivot: n });
    }
    Ok(Concentrated {
        mu_hat,
        sigma2_hat,
        log_det,
        objective,
        chol,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn far_apart_points_reduce_to_sample_moments() {
        let pts: Vec<_> = (0..4)
            .map(|k| MixedPoint::new(vec![1000.0 * k as f64], 1))
            .collect();
        let y = [1.0, 3.0, -2.0, 6.0];
        let cfg = KernelConfig::new(vec![0.1], None, 0.0).unwrap();
        let c = concentrated_nll(&cfg, &pts, &y).unwrap();
        let mean = 2.0;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 4.0;
        assert!((c.mu_hat - mean).abs() < 1e-14);
        assert!((c.sigma2_hat - var).abs() < 1e-12);
        assert!((c.objective - 4.0 * var.ln()).abs() < 1e-12);
    }

    #[test]
    fn constant_response_hits_floor() {
        let pts: Vec<_> = (0..3).map(|k| MixedPoint::new(vec![0.3 * k as f64], 1)).collect();
        let cfg = KernelConfig::new(vec![0.5], None, 1e-8).unwrap();
        let c = concentrated_nll(&cfg, &pts, &[2.5, 2.5, 2.5]).unwrap();
        assert_eq!(c.sigma2_hat, SIGMA2_FLOOR);
        assert!(c.objective.is_finite());
        assert!((c.mu_hat - 2.5).abs() < 1e-12);
    }
}
