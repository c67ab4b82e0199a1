use crate::corrparam::CorrMatrix;
use crate::error::{Error, Result};
use crate::gpcore::GpFit;
use crate::testbed::CrossCorrEstimate;
use crate::Scalar;

/// Root of the summed squared lower-triangle differences (not divided by
/// the number of pairs, so values grow with `s`). Pairs missing from the
/// empirical estimate are skipped.
pub fn rmse_corr<T: Scalar>(tau_hat: &CorrMatrix<T>, tau_tilde: &CrossCorrEstimate) -> Result<f64> {
    let s = tau_hat.levels();
    if tau_tilde.levels() != s {
        return Err(Error::Arity {
            what: "cross-correlation levels",
            expected: s,
            got: tau_tilde.levels(),
        });
    }
    let mut sum = 0.0;
    for i in 1..s {
        for j in 0..i {
            if let Some(t) = tau_tilde.get(i, j) {
                let d = tau_hat.get(i, j).as_f64() - t;
                sum += d * d;
            }
        }
    }
    Ok(sum.sqrt())
}

/// `1 - Σ(y - ŷ)² / Σ(y - ȳ)²`.
pub fn q_squared(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Arity {
            what: "predictions",
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.len() < 2 {
        return Err(Error::UndefinedCriterion("Q² needs at least two points".into()));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let sst: f64 = y_true.iter().map(|y| (y - mean) * (y - mean)).sum();
    if !(sst > 0.0) {
        return Err(Error::UndefinedCriterion("Q² is undefined for constant responses".into()));
    }
    let sse: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p) * (y - p)).sum();
    Ok(1.0 - sse / sst)
}

/// Cross-correlation matrix of a fitted model, rebuilt from its categorical
/// parameters.
pub fn extract_tau_hat<T: Scalar>(fit: &GpFit<T>) -> Result<CorrMatrix<T>> {
    match &fit.config().categorical {
        Some(cat) => cat.spec.build_raw(&cat.params),
        None => Err(Error::Structural("model has no categorical component".into())),
    }
}

/// Distance from `tau_tilde` to the nearest matrix with nonnegative
/// off-diagonal entries, in the same root-sum-of-squares form as
/// [`rmse_corr`]. No EC or MC matrix can get closer.
pub fn positive_cone_gap(tau_tilde: &CrossCorrEstimate) -> f64 {
    let s = tau_tilde.levels();
    (1..s)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .filter_map(|(i, j)| tau_tilde.get(i, j))
        .map(|t| t.min(0.0).powi(2))
        .sum::<f64>()
        .sqrt()
}
