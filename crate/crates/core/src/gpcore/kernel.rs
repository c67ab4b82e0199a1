use serde::{Deserialize, Serialize};

use crate::corrparam::{CorrMatrix, FamilySpec, DEFAULT_CORR_NUGGET};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Mat};
use crate::space::MixedPoint;
use crate::Scalar;

/// Categorical part of a compound kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Categorical<T> {
    pub spec: FamilySpec,
    pub params: Vec<T>,
}

/// Hyperparameters of the compound Matérn 5/2 × cross-correlation kernel.
///
/// `categorical == None` is a purely continuous kernel (all levels share
/// one surface).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig<T> {
    pub lengthscales: Vec<T>,
    pub categorical: Option<Categorical<T>>,
    /// Jitter added to the diagonal of the training correlation matrix.
    pub nugget: T,
}

impl<T: Scalar> KernelConfig<T> {
    pub fn new(lengthscales: Vec<T>, categorical: Option<Categorical<T>>, nugget: T) -> Result<Self> {
        if let Some(k) = lengthscales.iter().position(|t| !(*t > T::zero() && t.is_finite())) {
            return Err(Error::Domain(format!(
                "lengthscale {} = {} must be positive",
                k + 1,
                lengthscales[k]
            )));
        }
        if !(nugget >= T::zero()) {
            return Err(Error::Domain(format!("nugget {nugget} must be non-negative")));
        }
        if let Some(cat) = &categorical {
            if cat.params.len() != cat.spec.param_count() {
                return Err(Error::Arity {
                    what: "categorical parameters",
                    expected: cat.spec.param_count(),
                    got: cat.params.len(),
                });
            }
        }
        Ok(Self {
            lengthscales,
            categorical,
            nugget,
        })
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// The regularized cross-correlation matrix, if the kernel has one.
    pub fn corr_matrix(&self) -> Result<Option<CorrMatrix<T>>> {
        self.categorical
            .as_ref()
            .map(|c| c.spec.build(&c.params, T::lit(DEFAULT_CORR_NUGGET)))
            .transpose()
    }
}

/// Separable Matérn 5/2 correlation
/// `Π exp(-√5|h|/θ)·(5h²/(3θ²) + √5|h|/θ + 1)`.
pub fn matern52<T: Scalar>(h: &[T], lengthscales: &[T]) -> T {
    debug_assert_eq!(h.len(), lengthscales.len());
    let sqrt5 = T::lit(5.0).sqrt();
    let five_thirds = T::lit(5.0 / 3.0);
    h.iter()
        .zip(lengthscales)
        .fold(T::one(), |acc, (hi, th)| {
            let a = hi.abs() / *th;
            let r = sqrt5 * a;
            acc * (-r).exp() * (five_thirds * a * a + r + T::one())
        })
}

/// Matérn 5/2 between two coordinate vectors, without allocating the difference.
#[inline]
pub(crate) fn matern52_between<T: Scalar>(x1: &[T], x2: &[T], lengthscales: &[T]) -> T {
    let sqrt5 = T::lit(5.0).sqrt();
    let five_thirds = T::lit(5.0 / 3.0);
    let mut acc = T::one();
    for ((a, b), th) in x1.iter().zip(x2).zip(lengthscales) {
        let a = (*a - *b).abs() / *th;
        let r = sqrt5 * a;
        acc = acc * (-r).exp() * (five_thirds * a * a + r + T::one());
    }
    acc
}

/// `matern52(x1 - x2)·P[level1][level2]`; `P = None` drops the categorical factor.
pub fn compound_corr<T: Scalar>(
    w1: &MixedPoint<T>,
    w2: &MixedPoint<T>,
    config: &KernelConfig<T>,
    p: Option<&CorrMatrix<T>>,
) -> T {
    let cont = matern52_between(&w1.x, &w2.x, &config.lengthscales);
    match p {
        Some(p) => cont * p.get(w1.level - 1, w2.level - 1),
        None => cont,
    }
}

/// Training correlation matrix `R` (nugget on the diagonal) and its Cholesky factor.
pub fn build_r<T: Scalar>(
    points: &[MixedPoint<T>],
    config: &KernelConfig<T>,
    p: Option<&CorrMatrix<T>>,
) -> Result<(Mat<T>, Cholesky<T>)> {
    let n = points.len();
    let mut r = Mat::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = T::one() + config.nugget;
        for j in 0..i {
            let v = compound_corr(&points[i], &points[j], config, p);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    let chol = r
        .cholesky()
        .map_err(|pivot| Error::IllConditioned { pivot })?;
    Ok((r, chol))
}
