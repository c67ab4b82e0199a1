//! Parameterizations of the `s × s` cross-correlation matrix of a categorical
//! input.
//!
//! Four families map a box-constrained parameter vector to a positive
//! definite, unit-diagonal matrix:
//!
//! * `EC`: one shared off-diagonal value `c ∈ (0, 1)`.
//! * `MC`: `τ_ij = exp(-(φ_i + φ_j))` with `φ_i > 0`.
//! * `UC`: the rows of the Cholesky factor are points on unit hyperspheres
//!   given in spherical coordinates, `s(s-1)/2` angles in `(0, π)`.
//! * `LRC_r`: an `s × r` loading matrix whose rows are unit vectors in the
//!   same spherical coordinates, giving `P = Q·Qᵀ` of rank at most `r`.
//!
//! Angle vectors are flattened row-major: row `i = 2..s`, then column
//! `j = 1..min(i, r) - 1` (with `r = s` for UC).

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::Scalar;

/// Default diagonal inflation applied before rescaling to unit diagonal.
pub const DEFAULT_CORR_NUGGET: f64 = 1e-8;

/// Distance kept from the open ends of each parameter interval.
pub const PARAM_MARGIN: f64 = 1e-6;

/// Upper box bound for the MC decay parameters; `exp(-2·5)` is already
/// below `5e-5`.
pub const MC_PHI_MAX: f64 = 5.0;

/// Stand-in for the zero angle when embedding LRC in UC.
pub const DEFAULT_EMBED_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Ec,
    Mc,
    Uc,
    Lrc,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Ec => "EC",
            Family::Mc => "MC",
            Family::Uc => "UC",
            Family::Lrc => "LRC",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A parameterization family together with its level count (and rank for LRC).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FamilySpec {
    family: Family,
    s: usize,
    rank: Option<usize>,
}

impl FamilySpec {
    pub fn new(family: Family, s: usize, rank: Option<usize>) -> Result<Self> {
        if s < 2 {
            return Err(Error::Domain(format!("need at least 2 levels, got {s}")));
        }
        match (family, rank) {
            (Family::Lrc, Some(r)) if (2..s).contains(&r) => {}
            (Family::Lrc, Some(r)) => return Err(Error::RankOutOfRange { rank: r, s }),
            (Family::Lrc, None) => {
                return Err(Error::Domain("LRC requires a rank".into()));
            }
            (_, Some(_)) => {
                return Err(Error::Domain(format!("{family} does not take a rank")));
            }
            (_, None) => {}
        }
        Ok(Self { family, s, rank })
    }

    pub fn ec(s: usize) -> Result<Self> {
        Self::new(Family::Ec, s, None)
    }

    pub fn mc(s: usize) -> Result<Self> {
        Self::new(Family::Mc, s, None)
    }

    pub fn uc(s: usize) -> Result<Self> {
        Self::new(Family::Uc, s, None)
    }

    pub fn lrc(s: usize, rank: usize) -> Result<Self> {
        Self::new(Family::Lrc, s, Some(rank))
    }

    /// Parses labels such as `EC`, `mc`, `UC`, `LRC3`.
    pub fn parse(label: &str, s: usize) -> Result<Self> {
        let up = label.trim().to_ascii_uppercase();
        match up.as_str() {
            "EC" => Self::ec(s),
            "MC" => Self::mc(s),
            "UC" => Self::uc(s),
            _ => match up.strip_prefix("LRC") {
                Some(r) => {
                    let r = r
                        .trim_start_matches('_')
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad LRC rank in `{label}`")))?;
                    Self::lrc(s, r)
                }
                None => Err(Error::Parse(format!("unknown family `{label}`"))),
            },
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn levels(&self) -> usize {
        self.s
    }

    pub fn rank(&self) -> Option<usize> {
        self.rank
    }

    /// `EC`, `MC`, `UC` or `LRC<r>`.
    pub fn label(&self) -> String {
        match self.rank {
            Some(r) => format!("LRC{r}"),
            None => self.family.name().to_string(),
        }
    }

    pub fn param_count(&self) -> usize {
        let s = self.s;
        match self.family {
            Family::Ec => 1,
            Family::Mc => s,
            Family::Uc => s * (s - 1) / 2,
            Family::Lrc => {
                let r = self.rank.expect("validated");
                (r - 1) * s - r * (r - 1) / 2
            }
        }
    }

    /// Box bounds used by the optimizer, strictly inside the open domains.
    pub fn bounds<T: Scalar>(&self) -> Vec<(T, T)> {
        let m = T::lit(PARAM_MARGIN);
        let range = match self.family {
            Family::Ec => (m, T::one() - m),
            Family::Mc => (m, T::lit(MC_PHI_MAX)),
            Family::Uc | Family::Lrc => (m, T::PI() - m),
        };
        vec![range; self.param_count()]
    }

    /// Builds the family's matrix without extra regularization (LRC is
    /// regularized with the default nugget, as [`build_lrc`] does).
    pub fn build_raw<T: Scalar>(&self, params: &[T]) -> Result<CorrMatrix<T>> {
        match self.family {
            Family::Ec => {
                check_len("EC parameters", 1, params.len())?;
                build_ec(params[0], self.s)
            }
            Family::Mc => build_mc(params, self.s),
            Family::Uc => build_uc(params, self.s),
            Family::Lrc => Ok(build_lrc(params, self.s, self.rank.expect("validated"))?.1),
        }
    }

    /// Builds the family's matrix and regularizes it with `nugget`.
    pub fn build<T: Scalar>(&self, params: &[T], nugget: T) -> Result<CorrMatrix<T>> {
        match self.family {
            Family::Ec => {
                check_len("EC parameters", 1, params.len())?;
                regularize(&ec_entries(params[0], self.s)?, nugget)
            }
            Family::Mc => regularize(&mc_entries(params, self.s)?, nugget),
            Family::Uc => regularize(&uc_factor(params, self.s)?.gram(), nugget),
            Family::Lrc => {
                let q = lrc_loadings(params, self.s, self.rank.expect("validated"))?;
                regularize(&q.gram(), nugget)
            }
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (s={})", self.label(), self.s)
    }
}

/// Number of categorical parameters of a family; validates the rank.
pub fn param_count(family: Family, s: usize, rank: Option<usize>) -> Result<usize> {
    Ok(FamilySpec::new(family, s, rank)?.param_count())
}

/// Symmetric, unit-diagonal `s × s` matrix with entries in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix<T> {
    m: Mat<T>,
}

impl<T: Scalar> CorrMatrix<T> {
    /// Validates an arbitrary matrix. Positive definiteness is not required
    /// here; see [`CorrMatrix::is_positive_definite`].
    pub fn from_matrix(m: Mat<T>) -> Result<Self> {
        if m.rows() != m.cols() || m.rows() < 1 {
            return Err(Error::Domain("correlation matrix must be square".into()));
        }
        if !m.is_symmetric() {
            return Err(Error::Domain("correlation matrix is not symmetric".into()));
        }
        for i in 0..m.rows() {
            if m[(i, i)] != T::one() {
                return Err(Error::Domain(format!("diagonal entry {} is not 1", i + 1)));
            }
        }
        if m.as_slice().iter().any(|v| !(v.abs() <= T::one())) {
            return Err(Error::Domain("entry outside [-1, 1]".into()));
        }
        Ok(Self { m })
    }

    /// Level count `s`.
    pub fn levels(&self) -> usize {
        self.m.rows()
    }

    /// Entry for 0-based level indices.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.m[(i, j)]
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.m
    }

    pub fn is_positive_definite(&self) -> bool {
        self.m.cholesky().is_ok()
    }

    pub fn min_eigenvalue(&self) -> T {
        self.m.symmetric_eigenvalues()[0]
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.m.max_abs_diff(&other.m)
    }

    /// Lower-triangle entries `(i, j, τ_ij)` with `j < i`, 0-based.
    pub fn lower_pairs(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let s = self.levels();
        (1..s).flat_map(move |i| (0..i).map(move |j| (i, j, self.m[(i, j)])))
    }
}

/// `s × r` loading matrix with unit-norm rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingMatrix<T> {
    q: Mat<T>,
}

impl<T: Scalar> LoadingMatrix<T> {
    pub fn matrix(&self) -> &Mat<T> {
        &self.q
    }

    pub fn levels(&self) -> usize {
        self.q.rows()
    }

    pub fn rank(&self) -> usize {
        self.q.cols()
    }

    /// `Q·Qᵀ` before any nugget.
    pub fn gram(&self) -> Mat<T> {
        self.q.gram()
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Arity {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

fn check_angles<T: Scalar>(theta: &[T]) -> Result<()> {
    for (k, t) in theta.iter().enumerate() {
        if !(*t > T::zero() && *t < T::PI()) {
            return Err(Error::Domain(format!(
                "angle {} = {t} outside (0, π)",
                k + 1
            )));
        }
    }
    Ok(())
}

fn ec_entries<T: Scalar>(c: T, s: usize) -> Result<Mat<T>> {
    if s < 2 {
        return Err(Error::Domain(format!("need at least 2 levels, got {s}")));
    }
    if !(c > T::zero() && c < T::one()) {
        return Err(Error::Domain(format!("EC parameter c = {c} outside (0, 1)")));
    }
    Ok(Mat::from_fn(s, s, |i, j| if i == j { T::one() } else { c }))
}

fn mc_entries<T: Scalar>(phi: &[T], s: usize) -> Result<Mat<T>> {
    check_len("MC parameters", s, phi.len())?;
    if let Some((k, p)) = phi.iter().enumerate().find(|(_, p)| !(**p > T::zero() && p.is_finite())) {
        return Err(Error::Domain(format!("MC parameter φ_{} = {p} is not positive", k + 1)));
    }
    Ok(Mat::from_fn(s, s, |i, j| {
        if i == j {
            T::one()
        } else {
            (-(phi[i] + phi[j])).exp()
        }
    }))
}

/// Rows of unit vectors in spherical coordinates; row `i` (1-based) uses
/// `min(i, r) - 1` angles and is zero beyond column `min(i, r)`.
fn spherical_rows<T: Scalar>(theta: &[T], s: usize, r: usize) -> Mat<T> {
    let mut q = Mat::zeros(s, r);
    q[(0, 0)] = T::one();
    let mut k = 0;
    for i in 1..s {
        let m = (i + 1).min(r);
        let mut prod = T::one();
        for j in 0..m - 1 {
            let a = theta[k + j];
            q[(i, j)] = a.cos() * prod;
            prod = prod * a.sin();
        }
        q[(i, m - 1)] = prod;
        k += m - 1;
    }
    q
}

/// Restores exact unit diagonal and clamps rounding spill outside `[-1, 1]`.
fn tidy<T: Scalar>(mut p: Mat<T>) -> Mat<T> {
    let s = p.rows();
    for i in 0..s {
        p[(i, i)] = T::one();
        for j in 0..i {
            let v = p[(i, j)].max(-T::one()).min(T::one());
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
    p
}

/// Exchangeable correlation: every off-diagonal equals `c`.
pub fn build_ec<T: Scalar>(c: T, s: usize) -> Result<CorrMatrix<T>> {
    Ok(CorrMatrix { m: ec_entries(c, s)? })
}

/// Multiplicative correlation: `τ_ij = exp(-(φ_i + φ_j))` off the diagonal.
pub fn build_mc<T: Scalar>(phi: &[T], s: usize) -> Result<CorrMatrix<T>> {
    Ok(CorrMatrix {
        m: mc_entries(phi, s)?,
    })
}

/// Lower-triangular factor `L` of the UC parameterization.
pub fn uc_factor<T: Scalar>(theta: &[T], s: usize) -> Result<Mat<T>> {
    if s < 2 {
        return Err(Error::Domain(format!("need at least 2 levels, got {s}")));
    }
    check_len("UC angles", s * (s - 1) / 2, theta.len())?;
    check_angles(theta)?;
    Ok(spherical_rows(theta, s, s))
}

/// Unrestrictive correlation `L·Lᵀ` from the hypersphere angles.
pub fn build_uc<T: Scalar>(theta: &[T], s: usize) -> Result<CorrMatrix<T>> {
    Ok(CorrMatrix {
        m: tidy(uc_factor(theta, s)?.gram()),
    })
}

/// Loading matrix `Q` of the rank-`r` parameterization.
pub fn lrc_loadings<T: Scalar>(theta: &[T], s: usize, r: usize) -> Result<LoadingMatrix<T>> {
    let spec = FamilySpec::lrc(s, r)?;
    check_len("LRC angles", spec.param_count(), theta.len())?;
    check_angles(theta)?;
    Ok(LoadingMatrix {
        q: spherical_rows(theta, s, r),
    })
}

/// Low-rank correlation: returns `Q` and the regularized `Q·Qᵀ`.
pub fn build_lrc<T: Scalar>(
    theta: &[T],
    s: usize,
    r: usize,
) -> Result<(LoadingMatrix<T>, CorrMatrix<T>)> {
    let q = lrc_loadings(theta, s, r)?;
    let p = regularize(&q.gram(), T::lit(DEFAULT_CORR_NUGGET))?;
    Ok((q, p))
}

/// `(P + ν·I) / (1 + ν)`: positive definite with unit diagonal.
pub fn regularize<T: Scalar>(p: &Mat<T>, nugget: T) -> Result<CorrMatrix<T>> {
    if p.rows() != p.cols() {
        return Err(Error::Domain("regularize needs a square matrix".into()));
    }
    if !(nugget >= T::zero()) {
        return Err(Error::Domain(format!("nugget {nugget} must be non-negative")));
    }
    let scale = T::one() + nugget;
    let s = p.rows();
    let out = tidy(Mat::from_fn(s, s, |i, j| {
        if i == j {
            (p[(i, i)] + nugget) / scale
        } else {
            p[(i, j)] / scale
        }
    }));
    if out.cholesky().is_err() {
        let min_eigenvalue = out.symmetric_eigenvalues()[0].as_f64();
        return Err(Error::NumericalRank { min_eigenvalue });
    }
    Ok(CorrMatrix { m: out })
}

/// UC angle vector reproducing `build_lrc(theta_lrc, s, r)`.
///
/// Row `i > r` gets its `r - 1` LRC angles, then `eps` in place of the
/// zero angle, then `π/2` for the free trailing angles. The entrywise gap
/// to the LRC matrix is `O(eps)` plus the LRC nugget.
pub fn embed_lrc_in_uc<T: Scalar>(theta_lrc: &[T], s: usize, r: usize, eps: T) -> Result<Vec<T>> {
    let spec = FamilySpec::lrc(s, r)?;
    check_len("LRC angles", spec.param_count(), theta_lrc.len())?;
    check_angles(theta_lrc)?;
    if !(eps > T::zero() && eps < T::PI()) {
        return Err(Error::Domain(format!("embedding eps {eps} outside (0, π)")));
    }
    let half_pi = T::FRAC_PI_2();
    let mut out = Vec::with_capacity(s * (s - 1) / 2);
    let mut k = 0;
    for i in 2..=s {
        if i <= r {
            out.extend_from_slice(&theta_lrc[k..k + i - 1]);
            k += i - 1;
        } else {
            out.extend_from_slice(&theta_lrc[k..k + r - 1]);
            k += r - 1;
            out.push(eps);
            out.extend(std::iter::repeat(half_pi).take(i - 1 - r));
        }
    }
    Ok(out)
}

/// UC angles `(θ_21, θ_31, θ_32)` reproducing the 3-level EC matrix.
pub fn uc_angles_for_ec3<T: Scalar>(c: T) -> [T; 3] {
    [c.acos(), c.acos(), (c / (c + T::one())).acos()]
}

/// UC angles `(θ_21, θ_31, θ_32)` reproducing the 3-level MC matrix.
pub fn uc_angles_for_mc3<T: Scalar>(phi: [T; 3]) -> [T; 3] {
    let t21 = (-(phi[1] + phi[0])).exp();
    let t31 = (-(phi[2] + phi[0])).exp();
    let t32 = (-(phi[2] + phi[1])).exp();
    let denom = (T::one() - t21 * t21).sqrt() * (T::one() - t31 * t31).sqrt();
    [t21.acos(), t31.acos(), ((t32 - t21 * t31) / denom).acos()]
}
