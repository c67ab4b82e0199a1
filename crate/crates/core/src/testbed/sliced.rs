use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::space::Bounds;

use super::functions::{lookup, standard_functions, ContinuousFunction};

/// Grid points per remaining dimension when estimating slice maxima.
pub const SLICE_MAX_GRID: usize = 100;
/// Grid cells refined locally when estimating slice maxima.
const SLICE_MAX_SEEDS: usize = 5;
const REFINE_TOL: f64 = 1e-9;

/// `pos_i = l + (i-1)(u-l)/(s-1)`; the last position is exactly `u`.
pub fn slice_positions(l: f64, u: f64, s: usize) -> Result<Vec<f64>> {
    if s < 2 {
        return Err(Error::Domain(format!("need at least 2 slices, got {s}")));
    }
    if !(l < u) {
        return Err(Error::Domain(format!("invalid slicing range ({l}, {u})")));
    }
    let step = (u - l) / (s - 1) as f64;
    let mut pos: Vec<f64> = (0..s).map(|i| l + i as f64 * step).collect();
    pos[s - 1] = u;
    Ok(pos)
}

/// Replaces the position closest to `opt_coord` by `opt_coord`; on a tie the
/// lower position is replaced.
pub fn swap_optimum(positions: &[f64], opt_coord: f64) -> Vec<f64> {
    let mut out = positions.to_vec();
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in positions.iter().enumerate() {
        let d = (p - opt_coord).abs();
        let tol = 1e-9 * (1.0 + d);
        match best {
            None => best = Some((i, d)),
            Some((bi, bd)) => {
                let closer = d < bd - tol;
                let tie_lower = (d - bd).abs() <= tol && *p < positions[bi];
                if closer || tie_lower {
                    best = Some((i, d));
                }
            }
        }
    }
    if let Some((i, _)) = best {
        out[i] = opt_coord;
    }
    out
}

/// Quantile map used to space slice positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantileMap {
    Uniform,
    StandardNormal,
}

impl QuantileMap {
    pub fn quantile(self, p: f64) -> f64 {
        match self {
            QuantileMap::Uniform => p,
            QuantileMap::StandardNormal => Normal::standard().inverse_cdf(p),
        }
    }
}

/// Slice positions from the interior quantiles of an `s + 2` point grid,
/// normalized to `[0, 1]` and rescaled to `[l, u]`.
pub fn quantile_positions(qdist: impl Fn(f64) -> f64, s: usize, l: f64, u: f64) -> Result<Vec<f64>> {
    if s < 2 {
        return Err(Error::Domain(format!("need at least 2 slices, got {s}")));
    }
    if !(l < u) {
        return Err(Error::Domain(format!("invalid slicing range ({l}, {u})")));
    }
    let m = s + 1;
    let q: Vec<f64> = (1..=s).map(|k| qdist(k as f64 / m as f64)).collect();
    if let Some(bad) = q.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite interior quantile {bad}")));
    }
    let (lo, hi) = (q[0], q[s - 1]);
    if !(hi > lo) {
        return Err(Error::Domain("quantile map is not increasing".into()));
    }
    let mut pos: Vec<f64> = q.iter().map(|v| (v - lo) / (hi - lo) * (u - l) + l).collect();
    pos[0] = l;
    pos[s - 1] = u;
    Ok(pos)
}

/// Positions for a base function's first dimension after the optimum swap.
pub fn default_positions(base: &ContinuousFunction, s: usize) -> Result<Vec<f64>> {
    let (l, u) = base.bounds[0];
    Ok(swap_optimum(&slice_positions(l, u, s)?, base.opt_pos[0]))
}

/// Upended slices used for the negative-correlation variants.
pub fn default_upend_set(s: usize) -> Option<Vec<usize>> {
    match s {
        4 => Some(vec![1, 3]),
        6 => Some(vec![1, 2, 4]),
        _ => None,
    }
}

/// A continuous function with its first dimension discretized to `s` slices.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicedFunction {
    base: ContinuousFunction,
    sliced_dim: usize,
    positions: Vec<f64>,
    /// 1-based, ascending.
    upended: Vec<usize>,
    /// Estimated slice maxima, `Some` exactly for upended slices.
    slice_max: Vec<Option<f64>>,
}

impl SlicedFunction {
    /// Equidistant slicing with the optimum swap, upending the given slices.
    pub fn new(base: ContinuousFunction, s: usize, upended: &[usize]) -> Result<Self> {
        let positions = default_positions(&base, s)?;
        Self::with_positions(base, positions, upended)
    }

    pub fn with_positions(base: ContinuousFunction, positions: Vec<f64>, upended: &[usize]) -> Result<Self> {
        let sliced_dim = 0;
        if base.dim() < 2 {
            return Err(Error::Domain("slicing needs at least two dimensions".into()));
        }
        let s = positions.len();
        if s < 2 {
            return Err(Error::Domain(format!("need at least 2 slices, got {s}")));
        }
        let (l, u) = base.bounds[sliced_dim];
        if positions.iter().any(|p| *p < l || *p > u) {
            return Err(Error::Domain("slice position outside the bounds".into()));
        }
        let mut up = upended.to_vec();
        up.sort_unstable();
        up.dedup();
        if let Some(bad) = up.iter().find(|i| **i < 1 || **i > s) {
            return Err(Error::Index { index: *bad, len: s });
        }
        let opt = base.opt_pos[sliced_dim];
        if let Some(i) = up.iter().find(|i| positions[**i - 1] == opt) {
            return Err(Error::Domain(format!("slice {i} holds the global optimum and cannot be upended")));
        }
        let slice_max = (1..=s)
            .map(|i| {
                up.contains(&i)
                    .then(|| slice_max_of(&base, sliced_dim, positions[i - 1], SLICE_MAX_GRID))
            })
            .collect();
        Ok(Self {
            base,
            sliced_dim,
            positions,
            upended: up,
            slice_max,
        })
    }

    /// Parses ids `<name>`, `<name>_upended` (default set for `s`) and
    /// `<name>_upended_1_3`.
    pub fn from_id(id: &str, s: usize) -> Result<Self> {
        let (name, rest) = match id.split_once("_upended") {
            Some((n, r)) => (n, Some(r)),
            None => (id, None),
        };
        let base = lookup(name)?;
        let upended = match rest {
            None => Vec::new(),
            Some("") => default_upend_set(s)
                .ok_or_else(|| Error::Config(format!("no default upend set for s = {s}; list slices explicitly")))?,
            Some(r) => r
                .trim_start_matches('_')
                .split('_')
                .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad slice list in `{id}`"))))
                .collect::<Result<_>>()?,
        };
        Self::new(base, s, &upended)
    }

    /// `ackley` or `ackley_upended_1_3`.
    pub fn id(&self) -> String {
        if self.upended.is_empty() {
            self.base.name.to_string()
        } else {
            let list: Vec<String> = self.upended.iter().map(|i| i.to_string()).collect();
            format!("{}_upended_{}", self.base.name, list.join("_"))
        }
    }

    pub fn base(&self) -> &ContinuousFunction {
        &self.base
    }

    pub fn levels(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn upended(&self) -> &[usize] {
        &self.upended
    }

    /// Cached `ŷ_i^max` of an upended slice.
    pub fn slice_max(&self, slice: usize) -> Option<f64> {
        self.slice_max.get(slice.wrapping_sub(1)).copied().flatten()
    }

    /// Slice holding the global optimum (1-based), if the swap placed it.
    pub fn optimum_slice(&self) -> Option<usize> {
        let opt = self.base.opt_pos[self.sliced_dim];
        self.positions.iter().position(|p| *p == opt).map(|i| i + 1)
    }

    /// Bounds of the dimensions that remain continuous.
    pub fn rest_bounds(&self) -> Bounds<f64> {
        let ranges = self
            .base
            .bounds
            .iter()
            .enumerate()
            .filter(|(d, _)| *d != self.sliced_dim)
            .map(|(_, b)| *b)
            .collect();
        Bounds::new(ranges).expect("registry bounds are valid")
    }

    pub fn rest_dim(&self) -> usize {
        self.base.dim() - 1
    }

    fn full_point(&self, slice: usize, x_rest: &[f64]) -> Vec<f64> {
        let mut x = x_rest.to_vec();
        x.insert(self.sliced_dim, self.positions[slice - 1]);
        x
    }

    /// Base function value on a slice, ignoring any upending.
    pub fn eval_original(&self, slice: usize, x_rest: &[f64]) -> Result<f64> {
        self.check(slice, x_rest)?;
        Ok(self.base.evaluate(&self.full_point(slice, x_rest)))
    }

    fn check(&self, slice: usize, x_rest: &[f64]) -> Result<()> {
        if slice < 1 || slice > self.levels() {
            return Err(Error::Index {
                index: slice,
                len: self.levels(),
            });
        }
        if x_rest.len() != self.rest_dim() {
            return Err(Error::Arity {
                what: "continuous coordinates",
                expected: self.rest_dim(),
                got: x_rest.len(),
            });
        }
        Ok(())
    }

    /// Function value on `slice` (1-based).
    ///
    /// An upended slice `i` evaluates to
    /// `y* + z·(1 - exp(-z/2)) + ŷ_i^max/10` with `z = ŷ_i^max - f(i, x)`.
    pub fn eval_sliced(&self, slice: usize, x_rest: &[f64]) -> Result<f64> {
        let f = self.eval_original(slice, x_rest)?;
        Ok(match self.slice_max[slice - 1] {
            None => f,
            Some(ymax) => {
                let z = ymax - f;
                self.base.opt_val + z * (1.0 - (-0.5 * z).exp()) + ymax / 10.0
            }
        })
    }
}

/// Estimated maximum of the base function over one slice.
pub fn estimate_slice_max(f: &SlicedFunction, slice: usize) -> Result<f64> {
    if slice < 1 || slice > f.levels() {
        return Err(Error::Index {
            index: slice,
            len: f.levels(),
        });
    }
    Ok(slice_max_of(&f.base, f.sliced_dim, f.positions[slice - 1], SLICE_MAX_GRID))
}

/// Grid search over the non-sliced dimensions followed by compass-search
/// refinement from the best few cells. This is an estimate: it can miss a
/// narrow peak the grid never sees.
pub fn slice_max_of(base: &ContinuousFunction, sliced_dim: usize, position: f64, grid: usize) -> f64 {
    let rest: Vec<(f64, f64)> = base
        .bounds
        .iter()
        .enumerate()
        .filter(|(d, _)| *d != sliced_dim)
        .map(|(_, b)| *b)
        .collect();
    let m = rest.len();
    let grid = grid.max(2);
    let eval = |x_rest: &[f64]| {
        let mut x = x_rest.to_vec();
        x.insert(sliced_dim, position);
        base.evaluate(&x)
    };
    let axis = |k: usize, i: usize| {
        let (l, u) = rest[k];
        if i + 1 == grid {
            u
        } else {
            l + (u - l) * i as f64 / (grid - 1) as f64
        }
    };

    let cells = grid.pow(m as u32);
    let mut top: Vec<(f64, Vec<f64>)> = Vec::with_capacity(SLICE_MAX_SEEDS + 1);
    let mut x = vec![0.0; m];
    for idx in 0..cells {
        let mut r = idx;
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = axis(k, r % grid);
            r /= grid;
        }
        let v = eval(&x);
        if top.len() < SLICE_MAX_SEEDS || v > top[top.len() - 1].0 {
            top.push((v, x.clone()));
            top.sort_by(|a, b| b.0.total_cmp(&a.0));
            top.truncate(SLICE_MAX_SEEDS);
        }
    }

    let mut best = f64::NEG_INFINITY;
    for (v0, x0) in top {
        let mut xc = x0;
        let mut fc = v0;
        let mut step: Vec<f64> = rest.iter().map(|(l, u)| (u - l) / (grid - 1) as f64).collect();
        let mut iters = 0;
        while iters < 20_000 && step.iter().zip(&rest).any(|(h, (l, u))| *h > REFINE_TOL * (u - l).max(1.0)) {
            iters += 1;
            let mut improved = false;
            for k in 0..m {
                for dir in [1.0, -1.0] {
                    let mut y = xc.clone();
                    y[k] = (y[k] + dir * step[k]).clamp(rest[k].0, rest[k].1);
                    let fy = eval(&y);
                    if fy > fc {
                        xc = y;
                        fc = fy;
                        improved = true;
                    }
                }
            }
            if !improved {
                step.iter_mut().for_each(|h| *h *= 0.5);
            }
        }
        best = best.max(fc);
    }
    best
}

/// Pairwise Pearson correlations between slices on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCorrEstimate {
    s: usize,
    /// Row-major; `None` where a slice has zero variance.
    values: Vec<Option<f64>>,
    pub resolution: usize,
}

impl CrossCorrEstimate {
    pub fn from_values(s: usize, values: Vec<Option<f64>>, resolution: usize) -> Result<Self> {
        if values.len() != s * s {
            return Err(Error::Arity {
                what: "cross-correlation entries",
                expected: s * s,
                got: values.len(),
            });
        }
        for i in 0..s {
            if values[i * s + i] != Some(1.0) {
                return Err(Error::Domain(format!("diagonal entry {} is not 1", i + 1)));
            }
            for j in 0..i {
                if values[i * s + j] != values[j * s + i] {
                    return Err(Error::Domain("cross-correlation matrix is not symmetric".into()));
                }
                if values[i * s + j].is_some_and(|v| !(v.abs() <= 1.0)) {
                    return Err(Error::Domain("entry outside [-1, 1]".into()));
                }
            }
        }
        Ok(Self { s, values, resolution })
    }

    pub fn levels(&self) -> usize {
        self.s
    }

    /// Entry for 0-based indices.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.s + j]
    }

    pub fn negative_pairs(&self) -> usize {
        (1..self.s)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .filter(|(i, j)| self.get(*i, *j).is_some_and(|v| v < 0.0))
            .count()
    }

    pub fn positive_pairs(&self) -> usize {
        (1..self.s)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .filter(|(i, j)| self.get(*i, *j).is_some_and(|v| v > 0.0))
            .count()
    }

    /// Matrix rows as CSV (no header); missing entries are empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.s {
            let row: Vec<String> = (0..self.s)
                .map(|j| self.get(i, j).map(|v| v.to_string()).unwrap_or_default())
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let rows: Vec<Vec<Option<f64>>> = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.split(',')
                    .map(|t| {
                        let t = t.trim();
                        if t.is_empty() {
                            Ok(None)
                        } else {
                            t.parse::<f64>().map(Some).map_err(|_| Error::Parse(format!("bad number `{t}`")))
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let s = rows.len();
        if rows.iter().any(|r| r.len() != s) {
            return Err(Error::Parse("matrix CSV is not square".into()));
        }
        Self::from_values(s, rows.into_iter().flatten().collect(), 0)
    }
}

/// Pearson correlations of all slice pairs on a `resolution` per-dimension
/// grid spanning the continuous dimensions.
pub fn empirical_cross_corr(f: &SlicedFunction, resolution: usize) -> Result<CrossCorrEstimate> {
    if resolution < 2 {
        return Err(Error::Domain(format!("resolution must be at least 2, got {resolution}")));
    }
    let rest = f.rest_bounds();
    let m = rest.dim();
    let cells = resolution
        .checked_pow(m as u32)
        .ok_or_else(|| Error::Domain("grid too large".into()))?;
    let grid: Vec<Vec<f64>> = (0..cells)
        .map(|idx| {
            let mut r = idx;
            rest.ranges()
                .iter()
                .map(|(l, u)| {
                    let i = r % resolution;
                    r /= resolution;
                    if i + 1 == resolution {
                        *u
                    } else {
                        l + (u - l) * i as f64 / (resolution - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    let s = f.levels();
    let columns: Vec<Vec<f64>> = (1..=s)
        .into_par_iter()
        .map(|slice| grid.iter().map(|x| f.eval_sliced(slice, x)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let centered: Vec<Option<(Vec<f64>, f64)>> = columns
        .iter()
        .map(|c| {
            let mean = c.iter().sum::<f64>() / c.len() as f64;
            let dev: Vec<f64> = c.iter().map(|v| v - mean).collect();
            let ss: f64 = dev.iter().map(|v| v * v).sum();
            (ss > 0.0).then_some((dev, ss.sqrt()))
        })
        .collect();
    for (k, c) in centered.iter().enumerate() {
        if c.is_none() {
            log::warn!("slice {} of {} has zero variance; its correlations are undefined", k + 1, f.id());
        }
    }
    let mut values = vec![None; s * s];
    for i in 0..s {
        values[i * s + i] = Some(1.0);
        for j in 0..i {
            let v = match (&centered[i], &centered[j]) {
                (Some((a, na)), Some((b, nb))) => {
                    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                    Some((dot / (na * nb)).clamp(-1.0, 1.0))
                }
                _ => None,
            };
            values[i * s + j] = v;
            values[j * s + i] = v;
        }
    }
    CrossCorrEstimate::from_values(s, values, resolution)
}

/// The 14 sliced functions: four originals for each `s ∈ {4, 6}` plus the
/// upended Ackley, Alpine N.1 and DCS variants.
pub fn make_standard_testbed() -> Result<Vec<SlicedFunction>> {
    let mut out = Vec::with_capacity(14);
    for s in [4, 6] {
        for base in standard_functions() {
            out.push(SlicedFunction::new(base, s, &[])?);
        }
        let up = default_upend_set(s).expect("defined for 4 and 6");
        for base in standard_functions().into_iter().take(3) {
            out.push(SlicedFunction::new(base, s, &up)?);
        }
    }
    Ok(out)
}
