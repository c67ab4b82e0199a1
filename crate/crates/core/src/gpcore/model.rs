use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corrparam::{CorrMatrix, FamilySpec};
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::space::{Bounds, MixedPoint};
use crate::Scalar;

use super::kernel::{matern52_between, Categorical, KernelConfig};
use super::likelihood::{concentrated_with, Concentrated};
use super::optim::{maximin_starts, nelder_mead_unit_box, NelderMeadOptions};

/// Observed responses at distinct mixed points, with the input box.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet<T> {
    bounds: Bounds<T>,
    levels: usize,
    points: Vec<MixedPoint<T>>,
    responses: Vec<T>,
}

impl<T: Scalar> TrainingSet<T> {
    pub fn new(
        bounds: Bounds<T>,
        levels: usize,
        points: Vec<MixedPoint<T>>,
        responses: Vec<T>,
    ) -> Result<Self> {
        if points.len() != responses.len() {
            return Err(Error::Arity {
                what: "responses",
                expected: points.len(),
                got: responses.len(),
            });
        }
        if points.len() < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 training points, got {}",
                points.len()
            )));
        }
        if levels < 1 {
            return Err(Error::InvalidData("level count must be positive".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.level < 1 || p.level > levels {
                return Err(Error::Index {
                    index: p.level,
                    len: levels,
                });
            }
            if !bounds.contains(&p.x) {
                return Err(Error::InvalidData(format!(
                    "point {} lies outside the declared bounds",
                    i + 1
                )));
            }
            if !responses[i].is_finite() {
                return Err(Error::InvalidData(format!("response {} is not finite", i + 1)));
            }
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(Error::DuplicatePoint {
                        first: j,
                        second: i,
                    });
                }
            }
        }
        Ok(Self {
            bounds,
            levels,
            points,
            responses,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounds(&self) -> &Bounds<T> {
        &self.bounds
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn points(&self) -> &[MixedPoint<T>] {
        &self.points
    }

    pub fn responses(&self) -> &[T] {
        &self.responses
    }

    /// Number of distinct levels that carry at least one point.
    pub fn represented_levels(&self) -> usize {
        let mut seen = vec![false; self.levels];
        for p in &self.points {
            seen[p.level - 1] = true;
        }
        seen.iter().filter(|s| **s).count()
    }

    fn unit_points(&self) -> Vec<MixedPoint<T>> {
        self.points
            .iter()
            .map(|p| MixedPoint::new(self.bounds.to_unit(&p.x), p.level))
            .collect()
    }
}

/// Response centering and scaling used during fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Standardizer<T> {
    pub mean: T,
    pub scale: T,
}

impl<T: Scalar> Standardizer<T> {
    fn from_responses(y: &[T], enabled: bool) -> Self {
        if !enabled {
            return Self {
                mean: T::zero(),
                scale: T::one(),
            };
        }
        let n = T::from_usize_lossy(y.len());
        let mean = y.iter().copied().sum::<T>() / n;
        let var = y.iter().map(|v| (*v - mean) * (*v - mean)).sum::<T>() / n;
        let sd = var.sqrt();
        let scale = if sd > T::zero() && sd.is_finite() { sd } else { T::one() };
        Self { mean, scale }
    }

    fn forward(&self, y: &[T]) -> Vec<T> {
        y.iter().map(|v| (*v - self.mean) / self.scale).collect()
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Number of optimizer starts.
    pub starts: usize,
    pub seed: u64,
    /// Function evaluations per start; `None` scales with the dimension.
    pub max_evals: Option<usize>,
    /// Diagonal jitter on the training correlation matrix.
    pub nugget: f64,
    /// Box for the lengthscales on unit-scaled inputs (searched in log space).
    pub lengthscale_bounds: (f64, f64),
    pub standardize: bool,
    /// Run starts on the rayon pool.
    pub parallel: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 10,
            seed: 0,
            max_evals: None,
            nugget: 1e-8,
            lengthscale_bounds: (1e-2, 10.0),
            standardize: true,
            parallel: true,
        }
    }
}

impl FitOptions {
    fn evals_for(&self, dim: usize) -> usize {
        self.max_evals.unwrap_or(300 * (dim + 1)).max(dim + 2)
    }
}

/// Outcome of one optimizer start.
#[derive(Debug, Clone, PartialEq)]
pub struct StartReport {
    pub start_objective: f64,
    pub final_objective: f64,
    pub evals: usize,
}

/// A fitted ordinary-kriging model.
#[derive(Debug, Clone)]
pub struct GpFit<T> {
    train: TrainingSet<T>,
    config: KernelConfig<T>,
    standardize: bool,
    scaler: Standardizer<T>,
    unit_points: Vec<MixedPoint<T>>,
    corr: Option<CorrMatrix<T>>,
    mu_hat: T,
    sigma2_hat: T,
    neg_log_lik: T,
    chol: Cholesky<T>,
    alpha: Vec<T>,
    starts: Vec<StartReport>,
}

impl<T: Scalar> GpFit<T> {
    /// Assembles the model for fixed hyperparameters.
    pub fn from_config(train: TrainingSet<T>, config: KernelConfig<T>, standardize: bool) -> Result<Self> {
        if config.dim() != train.bounds().dim() {
            return Err(Error::Arity {
                what: "lengthscales",
                expected: train.bounds().dim(),
                got: config.dim(),
            });
        }
        if let Some(cat) = &config.categorical {
            if cat.spec.levels() != train.levels() {
                return Err(Error::Arity {
                    what: "categorical levels",
                    expected: train.levels(),
                    got: cat.spec.levels(),
                });
            }
        }
        let scaler = Standardizer::from_responses(train.responses(), standardize);
        let unit_points = train.unit_points();
        let y = scaler.forward(train.responses());
        let corr = config.corr_matrix()?;
        let Concentrated {
            mu_hat,
            sigma2_hat,
            objective,
            chol,
            alpha,
            ..
        } = concentrated_with(&config, corr.as_ref(), &unit_points, &y)?;
        Ok(Self {
            train,
            config,
            standardize,
            scaler,
            unit_points,
            corr,
            mu_hat,
            sigma2_hat,
            neg_log_lik: objective,
            chol,
            alpha,
            starts: Vec::new(),
        })
    }

    pub fn config(&self) -> &KernelConfig<T> {
        &self.config
    }

    pub fn training(&self) -> &TrainingSet<T> {
        &self.train
    }

    pub fn is_standardized(&self) -> bool {
        self.standardize
    }

    /// Trend estimate on the internal (standardized) response scale.
    pub fn mu_hat(&self) -> T {
        self.mu_hat
    }

    /// Process variance on the internal response scale.
    pub fn sigma2_hat(&self) -> T {
        self.sigma2_hat
    }

    /// The minimized objective `n·log σ̂² + log det R`.
    pub fn neg_log_lik(&self) -> T {
        self.neg_log_lik
    }

    pub fn chol(&self) -> &Cholesky<T> {
        &self.chol
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    /// `(mean, scale)` mapping internal responses back to the data scale.
    pub fn response_scaling(&self) -> (T, T) {
        (self.scaler.mean, self.scaler.scale)
    }

    /// Regularized cross-correlation matrix used by the kernel.
    pub fn corr_matrix(&self) -> Option<&CorrMatrix<T>> {
        self.corr.as_ref()
    }

    pub fn start_reports(&self) -> &[StartReport] {
        &self.starts
    }

    /// Recomputes the objective from the stored configuration and data.
    pub fn recompute_nll(&self) -> Result<T> {
        let y = self.scaler.forward(self.train.responses());
        Ok(concentrated_with(&self.config, self.corr.as_ref(), &self.unit_points, &y)?.objective)
    }

    fn check_point(&self, w0: &MixedPoint<T>) -> Result<()> {
        if w0.level < 1 || w0.level > self.train.levels() {
            return Err(Error::Index {
                index: w0.level,
                len: self.train.levels(),
            });
        }
        if w0.dim() != self.config.dim() {
            return Err(Error::Arity {
                what: "query coordinates",
                expected: self.config.dim(),
                got: w0.dim(),
            });
        }
        Ok(())
    }

    fn predict_unit(&self, x_unit: &[T], level: usize) -> T {
        let ls = &self.config.lengthscales;
        let mut acc = T::zero();
        for (p, a) in self.unit_points.iter().zip(&self.alpha) {
            let mut k = matern52_between(x_unit, &p.x, ls);
            if let Some(c) = &self.corr {
                k = k * c.get(level - 1, p.level - 1);
            }
            acc = acc + k * *a;
        }
        self.scaler.mean + self.scaler.scale * (self.mu_hat + acc)
    }

    /// EBLUP `μ̂ + r₀ᵀ R⁻¹ (y - μ̂·1)` at `w0` (problem coordinates).
    pub fn predict(&self, w0: &MixedPoint<T>) -> Result<T> {
        self.check_point(w0)?;
        let u = self.train.bounds().to_unit(&w0.x);
        Ok(self.predict_unit(&u, w0.level))
    }

    /// Batch prediction; blocks of queries run on the rayon pool.
    pub fn predict_batch(&self, points: &[MixedPoint<T>]) -> Result<Vec<T>> {
        for p in points {
            self.check_point(p)?;
        }
        let out: Vec<T> = points
            .par_chunks(256)
            .flat_map_iter(|block| {
                block.iter().map(|p| {
                    let u = self.train.bounds().to_unit(&p.x);
                    self.predict_unit(&u, p.level)
                })
            })
            .collect();
        Ok(out)
    }

    /// `r₀`: correlations between `w0` and every training point.
    pub fn cross_correlations(&self, w0: &MixedPoint<T>) -> Result<Vec<T>> {
        self.check_point(w0)?;
        let u = self.train.bounds().to_unit(&w0.x);
        Ok(self
            .unit_points
            .iter()
            .map(|p| {
                let k = matern52_between(&u, &p.x, &self.config.lengthscales);
                match &self.corr {
                    Some(c) => k * c.get(w0.level - 1, p.level - 1),
                    None => k,
                }
            })
            .collect())
    }
}

/// Search-space layout: log-lengthscales then categorical parameters, all
/// mapped from the unit cube.
struct ParamBox<T> {
    log_ls: Vec<(T, T)>,
    cat: Option<(FamilySpec, Vec<(T, T)>)>,
}

impl<T: Scalar> ParamBox<T> {
    fn dim(&self) -> usize {
        self.log_ls.len() + self.cat.as_ref().map_or(0, |(_, b)| b.len())
    }

    fn decode(&self, u: &[T], nugget: T) -> Result<KernelConfig<T>> {
        let q = self.log_ls.len();
        let lengthscales = u[..q]
            .iter()
            .zip(&self.log_ls)
            .map(|(v, (lo, hi))| (*lo + *v * (*hi - *lo)).exp())
            .collect();
        let categorical = self.cat.as_ref().map(|(spec, b)| Categorical {
            spec: *spec,
            params: u[q..]
                .iter()
                .zip(b)
                .map(|(v, (lo, hi))| *lo + *v * (*hi - *lo))
                .collect(),
        });
        KernelConfig::new(lengthscales, categorical, nugget)
    }
}

/// Maximum likelihood fit of the compound-kernel model.
///
/// `spec == None` fits a continuous-only kernel. When the data cover a
/// single level the categorical parameters are not identifiable and the
/// fit falls back to a continuous-only kernel.
pub fn fit<T: Scalar>(train: &TrainingSet<T>, spec: Option<FamilySpec>, options: &FitOptions) -> Result<GpFit<T>> {
    if let Some(spec) = &spec {
        if spec.levels() != train.levels() {
            return Err(Error::Arity {
                what: "family levels",
                expected: train.levels(),
                got: spec.levels(),
            });
        }
    }
    let spec = match spec {
        Some(s) if train.represented_levels() < 2 => {
            log::warn!(
                "only one level represented in the training data; fitting {} as continuous-only",
                s.label()
            );
            None
        }
        other => other,
    };
    let (lo, hi) = options.lengthscale_bounds;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::Domain(format!("invalid lengthscale box ({lo}, {hi})")));
    }
    let pbox = ParamBox {
        log_ls: vec![(T::lit(lo.ln()), T::lit(hi.ln())); train.bounds().dim()],
        cat: spec.map(|s| (s, s.bounds::<T>())),
    };
    let nugget = T::lit(options.nugget);
    let scaler = Standardizer::from_responses(train.responses(), options.standardize);
    let unit_points = train.unit_points();
    let y = scaler.forward(train.responses());

    let objective = |u: &[T]| -> T {
        pbox.decode(u, nugget)
            .and_then(|cfg| {
                let p = cfg.corr_matrix()?;
                concentrated_with(&cfg, p.as_ref(), &unit_points, &y)
            })
            .map(|c| c.objective)
            .unwrap_or_else(|_| T::infinity())
    };

    let dim = pbox.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let starts: Vec<Vec<T>> = maximin_starts(options.starts.max(1), dim, 16, &mut rng);
    let nm = NelderMeadOptions {
        max_evals: options.evals_for(dim),
        ..Default::default()
    };
    let run = |x0: &Vec<T>| {
        let f0 = objective(x0);
        let m = nelder_mead_unit_box(&objective, x0, &nm);
        (f0, m)
    };
    let results: Vec<_> = if options.parallel {
        starts.par_iter().map(run).collect()
    } else {
        starts.iter().map(run).collect()
    };

    let reports: Vec<StartReport> = results
        .iter()
        .map(|(f0, m)| StartReport {
            start_objective: f0.as_f64(),
            final_objective: m.f.as_f64(),
            evals: m.evals,
        })
        .collect();

    // lowest objective; ties within 1e-10 go to the earliest start
    let mut best: Option<usize> = None;
    for (k, (_, m)) in results.iter().enumerate() {
        if !m.f.is_finite() {
            continue;
        }
        match best {
            None => best = Some(k),
            Some(b) if m.f < results[b].1.f - T::lit(1e-10) => best = Some(k),
            _ => {}
        }
    }
    let Some(best) = best else {
        let diagnostics = reports
            .iter()
            .enumerate()
            .map(|(k, r)| format!("start {k}: objective {} after {} evals", r.final_objective, r.evals))
            .collect();
        return Err(Error::FitFailure { diagnostics });
    };

    let config = pbox.decode(&results[best].1.x, nugget)?;
    let mut fitted = GpFit::from_config(train.clone(), config, options.standardize)?;
    fitted.starts = reports;
    Ok(fitted)
}

/// Per-level model in Individual Kriging.
#[derive(Debug, Clone)]
pub enum SliceModel<T> {
    Gp(Box<GpFit<T>>),
    /// Too few points (or a failed fit): predict a constant.
    Mean(T),
}

/// Independent continuous models, one per level.
#[derive(Debug, Clone)]
pub struct IndividualFit<T> {
    slices: Vec<SliceModel<T>>,
}

impl<T: Scalar> IndividualFit<T> {
    pub fn slices(&self) -> &[SliceModel<T>] {
        &self.slices
    }

    /// True when any level fell back to a constant predictor.
    pub fn has_fallback(&self) -> bool {
        self.slices.iter().any(|s| matches!(s, SliceModel::Mean(_)))
    }

    pub fn predict(&self, w0: &MixedPoint<T>) -> Result<T> {
        let model = self.slices.get(w0.level.wrapping_sub(1)).ok_or(Error::Index {
            index: w0.level,
            len: self.slices.len(),
        })?;
        match model {
            SliceModel::Gp(g) => g.predict(&MixedPoint::new(w0.x.clone(), 1)),
            SliceModel::Mean(m) => Ok(*m),
        }
    }

    pub fn predict_batch(&self, points: &[MixedPoint<T>]) -> Result<Vec<T>> {
        points.iter().map(|p| self.predict(p)).collect()
    }
}

/// Fits a separate continuous model to the points of each level.
pub fn fit_individual<T: Scalar>(train: &TrainingSet<T>, options: &FitOptions) -> Result<IndividualFit<T>> {
    let global_mean =
        train.responses().iter().copied().sum::<T>() / T::from_usize_lossy(train.len());
    let mut slices = Vec::with_capacity(train.levels());
    for level in 1..=train.levels() {
        let (pts, ys): (Vec<_>, Vec<_>) = train
            .points()
            .iter()
            .zip(train.responses())
            .filter(|(p, _)| p.level == level)
            .map(|(p, y)| (MixedPoint::new(p.x.clone(), 1), *y))
            .unzip();
        if pts.len() < 2 {
            log::warn!("level {level} has {} point(s); using a constant predictor", pts.len());
            let m = ys.first().copied().unwrap_or(global_mean);
            slices.push(SliceModel::Mean(m));
            continue;
        }
        let mean = ys.iter().copied().sum::<T>() / T::from_usize_lossy(ys.len());
        let sub = TrainingSet::new(train.bounds().clone(), 1, pts, ys)?;
        match fit(&sub, None, options) {
            Ok(g) => slices.push(SliceModel::Gp(Box::new(g))),
            Err(e) => {
                log::warn!("level {level} fit failed ({e}); using its mean");
                slices.push(SliceModel::Mean(mean));
            }
        }
    }
    Ok(IndividualFit { slices })
}
