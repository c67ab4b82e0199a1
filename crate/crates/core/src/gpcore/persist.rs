//! JSON model files.
//!
//! A saved model carries everything needed to rebuild the predictor: input
//! bounds, level count, kernel hyperparameters, the training data and the
//! fitted trend/variance. Loading re-runs the same assembly code as fitting,
//! so predictions from a reloaded model are bit-identical.

use std::path::Path;

use num_traits::NumCast;
use serde::{Deserialize, Serialize};

use crate::corrparam::FamilySpec;
use crate::error::{Error, Result};
use crate::space::{Bounds, MixedPoint};
use crate::Scalar;

use super::kernel::{Categorical, KernelConfig};
use super::model::{GpFit, TrainingSet};

pub const MODEL_FORMAT: &str = "mixkrig-gp";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub format: String,
    pub version: u32,
    pub bounds: Vec<(f64, f64)>,
    pub levels: usize,
    pub family: Option<FamilySpec>,
    pub lengthscales: Vec<f64>,
    pub categorical_params: Vec<f64>,
    pub nugget: f64,
    pub standardize: bool,
    pub mu_hat: f64,
    pub sigma2_hat: f64,
    pub neg_log_lik: f64,
    pub points: Vec<MixedPoint<f64>>,
    pub responses: Vec<f64>,
}

fn up<T: Scalar>(v: T) -> f64 {
    v.as_f64()
}

fn down<T: Scalar>(v: f64) -> Result<T> {
    <T as NumCast>::from(v).ok_or_else(|| Error::Parse(format!("value {v} not representable")))
}

fn down_vec<T: Scalar>(v: &[f64]) -> Result<Vec<T>> {
    v.iter().map(|x| down(*x)).collect()
}

impl SavedModel {
    pub fn from_fit<T: Scalar>(fit: &GpFit<T>) -> Self {
        let train = fit.training();
        let cfg = fit.config();
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            bounds: train.bounds().ranges().iter().map(|(a, b)| (up(*a), up(*b))).collect(),
            levels: train.levels(),
            family: cfg.categorical.as_ref().map(|c| c.spec),
            lengthscales: cfg.lengthscales.iter().map(|v| up(*v)).collect(),
            categorical_params: cfg
                .categorical
                .as_ref()
                .map(|c| c.params.iter().map(|v| up(*v)).collect())
                .unwrap_or_default(),
            nugget: up(cfg.nugget),
            standardize: fit.is_standardized(),
            mu_hat: up(fit.mu_hat()),
            sigma2_hat: up(fit.sigma2_hat()),
            neg_log_lik: up(fit.neg_log_lik()),
            points: train
                .points()
                .iter()
                .map(|p| MixedPoint::new(p.x.iter().map(|v| up(*v)).collect(), p.level))
                .collect(),
            responses: train.responses().iter().map(|v| up(*v)).collect(),
        }
    }

    pub fn into_fit<T: Scalar>(&self) -> Result<GpFit<T>> {
        if self.format != MODEL_FORMAT || self.version != MODEL_VERSION {
            return Err(Error::Parse(format!(
                "unsupported model format {} v{}",
                self.format, self.version
            )));
        }
        let bounds = Bounds::new(
            self.bounds
                .iter()
                .map(|(a, b)| Ok((down(*a)?, down(*b)?)))
                .collect::<Result<Vec<_>>>()?,
        )?;
        let points = self
            .points
            .iter()
            .map(|p| Ok(MixedPoint::new(down_vec(&p.x)?, p.level)))
            .collect::<Result<Vec<_>>>()?;
        let train = TrainingSet::new(bounds, self.levels, points, down_vec(&self.responses)?)?;
        let categorical = self
            .family
            .map(|spec| -> Result<Categorical<T>> {
                Ok(Categorical {
                    spec,
                    params: down_vec(&self.categorical_params)?,
                })
            })
            .transpose()?;
        let config = KernelConfig::new(down_vec(&self.lengthscales)?, categorical, down(self.nugget)?)?;
        GpFit::from_config(train, config, self.standardize)
    }
}

pub fn save_model<T: Scalar>(fit: &GpFit<T>, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(&SavedModel::from_fit(fit))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<GpFit<T>> {
    let text = std::fs::read_to_string(path)?;
    let saved: SavedModel = serde_json::from_str(&text)?;
    saved.into_fit()
}
