use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionKind {
    Ackley,
    AlpineN1,
    DeflectedCorrugatedSpring,
    DoubleSum,
}

impl FunctionKind {
    pub fn evaluate(self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        match self {
            FunctionKind::Ackley => {
                let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
                let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
                -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
            }
            FunctionKind::AlpineN1 => x.iter().map(|v| (v * v.sin() + 0.1 * v).abs()).sum(),
            FunctionKind::DeflectedCorrugatedSpring => {
                const ALPHA: f64 = 5.0;
                const K: f64 = 5.0;
                let r2: f64 = x.iter().map(|v| (v - ALPHA) * (v - ALPHA)).sum();
                0.1 * r2 - (K * r2.sqrt()).cos()
            }
            FunctionKind::DoubleSum => {
                let mut partial = 0.0;
                let mut total = 0.0;
                for v in x {
                    partial += v;
                    total += partial * partial;
                }
                total
            }
        }
    }
}

/// A continuous test function on a box with a known global minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousFunction {
    pub name: &'static str,
    pub kind: FunctionKind,
    pub bounds: Vec<(f64, f64)>,
    pub opt_pos: Vec<f64>,
    pub opt_val: f64,
}

impl ContinuousFunction {
    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        self.kind.evaluate(x)
    }

    pub fn ackley(d: usize) -> Self {
        Self {
            name: "ackley",
            kind: FunctionKind::Ackley,
            bounds: vec![(-32.77, 32.77); d],
            opt_pos: vec![0.0; d],
            opt_val: 0.0,
        }
    }

    pub fn alpine_n1(d: usize) -> Self {
        Self {
            name: "alpine",
            kind: FunctionKind::AlpineN1,
            bounds: vec![(-10.0, 10.0); d],
            opt_pos: vec![0.0; d],
            opt_val: 0.0,
        }
    }

    pub fn deflected_corrugated_spring(d: usize) -> Self {
        Self {
            name: "dcs",
            kind: FunctionKind::DeflectedCorrugatedSpring,
            bounds: vec![(0.0, 10.0); d],
            opt_pos: vec![5.0; d],
            opt_val: -1.0,
        }
    }

    pub fn double_sum(d: usize) -> Self {
        Self {
            name: "double-sum",
            kind: FunctionKind::DoubleSum,
            bounds: vec![(-65.54, 65.54); d],
            opt_pos: vec![0.0; d],
            opt_val: 0.0,
        }
    }
}

/// The four three-dimensional base functions of the testbed.
pub fn standard_functions() -> Vec<ContinuousFunction> {
    vec![
        ContinuousFunction::ackley(3),
        ContinuousFunction::alpine_n1(3),
        ContinuousFunction::deflected_corrugated_spring(3),
        ContinuousFunction::double_sum(3),
    ]
}

/// Looks up a base function by name (a few spellings are accepted).
pub fn lookup(name: &str) -> Result<ContinuousFunction> {
    let key = name.trim().to_ascii_lowercase().replace(['_', ' ', '.'], "-");
    let f = match key.as_str() {
        "ackley" => ContinuousFunction::ackley(3),
        "alpine" | "alpine-n1" | "alpine1" | "alpinen1" => ContinuousFunction::alpine_n1(3),
        "dcs" | "deflected-corrugated-spring" => ContinuousFunction::deflected_corrugated_spring(3),
        "double-sum" | "doublesum" => ContinuousFunction::double_sum(3),
        _ => return Err(Error::UnknownFunction(name.to_string())),
    };
    Ok(f)
}
