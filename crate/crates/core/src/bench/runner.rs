use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ModelKind};
use super::metrics::{extract_tau_hat, q_squared, rmse_corr};
use super::summary::{summarize, write_summary};
use crate::design::{cslhd, lhd, scale_to_bounds};
use crate::error::{Error, Result};
use crate::gpcore::{fit, fit_individual, TrainingSet};
use crate::space::MixedPoint;
use crate::testbed::{empirical_cross_corr, CrossCorrEstimate, SlicedFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// Finished, but part of the model fell back to a simpler one.
    Fallback,
    Failed,
}

/// One row of `records.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub function: String,
    pub s: usize,
    pub n: usize,
    pub family: String,
    pub rank: Option<usize>,
    pub rep: usize,
    pub rmse_corr: Option<f64>,
    pub q2: Option<f64>,
    pub fit_seconds: Option<f64>,
    pub status: Status,
}

/// Test points (slice-major, identical continuous coordinates on every
/// slice) and their true values.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    pub points: Vec<MixedPoint<f64>>,
    pub y: Vec<f64>,
}

impl TestSet {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let q = self.points.first().map_or(0, |p| p.dim());
        let mut header = vec!["slice".to_string()];
        header.extend((1..=q).map(|k| format!("x{k}")));
        header.push("y".into());
        w.write_record(&header)?;
        for (p, y) in self.points.iter().zip(&self.y) {
            let mut row = vec![p.level.to_string()];
            row.extend(p.x.iter().map(|v| v.to_string()));
            row.push(y.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut points = Vec::new();
        let mut y = Vec::new();
        for row in r.records() {
            let row = row?;
            let num = |k: usize| -> Result<f64> {
                row.get(k)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("bad test-set field {k}")))
            };
            let level = row
                .get(0)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse("bad slice index".into()))?;
            let q = row.len().saturating_sub(2);
            let x = (1..=q).map(num).collect::<Result<Vec<_>>>()?;
            y.push(num(q + 1)?);
            points.push(MixedPoint::new(x, level));
        }
        Ok(Self { points, y })
    }
}

/// One LHD of `size` points over the continuous dimensions, repeated on
/// every slice.
pub fn make_test_set(f: &SlicedFunction, size: usize, seed: u64) -> Result<TestSet> {
    if size < 2 {
        return Err(Error::Domain(format!("test set needs at least 2 points, got {size}")));
    }
    let bounds = f.rest_bounds();
    let design = lhd::<f64>(size, f.rest_dim(), seed)?;
    let base: Vec<Vec<f64>> = design.points.iter().map(|p| bounds.from_unit(&p.x)).collect();
    let mut points = Vec::with_capacity(size * f.levels());
    let mut y = Vec::with_capacity(size * f.levels());
    for slice in 1..=f.levels() {
        for x in &base {
            y.push(f.eval_sliced(slice, x)?);
            points.push(MixedPoint::new(x.clone(), slice));
        }
    }
    Ok(TestSet { points, y })
}

static TMP_COUNTER: AtomicUsize = AtomicUsize::new(0);

/// Writes via a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(
        ".{name}.{}.{}.tmp",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn cached<T>(
    path: Option<PathBuf>,
    read: impl Fn(&[u8]) -> Result<T>,
    compute: impl FnOnce() -> Result<T>,
    write: impl Fn(&T) -> Result<Vec<u8>>,
) -> Result<T> {
    if let Some(p) = &path {
        if let Ok(bytes) = fs::read(p) {
            match read(&bytes) {
                Ok(v) => return Ok(v),
                Err(e) => log::warn!("ignoring unreadable cache file {}: {e}", p.display()),
            }
        }
    }
    let v = compute()?;
    if let Some(p) = &path {
        write_atomic(p, &write(&v)?)?;
    }
    Ok(v)
}

/// Empirical matrix and test set of one sliced function.
#[derive(Debug, Clone)]
pub struct Reference {
    pub function: SlicedFunction,
    pub empirical: CrossCorrEstimate,
    pub test_set: TestSet,
}

pub fn prepare_reference(f: SlicedFunction, cfg: &ExperimentConfig, cache_dir: Option<&Path>) -> Result<Reference> {
    let s = f.levels();
    let id = f.id();
    let res = cfg.empirical.resolution;
    let emp_path = cache_dir.map(|d| d.join(format!("empirical_{id}_s{s}_res{res}.csv")));
    let empirical = cached(
        emp_path,
        |b| CrossCorrEstimate::parse_csv(std::str::from_utf8(b).map_err(|e| Error::Parse(e.to_string()))?),
        || empirical_cross_corr(&f, res),
        |e| Ok(e.to_csv().into_bytes()),
    )?;
    let (size, seed) = (cfg.test_set.size, cfg.test_set.seed);
    let ts_path = cache_dir.map(|d| d.join(format!("testset_{id}_s{s}_size{size}_seed{seed}.csv")));
    let test_set = cached(
        ts_path,
        |b: &[u8]| TestSet::read_csv(b),
        || make_test_set(&f, size, seed),
        |t| {
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            Ok(buf)
        },
    )?;
    if test_set.points.len() != size * s {
        return Err(Error::InvalidData(format!("cached test set for {id} has the wrong size")));
    }
    Ok(Reference {
        function: f,
        empirical,
        test_set,
    })
}

fn failed(base: &BenchRecord) -> BenchRecord {
    BenchRecord {
        status: Status::Failed,
        ..base.clone()
    }
}

fn run_cell(r: &Reference, models: &[ModelKind], n: usize, rep: usize, cfg: &ExperimentConfig) -> Vec<BenchRecord> {
    let f = &r.function;
    let s = f.levels();
    let seed = cfg.base_seed.wrapping_add(rep as u64);
    let blank = |m: &ModelKind| BenchRecord {
        function: f.id(),
        s,
        n,
        family: m.family_name().to_string(),
        rank: m.rank(),
        rep,
        rmse_corr: None,
        q2: None,
        fit_seconds: None,
        status: Status::Ok,
    };

    let train = (|| -> Result<TrainingSet<f64>> {
        let bounds = f.rest_bounds();
        let (design, _) = cslhd::<f64>(n, s, f.rest_dim(), seed)?;
        let points = scale_to_bounds(&design, &bounds)?;
        let y = points
            .iter()
            .map(|p| f.eval_sliced(p.level, &p.x))
            .collect::<Result<Vec<_>>>()?;
        TrainingSet::new(bounds, s, points, y)
    })();
    let train = match train {
        Ok(t) => t,
        Err(e) => {
            log::warn!("{} s={s} n={n} rep={rep}: training data failed: {e}", f.id());
            return models.iter().map(|m| failed(&blank(m))).collect();
        }
    };
    let opts = cfg.fit.options(seed);

    models
        .iter()
        .map(|m| {
            let rec = blank(m);
            let t0 = Instant::now();
            let outcome = match m {
                ModelKind::Joint(spec) => fit(&train, Some(*spec), &opts).and_then(|g| {
                    let secs = t0.elapsed().as_secs_f64();
                    let rmse = rmse_corr(&extract_tau_hat(&g)?, &r.empirical)?;
                    let pred = g.predict_batch(&r.test_set.points)?;
                    Ok((Some(rmse), q_squared(&r.test_set.y, &pred)?, secs, Status::Ok))
                }),
                ModelKind::Individual => fit_individual(&train, &opts).and_then(|g| {
                    let secs = t0.elapsed().as_secs_f64();
                    let pred = g.predict_batch(&r.test_set.points)?;
                    let status = if g.has_fallback() { Status::Fallback } else { Status::Ok };
                    Ok((None, q_squared(&r.test_set.y, &pred)?, secs, status))
                }),
            };
            match outcome {
                Ok((rmse, q2, secs, status)) => BenchRecord {
                    rmse_corr: rmse,
                    q2: Some(q2),
                    fit_seconds: Some(secs),
                    status,
                    ..rec
                },
                Err(e) => {
                    log::warn!("{} s={s} n={n} rep={rep} {}: {e}", rec.function, m.family_name());
                    failed(&rec)
                }
            }
        })
        .collect()
}

/// Runs every (function, s, n, replication, family) combination. Records
/// come back in a fixed order regardless of `jobs`; `fit_seconds` is always
/// filled here (see [`write_records`] for what reaches the file).
pub fn run_experiment(cfg: &ExperimentConfig, jobs: Option<usize>, cache_dir: Option<&Path>) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;

    pool.install(|| {
        let functions = cfg.sliced_functions()?;
        let refs = functions
            .into_par_iter()
            .map(|f| prepare_reference(f, cfg, cache_dir))
            .collect::<Result<Vec<_>>>()?;

        let mut tasks = Vec::new();
        for r in &refs {
            let models = cfg.models_for(r.function.levels())?;
            for &n in &cfg.n_values {
                for rep in 0..cfg.replications {
                    tasks.push((r, models.clone(), n, rep));
                }
            }
        }
        let done = AtomicUsize::new(0);
        let total = tasks.len();
        let out: Vec<Vec<BenchRecord>> = tasks
            .par_iter()
            .map(|(r, models, n, rep)| {
                let recs = run_cell(r, models, *n, *rep, cfg);
                let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                log::info!("cell {k}/{total}: {} s={} n={n} rep={rep}", r.function.id(), r.function.levels());
                recs
            })
            .collect();
        Ok(out.into_iter().flatten().collect())
    })
}

/// Writes `records.csv` with a leading `#` comment line carrying the
/// timestamp. `fit_seconds` is written only when `with_timing` is set, so
/// that repeated runs produce identical files.
pub fn write_records<W: Write>(mut writer: W, records: &[BenchRecord], with_timing: bool) -> Result<()> {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    writeln!(writer, "# mixkrig bench records, unix time {stamp}")?;
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        if with_timing {
            w.serialize(r)?;
        } else {
            w.serialize(BenchRecord {
                fit_seconds: None,
                ..r.clone()
            })?;
        }
    }
    if records.is_empty() {
        w.write_record([
            "function",
            "s",
            "n",
            "family",
            "rank",
            "rep",
            "rmse_corr",
            "q2",
            "fit_seconds",
            "status",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<BenchRecord>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let mut out = Vec::new();
    for row in r.deserialize() {
        let rec: BenchRecord = row?;
        if rec.rmse_corr.is_some_and(|v| v < 0.0) || rec.q2.is_some_and(|v| v > 1.0 + 1e-12) {
            return Err(Error::InvalidData(format!(
                "record {} {} rep {} has out-of-range metrics",
                rec.function, rec.family, rec.rep
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Runs the experiment and writes `records.csv`, `summary.csv` and
/// `timings.csv` into `out`.
pub fn run_to_dir(cfg: &ExperimentConfig, out: &Path, jobs: Option<usize>) -> Result<Vec<BenchRecord>> {
    fs::create_dir_all(out)?;
    let cache = cfg.cache_dir.clone().unwrap_or_else(|| out.join("cache"));
    let records = run_experiment(cfg, jobs, Some(&cache))?;

    let mut buf = Vec::new();
    write_records(&mut buf, &records, cfg.record_timing)?;
    write_atomic(&out.join("records.csv"), &buf)?;

    let mut buf = Vec::new();
    write_summary(&mut buf, &summarize(&records))?;
    write_atomic(&out.join("summary.csv"), &buf)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["function", "s", "n", "family", "rank", "rep", "fit_seconds"])?;
    for r in &records {
        w.write_record([
            r.function.clone(),
            r.s.to_string(),
            r.n.to_string(),
            r.family.clone(),
            r.rank.map(|k| k.to_string()).unwrap_or_default(),
            r.rep.to_string(),
            r.fit_seconds.map(|t| format!("{t:.4}")).unwrap_or_default(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(&out.join("timings.csv"), &bytes)?;
    Ok(records)
}
