use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mixkrig::bench::{self, ExperimentConfig};
use mixkrig::corrparam::{FamilySpec, DEFAULT_CORR_NUGGET};
use mixkrig::design::{self, DesignOptions};
use mixkrig::gpcore::{self, FitOptions};
use mixkrig::testbed::{self, CrossCorrEstimate, QuantileMap, SlicedFunction};
use mixkrig::{Bounds64, CorrMatrix64, Design64, MixedPoint64, TrainingSet64};

#[derive(Parser)]
#[command(name = "mixkrig", version, about = "Kriging with mixed continuous and categorical inputs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-correlation matrices.
    #[command(subcommand)]
    Corr(CorrCmd),
    /// Sliced benchmark functions.
    #[command(subcommand)]
    Testbed(TestbedCmd),
    /// Latin hypercube and clustered sliced designs.
    #[command(subcommand)]
    Design(DesignCmd),
    /// Simulation study and scoring.
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Fit and apply a single model.
    #[command(subcommand)]
    Gp(GpCmd),
}

#[derive(Subcommand)]
enum CorrCmd {
    /// Print a cross-correlation matrix as CSV.
    Build {
        /// EC, MC, UC or LRC.
        #[arg(long)]
        family: String,
        #[arg(long)]
        s: usize,
        /// Rank, for LRC (or write the family as LRC3).
        #[arg(long)]
        rank: Option<usize>,
        /// Comma-separated parameters.
        #[arg(long, allow_hyphen_values = true)]
        params: String,
        #[arg(long, default_value_t = DEFAULT_CORR_NUGGET)]
        nugget: f64,
        /// Skip the nugget regularization.
        #[arg(long)]
        raw: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Spacing {
    /// Equidistant, with the optimum swapped in.
    Equidistant,
    Uniform,
    Normal,
}

#[derive(Subcommand)]
enum TestbedCmd {
    /// List the 14 standard sliced functions.
    List,
    /// Print the slice positions of a function.
    Positions {
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        s: usize,
        #[arg(long, value_enum, default_value_t = Spacing::Equidistant)]
        spacing: Spacing,
        /// Decimal places; full precision when omitted.
        #[arg(long)]
        digits: Option<usize>,
    },
    /// Empirical cross-correlation matrix as CSV.
    Corr {
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        s: usize,
        /// Comma-separated slices to upend, e.g. 1,3.
        #[arg(long, value_delimiter = ',')]
        upend: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        resolution: usize,
    },
}

#[derive(Args)]
struct DesignOut {
    #[arg(long)]
    seed: u64,
    /// Midpoint placement instead of uniform jitter.
    #[arg(long)]
    centered: bool,
    /// Also write problem coordinates, e.g. "-5:5,0:1".
    #[arg(long, allow_hyphen_values = true)]
    bounds: Option<String>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DesignCmd {
    /// Plain Latin hypercube.
    Lhd {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: usize,
        #[command(flatten)]
        out: DesignOut,
    },
    /// Clustered sliced Latin hypercube with n points per slice.
    Cslhd {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        q: usize,
        #[command(flatten)]
        out: DesignOut,
    },
    /// Check a design CSV; reports the first violated property.
    Validate { file: PathBuf },
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Run an experiment and write records.csv, summary.csv and timings.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Recompute summary.csv from a records file.
    Summarize {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// RMSE between an estimated and an empirical correlation matrix (CSV).
    CorrRmse {
        #[arg(long)]
        estimate: PathBuf,
        #[arg(long)]
        empirical: PathBuf,
    },
    /// Q² from a CSV with columns y_true,y_pred.
    Q2 {
        #[arg(long)]
        data: PathBuf,
    },
    /// Parse and check an experiment config.
    ValidateConfig { file: PathBuf },
}

#[derive(Subcommand)]
enum GpCmd {
    /// Fit a model to CSV data with columns slice,x1..xq,y.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Number of levels of the categorical input.
        #[arg(long)]
        levels: usize,
        /// EC, MC, UC, LRC<r>; omit for a purely continuous model.
        #[arg(long)]
        family: Option<String>,
        /// Per-dimension bounds, e.g. "-5:5,0:1".
        #[arg(long, allow_hyphen_values = true)]
        bounds: String,
        #[arg(long, default_value_t = 10)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict at points from a CSV with columns slice,x1..xq.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        points: PathBuf,
    },
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number `{t}`")))
        .collect()
}

fn parse_bounds(text: &str) -> Result<Bounds64> {
    let ranges = text
        .split(',')
        .map(|r| {
            let (l, u) = r.split_once(':').with_context(|| format!("bound `{r}` is not lo:hi"))?;
            Ok((l.trim().parse::<f64>()?, u.trim().parse::<f64>()?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Bounds64::new(ranges)?)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_matrix(m: &CorrMatrix64) -> Result<()> {
    let mut out = io::stdout().lock();
    for i in 0..m.levels() {
        let row: Vec<String> = (0..m.levels()).map(|j| m.get(i, j).to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn family_spec(family: &str, s: usize, rank: Option<usize>) -> Result<FamilySpec> {
    Ok(match rank {
        Some(r) if family.eq_ignore_ascii_case("LRC") => FamilySpec::lrc(s, r)?,
        Some(_) => bail!("--rank only applies to LRC"),
        None => FamilySpec::parse(family, s)?,
    })
}

fn corr(cmd: CorrCmd) -> Result<()> {
    let CorrCmd::Build {
        family,
        s,
        rank,
        params,
        nugget,
        raw,
    } = cmd;
    let spec = family_spec(&family, s, rank)?;
    let params = parse_list(&params)?;
    let m = if raw { spec.build_raw(&params)? } else { spec.build(&params, nugget)? };
    print_matrix(&m)
}

fn testbed_cmd(cmd: TestbedCmd) -> Result<()> {
    match cmd {
        TestbedCmd::List => {
            let mut out = io::stdout().lock();
            writeln!(out, "id,s,positions")?;
            for f in testbed::make_standard_testbed()? {
                let pos: Vec<String> = f.positions().iter().map(|p| format!("{p:.2}")).collect();
                writeln!(out, "{},{},\"{}\"", f.id(), f.levels(), pos.join(" "))?;
            }
        }
        TestbedCmd::Positions {
            function,
            s,
            spacing,
            digits,
        } => {
            let base = testbed::lookup(&function)?;
            let (l, u) = base.bounds[0];
            let pos = match spacing {
                Spacing::Equidistant => testbed::default_positions(&base, s)?,
                Spacing::Uniform => testbed::quantile_positions(|p| QuantileMap::Uniform.quantile(p), s, l, u)?,
                Spacing::Normal => testbed::quantile_positions(|p| QuantileMap::StandardNormal.quantile(p), s, l, u)?,
            };
            let text: Vec<String> = pos
                .iter()
                .map(|p| match digits {
                    Some(d) => format!("{p:.d$}"),
                    None => p.to_string(),
                })
                .collect();
            println!("{}", text.join(","));
        }
        TestbedCmd::Corr {
            function,
            s,
            upend,
            resolution,
        } => {
            let f = SlicedFunction::new(testbed::lookup(&function)?, s, &upend)?;
            print!("{}", testbed::empirical_cross_corr(&f, resolution)?.to_csv());
        }
    }
    Ok(())
}

fn write_design(d: &Design64, out: &DesignOut) -> Result<()> {
    let bounds = out.bounds.as_deref().map(parse_bounds).transpose()?;
    let mut w = output(out.out.as_deref())?;
    d.write_csv(&mut w, bounds.as_ref())?;
    w.flush()?;
    Ok(())
}

fn design_cmd(cmd: DesignCmd) -> Result<()> {
    match cmd {
        DesignCmd::Lhd { n, q, out } => {
            let opts = DesignOptions { centered: out.centered };
            write_design(&design::lhd_with(n, q, out.seed, &opts)?, &out)
        }
        DesignCmd::Cslhd { n, s, q, out } => {
            let opts = DesignOptions { centered: out.centered };
            let (d, _) = design::cslhd_with(n, s, q, out.seed, &opts)?;
            write_design(&d, &out)
        }
        DesignCmd::Validate { file } => {
            let d = Design64::read_csv(File::open(&file)?).with_context(|| format!("{} is not a valid design", file.display()))?;
            println!("valid: {} points, s={}, n={}, q={}", d.len(), d.s, d.n_per_slice, d.q);
            Ok(())
        }
    }
}

fn bench_cmd(cmd: BenchCmd) -> Result<()> {
    match cmd {
        BenchCmd::Run { config, out, jobs } => {
            let cfg = ExperimentConfig::load(&config)?;
            let records = bench::run_to_dir(&cfg, &out, jobs)?;
            let failed = records.iter().filter(|r| r.status == bench::Status::Failed).count();
            eprintln!("{} records ({failed} failed) written to {}", records.len(), out.display());
        }
        BenchCmd::Summarize { records, out } => {
            let recs = bench::read_records(File::open(&records)?)?;
            let mut w = output(out.as_deref())?;
            bench::write_summary(&mut w, &bench::summarize(&recs))?;
            w.flush()?;
        }
        BenchCmd::CorrRmse { estimate, empirical } => {
            let est = CrossCorrEstimate::parse_csv(&std::fs::read_to_string(estimate)?)?;
            let s = est.levels();
            let m = mixkrig::linalg::Mat::from_fn(s, s, |i, j| est.get(i, j).unwrap_or(f64::NAN));
            let hat = CorrMatrix64::from_matrix(m)?;
            let emp = CrossCorrEstimate::parse_csv(&std::fs::read_to_string(empirical)?)?;
            println!("{}", bench::rmse_corr(&hat, &emp)?);
        }
        BenchCmd::Q2 { data } => {
            let mut r = csv::Reader::from_path(&data)?;
            let headers = r.headers()?.clone();
            let col = |name: &str| headers.iter().position(|h| h.trim() == name).with_context(|| format!("missing column {name}"));
            let (it, ip) = (col("y_true")?, col("y_pred")?);
            let (mut yt, mut yp) = (Vec::new(), Vec::new());
            for row in r.records() {
                let row = row?;
                yt.push(row[it].trim().parse::<f64>()?);
                yp.push(row[ip].trim().parse::<f64>()?);
            }
            println!("{}", bench::q_squared(&yt, &yp)?);
        }
        BenchCmd::ValidateConfig { file } => {
            let cfg = ExperimentConfig::load(&file)?;
            for &s in &cfg.s_values {
                let labels: Vec<String> = cfg
                    .models_for(s)?
                    .iter()
                    .map(|m| match m.rank() {
                        Some(r) => format!("{}{r}", m.family_name()),
                        None => m.family_name().to_string(),
                    })
                    .collect();
                println!("s={s}: {}", labels.join(" "));
            }
            let cells = cfg.functions.len() * cfg.n_values.len() * cfg.replications;
            let models: usize = cfg.s_values.iter().map(|s| cfg.models_for(*s).map_or(0, |m| m.len())).sum();
            println!("ok: {} records expected", cells * models);
        }
    }
    Ok(())
}

fn read_points(path: &Path, with_y: bool) -> Result<(Vec<MixedPoint64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let width = r.headers()?.len();
    let q = width.checked_sub(if with_y { 2 } else { 1 }).filter(|q| *q > 0).context("too few columns")?;
    let (mut pts, mut ys) = (Vec::new(), Vec::new());
    for row in r.records() {
        let row = row?;
        let level: usize = row[0].trim().parse().context("bad slice index")?;
        let x = (1..=q).map(|k| Ok(row[k].trim().parse::<f64>()?)).collect::<Result<Vec<_>>>()?;
        if with_y {
            ys.push(row[q + 1].trim().parse::<f64>()?);
        }
        pts.push(MixedPoint64::new(x, level));
    }
    Ok((pts, ys))
}

fn gp_cmd(cmd: GpCmd) -> Result<()> {
    match cmd {
        GpCmd::Fit {
            data,
            levels,
            family,
            bounds,
            starts,
            seed,
            out,
        } => {
            let (pts, y) = read_points(&data, true)?;
            let train = TrainingSet64::new(parse_bounds(&bounds)?, levels, pts, y)?;
            let spec = family.as_deref().map(|f| FamilySpec::parse(f, levels)).transpose()?;
            let opts = FitOptions {
                starts,
                seed,
                ..FitOptions::default()
            };
            let fit = gpcore::fit(&train, spec, &opts)?;
            gpcore::save_model(&fit, &out)?;
            eprintln!("objective {} saved to {}", fit.neg_log_lik(), out.display());
        }
        GpCmd::Predict { model, points } => {
            let fit = gpcore::load_model::<f64>(&model)?;
            let (pts, _) = read_points(&points, false)?;
            let pred = fit.predict_batch(&pts)?;
            let mut out = io::stdout().lock();
            writeln!(out, "y_pred")?;
            for v in pred {
                writeln!(out, "{v}")?;
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Corr(c) => corr(c),
        Command::Testbed(c) => testbed_cmd(c),
        Command::Design(c) => design_cmd(c),
        Command::Bench(c) => bench_cmd(c),
        Command::Gp(c) => gp_cmd(c),
    }
}
