//! Acceptance checks. Each test prints one `PASS`/`FAIL` line for its
//! criterion and then asserts it.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mixkrig::bench::{
    median_of, q_squared, rmse_corr, run_experiment, run_to_dir, summarize, ExperimentConfig,
};
use mixkrig::corrparam::{
    build_ec, build_mc, build_uc, embed_lrc_in_uc, lrc_loadings, param_count, uc_angles_for_ec3,
    uc_angles_for_mc3, Family, FamilySpec, DEFAULT_CORR_NUGGET, DEFAULT_EMBED_EPS,
};
use mixkrig::gpcore::{concentrated_nll, Categorical, GpFit, KernelConfig, TrainingSet};
use mixkrig::testbed::{empirical_cross_corr, default_positions, default_upend_set, standard_functions, CrossCorrEstimate, SlicedFunction};
use mixkrig::linalg::Mat;
use mixkrig::{Bounds, CorrMatrix, MixedPoint};

fn report(k: u32, ok: bool, detail: &str) {
    println!("CRITERION {k}: {} - {detail}", if ok { "PASS" } else { "FAIL" });
}

#[test]
fn criterion_01_slice_positions() {
    let t0 = Instant::now();
    let printed: [(&str, usize, &[f64]); 8] = [
        ("ackley", 4, &[-32.77, 0.00, 10.92, 32.77]),
        ("ackley", 6, &[-32.77, -19.66, 0.00, 6.55, 19.66, 32.77]),
        ("alpine", 4, &[-10.00, 0.00, 3.33, 10.00]),
        ("alpine", 6, &[-10.0, -6.0, 0.0, 2.0, 6.0, 10.0]),
        ("dcs", 4, &[0.00, 5.00, 6.67, 10.00]),
        ("dcs", 6, &[0.0, 2.0, 5.0, 6.0, 8.0, 10.0]),
        ("double-sum", 4, &[-65.54, 0.00, 21.85, 65.54]),
        ("double-sum", 6, &[-65.54, -39.32, 0.00, 13.11, 39.32, 65.54]),
    ];
    let mut worst = 0.0f64;
    for (name, s, expect) in printed {
        let base = mixkrig::testbed::lookup(name).unwrap();
        let got = default_positions(&base, s).unwrap();
        assert_eq!(got.len(), expect.len());
        for (g, e) in got.iter().zip(expect) {
            worst = worst.max((g - e).abs());
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let ok = worst <= 0.005 && secs < 1.0;
    report(1, ok, &format!("max abs deviation {worst:.4} over 8 rows, {secs:.3} s"));
    assert!(ok);
}

#[test]
fn criterion_02_parameter_counts() {
    let cells: [(Family, Option<usize>, usize, usize); 12] = [
        (Family::Ec, None, 4, 1),
        (Family::Ec, None, 6, 1),
        (Family::Lrc, Some(2), 4, 3),
        (Family::Lrc, Some(2), 6, 5),
        (Family::Mc, None, 4, 4),
        (Family::Mc, None, 6, 6),
        (Family::Lrc, Some(3), 4, 5),
        (Family::Lrc, Some(3), 6, 9),
        (Family::Lrc, Some(4), 6, 12),
        (Family::Lrc, Some(5), 6, 14),
        (Family::Uc, None, 4, 6),
        (Family::Uc, None, 6, 15),
    ];
    let mismatches: Vec<String> = cells
        .iter()
        .filter(|(f, r, s, want)| param_count(*f, *s, *r).ok() != Some(*want))
        .map(|(f, r, s, want)| format!("{f}{} s={s} want {want}", r.map(|k| k.to_string()).unwrap_or_default()))
        .collect();
    let ok = mismatches.is_empty();
    report(2, ok, &format!("12 cells, mismatches: {mismatches:?}"));
    assert!(ok);
}

#[test]
fn criterion_03_negative_correlation_counts() {
    let t0 = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for s in [4, 6] {
        let pairs = s * (s - 1) / 2;
        let want_neg = if s == 4 { 4 } else { 9 };
        for base in standard_functions().into_iter().take(3) {
            let orig = SlicedFunction::new(base.clone(), s, &[]).unwrap();
            let e = empirical_cross_corr(&orig, 100).unwrap();
            let all_pos = e.positive_pairs() == pairs;
            let up = SlicedFunction::new(base, s, &default_upend_set(s).unwrap()).unwrap();
            let neg = empirical_cross_corr(&up, 100).unwrap().negative_pairs();
            ok &= all_pos && neg == want_neg;
            lines.push(format!("{} s={s}: upended {neg}/{pairs} negative, original all positive={all_pos}", orig.id()));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    report(3, ok, &format!("{}; {secs:.1} s", lines.join("; ")));
    assert!(ok);
}

fn random_params(spec: &FamilySpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    spec.bounds::<f64>()
        .into_iter()
        .map(|(lo, hi)| rng.gen_range(lo..=hi))
        .collect()
}

#[test]
fn criterion_04_pdude_suite() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for s in [2usize, 4, 6, 8] {
        let mut specs = vec![FamilySpec::ec(s).unwrap(), FamilySpec::mc(s).unwrap(), FamilySpec::uc(s).unwrap()];
        specs.extend((2..s).map(|r| FamilySpec::lrc(s, r).unwrap()));
        for spec in specs {
            for _ in 0..10_000 {
                let theta = random_params(&spec, &mut rng);
                let p = spec.build(&theta, DEFAULT_CORR_NUGGET).unwrap();
                let m = p.matrix();
                let mut good = m.is_symmetric() && m.cholesky().is_ok();
                for i in 0..s {
                    good &= m[(i, i)] == 1.0;
                    for j in 0..s {
                        good &= m[(i, j)].abs() <= 1.0;
                    }
                }
                if !good {
                    failures.push(format!("{} {theta:?}", spec.label()));
                }
                checked += 1;
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let ok = failures.is_empty() && secs < 120.0;
    report(
        4,
        ok,
        &format!("{checked} matrices, {} failures, {secs:.1} s", failures.len()),
    );
    assert!(ok, "{:?}", failures.iter().take(5).collect::<Vec<_>>());
}

#[test]
fn criterion_05_lrc_embeds_in_uc() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for (s, r) in [(4, 2), (4, 3), (6, 2), (6, 5)] {
        let spec = FamilySpec::lrc(s, r).unwrap();
        for _ in 0..100 {
            let theta = random_params(&spec, &mut rng);
            let lrc = lrc_loadings(&theta, s, r).unwrap().gram();
            let uc = build_uc(&embed_lrc_in_uc(&theta, s, r, DEFAULT_EMBED_EPS).unwrap(), s).unwrap();
            worst = worst.max(uc.matrix().max_abs_diff(&lrc));
        }
    }
    let ok = worst < 1e-6;
    report(5, ok, &format!("max entrywise gap {worst:.2e} over 400 draws"));
    assert!(ok);
}

#[test]
fn criterion_06_closed_form_uc_angles() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let c: f64 = rng.gen_range(0.001..0.999);
        let uc = build_uc(&uc_angles_for_ec3(c), 3).unwrap();
        worst = worst.max(uc.max_abs_diff(&build_ec(c, 3).unwrap()));

        let phi = [rng.gen_range(0.01..3.0), rng.gen_range(0.01..3.0), rng.gen_range(0.01..3.0)];
        let uc = build_uc(&uc_angles_for_mc3(phi), 3).unwrap();
        worst = worst.max(uc.max_abs_diff(&build_mc(&phi, 3).unwrap()));
    }
    let ok = worst < 1e-10;
    report(6, ok, &format!("max entrywise gap {worst:.2e} over 20 EC and 20 MC draws"));
    assert!(ok);
}

/// Naive ordinary kriging with an explicit inverse and determinant, written
/// independently of the library.
struct Naive {
    nll: f64,
    mu: f64,
    rinv: DMatrix<f64>,
    resid: DVector<f64>,
}

fn naive_matern(x1: &[f64], x2: &[f64], ls: &[f64]) -> f64 {
    let mut v = 1.0;
    for k in 0..x1.len() {
        let d = (x1[k] - x2[k]).abs() / ls[k];
        v *= (1.0 + 5f64.sqrt() * d + 5.0 * d * d / 3.0) * (-(5f64.sqrt()) * d).exp();
    }
    v
}

fn naive_uc(theta: &[f64], s: usize) -> DMatrix<f64> {
    let mut l = DMatrix::<f64>::zeros(s, s);
    let mut k = 0;
    for i in 0..s {
        let mut rest = 1.0;
        for j in 0..i {
            l[(i, j)] = rest * theta[k].cos();
            rest *= theta[k].sin();
            k += 1;
        }
        l[(i, i)] = rest;
    }
    let nu = DEFAULT_CORR_NUGGET;
    (&l * l.transpose() + DMatrix::identity(s, s) * nu) / (1.0 + nu)
}

fn naive_fit(pts: &[MixedPoint<f64>], y: &[f64], ls: &[f64], p: &DMatrix<f64>, nugget: f64) -> Naive {
    let n = pts.len();
    let r = DMatrix::from_fn(n, n, |i, j| {
        let base = naive_matern(&pts[i].x, &pts[j].x, ls) * p[(pts[i].level - 1, pts[j].level - 1)];
        if i == j {
            base + nugget
        } else {
            base
        }
    });
    let rinv = r.clone().try_inverse().unwrap();
    let ones = DVector::from_element(n, 1.0);
    let yv = DVector::from_column_slice(y);
    let mu = (ones.transpose() * &rinv * &yv)[0] / (ones.transpose() * &rinv * &ones)[0];
    let resid = &yv - &ones * mu;
    let sigma2 = (resid.transpose() * &rinv * &resid)[0] / n as f64;
    Naive {
        nll: n as f64 * sigma2.ln() + r.determinant().ln(),
        mu,
        rinv,
        resid,
    }
}

#[test]
fn criterion_07_gp_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = 3;
    let mut worst_nll = 0.0f64;
    let mut worst_pred = 0.0f64;
    let mut worst_interp = 0.0f64;
    for _ in 0..30 {
        let n = rng.gen_range(3..=8);
        let pts: Vec<MixedPoint<f64>> = (0..n)
            .map(|k| MixedPoint::new(vec![rng.gen(), rng.gen()], k % s + 1))
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let ls = vec![rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0)];
        let theta: Vec<f64> = (0..3).map(|_| rng.gen_range(0.3..2.8)).collect();
        let cat = Categorical {
            spec: FamilySpec::uc(s).unwrap(),
            params: theta.clone(),
        };
        let p = naive_uc(&theta, s);

        let nugget = 1e-8;
        let cfg = KernelConfig::new(ls.clone(), Some(cat.clone()), nugget).unwrap();
        let lib = concentrated_nll(&cfg, &pts, &y).unwrap();
        let oracle = naive_fit(&pts, &y, &ls, &p, nugget);
        worst_nll = worst_nll.max((lib.objective - oracle.nll).abs());

        let train = TrainingSet::new(Bounds::unit(2), s, pts.clone(), y.clone()).unwrap();
        let fit = GpFit::from_config(train, cfg, false).unwrap();
        for _ in 0..5 {
            let w0 = MixedPoint::new(vec![rng.gen(), rng.gen()], rng.gen_range(1..=s));
            let r0 = DVector::from_fn(n, |i, _| {
                naive_matern(&pts[i].x, &w0.x, &ls) * p[(pts[i].level - 1, w0.level - 1)]
            });
            let want = oracle.mu + (r0.transpose() * &oracle.rinv * &oracle.resid)[0];
            worst_pred = worst_pred.max((fit.predict(&w0).unwrap() - want).abs());
        }

        let cfg0 = KernelConfig::new(ls.clone(), Some(cat), 0.0).unwrap();
        let train = TrainingSet::new(Bounds::unit(2), s, pts.clone(), y.clone()).unwrap();
        let exact = GpFit::from_config(train, cfg0, false).unwrap();
        for (w, v) in pts.iter().zip(&y) {
            worst_interp = worst_interp.max((exact.predict(w).unwrap() - v).abs());
        }
    }
    let ok = worst_nll < 1e-8 && worst_pred < 1e-8 && worst_interp < 1e-6;
    report(
        7,
        ok,
        &format!("30 instances: nll gap {worst_nll:.2e}, prediction gap {worst_pred:.2e}, zero-nugget interpolation error {worst_interp:.2e}"),
    );
    assert!(ok);
}

fn ordering_config(function: &str, n: usize, families: &[&str], seed: u64) -> ExperimentConfig {
    let fams: Vec<String> = families.iter().map(|f| format!("\"{f}\"")).collect();
    ExperimentConfig::from_toml(&format!(
        "functions = [\"{function}\"]\ns_values = [4]\nn_values = [{n}]\nfamilies = [{}]\nreplications = 20\nbase_seed = {seed}\n",
        fams.join(", ")
    ))
    .unwrap()
}

#[test]
fn criterion_08_desk_scale_orderings() {
    let t0 = Instant::now();
    let mut holds = 0;
    let mut lines = Vec::new();
    for seed in [1u64, 1001, 2001] {
        let up = run_experiment(&ordering_config("ackley_upended", 8, &["EC", "MC", "LRC3", "UC"], seed), None, None).unwrap();
        let rows = summarize(&up);
        let id = "ackley_upended_1_3";
        let m = |label| median_of(&rows, id, 4, 8, label, "rmse_corr").unwrap_or(f64::NAN);
        let (ec, mc, lrc3, uc) = (m("EC"), m("MC"), m("LRC3"), m("UC"));
        let upended_ok = lrc3 < ec && lrc3 < mc && uc < ec && uc < mc;

        let orig = run_experiment(&ordering_config("ackley", 4, &["EC", "UC"], seed), None, None).unwrap();
        let rows = summarize(&orig);
        let ec4 = median_of(&rows, "ackley", 4, 4, "EC", "rmse_corr").unwrap_or(f64::NAN);
        let uc4 = median_of(&rows, "ackley", 4, 4, "UC", "rmse_corr").unwrap_or(f64::NAN);
        let orig_ok = ec4 < uc4;

        if upended_ok && orig_ok {
            holds += 1;
        }
        lines.push(format!(
            "seed {seed}: upended n=8 EC {ec:.3} MC {mc:.3} LRC3 {lrc3:.3} UC {uc:.3}; original n=4 EC {ec4:.3} UC {uc4:.3}"
        ));
    }
    let secs = t0.elapsed().as_secs_f64();
    let ok = holds >= 2;
    report(8, ok, &format!("orderings hold on {holds}/3 seeds, {secs:.0} s; {}", lines.join("; ")));
    assert!(ok);
}

#[test]
fn criterion_09_metric_units() {
    let y = [0.5, -1.0, 2.0, 3.5, 0.0];
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let perfect = q_squared(&y, &y).unwrap();
    let flat = q_squared(&y, &[mean; 5]).unwrap();

    let tau = build_uc(&[0.7, 1.9, 2.4, 0.3, 1.1, 2.0], 4).unwrap();
    let vals: Vec<Option<f64>> = (0..16).map(|k| Some(tau.get(k / 4, k % 4))).collect();
    let same = rmse_corr(&tau, &CrossCorrEstimate::from_values(4, vals, 0).unwrap()).unwrap();

    let minus = CorrMatrix::from_matrix(Mat::from_row_major(2, 2, vec![1.0, -1.0, -1.0, 1.0])).unwrap();
    let plus = CrossCorrEstimate::from_values(2, vec![Some(1.0); 4], 0).unwrap();
    let two = rmse_corr(&minus, &plus).unwrap();

    let ok = perfect == 1.0 && flat == 0.0 && same == 0.0 && two == 2.0;
    report(9, ok, &format!("Q²(perfect)={perfect}, Q²(mean)={flat}, RMSE(identical)={same}, RMSE(±1)={two}"));
    assert!(ok);
}

#[test]
fn criterion_10_bench_run_is_deterministic() {
    let cfg = ExperimentConfig::from_toml(
        r#"
functions = ["ackley_upended"]
s_values = [4]
n_values = [4]
families = ["EC", "LRC2"]
replications = 2
base_seed = 42
[fit]
starts = 3
[empirical]
resolution = 40
[test_set]
size = 200
seed = 9
"#,
    )
    .unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_to_dir(&cfg, a.path(), Some(2)).unwrap();
    run_to_dir(&cfg, b.path(), Some(1)).unwrap();
    // second run in the same directory reads the caches
    let cached = run_to_dir(&cfg, a.path(), None).unwrap();

    let body = |p: &std::path::Path| {
        let text = std::fs::read_to_string(p.join("records.csv")).unwrap();
        text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
    };
    let (ra, rb) = (body(a.path()), body(b.path()));
    let ok = ra == rb && cached.len() == 4 && ra.lines().count() == 5;
    report(10, ok, &format!("records.csv identical across runs: {}, {} records", ra == rb, cached.len()));
    assert!(ok);
}
