use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mixkrig::bench::{
    make_test_set, positive_cone_gap, q_squared, rmse_corr, run_experiment, ExperimentConfig, Status,
};
use mixkrig::corrparam::{build_uc, FamilySpec};
use mixkrig::testbed::{
    empirical_cross_corr, make_standard_testbed, slice_max_of, CrossCorrEstimate, SlicedFunction,
};

#[test]
fn global_optimum_survives_slicing_and_upending() {
    for f in make_standard_testbed().unwrap() {
        let base = f.base();
        let opt_slice = f.optimum_slice().expect("optimum swapped in");
        assert_eq!(opt_slice, if f.levels() == 4 { 2 } else { 3 });
        let at_opt = f.eval_sliced(opt_slice, &base.opt_pos[1..]).unwrap();
        assert!((at_opt - base.opt_val).abs() < 1e-9, "{}", f.id());

        let rest = f.rest_bounds();
        let res = 41;
        for slice in 1..=f.levels() {
            for i in 0..res {
                for j in 0..res {
                    let u = [i as f64 / (res - 1) as f64, j as f64 / (res - 1) as f64];
                    let v = f.eval_sliced(slice, &rest.from_unit(&u)).unwrap();
                    assert!(v >= base.opt_val - 1e-9, "{} slice {slice}", f.id());
                    if f.upended().contains(&slice) {
                        assert!(v > base.opt_val);
                    }
                }
            }
        }
    }
}

#[test]
fn slice_max_estimate_is_close_to_a_dense_grid() {
    for f in make_standard_testbed().unwrap().into_iter().filter(|f| !f.upended().is_empty()) {
        let rest = f.rest_bounds();
        for &slice in f.upended() {
            let est = f.slice_max(slice).unwrap();
            let pos = f.positions()[slice - 1];
            let mut coarse = f64::MIN;
            for i in 0..100 {
                for j in 0..100 {
                    let u = [i as f64 / 99.0, j as f64 / 99.0];
                    let x = rest.from_unit(&u);
                    coarse = coarse.max(f.base().evaluate(&[pos, x[0], x[1]]));
                }
            }
            let mut dense = f64::MIN;
            let res = 301;
            for i in 0..res {
                for j in 0..res {
                    let u = [i as f64 / (res - 1) as f64, j as f64 / (res - 1) as f64];
                    let x = rest.from_unit(&u);
                    dense = dense.max(f.base().evaluate(&[pos, x[0], x[1]]));
                }
            }
            assert!(est >= coarse - 1e-9);
            assert!(est >= dense * (1.0 - 1e-3), "{} slice {slice}: {est} vs {dense}", f.id());
            assert_eq!(est, slice_max_of(f.base(), 0, pos, 100));
        }
    }
}

#[test]
fn rmse_matches_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let a: Vec<f64> = (0..6).map(|_| rng.gen_range(0.1..3.0)).collect();
        let b: Vec<f64> = (0..6).map(|_| rng.gen_range(0.1..3.0)).collect();
        let hat = build_uc(&a, 4).unwrap();
        let other = build_uc(&b, 4).unwrap();
        let vals = (0..16).map(|k| Some(other.get(k / 4, k % 4))).collect();
        let tilde = CrossCorrEstimate::from_values(4, vals, 0).unwrap();
        let mut sum = 0.0;
        for (i, j) in [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)] {
            sum += (hat.get(i, j) - other.get(i, j)).powi(2);
        }
        assert!((rmse_corr(&hat, &tilde).unwrap() - sum.sqrt()).abs() < 1e-14);
    }
}

#[test]
fn q2_matches_direct_formula() {
    let y: [f64; 6] = [-1.5, -0.5, 0.0, 0.25, 0.75, 1.0];
    let mean = y.iter().sum::<f64>() / 6.0;
    let pred: Vec<f64> = y.iter().map(|v| 2.0 * v - mean).collect();
    let num: f64 = y.iter().zip(&pred).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = y.iter().map(|a| (a - mean) * (a - mean)).sum();
    let q = q_squared(&y, &pred).unwrap();
    // residuals mirror the deviations from the mean, so the score is zero
    assert!((q - (1.0 - num / den)).abs() < 1e-15);
    assert!(q.abs() < 1e-15);
    let shifted: Vec<f64> = y.iter().map(|v| v + 1.0).collect();
    assert!(q_squared(&y, &shifted).unwrap() < 0.0);
}

#[test]
fn test_set_is_replicated_across_slices() {
    let f = SlicedFunction::from_id("ackley", 4).unwrap();
    let t = make_test_set(&f, 1000, 5).unwrap();
    assert_eq!(t.points.len(), 4000);
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4001);
    for k in 0..1000 {
        let first = &t.points[k].x;
        for slice in 1..4 {
            let other = &t.points[slice * 1000 + k].x;
            assert!(first.iter().zip(other).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}

#[test]
fn positive_families_cannot_reach_negative_targets() {
    let cfg = ExperimentConfig::from_toml(
        r#"
functions = ["ackley_upended"]
s_values = [4]
n_values = [4]
families = ["EC", "MC", "LRC2", "IK"]
replications = 3
base_seed = 100
[fit]
starts = 3
[empirical]
resolution = 50
[test_set]
size = 200
"#,
    )
    .unwrap();
    let records = run_experiment(&cfg, Some(2), None).unwrap();
    assert_eq!(records.len(), 1 * 4 * 1 * 3);
    let f = SlicedFunction::from_id("ackley_upended", 4).unwrap();
    let gap = positive_cone_gap(&empirical_cross_corr(&f, 50).unwrap());
    assert!(gap > 0.5);
    for r in &records {
        assert_ne!(r.status, Status::Failed);
        assert!(r.q2.unwrap() <= 1.0 + 1e-12);
        match r.family.as_str() {
            "EC" | "MC" => assert!(r.rmse_corr.unwrap() >= gap - 1e-12),
            "IK" => assert!(r.rmse_corr.is_none()),
            _ => assert!(r.rmse_corr.unwrap() >= 0.0),
        }
    }
    // records are grouped by replication, families in config order
    let order: Vec<(usize, &str)> = records.iter().map(|r| (r.rep, r.family.as_str())).collect();
    assert_eq!(&order[..4], &[(0, "EC"), (0, "MC"), (0, "LRC"), (0, "IK")]);
}

#[test]
fn extracted_matrix_matches_builder() {
    use mixkrig::bench::extract_tau_hat;
    use mixkrig::gpcore::{Categorical, GpFit, KernelConfig, TrainingSet};
    use mixkrig::{Bounds, MixedPoint};

    let pts: Vec<MixedPoint<f64>> = (0..6).map(|k| MixedPoint::new(vec![k as f64 / 6.0], k % 3 + 1)).collect();
    let y = vec![0.1, 0.5, -0.2, 0.9, 0.3, 0.0];
    let train = TrainingSet::new(Bounds::unit(1), 3, pts, y).unwrap();
    let spec = FamilySpec::lrc(3, 2).unwrap();
    let params = vec![1.0, 2.5];
    let cfg = KernelConfig::new(vec![0.4], Some(Categorical { spec, params: params.clone() }), 1e-8).unwrap();
    let fit = GpFit::from_config(train.clone(), cfg, false).unwrap();
    assert_eq!(extract_tau_hat(&fit).unwrap(), spec.build_raw(&params).unwrap());

    let cont = GpFit::from_config(train, KernelConfig::new(vec![0.4], None, 1e-8).unwrap(), false).unwrap();
    assert!(extract_tau_hat(&cont).is_err());
}
