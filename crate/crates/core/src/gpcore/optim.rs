//! Derivative-free bounded minimization on the unit cube.
//!
//! Nelder–Mead with dimension-adaptive coefficients; every trial point is
//! projected back onto `[0, 1]^d`. Starts for the multi-start driver come
//! from a maximin-selected Latin hypercube.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::Scalar;

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    pub initial_step: f64,
    /// Stop when the simplex spread in objective falls below this.
    pub ftol: f64,
    /// ... and its coordinate spread below this.
    pub xtol: f64,
    /// Simplex rebuilds at the incumbent after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            initial_step: 0.15,
            ftol: 1e-9,
            xtol: 1e-7,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub f: T,
    pub evals: usize,
}

fn project<T: Scalar>(x: &mut [T]) {
    for v in x.iter_mut() {
        *v = v.max(T::zero()).min(T::one());
    }
}

fn sanitize<T: Scalar>(f: T) -> T {
    if f.is_nan() {
        T::infinity()
    } else {
        f
    }
}

/// Minimizes `f` over `[0, 1]^d` starting from `x0`.
///
/// The returned value is never worse than `f(x0)`.
pub fn nelder_mead_unit_box<T: Scalar>(
    mut f: impl FnMut(&[T]) -> T,
    x0: &[T],
    opts: &NelderMeadOptions,
) -> Minimum<T> {
    let d = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[T], evals: &mut usize| {
        *evals += 1;
        sanitize(f(x))
    };

    let mut start = x0.to_vec();
    project(&mut start);
    let f0 = eval(&start, &mut evals);
    if d == 0 {
        return Minimum {
            x: start,
            f: f0,
            evals,
        };
    }

    let df = d as f64;
    let alpha = T::one();
    let gamma = T::lit(1.0 + 2.0 / df);
    let rho = T::lit(0.75 - 1.0 / (2.0 * df));
    let sigma = T::lit(1.0 - 1.0 / df.max(2.0));

    let mut best = (start.clone(), f0);
    let mut step = T::lit(opts.initial_step);
    let mut restarts_left = opts.restarts;

    'outer: loop {
        // simplex around the incumbent
        let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(d + 1);
        simplex.push(best.clone());
        for i in 0..d {
            let mut x = best.0.clone();
            x[i] = if x[i] + step <= T::one() {
                x[i] + step
            } else {
                x[i] - step
            };
            let fx = eval(&x, &mut evals);
            simplex.push((x, fx));
        }
        let round_start = best.1;

        loop {
            simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
            if simplex[0].1 < best.1 {
                best = simplex[0].clone();
            }
            if evals >= opts.max_evals {
                break 'outer;
            }
            let fbest = simplex[0].1;
            let fworst = simplex[d].1;
            let fspread = if fworst.is_finite() {
                (fworst - fbest).abs()
            } else {
                T::infinity()
            };
            let xspread = (1..=d)
                .flat_map(|k| {
                    let s0 = &simplex[0].0;
                    simplex[k].0.iter().zip(s0).map(|(a, b)| (*a - *b).abs())
                })
                .fold(T::zero(), |m, v| m.max(v));
            if fspread <= T::lit(opts.ftol) * (T::one() + fbest.abs()) && xspread <= T::lit(opts.xtol)
                || xspread <= T::lit(opts.xtol * 1e-3)
            {
                break;
            }

            let mut centroid = vec![T::zero(); d];
            for (x, _) in &simplex[..d] {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c = *c + *v;
                }
            }
            let inv = T::one() / T::from_usize_lossy(d);
            centroid.iter_mut().for_each(|c| *c = *c * inv);

            let towards = |from: &[T], to: &[T], t: T| -> Vec<T> {
                let mut x: Vec<T> = from.iter().zip(to).map(|(a, b)| *a + t * (*b - *a)).collect();
                project(&mut x);
                x
            };

            let worst = simplex[d].0.clone();
            let xr = towards(&centroid, &worst, -alpha);
            let fr = eval(&xr, &mut evals);

            if fr < simplex[0].1 {
                let xe = towards(&centroid, &xr, gamma);
                let fe = eval(&xe, &mut evals);
                simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[d - 1].1 {
                simplex[d] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[d].1 {
                    let xc = towards(&centroid, &xr, rho);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                } else {
                    let xc = towards(&centroid, &worst, rho);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                };
                if fc < fr.min(simplex[d].1) {
                    simplex[d] = (xc, fc);
                } else {
                    let x0 = simplex[0].0.clone();
                    for k in 1..=d {
                        let xs = towards(&x0, &simplex[k].0, sigma);
                        let fs = eval(&xs, &mut evals);
                        simplex[k] = (xs, fs);
                    }
                }
            }
        }

        let improved = round_start - best.1 > T::lit(opts.ftol) * (T::one() + best.1.abs());
        if restarts_left == 0 || (!improved && restarts_left < opts.restarts) {
            break;
        }
        restarts_left -= 1;
        step = step * T::lit(0.5);
    }

    Minimum {
        x: best.0,
        f: best.1,
        evals,
    }
}

/// `count` points in `[0, 1]^d` from the best of `candidates` random Latin
/// hypercubes under the maximin (largest smallest pairwise distance) rule.
pub fn maximin_starts<T: Scalar, R: Rng>(
    count: usize,
    d: usize,
    candidates: usize,
    rng: &mut R,
) -> Vec<Vec<T>> {
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for _ in 0..candidates.max(1) {
        let mut pts = vec![vec![0.0f64; d]; count];
        for k in 0..d {
            let mut perm: Vec<usize> = (0..count).collect();
            perm.shuffle(rng);
            for (i, p) in perm.into_iter().enumerate() {
                pts[i][k] = (p as f64 + rng.gen::<f64>()) / count as f64;
            }
        }
        let mut min_d = f64::INFINITY;
        for i in 0..count {
            for j in 0..i {
                let dist: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                min_d = min_d.min(dist);
            }
        }
        if best.as_ref().is_none_or(|(m, _)| min_d > *m) {
            best = Some((min_d, pts));
        }
    }
    best.map(|(_, pts)| {
        pts.into_iter()
            .map(|p| p.into_iter().map(T::lit).collect())
            .collect()
    })
    .unwrap_or_default()
}
