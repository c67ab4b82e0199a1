//! Latin hypercube and clustered sliced Latin hypercube designs.
//!
//! A CSLHD with `n` points per slice and `s` slices is built per dimension
//! from `n` coarse bins of width `1/n`, each split into `s` fine bins of
//! width `1/(n·s)`:
//!
//! 1. the `n` clusters are matched to the coarse bins by a random permutation;
//! 2. inside a cluster's coarse bin the `s` slices are matched to the fine
//!    sub-bins by another random permutation;
//! 3. each point is jittered uniformly inside its fine bin.
//!
//! The whole design is therefore an LHD on `n·s` bins, every slice collapses
//! to an LHD on `n` bins, and cluster-mates share their coarse bin in every
//! dimension.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::space::{Bounds, MixedPoint};
use crate::Scalar;

#[derive(Debug, Clone, Default)]
pub struct DesignOptions {
    /// Place points at fine-bin midpoints instead of jittering.
    pub centered: bool,
}

/// Points in `[0, 1)^q`, `n_per_slice` of them on each level `1..=s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Design<T> {
    pub points: Vec<MixedPoint<T>>,
    pub n_per_slice: usize,
    pub s: usize,
    pub q: usize,
    pub seed: u64,
}

/// Cluster index (0-based) of every design point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterMap {
    pub assignment: Vec<usize>,
}

impl ClusterMap {
    /// Point indices grouped by cluster.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let k = self.assignment.iter().max().map_or(0, |m| m + 1);
        let mut out = vec![Vec::new(); k];
        for (i, c) in self.assignment.iter().enumerate() {
            out[*c].push(i);
        }
        out
    }
}

/// `(bin + u) / bins`, nudged so it stays inside bin `bin` after rounding.
fn place<T: Scalar>(bin: usize, u: f64, bins: usize) -> T {
    let nb = T::from_usize_lossy(bins);
    let mut x = (T::from_usize_lossy(bin) + T::lit(u)) / nb;
    let lo = T::from_usize_lossy(bin);
    let hi = T::from_usize_lossy(bin + 1);
    for _ in 0..8 {
        let scaled = x * nb;
        if scaled >= hi {
            x = x - x * T::epsilon();
        } else if scaled < lo {
            x = x + x.max(T::epsilon()) * T::epsilon();
        } else {
            break;
        }
    }
    x
}

fn jitter<R: Rng>(rng: &mut R, centered: bool) -> f64 {
    if centered {
        0.5
    } else {
        rng.gen::<f64>()
    }
}

pub fn lhd<T: Scalar>(n: usize, q: usize, seed: u64) -> Result<Design<T>> {
    lhd_with(n, q, seed, &DesignOptions::default())
}

/// Single-slice Latin hypercube: one point per bin `[k/n, (k+1)/n)` in every dimension.
pub fn lhd_with<T: Scalar>(n: usize, q: usize, seed: u64, opts: &DesignOptions) -> Result<Design<T>> {
    if n < 1 || q < 1 {
        return Err(Error::Domain(format!("LHD needs n >= 1 and q >= 1 (got n={n}, q={q})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = vec![vec![T::zero(); q]; n];
    for d in 0..q {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        for (i, b) in perm.into_iter().enumerate() {
            coords[i][d] = place(b, jitter(&mut rng, opts.centered), n);
        }
    }
    Ok(Design {
        points: coords.into_iter().map(|x| MixedPoint::new(x, 1)).collect(),
        n_per_slice: n,
        s: 1,
        q,
        seed,
    })
}

pub fn cslhd<T: Scalar>(n: usize, s: usize, q: usize, seed: u64) -> Result<(Design<T>, ClusterMap)> {
    cslhd_with(n, s, q, seed, &DesignOptions::default())
}

/// Clustered sliced LHD; points are ordered slice-major (`(level-1)·n + cluster`).
pub fn cslhd_with<T: Scalar>(
    n: usize,
    s: usize,
    q: usize,
    seed: u64,
    opts: &DesignOptions,
) -> Result<(Design<T>, ClusterMap)> {
    if n < 1 || s < 2 || q < 1 {
        return Err(Error::Domain(format!(
            "CSLHD needs n >= 1, s >= 2, q >= 1 (got n={n}, s={s}, q={q})"
        )));
    }
    let total = n * s;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = vec![vec![T::zero(); q]; total];
    for d in 0..q {
        let mut coarse: Vec<usize> = (0..n).collect();
        coarse.shuffle(&mut rng);
        for (cluster, cb) in coarse.into_iter().enumerate() {
            let mut sub: Vec<usize> = (0..s).collect();
            sub.shuffle(&mut rng);
            for (slice, fb) in sub.into_iter().enumerate() {
                let fine = cb * s + fb;
                coords[slice * n + cluster][d] = place(fine, jitter(&mut rng, opts.centered), total);
            }
        }
    }
    let points = coords
        .into_iter()
        .enumerate()
        .map(|(i, x)| MixedPoint::new(x, i / n + 1))
        .collect();
    let assignment = (0..total).map(|i| i % n).collect();
    Ok((
        Design {
            points,
            n_per_slice: n,
            s,
            q,
            seed,
        },
        ClusterMap { assignment },
    ))
}

/// Maps unit-cube design coordinates into `bounds`.
pub fn scale_to_bounds<T: Scalar>(design: &Design<T>, bounds: &Bounds<T>) -> Result<Vec<MixedPoint<T>>> {
    if bounds.dim() != design.q {
        return Err(Error::Arity {
            what: "bounds dimensions",
            expected: design.q,
            got: bounds.dim(),
        });
    }
    Ok(design
        .points
        .iter()
        .map(|p| MixedPoint::new(bounds.from_unit(&p.x), p.level))
        .collect())
}

/// Inverse of [`scale_to_bounds`].
pub fn unscale_from_bounds<T: Scalar>(points: &[MixedPoint<T>], bounds: &Bounds<T>) -> Vec<MixedPoint<T>> {
    points
        .iter()
        .map(|p| MixedPoint::new(bounds.to_unit(&p.x), p.level))
        .collect()
}

fn fine_bin<T: Scalar>(x: T, bins: usize) -> usize {
    (x * T::from_usize_lossy(bins)).floor().to_usize().unwrap_or(usize::MAX)
}

fn invalid(property: &'static str, detail: String) -> Error {
    Error::InvalidDesign { property, detail }
}

impl<T: Scalar> Design<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks every structural property, reporting the first one violated.
    ///
    /// For `s >= 2` this includes the cluster property: grouping points by
    /// their coarse bin in every dimension must give groups holding exactly
    /// one point of each slice.
    pub fn validate(&self) -> Result<()> {
        let (n, s, q) = (self.n_per_slice, self.s, self.q);
        let total = n * s;
        for (i, p) in self.points.iter().enumerate() {
            if p.x.len() != q {
                return Err(invalid("dimension", format!("point {} has {} coordinates, expected {q}", i + 1, p.x.len())));
            }
            if let Some(v) = p.x.iter().find(|v| !(**v >= T::zero() && **v < T::one())) {
                return Err(invalid("coordinate range", format!("point {} has coordinate {v} outside [0, 1)", i + 1)));
            }
            if p.level < 1 || p.level > s {
                return Err(invalid("slice index", format!("point {} has slice {} outside 1..={s}", i + 1, p.level)));
            }
        }
        let mut counts = vec![0usize; s];
        for p in &self.points {
            counts[p.level - 1] += 1;
        }
        if let Some((k, c)) = counts.iter().enumerate().find(|(_, c)| **c != n) {
            return Err(invalid("slice sizes", format!("slice {} has {c} points, expected {n}", k + 1)));
        }
        for d in 0..q {
            let mut seen = vec![false; total];
            for p in &self.points {
                let b = fine_bin(p.x[d], total);
                if b >= total || seen[b] {
                    return Err(invalid("full-design LHD", format!("dimension {} bin {b} occupied twice", d + 1)));
                }
                seen[b] = true;
            }
        }
        if s >= 2 {
            for level in 1..=s {
                for d in 0..q {
                    let mut seen = vec![false; n];
                    for p in self.points.iter().filter(|p| p.level == level) {
                        let b = fine_bin(p.x[d], total) / s;
                        if seen[b] {
                            return Err(invalid(
                                "slice LHD",
                                format!("slice {level}, dimension {}: coarse bin {b} occupied twice", d + 1),
                            ));
                        }
                        seen[b] = true;
                    }
                }
            }
            let mut groups: std::collections::BTreeMap<Vec<usize>, Vec<usize>> = Default::default();
            for p in &self.points {
                let key: Vec<usize> = p.x.iter().map(|v| fine_bin(*v, total) / s).collect();
                groups.entry(key).or_default().push(p.level);
            }
            for (key, mut levels) in groups {
                levels.sort_unstable();
                if levels != (1..=s).collect::<Vec<_>>() {
                    return Err(invalid(
                        "cluster structure",
                        format!("coarse cell {key:?} holds slices {levels:?}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// CSV with header `slice,x1..xq` and, when `bounds` is given, the
    /// problem coordinates `p1..pq`.
    pub fn write_csv<W: Write>(&self, writer: W, bounds: Option<&Bounds<T>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["slice".to_string()];
        header.extend((1..=self.q).map(|k| format!("x{k}")));
        if bounds.is_some() {
            header.extend((1..=self.q).map(|k| format!("p{k}")));
        }
        w.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![p.level.to_string()];
            row.extend(p.x.iter().map(|v| v.to_string()));
            if let Some(b) = bounds {
                row.extend(b.from_unit(&p.x).iter().map(|v| v.to_string()));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a design CSV and validates it; the seed is not stored in the
    /// file and is set to 0.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.get(0) != Some("slice") {
            return Err(invalid("header", "first column must be `slice`".into()));
        }
        let q = header.iter().skip(1).take_while(|h| h.starts_with('x')).count();
        if q == 0 {
            return Err(invalid("header", "no x1..xq columns".into()));
        }
        for (k, h) in header.iter().skip(1).take(q).enumerate() {
            if h != format!("x{}", k + 1) {
                return Err(invalid("header", format!("expected column x{}, found `{h}`", k + 1)));
            }
        }
        let mut points = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let level: usize = rec
                .get(0)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| invalid("slice index", format!("row {}: bad slice", row + 1)))?;
            let mut x = Vec::with_capacity(q);
            for k in 0..q {
                let v: f64 = rec
                    .get(k + 1)
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| invalid("coordinate range", format!("row {}: bad x{}", row + 1, k + 1)))?;
                x.push(T::lit(v));
            }
            points.push(MixedPoint::new(x, level));
        }
        if points.is_empty() {
            return Err(invalid("slice sizes", "design has no points".into()));
        }
        let s = points.iter().map(|p| p.level).max().unwrap_or(1).max(1);
        let n = points.len() / s;
        let design = Design {
            points,
            n_per_slice: n,
            s,
            q,
            seed: 0,
        };
        if design.points.len() != n * s {
            return Err(invalid("slice sizes", format!("{} points cannot split into {s} equal slices", design.points.len())));
        }
        design.validate()?;
        Ok(design)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bins(design: &Design<f64>, d: usize, bins: usize, level: Option<usize>) -> Vec<usize> {
        let mut v: Vec<usize> = design
            .points
            .iter()
            .filter(|p| level.is_none_or(|l| p.level == l))
            .map(|p| (p.x[d] * bins as f64).floor() as usize)
            .collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn lhd_bins_are_permutations() {
        let d: Design<f64> = lhd(5, 2, 11).unwrap();
        for k in 0..2 {
            assert_eq!(bins(&d, k, 5, None), vec![0, 1, 2, 3, 4]);
        }
        let single: Design<f64> = lhd(1, 3, 1).unwrap();
        assert_eq!(single.len(), 1);
        assert!(single.points[0].x.iter().all(|v| (0.0..1.0).contains(v)));
        single.validate().unwrap();
    }

    #[test]
    fn lhd_determinism() {
        let a: Design<f64> = lhd(6, 3, 7).unwrap();
        let b: Design<f64> = lhd(6, 3, 7).unwrap();
        let c: Design<f64> = lhd(6, 3, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn cslhd_example_structure() {
        let (d, cm): (Design<f64>, _) = cslhd(4, 4, 2, 3).unwrap();
        assert_eq!(d.len(), 16);
        for k in 0..2 {
            assert_eq!(bins(&d, k, 16, None), (0..16).collect::<Vec<_>>());
            for level in 1..=4 {
                let mut coarse: Vec<usize> = bins(&d, k, 16, Some(level)).iter().map(|b| b / 4).collect();
                coarse.sort_unstable();
                assert_eq!(coarse, vec![0, 1, 2, 3]);
            }
        }
        assert!(cm.clusters().iter().all(|c| c.len() == 4));
        d.validate().unwrap();
    }

    #[test]
    fn cslhd_single_cluster() {
        let (d, _): (Design<f64>, _) = cslhd(1, 3, 2, 5).unwrap();
        assert_eq!(d.len(), 3);
        for k in 0..2 {
            assert_eq!(bins(&d, k, 3, None), vec![0, 1, 2]);
        }
    }

    #[test]
    fn centered_points_sit_mid_bin() {
        let (d, _): (Design<f64>, _) = cslhd_with(2, 2, 1, 0, &DesignOptions { centered: true }).unwrap();
        let mut xs: Vec<f64> = d.points.iter().map(|p| p.x[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn scale_examples() {
        let d: Design<f64> = lhd(4, 2, 1).unwrap();
        let unit = Bounds::unit(2);
        assert_eq!(scale_to_bounds(&d, &unit).unwrap(), d.points);
        let wide = Bounds::new(vec![(-10.0, 10.0), (-10.0, 10.0)]).unwrap();
        assert_eq!(wide.from_unit(&[0.5, 0.5]), vec![0.0, 0.0]);
        assert!(scale_to_bounds(&d, &Bounds::unit(3)).is_err());
    }

    #[test]
    fn validation_names_property() {
        let (mut d, _): (Design<f64>, _) = cslhd(3, 2, 2, 9).unwrap();
        d.points[0].x[0] = 1.0;
        match d.validate() {
            Err(Error::InvalidDesign { property, .. }) => assert_eq!(property, "coordinate range"),
            other => panic!("{other:?}"),
        }
        let (mut d, _): (Design<f64>, _) = cslhd(3, 2, 2, 9).unwrap();
        let x = d.points[1].x[0];
        d.points[0].x[0] = x;
        match d.validate() {
            Err(Error::InvalidDesign { property, .. }) => assert_eq!(property, "full-design LHD"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_validates() {
        let (d, _): (Design<f64>, _) = cslhd(4, 3, 2, 21).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf, None).unwrap();
        let back: Design<f64> = Design::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.points, d.points);
        assert_eq!((back.n_per_slice, back.s, back.q), (4, 3, 2));
    }

    #[test]
    fn csv_import_rejects_unclustered_design() {
        // each slice is an LHD and the union is an LHD, but slice mates do not share coarse bins
        let text = "slice,x1,x2\n1,0.1,0.1\n1,0.6,0.6\n2,0.3,0.8\n2,0.8,0.3\n";
        match Design::<f64>::read_csv(text.as_bytes()) {
            Err(Error::InvalidDesign { property, .. }) => assert_eq!(property, "cluster structure"),
            other => panic!("{other:?}"),
        }
        let text = "slice,x1\n1,0.1\n1,0.2\n2,0.6\n";
        match Design::<f64>::read_csv(text.as_bytes()) {
            Err(Error::InvalidDesign { property, .. }) => assert_eq!(property, "slice sizes"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn f32_designs() {
        let (d, _): (Design<f32>, _) = cslhd(8, 6, 3, 2).unwrap();
        d.validate().unwrap();
    }
}
