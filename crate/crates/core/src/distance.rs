//! Fragment dissimilarity measures and the affine fit between fragments.
//!
//! `dist_v1` is `max|d| - mean|d|` over the pointwise difference `d`. It is
//! blind to a constant offset between fragments. `dist_v2` additionally
//! rejects crossing pairs (`Σ|d| != |Σd|`) and penalizes a low minimum
//! difference, which keeps short curved pieces from being matched by
//! straight ones.

use std::cmp::Ordering;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceKind {
    V1,
    V2,
}

/// A distance value. Crossing pairs under `V2` are `Incomparable`, which
/// orders above every finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distance {
    Finite(f64),
    Incomparable,
}

impl Distance {
    pub fn finite(self) -> Option<f64> {
        match self {
            Distance::Finite(v) => Some(v),
            Distance::Incomparable => None,
        }
    }

    pub fn within(self, eps: f64) -> bool {
        matches!(self, Distance::Finite(v) if v <= eps)
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Distance::Finite(a), Distance::Finite(b)) => a.total_cmp(b),
            (Distance::Finite(_), Distance::Incomparable) => Ordering::Less,
            (Distance::Incomparable, Distance::Finite(_)) => Ordering::Greater,
            (Distance::Incomparable, Distance::Incomparable) => Ordering::Equal,
        }
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch(a, b));
    }
    if a == 0 {
        return Err(Error::Empty("fragment"));
    }
    Ok(())
}

/// Accumulated statistics of `|x_i - y_i|` plus the signed sum.
#[derive(Debug, Clone, Copy)]
struct DiffStats {
    abs_max: f64,
    abs_min: f64,
    abs_mean: f64,
    crosses: bool,
}

fn stats_int(x: &[i16], y: &[i16]) -> DiffStats {
    let (mut abs_sum, mut sum, mut hi, mut lo) = (0i64, 0i64, 0i64, i64::MAX);
    for (&a, &b) in x.iter().zip(y) {
        let d = i64::from(a) - i64::from(b);
        let ad = d.abs();
        abs_sum += ad;
        sum += d;
        hi = hi.max(ad);
        lo = lo.min(ad);
    }
    DiffStats {
        abs_max: hi as f64,
        abs_min: lo as f64,
        abs_mean: abs_sum as f64 / x.len() as f64,
        crosses: abs_sum != sum.abs(),
    }
}

fn stats_real(x: &[f64], y: &[f64]) -> DiffStats {
    let (mut abs_sum, mut sum, mut hi, mut lo) = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY);
    for (&a, &b) in x.iter().zip(y) {
        let d = a - b;
        abs_sum += d.abs();
        sum += d;
        hi = hi.max(d.abs());
        lo = lo.min(d.abs());
    }
    DiffStats {
        abs_max: hi,
        abs_min: lo,
        abs_mean: abs_sum / x.len() as f64,
        crosses: abs_sum - sum.abs() > 1e-9 * abs_sum,
    }
}

fn v1(s: DiffStats) -> f64 {
    (s.abs_max - s.abs_mean).max(0.0)
}

fn v2(s: DiffStats) -> Distance {
    if s.crosses {
        Distance::Incomparable
    } else {
        Distance::Finite(v1(s).max((s.abs_mean - s.abs_min).max(0.0)))
    }
}

pub fn dist_v1(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x.len(), y.len())?;
    Ok(v1(stats_real(x, y)))
}

pub fn dist_v2(x: &[f64], y: &[f64]) -> Result<Distance> {
    check_lengths(x.len(), y.len())?;
    Ok(v2(stats_real(x, y)))
}

/// Distance between integer fragments with the crossing test in exact
/// integer arithmetic. Lengths must already agree and be non-zero.
pub fn distance_i16(kind: DistanceKind, x: &[i16], y: &[i16]) -> Distance {
    debug_assert!(x.len() == y.len() && !x.is_empty());
    let s = stats_int(x, y);
    match kind {
        DistanceKind::V1 => Distance::Finite(v1(s)),
        DistanceKind::V2 => v2(s),
    }
}

pub fn distance(kind: DistanceKind, x: &[f64], y: &[f64]) -> Result<Distance> {
    match kind {
        DistanceKind::V1 => dist_v1(x, y).map(Distance::Finite),
        DistanceKind::V2 => dist_v2(x, y),
    }
}

/// Maximum absolute difference.
pub fn dist_linf(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x.len(), y.len())?;
    Ok(x.iter().zip(y).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

/// Euclidean distance.
pub fn dist_l2(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x.len(), y.len())?;
    Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// Least-squares `f ≈ gain * b + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFit {
    pub gain: f64,
    pub offset: f64,
}

/// Ordinary least squares of `f` on `b`. A constant `b` has no slope to
/// fit and yields gain 1 with the mean difference as offset.
pub fn fit_affine(b: &[f64], f: &[f64]) -> Result<AffineFit> {
    check_lengths(b.len(), f.len())?;
    let n = b.len() as f64;
    let mb = b.iter().sum::<f64>() / n;
    let mf = f.iter().sum::<f64>() / n;
    let (mut sbb, mut sbf) = (0.0, 0.0);
    for (&x, &y) in b.iter().zip(f) {
        sbb += (x - mb) * (x - mb);
        sbf += (x - mb) * (y - mf);
    }
    if sbb <= f64::EPSILON * n * (mb * mb).max(1.0) {
        return Ok(AffineFit {
            gain: 1.0,
            offset: mf - mb,
        });
    }
    let gain = sbf / sbb;
    Ok(AffineFit {
        gain,
        offset: mf - gain * mb,
    })
}

/// Mean of `f - b`.
pub fn mean_offset(b: &[f64], f: &[f64]) -> Result<f64> {
    check_lengths(b.len(), f.len())?;
    Ok(f.iter().zip(b).map(|(y, x)| y - x).sum::<f64>() / b.len() as f64)
}
