//! Period normalization by linear interpolation and the two amplitude
//! normalizations used by the beat codecs.

use crate::error::{Error, Result};

/// A beat resampled to codeword length together with what is needed to
/// undo the normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSegment {
    pub values: Vec<f64>,
    pub orig_len: usize,
    pub gain: f64,
    /// Absent for gain-shape normalization.
    pub offset: Option<f64>,
}

fn sample_at(x: &[f64], pos: f64) -> f64 {
    let i = pos.floor() as usize;
    if i + 1 >= x.len() {
        return x[x.len() - 1];
    }
    let frac = pos - i as f64;
    if frac == 0.0 {
        x[i]
    } else {
        x[i] + (x[i + 1] - x[i]) * frac
    }
}

fn resample(x: &[f64], len: usize) -> Vec<f64> {
    if x.len() == 1 || len == 1 {
        return vec![x[0]; len];
    }
    let step = (x.len() - 1) as f64 / (len - 1) as f64;
    let mut out: Vec<f64> = (0..len).map(|j| sample_at(x, j as f64 * step)).collect();
    out[len - 1] = x[x.len() - 1];
    out
}

/// Resamples `seg` to `w` points; output `j` sits at position
/// `j * (l - 1) / (w - 1)` of the input. A one-sample segment becomes a
/// constant vector.
pub fn period_normalize(seg: &[f64], w: usize) -> Result<Vec<f64>> {
    if w < 2 {
        return Err(Error::InvalidParameter(format!("codeword length {w} < 2")));
    }
    if seg.is_empty() {
        return Err(Error::Empty("segment"));
    }
    Ok(resample(seg, w))
}

/// Inverse of [`period_normalize`]: resamples `x` back to `l` points.
pub fn period_denormalize(x: &[f64], l: usize) -> Result<Vec<f64>> {
    if l < 1 {
        return Err(Error::InvalidParameter("segment length 0".into()));
    }
    if x.is_empty() {
        return Err(Error::Empty("normalized segment"));
    }
    Ok(resample(x, l))
}

/// Offset = mean, gain = half peak-to-peak floored at 1.
pub fn od_gain_offset(x: &[f64]) -> Result<(f64, f64)> {
    if x.is_empty() {
        return Err(Error::Empty("segment"));
    }
    let offset = x.iter().sum::<f64>() / x.len() as f64;
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok((((hi - lo) / 2.0).max(1.0), offset))
}

/// `(x - o) / g` with the gain and offset of [`od_gain_offset`].
pub fn amplitude_normalize_od(x: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    let (g, o) = od_gain_offset(x)?;
    Ok((apply_od(x, g, o), g, o))
}

pub fn apply_od(x: &[f64], g: f64, o: f64) -> Vec<f64> {
    x.iter().map(|v| (v - o) / g).collect()
}

pub fn invert_od(x: &[f64], g: f64, o: f64) -> Vec<f64> {
    x.iter().map(|v| g * v + o).collect()
}

/// Divides by the L2 norm. An all-zero segment keeps gain 1.
pub fn amplitude_normalize_gsvq(x: &[f64]) -> Result<(Vec<f64>, f64)> {
    if x.is_empty() {
        return Err(Error::Empty("segment"));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok((vec![0.0; x.len()], 1.0));
    }
    Ok((x.iter().map(|v| v / norm).collect(), norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn period_examples() {
        assert_eq!(period_normalize(&[0.0, 2.0], 3).unwrap(), vec![0.0, 1.0, 2.0]);
        let s = [3.0, -1.0, 4.0, 1.5, 9.0];
        assert_eq!(period_normalize(&s, 5).unwrap(), s.to_vec());
        assert_eq!(period_normalize(&[5.0], 4).unwrap(), vec![5.0; 4]);
        assert!(period_normalize(&[1.0], 1).is_err());
        assert!(period_normalize(&[], 4).is_err());
        assert_eq!(period_denormalize(&[0.0, 1.0, 2.0], 2).unwrap(), vec![0.0, 2.0]);
        assert_eq!(period_denormalize(&[7.0, 1.0, 2.0], 1).unwrap(), vec![7.0]);
        assert!(period_denormalize(&[1.0], 0).is_err());
    }

    #[test]
    fn od_examples() {
        assert_eq!(amplitude_normalize_od(&[1.0, 1.0, 1.0]).unwrap(), (vec![0.0; 3], 1.0, 1.0));
        assert_eq!(amplitude_normalize_od(&[0.0, 4.0]).unwrap(), (vec![-1.0, 1.0], 2.0, 2.0));
    }

    #[test]
    fn gsvq_examples() {
        assert_eq!(amplitude_normalize_gsvq(&[3.0, 4.0]).unwrap(), (vec![0.6, 0.8], 5.0));
        assert_eq!(amplitude_normalize_gsvq(&[0.0, 1.0]).unwrap(), (vec![0.0, 1.0], 1.0));
        assert_eq!(amplitude_normalize_gsvq(&[0.0, 0.0]).unwrap(), (vec![0.0, 0.0], 1.0));
    }

    #[test]
    fn affine_segment_round_trips_exactly() {
        let s: Vec<f64> = (0..37).map(|i| 2.5 * i as f64 - 7.0).collect();
        let back = period_denormalize(&period_normalize(&s, 200).unwrap(), s.len()).unwrap();
        for (a, b) in s.iter().zip(&back) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn od_inverse(x in prop::collection::vec(-3000.0f64..3000.0, 1..300)) {
            let (n, g, o) = amplitude_normalize_od(&x).unwrap();
            for (a, b) in x.iter().zip(invert_od(&n, g, o)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn gsvq_unit_norm(x in prop::collection::vec(-3000.0f64..3000.0, 1..300)) {
            prop_assume!(x.iter().any(|&v| v != 0.0));
            let (n, _) = amplitude_normalize_gsvq(&x).unwrap();
            let norm = n.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-9);
        }

        #[test]
        fn endpoints_preserved(x in prop::collection::vec(-3000.0f64..3000.0, 1..300), w in 2usize..400) {
            let y = period_normalize(&x, w).unwrap();
            prop_assert_eq!(y.len(), w);
            prop_assert_eq!(y[0], x[0]);
            prop_assert_eq!(y[w - 1], x[x.len() - 1]);
        }
    }
}
