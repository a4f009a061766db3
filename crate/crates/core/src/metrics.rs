//! Rate and distortion metrics.
//!
//! Quantities with a possibly vanishing denominator are [`Value`]s so that
//! infinities and undefined results never masquerade as numbers.

use std::fmt;

use crate::error::{Error, Result};
use crate::rpeak::{detect_rpeaks_signal, RPeakConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Finite(f64),
    Infinite,
    Undefined,
}

impl Value {
    pub fn finite(self) -> Option<f64> {
        match self {
            Value::Finite(v) => Some(v),
            _ => None,
        }
    }

    fn ratio(num: f64, den: f64) -> Value {
        if den != 0.0 {
            Value::Finite(num / den)
        } else if num == 0.0 {
            Value::Undefined
        } else {
            Value::Infinite
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Finite(v) => write!(f, "{}", format_g6(*v)),
            Value::Infinite => f.write_str("inf"),
            Value::Undefined => f.write_str("undefined"),
        }
    }
}

/// `%g`-style rendering with 6 significant digits.
pub fn format_g6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    // The exponent comes from the rounded mantissa so that carries such as
    // 999999.7 -> 1e+06 pick the right notation.
    let sci = format!("{:.5e}", v);
    let (mantissa, e) = sci.split_once('e').expect("scientific format");
    let e: i32 = e.parse().expect("exponent");
    if (-4..6).contains(&e) {
        trim(format!("{:.*}", (5 - e).max(0) as usize, v))
    } else {
        format!("{}e{}{:02}", trim(mantissa.to_string()), if e < 0 { '-' } else { '+' }, e.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionReport {
    pub prd: Value,
    pub prdn: Value,
    pub rmse: f64,
    pub rmsep: Value,
    pub snr_db: Value,
    pub mae: f64,
    pub cc: Value,
    pub n: usize,
}

/// Original over compressed size.
pub fn compression_ratio(original_bits: u64, compressed_bits: u64) -> Result<f64> {
    if compressed_bits == 0 || original_bits == 0 {
        return Err(Error::InvalidParameter("bit counts must be positive".into()));
    }
    Ok(original_bits as f64 / compressed_bits as f64)
}

/// CR / PRD.
pub fn quality_score(cr: f64, prd: f64) -> Value {
    if prd > 0.0 {
        Value::Finite(cr / prd)
    } else {
        Value::Undefined
    }
}

/// Mean beat peak-to-peak amplitude: `max - min` between consecutive
/// detected R-peaks, or over the whole signal when no full beat is found.
pub fn peak_to_peak(x: &[f64], fs: f64) -> f64 {
    let span = |s: &[f64]| {
        let (lo, hi) = s
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    };
    let peaks = detect_rpeaks_signal(x, fs, &RPeakConfig::default()).unwrap_or_default();
    if peaks.len() < 2 {
        return span(x);
    }
    let beats: Vec<f64> = peaks.windows(2).map(|w| span(&x[w[0]..=w[1]])).collect();
    beats.iter().sum::<f64>() / beats.len() as f64
}

/// All distortion metrics of `xhat` against `x`. `fs` drives the beat
/// detection behind the peak-to-peak amplitude.
pub fn distortion_report(x: &[f64], xhat: &[f64], fs: f64) -> Result<DistortionReport> {
    if x.len() != xhat.len() {
        return Err(Error::LengthMismatch(x.len(), xhat.len()));
    }
    if x.is_empty() {
        return Err(Error::Empty("signal"));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let mean_hat = xhat.iter().sum::<f64>() / n;
    let (mut err2, mut energy, mut var, mut var_hat, mut cov, mut mae) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0f64);
    for (&a, &b) in x.iter().zip(xhat) {
        let e = a - b;
        err2 += e * e;
        energy += a * a;
        var += (a - mean) * (a - mean);
        var_hat += (b - mean_hat) * (b - mean_hat);
        cov += (a - mean) * (b - mean_hat);
        mae = mae.max(e.abs());
    }
    let sqrt_pct = |v: Value| match v {
        Value::Finite(r) => Value::Finite(100.0 * r.sqrt()),
        other => other,
    };
    let prd = sqrt_pct(Value::ratio(err2, energy));
    let prdn = sqrt_pct(Value::ratio(err2, var));
    let rmse = (err2 / n).sqrt();
    let snr_db = match Value::ratio(var, err2) {
        Value::Finite(r) if r > 0.0 => Value::Finite(10.0 * r.log10()),
        Value::Finite(_) => Value::Infinite,
        other => other,
    };
    let p2p = peak_to_peak(x, fs);
    let rmsep = match Value::ratio(rmse, p2p) {
        Value::Finite(r) => Value::Finite(100.0 * r),
        other => other,
    };
    let cc = if var > 0.0 && var_hat > 0.0 {
        Value::Finite((cov / (var.sqrt() * var_hat.sqrt())).clamp(-1.0, 1.0))
    } else {
        Value::Undefined
    };
    Ok(DistortionReport {
        prd,
        prdn,
        rmse,
        rmsep,
        snr_db,
        mae,
        cc,
        n: x.len(),
    })
}

pub fn distortion_report_i16(x: &[i16], xhat: &[i16], fs: f64) -> Result<DistortionReport> {
    let f = |s: &[i16]| s.iter().map(|&v| f64::from(v)).collect::<Vec<_>>();
    distortion_report(&f(x), &f(xhat), fs)
}
