//! Band-pass preprocessing and Elgendi's two-moving-average QRS detector.
//!
//! The band-pass is a third-order Butterworth designed from its analog
//! prototype (band transform, bilinear map with pre-warped edges) and run
//! causally as three second-order sections. The detector's peak indices are
//! used on the raw timeline without group-delay compensation, so every codec
//! segments the same way.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;

use crate::error::{Error, Result};

const ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RPeakConfig {
    pub w1_ms: f64,
    pub w2_ms: f64,
    pub beta: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Default for RPeakConfig {
    fn default() -> Self {
        Self {
            w1_ms: 97.0,
            w2_ms: 611.0,
            beta: 0.08,
            f_lo: 8.0,
            f_hi: 20.0,
        }
    }
}

impl RPeakConfig {
    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(self.w1_ms > 0.0 && self.w1_ms < self.w2_ms) {
            return Err(Error::InvalidParameter(format!(
                "moving-average windows {} ms / {} ms",
                self.w1_ms, self.w2_ms
            )));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidParameter(format!("beta {}", self.beta)));
        }
        check_band(fs, self.f_lo, self.f_hi)
    }

    /// Window lengths in samples, `round(ms * fs / 1000)`, at least 1.
    pub fn windows(&self, fs: f64) -> (usize, usize) {
        let w = |ms: f64| ((ms * fs / 1000.0).round() as usize).max(1);
        (w(self.w1_ms), w(self.w2_ms))
    }
}

fn check_band(fs: f64, f_lo: f64, f_hi: f64) -> Result<()> {
    if !(fs > 0.0 && f_lo > 0.0 && f_lo < f_hi && f_hi < fs / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "band {f_lo}-{f_hi} Hz at fs {fs} Hz"
        )));
    }
    Ok(())
}

/// One biquad `b0 + b1 z^-1 + b2 z^-2 / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ButterworthBandpass {
    pub sections: Vec<Biquad>,
    pub fs: f64,
}

impl ButterworthBandpass {
    pub fn design(fs: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        check_band(fs, f_lo, f_hi)?;
        let fs2 = 2.0 * fs;
        let warp = |f: f64| fs2 * (PI * f / fs).tan();
        let (w_lo, w_hi) = (warp(f_lo), warp(f_hi));
        let bw = w_hi - w_lo;
        let w0_sq = w_lo * w_hi;

        // Analog low-pass prototype poles on the unit circle, left half-plane.
        let proto: Vec<Complex64> = (0..ORDER)
            .map(|k| {
                let theta = PI * (2 * k + ORDER + 1) as f64 / (2 * ORDER) as f64;
                Complex64::from_polar(1.0, theta)
            })
            .collect();

        // Low-pass to band-pass: each prototype pole becomes a pair.
        let mut analog = Vec::with_capacity(2 * ORDER);
        for p in &proto {
            let p_lh = p * (bw / 2.0);
            let root = (p_lh * p_lh - w0_sq).sqrt();
            analog.push(p_lh + root);
            analog.push(p_lh - root);
        }

        // Bilinear map. The ORDER zeros at s = 0 go to z = 1 and the ORDER
        // zeros at infinity go to z = -1.
        let digital: Vec<Complex64> = analog.iter().map(|&p| (fs2 + p) / (fs2 - p)).collect();
        let denom = analog
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &p| acc * (fs2 - p));
        let gain = bw.powi(ORDER as i32) * fs2.powi(ORDER as i32) / denom.re;

        // Pair conjugates: keep the upper-half-plane member of each pair.
        let upper: Vec<Complex64> = digital.iter().copied().filter(|p| p.im > 0.0).collect();
        let mut real: Vec<f64> = digital
            .iter()
            .filter(|p| p.im.abs() <= 1e-12)
            .map(|p| p.re)
            .collect();
        real.sort_by(|a, b| a.partial_cmp(b).expect("finite poles"));
        if !real.len().is_multiple_of(2) || upper.len() * 2 + real.len() != 2 * ORDER {
            return Err(Error::InvalidParameter(format!(
                "band {f_lo}-{f_hi} Hz yields unpaired poles"
            )));
        }
        let mut denominators: Vec<[f64; 3]> = upper
            .iter()
            .map(|p| [1.0, -2.0 * p.re, p.norm_sqr()])
            .collect();
        for pair in real.chunks(2) {
            denominators.push([1.0, -(pair[0] + pair[1]), pair[0] * pair[1]]);
        }
        // Poles farthest from the unit circle first.
        denominators.sort_by(|x, y| x[2].partial_cmp(&y[2]).expect("finite"));

        let sections = denominators
            .into_iter()
            .enumerate()
            .map(|(i, a)| {
                let g = if i == 0 { gain } else { 1.0 };
                Biquad {
                    b: [g, 0.0, -g],
                    a,
                }
            })
            .collect();
        Ok(Self { sections, fs })
    }

    /// Causal filtering from zero initial state (transposed direct form II).
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[1] * out + z2;
                z2 = s.b[2] * input - s.a[2] * out;
                *v = out;
            }
        }
        y
    }

    /// |H(e^{jω})| at frequency `f` Hz.
    pub fn magnitude_at(&self, f: f64) -> f64 {
        let w = 2.0 * PI * f / self.fs;
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        self.sections
            .iter()
            .map(|s| {
                let num = s.b[0] + z1 * s.b[1] + z2 * s.b[2];
                let den = s.a[0] + z1 * s.a[1] + z2 * s.a[2];
                (num / den).norm()
            })
            .product()
    }
}

pub fn bandpass_butterworth3(x: &[f64], fs: f64, f_lo: f64, f_hi: f64) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::Empty("band-pass input"));
    }
    Ok(ButterworthBandpass::design(fs, f_lo, f_hi)?.filter(x))
}

/// Centered moving average; windows are truncated at the edges.
fn moving_average(x: &[f64], w: usize) -> Vec<f64> {
    let n = x.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &v in x {
        prefix.push(prefix.last().copied().unwrap_or(0.0) + v);
    }
    let left = w / 2;
    let right = w - 1 - left;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Elgendi QRS detection on a band-passed signal. Returns strictly ascending
/// peak indices at least `w1` samples apart.
pub fn detect_rpeaks(filtered: &[f64], fs: f64, cfg: &RPeakConfig) -> Result<Vec<usize>> {
    cfg.validate(fs)?;
    if filtered.is_empty() {
        return Ok(Vec::new());
    }
    let (w1, w2) = cfg.windows(fs);
    let squared: Vec<f64> = filtered.iter().map(|v| v * v).collect();
    let ma_peak = moving_average(&squared, w1);
    let ma_beat = moving_average(&squared, w2);
    let alpha = cfg.beta * squared.iter().sum::<f64>() / squared.len() as f64;

    let mut peaks: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < filtered.len() {
        if ma_peak[i] <= ma_beat[i] + alpha {
            i += 1;
            continue;
        }
        let start = i;
        while i < filtered.len() && ma_peak[i] > ma_beat[i] + alpha {
            i += 1;
        }
        if i - start < w1 {
            continue;
        }
        let peak = (start..i)
            .max_by(|&a, &b| {
                filtered[a]
                    .abs()
                    .partial_cmp(&filtered[b].abs())
                    .expect("finite signal")
                    .then(b.cmp(&a))
            })
            .expect("non-empty block");
        match peaks.last_mut() {
            Some(last) if peak - *last < w1 => {
                if filtered[peak].abs() > filtered[*last].abs() {
                    *last = peak;
                }
            }
            _ => peaks.push(peak),
        }
    }
    Ok(peaks)
}

/// Splits `0..n` at the R-peaks into a lossless partition. Pieces longer
/// than `max_len` are cut into `max_len`-sample chunks plus a remainder.
pub fn segment_by_rpeaks(n: usize, rpeaks: &[usize], max_len: usize) -> Result<Vec<Range<usize>>> {
    if max_len == 0 {
        return Err(Error::InvalidParameter("max segment length 0".into()));
    }
    if rpeaks.windows(2).any(|w| w[0] >= w[1]) || rpeaks.last().is_some_and(|&p| p >= n) {
        return Err(Error::InvalidParameter(
            "r-peaks must be strictly ascending and in range".into(),
        ));
    }
    let mut bounds = vec![0];
    if rpeaks.len() >= 2 {
        bounds.extend(rpeaks.iter().copied().filter(|&p| p > 0));
    }
    bounds.push(n);

    let mut out = Vec::new();
    for w in bounds.windows(2) {
        let mut s = w[0];
        while s < w[1] {
            let e = (s + max_len).min(w[1]);
            out.push(s..e);
            s = e;
        }
    }
    Ok(out)
}

/// Band-pass, detect and segment in one call.
pub fn detect_segments(
    samples: &[i16],
    fs: f64,
    cfg: &RPeakConfig,
    max_len: usize,
) -> Result<Vec<Range<usize>>> {
    segment_by_rpeaks(samples.len(), &detect_rpeaks_raw(samples, fs, cfg)?, max_len)
}

/// Peaks of a raw ADC signal: band-pass with the configured cut-offs, then
/// detect.
pub fn detect_rpeaks_raw(samples: &[i16], fs: f64, cfg: &RPeakConfig) -> Result<Vec<usize>> {
    let x: Vec<f64> = samples.iter().map(|&s| f64::from(s)).collect();
    detect_rpeaks_signal(&x, fs, cfg)
}

pub fn detect_rpeaks_signal(x: &[f64], fs: f64, cfg: &RPeakConfig) -> Result<Vec<usize>> {
    if x.is_empty() {
        return Ok(Vec::new());
    }
    let filtered = bandpass_butterworth3(x, fs, cfg.f_lo, cfg.f_hi)?;
    detect_rpeaks(&filtered, fs, cfg)
}
