//! Synthetic ECG built from Gaussian P, Q, R, S and T waves, in ADC units
//! around a 1024 baseline at 200 units/mV.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// (centre as a fraction of the RR interval, width in seconds, amplitude mV)
const WAVES: [(f64, f64, f64); 5] = [
    (0.18, 0.025, 0.15),
    (0.30, 0.010, -0.10),
    (0.32, 0.011, 1.20),
    (0.34, 0.010, -0.25),
    (0.58, 0.040, 0.30),
];

pub const BASELINE: f64 = 1024.0;
pub const UNITS_PER_MV: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub fs: f64,
    pub bpm: f64,
    /// Relative standard deviation of the RR interval.
    pub rr_jitter: f64,
    /// Uniform noise amplitude in ADC units.
    pub noise: f64,
    /// Baseline wander amplitude in ADC units (0.3 Hz sine).
    pub wander: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            fs: 360.0,
            bpm: 72.0,
            rr_jitter: 0.03,
            noise: 2.0,
            wander: 15.0,
            seed: 0,
        }
    }
}

/// One beat of `len` samples, rounded to ADC units.
pub fn beat(len: usize, fs: f64) -> Vec<f64> {
    shaped_beat(len, fs, 1.0)
}

/// A beat with every wave `3x` wider. Its second differences stay near one
/// ADC unit, so linear resampling round-trips it within rounding.
pub fn smooth_beat(len: usize, fs: f64) -> Vec<f64> {
    shaped_beat(len, fs, 3.0)
}

fn shaped_beat(len: usize, fs: f64, width_scale: f64) -> Vec<f64> {
    let period = len as f64 / fs;
    (0..len)
        .map(|i| {
            let t = i as f64 / fs;
            BASELINE
                + UNITS_PER_MV
                    * WAVES
                        .iter()
                        .map(|&(c, w, a)| a * (-((t - c * period) / (w * width_scale)).powi(2) / 2.0).exp())
                        .sum::<f64>()
        })
        .map(f64::round)
        .collect()
}

pub fn synthetic_ecg(n: usize, cfg: &SynthConfig) -> Vec<i16> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mean_rr = 60.0 / cfg.bpm * cfg.fs;
    let mut out = Vec::with_capacity(n + mean_rr as usize * 2);
    while out.len() < n {
        let jitter: f64 = rng.gen_range(-1.0..1.0) * cfg.rr_jitter * 3f64.sqrt();
        let len = (mean_rr * (1.0 + jitter)).round().max(8.0) as usize;
        out.extend(beat(len, cfg.fs));
    }
    out.truncate(n);
    out.iter()
        .enumerate()
        .map(|(i, &v)| {
            let t = i as f64 / cfg.fs;
            let wander = cfg.wander * (2.0 * std::f64::consts::PI * 0.3 * t).sin();
            let noise = if cfg.noise > 0.0 { rng.gen_range(-cfg.noise..=cfg.noise) } else { 0.0 };
            (v + wander + noise).round() as i16
        })
        .collect()
}

/// `n` samples cycling through `beat`, starting `phase` samples into it.
pub fn repeat_beat(beat: &[f64], n: usize, phase: usize) -> Vec<i16> {
    beat.iter()
        .cycle()
        .skip(phase % beat.len())
        .take(n)
        .map(|&v| v.round() as i16)
        .collect()
}
