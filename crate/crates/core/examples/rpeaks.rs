//! Band-passes a record, finds R-peaks and splits it into beats.
//!
//! ```text
//! cargo run --example rpeaks
//! ```

use ecgsq::corpus;
use ecgsq::rpeak::{detect_rpeaks_raw, segment_by_rpeaks, RPeakConfig};

fn main() -> ecgsq::Result<()> {
    let rec = corpus::bundled_record()?;
    let cfg = RPeakConfig::default();
    let peaks = detect_rpeaks_raw(&rec.samples, rec.fs, &cfg)?;
    let rr: Vec<f64> = peaks.windows(2).map(|w| (w[1] - w[0]) as f64 / rec.fs).collect();
    let mean_rr = rr.iter().sum::<f64>() / rr.len() as f64;
    println!("{} R-peaks in {:.0} s, mean heart rate {:.1} bpm", peaks.len(), rec.duration_s(), 60.0 / mean_rr);
    println!(
        "RR range {:.3}..{:.3} s",
        rr.iter().copied().fold(f64::INFINITY, f64::min),
        rr.iter().copied().fold(0.0, f64::max)
    );
    let beats = segment_by_rpeaks(rec.len(), &peaks, 512)?;
    println!("{} segments; first five:", beats.len());
    for b in beats.iter().take(5) {
        println!("  {:>6}..{:<6} ({} samples)", b.start, b.end, b.len());
    }
    Ok(())
}
