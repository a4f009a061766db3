//! Compresses one minute with the fragment-matching codec at several
//! thresholds.
//!
//! ```text
//! cargo run --release --example inlc
//! ```

use ecgsq::corpus;
use ecgsq::inlc::{inlc_compress, inlc_decompress, total_bits, InlcConfig, InlcMessage, OffsetMode};
use ecgsq::metrics::{compression_ratio, distortion_report_i16};

fn main() -> ecgsq::Result<()> {
    let rec = corpus::bundled_record()?.slice(0.0, 60.0)?;
    let original = rec.len() as u64 * 16;
    println!("{:>4} {:>3} {:>8} {:>8} {:>7} {:>7}", "eps", "map", "matches", "direct", "cr", "prd");
    for mode in [OffsetMode::GainOffset, OffsetMode::OffsetOnly] {
        for eps in [5.0, 20.0, 50.0] {
            let cfg = InlcConfig {
                offset_mode: mode,
                ..InlcConfig::default().with_eps(eps)
            };
            let msgs = inlc_compress(&rec.samples, &cfg)?;
            let out = inlc_decompress(&msgs, &cfg)?;
            let r = distortion_report_i16(&rec.samples, &out, rec.fs)?;
            let matches = msgs.iter().filter(|m| matches!(m, InlcMessage::Match { .. })).count();
            println!(
                "{eps:>4} {:>3} {matches:>8} {:>8} {:>7.2} {:>7.3}",
                if mode == OffsetMode::GainOffset { "GO" } else { "OO" },
                msgs.len() - matches,
                compression_ratio(original, total_bits(&msgs) as u64)?,
                r.prd.finite().unwrap_or(0.0)
            );
        }
    }
    Ok(())
}
