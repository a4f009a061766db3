//! Adaptive-codebook beat coding: each beat either reuses a codeword or
//! becomes a new one.
//!
//! ```text
//! cargo run --release --example od
//! ```

use ecgsq::corpus;
use ecgsq::metrics::{compression_ratio, distortion_report_i16};
use ecgsq::od::{od_compress, od_decompress, total_bits, OdConfig, OdMessage};

fn main() -> ecgsq::Result<()> {
    let rec = corpus::bundled_record()?.slice(0.0, 60.0)?;
    for eps in [0.04, 0.1, 0.2, 0.3] {
        let cfg = OdConfig::default().with_eps(eps);
        let msgs = od_compress(&rec, &cfg)?;
        let out = od_decompress(&msgs, cfg.w)?;
        let r = distortion_report_i16(&rec.samples, &out, rec.fs)?;
        let new = msgs.iter().filter(|m| matches!(m, OdMessage::New { .. })).count();
        println!(
            "eps {eps:<4} beats {:>3} new codewords {new:>3} cr {:.2} prd {:.3}",
            msgs.len(),
            compression_ratio(rec.len() as u64 * 16, total_bits(&msgs) as u64)?,
            r.prd.finite().unwrap_or(0.0)
        );
    }
    Ok(())
}
