//! Trains a gain-shape codebook with LBG, saves it, and codes a window with
//! bounded residual correction.
//!
//! ```text
//! cargo run --release --example gsvq
//! ```

use ecgsq::corpus;
use ecgsq::gsvq::{gsvq_compress, gsvq_decompress, lbg_train, segment_shapes, total_bits, GsvqCodebook, GsvqConfig};
use ecgsq::metrics::{compression_ratio, distortion_report_i16};

fn main() -> ecgsq::Result<()> {
    let full = corpus::bundled_record()?;
    let cfg = GsvqConfig::default();
    let shapes = segment_shapes(&full, cfg.k, cfg.max_seg, &cfg.rpeak)?;
    let training = lbg_train(&shapes, 64)?;
    println!("trained on {} beats:", shapes.len());
    // The trace has one entry per Lloyd iteration; show where each size settled.
    for (i, (size, d)) in training.trace.iter().enumerate() {
        if training.trace.get(i + 1).is_none_or(|next| next.0 != *size) {
            println!("  {size:>3} codewords, mean squared error {d:.5}");
        }
    }

    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("208x.gscb");
    training.codebook.save(&path)?;
    let codebook = GsvqCodebook::load(&path)?;
    println!("codebook file {} bytes", std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0));

    let rec = full.slice(0.0, 60.0)?;
    let full_scale = rec.full_scale();
    for frac in [0.0, 0.02, 0.1, 0.3] {
        let msgs = gsvq_compress(&rec, &codebook, &cfg.with_threshold(frac * full_scale))?;
        let out = gsvq_decompress(&msgs, &codebook)?;
        let r = distortion_report_i16(&rec.samples, &out, rec.fs)?;
        println!(
            "A_th {:>5.1} cr {:>6.2} prd {:.3}",
            frac * full_scale,
            compression_ratio(rec.len() as u64 * 16, total_bits(&msgs) as u64)?,
            r.prd.finite().unwrap_or(0.0)
        );
    }
    Ok(())
}
