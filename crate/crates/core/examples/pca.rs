//! Chunked principal-component beat coding over a range of component
//! counts, sharing one eigendecomposition per chunk.
//!
//! ```text
//! cargo run --release --example pca
//! ```

use ecgsq::corpus;
use ecgsq::metrics::{compression_ratio, distortion_report_i16};
use ecgsq::pca::{pca_decompress, total_bits, PcaAnalysis, PcaConfig};

fn main() -> ecgsq::Result<()> {
    let rec = corpus::bundled_record()?.slice(0.0, 60.0)?;
    let analysis = PcaAnalysis::new(&rec, &PcaConfig::default())?;
    for k in [1, 3, 8, 15] {
        let chunks = analysis.encode(k)?;
        let out = pca_decompress(&chunks)?;
        let r = distortion_report_i16(&rec.samples, &out, rec.fs)?;
        println!(
            "K {k:>2}: {} chunks, cr {:>5.2}, prd {:.3}",
            chunks.len(),
            compression_ratio(rec.len() as u64 * 16, total_bits(&chunks) as u64)?,
            r.prd.finite().unwrap_or(0.0)
        );
    }
    Ok(())
}
