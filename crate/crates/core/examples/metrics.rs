//! Distortion metrics of a signal against a degraded copy.
//!
//! ```text
//! cargo run --example metrics
//! ```

use ecgsq::corpus;
use ecgsq::metrics::{compression_ratio, distortion_report_i16, format_g6, quality_score};

fn main() -> ecgsq::Result<()> {
    let rec = corpus::bundled_record()?.slice(0.0, 10.0)?;
    // Keep every fourth sample and hold it.
    let held: Vec<i16> = rec.samples.iter().enumerate().map(|(i, _)| rec.samples[i - i % 4]).collect();
    let r = distortion_report_i16(&rec.samples, &held, rec.fs)?;
    let cr = compression_ratio(rec.len() as u64 * 16, (rec.len() as u64).div_ceil(4) * 16)?;
    println!("cr    {}", format_g6(cr));
    println!("prd   {}", r.prd);
    println!("prdn  {}", r.prdn);
    println!("rmse  {}", format_g6(r.rmse));
    println!("rmsep {}", r.rmsep);
    println!("snr   {} dB", r.snr_db);
    println!("mae   {}", format_g6(r.mae));
    println!("cc    {}", r.cc);
    println!("qs    {}", quality_score(cr, r.prd.finite().unwrap_or(0.0)));
    Ok(())
}
