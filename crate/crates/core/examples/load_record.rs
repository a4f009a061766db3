//! Loads a WFDB record, slices a window and reads a CSV column.
//!
//! ```text
//! cargo run --example load_record [path/to/record.hea]
//! ```

use ecgsq::corpus;
use ecgsq::signal::{load_csv_record, load_wfdb_record, write_wfdb_record, CsvOptions};

fn main() -> ecgsq::Result<()> {
    let header = std::env::args().nth(1).map_or_else(corpus::bundled_header, Into::into);
    let rec = load_wfdb_record(&header)?;
    println!(
        "{}: {} samples at {} Hz, {:.1} s, {}-bit ADC",
        rec.record_id,
        rec.len(),
        rec.fs,
        rec.duration_s(),
        rec.adc_resolution_bits
    );
    let w = rec.slice(10.0, 2.0)?;
    let (lo, hi) = w.samples.iter().fold((i16::MAX, i16::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    println!("10..12 s: {} samples, range {lo}..{hi}", w.len());

    let dir = tempfile::tempdir().expect("temp dir");
    let written = write_wfdb_record(dir.path(), &w)?;
    assert_eq!(load_wfdb_record(&written)?.samples, w.samples);
    println!("wrote and reread {}", written.file_name().unwrap().to_string_lossy());

    let csv = dir.path().join("lead.csv");
    let text: String = std::iter::once("mlii\n".to_string())
        .chain(w.samples.iter().map(|v| format!("{v}\n")))
        .collect();
    std::fs::write(&csv, text).expect("write csv");
    let opts = CsvOptions {
        skip_header: true,
        ..CsvOptions::default()
    };
    let c = load_csv_record(&csv, rec.fs, &opts)?;
    println!("csv: {} samples, identical: {}", c.len(), c.samples == w.samples);
    Ok(())
}
