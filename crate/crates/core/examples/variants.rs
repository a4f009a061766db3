//! The eight InLC variants on the desk corpus, summarized as corpus-average
//! CR at a few PRD levels.
//!
//! ```text
//! cargo run --release --example variants
//! ```

use ecgsq::bench::{run_variant_matrix, RdCurve, INLC_EPS};
use ecgsq::corpus;
use ecgsq::inlc::InlcConfig;

fn main() -> ecgsq::Result<()> {
    let desk = corpus::desk_corpus()?;
    eprintln!("corpus: {}", desk.source);
    let result = run_variant_matrix(&desk.records, &INLC_EPS, &InlcConfig::default(), false)?;
    let mut labels: Vec<&str> = result.averages.iter().map(|r| r.variant.as_str()).collect();
    labels.dedup();
    let levels = [1.0, 2.0, 3.0, 4.0];
    print!("{:<10}", "variant");
    for p in levels {
        print!(" {:>8}", format!("PRD {p}"));
    }
    println!();
    for v in labels {
        let curve = RdCurve::from_averages(&result.averages, v);
        print!("{v:<10}");
        for p in levels {
            print!(" {:>8}", curve.cr_at(p).map_or("-".into(), |c| format!("{c:.2}")));
        }
        println!();
    }
    Ok(())
}
