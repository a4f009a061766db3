//! Measures how often the fragment distance falls as fragments grow.
//!
//! ```text
//! cargo run --release --example monotonicity
//! ```

use ecgsq::bench::run_monotonicity_probe;
use ecgsq::corpus;
use ecgsq::distance::DistanceKind;

fn main() -> ecgsq::Result<()> {
    let rec = corpus::bundled_record()?;
    for kind in [DistanceKind::V1, DistanceKind::V2] {
        let r = run_monotonicity_probe(&rec.samples, kind, 1000, 0)?;
        println!(
            "{kind:?}: {} steps, {:.1}% fall, {:.1}% fall by more than one ADC unit, largest fall {:.2}",
            r.steps,
            100.0 * r.fraction(),
            100.0 * r.coarse_fraction(),
            r.max_violation
        );
    }
    Ok(())
}
