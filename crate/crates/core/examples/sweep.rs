//! Rate-distortion sweep of one schema over the desk corpus, as CSV.
//!
//! ```text
//! cargo run --release --example sweep [inlc|od|gsvq|pca]
//! ```

use ecgsq::bench::{run_sweep, to_csv, train_codebook, SweepSpec};
use ecgsq::corpus;
use ecgsq::gsvq::GsvqConfig;
use ecgsq::wire::Schema;

fn main() -> ecgsq::Result<()> {
    let schema: Schema = std::env::args().nth(1).as_deref().unwrap_or("inlc").parse()?;
    let desk = corpus::desk_corpus()?;
    eprintln!("corpus: {}", desk.source);
    let codebook = match schema {
        Schema::Gsvq => Some(train_codebook(&corpus::training_records(&desk.source)?, 64, &GsvqConfig::default())?.codebook),
        _ => None,
    };
    let result = run_sweep(&desk.records, &SweepSpec::new(schema), codebook.as_ref())?;
    print!("{}", to_csv(&result));
    Ok(())
}
