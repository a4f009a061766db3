//! Serializes a compressed stream into the checksummed container, reads it
//! back, and shows that corruption is caught.
//!
//! ```text
//! cargo run --release --example container
//! ```

use ecgsq::bench::{compress, SweepSpec};
use ecgsq::corpus;
use ecgsq::wire::{CompressedStream, Schema};

fn main() -> ecgsq::Result<()> {
    let rec = corpus::bundled_record()?.slice(0.0, 60.0)?;
    for (schema, param) in [(Schema::Inlc, 20.0), (Schema::Od, 0.1), (Schema::Pca, 8.0)] {
        let stream = compress(&rec, &SweepSpec::new(schema), param, None)?;
        let bytes = stream.to_bytes()?;
        let back = CompressedStream::from_bytes(&bytes)?;
        assert_eq!(back, stream);
        let out = back.decompress(None)?;
        println!(
            "{schema}: {} messages, {} payload bits, {} container bytes, {} samples out",
            stream.messages.len(),
            stream.total_bits(),
            bytes.len(),
            out.len()
        );
        let mut bad = bytes.clone();
        bad[bytes.len() / 2] ^= 0x10;
        match CompressedStream::from_bytes(&bad) {
            Err(e) => println!("  flipped bit rejected: {e}"),
            Ok(_) => println!("  flipped bit not detected"),
        }
    }
    Ok(())
}
