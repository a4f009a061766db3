//! MSB-first bit packing with fixed field widths and binary16 scalars.
//!
//! Fields are appended most-significant bit first. A finished stream is
//! zero-padded to the next byte boundary; padding never counts toward the
//! compressed size used for compression ratios.

use half::f16;

use crate::error::{Error, Result};

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `width` bits of `value`, MSB first.
    pub fn write_uint(&mut self, value: u64, width: u32) -> Result<()> {
        if width == 0 || width > 32 {
            return Err(Error::InvalidParameter(format!(
                "field width {width} outside 1..=32"
            )));
        }
        if value >> width != 0 {
            return Err(Error::Overflow { value, width });
        }
        for shift in (0..width).rev() {
            self.push_bit((value >> shift) & 1 == 1);
        }
        Ok(())
    }

    pub fn write_bit(&mut self, bit: bool) {
        self.push_bit(bit);
    }

    /// Writes `value` as an IEEE binary16, saturating out-of-range magnitudes.
    pub fn write_f16(&mut self, value: f64) {
        let bits = f16_bits(value);
        self.write_uint(u64::from(bits), 16)
            .expect("16-bit value always fits");
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_uint(u64::from(b), 8).expect("byte fits");
        }
    }

    fn push_bit(&mut self, bit: bool) {
        let byte = self.bit_len / 8;
        if byte == self.bytes.len() {
            self.bytes.push(0);
        }
        if bit {
            self.bytes[byte] |= 0x80 >> (self.bit_len % 8);
        }
        self.bit_len += 1;
    }

    /// Number of bits written so far, excluding padding.
    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn read_uint(&mut self, width: u32) -> Result<u64> {
        if width == 0 || width > 32 {
            return Err(Error::InvalidParameter(format!(
                "field width {width} outside 1..=32"
            )));
        }
        if self.remaining() < width as usize {
            return Err(Error::EndOfStream);
        }
        let mut value = 0u64;
        for _ in 0..width {
            value = (value << 1) | u64::from(self.next_bit());
        }
        Ok(value)
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        if self.remaining() == 0 {
            return Err(Error::EndOfStream);
        }
        Ok(self.next_bit())
    }

    pub fn read_f16(&mut self) -> Result<f64> {
        let bits = self.read_uint(16)? as u16;
        Ok(f16_value(bits))
    }

    fn next_bit(&mut self) -> bool {
        let bit = self.bytes[self.pos / 8] & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        bit
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() * 8 - self.pos
    }
}

/// binary16 bit pattern of `value`: round-to-nearest-even, saturating at
/// ±65504, subnormals preserved. NaN maps to +0.
pub fn f16_bits(value: f64) -> u16 {
    if value.is_nan() {
        return 0;
    }
    let h = f16::from_f64(value);
    if h.is_infinite() {
        if value.is_sign_negative() {
            f16::MIN.to_bits()
        } else {
            f16::MAX.to_bits()
        }
    } else {
        h.to_bits()
    }
}

pub fn f16_value(bits: u16) -> f64 {
    f16::from_bits(bits).to_f64()
}

/// Rounds `value` to the nearest representable binary16 value.
pub fn quantize_f16(value: f64) -> f64 {
    f16_value(f16_bits(value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uint_round_trip() {
        let mut w = BitWriter::new();
        w.write_uint(5, 4).unwrap();
        let bytes = w.into_bytes();
        let mut r = BitReader::new(&bytes);
        assert_eq!(r.read_uint(4).unwrap(), 5);
    }

    #[test]
    fn ten_bit_all_ones() {
        let mut w = BitWriter::new();
        w.write_uint(1023, 10).unwrap();
        assert_eq!(w.bit_len(), 10);
        assert_eq!(w.as_bytes(), &[0xFF, 0xC0]);
    }

    #[test]
    fn overflow_rejected() {
        let mut w = BitWriter::new();
        assert!(matches!(
            w.write_uint(16, 4),
            Err(Error::Overflow { value: 16, width: 4 })
        ));
        assert!(w.write_uint(0, 33).is_err());
    }

    #[test]
    fn f16_known_patterns() {
        assert_eq!(f16_bits(1.0), 0x3C00);
        assert_eq!(f16_value(0x3C00), 1.0);
        assert_eq!(f16_bits(0.0), 0x0000);
        assert_eq!(quantize_f16(70000.0), 65504.0);
        assert_eq!(quantize_f16(-70000.0), -65504.0);
        // smallest subnormal
        assert_eq!(f16_value(0x0001), 2f64.powi(-24));
        assert_eq!(f16_bits(2f64.powi(-24)), 0x0001);
        // ties to even: 2049 sits between 2048 and 2050
        assert_eq!(quantize_f16(2049.0), 2048.0);
        assert_eq!(quantize_f16(2051.0), 2052.0);
    }

    #[test]
    fn read_past_end() {
        let bytes = [0xAB];
        let mut r = BitReader::new(&bytes);
        r.read_uint(6).unwrap();
        assert!(matches!(r.read_uint(3), Err(Error::EndOfStream)));
    }

    proptest! {
        #[test]
        fn field_sequences_round_trip(fields in prop::collection::vec((1u32..=32, any::<u64>()), 0..64)) {
            let fields: Vec<(u32, u64)> = fields
                .into_iter()
                .map(|(w, v)| (w, v & ((1u64 << w) - 1)))
                .collect();
            let mut w = BitWriter::new();
            for &(width, value) in &fields {
                w.write_uint(value, width).unwrap();
            }
            let total: usize = fields.iter().map(|&(w, _)| w as usize).sum();
            prop_assert_eq!(w.bit_len(), total);
            let bytes = w.into_bytes();
            prop_assert!(bytes.len() * 8 - total < 8);
            let mut r = BitReader::new(&bytes);
            for &(width, value) in &fields {
                prop_assert_eq!(r.read_uint(width).unwrap(), value);
            }
        }

        #[test]
        fn f16_quantization_is_idempotent(x in -70000.0f64..70000.0) {
            let q = quantize_f16(x);
            prop_assert_eq!(quantize_f16(q), q);
            prop_assert!(q.abs() <= 65504.0);
        }
    }
}
