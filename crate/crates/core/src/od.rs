//! On-line dictionary codec.
//!
//! Beats are cut at R-peaks, resampled to `w` points and amplitude
//! normalized. Each normalized beat is matched by L∞ distance against a
//! codebook that both ends grow in lockstep: a close enough codeword is sent
//! by index, anything else is sent in full and appended.

use crate::bitstream::{quantize_f16, BitReader, BitWriter};
use crate::distance::dist_linf;
use crate::error::{Error, Result};
use crate::normalize::{apply_od, invert_od, od_gain_offset, period_denormalize, period_normalize};
use crate::rpeak::{detect_segments, RPeakConfig};
use crate::signal::EcgRecord;

pub const LENGTH_BITS: u32 = 9;
const SCALAR_BITS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdConfig {
    /// L∞ threshold in normalized units.
    pub eps: f64,
    pub w: usize,
    pub max_seg: usize,
    pub rpeak: RPeakConfig,
}

impl Default for OdConfig {
    fn default() -> Self {
        Self {
            eps: 0.1,
            w: 200,
            max_seg: 512,
            rpeak: RPeakConfig::default(),
        }
    }
}

impl OdConfig {
    pub fn with_eps(self, eps: f64) -> Self {
        Self { eps, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("eps {}", self.eps)));
        }
        if self.w < 2 {
            return Err(Error::InvalidParameter(format!("codeword length {}", self.w)));
        }
        if self.max_seg == 0 || self.max_seg > 1 << LENGTH_BITS {
            return Err(Error::InvalidParameter(format!(
                "max segment {} outside 1..={}",
                self.max_seg,
                1 << LENGTH_BITS
            )));
        }
        Ok(())
    }
}

/// Wire width of a codeword index for a codebook of `size` entries.
pub fn index_width(size: usize) -> u32 {
    match size {
        0..=64 => 6,
        65..=256 => 8,
        257..=1024 => 10,
        _ => 16,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdMessage {
    Known {
        index: usize,
        len: usize,
        gain: f64,
        offset: f64,
    },
    New {
        codeword: Vec<f64>,
        index: usize,
        len: usize,
        gain: f64,
        offset: f64,
    },
}

impl OdMessage {
    pub fn len(&self) -> usize {
        match self {
            OdMessage::Known { len, .. } | OdMessage::New { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Size on the wire given the codebook size before this message.
    pub fn bit_len(&self, codebook_size: usize) -> usize {
        let fixed = 1 + LENGTH_BITS as usize + 2 * SCALAR_BITS;
        match self {
            OdMessage::Known { .. } => fixed + index_width(codebook_size) as usize,
            OdMessage::New { codeword, .. } => {
                fixed + index_width(codebook_size + 1) as usize + SCALAR_BITS * codeword.len()
            }
        }
    }
}

/// Append-only codebook of length-`w` codewords stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct OdCodebook {
    w: usize,
    data: Vec<f64>,
}

impl OdCodebook {
    pub fn new(w: usize) -> Self {
        Self { w, data: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.w
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&[f64]> {
        self.data.get(i * self.w..(i + 1) * self.w)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.w)
    }

    fn push(&mut self, c: &[f64]) {
        self.data.extend_from_slice(c);
    }
}

#[derive(Debug, Clone)]
pub struct OdEncoder {
    cfg: OdConfig,
    codebook: OdCodebook,
}

impl OdEncoder {
    pub fn new(cfg: OdConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            codebook: OdCodebook::new(cfg.w),
            cfg,
        })
    }

    pub fn codebook(&self) -> &OdCodebook {
        &self.codebook
    }

    /// Normalizes one segment and matches it. Gain and offset are rounded
    /// to half precision before normalizing, and so are the normalized
    /// values, so the encoder compares exactly what the decoder can rebuild.
    pub fn encode_segment(&mut self, z: &[i16]) -> Result<OdMessage> {
        if z.len() > self.cfg.max_seg {
            return Err(Error::InvalidParameter(format!(
                "segment of {} samples exceeds {}",
                z.len(),
                self.cfg.max_seg
            )));
        }
        let zf: Vec<f64> = z.iter().map(|&v| f64::from(v)).collect();
        let x = period_normalize(&zf, self.cfg.w)?;
        let (g, o) = od_gain_offset(&x)?;
        let (gain, offset) = (quantize_f16(g), quantize_f16(o));
        let shape: Vec<f64> = apply_od(&x, gain, offset).into_iter().map(quantize_f16).collect();

        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.codebook.iter().enumerate() {
            let d = dist_linf(&shape, c)?;
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        let len = z.len();
        Ok(match best {
            Some((index, d)) if d <= self.cfg.eps => OdMessage::Known {
                index,
                len,
                gain,
                offset,
            },
            _ => {
                let index = self.codebook.len();
                self.codebook.push(&shape);
                OdMessage::New {
                    codeword: shape,
                    index,
                    len,
                    gain,
                    offset,
                }
            }
        })
    }
}

pub fn od_compress(rec: &EcgRecord, cfg: &OdConfig) -> Result<Vec<OdMessage>> {
    let mut enc = OdEncoder::new(*cfg)?;
    detect_segments(&rec.samples, rec.fs, &cfg.rpeak, cfg.max_seg)?
        .into_iter()
        .map(|s| enc.encode_segment(&rec.samples[s]))
        .collect()
}

#[derive(Debug, Clone)]
pub struct OdDecoder {
    codebook: OdCodebook,
}

impl OdDecoder {
    pub fn new(w: usize) -> Self {
        Self {
            codebook: OdCodebook::new(w),
        }
    }

    pub fn codebook(&self) -> &OdCodebook {
        &self.codebook
    }

    pub fn decode(&mut self, msg: &OdMessage, out: &mut Vec<i16>) -> Result<()> {
        let (index, len, gain, offset) = match msg {
            OdMessage::Known {
                index,
                len,
                gain,
                offset,
            } => (*index, *len, *gain, *offset),
            OdMessage::New {
                codeword,
                index,
                len,
                gain,
                offset,
            } => {
                if *index != self.codebook.len() || codeword.len() != self.codebook.w {
                    return Err(Error::corrupt(format!(
                        "new codeword {index} does not extend codebook of {}",
                        self.codebook.len()
                    )));
                }
                self.codebook.push(codeword);
                (*index, *len, *gain, *offset)
            }
        };
        let c = self.codebook.get(index).ok_or_else(|| {
            Error::corrupt(format!(
                "codeword {index} outside codebook of {}",
                self.codebook.len()
            ))
        })?;
        let x = invert_od(c, gain, offset);
        out.extend(round_samples(&period_denormalize(&x, len)?));
        Ok(())
    }
}

pub(crate) fn round_samples(x: &[f64]) -> impl Iterator<Item = i16> + '_ {
    x.iter()
        .map(|v| v.round().clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16)
}

pub fn od_decompress(messages: &[OdMessage], w: usize) -> Result<Vec<i16>> {
    let mut dec = OdDecoder::new(w);
    let mut out = Vec::new();
    for m in messages {
        dec.decode(m, &mut out)?;
    }
    Ok(out)
}

pub fn total_bits(messages: &[OdMessage]) -> usize {
    let mut size = 0;
    messages
        .iter()
        .map(|m| {
            let bits = m.bit_len(size);
            size += matches!(m, OdMessage::New { .. }) as usize;
            bits
        })
        .sum()
}

pub fn write_messages(w: &mut BitWriter, messages: &[OdMessage]) -> Result<()> {
    let mut size = 0usize;
    for m in messages {
        let (len, gain, offset) = match m {
            OdMessage::Known {
                index,
                len,
                gain,
                offset,
            } => {
                w.write_bit(false);
                w.write_uint(*index as u64, index_width(size))?;
                (*len, *gain, *offset)
            }
            OdMessage::New {
                index,
                len,
                gain,
                offset,
                ..
            } => {
                w.write_bit(true);
                size += 1;
                w.write_uint(*index as u64, index_width(size))?;
                (*len, *gain, *offset)
            }
        };
        if len == 0 {
            return Err(Error::InvalidParameter("empty segment".into()));
        }
        w.write_uint(len as u64 - 1, LENGTH_BITS)?;
        w.write_f16(gain);
        w.write_f16(offset);
        if let OdMessage::New { codeword, .. } = m {
            for &v in codeword {
                w.write_f16(v);
            }
        }
    }
    Ok(())
}

pub fn read_messages(r: &mut BitReader<'_>, w: usize, n_messages: usize) -> Result<Vec<OdMessage>> {
    let mut size = 0usize;
    let mut out = Vec::with_capacity(n_messages);
    for _ in 0..n_messages {
        let new = r.read_bit()?;
        if new {
            size += 1;
        }
        let index = r.read_uint(index_width(size))? as usize;
        let len = r.read_uint(LENGTH_BITS)? as usize + 1;
        let gain = r.read_f16()?;
        let offset = r.read_f16()?;
        out.push(if new {
            let codeword = (0..w).map(|_| r.read_f16()).collect::<Result<Vec<_>>>()?;
            OdMessage::New {
                codeword,
                index,
                len,
                gain,
                offset,
            }
        } else {
            OdMessage::Known {
                index,
                len,
                gain,
                offset,
            }
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{repeat_beat, smooth_beat, synthetic_ecg, SynthConfig};

    fn record(samples: Vec<i16>) -> EcgRecord {
        EcgRecord::new("t", samples, 360.0, 11).unwrap()
    }

    #[test]
    fn index_widths() {
        assert_eq!(index_width(1), 6);
        assert_eq!(index_width(64), 6);
        assert_eq!(index_width(65), 8);
        assert_eq!(index_width(300), 10);
        assert_eq!(index_width(5000), 16);
    }

    #[test]
    fn first_segment_is_new() {
        let rec = record(synthetic_ecg(3600, &SynthConfig::default()));
        let msgs = od_compress(&rec, &OdConfig::default()).unwrap();
        assert!(matches!(msgs[0], OdMessage::New { index: 0, .. }));
    }

    #[test]
    fn repeated_beat_eps_zero() {
        let rec = record(repeat_beat(&smooth_beat(200, 360.0), 12_000, 100));
        let msgs = od_compress(&rec, &OdConfig::default().with_eps(0.0)).unwrap();
        let new = msgs.iter().filter(|m| matches!(m, OdMessage::New { .. })).count();
        // Start-up transient, partial leading and trailing beats, one full beat.
        assert!(new <= 4, "{new} new codewords");
        assert!(msgs.len() > 50);
        let y = od_decompress(&msgs, 200).unwrap();
        assert_eq!(y, rec.samples);
    }

    #[test]
    fn huge_eps_single_new() {
        let rec = record(synthetic_ecg(7200, &SynthConfig::default()));
        let msgs = od_compress(&rec, &OdConfig::default().with_eps(1e9)).unwrap();
        assert_eq!(msgs.iter().filter(|m| matches!(m, OdMessage::New { .. })).count(), 1);
    }

    #[test]
    fn codebooks_stay_synchronized() {
        let rec = record(synthetic_ecg(21600, &SynthConfig::default()));
        let cfg = OdConfig::default().with_eps(0.05);
        let mut enc = OdEncoder::new(cfg).unwrap();
        let mut dec = OdDecoder::new(cfg.w);
        let mut out = Vec::new();
        let mut new = 0;
        for s in detect_segments(&rec.samples, rec.fs, &cfg.rpeak, cfg.max_seg).unwrap() {
            let m = enc.encode_segment(&rec.samples[s]).unwrap();
            new += matches!(m, OdMessage::New { .. }) as usize;
            dec.decode(&m, &mut out).unwrap();
            assert_eq!(enc.codebook(), dec.codebook());
            assert_eq!(enc.codebook().len(), new);
        }
        assert_eq!(out.len(), rec.len());
    }

    #[test]
    fn wire_round_trip() {
        let rec = record(synthetic_ecg(21600, &SynthConfig::default()));
        let msgs = od_compress(&rec, &OdConfig::default().with_eps(0.02)).unwrap();
        let mut w = BitWriter::new();
        write_messages(&mut w, &msgs).unwrap();
        assert_eq!(w.bit_len(), total_bits(&msgs));
        let bytes = w.into_bytes();
        assert_eq!(read_messages(&mut BitReader::new(&bytes), 200, msgs.len()).unwrap(), msgs);
    }

    #[test]
    fn empty_and_corrupt_streams() {
        assert!(od_decompress(&[], 200).unwrap().is_empty());
        let bad = [OdMessage::Known {
            index: 0,
            len: 10,
            gain: 1.0,
            offset: 0.0,
        }];
        assert!(matches!(od_decompress(&bad, 200), Err(Error::CorruptStream(_))));
    }
}
