//! Self-describing container for a compressed record.
//!
//! Layout: magic `ECSQ`, schema id, format version, a schema-specific
//! config block, the sample count, the message count, the payload bit
//! length, the MSB-first payload padded to a byte, and a big-endian CRC-32
//! of everything before it.

use crate::bitstream::{BitReader, BitWriter};
use crate::distance::DistanceKind;
use crate::error::{Error, Result};
use crate::gsvq::{self, GsvqCodebook, GsvqMessage};
use crate::inlc::{self, BankPolicy, InlcConfig, InlcMessage, OffsetMode};
use crate::od::{self, OdMessage};
use crate::pca::{self, PcaChunk};

const MAGIC: &[u8; 4] = b"ECSQ";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Schema {
    Inlc = 1,
    Od = 2,
    Gsvq = 3,
    Pca = 4,
}

impl Schema {
    pub const ALL: [Schema; 4] = [Schema::Inlc, Schema::Od, Schema::Gsvq, Schema::Pca];

    pub fn name(self) -> &'static str {
        match self {
            Schema::Inlc => "inlc",
            Schema::Od => "od",
            Schema::Gsvq => "gsvq",
            Schema::Pca => "pca",
        }
    }

    fn from_id(id: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| *s as u8 == id)
            .ok_or_else(|| Error::corrupt(format!("schema id {id}")))
    }
}

impl std::str::FromStr for Schema {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown schema {s:?}")))
    }
}

impl std::fmt::Display for Schema {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Message sequence of one schema.
#[derive(Debug, Clone, PartialEq)]
pub enum Messages {
    Inlc(Vec<InlcMessage>),
    Od(Vec<OdMessage>),
    Gsvq(Vec<GsvqMessage>),
    Pca(Vec<PcaChunk>),
}

impl Messages {
    pub fn schema(&self) -> Schema {
        match self {
            Messages::Inlc(_) => Schema::Inlc,
            Messages::Od(_) => Schema::Od,
            Messages::Gsvq(_) => Schema::Gsvq,
            Messages::Pca(_) => Schema::Pca,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Messages::Inlc(m) => m.len(),
            Messages::Od(m) => m.len(),
            Messages::Gsvq(m) => m.len(),
            Messages::Pca(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Payload size in bits before byte padding.
    pub fn total_bits(&self) -> usize {
        match self {
            Messages::Inlc(m) => inlc::total_bits(m),
            Messages::Od(m) => od::total_bits(m),
            Messages::Gsvq(m) => gsvq::total_bits(m),
            Messages::Pca(m) => pca::total_bits(m),
        }
    }
}

/// What a decoder must know besides the messages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StreamConfig {
    Inlc(InlcConfig),
    Od { w: usize },
    Gsvq { k: usize, codebook_len: usize },
    Pca { w: usize },
}

impl StreamConfig {
    pub fn schema(&self) -> Schema {
        match self {
            StreamConfig::Inlc(_) => Schema::Inlc,
            StreamConfig::Od { .. } => Schema::Od,
            StreamConfig::Gsvq { .. } => Schema::Gsvq,
            StreamConfig::Pca { .. } => Schema::Pca,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedStream {
    pub config: StreamConfig,
    pub samples: usize,
    pub messages: Messages,
}

fn u16_field(v: usize, what: &str) -> Result<[u8; 2]> {
    u16::try_from(v)
        .map(u16::to_be_bytes)
        .map_err(|_| Error::InvalidParameter(format!("{what} {v} exceeds 16 bits")))
}

fn u32_field(v: usize, what: &str) -> Result<[u8; 4]> {
    u32::try_from(v)
        .map(u32::to_be_bytes)
        .map_err(|_| Error::InvalidParameter(format!("{what} {v} exceeds 32 bits")))
}

/// Cursor over the byte-aligned header.
struct Bytes<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Bytes<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self
            .data
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::corrupt("container truncated"))?;
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<usize> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]) as usize)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        Ok(f64::from_be_bytes(b.try_into().expect("8 bytes")))
    }
}

fn write_config(out: &mut Vec<u8>, cfg: &StreamConfig) -> Result<()> {
    match cfg {
        StreamConfig::Inlc(c) => {
            for (v, what) in [(c.s_b, "bank size"), (c.s_f, "buffer size"), (c.l_min, "l_min"), (c.l_max, "l_max")] {
                out.extend(u16_field(v, what)?);
            }
            out.extend(c.eps.to_be_bytes());
            out.push(match c.distance {
                DistanceKind::V1 => 1,
                DistanceKind::V2 => 2,
            });
            let (policy, interval) = match c.bank_policy {
                BankPolicy::Static => (0, 0.0),
                BankPolicy::Continuous => (1, 0.0),
                BankPolicy::Periodic { interval_s } => (2, interval_s),
            };
            out.push(policy);
            out.extend(interval.to_be_bytes());
            out.push(match c.offset_mode {
                OffsetMode::GainOffset => 0,
                OffsetMode::OffsetOnly => 1,
            });
            out.extend(c.fs.to_be_bytes());
        }
        StreamConfig::Od { w } | StreamConfig::Pca { w } => out.extend(u16_field(*w, "codeword length")?),
        StreamConfig::Gsvq { k, codebook_len } => {
            out.extend(u16_field(*k, "codeword length")?);
            out.extend(u16_field(*codebook_len, "codebook size")?);
        }
    }
    Ok(())
}

fn read_config(b: &mut Bytes<'_>, schema: Schema) -> Result<StreamConfig> {
    Ok(match schema {
        Schema::Inlc => {
            let (s_b, s_f, l_min, l_max) = (b.u16()?, b.u16()?, b.u16()?, b.u16()?);
            let eps = b.f64()?;
            let distance = match b.u8()? {
                1 => DistanceKind::V1,
                2 => DistanceKind::V2,
                d => return Err(Error::corrupt(format!("distance id {d}"))),
            };
            let policy = b.u8()?;
            let interval_s = b.f64()?;
            let bank_policy = match policy {
                0 => BankPolicy::Static,
                1 => BankPolicy::Continuous,
                2 => BankPolicy::Periodic { interval_s },
                p => return Err(Error::corrupt(format!("bank policy id {p}"))),
            };
            let offset_mode = match b.u8()? {
                0 => OffsetMode::GainOffset,
                1 => OffsetMode::OffsetOnly,
                m => return Err(Error::corrupt(format!("offset mode id {m}"))),
            };
            let cfg = InlcConfig {
                s_b,
                s_f,
                l_min,
                l_max,
                eps,
                distance,
                bank_policy,
                offset_mode,
                fs: b.f64()?,
            };
            cfg.validate().map_err(|e| Error::corrupt(format!("config block: {e}")))?;
            StreamConfig::Inlc(cfg)
        }
        Schema::Od => StreamConfig::Od { w: b.u16()? },
        Schema::Pca => StreamConfig::Pca { w: b.u16()? },
        Schema::Gsvq => StreamConfig::Gsvq {
            k: b.u16()?,
            codebook_len: b.u16()?,
        },
    })
}

impl CompressedStream {
    pub fn schema(&self) -> Schema {
        self.messages.schema()
    }

    pub fn total_bits(&self) -> usize {
        self.messages.total_bits()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if self.config.schema() != self.messages.schema() {
            return Err(Error::InvalidParameter(format!(
                "{} config with {} messages",
                self.config.schema(),
                self.messages.schema()
            )));
        }
        let mut w = BitWriter::new();
        match &self.messages {
            Messages::Inlc(m) => inlc::write_messages(&mut w, m)?,
            Messages::Od(m) => od::write_messages(&mut w, m)?,
            Messages::Gsvq(m) => gsvq::write_messages(&mut w, m)?,
            Messages::Pca(m) => pca::write_chunks(&mut w, m)?,
        }
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(self.schema() as u8);
        out.push(FORMAT_VERSION);
        write_config(&mut out, &self.config)?;
        out.extend(u32_field(self.samples, "sample count")?);
        out.extend(u32_field(self.messages.len(), "message count")?);
        out.extend(u32_field(w.bit_len(), "payload bits")?);
        out.extend_from_slice(w.as_bytes());
        out.extend(crc32fast::hash(&out).to_be_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 + 2 + 4 || &bytes[..4] != MAGIC {
            return Err(Error::corrupt("not an ECSQ stream"));
        }
        let (body, crc) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body).to_be_bytes() != crc {
            return Err(Error::corrupt("checksum mismatch"));
        }
        let mut b = Bytes { data: body, pos: 4 };
        let schema = Schema::from_id(b.u8()?)?;
        let version = b.u8()?;
        if version != FORMAT_VERSION {
            return Err(Error::corrupt(format!("format version {version}")));
        }
        let config = read_config(&mut b, schema)?;
        let samples = b.u32()?;
        let n = b.u32()?;
        let bits = b.u32()?;
        let payload = b.take(bits.div_ceil(8))?;
        if b.pos != body.len() {
            return Err(Error::corrupt("trailing bytes after payload"));
        }
        let mut r = BitReader::new(payload);
        let messages = match config {
            StreamConfig::Inlc(c) => Messages::Inlc(inlc::read_messages(&mut r, &c, n, samples)?),
            StreamConfig::Od { w } => Messages::Od(od::read_messages(&mut r, w, n)?),
            StreamConfig::Gsvq { .. } => Messages::Gsvq(gsvq::read_messages(&mut r, n)?),
            StreamConfig::Pca { w } => Messages::Pca(pca::read_chunks(&mut r, w, n)?),
        };
        if r.position() != bits {
            return Err(Error::corrupt(format!(
                "payload declared {bits} bits, messages used {}",
                r.position()
            )));
        }
        Ok(Self {
            config,
            samples,
            messages,
        })
    }

    /// Rebuilds the samples. GSVQ streams need the codebook they were
    /// encoded with.
    pub fn decompress(&self, codebook: Option<&GsvqCodebook>) -> Result<Vec<i16>> {
        let out = match (&self.messages, &self.config) {
            (Messages::Inlc(m), StreamConfig::Inlc(c)) => inlc::inlc_decompress(m, c)?,
            (Messages::Od(m), StreamConfig::Od { w }) => od::od_decompress(m, *w)?,
            (Messages::Gsvq(m), StreamConfig::Gsvq { k, codebook_len }) => {
                let cb = codebook.ok_or(Error::InvalidParameter("GSVQ stream needs a codebook".into()))?;
                if cb.k() != *k || cb.len() != *codebook_len {
                    return Err(Error::InvalidParameter(format!(
                        "codebook {}x{} does not match stream {}x{}",
                        cb.len(),
                        cb.k(),
                        codebook_len,
                        k
                    )));
                }
                gsvq::gsvq_decompress(m, cb)?
            }
            (Messages::Pca(m), StreamConfig::Pca { .. }) => pca::pca_decompress(m)?,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "{} config with {} messages",
                    self.config.schema(),
                    self.messages.schema()
                )))
            }
        };
        if out.len() != self.samples {
            return Err(Error::corrupt(format!(
                "decoded {} samples, header says {}",
                out.len(),
                self.samples
            )));
        }
        Ok(out)
    }
}
