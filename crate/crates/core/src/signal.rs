//! ECG records: WFDB format-212 and single-column CSV ingestion, slicing.
//!
//! Samples stay in raw ADC units for the whole pipeline. No baseline or gain
//! correction from the WFDB header is applied.

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// A single-channel sampled ECG signal in raw ADC units.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub samples: Vec<i16>,
    pub fs: f64,
    pub adc_resolution_bits: u8,
    pub record_id: String,
    pub channel: usize,
}

impl EcgRecord {
    pub fn new(
        record_id: impl Into<String>,
        samples: Vec<i16>,
        fs: f64,
        adc_resolution_bits: u8,
    ) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::InvalidParameter(format!("sampling rate {fs}")));
        }
        if samples.is_empty() {
            return Err(Error::Empty("record has no samples"));
        }
        if adc_resolution_bits == 0 || adc_resolution_bits > 16 {
            return Err(Error::InvalidParameter(format!(
                "adc resolution {adc_resolution_bits} bits"
            )));
        }
        Ok(Self {
            samples,
            fs,
            adc_resolution_bits,
            record_id: record_id.into(),
            channel: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    /// Full-scale span of the converter, `2^adc_resolution_bits` ADC units.
    pub fn full_scale(&self) -> f64 {
        f64::from(1u32 << self.adc_resolution_bits)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| f64::from(s)).collect()
    }

    pub fn fragment(&self, range: Range<usize>) -> Result<Fragment<'_>> {
        Fragment::new(&self.samples, range)
    }

    /// `floor(dur_s * fs)` samples starting at `floor(start_s * fs)`.
    pub fn slice(&self, start_s: f64, dur_s: f64) -> Result<EcgRecord> {
        if !(start_s >= 0.0) || !(dur_s > 0.0) {
            return Err(Error::OutOfRange(format!(
                "slice start {start_s} s, duration {dur_s} s"
            )));
        }
        let start = (start_s * self.fs).floor() as usize;
        let len = (dur_s * self.fs).floor() as usize;
        if len == 0 || start + len > self.samples.len() {
            return Err(Error::OutOfRange(format!(
                "slice [{start}, {}) exceeds record of {} samples",
                start + len,
                self.samples.len()
            )));
        }
        Ok(EcgRecord {
            samples: self.samples[start..start + len].to_vec(),
            fs: self.fs,
            adc_resolution_bits: self.adc_resolution_bits,
            record_id: self.record_id.clone(),
            channel: self.channel,
        })
    }
}

/// Free-function form of [`EcgRecord::slice`].
pub fn slice_record(rec: &EcgRecord, start_s: f64, dur_s: f64) -> Result<EcgRecord> {
    rec.slice(start_s, dur_s)
}

/// Contiguous run of samples borrowed from a parent sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fragment<'a> {
    pub values: &'a [i16],
    pub start_index: usize,
}

impl<'a> Fragment<'a> {
    pub fn new(parent: &'a [i16], range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > parent.len() {
            return Err(Error::OutOfRange(format!(
                "fragment {range:?} of sequence with {} samples",
                parent.len()
            )));
        }
        Ok(Self {
            start_index: range.start,
            values: &parent[range],
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone)]
struct SignalSpec {
    file_name: String,
    format: u32,
    byte_offset: usize,
    adc_resolution: u8,
}

#[derive(Debug, Clone)]
struct Header {
    name: String,
    n_signals: usize,
    fs: f64,
    n_samples: Option<usize>,
    signals: Vec<SignalSpec>,
}

fn parse_header(path: &Path, text: &str) -> Result<Header> {
    let bad = |reason: &str| Error::Header {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));

    let record_line = lines.next().ok_or_else(|| bad("missing record line"))?;
    let mut fields = record_line.split_whitespace();
    let name = fields
        .next()
        .ok_or_else(|| bad("missing record name"))?
        .split('/')
        .next()
        .unwrap_or_default()
        .to_string();
    let n_signals: usize = fields
        .next()
        .ok_or_else(|| bad("missing signal count"))?
        .parse()
        .map_err(|_| bad("signal count is not an integer"))?;
    let fs = match fields.next() {
        // "360/ctr(base)" -> 360
        Some(f) => f
            .split(['/', '('])
            .next()
            .unwrap_or_default()
            .parse::<f64>()
            .map_err(|_| bad("sampling frequency is not a number"))?,
        None => 250.0,
    };
    let n_samples = match fields.next() {
        Some(n) => Some(
            n.parse::<usize>()
                .map_err(|_| bad("sample count is not an integer"))?,
        ),
        None => None,
    }
    .filter(|&n| n > 0);

    let mut signals = Vec::with_capacity(n_signals);
    for _ in 0..n_signals {
        let line = lines.next().ok_or_else(|| bad("missing signal line"))?;
        let mut f = line.split_whitespace();
        let file_name = f.next().ok_or_else(|| bad("missing file name"))?.to_string();
        let fmt_field = f.next().ok_or_else(|| bad("missing format"))?;
        let digits: String = fmt_field.chars().take_while(char::is_ascii_digit).collect();
        let format: u32 = digits.parse().map_err(|_| bad("format is not an integer"))?;
        let byte_offset = match fmt_field.split_once('+') {
            Some((_, off)) => off.parse().map_err(|_| bad("bad byte offset"))?,
            None => 0,
        };
        let _gain = f.next();
        let adc_resolution = match f.next() {
            Some(r) => r.parse::<u8>().map_err(|_| bad("bad adc resolution"))?,
            None => 0,
        };
        signals.push(SignalSpec {
            file_name,
            format,
            byte_offset,
            adc_resolution: if adc_resolution == 0 { 12 } else { adc_resolution },
        });
    }
    if !(fs > 0.0) {
        return Err(bad("sampling frequency must be positive"));
    }
    Ok(Header {
        name,
        n_signals,
        fs,
        n_samples,
        signals,
    })
}

fn sign_extend_12(v: u16) -> i16 {
    if v & 0x800 != 0 {
        (v as i32 - 0x1000) as i16
    } else {
        v as i16
    }
}

/// Decodes `n_values` consecutive 12-bit samples packed in format 212.
///
/// Each 3-byte group holds two samples: byte 0 is the low byte of the first,
/// the low nibble of byte 1 its high bits; the high nibble of byte 1 holds the
/// high bits of the second, whose low byte is byte 2.
pub fn decode_212(bytes: &[u8], n_values: usize) -> Result<Vec<i16>> {
    let needed = (n_values * 3).div_ceil(2);
    if n_values == 0 || bytes.len() < needed {
        return Err(Error::TruncatedSignal(format!(
            "need {needed} bytes for {n_values} samples, file has {}",
            bytes.len()
        )));
    }
    let mut out = Vec::with_capacity(n_values);
    for group in bytes[..needed].chunks(3) {
        let b0 = u16::from(group[0]);
        let b1 = u16::from(group[1]);
        out.push(sign_extend_12(b0 | ((b1 & 0x0F) << 8)));
        if out.len() < n_values {
            let b2 = u16::from(group[2]);
            out.push(sign_extend_12(b2 | ((b1 & 0xF0) << 4)));
        }
    }
    Ok(out)
}

/// Packs samples into format 212. Values are truncated to 12 bits; an odd
/// trailing sample is written as a 2-byte group.
pub fn encode_212(samples: &[i16]) -> Vec<u8> {
    let mut out = Vec::with_capacity((samples.len() * 3).div_ceil(2));
    for pair in samples.chunks(2) {
        let s0 = pair[0] as u16 & 0x0FFF;
        out.push((s0 & 0xFF) as u8);
        match pair.get(1) {
            Some(&s1) => {
                let s1 = s1 as u16 & 0x0FFF;
                out.push(((s0 >> 8) | ((s1 >> 8) << 4)) as u8);
                out.push((s1 & 0xFF) as u8);
            }
            None => out.push((s0 >> 8) as u8),
        }
    }
    out
}

/// Loads channel 0 of a WFDB record given the path of its `.hea` header.
pub fn load_wfdb_record(header_path: impl AsRef<Path>) -> Result<EcgRecord> {
    load_wfdb_channel(header_path, 0)
}

pub fn load_wfdb_channel(header_path: impl AsRef<Path>, channel: usize) -> Result<EcgRecord> {
    let header_path = header_path.as_ref();
    let text = fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let header = parse_header(header_path, &text)?;
    if channel >= header.n_signals {
        return Err(Error::OutOfRange(format!(
            "channel {channel} of record with {} signals",
            header.n_signals
        )));
    }
    let sig = &header.signals[channel];
    if sig.format != 212 {
        return Err(Error::UnsupportedFormat(sig.format));
    }
    // Signals sharing the file are interleaved frame by frame.
    let group: Vec<&SignalSpec> = header
        .signals
        .iter()
        .filter(|s| s.file_name == sig.file_name)
        .collect();
    if let Some(other) = group.iter().find(|s| s.format != 212) {
        return Err(Error::UnsupportedFormat(other.format));
    }
    let index_in_file = header.signals[..channel]
        .iter()
        .filter(|s| s.file_name == sig.file_name)
        .count();
    let per_frame = group.len();

    let dat_path: PathBuf = header_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&sig.file_name);
    let bytes = fs::read(&dat_path).map_err(|e| Error::io(&dat_path, e))?;
    let payload = bytes.get(sig.byte_offset..).unwrap_or(&[]);

    let n_frames = match header.n_samples {
        Some(n) => n,
        None => {
            if payload.is_empty() || payload.len() % 3 != 0 {
                return Err(Error::TruncatedSignal(format!(
                    "{} holds {} bytes, not a whole number of sample pairs",
                    dat_path.display(),
                    payload.len()
                )));
            }
            payload.len() / 3 * 2 / per_frame
        }
    };
    let flat = decode_212(payload, n_frames * per_frame)?;
    let samples: Vec<i16> = flat
        .iter()
        .skip(index_in_file)
        .step_by(per_frame)
        .copied()
        .collect();

    let mut rec = EcgRecord::new(header.name, samples, header.fs, sig.adc_resolution)?;
    rec.channel = channel;
    Ok(rec)
}

/// Writes a single-channel format-212 record as `<dir>/<record_id>.hea` and
/// `<dir>/<record_id>.dat`. Returns the header path.
pub fn write_wfdb_record(dir: impl AsRef<Path>, rec: &EcgRecord) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let dat_name = format!("{}.dat", rec.record_id);
    let hea_path = dir.join(format!("{}.hea", rec.record_id));
    let checksum = rec
        .samples
        .iter()
        .fold(0i16, |acc, &s| acc.wrapping_add(s));
    let header = format!(
        "{} 1 {} {}\n{} 212 200 {} 1024 {} {} 0 ECG\n",
        rec.record_id,
        rec.fs,
        rec.samples.len(),
        dat_name,
        rec.adc_resolution_bits,
        rec.samples[0],
        checksum
    );
    fs::write(&hea_path, header).map_err(|e| Error::io(&hea_path, e))?;
    let dat_path = dir.join(dat_name);
    fs::write(&dat_path, encode_212(&rec.samples)).map_err(|e| Error::io(&dat_path, e))?;
    Ok(hea_path)
}

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub skip_header: bool,
    /// Zero-based column for comma-separated rows.
    pub column: usize,
}

/// Loads a newline-delimited numeric column. Values are rounded to the
/// nearest integer ADC unit.
pub fn load_csv_record(path: impl AsRef<Path>, fs: f64, opts: &CsvOptions) -> Result<EcgRecord> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 && opts.skip_header {
            continue;
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cell = line.split(',').nth(opts.column).map(str::trim).ok_or_else(|| {
            Error::Parse {
                row: i + 1,
                text: line.to_string(),
            }
        })?;
        let value: f64 = cell.parse().map_err(|_| Error::Parse {
            row: i + 1,
            text: line.to_string(),
        })?;
        if !value.is_finite() || value.round() < f64::from(i16::MIN) || value.round() > f64::from(i16::MAX) {
            return Err(Error::Parse {
                row: i + 1,
                text: line.to_string(),
            });
        }
        samples.push(value.round() as i16);
    }
    if samples.is_empty() {
        return Err(Error::Empty("csv file has no samples"));
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    EcgRecord::new(id, samples, fs, 16)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decode_single_group() {
        // byte1 low nibble -> high bits of s0, high nibble -> high bits of s1
        assert_eq!(decode_212(&[0x01, 0x20, 0x03], 2).unwrap(), vec![0x001, 0x203]);
        assert_eq!(decode_212(&[0xFF, 0x0F, 0x00], 2).unwrap(), vec![-1, 0]);
    }

    #[test]
    fn empty_signal_is_truncated() {
        assert!(matches!(decode_212(&[], 2), Err(Error::TruncatedSignal(_))));
        assert!(matches!(decode_212(&[1, 2], 2), Err(Error::TruncatedSignal(_))));
    }

    #[test]
    fn slice_bounds() {
        let rec = EcgRecord::new("t", (0..3600).map(|v| v as i16).collect(), 360.0, 11).unwrap();
        let s = rec.slice(1.0, 2.0).unwrap();
        assert_eq!(s.len(), 720);
        assert_eq!(s.samples[0], 360);
        assert_eq!(rec.slice(0.0, rec.duration_s()).unwrap(), rec);
        assert!(rec.slice(rec.duration_s() + 1.0, 1.0).is_err());
        assert!(rec.slice(-1.0, 1.0).is_err());
    }

    #[test]
    fn fragment_bounds() {
        let rec = EcgRecord::new("t", vec![1, 2, 3, 4], 360.0, 11).unwrap();
        let f = rec.fragment(1..3).unwrap();
        assert_eq!(f.values, &[2, 3]);
        assert_eq!(f.start_index, 1);
        assert!(rec.fragment(2..5).is_err());
        assert!(rec.fragment(2..2).is_err());
    }

    #[test]
    fn record_invariants() {
        assert!(EcgRecord::new("x", vec![], 360.0, 11).is_err());
        assert!(EcgRecord::new("x", vec![1], 0.0, 11).is_err());
    }

    proptest! {
        #[test]
        fn format_212_round_trip(pairs in prop::collection::vec((-2048i16..2048, -2048i16..2048), 1..200)) {
            let samples: Vec<i16> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
            let bytes = encode_212(&samples);
            prop_assert_eq!(bytes.len(), samples.len() / 2 * 3);
            let decoded = decode_212(&bytes, samples.len()).unwrap();
            prop_assert_eq!(&decoded, &samples);
            prop_assert_eq!(encode_212(&decoded), bytes);
        }
    }
}
