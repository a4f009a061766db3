//! Gain-shape vector quantization codec.
//!
//! Beats are resampled to `k` points and divided by their L2 norm. The
//! shape is matched against a fixed, offline-trained codebook, and the
//! time-domain residual against the rebuilt beat is sent as a sparse list
//! of significant points joined by straight lines.

use std::path::Path;

use crate::bitstream::{f16_bits, f16_value, quantize_f16, BitReader, BitWriter};
use crate::distance::dist_l2;
use crate::error::{Error, Result};
use crate::normalize::{amplitude_normalize_gsvq, period_denormalize, period_normalize};
use crate::od::round_samples;
use crate::rpeak::{detect_segments, RPeakConfig};
use crate::signal::EcgRecord;

pub const INDEX_BITS: u32 = 6;
pub const LENGTH_BITS: u32 = 9;
pub const COUNT_BITS: u32 = 9;
pub const DISTANCE_BITS: u32 = 4;
pub const VALUE_BITS: u32 = 11;
/// Largest gap between consecutive significant points.
pub const MAX_STEP: usize = (1 << DISTANCE_BITS) - 1;
pub const MAX_SEGMENT: usize = (1 << LENGTH_BITS) - 1;
const VALUE_MIN: i32 = -(1 << (VALUE_BITS - 1));
const VALUE_MAX: i32 = (1 << (VALUE_BITS - 1)) - 1;

const MAGIC: &[u8; 4] = b"GSCB";
const FILE_VERSION: u8 = 1;

/// Unit-norm codewords. The half-precision values are the canonical form:
/// the working codewords are those values renormalized, so a codebook
/// loaded from disk is identical to the one that was saved.
#[derive(Debug, Clone, PartialEq)]
pub struct GsvqCodebook {
    k: usize,
    stored: Vec<u16>,
    codewords: Vec<f64>,
}

impl GsvqCodebook {
    /// Quantizes `k`-length vectors to half precision. Each vector is
    /// normalized first.
    pub fn from_vectors(k: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        let mut stored = Vec::with_capacity(k * vectors.len());
        for v in vectors {
            if v.len() != k {
                return Err(Error::LengthMismatch(v.len(), k));
            }
            let (unit, _) = amplitude_normalize_gsvq(v)?;
            stored.extend(unit.iter().map(|&x| f16_bits(x)));
        }
        Self::from_f16_bits(k, stored)
    }

    pub fn from_f16_bits(k: usize, stored: Vec<u16>) -> Result<Self> {
        if k == 0 || stored.is_empty() || !stored.len().is_multiple_of(k) {
            return Err(Error::InvalidParameter(format!(
                "{} stored values for codeword length {k}",
                stored.len()
            )));
        }
        let mut codewords = Vec::with_capacity(stored.len());
        for chunk in stored.chunks(k) {
            let v: Vec<f64> = chunk.iter().map(|&b| f16_value(b)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::InvalidParameter("zero codeword".into()));
            }
            codewords.extend(v.iter().map(|x| x / norm));
        }
        Ok(Self { k, stored, codewords })
    }

    pub fn len(&self) -> usize {
        self.codewords.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize) -> Option<&[f64]> {
        self.codewords.get(i * self.k..(i + 1) * self.k)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.codewords.chunks(self.k)
    }

    /// Index and L2 distance of the closest codeword, ties to the lowest
    /// index.
    pub fn nearest(&self, shape: &[f64]) -> Result<(usize, f64)> {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.iter().enumerate() {
            let d = dist_l2(shape, c)?;
            if d < best.1 {
                best = (i, d);
            }
        }
        Ok(best)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(9 + 2 * self.stored.len());
        out.extend_from_slice(MAGIC);
        out.push(FILE_VERSION);
        out.extend_from_slice(&(self.len() as u16).to_be_bytes());
        out.extend_from_slice(&(self.k as u16).to_be_bytes());
        for b in &self.stored {
            out.extend_from_slice(&b.to_be_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 9 || &bytes[..4] != MAGIC {
            return Err(Error::corrupt("not a codebook file"));
        }
        if bytes[4] != FILE_VERSION {
            return Err(Error::corrupt(format!("codebook version {}", bytes[4])));
        }
        let n = u16::from_be_bytes([bytes[5], bytes[6]]) as usize;
        let k = u16::from_be_bytes([bytes[7], bytes[8]]) as usize;
        let body = &bytes[9..];
        if body.len() != 2 * n * k {
            return Err(Error::corrupt(format!(
                "codebook body of {} bytes, expected {}",
                body.len(),
                2 * n * k
            )));
        }
        let stored = body.chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
        Self::from_f16_bits(k, stored)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

const SPLIT_DELTA: f64 = 0.01;
const LLOYD_TOL: f64 = 1e-4;
const LLOYD_MAX_ITER: usize = 100;

#[derive(Debug, Clone)]
pub struct LbgTraining {
    pub codebook: GsvqCodebook,
    /// Mean squared L2 distortion after each Lloyd assignment, tagged with
    /// the codebook size at that point.
    pub trace: Vec<(usize, f64)>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn assign(vectors: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<(usize, f64)> {
    vectors
        .iter()
        .map(|v| {
            let mut best = (0, f64::INFINITY);
            for (i, c) in centroids.iter().enumerate() {
                let d = sq_dist(v, c);
                if d < best.1 {
                    best = (i, d);
                }
            }
            best
        })
        .collect()
}

/// Lloyd iterations in place; returns the per-cell distortion of the final
/// assignment.
fn lloyd(vectors: &[Vec<f64>], centroids: &mut [Vec<f64>], trace: &mut Vec<(usize, f64)>) -> Vec<f64> {
    let k = vectors[0].len();
    let mut prev: Option<f64> = None;
    for _ in 0..LLOYD_MAX_ITER {
        let cells = assign(vectors, centroids);
        let total: f64 = cells.iter().map(|c| c.1).sum::<f64>() / vectors.len() as f64;
        trace.push((centroids.len(), total));

        let mut sums = vec![vec![0.0; k]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        let mut cell_dist = vec![0.0; centroids.len()];
        for (v, &(c, d)) in vectors.iter().zip(&cells) {
            counts[c] += 1;
            cell_dist[c] += d;
            for (s, x) in sums[c].iter_mut().zip(v) {
                *s += x;
            }
        }
        let converged = prev.is_some_and(|p| p - total <= LLOYD_TOL * p) || total == 0.0;
        let mut reseeded = false;
        for c in 0..centroids.len() {
            if counts[c] > 0 {
                let n = counts[c] as f64;
                centroids[c] = sums[c].iter().map(|s| s / n).collect();
            }
        }
        for c in 0..centroids.len() {
            if counts[c] == 0 {
                reseeded = true;
                let donor = (0..counts.len()).max_by_key(|&j| (counts[j], std::cmp::Reverse(j))).unwrap();
                let far = vectors
                    .iter()
                    .zip(&cells)
                    .enumerate()
                    .filter(|(_, (_, cell))| cell.0 == donor)
                    .map(|(i, (v, _))| (i, sq_dist(v, &centroids[donor])))
                    .fold((usize::MAX, -1.0), |b, x| if x.1 > b.1 { x } else { b });
                centroids[c] = vectors[far.0].clone();
                counts[donor] -= 1;
                counts[c] = 1;
            }
        }
        if converged && !reseeded {
            return cell_dist;
        }
        prev = Some(total);
    }
    let cells = assign(vectors, centroids);
    let mut cell_dist = vec![0.0; centroids.len()];
    for &(c, d) in &cells {
        cell_dist[c] += d;
    }
    cell_dist
}

/// Linde-Buzo-Gray training with binary splitting. When doubling would
/// overshoot `n`, only the cells with the largest distortion are split.
pub fn lbg_train(vectors: &[Vec<f64>], n: usize) -> Result<LbgTraining> {
    if n == 0 {
        return Err(Error::InvalidParameter("codebook size 0".into()));
    }
    if vectors.len() < n {
        return Err(Error::InvalidParameter(format!(
            "{} training vectors for {n} codewords",
            vectors.len()
        )));
    }
    let k = vectors[0].len();
    if k == 0 {
        return Err(Error::Empty("training vector"));
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != k) {
        return Err(Error::LengthMismatch(v.len(), k));
    }

    let mut centroid = vec![0.0; k];
    for v in vectors {
        for (c, x) in centroid.iter_mut().zip(v) {
            *c += x;
        }
    }
    centroid.iter_mut().for_each(|c| *c /= vectors.len() as f64);
    let mut centroids = vec![centroid];
    let mut trace = Vec::new();
    let mut cell_dist = lloyd(vectors, &mut centroids, &mut trace);

    while centroids.len() < n {
        let mut order: Vec<usize> = (0..centroids.len()).collect();
        order.sort_by(|&a, &b| cell_dist[b].total_cmp(&cell_dist[a]).then(a.cmp(&b)));
        order.truncate(n - centroids.len());
        order.sort_unstable();
        for i in order {
            let c = centroids[i].clone();
            centroids[i] = c.iter().map(|x| x * (1.0 + SPLIT_DELTA)).collect();
            centroids.push(c.iter().map(|x| x * (1.0 - SPLIT_DELTA)).collect());
        }
        cell_dist = lloyd(vectors, &mut centroids, &mut trace);
    }

    let cells = assign(vectors, &centroids);
    for (i, c) in centroids.iter_mut().enumerate() {
        if c.iter().all(|&x| x == 0.0) {
            let member = cells.iter().position(|cell| cell.0 == i).unwrap_or(0);
            *c = vectors[member].clone();
        }
    }
    Ok(LbgTraining {
        codebook: GsvqCodebook::from_vectors(k, &centroids)?,
        trace,
    })
}

/// Unit-norm shapes of every detected beat of `rec`, for training.
pub fn segment_shapes(rec: &EcgRecord, k: usize, max_seg: usize, rpeak: &RPeakConfig) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for s in detect_segments(&rec.samples, rec.fs, rpeak, max_seg)? {
        let z: Vec<f64> = rec.samples[s].iter().map(|&v| f64::from(v)).collect();
        let (shape, _) = amplitude_normalize_gsvq(&period_normalize(&z, k)?)?;
        if shape.iter().any(|&v| v != 0.0) {
            out.push(shape);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidualPoint {
    /// Samples since the previous point, 1..=15.
    pub distance: u8,
    pub value: i16,
}

/// Significant points of a residual. Implicit anchors at position -1 and
/// at `len` hold the value 0; the residual between points is the rounded
/// straight line joining them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResidualStream {
    pub len: usize,
    pub points: Vec<ResidualPoint>,
    /// Some residual fell outside the 11-bit range and was clamped.
    pub clamped: bool,
}

impl ResidualStream {
    pub fn bit_len(&self) -> usize {
        COUNT_BITS as usize + self.points.len() * (DISTANCE_BITS + VALUE_BITS) as usize
    }
}

fn line_at(p0: isize, v0: i32, p1: isize, v1: i32, i: isize) -> i32 {
    (f64::from(v0) + f64::from(v1 - v0) * (i - p0) as f64 / (p1 - p0) as f64).round() as i32
}

/// Greedy bounded-deviation piecewise-linear coding. From each anchor the
/// run first tries to reach the end anchor directly, then extends one
/// sample at a time, at most [`MAX_STEP`] ahead, while every skipped sample
/// stays within `a_th` of the rebuilt line. The last good end becomes the
/// next point.
pub fn encode_residuals(residual: &[i32], a_th: f64) -> Result<ResidualStream> {
    if residual.len() > MAX_SEGMENT {
        return Err(Error::InvalidParameter(format!(
            "residual of {} samples exceeds {MAX_SEGMENT}",
            residual.len()
        )));
    }
    if !(a_th >= 0.0) {
        return Err(Error::InvalidParameter(format!("threshold {a_th}")));
    }
    let clamped = residual.iter().any(|&r| !(VALUE_MIN..=VALUE_MAX).contains(&r));
    let r: Vec<i32> = residual.iter().map(|&v| v.clamp(VALUE_MIN, VALUE_MAX)).collect();
    let l = r.len() as isize;
    let value = |i: isize| if i == l { 0 } else { r[i as usize] };
    let fits = |p: isize, v: i32, e: isize| {
        let ve = value(e);
        (p + 1..e).all(|i| f64::from((line_at(p, v, e, ve, i) - r[i as usize]).abs()) <= a_th)
    };

    let mut points = Vec::new();
    let (mut p, mut v) = (-1isize, 0i32);
    while !fits(p, v, l) {
        let mut e = p + 1;
        while e < (p + MAX_STEP as isize).min(l - 1) && fits(p, v, e + 1) {
            e += 1;
        }
        points.push(ResidualPoint {
            distance: (e - p) as u8,
            value: r[e as usize] as i16,
        });
        (p, v) = (e, r[e as usize]);
    }
    Ok(ResidualStream {
        len: r.len(),
        points,
        clamped,
    })
}

pub fn decode_residuals(stream: &ResidualStream) -> Result<Vec<i32>> {
    let l = stream.len as isize;
    let mut out = Vec::with_capacity(stream.len);
    let (mut p, mut v) = (-1isize, 0i32);
    let anchors = stream
        .points
        .iter()
        .map(|pt| (pt.distance, i32::from(pt.value)))
        .map(Some)
        .chain(std::iter::once(None));
    for a in anchors {
        let (e, ve) = match a {
            Some((d, val)) => {
                if d == 0 || d as usize > MAX_STEP {
                    return Err(Error::corrupt(format!("point distance {d}")));
                }
                (p + isize::from(d), val)
            }
            None => (l, 0),
        };
        if e > l || (a.is_some() && e == l) {
            return Err(Error::corrupt("significant points run past the segment"));
        }
        out.extend((p + 1..e).map(|i| line_at(p, v, e, ve, i)));
        if e < l {
            out.push(ve);
        }
        (p, v) = (e, ve);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsvqConfig {
    /// Residual threshold in ADC units.
    pub a_th: f64,
    pub k: usize,
    pub max_seg: usize,
    pub rpeak: RPeakConfig,
}

impl Default for GsvqConfig {
    fn default() -> Self {
        Self {
            a_th: 10.0,
            k: 256,
            max_seg: MAX_SEGMENT,
            rpeak: RPeakConfig::default(),
        }
    }
}

impl GsvqConfig {
    pub fn with_threshold(self, a_th: f64) -> Self {
        Self { a_th, ..self }
    }

    pub fn validate(&self, codebook: &GsvqCodebook) -> Result<()> {
        if !(self.a_th >= 0.0) {
            return Err(Error::InvalidParameter(format!("threshold {}", self.a_th)));
        }
        if self.max_seg == 0 || self.max_seg > MAX_SEGMENT {
            return Err(Error::InvalidParameter(format!(
                "max segment {} outside 1..={MAX_SEGMENT}",
                self.max_seg
            )));
        }
        if codebook.k() != self.k {
            return Err(Error::LengthMismatch(codebook.k(), self.k));
        }
        if codebook.len() > 1 << INDEX_BITS {
            return Err(Error::InvalidParameter(format!(
                "codebook of {} exceeds {} entries",
                codebook.len(),
                1 << INDEX_BITS
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsvqMessage {
    pub index: usize,
    pub len: usize,
    pub gain: f64,
    pub residual: ResidualStream,
}

impl GsvqMessage {
    pub fn bit_len(&self) -> usize {
        (INDEX_BITS + LENGTH_BITS + 16) as usize + self.residual.bit_len()
    }
}

fn base_beat(codebook: &GsvqCodebook, index: usize, gain: f64, len: usize) -> Result<Vec<i16>> {
    let c = codebook
        .get(index)
        .ok_or_else(|| Error::corrupt(format!("codeword {index} outside codebook of {}", codebook.len())))?;
    let scaled: Vec<f64> = c.iter().map(|v| gain * v).collect();
    Ok(round_samples(&period_denormalize(&scaled, len)?).collect())
}

/// Encodes one segment of at most `cfg.max_seg` samples.
pub fn gsvq_encode_segment(z: &[i16], codebook: &GsvqCodebook, cfg: &GsvqConfig) -> Result<GsvqMessage> {
    if z.is_empty() || z.len() > cfg.max_seg {
        return Err(Error::InvalidParameter(format!(
            "segment of {} samples outside 1..={}",
            z.len(),
            cfg.max_seg
        )));
    }
    let zf: Vec<f64> = z.iter().map(|&v| f64::from(v)).collect();
    let (shape, g) = amplitude_normalize_gsvq(&period_normalize(&zf, cfg.k)?)?;
    let gain = quantize_f16(g);
    let (index, _) = codebook.nearest(&shape)?;
    let base = base_beat(codebook, index, gain, z.len())?;
    let residual: Vec<i32> = z.iter().zip(&base).map(|(&a, &b)| i32::from(a) - i32::from(b)).collect();
    Ok(GsvqMessage {
        index,
        len: z.len(),
        gain,
        residual: encode_residuals(&residual, cfg.a_th)?,
    })
}

pub fn gsvq_compress(rec: &EcgRecord, codebook: &GsvqCodebook, cfg: &GsvqConfig) -> Result<Vec<GsvqMessage>> {
    cfg.validate(codebook)?;
    detect_segments(&rec.samples, rec.fs, &cfg.rpeak, cfg.max_seg)?
        .into_iter()
        .map(|s| gsvq_encode_segment(&rec.samples[s], codebook, cfg))
        .collect()
}

pub fn gsvq_decode_segment(msg: &GsvqMessage, codebook: &GsvqCodebook, out: &mut Vec<i16>) -> Result<()> {
    if msg.residual.len != msg.len {
        return Err(Error::LengthMismatch(msg.residual.len, msg.len));
    }
    let base = base_beat(codebook, msg.index, msg.gain, msg.len)?;
    let res = decode_residuals(&msg.residual)?;
    out.extend(
        base.iter()
            .zip(&res)
            .map(|(&b, &r)| (i32::from(b) + r).clamp(i16::MIN.into(), i16::MAX.into()) as i16),
    );
    Ok(())
}

pub fn gsvq_decompress(messages: &[GsvqMessage], codebook: &GsvqCodebook) -> Result<Vec<i16>> {
    let mut out = Vec::new();
    for m in messages {
        gsvq_decode_segment(m, codebook, &mut out)?;
    }
    Ok(out)
}

pub fn total_bits(messages: &[GsvqMessage]) -> usize {
    messages.iter().map(GsvqMessage::bit_len).sum()
}

pub fn write_messages(w: &mut BitWriter, messages: &[GsvqMessage]) -> Result<()> {
    for m in messages {
        if m.len == 0 {
            return Err(Error::InvalidParameter("empty segment".into()));
        }
        w.write_uint(m.index as u64, INDEX_BITS)?;
        w.write_uint(m.len as u64, LENGTH_BITS)?;
        w.write_f16(m.gain);
        w.write_uint(m.residual.points.len() as u64, COUNT_BITS)?;
        for p in &m.residual.points {
            w.write_uint(u64::from(p.distance), DISTANCE_BITS)?;
            w.write_uint(u64::from(p.value as u16) & ((1 << VALUE_BITS) - 1), VALUE_BITS)?;
        }
    }
    Ok(())
}

pub fn read_messages(r: &mut BitReader<'_>, n_messages: usize) -> Result<Vec<GsvqMessage>> {
    let mut out = Vec::with_capacity(n_messages);
    for _ in 0..n_messages {
        let index = r.read_uint(INDEX_BITS)? as usize;
        let len = r.read_uint(LENGTH_BITS)? as usize;
        if len == 0 {
            return Err(Error::corrupt("segment length 0"));
        }
        let gain = r.read_f16()?;
        let count = r.read_uint(COUNT_BITS)? as usize;
        let mut points = Vec::with_capacity(count);
        for _ in 0..count {
            let distance = r.read_uint(DISTANCE_BITS)? as u8;
            let raw = r.read_uint(VALUE_BITS)? as i32;
            let value = if raw > VALUE_MAX { raw - (1 << VALUE_BITS) } else { raw } as i16;
            points.push(ResidualPoint { distance, value });
        }
        out.push(GsvqMessage {
            index,
            len,
            gain,
            residual: ResidualStream {
                len,
                points,
                clamped: false,
            },
        });
    }
    Ok(out)
}
