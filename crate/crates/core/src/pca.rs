//! Principal component analysis codec.
//!
//! Consecutive beats are grouped into chunks of `n`. Each beat is resampled
//! to `w` points and amplitude normalized, the chunk is projected onto the
//! `k` leading eigenvectors of its covariance, and the mean, basis, scores
//! and per-beat scalars are sent in half precision.

use crate::bitstream::{quantize_f16, BitReader, BitWriter};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix, SymmetricEigen};
use crate::normalize::{apply_od, invert_od, od_gain_offset, period_denormalize, period_normalize};
use crate::od::round_samples;
use crate::rpeak::{detect_segments, RPeakConfig};
use crate::signal::EcgRecord;

pub const K_BITS: u32 = 6;
pub const COUNT_BITS: u32 = 6;
pub const LENGTH_BITS: u32 = 9;
const SCALAR_BITS: usize = 16;
const JACOBI_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcaConfig {
    /// Segments per chunk.
    pub n: usize,
    /// Principal components kept.
    pub k: usize,
    pub w: usize,
    pub max_seg: usize,
    pub rpeak: RPeakConfig,
}

impl Default for PcaConfig {
    fn default() -> Self {
        Self {
            n: 50,
            k: 8,
            w: 200,
            max_seg: 512,
            rpeak: RPeakConfig::default(),
        }
    }
}

impl PcaConfig {
    pub fn with_k(self, k: usize) -> Self {
        Self { k, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n + 1 >= 1 << COUNT_BITS {
            return Err(Error::InvalidParameter(format!(
                "chunk size {} outside 2..{}",
                self.n,
                (1 << COUNT_BITS) - 1
            )));
        }
        if self.w < 2 {
            return Err(Error::InvalidParameter(format!("codeword length {}", self.w)));
        }
        if self.k == 0 || self.k >= self.w || self.k >= 1 << K_BITS {
            return Err(Error::InvalidParameter(format!(
                "{} components for codeword length {}",
                self.k, self.w
            )));
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

/// Mean, leading eigenvectors (columns) and scores of a data matrix.
#[derive(Debug, Clone)]
pub struct PcaBasis {
    pub mu: Vec<f64>,
    pub psi: Matrix,
    pub y: Matrix,
    /// All covariance eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
}

fn column_means(x: &Matrix) -> Vec<f64> {
    let mut mu = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        for (m, v) in mu.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    mu.iter_mut().for_each(|m| *m /= x.rows() as f64);
    mu
}

fn centered(x: &Matrix, mu: &[f64]) -> Matrix {
    let mut c = x.clone();
    for i in 0..c.rows() {
        for (v, m) in c.row_mut(i).iter_mut().zip(mu) {
            *v -= m;
        }
    }
    c
}

/// Eigendecomposition of the sample covariance (divisor `n - 1`).
fn covariance_eigen(x: &Matrix, mu: &[f64]) -> Result<SymmetricEigen> {
    let xc = centered(x, mu);
    let cov = xc
        .transpose()
        .matmul(&xc)?
        .map(|v| v / (x.rows() - 1) as f64);
    symmetric_eigen(&cov, JACOBI_TOL)
}

/// Projects the rows of `x` (one normalized segment each) onto the `k`
/// leading principal components.
pub fn pca_encode(x: &Matrix, k: usize) -> Result<PcaBasis> {
    if x.rows() < 2 {
        return Err(Error::InvalidParameter(format!("{} rows, need at least 2", x.rows())));
    }
    if k == 0 || k >= x.cols() {
        return Err(Error::InvalidParameter(format!("{k} components for {} columns", x.cols())));
    }
    let mu = column_means(x);
    let eig = covariance_eigen(x, &mu)?;
    let psi = eig.vectors.leading_columns(k);
    let y = centered(x, &mu).matmul(&psi)?;
    Ok(PcaBasis {
        mu,
        psi,
        y,
        eigenvalues: eig.values,
    })
}

/// `Y Ψᵀ + μ`.
pub fn reconstruct_rows(mu: &[f64], psi: &Matrix, y: &Matrix) -> Result<Matrix> {
    if psi.rows() != mu.len() {
        return Err(Error::LengthMismatch(psi.rows(), mu.len()));
    }
    let mut x = y.matmul(&psi.transpose())?;
    for i in 0..x.rows() {
        for (v, m) in x.row_mut(i).iter_mut().zip(mu) {
            *v += m;
        }
    }
    Ok(x)
}

/// One transmitted chunk. All reals hold half-precision values.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaChunk {
    pub k: usize,
    pub w: usize,
    pub mu: Vec<f64>,
    /// `w x k`.
    pub psi: Matrix,
    /// `n' x k`.
    pub y: Matrix,
    pub lens: Vec<usize>,
    pub gains: Vec<f64>,
    pub offsets: Vec<f64>,
}

impl PcaChunk {
    pub fn segments(&self) -> usize {
        self.lens.len()
    }

    pub fn bit_len(&self) -> usize {
        let n = self.segments();
        (K_BITS + COUNT_BITS) as usize
            + n * LENGTH_BITS as usize
            + SCALAR_BITS * (self.w + self.w * self.k + n * self.k + 2 * n)
    }
}

/// Normalized rows of a chunk and the eigendecomposition behind them, so
/// that several values of `k` can share one decomposition.
#[derive(Debug, Clone)]
struct PreparedChunk {
    x: Matrix,
    lens: Vec<usize>,
    gains: Vec<f64>,
    offsets: Vec<f64>,
    mu: Vec<f64>,
    eigen: Option<SymmetricEigen>,
}

impl PreparedChunk {
    fn new(segments: &[&[i16]], w: usize) -> Result<Self> {
        let mut rows = Vec::with_capacity(segments.len());
        let (mut lens, mut gains, mut offsets) = (Vec::new(), Vec::new(), Vec::new());
        for z in segments {
            let zf: Vec<f64> = z.iter().map(|&v| f64::from(v)).collect();
            let x = period_normalize(&zf, w)?;
            let (g, o) = od_gain_offset(&x)?;
            let (g, o) = (quantize_f16(g), quantize_f16(o));
            rows.push(apply_od(&x, g, o));
            lens.push(z.len());
            gains.push(g);
            offsets.push(o);
        }
        let x = Matrix::from_rows(&rows)?;
        let mu = column_means(&x);
        let eigen = if x.rows() >= 2 {
            Some(covariance_eigen(&x, &mu)?)
        } else {
            None
        };
        Ok(Self {
            x,
            lens,
            gains,
            offsets,
            mu,
            eigen,
        })
    }

    /// Keeps at most `n' - 1` components, the rank of the centred rows.
    fn encode(&self, k: usize) -> Result<PcaChunk> {
        let w = self.x.cols();
        let k = k.min(self.x.rows().saturating_sub(1));
        let mu: Vec<f64> = self.mu.iter().map(|&v| quantize_f16(v)).collect();
        let psi = match &self.eigen {
            Some(e) if k > 0 => e.vectors.leading_columns(k).map(quantize_f16),
            _ => Matrix::zeros(w, 0),
        };
        let y = centered(&self.x, &mu).matmul(&psi)?.map(quantize_f16);
        Ok(PcaChunk {
            k,
            w,
            mu,
            psi,
            y,
            lens: self.lens.clone(),
            gains: self.gains.clone(),
            offsets: self.offsets.clone(),
        })
    }
}

/// Segmentation and per-chunk decompositions of a record, reusable across
/// component counts.
#[derive(Debug, Clone)]
pub struct PcaAnalysis {
    chunks: Vec<PreparedChunk>,
}

impl PcaAnalysis {
    /// A trailing chunk of a single segment is merged into the chunk before
    /// it.
    pub fn new(rec: &EcgRecord, cfg: &PcaConfig) -> Result<Self> {
        cfg.validate()?;
        let segs: Vec<&[i16]> = detect_segments(&rec.samples, rec.fs, &cfg.rpeak, cfg.max_seg)?
            .into_iter()
            .map(|s| &rec.samples[s])
            .collect();
        let mut groups: Vec<&[&[i16]]> = segs.chunks(cfg.n).collect();
        if groups.len() >= 2 && groups.last().is_some_and(|g| g.len() == 1) {
            groups.pop();
            let start = (groups.len() - 1) * cfg.n;
            *groups.last_mut().unwrap() = &segs[start..];
        }
        let chunks = groups
            .into_iter()
            .map(|g| PreparedChunk::new(g, cfg.w))
            .collect::<Result<_>>()?;
        Ok(Self { chunks })
    }

    pub fn encode(&self, k: usize) -> Result<Vec<PcaChunk>> {
        self.chunks.iter().map(|c| c.encode(k)).collect()
    }
}

pub fn pca_compress(rec: &EcgRecord, cfg: &PcaConfig) -> Result<Vec<PcaChunk>> {
    PcaAnalysis::new(rec, cfg)?.encode(cfg.k)
}

pub fn pca_decode(chunk: &PcaChunk) -> Result<Vec<i16>> {
    let n = chunk.segments();
    if chunk.gains.len() != n || chunk.offsets.len() != n {
        return Err(Error::LengthMismatch(chunk.gains.len().min(chunk.offsets.len()), n));
    }
    if chunk.mu.len() != chunk.w || chunk.psi.rows() != chunk.w || chunk.psi.cols() != chunk.k {
        return Err(Error::corrupt("basis dimensions disagree with the chunk header"));
    }
    if chunk.y.rows() != n || chunk.y.cols() != chunk.k {
        return Err(Error::corrupt("score dimensions disagree with the chunk header"));
    }
    let x = reconstruct_rows(&chunk.mu, &chunk.psi, &chunk.y)?;
    let mut out = Vec::with_capacity(chunk.lens.iter().sum());
    for i in 0..n {
        let row = invert_od(x.row(i), chunk.gains[i], chunk.offsets[i]);
        out.extend(round_samples(&period_denormalize(&row, chunk.lens[i])?));
    }
    Ok(out)
}

pub fn pca_decompress(chunks: &[PcaChunk]) -> Result<Vec<i16>> {
    let mut out = Vec::new();
    for c in chunks {
        out.extend(pca_decode(c)?);
    }
    Ok(out)
}

pub fn total_bits(chunks: &[PcaChunk]) -> usize {
    chunks.iter().map(PcaChunk::bit_len).sum()
}

pub fn write_chunks(wr: &mut BitWriter, chunks: &[PcaChunk]) -> Result<()> {
    for c in chunks {
        wr.write_uint(c.k as u64, K_BITS)?;
        wr.write_uint(c.segments() as u64, COUNT_BITS)?;
        for &l in &c.lens {
            if l == 0 {
                return Err(Error::InvalidParameter("empty segment".into()));
            }
            wr.write_uint(l as u64 - 1, LENGTH_BITS)?;
        }
        let reals = c
            .mu
            .iter()
            .chain(c.psi.as_slice())
            .chain(c.y.as_slice())
            .chain(&c.gains)
            .chain(&c.offsets);
        for &v in reals {
            wr.write_f16(v);
        }
    }
    Ok(())
}

pub fn read_chunks(r: &mut BitReader<'_>, w: usize, n_chunks: usize) -> Result<Vec<PcaChunk>> {
    let mut out = Vec::with_capacity(n_chunks);
    for _ in 0..n_chunks {
        let k = r.read_uint(K_BITS)? as usize;
        let n = r.read_uint(COUNT_BITS)? as usize;
        if n == 0 {
            return Err(Error::corrupt("chunk without segments"));
        }
        let lens = (0..n)
            .map(|_| Ok(r.read_uint(LENGTH_BITS)? as usize + 1))
            .collect::<Result<Vec<_>>>()?;
        let mut reals = |count: usize| (0..count).map(|_| r.read_f16()).collect::<Result<Vec<_>>>();
        let mu = reals(w)?;
        let psi = Matrix::from_vec(w, k, reals(w * k)?)?;
        let y = Matrix::from_vec(n, k, reals(n * k)?)?;
        let gains = reals(n)?;
        let offsets = reals(n)?;
        out.push(PcaChunk {
            k,
            w,
            mu,
            psi,
            y,
            lens,
            gains,
            offsets,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synthetic_ecg, SynthConfig};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn sq_error(a: &Matrix, b: &Matrix) -> f64 {
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    #[test]
    fn identical_rows_have_zero_scores() {
        let row: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let x = Matrix::from_rows(&vec![row; 6]).unwrap();
        let b = pca_encode(&x, 3).unwrap();
        assert!(b.y.as_slice().iter().all(|v| v.abs() < 1e-12));
        assert!(reconstruct_rows(&b.mu, &b.psi, &b.y).unwrap().max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn rank_one_is_exact() {
        let pattern: Vec<f64> = (0..20).map(|i| (i as f64 * 0.3).cos()).collect();
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|r| pattern.iter().map(|p| 5.0 + (r as f64 - 3.5) * p).collect())
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let b = pca_encode(&x, 1).unwrap();
        let back = reconstruct_rows(&b.mu, &b.psi, &b.y).unwrap();
        let scale = x.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(back.max_abs_diff(&x) <= 1e-8 * scale);
    }

    #[test]
    fn dropped_energy_matches_eigenvalues() {
        let x = random_matrix(30, 12, 1);
        for k in 1..12 {
            let b = pca_encode(&x, k).unwrap();
            let err = sq_error(&reconstruct_rows(&b.mu, &b.psi, &b.y).unwrap(), &x);
            let tail: f64 = b.eigenvalues[k..].iter().sum::<f64>() * 29.0;
            assert!((err - tail).abs() < 1e-8 * tail.max(1.0), "k={k}: {err} vs {tail}");
        }
    }

    #[test]
    fn basis_is_orthonormal_and_deterministic() {
        let x = random_matrix(20, 15, 2);
        let b = pca_encode(&x, 6).unwrap();
        let g = b.psi.transpose().matmul(&b.psi).unwrap();
        assert!(g.max_abs_diff(&Matrix::identity(6)) < 1e-8);
        assert_eq!(pca_encode(&x, 6).unwrap().psi, b.psi);
        assert!(b.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(pca_encode(&random_matrix(1, 5, 0), 1).is_err());
        assert!(pca_encode(&random_matrix(4, 5, 0), 5).is_err());
        assert!(pca_encode(&random_matrix(4, 5, 0), 0).is_err());
        assert!(PcaConfig::default().with_k(200).validate().is_err());
    }

    #[test]
    fn zero_chunk_decodes_to_zeros() {
        let c = PcaChunk {
            k: 1,
            w: 4,
            mu: vec![0.0; 4],
            psi: Matrix::zeros(4, 1),
            y: Matrix::zeros(2, 1),
            lens: vec![3, 5],
            gains: vec![1.0, 1.0],
            offsets: vec![0.0, 0.0],
        };
        assert_eq!(pca_decode(&c).unwrap(), vec![0; 8]);
        let bad = PcaChunk { k: 2, ..c };
        assert!(pca_decode(&bad).is_err());
    }

    fn record(n: usize) -> EcgRecord {
        EcgRecord::new("s", synthetic_ecg(n, &SynthConfig::default()), 360.0, 11).unwrap()
    }

    #[test]
    fn compress_covers_record_and_round_trips_wire() {
        let rec = record(36_000);
        let cfg = PcaConfig::default();
        let chunks = pca_compress(&rec, &cfg).unwrap();
        assert!(chunks.len() >= 2);
        let out = pca_decompress(&chunks).unwrap();
        assert_eq!(out.len(), rec.len());
        let n = chunks[0].segments();
        assert_eq!(
            chunks[0].bit_len(),
            12 + 9 * n + 16 * (200 + 200 * cfg.k + n * cfg.k) + 32 * n
        );

        let mut w = BitWriter::new();
        write_chunks(&mut w, &chunks).unwrap();
        assert_eq!(w.bit_len(), total_bits(&chunks));
        let bytes = w.into_bytes();
        let back = read_chunks(&mut BitReader::new(&bytes), cfg.w, chunks.len()).unwrap();
        assert_eq!(back, chunks);
    }

    #[test]
    fn error_falls_with_more_components() {
        let rec = record(20_000);
        let a = PcaAnalysis::new(&rec, &PcaConfig::default()).unwrap();
        let err = |k| {
            let out = pca_decompress(&a.encode(k).unwrap()).unwrap();
            out.iter()
                .zip(&rec.samples)
                .map(|(&x, &y)| (f64::from(x) - f64::from(y)).powi(2))
                .sum::<f64>()
        };
        assert!(err(1) > err(8));
        assert!(err(8) > err(15));
    }

    #[test]
    fn short_records() {
        let rec = record(400);
        let chunks = pca_compress(&rec, &PcaConfig::default()).unwrap();
        assert_eq!(chunks.len(), 1);
        assert!(chunks[0].k < chunks[0].segments().max(1));
        assert_eq!(pca_decompress(&chunks).unwrap().len(), 400);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn error_non_increasing_in_k(seed in any::<u64>()) {
            let x = random_matrix(10, 8, seed);
            let mut prev = f64::INFINITY;
            for k in 1..8 {
                let b = pca_encode(&x, k).unwrap();
                let e = sq_error(&reconstruct_rows(&b.mu, &b.psi, &b.y).unwrap(), &x);
                prop_assert!(e <= prev + 1e-9);
                prev = e;
            }
        }
    }
}
