//! Rate-distortion sweeps, the InLC variant matrix and the distance
//! monotonicity probe.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distance::{distance_i16, Distance, DistanceKind};
use crate::error::{Error, Result};
use crate::gsvq::{self, lbg_train, segment_shapes, GsvqCodebook, GsvqConfig, LbgTraining};
use crate::inlc::{self, BankPolicy, InlcConfig, OffsetMode};
use crate::metrics::{compression_ratio, distortion_report_i16, format_g6, quality_score, DistortionReport, Value};
use crate::od::{self, OdConfig};
use crate::pca::{self, PcaAnalysis, PcaConfig};
use crate::signal::EcgRecord;
use crate::wire::{CompressedStream, Messages, Schema, StreamConfig};

pub const CSV_VERSION_LINE: &str = "# ecgsq sweep csv v1";
pub const CSV_HEADER: &str = "record,schema,variant,param,original_bits,compressed_bits,cr,prd,prdn,rmse,rmsep,snr,mae,cc,qs,encode_ms,decode_ms";
pub const AVERAGE: &str = "AVERAGE";
/// Bits per original sample in the compression ratio.
pub const ORIGINAL_SAMPLE_BITS: u64 = 16;

pub const OD_EPS: [f64; 15] = [
    0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.20, 0.22, 0.24, 0.26, 0.28, 0.30,
];
/// Residual thresholds as fractions of the converter's full scale.
pub const GSVQ_THRESHOLDS: [f64; 15] = OD_EPS;
pub const PCA_K: [f64; 8] = [15.0, 13.0, 11.0, 9.0, 7.0, 5.0, 3.0, 1.0];
pub const INLC_EPS: [f64; 12] = [2.0, 4.0, 6.0, 8.0, 10.0, 15.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0];

pub fn default_params(schema: Schema) -> Vec<f64> {
    match schema {
        Schema::Inlc => INLC_EPS.to_vec(),
        Schema::Od => OD_EPS.to_vec(),
        Schema::Gsvq => GSVQ_THRESHOLDS.to_vec(),
        Schema::Pca => PCA_K.to_vec(),
    }
}

/// Short label of an InLC configuration: distance (ODF for V1, NDF for
/// V2), bank updating (NP static, UP continuous, PP<s> periodic) and
/// transmitted parameters (GO gain and offset, OO offset only).
pub fn inlc_variant_label(cfg: &InlcConfig) -> String {
    let d = match cfg.distance {
        DistanceKind::V1 => "ODF",
        DistanceKind::V2 => "NDF",
    };
    let b = match cfg.bank_policy {
        BankPolicy::Static => "NP".to_string(),
        BankPolicy::Continuous => "UP".to_string(),
        BankPolicy::Periodic { interval_s } => format!("PP{}", format_g6(interval_s)),
    };
    let o = match cfg.offset_mode {
        OffsetMode::GainOffset => "GO",
        OffsetMode::OffsetOnly => "OO",
    };
    format!("{d}-{b}-{o}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub schema: Schema,
    /// Thresholds, threshold fractions (GSVQ) or component counts (PCA).
    pub params: Vec<f64>,
    /// Base InLC configuration; `eps` is replaced by each parameter.
    pub inlc: InlcConfig,
    pub od: OdConfig,
    pub gsvq: GsvqConfig,
    pub pca: PcaConfig,
    /// Fill the timing columns. Off by default so that output is
    /// reproducible byte for byte.
    pub timing: bool,
}

impl SweepSpec {
    pub fn new(schema: Schema) -> Self {
        Self {
            schema,
            params: default_params(schema),
            inlc: InlcConfig::default(),
            od: OdConfig::default(),
            gsvq: GsvqConfig::default(),
            pca: PcaConfig::default(),
            timing: false,
        }
    }

    pub fn variant(&self) -> String {
        match self.schema {
            Schema::Inlc => inlc_variant_label(&self.inlc),
            _ => "-".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub record: String,
    pub schema: Schema,
    pub variant: String,
    pub param: f64,
    pub original_bits: f64,
    pub compressed_bits: f64,
    pub cr: f64,
    pub report: DistortionReport,
    pub qs: Value,
    pub encode_ms: Option<f64>,
    pub decode_ms: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    /// Sorted by record, then parameter as given.
    pub rows: Vec<SweepRow>,
    /// One per (variant, parameter), averaged over the records that
    /// succeeded.
    pub averages: Vec<SweepRow>,
    /// `(record, message)` for records that failed.
    pub failures: Vec<(String, String)>,
}

/// Compresses `rec` into a container. `param` is interpreted per schema.
pub fn compress(rec: &EcgRecord, spec: &SweepSpec, param: f64, codebook: Option<&GsvqCodebook>) -> Result<CompressedStream> {
    let (config, messages) = match spec.schema {
        Schema::Inlc => {
            let cfg = spec.inlc.with_eps(param);
            (StreamConfig::Inlc(cfg), Messages::Inlc(inlc::inlc_compress(&rec.samples, &cfg)?))
        }
        Schema::Od => (
            StreamConfig::Od { w: spec.od.w },
            Messages::Od(od::od_compress(rec, &spec.od.with_eps(param))?),
        ),
        Schema::Gsvq => {
            let cb = codebook.ok_or(Error::InvalidParameter("GSVQ needs a codebook".into()))?;
            let cfg = spec.gsvq.with_threshold(param * rec.full_scale());
            (
                StreamConfig::Gsvq {
                    k: cfg.k,
                    codebook_len: cb.len(),
                },
                Messages::Gsvq(gsvq::gsvq_compress(rec, cb, &cfg)?),
            )
        }
        Schema::Pca => (
            StreamConfig::Pca { w: spec.pca.w },
            Messages::Pca(pca::pca_compress(rec, &spec.pca.with_k(pca_k(param)?))?),
        ),
    };
    Ok(CompressedStream {
        config,
        samples: rec.len(),
        messages,
    })
}

fn pca_k(param: f64) -> Result<usize> {
    if param >= 1.0 && param.fract() == 0.0 {
        Ok(param as usize)
    } else {
        Err(Error::InvalidParameter(format!("component count {param}")))
    }
}

fn make_row(rec: &EcgRecord, spec: &SweepSpec, param: f64, stream: &CompressedStream, out: &[i16]) -> Result<SweepRow> {
    let original_bits = rec.len() as u64 * ORIGINAL_SAMPLE_BITS;
    let compressed_bits = stream.total_bits() as u64;
    let cr = compression_ratio(original_bits, compressed_bits)?;
    let report = distortion_report_i16(&rec.samples, out, rec.fs)?;
    let qs = match report.prd {
        Value::Finite(p) => quality_score(cr, p),
        _ => Value::Undefined,
    };
    Ok(SweepRow {
        record: rec.record_id.clone(),
        schema: spec.schema,
        variant: spec.variant(),
        param,
        original_bits: original_bits as f64,
        compressed_bits: compressed_bits as f64,
        cr,
        report,
        qs,
        encode_ms: None,
        decode_ms: None,
    })
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn sweep_record(rec: &EcgRecord, spec: &SweepSpec, codebook: Option<&GsvqCodebook>) -> Result<Vec<SweepRow>> {
    // Without timing, PCA shares one eigendecomposition per chunk across
    // all K values. With timing, each K pays for its own.
    let analysis = match spec.schema {
        Schema::Pca if !spec.timing => Some(PcaAnalysis::new(rec, &spec.pca)?),
        _ => None,
    };
    let mut rows = Vec::with_capacity(spec.params.len());
    for &param in &spec.params {
        let t = Instant::now();
        let stream = match &analysis {
            Some(a) => CompressedStream {
                config: StreamConfig::Pca { w: spec.pca.w },
                samples: rec.len(),
                messages: Messages::Pca(a.encode(pca_k(param)?)?),
            },
            None => compress(rec, spec, param, codebook)?,
        };
        let encode_ms = ms(t);
        let t = Instant::now();
        let out = stream.decompress(codebook)?;
        let decode_ms = ms(t);
        let mut row = make_row(rec, spec, param, &stream, &out)?;
        if spec.timing {
            row.encode_ms = Some(encode_ms);
            row.decode_ms = Some(decode_ms);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn mean_value(v: impl Iterator<Item = Value>) -> Value {
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut infinite = false;
    for x in v {
        match x {
            Value::Finite(f) => {
                sum += f;
                n += 1;
            }
            Value::Infinite => infinite = true,
            Value::Undefined => return Value::Undefined,
        }
    }
    if infinite {
        Value::Infinite
    } else if n == 0 {
        Value::Undefined
    } else {
        Value::Finite(sum / n as f64)
    }
}

fn average_rows(rows: &[SweepRow]) -> Vec<SweepRow> {
    let mut keys: Vec<(String, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(v, p)| *v == r.variant && *p == r.param) {
            keys.push((r.variant.clone(), r.param));
        }
    }
    keys.into_iter()
        .map(|(variant, param)| {
            let g: Vec<&SweepRow> = rows.iter().filter(|r| r.variant == variant && r.param == param).collect();
            let n = g.len() as f64;
            let mean = |f: &dyn Fn(&SweepRow) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / n;
            let mv = |f: &dyn Fn(&SweepRow) -> Value| mean_value(g.iter().map(|r| f(r)));
            let opt = |f: &dyn Fn(&SweepRow) -> Option<f64>| {
                g.iter().map(|r| f(r)).collect::<Option<Vec<f64>>>().map(|v| v.iter().sum::<f64>() / n)
            };
            SweepRow {
                record: AVERAGE.into(),
                schema: g[0].schema,
                variant,
                param,
                original_bits: mean(&|r| r.original_bits),
                compressed_bits: mean(&|r| r.compressed_bits),
                cr: mean(&|r| r.cr),
                report: DistortionReport {
                    prd: mv(&|r| r.report.prd),
                    prdn: mv(&|r| r.report.prdn),
                    rmse: mean(&|r| r.report.rmse),
                    rmsep: mv(&|r| r.report.rmsep),
                    snr_db: mv(&|r| r.report.snr_db),
                    mae: mean(&|r| r.report.mae),
                    cc: mv(&|r| r.report.cc),
                    n: g.iter().map(|r| r.report.n).sum(),
                },
                qs: mv(&|r| r.qs),
                encode_ms: opt(&|r| r.encode_ms),
                decode_ms: opt(&|r| r.decode_ms),
            }
        })
        .collect()
}

/// Runs every parameter on every record, records in parallel. Failing
/// records are skipped and listed in [`SweepResult::failures`].
pub fn run_sweep(records: &[EcgRecord], spec: &SweepSpec, codebook: Option<&GsvqCodebook>) -> Result<SweepResult> {
    if records.is_empty() {
        return Err(Error::Empty("record list"));
    }
    if spec.params.is_empty() {
        return Err(Error::Empty("parameter list"));
    }
    if spec.schema == Schema::Gsvq && codebook.is_none() {
        return Err(Error::InvalidParameter("GSVQ sweep needs a codebook".into()));
    }
    let mut order: Vec<&EcgRecord> = records.iter().collect();
    order.sort_by(|a, b| a.record_id.cmp(&b.record_id));
    let results: Vec<(String, Result<Vec<SweepRow>>)> = order
        .par_iter()
        .map(|r| (r.record_id.clone(), sweep_record(r, spec, codebook)))
        .collect();
    let mut out = SweepResult::default();
    for (id, res) in results {
        match res {
            Ok(rows) => out.rows.extend(rows),
            Err(e) => out.failures.push((id, e.to_string())),
        }
    }
    out.averages = average_rows(&out.rows);
    Ok(out)
}

pub const VARIANT_DISTANCES: [DistanceKind; 2] = [DistanceKind::V1, DistanceKind::V2];
pub const VARIANT_BANKS: [BankPolicy; 2] = [BankPolicy::Continuous, BankPolicy::Static];
pub const VARIANT_OFFSETS: [OffsetMode; 2] = [OffsetMode::GainOffset, OffsetMode::OffsetOnly];

/// The eight InLC combinations of distance, bank updating and offset mode
/// over `eps`.
pub fn run_variant_matrix(records: &[EcgRecord], eps: &[f64], base: &InlcConfig, timing: bool) -> Result<SweepResult> {
    let mut out = SweepResult::default();
    for distance in VARIANT_DISTANCES {
        for bank_policy in VARIANT_BANKS {
            for offset_mode in VARIANT_OFFSETS {
                let spec = SweepSpec {
                    params: eps.to_vec(),
                    inlc: InlcConfig {
                        distance,
                        bank_policy,
                        offset_mode,
                        ..*base
                    },
                    timing,
                    ..SweepSpec::new(Schema::Inlc)
                };
                let r = run_sweep(records, &spec, None)?;
                out.rows.extend(r.rows);
                out.averages.extend(r.averages);
                out.failures.extend(r.failures);
            }
        }
    }
    Ok(out)
}

fn value_cell(v: Value) -> String {
    v.to_string()
}

fn row_line(r: &SweepRow) -> String {
    let opt = |v: Option<f64>| v.map(format_g6).unwrap_or_default();
    [
        r.record.clone(),
        r.schema.to_string(),
        r.variant.clone(),
        format_g6(r.param),
        format_g6(r.original_bits),
        format_g6(r.compressed_bits),
        format_g6(r.cr),
        value_cell(r.report.prd),
        value_cell(r.report.prdn),
        format_g6(r.report.rmse),
        value_cell(r.report.rmsep),
        value_cell(r.report.snr_db),
        format_g6(r.report.mae),
        value_cell(r.report.cc),
        value_cell(r.qs),
        opt(r.encode_ms),
        opt(r.decode_ms),
    ]
    .join(",")
}

/// Version line, header, per-record rows, then average rows.
pub fn to_csv(result: &SweepResult) -> String {
    let mut s = String::new();
    writeln!(s, "{CSV_VERSION_LINE}").unwrap();
    writeln!(s, "{CSV_HEADER}").unwrap();
    for r in result.rows.iter().chain(&result.averages) {
        writeln!(s, "{}", row_line(r)).unwrap();
    }
    s
}

/// Corpus-average (PRD, CR) points of one variant, sorted by PRD.
#[derive(Debug, Clone, PartialEq)]
pub struct RdCurve {
    pub points: Vec<(f64, f64)>,
}

impl RdCurve {
    pub fn from_averages(rows: &[SweepRow], variant: &str) -> Self {
        let mut points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.variant == variant)
            .filter_map(|r| r.report.prd.finite().map(|p| (p, r.cr)))
            .collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        Self { points }
    }

    pub fn prd_range(&self) -> Option<(f64, f64)> {
        Some((self.points.first()?.0, self.points.last()?.0))
    }

    /// CR at `prd` by linear interpolation between the neighbouring points;
    /// `None` outside the swept PRD range. Points with equal PRD take the
    /// larger CR.
    pub fn cr_at(&self, prd: f64) -> Option<f64> {
        let (lo, hi) = self.prd_range()?;
        if prd < lo || prd > hi {
            return None;
        }
        let best_at = |p: f64| {
            self.points
                .iter()
                .filter(|q| q.0 == p)
                .map(|q| q.1)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let i = self.points.partition_point(|q| q.0 < prd);
        if self.points[i].0 == prd {
            return Some(best_at(prd));
        }
        let (p0, p1) = (self.points[i - 1].0, self.points[i].0);
        let (c0, c1) = (best_at(p0), best_at(p1));
        Some(c0 + (c1 - c0) * (prd - p0) / (p1 - p0))
    }
}

/// Trains a GSVQ codebook on the beats of all `records`.
pub fn train_codebook(records: &[EcgRecord], n: usize, cfg: &GsvqConfig) -> Result<LbgTraining> {
    let mut shapes = Vec::new();
    for r in records {
        shapes.extend(segment_shapes(r, cfg.k, cfg.max_seg, &cfg.rpeak)?);
    }
    lbg_train(&shapes, n)
}

pub const PROBE_WINDOW: usize = 1024;
pub const PROBE_MIN_LEN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport {
    pub distance: DistanceKind,
    pub trials: usize,
    /// Length increments examined.
    pub steps: usize,
    /// Increments where the distance fell.
    pub non_monotone: usize,
    /// Increments where the distance fell by more than one ADC unit.
    pub coarse_non_monotone: usize,
    /// Largest fall.
    pub max_violation: f64,
}

impl MonotonicityReport {
    pub fn fraction(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.non_monotone as f64 / self.steps as f64
        }
    }

    pub fn coarse_fraction(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.coarse_non_monotone as f64 / self.steps as f64
        }
    }
}

/// Draws a 1024-sample bank window, a later 1024-sample buffer window and
/// a start index in the bank, then follows the distance between the bank
/// fragment at that index and the buffer head as both grow from 10
/// samples to the end of the bank window. An incomparable distance ends
/// the chain.
pub fn run_monotonicity_probe(samples: &[i16], kind: DistanceKind, trials: usize, seed: u64) -> Result<MonotonicityReport> {
    if samples.len() < 2 * PROBE_WINDOW {
        return Err(Error::OutOfRange(format!(
            "probe needs {} samples, record has {}",
            2 * PROBE_WINDOW,
            samples.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = MonotonicityReport {
        distance: kind,
        trials,
        steps: 0,
        non_monotone: 0,
        coarse_non_monotone: 0,
        max_violation: 0.0,
    };
    for _ in 0..trials {
        let b0 = rng.gen_range(0..=samples.len() - 2 * PROBE_WINDOW);
        let f0 = rng.gen_range(b0 + PROBE_WINDOW..=samples.len() - PROBE_WINDOW);
        let i = rng.gen_range(0..=PROBE_WINDOW - PROBE_MIN_LEN);
        let bank = &samples[b0 + i..b0 + PROBE_WINDOW];
        let buf = &samples[f0..f0 + PROBE_WINDOW];
        let mut prev: Option<f64> = None;
        for l in PROBE_MIN_LEN..=bank.len() {
            let d = match distance_i16(kind, &bank[..l], &buf[..l]) {
                Distance::Finite(d) => d,
                Distance::Incomparable => break,
            };
            if let Some(p) = prev {
                report.steps += 1;
                if d < p {
                    report.non_monotone += 1;
                    report.coarse_non_monotone += usize::from(p - d > 1.0);
                    report.max_violation = report.max_violation.max(p - d);
                }
            }
            prev = Some(d);
        }
    }
    Ok(report)
}
