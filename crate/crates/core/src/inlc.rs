//! Streaming fragment-matching compressor.
//!
//! The sender keeps a bank of already-transmitted samples and a buffer of
//! pending ones. Each step looks for the longest buffer prefix that a bank
//! fragment approximates within `eps` under an affine map, and sends the
//! bank position, length and map in place of the samples. When nothing
//! matches, `l_min` raw samples go out directly. The receiver rebuilds the
//! same bank from what it decodes, so both banks always hold identical
//! reconstructed samples.

use crate::bitstream::{quantize_f16, BitReader, BitWriter};
use crate::distance::{distance_i16, fit_affine, mean_offset, Distance, DistanceKind};
use crate::error::{Error, Result};

pub const INDEX_BITS: u32 = 10;
pub const LENGTH_BITS: u32 = 10;
const SAMPLE_BITS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BankPolicy {
    /// Fill once, then freeze.
    Static,
    /// Always append, evicting the oldest samples.
    Continuous,
    /// Static, but emptied every `interval_s` seconds of signal.
    Periodic { interval_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffsetMode {
    GainOffset,
    OffsetOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InlcConfig {
    pub s_b: usize,
    pub s_f: usize,
    pub l_min: usize,
    pub l_max: usize,
    pub eps: f64,
    pub distance: DistanceKind,
    pub bank_policy: BankPolicy,
    pub offset_mode: OffsetMode,
    /// Sampling rate, used only by the periodic bank policy.
    pub fs: f64,
}

impl Default for InlcConfig {
    fn default() -> Self {
        Self {
            s_b: 1024,
            s_f: 1024,
            l_min: 10,
            l_max: 1024,
            eps: 10.0,
            distance: DistanceKind::V1,
            bank_policy: BankPolicy::Static,
            offset_mode: OffsetMode::GainOffset,
            fs: 360.0,
        }
    }
}

impl InlcConfig {
    pub fn with_eps(self, eps: f64) -> Self {
        Self { eps, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(1 <= self.l_min && self.l_min <= self.l_max && self.l_max <= self.s_f && self.s_f <= self.s_b) {
            return bad(format!(
                "need 1 <= l_min ({}) <= l_max ({}) <= s_f ({}) <= s_b ({})",
                self.l_min, self.l_max, self.s_f, self.s_b
            ));
        }
        if self.s_b > 1 << INDEX_BITS || self.l_max > 1 << LENGTH_BITS {
            return bad(format!(
                "s_b and l_max must fit the {INDEX_BITS}-bit wire fields"
            ));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad(format!("eps {}", self.eps));
        }
        if let BankPolicy::Periodic { interval_s } = self.bank_policy {
            if !(self.fs > 0.0 && interval_s > 0.0 && (interval_s * self.fs).round() >= 1.0) {
                return bad(format!("bank reset interval {interval_s} s at fs {}", self.fs));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatchParams {
    GainOffset { gain: f64, offset: f64 },
    OffsetOnly { offset: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum InlcMessage {
    Direct(Vec<i16>),
    Match { start: usize, len: usize, params: MatchParams },
}

impl InlcMessage {
    pub fn bit_len(&self) -> usize {
        match self {
            InlcMessage::Direct(s) => 1 + s.len() * SAMPLE_BITS as usize,
            InlcMessage::Match { params, .. } => {
                1 + (INDEX_BITS + LENGTH_BITS) as usize
                    + match params {
                        MatchParams::GainOffset { .. } => 32,
                        MatchParams::OffsetOnly { .. } => 16,
                    }
            }
        }
    }

    /// Number of signal samples the message stands for.
    pub fn sample_len(&self) -> usize {
        match self {
            InlcMessage::Direct(s) => s.len(),
            InlcMessage::Match { len, .. } => *len,
        }
    }
}

/// Bank contents plus the bookkeeping both ends need to apply a policy.
#[derive(Debug, Clone)]
pub struct Bank {
    samples: Vec<i16>,
    capacity: usize,
    policy: BankPolicy,
    consumed: u64,
    next_reset: u64,
    interval: u64,
}

impl Bank {
    pub fn new(cfg: &InlcConfig) -> Self {
        let interval = match cfg.bank_policy {
            BankPolicy::Periodic { interval_s } => (interval_s * cfg.fs).round() as u64,
            _ => 0,
        };
        Self {
            samples: Vec::with_capacity(cfg.s_b),
            capacity: cfg.s_b,
            policy: cfg.bank_policy,
            consumed: 0,
            next_reset: interval,
            interval,
        }
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }

    /// Applies a due periodic reset. Called before each fragment.
    fn begin_fragment(&mut self) {
        if self.interval > 0 && self.consumed >= self.next_reset {
            self.samples.clear();
            while self.next_reset <= self.consumed {
                self.next_reset += self.interval;
            }
        }
    }

    fn append(&mut self, fragment: &[i16]) {
        self.consumed += fragment.len() as u64;
        match self.policy {
            BankPolicy::Static | BankPolicy::Periodic { .. } => {
                let room = self.capacity - self.samples.len();
                self.samples.extend_from_slice(&fragment[..fragment.len().min(room)]);
            }
            BankPolicy::Continuous => {
                if fragment.len() >= self.capacity {
                    self.samples.clear();
                    self.samples
                        .extend_from_slice(&fragment[fragment.len() - self.capacity..]);
                } else {
                    let excess = (self.samples.len() + fragment.len()).saturating_sub(self.capacity);
                    self.samples.drain(..excess);
                    self.samples.extend_from_slice(fragment);
                }
            }
        }
    }
}

/// `round(g * b + o)` clamped to the 16-bit sample range.
pub fn reconstruct(bank_fragment: &[i16], params: MatchParams) -> Vec<i16> {
    let (g, o) = match params {
        MatchParams::GainOffset { gain, offset } => (gain, offset),
        MatchParams::OffsetOnly { offset } => (1.0, offset),
    };
    bank_fragment
        .iter()
        .map(|&b| {
            (g * f64::from(b) + o)
                .round()
                .clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16
        })
        .collect()
}

fn to_f64(x: &[i16]) -> Vec<f64> {
    x.iter().map(|&v| f64::from(v)).collect()
}

/// Half-precision parameters between a bank fragment and its target. The
/// offset is refit against the quantized gain before it is quantized.
pub fn match_params(b: &[i16], f: &[i16], mode: OffsetMode) -> MatchParams {
    let (bf, ff) = (to_f64(b), to_f64(f));
    match mode {
        OffsetMode::GainOffset => {
            let fit = fit_affine(&bf, &ff).expect("equal non-empty lengths");
            let gain = quantize_f16(fit.gain);
            let n = bf.len() as f64;
            let offset = ff.iter().sum::<f64>() / n - gain * bf.iter().sum::<f64>() / n;
            MatchParams::GainOffset {
                gain,
                offset: quantize_f16(offset),
            }
        }
        OffsetMode::OffsetOnly => MatchParams::OffsetOnly {
            offset: quantize_f16(mean_offset(&bf, &ff).expect("equal non-empty lengths")),
        },
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    start: usize,
    dist: Distance,
    next: Distance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    pub start: usize,
    pub len: usize,
    pub distance: f64,
}

/// Longest buffer prefix approximated by a bank fragment.
///
/// Seeds are the local minima (strictly below the left neighbour, not above
/// the right one) of the distance profile at `l_min` that are within `eps`.
/// The length then grows by bisection over `l_min..=min(l_max, |buffer|,
/// |bank|)`, rescoring only surviving seeds. Among the seeds alive at the
/// final length the smallest distance wins, ties going to the smaller start.
pub fn find_longest_match(bank: &[i16], buffer: &[i16], cfg: &InlcConfig) -> Option<MatchResult> {
    let mut scratch = Vec::new();
    find_longest_match_in(bank, buffer, cfg, &mut scratch)
}

fn find_longest_match_in(
    bank: &[i16],
    buffer: &[i16],
    cfg: &InlcConfig,
    candidates: &mut Vec<Candidate>,
) -> Option<MatchResult> {
    let l_min = cfg.l_min;
    if buffer.len() < l_min || bank.len() < l_min {
        return None;
    }
    let target = &buffer[..l_min];
    let score = |i: usize, len: usize| distance_i16(cfg.distance, &bank[i..i + len], &buffer[..len]);

    candidates.clear();
    let last = bank.len() - l_min;
    let mut prev: Option<Distance> = None;
    let mut cur = distance_i16(cfg.distance, &bank[..l_min], target);
    for i in 0..=last {
        let next = (i < last).then(|| distance_i16(cfg.distance, &bank[i + 1..i + 1 + l_min], target));
        let left_ok = prev.is_none_or(|p| cur.total_cmp(&p).is_lt());
        let right_ok = next.is_none_or(|n| cur.total_cmp(&n).is_le());
        if left_ok && right_ok && cur.within(cfg.eps) {
            candidates.push(Candidate {
                start: i,
                dist: cur,
                next: cur,
            });
        }
        prev = Some(cur);
        if let Some(n) = next {
            cur = n;
        }
    }
    if candidates.is_empty() {
        return None;
    }

    let upper = cfg.l_max.min(buffer.len()).min(bank.len());
    let (mut lo, mut hi) = (l_min, upper + 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let mut alive = 0;
        for c in candidates.iter_mut() {
            c.next = if c.start + mid <= bank.len() {
                score(c.start, mid)
            } else {
                Distance::Incomparable
            };
            if c.next.within(cfg.eps) {
                alive += 1;
            }
        }
        if alive > 0 {
            candidates.retain(|c| c.next.within(cfg.eps));
            for c in candidates.iter_mut() {
                c.dist = c.next;
            }
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let best = candidates
        .iter()
        .min_by(|a, b| a.dist.total_cmp(&b.dist).then(a.start.cmp(&b.start)))
        .expect("non-empty candidates");
    Some(MatchResult {
        start: best.start,
        len: lo,
        distance: best.dist.finite().expect("candidates are within eps"),
    })
}

/// Peak occupancy of the compressor's three working buffers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkingSet {
    pub bank_capacity: usize,
    pub buffer_capacity: usize,
    pub candidate_capacity: usize,
    pub peak_bank: usize,
    pub peak_buffer: usize,
    pub peak_candidates: usize,
}

impl WorkingSet {
    /// Sample slots held by bank and buffer plus candidate slots.
    pub fn peak_slots(&self) -> usize {
        self.peak_bank + self.peak_buffer + self.peak_candidates
    }
}

#[derive(Debug, Clone)]
pub struct InlcEncoder {
    cfg: InlcConfig,
    bank: Bank,
    buffer: Vec<i16>,
    candidates: Vec<Candidate>,
    usage: WorkingSet,
}

impl InlcEncoder {
    pub fn new(cfg: InlcConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            bank: Bank::new(&cfg),
            buffer: Vec::with_capacity(cfg.s_f),
            candidates: Vec::with_capacity(cfg.s_b - cfg.l_min + 1),
            usage: WorkingSet::default(),
            cfg,
        })
    }

    pub fn config(&self) -> &InlcConfig {
        &self.cfg
    }

    pub fn bank(&self) -> &[i16] {
        self.bank.samples()
    }

    pub fn working_set(&self) -> WorkingSet {
        WorkingSet {
            bank_capacity: self.bank.samples.capacity(),
            buffer_capacity: self.buffer.capacity(),
            candidate_capacity: self.candidates.capacity(),
            ..self.usage
        }
    }

    pub fn push(&mut self, samples: &[i16]) -> Vec<InlcMessage> {
        let mut out = Vec::new();
        self.push_with(samples, |m, _| out.push(m.clone()));
        out
    }

    /// Feeds samples, invoking `sink` with each message and the sender bank
    /// right after the message was applied to it.
    pub fn push_with(&mut self, mut samples: &[i16], mut sink: impl FnMut(&InlcMessage, &[i16])) {
        loop {
            let take = (self.cfg.s_f - self.buffer.len()).min(samples.len());
            self.buffer.extend_from_slice(&samples[..take]);
            samples = &samples[take..];
            self.usage.peak_buffer = self.usage.peak_buffer.max(self.buffer.len());
            if self.buffer.len() < self.cfg.s_f {
                return;
            }
            let msg = self.step();
            sink(&msg, self.bank.samples());
        }
    }

    /// Drains the buffer at end of stream. Leftovers shorter than `l_min`
    /// go out as one short direct message.
    pub fn finish(&mut self) -> Vec<InlcMessage> {
        let mut out = Vec::new();
        self.finish_with(|m, _| out.push(m.clone()));
        out
    }

    pub fn finish_with(&mut self, mut sink: impl FnMut(&InlcMessage, &[i16])) {
        while self.buffer.len() >= self.cfg.l_min {
            let msg = self.step();
            sink(&msg, self.bank.samples());
        }
        if !self.buffer.is_empty() {
            self.bank.begin_fragment();
            let rest: Vec<i16> = self.buffer.drain(..).collect();
            self.bank.append(&rest);
            let msg = InlcMessage::Direct(rest);
            sink(&msg, self.bank.samples());
        }
    }

    fn step(&mut self) -> InlcMessage {
        self.bank.begin_fragment();
        let found = find_longest_match_in(self.bank.samples(), &self.buffer, &self.cfg, &mut self.candidates);
        self.usage.peak_candidates = self.usage.peak_candidates.max(self.candidates.len());
        let msg = match found {
            None => {
                let direct: Vec<i16> = self.buffer.drain(..self.cfg.l_min).collect();
                self.bank.append(&direct);
                InlcMessage::Direct(direct)
            }
            Some(m) => {
                let b = &self.bank.samples()[m.start..m.start + m.len];
                let params = match_params(b, &self.buffer[..m.len], self.cfg.offset_mode);
                let rec = reconstruct(b, params);
                self.buffer.drain(..m.len);
                self.bank.append(&rec);
                InlcMessage::Match {
                    start: m.start,
                    len: m.len,
                    params,
                }
            }
        };
        self.usage.peak_bank = self.usage.peak_bank.max(self.bank.samples().len());
        msg
    }
}

pub fn inlc_compress(samples: &[i16], cfg: &InlcConfig) -> Result<Vec<InlcMessage>> {
    let mut enc = InlcEncoder::new(*cfg)?;
    let mut out = enc.push(samples);
    out.extend(enc.finish());
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct InlcDecoder {
    bank: Bank,
}

impl InlcDecoder {
    pub fn new(cfg: &InlcConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { bank: Bank::new(cfg) })
    }

    pub fn bank(&self) -> &[i16] {
        self.bank.samples()
    }

    pub fn decode(&mut self, msg: &InlcMessage, out: &mut Vec<i16>) -> Result<()> {
        self.bank.begin_fragment();
        let fragment = match msg {
            InlcMessage::Direct(s) => s.clone(),
            InlcMessage::Match { start, len, params } => {
                let bank = self.bank.samples();
                if *len == 0 || start + len > bank.len() {
                    return Err(Error::corrupt(format!(
                        "match [{start}, {}) outside receiver bank of {} samples",
                        start + len,
                        bank.len()
                    )));
                }
                reconstruct(&bank[*start..start + len], *params)
            }
        };
        self.bank.append(&fragment);
        out.extend_from_slice(&fragment);
        Ok(())
    }
}

pub fn inlc_decompress(messages: &[InlcMessage], cfg: &InlcConfig) -> Result<Vec<i16>> {
    let mut dec = InlcDecoder::new(cfg)?;
    let mut out = Vec::new();
    for m in messages {
        dec.decode(m, &mut out)?;
    }
    Ok(out)
}

pub fn total_bits(messages: &[InlcMessage]) -> usize {
    messages.iter().map(InlcMessage::bit_len).sum()
}

pub fn write_messages(w: &mut BitWriter, messages: &[InlcMessage]) -> Result<()> {
    for m in messages {
        match m {
            InlcMessage::Direct(s) => {
                w.write_bit(false);
                for &v in s {
                    w.write_uint(u64::from(v as u16), SAMPLE_BITS)?;
                }
            }
            InlcMessage::Match { start, len, params } => {
                w.write_bit(true);
                w.write_uint(*start as u64, INDEX_BITS)?;
                if *len == 0 {
                    return Err(Error::InvalidParameter("zero-length match".into()));
                }
                w.write_uint(*len as u64 - 1, LENGTH_BITS)?;
                match params {
                    MatchParams::GainOffset { gain, offset } => {
                        w.write_f16(*gain);
                        w.write_f16(*offset);
                    }
                    MatchParams::OffsetOnly { offset } => w.write_f16(*offset),
                }
            }
        }
    }
    Ok(())
}

/// Reads messages until `total_samples` are accounted for. Direct messages
/// carry `l_min` samples except a shorter final one.
pub fn read_messages(
    r: &mut BitReader<'_>,
    cfg: &InlcConfig,
    n_messages: usize,
    total_samples: usize,
) -> Result<Vec<InlcMessage>> {
    let mut out = Vec::with_capacity(n_messages);
    let mut covered = 0usize;
    for _ in 0..n_messages {
        let msg = if r.read_bit()? {
            let start = r.read_uint(INDEX_BITS)? as usize;
            let len = r.read_uint(LENGTH_BITS)? as usize + 1;
            let params = match cfg.offset_mode {
                OffsetMode::GainOffset => MatchParams::GainOffset {
                    gain: r.read_f16()?,
                    offset: r.read_f16()?,
                },
                OffsetMode::OffsetOnly => MatchParams::OffsetOnly { offset: r.read_f16()? },
            };
            InlcMessage::Match { start, len, params }
        } else {
            let n = cfg.l_min.min(total_samples.saturating_sub(covered));
            if n == 0 {
                return Err(Error::corrupt("direct message past end of signal"));
            }
            let mut s = Vec::with_capacity(n);
            for _ in 0..n {
                s.push(r.read_uint(SAMPLE_BITS)? as u16 as i16);
            }
            InlcMessage::Direct(s)
        };
        covered += msg.sample_len();
        out.push(msg);
    }
    if covered != total_samples {
        return Err(Error::corrupt(format!(
            "messages cover {covered} samples, header says {total_samples}"
        )));
    }
    Ok(out)
}
