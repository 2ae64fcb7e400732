//! Inner code chain that turns a fading link into an erasure channel.
//!
//! Transmit: CRC-16 append, zero-terminated rate-1/2 convolutional code,
//! puncturing to the selected rate, rectangular block interleaving.
//! Receive: the inverse steps with a soft-decision Viterbi decoder. A block
//! whose CRC fails after decoding is reported as an erasure.
//!
//! Soft values are log-likelihood ratios `log P(0)/P(1)`; zero marks a
//! punctured (unknown) position.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Llr = f64;

pub const CRC_BITS: usize = 16;

/// Inner code rate, realised by puncturing the rate-1/2 mother code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InnerRate {
    #[serde(rename = "1/2")]
    Half,
    #[serde(rename = "2/3")]
    TwoThirds,
    #[serde(rename = "3/4")]
    ThreeQuarters,
}

impl InnerRate {
    pub const ALL: [InnerRate; 3] = [InnerRate::Half, InnerRate::TwoThirds, InnerRate::ThreeQuarters];

    /// Keep (1) / drop (0) mask applied periodically to the mother output.
    pub fn puncture_mask(self) -> &'static [u8] {
        match self {
            InnerRate::Half => &[1, 1],
            InnerRate::TwoThirds => &[1, 1, 1, 0],
            InnerRate::ThreeQuarters => &[1, 1, 1, 0, 0, 1],
        }
    }

    pub fn value(self) -> f64 {
        match self {
            InnerRate::Half => 0.5,
            InnerRate::TwoThirds => 2.0 / 3.0,
            InnerRate::ThreeQuarters => 0.75,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            InnerRate::Half => "1/2",
            InnerRate::TwoThirds => "2/3",
            InnerRate::ThreeQuarters => "3/4",
        }
    }
}

impl fmt::Display for InnerRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for InnerRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1/2" | "0.5" => Ok(InnerRate::Half),
            "2/3" | "0.667" => Ok(InnerRate::TwoThirds),
            "3/4" | "0.75" => Ok(InnerRate::ThreeQuarters),
            other => Err(Error::InvalidParameter(format!(
                "inner rate {other:?} is not one of 1/2, 2/3, 3/4"
            ))),
        }
    }
}

/// CRC-16 parameters: MSB-first, no reflection, no final XOR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crc16 {
    pub polynomial: u16,
    pub init: u16,
}

impl Default for Crc16 {
    /// CRC-16/CCITT-FALSE.
    fn default() -> Self {
        Self {
            polynomial: 0x1021,
            init: 0xFFFF,
        }
    }
}

impl Crc16 {
    pub fn checksum(&self, bits: &[u8]) -> u16 {
        let mut reg = self.init;
        for &bit in bits {
            let feedback = (reg >> 15) as u8 ^ (bit & 1);
            reg <<= 1;
            if feedback == 1 {
                reg ^= self.polynomial;
            }
        }
        reg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InnerCodeSpec {
    /// Memory + 1.
    pub constraint_length: u32,
    /// Generator polynomials; the most significant of the
    /// `constraint_length` bits taps the current input.
    pub polynomials: [u32; 2],
    pub rate: InnerRate,
    pub crc: Crc16,
    pub interleaver_rows: usize,
    pub interleaver_cols: usize,
}

impl Default for InnerCodeSpec {
    fn default() -> Self {
        Self {
            constraint_length: 5,
            polynomials: [0o23, 0o33],
            rate: InnerRate::Half,
            crc: Crc16::default(),
            interleaver_rows: 57,
            interleaver_cols: 8,
        }
    }
}

impl InnerCodeSpec {
    pub fn with_rate(self, rate: InnerRate) -> Self {
        Self { rate, ..self }
    }

    pub fn puncture_pattern(&self) -> &'static [u8] {
        self.rate.puncture_mask()
    }

    pub fn memory(&self) -> usize {
        self.constraint_length as usize - 1
    }

    pub fn channel_block_len(&self) -> usize {
        self.interleaver_rows * self.interleaver_cols
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.constraint_length;
        if !(2..=12).contains(&k) {
            return Err(Error::InvalidParameter(format!(
                "constraint length {k} outside 2..=12"
            )));
        }
        for &g in &self.polynomials {
            let current_tap = 1 << (k - 1);
            if g >= 1 << k || g & current_tap == 0 || g & 1 == 0 {
                return Err(Error::InvalidParameter(format!(
                    "polynomial {g:o} (octal) must have degree {} with both end taps set",
                    k - 1
                )));
            }
        }
        if self.interleaver_rows == 0 || self.interleaver_cols == 0 {
            return Err(Error::InvalidParameter(
                "interleaver dimensions must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Length of the mother-code output for a payload of `payload_len` bits.
    pub fn mother_len(&self, payload_len: usize) -> usize {
        2 * (payload_len + CRC_BITS + self.memory())
    }

    /// Channel bits produced for a payload of `payload_len` bits.
    pub fn channel_len(&self, payload_len: usize) -> Result<usize> {
        let mother = self.mother_len(payload_len);
        let mask = self.puncture_pattern();
        if !mother.is_multiple_of(mask.len()) {
            return Err(Error::Sizing(format!(
                "payload of {payload_len} bits gives {mother} mother-code bits, \
                 not a multiple of the rate {} puncture period {}",
                self.rate,
                mask.len()
            )));
        }
        Ok(mother / mask.len() * kept_per_period(mask))
    }

    /// The payload length that exactly fills the interleaver.
    pub fn payload_len(&self) -> Result<usize> {
        let block = self.channel_block_len();
        let mask = self.puncture_pattern();
        let kept = kept_per_period(mask);
        let overhead = CRC_BITS + self.memory();
        if !block.is_multiple_of(kept) || !(block / kept * mask.len()).is_multiple_of(2) {
            return Err(Error::Sizing(format!(
                "interleaver of {}x{} = {block} bits cannot be filled at rate {}",
                self.interleaver_rows, self.interleaver_cols, self.rate
            )));
        }
        let mother = block / kept * mask.len();
        match (mother / 2).checked_sub(overhead) {
            Some(len) if len > 0 => Ok(len),
            _ => Err(Error::Sizing(format!(
                "interleaver of {block} bits leaves no room for a payload at rate {}",
                self.rate
            ))),
        }
    }
}

fn kept_per_period(mask: &[u8]) -> usize {
    mask.iter().filter(|&&m| m == 1).count()
}

fn parity(x: u32) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Payload followed by its 16 CRC bits, most significant first.
pub fn crc_append(payload: &[u8], spec: &InnerCodeSpec) -> Vec<u8> {
    let crc = spec.crc.checksum(payload);
    let mut frame = payload.to_vec();
    frame.extend((0..CRC_BITS).rev().map(|i| (crc >> i & 1) as u8));
    frame
}

pub fn crc_check(frame: &[u8], spec: &InnerCodeSpec) -> Result<bool> {
    if frame.len() <= CRC_BITS {
        return Err(Error::LengthMismatch {
            what: "CRC frame (minimum)",
            expected: CRC_BITS + 1,
            actual: frame.len(),
        });
    }
    let (payload, tail) = frame.split_at(frame.len() - CRC_BITS);
    let stored = tail.iter().fold(0u16, |acc, &b| acc << 1 | u16::from(b & 1));
    Ok(spec.crc.checksum(payload) == stored)
}

/// Zero-terminated rate-1/2 encoding; output pairs `(g0, g1)` per input bit.
pub fn conv_encode(bits: &[u8], spec: &InnerCodeSpec) -> Vec<u8> {
    let k = spec.constraint_length;
    let [g0, g1] = spec.polynomials;
    let mut state = 0u32;
    let mut out = Vec::with_capacity(2 * (bits.len() + spec.memory()));
    for bit in bits.iter().copied().chain(std::iter::repeat_n(0, spec.memory())) {
        let reg = u32::from(bit & 1) << (k - 1) | state;
        out.push(parity(reg & g0));
        out.push(parity(reg & g1));
        state = reg >> 1;
    }
    out
}

pub fn puncture(coded: &[u8], spec: &InnerCodeSpec) -> Result<Vec<u8>> {
    let mask = spec.puncture_pattern();
    if !coded.len().is_multiple_of(mask.len()) {
        return Err(Error::Sizing(format!(
            "{} coded bits is not a multiple of the puncture period {}",
            coded.len(),
            mask.len()
        )));
    }
    Ok(coded
        .iter()
        .zip(mask.iter().cycle())
        .filter(|(_, &m)| m == 1)
        .map(|(&b, _)| b)
        .collect())
}

/// Reinserts zero LLRs at punctured positions.
pub fn depuncture(soft: &[Llr], spec: &InnerCodeSpec) -> Result<Vec<Llr>> {
    let mask = spec.puncture_pattern();
    let kept = kept_per_period(mask);
    if !soft.len().is_multiple_of(kept) {
        return Err(Error::LengthMismatch {
            what: "punctured soft block (multiple of kept bits per period)",
            expected: soft.len().div_ceil(kept) * kept,
            actual: soft.len(),
        });
    }
    let mut values = soft.iter();
    let out_len = soft.len() / kept * mask.len();
    Ok(mask
        .iter()
        .cycle()
        .take(out_len)
        .map(|&m| if m == 1 { *values.next().unwrap() } else { 0.0 })
        .collect())
}

fn check_interleaver(len: usize, rows: usize, cols: usize) -> Result<()> {
    if len != rows * cols {
        return Err(Error::LengthMismatch {
            what: "interleaver block",
            expected: rows * cols,
            actual: len,
        });
    }
    Ok(())
}

/// Writes row-major into a `rows x cols` array and reads it column-major.
pub fn interleave<T: Copy>(data: &[T], rows: usize, cols: usize) -> Result<Vec<T>> {
    check_interleaver(data.len(), rows, cols)?;
    Ok((0..cols)
        .flat_map(|c| (0..rows).map(move |r| r * cols + c))
        .map(|i| data[i])
        .collect())
}

pub fn deinterleave<T: Copy>(data: &[T], rows: usize, cols: usize) -> Result<Vec<T>> {
    check_interleaver(data.len(), rows, cols)?;
    let mut out = data.to_vec();
    for c in 0..cols {
        for r in 0..rows {
            out[r * cols + c] = data[c * rows + r];
        }
    }
    Ok(out)
}

/// Correlation metric `Σ llr·(1 − 2c)` of a mother-code bit sequence.
pub fn path_metric(soft: &[Llr], coded: &[u8]) -> f64 {
    soft.iter()
        .zip(coded)
        .map(|(&l, &c)| if c == 0 { l } else { -l })
        .sum()
}

/// Soft-decision Viterbi decoding of a zero-terminated mother-code block.
///
/// Maximises the correlation metric and traces back from state 0. On equal
/// metrics the survivor whose dropped (oldest) bit is 0 is kept.
pub fn viterbi_decode(soft: &[Llr], spec: &InnerCodeSpec, message_length: usize) -> Result<Vec<u8>> {
    let steps = message_length + spec.memory();
    if soft.len() != 2 * steps {
        return Err(Error::LengthMismatch {
            what: "Viterbi input",
            expected: 2 * steps,
            actual: soft.len(),
        });
    }
    let k = spec.constraint_length;
    let [g0, g1] = spec.polynomials;
    let states = 1usize << (k - 1);
    let state_mask = states - 1;
    let input_shift = k - 2;

    // Branch outputs as ±1 signs, indexed by the full register.
    let signs: Vec<[f64; 2]> = (0..2 * states as u32)
        .map(|reg| {
            let s = |g| if parity(reg & g) == 0 { 1.0 } else { -1.0 };
            [s(g0), s(g1)]
        })
        .collect();

    let mut metric = vec![f64::NEG_INFINITY; states];
    metric[0] = 0.0;
    let mut next = vec![0.0; states];
    let mut choice = vec![0u8; steps * states];

    for (t, pair) in soft.chunks_exact(2).enumerate() {
        let (l0, l1) = (pair[0], pair[1]);
        let decisions = &mut choice[t * states..(t + 1) * states];
        for ns in 0..states {
            let input = ns >> input_shift;
            let base = (ns << 1) & state_mask;
            let mut best = f64::NEG_INFINITY;
            let mut pick = 0u8;
            for d in 0..2 {
                let prev = base | d;
                let reg = input << (k - 1) | prev;
                let [s0, s1] = signs[reg];
                let cand = metric[prev] + s0 * l0 + s1 * l1;
                if d == 0 || cand > best {
                    best = cand;
                    pick = d as u8;
                }
            }
            next[ns] = best;
            decisions[ns] = pick;
        }
        std::mem::swap(&mut metric, &mut next);
    }

    let mut decoded = vec![0u8; steps];
    let mut state = 0usize;
    for t in (0..steps).rev() {
        decoded[t] = (state >> input_shift) as u8;
        state = ((state << 1) & state_mask) | choice[t * states + state] as usize;
    }
    decoded.truncate(message_length);
    Ok(decoded)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockOutcome {
    Payload(Vec<u8>),
    Erased,
}

impl BlockOutcome {
    pub fn is_erased(&self) -> bool {
        matches!(self, BlockOutcome::Erased)
    }
}

/// CRC, encode, puncture and interleave one payload into exactly
/// `rows·cols` channel bits.
pub fn protect_block(payload: &[u8], spec: &InnerCodeSpec) -> Result<Vec<u8>> {
    spec.validate()?;
    if payload.is_empty() {
        return Err(Error::Sizing("payload must not be empty".into()));
    }
    let channel = spec.channel_len(payload.len())?;
    if channel != spec.channel_block_len() {
        let hint = spec
            .payload_len()
            .map(|p| format!("; a payload of {p} bits fits"))
            .unwrap_or_default();
        return Err(Error::Sizing(format!(
            "payload of {} bits needs {channel} channel bits at rate {}, \
             interleaver holds {}x{} = {}{hint}",
            payload.len(),
            spec.rate,
            spec.interleaver_rows,
            spec.interleaver_cols,
            spec.channel_block_len()
        )));
    }
    let frame = crc_append(payload, spec);
    let coded = conv_encode(&frame, spec);
    let punctured = puncture(&coded, spec)?;
    interleave(&punctured, spec.interleaver_rows, spec.interleaver_cols)
}

/// Inverse of [`protect_block`] on soft channel values.
pub fn recover_block(soft: &[Llr], spec: &InnerCodeSpec) -> Result<BlockOutcome> {
    let payload_len = spec.payload_len()?;
    let mother = deinterleave(soft, spec.interleaver_rows, spec.interleaver_cols)?;
    let mother = depuncture(&mother, spec)?;
    let frame = viterbi_decode(&mother, spec, payload_len + CRC_BITS)?;
    if crc_check(&frame, spec)? {
        Ok(BlockOutcome::Payload(frame[..payload_len].to_vec()))
    } else {
        Ok(BlockOutcome::Erased)
    }
}

/// Noise-free LLRs of magnitude `magnitude` for hard bits.
pub fn ideal_llrs(bits: &[u8], magnitude: f64) -> Vec<Llr> {
    bits.iter()
        .map(|&b| if b == 0 { magnitude } else { -magnitude })
        .collect()
}
