//! Monte-Carlo studies: polar BLER over the BEC, the largest polar rate that
//! meets a target BLER, the erasure probability of the degraded fading link,
//! and the trade-off between inner and outer code rates.
//!
//! Randomness is derived per trial from `(seed, study tag, cell, trial)`, and
//! every reduction is an integer count, so results do not depend on how many
//! worker threads rayon uses.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{bec_transmit, transmit_bpsk_fading, FadingChannelSpec};
use crate::error::{Error, Result};
use crate::inner::{protect_block, recover_block, BlockOutcome, InnerCodeSpec, InnerRate};
use crate::polar::{bec_bhattacharyya_vector, erasure_profile, reliability_order, PolarCode, Ternary};
use crate::rng::RngSeed;
use crate::stats::Proportion;

const TAG_POLAR: u64 = 1;
const TAG_LINK: u64 = 2;
const STREAM_ERASURES: u64 = 0;
const STREAM_PAYLOAD: u64 = 1;

/// Erasure probabilities of the degraded link reported for the reference
/// scenario, per inner rate 1/2, 2/3, 3/4.
pub const REFERENCE_EPSILON_PEDESTRIAN: [f64; 3] = [0.054, 0.078, 0.093];
pub const REFERENCE_EPSILON_VEHICULAR: [f64; 3] = [0.014, 0.035, 0.063];

pub type BlerEstimate = Proportion;

fn polar_trial_seed(seed: u64, n: u32, trial: u64) -> RngSeed {
    RngSeed::new(seed, 0).derive_path(&[TAG_POLAR, u64::from(n), trial])
}

/// Block error rate of the `(2^n, k)` code designed for `epsilon`, on a BEC
/// with the same `epsilon`. A block fails when decoding is ambiguous.
pub fn estimate_bler(n: u32, k: usize, epsilon: f64, trials: u64, seed: u64) -> Result<BlerEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let code = PolarCode::new(n, epsilon, k)?;
    let failures = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<u64> {
            let base = polar_trial_seed(seed, n, trial);
            let mut info_rng = base.derive(STREAM_PAYLOAD).rng();
            let info: Vec<u8> = (0..k).map(|_| info_rng.gen_range(0..2)).collect();
            let codeword = code.encode(&info)?;
            let received = bec_transmit(&codeword, epsilon, &mut base.derive(STREAM_ERASURES).rng())?;
            let decoded = code.decode(&received)?;
            Ok(u64::from(!decoded.is_ok()))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(Proportion::new(failures, trials))
}

/// Failure counts for every dimension `K = 1..=N` of the codes designed for
/// `epsilon`, all evaluated on the same erasure patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlerCurve {
    pub n: u32,
    pub epsilon: f64,
    pub trials: u64,
    /// `failures[k - 1]` is the failure count of the dimension-`k` code.
    pub failures: Vec<u64>,
}

impl BlerCurve {
    pub fn at(&self, k: usize) -> Proportion {
        Proportion::new(self.failures[k - 1], self.trials)
    }

    /// Largest `K` with estimated BLER at most `target`, or 0 if none.
    pub fn max_dimension(&self, target: f64) -> usize {
        // failures is non-decreasing in K, so scan down from N.
        (1..=self.failures.len())
            .rev()
            .find(|&k| self.failures[k - 1] as f64 <= target * self.trials as f64)
            .unwrap_or(0)
    }
}

/// Estimates the BLER of every dimension at once.
///
/// Each trial draws one erasure pattern (the same draws [`estimate_bler`]
/// uses for that trial) and finds the most reliable synthetic channel whose
/// likelihood ratio is undetermined. The dimension-`K` code fails exactly
/// when that channel is among its `K` most reliable ones. The information
/// sets are nested in `K`, so the curve is monotone by construction.
pub fn bler_curve(n: u32, epsilon: f64, trials: u64, seed: u64) -> Result<BlerCurve> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let z = bec_bhattacharyya_vector(n, epsilon)?;
    let len = z.len();
    let mut rank = vec![0usize; len];
    for (r, i) in reliability_order(&z).into_iter().enumerate() {
        rank[i] = r;
    }
    let zeros = vec![0u8; len];
    // histogram[r]: trials whose first undetermined channel has rank r;
    // index len counts trials with none.
    let histogram = (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; len + 1],
            |mut hist, trial| {
                let base = polar_trial_seed(seed, n, trial);
                let received = bec_transmit(&zeros, epsilon, &mut base.derive(STREAM_ERASURES).rng())
                    .expect("epsilon validated by construction");
                let first = if received.contains(&Ternary::Erased) {
                    erasure_profile(&received)
                        .iter()
                        .zip(&rank)
                        .filter(|(erased, _)| **erased)
                        .map(|(_, &r)| r)
                        .min()
                        .unwrap_or(len)
                } else {
                    len
                };
                hist[first] += 1;
                hist
            },
        )
        .reduce(
            || vec![0u64; len + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let mut failures = Vec::with_capacity(len);
    let mut running = 0;
    for count in &histogram[..len] {
        running += count;
        failures.push(running);
    }
    Ok(BlerCurve {
        n,
        epsilon,
        trials,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: u32,
    pub epsilon: f64,
    pub target_bler: f64,
    /// 0 when even `K = 1` misses the target.
    pub k: usize,
    pub rate: f64,
    /// Estimate at `k` (at `K = 1` when `k` is 0).
    pub bler: Proportion,
    /// Estimate at `k + 1`, absent when `k = N`.
    pub next_bler: Option<Proportion>,
    pub seed: u64,
}

impl RatePoint {
    fn from_curve(curve: &BlerCurve, target_bler: f64, seed: u64) -> Self {
        let len = curve.failures.len();
        let k = curve.max_dimension(target_bler);
        RatePoint {
            n: curve.n,
            epsilon: curve.epsilon,
            target_bler,
            k,
            rate: k as f64 / len as f64,
            bler: curve.at(k.max(1)),
            next_bler: (k < len).then(|| curve.at(k + 1)),
            seed,
        }
    }
}

fn check_target(target: f64) -> Result<()> {
    if target > 0.0 && target < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "target BLER {target} must lie in (0, 1)"
        )))
    }
}

/// Largest polar rate meeting `target_bler` at block length `2^n` on a BEC
/// with erasure probability `epsilon`.
pub fn max_rate(n: u32, epsilon: f64, target_bler: f64, trials: u64, seed: u64) -> Result<RatePoint> {
    check_target(target_bler)?;
    let curve = bler_curve(n, epsilon, trials, seed)?;
    Ok(RatePoint::from_curve(&curve, target_bler, seed))
}

/// [`max_rate`] over the Cartesian product of the inputs, ordered by
/// `(n, target, epsilon)` in the order given.
pub fn rate_sweep(
    n_list: &[u32],
    epsilon_grid: &[f64],
    targets: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<RatePoint>> {
    if n_list.is_empty() || epsilon_grid.is_empty() || targets.is_empty() {
        return Err(Error::InvalidParameter("sweep lists must be nonempty".into()));
    }
    for &t in targets {
        check_target(t)?;
    }
    let cells: Vec<(u32, f64)> = n_list
        .iter()
        .flat_map(|&n| epsilon_grid.iter().map(move |&e| (n, e)))
        .collect();
    let curves = cells
        .iter()
        .map(|&(n, eps)| bler_curve(n, eps, trials, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(cells.len() * targets.len());
    for (ni, _) in n_list.iter().enumerate() {
        for &target in targets {
            for (ei, _) in epsilon_grid.iter().enumerate() {
                let curve = &curves[ni * epsilon_grid.len() + ei];
                rows.push(RatePoint::from_curve(curve, target, seed));
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErasureEstimate {
    pub inner_rate: InnerRate,
    pub speed_kmh: f64,
    pub snr_db: f64,
    pub estimate: Proportion,
    /// Blocks whose CRC passed on a wrong payload.
    pub undetected: u64,
    pub seed: u64,
}

/// Erasure probability of the degraded link: the fraction of blocks the
/// inner chain discards after transmission over the fading channel.
pub fn estimate_erasure_prob(
    inner: &InnerCodeSpec,
    channel: &FadingChannelSpec,
    blocks: u64,
    seed: u64,
) -> Result<ErasureEstimate> {
    if blocks == 0 {
        return Err(Error::InvalidParameter("blocks must be >= 1".into()));
    }
    inner.validate()?;
    channel.validate()?;
    let payload_len = inner.payload_len()?;
    let (erasures, undetected) = (0..blocks)
        .into_par_iter()
        .map(|block| -> Result<(u64, u64)> {
            let base = RngSeed::new(seed, 0).derive_path(&[TAG_LINK, block]);
            let mut payload_rng = base.derive(STREAM_PAYLOAD).rng();
            let payload: Vec<u8> = (0..payload_len).map(|_| payload_rng.gen_range(0..2)).collect();
            let sent = protect_block(&payload, inner)?;
            let soft = transmit_bpsk_fading(&sent, channel, &mut base.derive(STREAM_ERASURES).rng())?;
            Ok(match recover_block(&soft, inner)? {
                BlockOutcome::Erased => (1, 0),
                BlockOutcome::Payload(p) => (0, u64::from(p != payload)),
            })
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(ErasureEstimate {
        inner_rate: inner.rate,
        speed_kmh: channel.speed_kmh,
        snr_db: channel.snr_db,
        estimate: Proportion::new(erasures, blocks),
        undetected,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub inner_rate_from: f64,
    pub inner_rate_to: f64,
    pub polar_rate_from: f64,
    pub polar_rate_to: f64,
    /// `None` when the polar rate did not decrease.
    pub tau: Option<f64>,
}

impl TradeoffRow {
    /// `tau` as the nearest integer `a` of an `a:1` ratio.
    pub fn tau_rounded(&self) -> Option<u64> {
        self.tau.map(|t| t.round() as u64)
    }
}

/// Ratio of the increase in inner rate to the decrease in polar rate, for
/// each consecutive pair of `(inner_rate, polar_rate)` points.
pub fn tradeoff_ratio(points: &[(f64, f64)]) -> Result<Vec<TradeoffRow>> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(
            "trade-off needs at least two (inner, polar) points".into(),
        ));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InvalidParameter(
            "inner rates must be strictly increasing".into(),
        ));
    }
    Ok(points
        .windows(2)
        .map(|w| {
            let ((inner_from, polar_from), (inner_to, polar_to)) = (w[0], w[1]);
            let drop = polar_from - polar_to;
            TradeoffRow {
                inner_rate_from: inner_from,
                inner_rate_to: inner_to,
                polar_rate_from: polar_from,
                polar_rate_to: polar_to,
                tau: (drop > 0.0).then(|| (inner_to - inner_from) / drop),
            }
        })
        .collect())
}

/// Where the end-to-end study takes its erasure probabilities from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonSource {
    /// Simulate the degraded link for each inner rate.
    Simulate,
    /// Fixed values for inner rates 1/2, 2/3, 3/4.
    Fixed([f64; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Polar trials per BLER curve.
    pub trials: u64,
    /// Inner-chain blocks per erasure estimate.
    pub blocks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndRow {
    pub inner_rate: InnerRate,
    pub epsilon: f64,
    /// Present when `epsilon` was simulated.
    pub erasure: Option<ErasureEstimate>,
    pub polar: RatePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndReport {
    pub speed_kmh: f64,
    pub n: u32,
    pub target_bler: f64,
    pub seed: u64,
    pub rows: Vec<EndToEndRow>,
    pub tradeoff: Vec<TradeoffRow>,
}

/// For each inner rate: erasure probability, then the largest polar rate at
/// that erasure probability, then the trade-off ratios between the rates.
pub fn end_to_end_run(
    inner: &InnerCodeSpec,
    channel: &FadingChannelSpec,
    n: u32,
    target_bler: f64,
    budget: Budget,
    source: &EpsilonSource,
    seed: u64,
) -> Result<EndToEndReport> {
    let mut rows = Vec::with_capacity(InnerRate::ALL.len());
    for (i, rate) in InnerRate::ALL.into_iter().enumerate() {
        let (epsilon, erasure) = match source {
            EpsilonSource::Fixed(values) => (values[i], None),
            EpsilonSource::Simulate => {
                let est = estimate_erasure_prob(&inner.with_rate(rate), channel, budget.blocks, seed)
                    .map_err(|e| e.in_stage("erasure estimate"))?;
                (est.estimate.point, Some(est))
            }
        };
        let polar = max_rate(n, epsilon, target_bler, budget.trials, seed)
            .map_err(|e| e.in_stage("max rate"))?;
        rows.push(EndToEndRow {
            inner_rate: rate,
            epsilon,
            erasure,
            polar,
        });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.inner_rate.value(), r.polar.rate))
        .collect();
    let tradeoff = tradeoff_ratio(&points).map_err(|e| e.in_stage("trade-off"))?;
    Ok(EndToEndReport {
        speed_kmh: channel.speed_kmh,
        n,
        target_bler,
        seed,
        rows,
        tradeoff,
    })
}
