//! Stochastic channels: the memoryless BEC seen by the polar stage, and a
//! flat Rayleigh fading link with coherent BPSK detection seen by the inner
//! code.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::inner::Llr;
use crate::polar::Ternary;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// SNRs at or above this are treated as this value so the noise variance
/// stays positive.
pub const MAX_SNR_DB: f64 = 60.0;

/// Oscillators per quadrature branch of the fading generator.
pub const OSCILLATORS: usize = 16;

/// Sends each bit through a BEC. One uniform draw is consumed per bit and the
/// bit is erased when it falls below `epsilon`, so two calls sharing a
/// random stream produce nested erasure patterns for increasing `epsilon`.
pub fn bec_transmit<R: Rng + ?Sized>(bits: &[u8], epsilon: f64, rng: &mut R) -> Result<Vec<Ternary>> {
    check_probability("epsilon", epsilon)?;
    Ok(bits
        .iter()
        .map(|&b| {
            if rng.gen::<f64>() < epsilon {
                Ternary::Erased
            } else {
                Ternary::from_bit(b)
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingChannelSpec {
    pub speed_kmh: f64,
    pub carrier_hz: f64,
    /// Channel symbols per second.
    pub symbol_rate: f64,
    /// Average symbol energy to noise density ratio.
    pub snr_db: f64,
}

impl Default for FadingChannelSpec {
    fn default() -> Self {
        Self {
            speed_kmh: 5.0,
            carrier_hz: 1.0e9,
            symbol_rate: 10_000.0,
            snr_db: 10.0,
        }
    }
}

impl FadingChannelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed_kmh >= 0.0) || !self.speed_kmh.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "speed must be >= 0 km/h, got {}",
                self.speed_kmh
            )));
        }
        if !(self.carrier_hz > 0.0) || !self.carrier_hz.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "carrier frequency must be > 0 Hz, got {}",
                self.carrier_hz
            )));
        }
        if !(self.symbol_rate > 0.0) || !self.symbol_rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "symbol rate must be > 0, got {}",
                self.symbol_rate
            )));
        }
        if self.snr_db.is_nan() {
            return Err(Error::InvalidParameter("SNR must be a number".into()));
        }
        Ok(())
    }

    /// Per-dimension noise variance for unit symbol energy.
    pub fn noise_variance(&self) -> f64 {
        let snr = 10f64.powf(self.snr_db.min(MAX_SNR_DB) / 10.0);
        1.0 / (2.0 * snr)
    }
}

/// Maximum Doppler shift `v·f_c/c`.
pub fn doppler_frequency(spec: &FadingChannelSpec) -> f64 {
    spec.speed_kmh / 3.6 * spec.carrier_hz / SPEED_OF_LIGHT
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Gain {
    pub re: f64,
    pub im: f64,
}

impl Gain {
    pub fn norm_sqr(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

/// Sum-of-sinusoids Rayleigh process with unit mean power.
///
/// Arrival angles are spread over a quarter circle with one random offset,
/// and each branch oscillator has its own random phase. The in-phase branch
/// uses `cos α`, the quadrature branch `sin α`, so the branches are
/// uncorrelated and each has autocorrelation close to `J0(2π f_d τ)/2`.
#[derive(Debug, Clone)]
pub struct SumOfSinusoids {
    /// Angular frequency per sample and phase, per oscillator.
    in_phase: Vec<(f64, f64)>,
    quadrature: Vec<(f64, f64)>,
    scale: f64,
}

impl SumOfSinusoids {
    pub fn new<R: Rng + ?Sized>(doppler_hz: f64, sample_rate: f64, rng: &mut R) -> Result<Self> {
        if !(doppler_hz >= 0.0) || !(sample_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need doppler >= 0 and sample rate > 0, got {doppler_hz} and {sample_rate}"
            )));
        }
        if doppler_hz > sample_rate / 2.0 {
            return Err(Error::InvalidParameter(format!(
                "Doppler {doppler_hz} Hz exceeds half the sample rate {sample_rate}"
            )));
        }
        let m = OSCILLATORS as f64;
        let offset = rng.gen_range(-PI..PI);
        let omega = 2.0 * PI * doppler_hz / sample_rate;
        let mut in_phase = Vec::with_capacity(OSCILLATORS);
        let mut quadrature = Vec::with_capacity(OSCILLATORS);
        for k in 1..=OSCILLATORS {
            let alpha = (2.0 * PI * k as f64 - PI + offset) / (4.0 * m);
            in_phase.push((omega * alpha.cos(), rng.gen_range(-PI..PI)));
            quadrature.push((omega * alpha.sin(), rng.gen_range(-PI..PI)));
        }
        Ok(Self {
            in_phase,
            quadrature,
            scale: (1.0 / m).sqrt(),
        })
    }

    /// Gain at sample index `t`.
    pub fn gain(&self, t: f64) -> Gain {
        let branch = |osc: &[(f64, f64)]| osc.iter().map(|&(w, p)| (w * t + p).cos()).sum::<f64>();
        Gain {
            re: self.scale * branch(&self.in_phase),
            im: self.scale * branch(&self.quadrature),
        }
    }

    pub fn samples(&self, count: usize) -> Vec<Gain> {
        (0..count).map(|t| self.gain(t as f64)).collect()
    }
}

/// `count` consecutive fading gains sampled at `sample_rate`.
pub fn fading_gains<R: Rng + ?Sized>(
    doppler_hz: f64,
    sample_rate: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Gain>> {
    Ok(SumOfSinusoids::new(doppler_hz, sample_rate, rng)?.samples(count))
}

/// Coherent BPSK over per-symbol amplitudes with known gain; returns LLRs
/// `2·a·y/σ²` where `y = a·(1 − 2b) + n`.
pub fn transmit_bpsk<R: Rng + ?Sized>(
    bits: &[u8],
    amplitudes: &[f64],
    noise_variance: f64,
    rng: &mut R,
) -> Result<Vec<Llr>> {
    if bits.len() != amplitudes.len() {
        return Err(Error::LengthMismatch {
            what: "amplitude sequence",
            expected: bits.len(),
            actual: amplitudes.len(),
        });
    }
    let sigma = noise_variance.sqrt();
    Ok(bits
        .iter()
        .zip(amplitudes)
        .map(|(&b, &a)| {
            let s = if b == 0 { 1.0 } else { -1.0 };
            let noise: f64 = rng.sample(StandardNormal);
            let y = a * s + sigma * noise;
            2.0 * a * y / noise_variance
        })
        .collect())
}

/// BPSK through flat Rayleigh fading plus noise. Draws the fading process
/// first, then one noise sample per bit.
pub fn transmit_bpsk_fading<R: Rng + ?Sized>(
    bits: &[u8],
    spec: &FadingChannelSpec,
    rng: &mut R,
) -> Result<Vec<Llr>> {
    spec.validate()?;
    let gains = fading_gains(doppler_frequency(spec), spec.symbol_rate, bits.len(), rng)?;
    let amplitudes: Vec<f64> = gains.iter().map(Gain::norm).collect();
    transmit_bpsk(bits, &amplitudes, spec.noise_variance(), rng)
}
