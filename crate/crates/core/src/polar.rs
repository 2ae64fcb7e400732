//! Polar code construction, encoding and successive-cancellation decoding
//! over the binary erasure channel.
//!
//! Indices are zero-based throughout the library. The generator is
//! `G_2^{⊗n}` with no bit-reversal permutation, and the Bhattacharyya
//! recursion emits its values in the same order (the "minus" branch before
//! the "plus" branch at every level, outermost level on the most significant
//! index bit), so construction, encoding and decoding agree on what index
//! `i` means.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

/// Largest exponent accepted when constructing codes.
pub const MAX_EXPONENT: u32 = 20;

/// Largest exponent for which [`build_generator`] materialises the matrix.
pub const MAX_MATRIX_EXPONENT: u32 = 10;

/// Largest block length [`PolarCode::exact_bler_bec`] will enumerate.
pub const MAX_ENUMERATION_LEN: usize = 16;

/// Output alphabet of the binary erasure channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ternary {
    Zero,
    One,
    Erased,
}

impl Ternary {
    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            Ternary::Zero
        } else {
            Ternary::One
        }
    }

    pub fn bit(self) -> Option<u8> {
        match self {
            Ternary::Zero => Some(0),
            Ternary::One => Some(1),
            Ternary::Erased => None,
        }
    }

    pub fn is_erased(self) -> bool {
        self == Ternary::Erased
    }

    fn xor(self, bit: u8) -> Self {
        match (self, bit & 1) {
            (Ternary::Erased, _) => Ternary::Erased,
            (t, 0) => t,
            (Ternary::Zero, _) => Ternary::One,
            (Ternary::One, _) => Ternary::Zero,
        }
    }
}

/// Check-node combination: the XOR of two observations, erased if either is.
fn combine_minus(a: Ternary, b: Ternary) -> Ternary {
    match (a.bit(), b.bit()) {
        (Some(x), Some(y)) => Ternary::from_bit(x ^ y),
        _ => Ternary::Erased,
    }
}

/// Variable-node combination given the partial sum `u` of the left branch.
/// Erased only when both observations are.
fn combine_plus(a: Ternary, b: Ternary, u: u8) -> Ternary {
    if b.is_erased() {
        a.xor(u)
    } else {
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeStatus {
    Ok,
    /// At least one information bit had an undetermined likelihood ratio.
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub info_estimate: Vec<u8>,
    pub status: DecodeStatus,
}

impl DecodeResult {
    pub fn is_ok(&self) -> bool {
        self.status == DecodeStatus::Ok
    }
}

/// `G_2^{⊗n}` over GF(2). Row `i` is the codeword of the unit vector `e_i`.
pub fn build_generator(n: u32) -> Result<Vec<Vec<u8>>> {
    if n > MAX_MATRIX_EXPONENT {
        return Err(Error::InvalidParameter(format!(
            "generator matrix is only materialised for n <= {MAX_MATRIX_EXPONENT}, got {n}"
        )));
    }
    let mut g = vec![vec![1u8]];
    for _ in 0..n {
        let size = g.len();
        let mut next = vec![vec![0u8; 2 * size]; 2 * size];
        // [[G, 0], [G, G]]
        for r in 0..size {
            for c in 0..size {
                let v = g[r][c];
                next[r][c] = v;
                next[r + size][c] = v;
                next[r + size][c + size] = v;
            }
        }
        g = next;
    }
    Ok(g)
}

/// In-place multiplication of a row vector by `G_2^{⊗n}` over GF(2).
///
/// `bits.len()` must be a power of two.
pub fn polar_transform(bits: &mut [u8]) {
    let len = bits.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        for block in bits.chunks_exact_mut(2 * half) {
            let (left, right) = block.split_at_mut(half);
            for (l, r) in left.iter_mut().zip(right.iter()) {
                *l ^= *r;
            }
        }
        half *= 2;
    }
}

/// Bhattacharyya parameters of the `2^n` synthetic channels built from a
/// BEC with erasure probability `epsilon`.
pub fn bec_bhattacharyya_vector(n: u32, epsilon: f64) -> Result<Vec<f64>> {
    check_probability("epsilon", epsilon)?;
    check_exponent(n)?;
    let mut z = vec![epsilon];
    for _ in 0..n {
        z = z.iter().flat_map(|&v| [2.0 * v - v * v, v * v]).collect();
    }
    Ok(z)
}

/// Symmetric capacity of the BEC.
pub fn bec_capacity(epsilon: f64) -> Result<f64> {
    check_probability("epsilon", epsilon)?;
    Ok(1.0 - epsilon)
}

/// All indices sorted from most to least reliable (ascending `z`, ties to the
/// smaller index).
pub fn reliability_order(z: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(a.cmp(&b)));
    order
}

/// The `k` most reliable indices, returned in ascending index order.
pub fn select_information_set(z: &[f64], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > z.len() {
        return Err(Error::InvalidParameter(format!(
            "information set size K = {k} must lie in 1..={}",
            z.len()
        )));
    }
    let mut set: Vec<usize> = reliability_order(z).into_iter().take(k).collect();
    set.sort_unstable();
    Ok(set)
}

fn check_exponent(n: u32) -> Result<()> {
    if n > MAX_EXPONENT {
        Err(Error::InvalidParameter(format!(
            "exponent n = {n} exceeds the configured maximum {MAX_EXPONENT}"
        )))
    } else {
        Ok(())
    }
}

/// A polar code of length `N = 2^n` designed for a BEC.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCode {
    n: u32,
    epsilon: f64,
    z: Vec<f64>,
    info_set: Vec<usize>,
    /// `Some(value)` at frozen positions, `None` at information positions.
    frozen: Vec<Option<u8>>,
}

impl PolarCode {
    /// Constructs the code with the `k` most reliable channels carrying data
    /// and all frozen bits set to zero.
    pub fn new(n: u32, epsilon: f64, k: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("exponent n must be >= 1".into()));
        }
        let z = bec_bhattacharyya_vector(n, epsilon)?;
        let info_set = select_information_set(&z, k)?;
        let mut frozen = vec![Some(0u8); z.len()];
        for &i in &info_set {
            frozen[i] = None;
        }
        Ok(Self {
            n,
            epsilon,
            z,
            info_set,
            frozen,
        })
    }

    /// Replaces the frozen values. `values` maps frozen indices to bits;
    /// unlisted frozen indices keep their current value.
    pub fn with_frozen_values(mut self, values: &BTreeMap<usize, u8>) -> Result<Self> {
        for (&i, &bit) in values {
            if bit > 1 {
                return Err(Error::InvalidParameter(format!(
                    "frozen value at index {i} is {bit}, expected 0 or 1"
                )));
            }
            match self.frozen.get_mut(i) {
                Some(slot @ Some(_)) => *slot = Some(bit),
                Some(None) => {
                    return Err(Error::InvalidParameter(format!(
                        "index {i} is an information position, not frozen"
                    )))
                }
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "frozen index {i} out of range for N = {}",
                        self.len()
                    )))
                }
            }
        }
        Ok(self)
    }

    pub fn exponent(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dimension(&self) -> usize {
        self.info_set.len()
    }

    pub fn rate(&self) -> f64 {
        self.dimension() as f64 / self.len() as f64
    }

    pub fn design_epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn bhattacharyya(&self) -> &[f64] {
        &self.z
    }

    /// Information positions, ascending.
    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn is_info(&self, index: usize) -> bool {
        self.frozen[index].is_none()
    }

    /// Frozen positions and their values, ascending by index.
    pub fn frozen_values(&self) -> BTreeMap<usize, u8> {
        self.frozen
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|b| (i, b)))
            .collect()
    }

    /// Places `info` on the information positions and the frozen values
    /// elsewhere, then applies `G_N`.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.dimension() {
            return Err(Error::LengthMismatch {
                what: "information block",
                expected: self.dimension(),
                actual: info.len(),
            });
        }
        let mut u: Vec<u8> = self.frozen.iter().map(|v| v.unwrap_or(0)).collect();
        for (&pos, &bit) in self.info_set.iter().zip(info) {
            u[pos] = bit & 1;
        }
        polar_transform(&mut u);
        Ok(u)
    }

    /// Successive-cancellation decoding of a BEC output.
    ///
    /// An information bit whose likelihood ratio is undetermined (an erasure)
    /// is set to 0 and the result is marked [`DecodeStatus::Ambiguous`].
    pub fn decode(&self, received: &[Ternary]) -> Result<DecodeResult> {
        if received.len() != self.len() {
            return Err(Error::LengthMismatch {
                what: "received block",
                expected: self.len(),
                actual: received.len(),
            });
        }
        let out = successive_cancellation(received, &self.frozen);
        let ambiguous = self.info_set.iter().any(|&i| out.lr_erased[i]);
        Ok(DecodeResult {
            info_estimate: self.info_set.iter().map(|&i| out.u[i]).collect(),
            status: if ambiguous {
                DecodeStatus::Ambiguous
            } else {
                DecodeStatus::Ok
            },
        })
    }

    /// `min(1, Σ_{i∈χ} z_i)`.
    pub fn union_bound_bler(&self) -> f64 {
        self.info_set
            .iter()
            .map(|&i| self.z[i])
            .sum::<f64>()
            .min(1.0)
    }

    /// Exact block failure probability of [`decode`](Self::decode) on a BEC
    /// with erasure probability `epsilon`, by enumerating every erasure
    /// pattern.
    pub fn exact_bler_bec(&self, epsilon: f64) -> Result<f64> {
        check_probability("epsilon", epsilon)?;
        let len = self.len();
        if len > MAX_ENUMERATION_LEN {
            return Err(Error::Capacity(format!(
                "exact enumeration needs N <= {MAX_ENUMERATION_LEN}, got N = {len}"
            )));
        }
        let codeword = self.encode(&vec![0; self.dimension()])?;
        let mut received = vec![Ternary::Zero; len];
        let mut total = 0.0;
        for pattern in 0u32..(1 << len) {
            for (j, r) in received.iter_mut().enumerate() {
                *r = if pattern >> j & 1 == 1 {
                    Ternary::Erased
                } else {
                    Ternary::from_bit(codeword[j])
                };
            }
            if !self.decode(&received)?.is_ok() {
                let erased = pattern.count_ones() as i32;
                total += epsilon.powi(erased) * (1.0 - epsilon).powi(len as i32 - erased);
            }
        }
        Ok(total)
    }

    pub fn to_document(&self) -> PolarCodeDocument {
        PolarCodeDocument {
            n: self.n,
            epsilon: self.epsilon,
            info_set: self.info_set.iter().map(|&i| i + 1).collect(),
            frozen_values: self
                .frozen_values()
                .into_iter()
                .map(|(i, b)| (i + 1, b))
                .collect(),
        }
    }

    /// Rebuilds a code from its document, recomputing `z` and checking that
    /// the stored information set is the one the construction selects.
    pub fn from_document(doc: &PolarCodeDocument) -> Result<Self> {
        let code = Self::new(doc.n, doc.epsilon, doc.info_set.len())?;
        let stored: Vec<usize> = doc
            .info_set
            .iter()
            .map(|&i| i.checked_sub(1))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::InvalidParameter("info_set indices are 1-based".into()))?;
        if stored != code.info_set {
            return Err(Error::InvalidParameter(
                "stored info_set does not match the construction for (n, epsilon)".into(),
            ));
        }
        let frozen: BTreeMap<usize, u8> = doc
            .frozen_values
            .iter()
            .map(|(&i, &b)| i.checked_sub(1).map(|i| (i, b)))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::InvalidParameter("frozen indices are 1-based".into()))?;
        code.with_frozen_values(&frozen)
    }
}

/// JSON form of a [`PolarCode`]. Indices are 1-based; `z` is not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarCodeDocument {
    pub n: u32,
    pub epsilon: f64,
    pub info_set: Vec<usize>,
    pub frozen_values: BTreeMap<usize, u8>,
}

struct ScOutput {
    u: Vec<u8>,
    lr_erased: Vec<bool>,
}

fn successive_cancellation(received: &[Ternary], frozen: &[Option<u8>]) -> ScOutput {
    let len = received.len();
    let mut out = ScOutput {
        u: vec![0; len],
        lr_erased: vec![false; len],
    };
    let mut partial = vec![0u8; len];
    let mut scratch = vec![Ternary::Erased; len];
    sc_node(
        received,
        frozen,
        &mut out.u,
        &mut out.lr_erased,
        &mut partial,
        &mut scratch,
    );
    out
}

/// Decodes one subtree. On return `partial` holds the re-encoded estimate
/// (`û·G`) of this subtree.
fn sc_node(
    lr: &[Ternary],
    frozen: &[Option<u8>],
    u: &mut [u8],
    lr_erased: &mut [bool],
    partial: &mut [u8],
    scratch: &mut [Ternary],
) {
    let len = lr.len();
    if len == 1 {
        lr_erased[0] = lr[0].is_erased();
        // LR >= 1 (including the undetermined case) decides 0.
        let bit = frozen[0].unwrap_or_else(|| lr[0].bit().unwrap_or(0));
        u[0] = bit;
        partial[0] = bit;
        return;
    }
    let half = len / 2;
    let (child, rest) = scratch.split_at_mut(half);
    let (lr_left, lr_right) = lr.split_at(half);
    let (frozen_a, frozen_b) = frozen.split_at(half);
    let (u_a, u_b) = u.split_at_mut(half);
    let (erased_a, erased_b) = lr_erased.split_at_mut(half);
    let (part_a, part_b) = partial.split_at_mut(half);

    for ((c, &a), &b) in child.iter_mut().zip(lr_left).zip(lr_right) {
        *c = combine_minus(a, b);
    }
    sc_node(child, frozen_a, u_a, erased_a, part_a, rest);

    for (((c, &a), &b), &s) in child.iter_mut().zip(lr_left).zip(lr_right).zip(part_a.iter()) {
        *c = combine_plus(a, b, s);
    }
    sc_node(child, frozen_b, u_b, erased_b, part_b, rest);

    for (a, &b) in part_a.iter_mut().zip(part_b.iter()) {
        *a ^= b;
    }
}

/// For each synthetic channel, whether successive cancellation sees an
/// undetermined likelihood ratio on `received`.
///
/// Over the BEC this depends on the erasure pattern only, not on bit values
/// or frozen positions, so a code with information set `χ` fails on
/// `received` exactly when the profile is `true` somewhere in `χ`.
pub fn erasure_profile(received: &[Ternary]) -> Vec<bool> {
    let frozen = vec![None; received.len()];
    successive_cancellation(received, &frozen).lr_erased
}
