//! Monte Carlo simulation of SARG04 rounds.
//!
//! Two round types are simulated with the exact state-vector algebra of
//! [`crate::qubit`]:
//!
//! * the entanglement-based protocol: Alice rotates the travelling half of her
//!   source pair with `T_l R^k`, Bob undoes `T_l′ R^k′` and applies the local
//!   filter, and the pair is kept when both index pairs match and the filter
//!   succeeds;
//! * the measurement-device-independent protocol in its virtual form: each
//!   party holds `|φ+⟩`, rotates the travelling half with `R^k` and sends it to
//!   the relay, whose Bell outcome is announced as Type1, Type2 or failure.
//!
//! Every round draws its randomness from its own ChaCha stream selected by
//! `(seed, round index)`, so parallel generation is reproducible.

use std::f64::consts::FRAC_PI_8;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::qubit::{
    filter_apply_on, measure_z_pair, rotation_r, rotation_t, sample_index, swap_project,
    BellOutcome, Operator2, StateVec,
};

/// Outcome class announced by the relay for a successful Bell measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventType {
    /// Cross-port coincidence: `AT & BR` or `BT & AR`.
    Type1,
    /// Same-port coincidence: `AT & AR` or `BT & BR`.
    Type2,
}

impl EventType {
    pub const BOTH: [EventType; 2] = [EventType::Type1, EventType::Type2];

    pub fn number(self) -> u8 {
        match self {
            EventType::Type1 => 1,
            EventType::Type2 => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(EventType::Type1),
            2 => Some(EventType::Type2),
            _ => None,
        }
    }
}

/// Bell state identified by a Type1 (cross-port, orthogonal ±45°) coincidence.
pub const TYPE1_OUTCOME: BellOutcome = BellOutcome::PsiMinus;
/// Bell state identified by a Type2 (same-port, orthogonal ±45°) coincidence.
///
/// With analyzers at ±45° the same-port orthogonal pair is `|TR⟩ + |RT⟩`,
/// which is `φ−` in the `|→⟩, |↑⟩` basis.
pub const TYPE2_OUTCOME: BellOutcome = BellOutcome::PhiMinus;

/// Maps a Bell outcome to the announced event class; `None` is a failure.
pub fn event_type(outcome: BellOutcome) -> Option<EventType> {
    if outcome == TYPE1_OUTCOME {
        Some(EventType::Type1)
    } else if outcome == TYPE2_OUTCOME {
        Some(EventType::Type2)
    } else {
        None
    }
}

/// Sifting rule: Type1 keeps every `k = k′`, Type2 only `k = k′ ∈ {0, 2}`.
pub fn mdi_keep(event: EventType, k: u8, k_prime: u8) -> bool {
    k == k_prime
        && match event {
            EventType::Type1 => true,
            EventType::Type2 => k.is_multiple_of(2),
        }
}

/// Alice flips her bit on kept Type1 events.
pub fn mdi_flip(event: EventType) -> bool {
    event == EventType::Type1
}

/// Channel noise applied to every travelling qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseConfig {
    depolarizing: f64,
}

impl NoiseConfig {
    pub fn new(depolarizing: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&depolarizing) {
            return Err(domain(format!(
                "depolarizing probability {depolarizing} outside [0, 1]"
            )));
        }
        Ok(Self { depolarizing })
    }

    pub fn ideal() -> Self {
        Self { depolarizing: 0.0 }
    }

    pub fn depolarizing(&self) -> f64 {
        self.depolarizing
    }

    /// Probability of each Pauli `I, X, Y, Z` in the depolarizing mixture.
    fn pauli_weights(&self) -> [f64; 4] {
        let p = self.depolarizing;
        [1.0 - 0.75 * p, p / 4.0, p / 4.0, p / 4.0]
    }
}

fn pauli(index: usize) -> Operator2 {
    match index {
        0 => Operator2::identity(),
        1 => Operator2::pauli_x(),
        2 => Operator2::pauli_y(),
        _ => Operator2::pauli_z(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Protocol {
    EntanglementBased,
    Mdi,
}

/// One simulated round.
///
/// Bits are reported only for kept rounds; `bit_alice` is Alice's value before
/// any flip, so a correct kept round satisfies `bit_alice ⊕ flipped = bit_bob`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub k: u8,
    pub l: u8,
    pub k_prime: u8,
    pub l_prime: u8,
    pub filter_success: bool,
    pub charlie_outcome: Option<BellOutcome>,
    pub event_type: Option<EventType>,
    pub bit_alice: Option<u8>,
    pub bit_bob: Option<u8>,
    pub kept: bool,
    pub flipped: bool,
}

impl RoundRecord {
    /// Whether a kept round violates the expected bit correlation.
    pub fn is_error(&self) -> Option<bool> {
        match (self.kept, self.bit_alice, self.bit_bob) {
            (true, Some(a), Some(b)) => Some((a ^ u8::from(self.flipped)) != b),
            _ => None,
        }
    }
}

/// Fixed index choices for a round, used to force specific branches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexChoice {
    pub k: u8,
    pub l: u8,
    pub k_prime: u8,
    pub l_prime: u8,
}

impl IndexChoice {
    fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            k: rng.random_range(0..4),
            l: rng.random_range(0..3),
            k_prime: rng.random_range(0..4),
            l_prime: rng.random_range(0..3),
        }
    }
}

/// The random stream for round `index` of a run seeded with `seed`.
pub fn round_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Alice's entanglement-based source, `(|0⟩|φ₀⟩ + |1⟩|φ₁⟩)/√2` with
/// `|φ_j⟩ = cos(π/8)|0_x⟩ ± sin(π/8)|1_x⟩`.
///
/// Equal to `cos(π/8)|0_x 0_x⟩ + sin(π/8)|1_x 1_x⟩`; Bob's filter maps it back
/// to `|φ+⟩` when the rotations cancel.
pub fn entanglement_source() -> StateVec {
    let (s, c) = (FRAC_PI_8.sin(), FRAC_PI_8.cos());
    let xx0 = StateVec::product(&StateVec::zero_x(), &StateVec::zero_x()).unwrap();
    let xx1 = StateVec::product(&StateVec::one_x(), &StateVec::one_x()).unwrap();
    let amps = xx0
        .amplitudes()
        .iter()
        .zip(xx1.amplitudes())
        .map(|(a, b)| a * c + b * s)
        .collect();
    StateVec::new(amps).unwrap()
}

fn draw_pauli<R: Rng + ?Sized>(rng: &mut R, noise: &NoiseConfig) -> usize {
    let u: f64 = rng.random();
    sample_index(&noise.pauli_weights(), u).unwrap_or(0)
}

/// Entanglement-based round with uniformly drawn indices.
pub fn run_entanglement_round<R: Rng + ?Sized>(
    rng: &mut R,
    noise: &NoiseConfig,
) -> Result<RoundRecord> {
    let choice = IndexChoice::draw(rng);
    run_entanglement_round_with(choice, rng, noise)
}

pub fn run_entanglement_round_with<R: Rng + ?Sized>(
    choice: IndexChoice,
    rng: &mut R,
    noise: &NoiseConfig,
) -> Result<RoundRecord> {
    let IndexChoice {
        k,
        l,
        k_prime,
        l_prime,
    } = choice;
    let alice = rotation_t(l)? * rotation_r(k)?;
    let bob = rotation_t(l_prime)? * rotation_r(k_prime)?;

    let mut state = entanglement_source().apply_on(&alice, 1)?;
    state = state.apply_on(&pauli(draw_pauli(rng, noise)), 1)?;
    state = state.apply_on(&bob.adjoint(), 1)?;

    let (p_filter, post) = filter_apply_on(&state, 1)?;
    let filter_success = rng.random::<f64>() < p_filter;
    let kept = k == k_prime && l == l_prime && filter_success;

    let (bit_alice, bit_bob) = if kept {
        let (a, b) = measure_z_pair(&post, rng.random())?;
        (Some(a), Some(b))
    } else {
        (None, None)
    };
    Ok(RoundRecord {
        k,
        l,
        k_prime,
        l_prime,
        filter_success,
        charlie_outcome: None,
        event_type: None,
        bit_alice,
        bit_bob,
        kept,
        flipped: false,
    })
}

/// `(I ⊗ P·R^k)|φ+⟩`: a virtual MDI source after rotation and channel Pauli.
fn mdi_pair(k: u8, pauli_index: usize) -> Result<StateVec> {
    let u = pauli(pauli_index) * rotation_r(k)?;
    BellOutcome::PhiPlus.state().apply_on(&u, 1)
}

/// MDI round with uniformly drawn `k`, `k′`.
pub fn run_mdi_round<R: Rng + ?Sized>(rng: &mut R, noise: &NoiseConfig) -> Result<RoundRecord> {
    let k = rng.random_range(0..4);
    let k_prime = rng.random_range(0..4);
    run_mdi_round_with(k, k_prime, None, rng, noise)
}

/// MDI round with fixed `k`, `k′` and, optionally, a forced relay outcome.
///
/// A forced outcome must have non-zero probability for the prepared states.
pub fn run_mdi_round_with<R: Rng + ?Sized>(
    k: u8,
    k_prime: u8,
    forced: Option<BellOutcome>,
    rng: &mut R,
    noise: &NoiseConfig,
) -> Result<RoundRecord> {
    if k > 3 || k_prime > 3 {
        return Err(domain(format!(
            "rotation indices ({k}, {k_prime}) outside 0..=3"
        )));
    }
    let alice = mdi_pair(k, draw_pauli(rng, noise))?;
    let bob = mdi_pair(k_prime, draw_pauli(rng, noise))?;

    let branches = BellOutcome::ALL
        .iter()
        .map(|&o| swap_project(&alice, &bob, o))
        .collect::<Result<Vec<_>>>()?;
    let probs: Vec<f64> = branches.iter().map(StateVec::norm_sqr).collect();
    let draw: f64 = rng.random();
    let outcome = match forced {
        Some(o) if probs[o.index()] > 0.0 => o,
        Some(o) => return Err(domain(format!("forced outcome {o} has zero probability"))),
        None => BellOutcome::ALL[sample_index(&probs, draw).unwrap_or(0)],
    };

    let event = event_type(outcome);
    let kept = event.is_some_and(|e| mdi_keep(e, k, k_prime));
    let flipped = kept && event.is_some_and(mdi_flip);
    let (bit_alice, bit_bob) = if kept {
        let post = branches[outcome.index()].normalized()?;
        let (a, b) = measure_z_pair(&post, rng.random())?;
        (Some(a), Some(b))
    } else {
        (None, None)
    };
    Ok(RoundRecord {
        k,
        l: 0,
        k_prime,
        l_prime: 0,
        filter_success: true,
        charlie_outcome: Some(outcome),
        event_type: event,
        bit_alice,
        bit_bob,
        kept,
        flipped,
    })
}

/// Runs `rounds` independent rounds; round `i` uses [`round_rng`]`(seed, i)`.
pub fn simulate(
    protocol: Protocol,
    seed: u64,
    rounds: u64,
    noise: &NoiseConfig,
) -> Result<Vec<RoundRecord>> {
    (0..rounds)
        .into_par_iter()
        .map(|i| {
            let mut rng = round_rng(seed, i);
            match protocol {
                Protocol::EntanglementBased => run_entanglement_round(&mut rng, noise),
                Protocol::Mdi => run_mdi_round(&mut rng, noise),
            }
        })
        .collect()
}

/// Empirical sift rate and error rate of a batch of rounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McSummary {
    pub rounds_total: u64,
    pub rounds_kept: u64,
    pub errors: u64,
    pub sift_rate: f64,
    /// `NaN` when no round was kept.
    pub qber: f64,
    pub stderr_qber: f64,
}

pub fn estimate(records: &[RoundRecord]) -> Result<McSummary> {
    if records.is_empty() {
        return Err(domain("cannot estimate from an empty record set"));
    }
    let total = records.len() as u64;
    let kept = records.iter().filter(|r| r.kept).count() as u64;
    let errors = records
        .iter()
        .filter(|r| r.is_error() == Some(true))
        .count() as u64;
    let (qber, stderr_qber) = if kept == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let q = errors as f64 / kept as f64;
        (q, (q * (1.0 - q) / kept as f64).sqrt())
    };
    Ok(McSummary {
        rounds_total: total,
        rounds_kept: kept,
        errors,
        sift_rate: kept as f64 / total as f64,
        qber,
        stderr_qber,
    })
}

/// Exact sift rate and error rate of kept rounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpectedRates {
    pub sift_rate: f64,
    pub qber: f64,
}

fn weighted_paulis(noise: &NoiseConfig) -> impl Iterator<Item = (usize, f64)> {
    noise
        .pauli_weights()
        .into_iter()
        .enumerate()
        .filter(|&(_, w)| w > 0.0)
}

/// Enumerates every `(k, k′, channel Pauli, Bell outcome)` branch of the MDI
/// round.
pub fn mdi_expected(noise: &NoiseConfig) -> Result<ExpectedRates> {
    let mut kept = 0.0;
    let mut wrong = 0.0;
    for k in 0..4u8 {
        for k_prime in 0..4u8 {
            for (pa, wa) in weighted_paulis(noise) {
                for (pb, wb) in weighted_paulis(noise) {
                    let alice = mdi_pair(k, pa)?;
                    let bob = mdi_pair(k_prime, pb)?;
                    let w = wa * wb / 16.0;
                    for outcome in BellOutcome::ALL {
                        let Some(event) = event_type(outcome) else {
                            continue;
                        };
                        if !mdi_keep(event, k, k_prime) {
                            continue;
                        }
                        let flip = u8::from(mdi_flip(event));
                        let branch = swap_project(&alice, &bob, outcome)?;
                        let amps = branch.amplitudes();
                        for (idx, amp) in amps.iter().enumerate() {
                            let (a, b) = ((idx >> 1) as u8, (idx & 1) as u8);
                            let p = w * amp.norm_sqr();
                            kept += p;
                            if a ^ flip != b {
                                wrong += p;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(ExpectedRates {
        sift_rate: kept,
        qber: if kept > 0.0 { wrong / kept } else { f64::NAN },
    })
}

/// Enumerates every `(k, l, k′, l′, channel Pauli)` branch of the
/// entanglement-based round.
pub fn entanglement_expected(noise: &NoiseConfig) -> Result<ExpectedRates> {
    let mut kept = 0.0;
    let mut wrong = 0.0;
    for k in 0..4u8 {
        for l in 0..3u8 {
            let alice = rotation_t(l)? * rotation_r(k)?;
            for (pa, w) in weighted_paulis(noise) {
                // only matching indices can be kept
                let state = entanglement_source()
                    .apply_on(&alice, 1)?
                    .apply_on(&pauli(pa), 1)?
                    .apply_on(&alice.adjoint(), 1)?
                    .apply_on(&crate::qubit::filter(), 1)?;
                let w = w / 144.0;
                for (idx, amp) in state.amplitudes().iter().enumerate() {
                    let p = w * amp.norm_sqr();
                    kept += p;
                    if (idx >> 1) != (idx & 1) {
                        wrong += p;
                    }
                }
            }
        }
    }
    Ok(ExpectedRates {
        sift_rate: kept,
        qber: if kept > 0.0 { wrong / kept } else { f64::NAN },
    })
}
