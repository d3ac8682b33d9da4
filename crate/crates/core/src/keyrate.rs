//! Asymptotic secret key rate in the infinite-decoy limit.
//!
//! For announced event class `i` the rate per signal is
//!
//! ```text
//! K_i = Σ_{(m,n) ∈ {(1,1),(1,2),(2,1)}} Q_i^(m,n) [1 − h₂(e_p,i^(m,n))]
//!       − Q_i^tot · f(e_i^tot) · h₂(e_i^tot)
//! ```
//!
//! clamped at zero, with `Q_i^tot = Σ Q_i^(m,n)` and
//! `e_i^tot = Σ Q_i^(m,n) e_b,i^(m,n) / Q_i^tot` over every tabulated `(m,n)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::optics::YieldTable;
use crate::protocol::EventType;

/// Photon-number pairs whose privacy-amplification terms enter the rate.
pub const PRIVACY_PAIRS: [(u8, u8); 3] = [(1, 1), (1, 2), (2, 1)];

/// Error-correction inefficiency model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FeMode {
    /// `f(x) = 1.1581 + 57.200·x³`.
    EnzerCubic,
    /// A constant factor, independent of the error rate.
    Fixed(f64),
}

impl fmt::Display for FeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeMode::EnzerCubic => f.write_str("enzer"),
            FeMode::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

impl FromStr for FeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "enzer" || s == "enzer_cubic" {
            return Ok(FeMode::EnzerCubic);
        }
        let value = s
            .strip_prefix("fixed:")
            .ok_or_else(|| Error::Config(format!("unknown error-correction mode '{s}'")))?;
        let v: f64 = value
            .parse()
            .map_err(|_| Error::Config(format!("bad fixed error-correction factor '{value}'")))?;
        if !(v >= 1.0) || !v.is_finite() {
            return Err(Error::Config(format!(
                "fixed error-correction factor {v} must be at least 1"
            )));
        }
        Ok(FeMode::Fixed(v))
    }
}

/// Physical and operational parameters of one experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentParams {
    /// Detector quantum efficiency, in `(0, 1]`.
    pub eta: f64,
    /// Dark-count probability per detector per window, in `[0, 1)`.
    pub dark: f64,
    /// Fiber loss in dB/km.
    pub alpha: f64,
    /// Mean photon number of Alice's pulses.
    pub mu_a: f64,
    /// Mean photon number of Bob's pulses.
    pub mu_b: f64,
    pub fe_mode: FeMode,
    /// Photon-number cutoff of the yield table.
    pub n_max: usize,
}

impl ExperimentParams {
    /// The GYS reference set: η = 0.045, d = 8.5×10⁻⁷, α = 0.21 dB/km, with
    /// μ = 0.1 on both sides and the cubic error-correction model.
    pub fn gys() -> Self {
        Self {
            eta: 0.045,
            dark: 8.5e-7,
            alpha: 0.21,
            mu_a: 0.1,
            mu_b: 0.1,
            fe_mode: FeMode::EnzerCubic,
            n_max: 6,
        }
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self {
            mu_a: mu,
            mu_b: mu,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::Config(format!("{what} = {v} out of range")));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta", self.eta);
        }
        if !(self.dark >= 0.0 && self.dark < 1.0) {
            return bad("dark", self.dark);
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha", self.alpha);
        }
        if !(self.mu_a > 0.0 && self.mu_a.is_finite()) {
            return bad("mu_a", self.mu_a);
        }
        if !(self.mu_b > 0.0 && self.mu_b.is_finite()) {
            return bad("mu_b", self.mu_b);
        }
        if let FeMode::Fixed(v) = self.fe_mode {
            if !(v >= 1.0) {
                return bad("fixed error-correction factor", v);
            }
        }
        if self.n_max < 2 {
            return Err(Error::Config(format!(
                "n_max = {} must be at least 2",
                self.n_max
            )));
        }
        Ok(())
    }
}

/// `h₂(x) = −x log₂ x − (1−x) log₂(1−x)`, with `h₂(0) = h₂(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!(
            "binary entropy argument {x} outside [0, 1]"
        )));
    }
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    Ok(term(x) + term(1.0 - x))
}

pub fn error_correction_factor(mode: FeMode, x: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&x) {
        return Err(domain(format!("error rate {x} outside [0, 0.5]")));
    }
    Ok(match mode {
        FeMode::EnzerCubic => 1.1581 + 57.200 * x.powi(3),
        FeMode::Fixed(v) => v,
    })
}

/// Fiber transmittance from either party to the mid-point relay:
/// `10^(−α·L/20)` for a total Alice–Bob distance `L`.
pub fn transmittance(distance_km: f64, alpha: f64) -> Result<f64> {
    if !(distance_km >= 0.0) {
        return Err(domain(format!("distance {distance_km} km is negative")));
    }
    if !(alpha > 0.0) {
        return Err(domain(format!(
            "loss coefficient {alpha} dB/km must be positive"
        )));
    }
    Ok(10f64.powf(-alpha * distance_km / 20.0))
}

/// Poisson probability of `m` photons in a pulse of mean `mu`.
pub fn poisson_weight(mu: f64, m: usize) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(domain(format!("mean photon number {mu} must be positive")));
    }
    // log-space keeps large m finite
    let log_fact: f64 = (1..=m).map(|i| (i as f64).ln()).sum();
    Ok((-mu + m as f64 * mu.ln() - log_fact).exp())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Totals {
    pub q_tot: f64,
    pub e_tot: f64,
}

/// Total gain and gain-weighted bit error rate of one event class.
pub fn totals(table: &YieldTable, event: EventType) -> Result<Totals> {
    let mut q_tot = 0.0;
    let mut weighted = 0.0;
    for (_, entry) in table.entries_for(event) {
        q_tot += entry.q;
        weighted += entry.q * entry.e_b;
    }
    if q_tot <= 0.0 {
        return Err(Error::DegenerateTotal);
    }
    Ok(Totals {
        q_tot,
        e_tot: (weighted / q_tot).clamp(0.0, 1.0),
    })
}

/// Per-term breakdown of the rate formula.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RateComponents {
    /// `Q^(m,n)[1 − h₂(e_p^(m,n))]` for `(1,1)`, `(1,2)`, `(2,1)`.
    pub privacy: [f64; 3],
    /// `Q^tot f(e^tot) h₂(e^tot)`; enters the rate with a minus sign.
    pub correction: f64,
    pub q_tot: f64,
    pub e_tot: f64,
}

impl RateComponents {
    /// The unclamped formula value.
    pub fn raw(&self) -> f64 {
        self.privacy.iter().sum::<f64>() - self.correction
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyRatePoint {
    pub distance_km: f64,
    pub event: EventType,
    /// Secret key rate in bits per signal, never negative.
    pub rate: f64,
    pub components: RateComponents,
    /// Set when the total gain vanished and the rate was forced to zero.
    pub degenerate: bool,
}

pub fn key_rate(
    event: EventType,
    distance_km: f64,
    params: &ExperimentParams,
    table: &YieldTable,
) -> Result<KeyRatePoint> {
    let t = match totals(table, event) {
        Ok(t) => t,
        Err(Error::DegenerateTotal) => {
            return Ok(KeyRatePoint {
                distance_km,
                event,
                rate: 0.0,
                components: RateComponents::default(),
                degenerate: true,
            })
        }
        Err(e) => return Err(e),
    };
    let mut components = RateComponents {
        q_tot: t.q_tot,
        e_tot: t.e_tot,
        ..RateComponents::default()
    };
    for (slot, &(m, n)) in components.privacy.iter_mut().zip(&PRIVACY_PAIRS) {
        let entry = table
            .get(event, m, n)
            .ok_or_else(|| domain(format!("yield table lacks ({m},{n})")))?;
        let e_p = entry.e_p.unwrap_or(0.5).clamp(0.0, 0.5);
        *slot = entry.q * (1.0 - binary_entropy(e_p)?);
    }
    let f = error_correction_factor(params.fe_mode, t.e_tot.min(0.5))?;
    components.correction = t.q_tot * f * binary_entropy(t.e_tot)?;
    Ok(KeyRatePoint {
        distance_km,
        event,
        rate: components.raw().max(0.0),
        components,
        degenerate: false,
    })
}
