//! Photon-number-resolved model of the relay's Bell-state analyzer.
//!
//! Alice's `m` photons enter the 50:50 beam splitter at input `a`, Bob's `n`
//! photons at input `b`, each group in a single linear polarization mode.
//! Creation operators transform as
//!
//! ```text
//! a†_θ → (A†_θ + B†_θ)/√2        b†_θ → (A†_θ − B†_θ)/√2
//! X†_θ → cos(θ − π/4)·X†_T + cos(θ + π/4)·X†_R
//! ```
//!
//! where `T`/`R` are the +45°/−45° outputs of the polarizing beam splitter on
//! output port `X ∈ {A, B}`. Expanding the product of creation operators gives
//! the exact Fock-state amplitudes over the four detector modes. Each photon
//! then survives independently with probability `p_survive` (fiber times
//! detector efficiency), and each detector adds a dark count with probability
//! `d`. Detectors are threshold detectors: they report click or no click.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};
use std::fmt::{self, Write as _};

use sha2::{Digest, Sha256};

use crate::error::{domain, Error, Result};
use crate::keyrate::{poisson_weight, transmittance, ExperimentParams, PRIVACY_PAIRS};
use crate::protocol::{mdi_flip, mdi_keep, EventType};

/// Largest `m + n` the Fock expansion accepts.
pub const MAX_PHOTONS: usize = 64;

/// Default photon-number cutoff. For μ ≤ 0.5 the Poisson mass above 6 photons
/// is about 1.0×10⁻⁶ per party.
pub const DEFAULT_N_MAX: usize = 6;

/// Windows with clicks beyond the announced pair are failures: a Type-i
/// success requires exactly the two named detectors and nothing else.
pub const EXACT_PAIR_ONLY: bool = true;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Port {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pol {
    /// Transmitted, +45°.
    T,
    /// Reflected, −45°.
    R,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DetectorId {
    pub port: Port,
    pub pol: Pol,
}

impl DetectorId {
    pub const AT: DetectorId = DetectorId {
        port: Port::A,
        pol: Pol::T,
    };
    pub const AR: DetectorId = DetectorId {
        port: Port::A,
        pol: Pol::R,
    };
    pub const BT: DetectorId = DetectorId {
        port: Port::B,
        pol: Pol::T,
    };
    pub const BR: DetectorId = DetectorId {
        port: Port::B,
        pol: Pol::R,
    };

    /// Mode order used throughout this module.
    pub const ALL: [DetectorId; 4] = [Self::AT, Self::AR, Self::BT, Self::BR];

    pub fn index(self) -> usize {
        match (self.port, self.pol) {
            (Port::A, Pol::T) => 0,
            (Port::A, Pol::R) => 1,
            (Port::B, Pol::T) => 2,
            (Port::B, Pol::R) => 3,
        }
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let port = if self.port == Port::A { 'A' } else { 'B' };
        let pol = if self.pol == Pol::T { 'T' } else { 'R' };
        write!(f, "{port}{pol}")
    }
}

/// The set of detectors that fired in one window, as a 4-bit mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ClickPattern(u8);

impl ClickPattern {
    pub const EMPTY: ClickPattern = ClickPattern(0);

    pub fn from_detectors(detectors: &[DetectorId]) -> Self {
        Self(detectors.iter().fold(0, |m, d| m | (1 << d.index())))
    }

    pub fn from_bits(bits: u8) -> Self {
        Self(bits & 0b1111)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, d: DetectorId) -> bool {
        self.0 & (1 << d.index()) != 0
    }

    pub fn all() -> impl Iterator<Item = ClickPattern> {
        (0..16).map(ClickPattern)
    }
}

/// The two click patterns announced as a success of the given class.
pub fn success_patterns(event: EventType) -> [ClickPattern; 2] {
    use DetectorId as D;
    match event {
        EventType::Type1 => [
            ClickPattern::from_detectors(&[D::AT, D::BR]),
            ClickPattern::from_detectors(&[D::BT, D::AR]),
        ],
        EventType::Type2 => [
            ClickPattern::from_detectors(&[D::AT, D::AR]),
            ClickPattern::from_detectors(&[D::BT, D::BR]),
        ],
    }
}

/// Amplitudes of one photon entering at `input` with polarization `angle`
/// over the detector modes `AT, AR, BT, BR`.
pub fn mode_transfer(angle: f64, input: Port) -> [f64; 4] {
    let t = (angle - FRAC_PI_4).cos() * FRAC_1_SQRT_2;
    let r = (angle + FRAC_PI_4).cos() * FRAC_1_SQRT_2;
    match input {
        Port::A => [t, r, t, r],
        Port::B => [t, r, -t, -r],
    }
}

/// Every occupation of the four detector modes with `total` photons, in a
/// fixed lexicographic order.
pub fn occupations(total: usize) -> Vec<[u8; 4]> {
    let mut out = Vec::new();
    for a in 0..=total {
        for b in 0..=total - a {
            for c in 0..=total - a - b {
                out.push([a as u8, b as u8, c as u8, (total - a - b - c) as u8]);
            }
        }
    }
    out
}

fn factorials() -> [f64; MAX_PHOTONS + 1] {
    let mut f = [1.0; MAX_PHOTONS + 1];
    for i in 1..=MAX_PHOTONS {
        f[i] = f[i - 1] * i as f64;
    }
    f
}

/// Fock amplitudes over the detector modes, aligned with
/// [`occupations`]`(photons)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputState {
    pub photons: usize,
    pub amplitudes: Vec<f64>,
}

impl OutputState {
    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.amplitudes.iter().map(|a| a * a)
    }
}

/// Multinomial expansion of `(Σ_j w_j X†_j)^count` as `(occupation, coefficient)`.
fn expand_power(weights: &[f64; 4], count: usize, fact: &[f64]) -> Vec<([u8; 4], f64)> {
    occupations(count)
        .into_iter()
        .map(|occ| {
            let mut c = fact[count];
            for (j, &k) in occ.iter().enumerate() {
                c *= weights[j].powi(i32::from(k)) / fact[usize::from(k)];
            }
            (occ, c)
        })
        .collect()
}

/// Exact output state for `m` photons at `pol_a` on Alice's input and `n`
/// photons at `pol_b` on Bob's input, before loss.
pub fn output_state(m: usize, n: usize, pol_a: f64, pol_b: f64) -> Result<OutputState> {
    let total = m + n;
    if total > MAX_PHOTONS {
        return Err(Error::Capacity {
            photons: total,
            limit: MAX_PHOTONS,
        });
    }
    let fact = factorials();
    let occs = occupations(total);
    let index: HashMap<[u8; 4], usize> = occs.iter().enumerate().map(|(i, o)| (*o, i)).collect();
    let mut coeff = vec![0.0; occs.len()];
    let left = expand_power(&mode_transfer(pol_a, Port::A), m, &fact);
    let right = expand_power(&mode_transfer(pol_b, Port::B), n, &fact);
    for (p, cp) in &left {
        for (q, cq) in &right {
            let occ = [p[0] + q[0], p[1] + q[1], p[2] + q[2], p[3] + q[3]];
            coeff[index[&occ]] += cp * cq;
        }
    }
    let norm = (fact[m] * fact[n]).sqrt();
    let amplitudes = occs
        .iter()
        .zip(coeff)
        .map(|(occ, c)| {
            let bosonic: f64 = occ.iter().map(|&k| fact[usize::from(k)]).product();
            c * bosonic.sqrt() / norm
        })
        .collect();
    Ok(OutputState {
        photons: total,
        amplitudes,
    })
}

/// Probability of exactly `pattern` given `occupation` photons at the
/// detectors.
pub fn pattern_given_occupation(
    occupation: &[u8; 4],
    pattern: ClickPattern,
    p_survive: f64,
    dark: f64,
) -> f64 {
    let mut p = 1.0;
    for d in DetectorId::ALL {
        let silent = (1.0 - p_survive).powi(i32::from(occupation[d.index()])) * (1.0 - dark);
        p *= if pattern.contains(d) {
            1.0 - silent
        } else {
            silent
        };
    }
    p
}

/// Probabilities of all 16 click patterns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClickDistribution([f64; 16]);

impl ClickDistribution {
    pub fn prob(&self, pattern: ClickPattern) -> f64 {
        self.0[usize::from(pattern.bits())]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn success(&self, event: EventType) -> f64 {
        success_patterns(event).iter().map(|&p| self.prob(p)).sum()
    }

    pub fn as_array(&self) -> [f64; 16] {
        self.0
    }
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(domain(format!("{name} = {v} outside [0, 1]")))
    }
}

/// Exact click-pattern distribution for one window.
pub fn click_distribution(
    m: usize,
    n: usize,
    pol_a: f64,
    pol_b: f64,
    p_survive: f64,
    dark: f64,
) -> Result<ClickDistribution> {
    check_probability("p_survive", p_survive)?;
    check_probability("dark", dark)?;
    let state = output_state(m, n, pol_a, pol_b)?;
    let occs = occupations(state.photons);
    let mut dist = [0.0; 16];
    for (occ, prob) in occs.iter().zip(state.probabilities()) {
        if prob == 0.0 {
            continue;
        }
        for pattern in ClickPattern::all() {
            dist[usize::from(pattern.bits())] +=
                prob * pattern_given_occupation(occ, pattern, p_survive, dark);
        }
    }
    Ok(ClickDistribution(dist))
}

/// Per-photon survival and dark-count probability at the relay.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detection {
    pub p_survive: f64,
    pub dark: f64,
}

impl Detection {
    pub fn new(p_survive: f64, dark: f64) -> Result<Self> {
        check_probability("p_survive", p_survive)?;
        check_probability("dark", dark)?;
        Ok(Self { p_survive, dark })
    }

    /// `p_survive = η_T(L)·η`.
    pub fn at_distance(params: &ExperimentParams, distance_km: f64) -> Result<Self> {
        let eta_t = transmittance(distance_km, params.alpha)?;
        Self::new(eta_t * params.eta, params.dark)
    }
}

/// Polarization sent for bit `bit` under rotation index `k`: `R^k|bit⟩`,
/// i.e. `bit·90° + k·45°` from horizontal.
pub fn encoded_polarization(bit: u8, k: u8) -> f64 {
    f64::from(bit) * FRAC_PI_2 + f64::from(k) * FRAC_PI_4
}

fn is_bit_error(event: EventType, a: u8, b: u8) -> bool {
    (a ^ u8::from(mdi_flip(event))) != b
}

/// Yield and bit error rate of class `event` for `m` photons from Alice and
/// `n` from Bob, averaged over `k, k′`, and both bits.
///
/// The yield counts only windows that both succeed and pass sifting. Returns
/// `(Y, e_b)`; `e_b` is 0 when `Y` is 0.
pub fn yields_and_bit_error(
    event: EventType,
    m: usize,
    n: usize,
    detection: Detection,
) -> Result<(f64, f64)> {
    let mut y = 0.0;
    let mut wrong = 0.0;
    for k in 0..4u8 {
        for k_prime in 0..4u8 {
            if !mdi_keep(event, k, k_prime) {
                continue;
            }
            for a in 0..2u8 {
                for b in 0..2u8 {
                    let dist = click_distribution(
                        m,
                        n,
                        encoded_polarization(a, k),
                        encoded_polarization(b, k_prime),
                        detection.p_survive,
                        detection.dark,
                    )?;
                    let p = dist.success(event) / 64.0;
                    y += p;
                    if is_bit_error(event, a, b) {
                        wrong += p;
                    }
                }
            }
        }
    }
    Ok((y, if y > 0.0 { wrong / y } else { 0.0 }))
}

/// Unnormalized post-selected state of the two virtual key qubits.
///
/// Indexed by `2·a + b`. The trace is the yield; Alice's flip has already been
/// applied for Type1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VirtualState {
    pub rho: [[f64; 4]; 4],
}

impl VirtualState {
    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.rho[i][i]).sum()
    }

    fn expectation(&self, v: &[f64; 4]) -> f64 {
        let mut acc = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                acc += v[i] * self.rho[i][j] * v[j];
            }
        }
        acc
    }

    /// Z-basis disagreement; kept bits should agree.
    pub fn bit_error(&self) -> f64 {
        let tr = self.trace();
        if tr <= 0.0 {
            return 0.5;
        }
        (self.rho[1][1] + self.rho[2][2]) / tr
    }

    /// Raw X-basis error of the virtual pair.
    ///
    /// Every kept branch targets `φ−`, which is anti-correlated in the X basis,
    /// so equal X outcomes count as phase errors.
    pub fn x_agreement(&self) -> f64 {
        let tr = self.trace();
        if tr <= 0.0 {
            return 0.5;
        }
        let pp = [0.5, 0.5, 0.5, 0.5];
        let mm = [0.5, -0.5, -0.5, 0.5];
        (self.expectation(&pp) + self.expectation(&mm)) / tr
    }

    /// Phase error clamped to `[0, 1/2]`.
    pub fn phase_error(&self) -> f64 {
        self.x_agreement().clamp(0.0, 0.5)
    }

    /// Removes all coherence between the four Z-basis states.
    pub fn dephased(&self) -> Self {
        let mut rho = [[0.0; 4]; 4];
        for (i, row) in rho.iter_mut().enumerate() {
            row[i] = self.rho[i][i];
        }
        Self { rho }
    }
}

/// Cached Fock amplitudes for every photon-number pair and state choice up to a
/// cutoff. Building is parameter-independent; evaluation at a given
/// [`Detection`] only re-weights the cached amplitudes.
#[derive(Clone, Debug)]
pub struct YieldModel {
    n_max: usize,
    /// `occupations(N)` for `N = 0..=2·n_max`.
    occupations: Vec<Vec<[u8; 4]>>,
    /// Keyed by `(m, n, k, a, b)`; Bob's index equals Alice's on every kept
    /// branch.
    states: BTreeMap<(u8, u8, u8, u8, u8), OutputState>,
}

impl YieldModel {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(domain(format!("photon cutoff {n_max} below 2")));
        }
        if 2 * n_max > MAX_PHOTONS {
            return Err(Error::Capacity {
                photons: 2 * n_max,
                limit: MAX_PHOTONS,
            });
        }
        let occupations = (0..=2 * n_max).map(occupations).collect();
        let mut states = BTreeMap::new();
        for m in 0..=n_max {
            for n in 0..=n_max {
                for k in 0..4u8 {
                    for a in 0..2u8 {
                        for b in 0..2u8 {
                            let s = output_state(
                                m,
                                n,
                                encoded_polarization(a, k),
                                encoded_polarization(b, k),
                            )?;
                            states.insert((m as u8, n as u8, k, a, b), s);
                        }
                    }
                }
            }
        }
        Ok(Self {
            n_max,
            occupations,
            states,
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Per-occupation success probability for each class, indexed
    /// `[photon total][occupation][class]`.
    fn success_weights(&self, detection: Detection) -> Vec<Vec<[f64; 2]>> {
        let pats = [
            success_patterns(EventType::Type1),
            success_patterns(EventType::Type2),
        ];
        self.occupations
            .iter()
            .map(|occs| {
                occs.iter()
                    .map(|occ| {
                        pats.map(|pp| {
                            pp.iter()
                                .map(|&p| {
                                    pattern_given_occupation(
                                        occ,
                                        p,
                                        detection.p_survive,
                                        detection.dark,
                                    )
                                })
                                .sum()
                        })
                    })
                    .collect()
            })
            .collect()
    }

    fn check_cell(&self, m: usize, n: usize) -> Result<()> {
        if m > self.n_max || n > self.n_max {
            return Err(domain(format!(
                "photon numbers ({m},{n}) exceed the model cutoff {}",
                self.n_max
            )));
        }
        Ok(())
    }

    fn cell_virtual(
        &self,
        event: EventType,
        m: usize,
        n: usize,
        weights: &[Vec<[f64; 2]>],
    ) -> VirtualState {
        let cls = event.number() as usize - 1;
        let flip = usize::from(mdi_flip(event));
        let w = &weights[m + n];
        let mut rho = [[0.0; 4]; 4];
        for k in 0..4u8 {
            if !mdi_keep(event, k, k) {
                continue;
            }
            let amps: Vec<&OutputState> = (0..4u8)
                .map(|ab| &self.states[&(m as u8, n as u8, k, ab >> 1, ab & 1)])
                .collect();
            for (o, wo) in w.iter().enumerate() {
                let wo = wo[cls] / 64.0;
                if wo == 0.0 {
                    continue;
                }
                for i in 0..4 {
                    let ai = amps[i].amplitudes[o];
                    if ai == 0.0 {
                        continue;
                    }
                    for j in 0..4 {
                        // Alice's flip relabels her virtual bit
                        rho[i ^ (flip << 1)][j ^ (flip << 1)] += wo * ai * amps[j].amplitudes[o];
                    }
                }
            }
        }
        VirtualState { rho }
    }

    /// `(Y, e_b)` for one cell; same contract as [`yields_and_bit_error`].
    pub fn yield_and_bit_error(
        &self,
        event: EventType,
        m: usize,
        n: usize,
        detection: Detection,
    ) -> Result<(f64, f64)> {
        self.check_cell(m, n)?;
        let weights = self.success_weights(detection);
        let v = self.cell_virtual(event, m, n, &weights);
        let y = v.trace();
        Ok((y, if y > 0.0 { v.bit_error() } else { 0.0 }))
    }

    /// Post-selected virtual state of one cell.
    pub fn virtual_state(
        &self,
        event: EventType,
        m: usize,
        n: usize,
        detection: Detection,
    ) -> Result<VirtualState> {
        self.check_cell(m, n)?;
        let weights = self.success_weights(detection);
        Ok(self.cell_virtual(event, m, n, &weights))
    }

    /// Yield table at one distance, with Poisson source weights applied.
    pub fn table(&self, params: &ExperimentParams, distance_km: f64) -> Result<YieldTable> {
        let detection = Detection::at_distance(params, distance_km)?;
        let raw = self.raw_yields(detection);
        raw.weighted(params, distance_km)
    }

    /// Source-independent yields at one detection setting.
    pub fn raw_yields(&self, detection: Detection) -> RawYields {
        let weights = self.success_weights(detection);
        let mut cells = BTreeMap::new();
        for event in EventType::BOTH {
            for m in 0..=self.n_max {
                for n in 0..=self.n_max {
                    let v = self.cell_virtual(event, m, n, &weights);
                    let y = v.trace();
                    let e_b = if y > 0.0 { v.bit_error() } else { 0.0 };
                    let e_p = PRIVACY_PAIRS
                        .contains(&(m as u8, n as u8))
                        .then(|| v.phase_error());
                    cells.insert((event, m as u8, n as u8), (y, e_b, e_p));
                }
            }
        }
        RawYields {
            n_max: self.n_max,
            cells,
        }
    }
}

/// Yields per photon-number pair before source weighting.
#[derive(Clone, Debug, PartialEq)]
pub struct RawYields {
    pub n_max: usize,
    /// `(Y, e_b, e_p)` keyed by `(class, m, n)`.
    pub cells: BTreeMap<(EventType, u8, u8), (f64, f64, Option<f64>)>,
}

impl RawYields {
    /// Applies `P_μa(m)·P_μb(n)` to every cell.
    pub fn weighted(&self, params: &ExperimentParams, distance_km: f64) -> Result<YieldTable> {
        let mut table = YieldTable::zeros(self.n_max);
        table.distance_km = distance_km;
        table.params_hash = params_hash(params, distance_km);
        for (&(event, m, n), &(y, e_b, e_p)) in &self.cells {
            let w = poisson_weight(params.mu_a, m.into())? * poisson_weight(params.mu_b, n.into())?;
            table.insert(event, m, n, YieldEntry { q: w * y, e_b, e_p });
        }
        Ok(table)
    }
}

/// Phase error of a privacy-amplified cell.
pub fn phase_error(event: EventType, m: usize, n: usize, detection: Detection) -> Result<f64> {
    if !PRIVACY_PAIRS.contains(&(m as u8, n as u8)) {
        return Err(domain(format!(
            "phase error is defined only for (1,1), (1,2), (2,1), not ({m},{n})"
        )));
    }
    let model = YieldModel::new(m.max(n).max(2))?;
    Ok(model.virtual_state(event, m, n, detection)?.phase_error())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YieldEntry {
    /// Joint gain `Q_i^(m,n)`.
    pub q: f64,
    pub e_b: f64,
    /// Present only for the privacy-amplified pairs.
    pub e_p: Option<f64>,
}

/// Gains and error rates for every `(class, m, n)` up to a cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct YieldTable {
    pub n_max: usize,
    pub distance_km: f64,
    /// Identifies the parameters that produced the table.
    pub params_hash: String,
    entries: BTreeMap<(EventType, u8, u8), YieldEntry>,
}

pub const TABLE_FORMAT: &str = "sarg-yield-table v1";

impl YieldTable {
    /// A table with every cell present and zero.
    pub fn zeros(n_max: usize) -> Self {
        let mut entries = BTreeMap::new();
        for event in EventType::BOTH {
            for m in 0..=n_max as u8 {
                for n in 0..=n_max as u8 {
                    let e_p = PRIVACY_PAIRS.contains(&(m, n)).then_some(0.5);
                    entries.insert(
                        (event, m, n),
                        YieldEntry {
                            q: 0.0,
                            e_b: 0.0,
                            e_p,
                        },
                    );
                }
            }
        }
        Self {
            n_max,
            distance_km: 0.0,
            params_hash: String::new(),
            entries,
        }
    }

    pub fn insert(&mut self, event: EventType, m: u8, n: u8, entry: YieldEntry) {
        self.entries.insert((event, m, n), entry);
    }

    pub fn get(&self, event: EventType, m: u8, n: u8) -> Option<&YieldEntry> {
        self.entries.get(&(event, m, n))
    }

    /// Cells of one class in `(m, n)` order.
    pub fn entries_for(&self, event: EventType) -> impl Iterator<Item = ((u8, u8), &YieldEntry)> {
        self.entries
            .range((event, 0, 0)..=(event, u8::MAX, u8::MAX))
            .map(|(&(_, m, n), e)| ((m, n), e))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(EventType, u8, u8), &YieldEntry)> {
        self.entries.iter()
    }

    /// Tab-separated text with a commented header, one row per cell.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {TABLE_FORMAT}");
        let _ = writeln!(s, "# params_hash {}", self.params_hash);
        let _ = writeln!(s, "# distance_km {:e}", self.distance_km);
        let _ = writeln!(s, "# n_max {}", self.n_max);
        s.push_str("type\tm\tn\tQ\te_b\te_p\n");
        for (&(event, m, n), e) in &self.entries {
            let e_p = e.e_p.map_or_else(|| "-".to_string(), |v| format!("{v:e}"));
            let _ = writeln!(
                s,
                "{}\t{m}\t{n}\t{:e}\t{:e}\t{e_p}",
                event.number(),
                e.q,
                e.e_b
            );
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, reason: &str| Error::Parse {
            line,
            reason: reason.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, l)) if l.trim() == format!("# {TABLE_FORMAT}") => {}
            _ => return Err(err(1, "missing format header")),
        }
        let mut table = YieldTable {
            n_max: 0,
            distance_km: 0.0,
            params_hash: String::new(),
            entries: BTreeMap::new(),
        };
        let mut saw_columns = false;
        for (no, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let mut parts = meta.split_whitespace();
                let key = parts.next().unwrap_or("");
                let value = parts.next().unwrap_or("");
                match key {
                    "params_hash" => table.params_hash = value.to_string(),
                    "distance_km" => {
                        table.distance_km = value.parse().map_err(|_| err(no, "bad distance"))?
                    }
                    "n_max" => table.n_max = value.parse().map_err(|_| err(no, "bad n_max"))?,
                    _ => {}
                }
                continue;
            }
            if !saw_columns {
                if line.split_whitespace().next() != Some("type") {
                    return Err(err(no, "missing column header"));
                }
                saw_columns = true;
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(err(no, "expected 6 columns"));
            }
            let event = f[0]
                .parse()
                .ok()
                .and_then(EventType::from_number)
                .ok_or_else(|| err(no, "bad type"))?;
            let m: u8 = f[1].parse().map_err(|_| err(no, "bad m"))?;
            let n: u8 = f[2].parse().map_err(|_| err(no, "bad n"))?;
            let q: f64 = f[3].parse().map_err(|_| err(no, "bad Q"))?;
            let e_b: f64 = f[4].parse().map_err(|_| err(no, "bad e_b"))?;
            let e_p = match f[5] {
                "-" => None,
                v => Some(v.parse().map_err(|_| err(no, "bad e_p"))?),
            };
            table.insert(event, m, n, YieldEntry { q, e_b, e_p });
        }
        Ok(table)
    }
}

/// Short stable digest of the parameters that determine a table.
pub fn params_hash(params: &ExperimentParams, distance_km: f64) -> String {
    let canonical = format!(
        "eta={:e};dark={:e};alpha={:e};mu_a={:e};mu_b={:e};n_max={};L={:e}",
        params.eta, params.dark, params.alpha, params.mu_a, params.mu_b, params.n_max, distance_km
    );
    Sha256::digest(canonical.as_bytes())
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Builds the yield table for `params` at one distance.
pub fn build_yield_table(
    params: &ExperimentParams,
    distance_km: f64,
    n_max: usize,
) -> Result<YieldTable> {
    if n_max < 2 {
        return Err(domain(format!(
            "photon cutoff {n_max} below 2; the (1,2) and (2,1) terms are required"
        )));
    }
    YieldModel::new(n_max)?.table(params, distance_km)
}
