//! Distance sweeps, cutoff search, intensity optimization and parameter
//! studies.
//!
//! Every grid point is evaluated independently on the rayon pool. Results are
//! collected in grid order and formatted on one thread, so the output bytes
//! depend only on the configuration.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::keyrate::{key_rate, ExperimentParams, FeMode, KeyRatePoint};
use crate::optics::{Detection, RawYields, YieldModel};
use crate::protocol::{
    entanglement_expected, estimate, mdi_expected, simulate, EventType, NoiseConfig, Protocol,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rates at or below this are treated as zero by the cutoff search.
pub const POSITIVE_THRESHOLD: f64 = 1e-12;

pub const DEFAULT_TOLERANCE_KM: f64 = 0.1;

/// Smallest round count accepted by [`validate_mc`].
pub const MIN_MC_ROUNDS: u64 = 10_000;

/// Validation fails when any `|z|` exceeds this.
pub const Z_LIMIT: f64 = 4.0;

fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| config(format!("bad {what} '{}'", s.trim())))
}

/// `min:max:step` in km.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for DistanceGrid {
    fn default() -> Self {
        Self {
            min: 0.0,
            max: 200.0,
            step: 1.0,
        }
    }
}

impl DistanceGrid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        let g = Self { min, max, step };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min >= 0.0 && self.min.is_finite()) {
            return Err(config(format!(
                "grid minimum {} must be non-negative",
                self.min
            )));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(config(format!("grid step {} must be positive", self.step)));
        }
        if !(self.max >= self.min && self.max.is_finite()) {
            return Err(config(format!(
                "grid maximum {} below minimum {}",
                self.max, self.min
            )));
        }
        Ok(())
    }

    /// `min + i·step` up to `max`, computed by index so no error accumulates.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| self.min + i as f64 * self.step)
            .collect()
    }
}

impl FromStr for DistanceGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, step] = parts[..] else {
            return Err(config(format!("distance grid '{s}' is not min:max:step")));
        };
        Self::new(
            parse_f64(min, "grid minimum")?,
            parse_f64(max, "grid maximum")?,
            parse_f64(step, "grid step")?,
        )
    }
}

impl fmt::Display for DistanceGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.max, self.step)
    }
}

/// Intensity optimization setting.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum MuOpt {
    /// Use the configured `μ_a`, `μ_b`.
    #[default]
    Off,
    /// `steps` evenly spaced symmetric intensities from `lo` to `hi`.
    Grid { lo: f64, hi: f64, steps: usize },
}

impl MuOpt {
    /// Grid spanning 0.01 to 0.5 in 50 steps.
    pub const STUDY_GRID: MuOpt = MuOpt::Grid {
        lo: 0.01,
        hi: 0.5,
        steps: 50,
    };

    pub fn values(&self) -> Vec<f64> {
        match *self {
            MuOpt::Off => Vec::new(),
            MuOpt::Grid { lo, steps: 1, .. } => vec![lo],
            MuOpt::Grid { lo, hi, steps } => (0..steps)
                .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let MuOpt::Grid { lo, hi, steps } = *self {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) || steps == 0 {
                return Err(config(format!(
                    "intensity grid {lo}:{hi}:{steps} is invalid"
                )));
            }
        }
        Ok(())
    }
}

impl FromStr for MuOpt {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "off" {
            return Ok(MuOpt::Off);
        }
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, steps] = parts[..] else {
            return Err(config(format!("intensity grid '{s}' is not lo:hi:steps")));
        };
        let steps = steps
            .trim()
            .parse()
            .map_err(|_| config(format!("bad intensity step count '{steps}'")))?;
        let opt = MuOpt::Grid {
            lo: parse_f64(lo, "intensity")?,
            hi: parse_f64(hi, "intensity")?,
            steps,
        };
        opt.validate()?;
        Ok(opt)
    }
}

impl fmt::Display for MuOpt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuOpt::Off => f.write_str("off"),
            MuOpt::Grid { lo, hi, steps } => write!(f, "{lo}:{hi}:{steps}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StudyKind {
    /// Error-correction model comparison.
    Fe,
    /// Dark-count comparison.
    Dark,
    /// Detector-efficiency comparison.
    Eta,
    /// A single scenario with the base parameters.
    #[default]
    None,
}

impl FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fe" => Ok(StudyKind::Fe),
            "dark" => Ok(StudyKind::Dark),
            "eta" => Ok(StudyKind::Eta),
            "none" => Ok(StudyKind::None),
            other => Err(config(format!("unknown study '{other}'"))),
        }
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudyKind::Fe => "fe",
            StudyKind::Dark => "dark",
            StudyKind::Eta => "eta",
            StudyKind::None => "none",
        })
    }
}

/// One curve family: a label and the parameters it runs with.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub params: ExperimentParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub grid: DistanceGrid,
    pub params: ExperimentParams,
    pub types: Vec<EventType>,
    pub study: StudyKind,
    pub fe_modes: Vec<FeMode>,
    pub darks: Vec<f64>,
    pub etas: Vec<f64>,
    pub mu_opt: MuOpt,
    pub seed: u64,
    pub mc_rounds: u64,
    /// Channel noise for Monte Carlo validation.
    pub depolarizing: f64,
    pub tolerance_km: f64,
    /// Append cutoff distances to study output.
    pub cutoffs: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid: DistanceGrid::default(),
            params: ExperimentParams::gys(),
            types: EventType::BOTH.to_vec(),
            study: StudyKind::None,
            fe_modes: vec![FeMode::EnzerCubic, FeMode::Fixed(1.33)],
            darks: vec![8.5e-7, 8.5e-8],
            etas: vec![0.045, 0.09],
            mu_opt: MuOpt::Off,
            seed: 0,
            mc_rounds: 100_000,
            depolarizing: 0.0,
            tolerance_km: DEFAULT_TOLERANCE_KM,
            cutoffs: true,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.params.validate()?;
        self.mu_opt.validate()?;
        if self.types.is_empty() {
            return Err(config("no event type selected"));
        }
        if !(self.tolerance_km > 0.0) {
            return Err(config(format!(
                "tolerance {} must be positive",
                self.tolerance_km
            )));
        }
        let empty = match self.study {
            StudyKind::Fe => self.fe_modes.is_empty(),
            StudyKind::Dark => self.darks.is_empty(),
            StudyKind::Eta => self.etas.is_empty(),
            StudyKind::None => false,
        };
        if empty {
            return Err(config(format!(
                "scenario list for the {} study is empty",
                self.study
            )));
        }
        for s in self.scenarios() {
            s.params.validate()?;
        }
        Ok(())
    }

    /// Curve families in list order.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let base = self.params;
        match self.study {
            StudyKind::None => vec![Scenario {
                label: "base".into(),
                params: base,
            }],
            StudyKind::Fe => self
                .fe_modes
                .iter()
                .map(|&fe_mode| Scenario {
                    label: format!("fe={fe_mode}"),
                    params: ExperimentParams { fe_mode, ..base },
                })
                .collect(),
            StudyKind::Dark => self
                .darks
                .iter()
                .map(|&dark| Scenario {
                    label: format!("dark={dark:e}"),
                    params: ExperimentParams { dark, ..base },
                })
                .collect(),
            StudyKind::Eta => self
                .etas
                .iter()
                .map(|&eta| Scenario {
                    label: format!("eta={eta}"),
                    params: ExperimentParams { eta, ..base },
                })
                .collect(),
        }
    }
}

/// Best symmetric intensity on a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuOptimum {
    pub mu: f64,
    pub rate: f64,
    /// Every grid intensity gave zero rate; `mu` is then the first grid value.
    pub all_zero: bool,
}

fn optimize_from_raw(
    raw: &RawYields,
    params: &ExperimentParams,
    event: EventType,
    distance_km: f64,
    grid: &[f64],
) -> Result<(MuOptimum, KeyRatePoint)> {
    let mut best: Option<(MuOptimum, KeyRatePoint)> = None;
    for &mu in grid {
        let p = params.with_mu(mu);
        let point = key_rate(event, distance_km, &p, &raw.weighted(&p, distance_km)?)?;
        // strict comparison keeps the smaller μ on ties
        if best.as_ref().is_none_or(|(b, _)| point.rate > b.rate) {
            best = Some((
                MuOptimum {
                    mu,
                    rate: point.rate,
                    all_zero: false,
                },
                point,
            ));
        }
    }
    let (mut opt, point) = best.ok_or_else(|| config("empty intensity grid"))?;
    opt.all_zero = opt.rate == 0.0;
    Ok((opt, point))
}

/// Maximizes the key rate over symmetric intensities `μ_a = μ_b = μ`.
pub fn optimize_mu(
    model: &YieldModel,
    params: &ExperimentParams,
    event: EventType,
    distance_km: f64,
    grid: &[f64],
) -> Result<MuOptimum> {
    if grid.is_empty() || grid.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
        return Err(config("intensity grid must be non-empty and positive"));
    }
    let raw = model.raw_yields(Detection::at_distance(params, distance_km)?);
    Ok(optimize_from_raw(&raw, params, event, distance_km, grid)?.0)
}

/// One output row.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub scenario: String,
    /// Intensity used for this row.
    pub mu: f64,
    pub point: KeyRatePoint,
}

fn points_at(
    model: &YieldModel,
    params: &ExperimentParams,
    types: &[EventType],
    mu_opt: &MuOpt,
    distance_km: f64,
) -> Result<Vec<(f64, KeyRatePoint)>> {
    let raw = model.raw_yields(Detection::at_distance(params, distance_km)?);
    let grid = mu_opt.values();
    types
        .iter()
        .map(|&event| {
            if grid.is_empty() {
                let table = raw.weighted(params, distance_km)?;
                Ok((params.mu_a, key_rate(event, distance_km, params, &table)?))
            } else {
                let (opt, point) = optimize_from_raw(&raw, params, event, distance_km, &grid)?;
                Ok((opt.mu, point))
            }
        })
        .collect()
}

/// Key rate for every `(scenario, L, type)`, ordered by scenario, then `L`,
/// then type.
pub fn sweep_distance(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let model = YieldModel::new(config.params.n_max)?;
    sweep_with_model(&model, config)
}

pub fn sweep_with_model(model: &YieldModel, config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let jobs: Vec<(Scenario, f64)> = config
        .scenarios()
        .into_iter()
        .flat_map(|s| {
            config
                .grid
                .points()
                .into_iter()
                .map(move |l| (s.clone(), l))
        })
        .collect();
    let blocks: Vec<Vec<SweepRow>> = jobs
        .par_iter()
        .map(|(s, l)| {
            let rows = points_at(model, &s.params, &config.types, &config.mu_opt, *l)?;
            Ok(rows
                .into_iter()
                .map(|(mu, point)| SweepRow {
                    scenario: s.label.clone(),
                    mu,
                    point,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

/// Result of a cutoff search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffResult {
    pub l_star: f64,
    /// `K(lo) > 0 ≥ K(hi)`.
    pub bracket: (f64, f64),
    pub tolerance: f64,
    pub evaluations: usize,
}

/// Bisects for the point where `rate` drops to zero on `[lo, hi]`.
///
/// Requires `rate(lo)` positive and `rate(hi)` zero; stops once the bracket is
/// no wider than `2·tolerance` and reports its midpoint.
pub fn cutoff_search<F>(mut rate: F, lo: f64, hi: f64, tolerance: f64) -> Result<CutoffResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tolerance > 0.0) {
        return Err(config(format!("tolerance {tolerance} must be positive")));
    }
    if !(hi > lo) {
        return Err(config(format!("search interval [{lo}, {hi}] is empty")));
    }
    let positive = |k: f64| k > POSITIVE_THRESHOLD;
    if !positive(rate(lo)?) {
        return Err(Error::NoKeyAtOrigin(lo));
    }
    if positive(rate(hi)?) {
        return Err(Error::BracketExceeded(hi));
    }
    let (mut a, mut b) = (lo, hi);
    let mut evaluations = 2;
    while b - a > 2.0 * tolerance {
        let mid = 0.5 * (a + b);
        evaluations += 1;
        if positive(rate(mid)?) {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(CutoffResult {
        l_star: 0.5 * (a + b),
        bracket: (a, b),
        tolerance,
        evaluations,
    })
}

/// Cutoff distance of one class on `[lo, hi]` km.
pub fn cutoff_distance(
    model: &YieldModel,
    params: &ExperimentParams,
    event: EventType,
    lo: f64,
    hi: f64,
    tolerance: f64,
) -> Result<CutoffResult> {
    cutoff_search(
        |l| {
            let raw = model.raw_yields(Detection::at_distance(params, l)?);
            Ok(key_rate(event, l, params, &raw.weighted(params, l)?)?.rate)
        },
        lo,
        hi,
        tolerance,
    )
}

fn header(config: &SweepConfig) -> String {
    let p = &config.params;
    let mut s = String::new();
    let _ = writeln!(s, "# sarg-sweep {VERSION}");
    let _ = writeln!(s, "# study {}", config.study);
    let _ = writeln!(s, "# eta {}", p.eta);
    let _ = writeln!(s, "# dark {:e}", p.dark);
    let _ = writeln!(s, "# alpha {}", p.alpha);
    let _ = writeln!(s, "# mu_a {}", p.mu_a);
    let _ = writeln!(s, "# mu_b {}", p.mu_b);
    let _ = writeln!(s, "# fe {}", p.fe_mode);
    let _ = writeln!(s, "# n_max {}", p.n_max);
    let _ = writeln!(s, "# L {}", config.grid);
    let types: Vec<String> = config
        .types
        .iter()
        .map(|t| t.number().to_string())
        .collect();
    let _ = writeln!(s, "# types {}", types.join(","));
    let _ = writeln!(s, "# mu_opt {}", config.mu_opt);
    let labels: Vec<String> = config.scenarios().into_iter().map(|s| s.label).collect();
    let _ = writeln!(s, "# scenarios {}", labels.join(","));
    let _ = writeln!(s, "# tolerance_km {}", config.tolerance_km);
    s
}

/// Formats a study: parameter header, one row per `(scenario, L, type)` and
/// optionally the cutoff distance of every curve.
pub fn run_study(config: &SweepConfig) -> Result<String> {
    config.validate()?;
    let model = YieldModel::new(config.params.n_max)?;
    let rows = sweep_with_model(&model, config)?;
    let mut s = header(config);
    s.push_str("L_km\ttype\tK_bps\tscenario\tmu\n");
    for r in &rows {
        let _ = writeln!(
            s,
            "{:.3}\t{}\t{:.6e}\t{}\t{:.4}",
            r.point.distance_km,
            r.point.event.number(),
            r.point.rate,
            r.scenario,
            r.mu
        );
    }
    if config.cutoffs {
        let jobs: Vec<(Scenario, EventType)> = config
            .scenarios()
            .into_iter()
            .flat_map(|sc| config.types.iter().map(move |&t| (sc.clone(), t)))
            .collect();
        let found: Vec<String> = jobs
            .par_iter()
            .map(|(sc, t)| {
                let r = cutoff_distance(
                    &model,
                    &sc.params,
                    *t,
                    config.grid.min,
                    config.grid.max,
                    config.tolerance_km,
                );
                let text = match r {
                    Ok(c) => format!("{:.3} [{:.3}, {:.3}]", c.l_star, c.bracket.0, c.bracket.1),
                    Err(Error::NoKeyAtOrigin(_)) => "none (no key at start)".to_string(),
                    Err(Error::BracketExceeded(_)) => "beyond grid".to_string(),
                    Err(e) => return Err(e),
                };
                Ok(format!(
                    "# cutoff {} type {} {}\n",
                    sc.label,
                    t.number(),
                    text
                ))
            })
            .collect::<Result<_>>()?;
        found.iter().for_each(|line| s.push_str(line));
    }
    Ok(s)
}

pub fn write_output(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One empirical-versus-exact comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct McCheck {
    pub protocol: Protocol,
    pub quantity: &'static str,
    pub empirical: f64,
    pub expected: f64,
    pub stderr: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub rounds: u64,
    pub seed: u64,
    pub depolarizing: f64,
    pub checks: Vec<McCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.z.abs() <= Z_LIMIT)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# sarg-sweep {VERSION} validation");
        let _ = writeln!(s, "# rounds {}", self.rounds);
        let _ = writeln!(s, "# seed {}", self.seed);
        let _ = writeln!(s, "# depolarizing {}", self.depolarizing);
        s.push_str("protocol\tquantity\tempirical\texpected\tstderr\tz\n");
        for c in &self.checks {
            let name = match c.protocol {
                Protocol::EntanglementBased => "entanglement",
                Protocol::Mdi => "mdi",
            };
            let _ = writeln!(
                s,
                "{name}\t{}\t{:.6e}\t{:.6e}\t{:.3e}\t{:.3}",
                c.quantity, c.empirical, c.expected, c.stderr, c.z
            );
        }
        let _ = writeln!(
            s,
            "# result {}",
            if self.passed() { "pass" } else { "fail" }
        );
        s
    }
}

/// `z = (x − expected)/σ`; a zero `σ` gives 0 on exact agreement and infinity
/// otherwise.
fn z_score(x: f64, expected: f64, sigma: f64) -> f64 {
    if sigma > 0.0 {
        (x - expected) / sigma
    } else if x == expected {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Runs both protocols and compares sift rate and QBER with exact enumeration.
pub fn validate_mc(config: &SweepConfig) -> Result<ValidationReport> {
    if config.mc_rounds < MIN_MC_ROUNDS {
        return Err(self::config(format!(
            "{} Monte Carlo rounds requested, at least {MIN_MC_ROUNDS} required",
            config.mc_rounds
        )));
    }
    let noise = NoiseConfig::new(config.depolarizing).map_err(|e| self::config(e.to_string()))?;
    let mut checks = Vec::new();
    for protocol in [Protocol::EntanglementBased, Protocol::Mdi] {
        let expected = match protocol {
            Protocol::EntanglementBased => entanglement_expected(&noise)?,
            Protocol::Mdi => mdi_expected(&noise)?,
        };
        let summary = estimate(&simulate(protocol, config.seed, config.mc_rounds, &noise)?)?;
        let n = summary.rounds_total as f64;
        let sift_sigma = (expected.sift_rate * (1.0 - expected.sift_rate) / n).sqrt();
        checks.push(McCheck {
            protocol,
            quantity: "sift_rate",
            empirical: summary.sift_rate,
            expected: expected.sift_rate,
            stderr: sift_sigma,
            z: z_score(summary.sift_rate, expected.sift_rate, sift_sigma),
        });
        let kept = summary.rounds_kept as f64;
        let (qber, sigma) = if kept > 0.0 {
            (
                summary.qber,
                (expected.qber * (1.0 - expected.qber) / kept).sqrt(),
            )
        } else {
            (f64::NAN, f64::NAN)
        };
        checks.push(McCheck {
            protocol,
            quantity: "qber",
            empirical: qber,
            expected: expected.qber,
            stderr: sigma,
            z: if kept > 0.0 {
                z_score(qber, expected.qber, sigma)
            } else {
                f64::INFINITY
            },
        });
    }
    Ok(ValidationReport {
        rounds: config.mc_rounds,
        seed: config.seed,
        depolarizing: config.depolarizing,
        checks,
    })
}
