//! Single-qubit operators, qubit-pair states and Bell-basis measurements.
//!
//! Dimensions are fixed: a [`StateVec`] holds either one qubit (2 amplitudes)
//! or a pair (4 amplitudes, index `2·a + b` for first-qubit value `a` and
//! second-qubit value `b`). Global phases are kept as computed; nothing here
//! normalizes them away.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_8};
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{domain, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Tolerance used for unitarity and normalization checks.
pub const TOL: f64 = 1e-12;

/// A 2×2 complex matrix acting on one qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Operator2 {
    m: [[C64; 2]; 2],
}

impl Operator2 {
    pub const fn from_rows(m: [[C64; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        Self::from_rows([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn pauli_x() -> Self {
        Self::from_rows([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn pauli_y() -> Self {
        Self::from_rows([[ZERO, -I], [I, ZERO]])
    }

    pub fn pauli_z() -> Self {
        Self::from_rows([[ONE, ZERO], [ZERO, -ONE]])
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.m[row][col]
    }

    pub fn rows(&self) -> [[C64; 2]; 2] {
        self.m
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = self.m;
        m.iter_mut().flatten().for_each(|z| *z *= s);
        Self { m }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut m = self.m;
        for (r, row) in m.iter_mut().enumerate() {
            for (c, z) in row.iter_mut().enumerate() {
                *z += other.m[r][c];
            }
        }
        Self { m }
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::from_rows([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self::from_rows([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn pow(&self, exp: u32) -> Self {
        (0..exp).fold(Self::identity(), |acc, _| acc * *self)
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.m[r][c] - other.m[r][c]).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (*self * self.adjoint()).max_abs_diff(&Self::identity()) <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// Applies the operator to a single-qubit state.
    pub fn apply(&self, state: &StateVec) -> Result<StateVec> {
        let a = state.expect_dim(2)?;
        Ok(StateVec {
            amps: vec![
                self.m[0][0] * a[0] + self.m[0][1] * a[1],
                self.m[1][0] * a[0] + self.m[1][1] * a[1],
            ],
        })
    }
}

impl Mul for Operator2 {
    type Output = Operator2;

    fn mul(self, rhs: Operator2) -> Operator2 {
        let (a, b) = (&self.m, &rhs.m);
        let mut m = [[ZERO; 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, z) in row.iter_mut().enumerate() {
                *z = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Operator2 { m }
    }
}

/// `R^k`, where `R = cos(π/4)·I − i·sin(π/4)·σ_Y` is the π/2 rotation about Y.
pub fn rotation_r(k: u8) -> Result<Operator2> {
    if k > 3 {
        return Err(domain(format!("rotation index k = {k} outside 0..=3")));
    }
    let (c, s) = (FRAC_PI_4.cos(), FRAC_PI_4.sin());
    let r = Operator2::identity()
        .scale(C64::new(c, 0.0))
        .add(&Operator2::pauli_y().scale(C64::new(0.0, -s)));
    Ok(r.pow(u32::from(k)))
}

/// `T_l`: identity for `l = 0`, and π/2 rotations about the `Z+X` and `Z−X`
/// axes for `l = 1, 2`.
pub fn rotation_t(l: u8) -> Result<Operator2> {
    let axis = match l {
        0 => return Ok(Operator2::identity()),
        1 => Operator2::pauli_z().add(&Operator2::pauli_x()),
        2 => Operator2::pauli_z().add(&Operator2::pauli_x().scale(-ONE)),
        _ => return Err(domain(format!("axis index l = {l} outside 0..=2"))),
    };
    let (c, s) = (FRAC_PI_4.cos(), FRAC_PI_4.sin());
    Ok(Operator2::identity()
        .scale(C64::new(c, 0.0))
        .add(&axis.scale(C64::new(0.0, -s * FRAC_1_SQRT_2))))
}

/// The local filter `F = sin(π/8)|0_x⟩⟨0_x| + cos(π/8)|1_x⟩⟨1_x|`.
pub fn filter() -> Operator2 {
    let (s, c) = (FRAC_PI_8.sin(), FRAC_PI_8.cos());
    // |0_x⟩⟨0_x| = ½[[1,1],[1,1]], |1_x⟩⟨1_x| = ½[[1,−1],[−1,1]]
    let diag = C64::new((s + c) / 2.0, 0.0);
    let off = C64::new((s - c) / 2.0, 0.0);
    Operator2::from_rows([[diag, off], [off, diag]])
}

/// A pure state of one qubit or of a qubit pair.
///
/// Sub-normalized vectors are allowed: after a non-unitary step the squared
/// norm carries the success probability of that step.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVec {
    amps: Vec<C64>,
}

impl StateVec {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        match amps.len() {
            2 | 4 => Ok(Self { amps }),
            n => Err(domain(format!("state dimension {n}, expected 2 or 4"))),
        }
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zero_z() -> Self {
        Self {
            amps: vec![ONE, ZERO],
        }
    }

    pub fn one_z() -> Self {
        Self {
            amps: vec![ZERO, ONE],
        }
    }

    /// `|0_x⟩ = (|0_z⟩ + |1_z⟩)/√2`, the +1 eigenvector of `σ_X`.
    pub fn zero_x() -> Self {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        Self { amps: vec![h, h] }
    }

    /// `|1_x⟩ = (|0_z⟩ − |1_z⟩)/√2`, the −1 eigenvector of `σ_X`.
    pub fn one_x() -> Self {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        Self { amps: vec![h, -h] }
    }

    /// Linear polarization at `angle` radians from horizontal.
    pub fn polarization(angle: f64) -> Self {
        Self {
            amps: vec![C64::new(angle.cos(), 0.0), C64::new(angle.sin(), 0.0)],
        }
    }

    /// Tensor product of two single-qubit states.
    pub fn product(first: &StateVec, second: &StateVec) -> Result<Self> {
        let a = first.expect_dim(2)?;
        let b = second.expect_dim(2)?;
        Ok(Self {
            amps: vec![a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]],
        })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(C64::norm_sqr).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(domain("cannot normalize a zero-norm state"));
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            amps: self.amps.iter().map(|&z| z * s).collect(),
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVec) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(domain("inner product of states with different dimensions"));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Applies a single-qubit operator to one qubit of a pair (`qubit` 0 is the
    /// first, 1 the second).
    pub fn apply_on(&self, op: &Operator2, qubit: usize) -> Result<Self> {
        let a = self.expect_dim(4)?;
        let m = op.rows();
        let mut out = [ZERO; 4];
        for x in 0..2 {
            for y in 0..2 {
                let idx = 2 * x + y;
                out[idx] = match qubit {
                    0 => m[x][0] * a[y] + m[x][1] * a[2 + y],
                    1 => m[y][0] * a[2 * x] + m[y][1] * a[2 * x + 1],
                    _ => return Err(domain(format!("qubit index {qubit} outside 0..=1"))),
                };
            }
        }
        Ok(Self { amps: out.to_vec() })
    }

    fn expect_dim(&self, dim: usize) -> Result<&[C64]> {
        if self.amps.len() == dim {
            Ok(&self.amps)
        } else {
            Err(domain(format!(
                "state dimension {}, expected {dim}",
                self.amps.len()
            )))
        }
    }
}

/// Applies `F` to a single qubit and renormalizes.
///
/// Returns `(‖F|ψ⟩‖², F|ψ⟩/‖F|ψ⟩‖)` for the normalized input `|ψ⟩`.
pub fn filter_apply(state: &StateVec) -> Result<(f64, StateVec)> {
    if state.norm_sqr() == 0.0 {
        return Err(domain("filter applied to a zero-norm state"));
    }
    let out = filter().apply(state)?;
    let p = out.norm_sqr();
    Ok((p, out.normalized()?))
}

/// Applies `F` to one qubit of a pair; same return convention as
/// [`filter_apply`].
pub fn filter_apply_on(pair: &StateVec, qubit: usize) -> Result<(f64, StateVec)> {
    if pair.norm_sqr() == 0.0 {
        return Err(domain("filter applied to a zero-norm state"));
    }
    let out = pair.apply_on(&filter(), qubit)?;
    let p = out.norm_sqr();
    if p == 0.0 {
        return Ok((0.0, out));
    }
    Ok((p, out.normalized()?))
}

/// The four Bell states, written in the `|→⟩ = |0⟩`, `|↑⟩ = |1⟩` basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BellOutcome {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PsiPlus,
        BellOutcome::PsiMinus,
        BellOutcome::PhiPlus,
        BellOutcome::PhiMinus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Real amplitudes over `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub fn amplitudes(self) -> [f64; 4] {
        let h = FRAC_1_SQRT_2;
        match self {
            BellOutcome::PsiPlus => [0.0, h, h, 0.0],
            BellOutcome::PsiMinus => [0.0, h, -h, 0.0],
            BellOutcome::PhiPlus => [h, 0.0, 0.0, h],
            BellOutcome::PhiMinus => [h, 0.0, 0.0, -h],
        }
    }

    pub fn state(self) -> StateVec {
        StateVec::from_real(&self.amplitudes()).expect("Bell state has dimension 4")
    }

    pub fn label(self) -> &'static str {
        match self {
            BellOutcome::PsiPlus => "psi_plus",
            BellOutcome::PsiMinus => "psi_minus",
            BellOutcome::PhiPlus => "phi_plus",
            BellOutcome::PhiMinus => "phi_minus",
        }
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Probabilities of the four Bell outcomes, indexed by [`BellOutcome::index`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellDistribution([f64; 4]);

impl BellDistribution {
    pub fn prob(&self, outcome: BellOutcome) -> f64 {
        self.0[outcome.index()]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    /// Inverse-CDF sampling with a uniform draw in `[0, 1)`.
    pub fn sample(&self, draw: f64) -> BellOutcome {
        sample_index(&self.0, draw).map_or(BellOutcome::PhiMinus, |i| BellOutcome::ALL[i])
    }
}

/// Squared overlaps of a normalized pair state with the four Bell states.
pub fn bell_project(joint: &StateVec) -> Result<BellDistribution> {
    joint.expect_dim(4)?;
    let mut probs = [0.0; 4];
    for outcome in BellOutcome::ALL {
        probs[outcome.index()] = outcome.state().inner(joint)?.norm_sqr();
    }
    Ok(BellDistribution(probs))
}

/// Z-basis measurement of one qubit driven by a uniform draw in `[0, 1)`.
pub fn measure_z(state: &StateVec, draw: f64) -> Result<u8> {
    let a = state.expect_dim(2)?;
    let p0 = a[0].norm_sqr() / state.norm_sqr();
    Ok(if draw < p0 { 0 } else { 1 })
}

/// Joint Z-basis measurement of both qubits of a pair.
pub fn measure_z_pair(state: &StateVec, draw: f64) -> Result<(u8, u8)> {
    let a = state.expect_dim(4)?;
    let norm = state.norm_sqr();
    if norm == 0.0 {
        return Err(domain("measurement of a zero-norm state"));
    }
    let probs: Vec<f64> = a.iter().map(|z| z.norm_sqr() / norm).collect();
    let idx = sample_index(&probs, draw).unwrap_or(3);
    Ok(((idx >> 1) as u8, (idx & 1) as u8))
}

/// Bell measurement on the second qubits of two pairs.
///
/// `left` holds qubits `(A, A′)` and `right` holds `(B, B′)`; the projection
/// of `(A′, B′)` onto `outcome` leaves `(A, B)` in the returned state. The
/// returned vector is unnormalized: its squared norm is the probability of
/// `outcome`.
pub fn swap_project(left: &StateVec, right: &StateVec, outcome: BellOutcome) -> Result<StateVec> {
    let l = left.expect_dim(4)?;
    let r = right.expect_dim(4)?;
    let bell = outcome.amplitudes();
    let mut out = [ZERO; 4];
    for a in 0..2 {
        for c in 0..2 {
            let mut acc = ZERO;
            for b in 0..2 {
                for d in 0..2 {
                    let w = bell[2 * b + d];
                    if w != 0.0 {
                        acc += l[2 * a + b] * r[2 * c + d] * w;
                    }
                }
            }
            out[2 * a + c] = acc;
        }
    }
    Ok(StateVec { amps: out.to_vec() })
}

/// First index whose cumulative weight exceeds `draw`; skips zero weights so
/// rounding at the top of the range never selects an impossible outcome.
pub(crate) fn sample_index(weights: &[f64], draw: f64) -> Option<usize> {
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if draw < acc {
            return Some(i);
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn r_zeroth_power_is_identity() {
        assert_eq!(rotation_r(0).unwrap(), Operator2::identity());
    }

    #[test]
    fn r_squared_matches_hand_product() {
        // R = (1/√2)[[1, −1], [1, 1]], so R² = [[0, −1], [1, 0]] = −iσ_Y.
        let expected = Operator2::from_rows([[c(0.0), c(-1.0)], [c(1.0), c(0.0)]]);
        assert!(rotation_r(2).unwrap().max_abs_diff(&expected) < TOL);
        let minus_i_sy = Operator2::pauli_y().scale(C64::new(0.0, -1.0));
        assert!(rotation_r(2).unwrap().max_abs_diff(&minus_i_sy) < TOL);
    }

    #[test]
    fn r_fourth_power_is_minus_identity() {
        let r4 = rotation_r(1).unwrap().pow(4);
        let minus_i = Operator2::identity().scale(-ONE);
        assert!(r4.max_abs_diff(&minus_i) < TOL);
        // not merely identity up to phase: the sign survives
        assert!(r4.max_abs_diff(&Operator2::identity()) > 1.0);
    }

    #[test]
    fn out_of_range_indices_are_rejected() {
        assert!(rotation_r(4).is_err());
        assert!(rotation_t(3).is_err());
    }

    #[test]
    fn t_operators() {
        assert_eq!(rotation_t(0).unwrap(), Operator2::identity());
        let t1 = rotation_t(1).unwrap();
        let h = FRAC_1_SQRT_2;
        // cos(π/4)I − i sin(π/4)(σ_Z+σ_X)/√2 = [[h − i/2, −i/2], [−i/2, h + i/2]]
        let expected = Operator2::from_rows([
            [C64::new(h, -0.5), C64::new(0.0, -0.5)],
            [C64::new(0.0, -0.5), C64::new(h, 0.5)],
        ]);
        assert!(t1.max_abs_diff(&expected) < TOL);
        assert!((t1 * t1.adjoint()).max_abs_diff(&Operator2::identity()) < TOL);
        assert!(rotation_t(2).unwrap().is_unitary(TOL));
    }

    #[test]
    fn all_rotations_unitary_and_r_inverse_up_to_phase() {
        for k in 0..4u8 {
            let r = rotation_r(k).unwrap();
            assert!(r.is_unitary(TOL), "R^{k}");
            let back = r * rotation_r((4 - k) % 4).unwrap();
            let overlap = (back.trace() / 2.0).norm();
            assert!((overlap - 1.0).abs() < TOL);
        }
        for l in 0..3u8 {
            assert!(rotation_t(l).unwrap().is_unitary(TOL), "T_{l}");
        }
    }

    #[test]
    fn filter_is_hermitian_with_expected_eigenvalues() {
        let f = filter();
        assert!(f.is_hermitian(TOL));
        let (s, cc) = (FRAC_PI_8.sin(), FRAC_PI_8.cos());
        let on0 = f.apply(&StateVec::zero_x()).unwrap();
        let on1 = f.apply(&StateVec::one_x()).unwrap();
        assert!((on0.inner(&StateVec::zero_x()).unwrap().re - s).abs() < TOL);
        assert!((on1.inner(&StateVec::one_x()).unwrap().re - cc).abs() < TOL);
        assert!(!f.is_unitary(1e-3));
    }

    #[test]
    fn filter_on_x_eigenstates() {
        let s2 = FRAC_PI_8.sin().powi(2);
        let (p, post) = filter_apply(&StateVec::zero_x()).unwrap();
        assert!((p - s2).abs() < TOL);
        assert!((p - 0.146_446_609_4).abs() < 1e-9);
        assert!((post.inner(&StateVec::zero_x()).unwrap().norm() - 1.0).abs() < TOL);

        let (p, post) = filter_apply(&StateVec::one_x()).unwrap();
        assert!((p - (1.0 - s2)).abs() < TOL);
        assert!((p - 0.853_553_390_6).abs() < 1e-9);
        assert!((post.inner(&StateVec::one_x()).unwrap().norm() - 1.0).abs() < TOL);
    }

    #[test]
    fn filter_on_z_basis_averages_to_half() {
        let (p0, _) = filter_apply(&StateVec::zero_z()).unwrap();
        let (p1, _) = filter_apply(&StateVec::one_z()).unwrap();
        assert!((p0 - 0.5).abs() < TOL);
        assert!(((p0 + p1) / 2.0 - 0.5).abs() < TOL);
    }

    #[test]
    fn filter_rejects_zero_state() {
        let zero = StateVec::from_real(&[0.0, 0.0]).unwrap();
        assert!(filter_apply(&zero).is_err());
    }

    #[test]
    fn bell_projection_examples() {
        let d = bell_project(&BellOutcome::PsiMinus.state()).unwrap();
        assert!((d.prob(BellOutcome::PsiMinus) - 1.0).abs() < TOL);
        assert!(d.prob(BellOutcome::PhiPlus) < TOL);

        let d = bell_project(&BellOutcome::PhiPlus.state()).unwrap();
        assert!((d.prob(BellOutcome::PhiPlus) - 1.0).abs() < TOL);

        // |01⟩ = (ψ+ + ψ−)/√2
        let z01 = StateVec::product(&StateVec::zero_z(), &StateVec::one_z()).unwrap();
        let d = bell_project(&z01).unwrap();
        assert!((d.prob(BellOutcome::PsiPlus) - 0.5).abs() < TOL);
        assert!((d.prob(BellOutcome::PsiMinus) - 0.5).abs() < TOL);
        assert!(d.prob(BellOutcome::PhiPlus) < TOL);
        assert!(d.prob(BellOutcome::PhiMinus) < TOL);
    }

    #[test]
    fn bell_projection_rejects_single_qubit() {
        assert!(bell_project(&StateVec::zero_z()).is_err());
    }

    #[test]
    fn z_measurements() {
        assert_eq!(measure_z(&StateVec::zero_z(), 0.999_999).unwrap(), 0);
        assert_eq!(measure_z(&StateVec::zero_x(), 0.49).unwrap(), 0);
        assert_eq!(measure_z(&StateVec::zero_x(), 0.51).unwrap(), 1);
        let rotated = rotation_r(1).unwrap().apply(&StateVec::zero_z()).unwrap();
        let p0 = rotated.amplitudes()[0].norm_sqr();
        assert!((p0 - FRAC_PI_4.cos().powi(2)).abs() < TOL);
        assert!((p0 - 0.5).abs() < TOL);
    }

    #[test]
    fn r_rotates_polarization_by_45_degrees() {
        let r = rotation_r(1).unwrap();
        for deg in [0.0_f64, 30.0, 90.0, -45.0] {
            let before = StateVec::polarization(deg.to_radians());
            let after = r.apply(&before).unwrap();
            let want = StateVec::polarization((deg + 45.0).to_radians());
            assert!((after.inner(&want).unwrap().re - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn apply_on_matches_kronecker_product() {
        let a = StateVec::polarization(0.3);
        let b = StateVec::polarization(1.1);
        let t = rotation_t(1).unwrap();
        let pair = StateVec::product(&a, &b).unwrap();
        let left = pair.apply_on(&t, 0).unwrap();
        let want = StateVec::product(&t.apply(&a).unwrap(), &b).unwrap();
        assert!((left.inner(&want).unwrap().re - 1.0).abs() < TOL);
        let right = pair.apply_on(&t, 1).unwrap();
        let want = StateVec::product(&a, &t.apply(&b).unwrap()).unwrap();
        assert!((right.inner(&want).unwrap().re - 1.0).abs() < TOL);
    }

    #[test]
    fn swap_of_two_phi_plus_pairs_is_uniform() {
        let phi = BellOutcome::PhiPlus.state();
        let mut total = 0.0;
        for outcome in BellOutcome::ALL {
            let branch = swap_project(&phi, &phi, outcome).unwrap();
            assert!((branch.norm_sqr() - 0.25).abs() < TOL);
            // entanglement swapping hands the same Bell state to the outer qubits
            let post = branch.normalized().unwrap();
            assert!((post.inner(&outcome.state()).unwrap().norm() - 1.0).abs() < TOL);
            total += branch.norm_sqr();
        }
        assert!((total - 1.0).abs() < TOL);
    }

    fn arb_pair() -> impl Strategy<Value = StateVec> {
        prop::array::uniform8(-1.0f64..1.0)
            .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
            .prop_map(|v| {
                let amps = (0..4).map(|i| C64::new(v[2 * i], v[2 * i + 1])).collect();
                StateVec::new(amps).unwrap().normalized().unwrap()
            })
    }

    proptest! {
        #[test]
        fn bell_distribution_sums_to_one_and_ignores_global_phase(
            pair in arb_pair(), phase in 0.0f64..std::f64::consts::TAU
        ) {
            let d = bell_project(&pair).unwrap();
            prop_assert!((d.total() - 1.0).abs() < TOL);
            let shifted = pair.scaled(C64::from_polar(1.0, phase));
            let e = bell_project(&shifted).unwrap();
            for o in BellOutcome::ALL {
                prop_assert!((d.prob(o) - e.prob(o)).abs() < TOL);
            }
        }

        #[test]
        fn forward_then_reverse_rotation_restores_state(
            k in 0u8..4, l in 0u8..3, theta in 0.0f64..3.2, phi in 0.0f64..6.3
        ) {
            let psi = StateVec::new(vec![
                C64::new(theta.cos(), 0.0),
                C64::from_polar(theta.sin(), phi),
            ]).unwrap();
            let u = rotation_t(l).unwrap() * rotation_r(k).unwrap();
            let back = u.adjoint().apply(&u.apply(&psi).unwrap()).unwrap();
            for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
                prop_assert!((a - b).norm() < TOL);
            }
        }
    }
}
