//! Brute-force references for the optics model.
//!
//! Amplitudes come from permanents over every routing of the labelled input
//! photons, and loss and dark counts from enumerating every survival and
//! dark-count assignment. Nothing here shares code with the library's Fock
//! expansion.

#![allow(dead_code)]

use std::collections::BTreeMap;

/// Single-photon amplitudes over `AT, AR, BT, BR` for Alice's input.
pub fn alice_mode(theta: f64) -> [f64; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let t = h * (theta - std::f64::consts::FRAC_PI_4).cos();
    let r = h * (theta + std::f64::consts::FRAC_PI_4).cos();
    [t, r, t, r]
}

/// Bob's input picks up the beam splitter's minus sign on port B.
pub fn bob_mode(theta: f64) -> [f64; 4] {
    let [t, r, _, _] = alice_mode(theta);
    [t, r, -t, -r]
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn permanent(rows: &[[f64; 4]], cols: &[usize]) -> f64 {
    permutations(rows.len())
        .iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(i, &j)| rows[i][cols[j]])
                .product::<f64>()
        })
        .sum()
}

fn fact(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Output occupation → probability, from permanents.
pub fn fock_probabilities(m: usize, n: usize, ta: f64, tb: f64) -> BTreeMap<[usize; 4], f64> {
    let mut rows = vec![alice_mode(ta); m];
    rows.extend(vec![bob_mode(tb); n]);
    let total = m + n;
    let mut out = BTreeMap::new();
    // every routing of labelled photons to modes, collapsed to occupations
    for code in 0..4usize.pow(total as u32) {
        let mut occ = [0usize; 4];
        let mut c = code;
        for _ in 0..total {
            occ[c % 4] += 1;
            c /= 4;
        }
        out.entry(occ).or_insert(0.0);
    }
    for (occ, p) in out.iter_mut() {
        let cols: Vec<usize> = (0..4)
            .flat_map(|j| std::iter::repeat_n(j, occ[j]))
            .collect();
        let amp = permanent(&rows, &cols)
            / (occ.iter().map(|&k| fact(k)).product::<f64>() * fact(m) * fact(n)).sqrt();
        *p = amp * amp;
    }
    out
}

/// Signed amplitudes, needed for coherent sums over bit values.
pub fn fock_amplitudes(m: usize, n: usize, ta: f64, tb: f64) -> BTreeMap<[usize; 4], f64> {
    let mut rows = vec![alice_mode(ta); m];
    rows.extend(vec![bob_mode(tb); n]);
    fock_probabilities(m, n, ta, tb)
        .into_keys()
        .map(|occ| {
            let cols: Vec<usize> = (0..4)
                .flat_map(|j| std::iter::repeat_n(j, occ[j]))
                .collect();
            let amp = permanent(&rows, &cols)
                / (occ.iter().map(|&k| fact(k)).product::<f64>() * fact(m) * fact(n)).sqrt();
            (occ, amp)
        })
        .collect()
}

/// Click-mask distribution for a fixed occupation, by enumerating which
/// photons survive and which detectors fire dark.
pub fn mask_distribution(occ: &[usize; 4], p: f64, d: f64) -> [f64; 16] {
    let photons: Vec<usize> = (0..4)
        .flat_map(|j| std::iter::repeat_n(j, occ[j]))
        .collect();
    let mut out = [0.0; 16];
    for survive in 0..1usize << photons.len() {
        let mut w = 1.0;
        let mut lit = 0usize;
        for (i, &mode) in photons.iter().enumerate() {
            if survive >> i & 1 == 1 {
                w *= p;
                lit |= 1 << mode;
            } else {
                w *= 1.0 - p;
            }
        }
        for darks in 0..16usize {
            let mut wd = w;
            for j in 0..4 {
                wd *= if darks >> j & 1 == 1 { d } else { 1.0 - d };
            }
            out[lit | darks] += wd;
        }
    }
    out
}

pub fn click_oracle(m: usize, n: usize, ta: f64, tb: f64, p: f64, d: f64) -> [f64; 16] {
    let mut out = [0.0; 16];
    for (occ, prob) in fock_probabilities(m, n, ta, tb) {
        for (o, v) in out.iter_mut().zip(mask_distribution(&occ, p, d)) {
            *o += prob * v;
        }
    }
    out
}

/// Masks over bits `AT=1, AR=2, BT=4, BR=8`.
pub const TYPE1_MASKS: [usize; 2] = [0b1001, 0b0110];
pub const TYPE2_MASKS: [usize; 2] = [0b0011, 0b1100];

/// Unnormalized post-selected virtual state for one class, with kept
/// branches restricted to matching rotation indices (Type2 also needs `k`
/// even), Alice's bit flipped for Type1.
pub fn virtual_state_oracle(type1: bool, m: usize, n: usize, p: f64, d: f64) -> [[f64; 4]; 4] {
    let masks = if type1 { TYPE1_MASKS } else { TYPE2_MASKS };
    let mut rho = [[0.0; 4]; 4];
    for k in 0..4 {
        if !type1 && k % 2 == 1 {
            continue;
        }
        let angle = |bit: usize| {
            bit as f64 * std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::FRAC_PI_4
        };
        let amps: Vec<BTreeMap<[usize; 4], f64>> = (0..4)
            .map(|ab| fock_amplitudes(m, n, angle(ab >> 1), angle(ab & 1)))
            .collect();
        for occ in amps[0].keys() {
            let md = mask_distribution(occ, p, d);
            let w: f64 = masks.iter().map(|&c| md[c]).sum::<f64>() / 64.0;
            for i in 0..4 {
                for j in 0..4 {
                    let (ri, rj) = if type1 { (i ^ 2, j ^ 2) } else { (i, j) };
                    rho[ri][rj] += w * amps[i][occ] * amps[j][occ];
                }
            }
        }
    }
    rho
}

/// Fraction of equal X outcomes, clamped to `[0, 1/2]`.
pub fn phase_error_oracle(rho: &[[f64; 4]; 4]) -> f64 {
    let tr: f64 = (0..4).map(|i| rho[i][i]).sum();
    if tr <= 0.0 {
        return 0.5;
    }
    let mut equal = 0.0;
    for (sa, sb) in [(1.0, 1.0), (-1.0, -1.0)] {
        let v = [0.5, 0.5 * sb, 0.5 * sa, 0.5 * sa * sb];
        for i in 0..4 {
            for j in 0..4 {
                equal += v[i] * rho[i][j] * v[j];
            }
        }
    }
    (equal / tr).clamp(0.0, 0.5)
}
