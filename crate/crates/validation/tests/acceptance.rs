//! Acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so every line is printed regardless of
//! outcome. Exits non-zero when any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::FRAC_PI_8;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use sarg_core::keyrate::{
    binary_entropy, error_correction_factor, key_rate, transmittance, ExperimentParams, FeMode,
};
use sarg_core::optics::{click_distribution, success_patterns, YieldEntry, YieldModel, YieldTable};
use sarg_core::protocol::{
    entanglement_expected, estimate, mdi_expected, simulate, EventType, NoiseConfig, Protocol,
};
use sarg_core::qubit::{filter_apply, rotation_r, rotation_t, Operator2, StateVec};
use sarg_core::sweep::{
    cutoff_distance, run_study, sweep_distance, write_output, CutoffResult, StudyKind, SweepConfig,
};
use sarg_core::Error;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(failures: &mut Vec<String>, pass: bool, what: impl Into<String>) {
    if !pass {
        failures.push(what.into());
    }
}

fn finish(failures: Vec<String>, ok_detail: String) -> Outcome {
    if failures.is_empty() {
        Outcome {
            pass: true,
            detail: ok_detail,
        }
    } else {
        Outcome {
            pass: false,
            detail: failures.join("; "),
        }
    }
}

fn within(elapsed: Duration, limit_s: f64, failures: &mut Vec<String>) {
    check(
        failures,
        elapsed.as_secs_f64() < limit_s,
        format!("runtime {:.2} s over {limit_s} s", elapsed.as_secs_f64()),
    );
}

fn operator_algebra() -> Outcome {
    let start = Instant::now();
    let mut f = Vec::new();
    for k in 0..4 {
        check(
            &mut f,
            rotation_r(k).unwrap().is_unitary(1e-12),
            format!("R^{k} not unitary"),
        );
    }
    for l in 0..3 {
        check(
            &mut f,
            rotation_t(l).unwrap().is_unitary(1e-12),
            format!("T_{l} not unitary"),
        );
    }
    let r4 = rotation_r(1).unwrap().pow(4);
    let minus_i = Operator2::identity().scale((-1.0).into());
    check(&mut f, r4.max_abs_diff(&minus_i) < 1e-12, "R^4 != -I");
    let (p0, _) = filter_apply(&StateVec::zero_x()).unwrap();
    let (p1, _) = filter_apply(&StateVec::one_x()).unwrap();
    check(
        &mut f,
        (p0 - FRAC_PI_8.sin().powi(2)).abs() < 1e-12,
        format!("P(F|0x) = {p0}"),
    );
    check(
        &mut f,
        (p1 - FRAC_PI_8.cos().powi(2)).abs() < 1e-12,
        format!("P(F|1x) = {p1}"),
    );
    within(start.elapsed(), 1.0, &mut f);
    finish(f, format!("{:.3} s", start.elapsed().as_secs_f64()))
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let mut f = Vec::new();
    let rounds = 100_000;
    let ideal = NoiseConfig::ideal();
    let expected = mdi_expected(&ideal).unwrap();
    let mc = estimate(&simulate(Protocol::Mdi, 2024, rounds, &ideal).unwrap()).unwrap();
    let sigma = (expected.sift_rate * (1.0 - expected.sift_rate) / rounds as f64).sqrt();
    let z = (mc.sift_rate - expected.sift_rate) / sigma;
    check(&mut f, z.abs() <= 3.0, format!("MDI sift z = {z:.2}"));
    check(
        &mut f,
        mc.errors == 0 && mc.rounds_kept > 0,
        format!("MDI errors {}", mc.errors),
    );
    let eb =
        estimate(&simulate(Protocol::EntanglementBased, 2024, rounds, &ideal).unwrap()).unwrap();
    check(
        &mut f,
        eb.errors == 0 && eb.rounds_kept > 0,
        format!("EB errors {}", eb.errors),
    );
    check(
        &mut f,
        entanglement_expected(&ideal).unwrap().qber.abs() < 1e-12,
        "EB enumerated QBER nonzero",
    );
    within(start.elapsed(), 10.0, &mut f);
    finish(
        f,
        format!(
            "sift {:.5} vs {:.5} (z = {z:.2}), QBER 0, {:.2} s",
            mc.sift_rate,
            expected.sift_rate,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn optics_oracle() -> Outcome {
    let mut f = Vec::new();
    let angles = [0.0, 0.25, std::f64::consts::FRAC_PI_4, 1.2, 2.0];
    let mut worst = 0.0f64;
    for total in 0..=4 {
        for m in 0..=total {
            let n = total - m;
            for &ta in &angles {
                for &tb in &angles {
                    for d in [0.0, 1e-3] {
                        for p in [1.0, 0.4] {
                            let got = click_distribution(m, n, ta, tb, p, d).unwrap();
                            worst = worst.max((got.total() - 1.0).abs());
                            for (g, w) in got
                                .as_array()
                                .iter()
                                .zip(common::click_oracle(m, n, ta, tb, p, d))
                            {
                                worst = worst.max((g - w).abs());
                            }
                        }
                    }
                }
            }
        }
    }
    check(&mut f, worst < 1e-12, format!("max deviation {worst:e}"));
    let mut hom = 0.0f64;
    for &theta in &angles {
        let d = click_distribution(1, 1, theta, theta, 1.0, 0.0).unwrap();
        hom = hom.max(
            success_patterns(EventType::Type1)
                .iter()
                .map(|&c| d.prob(c))
                .sum(),
        );
    }
    check(&mut f, hom < 1e-12, format!("HOM cross-port {hom:e}"));
    finish(
        f,
        format!("max deviation {worst:.1e}, HOM cross-port {hom:.1e}"),
    )
}

fn rate_units() -> Outcome {
    let mut f = Vec::new();
    check(&mut f, binary_entropy(0.5).unwrap() == 1.0, "h2(0.5) != 1");
    for i in 0..1000 {
        let x = i as f64 / 999.0;
        let d = binary_entropy(x).unwrap() - binary_entropy(1.0 - x).unwrap();
        if d.abs() >= 1e-12 {
            check(&mut f, false, format!("h2 asymmetric at {x}"));
            break;
        }
    }
    check(
        &mut f,
        error_correction_factor(FeMode::EnzerCubic, 0.0).unwrap() == 1.1581,
        "f(0) != 1.1581",
    );
    let t = transmittance(100.0, 0.21).unwrap();
    check(
        &mut f,
        (t - 10f64.powf(-1.05)).abs() < 1e-12,
        format!("eta_T(100) = {t}"),
    );
    let mut table = YieldTable::zeros(2);
    let q = 3.7e-4;
    table.insert(
        EventType::Type1,
        1,
        1,
        YieldEntry {
            q,
            e_b: 0.0,
            e_p: Some(0.0),
        },
    );
    let k = key_rate(EventType::Type1, 0.0, &ExperimentParams::gys(), &table)
        .unwrap()
        .rate;
    check(
        &mut f,
        (k - q).abs() < 1e-12,
        format!("single-cell K = {k}"),
    );
    finish(
        f,
        "entropy, f_e, transmittance and single-cell rate exact".into(),
    )
}

fn gys_baseline() -> Outcome {
    let start = Instant::now();
    let mut f = Vec::new();
    let rows = sweep_distance(&SweepConfig::default()).unwrap();
    within(start.elapsed(), 30.0, &mut f);
    let mut summary = Vec::new();
    for event in EventType::BOTH {
        let rates: Vec<f64> = rows
            .iter()
            .filter(|r| r.point.event == event)
            .map(|r| r.point.rate)
            .collect();
        let e_tot = rows
            .iter()
            .find(|r| r.point.event == event)
            .map(|r| r.point.components.e_tot)
            .unwrap_or(f64::NAN);
        check(
            &mut f,
            rates[0] > 0.0,
            format!(
                "type {} K(0) = {:e} (e_tot {e_tot:.4})",
                event.number(),
                rates[0]
            ),
        );
        let peak = rates
            .iter()
            .enumerate()
            .fold(0, |best, (i, &k)| if k > rates[best] { i } else { best });
        let monotone = rates[peak..].windows(2).all(|w| w[1] <= w[0]);
        check(
            &mut f,
            monotone,
            format!("type {} rises after its peak", event.number()),
        );
        let first_zero = rates[peak..]
            .iter()
            .position(|&k| k == 0.0)
            .map(|i| i + peak);
        let trailing = first_zero.is_some_and(|z| rates[z..].iter().all(|&k| k == 0.0));
        check(
            &mut f,
            trailing,
            format!("type {} no all-zero tail", event.number()),
        );
        summary.push(format!("type {} K(0) = {:.3e}", event.number(), rates[0]));
    }
    finish(
        f,
        format!(
            "{}, {:.2} s",
            summary.join(", "),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn describe(r: &Result<CutoffResult, Error>) -> String {
    match r {
        Ok(c) => format!("{:.1} km", c.l_star),
        Err(Error::NoKeyAtOrigin(_)) => "no key at 0 km".into(),
        Err(e) => e.to_string(),
    }
}

fn orderings() -> Outcome {
    let mut f = Vec::new();
    let model = YieldModel::new(6).unwrap();
    let gys = ExperimentParams::gys();
    let low_dark = ExperimentParams {
        dark: 8.5e-8,
        ..gys
    };
    let double_eta = ExperimentParams { eta: 0.09, ..gys };
    let fixed_fe = ExperimentParams {
        fe_mode: FeMode::Fixed(1.33),
        ..gys
    };
    let k_at = |p: &ExperimentParams, e: EventType, l: f64| {
        key_rate(e, l, p, &model.table(p, l).unwrap()).unwrap().rate
    };
    let cut = |p: &ExperimentParams, e: EventType| cutoff_distance(&model, p, e, 0.0, 400.0, 0.1);
    for event in EventType::BOTH {
        let t = event.number();
        let base = cut(&gys, event);
        let dark = cut(&low_dark, event);
        let eta = cut(&double_eta, event);
        let fe = cut(&fixed_fe, event);
        match (&base, &dark) {
            (Ok(b), Ok(d)) => check(
                &mut f,
                d.l_star - b.l_star > 10.0,
                format!("type {t} dark shift {:.1} km", d.l_star - b.l_star),
            ),
            _ => check(
                &mut f,
                false,
                format!(
                    "type {t} cutoffs: base {}, low dark {}",
                    describe(&base),
                    describe(&dark)
                ),
            ),
        }
        let (k_hi, k_lo) = (k_at(&gys, event, 1.0), k_at(&low_dark, event, 1.0));
        let rel = (k_hi - k_lo).abs() / k_hi.max(k_lo);
        check(
            &mut f,
            rel <= 0.05,
            format!("type {t} K(1 km) relative dark difference {rel:.3} (K = {k_hi:e}, {k_lo:e})"),
        );
        let k_eta = k_at(&double_eta, event, 1.0);
        let eta_cut_up = matches!((&base, &eta), (Ok(b), Ok(e)) if e.l_star > b.l_star);
        check(
            &mut f,
            k_eta > k_hi && eta_cut_up,
            format!(
                "type {t} doubling eta: K(1 km) {k_hi:e} -> {k_eta:e}, cutoff {} -> {}",
                describe(&base),
                describe(&eta)
            ),
        );
        match (&base, &dark, &fe) {
            (Ok(b), Ok(d), Ok(x)) => check(
                &mut f,
                (x.l_star - b.l_star).abs() < (d.l_star - b.l_star).abs(),
                format!("type {t} f_e shift not below dark shift"),
            ),
            _ => check(
                &mut f,
                false,
                format!("type {t} f_e cutoff {}", describe(&fe)),
            ),
        }
    }
    finish(f, "dark, eta and f_e orderings hold for both types".into())
}

fn determinism() -> Outcome {
    let mut f = Vec::new();
    let dir = tempfile::tempdir().unwrap();
    for study in [StudyKind::Fe, StudyKind::Dark, StudyKind::Eta] {
        let config = SweepConfig {
            study,
            seed: 11,
            ..SweepConfig::default()
        };
        let a = dir.path().join(format!("{study}-a.tsv"));
        let b = dir.path().join(format!("{study}-b.tsv"));
        write_output(&a, &run_study(&config).unwrap()).unwrap();
        write_output(&b, &run_study(&config).unwrap()).unwrap();
        let same = std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();
        check(&mut f, same, format!("{study} study differs between runs"));
    }
    finish(
        f,
        "fe, dark and eta study files identical across runs".into(),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("operator algebra", operator_algebra),
        ("Monte Carlo vs enumeration", monte_carlo),
        ("optics oracle equivalence", optics_oracle),
        ("rate formula units", rate_units),
        ("GYS baseline", gys_baseline),
        ("dark, efficiency and f_e orderings", orderings),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {verdict} ({})", i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
