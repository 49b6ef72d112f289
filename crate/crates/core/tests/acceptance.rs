//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p geostop --test acceptance`; pass criterion numbers
//! after `--` to run a subset.

use std::f64::consts::FRAC_1_SQRT_2;
use std::process::ExitCode;
use std::time::Instant;

use geostop::bounds::{
    exp_weights_bound, heat_bounds, heat_transform_at_zero, max_bounds, max_transform_at_zero,
    ratio_to_sqrt_2logn, DiffusionConstants, ErrorConstants, ErrorTerms, EstimationSettings,
    SampledMaxima,
};
use geostop::oracle::{
    all_vertices, sandwich_lower, sandwich_upper, value_iteration_adversary, value_iteration_player,
};
use geostop::simulator::{run, SimulationConfig};
use geostop::specfun::{
    integrate, laplace_inv32_integral, laplace_sqrt_integral, QuadratureSettings,
};
use geostop::strategies::{AdversaryStrategy, PlayerStrategy};
use geostop::verify::{
    check_exp_curvature, check_final_time, check_lower_condition, check_upper_condition, run_suite,
    sample_points, CheckReport, Suite, SuiteConfig,
};
use geostop::{PotentialHandle, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail<E: std::fmt::Debug>(e: E) -> String {
    format!("error: {e:?}")
}

fn oracle_settings() -> QuadratureSettings {
    QuadratureSettings {
        abs_tol: 1e-14,
        rel_tol: 1e-15,
        max_panels: 5000,
        ..QuadratureSettings::default()
    }
}

/// `int_delta^inf e^{-u} sqrt(u) du` by adaptive quadrature.
fn sqrt_oracle(delta: f64) -> f64 {
    integrate(|u| (-u).exp() * u.sqrt(), delta, 80.0, &oracle_settings())
        .unwrap()
        .value
}

/// `int_delta^inf e^{-u} u^{-3/2} du` with `u = e^v`.
fn inv32_oracle(delta: f64) -> f64 {
    integrate(
        |v| (-v.exp()).exp() * (-0.5 * v).exp(),
        delta.ln(),
        80f64.ln(),
        &oracle_settings(),
    )
    .unwrap()
    .value
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_laplace = 0.0f64;
    for _ in 0..20 {
        // log-uniform over (1e-6, 1)
        let delta = 10f64.powf(rng.gen_range(-6.0..0.0));
        let a = (laplace_sqrt_integral(delta).map_err(fail)? - sqrt_oracle(delta)).abs();
        let b = (laplace_inv32_integral(delta).map_err(fail)? - inv32_oracle(delta)).abs();
        worst_laplace = worst_laplace.max(a).max(b);
    }
    let mut worst_origin = 0.0f64;
    for delta in [1e-2, 1e-4, 1e-6] {
        for n in 2..=8 {
            let dc = DiffusionConstants::new(n, delta).map_err(fail)?;
            let zero = vec![0.0; n];
            for kappa in [dc.kappa_s, dc.kappa_heat_ub] {
                let h = PotentialHandle::heat(n, delta, kappa).map_err(fail)?;
                let closed = heat_transform_at_zero(n, delta, kappa).map_err(fail)?;
                worst_origin = worst_origin.max((h.transformed(&zero) - closed).abs());
            }
            for kappa in [dc.kappa_max_lb, dc.kappa_m] {
                let h = PotentialHandle::max(n, delta, kappa).map_err(fail)?;
                let closed = max_transform_at_zero(n, delta, kappa).map_err(fail)?;
                worst_origin = worst_origin.max((h.transformed(&zero) - closed).abs());
            }
        }
    }
    ensure(
        worst_laplace <= 1e-9 && worst_origin <= 1e-7,
        format!("laplace max err {worst_laplace:.2e} (tol 1e-9), origin transforms max err {worst_origin:.2e} (tol 1e-7)"),
    )
}

fn criterion_2() -> Outcome {
    let delta: f64 = 1e-6;
    let s = delta.sqrt();
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, target) in [(2usize, FRAC_1_SQRT_2), (3, 4.0 / 3.0 * FRAC_1_SQRT_2)] {
        let dc = DiffusionConstants::new(n, delta).map_err(fail)?;
        let zero = vec![0.0; n];
        let heat_lower = PotentialHandle::heat(n, delta, dc.kappa_s).map_err(fail)?;
        let max_lower = PotentialHandle::max(n, delta, dc.kappa_max_lb).map_err(fail)?;
        let max_upper = PotentialHandle::max(n, delta, dc.kappa_m).map_err(fail)?;
        let uh = s * heat_lower.value(&zero, Side::Lower).map_err(fail)?;
        let um = s * max_lower.value(&zero, Side::Lower).map_err(fail)?;
        let wm = s * max_upper.value(&zero, Side::Upper).map_err(fail)?;
        let rel = |v: f64| (v - target).abs() / target;
        // The heat lower potential is only claimed to be sharp for two experts.
        let required: Vec<(&str, f64)> = if n == 2 {
            vec![("u^h", uh), ("w^m", wm), ("u^m", um)]
        } else {
            vec![("w^m", wm), ("u^m", um)]
        };
        for (name, v) in &required {
            ok &= rel(*v) <= 0.01;
            parts.push(format!("N={n} {name}={v:.5} ({:.3}%)", 100.0 * rel(*v)));
        }
        if n == 3 {
            parts.push(format!("N=3 u^h={uh:.5} (informational)"));
        }
    }
    ensure(ok, parts.join(", "))
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    for n in [2usize, 3, 10, 100] {
        for delta in [1e-6, 1e-3, 0.1, 0.5, 0.9] {
            let r = exp_weights_bound(n, delta).map_err(fail)?;
            let formula = (2.0 * (1.0 - delta) * (n as f64).ln() / delta).sqrt();
            worst = worst.max((r.bound - formula).abs() / formula);
        }
    }
    let delta = 0.5;
    let bound = exp_weights_bound(2, delta).map_err(fail)?.bound;
    let p = PlayerStrategy::exp_weights(2, delta).map_err(fail)?;
    let vf = value_iteration_player(&p, delta, 60, 1e-10, &all_vertices(2)).map_err(fail)?;
    let v0 = vf.value_at_origin();
    ensure(
        worst <= 1e-15 && v0 <= bound + 1e-6 && vf.converged,
        format!("formula rel err {worst:.1e}, oracle v(0)={v0:.6} <= bound {bound:.6}"),
    )
}

fn criterion_4() -> Outcome {
    let ec = ErrorConstants::zero();
    let ratios: Vec<f64> = [10usize, 100, 1000, 10_000]
        .iter()
        .map(|&n| ratio_to_sqrt_2logn(n, 1e-12, &ec))
        .collect::<Result<_, _>>()
        .map_err(fail)?;
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    let last = ratios[3];
    ensure(
        increasing && (0.75..=0.89).contains(&last),
        format!("ratios {ratios:.4?}, at N=1e4 {last:.4} in [0.75, 0.89]"),
    )
}

fn summarize(reports: &[CheckReport]) -> (bool, String) {
    let bad: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.to_string())
        .collect();
    let worst = reports
        .iter()
        .map(|r| r.worst_margin)
        .fold(f64::INFINITY, f64::min);
    let total: usize = reports.iter().map(|r| r.checked).sum();
    if bad.is_empty() {
        (
            true,
            format!(
                "{} checks, {total} point evaluations, worst margin {worst:.2e}",
                reports.len()
            ),
        )
    } else {
        (false, bad.join("; "))
    }
}

fn criterion_5() -> Outcome {
    let tol = 1e-4;
    let mut reports = Vec::new();
    for n in [2usize, 3, 4] {
        for delta in [0.05, 0.1] {
            let dc = DiffusionConstants::new(n, delta).map_err(fail)?;
            let xs = sample_points(n, delta, 200, 17).map_err(fail)?;
            let heat_lower = PotentialHandle::heat(n, delta, dc.kappa_s).map_err(fail)?;
            let max_lower = PotentialHandle::max(n, delta, dc.kappa_max_lb).map_err(fail)?;
            let heat_upper = PotentialHandle::heat(n, delta, dc.kappa_heat_ub).map_err(fail)?;
            let max_upper = PotentialHandle::max(n, delta, dc.kappa_m).map_err(fail)?;
            let exp = PotentialHandle::exp_weights_tuned(n, delta).map_err(fail)?;
            let a_heat = AdversaryStrategy::heat(n).map_err(fail)?;
            let a_max = AdversaryStrategy::max(n).map_err(fail)?;
            reports.push(check_lower_condition(&heat_lower, &a_heat, &xs, tol).map_err(fail)?);
            reports.push(check_lower_condition(&max_lower, &a_max, &xs, tol).map_err(fail)?);
            for h in [&heat_upper, &max_upper, &exp] {
                reports.push(check_upper_condition(h, &xs, tol).map_err(fail)?);
            }
            reports.push(check_exp_curvature(&exp, &xs, tol, 17).map_err(fail)?);
        }
    }
    let (ok, detail) = summarize(&reports);
    let gap = reports
        .iter()
        .filter_map(|r| r.diagnostics.get("cube_gap"))
        .fold(0.0f64, |a, &b| a.max(b));
    ensure(
        ok,
        format!("{detail}, largest cube-vs-vertex gap {gap:.2e}"),
    )
}

fn criterion_6() -> Outcome {
    let mut reports = Vec::new();
    for n in 2..=6 {
        for delta in [0.01, 0.1] {
            let dc = DiffusionConstants::new(n, delta).map_err(fail)?;
            let xs = sample_points(n, delta, 500, 23 + n as u64).map_err(fail)?;
            for h in [
                PotentialHandle::heat(n, delta, dc.kappa_s),
                PotentialHandle::heat(n, delta, dc.kappa_heat_ub),
                PotentialHandle::max(n, delta, dc.kappa_max_lb),
                PotentialHandle::max(n, delta, dc.kappa_m),
            ] {
                reports.push(check_final_time(&h.map_err(fail)?, &xs).map_err(fail)?);
            }
        }
    }
    let (ok, detail) = summarize(&reports);
    ensure(ok, detail)
}

fn criterion_7() -> Outcome {
    let tol = 1e-8;
    let radius = 60;
    let settings = EstimationSettings::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for n in [2usize, 3] {
        let maxima = SampledMaxima::estimate(n, &settings).map_err(fail)?;
        for delta in [0.05, 0.1, 0.2] {
            let ec = ErrorConstants::from_maxima(&maxima, delta).map_err(fail)?;
            let e = ErrorTerms::new(&ec, delta).map_err(fail)?;
            let dc = DiffusionConstants::new(n, delta).map_err(fail)?;
            let mut row = vec![format!(
                "N={n} delta={delta} [{}: K3h={:.3} K4h={:.3} K3hu={:.3} K3m={:.3} K3mu={:.3}]",
                ec.mode.name(),
                ec.k3_heat_lb,
                ec.k4_heat_lb,
                ec.k3_heat_ub,
                ec.k3_max_lb,
                ec.k3_max_ub
            )];
            let lower = [
                (
                    "u^h",
                    AdversaryStrategy::heat(n),
                    PotentialHandle::heat(n, delta, dc.kappa_s),
                    e.heat_lower,
                ),
                (
                    "u^m",
                    AdversaryStrategy::max(n),
                    PotentialHandle::max(n, delta, dc.kappa_max_lb),
                    e.max_lower,
                ),
            ];
            for (name, a, h, err) in lower {
                let vf = value_iteration_adversary(&a.map_err(fail)?, delta, radius, tol)
                    .map_err(fail)?;
                let r = sandwich_lower(&vf, &h.map_err(fail)?, err, tol).map_err(fail)?;
                ok &= r.passed && vf.converged;
                row.push(format!(
                    "{name}-E<=v_a {} (v0={:.4}, min slack {:.3})",
                    if r.passed { "ok" } else { "VIOLATED" },
                    vf.value_at_origin(),
                    r.worst_margin
                ));
            }
            let upper = [
                ("p^e", PlayerStrategy::exp_weights(n, delta), 0.0),
                ("p^h", PlayerStrategy::heat(n, delta), e.heat_upper),
                ("p^m", PlayerStrategy::max(n, delta), e.max_upper),
            ];
            for (name, p, err) in upper {
                let p = p.map_err(fail)?;
                let vf = value_iteration_player(&p, delta, radius, tol, &all_vertices(n))
                    .map_err(fail)?;
                let h = p.handle().expect("potential player");
                let r = sandwich_upper(&vf, h, err, tol).map_err(fail)?;
                ok &= r.passed && vf.converged;
                row.push(format!(
                    "v_{name}<=w+E {} (v0={:.4}, min slack {:.3})",
                    if r.passed { "ok" } else { "VIOLATED" },
                    vf.value_at_origin(),
                    r.worst_margin
                ));
            }
            lines.push(row.join(" "));
        }
    }
    ensure(ok, lines.join("\n      "))
}

fn criterion_8() -> Outcome {
    let (n, delta) = (3, 0.01);
    let trials = 100_000;
    let seed = 7;
    let ec = ErrorConstants::zero();
    let (hl, hu) = heat_bounds(n, delta, &ec).map_err(fail)?;
    let (ml, mu) = max_bounds(n, delta, &ec).map_err(fail)?;
    let heat = run(&SimulationConfig::new(
        PlayerStrategy::heat(n, delta).map_err(fail)?,
        AdversaryStrategy::heat(n).map_err(fail)?,
        delta,
        trials,
        seed,
    )
    .map_err(fail)?)
    .map_err(fail)?;
    let max = run(&SimulationConfig::new(
        PlayerStrategy::max(n, delta).map_err(fail)?,
        AdversaryStrategy::max(n).map_err(fail)?,
        delta,
        trials,
        seed,
    )
    .map_err(fail)?)
    .map_err(fail)?;
    let inside = |m: f64, se: f64, lo: f64, hi: f64| m >= lo - 3.0 * se && m <= hi + 3.0 * se;
    let ok_heat = inside(heat.mean_regret, heat.std_error, hl.bound, hu.bound);
    let ok_max = inside(max.mean_regret, max.std_error, ml.bound, mu.bound);
    let z = heat.max_loss_z_score();
    ensure(
        ok_heat && ok_max && z <= 4.0,
        format!(
            "heat {:.4}±{:.4} in [{:.4}, {:.4}]; max {:.4}±{:.4} in [{:.4}, {:.4}]; a^h mean-loss |z| max {z:.2} (<= 4); truncated {}+{}",
            heat.mean_regret,
            heat.std_error,
            hl.bound,
            hu.bound,
            max.mean_regret,
            max.std_error,
            ml.bound,
            mu.bound,
            heat.truncated_trials,
            max.truncated_trials
        ),
    )
}

fn criterion_9() -> Outcome {
    let report = run_suite(Suite::All, &SuiteConfig::new(3, 0.1)).map_err(fail)?;
    let (ok, detail) = summarize(&report.checks);
    let ratios: Vec<String> = report
        .checks
        .iter()
        .filter_map(|c| {
            c.diagnostics
                .get("halving_ratio")
                .map(|r| format!("{}:{r:.2}", c.family.map(|f| f.name()).unwrap_or("-")))
        })
        .collect();
    ensure(
        ok && report.passed,
        format!("{detail}; step-halving ratios {}", ratios.join(" ")),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "closed-form cross-checks", criterion_1),
        (2, "two- and three-expert asymptotics", criterion_2),
        (3, "exponential weights bound and oracle", criterion_3),
        (4, "large-N ratio trend", criterion_4),
        (5, "lower/upper condition suites", criterion_5),
        (6, "final-time bounds", criterion_6),
        (7, "dynamic-programming sandwich", criterion_7),
        (8, "Monte Carlo sandwich", criterion_8),
        (9, "invariant suites", criterion_9),
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (k, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&k) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} criterion {k}: {name} ({secs:.1}s)\n      {detail}");
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
