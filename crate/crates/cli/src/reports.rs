//! `simulate`, `oracle` and `verify`: JSON on stdout, summary on stderr.

use std::io::Write;
use std::path::Path;

use geostop::bounds::{DiffusionConstants, ErrorConstants, ErrorTerms, EstimationSettings};
use geostop::oracle::{
    all_vertices, sandwich_lower, sandwich_upper, value_iteration_adversary,
    value_iteration_player, LatticeValueFunction, SandwichReport, DEFAULT_TOLERANCE as ORACLE_TOL,
};
use geostop::potentials::PotentialHandle;
use geostop::simulator::{run, SimulationConfig};
use geostop::strategies::{AdversaryKind, AdversaryStrategy, PlayerKind, PlayerStrategy};
use geostop::verify::{
    run_suite, Suite, SuiteConfig, DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_TOLERANCE,
};
use serde_json::json;

use crate::bounds::user_constants;
use crate::config::Config;
use crate::{CliError, OracleArgs, SimulateArgs, Status, VerifyArgs};

const DEFAULT_TRIALS: u64 = 10_000;
const DEFAULT_RADIUS: u32 = 60;

fn parse<T>(s: &str) -> Result<T, CliError>
where
    T: std::str::FromStr<Err = geostop::Error>,
{
    s.parse()
        .map_err(|e: geostop::Error| CliError::Usage(e.to_string()))
}

fn write_file(p: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(p, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))
}

fn print_json(v: &impl serde::Serialize) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

pub fn cmd_simulate(args: SimulateArgs, cfg: &Config) -> Result<Status, CliError> {
    let player: PlayerKind = parse(&cfg.required(args.player, "player")?)?;
    let adversary: AdversaryKind = parse(&cfg.required(args.adversary, "adversary")?)?;
    let n: usize = cfg.required(args.n, "n")?;
    let delta: f64 = cfg.required(args.delta, "delta")?;
    let trials = cfg.or(args.trials, "trials", DEFAULT_TRIALS)?;
    let seed = cfg.or(args.seed, "seed", 0)?;
    let mut config = SimulationConfig::new(
        PlayerStrategy::new(player, n, delta)?,
        AdversaryStrategy::new(adversary, n)?,
        delta,
        trials,
        seed,
    )?;
    if let Some(cap) = cfg.opt(args.cap, "cap")? {
        config = config.with_max_rounds(cap);
    }
    let r = run(&config)?;
    print_json(&r)?;
    eprintln!(
        "{player} vs {adversary}, N={n}, delta={delta}: mean regret {:.6} +- {:.6} over {} trials \
         ({} truncated at {} rounds), adversary balance z = {:.2}",
        r.mean_regret,
        r.std_error,
        r.trials_used,
        r.truncated_trials,
        r.max_rounds,
        r.max_loss_z_score()
    );
    if let Some(p) = &args.out {
        let mut wr = csv::Writer::from_writer(Vec::new());
        wr.write_record([
            "player",
            "adversary",
            "n",
            "delta",
            "trials",
            "seed",
            "max_rounds",
            "mean_regret",
            "std_error",
            "truncated_trials",
            "truncation_probability",
            "mean_rounds",
            "max_loss_z",
        ])?;
        wr.write_record([
            r.player.clone(),
            r.adversary.clone(),
            r.n.to_string(),
            r.delta.to_string(),
            r.trials_used.to_string(),
            r.seed.to_string(),
            r.max_rounds.to_string(),
            r.mean_regret.to_string(),
            r.std_error.to_string(),
            r.truncated_trials.to_string(),
            r.truncation_probability.to_string(),
            r.mean_rounds.to_string(),
            r.max_loss_z_score().to_string(),
        ])?;
        let bytes = wr.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        write_file(p, &bytes)?;
    }
    Ok(Status::Ok)
}

fn oracle_constants(
    args: &OracleArgs,
    cfg: &Config,
    n: usize,
    delta: f64,
) -> Result<ErrorConstants, CliError> {
    let mode = cfg.or(
        args.error_mode.clone(),
        "error-mode",
        "estimated".to_string(),
    )?;
    let flags = [
        args.k3_heat_lb,
        args.k4_heat_lb,
        args.k3_heat_ub,
        args.k3_max_lb,
        args.k3_max_ub,
    ];
    match mode.as_str() {
        "none" => Ok(ErrorConstants::zero()),
        "estimated" => Ok(ErrorConstants::estimate(
            n,
            delta,
            &EstimationSettings::default(),
        )?),
        "user" => Ok(user_constants(cfg, flags, true)?.expect("required constants present")),
        other => Err(CliError::Usage(format!(
            "--error-mode must be none, estimated or user, got `{other}`"
        ))),
    }
}

fn write_states(p: &Path, vf: &LatticeValueFunction) -> Result<(), CliError> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (0..vf.n).map(|i| format!("x{i}")).collect();
    header.push("value".into());
    wr.write_record(&header)?;
    for (x, v) in vf.iter() {
        let mut rec: Vec<String> = x.iter().map(i64::to_string).collect();
        rec.push(v.to_string());
        wr.write_record(&rec)?;
    }
    let bytes = wr.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    write_file(p, &bytes)
}

pub fn cmd_oracle(args: OracleArgs, cfg: &Config) -> Result<Status, CliError> {
    let adversary = cfg.opt(args.adversary.clone(), "adversary")?;
    let player = cfg.opt(args.player.clone(), "player")?;
    let n: usize = cfg.required(args.n, "n")?;
    let delta: f64 = cfg.required(args.delta, "delta")?;
    let radius = cfg.or(args.radius, "radius", DEFAULT_RADIUS)?;
    let tol = cfg.or(args.tol, "tol", ORACLE_TOL)?;
    let ec = oracle_constants(&args, cfg, n, delta)?;
    let e = ErrorTerms::new(&ec, delta)?;
    let dc = DiffusionConstants::new(n, delta)?;
    let (vf, sandwich): (LatticeValueFunction, SandwichReport) = match (adversary, player) {
        (Some(a), None) => {
            let kind: AdversaryKind = parse(&a)?;
            let vf =
                value_iteration_adversary(&AdversaryStrategy::new(kind, n)?, delta, radius, tol)?;
            let (h, err) = match kind {
                AdversaryKind::Heat => (PotentialHandle::heat(n, delta, dc.kappa_s)?, e.heat_lower),
                AdversaryKind::Max => (
                    PotentialHandle::max(n, delta, dc.kappa_max_lb)?,
                    e.max_lower,
                ),
            };
            let s = sandwich_lower(&vf, &h, err, tol)?;
            (vf, s)
        }
        (None, Some(p)) => {
            let kind: PlayerKind = parse(&p)?;
            let err = match kind {
                PlayerKind::ExpWeights => 0.0,
                PlayerKind::Heat => e.heat_upper,
                PlayerKind::Max => e.max_upper,
                other => {
                    return Err(CliError::Usage(format!(
                        "--player must be exp, heat or max, got `{other}`"
                    )))
                }
            };
            let strategy = PlayerStrategy::new(kind, n, delta)?;
            let vf = value_iteration_player(&strategy, delta, radius, tol, &all_vertices(n))?;
            let h = strategy.handle().expect("potential-based player");
            let s = sandwich_upper(&vf, h, err, tol)?;
            (vf, s)
        }
        _ => {
            return Err(CliError::Missing(
                "exactly one of --adversary or --player".into(),
            ))
        }
    };
    let summary = vf.summary();
    print_json(&json!({
        "summary": summary,
        "sandwich": sandwich,
        "error_constants": ec,
    }))?;
    eprintln!(
        "{:?} oracle N={n} delta={delta} radius={radius}: v(0) = {:.6}, residual {:.2e}, {} sweeps{}",
        summary.kind,
        summary.value_at_origin,
        summary.residual,
        summary.sweeps,
        if summary.converged { "" } else { " (NOT converged)" }
    );
    eprintln!(
        "sandwich ({} side, E = {:.4e}, {}): {} of {} interior states violate, worst margin {:.3e}",
        sandwich.side,
        sandwich.error_term,
        ec.mode.name(),
        sandwich.violations,
        sandwich.checked,
        sandwich.worst_margin
    );
    if !summary.radius_sufficient {
        eprintln!(
            "note: boundary slack {:.2e} exceeds tolerance; raise --radius for a tighter table",
            summary.boundary_slack
        );
    }
    if let Some(p) = &args.out {
        write_states(p, &vf)?;
    }
    Ok(if sandwich.passed && summary.converged {
        Status::Ok
    } else {
        Status::Failed
    })
}

pub fn cmd_verify(args: VerifyArgs, cfg: &Config) -> Result<Status, CliError> {
    let suite: Suite = parse(&cfg.or(args.suite, "suite", "all".to_string())?)?;
    let n: usize = cfg.required(args.n, "n")?;
    let delta: f64 = cfg.required(args.delta, "delta")?;
    let config = SuiteConfig {
        n,
        delta,
        samples: cfg.or(args.samples, "samples", DEFAULT_SAMPLES)?,
        tol: cfg.or(args.tol, "tol", DEFAULT_TOLERANCE)?,
        seed: cfg.or(args.seed, "seed", DEFAULT_SEED)?,
    };
    let report = run_suite(suite, &config)?;
    match &args.out {
        Some(p) => {
            let mut bytes = serde_json::to_vec_pretty(&report)?;
            bytes.push(b'\n');
            write_file(p, &bytes)?;
        }
        None => print_json(&report)?,
    }
    for c in &report.checks {
        eprintln!("{c}");
    }
    eprintln!(
        "suite {suite}: {} checks, {} violations, {}",
        report.checks.len(),
        report.violations,
        if report.passed { "passed" } else { "FAILED" }
    );
    Ok(if report.passed {
        Status::Ok
    } else {
        Status::Failed
    })
}
