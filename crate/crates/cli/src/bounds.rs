//! `bounds` and `figure`: C_N tables and plots.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use geostop::bounds::{
    all_reports, comparison_curves, BoundReport, ComparisonCurves, ErrorConstants,
    EstimationSettings, SampledMaxima,
};
use geostop::{Family, Side};
use serde_json::json;

use crate::config::Config;
use crate::svg::{line_plot, Series};
use crate::{BoundsArgs, CliError, CurveArgs, FigureArgs, Status};

pub const DEFAULT_ESTIMATE_MAX_N: usize = 4;
const FIGURE_RANGE: &str = "2:50";
const FIGURE_DELTA: f64 = 1e-6;

pub const CSV_HEADER: [&str; 12] = [
    "family",
    "side",
    "n",
    "delta",
    "potential0",
    "error",
    "bound",
    "c_n",
    "error_mode",
    "gravin_upper_cn",
    "gravin_ew_lower_cn",
    "exp_weights_upper_cn",
];

pub struct Row {
    pub report: BoundReport,
    pub curves: ComparisonCurves,
}

impl Row {
    fn record(&self) -> Vec<String> {
        let r = &self.report;
        let s = r.delta.sqrt();
        vec![
            r.family.name().to_string(),
            r.side.name().to_string(),
            r.n.to_string(),
            r.delta.to_string(),
            r.potential_at_zero.to_string(),
            r.error_term.to_string(),
            r.bound.to_string(),
            r.c_n.to_string(),
            r.error_mode.name().to_string(),
            (self.curves.gravin_upper * s).to_string(),
            (self.curves.gravin_ew_lower_asymptote * s).to_string(),
            (self.curves.exp_weights_upper * s).to_string(),
        ]
    }

    fn json(&self) -> serde_json::Value {
        let r = &self.report;
        let s = r.delta.sqrt();
        json!({
            "family": r.family.name(),
            "side": r.side.name(),
            "n": r.n,
            "delta": r.delta,
            "potential0": r.potential_at_zero,
            "error": r.error_term,
            "bound": r.bound,
            "c_n": r.c_n,
            "error_mode": r.error_mode.name(),
            "gravin_upper_cn": self.curves.gravin_upper * s,
            "gravin_ew_lower_cn": self.curves.gravin_ew_lower_asymptote * s,
            "exp_weights_upper_cn": self.curves.exp_weights_upper * s,
        })
    }
}

pub fn parse_range(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("--n-range expects A:B with 2 <= A <= B, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a < 2 || a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn expert_counts(
    args: &CurveArgs,
    cfg: &Config,
    default_range: Option<&str>,
) -> Result<Vec<usize>, CliError> {
    if let Some(n) = args.n {
        return Ok(vec![n]);
    }
    if let Some(r) = &args.n_range {
        let (a, b) = parse_range(r)?;
        return Ok((a..=b).collect());
    }
    if let Some(r) = cfg.opt::<String>(None, "n-range")? {
        let (a, b) = parse_range(&r)?;
        return Ok((a..=b).collect());
    }
    if let Some(n) = cfg.opt::<usize>(None, "n")? {
        return Ok(vec![n]);
    }
    match default_range {
        Some(r) => {
            let (a, b) = parse_range(r)?;
            Ok((a..=b).collect())
        }
        None => Err(CliError::Missing("--n or --n-range".into())),
    }
}

fn families(args: &CurveArgs, cfg: &Config) -> Result<Vec<Family>, CliError> {
    let list = cfg.or(args.families.clone(), "families", "all".to_string())?;
    if list.trim() == "all" {
        return Ok(vec![Family::ExpWeights, Family::Heat, Family::Max]);
    }
    let mut out = Vec::new();
    for part in list.split(',') {
        let f: Family = part
            .trim()
            .parse()
            .map_err(|e: geostop::Error| CliError::Usage(e.to_string()))?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    Ok(out)
}

/// Reads the five error constants if every one is set.
pub fn user_constants(
    cfg: &Config,
    flags: [Option<f64>; 5],
    required: bool,
) -> Result<Option<ErrorConstants>, CliError> {
    const KEYS: [&str; 5] = [
        "k3-heat-lb",
        "k4-heat-lb",
        "k3-heat-ub",
        "k3-max-lb",
        "k3-max-ub",
    ];
    let mut ks = [0.0; 5];
    for (i, (flag, key)) in flags.into_iter().zip(KEYS).enumerate() {
        match cfg.opt(flag, key)? {
            Some(k) => ks[i] = k,
            None if required => return Err(CliError::Missing(format!("--{key}"))),
            None => return Ok(None),
        }
    }
    Ok(Some(ErrorConstants::user_supplied(
        ks[0], ks[1], ks[2], ks[3], ks[4],
    )?))
}

enum Inflation {
    Estimated { max_n: usize },
    User(ErrorConstants),
}

struct Plan {
    zero: bool,
    inflated: Option<Inflation>,
}

fn plan(args: &CurveArgs, cfg: &Config, default_mode: &str) -> Result<Plan, CliError> {
    let mode = cfg.or(
        args.error_mode.clone(),
        "error-mode",
        default_mode.to_string(),
    )?;
    let flags = [
        args.k3_heat_lb,
        args.k4_heat_lb,
        args.k3_heat_ub,
        args.k3_max_lb,
        args.k3_max_ub,
    ];
    let max_n = cfg.or(
        args.estimate_max_n,
        "estimate-max-n",
        DEFAULT_ESTIMATE_MAX_N,
    )?;
    let estimated = Inflation::Estimated { max_n };
    Ok(match mode.as_str() {
        "none" => Plan {
            zero: true,
            inflated: None,
        },
        "estimated" => Plan {
            zero: false,
            inflated: Some(estimated),
        },
        "user" => Plan {
            zero: false,
            inflated: user_constants(cfg, flags, true)?.map(Inflation::User),
        },
        "both" => Plan {
            zero: true,
            inflated: Some(match user_constants(cfg, flags, false)? {
                Some(ec) => Inflation::User(ec),
                None => estimated,
            }),
        },
        other => {
            return Err(CliError::Usage(format!(
                "--error-mode must be none, estimated, user or both, got `{other}`"
            )))
        }
    })
}

fn keep(report: &BoundReport, families: &[Family]) -> bool {
    families.contains(&report.family)
}

/// Rows for every N: E = 0 reports first, then error-inflated heat and max
/// reports. Exponential weights has no error term and appears once.
fn build_rows(
    args: &CurveArgs,
    cfg: &Config,
    default_range: Option<&str>,
    default_delta: Option<f64>,
    default_mode: &str,
) -> Result<Vec<Row>, CliError> {
    let delta = match default_delta {
        Some(d) => cfg.or(args.delta, "delta", d)?,
        None => cfg.required(args.delta, "delta")?,
    };
    let ns = expert_counts(args, cfg, default_range)?;
    let fams = families(args, cfg)?;
    let plan = plan(args, cfg, default_mode)?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &n in &ns {
        let curves = comparison_curves(n, delta)?;
        if plan.zero {
            for report in all_reports(n, delta, &ErrorConstants::zero())? {
                if keep(&report, &fams) {
                    rows.push(Row { report, curves });
                }
            }
        }
        let ec = match &plan.inflated {
            None => continue,
            Some(Inflation::User(ec)) => *ec,
            Some(Inflation::Estimated { max_n }) => {
                if n > *max_n {
                    skipped.push(n);
                    continue;
                }
                let m = SampledMaxima::estimate(n, &EstimationSettings::default())?;
                ErrorConstants::from_maxima(&m, delta)?
            }
        };
        for report in all_reports(n, delta, &ec)? {
            let exp = report.family == Family::ExpWeights;
            if keep(&report, &fams) && (!exp || !plan.zero) {
                rows.push(Row { report, curves });
            }
        }
    }
    if let (Some(first), Some(last)) = (skipped.first(), skipped.last()) {
        eprintln!(
            "note: error constants not estimated for N = {first}..={last} (above --estimate-max-n); \
             supply --k3-*/--k4-* flags to inflate those rows"
        );
    }
    Ok(rows)
}

fn write_csv<W: Write>(w: W, rows: &[Row]) -> Result<(), CliError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in rows {
        wr.write_record(r.record())?;
    }
    wr.flush()?;
    Ok(())
}

pub fn cmd_bounds(args: BoundsArgs, cfg: &Config) -> Result<Status, CliError> {
    let format = cfg.or(args.format.clone(), "format", "csv".to_string())?;
    if format != "csv" && format != "json" {
        return Err(CliError::Usage(format!(
            "--format must be csv or json, got `{format}`"
        )));
    }
    let rows = build_rows(&args.curves, cfg, None, None, "both")?;
    let mut buf = Vec::new();
    if format == "csv" {
        write_csv(&mut buf, &rows)?;
    } else {
        let v: Vec<_> = rows.iter().map(Row::json).collect();
        serde_json::to_writer_pretty(&mut buf, &v)?;
        buf.push(b'\n');
    }
    match &args.out {
        Some(p) => {
            std::fs::write(p, &buf).map_err(|e| io_error(p, e))?;
            eprintln!("wrote {} rows to {}", rows.len(), p.display());
        }
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(Status::Ok)
}

fn io_error(p: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("cannot write {}: {e}", p.display()))
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = OsString::from(prefix.as_os_str());
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn series_style(family: Family, side: Side) -> (&'static str, &'static str) {
    match (family, side) {
        (Family::Heat, Side::Lower) => ("heat l.b.", "#d62728"),
        (Family::Heat, Side::Upper) => ("heat u.b.", "#ff7f0e"),
        (Family::Max, Side::Lower) => ("max l.b.", "#1f77b4"),
        (Family::Max, Side::Upper) => ("max u.b.", "#9467bd"),
        (Family::ExpWeights, _) => ("exp weights u.b.", "#2ca02c"),
    }
}

fn figure_series(rows: &[Row]) -> Vec<Series> {
    let mut series: Vec<Series> = Vec::new();
    for r in rows {
        let rep = &r.report;
        let inflated = rep.error_term > 0.0;
        let (name, color) = series_style(rep.family, rep.side);
        let label = if inflated {
            format!("{name} with E ({})", rep.error_mode.name())
        } else {
            format!("{name}, E = 0")
        };
        let label = if rep.family == Family::ExpWeights {
            name.to_string()
        } else {
            label
        };
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((rep.n as f64, rep.c_n)),
            None => series.push(Series {
                label,
                color,
                dashed: inflated,
                points: vec![(rep.n as f64, rep.c_n)],
            }),
        }
    }
    let mut seen = Vec::new();
    let mut upper = Vec::new();
    let mut ew_lower = Vec::new();
    for r in rows {
        if seen.contains(&r.report.n) {
            continue;
        }
        seen.push(r.report.n);
        let s = r.report.delta.sqrt();
        upper.push((r.report.n as f64, r.curves.gravin_upper * s));
        ew_lower.push((r.report.n as f64, r.curves.gravin_ew_lower_asymptote * s));
    }
    series.push(Series {
        label: "Gravin et al. u.b.".into(),
        color: "#7f7f7f",
        dashed: true,
        points: upper,
    });
    series.push(Series {
        label: "exp weights l.b. (asymptotic)".into(),
        color: "#000000",
        dashed: true,
        points: ew_lower,
    });
    series
}

pub fn cmd_figure(args: FigureArgs, cfg: &Config) -> Result<Status, CliError> {
    let log_x = cfg.switch(args.log_x, "log-x")?;
    let rows = build_rows(
        &args.curves,
        cfg,
        Some(FIGURE_RANGE),
        Some(FIGURE_DELTA),
        "none",
    )?;
    if rows.is_empty() {
        return Err(CliError::Usage("no curves selected".into()));
    }
    let delta = rows[0].report.delta;
    let title = format!(
        "C_N = sqrt(delta) x regret bound, 1/delta = {}",
        1.0 / delta
    );
    let svg = line_plot(
        &title,
        "N (number of experts)",
        "C_N",
        &figure_series(&rows),
        log_x,
    );
    let prefix = args.out.unwrap_or_else(|| PathBuf::from("geostop_figure"));
    let svg_path = with_extension(&prefix, "svg");
    let csv_path = with_extension(&prefix, "csv");
    std::fs::write(&svg_path, svg).map_err(|e| io_error(&svg_path, e))?;
    let file = std::fs::File::create(&csv_path).map_err(|e| io_error(&csv_path, e))?;
    write_csv(file, &rows)?;
    eprintln!("wrote {} and {}", svg_path.display(), csv_path.display());
    Ok(Status::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2:50").unwrap(), (2, 50));
        assert_eq!(parse_range(" 3 : 3 ").unwrap(), (3, 3));
        for bad in ["1:4", "5:4", "2-4", "a:b"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn extension_appended() {
        assert_eq!(
            with_extension(Path::new("out/fig.v1"), "svg"),
            PathBuf::from("out/fig.v1.svg")
        );
    }
}
