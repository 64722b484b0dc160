use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use twobody_qsl::bounds::{
    energy_for_deadline, ghz_two_body_time, mt_bound, sequential_ghz_time,
};
use twobody_qsl::optimizer::{
    in_units_of_pi, minimal_time, present_fidelity, sweep_with_progress, threshold_time,
    FidelityCurve, ProgressEvent,
};
use twobody_qsl::reference::{
    catalog, component_table, reference_hamiltonian, verify_entry, ClaimPrecision, GraphKind,
    StateFamily,
};
use twobody_qsl::states::{zero_state, TargetState};

use crate::config::{Overrides, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{emit, ensure_dir, fmt_f64, write_json, write_text, Table};

pub const CURVE_FILE: &str = "curve.tsv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";

/// Largest energy spread of a unit-bandwidth Hamiltonian.
const MAX_NORMALIZED_SPREAD: f64 = 0.5;

pub fn curve_table(curve: &FidelityCurve) -> Table {
    let mut header = vec!["t".to_string(), "fidelity".into(), "evaluations".into()];
    header.extend(curve.parameter_labels.iter().cloned());
    let mut table = Table::new(header);
    for p in &curve.points {
        let mut row = vec![fmt_f64(p.time), fmt_f64(p.fidelity), p.evaluations.to_string()];
        row.extend(p.params.iter().map(|x| fmt_f64(*x)));
        table.push(row);
    }
    table
}

#[derive(Debug, Serialize)]
struct PointSummary {
    time: f64,
    time_over_pi: f64,
    fidelity: f64,
    fidelity_rounded: f64,
}

#[derive(Debug, Serialize)]
struct ThresholdSummary {
    level: f64,
    time: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    target: String,
    sites: usize,
    parameters: usize,
    points: usize,
    epsilon: f64,
    minimal_time: Option<f64>,
    minimal_time_over_pi: Option<f64>,
    max_fidelity: Option<PointSummary>,
    thresholds: Vec<ThresholdSummary>,
}

#[derive(Debug, Serialize)]
struct OutputPaths {
    curve: PathBuf,
    summary: PathBuf,
    config: PathBuf,
    manifest: PathBuf,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    threads: usize,
    config: RunConfig,
    started_unix_seconds: u64,
    wall_clock_seconds: f64,
    outputs: OutputPaths,
}

pub struct SweepArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub overrides: Overrides,
    pub progress: bool,
}

pub fn sweep(args: &SweepArgs) -> CliResult<()> {
    let mut run = RunConfig::load(&args.config)?;
    run.apply(args.overrides);
    let cfg = run.to_optimize_config().map_err(|message| CliError::Config {
        path: args.config.clone(),
        message,
    })?;
    ensure_dir(&args.out)?;

    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let report = |e: &ProgressEvent| {
        if args.progress {
            if let Ok(line) = serde_json::to_string(e) {
                let mut err = std::io::stderr().lock();
                let _ = writeln!(err, "{line}");
            }
        }
    };
    let curve = sweep_with_progress(&cfg, &report)?;
    let wall = clock.elapsed().as_secs_f64();

    let paths = OutputPaths {
        curve: args.out.join(CURVE_FILE),
        summary: args.out.join(SUMMARY_FILE),
        config: args.out.join(CONFIG_FILE),
        manifest: args.out.join(MANIFEST_FILE),
    };
    write_text(&paths.curve, &curve_table(&curve).render())?;

    let t_min = minimal_time(&curve, cfg.epsilon);
    let summary = SweepSummary {
        target: cfg.target.to_string(),
        sites: cfg.n_sites,
        parameters: curve.parameter_labels.len(),
        points: curve.points.len(),
        epsilon: cfg.epsilon,
        minimal_time: t_min,
        minimal_time_over_pi: t_min.map(in_units_of_pi),
        max_fidelity: curve.max_fidelity().map(|p| PointSummary {
            time: p.time,
            time_over_pi: in_units_of_pi(p.time),
            fidelity: p.fidelity,
            fidelity_rounded: present_fidelity(p.fidelity),
        }),
        thresholds: run
            .report
            .threshold_levels
            .iter()
            .map(|&level| ThresholdSummary {
                level,
                time: threshold_time(&curve, level),
            })
            .collect(),
    };
    write_json(&paths.summary, &summary)?;
    write_text(&paths.config, &run.to_toml())?;

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "sweep",
        seed: cfg.seed,
        threads: rayon::current_num_threads(),
        config: run,
        started_unix_seconds: started,
        wall_clock_seconds: wall,
        outputs: paths,
    };
    write_json(&manifest.outputs.manifest, &manifest)?;

    match (t_min, curve.max_fidelity()) {
        (Some(t), _) => println!(
            "minimal time {} ({:.6} pi), {} points",
            fmt_f64(t),
            in_units_of_pi(t),
            curve.points.len()
        ),
        (None, Some(best)) => println!(
            "no unit fidelity on the grid; best {:.6} at t = {}",
            present_fidelity(best.fidelity),
            fmt_f64(best.time)
        ),
        (None, None) => println!("empty grid"),
    }
    Ok(())
}

pub fn verify(family: StateFamily, n_sites: usize, graph: GraphKind, out: Option<&Path>) -> CliResult<()> {
    let entry = reference_hamiltonian(family, n_sites, graph)?;
    let report = verify_entry(&entry)?;
    println!("{}", report.label);
    println!("  hamiltonian      {}", entry.expression);
    println!(
        "  claimed time     {} = {:.6}{}",
        entry.time_expression,
        report.claimed_time,
        if report.precision == ClaimPrecision::Approximate { " (approx.)" } else { "" }
    );
    println!(
        "  printed spectrum [{:.9}, {:.9}]{}",
        report.printed_min,
        report.printed_max,
        if report.printed_in_unit_band { "" } else { "  (not unit bandwidth)" }
    );
    println!("  fidelity         {:.6} at t = {:.6}", present_fidelity(report.best_fidelity), report.best_time);
    println!("  energy spread    {:.9}", report.delta_h);
    println!("  distinct levels  {}", report.distinct_levels);
    for note in &report.notes {
        println!("  note: {note}");
    }
    let verdict = if report.passed { "PASS" } else { "FAIL" };
    println!("{verdict} (tolerance {:e})", report.tolerance);
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_json(&dir.join("verify.json"), &report)?;
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::ClaimFailed(format!(
            "{}: fidelity {} below 1 - {:e}",
            report.label, report.best_fidelity, report.tolerance
        )))
    }
}

#[derive(Debug, Serialize)]
struct BoundReport {
    state: String,
    sites: usize,
    overlap: f64,
    delta_h: f64,
    mandelstam_tamm: f64,
    two_body: Option<f64>,
    sequential: Option<f64>,
}

pub fn bound(state: TargetState, n_sites: usize, out: Option<&Path>) -> CliResult<()> {
    let target = state.build(n_sites)?;
    let overlap = zero_state(n_sites)?.inner(&target)?.norm().min(1.0);
    let mt = mt_bound(overlap, MAX_NORMALIZED_SPREAD)?;
    let (two_body, sequential) = match state {
        TargetState::Ghz => (ghz_two_body_time(n_sites).ok(), sequential_ghz_time(n_sites).ok()),
        _ => (None, None),
    };
    let report = BoundReport {
        state: state.to_string(),
        sites: n_sites,
        overlap,
        delta_h: MAX_NORMALIZED_SPREAD,
        mandelstam_tamm: mt,
        two_body,
        sequential,
    };
    let line = |name: &str, t: f64| println!("{name:<16}{}  ({:.6} pi)", fmt_f64(t), in_units_of_pi(t));
    println!("{:<16}{}", "state", report.state);
    println!("{:<16}{}", "sites", n_sites);
    println!("{:<16}{}", "overlap", fmt_f64(overlap));
    println!("{:<16}{}", "delta_h", fmt_f64(MAX_NORMALIZED_SPREAD));
    line("mandelstam_tamm", mt);
    if let Some(t) = two_body {
        line("two_body", t);
    }
    if let Some(t) = sequential {
        line("sequential", t);
    }
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_json(&dir.join("bound.json"), &report)?;
    }
    Ok(())
}

/// Evenly spaced times from `start` to `end` inclusive.
pub fn time_points(start: f64, end: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(start.is_finite() && end.is_finite() && end >= start) {
        return Err(CliError::Usage(format!("invalid time range [{start}, {end}]")));
    }
    if start == end {
        return Ok(vec![start]);
    }
    if !(step > 0.0) {
        return Err(CliError::Usage(format!("time step must be positive, got {step}")));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| start + k as f64 * step).collect())
}

pub struct TimeRange {
    pub start: f64,
    pub end: Option<f64>,
    pub step: f64,
}

pub fn components(
    family: StateFamily,
    n_sites: usize,
    graph: GraphKind,
    range: &TimeRange,
    out: Option<&Path>,
) -> CliResult<()> {
    let entry = reference_hamiltonian(family, n_sites, graph)?;
    let times = time_points(range.start, range.end.unwrap_or(entry.claimed_time), range.step)?;
    let comp = component_table(&entry, &times)?;
    let mut header = vec!["t".to_string()];
    header.extend(comp.labels.iter().cloned());
    let mut table = Table::new(header);
    for (t, row) in comp.times.iter().zip(&comp.rows) {
        let mut cells = vec![fmt_f64(*t)];
        cells.extend(row.iter().map(|f| fmt_f64(*f)));
        table.push(cells);
    }
    emit(out, "components.tsv", &table.render())?;
    Ok(())
}

/// Minimal time at unit bandwidth from the explicit value, a sweep summary,
/// the GHZ formula or the catalog, in that order.
pub fn resolve_t_min(
    family: StateFamily,
    n_sites: usize,
    explicit: Option<f64>,
    summary: Option<&Path>,
) -> CliResult<f64> {
    if let Some(t) = explicit {
        return Ok(t);
    }
    if let Some(path) = summary {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        return value["minimal_time"].as_f64().ok_or_else(|| CliError::Config {
            path: path.to_path_buf(),
            message: "summary has no minimal_time".into(),
        });
    }
    if family == StateFamily::Ghz {
        if let Ok(t) = ghz_two_body_time(n_sites) {
            return Ok(t);
        }
    }
    reference_hamiltonian(family, n_sites, GraphKind::Complete)
        .map(|e| e.claimed_time)
        .map_err(|_| {
            CliError::Usage(format!(
                "no known minimal time for {family} N={n_sites}; pass --t-min or --summary"
            ))
        })
}

pub fn tradeoff(
    family: StateFamily,
    n_sites: usize,
    t_min: f64,
    range: &TimeRange,
    out: Option<&Path>,
) -> CliResult<()> {
    let end = range
        .end
        .ok_or_else(|| CliError::Usage("tradeoff needs --end".into()))?;
    let times = time_points(range.start, end, range.step)?;
    let mut table = Table::new(["t", "energy_range"]);
    for t in times {
        if t <= 0.0 {
            continue;
        }
        table.push(vec![fmt_f64(t), fmt_f64(energy_for_deadline(t_min, t)?)]);
    }
    eprintln!("{family} N={n_sites}: unit-bandwidth minimal time {} ({:.6} pi)", fmt_f64(t_min), t_min / PI);
    emit(out, "tradeoff.tsv", &table.render())?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct CatalogRecord {
    label: String,
    family: StateFamily,
    sites: usize,
    graph: GraphKind,
    expression: &'static str,
    claimed_time: f64,
    time_expression: &'static str,
    precision: ClaimPrecision,
    /// Row-major `[re, im]` pairs.
    matrix: Vec<Vec<[f64; 2]>>,
}

pub fn catalog_dump(out: Option<&Path>) -> CliResult<()> {
    let records: Vec<CatalogRecord> = catalog()
        .into_iter()
        .map(|e| {
            let m = e.hamiltonian.matrix();
            CatalogRecord {
                label: e.label(),
                family: e.family,
                sites: e.n_sites,
                graph: e.graph,
                expression: e.expression,
                claimed_time: e.claimed_time,
                time_expression: e.time_expression,
                precision: e.precision,
                matrix: (0..m.nrows())
                    .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
                    .collect(),
            }
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&records)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    emit(out, "catalog.json", &text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_points_cover_range() {
        assert_eq!(time_points(0.0, 0.0, 0.1).unwrap(), vec![0.0]);
        assert_eq!(time_points(0.0, 1.0, 0.25).unwrap().len(), 5);
        assert_eq!(time_points(0.0, 0.3, 0.1).unwrap().len(), 4);
        assert!(time_points(1.0, 0.0, 0.1).is_err());
        assert!(time_points(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn t_min_sources() {
        assert_eq!(resolve_t_min(StateFamily::Ghz, 3, None, None).unwrap(), 2.0 * PI);
        assert_eq!(resolve_t_min(StateFamily::Ghz, 3, Some(1.5), None).unwrap(), 1.5);
        let w5 = resolve_t_min(StateFamily::W, 5, None, None).unwrap();
        assert!((w5 - 9.0 * PI / 5f64.sqrt()).abs() < 1e-12);
        assert!(resolve_t_min(StateFamily::W, 9, None, None).is_err());
    }
}
