use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use cohtherm_core::analysis::{
    classify_with, cop, default_curve_axis, efficiency, hybrid_metrics, max_efficiency,
    power_efficiency_curve, reference_bounds, sweep_diagram, GridAxis, HybridMetrics,
    MaxEfficiency, PowerCurve, ReferenceBounds, RegimeLabel, DEFAULT_REGIME_TOL,
};
use cohtherm_core::collision::{
    rate_limits, run, Extrapolation, DEFAULT_TAU_LADDER, TRAJECTORY_COLUMNS,
};
use cohtherm_core::lindblad::EffectiveCoherence;
use cohtherm_core::output::{json_string, write_csv, Cell, Table};
use cohtherm_core::thermo::{thermo_report, REPORT_COLUMNS};
use cohtherm_core::verify::{run_suite, VerifyOptions};
use cohtherm_core::{
    steady_state_analytic, steady_state_numeric, DensityMatrix, Error, MachineParams, Result,
    ThermoReport,
};

use crate::{Command, Common, Format, Preset};

/// Runs one command; the value is the process exit status.
pub fn dispatch(command: &Command) -> Result<u8> {
    match command {
        Command::SteadyState(c) => steady_state(c),
        Command::Currents(c) => currents(c),
        Command::Diagram(a) => diagram(&a.common, &a.grid),
        Command::Curve(a) => curve(&a.common, a.grid.as_deref(), &a.epsilons),
        Command::Collide(a) => collide(&a.common, a.tau, a.collisions),
        Command::Rates(a) => rates(&a.common, a.tau_ladder.as_deref()),
        Command::Verify(a) => verify(&a.common, a.seed, a.tau_ladder.as_deref(), a.draws),
    }
    .map(|()| 0)
    .or_else(|e| match e {
        Failure::Violation => Ok(1),
        Failure::Error(e) => Err(e),
    })
}

enum Failure {
    Error(Error),
    Violation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn config_error(msg: String) -> Error {
    Error::InvalidConfig(vec![msg])
}

/// Resolves the parameter set: file or preset (default: cold-bath coherence),
/// then `--set` overrides, then validation.
pub fn load_params(common: &Common) -> Result<MachineParams> {
    let mut params = match (&common.config, common.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
            MachineParams::from_config_str(&text)?
        }
        (None, Some(Preset::HotCoherent)) => MachineParams::hot_coherent_reference(),
        (None, _) => MachineParams::cold_coherent_reference(),
    };
    let mut problems = Vec::new();
    for item in &common.overrides {
        let parsed = item
            .split_once('=')
            .and_then(|(k, v)| v.trim().parse::<f64>().ok().map(|v| (k.trim(), v)));
        match parsed {
            Some((key, value)) => {
                if let Err(Error::InvalidConfig(p)) = params.set(key, value) {
                    problems.extend(p);
                }
            }
            None => problems.push(format!("--set expects KEY=NUMBER (got `{item}`)")),
        }
    }
    if !problems.is_empty() {
        return Err(Error::InvalidConfig(problems));
    }
    params.validate()?;
    Ok(params)
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| config_error(format!("{what}: `{}` is not a number", s.trim())))
        })
        .collect()
}

fn tau_ladder(text: Option<&str>) -> Result<Vec<f64>> {
    let ladder = match text {
        Some(t) => parse_list(t, "--tau-ladder")?,
        None => DEFAULT_TAU_LADDER.to_vec(),
    };
    cohtherm_core::collision::check_ladder(&ladder).map_err(|e| config_error(e.to_string()))?;
    Ok(ladder)
}

fn regime_tolerance(common: &Common) -> Result<f64> {
    match common.tolerance {
        None => Ok(DEFAULT_REGIME_TOL),
        Some(t) if t.is_finite() && t >= 0.0 => Ok(t),
        Some(t) => Err(config_error(format!(
            "--tolerance must be finite and >= 0 (got {t})"
        ))),
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            fs::File::create(p)
                .map_err(|e| Error::Io(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// Writes `table` as CSV or `result` as JSON to `--out` or stdout.
fn emit<T: Serialize>(
    common: &Common,
    params: Option<&MachineParams>,
    notes: &[String],
    table: &Table,
    result: &T,
) -> Result<()> {
    let mut out = open_out(common.out.as_deref())?;
    match common.format {
        Format::Csv => write_csv(&mut out, params, notes, table)?,
        Format::Json => writeln!(out, "{}", json_string(params, result)?)?,
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct StateEntries {
    rho11: f64,
    rho22: f64,
    rho12_re: f64,
    rho12_im: f64,
}

impl StateEntries {
    fn of(rho: &DensityMatrix) -> Self {
        Self {
            rho11: rho[(0, 0)].re,
            rho22: rho[(1, 1)].re,
            rho12_re: rho[(0, 1)].re,
            rho12_im: rho[(0, 1)].im,
        }
    }

    fn cells(&self) -> [Cell; 4] {
        [self.rho11, self.rho22, self.rho12_re, self.rho12_im].map(Cell::Num)
    }
}

#[derive(Serialize)]
struct SteadyStateOutput {
    analytic: StateEntries,
    numeric: StateEntries,
    max_deviation: f64,
    effective_coherence: EffectiveCoherence,
}

fn steady_state(common: &Common) -> Outcome {
    let params = load_params(common)?;
    let analytic = steady_state_analytic(&params).rho;
    let numeric = steady_state_numeric(&params)?.rho;
    let eff = EffectiveCoherence::new(&params);
    let result = SteadyStateOutput {
        analytic: StateEntries::of(&analytic),
        numeric: StateEntries::of(&numeric),
        max_deviation: analytic.matrix().max_abs_diff(numeric.matrix()),
        effective_coherence: eff,
    };
    let mut table = Table::new(["method", "rho11", "rho22", "rho12_re", "rho12_im"]);
    for (name, s) in [("analytic", &result.analytic), ("numeric", &result.numeric)] {
        let mut row = vec![Cell::Text(name.into())];
        row.extend(s.cells());
        table.push(row);
    }
    let notes = vec![
        format!(
            "max_deviation: {}",
            cohtherm_core::output::format_number(result.max_deviation)
        ),
        format!(
            "effective_coherence: eps_eff={:?};phi={:?};gamma_eff={:?};n_avg={:?}",
            eff.eps_eff, eff.phi, eff.gamma_eff, eff.n_avg
        ),
    ];
    emit(common, Some(&params), &notes, &table, &result)?;
    Ok(())
}

#[derive(Serialize)]
struct CurrentsOutput {
    report: ThermoReport,
    label: RegimeLabel,
    regime: String,
    first_law_residual: f64,
    efficiency: Option<f64>,
    cop: Option<f64>,
    hybrid: Option<HybridMetrics>,
}

fn currents(common: &Common) -> Outcome {
    let params = load_params(common)?;
    let tol = regime_tolerance(common)?;
    let rho = steady_state_analytic(&params).rho;
    let report = thermo_report(&params, &rho);
    let label = classify_with(&report, &params, tol);
    let result = CurrentsOutput {
        report,
        label,
        regime: label.to_string(),
        first_law_residual: report.first_law_residual(),
        efficiency: efficiency(&report, label).ok(),
        cop: cop(&report, &params, label).ok(),
        hybrid: hybrid_metrics(&report, &params, label),
    };
    let mut cols = vec!["regime".to_string(), "beyond_carnot".to_string()];
    cols.extend(REPORT_COLUMNS.map(String::from));
    cols.extend(["efficiency", "cop"].map(String::from));
    let mut table = Table::new(cols);
    let mut row = vec![
        Cell::Text(label.base.code().into()),
        Cell::Bool(label.beyond_carnot),
    ];
    row.extend(report.csv_row().into_iter().map(Cell::from));
    row.push(result.efficiency.into());
    row.push(result.cop.into());
    table.push(row);
    emit(common, Some(&params), &[], &table, &result)?;
    Ok(())
}

fn parse_axes(specs: &[String]) -> Result<Vec<GridAxis>> {
    specs.iter().map(|s| s.parse()).collect()
}

fn axis_note(axes: &[GridAxis]) -> String {
    let parts: Vec<String> = axes
        .iter()
        .map(|a| format!("{}:{:?}:{:?}:{}", a.key, a.min, a.max, a.steps))
        .collect();
    format!("grid: {}", parts.join(";"))
}

/// `dir/stem.name.csv` next to the main output file.
fn overlay_path(out: &Path, name: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{name}.csv"))
}

fn diagram(common: &Common, grid: &[String]) -> Outcome {
    let params = load_params(common)?;
    let axes = parse_axes(grid)?;
    let [a1, a2] = &axes[..] else {
        return Err(config_error(format!(
            "diagram needs exactly two --grid axes (got {})",
            axes.len()
        ))
        .into());
    };
    // a non-default tolerance needs re-labelling of every record
    let tol = regime_tolerance(common)?;
    let mut d = sweep_diagram(&params, a1, a2)?;
    if tol != DEFAULT_REGIME_TOL {
        for r in &mut d.records {
            let mut p = params;
            p.set(&a1.key, r.values[0])?;
            p.set(&a2.key, r.values[1])?;
            r.label = classify_with(&r.report, &p, tol);
            r.efficiency = efficiency(&r.report, r.label).ok();
            r.cop = cop(&r.report, &p, r.label).ok();
            r.hybrid = hybrid_metrics(&r.report, &p, r.label);
        }
    }
    let notes = vec![axis_note(&axes)];
    emit(common, Some(&params), &notes, &d.table(), &d)?;
    if let (Format::Csv, Some(out)) = (common.format, common.out.as_deref()) {
        for overlay in &d.overlays {
            let path = overlay_path(out, &overlay.name);
            let mut f = open_out(Some(&path))?;
            let overlay_notes = [notes[0].clone(), format!("overlay: {}", overlay.name)];
            write_csv(
                &mut f,
                Some(&params),
                &overlay_notes,
                &overlay.table(&d.axes),
            )?;
            f.flush().map_err(Error::from)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CurveEntry {
    epsilon1: f64,
    curve: PowerCurve,
    max_efficiency: Option<MaxEfficiency>,
}

#[derive(Serialize)]
struct CurveOutput {
    bounds: Option<ReferenceBounds>,
    curves: Vec<CurveEntry>,
}

fn curve(common: &Common, grid: Option<&str>, epsilons: &str) -> Outcome {
    let params = load_params(common)?;
    let axis = match grid {
        Some(g) => g.parse()?,
        None => default_curve_axis(),
    };
    let eps = parse_list(epsilons, "--epsilons")?;
    let mut curves = Vec::new();
    for &e in &eps {
        let mut p = params;
        p.bath1.epsilon = e;
        p.validate()?;
        curves.push(CurveEntry {
            epsilon1: e,
            curve: power_efficiency_curve(&p, &axis)?,
            max_efficiency: (e > 0.0).then(|| max_efficiency(&p, e).ok()).flatten(),
        });
    }
    let result = CurveOutput {
        bounds: reference_bounds(&params).ok(),
        curves,
    };
    let mut table = Table::new([
        "epsilon1",
        axis.key.as_str(),
        "efficiency",
        "power",
        "beyond_carnot",
    ]);
    for c in &result.curves {
        for p in &c.curve.points {
            table.push(vec![
                Cell::Num(c.epsilon1),
                Cell::Num(p.value),
                Cell::Num(p.efficiency),
                Cell::Num(p.power),
                Cell::Bool(p.beyond_carnot),
            ]);
        }
    }
    let mut notes = vec![axis_note(std::slice::from_ref(&axis))];
    if let Some(b) = result.bounds {
        notes.push(format!(
            "bounds: eta_carnot={:?};cop_carnot={:?};eta_curzon_ahlborn={:?}",
            b.eta_carnot, b.cop_carnot, b.eta_curzon_ahlborn
        ));
    }
    for c in &result.curves {
        if let Some(mp) = &c.curve.max_power {
            notes.push(format!(
                "max_power: epsilon1={:?};{}={:?};efficiency={:?}",
                c.epsilon1, axis.key, mp.value, mp.efficiency
            ));
        }
        if let Some(m) = &c.max_efficiency {
            notes.push(format!(
                "max_efficiency: epsilon1={:?};bath2.B={:?};eta={:?}",
                c.epsilon1, m.field2, m.eta_max
            ));
        }
    }
    emit(common, Some(&params), &notes, &table, &result)?;
    Ok(())
}

#[derive(Serialize)]
struct CollideOutput<'a> {
    tau: f64,
    collisions: usize,
    points: &'a [cohtherm_core::collision::TrajectoryPoint],
}

fn collide(common: &Common, tau: f64, collisions: usize) -> Outcome {
    let params = load_params(common)?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(config_error(format!("--tau must be > 0 (got {tau})")).into());
    }
    if collisions == 0 {
        return Err(config_error("--collisions must be >= 1".into()).into());
    }
    let rho0 = DensityMatrix::maximally_mixed(2)?;
    let traj = run(&rho0, &params, tau, collisions).map_err(|e| match e {
        Error::AncillaPositivity { .. } => config_error(e.to_string()),
        other => other,
    })?;
    let mut table = Table::new(TRAJECTORY_COLUMNS);
    for (p, row) in traj.points.iter().zip(traj.rows()) {
        let mut cells = vec![Cell::Int(p.collision as u64)];
        cells.extend(row.into_iter().skip(1).map(Cell::from));
        table.push(cells);
    }
    let notes = vec![
        format!("tau: {tau:?}"),
        "initial_state: maximally_mixed".to_string(),
    ];
    let result = CollideOutput {
        tau,
        collisions,
        points: &traj.points,
    };
    emit(common, Some(&params), &notes, &table, &result)?;
    Ok(())
}

#[derive(Serialize)]
struct RateRow {
    quantity: &'static str,
    extrapolation: Extrapolation,
    /// Short-collision closed form where one exists.
    closed_form: Option<f64>,
}

fn rates(common: &Common, ladder: Option<&str>) -> Outcome {
    let params = load_params(common)?;
    let taus = tau_ladder(ladder)?;
    let rho = steady_state_analytic(&params).rho;
    let limits = rate_limits(&params, &rho, &taus).map_err(|e| match e {
        Error::AncillaPositivity { .. } => config_error(e.to_string()),
        other => other,
    })?;
    let report = thermo_report(&params, &rho);
    let rows = vec![
        RateRow {
            quantity: "Q1",
            extrapolation: limits.heat[0].clone(),
            closed_form: Some(report.heat1.total),
        },
        RateRow {
            quantity: "Q2",
            extrapolation: limits.heat[1].clone(),
            closed_form: Some(report.heat2.total),
        },
        RateRow {
            quantity: "W",
            extrapolation: limits.work.clone(),
            closed_form: Some(report.power.total),
        },
        RateRow {
            quantity: "C1_rate",
            extrapolation: limits.coherence[0].clone(),
            closed_form: report.coherence_rate1,
        },
        RateRow {
            quantity: "C2_rate",
            extrapolation: limits.coherence[1].clone(),
            closed_form: report.coherence_rate2,
        },
        RateRow {
            quantity: "S1_rel",
            extrapolation: limits.relative_entropy[0].clone(),
            closed_form: Some(params.bath1.beta() * report.heat1.coherent)
                .zip(report.coherence_rate1)
                .map(|(a, b)| a + b),
        },
        RateRow {
            quantity: "S2_rel",
            extrapolation: limits.relative_entropy[1].clone(),
            closed_form: Some(params.bath2.beta() * report.heat2.coherent)
                .zip(report.coherence_rate2)
                .map(|(a, b)| a + b),
        },
        RateRow {
            quantity: "S_env_rel",
            extrapolation: limits.env_relative_entropy.clone(),
            closed_form: None,
        },
        RateRow {
            quantity: "I_env",
            extrapolation: limits.mutual_information.clone(),
            closed_form: None,
        },
    ];
    let mut cols: Vec<String> = [
        "quantity",
        "limit",
        "error_estimate",
        "dominant_order",
        "closed_form",
    ]
    .map(String::from)
    .to_vec();
    cols.extend(taus.iter().map(|t| format!("tau={t:?}")));
    let mut table = Table::new(cols);
    for r in &rows {
        let e = &r.extrapolation;
        let mut cells = vec![
            Cell::Text(r.quantity.into()),
            Cell::Num(e.limit),
            Cell::Num(e.error_estimate),
            Cell::Num(e.dominant_order),
            r.closed_form.into(),
        ];
        cells.extend(e.samples.iter().map(|s| Cell::Num(s.1)));
        table.push(cells);
    }
    emit(common, Some(&params), &[], &table, &rows)?;
    Ok(())
}

fn verify(common: &Common, seed: u64, ladder: Option<&str>, draws: Option<usize>) -> Outcome {
    let params = load_params(common)?;
    let options = VerifyOptions {
        seed,
        tau_ladder: tau_ladder(ladder)?,
        threshold_scale: common.tolerance.unwrap_or(1.0),
        draws,
    };
    let report = run_suite(&params, &options)?;
    let notes = vec![format!("seed: {seed}")];
    emit(common, Some(&params), &notes, &report.table(), &report)?;
    let failed: Vec<&str> = report.failures().map(|c| c.name).collect();
    if failed.is_empty() {
        eprintln!("verify: all {} checks passed", report.checks.len());
        Ok(())
    } else {
        eprintln!(
            "verify: {} of {} checks failed: {}",
            failed.len(),
            report.checks.len(),
            failed.join(", ")
        );
        Err(Failure::Violation)
    }
}
