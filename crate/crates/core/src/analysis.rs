//! Operating regimes, figures of merit, boundary curves and sweeps.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Bath, MachineParams, CONFIG_KEYS};
use crate::output::{Cell, Table};
use crate::thermo::{common_factor_v_at, steady_report, ThermoReport, REPORT_COLUMNS};

/// Default relative tolerance for treating a current as zero.
pub const DEFAULT_REGIME_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Engine,
    Refrigerator,
    Accelerator,
    HybridRefrigerator,
    CarnotPoint,
}

impl Regime {
    pub fn code(self) -> &'static str {
        match self {
            Regime::Engine => "E",
            Regime::Refrigerator => "R",
            Regime::Accelerator => "A",
            Regime::HybridRefrigerator => "HR",
            Regime::CarnotPoint => "C",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct RegimeLabel {
    pub base: Regime,
    /// Engine above `η_C` or refrigerator above `COP_C`.
    pub beyond_carnot: bool,
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}",
            self.base.code(),
            if self.beyond_carnot { "'" } else { "" }
        )
    }
}

/// The colder bath; bath 1 when the temperatures are equal.
pub fn cold_bath(params: &MachineParams) -> Bath {
    if params.bath1.temperature <= params.bath2.temperature {
        Bath::One
    } else {
        Bath::Two
    }
}

fn hot_bath(params: &MachineParams) -> Bath {
    match cold_bath(params) {
        Bath::One => Bath::Two,
        Bath::Two => Bath::One,
    }
}

fn sign(x: f64, tol: f64) -> i8 {
    if x > tol {
        1
    } else if x < -tol {
        -1
    } else {
        0
    }
}

/// Absolute current tolerance `rel · γ · max(B, B₁, B₂)`.
pub fn current_tolerance(params: &MachineParams, rel: f64) -> f64 {
    rel * params.gamma * params.field.max(params.bath1.field).max(params.bath2.field)
}

/// Sign-table classification of a set of currents.
///
/// With bath 1 colder (or equal): `(Ẇ, Q̇₁, Q̇₂)` = `(-,-,+)` engine,
/// `(-,+,-)` hybrid refrigerator, `(+,-,+)` accelerator, `(+,+,-)`
/// refrigerator. With bath 1 hotter the heat signs swap. Any other triple,
/// including one with a current inside the tolerance, is a Carnot point.
pub fn classify_with(report: &ThermoReport, params: &MachineParams, rel_tol: f64) -> RegimeLabel {
    let tol = current_tolerance(params, rel_tol);
    let w = sign(report.power.total, tol);
    let (q_cold, q_hot) = match cold_bath(params) {
        Bath::One => (report.heat1.total, report.heat2.total),
        Bath::Two => (report.heat2.total, report.heat1.total),
    };
    let base = match (w, sign(q_cold, tol), sign(q_hot, tol)) {
        (-1, -1, 1) => Regime::Engine,
        (-1, 1, -1) => Regime::HybridRefrigerator,
        (1, -1, 1) => Regime::Accelerator,
        (1, 1, -1) => Regime::Refrigerator,
        _ => Regime::CarnotPoint,
    };
    let (t_cold, t_hot) = temperatures(params);
    let beyond_carnot = match base {
        Regime::Engine => -report.power.total / q_hot > 1.0 - t_cold / t_hot,
        Regime::Refrigerator => {
            t_hot > t_cold && q_cold / report.power.total > t_cold / (t_hot - t_cold)
        }
        _ => false,
    };
    RegimeLabel {
        base,
        beyond_carnot,
    }
}

pub fn classify(report: &ThermoReport, params: &MachineParams) -> RegimeLabel {
    classify_with(report, params, DEFAULT_REGIME_TOL)
}

fn temperatures(params: &MachineParams) -> (f64, f64) {
    let t1 = params.bath1.temperature;
    let t2 = params.bath2.temperature;
    (t1.min(t2), t1.max(t2))
}

/// Coherence amplitude in bath 1 at which `V` vanishes; `None` when
/// `n₂ < n₁`, where no real boundary exists.
pub fn epsilon_star(params: &MachineParams) -> Option<f64> {
    let sq = epsilon_star_squared(params);
    (sq >= 0.0).then(|| sq.sqrt())
}

/// Signed `ε₁*²`, negative where `n₂ < n₁`.
fn epsilon_star_squared(params: &MachineParams) -> f64 {
    let (n1, n2) = params.occupations();
    let (b, g) = (params.field, params.gamma);
    let s = 1.0 + n1 + n2;
    (n2 - n1) * (b * b + s * s * g * g) / ((1.0 + 2.0 * n1) * s * g)
}

/// `1 - min(B₁,B₂)/max(B₁,B₂)`.
pub fn otto_efficiency(params: &MachineParams) -> f64 {
    let (b1, b2) = (params.bath1.field, params.bath2.field);
    1.0 - b1.min(b2) / b1.max(b2)
}

/// `-Ẇ / Q̇_in`, with `Q̇_in` the sum of positive heat currents.
pub fn efficiency(report: &ThermoReport, label: RegimeLabel) -> Result<f64> {
    if label.base != Regime::Engine {
        return Err(Error::Domain(format!(
            "efficiency is defined for engines only (regime {label})"
        )));
    }
    let q_in = report.heat1.total.max(0.0) + report.heat2.total.max(0.0);
    Ok(-report.power.total / q_in)
}

/// Closed-form `B_cold / (B_hot - B_cold)`.
pub fn cop_closed_form(params: &MachineParams) -> Result<f64> {
    let b_cold = params.bath(cold_bath(params)).field;
    let b_hot = params.bath(hot_bath(params)).field;
    if b_hot == b_cold {
        return Err(Error::Divergent("COP diverges at B1 = B2".into()));
    }
    Ok(b_cold / (b_hot - b_cold))
}

/// `Q̇_cold / Ẇ` for refrigerators and hybrid refrigerators.
pub fn cop(report: &ThermoReport, params: &MachineParams, label: RegimeLabel) -> Result<f64> {
    if !matches!(
        label.base,
        Regime::Refrigerator | Regime::HybridRefrigerator
    ) {
        return Err(Error::Domain(format!(
            "COP is defined for refrigerators only (regime {label})"
        )));
    }
    if params.bath1.field == params.bath2.field {
        return Err(Error::Divergent("COP diverges at B1 = B2".into()));
    }
    let q_cold = report.heat(cold_bath(params)).total;
    Ok(q_cold / report.power.total)
}

/// Figures of merit for the hybrid refrigerator, which both cools and
/// outputs work.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HybridMetrics {
    /// `Q̇_cold / |Ẇ|`.
    pub cooling_per_work: f64,
    /// `|Ẇ| / |Q̇_hot|`.
    pub work_per_rejected_heat: f64,
}

pub fn hybrid_metrics(
    report: &ThermoReport,
    params: &MachineParams,
    label: RegimeLabel,
) -> Option<HybridMetrics> {
    (label.base == Regime::HybridRefrigerator).then(|| {
        let w = report.power.total.abs();
        HybridMetrics {
            cooling_per_work: report.heat(cold_bath(params)).total / w,
            work_per_rejected_heat: w / report.heat(hot_bath(params)).total.abs(),
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReferenceBounds {
    pub eta_carnot: f64,
    pub cop_carnot: f64,
    pub eta_curzon_ahlborn: f64,
}

/// Carnot efficiency and COP and the Curzon-Ahlborn efficiency.
pub fn reference_bounds(params: &MachineParams) -> Result<ReferenceBounds> {
    let (tc, th) = temperatures(params);
    if tc == th {
        return Err(Error::Divergent(
            "COP_C diverges for equal temperatures".into(),
        ));
    }
    Ok(ReferenceBounds {
        eta_carnot: 1.0 - tc / th,
        cop_carnot: tc / (th - tc),
        eta_curzon_ahlborn: 1.0 - (tc / th).sqrt(),
    })
}

/// One swept parameter: `steps` evenly spaced values from `min` to `max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridAxis {
    pub key: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridAxis {
    pub fn new(key: &str, min: f64, max: f64, steps: usize) -> Result<Self> {
        let mut problems = Vec::new();
        if !CONFIG_KEYS.contains(&key) {
            problems.push(format!(
                "unknown axis key `{key}` (expected one of {})",
                CONFIG_KEYS.join(", ")
            ));
        }
        if !(min.is_finite() && max.is_finite()) {
            problems.push(format!("axis `{key}` bounds must be finite"));
        }
        if steps == 0 {
            problems.push(format!("axis `{key}` needs at least one step"));
        }
        if !problems.is_empty() {
            return Err(Error::InvalidConfig(problems));
        }
        Ok(Self {
            key: key.to_string(),
            min,
            max,
            steps,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.max
                } else {
                    self.min + h * k as f64
                }
            })
            .collect()
    }
}

impl FromStr for GridAxis {
    type Err = Error;

    /// `key:min:max:steps`.
    fn from_str(s: &str) -> Result<Self> {
        let bad =
            || Error::InvalidConfig(vec![format!("grid `{s}` must look like key:min:max:steps")]);
        let parts: Vec<&str> = s.split(':').collect();
        let [key, min, max, steps] = parts[..] else {
            return Err(bad());
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        let steps = steps.trim().parse::<usize>().map_err(|_| bad())?;
        GridAxis::new(key.trim(), num(min)?, num(max)?, steps)
    }
}

/// Steady state at one grid point and its interpretation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub values: Vec<f64>,
    pub report: ThermoReport,
    pub label: RegimeLabel,
    pub efficiency: Option<f64>,
    pub cop: Option<f64>,
    pub hybrid: Option<HybridMetrics>,
}

impl SweepRecord {
    pub fn evaluate(params: &MachineParams, values: Vec<f64>) -> Self {
        let report = steady_report(params);
        let label = classify(&report, params);
        Self {
            values,
            efficiency: efficiency(&report, label).ok(),
            cop: cop(&report, params, label).ok(),
            hybrid: hybrid_metrics(&report, params, label),
            report,
            label,
        }
    }
}

/// A boundary curve in the coordinates of the two sweep axes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Overlay {
    pub name: String,
    pub points: Vec<[f64; 2]>,
}

impl Overlay {
    pub fn table(&self, axes: &[GridAxis; 2]) -> Table {
        let mut t = Table::new([axes[0].key.as_str(), axes[1].key.as_str()]);
        for p in &self.points {
            t.push(vec![Cell::Num(p[0]), Cell::Num(p[1])]);
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagram {
    pub axes: [GridAxis; 2],
    pub records: Vec<SweepRecord>,
    pub overlays: Vec<Overlay>,
}

impl Diagram {
    pub fn table(&self) -> Table {
        let mut cols: Vec<String> = self.axes.iter().map(|a| a.key.clone()).collect();
        cols.extend(["regime", "beyond_carnot"].map(String::from));
        cols.extend(REPORT_COLUMNS.map(String::from));
        cols.extend(
            [
                "efficiency",
                "cop",
                "hybrid_cooling_per_work",
                "hybrid_work_per_rejected_heat",
            ]
            .map(String::from),
        );
        let mut t = Table::new(cols);
        for r in &self.records {
            let mut row: Vec<Cell> = r.values.iter().map(|&v| Cell::Num(v)).collect();
            row.push(Cell::Text(r.label.base.code().into()));
            row.push(Cell::Bool(r.label.beyond_carnot));
            row.extend(r.report.csv_row().into_iter().map(Cell::from));
            row.push(r.efficiency.into());
            row.push(r.cop.into());
            row.push(r.hybrid.map(|h| h.cooling_per_work).into());
            row.push(r.hybrid.map(|h| h.work_per_rejected_heat).into());
            t.push(row);
        }
        t
    }

    pub fn count(&self, base: Regime) -> usize {
        self.records.iter().filter(|r| r.label.base == base).count()
    }
}

fn params_at(
    template: &MachineParams,
    axes: &[&GridAxis],
    values: &[f64],
) -> Result<MachineParams> {
    let mut p = *template;
    for (axis, &v) in axes.iter().zip(values) {
        p.set(&axis.key, v)?;
    }
    p.validate()?;
    Ok(p)
}

/// Steady states over the product grid `axis1 × axis2`; `axis2` varies
/// fastest. Record order does not depend on the thread count.
pub fn sweep_diagram(
    template: &MachineParams,
    axis1: &GridAxis,
    axis2: &GridAxis,
) -> Result<Diagram> {
    for axis in [axis1, axis2] {
        if axis.steps < 2 {
            return Err(Error::InvalidConfig(vec![format!(
                "diagram axis `{}` needs at least 2 steps",
                axis.key
            )]));
        }
    }
    if axis1.key == axis2.key {
        return Err(Error::InvalidConfig(vec![format!(
            "both axes sweep `{}`",
            axis1.key
        )]));
    }
    let (xs, ys) = (axis1.values(), axis2.values());
    let points: Vec<[f64; 2]> = xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| [x, y]))
        .collect();
    // validate every point before spending time on steady states
    let params = points
        .iter()
        .map(|v| params_at(template, &[axis1, axis2], v))
        .collect::<Result<Vec<_>>>()?;
    let records = points
        .par_iter()
        .zip(params.par_iter())
        .map(|(v, p)| SweepRecord::evaluate(p, v.to_vec()))
        .collect();
    let axes = [axis1.clone(), axis2.clone()];
    let overlays = boundary_overlays(template, &axes);
    Ok(Diagram {
        axes,
        records,
        overlays,
    })
}

/// Analytic boundaries for a (bath field, bath-1 coherence) diagram: the
/// `B₁ = B₂` line, the `n₁ = n₂` line and the `ε₁*` curve. Other axis pairs
/// get no overlays.
pub fn boundary_overlays(template: &MachineParams, axes: &[GridAxis; 2]) -> Vec<Overlay> {
    let keys = [axes[0].key.as_str(), axes[1].key.as_str()];
    let Some(field_pos) = keys.iter().position(|k| *k == "bath1.B" || *k == "bath2.B") else {
        return Vec::new();
    };
    let eps_pos = 1 - field_pos;
    if keys[eps_pos] != "bath1.epsilon" {
        return Vec::new();
    }
    let (field_axis, eps_axis) = (&axes[field_pos], &axes[eps_pos]);
    let swept = if keys[field_pos] == "bath1.B" {
        Bath::One
    } else {
        Bath::Two
    };
    let other = if swept == Bath::One {
        Bath::Two
    } else {
        Bath::One
    };
    let order = |field: f64, eps: f64| {
        if field_pos == 0 {
            [field, eps]
        } else {
            [eps, field]
        }
    };
    let vertical = |name: &str, field: f64| Overlay {
        name: name.into(),
        points: vec![order(field, eps_axis.min), order(field, eps_axis.max)],
    };

    let b_other = template.bath(other).field;
    // n₁ = n₂  ⇔  B₁/T₁ = B₂/T₂
    let b_equal_n = b_other * template.bath(swept).temperature / template.bath(other).temperature;
    let mut overlays = vec![
        vertical("equal_fields", b_other),
        vertical("equal_occupations", b_equal_n),
    ];
    if template.bath2.epsilon == 0.0 {
        let points = field_axis
            .values()
            .into_iter()
            .filter_map(|b| {
                let mut p = *template;
                p.bath_mut(swept).field = b;
                epsilon_star(&p).map(|e| order(b, e))
            })
            .collect();
        overlays.push(Overlay {
            name: "epsilon_star".into(),
            points,
        });
    }
    overlays
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub value: f64,
    pub efficiency: f64,
    /// `-Ẇ`, positive for an engine.
    pub power: f64,
    pub beyond_carnot: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerCurve {
    pub axis: GridAxis,
    pub points: Vec<CurvePoint>,
    /// Swept values that are not engines, with their regime.
    pub skipped: Vec<(f64, RegimeLabel)>,
    pub max_power: Option<CurvePoint>,
}

impl PowerCurve {
    pub fn table(&self) -> Table {
        let mut t = Table::new([
            self.axis.key.as_str(),
            "efficiency",
            "power",
            "beyond_carnot",
        ]);
        for p in &self.points {
            t.push(vec![
                Cell::Num(p.value),
                Cell::Num(p.efficiency),
                Cell::Num(p.power),
                Cell::Bool(p.beyond_carnot),
            ]);
        }
        t
    }
}

/// Default field sweep of the power-efficiency curve.
pub fn default_curve_axis() -> GridAxis {
    GridAxis::new("bath2.B", 0.93, 1.2, 271).expect("valid axis")
}

/// Efficiency and power output along `axis`, engine points only.
pub fn power_efficiency_curve(template: &MachineParams, axis: &GridAxis) -> Result<PowerCurve> {
    let values = axis.values();
    let params = values
        .iter()
        .map(|&v| params_at(template, &[axis], &[v]))
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<SweepRecord> = values
        .par_iter()
        .zip(params.par_iter())
        .map(|(&v, p)| SweepRecord::evaluate(p, vec![v]))
        .collect();
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for r in records {
        match r.efficiency {
            Some(eta) => points.push(CurvePoint {
                value: r.values[0],
                efficiency: eta,
                power: -r.report.power.total,
                beyond_carnot: r.label.beyond_carnot,
            }),
            None => skipped.push((r.values[0], r.label)),
        }
    }
    let max_power = points
        .iter()
        .fold(None::<&CurvePoint>, |best, p| match best {
            Some(b) if b.power >= p.power => Some(b),
            _ => Some(p),
        })
        .cloned();
    Ok(PowerCurve {
        axis: axis.clone(),
        points,
        skipped,
        max_power,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxEfficiency {
    pub epsilon1: f64,
    /// Bath-2 field where `ε₁*(B₂) = ε₁`.
    pub field2: f64,
    pub eta_max: f64,
    pub bracket: (f64, f64),
    /// `V` just below and above the root.
    pub v_below: f64,
    pub v_above: f64,
}

/// Largest engine efficiency for hot-bath coherence `epsilon1`, reached at
/// the engine/refrigerator transition `ε₁*(B₂) = ε₁`.
pub fn max_efficiency(template: &MachineParams, epsilon1: f64) -> Result<MaxEfficiency> {
    let t1 = template.bath1.temperature;
    let t2 = template.bath2.temperature;
    if t1.is_nan() || t1 <= t2 {
        return Err(Error::Domain(format!(
            "maximum efficiency needs the coherent bath 1 hotter (T1 = {t1}, T2 = {t2})"
        )));
    }
    if !(epsilon1 > 0.0 && epsilon1.is_finite()) {
        return Err(Error::Domain(format!(
            "epsilon1 must be > 0 (got {epsilon1})"
        )));
    }
    let mut p = *template;
    p.bath1.epsilon = epsilon1;
    p.bath2.epsilon = 0.0;
    let eps_star_at = |b2: f64| {
        let mut q = p;
        q.bath2.field = b2;
        epsilon_star(&q)
    };
    // ε₁* vanishes at n₁ = n₂ and grows without bound as B₂ → 0
    let hi = template.bath1.field * t2 / t1;
    let lo = hi * 1e-6;
    let f = |b2: f64| {
        let mut q = p;
        q.bath2.field = b2;
        epsilon_star_squared(&q) - epsilon1 * epsilon1
    };
    let (f_lo, f_hi) = (f(lo), f(hi));
    if !(f_lo > 0.0 && f_hi <= 0.0) {
        return Err(Error::NoRoot {
            lo,
            hi,
            reason: format!(
                "eps1*^2 - eps1^2 is {f_lo:e} at B2 = {lo:e} and {f_hi:e} at B2 = {hi}; no sign change"
            ),
        });
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if f(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let root = 0.5 * (a + b);
    let miss = (eps_star_at(root).unwrap_or(0.0) - epsilon1).abs();
    if miss > 1e-10 {
        return Err(Error::NonConvergent(format!(
            "bisection stopped {miss:e} away from eps1"
        )));
    }
    let v_at = |b2: f64| {
        let mut q = p;
        q.bath2.field = b2;
        common_factor_v_at(&q, epsilon1)
    };
    let delta = 1e-6 * root;
    let mut at_root = p;
    at_root.bath2.field = root;
    Ok(MaxEfficiency {
        epsilon1,
        field2: root,
        eta_max: otto_efficiency(&at_root),
        bracket: (lo, hi),
        v_below: v_at(root - delta),
        v_above: v_at(root + delta),
    })
}
