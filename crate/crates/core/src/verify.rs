//! Seeded invariant suite behind `cohtherm verify`.
//!
//! Fuzz checks draw their own parameters; the collision checks run at the
//! supplied configuration.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{classify, cop, efficiency, reference_bounds, Regime};
use crate::collision::{check_ladder, fixed_point, rate_limits, DEFAULT_TAU_LADDER};
use crate::error::{Error, Result};
use crate::linalg::{trace_distance, ComplexMatrix, DensityMatrix, C64};
use crate::lindblad::{steady_state_analytic, steady_state_numeric};
use crate::model::{Bath, BathSpec, MachineParams};
use crate::output::{Cell, Table};
use crate::thermo::{
    coherence_rate_closed_form, common_factor_v, common_factor_v2, common_factor_v_at,
    equivalence_terms, heat_currents, heat_currents_trace, power, power_trace,
    second_law_residuals, steady_report, thermo_report,
};

/// Collision times for the fixed-point convergence check.
pub const FIXED_POINT_LADDER: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

/// Which baths carry coherence in a random draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coherence {
    None,
    Bath1,
    Both,
}

/// `B, B_i, γ ∈ [0.5, 2]`, `T_i ∈ [1, 5]`, `ε_i ∈ [0, 1]`, `φ_i ∈ [0, 2π)`.
pub fn sample_params<R: Rng>(rng: &mut R, coherence: Coherence) -> MachineParams {
    let mut bath = |coherent: bool| {
        let t = rng.random_range(1.0..5.0);
        let b = rng.random_range(0.5..2.0);
        let (eps, phi) = (rng.random_range(0.0..1.0), rng.random_range(0.0..TAU));
        if coherent {
            BathSpec::coherent(t, b, eps, phi)
        } else {
            BathSpec::thermal(t, b)
        }
    };
    let bath1 = bath(coherence != Coherence::None);
    let bath2 = bath(coherence == Coherence::Both);
    let field = rng.random_range(0.5..2.0);
    let gamma = rng.random_range(0.5..2.0);
    MachineParams::new(field, gamma, bath1, bath2).expect("sampled inside the valid domain")
}

/// Random qubit state `GG†/tr(GG†)` from uniform complex entries of `G`.
pub fn sample_state<R: Rng>(rng: &mut R) -> DensityMatrix {
    let g = DMatrix::from_fn(2, 2, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let pos = &g * g.adjoint();
    let tr = pos.trace();
    let m = ComplexMatrix::from_dmatrix(pos / tr).expect("2x2");
    DensityMatrix::new(m).expect("positive by construction")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Collision times for the rate extrapolation.
    pub tau_ladder: Vec<f64>,
    /// Multiplies every threshold.
    pub threshold_scale: f64,
    /// Draws per fuzz check; `None` uses each check's default.
    pub draws: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            tau_ladder: DEFAULT_TAU_LADDER.to_vec(),
            threshold_scale: 1.0,
            draws: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub samples: usize,
    /// Largest violation measure; passes when `worst <= threshold`.
    pub worst: f64,
    pub threshold: f64,
    pub passed: bool,
    /// Set when the check could not be evaluated.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["check", "samples", "worst", "threshold", "passed", "error"]);
        for c in &self.checks {
            t.push(vec![
                Cell::Text(c.name.into()),
                Cell::Int(c.samples as u64),
                Cell::Num(c.worst),
                Cell::Num(c.threshold),
                Cell::Bool(c.passed),
                c.error.clone().map_or(Cell::Empty, Cell::Text),
            ]);
        }
        t
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Spec {
    name: &'static str,
    draws: usize,
    threshold: f64,
    run: fn(&mut ChaCha8Rng, usize) -> Result<f64>,
}

fn rel_err(x: f64, y: f64) -> f64 {
    if x == y {
        0.0
    } else {
        (x - y).abs() / y.abs().max(x.abs())
    }
}

fn steady_state_agreement(rng: &mut ChaCha8Rng, n: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = sample_params(rng, Coherence::Both);
        let a = steady_state_analytic(&p).rho;
        let b = steady_state_numeric(&p)?.rho;
        worst = worst.max(a.matrix().max_abs_diff(b.matrix()));
    }
    Ok(worst)
}

fn common_factor_single(rng: &mut ChaCha8Rng, n: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = sample_params(rng, Coherence::Bath1);
        let v = common_factor_v(&p)?;
        worst = worst.max(structure_error(&p, v));
    }
    Ok(worst)
}

fn common_factor_two(rng: &mut ChaCha8Rng, n: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = sample_params(rng, Coherence::Both);
        worst = worst.max(structure_error(&p, common_factor_v2(&p)));
    }
    Ok(worst)
}

fn structure_error(p: &MachineParams, v: f64) -> f64 {
    let r = steady_report(p);
    let (b1, b2) = (p.bath1.field, p.bath2.field);
    rel_err(r.heat1.total, b1 * v)
        .max(rel_err(r.heat2.total, -b2 * v))
        .max(rel_err(r.power.total, (b2 - b1) * v))
}

fn first_law(rng: &mut ChaCha8Rng, n: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = sample_params(rng, Coherence::Both);
        let rho = sample_state(rng);
        worst = worst.max(thermo_report(&p, &rho).first_law_residual().abs());
    }
    Ok(worst)
}

fn closed_form_vs_trace(rng: &mut ChaCha8Rng, n: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = sample_params(rng, Coherence::Both);
        let rho = sample_state(rng);
        let m = rho.matrix();
        let (h, ht) = (heat_currents(&p, m), heat_currents_trace(&p, m));
        let (w, wt) = (power(&p, m), power_trace(&p, m));
        for (a, b) in h.iter().zip(&ht) {
            worst = worst
                .max((a.coherent - b.coherent).abs())
                .max((a.incoherent - b.incoherent).abs());
        }
        worst = worst
            .max((w.coherent - wt.coherent).abs())
            .max((w.collisional - wt.collisional).abs());
    }
    Ok(worst)
}

fn phase_independence(rng: &mut ChaCha8Rng, n: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = sample_params(rng, Coherence::Bath1);
        let mut q = p;
        q.bath1.phi = rng.random_range(0.0..TAU);
        let (a, b) = (steady_report(&p), steady_report(&q));
        worst = worst
            .max((a.heat1.total - b.heat1.total).abs())
            .max((a.heat2.total - b.heat2.total).abs())
            .max((a.power.total - b.power.total).abs());
    }
    Ok(worst)
}

fn equivalence_identity(rng: &mut ChaCha8Rng, n: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    let mut used = 0;
    while used < n {
        let p = sample_params(rng, Coherence::Both);
        let (a1, a2) = equivalence_terms(&p);
        if a1 < 0.0 || a2 <= 0.0 {
            continue;
        }
        used += 1;
        worst = worst.max((common_factor_v_at(&p, (a1 / a2).sqrt()) - common_factor_v2(&p)).abs());
    }
    Ok(worst)
}

fn coherence_rate_signs(rng: &mut ChaCha8Rng, n: usize) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..n {
        let p = sample_params(rng, Coherence::Bath1);
        let c1 = coherence_rate_closed_form(&p, Bath::One)?;
        let c2 = coherence_rate_closed_form(&p, Bath::Two)?;
        worst = worst.max(c1).max(-c2);
    }
    Ok(worst.max(0.0))
}

fn second_law(rng: &mut ChaCha8Rng, n: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = sample_params(rng, Coherence::Bath1);
        let rho = steady_state_analytic(&p).rho;
        for r in second_law_residuals(&p, rho.matrix())? {
            worst = worst.max(-r);
        }
    }
    Ok(worst)
}

/// Largest excess of `η` over `η_C` or of `COP` over `COP_C` without
/// coherence.
fn classical_consistency(rng: &mut ChaCha8Rng, n: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = sample_params(rng, Coherence::None);
        let r = steady_report(&p);
        let label = classify(&r, &p);
        let bounds = reference_bounds(&p)?;
        if let Ok(eta) = efficiency(&r, label) {
            worst = worst.max(eta - bounds.eta_carnot);
        }
        if label.base == Regime::Refrigerator {
            worst = worst.max(cop(&r, &p, label)? - bounds.cop_carnot);
        }
    }
    Ok(worst)
}

const FUZZ: [Spec; 10] = [
    Spec {
        name: "steady_state_agreement",
        draws: 100,
        threshold: 1e-10,
        run: steady_state_agreement,
    },
    Spec {
        name: "common_factor_single",
        draws: 100,
        threshold: 1e-9,
        run: common_factor_single,
    },
    Spec {
        name: "common_factor_two",
        draws: 100,
        threshold: 1e-9,
        run: common_factor_two,
    },
    Spec {
        name: "first_law",
        draws: 1000,
        threshold: 1e-10,
        run: first_law,
    },
    Spec {
        name: "closed_form_vs_trace",
        draws: 200,
        threshold: 1e-10,
        run: closed_form_vs_trace,
    },
    Spec {
        name: "phase_independence",
        draws: 100,
        threshold: 1e-10,
        run: phase_independence,
    },
    Spec {
        name: "equivalence_identity",
        draws: 500,
        threshold: 1e-9,
        run: equivalence_identity,
    },
    Spec {
        name: "coherence_rate_signs",
        draws: 1000,
        threshold: 0.0,
        run: coherence_rate_signs,
    },
    Spec {
        name: "second_law",
        draws: 1000,
        threshold: 1e-9,
        run: second_law,
    },
    Spec {
        name: "classical_consistency",
        draws: 1000,
        threshold: 1e-12,
        run: classical_consistency,
    },
];

fn finish(name: &'static str, samples: usize, threshold: f64, outcome: Result<f64>) -> Check {
    match outcome {
        Ok(worst) => Check {
            name,
            samples,
            worst,
            threshold,
            passed: worst <= threshold,
            error: None,
        },
        Err(e) => Check {
            name,
            samples,
            worst: f64::NAN,
            threshold,
            passed: false,
            error: Some(e.to_string()),
        },
    }
}

/// Largest increase of the fixed-point distance to the analytic steady
/// state between successive ladder entries; negative when it shrinks.
fn fixed_point_convergence(params: &MachineParams) -> Result<f64> {
    let target = steady_state_analytic(params).rho;
    let distances = FIXED_POINT_LADDER
        .iter()
        .map(|&t| {
            Ok(trace_distance(
                fixed_point(params, t)?.matrix(),
                target.matrix(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(distances
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `|Ṡ(ρ'_{E,1}‖ρ_{E,1}) - (β₁Q̇_{1,coh} + Ċ(ρ_{E,1}))|` with the left side
/// extrapolated from finite collisions.
fn entropy_relation(params: &MachineParams, taus: &[f64]) -> Result<f64> {
    let rho = steady_state_analytic(params).rho;
    let limits = rate_limits(params, &rho, taus)?;
    let report = thermo_report(params, &rho);
    let coherence = report.coherence_rate1.unwrap_or(limits.coherence[0].limit);
    let rhs = params.bath1.beta() * report.heat1.coherent + coherence;
    Ok((limits.relative_entropy[0].limit - rhs).abs())
}

/// Runs every check; a failed evaluation counts as a failed check.
pub fn run_suite(params: &MachineParams, options: &VerifyOptions) -> Result<VerifyReport> {
    params.validate()?;
    if !(options.threshold_scale.is_finite() && options.threshold_scale > 0.0) {
        return Err(Error::InvalidConfig(vec![format!(
            "tolerance scale must be finite and > 0 (got {})",
            options.threshold_scale
        )]));
    }
    check_ladder(&options.tau_ladder).map_err(|e| Error::InvalidConfig(vec![e.to_string()]))?;
    let k = options.threshold_scale;
    let mut checks: Vec<Check> = FUZZ
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(i as u64);
            let n = options.draws.unwrap_or(spec.draws);
            finish(spec.name, n, spec.threshold * k, (spec.run)(&mut rng, n))
        })
        .collect();
    checks.push(finish(
        "fixed_point_convergence",
        FIXED_POINT_LADDER.len(),
        0.0,
        fixed_point_convergence(params),
    ));
    checks.push(finish(
        "entropy_relation",
        options.tau_ladder.len(),
        1e-4 * k,
        entropy_relation(params, &options.tau_ladder),
    ));
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        seed: options.seed,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_passes() {
        let r = run_suite(
            &MachineParams::cold_coherent_reference(),
            &VerifyOptions::default(),
        )
        .unwrap();
        for c in &r.checks {
            assert!(c.passed, "{c:?}");
        }
        assert!(r.passed);
        assert_eq!(r.checks.len(), 12);
    }

    #[test]
    fn same_seed_same_report() {
        let opts = VerifyOptions {
            seed: 42,
            draws: Some(20),
            ..VerifyOptions::default()
        };
        let p = MachineParams::hot_coherent_reference();
        assert_eq!(run_suite(&p, &opts).unwrap(), run_suite(&p, &opts).unwrap());
    }

    #[test]
    fn tiny_scale_fails_checks() {
        let opts = VerifyOptions {
            threshold_scale: 1e-30,
            draws: Some(5),
            ..VerifyOptions::default()
        };
        let r = run_suite(&MachineParams::cold_coherent_reference(), &opts).unwrap();
        assert!(!r.passed);
        assert!(r.failures().any(|c| c.name == "entropy_relation"));
    }

    #[test]
    fn bad_options_rejected() {
        let p = MachineParams::cold_coherent_reference();
        let bad_scale = VerifyOptions {
            threshold_scale: 0.0,
            ..VerifyOptions::default()
        };
        assert!(matches!(
            run_suite(&p, &bad_scale),
            Err(Error::InvalidConfig(_))
        ));
        let bad_ladder = VerifyOptions {
            tau_ladder: vec![0.1, 0.2, 0.3],
            ..VerifyOptions::default()
        };
        assert!(matches!(
            run_suite(&p, &bad_ladder),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn evaluation_error_is_a_failed_check() {
        // τ = 0.1 violates ancilla positivity at this coherence
        let mut p = MachineParams::cold_coherent_reference();
        p.bath1.epsilon = 1.0;
        p.bath1.temperature = 0.2;
        let opts = VerifyOptions {
            draws: Some(2),
            ..VerifyOptions::default()
        };
        let r = run_suite(&p, &opts).unwrap();
        let c = r
            .checks
            .iter()
            .find(|c| c.name == "fixed_point_convergence")
            .unwrap();
        assert!(!c.passed && c.error.is_some());
        assert_eq!(r.table().rows.len(), 12);
    }

    #[test]
    fn samplers_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = sample_params(&mut rng, Coherence::Bath1);
            assert!(
                (0.5..2.0).contains(&p.bath1.field) && (1.0..5.0).contains(&p.bath2.temperature)
            );
            assert_eq!(p.bath2.epsilon, 0.0);
            let rho = sample_state(&mut rng);
            assert!(rho.eigenvalues().iter().all(|&l| l >= -1e-12));
        }
    }
}
