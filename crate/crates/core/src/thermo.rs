//! Heat currents, power and coherence rates of the qubit machine.
//!
//! Currents are positive when energy flows into the system. Each quantity has
//! a closed form in the system density matrix and an independent evaluation as
//! a trace over the joint `system ⊗ ancilla ⊗ ancilla` space, where the
//! `τ → 0` limits are taken algebraically: the `1/√τ` of the interaction
//! cancels against the `√τ` ancilla coherence (coherent terms) or against the
//! explicit `τ` of the double commutator (dissipative terms).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{tensor_product, ComplexMatrix, DensityMatrix, C64};
use crate::lindblad::{generator_apply, steady_state_analytic};
use crate::model::{Bath, JointOperators, MachineParams};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct HeatFlow {
    pub coherent: f64,
    pub incoherent: f64,
    pub total: f64,
}

impl HeatFlow {
    fn new(coherent: f64, incoherent: f64) -> Self {
        Self {
            coherent,
            incoherent,
            total: coherent + incoherent,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Power {
    pub coherent: f64,
    pub collisional: f64,
    pub total: f64,
}

impl Power {
    fn new(coherent: f64, collisional: f64) -> Self {
        Self {
            coherent,
            collisional,
            total: coherent + collisional,
        }
    }
}

/// Every current of the machine for one system state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThermoReport {
    pub heat1: HeatFlow,
    pub heat2: HeatFlow,
    pub power: Power,
    pub internal_energy_rate: f64,
    /// `Ċ(ρ_{E,i})`; closed forms exist only for coherence in bath 1 alone.
    pub coherence_rate1: Option<f64>,
    pub coherence_rate2: Option<f64>,
    /// `β_i Q̇_{i,coh} + Ċ(ρ_{E,i})`, non-negative by the local second law.
    pub bound_residual1: Option<f64>,
    pub bound_residual2: Option<f64>,
}

/// Column order of [`ThermoReport::csv_row`].
pub const REPORT_COLUMNS: [&str; 15] = [
    "Q1_coh",
    "Q1_inc",
    "Q1",
    "Q2_coh",
    "Q2_inc",
    "Q2",
    "W_coh",
    "W_col",
    "W",
    "dU_S",
    "first_law_residual",
    "C1_rate",
    "C2_rate",
    "bound_residual1",
    "bound_residual2",
];

impl ThermoReport {
    pub fn heat(&self, which: Bath) -> &HeatFlow {
        match which {
            Bath::One => &self.heat1,
            Bath::Two => &self.heat2,
        }
    }

    /// `U̇_S - Ẇ - Q̇₁ - Q̇₂`.
    pub fn first_law_residual(&self) -> f64 {
        self.internal_energy_rate - self.power.total - self.heat1.total - self.heat2.total
    }

    /// Values in [`REPORT_COLUMNS`] order; `None` for undefined entries.
    pub fn csv_row(&self) -> Vec<Option<f64>> {
        vec![
            Some(self.heat1.coherent),
            Some(self.heat1.incoherent),
            Some(self.heat1.total),
            Some(self.heat2.coherent),
            Some(self.heat2.incoherent),
            Some(self.heat2.total),
            Some(self.power.coherent),
            Some(self.power.collisional),
            Some(self.power.total),
            Some(self.internal_energy_rate),
            Some(self.first_law_residual()),
            self.coherence_rate1,
            self.coherence_rate2,
            self.bound_residual1,
            self.bound_residual2,
        ]
    }

    /// Scales every current by `factor`; used to probe scale invariance.
    pub fn scaled(&self, factor: f64) -> Self {
        let h = |f: HeatFlow| HeatFlow::new(f.coherent * factor, f.incoherent * factor);
        Self {
            heat1: h(self.heat1),
            heat2: h(self.heat2),
            power: Power::new(
                self.power.coherent * factor,
                self.power.collisional * factor,
            ),
            internal_energy_rate: self.internal_energy_rate * factor,
            coherence_rate1: self.coherence_rate1.map(|x| x * factor),
            coherence_rate2: self.coherence_rate2.map(|x| x * factor),
            bound_residual1: self.bound_residual1.map(|x| x * factor),
            bound_residual2: self.bound_residual2.map(|x| x * factor),
        }
    }
}

/// `e^{iφ} ρ₁₂ - e^{-iφ} ρ₂₁`, purely imaginary for Hermitian `ρ`.
fn coherence_overlap(rho: &ComplexMatrix, phi: f64) -> C64 {
    C64::from_polar(1.0, phi) * rho[(0, 1)] - C64::from_polar(1.0, -phi) * rho[(1, 0)]
}

/// Closed-form heat currents `(Q̇₁, Q̇₂)`, split coherent/incoherent.
///
/// `Q̇_{i,coh} = 2i ε_i B_i g_i (e^{iφ_i} ρ₁₂ - e^{-iφ_i} ρ₂₁)` and
/// `Q̇_{i,inc} = -4 B_i γ [ρ₁₁ + n_i (ρ₁₁ - ρ₂₂)]`.
pub fn heat_currents(params: &MachineParams, rho: &ComplexMatrix) -> [HeatFlow; 2] {
    let (p, q) = (rho[(0, 0)].re, rho[(1, 1)].re);
    Bath::BOTH.map(|which| {
        let bath = params.bath(which);
        let g = bath.coupling_strength(params.gamma);
        let n = bath.thermal_occupation();
        let coherent = (C64::new(0.0, 2.0 * bath.epsilon * bath.field * g)
            * coherence_overlap(rho, bath.phi))
        .re;
        let incoherent = -4.0 * bath.field * params.gamma * (p + n * (p - q));
        HeatFlow::new(coherent, incoherent)
    })
}

/// Closed-form power split into coherent and collisional parts.
pub fn power(params: &MachineParams, rho: &ComplexMatrix) -> Power {
    let b = params.field;
    let coherent: f64 = Bath::BOTH
        .iter()
        .map(|&which| {
            let bath = params.bath(which);
            let g = bath.coupling_strength(params.gamma);
            (C64::new(0.0, 2.0 * bath.epsilon * (b - bath.field) * g)
                * coherence_overlap(rho, bath.phi))
            .re
        })
        .sum();
    let (n1, n2) = params.occupations();
    let (d1, d2) = (b - params.bath1.field, b - params.bath2.field);
    let (p, q) = (rho[(0, 0)].re, rho[(1, 1)].re);
    let collisional =
        -4.0 * params.gamma * ((d1 * (1.0 + n1) + d2 * (1.0 + n2)) * p - (d1 * n1 + d2 * n2) * q);
    Power::new(coherent, collisional)
}

/// `U̇_S = tr[H_S ρ̇]` from the master equation.
pub fn internal_energy_rate(params: &MachineParams, rho: &ComplexMatrix) -> f64 {
    let d = generator_apply(params, rho);
    params.field * (d[(0, 0)] - d[(1, 1)]).re
}

/// Joint-space states entering the trace forms: the thermal part
/// `ρ_S ⊗ ρ^th_1 ⊗ ρ^th_2` and the coefficient of `√τ` in `ρ_S ⊗ ρ_E`.
struct JointStates {
    thermal: ComplexMatrix,
    coherent: ComplexMatrix,
}

impl JointStates {
    fn new(params: &MachineParams, rho: &ComplexMatrix) -> Self {
        let th1 = params.bath1.ancilla_state_thermal();
        let th2 = params.bath2.ancilla_state_thermal();
        let chi1 =
            crate::linalg::pauli::in_plane(params.bath1.phi).scale_real(params.bath1.epsilon);
        let chi2 =
            crate::linalg::pauli::in_plane(params.bath2.phi).scale_real(params.bath2.epsilon);
        let kron = |a: &ComplexMatrix, b: &ComplexMatrix| tensor_product(a, b).expect("dim <= 8");
        let env_thermal = kron(&th1, &th2);
        let env_coherent = &kron(&chi1, &th2) + &kron(&th1, &chi2);
        Self {
            thermal: kron(rho, &env_thermal),
            coherent: kron(rho, &env_coherent),
        }
    }
}

fn i_trace(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (C64::i() * a.trace_product(b)).re
}

/// Heat currents as joint-space traces:
/// `Q̇_{i,coh} = i tr([H_{E,i}, H_SE] ρ_S⊗ρ_E)`,
/// `Q̇_{i,inc} = ½ tr(τ [H_SE, [H_SE, H_{E,i}]] ρ_S⊗ρ_E)`.
pub fn heat_currents_trace(params: &MachineParams, rho: &ComplexMatrix) -> [HeatFlow; 2] {
    let ops = JointOperators::new(params);
    let states = JointStates::new(params, rho);
    let v = ops.coupling();
    Bath::BOTH.map(|which| {
        let h_e = ops.h_ancilla(which);
        let coherent = i_trace(&h_e.commutator(&v), &states.coherent);
        let double = v.commutator(&v.commutator(h_e));
        let incoherent = 0.5 * double.trace_product(&states.thermal).re;
        HeatFlow::new(coherent, incoherent)
    })
}

/// Power as joint-space traces:
/// `Ẇ_coh = i tr([H_SE, H_S+H_E] ρ_S⊗ρ_E)`,
/// `Ẇ_col = -½ tr(τ [H_SE, [H_SE, H_S+H_E]] ρ_S⊗ρ_E)`.
pub fn power_trace(params: &MachineParams, rho: &ComplexMatrix) -> Power {
    let ops = JointOperators::new(params);
    let states = JointStates::new(params, rho);
    let v = ops.coupling();
    let h0 = ops.free();
    let coherent = i_trace(&v.commutator(&h0), &states.coherent);
    let collisional = -0.5
        * v.commutator(&v.commutator(&h0))
            .trace_product(&states.thermal)
            .re;
    Power::new(coherent, collisional)
}

/// All currents for an arbitrary system state.
pub fn thermo_report(params: &MachineParams, rho: &DensityMatrix) -> ThermoReport {
    let [heat1, heat2] = heat_currents(params, rho);
    let power = power(params, rho);
    let rates = [Bath::One, Bath::Two].map(|b| coherence_rate_closed_form(params, b).ok());
    let residual = |which: Bath, heat: &HeatFlow, rate: Option<f64>| {
        rate.map(|c| params.bath(which).beta() * heat.coherent + c)
    };
    ThermoReport {
        heat1,
        heat2,
        power,
        internal_energy_rate: internal_energy_rate(params, rho),
        coherence_rate1: rates[0],
        coherence_rate2: rates[1],
        bound_residual1: residual(Bath::One, &heat1, rates[0]),
        bound_residual2: residual(Bath::Two, &heat2, rates[1]),
    }
}

/// Currents at the analytic steady state.
pub fn steady_report(params: &MachineParams) -> ThermoReport {
    thermo_report(params, &steady_state_analytic(params).rho)
}

fn require_single_coherence(params: &MachineParams, what: &str) -> Result<()> {
    if params.bath2.epsilon != 0.0 {
        return Err(Error::Domain(format!(
            "{what} assumes coherence in bath 1 only (bath2.epsilon = {}); use the two-bath form",
            params.bath2.epsilon
        )));
    }
    Ok(())
}

fn v_single(params: &MachineParams, eps1: f64) -> f64 {
    let (n1, n2) = params.occupations();
    let (b, g) = (params.field, params.gamma);
    let s = 1.0 + n1 + n2;
    let k = (2.0 * n1 + 1.0) * eps1 * eps1;
    let num = b * b * (n1 - n2) + g * s * ((n1 - n2) * s * g + k);
    let den = s * (b * b + s * s * g * g + g * k);
    2.0 * g * num / den
}

/// Common factor `V(ε₁)` with `Q̇₁ = B₁V`, `Q̇₂ = -B₂V`, `Ẇ = (B₂-B₁)V`.
pub fn common_factor_v(params: &MachineParams) -> Result<f64> {
    require_single_coherence(params, "V(eps1)")?;
    Ok(v_single(params, params.bath1.epsilon))
}

/// `V(ε)` at an arbitrary single-bath amplitude, other parameters fixed.
pub fn common_factor_v_at(params: &MachineParams, eps1: f64) -> f64 {
    v_single(params, eps1)
}

/// Two-bath common factor `V⁽²⁾(ε₁, φ₁, ε₂, φ₂)`.
///
/// The cross term `2γ ε₁ε₂ √((1+2n₁)(1+2n₂)) cos(φ₁-φ₂)` belongs inside the
/// `(1+n₁+n₂)[…]` bracket of the denominator; only this placement reproduces
/// the steady-state currents.
pub fn common_factor_v2(params: &MachineParams) -> f64 {
    let (n1, n2) = params.occupations();
    let (b, g) = (params.field, params.gamma);
    let (e1, e2) = (params.bath1.epsilon, params.bath2.epsilon);
    let d = params.bath1.phi - params.bath2.phi;
    let s = 1.0 + n1 + n2;
    let q = ((1.0 + 2.0 * n1) * (1.0 + 2.0 * n2)).sqrt();
    let num = b * b * (n1 - n2)
        + g * s
            * (g * n1 * (1.0 + n1) - g * n2 * (1.0 + n2) + e1 * e1 * (1.0 + 2.0 * n1)
                - e2 * e2 * (1.0 + 2.0 * n2))
        + 2.0 * b * e1 * e2 * q * d.sin();
    let den = s
        * (b * b
            + g * g * s * s
            + g * e1 * e1 * (1.0 + 2.0 * n1)
            + g * e2 * e2 * (1.0 + 2.0 * n2)
            + 2.0 * g * e1 * e2 * q * d.cos());
    2.0 * g * num / den
}

/// `(A₁², A₂²)` of the single-bath equivalence `ε₁ = A₁/A₂`.
pub fn equivalence_terms(params: &MachineParams) -> (f64, f64) {
    let (n1, n2) = params.occupations();
    let (b, g) = (params.field, params.gamma);
    let (e1, e2) = (params.bath1.epsilon, params.bath2.epsilon);
    let d = params.bath1.phi - params.bath2.phi;
    let s = 1.0 + n1 + n2;
    let q = ((1.0 + 2.0 * n1) * (1.0 + 2.0 * n2)).sqrt();
    let base = b * b + g * g * s * s;
    let a1 = base
        * (g * (1.0 + 2.0 * n1) * (1.0 + 2.0 * n2) * (e1 - e2) * (e1 + e2)
            + 2.0 * e1 * e2 * q * (g * (n2 - n1) * d.cos() + b * d.sin()));
    let a2 = g
        * (1.0 + 2.0 * n1)
        * ((1.0 + 2.0 * n2) * (base + 2.0 * g * s * e2 * e2)
            + 2.0 * e1 * e2 * q * (g * s * d.cos() - b * d.sin()));
    (a1, a2)
}

/// Single-bath coherence amplitude `A₁/A₂` reproducing `V⁽²⁾`.
pub fn equivalent_single_bath_coherence(params: &MachineParams) -> Result<f64> {
    let (a1, a2) = equivalence_terms(params);
    if a2.is_nan() || a2 <= 0.0 {
        return Err(Error::Domain(format!("A2^2 = {a2:e} is not positive")));
    }
    if a1 < 0.0 {
        return Err(Error::Domain(format!(
            "A1^2 = {a1:e} < 0: no real single-bath amplitude reproduces these currents"
        )));
    }
    Ok((a1 / a2).sqrt())
}

/// Steady-state rate of change of the relative entropy of coherence of the
/// outgoing ancillas, `Ċ(ρ_{E,1}) ≤ 0` and `Ċ(ρ_{E,2}) ≥ 0`, for coherence
/// in bath 1 only.
pub fn coherence_rate_closed_form(params: &MachineParams, which: Bath) -> Result<f64> {
    require_single_coherence(params, "closed-form coherence rate")?;
    let (n1, n2) = params.occupations();
    let (b, g, e) = (params.field, params.gamma, params.bath1.epsilon);
    let s = 1.0 + n1 + n2;
    let base = b * b + g * g * s * s;
    let k = 1.0 + 2.0 * n1;
    let den = s * s * (base + e * e * g * k).powi(2);
    let pre = 2.0 * e * e * g * g * k;
    Ok(match which {
        Bath::One => {
            let mix = 1.0 + 2.0 * n1 * n1 + 4.0 * n1 * (1.0 + n2) + 2.0 * n2 * (2.0 + n2);
            -params.bath1.beta()
                * params.bath1.field
                * pre
                * (mix * base + 2.0 * e * e * g * k * s * s)
                / den
        }
        Bath::Two => params.bath2.beta() * params.bath2.field * pre * base / den,
    })
}

/// `β_i Q̇_{i,coh} + Ċ(ρ_{E,i})` for both baths at state `rho`.
pub fn second_law_residuals(params: &MachineParams, rho: &ComplexMatrix) -> Result<[f64; 2]> {
    let heat = heat_currents(params, rho);
    let mut out = [0.0; 2];
    for (slot, which) in out.iter_mut().zip(Bath::BOTH) {
        let rate = coherence_rate_closed_form(params, which)?;
        *slot = params.bath(which).beta() * heat[which.index() - 1].coherent + rate;
    }
    Ok(out)
}

impl crate::model::BathSpec {
    /// Gibbs state of the ancilla (no coherence).
    pub fn ancilla_state_thermal(&self) -> ComplexMatrix {
        let p = self.excited_population();
        ComplexMatrix::from_real_diagonal(&[p, 1.0 - p]).expect("qubit")
    }
}
