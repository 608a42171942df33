//! Continuous-limit master equation of the system qubit,
//!
//! `ρ̇ = -i[H_S + G_S, ρ] + γ(n₁+n₂+2) L[σ-, ρ] + γ(n₁+n₂) L[σ+, ρ]`,
//! with `L[S, ρ] = 2 S ρ S† - {S†S, ρ}`, together with its closed-form and
//! null-space steady states and a fixed-step RK4 integrator.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pauli, ComplexMatrix, DensityMatrix, C64};
use crate::model::MachineParams;

/// Largest allowed generator residual of a steady state.
pub const STEADY_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SteadyStateMethod {
    Analytic,
    Numeric,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    pub method: SteadyStateMethod,
}

/// The two baths seen as one: `γ_eff = 2γ`, `n = (n₁+n₂)/2` and a single
/// complex coherence `ε_eff e^{iφ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCoherence {
    pub eps_eff: f64,
    pub phi: f64,
    pub gamma_eff: f64,
    pub n_avg: f64,
}

impl EffectiveCoherence {
    pub fn new(params: &MachineParams) -> Self {
        let (n1, n2) = params.occupations();
        let n = 0.5 * (n1 + n2);
        let z = (C64::from_polar(
            params.bath1.epsilon * (1.0 + 2.0 * n1).sqrt(),
            params.bath1.phi,
        ) + C64::from_polar(
            params.bath2.epsilon * (1.0 + 2.0 * n2).sqrt(),
            params.bath2.phi,
        )) / (2f64.sqrt() * (1.0 + 2.0 * n).sqrt());
        Self {
            eps_eff: z.norm(),
            phi: z.arg(),
            gamma_eff: 2.0 * params.gamma,
            n_avg: n,
        }
    }

    pub fn complex(&self) -> C64 {
        C64::from_polar(self.eps_eff, self.phi)
    }
}

/// `G_S = √(2γ) Σ_i ε_i √(2n_i+1) (cos φ_i σx + sin φ_i σy)`.
pub fn hamiltonian_correction(params: &MachineParams) -> ComplexMatrix {
    let mut g = ComplexMatrix::zeros(2).expect("qubit");
    for bath in [&params.bath1, &params.bath2] {
        let amp = (2.0 * params.gamma).sqrt()
            * bath.epsilon
            * (2.0 * bath.thermal_occupation() + 1.0).sqrt();
        g = &g + &pauli::in_plane(bath.phi).scale_real(amp);
    }
    g
}

fn lindblad_term(jump: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    let jd = jump.dagger();
    let sandwich = &(jump * rho) * &jd;
    &sandwich.scale_real(2.0) - &(&jd * jump).anticommutator(rho)
}

/// Precomputed generator of the qubit master equation.
#[derive(Clone, Debug)]
pub struct Generator {
    hamiltonian: ComplexMatrix,
    decay_rate: f64,
    excitation_rate: f64,
    lowering: ComplexMatrix,
    raising: ComplexMatrix,
}

impl Generator {
    pub fn new(params: &MachineParams) -> Self {
        let (n1, n2) = params.occupations();
        let h = &pauli::sigma_z().scale_real(params.field) + &hamiltonian_correction(params);
        Self {
            hamiltonian: h,
            decay_rate: params.gamma * (n1 + n2 + 2.0),
            excitation_rate: params.gamma * (n1 + n2),
            lowering: pauli::sigma_minus(),
            raising: pauli::sigma_plus(),
        }
    }

    /// `ρ̇` for any 2×2 operator `ρ` (the map is linear).
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let unitary = self.hamiltonian.commutator(rho).scale(C64::new(0.0, -1.0));
        let down = lindblad_term(&self.lowering, rho).scale_real(self.decay_rate);
        let up = lindblad_term(&self.raising, rho).scale_real(self.excitation_rate);
        &(&unitary + &down) + &up
    }

    /// Column-stacked superoperator: `vec(ρ̇) = M vec(ρ)` with
    /// `vec(ρ)[i + 2j] = ρ_ij`.
    pub fn superoperator(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(4, 4);
        for j in 0..2 {
            for i in 0..2 {
                let mut unit = [C64::new(0.0, 0.0); 4];
                unit[2 * i + j] = C64::new(1.0, 0.0);
                let basis = ComplexMatrix::from_row_slice(2, &unit).expect("2x2");
                let image = self.apply(&basis);
                for jj in 0..2 {
                    for ii in 0..2 {
                        m[(ii + 2 * jj, i + 2 * j)] = image[(ii, jj)];
                    }
                }
            }
        }
        m
    }
}

pub fn generator_apply(params: &MachineParams, rho: &ComplexMatrix) -> ComplexMatrix {
    Generator::new(params).apply(rho)
}

/// Integrates the master equation with classical RK4 up to `t_final`.
///
/// Requires `dt <= 0.01 / γ_eff`; the last step is shortened to land on
/// `t_final` exactly.
pub fn integrate(
    params: &MachineParams,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    let gamma_eff = 2.0 * params.gamma;
    if dt.is_nan() || dt <= 0.0 || dt > 0.01 / gamma_eff {
        return Err(Error::StepRejected(format!(
            "dt = {dt} outside (0, 0.01/gamma_eff = {}]",
            0.01 / gamma_eff
        )));
    }
    if t_final.is_nan() || t_final < 0.0 {
        return Err(Error::Domain(format!(
            "t_final must be >= 0 (got {t_final})"
        )));
    }
    let generator = Generator::new(params);
    let mut rho = rho0.matrix().clone();
    let mut t = 0.0;
    while t < t_final {
        let h = dt.min(t_final - t);
        let k1 = generator.apply(&rho);
        let k2 = generator.apply(&(&rho + &k1.scale_real(0.5 * h)));
        let k3 = generator.apply(&(&rho + &k2.scale_real(0.5 * h)));
        let k4 = generator.apply(&(&rho + &k3.scale_real(h)));
        let incr = &(&k1 + &k4) + &(&k2 + &k3).scale_real(2.0);
        rho = &rho + &incr.scale_real(h / 6.0);
        t += h;
        let drift = (rho.trace().re - 1.0).abs();
        if drift > 1e-6 {
            return Err(Error::StepRejected(format!(
                "trace drift {drift:e} at t = {t}"
            )));
        }
    }
    DensityMatrix::new(rho)
}

/// Closed-form steady state in terms of [`EffectiveCoherence`].
pub fn steady_state_analytic(params: &MachineParams) -> SteadyState {
    let eff = EffectiveCoherence::new(params);
    let b = params.field;
    let n = eff.n_avg;
    let g = eff.gamma_eff;
    let e2 = eff.eps_eff * eff.eps_eff;
    let w = 2.0 * n + 1.0;
    let r = w * (4.0 * b * b + g * w * (4.0 * e2 + w * g));
    let rho11 = (4.0 * b * b * n + g * w * w * (2.0 * e2 + n * g)) / r;
    let rho21 = C64::i() * eff.complex() * (2.0 * g * w).sqrt() * C64::new(w * g, 2.0 * b) / r;
    let m = ComplexMatrix::from_2x2(
        C64::new(rho11, 0.0),
        rho21.conj(),
        rho21,
        C64::new(1.0 - rho11, 0.0),
    );
    SteadyState {
        rho: DensityMatrix::from_trusted(m),
        method: SteadyStateMethod::Analytic,
    }
}

/// Steady state as the normalised null vector of the superoperator.
pub fn steady_state_numeric(params: &MachineParams) -> Result<SteadyState> {
    let generator = Generator::new(params);
    let svd = generator.superoperator().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let gap = svd.singular_values[order[1]];
    if gap <= 1e-8 {
        return Err(Error::DegenerateKernel(gap));
    }
    let null = order[0];
    let v: Vec<C64> = (0..4).map(|k| v_t[(null, k)].conj()).collect();
    // vec index i + 2j holds ρ_ij
    let tr = v[0] + v[3];
    let m = ComplexMatrix::from_2x2(v[0] / tr, v[2] / tr, v[1] / tr, v[3] / tr);
    let m = (&m + &m.dagger()).scale_real(0.5);
    let rho = DensityMatrix::new(m)?;
    let residual = generator.apply(rho.matrix()).max_abs();
    if residual > STEADY_RESIDUAL_TOL {
        return Err(Error::NonConvergent(format!(
            "null vector leaves generator residual {residual:e}"
        )));
    }
    Ok(SteadyState {
        rho,
        method: SteadyStateMethod::Numeric,
    })
}
