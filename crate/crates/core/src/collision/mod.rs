//! Finite-τ repeated collisions.
//!
//! Each step the system meets one fresh ancilla from each bath at once and
//! the three qubits evolve jointly for a time `τ` under
//! `H_tot = H_S + H_E + τ^{-1/2} Σ_i g_i (σ+ σ-_{E,i} + h.c.)`. The ancillas
//! are then discarded.

mod extrapolate;

pub use extrapolate::{
    check_ladder, extrapolate_samples, rate_extrapolate, Extrapolation, DEFAULT_TAU_LADDER,
};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    coherence_relative_entropy, hermitian_propagator, relative_entropy, tensor3, tensor_states,
    von_neumann_entropy, ComplexMatrix, DensityMatrix, C64,
};
use crate::model::{Bath, JointOperators, MachineParams};

const QUBITS: [usize; 3] = [2, 2, 2];

/// `H_tot` on `system ⊗ ancilla 1 ⊗ ancilla 2` for collision time `tau`.
pub fn joint_hamiltonian(params: &MachineParams, tau: f64) -> Result<ComplexMatrix> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!(
            "collision time must be > 0 (got {tau})"
        )));
    }
    let ops = JointOperators::new(params);
    Ok(&ops.free() + &ops.coupling().scale_real(tau.sqrt().recip()))
}

/// Energy and entropy bookkeeping of one collision.
///
/// `heat_i = -tr[H_{E,i} Δρ]`, `work = tr[(H_S + H_E) Δρ]`, so that
/// `delta_e_sys = work + heat_1 + heat_2`.
#[derive(Clone, Debug)]
pub struct CollisionLedger {
    pub tau: f64,
    pub delta_e_sys: f64,
    pub delta_e_anc1: f64,
    pub delta_e_anc2: f64,
    pub work: f64,
    pub heat1: f64,
    pub heat2: f64,
    pub ancilla_in1: DensityMatrix,
    pub ancilla_in2: DensityMatrix,
    pub ancilla_out1: DensityMatrix,
    pub ancilla_out2: DensityMatrix,
    /// Joint state of both outgoing ancillas (4×4).
    pub env_out: DensityMatrix,
    pub mutual_information: f64,
}

impl CollisionLedger {
    pub fn heat(&self, which: Bath) -> f64 {
        match which {
            Bath::One => self.heat1,
            Bath::Two => self.heat2,
        }
    }

    fn ancillas(&self, which: Bath) -> (&DensityMatrix, &DensityMatrix) {
        match which {
            Bath::One => (&self.ancilla_out1, &self.ancilla_in1),
            Bath::Two => (&self.ancilla_out2, &self.ancilla_in2),
        }
    }

    /// `ΔE_sys - W - Q₁ - Q₂`.
    pub fn first_law_residual(&self) -> f64 {
        self.delta_e_sys - self.work - self.heat1 - self.heat2
    }

    /// `S(ρ'_{E,i} ‖ ρ_{E,i})`.
    pub fn relative_entropy_change(&self, which: Bath) -> Result<f64> {
        let (out, inp) = self.ancillas(which);
        relative_entropy(out, inp)
    }

    /// `C(ρ'_{E,i}) - C(ρ_{E,i})`.
    pub fn coherence_change(&self, which: Bath) -> f64 {
        let (out, inp) = self.ancillas(which);
        coherence_relative_entropy(out) - coherence_relative_entropy(inp)
    }

    /// `S(ρ'_E ‖ ρ_{E,1} ⊗ ρ_{E,2})`.
    pub fn env_relative_entropy(&self) -> Result<f64> {
        relative_entropy(
            &self.env_out,
            &tensor_states(&self.ancilla_in1, &self.ancilla_in2)?,
        )
    }
}

/// `I(ρ'_E) = S(ρ'_{E,1}) + S(ρ'_{E,2}) - S(ρ'_E)` for a two-qubit state.
pub fn env_mutual_information(env: &DensityMatrix) -> Result<f64> {
    if env.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "mutual information needs a 4x4 state, got {}x{}",
            env.dim(),
            env.dim()
        )));
    }
    let a = env.partial_trace(&[2, 2], &[0])?;
    let b = env.partial_trace(&[2, 2], &[1])?;
    Ok(von_neumann_entropy(&a) + von_neumann_entropy(&b) - von_neumann_entropy(env))
}

/// Removes rounding drift: Hermitian part, renormalised to unit trace. The
/// collision map itself preserves both exactly.
fn clean(m: ComplexMatrix) -> ComplexMatrix {
    let h = (&m + &m.dagger()).scale_real(0.5);
    let tr = h.trace().re;
    h.scale_real(tr.recip())
}

/// Precomputed propagator and fresh ancillas for one `(params, τ)`.
#[derive(Clone, Debug)]
pub struct Collider {
    tau: f64,
    ops: JointOperators,
    unitary: ComplexMatrix,
    ancilla1: DensityMatrix,
    ancilla2: DensityMatrix,
}

impl Collider {
    pub fn new(params: &MachineParams, tau: f64) -> Result<Self> {
        let h = joint_hamiltonian(params, tau)?;
        Ok(Self {
            tau,
            ops: JointOperators::new(params),
            unitary: hermitian_propagator(&h, tau)?,
            ancilla1: params.bath1.ancilla_state(tau, 1)?,
            ancilla2: params.bath2.ancilla_state(tau, 2)?,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn ancilla(&self, which: Bath) -> &DensityMatrix {
        match which {
            Bath::One => &self.ancilla1,
            Bath::Two => &self.ancilla2,
        }
    }

    fn joint_in(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        tensor3(rho, &self.ancilla1, &self.ancilla2).expect("three qubits")
    }

    fn evolve(&self, joint: &ComplexMatrix) -> ComplexMatrix {
        &(&self.unitary * joint) * &self.unitary.dagger()
    }

    /// The linear collision map applied to any 2×2 operator.
    fn map(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.evolve(&self.joint_in(x))
            .partial_trace(&QUBITS, &[0])
            .expect("valid subsystem")
    }

    /// System state after one collision, without bookkeeping.
    pub fn step(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new(clean(self.map(rho)))
    }

    /// One collision with its full ledger.
    pub fn collide(&self, rho: &DensityMatrix) -> Result<(DensityMatrix, CollisionLedger)> {
        let joint = self.joint_in(rho);
        let out = self.evolve(&joint);
        let delta = &out - &joint;
        let energy = |h: &ComplexMatrix| h.trace_product(&delta).re;
        let delta_e_sys = energy(&self.ops.h_system);
        let delta_e_anc1 = energy(&self.ops.h_ancilla1);
        let delta_e_anc2 = energy(&self.ops.h_ancilla2);
        let work = energy(&self.ops.free());

        let reduce = |keep: &[usize]| -> Result<DensityMatrix> {
            DensityMatrix::new(clean(out.partial_trace(&QUBITS, keep)?))
        };
        let system = reduce(&[0])?;
        let env_out = reduce(&[1, 2])?;
        let ledger = CollisionLedger {
            tau: self.tau,
            delta_e_sys,
            delta_e_anc1,
            delta_e_anc2,
            work,
            heat1: -delta_e_anc1,
            heat2: -delta_e_anc2,
            ancilla_in1: self.ancilla1.clone(),
            ancilla_in2: self.ancilla2.clone(),
            ancilla_out1: reduce(&[1])?,
            ancilla_out2: reduce(&[2])?,
            mutual_information: env_mutual_information(&env_out)?,
            env_out,
        };
        Ok((system, ledger))
    }

    /// Column-stacked 4×4 matrix of the collision map (`vec` index `i + 2j`).
    pub fn transfer_matrix(&self) -> DMatrix<C64> {
        let mut t = DMatrix::zeros(4, 4);
        for j in 0..2 {
            for i in 0..2 {
                let mut unit = [C64::new(0.0, 0.0); 4];
                unit[2 * i + j] = C64::new(1.0, 0.0);
                let image = self.map(&ComplexMatrix::from_row_slice(2, &unit).expect("2x2"));
                for q in 0..2 {
                    for p in 0..2 {
                        t[(p + 2 * q, i + 2 * j)] = image[(p, q)];
                    }
                }
            }
        }
        t
    }

    /// Fixed point `ρ_∞(τ)` of the collision map, solved directly.
    pub fn fixed_point(&self) -> Result<DensityMatrix> {
        let mut a = self.transfer_matrix() - DMatrix::identity(4, 4);
        // The map preserves trace, so the ρ₀₀ row is minus the ρ₁₁ row;
        // replace it by the normalisation condition.
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        a.set_row(
            0,
            &nalgebra::RowDVector::from_row_slice(&[one, zero, zero, one]),
        );
        let mut rhs = DVector::zeros(4);
        rhs[0] = one;
        let v = a.lu().solve(&rhs).ok_or(Error::DegenerateKernel(0.0))?;
        DensityMatrix::new(clean(ComplexMatrix::from_2x2(v[0], v[2], v[1], v[3])))
    }
}

/// One collision from `rho` with freshly prepared ancillas.
pub fn collide(
    rho: &DensityMatrix,
    params: &MachineParams,
    tau: f64,
) -> Result<(DensityMatrix, CollisionLedger)> {
    Collider::new(params, tau)?.collide(rho)
}

/// Fixed point of the collision map at collision time `tau`.
pub fn fixed_point(params: &MachineParams, tau: f64) -> Result<DensityMatrix> {
    Collider::new(params, tau)?.fixed_point()
}

/// State after each collision with running energy totals.
#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryPoint {
    pub collision: usize,
    pub rho11: f64,
    pub rho22: f64,
    pub rho12_re: f64,
    pub rho12_im: f64,
    pub heat1: f64,
    pub heat2: f64,
    pub work: f64,
    /// Mutual information of the ancillas leaving this collision.
    pub mutual_information: f64,
}

pub const TRAJECTORY_COLUMNS: [&str; 9] = [
    "collision",
    "rho11",
    "rho22",
    "rho12_re",
    "rho12_im",
    "Q1",
    "Q2",
    "W",
    "I",
];

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub tau: f64,
    pub states: Vec<DensityMatrix>,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("at least one collision")
    }

    /// Rows in [`TRAJECTORY_COLUMNS`] order.
    pub fn rows(&self) -> Vec<Vec<Option<f64>>> {
        self.points
            .iter()
            .map(|p| {
                [
                    p.collision as f64,
                    p.rho11,
                    p.rho22,
                    p.rho12_re,
                    p.rho12_im,
                    p.heat1,
                    p.heat2,
                    p.work,
                    p.mutual_information,
                ]
                .map(Some)
                .to_vec()
            })
            .collect()
    }
}

/// `n_collisions` Markovian collisions starting from `rho0`.
pub fn run(
    rho0: &DensityMatrix,
    params: &MachineParams,
    tau: f64,
    n_collisions: usize,
) -> Result<Trajectory> {
    if n_collisions == 0 {
        return Err(Error::Domain("need at least one collision".into()));
    }
    let collider = Collider::new(params, tau)?;
    let mut rho = rho0.clone();
    let (mut q1, mut q2, mut w) = (0.0, 0.0, 0.0);
    let mut states = Vec::with_capacity(n_collisions);
    let mut points = Vec::with_capacity(n_collisions);
    for k in 1..=n_collisions {
        let (next, ledger) = collider.collide(&rho)?;
        q1 += ledger.heat1;
        q2 += ledger.heat2;
        w += ledger.work;
        points.push(TrajectoryPoint {
            collision: k,
            rho11: next[(0, 0)].re,
            rho22: next[(1, 1)].re,
            rho12_re: next[(0, 1)].re,
            rho12_im: next[(0, 1)].im,
            heat1: q1,
            heat2: q2,
            work: w,
            mutual_information: ledger.mutual_information,
        });
        states.push(next.clone());
        rho = next;
    }
    Ok(Trajectory {
        tau,
        states,
        points,
    })
}

/// Rates `(1/τ) × ` per-collision quantities from one collision at `rho`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FiniteRates {
    pub heat: [f64; 2],
    pub work: f64,
    pub system_energy: f64,
    pub coherence: [f64; 2],
    pub relative_entropy: [f64; 2],
    pub env_relative_entropy: f64,
    pub mutual_information: f64,
}

impl FiniteRates {
    pub fn at(params: &MachineParams, rho: &DensityMatrix, tau: f64) -> Result<Self> {
        let (_, l) = collide(rho, params, tau)?;
        let r = |x: f64| x / tau;
        Ok(Self {
            heat: [r(l.heat1), r(l.heat2)],
            work: r(l.work),
            system_energy: r(l.delta_e_sys),
            coherence: [
                r(l.coherence_change(Bath::One)),
                r(l.coherence_change(Bath::Two)),
            ],
            relative_entropy: [
                r(l.relative_entropy_change(Bath::One)?),
                r(l.relative_entropy_change(Bath::Two)?),
            ],
            env_relative_entropy: r(l.env_relative_entropy()?),
            mutual_information: r(l.mutual_information),
        })
    }
}

/// `τ → 0` limits of every [`FiniteRates`] field.
#[derive(Clone, Debug, Serialize)]
pub struct RateLimits {
    pub heat: [Extrapolation; 2],
    pub work: Extrapolation,
    pub coherence: [Extrapolation; 2],
    pub relative_entropy: [Extrapolation; 2],
    pub env_relative_entropy: Extrapolation,
    pub mutual_information: Extrapolation,
}

/// Evaluates [`FiniteRates`] over the ladder at fixed `rho` and extrapolates.
pub fn rate_limits(
    params: &MachineParams,
    rho: &DensityMatrix,
    taus: &[f64],
) -> Result<RateLimits> {
    check_ladder(taus)?;
    let samples = taus
        .iter()
        .map(|&t| FiniteRates::at(params, rho, t))
        .collect::<Result<Vec<_>>>()?;
    let ex = |get: &dyn Fn(&FiniteRates) -> f64| {
        let values: Vec<f64> = samples.iter().map(get).collect();
        extrapolate_samples(taus, &values)
    };
    Ok(RateLimits {
        heat: [ex(&|s| s.heat[0])?, ex(&|s| s.heat[1])?],
        work: ex(&|s| s.work)?,
        coherence: [ex(&|s| s.coherence[0])?, ex(&|s| s.coherence[1])?],
        relative_entropy: [
            ex(&|s| s.relative_entropy[0])?,
            ex(&|s| s.relative_entropy[1])?,
        ],
        env_relative_entropy: ex(&|s| s.env_relative_entropy)?,
        mutual_information: ex(&|s| s.mutual_information)?,
    })
}
