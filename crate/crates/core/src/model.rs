//! Machine configuration and the physical quantities derived from it.
//!
//! The working medium is a qubit `H_S = B σz` coupled to two streams of qubit
//! ancillas `H_{E,i} = B_i σz`, each prepared in a Gibbs state plus a small
//! coherence `√τ ε_i (cos φ_i σx + sin φ_i σy)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pauli, tensor3, ComplexMatrix, DensityMatrix, C64};

/// One reservoir of identically prepared ancillas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    /// Temperature in energy units (`k_B = 1`).
    #[serde(rename = "T")]
    pub temperature: f64,
    /// Ancilla field `B_i`; the ancilla gap is `2 B_i`.
    #[serde(rename = "B")]
    pub field: f64,
    /// Coherence amplitude `ε_i`.
    #[serde(default)]
    pub epsilon: f64,
    /// Azimuth `φ_i` of the ancilla Bloch vector.
    #[serde(default)]
    pub phi: f64,
}

/// Ladder rates of one bath: `γ+ = 2γ n_i`, `γ- = 2γ (n_i + 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DissipationRates {
    pub excitation: f64,
    pub decay: f64,
}

impl BathSpec {
    pub fn thermal(temperature: f64, field: f64) -> Self {
        Self {
            temperature,
            field,
            epsilon: 0.0,
            phi: 0.0,
        }
    }

    pub fn coherent(temperature: f64, field: f64, epsilon: f64, phi: f64) -> Self {
        Self {
            temperature,
            field,
            epsilon,
            phi,
        }
    }

    fn violations(&self, prefix: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                out.push(msg);
            }
        };
        need(
            self.temperature.is_finite() && self.temperature > 0.0,
            format!(
                "{prefix}.T must be finite and > 0 (got {})",
                self.temperature
            ),
        );
        need(
            self.field.is_finite() && self.field > 0.0,
            format!("{prefix}.B must be finite and > 0 (got {})", self.field),
        );
        need(
            self.epsilon.is_finite() && self.epsilon >= 0.0,
            format!(
                "{prefix}.epsilon must be finite and >= 0 (got {})",
                self.epsilon
            ),
        );
        need(
            self.phi.is_finite(),
            format!("{prefix}.phi must be finite (got {})", self.phi),
        );
        out
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    /// `n_i = 1 / (exp(2 B_i / T_i) - 1)`, using the ancilla's own gap.
    pub fn thermal_occupation(&self) -> f64 {
        1.0 / (2.0 * self.field * self.beta()).exp_m1()
    }

    /// Gibbs population of the excited level, `n / (2n + 1)`.
    pub fn excited_population(&self) -> f64 {
        1.0 / ((2.0 * self.field * self.beta()).exp() + 1.0)
    }

    pub fn dissipation_rates(&self, gamma: f64) -> DissipationRates {
        let n = self.thermal_occupation();
        DissipationRates {
            excitation: 2.0 * gamma * n,
            decay: 2.0 * gamma * (n + 1.0),
        }
    }

    /// `g_i = sqrt(2γ (2 n_i + 1))`.
    pub fn coupling_strength(&self, gamma: f64) -> f64 {
        (2.0 * gamma * (2.0 * self.thermal_occupation() + 1.0)).sqrt()
    }

    /// Largest collision time for which the coherent ancilla stays positive.
    pub fn max_tau(&self) -> f64 {
        if self.epsilon == 0.0 {
            return f64::INFINITY;
        }
        let p = self.excited_population();
        p * (1.0 - p) / (self.epsilon * self.epsilon)
    }

    pub fn hamiltonian(&self) -> ComplexMatrix {
        pauli::sigma_z().scale_real(self.field)
    }

    /// Fresh-ancilla state `ρ_th + √τ ε (cos φ σx + sin φ σy)`.
    ///
    /// `bath` is only used to label the error.
    pub fn ancilla_state(&self, tau: f64, bath: usize) -> Result<DensityMatrix> {
        if tau.is_nan() || tau <= 0.0 {
            return Err(Error::Domain(format!(
                "collision time must be > 0 (got {tau})"
            )));
        }
        let max_tau = self.max_tau();
        if tau > max_tau {
            return Err(Error::AncillaPositivity { bath, tau, max_tau });
        }
        let p = self.excited_population();
        let off = tau.sqrt() * self.epsilon;
        let m = ComplexMatrix::from_row_slice(
            2,
            &[
                C64::new(p, 0.0),
                C64::from_polar(off, -self.phi),
                C64::from_polar(off, self.phi),
                C64::new(1.0 - p, 0.0),
            ],
        )?;
        DensityMatrix::new(m)
    }
}

/// Full machine: system field, shared rate and the two baths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineParams {
    #[serde(rename = "B")]
    pub field: f64,
    pub gamma: f64,
    pub bath1: BathSpec,
    pub bath2: BathSpec,
}

/// Which of the two reservoirs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bath {
    One,
    Two,
}

impl Bath {
    pub const BOTH: [Bath; 2] = [Bath::One, Bath::Two];

    pub fn index(self) -> usize {
        match self {
            Bath::One => 1,
            Bath::Two => 2,
        }
    }
}

/// Configuration keys, in file order.
pub const CONFIG_KEYS: [&str; 10] = [
    "B",
    "gamma",
    "bath1.T",
    "bath1.B",
    "bath1.epsilon",
    "bath1.phi",
    "bath2.T",
    "bath2.B",
    "bath2.epsilon",
    "bath2.phi",
];

impl MachineParams {
    /// Builds and validates; every violated bound is reported at once.
    pub fn new(field: f64, gamma: f64, bath1: BathSpec, bath2: BathSpec) -> Result<Self> {
        let params = Self {
            field,
            gamma,
            bath1,
            bath2,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.field.is_finite() && self.field > 0.0) {
            problems.push(format!("B must be finite and > 0 (got {})", self.field));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            problems.push(format!("gamma must be finite and > 0 (got {})", self.gamma));
        }
        problems.extend(self.bath1.violations("bath1"));
        problems.extend(self.bath2.violations("bath2"));
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }

    /// Cold-bath coherence setting: `B=1, γ=1, B₁=0.9, B₂=1.2, T₁=2.5, T₂=3`,
    /// `ε₁ = 0.3`.
    pub fn cold_coherent_reference() -> Self {
        Self {
            field: 1.0,
            gamma: 1.0,
            bath1: BathSpec::coherent(2.5, 0.9, 0.3, 0.0),
            bath2: BathSpec::thermal(3.0, 1.2),
        }
    }

    /// Hot-bath coherence setting: `B=1, γ=1, B₁=1.2, B₂=1.0, T₁=3, T₂=2.5`,
    /// `ε₁ = 0.1`.
    pub fn hot_coherent_reference() -> Self {
        Self {
            field: 1.0,
            gamma: 1.0,
            bath1: BathSpec::coherent(3.0, 1.2, 0.1, 0.0),
            bath2: BathSpec::thermal(2.5, 1.0),
        }
    }

    pub fn bath(&self, which: Bath) -> &BathSpec {
        match which {
            Bath::One => &self.bath1,
            Bath::Two => &self.bath2,
        }
    }

    pub fn bath_mut(&mut self, which: Bath) -> &mut BathSpec {
        match which {
            Bath::One => &mut self.bath1,
            Bath::Two => &mut self.bath2,
        }
    }

    pub fn occupations(&self) -> (f64, f64) {
        (
            self.bath1.thermal_occupation(),
            self.bath2.thermal_occupation(),
        )
    }

    /// Value of a configuration key.
    pub fn get(&self, key: &str) -> Result<f64> {
        Ok(match key {
            "B" => self.field,
            "gamma" => self.gamma,
            "bath1.T" => self.bath1.temperature,
            "bath1.B" => self.bath1.field,
            "bath1.epsilon" => self.bath1.epsilon,
            "bath1.phi" => self.bath1.phi,
            "bath2.T" => self.bath2.temperature,
            "bath2.B" => self.bath2.field,
            "bath2.epsilon" => self.bath2.epsilon,
            "bath2.phi" => self.bath2.phi,
            other => return Err(unknown_key(other)),
        })
    }

    /// Sets a configuration key without validating the result.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "B" => &mut self.field,
            "gamma" => &mut self.gamma,
            "bath1.T" => &mut self.bath1.temperature,
            "bath1.B" => &mut self.bath1.field,
            "bath1.epsilon" => &mut self.bath1.epsilon,
            "bath1.phi" => &mut self.bath1.phi,
            "bath2.T" => &mut self.bath2.temperature,
            "bath2.B" => &mut self.bath2.field,
            "bath2.epsilon" => &mut self.bath2.epsilon,
            "bath2.phi" => &mut self.bath2.phi,
            other => return Err(unknown_key(other)),
        };
        *slot = value;
        Ok(())
    }

    /// Parses the flat `key = value` configuration text.
    ///
    /// Lines are `key = number`; `#` starts a comment. `bathN.epsilon` and
    /// `bathN.phi` default to 0, every other key is required.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let params: MachineParams = toml::from_str(text)
            .map_err(|e| Error::InvalidConfig(vec![e.message().trim().to_string()]))?;
        params.validate()?;
        Ok(params)
    }

    /// Emits the configuration text, one key per line, full precision.
    pub fn to_config_string(&self) -> String {
        CONFIG_KEYS
            .iter()
            .map(|k| format!("{k} = {:?}\n", self.get(k).expect("known key")))
            .collect()
    }

    /// `key=value` pairs joined by `;`, used in output headers.
    pub fn summary(&self) -> String {
        CONFIG_KEYS
            .iter()
            .map(|k| format!("{k}={:?}", self.get(k).expect("known key")))
            .collect::<Vec<_>>()
            .join(";")
    }
}

fn unknown_key(key: &str) -> Error {
    Error::InvalidConfig(vec![format!(
        "unknown parameter `{key}` (expected one of {})",
        CONFIG_KEYS.join(", ")
    )])
}

/// Operators on the 8-dimensional `system ⊗ ancilla 1 ⊗ ancilla 2` space.
///
/// `coupling` is the interaction without its `1/√τ` prefactor:
/// `Σ_i g_i (σ+ σ-_{E,i} + σ- σ+_{E,i})`.
#[derive(Clone, Debug)]
pub struct JointOperators {
    pub h_system: ComplexMatrix,
    pub h_ancilla1: ComplexMatrix,
    pub h_ancilla2: ComplexMatrix,
    pub coupling1: ComplexMatrix,
    pub coupling2: ComplexMatrix,
}

impl JointOperators {
    pub fn new(params: &MachineParams) -> Self {
        let id = pauli::identity();
        let (sp, sm, sz) = (pauli::sigma_plus(), pauli::sigma_minus(), pauli::sigma_z());
        let lift = |a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix| {
            tensor3(a, b, c).expect("three qubits fit in dimension 8")
        };
        let g1 = params.bath1.coupling_strength(params.gamma);
        let g2 = params.bath2.coupling_strength(params.gamma);
        let exchange1 = &lift(&sp, &sm, &id) + &lift(&sm, &sp, &id);
        let exchange2 = &lift(&sp, &id, &sm) + &lift(&sm, &id, &sp);
        Self {
            h_system: lift(&sz, &id, &id).scale_real(params.field),
            h_ancilla1: lift(&id, &sz, &id).scale_real(params.bath1.field),
            h_ancilla2: lift(&id, &id, &sz).scale_real(params.bath2.field),
            coupling1: exchange1.scale_real(g1),
            coupling2: exchange2.scale_real(g2),
        }
    }

    pub fn h_ancilla(&self, which: Bath) -> &ComplexMatrix {
        match which {
            Bath::One => &self.h_ancilla1,
            Bath::Two => &self.h_ancilla2,
        }
    }

    pub fn coupling(&self) -> ComplexMatrix {
        &self.coupling1 + &self.coupling2
    }

    /// `H_S + H_E`.
    pub fn free(&self) -> ComplexMatrix {
        &(&self.h_system + &self.h_ancilla1) + &self.h_ancilla2
    }
}
