//! Declarative logical circuits.
//!
//! JSON schema, version 1:
//!
//! ```json
//! {"version": 1, "qubits": 2,
//!  "steps": [{"phi": [0.1, 0.2], "theta": [0.3, 0.0], "gamma": [0.785]}]}
//! ```
//!
//! Each step `q` stands for `U_q = (Π_k e^{iφ_k Z_k})(Π_k e^{iθ_k X_k})(Π_k e^{iγ_k Z_k Z_{k+1}})`
//! and the whole circuit for `U = U_1 U_2 ⋯ U_Q`, so the last step acts
//! first and, inside a step, the `ZZ` layer acts first. Angles are radians.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::LogicalGate;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitStep {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub gamma: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogicalCircuit {
    #[serde(default = "default_version")]
    pub version: u32,
    pub qubits: usize,
    pub steps: Vec<CircuitStep>,
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}

impl LogicalCircuit {
    pub fn new(qubits: usize, steps: Vec<CircuitStep>) -> Result<Self> {
        let c = Self {
            version: SCHEMA_VERSION,
            qubits,
            steps,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn empty(qubits: usize) -> Self {
        Self {
            version: SCHEMA_VERSION,
            qubits,
            steps: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::InvalidCircuit(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::InvalidCircuit(format!(
                "unsupported schema version {}",
                self.version
            )));
        }
        if self.qubits == 0 {
            return Err(Error::InvalidCircuit("circuit needs at least one qubit".into()));
        }
        let k = self.qubits;
        for (i, s) in self.steps.iter().enumerate() {
            let lens = (s.phi.len(), s.theta.len(), s.gamma.len());
            if lens != (k, k, k - 1) {
                return Err(Error::InvalidCircuit(format!(
                    "step {i}: angle list lengths {lens:?}, expected ({k}, {k}, {})",
                    k - 1
                )));
            }
            if s.phi.iter().chain(&s.theta).chain(&s.gamma).any(|x| !x.is_finite()) {
                return Err(Error::InvalidCircuit(format!("step {i}: non-finite angle")));
            }
        }
        Ok(())
    }

    /// Gates in the order they act on the state.
    pub fn gates(&self) -> Vec<LogicalGate> {
        let mut out = Vec::new();
        for step in self.steps.iter().rev() {
            for (k, &theta) in step.gamma.iter().enumerate() {
                out.push(LogicalGate::ZZ { first: k, second: k + 1, theta });
            }
            for (qubit, &theta) in step.theta.iter().enumerate() {
                out.push(LogicalGate::X { qubit, theta });
            }
            for (qubit, &theta) in step.phi.iter().enumerate() {
                out.push(LogicalGate::Z { qubit, theta });
            }
        }
        out
    }

    /// Circuit with angles drawn uniformly from `[−π, π)`.
    pub fn random<R: Rng>(qubits: usize, steps: usize, rng: &mut R) -> Self {
        let mut angle = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect()
        };
        let steps = (0..steps)
            .map(|_| CircuitStep {
                phi: angle(qubits),
                theta: angle(qubits),
                gamma: angle(qubits.saturating_sub(1)),
            })
            .collect();
        Self {
            version: SCHEMA_VERSION,
            qubits,
            steps,
        }
    }
}
