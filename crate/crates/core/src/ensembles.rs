//! The carrier families: pure qubit directions `ρ_n`, their depolarized
//! versions `ρ_{n,δ}`, the flagged qubit `τ_{n,δ}`, and two-copy doubling.
//!
//! Basis order for `H ⊗ H'` is H-major. Two copies of `τ` are stored in the
//! order `H ⊗ H ⊗ H' ⊗ H'`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SnqiError};
use crate::qmat::{pauli, permutation_matrix, ComplexMatrix, DensityOperator};
use crate::sphere::{Direction, SphereQuadrature};

/// `7 − 4√3`, the depolarization at which the flagged two-copy fidelity bound
/// meets the pure-state optimum 3/4.
pub fn critical_delta() -> f64 {
    7.0 - 4.0 * 3f64.sqrt()
}

pub(crate) fn check_delta(delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(SnqiError::OutOfRange {
            name: "delta",
            value: delta,
            reason: "depolarization must lie in [0, 1]",
        });
    }
    Ok(delta)
}

/// `ρ_n = (1 + n·σ)/2`.
pub fn rho_n(n: &Direction) -> DensityOperator {
    DensityOperator::from_trusted(pauli::bloch_operator(0.5, n.as_array()))
}

/// `ρ_{n,δ} = (1 − δ)ρ_n + δ·1/2`.
pub fn rho_n_delta(n: &Direction, delta: f64) -> Result<DensityOperator> {
    let q = 1.0 - check_delta(delta)?;
    let [x, y, z] = n.as_array();
    Ok(DensityOperator::from_trusted(pauli::bloch_operator(
        0.5,
        [q * x, q * y, q * z],
    )))
}

/// `τ_{n,δ} = ρ_{n,δ} ⊗ |0⟩⟨0|/2 + ρ_{−n,δ} ⊗ |1⟩⟨1|/2`.
pub fn tau_n_delta(n: &Direction, delta: f64) -> Result<DensityOperator> {
    let up = rho_n_delta(n, delta)?;
    let down = rho_n_delta(&-*n, delta)?;
    let m = &up.matrix().kron(&pauli::proj0()) + &down.matrix().kron(&pauli::proj1());
    Ok(DensityOperator::from_trusted(m.scale(0.5)))
}

/// Reorders `(H₁ ⊗ H'₁) ⊗ (H₂ ⊗ H'₂)` into `H₁ ⊗ H₂ ⊗ H'₁ ⊗ H'₂`.
pub fn tau_pair_permutation() -> ComplexMatrix {
    permutation_matrix(&[2, 2, 2, 2], &[0, 2, 1, 3]).expect("fixed permutation is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// Pure states `ρ_n`.
    Rho,
    /// Depolarized states `ρ_{n,δ}`.
    NoisyRho { delta: f64 },
    /// Flagged states `τ_{n,δ}` on `H ⊗ H'`.
    Tau { delta: f64 },
}

impl Family {
    pub fn delta(&self) -> Option<f64> {
        match *self {
            Family::Rho => None,
            Family::NoisyRho { delta } | Family::Tau { delta } => Some(delta),
        }
    }

    /// Operator dimension of a single carrier.
    pub fn base_dim(&self) -> usize {
        match self {
            Family::Rho | Family::NoisyRho { .. } => 2,
            Family::Tau { .. } => 4,
        }
    }
}

/// A family `n ↦ state(n)` under the uniform prior on the sphere, with a copy count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    family: Family,
    copies: usize,
}

impl Ensemble {
    pub fn rho() -> Self {
        Self {
            family: Family::Rho,
            copies: 1,
        }
    }

    pub fn noisy_rho(delta: f64) -> Result<Self> {
        Ok(Self {
            family: Family::NoisyRho {
                delta: check_delta(delta)?,
            },
            copies: 1,
        })
    }

    pub fn tau(delta: f64) -> Result<Self> {
        Ok(Self {
            family: Family::Tau {
                delta: check_delta(delta)?,
            },
            copies: 1,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn delta(&self) -> Option<f64> {
        self.family.delta()
    }

    pub fn dim(&self) -> usize {
        self.family.base_dim().pow(self.copies as u32)
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    fn single(&self, n: &Direction) -> DensityOperator {
        // δ was validated on construction
        match self.family {
            Family::Rho => rho_n(n),
            Family::NoisyRho { delta } => rho_n_delta(n, delta).expect("validated delta"),
            Family::Tau { delta } => tau_n_delta(n, delta).expect("validated delta"),
        }
    }

    /// The carrier state for direction `n`.
    pub fn state(&self, n: &Direction) -> DensityOperator {
        let one = self.single(n);
        if self.copies == 1 {
            return one;
        }
        let doubled = one.matrix().kron(one.matrix());
        match self.family {
            Family::Tau { .. } => {
                let p = tau_pair_permutation();
                DensityOperator::from_trusted(p.matmul(&doubled).matmul(&p.transpose()))
            }
            _ => DensityOperator::from_trusted(doubled),
        }
    }

    /// The same family supplied as `state(n) ⊗ state(n)`.
    pub fn two_copies(&self) -> Result<Self> {
        if self.copies != 1 {
            return Err(SnqiError::AlreadyDoubled {
                label: self.label(),
            });
        }
        Ok(Self {
            family: self.family,
            copies: 2,
        })
    }

    /// `∫ state(n) dn`.
    pub fn average_state(&self, q: &SphereQuadrature) -> Result<DensityOperator> {
        let m = q.integrate_matrix(|n| self.state(n).into_matrix())?;
        DensityOperator::new(m)
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Rho => write!(f, "rho")?,
            Family::NoisyRho { delta } => write!(f, "rho[delta={delta}]")?,
            Family::Tau { delta } => write!(f, "tau[delta={delta}]")?,
        }
        if self.copies > 1 {
            write!(f, "^{}", self.copies)?;
        }
        Ok(())
    }
}
