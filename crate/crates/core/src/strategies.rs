//! Measurement strategies: finite POVMs with a guess per outcome, and covariant
//! POVMs generated by a seed effect `E↑` with the guess `g(m) = m`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnqiError};
use crate::morphisms::j_morphism;
use crate::qmat::{c, pauli, ComplexMatrix, ZERO};
use crate::sphere::{
    su2_of_rotation, tetrahedron_directions, Direction, Rotation, SphereQuadrature,
};

/// Completeness and positivity tolerance for POVMs.
pub const POVM_TOL: f64 = 1e-10;
const PHASE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitePovm {
    effects: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl FinitePovm {
    pub fn new(effects: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Self> {
        let povm = Self::unchecked(effects, labels)?;
        let residual = povm.completeness_residual();
        if residual > POVM_TOL {
            return Err(SnqiError::NotNormalized {
                trace: 1.0 + residual,
            });
        }
        let min_eigenvalue = povm.min_effect_eigenvalue()?;
        if min_eigenvalue < -POVM_TOL {
            return Err(SnqiError::NotPositive { min_eigenvalue });
        }
        Ok(povm)
    }

    fn unchecked(effects: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Self> {
        let dim = effects
            .first()
            .ok_or_else(|| SnqiError::Degenerate("POVM without effects".into()))?
            .dim();
        if labels.len() != effects.len() {
            return Err(SnqiError::DimensionMismatch {
                expected: effects.len(),
                found: labels.len(),
            });
        }
        let mut hermitian = Vec::with_capacity(effects.len());
        for e in effects {
            if e.dim() != dim {
                return Err(SnqiError::DimensionMismatch {
                    expected: dim,
                    found: e.dim(),
                });
            }
            hermitian.push(e.hermitize()?);
        }
        Ok(Self {
            effects: hermitian,
            labels,
        })
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// `max |Σ E_y − 1|`.
    pub fn completeness_residual(&self) -> f64 {
        let sum = self
            .effects
            .iter()
            .skip(1)
            .fold(self.effects[0].clone(), |acc, e| &acc + e);
        sum.max_abs_diff(&ComplexMatrix::identity(self.dim()))
    }

    pub fn min_effect_eigenvalue(&self) -> Result<f64> {
        self.effects
            .iter()
            .try_fold(f64::INFINITY, |m, e| Ok(m.min(e.min_eigenvalue()?)))
    }
}

/// A POVM `{E_m = V(R_m) E↑ V(R_m)†}` indexed by directions `m`, where `V` acts
/// as `U^{⊗copies}` on the qubits and as the identity on any flag factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariantPovm {
    seed_effect: ComplexMatrix,
    copies: usize,
    /// Total dimension of the flag factors `H'` (1 when absent).
    flag_dim: usize,
}

impl CovariantPovm {
    pub fn new(seed_effect: ComplexMatrix, copies: usize, flag_dim: usize) -> Result<Self> {
        let expected = 2usize.pow(copies as u32) * flag_dim;
        if seed_effect.dim() != expected {
            return Err(SnqiError::DimensionMismatch {
                expected,
                found: seed_effect.dim(),
            });
        }
        let seed_effect = seed_effect.hermitize()?;
        let min_eigenvalue = seed_effect.min_eigenvalue()?;
        if min_eigenvalue < -POVM_TOL {
            return Err(SnqiError::NotPositive { min_eigenvalue });
        }
        Ok(Self {
            seed_effect,
            copies,
            flag_dim,
        })
    }

    pub fn seed_effect(&self) -> &ComplexMatrix {
        &self.seed_effect
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn dim(&self) -> usize {
        self.seed_effect.dim()
    }

    /// Image of a rotation on the measured space. On a flagged qubit this is
    /// `U ⊗ |0⟩⟨0| + σ₂U*σ₂ ⊗ |1⟩⟨1|`, which equals `U ⊗ 1` for `U ∈ SU(2)`.
    pub fn representation(&self, r: &Rotation) -> ComplexMatrix {
        let u = su2_of_rotation(r);
        let qubits = (0..self.copies).fold(ComplexMatrix::identity(1), |acc, _| acc.kron(&u));
        if self.flag_dim == 1 {
            return qubits;
        }
        let y = pauli::y();
        let flipped = y.matmul(&u.conj()).matmul(&y);
        if self.copies == 1 && self.flag_dim == 2 {
            return &u.kron(&pauli::proj0()) + &flipped.kron(&pauli::proj1());
        }
        qubits.kron(&ComplexMatrix::identity(self.flag_dim))
    }

    /// `E_m` for the rotation taking `↑` to `m`.
    pub fn effect(&self, m: &Direction) -> ComplexMatrix {
        let v = self.representation(&Rotation::taking_up_to(m));
        self.seed_effect.conjugate_by(&v)
    }

    /// `∫ E_m dm`, which is the identity for a valid covariant POVM.
    pub fn orbit_average(&self, q: &SphereQuadrature) -> Result<ComplexMatrix> {
        q.integrate_matrix(|m| self.effect(m))
    }

    pub fn orbit_residual(&self, q: &SphereQuadrature) -> Result<f64> {
        Ok(self
            .orbit_average(q)?
            .max_abs_diff(&ComplexMatrix::identity(self.dim())))
    }

    /// The same POVM acting on a flagged qubit through `E ↦ J(E)`.
    pub fn flagged(&self) -> Result<CovariantPovm> {
        if self.copies != 1 || self.flag_dim != 1 {
            return Err(SnqiError::Degenerate(
                "only an unflagged single-copy POVM can be lifted".into(),
            ));
        }
        let lifted = j_morphism().apply(&self.seed_effect)?;
        CovariantPovm::new(lifted, 1, 2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasurementStrategy {
    Finite {
        label: String,
        povm: FinitePovm,
        guesses: Vec<Direction>,
    },
    /// Outcome `m` is guessed as `m` itself.
    Covariant { label: String, povm: CovariantPovm },
}

impl MeasurementStrategy {
    pub fn finite(
        label: impl Into<String>,
        povm: FinitePovm,
        guesses: Vec<Direction>,
    ) -> Result<Self> {
        if guesses.len() != povm.len() {
            return Err(SnqiError::DimensionMismatch {
                expected: povm.len(),
                found: guesses.len(),
            });
        }
        Ok(Self::Finite {
            label: label.into(),
            povm,
            guesses,
        })
    }

    pub fn covariant(label: impl Into<String>, povm: CovariantPovm) -> Self {
        Self::Covariant {
            label: label.into(),
            povm,
        }
    }

    /// A single identity effect with a fixed guess.
    pub fn trivial(dim: usize, guess: Direction) -> Self {
        let povm = FinitePovm::new(vec![ComplexMatrix::identity(dim)], vec!["1".into()])
            .expect("identity is a POVM");
        Self::Finite {
            label: "trivial".into(),
            povm,
            guesses: vec![guess],
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Self::Finite { label, .. } | Self::Covariant { label, .. } => label,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Finite { povm, .. } => povm.dim(),
            Self::Covariant { povm, .. } => povm.dim(),
        }
    }

    /// Same strategy applied to a flagged single-copy carrier via `J`.
    pub fn flagged(&self) -> Result<Self> {
        match self {
            Self::Covariant { label, povm } => Ok(Self::Covariant {
                label: format!("J({label})"),
                povm: povm.flagged()?,
            }),
            Self::Finite {
                label,
                povm,
                guesses,
            } => {
                let j = j_morphism();
                let effects = povm
                    .effects()
                    .iter()
                    .map(|e| j.apply(e))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::Finite {
                    label: format!("J({label})"),
                    povm: FinitePovm::new(effects, povm.labels().to_vec())?,
                    guesses: guesses.clone(),
                })
            }
        }
    }
}

fn check_r3(r3: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&r3) {
        return Err(SnqiError::OutOfRange {
            name: "r3",
            value: r3,
            reason: "seed effect 1 + r3·σ3 is positive only for |r3| <= 1",
        });
    }
    Ok(r3)
}

/// Single-copy covariant strategy with seed `E↑ = 1 + r₃σ₃`.
pub fn single_copy_covariant(r3: f64) -> Result<MeasurementStrategy> {
    let r3 = check_r3(r3)?;
    let seed = pauli::bloch_operator(1.0, [0.0, 0.0, r3]);
    Ok(MeasurementStrategy::covariant(
        format!("cov1[r3={r3}]"),
        CovariantPovm::new(seed, 1, 1)?,
    ))
}

/// Density `tr[ρ_{n,δ} E↑] = (1 − δ) r₃ cos θ + 1`.
pub fn single_copy_density(r3: f64, delta: f64, cos_theta: f64) -> f64 {
    (1.0 - delta) * r3 * cos_theta + 1.0
}

pub(crate) fn check_alpha_gamma(alpha: f64, gamma: f64) -> Result<()> {
    if !(alpha.is_finite() && gamma.is_finite()) {
        return Err(SnqiError::NonFinite { index: 0 });
    }
    if gamma > 1.0 + 1e-12 {
        return Err(SnqiError::OutOfRange {
            name: "gamma",
            value: gamma,
            reason: "positivity requires gamma <= 1",
        });
    }
    if alpha.abs() > gamma / 2.0 + 1.0 + 1e-12 {
        return Err(SnqiError::OutOfRange {
            name: "alpha",
            value: alpha,
            reason: "positivity requires |alpha| <= gamma/2 + 1",
        });
    }
    Ok(())
}

/// Seed of the two-copy covariant family,
/// `1 + (α/2)(σ₃⊗1 + 1⊗σ₃) + (γ/4)(2σ₃⊗σ₃ − σ₁⊗σ₁ − σ₂⊗σ₂)`.
///
/// Its eigenvalues are `1 ± α + γ/2` on `|00⟩, |11⟩`, `1 − γ` on the symmetric
/// `|01⟩ + |10⟩` and `1` on the singlet, so it is positive exactly on
/// `|α| ≤ γ/2 + 1, γ ≤ 1`, and its density on `ρ_n ⊗ ρ_n` is
/// `(3γ/4)cos²θ + α cos θ + 1 − γ/4`.
pub fn two_copy_seed(alpha: f64, gamma: f64) -> Result<ComplexMatrix> {
    check_alpha_gamma(alpha, gamma)?;
    let [x, y, z] = pauli::all();
    let id = pauli::identity();
    let linear = &z.kron(&id) + &id.kron(&z);
    let quadratic = &(&z.kron(&z).scale(2.0) - &x.kron(&x)) - &y.kron(&y);
    let seed =
        &(&ComplexMatrix::identity(4) + &linear.scale(alpha / 2.0)) + &quadratic.scale(gamma / 4.0);
    Ok(seed)
}

pub fn two_copy_covariant(alpha: f64, gamma: f64) -> Result<MeasurementStrategy> {
    let seed = two_copy_seed(alpha, gamma)?;
    Ok(MeasurementStrategy::covariant(
        format!("cov2[alpha={alpha},gamma={gamma}]"),
        CovariantPovm::new(seed, 2, 1)?,
    ))
}

/// `tr[ρ_n ⊗ ρ_n E↑] = (3γ/4)cos²θ + α cos θ + 1 − γ/4`.
pub fn two_copy_density(alpha: f64, gamma: f64, cos_theta: f64) -> f64 {
    0.75 * gamma * cos_theta * cos_theta + alpha * cos_theta + 1.0 - 0.25 * gamma
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    /// Built from `|nᵢ⟩`.
    Plus,
    /// Built from the spin-flipped `|−nᵢ⟩`.
    Minus,
}

/// `(|01⟩ − |10⟩)/√2`.
pub fn singlet() -> [Complex64; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [ZERO, c(s, 0.0), c(-s, 0.0), ZERO]
}

fn kron_ket(a: &[Complex64; 2], b: &[Complex64; 2]) -> [Complex64; 4] {
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Kets `|±nᵢ⟩` for the tetrahedron vertices. The minus kets use the
/// spin-flip convention `iσ₂K|n⟩`.
fn tetra_kets(kind: Parity) -> [[Complex64; 2]; 4] {
    tetrahedron_directions().map(|n| match kind {
        Parity::Plus => n.ket(),
        Parity::Minus => n.flipped_ket(),
    })
}

fn parallel_with_phases(kind: Parity, phases: &[f64; 4]) -> [[Complex64; 4]; 4] {
    let kets = tetra_kets(kind);
    let s = singlet();
    let w = 3f64.sqrt() / 2.0;
    std::array::from_fn(|i| {
        let kk = kron_ket(&kets[i], &kets[i]);
        let ph = Complex64::from_polar(w, phases[i]);
        std::array::from_fn(|k| ph * kk[k] + 0.5 * s[k])
    })
}

fn gram_residual(states: &[[Complex64; 4]]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in states.iter().enumerate() {
        for (j, b) in states.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((inner(a, b) - expected).norm());
        }
    }
    worst
}

/// Phases found for one parallel family, with the gauge `φ₀ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TetraPhases {
    pub kind: Parity,
    pub phases: [f64; 4],
    pub gram_residual: f64,
    pub newton_steps: usize,
    /// Whether one common phase on all four vectors would have sufficed.
    pub single_phase: bool,
}

/// Solves for per-index phases `φᵢ` such that
/// `|A±ᵢ⟩ = (√3/2) e^{iφᵢ}|±nᵢ ±nᵢ⟩ + ½|Ψ⁻⟩` are orthonormal.
///
/// Orthogonality to index 0 fixes `φᵢ = π − arg⟨k₀|kᵢ⟩` with `kᵢ = |±nᵢ ±nᵢ⟩`;
/// Newton iteration on the remaining off-diagonal Gram entries then polishes
/// the solution to machine precision.
pub fn solve_tetra_phases(kind: Parity) -> Result<TetraPhases> {
    let kets = tetra_kets(kind);
    let kk: Vec<[Complex64; 4]> = kets.iter().map(|k| kron_ket(k, k)).collect();
    let mut phases = [0.0; 4];
    for i in 1..4 {
        phases[i] = std::f64::consts::PI - inner(&kk[0], &kk[i]).arg();
    }
    // residual r_{ij} = 3/4 e^{i(φ_j − φ_i)} ⟨k_i|k_j⟩ + 1/4 for i < j
    let residuals = |p: &[f64; 4]| -> Vec<f64> {
        let mut r = Vec::with_capacity(12);
        for i in 0..4 {
            for j in i + 1..4 {
                let z = Complex64::from_polar(0.75, p[j] - p[i]) * inner(&kk[i], &kk[j]) + 0.25;
                r.push(z.re);
                r.push(z.im);
            }
        }
        r
    };
    let mut steps = 0;
    for _ in 0..50 {
        let r = residuals(&phases);
        let norm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm < 1e-15 {
            break;
        }
        // Gauss–Newton on φ₁..φ₃ with a central-difference Jacobian
        let h = 1e-7;
        let mut jac = nalgebra::DMatrix::<f64>::zeros(r.len(), 3);
        for k in 0..3 {
            let mut plus = phases;
            let mut minus = phases;
            plus[k + 1] += h;
            minus[k + 1] -= h;
            let (rp, rm) = (residuals(&plus), residuals(&minus));
            for row in 0..r.len() {
                jac[(row, k)] = (rp[row] - rm[row]) / (2.0 * h);
            }
        }
        let rv = nalgebra::DVector::from_vec(r);
        let svd = jac.svd(true, true);
        let step = svd
            .solve(&rv, 1e-12)
            .map_err(|e| SnqiError::Solver(e.to_string()))?;
        for k in 0..3 {
            phases[k + 1] -= step[k];
        }
        steps += 1;
    }
    for p in phases.iter_mut().skip(1) {
        *p = p.rem_euclid(std::f64::consts::TAU);
    }
    let gram = gram_residual(&parallel_with_phases(kind, &phases));
    if gram > PHASE_TOL {
        return Err(SnqiError::NoConvergence {
            what: "tetrahedral phase solver",
            residual: gram,
        });
    }
    let single_phase = phases
        .iter()
        .all(|p| Complex64::from_polar(1.0, *p - phases[0]).re > 1.0 - 1e-9);
    Ok(TetraPhases {
        kind,
        phases,
        gram_residual: gram,
        newton_steps: steps,
        single_phase,
    })
}

/// The four orthonormal parallel-spin vectors `|A±ᵢ⟩`.
pub fn parallel_states(kind: Parity) -> Result<[[Complex64; 4]; 4]> {
    let phases = solve_tetra_phases(kind)?;
    Ok(parallel_with_phases(kind, &phases.phases))
}

/// `a = (3√3 + 1)/(4√2)` and `b = (√3 − 1)/(4√2)`.
pub fn antiparallel_coefficients() -> (f64, f64) {
    let s3 = 3f64.sqrt();
    let d = 4.0 * std::f64::consts::SQRT_2;
    ((3.0 * s3 + 1.0) / d, (s3 - 1.0) / d)
}

/// `|B⁺ᵢ⟩ = a|nᵢ⟩|−nᵢ⟩ − b Σ_{j≠i}|nⱼ⟩|−nⱼ⟩`; the minus family swaps the factors.
pub fn antiparallel_states(kind: Parity) -> [[Complex64; 4]; 4] {
    let (a, b) = antiparallel_coefficients();
    let up = tetra_kets(Parity::Plus);
    let down = tetra_kets(Parity::Minus);
    let pairs: Vec<[Complex64; 4]> = (0..4)
        .map(|j| match kind {
            Parity::Plus => kron_ket(&up[j], &down[j]),
            Parity::Minus => kron_ket(&down[j], &up[j]),
        })
        .collect();
    std::array::from_fn(|i| {
        std::array::from_fn(|k| {
            let others: Complex64 = (0..4).filter(|&j| j != i).map(|j| pairs[j][k]).sum();
            a * pairs[i][k] - b * others
        })
    })
}

/// Four-outcome measurement on two flagged copies, ordered `H ⊗ H ⊗ H' ⊗ H'`:
/// `Eᵢ = A⁺ᵢ⊗|00⟩⟨00| + A⁻ᵢ⊗|11⟩⟨11| + B⁺ᵢ⊗|01⟩⟨01| + B⁻ᵢ⊗|10⟩⟨10|` with guess `nᵢ`.
pub fn tetra_two_copy_tau_povm() -> Result<MeasurementStrategy> {
    let a_plus = parallel_states(Parity::Plus)?;
    let a_minus = parallel_states(Parity::Minus)?;
    let b_plus = antiparallel_states(Parity::Plus);
    let b_minus = antiparallel_states(Parity::Minus);
    let flags = |f1: usize, f2: usize| {
        let p = |f: usize| {
            if f == 0 {
                pauli::proj0()
            } else {
                pauli::proj1()
            }
        };
        p(f1).kron(&p(f2))
    };
    let effects = (0..4)
        .map(|i| {
            let terms = [
                (&a_plus[i], flags(0, 0)),
                (&a_minus[i], flags(1, 1)),
                (&b_plus[i], flags(0, 1)),
                (&b_minus[i], flags(1, 0)),
            ];
            terms
                .iter()
                .map(|(v, f)| ComplexMatrix::projector(&v[..]).kron(f))
                .reduce(|acc, m| &acc + &m)
                .expect("four terms")
        })
        .collect();
    let labels = (0..4).map(|i| format!("n{i}")).collect();
    let povm = FinitePovm::new(effects, labels)?;
    MeasurementStrategy::finite("tetra2", povm, tetrahedron_directions().to_vec())
}

/// `⟨A⁺₀|ρ_{n,δ}⊗ρ_{n,δ}|A⁺₀⟩ = [3q²c² + 6qc + (1 + δ)(3 − δ)]/16`, `q = 1 − δ`.
pub fn parallel_density(delta: f64, cos_theta: f64) -> f64 {
    let q = 1.0 - delta;
    (3.0 * q * q * cos_theta * cos_theta + 6.0 * q * cos_theta - (delta + 1.0) * (delta - 3.0))
        / 16.0
}

/// `⟨B⁺₀|ρ_{n,δ}⊗ρ_{−n,δ}|B⁺₀⟩ = [3q²c² + 2√3 qc − (δ² − 2δ − 1)]/8`.
pub fn antiparallel_density(delta: f64, cos_theta: f64) -> f64 {
    let q = 1.0 - delta;
    (3.0 * q * q * cos_theta * cos_theta + 2.0 * 3f64.sqrt() * q * cos_theta
        - (delta * delta - 2.0 * delta - 1.0))
        / 8.0
}

/// `tr[τ_{n,δ}^{⊗2} E₀] = [9q²c² + (6 + 4√3)qc + 8 − 3q²]/32`.
pub fn tetra_tau_density(delta: f64, cos_theta: f64) -> f64 {
    0.5 * (parallel_density(delta, cos_theta) + antiparallel_density(delta, cos_theta))
}
