//! Linear maps between operator spaces, stored as Choi matrices.
//!
//! The Choi matrix of `Φ: B(C^a) → B(C^b)` is `Σ_{ij} |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`, input
//! factor first. The maps here reproduce the measurement statistics of one
//! carrier family from another: `tr[Λ_δ(E) ρ_n] = tr[E τ_{n,δ}]` and
//! `tr[J(E) τ_{n,δ}] = tr[E ρ_{n,δ}]`.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, ZeroConeT,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{check_delta, rho_n, rho_n_delta, tau_n_delta};
use crate::error::{Result, SnqiError};
use crate::qmat::{c, pauli, permutation_matrix, random_hermitian, ComplexMatrix, ZERO};
use crate::sphere::Direction;

/// Choi eigenvalues at or above this are treated as nonnegative.
pub const CP_TOL: f64 = 1e-10;
/// Default number of sampled inputs in a positivity report.
pub const POSITIVITY_SAMPLES: usize = 10_000;
const CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Superoperator {
    in_dim: usize,
    out_dim: usize,
    choi: ComplexMatrix,
    label: String,
}

impl Superoperator {
    /// Tabulates `f` on the matrix units of the input space.
    pub fn from_fn(
        in_dim: usize,
        out_dim: usize,
        label: impl Into<String>,
        f: impl Fn(&ComplexMatrix) -> ComplexMatrix,
    ) -> Self {
        let n = in_dim * out_dim;
        let mut choi = ComplexMatrix::zeros(n);
        for i in 0..in_dim {
            for j in 0..in_dim {
                let image = f(&ComplexMatrix::unit(in_dim, i, j));
                debug_assert_eq!(image.dim(), out_dim);
                for k in 0..out_dim {
                    for l in 0..out_dim {
                        choi[(i * out_dim + k, j * out_dim + l)] = image[(k, l)];
                    }
                }
            }
        }
        Self {
            in_dim,
            out_dim,
            choi,
            label: label.into(),
        }
    }

    pub fn from_choi(
        in_dim: usize,
        out_dim: usize,
        choi: ComplexMatrix,
        label: impl Into<String>,
    ) -> Result<Self> {
        if choi.dim() != in_dim * out_dim {
            return Err(SnqiError::DimensionMismatch {
                expected: in_dim * out_dim,
                found: choi.dim(),
            });
        }
        Ok(Self {
            in_dim,
            out_dim,
            choi,
            label: label.into(),
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `Φ(X) = Σ_{ij} X_{ij} Φ(|i⟩⟨j|)`, read off the Choi blocks.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.dim() != self.in_dim {
            return Err(SnqiError::DimensionMismatch {
                expected: self.in_dim,
                found: x.dim(),
            });
        }
        let (a, b) = (self.in_dim, self.out_dim);
        let mut out = ComplexMatrix::zeros(b);
        for i in 0..a {
            for j in 0..a {
                let xij = x[(i, j)];
                if xij == ZERO {
                    continue;
                }
                for k in 0..b {
                    for l in 0..b {
                        out[(k, l)] += xij * self.choi[(i * b + k, j * b + l)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Transfer matrix acting on row-major vectorized operators.
    fn transfer(&self) -> Vec<Complex64> {
        let (a, b) = (self.in_dim, self.out_dim);
        let cols = a * a;
        let mut t = vec![ZERO; b * b * cols];
        for i in 0..a {
            for j in 0..a {
                for k in 0..b {
                    for l in 0..b {
                        t[(k * b + l) * cols + i * a + j] = self.choi[(i * b + k, j * b + l)];
                    }
                }
            }
        }
        t
    }

    fn from_transfer(in_dim: usize, out_dim: usize, t: &[Complex64], label: String) -> Self {
        let (a, b) = (in_dim, out_dim);
        let cols = a * a;
        let mut choi = ComplexMatrix::zeros(a * b);
        for i in 0..a {
            for j in 0..a {
                for k in 0..b {
                    for l in 0..b {
                        choi[(i * b + k, j * b + l)] = t[(k * b + l) * cols + i * a + j];
                    }
                }
            }
        }
        Self {
            in_dim,
            out_dim,
            choi,
            label,
        }
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &Superoperator) -> Result<Superoperator> {
        if inner.out_dim != self.in_dim {
            return Err(SnqiError::DimensionMismatch {
                expected: self.in_dim,
                found: inner.out_dim,
            });
        }
        let outer_t = self.transfer();
        let inner_t = inner.transfer();
        let (rows, mid, cols) = (
            self.out_dim * self.out_dim,
            self.in_dim * self.in_dim,
            inner.in_dim * inner.in_dim,
        );
        let mut t = vec![ZERO; rows * cols];
        for r in 0..rows {
            for m in 0..mid {
                let x = outer_t[r * mid + m];
                if x == ZERO {
                    continue;
                }
                for col in 0..cols {
                    t[r * cols + col] += x * inner_t[m * cols + col];
                }
            }
        }
        Ok(Self::from_transfer(
            inner.in_dim,
            self.out_dim,
            &t,
            format!("{}∘{}", self.label, inner.label),
        ))
    }

    /// `self ⊗ other` acting on `B(C^a ⊗ C^c) → B(C^b ⊗ C^d)`.
    pub fn tensor(&self, other: &Superoperator) -> Superoperator {
        let dims = [self.in_dim, self.out_dim, other.in_dim, other.out_dim];
        let choi = self
            .choi
            .kron(&other.choi)
            .permute_subsystems(&dims, &[0, 2, 1, 3])
            .expect("dimensions agree by construction");
        Self {
            in_dim: self.in_dim * other.in_dim,
            out_dim: self.out_dim * other.out_dim,
            choi,
            label: format!("{}⊗{}", self.label, other.label),
        }
    }

    /// Precomposes with a reordering of input tensor factors: the returned map
    /// accepts operators whose factor `k` is factor `perm[k]` of the original input.
    pub fn with_permuted_input(&self, dims: &[usize], perm: &[usize]) -> Result<Superoperator> {
        let p = permutation_matrix(dims, perm)?;
        if p.dim() != self.in_dim {
            return Err(SnqiError::DimensionMismatch {
                expected: self.in_dim,
                found: p.dim(),
            });
        }
        let pt = p.transpose();
        Ok(Self::from_fn(
            self.in_dim,
            self.out_dim,
            self.label.clone(),
            |x| {
                self.apply(&pt.matmul(x).matmul(&p))
                    .expect("dimension checked above")
            },
        ))
    }

    /// `max |Φ(1) − 1|`.
    pub fn unitality_residual(&self) -> f64 {
        let image = self
            .apply(&ComplexMatrix::identity(self.in_dim))
            .expect("identity has the input dimension");
        image.max_abs_diff(&ComplexMatrix::identity(self.out_dim))
    }

    pub fn choi_eigenvalues(&self) -> Result<Vec<f64>> {
        self.choi.eigenvalues()
    }
}

pub fn identity_map(dim: usize) -> Superoperator {
    Superoperator::from_fn(dim, dim, "id", |x| x.clone())
}

pub fn transpose_map(dim: usize) -> Superoperator {
    Superoperator::from_fn(dim, dim, "T", |x| x.transpose())
}

/// `X ↦ σ₂ Xᵀ σ₂` on a qubit.
pub fn spin_flip_map() -> Superoperator {
    let y = pauli::y();
    Superoperator::from_fn(2, 2, "flip", move |x| y.matmul(&x.transpose()).matmul(&y))
}

/// `Λ₀(E) = ½ tr_{H'}[E(1⊗|0⟩⟨0|)] + ½ σ₂ {tr_{H'}[E(1⊗|1⟩⟨1|)]}ᵀ σ₂`.
pub fn lambda0() -> Superoperator {
    let y = pauli::y();
    let f0 = ComplexMatrix::identity(2).kron(&pauli::proj0());
    let f1 = ComplexMatrix::identity(2).kron(&pauli::proj1());
    Superoperator::from_fn(4, 2, "Lambda0", move |e| {
        let b0 = e.matmul(&f0).partial_trace(&[0], &[2, 2]).expect("4 = 2·2");
        let b1 = e.matmul(&f1).partial_trace(&[0], &[2, 2]).expect("4 = 2·2");
        let flipped = y.matmul(&b1.transpose()).matmul(&y);
        (&b0 + &flipped).scale(0.5)
    })
}

/// `D_δ(E) = (1 − δ)E + δ·tr(E)/2·1`, the dual of qubit depolarization.
pub fn conj_depolarizer(delta: f64) -> Result<Superoperator> {
    let delta = check_delta(delta)?;
    Ok(Superoperator::from_fn(
        2,
        2,
        format!("D[{delta}]"),
        move |e| {
            let mixed = ComplexMatrix::identity(2).scale_c(e.trace() * (0.5 * delta));
            &e.scale(1.0 - delta) + &mixed
        },
    ))
}

/// `Λ_δ = D_δ ∘ Λ₀`, with `tr[Λ_δ(E) ρ_n] = tr[E τ_{n,δ}]`.
pub fn lambda_delta(delta: f64) -> Result<Superoperator> {
    Ok(conj_depolarizer(delta)?
        .compose(&lambda0())?
        .with_label(format!("Lambda[{delta}]")))
}

/// `Λ_δ ⊗ Λ_δ` with its input in the `H ⊗ H ⊗ H' ⊗ H'` order used for two
/// flagged copies.
pub fn lambda_delta_pair(delta: f64) -> Result<Superoperator> {
    let single = lambda_delta(delta)?;
    // the tensor product expects (H₁, H'₁, H₂, H'₂); inputs arrive as (H₁, H₂, H'₁, H'₂)
    single
        .tensor(&single)
        .with_permuted_input(&[2, 2, 2, 2], &[0, 2, 1, 3])
}

/// `J(E) = E ⊗ |0⟩⟨0| + σ₂ Eᵀ σ₂ ⊗ |1⟩⟨1|`, with `tr[J(E) τ_{n,δ}] = tr[E ρ_{n,δ}]`.
pub fn j_morphism() -> Superoperator {
    let y = pauli::y();
    Superoperator::from_fn(2, 4, "J", move |e| {
        let flipped = y.matmul(&e.transpose()).matmul(&y);
        &e.kron(&pauli::proj0()) + &flipped.kron(&pauli::proj1())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub label: String,
    pub choi_eigenvalues: Vec<f64>,
    pub choi_min_eig: f64,
    /// Certified by the Choi spectrum.
    pub is_cp: bool,
    pub positivity_samples: usize,
    pub seed: u64,
    /// Worst output eigenvalue over the sampled PSD inputs.
    pub min_output_eig: f64,
}

impl PositivityReport {
    /// Positivity as observed on the samples; not a certificate.
    pub fn positive_on_samples(&self) -> bool {
        self.min_output_eig >= -CP_TOL
    }
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim);
    for _ in 0..rank {
        let v: Vec<Complex64> = (0..dim)
            .map(|_| c(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        m = &m + &ComplexMatrix::projector(&v);
    }
    let t = m.trace().re;
    m.scale(1.0 / t)
}

/// Exact Choi spectrum plus sampled positivity over random PSD inputs: even
/// samples are pure, odd samples are mixtures of random rank. Chunk `k` of the
/// sample stream uses ChaCha8 stream `k`, so the result is independent of the
/// thread count.
pub fn positivity_report(s: &Superoperator, samples: usize, seed: u64) -> Result<PositivityReport> {
    let choi_eigenvalues = s.choi_eigenvalues()?;
    let choi_min_eig = *choi_eigenvalues.last().expect("non-empty spectrum");
    let chunks = samples.div_ceil(CHUNK);
    let min_output_eig = (0..chunks)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut worst = f64::INFINITY;
            let end = ((k + 1) * CHUNK).min(samples);
            for idx in k * CHUNK..end {
                let rank = if idx % 2 == 0 {
                    1
                } else {
                    1 + (idx / 2) % s.in_dim()
                };
                let input = random_state(&mut rng, s.in_dim(), rank);
                worst = worst.min(s.apply(&input)?.min_eigenvalue()?);
            }
            Ok(worst)
        })
        .try_reduce(|| f64::INFINITY, |a, b| Ok(a.min(b)))?;
    Ok(PositivityReport {
        label: s.label().to_string(),
        choi_eigenvalues,
        choi_min_eig,
        is_cp: choi_min_eig >= -CP_TOL,
        positivity_samples: samples,
        seed,
        min_output_eig,
    })
}

/// A maximally entangled pair between the two qubits `H₁, H₂` with the first
/// flag set to 0 and the second to 1, in `H ⊗ H ⊗ H' ⊗ H'` order. Its image
/// under `Λ_δ ⊗ Λ_δ` is a partial transpose of a Bell state and fails to be
/// positive for `δ < 1 − 1/√3`, where its smallest eigenvalue is
/// `(1 − 3(1 − δ)²)/16`.
pub fn entangled_witness_input() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![ZERO; 16];
    // |00⟩|01⟩ and |11⟩|01⟩
    v[0b0001] = c(s, 0.0);
    v[0b1101] = c(s, 0.0);
    ComplexMatrix::projector(&v)
}

/// Smallest output eigenvalue of `Λ_δ ⊗ Λ_δ` on [`entangled_witness_input`].
pub fn entangled_witness_eigenvalue(delta: f64) -> Result<f64> {
    lambda_delta_pair(delta)?
        .apply(&entangled_witness_input())?
        .min_eigenvalue()
}

/// Largest `|tr[Λ_δ(E) ρ_n] − tr[E τ_{n,δ}]|` over `effects` random Hermitian
/// `E` and `nodes` random directions drawn from `seed`.
pub fn lambda_identity_residual(
    delta: f64,
    effects: usize,
    nodes: usize,
    seed: u64,
) -> Result<f64> {
    let l = lambda_delta(delta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let es: Vec<ComplexMatrix> = (0..effects)
        .map(|_| random_hermitian(&mut rng, 4))
        .collect();
    let mut worst = 0.0f64;
    for _ in 0..nodes {
        let n = Direction::random(&mut rng);
        let rho = rho_n(&n);
        let tau = tau_n_delta(&n, delta)?;
        for e in &es {
            let lhs = l.apply(e)?.trace_product(rho.matrix());
            worst = worst.max((lhs - e.trace_product(tau.matrix())).norm());
        }
    }
    Ok(worst)
}

/// Largest `|tr[J(E) τ_{n,δ}] − tr[E ρ_{n,δ}]|`, sampled as in
/// [`lambda_identity_residual`].
pub fn j_identity_residual(delta: f64, effects: usize, nodes: usize, seed: u64) -> Result<f64> {
    let j = j_morphism();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let es: Vec<ComplexMatrix> = (0..effects)
        .map(|_| random_hermitian(&mut rng, 2))
        .collect();
    let mut worst = 0.0f64;
    for _ in 0..nodes {
        let n = Direction::random(&mut rng);
        let rho = rho_n_delta(&n, delta)?;
        let tau = tau_n_delta(&n, delta)?;
        for e in &es {
            let lhs = j.apply(e)?.trace_product(tau.matrix());
            worst = worst.max((lhs - e.trace_product(rho.matrix())).norm());
        }
    }
    Ok(worst)
}

/// A column-stochastic table `p(i|x)`: `outcomes` rows, `symbols` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    outcomes: usize,
    symbols: usize,
    p: Vec<f64>,
}

impl ConditionalTable {
    /// `rows[i][x] = p(i|x)`. Columns must sum to 1 within 1e-9.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let outcomes = rows.len();
        let symbols = rows.first().map_or(0, Vec::len);
        if outcomes == 0 || symbols == 0 {
            return Err(SnqiError::Degenerate("empty alphabet".into()));
        }
        if rows.iter().any(|r| r.len() != symbols) {
            return Err(SnqiError::Degenerate("ragged conditional table".into()));
        }
        let p: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(index) = p.iter().position(|v| !v.is_finite()) {
            return Err(SnqiError::NonFinite { index });
        }
        if let Some(&v) = p.iter().find(|&&v| v < -1e-12) {
            return Err(SnqiError::OutOfRange {
                name: "probability",
                value: v,
                reason: "entries must be nonnegative",
            });
        }
        let t = Self {
            outcomes,
            symbols,
            p,
        };
        for x in 0..symbols {
            let s: f64 = (0..outcomes).map(|i| t.get(i, x)).sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(SnqiError::NotNormalized { trace: s });
            }
        }
        Ok(t)
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn get(&self, i: usize, x: usize) -> f64 {
        self.p[i * self.symbols + x]
    }

    /// `(self ∘ other)(i|x) = Σ_j self(i|j) other(j|x)`.
    pub fn compose(&self, other: &ConditionalTable) -> Result<ConditionalTable> {
        if self.symbols != other.outcomes {
            return Err(SnqiError::DimensionMismatch {
                expected: self.symbols,
                found: other.outcomes,
            });
        }
        let rows = (0..self.outcomes)
            .map(|i| {
                (0..other.symbols)
                    .map(|x| {
                        (0..self.symbols)
                            .map(|j| self.get(i, j) * other.get(j, x))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        ConditionalTable::new(rows)
    }

    /// Columns drawn uniformly from the cube and normalized.
    pub fn random(rng: &mut impl Rng, outcomes: usize, symbols: usize) -> ConditionalTable {
        let cols: Vec<Vec<f64>> = (0..symbols)
            .map(|_| {
                let col: Vec<f64> = (0..outcomes).map(|_| rng.random_range(0.01..1.0)).collect();
                let s: f64 = col.iter().sum();
                col.into_iter().map(|v| v / s).collect()
            })
            .collect();
        let rows = (0..outcomes)
            .map(|i| (0..symbols).map(|x| cols[x][i]).collect())
            .collect();
        ConditionalTable::new(rows).expect("normalized columns")
    }

    pub fn identity(n: usize) -> ConditionalTable {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        ConditionalTable::new(rows).expect("identity is stochastic")
    }
}

/// Outcome of the classical simulation search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClassicalSimulation {
    /// `L(|i⟩⟨i|) = Σ_j e'(j,i)|j⟩⟨j|` stored as the table `e'(j, i) = map.get(i, j)`.
    Map {
        map: ConditionalTable,
        residual: f64,
    },
    /// No stochastic `e'` reproduces the target statistics. `dual` is the
    /// solver's Farkas certificate for the equality block.
    Infeasible { dual: Vec<f64> },
}

/// Finds effects `e'(j, i) ≥ 0`, `Σ_i e'(j,i) = 1`, with
/// `t(i|x) = Σ_j e'(j,i) r(j|x)` for all `x`, i.e. a classical statistical map
/// from the carrier `r` to the carrier `t`. Among feasible tables the one of
/// least squared norm is returned.
pub fn classical_ensemble_map(
    tau_probs: &ConditionalTable,
    rho_probs: &ConditionalTable,
) -> Result<ClassicalSimulation> {
    if tau_probs.symbols != rho_probs.symbols {
        return Err(SnqiError::DimensionMismatch {
            expected: tau_probs.symbols,
            found: rho_probs.symbols,
        });
    }
    let (ni, nj, nx) = (tau_probs.outcomes, rho_probs.outcomes, rho_probs.symbols);
    // variable index of e'(j, i)
    let var = |j: usize, i: usize| j * ni + i;
    let nvar = ni * nj;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    for i in 0..ni {
        for x in 0..nx {
            let mut row = vec![0.0; nvar];
            for j in 0..nj {
                row[var(j, i)] = rho_probs.get(j, x);
            }
            rows.push(row);
            b.push(tau_probs.get(i, x));
        }
    }
    for j in 0..nj {
        let mut row = vec![0.0; nvar];
        for i in 0..ni {
            row[var(j, i)] = 1.0;
        }
        rows.push(row);
        b.push(1.0);
    }
    let n_eq = rows.len();
    for k in 0..nvar {
        let mut row = vec![0.0; nvar];
        row[k] = -1.0;
        rows.push(row);
        b.push(0.0);
    }
    let a = CscMatrix::from(&rows);
    let p = CscMatrix::identity(nvar);
    let q = vec![0.0; nvar];
    let cones = [ZeroConeT(n_eq), NonnegativeConeT(nvar)];
    let settings = DefaultSettings {
        verbose: false,
        tol_gap_abs: 1e-12,
        tol_gap_rel: 1e-12,
        tol_feas: 1e-12,
        max_iter: 500,
        ..DefaultSettings::default()
    };
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
        .map_err(|e| SnqiError::Solver(format!("{e:?}")))?;
    solver.solve();
    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {}
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            return Ok(ClassicalSimulation::Infeasible {
                dual: solver.solution.z[..n_eq].to_vec(),
            });
        }
        other => return Err(SnqiError::Solver(format!("{other:?}"))),
    }
    let x = &solver.solution.x;
    // clip solver noise, then renormalize each row of e' to an exact POVM
    let mut table = vec![vec![0.0; nj]; ni];
    for j in 0..nj {
        let total: f64 = (0..ni).map(|i| x[var(j, i)].max(0.0)).sum();
        for (i, row) in table.iter_mut().enumerate() {
            row[j] = x[var(j, i)].max(0.0) / total;
        }
    }
    let map = ConditionalTable::new(table)?;
    let predicted = map.compose(rho_probs)?;
    let residual = predicted
        .p
        .iter()
        .zip(&tau_probs.p)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if residual > 1e-7 {
        return Ok(ClassicalSimulation::Infeasible {
            dual: solver.solution.z[..n_eq].to_vec(),
        });
    }
    Ok(ClassicalSimulation::Map { map, residual })
}

/// Largest violation of `t(i₁|x)t(i₂|x) = Σ_{j₁j₂} e'(j₁,i₁)e'(j₂,i₂) r(j₁|x)r(j₂|x)`
/// over all outcome pairs and symbols, and of the effect conditions on `L ⊗ L`.
pub fn classical_quantitativity_residual(
    map: &ConditionalTable,
    tau_probs: &ConditionalTable,
    rho_probs: &ConditionalTable,
) -> f64 {
    let (ni, nj, nx) = (tau_probs.outcomes, rho_probs.outcomes, rho_probs.symbols);
    let e = |j: usize, i: usize| map.get(i, j);
    let mut worst = 0.0f64;
    for x in 0..nx {
        for i1 in 0..ni {
            for i2 in 0..ni {
                let lhs = tau_probs.get(i1, x) * tau_probs.get(i2, x);
                let mut rhs = 0.0;
                for j1 in 0..nj {
                    for j2 in 0..nj {
                        rhs += e(j1, i1) * e(j2, i2) * rho_probs.get(j1, x) * rho_probs.get(j2, x);
                    }
                }
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    // L ⊗ L must send every product effect to a diagonal effect, and the effects
    // must still sum to the identity
    for j1 in 0..nj {
        for j2 in 0..nj {
            let mut total = 0.0;
            for i1 in 0..ni {
                for i2 in 0..ni {
                    let v = e(j1, i1) * e(j2, i2);
                    worst = worst.max(-v).max(v - 1.0);
                    total += v;
                }
            }
            worst = worst.max((total - 1.0).abs());
        }
    }
    worst
}

/// Brute-force check of the doubled-carrier identity for a classical map.
pub fn classical_quantitativity_check(
    map: &ConditionalTable,
    tau_probs: &ConditionalTable,
    rho_probs: &ConditionalTable,
) -> bool {
    map.outcomes == tau_probs.outcomes
        && map.symbols == rho_probs.outcomes
        && classical_quantitativity_residual(map, tau_probs, rho_probs) <= 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::Ensemble;

    const DELTAS: [f64; 4] = [0.0, 0.03, 0.5, 1.0];

    fn nodes(seed: u64, count: usize) -> Vec<Direction> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| Direction::random(&mut rng)).collect()
    }

    #[test]
    fn choi_action_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = pauli::y();
        let direct = |e: &ComplexMatrix| {
            let b0 = e
                .matmul(&ComplexMatrix::identity(2).kron(&pauli::proj0()))
                .partial_trace(&[0], &[2, 2])
                .unwrap();
            let b1 = e
                .matmul(&ComplexMatrix::identity(2).kron(&pauli::proj1()))
                .partial_trace(&[0], &[2, 2])
                .unwrap();
            (&b0 + &y.matmul(&b1.transpose()).matmul(&y)).scale(0.5)
        };
        let l = lambda0();
        for _ in 0..20 {
            let e = random_hermitian(&mut rng, 4);
            assert!(l.apply(&e).unwrap().max_abs_diff(&direct(&e)) < 1e-14);
        }
        assert!(l.apply(&ComplexMatrix::identity(2)).is_err());
    }

    #[test]
    fn lambda0_examples() {
        let l = lambda0();
        assert!(l.unitality_residual() < 1e-14);
        for m in nodes(2, 10) {
            let input = rho_n(&m).matrix().kron(&pauli::proj0());
            let out = l.apply(&input).unwrap();
            assert!(out.max_abs_diff(&rho_n(&m).matrix().scale(0.5)) < 1e-14);
        }
    }

    #[test]
    fn lambda0_reproduces_tau_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = lambda0();
        let effects: Vec<_> = (0..50).map(|_| random_hermitian(&mut rng, 4)).collect();
        for delta in DELTAS {
            for n in nodes(4, 20) {
                let rho = rho_n_delta(&n, delta).unwrap();
                let tau = tau_n_delta(&n, delta).unwrap();
                for e in &effects {
                    let lhs = l.apply(e).unwrap().trace_product(rho.matrix());
                    let rhs = e.trace_product(tau.matrix());
                    assert!((lhs - rhs).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn depolarizer_examples() {
        let d0 = conj_depolarizer(0.0).unwrap();
        assert!(d0.choi().max_abs_diff(identity_map(2).choi()) < 1e-15);
        let d1 = conj_depolarizer(1.0).unwrap();
        // a traceless effect carries no information at full depolarization
        assert!(d1.apply(&pauli::z()).unwrap().max_abs() < 1e-15);
        assert!(d1.unitality_residual() < 1e-15);
        let d = conj_depolarizer(0.3).unwrap();
        let up = rho_n(&Direction::UP);
        let lhs = d.apply(&pauli::z()).unwrap().trace_product(up.matrix()).re;
        let rhs = pauli::z()
            .trace_product(rho_n_delta(&Direction::UP, 0.3).unwrap().matrix())
            .re;
        assert!((lhs - 0.7).abs() < 1e-14 && (rhs - 0.7).abs() < 1e-14);
        assert!(conj_depolarizer(1.2).is_err());
    }

    #[test]
    fn depolarizer_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for delta in DELTAS {
            let d = conj_depolarizer(delta).unwrap();
            for n in nodes(6, 20) {
                let e = random_hermitian(&mut rng, 2);
                let lhs = d.apply(&e).unwrap().trace_product(rho_n(&n).matrix());
                let rhs = e.trace_product(rho_n_delta(&n, delta).unwrap().matrix());
                assert!((lhs - rhs).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn lambda_delta_identity_and_unitality() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let effects: Vec<_> = (0..50).map(|_| random_hermitian(&mut rng, 4)).collect();
        for delta in DELTAS {
            let l = lambda_delta(delta).unwrap();
            assert!(l.unitality_residual() < 1e-12);
            for n in nodes(8, 20) {
                let rho = rho_n(&n);
                let tau = tau_n_delta(&n, delta).unwrap();
                for e in &effects {
                    let lhs = l.apply(e).unwrap().trace_product(rho.matrix());
                    assert!((lhs - e.trace_product(tau.matrix())).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn composition_matches_sequential_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let l = lambda_delta(0.3).unwrap();
        let d = conj_depolarizer(0.3).unwrap();
        let l0 = lambda0();
        for _ in 0..10 {
            let e = random_hermitian(&mut rng, 4);
            let seq = d.apply(&l0.apply(&e).unwrap()).unwrap();
            assert!(l.apply(&e).unwrap().max_abs_diff(&seq) < 1e-14);
        }
        assert!(l0.compose(&l0).is_err());
    }

    #[test]
    fn sampled_residual_helpers() {
        for delta in DELTAS {
            assert!(lambda_identity_residual(delta, 10, 10, 1).unwrap() < 1e-12);
            assert!(j_identity_residual(delta, 10, 10, 1).unwrap() < 1e-12);
        }
    }

    #[test]
    fn j_examples_and_identity() {
        let j = j_morphism();
        assert!(j.unitality_residual() < 1e-15);
        let t = tau_n_delta(&Direction::UP, 0.0).unwrap();
        let v = j.apply(&pauli::z()).unwrap().trace_product(t.matrix()).re;
        assert!((v - 1.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for delta in DELTAS {
            for n in nodes(12, 20) {
                let e = random_hermitian(&mut rng, 2);
                let lhs = j
                    .apply(&e)
                    .unwrap()
                    .trace_product(tau_n_delta(&n, delta).unwrap().matrix());
                let rhs = e.trace_product(rho_n_delta(&n, delta).unwrap().matrix());
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn transpose_and_identity_reports() {
        let t = positivity_report(&transpose_map(2), 2000, 1).unwrap();
        let mut ev = t.choi_eigenvalues.clone();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip([-1.0, 1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(!t.is_cp);
        assert!(t.min_output_eig >= -1e-12);
        let id = positivity_report(&identity_map(4), 500, 1).unwrap();
        assert!(id.is_cp && id.choi_min_eig >= -1e-12);
        let flip = positivity_report(&spin_flip_map(), 500, 1).unwrap();
        assert!(!flip.is_cp && flip.positive_on_samples());
    }

    #[test]
    fn lambda_choi_spectrum_is_linear_in_delta() {
        for delta in [0.0, 0.03, 0.3, 0.5, 0.9, 1.0] {
            let r = positivity_report(&lambda_delta(delta).unwrap(), 200, 2).unwrap();
            assert!((r.choi_min_eig - (-0.5 + 0.75 * delta)).abs() < 1e-12);
            assert_eq!(r.is_cp, delta >= 2.0 / 3.0);
            assert!(r.positive_on_samples());
        }
    }

    #[test]
    fn report_is_reproducible() {
        let l = lambda0();
        let a = positivity_report(&l, 1000, 42).unwrap();
        let b = positivity_report(&l, 1000, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pair_map_reproduces_doubled_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let delta = 0.03;
        let pair = lambda_delta_pair(delta).unwrap();
        let tau2 = Ensemble::tau(delta).unwrap().two_copies().unwrap();
        let rho2 = Ensemble::rho().two_copies().unwrap();
        for n in nodes(14, 5) {
            for _ in 0..5 {
                let e = random_hermitian(&mut rng, 16);
                let lhs = pair
                    .apply(&e)
                    .unwrap()
                    .trace_product(rho2.state(&n).matrix());
                let rhs = e.trace_product(tau2.state(&n).matrix());
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn entangled_witness_breaks_positivity() {
        for delta in [0.0, 0.03, critical()] {
            let w = entangled_witness_eigenvalue(delta).unwrap();
            assert!(w < -1e-6, "{delta}: {w}");
        }
        assert!(entangled_witness_input().min_eigenvalue().unwrap() > -1e-15);
        assert!(entangled_witness_eigenvalue(1.0).unwrap() > -1e-12);
        for delta in [0.0, 0.2, 0.4, 0.5] {
            let q = 1.0 - delta;
            let w = entangled_witness_eigenvalue(delta).unwrap();
            assert!(
                (w - (1.0 - 3.0 * q * q) / 16.0).abs() < 1e-12,
                "{delta}: {w}"
            );
        }
    }

    fn critical() -> f64 {
        crate::ensembles::critical_delta()
    }

    #[test]
    fn classical_identical_carriers() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let r = ConditionalTable::random(&mut rng, 3, 3);
        match classical_ensemble_map(&r, &r).unwrap() {
            ClassicalSimulation::Map { map, .. } => {
                // the minimum-norm simulation need not be the identity unless r is invertible
                assert!(classical_quantitativity_check(&map, &r, &r));
                let id = ConditionalTable::identity(3);
                for i in 0..3 {
                    for j in 0..3 {
                        assert!((map.get(i, j) - id.get(i, j)).abs() < 1e-6);
                    }
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn classical_perfect_carrier() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let r = ConditionalTable::identity(3);
        let t = ConditionalTable::random(&mut rng, 2, 3);
        match classical_ensemble_map(&t, &r).unwrap() {
            ClassicalSimulation::Map { map, .. } => {
                for i in 0..2 {
                    for j in 0..3 {
                        assert!((map.get(i, j) - t.get(i, j)).abs() < 1e-9);
                    }
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn classical_garbled_channel_recovered() {
        let r = ConditionalTable::new(vec![vec![0.9, 0.2], vec![0.1, 0.8]]).unwrap();
        let m = ConditionalTable::new(vec![vec![0.7, 0.25], vec![0.3, 0.75]]).unwrap();
        let t = m.compose(&r).unwrap();
        match classical_ensemble_map(&t, &r).unwrap() {
            ClassicalSimulation::Map { map, residual } => {
                assert!(residual < 1e-9);
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((map.get(i, j) - m.get(i, j)).abs() < 1e-9);
                    }
                }
                assert!(classical_quantitativity_check(&map, &t, &r));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn classical_infeasible_pair() {
        // a noisy carrier cannot simulate a perfect one
        let r = ConditionalTable::new(vec![vec![0.6, 0.4], vec![0.4, 0.6]]).unwrap();
        let t = ConditionalTable::identity(2);
        assert!(matches!(
            classical_ensemble_map(&t, &r).unwrap(),
            ClassicalSimulation::Infeasible { .. }
        ));
    }

    #[test]
    fn classical_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let r = ConditionalTable::random(&mut rng, 3, 4);
            let channel = ConditionalTable::random(&mut rng, 2, 3);
            let t = channel.compose(&r).unwrap();
            match classical_ensemble_map(&t, &r).unwrap() {
                ClassicalSimulation::Map { map, .. } => {
                    assert!(classical_quantitativity_check(&map, &t, &r));
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn degenerate_tables_rejected() {
        assert!(matches!(
            ConditionalTable::new(vec![]),
            Err(SnqiError::Degenerate(_))
        ));
        assert!(ConditionalTable::new(vec![vec![0.5], vec![0.6]]).is_err());
    }
}
