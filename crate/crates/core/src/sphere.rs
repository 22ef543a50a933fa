//! Unit-sphere geometry: directions, rotations with their SU(2) images, and
//! integration against the normalized uniform measure `dn`.

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{Unit, UnitQuaternion, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnqiError};
use crate::qmat::{c, ComplexMatrix};

/// Default number of Gauss–Legendre nodes in `u = cos θ`.
pub const DEFAULT_THETA_NODES: usize = 64;
/// Default number of uniform nodes in `φ`.
pub const DEFAULT_PHI_NODES: usize = 64;
/// Default Monte-Carlo sample count for oracle cross-checks.
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 0x5eed_2024_0718_0575;

const UNIT_TOL: f64 = 1e-12;

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    x: f64,
    y: f64,
    z: f64,
}

impl Direction {
    pub const UP: Direction = Direction {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };

    /// Accepts only vectors whose norm is 1 within `1e-12`.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
            return Err(SnqiError::OutOfRange {
                name: "direction norm",
                value: norm,
                reason: "must equal 1",
            });
        }
        Ok(Self { x, y, z })
    }

    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(SnqiError::Degenerate(
                "cannot normalize a zero vector".into(),
            ));
        }
        Ok(Self {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// `(sin θ cos φ, sin θ sin φ, cos θ)`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self {
            x: st * cp,
            y: st * sp,
            z: ct,
        }
    }

    /// Point with polar cosine `u` and azimuth `phi`.
    pub fn from_cos_theta(u: f64, phi: f64) -> Self {
        let st = (1.0 - u * u).max(0.0).sqrt();
        let (sp, cp) = phi.sin_cos();
        Self {
            x: st * cp,
            y: st * sp,
            z: u,
        }
    }

    pub fn random(rng: &mut impl Rng) -> Self {
        let u: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        Self::from_cos_theta(u, phi)
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }
    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }
    #[inline]
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn theta(&self) -> f64 {
        self.z.clamp(-1.0, 1.0).acos()
    }

    /// Azimuth in `(-π, π]`; zero at the poles.
    pub fn phi(&self) -> f64 {
        if self.x == 0.0 && self.y == 0.0 {
            0.0
        } else {
            self.y.atan2(self.x)
        }
    }

    /// `|n⟩ = cos(θ/2)|0⟩ + sin(θ/2) e^{iφ}|1⟩`.
    pub fn ket(&self) -> [Complex64; 2] {
        let half = 0.5 * self.theta();
        [
            c(half.cos(), 0.0),
            Complex64::from_polar(half.sin(), self.phi()),
        ]
    }

    /// Spin-flipped ket `iσ₂ K|n⟩`, which represents `-n`. Unlike `(-n).ket()`
    /// it keeps a phase convention under which the antiparallel states of the
    /// tetrahedral measurement come out orthonormal.
    pub fn flipped_ket(&self) -> [Complex64; 2] {
        let [a, b] = self.ket();
        [b.conj(), -a.conj()]
    }

    fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }
}

impl std::ops::Neg for Direction {
    type Output = Direction;
    fn neg(self) -> Direction {
        Direction {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

/// A proper rotation of R³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(UnitQuaternion<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Self(UnitQuaternion::identity())
    }

    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Result<Self> {
        let v = Vector3::from(axis);
        let axis = Unit::try_new(v, 1e-300)
            .ok_or_else(|| SnqiError::Degenerate("rotation axis has zero length".into()))?;
        Ok(Self(UnitQuaternion::from_axis_angle(&axis, angle)))
    }

    /// The rotation about `↑ × n` by `arccos(n_z)`; for `n = -↑` the rotation by π about x.
    pub fn taking_up_to(n: &Direction) -> Self {
        let axis = Vector3::new(-n.y, n.x, 0.0);
        let s = axis.norm();
        let angle = n.z.clamp(-1.0, 1.0).acos();
        if s < 1e-15 {
            if n.z > 0.0 {
                Self::identity()
            } else {
                Self(UnitQuaternion::from_axis_angle(
                    &Vector3::x_axis(),
                    std::f64::consts::PI,
                ))
            }
        } else {
            Self(UnitQuaternion::from_axis_angle(
                &Unit::new_unchecked(axis / s),
                angle,
            ))
        }
    }

    pub fn random(rng: &mut impl Rng) -> Self {
        let axis = Direction::random(rng);
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        Self(UnitQuaternion::from_axis_angle(
            &Unit::new_unchecked(axis.to_vector()),
            angle,
        ))
    }

    pub fn apply(&self, n: &Direction) -> Direction {
        let v = self.0 * n.to_vector();
        Direction {
            x: v.x,
            y: v.y,
            z: v.z,
        }
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    pub fn compose(&self, other: &Rotation) -> Self {
        Self(self.0 * other.0)
    }

    pub fn quaternion(&self) -> &UnitQuaternion<f64> {
        &self.0
    }
}

/// Spin-1/2 image of a rotation: `U = w·1 − i(x σ₁ + y σ₂ + z σ₃)` for the unit
/// quaternion `(w, x, y, z)`. Defined up to the global sign of SU(2).
pub fn su2_of_rotation(r: &Rotation) -> ComplexMatrix {
    let q = r.0.quaternion();
    let (w, x, y, z) = (q.w, q.i, q.j, q.k);
    // w·1 − i x σ₁ − i y σ₂ − i z σ₃
    ComplexMatrix::from_rows([[c(w, -z), c(-y, -x)], [c(y, -x), c(w, z)]])
}

/// Bloch vector `(tr ρσ₁, tr ρσ₂, tr ρσ₃)` of a qubit operator.
pub fn bloch_vector(rho: &ComplexMatrix) -> [f64; 3] {
    let r01 = rho[(0, 1)];
    [2.0 * r01.re, -2.0 * r01.im, (rho[(0, 0)] - rho[(1, 1)]).re]
}

/// The four tetrahedron vertices used by the two-copy flagged measurement.
pub fn tetrahedron_directions() -> [Direction; 4] {
    let s2 = std::f64::consts::SQRT_2;
    let s23 = (2.0f64 / 3.0).sqrt();
    [
        Direction {
            x: 0.0,
            y: 0.0,
            z: 1.0,
        },
        Direction {
            x: 2.0 * s2 / 3.0,
            y: 0.0,
            z: -1.0 / 3.0,
        },
        Direction {
            x: -s2 / 3.0,
            y: s23,
            z: -1.0 / 3.0,
        },
        Direction {
            x: -s2 / 3.0,
            y: -s23,
            z: -1.0 / 3.0,
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    GaussLegendreProduct,
    MonteCarlo,
}

/// A weighted node set realizing the normalized measure `dn` on the sphere.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    nodes: Vec<(Direction, f64)>,
    scheme: Scheme,
    seed: Option<u64>,
    /// `(u, w)` pairs of the polar rule, weights summing to 1.
    polar: Vec<(f64, f64)>,
}

impl SphereQuadrature {
    /// Product of a Gauss–Legendre rule in `cos θ` with a uniform rule in `φ`.
    pub fn gauss_legendre(theta_nodes: usize, phi_nodes: usize) -> Result<Self> {
        if phi_nodes == 0 {
            return Err(SnqiError::OutOfRange {
                name: "phi_nodes",
                value: 0.0,
                reason: "need at least one azimuthal node",
            });
        }
        let polar = polar_rule(theta_nodes)?;
        let dphi = std::f64::consts::TAU / phi_nodes as f64;
        let mut nodes = Vec::with_capacity(theta_nodes * phi_nodes);
        for &(u, w) in &polar {
            for k in 0..phi_nodes {
                let phi = (k as f64 + 0.5) * dphi;
                nodes.push((Direction::from_cos_theta(u, phi), w / phi_nodes as f64));
            }
        }
        Ok(Self {
            nodes,
            scheme: Scheme::GaussLegendreProduct,
            seed: None,
            polar,
        })
    }

    pub fn default_grid() -> Self {
        Self::gauss_legendre(DEFAULT_THETA_NODES, DEFAULT_PHI_NODES)
            .expect("default quadrature parameters are valid")
    }

    /// Equal-weight uniform samples drawn from a ChaCha8 stream seeded with `seed`.
    pub fn monte_carlo(samples: usize, seed: u64) -> Result<Self> {
        if samples < 2 {
            return Err(SnqiError::OutOfRange {
                name: "samples",
                value: samples as f64,
                reason: "need at least two samples",
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = 1.0 / samples as f64;
        let nodes: Vec<(Direction, f64)> = (0..samples)
            .map(|_| (Direction::random(&mut rng), w))
            .collect();
        let polar = nodes.iter().map(|(n, w)| (n.z, *w)).collect();
        Ok(Self {
            nodes,
            scheme: Scheme::MonteCarlo,
            seed: Some(seed),
            polar,
        })
    }

    pub fn nodes(&self) -> &[(Direction, f64)] {
        &self.nodes
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ wᵢ f(nᵢ)`, summed in node order.
    pub fn integrate(&self, f: impl Fn(&Direction) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (index, (n, w)) in self.nodes.iter().enumerate() {
            let v = f(n);
            if !v.is_finite() {
                return Err(SnqiError::NonFinite { index });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Parallel variant of [`integrate`](Self::integrate) using rayon's tree reduction.
    pub fn integrate_par(&self, f: impl Fn(&Direction) -> f64 + Sync) -> Result<f64> {
        self.nodes
            .par_iter()
            .enumerate()
            .map(|(index, (n, w))| {
                let v = f(n);
                if v.is_finite() {
                    Ok(w * v)
                } else {
                    Err(SnqiError::NonFinite { index })
                }
            })
            .try_reduce(|| 0.0, |a, b| Ok(a + b))
    }

    /// `f` at every node, computed in parallel and returned in node order.
    pub fn evaluate_par<T: Send>(&self, f: impl Fn(&Direction) -> T + Sync) -> Vec<T> {
        self.nodes.par_iter().map(|(n, _)| f(n)).collect()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().map(|(_, w)| *w)
    }

    /// Integral of a function of `cos θ` only. For the product rule this uses
    /// the polar Gauss–Legendre factor alone.
    pub fn integrate_polar(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (index, &(u, w)) in self.polar.iter().enumerate() {
            let v = f(u);
            if !v.is_finite() {
                return Err(SnqiError::NonFinite { index });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Sample mean and its standard error. The error is zero for deterministic rules.
    pub fn integrate_with_error(&self, f: impl Fn(&Direction) -> f64) -> Result<(f64, f64)> {
        let mean = self.integrate(&f)?;
        if self.scheme != Scheme::MonteCarlo {
            return Ok((mean, 0.0));
        }
        let n = self.nodes.len() as f64;
        let var = self
            .nodes
            .iter()
            .map(|(d, _)| (f(d) - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        Ok((mean, (var / n).sqrt()))
    }

    /// Operator-valued integral `∫ F(n) dn`.
    pub fn integrate_matrix(
        &self,
        f: impl Fn(&Direction) -> ComplexMatrix,
    ) -> Result<ComplexMatrix> {
        let mut acc: Option<ComplexMatrix> = None;
        for (index, (n, w)) in self.nodes.iter().enumerate() {
            let m = f(n);
            if m.entries().iter().any(|z| !z.is_finite()) {
                return Err(SnqiError::NonFinite { index });
            }
            let scaled = m.scale(*w);
            acc = Some(match acc {
                None => scaled,
                Some(a) => &a + &scaled,
            });
        }
        acc.ok_or_else(|| SnqiError::Degenerate("empty quadrature".into()))
    }
}

/// Gauss–Legendre rule on `u ∈ [-1, 1]` with weights normalized to sum to 1.
pub fn polar_rule(nodes: usize) -> Result<Vec<(f64, f64)>> {
    let gl = GaussLegendre::new(nodes).map_err(|_| SnqiError::OutOfRange {
        name: "theta_nodes",
        value: nodes as f64,
        reason: "Gauss-Legendre needs at least two nodes",
    })?;
    let mut pairs: Vec<(f64, f64)> = gl
        .into_node_weight_pairs()
        .into_iter()
        .map(|(u, w)| (u, 0.5 * w))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs)
}

/// `U^{⊗k}` for the spin-1/2 image of `r`.
pub fn su2_power(r: &Rotation, copies: usize) -> ComplexMatrix {
    let u = su2_of_rotation(r);
    (0..copies).fold(ComplexMatrix::identity(1), |acc, _| acc.kron(&u))
}

/// Resolution and seed shared by every quadrature-backed evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    pub theta_nodes: usize,
    pub phi_nodes: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            theta_nodes: DEFAULT_THETA_NODES,
            phi_nodes: DEFAULT_PHI_NODES,
            mc_samples: DEFAULT_MC_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }
}

impl QuadratureSettings {
    pub fn product_rule(&self) -> Result<SphereQuadrature> {
        SphereQuadrature::gauss_legendre(self.theta_nodes, self.phi_nodes)
    }

    pub fn monte_carlo(&self) -> Result<SphereQuadrature> {
        SphereQuadrature::monte_carlo(self.mc_samples, self.seed)
    }
}
