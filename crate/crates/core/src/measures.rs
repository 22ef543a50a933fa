//! Information measures over (ensemble, strategy) pairs: averaged fidelity,
//! mutual information, Holevo χ and blind compression rates, each with a
//! quadrature evaluation and, where one is known, a closed form.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ensembles::{check_delta, critical_delta, Ensemble, Family};
use crate::error::{Result, SnqiError};
use crate::morphisms::lambda_identity_residual;
use crate::qmat::{vn_entropy, ComplexMatrix, DensityOperator};
use crate::sphere::{polar_rule, Direction, Scheme, SphereQuadrature};
use crate::strategies::{check_alpha_gamma, MeasurementStrategy};

/// Below this `|D(α, γ)|` the degenerate branch of the two-copy closed form is used.
pub const DISCRIMINANT_EPS: f64 = 1e-9;
/// Below this `|γ|` (but nonzero) the two-copy closed form cancels
/// catastrophically and the value is computed by high-order quadrature instead.
pub const SMALL_GAMMA: f64 = 1e-3;
/// Strict margin used by the sNQI conditions.
pub const VERDICT_MARGIN: f64 = 1e-12;
const ALGEBRA_SAMPLES: usize = 30;
const ALGEBRA_SEED: u64 = 0xa19e_b7a0;
const ALGEBRA_RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Analytic,
    Quadrature,
    MonteCarlo,
}

impl From<Scheme> for Method {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::GaussLegendreProduct => Method::Quadrature,
            Scheme::MonteCarlo => Method::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureResult {
    pub value: f64,
    pub method: Method,
    pub params: Params,
    pub ensemble_label: String,
    pub strategy_label: String,
}

impl MeasureResult {
    fn analytic(value: f64, params: Params, ensemble: &str, strategy: &str) -> Self {
        Self {
            value,
            method: Method::Analytic,
            params,
            ensemble_label: ensemble.into(),
            strategy_label: strategy.into(),
        }
    }
}

fn check_dims(e: &Ensemble, s: &MeasurementStrategy) -> Result<()> {
    if e.dim() != s.dim() {
        return Err(SnqiError::DimensionMismatch {
            expected: e.dim(),
            found: s.dim(),
        });
    }
    Ok(())
}

fn ordered_sum(q: &SphereQuadrature, values: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (index, (v, w)) in values.iter().zip(q.weights()).enumerate() {
        if !v.is_finite() {
            return Err(SnqiError::NonFinite { index });
        }
        acc += w * v;
    }
    Ok(acc)
}

/// Per-node outcome probabilities and their guess scores for a finite strategy.
fn finite_table(e: &Ensemble, effects: &[ComplexMatrix], q: &SphereQuadrature) -> Vec<Vec<f64>> {
    q.evaluate_par(|n| {
        let rho = e.state(n);
        effects.iter().map(|eff| rho.probability(eff)).collect()
    })
}

fn params_of(e: &Ensemble) -> Params {
    Params {
        delta: e.delta(),
        ..Params::default()
    }
}

/// `∫ Σ_y tr[state(n) E_y] (1 + n·g_y)/2 dn`. For a covariant strategy the
/// orbit integral reduces to `∫ tr[state(n) E↑] (1 + n_z)/2 dn`.
pub fn averaged_fidelity(
    e: &Ensemble,
    s: &MeasurementStrategy,
    q: &SphereQuadrature,
) -> Result<MeasureResult> {
    check_dims(e, s)?;
    let values: Vec<f64> = match s {
        MeasurementStrategy::Finite { povm, guesses, .. } => {
            let probs = finite_table(e, povm.effects(), q);
            q.nodes()
                .iter()
                .zip(&probs)
                .map(|((n, _), p)| {
                    p.iter()
                        .zip(guesses)
                        .map(|(py, g)| py * 0.5 * (1.0 + n.dot(g)))
                        .sum()
                })
                .collect()
        }
        MeasurementStrategy::Covariant { povm, .. } => {
            q.evaluate_par(|n| e.state(n).probability(povm.seed_effect()) * 0.5 * (1.0 + n.z()))
        }
    };
    Ok(MeasureResult {
        value: ordered_sum(q, &values)?,
        method: q.scheme().into(),
        params: params_of(e),
        ensemble_label: e.label(),
        strategy_label: s.label().into(),
    })
}

fn xlog2_ratio(p: f64, mean: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * (p / mean).log2()
    }
}

/// `∫ Σ_y p(y|n) log₂ p(y|n)/p(y) dn`. For a covariant strategy this is the
/// single integral `∫ tr[state(n) E↑] log₂(tr[state(n) E↑] / tr[E↑ ∫state])`.
pub fn mutual_information(
    e: &Ensemble,
    s: &MeasurementStrategy,
    q: &SphereQuadrature,
) -> Result<MeasureResult> {
    check_dims(e, s)?;
    let value = match s {
        MeasurementStrategy::Finite { povm, .. } => {
            let probs = finite_table(e, povm.effects(), q);
            let outcomes = povm.len();
            let mut marginal = vec![0.0; outcomes];
            for (p, w) in probs.iter().zip(q.weights()) {
                for (m, py) in marginal.iter_mut().zip(p) {
                    *m += w * py;
                }
            }
            let values: Vec<f64> = probs
                .iter()
                .map(|p| {
                    p.iter()
                        .zip(&marginal)
                        .map(|(&py, &m)| xlog2_ratio(py, m))
                        .sum()
                })
                .collect();
            ordered_sum(q, &values)?
        }
        MeasurementStrategy::Covariant { povm, .. } => {
            let probs = q.evaluate_par(|n| e.state(n).probability(povm.seed_effect()));
            let mean = ordered_sum(q, &probs)?;
            let values: Vec<f64> = probs.iter().map(|&p| xlog2_ratio(p, mean)).collect();
            ordered_sum(q, &values)?
        }
    };
    Ok(MeasureResult {
        value: value.max(0.0),
        method: q.scheme().into(),
        params: params_of(e),
        ensemble_label: e.label(),
        strategy_label: s.label().into(),
    })
}

/// `∫ p(c) log₂(p(c)/p̄) dc/2` on a Gauss–Legendre rule in `c = cos θ`, for a
/// covariant density `p` with mean `p̄`.
pub fn polar_mutual_information(density: impl Fn(f64) -> f64, nodes: usize) -> Result<f64> {
    let rule = polar_rule(nodes)?;
    let mean: f64 = rule.iter().map(|&(c, w)| w * density(c)).sum();
    let value: f64 = rule
        .iter()
        .map(|&(c, w)| w * xlog2_ratio(density(c).max(0.0), mean))
        .sum();
    Ok(value)
}

/// Optimal single-copy fidelity on pure states, `2/3`.
pub fn fidelity_single_rho_opt() -> MeasureResult {
    MeasureResult::analytic(
        2.0 / 3.0,
        Params {
            r3: Some(1.0),
            ..Params::default()
        },
        "rho",
        "cov1[r3=1]",
    )
}

/// `1/2 + r₃(1 − δ)/6` for the single-copy covariant strategy.
pub fn fidelity_single(r3: f64, delta: f64) -> Result<f64> {
    let delta = check_delta(delta)?;
    if !(-1.0..=1.0).contains(&r3) {
        return Err(SnqiError::OutOfRange {
            name: "r3",
            value: r3,
            reason: "seed effect 1 + r3·σ3 is positive only for |r3| <= 1",
        });
    }
    Ok(0.5 + r3 * (1.0 - delta) / 6.0)
}

/// Optimal single-copy fidelity on the flagged carrier, `2/3 − δ/6`.
pub fn fidelity_single_tau_opt(delta: f64) -> Result<MeasureResult> {
    let value = fidelity_single(1.0, delta)?;
    Ok(MeasureResult::analytic(
        value,
        Params {
            delta: Some(delta),
            r3: Some(1.0),
            ..Params::default()
        },
        "tau",
        "J(cov1[r3=1])",
    ))
}

/// Two-copy covariant fidelity on pure states, `1/2 + α/6`.
pub fn fidelity_double_rho(alpha: f64, gamma: f64) -> Result<MeasureResult> {
    check_alpha_gamma(alpha, gamma)?;
    Ok(MeasureResult::analytic(
        0.5 + alpha / 6.0,
        Params {
            alpha: Some(alpha),
            gamma: Some(gamma),
            ..Params::default()
        },
        "rho^2",
        "cov2",
    ))
}

/// Tetrahedral two-copy fidelity on the flagged carrier,
/// `(2√3 + 15)/24 − (2√3 + 3)δ/24`. A lower bound on the optimum.
pub fn fidelity_double_tau_lb(delta: f64) -> Result<MeasureResult> {
    let delta = check_delta(delta)?;
    let s3 = 3f64.sqrt();
    Ok(MeasureResult::analytic(
        (2.0 * s3 + 15.0) / 24.0 - (2.0 * s3 + 3.0) * delta / 24.0,
        Params {
            delta: Some(delta),
            ..Params::default()
        },
        "tau^2",
        "tetra2",
    ))
}

/// Mutual information of the single-copy covariant measurement with density
/// `1 + r cos θ`, where `r = (1 − δ) r₃`.
pub fn mi_single_closed_form(r: f64) -> Result<f64> {
    if !r.is_finite() || r.abs() > 1.0 {
        return Err(SnqiError::OutOfRange {
            name: "r",
            value: r,
            reason: "density 1 + r cos(theta) needs |r| <= 1",
        });
    }
    let a = r.abs();
    if a < 1e-3 {
        // Σ_{k even} r^k / (k(k−1)(k+1)) / ln 2
        let a2 = a * a;
        return Ok(a2 * (1.0 / 6.0 + a2 * (1.0 / 60.0 + a2 * (1.0 / 210.0 + a2 / 504.0))) / LN_2);
    }
    let plus = 0.5 * (a / 2.0 + 1.0 + 1.0 / (2.0 * a)) * (1.0 + a).log2();
    let minus = if a < 1.0 {
        0.5 * (a / 2.0 - 1.0 + 1.0 / (2.0 * a)) * (1.0 - a).log2()
    } else {
        0.0
    };
    Ok(plus - minus - 1.0 / (2.0 * LN_2))
}

/// `c · log₂ x`, taken as 0 when `x` vanishes (the coefficient vanishes with it
/// on the boundary of the positivity region).
fn clog2(coefficient: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        coefficient * x.log2()
    }
}

/// `D(α, γ) = α² + (3/4)γ² − 3γ`.
pub fn discriminant(alpha: f64, gamma: f64) -> f64 {
    alpha * alpha + 0.75 * gamma * gamma - 3.0 * gamma
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    GammaZero,
    SmallGamma,
    Degenerate,
    Negative,
    Positive,
}

pub fn mi_double_rho_branch(alpha: f64, gamma: f64) -> Branch {
    let d = discriminant(alpha, gamma);
    if gamma == 0.0 {
        Branch::GammaZero
    } else if gamma.abs() < SMALL_GAMMA {
        Branch::SmallGamma
    } else if d.abs() < DISCRIMINANT_EPS {
        Branch::Degenerate
    } else if d < 0.0 {
        Branch::Negative
    } else {
        Branch::Positive
    }
}

/// Mutual information of the two-copy covariant measurement on pure states,
/// i.e. `∫ p log₂ p` for the density `(3γ/4)c² + αc + 1 − γ/4`, by the case
/// split on the sign of `D(α, γ)`.
pub fn mi_double_rho_closed_form(alpha: f64, gamma: f64) -> Result<f64> {
    check_alpha_gamma(alpha, gamma)?;
    let gamma = gamma.min(1.0);
    let bound = gamma / 2.0 + 1.0;
    let alpha = alpha.clamp(-bound, bound);
    let branch = mi_double_rho_branch(alpha, gamma);
    match branch {
        Branch::GammaZero => return mi_single_closed_form(alpha),
        Branch::SmallGamma => {
            return polar_mutual_information(
                |c| crate::strategies::two_copy_density(alpha, gamma, c),
                512,
            )
        }
        _ => {}
    }
    let g2 = gamma * gamma;
    let k = alpha / 3.0 - 4.0 * alpha.powi(3) / (27.0 * g2) + 2.0 * alpha / (3.0 * gamma);
    let lp = bound + alpha;
    let lm = bound - alpha;
    let rest = (gamma / 3.0 + 4.0 * alpha * alpha / (9.0 * gamma) - 8.0 / 3.0) / LN_2;
    let d = discriminant(alpha, gamma);
    let twice = match branch {
        Branch::Degenerate => clog2(k + 1.0, lp) - clog2(k - 1.0, lm) + rest,
        Branch::Negative => {
            let h0 = clog2(k + 1.0, lp) - clog2(k - 1.0, lm) + rest;
            let s = (-d).sqrt();
            h0 + 8.0 * (-d).powf(1.5) / (27.0 * g2 * LN_2)
                * (((alpha + 1.5 * gamma) / s).atan() - ((alpha - 1.5 * gamma) / s).atan())
        }
        _ => {
            let s = d.sqrt();
            let big_k = 4.0 * d.powf(1.5) / (27.0 * g2);
            clog2(k + 1.0 - big_k, lp)
                + clog2(-k + 1.0 - big_k, lm)
                + rest
                + 2.0 * big_k * (1.0 - gamma + s).log2()
        }
    };
    Ok(0.5 * twice)
}

/// `log₂ 3 − 2/(3 ln 2)`, the covariant two-copy maximum on pure states.
pub fn mi_double_rho_max() -> f64 {
    3f64.log2() - 2.0 / (3.0 * LN_2)
}

/// Mutual information of the tetrahedral measurement on two flagged copies.
pub fn mi_double_tau_closed_form(delta: f64) -> Result<f64> {
    let delta = check_delta(delta)?;
    if delta >= 1.0 {
        return Err(SnqiError::OutOfRange {
            name: "delta",
            value: delta,
            reason: "the closed form divides by 1 - delta; use mi_double_tau for the limit",
        });
    }
    let q = 1.0 - delta;
    let s3 = 3f64.sqrt();
    let b = 3.0 + 2.0 * s3;
    let k = b / 24.0 * q * (1.0 + (87.0 - 12.0 * s3) / (81.0 * q * q));
    let s = 51.0 - 12.0 * s3 - 27.0 * q * q;
    let upper = 0.75 * q * q + b * q / 4.0 + 1.0;
    let lower = 0.75 * q * q - b * q / 4.0 + 1.0;
    let root = s.sqrt();
    Ok((k + 0.5) * upper.log2() - (k - 0.5) * lower.log2()
        + (q * q + (4.0 * s3 - 41.0) / 9.0) / (4.0 * LN_2)
        + s.powf(1.5) / (972.0 * q * LN_2)
            * (((b + 9.0 * q) / root).atan() - ((b - 9.0 * q) / root).atan()))
}

/// [`mi_double_tau_closed_form`] extended by its limit 0 at `δ = 1`.
pub fn mi_double_tau(delta: f64) -> Result<f64> {
    if check_delta(delta)? == 1.0 {
        return Ok(0.0);
    }
    mi_double_tau_closed_form(delta)
}

/// `χ(E_τ) = 1 + (1 − δ/2) log₂(1 − δ/2) + (δ/2) log₂(δ/2)`.
pub fn holevo_chi_tau_closed_form(delta: f64) -> Result<f64> {
    let delta = check_delta(delta)?;
    let h = |p: f64| if p > 0.0 { p * p.log2() } else { 0.0 };
    Ok(1.0 + h(1.0 - delta / 2.0) + h(delta / 2.0))
}

/// `S(∫ state dn) − ∫ S(state) dn`.
pub fn holevo_chi(e: &Ensemble, q: &SphereQuadrature) -> Result<MeasureResult> {
    if e.copies() != 1 {
        return Err(SnqiError::UnknownFamily { label: e.label() });
    }
    let avg = e.average_state(q)?;
    let entropies = q
        .evaluate_par(|n| vn_entropy(&e.state(n)))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let mean_entropy = ordered_sum(q, &entropies)?;
    Ok(MeasureResult {
        value: vn_entropy(&avg)? - mean_entropy,
        method: q.scheme().into(),
        params: params_of(e),
        ensemble_label: e.label(),
        strategy_label: String::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlindRate {
    pub rate: f64,
    /// Dimension of the associative algebra generated by sampled states.
    pub algebra_dim: usize,
}

fn vectorize(m: &ComplexMatrix) -> Vec<Complex64> {
    m.entries().to_vec()
}

/// Adds `v` to the orthonormal set `basis` if it is independent of it.
fn extend_basis(basis: &mut Vec<Vec<Complex64>>, mut v: Vec<Complex64>) -> bool {
    for _ in 0..2 {
        for b in basis.iter() {
            let proj: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= proj * bi;
            }
        }
    }
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < ALGEBRA_RANK_TOL {
        return false;
    }
    v.iter_mut().for_each(|z| *z /= norm);
    basis.push(v);
    true
}

/// Dimension of the linear span of all products of the given operators.
pub fn algebra_dimension(generators: &[ComplexMatrix]) -> usize {
    let Some(first) = generators.first() else {
        return 0;
    };
    let dim = first.dim();
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut elements: Vec<ComplexMatrix> = Vec::new();
    for g in generators {
        let scale = g.max_abs().max(f64::MIN_POSITIVE);
        if extend_basis(&mut basis, vectorize(&g.scale(1.0 / scale))) {
            elements.push(g.scale(1.0 / scale));
        }
    }
    let mut frontier = 0;
    while frontier < elements.len() && basis.len() < dim * dim {
        let a = elements[frontier].clone();
        let mut added = Vec::new();
        for b in elements.iter() {
            for p in [a.matmul(b), b.matmul(&a)] {
                let scale = p.max_abs();
                if scale < ALGEBRA_RANK_TOL {
                    continue;
                }
                let p = p.scale(1.0 / scale);
                if extend_basis(&mut basis, vectorize(&p)) {
                    added.push(p);
                }
            }
        }
        elements.extend(added);
        frontier += 1;
    }
    basis.len()
}

/// Blind compression rate from the known closed forms, with the algebra
/// dimension of 30 sampled states as a diagnostic.
pub fn blind_rate(e: &Ensemble) -> Result<BlindRate> {
    let rate = match (e.family(), e.copies()) {
        (Family::Rho, 1) => 1.0,
        (Family::Tau { delta }, 1) => {
            if delta < 1.0 {
                2.0
            } else {
                0.0
            }
        }
        _ => return Err(SnqiError::UnknownFamily { label: e.label() }),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(ALGEBRA_SEED);
    let states: Vec<ComplexMatrix> = (0..ALGEBRA_SAMPLES)
        .map(|_| e.state(&Direction::random(&mut rng)).into_matrix())
        .collect();
    Ok(BlindRate {
        rate,
        algebra_dim: algebra_dimension(&states),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnqiVerdict {
    pub delta: f64,
    pub f_single_rho: f64,
    pub f_single_tau: f64,
    pub f_double_rho: f64,
    pub f_double_tau_lb: f64,
    /// The single-copy fidelity strictly prefers the pure carrier.
    pub cond1: bool,
    /// The two-copy fidelity strictly prefers the flagged carrier.
    pub cond2: bool,
    /// Largest sampled violation of `tr[Λ_δ(E) ρ_n] = tr[E τ_{n,δ}]`; the
    /// existence of this statistical morphism is the evidence for the third
    /// condition.
    pub cond3_evidence: f64,
}

impl SnqiVerdict {
    pub fn snqi(&self) -> bool {
        self.cond1 && self.cond2
    }
}

/// Fidelity comparison between the carriers at depolarization `δ`.
pub fn snqi_verdict(delta: f64) -> Result<SnqiVerdict> {
    snqi_verdict_with_samples(delta, 10, 10, 0)
}

pub fn snqi_verdict_with_samples(
    delta: f64,
    effects: usize,
    nodes: usize,
    seed: u64,
) -> Result<SnqiVerdict> {
    let f_single_rho = fidelity_single_rho_opt().value;
    let f_single_tau = fidelity_single_tau_opt(delta)?.value;
    let f_double_rho = fidelity_double_rho(1.5, 1.0)?.value;
    let f_double_tau_lb = fidelity_double_tau_lb(delta)?.value;
    Ok(SnqiVerdict {
        delta,
        f_single_rho,
        f_single_tau,
        f_double_rho,
        f_double_tau_lb,
        cond1: f_single_rho > f_single_tau + VERDICT_MARGIN,
        cond2: f_double_tau_lb > f_double_rho + VERDICT_MARGIN,
        cond3_evidence: lambda_identity_residual(delta, effects, nodes, seed)?,
    })
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (b - a).abs() > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    // the endpoints are candidates too, since optima sit on the boundary here
    [(a, f(a)), (b, f(b)), (0.5 * (a + b), f(0.5 * (a + b)))]
        .into_iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, cand| {
            if cand.1 > best.1 {
                cand
            } else {
                best
            }
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum1 {
    pub argmax: f64,
    pub value: f64,
}

/// Maximizes `1/2 + r₃(1 − δ)/6` over `r₃ ∈ [−1, 1]` by a 0.01 grid refined by
/// golden-section search.
pub fn optimize_single_fidelity(delta: f64) -> Result<Optimum1> {
    check_delta(delta)?;
    let f = |r3: f64| fidelity_single(r3.clamp(-1.0, 1.0), delta).unwrap_or(f64::NEG_INFINITY);
    let (mut best_r, mut best) = (-1.0, f64::NEG_INFINITY);
    for k in 0..=200 {
        let r = -1.0 + 0.01 * k as f64;
        let v = f(r);
        if v > best {
            best = v;
            best_r = r;
        }
    }
    let (argmax, value) =
        golden_section_max(f, (best_r - 0.01).max(-1.0), (best_r + 0.01).min(1.0), 1e-9);
    Ok(Optimum1 { argmax, value })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum2 {
    pub alpha: f64,
    pub gamma: f64,
    pub value: f64,
}

fn mi2(alpha: f64, gamma: f64) -> f64 {
    mi_double_rho_closed_form(alpha, gamma).unwrap_or(f64::NEG_INFINITY)
}

/// Maximizes the two-copy mutual information on pure states over the
/// positivity region restricted to `sign(α) = sign`, by a 0.01 grid refined
/// with alternating golden-section searches.
pub fn optimize_mi_double_rho(sign: f64) -> Optimum2 {
    let sign = if sign < 0.0 { -1.0 } else { 1.0 };
    let mut best = Optimum2 {
        alpha: 0.0,
        gamma: 0.0,
        value: f64::NEG_INFINITY,
    };
    for gi in 0..=300 {
        let gamma = -2.0 + 0.01 * gi as f64;
        let bound = gamma / 2.0 + 1.0;
        let steps = (bound / 0.01).floor() as usize;
        for ai in 0..=steps + 1 {
            let alpha = sign * (0.01 * ai as f64).min(bound);
            let v = mi2(alpha, gamma);
            if v > best.value {
                best = Optimum2 {
                    alpha,
                    gamma,
                    value: v,
                };
            }
        }
    }
    let (mut alpha, mut gamma) = (best.alpha, best.gamma);
    for _ in 0..100 {
        let (g, _) = golden_section_max(
            |g| {
                let bound = g / 2.0 + 1.0;
                mi2(alpha.clamp(-bound, bound), g)
            },
            (gamma - 0.01).max(-2.0),
            (gamma + 0.01).min(1.0),
            1e-12,
        );
        let bound = g / 2.0 + 1.0;
        let (lo, hi) = if sign > 0.0 {
            (0.0, bound)
        } else {
            (-bound, 0.0)
        };
        let (a, _) = golden_section_max(
            |a| mi2(a, g),
            (alpha - 0.01).max(lo),
            (alpha + 0.01).min(hi),
            1e-12,
        );
        let moved = (a - alpha).abs() + (g - gamma).abs();
        alpha = a;
        gamma = g;
        if moved < 1e-13 {
            break;
        }
    }
    Optimum2 {
        alpha,
        gamma,
        value: mi2(alpha, gamma),
    }
}

/// Bisection for a sign change of `f` on `[a, b]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let (mut fa, fb) = (f(a), f(b));
    if fa.signum() == fb.signum() {
        return Err(SnqiError::Degenerate(format!(
            "no sign change on [{a}, {b}]"
        )));
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// The δ at which the tetrahedral two-copy fidelity bound falls to 3/4.
pub fn fidelity_crossover() -> Result<f64> {
    bisect(
        |d| {
            fidelity_double_tau_lb(d)
                .map(|m| m.value)
                .unwrap_or(f64::NAN)
                - 0.75
        },
        0.0,
        1.0,
        1e-14,
    )
}

/// The smallest δ at which the tetrahedral two-copy mutual information falls
/// to `level`.
pub fn mi_crossover(level: f64) -> Result<f64> {
    bisect(
        |d| mi_double_tau(d).unwrap_or(f64::NAN) - level,
        0.0,
        0.5,
        1e-12,
    )
}

/// Fidelity and information values for one depolarization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub delta: f64,
    pub f_single_rho: f64,
    pub f_single_tau: f64,
    pub f_double_rho: f64,
    pub f_double_tau_lb: f64,
    pub mi_single_rho: f64,
    pub mi_single_tau: f64,
    pub mi_double_rho: f64,
    pub mi_double_tau: f64,
    pub chi_rho: f64,
    pub chi_tau: f64,
    pub snqi: bool,
}

impl SweepRecord {
    pub const HEADER: [&'static str; 12] = [
        "delta",
        "f_single_rho",
        "f_single_tau",
        "f_double_rho",
        "f_double_tau_lb",
        "mi_single_rho",
        "mi_single_tau",
        "mi_double_rho",
        "mi_double_tau",
        "chi_rho",
        "chi_tau",
        "snqi",
    ];

    pub fn at(delta: f64) -> Result<Self> {
        let v = snqi_verdict(delta)?;
        Ok(Self {
            delta,
            f_single_rho: v.f_single_rho,
            f_single_tau: v.f_single_tau,
            f_double_rho: v.f_double_rho,
            f_double_tau_lb: v.f_double_tau_lb,
            mi_single_rho: mi_single_closed_form(1.0)?,
            mi_single_tau: mi_single_closed_form(1.0 - delta)?,
            mi_double_rho: mi_double_rho_max(),
            mi_double_tau: mi_double_tau(delta)?,
            chi_rho: 1.0,
            chi_tau: holevo_chi_tau_closed_form(delta)?,
            snqi: v.snqi(),
        })
    }

    pub fn values(&self) -> [f64; 11] {
        [
            self.delta,
            self.f_single_rho,
            self.f_single_tau,
            self.f_double_rho,
            self.f_double_tau_lb,
            self.mi_single_rho,
            self.mi_single_tau,
            self.mi_double_rho,
            self.mi_double_tau,
            self.chi_rho,
            self.chi_tau,
        ]
    }
}

/// Average state of an ensemble as a density operator; re-exported for reports.
pub fn average_state(e: &Ensemble, q: &SphereQuadrature) -> Result<DensityOperator> {
    e.average_state(q)
}

/// Convenience: `7 − 4√3`.
pub fn snqi_window_edge() -> f64 {
    critical_delta()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::{
        single_copy_covariant, tetra_tau_density, tetra_two_copy_tau_povm, two_copy_covariant,
        two_copy_density,
    };

    fn polar(nodes: usize) -> SphereQuadrature {
        SphereQuadrature::gauss_legendre(nodes, 1).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let q = SphereQuadrature::default_grid();
        let rho = Ensemble::rho();
        let f = averaged_fidelity(&rho, &single_copy_covariant(1.0).unwrap(), &q).unwrap();
        assert!((f.value - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(f.method, Method::Quadrature);
        let tau = Ensemble::tau(0.03).unwrap();
        let s = single_copy_covariant(1.0).unwrap().flagged().unwrap();
        let f = averaged_fidelity(&tau, &s, &q).unwrap();
        assert!((f.value - (0.5 + 0.97 / 6.0)).abs() < 1e-12);
        let trivial = MeasurementStrategy::trivial(2, Direction::UP);
        assert!((averaged_fidelity(&rho, &trivial, &q).unwrap().value - 0.5).abs() < 1e-12);
        assert!(averaged_fidelity(&tau, &trivial, &q).is_err());
    }

    #[test]
    fn single_fidelity_closed_forms() {
        assert!((fidelity_single_tau_opt(0.0).unwrap().value - 2.0 / 3.0).abs() < 1e-15);
        assert!((fidelity_single_tau_opt(1.0).unwrap().value - 0.5).abs() < 1e-15);
        let d = critical_delta();
        assert!((fidelity_single_tau_opt(d).unwrap().value - 0.654700538).abs() < 1e-8);
    }

    #[test]
    fn double_rho_fidelity() {
        assert!((fidelity_double_rho(1.5, 1.0).unwrap().value - 0.75).abs() < 1e-15);
        assert!((fidelity_double_rho(0.0, 0.3).unwrap().value - 0.5).abs() < 1e-15);
        let q = SphereQuadrature::default_grid();
        let e = Ensemble::rho().two_copies().unwrap();
        for (a, g) in [(1.5, 1.0), (0.4, -0.5), (-0.7, 0.2)] {
            let f = averaged_fidelity(&e, &two_copy_covariant(a, g).unwrap(), &q).unwrap();
            assert!((f.value - fidelity_double_rho(a, g).unwrap().value).abs() < 1e-10);
            let polar = polar(16)
                .integrate_polar(|c| two_copy_density(a, g, c) * 0.5 * (1.0 + c))
                .unwrap();
            assert!((polar - (0.5 + a / 6.0)).abs() < 1e-12);
        }
        assert!(fidelity_double_rho(2.0, 0.0).is_err());
    }

    #[test]
    fn double_tau_fidelity() {
        let v0 = fidelity_double_tau_lb(0.0).unwrap().value;
        assert!((v0 - 0.769_337_567_297_406_4).abs() < 1e-12);
        assert!((fidelity_double_tau_lb(critical_delta()).unwrap().value - 0.75).abs() < 1e-15);
        let q = SphereQuadrature::default_grid();
        let s = tetra_two_copy_tau_povm().unwrap();
        for delta in [0.0, 0.03, 0.5] {
            let e = Ensemble::tau(delta).unwrap().two_copies().unwrap();
            let full = averaged_fidelity(&e, &s, &q).unwrap().value;
            let analytic = fidelity_double_tau_lb(delta).unwrap().value;
            assert!(
                (full - analytic).abs() < 1e-8,
                "{delta}: {full} vs {analytic}"
            );
            let reduced = 4.0
                * polar(16)
                    .integrate_polar(|c| tetra_tau_density(delta, c) * 0.5 * (1.0 + c))
                    .unwrap();
            assert!((reduced - analytic).abs() < 1e-12);
        }
    }

    #[test]
    fn mi_single_examples() {
        assert!(mi_single_closed_form(0.0).unwrap() == 0.0);
        let top = 1.0 - 1.0 / (2.0 * LN_2);
        assert!((mi_single_closed_form(1.0).unwrap() - top).abs() < 1e-15);
        assert!((mi_single_closed_form(1.0 - 1e-12).unwrap() - top).abs() < 1e-9);
        assert!(mi_single_closed_form(1.01).is_err());
        for r in [1e-4, 0.002, 0.3, 0.97, 0.999] {
            let oracle = polar_mutual_information(|c| 1.0 + r * c, 512).unwrap();
            let cf = mi_single_closed_form(r).unwrap();
            assert!((cf - oracle).abs() < 1e-8, "{r}: {cf} vs {oracle}");
            assert_eq!(cf, mi_single_closed_form(-r).unwrap());
        }
    }

    #[test]
    fn mi_single_series_joins_closed_form() {
        let below = mi_single_closed_form(1e-3 - 1e-12).unwrap();
        let above = mi_single_closed_form(1e-3 + 1e-12).unwrap();
        assert!((below - above).abs() < 1e-12);
    }

    #[test]
    fn mi_single_monotone() {
        let mut prev = -1.0;
        for k in 0..1000 {
            let v = mi_single_closed_form(k as f64 / 1000.0).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn mi_single_covariant_quadrature() {
        let e = Ensemble::rho();
        let s = single_copy_covariant(1.0).unwrap();
        let v = mutual_information(&e, &s, &polar(1024)).unwrap().value;
        assert!((v - 0.278_652_479_036_191).abs() < 1e-8, "{v}");
        let uniform = single_copy_covariant(0.0).unwrap();
        assert!(
            mutual_information(&e, &uniform, &polar(8))
                .unwrap()
                .value
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn mi_double_rho_anchor() {
        let v = mi_double_rho_closed_form(1.5, 1.0).unwrap();
        assert!((v - mi_double_rho_max()).abs() < 1e-14);
        assert!((v - 0.623_165_806_795_180_4).abs() < 1e-12);
        assert_eq!(mi_double_rho_branch(1.5, 1.0), Branch::Degenerate);
    }

    #[test]
    fn mi_double_rho_matches_quadrature_on_all_branches() {
        let cases = [
            (0.5, 0.0, Branch::GammaZero),
            (1.0, 0.0, Branch::GammaZero),
            (0.3, 5e-4, Branch::SmallGamma),
            (0.2, 0.8, Branch::Negative),
            (0.0, 1.0, Branch::Negative),
            (1.2, 0.5, Branch::Positive),
            (0.4, -1.0, Branch::Positive),
            (0.0, -2.0, Branch::Positive),
            (1.4, 0.8, Branch::Positive),
            (1.25, 0.5, Branch::Positive),
            (-1.5, 1.0, Branch::Degenerate),
            (0.01, 0.01, Branch::Negative),
        ];
        for (a, g, branch) in cases {
            assert_eq!(mi_double_rho_branch(a, g), branch, "({a}, {g})");
            let cf = mi_double_rho_closed_form(a, g).unwrap();
            let oracle = polar_mutual_information(|c| two_copy_density(a, g, c), 1024).unwrap();
            assert!((cf - oracle).abs() < 1e-7, "({a}, {g}): {cf} vs {oracle}");
        }
    }

    #[test]
    fn mi_double_rho_continuous_across_discriminant() {
        // D(α, γ) = 0 at α = √(3γ − 3γ²/4)
        for gamma in [0.2f64, 0.5, 0.9] {
            let a0 = (3.0 * gamma - 0.75 * gamma * gamma).sqrt();
            let lo = mi_double_rho_closed_form(a0 - 1e-6, gamma).unwrap();
            let hi = mi_double_rho_closed_form(a0 + 1e-6, gamma).unwrap();
            let mid = mi_double_rho_closed_form(a0, gamma).unwrap();
            assert!((lo - hi).abs() < 1e-5 && (mid - lo).abs() < 1e-5);
        }
        for alpha in [0.3, 0.9] {
            let lo = mi_double_rho_closed_form(alpha, SMALL_GAMMA * 0.999).unwrap();
            let hi = mi_double_rho_closed_form(alpha, SMALL_GAMMA * 1.001).unwrap();
            assert!((lo - hi).abs() < 1e-6);
        }
    }

    #[test]
    fn mi_double_rho_symmetric() {
        for (a, g) in [(0.3, 0.4), (1.2, 0.5), (0.4, -1.0), (1.5, 1.0)] {
            let p = mi_double_rho_closed_form(a, g).unwrap();
            let m = mi_double_rho_closed_form(-a, g).unwrap();
            assert!((p - m).abs() < 1e-12);
        }
        assert!(mi_double_rho_closed_form(1.6, 1.0).is_err());
    }

    #[test]
    fn mi_double_rho_covariant_quadrature() {
        let e = Ensemble::rho().two_copies().unwrap();
        let s = two_copy_covariant(1.5, 1.0).unwrap();
        let v = mutual_information(&e, &s, &polar(512)).unwrap().value;
        assert!((v - mi_double_rho_max()).abs() < 1e-7);
    }

    #[test]
    fn mi_double_tau_values() {
        let v0 = mi_double_tau_closed_form(0.0).unwrap();
        assert!((v0 - 0.718_156_684_116_010_3).abs() < 1e-12);
        assert!(mi_double_tau_closed_form(1.0).is_err());
        assert_eq!(mi_double_tau(1.0).unwrap(), 0.0);
        for delta in [0.0, 0.03, 0.2, 0.6] {
            let cf = mi_double_tau_closed_form(delta).unwrap();
            let oracle =
                4.0 * polar_mutual_information(|c| tetra_tau_density(delta, c), 256).unwrap();
            assert!((cf - oracle).abs() < 1e-7, "{delta}: {cf} vs {oracle}");
        }
    }

    #[test]
    fn mi_double_tau_full_quadrature() {
        let q = SphereQuadrature::default_grid();
        let s = tetra_two_copy_tau_povm().unwrap();
        let e = Ensemble::tau(0.0).unwrap().two_copies().unwrap();
        let v = mutual_information(&e, &s, &q).unwrap().value;
        assert!(
            (v - mi_double_tau_closed_form(0.0).unwrap()).abs() < 1e-7,
            "{v}"
        );
    }

    #[test]
    fn crossovers() {
        assert!((fidelity_crossover().unwrap() - critical_delta()).abs() < 1e-9);
        let d = mi_crossover(mi_double_rho_max()).unwrap();
        assert!((d - 0.0575).abs() < 0.002, "{d}");
    }

    #[test]
    fn holevo_values() {
        let q = SphereQuadrature::gauss_legendre(16, 16).unwrap();
        let chi = holevo_chi(&Ensemble::rho(), &q).unwrap().value;
        assert!((chi - 1.0).abs() < 1e-10);
        assert!((holevo_chi_tau_closed_form(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(holevo_chi_tau_closed_form(1.0).unwrap().abs() < 1e-15);
        for delta in [0.03, 0.5, 1.0] {
            let v = holevo_chi(&Ensemble::tau(delta).unwrap(), &q)
                .unwrap()
                .value;
            assert!((v - holevo_chi_tau_closed_form(delta).unwrap()).abs() < 1e-8);
        }
        assert!(holevo_chi(&Ensemble::rho().two_copies().unwrap(), &q).is_err());
    }

    #[test]
    fn blind_rates() {
        let r = blind_rate(&Ensemble::rho()).unwrap();
        assert_eq!((r.rate, r.algebra_dim), (1.0, 4));
        let r = blind_rate(&Ensemble::tau(0.5).unwrap()).unwrap();
        assert_eq!(r.rate, 2.0);
        // every τ is block diagonal in the flag basis, so they generate B(H) ⊕ B(H)
        assert_eq!(r.algebra_dim, 8);
        let r = blind_rate(&Ensemble::tau(1.0).unwrap()).unwrap();
        assert_eq!((r.rate, r.algebra_dim), (0.0, 1));
        assert!(blind_rate(&Ensemble::noisy_rho(0.2).unwrap()).is_err());
    }

    #[test]
    fn algebra_dimension_examples() {
        assert_eq!(algebra_dimension(&[ComplexMatrix::identity(4)]), 1);
        assert_eq!(
            algebra_dimension(&[
                ComplexMatrix::from_real_diag(&[1.0, 0.0, 0.0]),
                ComplexMatrix::from_real_diag(&[0.0, 1.0, 1.0])
            ]),
            2
        );
        assert_eq!(algebra_dimension(&[]), 0);
    }

    #[test]
    fn verdicts() {
        let v = snqi_verdict(0.03).unwrap();
        assert!(v.cond1 && v.cond2 && v.snqi());
        assert!(v.cond3_evidence < 1e-12);
        assert!(v.f_single_tau < v.f_single_rho && v.f_single_rho < v.f_double_rho);
        assert!(v.f_double_rho < v.f_double_tau_lb);
        assert!(!snqi_verdict(0.1).unwrap().cond2);
        let v0 = snqi_verdict(0.0).unwrap();
        assert!(!v0.cond1 && v0.cond2);
    }

    #[test]
    fn optimizers() {
        for delta in [0.0, 0.03, 0.5] {
            let o = optimize_single_fidelity(delta).unwrap();
            assert!((o.argmax - 1.0).abs() < 1e-6);
            assert!((o.value - (0.5 + (1.0 - delta) / 6.0)).abs() < 1e-9);
        }
        let plus = optimize_mi_double_rho(1.0);
        assert!(
            (plus.alpha - 1.5).abs() < 1e-4 && (plus.gamma - 1.0).abs() < 1e-4,
            "{plus:?}"
        );
        let minus = optimize_mi_double_rho(-1.0);
        assert!(
            (minus.alpha + 1.5).abs() < 1e-4 && (minus.gamma - 1.0).abs() < 1e-4,
            "{minus:?}"
        );
        assert!((plus.value - mi_double_rho_max()).abs() < 1e-6);
    }

    #[test]
    fn sweep_record_fields() {
        let r = SweepRecord::at(0.0).unwrap();
        assert_eq!(r.chi_rho, 1.0);
        assert!((r.chi_tau - 1.0).abs() < 1e-15);
        assert!(!r.snqi);
        assert!(SweepRecord::at(0.05).unwrap().snqi);
        assert!(!SweepRecord::at(0.08).unwrap().snqi);
        let end = SweepRecord::at(1.0).unwrap();
        assert_eq!(end.mi_double_tau, 0.0);
        assert_eq!(end.mi_single_tau, 0.0);
    }
}
