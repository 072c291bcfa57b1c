//! The energy sphere {v ∈ ℝ^N : Σ v_j² = N E} with its uniform measure.

pub mod quadrature;
mod sampling;

pub use sampling::{sample_point, sample_uniform, weight_average};

use crate::error::{KacError, Result};
use crate::poly::Poly;
use crate::special::ln_gamma;
use quadrature::{gauss_jacobi, gauss_jacobi_unit, jacobi_recurrence, Recurrence};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereSpec {
    pub n_particles: usize,
    pub energy_per_particle: f64,
}

impl SphereSpec {
    pub fn new(n_particles: usize, energy_per_particle: f64) -> Result<Self> {
        if n_particles < 2 {
            return Err(KacError::invalid(format!("need N ≥ 2 particles, got {n_particles}")));
        }
        if !(energy_per_particle > 0.0 && energy_per_particle.is_finite()) {
            return Err(KacError::invalid(format!(
                "energy per particle must be positive, got {energy_per_particle}"
            )));
        }
        Ok(SphereSpec { n_particles, energy_per_particle })
    }

    pub fn unit(n_particles: usize) -> Result<Self> {
        Self::new(n_particles, 1.0)
    }

    pub fn n(&self) -> f64 {
        self.n_particles as f64
    }

    /// N E, the squared radius.
    pub fn total_energy(&self) -> f64 {
        self.n() * self.energy_per_particle
    }

    pub fn radius(&self) -> f64 {
        self.total_energy().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub velocities: Vec<f64>,
}

impl SpherePoint {
    /// Projects `velocities` radially onto the sphere.
    pub fn new(velocities: Vec<f64>, spec: &SphereSpec) -> Self {
        let norm2: f64 = velocities.iter().map(|x| x * x).sum();
        let s = (spec.total_energy() / norm2).sqrt();
        SpherePoint { velocities: velocities.into_iter().map(|x| x * s).collect() }
    }

    pub fn energy_per_particle(&self) -> f64 {
        self.velocities.iter().map(|x| x * x).sum::<f64>() / self.velocities.len() as f64
    }
}

/// The law ν_{N,m} of m coordinates of a uniform point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalDensity {
    pub sphere: SphereSpec,
    pub m: usize,
    pub normalization: f64,
}

impl MarginalDensity {
    pub fn new(sphere: SphereSpec, m: usize) -> Result<Self> {
        if m == 0 || m >= sphere.n_particles {
            return Err(KacError::invalid(format!(
                "marginal dimension m must be in 1..N−1, got m={m} with N={}",
                sphere.n_particles
            )));
        }
        let n = sphere.n();
        let mf = m as f64;
        let r2 = sphere.total_energy();
        let normalization = (ln_gamma(n / 2.0)
            - ln_gamma((n - mf) / 2.0)
            - 0.5 * mf * PI.ln()
            - 0.5 * mf * r2.ln())
        .exp();
        Ok(MarginalDensity { sphere, m, normalization })
    }

    /// Exponent (N − m − 2)/2 of (1 − |w|²/(NE)).
    pub fn exponent(&self) -> f64 {
        (self.sphere.n() - self.m as f64 - 2.0) / 2.0
    }

    pub fn eval(&self, w: &[f64]) -> Result<f64> {
        if w.len() != self.m {
            return Err(KacError::invalid(format!("expected {} coordinates, got {}", self.m, w.len())));
        }
        let x = 1.0 - w.iter().map(|v| v * v).sum::<f64>() / self.sphere.total_energy();
        if x <= 0.0 {
            return Ok(0.0);
        }
        Ok(self.normalization * x.powf(self.exponent()))
    }
}

/// ρ_N(v) at E = 1.
pub fn marginal_density_eval(den: &MarginalDensity, w: &[f64]) -> Result<f64> {
    den.eval(w)
}

/// Standard normal density.
pub fn maxwellian(v: f64) -> f64 {
    (-0.5 * v * v).exp() / (2.0 * PI).sqrt()
}

/// sup over `grid` of ρ_N(v)/M(v) at E = 1.
pub fn gaussian_domination_check(n: usize, grid: &[f64]) -> Result<f64> {
    if n < 5 {
        return Err(KacError::invalid(format!("domination check needs N ≥ 5, got {n}")));
    }
    let den = MarginalDensity::new(SphereSpec::unit(n)?, 1)?;
    let mut sup = 0.0f64;
    for &v in grid {
        sup = sup.max(den.eval(&[v])? / maxwellian(v));
    }
    Ok(sup)
}

/// E[x^{2k}] for one coordinate of a uniform point on the unit sphere in ℝ^n.
pub(crate) fn unit_sphere_even_moment(n: f64, k: usize) -> f64 {
    let kf = k as f64;
    (ln_gamma(n / 2.0) + ln_gamma(kf + 0.5) - ln_gamma(n / 2.0 + kf) - 0.5 * PI.ln()).exp()
}

/// ∫ ∏ v_i^{e_i} dσ. Odd exponents give 0.
pub fn moment_monomial(spec: &SphereSpec, exponents: &[u32]) -> Result<f64> {
    if exponents.len() > spec.n_particles {
        return Err(KacError::invalid(format!(
            "{} exponents for {} particles",
            exponents.len(),
            spec.n_particles
        )));
    }
    if exponents.iter().any(|e| e % 2 == 1) {
        return Ok(0.0);
    }
    let total: u32 = exponents.iter().map(|e| e / 2).sum();
    if total > 60 {
        return Err(KacError::invalid(format!("total half-degree {total} exceeds 60")));
    }
    let n = spec.n();
    let t = total as f64;
    let mut log = t * spec.total_energy().ln() + ln_gamma(n / 2.0) - ln_gamma(n / 2.0 + t);
    for e in exponents {
        log += ln_gamma(*e as f64 / 2.0 + 0.5) - ln_gamma(0.5);
    }
    Ok(log.exp())
}

/// A cubature rule against ν_{N,m}: Σ weights[i] f(points[i]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

/// Jacobi recurrence for ν_{N,1} in the variable t = v / √(NE), as a
/// probability measure.
pub fn marginal_recurrence(spec: &SphereSpec, n: usize) -> Result<Recurrence> {
    let alpha = (spec.n() - 3.0) / 2.0;
    let mut rec = jacobi_recurrence(n, alpha, alpha)?;
    rec.mu0 = 1.0;
    Ok(rec)
}

/// Gauss rule for ν_{N,1} in v, exact for degree ≤ 2·nodes − 1. Valid for
/// every N ≥ 2.
pub fn marginal_rule(spec: &SphereSpec, nodes: usize) -> Result<quadrature::GaussRule> {
    let alpha = (spec.n() - 3.0) / 2.0;
    let rule = gauss_jacobi(nodes, alpha, alpha)?;
    let total: f64 = rule.weights.iter().sum();
    let r = spec.radius();
    Ok(quadrature::GaussRule {
        nodes: rule.nodes.iter().map(|t| r * t).collect(),
        weights: rule.weights.iter().map(|w| w / total).collect(),
    })
}

/// Rule for ∫ (w₁² + w₂²)^γ g(w₁, w₂) dν_{N,2}, exact for polynomial g of
/// degree ≤ 2·nodes − 1. At N = 2, ν_{2,2} is the uniform law on the circle
/// of radius √(2E).
pub fn pair_rule(spec: &SphereSpec, gamma: f64, nodes: usize) -> Result<QuadratureRule> {
    if nodes == 0 {
        return Err(KacError::invalid("need at least one node"));
    }
    let r2 = spec.total_energy();
    let angles = 2 * nodes + 2;
    let dtheta = 2.0 * PI / angles as f64;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    if spec.n_particles == 2 {
        let r = r2.sqrt();
        let w = r2.powf(gamma) / angles as f64;
        for a in 0..angles {
            let th = (a as f64 + 0.5) * dtheta;
            points.push(vec![r * th.cos(), r * th.sin()]);
            weights.push(w);
        }
        return Ok(QuadratureRule { points, weights });
    }
    let b = (spec.n() - 4.0) / 2.0;
    let radial = gauss_jacobi_unit(nodes, gamma, b)?;
    // density c (1 − s)^b in polar form: c · (R²/2) ds dθ with s = r²/R²
    let beta_norm = (ln_gamma(b + 1.0) - ln_gamma(b + 2.0)).exp();
    let scale = r2.powf(gamma) / (2.0 * PI * beta_norm);
    for (s, ws) in radial.nodes.iter().zip(&radial.weights) {
        let r = (s * r2).sqrt();
        for a in 0..angles {
            let th = (a as f64 + 0.5) * dtheta;
            points.push(vec![r * th.cos(), r * th.sin()]);
            weights.push(ws * scale * dtheta);
        }
    }
    Ok(QuadratureRule { points, weights })
}

/// Gauss-type rule for ν_{N,m}, m ∈ {1, 2}.
pub fn quadrature_rule(den: &MarginalDensity, nodes: usize) -> Result<QuadratureRule> {
    if !(4..=512).contains(&nodes) {
        return Err(KacError::invalid(format!("nodes must be in 4..=512, got {nodes}")));
    }
    match den.m {
        1 => {
            let r = marginal_rule(&den.sphere, nodes)?;
            Ok(QuadratureRule {
                points: r.nodes.iter().map(|&v| vec![v]).collect(),
                weights: r.weights,
            })
        }
        2 => pair_rule(&den.sphere, 0.0, nodes),
        m => Err(KacError::invalid(format!("quadrature supports m ∈ {{1, 2}}, got {m}"))),
    }
}

/// The averaging operator (Kφ)(v₁) = E[φ(v₂) | v₁] on even polynomials.
/// Odd parts are annihilated.
pub fn k_apply_polynomial(spec: &SphereSpec, poly: &Poly) -> Result<Poly> {
    if poly.degree() > 16 {
        return Err(KacError::invalid(format!("degree {} exceeds 16", poly.degree())));
    }
    let rest = Poly::new(vec![spec.total_energy(), 0.0, -1.0]);
    let free = spec.n() - 1.0;
    let mut out = Poly::zero();
    for (k, c) in poly.even_coeffs().iter().enumerate() {
        if *c != 0.0 {
            let term = rest.pow(k as u32).scale(c * unit_sphere_even_moment(free, k));
            out = &out + &term;
        }
    }
    Ok(out)
}

/// E[v_k^p | v_j, v_ℓ] for p ∈ {2, 4}, as a polynomial in s = v_j² + v_ℓ².
pub fn project_pair_polynomial(spec: &SphereSpec, k_exponent: u32, pair: (usize, usize), k: usize) -> Result<Poly> {
    let n = spec.n_particles;
    let (j, l) = pair;
    if j == l || j == k || l == k || j >= n || l >= n || k >= n {
        return Err(KacError::invalid(format!(
            "indices ({j}, {l}) and {k} must be distinct and below N={n}"
        )));
    }
    let rest = Poly::new(vec![spec.total_energy(), -1.0]);
    let free = spec.n() - 2.0;
    match k_exponent {
        2 => Ok(rest.scale(unit_sphere_even_moment(free, 1))),
        4 => Ok(rest.pow(2).scale(unit_sphere_even_moment(free, 2))),
        e => Err(KacError::invalid(format!("exponent must be 2 or 4, got {e}"))),
    }
}
