//! Spectra of the block correlation operators K_{(N,m)} and the resulting
//! near-independence bounds.

use crate::error::{KacError, Result};
use crate::poly::Poly;
use crate::special::ln_gamma;
use crate::sphere::{k_apply_polynomial, marginal_rule, pair_rule, sample_uniform, SphereSpec};
use serde::{Deserialize, Serialize};

pub const DEFAULT_K_MAX: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpectrum {
    pub n: usize,
    pub m: usize,
    pub eigenvalues: Vec<f64>,
}

impl CorrelationSpectrum {
    pub fn new(n: usize, m: usize, k_max: usize) -> Result<Self> {
        let eigenvalues = (0..=k_max).map(|k| kappa(n, m, k)).collect::<Result<_>>()?;
        Ok(CorrelationSpectrum { n, m, eigenvalues })
    }
}

fn check_block(n: usize, m: usize) -> Result<()> {
    if n < 3 || m == 0 || 2 * m > n {
        return Err(KacError::invalid(format!("need N ≥ 3 and 1 ≤ m ≤ N/2, got N={n}, m={m}")));
    }
    Ok(())
}

/// κ_{N,m}(k) = (−1)^k ∏_{i<k} (m/2 + i)/((N − m)/2 + i).
pub fn kappa(n: usize, m: usize, k: usize) -> Result<f64> {
    check_block(n, m)?;
    let a = m as f64 / 2.0;
    let b = (n - m) as f64 / 2.0;
    let mag: f64 = (0..k).map(|i| (a + i as f64) / (b + i as f64)).product();
    Ok(if k.is_multiple_of(2) { mag } else { -mag })
}

/// Closed-form bound on Σ‖P_{…}f‖²-type sums: order 1 gives
/// 1/N + 3/(N(N+1)), order 2 gives 2/(N−1) + 8N/((N−2)(N−4)²).
pub fn projection_sum_bound(n: usize, order: u32) -> Result<f64> {
    let nf = n as f64;
    match order {
        1 if n >= 2 => Ok(1.0 / nf + 3.0 / (nf * (nf + 1.0))),
        2 if n >= 5 => Ok(2.0 / (nf - 1.0) + 8.0 * nf / ((nf - 2.0) * (nf - 4.0).powi(2))),
        1 | 2 => Err(KacError::Pole(format!("order {order} bound undefined at N={n}"))),
        _ => Err(KacError::invalid(format!("order must be 1 or 2, got {order}"))),
    }
}

/// E[|z|^{2k}] for the first m coordinates z of a uniform point on the unit
/// sphere in ℝ^n.
fn block_moment(n: f64, m: f64, k: usize) -> f64 {
    let kf = k as f64;
    (ln_gamma(n / 2.0) + ln_gamma(m / 2.0 + kf) - ln_gamma(n / 2.0 + kf) - ln_gamma(m / 2.0)).exp()
}

/// Block observable y ↦ P(y) for m = 1, y ↦ P(|y|) for m = 2 (P even).
fn eval_block(p: &Poly, m: usize, y: &[f64]) -> f64 {
    if m == 1 {
        p.eval(y[0])
    } else {
        p.eval((y[0] * y[0] + y[1] * y[1]).sqrt())
    }
}

/// K_{(N,m)} applied to a radial even polynomial, as a polynomial in |y|.
fn k_block(spec: &SphereSpec, m: usize, g: &Poly) -> Poly {
    let rest = Poly::new(vec![spec.total_energy(), 0.0, -1.0]);
    let free = spec.n() - m as f64;
    let mut out = Poly::zero();
    for (k, c) in g.even_coeffs().iter().enumerate() {
        if *c != 0.0 {
            out = &out + &rest.pow(k as u32).scale(c * block_moment(free, m as f64, k));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCheck {
    /// |∫ f(v_A) g(v_B) dσ| by Monte Carlo.
    pub lhs_mc: f64,
    pub mc_stderr: f64,
    /// The same quantity from the exact operator action.
    pub lhs_exact: f64,
    /// (m/(N−m)) ‖f‖ ‖g‖.
    pub rhs: f64,
}

impl CorrelationCheck {
    pub fn holds(&self) -> bool {
        self.lhs_mc <= self.rhs + 3.0 * self.mc_stderr && self.lhs_exact <= self.rhs * (1.0 + 1e-12)
    }
}

/// Checks |⟨f∘π_A, g∘π_B⟩| ≤ (m/(N−m))‖f‖‖g‖ for disjoint blocks A, B of
/// size m ∈ {1, 2} at E = 1.
pub fn correlation_bound_check(
    n: usize,
    m: usize,
    f: &Poly,
    g: &Poly,
    samples: usize,
    seed: u64,
) -> Result<CorrelationCheck> {
    check_block(n, m)?;
    if m > 2 {
        return Err(KacError::invalid("correlation checks support m ∈ {1, 2}"));
    }
    if m == 2 && (!f.is_even() || !g.is_even()) {
        return Err(KacError::invalid("radial block observables must be even in |y|"));
    }
    if samples < 2 {
        return Err(KacError::invalid("need at least two samples"));
    }
    let spec = SphereSpec::unit(n)?;
    let nodes = f.degree().max(g.degree()) + 4;
    let (points, weights): (Vec<Vec<f64>>, Vec<f64>) = if m == 1 {
        let r = marginal_rule(&spec, nodes)?;
        (r.nodes.iter().map(|&v| vec![v]).collect(), r.weights)
    } else {
        let r = pair_rule(&spec, 0.0, nodes)?;
        (r.points, r.weights)
    };
    let integrate = |h: &dyn Fn(&[f64]) -> f64| -> f64 {
        points.iter().zip(&weights).map(|(p, w)| w * h(p)).sum()
    };
    let norm_f = integrate(&|y| eval_block(f, m, y).powi(2)).sqrt();
    let norm_g = integrate(&|y| eval_block(g, m, y).powi(2)).sqrt();
    for (name, p, norm) in [("f", f, norm_f), ("g", g, norm_g)] {
        let mean = integrate(&|y| eval_block(p, m, y));
        if mean.abs() > 1e-9 * (1.0 + norm) {
            return Err(KacError::invalid(format!("{name} is not mean-zero (mean {mean:e})")));
        }
    }
    let kg = if m == 1 { k_apply_polynomial(&spec, g)? } else { k_block(&spec, m, g) };
    let lhs_exact = integrate(&|y| eval_block(f, m, y) * eval_block(&kg, m, y)).abs();

    let pts = sample_uniform(&spec, seed, samples);
    let vals: Vec<f64> = pts
        .iter()
        .map(|p| eval_block(f, m, &p.velocities[..m]) * eval_block(g, m, &p.velocities[m..2 * m]))
        .collect();
    let mean = vals.iter().sum::<f64>() / samples as f64;
    let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    Ok(CorrelationCheck {
        lhs_mc: mean.abs(),
        mc_stderr: (var / samples as f64).sqrt(),
        lhs_exact,
        rhs: m as f64 / (n - m) as f64 * norm_f * norm_g,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSandwich {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

/// ‖Σ_j φ(v_j)‖² = N‖φ‖² + N(N−1)⟨φ, Kφ⟩ together with the bounds
/// N(1 − 15/((N+1)(N+3)))‖φ‖² and N(1 + 3/(N+1))‖φ‖², for φ ⊥ {1, v²}.
pub fn pair_norm_equivalence(n: usize, phi: &Poly) -> Result<NormSandwich> {
    if n < 3 {
        return Err(KacError::invalid(format!("need N ≥ 3, got {n}")));
    }
    let spec = SphereSpec::unit(n)?;
    let rule = marginal_rule(&spec, phi.degree() + 4)?;
    let norm2 = rule.integrate(|v| phi.eval(v).powi(2));
    let scale = norm2.sqrt().max(phi.max_abs_coeff());
    let m0 = rule.integrate(|v| phi.eval(v));
    let m2 = rule.integrate(|v| phi.eval(v) * v * v);
    if m0.abs() > 1e-8 * scale.max(1e-300) || m2.abs() > 1e-8 * scale.max(1e-300) {
        return Err(KacError::invalid(format!(
            "φ must be orthogonal to 1 and v² (⟨φ,1⟩ = {m0:e}, ⟨φ,v²⟩ = {m2:e})"
        )));
    }
    let kphi = k_apply_polynomial(&spec, phi)?;
    let nf = n as f64;
    let cross = rule.integrate(|v| phi.eval(v) * kphi.eval(v));
    let value = nf * norm2 + nf * (nf - 1.0) * cross;
    let lower = nf * (1.0 - 15.0 / ((nf + 1.0) * (nf + 3.0))) * norm2;
    let upper = nf * (1.0 + 3.0 / (nf + 1.0)) * norm2;
    let tol = 1e-10 * upper.max(1e-300);
    if value < lower - tol || value > upper + tol {
        return Err(KacError::numerical(format!(
            "norm sandwich violated: {lower} ≤ {value} ≤ {upper} fails"
        )));
    }
    Ok(NormSandwich { lower, value, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn kappa_log_gamma(n: usize, m: usize, k: usize) -> f64 {
        let (a, b, kf) = (m as f64 / 2.0, (n - m) as f64 / 2.0, k as f64);
        let mag = (ln_gamma(b) + ln_gamma(a + kf) - ln_gamma(b + kf) - ln_gamma(a)).exp();
        if k % 2 == 0 { mag } else { -mag }
    }

    #[test]
    fn kappa_values() {
        assert_relative_eq!(kappa(10, 1, 2).unwrap(), 3.0 / 99.0, epsilon = 1e-15);
        assert_relative_eq!(kappa(10, 2, 1).unwrap(), -0.25, epsilon = 1e-15);
        assert_eq!(kappa(7, 3, 0).unwrap(), 1.0);
        assert!(kappa(10, 6, 1).is_err());
        assert!(kappa(2, 1, 1).is_err());
    }

    #[test]
    fn product_and_log_gamma_forms_agree() {
        for n in [3usize, 10, 57, 200] {
            for m in 1..=n / 2 {
                for k in 0..=20 {
                    let a = kappa(n, m, k).unwrap();
                    let b = kappa_log_gamma(n, m, k);
                    assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "N={n} m={m} k={k}");
                }
            }
        }
    }

    #[test]
    fn spectrum_type() {
        let s = CorrelationSpectrum::new(12, 3, DEFAULT_K_MAX).unwrap();
        assert_eq!(s.eigenvalues.len(), 21);
        assert_eq!(s.eigenvalues[0], 1.0);
    }

    #[test]
    fn projection_bounds() {
        assert_relative_eq!(projection_sum_bound(10, 1).unwrap(), 0.1 + 3.0 / 110.0);
        assert_relative_eq!(projection_sum_bound(10, 2).unwrap(), 2.0 / 9.0 + 80.0 / 288.0);
        assert_relative_eq!(projection_sum_bound(10, 2).unwrap(), 0.5, epsilon = 1e-15);
        assert!(matches!(projection_sum_bound(4, 2), Err(KacError::Pole(_))));
        assert!(projection_sum_bound(10, 3).is_err());
    }

    #[test]
    fn eigenfunction_correlation() {
        let f = Poly::from_even(&[-1.0, 1.0]);
        let c = correlation_bound_check(10, 1, &f, &f, 200_000, 3).unwrap();
        let spec = SphereSpec::unit(10).unwrap();
        let norm2 = marginal_rule(&spec, 6).unwrap().integrate(|v| (v * v - 1.0).powi(2));
        assert_relative_eq!(c.lhs_exact, norm2 / 9.0, max_relative = 1e-12);
        assert!((c.lhs_mc - c.lhs_exact).abs() < 3.0 * c.mc_stderr);
        assert!(c.holds());
    }

    #[test]
    fn block_pairs() {
        // |y|² − 2 is the first radial eigenfunction for m = 2
        let f = Poly::from_even(&[-2.0, 1.0]);
        let c = correlation_bound_check(12, 2, &f, &f, 100_000, 9).unwrap();
        assert_relative_eq!(c.lhs_exact, c.rhs, max_relative = 1e-12);
        assert!(c.holds());
        let not_centered = Poly::from_even(&[0.0, 1.0]);
        assert!(correlation_bound_check(12, 2, &not_centered, &f, 100, 1).is_err());
    }

    #[test]
    fn zero_profile_norms() {
        let s = pair_norm_equivalence(10, &Poly::zero()).unwrap();
        assert_eq!((s.lower, s.value, s.upper), (0.0, 0.0, 0.0));
    }
}
