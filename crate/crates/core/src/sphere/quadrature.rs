//! Gauss rules from three-term recurrences (Golub–Welsch).

use crate::error::{KacError, Result};
use crate::special::ln_gamma;
use nalgebra::{DMatrix, SymmetricEigen};

/// Recurrence p_{n+1} = (x − a_n) p_n − b_n p_{n−1} for monic orthogonal
/// polynomials, together with the total mass μ0 of the weight.
#[derive(Debug, Clone)]
pub struct Recurrence {
    pub a: Vec<f64>,
    /// b[0] is unused; b[n] for n ≥ 1.
    pub b: Vec<f64>,
    pub mu0: f64,
}

/// Jacobi weight (1 − x)^α (1 + x)^β on [−1, 1].
pub fn jacobi_recurrence(n: usize, alpha: f64, beta: f64) -> Result<Recurrence> {
    if !(alpha > -1.0 && beta > -1.0) {
        return Err(KacError::invalid(format!("Jacobi parameters must exceed −1, got α={alpha}, β={beta}")));
    }
    let ab = alpha + beta;
    let mut a = Vec::with_capacity(n);
    let mut b = vec![0.0; n.max(1)];
    for k in 0..n {
        let kf = k as f64;
        if k == 0 {
            a.push((beta - alpha) / (ab + 2.0));
        } else {
            let s = 2.0 * kf + ab;
            a.push((beta * beta - alpha * alpha) / (s * (s + 2.0)));
        }
    }
    for k in 1..n {
        let kf = k as f64;
        b[k] = if k == 1 {
            4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            let s = 2.0 * kf + ab;
            4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
    }
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
        - ln_gamma(ab + 2.0))
    .exp();
    Ok(Recurrence { a, b, mu0 })
}

/// Generalized Laguerre weight x^α e^{−x} on [0, ∞).
pub fn laguerre_recurrence(n: usize, alpha: f64) -> Result<Recurrence> {
    if alpha <= -1.0 {
        return Err(KacError::invalid(format!("Laguerre parameter must exceed −1, got {alpha}")));
    }
    let a = (0..n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let mut b = vec![0.0; n.max(1)];
    for (k, bk) in b.iter_mut().enumerate().skip(1) {
        *bk = k as f64 * (k as f64 + alpha);
    }
    Ok(Recurrence { a, b, mu0: ln_gamma(alpha + 1.0).exp() })
}

#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

pub fn golub_welsch(rec: &Recurrence) -> Result<GaussRule> {
    let n = rec.a.len();
    if n == 0 {
        return Err(KacError::invalid("a Gauss rule needs at least one node"));
    }
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jac[(i, i)] = rec.a[i];
        if i + 1 < n {
            let off = rec.b[i + 1].sqrt();
            jac[(i, i + 1)] = off;
            jac[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(jac);
    // Christoffel numbers 1/Σ p_k(x)² keep full relative accuracy for the
    // tiny weights at extreme nodes, unlike squared eigenvector components.
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let vals = orthonormal_values(rec, x, n - 1);
            (x, 1.0 / vals.iter().map(|p| p * p).sum::<f64>())
        })
        .collect();
    if pairs.iter().any(|(x, w)| !x.is_finite() || !w.is_finite()) {
        return Err(KacError::numerical("Golub–Welsch eigensolve produced non-finite values"));
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<GaussRule> {
    golub_welsch(&jacobi_recurrence(n, alpha, beta)?)
}

pub fn gauss_laguerre(n: usize, alpha: f64) -> Result<GaussRule> {
    golub_welsch(&laguerre_recurrence(n, alpha)?)
}

/// Gauss rule on [0, 1] for the weight s^a (1 − s)^b.
pub fn gauss_jacobi_unit(n: usize, a: f64, b: f64) -> Result<GaussRule> {
    let rule = gauss_jacobi(n, b, a)?;
    let scale = 2f64.powf(-(a + b + 1.0));
    Ok(GaussRule {
        nodes: rule.nodes.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        weights: rule.weights.iter().map(|w| w * scale).collect(),
    })
}

/// Values p_0(x), …, p_{n}(x) of the orthonormal polynomials.
pub fn orthonormal_values(rec: &Recurrence, x: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut prev = 0.0;
    let mut cur = 1.0 / rec.mu0.sqrt();
    out.push(cur);
    for k in 0..n {
        let next_b = rec.b.get(k + 1).copied().unwrap_or(f64::NAN).sqrt();
        let sb = if k == 0 { 0.0 } else { rec.b[k].sqrt() };
        let next = ((x - rec.a[k]) * cur - sb * prev) / next_b;
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}
