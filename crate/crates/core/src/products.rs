//! Infinite and truncated products of rational factors.
//!
//! For P(x) = ∏(x − μ_n) and Q(x) = ∏(x − ν_n) with equal degree and equal
//! root sums, the product ∏_{j≥M} P(j)/Q(j) converges and equals
//! ∏_n Γ(M − ν_n) / Γ(M − μ_n). The orientation matters: each partial
//! product telescopes to Γ(N+1−μ)Γ(M−ν) / (Γ(M−μ)Γ(N+1−ν)), and the
//! N-dependent Γ's cancel in the limit, leaving the Γ(M − ν) in the
//! numerator.

use crate::error::{KacError, Result};
use crate::special::ln_gamma_complex;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Root description of ∏_{j ≥ M} P(j)/Q(j) with monic P, Q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalProductSpec {
    pub numerator_roots: Vec<Complex64>,
    pub denominator_roots: Vec<Complex64>,
    pub start_index: u64,
    pub leading_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    Index(u64),
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductResult {
    pub value: f64,
    pub truncation_index: Truncation,
    /// Absolute bound on the log-error committed by truncating.
    pub tail_bound: f64,
}

impl ProductResult {
    /// A certified lower bound on the infinite product, valid when every
    /// factor lies in (0, 1].
    pub fn certified_lower(&self) -> f64 {
        self.value * (-self.tail_bound).exp()
    }
}

const ROOT_SUM_TOL: f64 = 1e-9;

impl RationalProductSpec {
    /// Builds the spec from ascending coefficient lists of P and Q.
    pub fn from_coefficients(numerator: &[f64], denominator: &[f64], start_index: u64) -> Result<Self> {
        let lead_p = *numerator.last().ok_or_else(|| KacError::invalid("empty numerator"))?;
        let lead_q = *denominator.last().ok_or_else(|| KacError::invalid("empty denominator"))?;
        let spec = RationalProductSpec {
            numerator_roots: poly_roots(numerator, 1e-10)?,
            denominator_roots: poly_roots(denominator, 1e-10)?,
            start_index,
            leading_ratio: lead_p / lead_q,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.start_index < 1 {
            return Err(KacError::invalid("start index must be at least 1"));
        }
        if self.numerator_roots.len() != self.denominator_roots.len() {
            return Err(KacError::invalid(format!(
                "degree mismatch: {} numerator roots vs {} denominator roots",
                self.numerator_roots.len(),
                self.denominator_roots.len()
            )));
        }
        if (self.leading_ratio - 1.0).abs() > 1e-12 {
            return Err(KacError::invalid("leading coefficients must agree"));
        }
        let sum_mu: Complex64 = self.numerator_roots.iter().sum();
        let sum_nu: Complex64 = self.denominator_roots.iter().sum();
        if (sum_mu - sum_nu).norm() > ROOT_SUM_TOL {
            return Err(KacError::invalid(format!(
                "root sums differ ({sum_mu} vs {sum_nu}); the product diverges or vanishes"
            )));
        }
        for roots in [&self.numerator_roots, &self.denominator_roots] {
            for r in roots.iter() {
                if r.im.abs() < 1e-12 && r.re >= self.start_index as f64 - 1e-12 {
                    let nearest = r.re.round();
                    if (r.re - nearest).abs() < 1e-9 {
                        return Err(KacError::Pole(format!(
                            "root {r} equals the integer {nearest} inside the product range"
                        )));
                    }
                }
            }
            if !conjugate_closed(roots) {
                return Err(KacError::invalid("complex roots must come in conjugate pairs"));
            }
        }
        Ok(())
    }

    /// P(j)/Q(j) evaluated from the roots.
    pub fn factor(&self, j: f64) -> f64 {
        let p: Complex64 = self.numerator_roots.iter().map(|m| j - m).product();
        let q: Complex64 = self.denominator_roots.iter().map(|n| j - n).product();
        (p / q).re
    }
}

fn conjugate_closed(roots: &[Complex64]) -> bool {
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let r = roots[i];
        if r.im.abs() <= 1e-10 * (1.0 + r.norm()) {
            used[i] = true;
            continue;
        }
        let partner = (0..roots.len())
            .filter(|&j| j != i && !used[j])
            .find(|&j| (roots[j] - r.conj()).norm() <= 1e-8 * (1.0 + r.norm()));
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => return false,
        }
    }
    true
}

/// All complex roots of the polynomial with ascending `coefficients`.
///
/// Companion-matrix eigenvalues, polished by Newton steps and then
/// symmetrized so that complex roots come in exact conjugate pairs.
pub fn poly_roots(coefficients: &[f64], tolerance: f64) -> Result<Vec<Complex64>> {
    let mut coeffs = coefficients.to_vec();
    while coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    if coeffs.is_empty() {
        return Err(KacError::invalid("zero polynomial has no well-defined roots"));
    }
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Err(KacError::invalid("constant polynomial has degree 0"));
    }
    let lead = coeffs[degree];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();

    let mut roots: Vec<Complex64> = if degree == 1 {
        vec![Complex64::new(-monic[0], 0.0)]
    } else {
        let mut companion = DMatrix::<f64>::zeros(degree, degree);
        for i in 1..degree {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..degree {
            companion[(i, degree - 1)] = -monic[i];
        }
        companion.complex_eigenvalues().iter().copied().collect()
    };

    let eval = |z: Complex64| -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in monic.iter().rev() {
            dp = dp * z + p;
            p = p * z + *c;
        }
        (p, dp)
    };
    for r in roots.iter_mut() {
        for _ in 0..8 {
            let (p, dp) = eval(*r);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            let candidate = *r - step;
            if eval(candidate).0.norm() < p.norm() {
                *r = candidate;
            } else {
                break;
            }
        }
    }

    // Exact conjugate pairing.
    let scale = 1.0 + roots.iter().fold(0.0f64, |m, r| m.max(r.norm()));
    let mut out: Vec<Complex64> = Vec::with_capacity(degree);
    let mut used = vec![false; degree];
    for i in 0..degree {
        if used[i] {
            continue;
        }
        used[i] = true;
        let r = roots[i];
        if r.im.abs() <= 1e-7 * scale {
            out.push(Complex64::new(r.re, 0.0));
            continue;
        }
        let partner = (0..degree)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                (roots[a] - r.conj())
                    .norm()
                    .total_cmp(&(roots[b] - r.conj()).norm())
            });
        match partner {
            Some(j) => {
                used[j] = true;
                let avg = (r + roots[j].conj()) * 0.5;
                out.push(avg);
                out.push(avg.conj());
            }
            None => out.push(r),
        }
    }

    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    for r in &out {
        let mut p = Complex64::new(0.0, 0.0);
        for c in coeffs.iter().rev() {
            p = p * *r + *c;
        }
        if p.norm() > tolerance * norm * (1.0 + r.norm()).powi(degree as i32) {
            return Err(KacError::numerical(format!(
                "root {r} has residual {} above tolerance",
                p.norm()
            )));
        }
    }
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}

/// ∏_n Γ(M − ν_n)/Γ(M − μ_n), the exact value of ∏_{j≥M} P(j)/Q(j).
pub fn gamma_product_limit(spec: &RationalProductSpec) -> Result<ProductResult> {
    spec.validate()?;
    let m = spec.start_index as f64;
    let mut log_sum = Complex64::new(0.0, 0.0);
    for (mu, nu) in spec.numerator_roots.iter().zip(&spec.denominator_roots) {
        for (root, sign) in [(nu, 1.0), (mu, -1.0)] {
            let arg = m - root;
            if arg.im.abs() < 1e-12 && arg.re <= 0.0 && (arg.re - arg.re.round()).abs() < 1e-12 {
                return Err(KacError::Pole(format!("Γ pole at M − root = {arg}")));
            }
            log_sum += ln_gamma_complex(Complex64::new(m, 0.0) - root) * sign;
        }
    }
    // Imaginary parts cancel modulo 2π; a residual of π flags a negative value.
    let turns = log_sum.im / std::f64::consts::PI;
    let k = turns.round();
    if (turns - k).abs() > 1e-9 {
        return Err(KacError::numerical(format!(
            "imaginary parts of log-Γ sum do not cancel: {}",
            log_sum.im
        )));
    }
    let sign = if (k as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    Ok(ProductResult {
        value: sign * log_sum.re.exp(),
        truncation_index: Truncation::ClosedForm,
        tail_bound: 0.0,
    })
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Σ_{k>K} −log(1 − a/k²) ≤ a / (K (1 − a/K²)).
pub fn integral_tail_bound(majorant: f64, last_index: u64) -> Result<f64> {
    if majorant < 0.0 {
        return Err(KacError::invalid("tail majorant must be non-negative"));
    }
    if majorant == 0.0 {
        return Ok(0.0);
    }
    let k = last_index as f64;
    if last_index == 0 || majorant >= k * k {
        return Err(KacError::invalid(format!(
            "tail majorant {majorant} must be below K² = {}",
            k * k
        )));
    }
    Ok(majorant / (k * (1.0 - majorant / (k * k))))
}

fn finish(log_sum: f64, m: u64, k: u64, tail_majorant: f64) -> Result<ProductResult> {
    let last = k.max(m.saturating_sub(1));
    Ok(ProductResult {
        value: log_sum.exp(),
        truncation_index: Truncation::Index(k),
        tail_bound: integral_tail_bound(tail_majorant, last)?,
    })
}

/// ∏_{k=M}^{K} factor(k) with an integral-comparison tail bound.
///
/// `tail_majorant` must satisfy a ≥ sup_{k>K} k²(1 − factor(k)); the true
/// infinite product then lies in `[value·exp(−tail_bound), value]`.
pub fn truncated_product<F>(factor: F, m: u64, k: u64, tail_majorant: f64) -> Result<ProductResult>
where
    F: Fn(u64) -> f64,
{
    let mut acc = CompensatedSum::default();
    for i in m..=k {
        let f = factor(i);
        if !(f > 0.0 && f <= 1.0) {
            return Err(KacError::invalid(format!("factor({i}) = {f} outside (0, 1]")));
        }
        acc.add(f.ln());
    }
    finish(acc.value(), m, k, tail_majorant)
}

/// Same as [`truncated_product`], but the closure returns the deficit
/// d_k = 1 − factor(k), which keeps full precision when d_k is tiny.
pub fn truncated_product_deficit<F>(deficit: F, m: u64, k: u64, tail_majorant: f64) -> Result<ProductResult>
where
    F: Fn(u64) -> f64,
{
    let mut acc = CompensatedSum::default();
    for i in m..=k {
        acc.add(log_factor(i, deficit(i))?);
    }
    finish(acc.value(), m, k, tail_majorant)
}

fn log_factor(i: u64, d: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&d) {
        return Err(KacError::invalid(format!(
            "factor({i}) = {} outside (0, 1]",
            1.0 - d
        )));
    }
    Ok((-d).ln_1p())
}

const PAR_CHUNK: u64 = 1 << 14;

/// Parallel variant of [`truncated_product_deficit`]; chunk sums are combined
/// in index order so the result does not depend on scheduling.
pub fn truncated_product_deficit_par<F>(deficit: F, m: u64, k: u64, tail_majorant: f64) -> Result<ProductResult>
where
    F: Fn(u64) -> f64 + Sync,
{
    if k < m {
        return finish(0.0, m, k, tail_majorant);
    }
    let chunks = (k - m) / PAR_CHUNK + 1;
    let partial: Vec<Result<CompensatedSum>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = m + c * PAR_CHUNK;
            let hi = (lo + PAR_CHUNK - 1).min(k);
            let mut acc = CompensatedSum::default();
            for i in lo..=hi {
                acc.add(log_factor(i, deficit(i))?);
            }
            Ok(acc)
        })
        .collect();
    let mut total = CompensatedSum::default();
    for p in partial {
        let p = p?;
        total.add(p.sum);
        total.add(p.comp);
    }
    finish(total.value(), m, k, tail_majorant)
}

/// ∏_{j=3}^{∞} [1 − (4j+1)/((j−1)²(j+1))] as a rational product spec:
/// P(j) = j³ − j² − 5j, Q(j) = (j−1)²(j+1), M = 3.
pub fn uniform_factor_spec() -> Result<RationalProductSpec> {
    RationalProductSpec::from_coefficients(&[0.0, -5.0, -1.0, 1.0], &[1.0, -1.0, -1.0, 1.0], 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sorted_re(v: &[Complex64]) -> Vec<f64> {
        let mut r: Vec<f64> = v.iter().map(|z| z.re).collect();
        r.sort_by(f64::total_cmp);
        r
    }

    #[test]
    fn roots_of_cubic_numerator() {
        let roots = poly_roots(&[0.0, -5.0, -1.0, 1.0], 1e-12).unwrap();
        let s21 = 21f64.sqrt();
        let expected = [(1.0 - s21) / 2.0, 0.0, (1.0 + s21) / 2.0];
        for (r, e) in sorted_re(&roots).iter().zip(expected) {
            assert!((r - e).abs() < 1e-13, "{r} vs {e}");
        }
        assert!(roots.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn linear_and_conjugate_roots() {
        let r = poly_roots(&[-1.0, 1.0], 1e-12).unwrap();
        assert_eq!(r, vec![Complex64::new(1.0, 0.0)]);
        let r = poly_roots(&[1.0, 0.0, 1.0], 1e-12).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] - r[1].conj()).norm() == 0.0);
        assert!((r[0].im.abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_polynomials_rejected() {
        assert!(poly_roots(&[0.0, 0.0], 1e-12).is_err());
        assert!(poly_roots(&[], 1e-12).is_err());
        assert!(poly_roots(&[3.0], 1e-12).is_err());
    }

    #[test]
    fn repeated_roots() {
        // (x-1)^2 (x+1)
        let r = poly_roots(&[1.0, -1.0, -1.0, 1.0], 1e-10).unwrap();
        let re = sorted_re(&r);
        assert!((re[0] + 1.0).abs() < 1e-12);
        assert!((re[1] - 1.0).abs() < 1e-7 && (re[2] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn uniform_factor_closed_form() {
        let spec = uniform_factor_spec().unwrap();
        let res = gamma_product_limit(&spec).unwrap();
        assert!((res.value - 0.038_815_036_14).abs() < 1e-9, "{}", res.value);
        assert_eq!(res.truncation_index, Truncation::ClosedForm);
        assert_eq!(res.tail_bound, 0.0);
    }

    #[test]
    fn identical_roots_give_one() {
        let roots = vec![Complex64::new(0.5, 0.0), Complex64::new(-2.0, 1.0), Complex64::new(-2.0, -1.0)];
        let spec = RationalProductSpec {
            numerator_roots: roots.clone(),
            denominator_roots: roots,
            start_index: 5,
            leading_ratio: 1.0,
        };
        assert_relative_eq!(gamma_product_limit(&spec).unwrap().value, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn invalid_specs() {
        let mut spec = uniform_factor_spec().unwrap();
        spec.numerator_roots[0] += 0.1;
        assert!(matches!(spec.validate(), Err(KacError::InvalidArgument(_))));
        // root 1 of Q inside range when M = 1
        let mut spec = uniform_factor_spec().unwrap();
        spec.start_index = 1;
        assert!(matches!(gamma_product_limit(&spec), Err(KacError::Pole(_))));
        let mut spec = uniform_factor_spec().unwrap();
        spec.denominator_roots.pop();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn telescoping_product() {
        // ∏_{k=2}^{K} (1 - 1/k²) = (K+1)/(2K)
        let k = 100_000;
        let res = truncated_product(|k| 1.0 - 1.0 / (k * k) as f64, 2, k, 1.0).unwrap();
        assert!((res.value - 0.5).abs() < 1e-4);
        assert_relative_eq!(res.value, (k + 1) as f64 / (2 * k) as f64, max_relative = 1e-12);
        let lower = res.certified_lower();
        assert!(lower <= 0.5 && 0.5 <= res.value);
    }

    #[test]
    fn empty_range() {
        let res = truncated_product(|_| 0.5, 11, 10, 2.0).unwrap();
        assert_eq!(res.value, 1.0);
        assert_relative_eq!(res.tail_bound, 2.0 / (10.0 * (1.0 - 2.0 / 100.0)));
    }

    #[test]
    fn nonpositive_factor_rejected() {
        assert!(truncated_product(|k| if k == 7 { 0.0 } else { 0.9 }, 3, 10, 0.0).is_err());
        assert!(truncated_product_deficit(|_| 1.5, 3, 10, 0.0).is_err());
    }

    #[test]
    fn parallel_matches_sequential() {
        let d = |k: u64| 7.5 / (k as f64 * k as f64) + 1.0 / (k as f64).powi(3);
        let seq = truncated_product_deficit(d, 11, 1_000_000, 8.0).unwrap();
        let par = truncated_product_deficit_par(d, 11, 1_000_000, 8.0).unwrap();
        assert!((seq.value.ln() - par.value.ln()).abs() < 1e-12);
        assert_eq!(seq.tail_bound, par.tail_bound);
    }
}
