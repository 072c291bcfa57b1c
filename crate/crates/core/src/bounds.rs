//! Rigorous lower bounds on the spectral gaps Δ_N, Δ̂_N and Λ.

use crate::error::{KacError, Result};
use crate::products::{integral_tail_bound, truncated_product_deficit, truncated_product_deficit_par};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Induction base N₀: fixed, or chosen to maximize the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseChoice {
    Auto,
    Fixed(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapBoundInputs {
    pub n: u64,
    pub gamma: f64,
    pub n0: BaseChoice,
}

impl GapBoundInputs {
    pub fn new(n: u64, gamma: f64, n0: BaseChoice) -> Result<Self> {
        check_gamma(gamma)?;
        if n < 2 {
            return Err(KacError::invalid(format!("need N ≥ 2, got {n}")));
        }
        Ok(GapBoundInputs { n, gamma, n0 })
    }
}

/// Auto search range for N₀.
pub const AUTO_N0_MIN: u64 = 6;
pub const AUTO_N0_MAX: u64 = 64;
/// Truncation point for infinite products.
pub const TAIL_CUTOFF: u64 = 1_000_000;
/// Admissibility of N₀ is checked explicitly up to this index and by the
/// certified majorant beyond it.
const ADMISSIBLE_SCAN: u64 = 256;

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(KacError::invalid(format!("γ must lie in [0, 1], got {gamma}")));
    }
    Ok(())
}

const P_COEF: [i128; 6] = [-102, 256, 131, 15, 31, 5];
const Q_COEF: [i128; 6] = [78, -164, -211, -87, -5, 5];

fn horner_i128(c: &[i128], n: i128) -> i128 {
    c.iter().rev().fold(0, |acc, &x| acc * n + x)
}

fn horner_f64(c: &[i128], n: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &x| acc * n + x as f64)
}

/// A_N = (p(N) + γ q(N)) / r(N).
pub fn a_coeff(n: u64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if n <= 2 {
        return Err(KacError::Pole(format!("A_N needs N ≥ 3, got {n}")));
    }
    // p and q carry a factor N², so only p/N² and q/N² are formed.
    let (pt, qt) = if n <= 10_000_000 {
        let ni = n as i128;
        (horner_i128(&P_COEF, ni) as f64, horner_i128(&Q_COEF, ni) as f64)
    } else {
        let nf = n as f64;
        (horner_f64(&P_COEF, nf), horner_f64(&Q_COEF, nf))
    };
    let nf = n as f64;
    let r_over_n2 = (nf + 6.0) * (nf - 2.0).powi(2) * (nf - 1.0).powi(3) * (nf + 1.0) / (nf * nf);
    Ok((pt + gamma * qt) / r_over_n2)
}

/// C_N, defined for N ≥ 5.
pub fn c_coeff(n: u64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if n <= 4 {
        return Err(KacError::Pole(format!("C_N needs N ≥ 5, got {n}")));
    }
    let nf = n as f64;
    let corr = 2.0 / (nf - 1.0) + 8.0 * nf / ((nf - 2.0) * (nf - 4.0).powi(2));
    let eig = 1.0 - 15.0 / ((nf + 1.0) * (nf + 3.0));
    Ok(15f64.sqrt() * (1.0 - gamma) / (nf - 1.0).powi(2) * nf.powf(2.5) * corr.sqrt() / eig.sqrt())
}

/// μ_N = 1/N + 3/(N(N+1)).
pub fn mu(n: u64) -> Result<f64> {
    if n < 2 {
        return Err(KacError::invalid(format!("μ_N needs N ≥ 2, got {n}")));
    }
    let nf = n as f64;
    Ok(1.0 / nf + 3.0 / (nf * (nf + 1.0)))
}

/// 1 minus the j-th factor of P(N) = ∏_{j=3}^N [1 − (4j+1)/((j−1)²(j+1))].
fn uniform_deficit(j: u64) -> f64 {
    let jf = j as f64;
    (4.0 * jf + 1.0) / ((jf - 1.0).powi(2) * (jf + 1.0))
}

fn log_uniform_product(n: u64) -> Result<f64> {
    if n < 3 {
        return Ok(0.0);
    }
    Ok(truncated_product_deficit(uniform_deficit, 3, n, 0.0)?.value.ln())
}

/// 4 N^{γ−1} ∏_{j=3}^N [1 − (4j+1)/((j−1)²(j+1))]; equals 2^{γ+1} at N = 2.
pub fn uniform_gap_lb(n: u64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if n < 2 {
        return Err(KacError::invalid(format!("need N ≥ 2, got {n}")));
    }
    Ok(4.0 * (n as f64).powf(gamma - 1.0) * log_uniform_product(n)?.exp())
}

/// lim_{N→∞} of [`uniform_gap_lb`]: 4∏_{j≥3}[…] at γ = 1, zero below.
pub fn uniform_gap_limit(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if gamma < 1.0 {
        return Ok(0.0);
    }
    let spec = crate::products::uniform_factor_spec()?;
    Ok(4.0 * crate::products::gamma_product_limit(&spec)?.value)
}

fn deficit(k: u64, gamma: f64, with_c: bool) -> Result<f64> {
    let mut a = a_coeff(k, gamma)?;
    if with_c {
        a += c_coeff(k, gamma)?;
    }
    Ok(a / (k as f64 * k as f64))
}

fn taylor_shift(c: &[f64], s: f64) -> Vec<f64> {
    let mut c = c.to_vec();
    let n = c.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            c[j] += s * c[j + 1];
        }
    }
    c
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Returns a with a ≥ sup_{k>K} A_k (plus C_k when `with_c`).
///
/// A_k ≤ a for all real k ≥ K+1 is certified by shifting
/// a·r(x) − p(x) − γq(x) to x = K+1+y and checking that every coefficient
/// is non-negative with a margin for rounding. C_k is a product of
/// decreasing positive factors for k ≥ 5, so its sup is C_{K+1}.
pub fn certified_tail_majorant(gamma: f64, with_c: bool, k: u64) -> Result<f64> {
    check_gamma(gamma)?;
    if k < 5 {
        return Err(KacError::invalid(format!("tail certificate needs K ≥ 5, got {k}")));
    }
    let p: Vec<f64> = [0.0, 0.0].into_iter().chain(P_COEF.iter().map(|&x| x as f64)).collect();
    let q: Vec<f64> = [0.0, 0.0].into_iter().chain(Q_COEF.iter().map(|&x| x as f64)).collect();
    let r = [[6.0, 1.0], [-2.0, 1.0], [-2.0, 1.0], [-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0], [1.0, 1.0]]
        .iter()
        .fold(vec![1.0], |acc, f| poly_mul(&acc, f));
    let s = (k + 1) as f64;
    let (ps, qs, rs) = (taylor_shift(&p, s), taylor_shift(&q, s), taylor_shift(&r, s));
    let base = a_coeff(k + 1, gamma)?;
    let mut slack = 1e-9;
    let mut certified = None;
    for _ in 0..12 {
        let a = base * (1.0 + slack);
        let ok = (0..rs.len()).all(|j| {
            let d = a * rs[j] - ps[j] - gamma * qs[j];
            let scale = a * rs[j].abs() + ps[j].abs() + gamma * qs[j].abs();
            d >= 1e-12 * scale
        });
        if ok {
            certified = Some(a);
            break;
        }
        slack *= 10.0;
    }
    let mut a = certified.ok_or_else(|| {
        KacError::numerical(format!("could not certify a majorant for A_k beyond K={k}"))
    })?;
    if with_c {
        a += c_coeff(k + 1, gamma)? * (1.0 + 1e-12);
    }
    Ok(a)
}

/// Smallest N₀ ≥ `floor` such that the factors 1 − (A_k [+ C_k])/k² are
/// positive for every k > N₀.
fn first_admissible(gamma: f64, with_c: bool, floor: u64) -> Result<u64> {
    let start = if with_c { 5 } else { 3 };
    let mut last_bad = None;
    for k in start..=ADMISSIBLE_SCAN {
        if deficit(k, gamma, with_c)? >= 1.0 {
            last_bad = Some(k);
        }
    }
    let a = certified_tail_majorant(gamma, with_c, ADMISSIBLE_SCAN)?;
    let kk = ADMISSIBLE_SCAN as f64 + 1.0;
    if a >= kk * kk {
        return Err(KacError::numerical("tail majorant too large to certify admissibility"));
    }
    let first = last_bad.unwrap_or(start - 1).max(start - 1);
    Ok(first.max(floor))
}

fn candidates(n0: BaseChoice, gamma: f64, with_c: bool) -> Result<Vec<u64>> {
    let floor = if with_c { 5 } else { 2 };
    let first = first_admissible(gamma, with_c, floor)?;
    match n0 {
        BaseChoice::Fixed(v) => {
            if v < floor {
                return Err(KacError::invalid(format!("N₀ must be at least {floor}, got {v}")));
            }
            if v < first {
                return Err(KacError::invalid(format!(
                    "N₀ = {v} is not admissible at γ = {gamma}: some factor beyond it is non-positive \
                     (smallest admissible N₀ is {first})"
                )));
            }
            Ok(vec![v])
        }
        BaseChoice::Auto => {
            let lo = first.max(AUTO_N0_MIN);
            if lo > AUTO_N0_MAX {
                return Err(KacError::invalid(format!(
                    "no admissible N₀ in [{AUTO_N0_MIN}, {AUTO_N0_MAX}] (smallest admissible is {first})"
                )));
            }
            Ok((lo..=AUTO_N0_MAX).collect())
        }
    }
}

/// For every N₀ in `cands`, the log of ∏_{k=N₀+1}^{N} factor(k). The shared
/// range above the largest candidate is evaluated once.
fn log_products(cands: &[u64], n: u64, gamma: f64, with_c: bool, parallel: bool) -> Result<Vec<f64>> {
    let top = *cands.iter().max().unwrap();
    let d = |k: u64| deficit(k, gamma, with_c).unwrap_or(f64::NAN);
    let shared = if n > top {
        let res = if parallel {
            truncated_product_deficit_par(d, top + 1, n, 0.0)?
        } else {
            truncated_product_deficit(d, top + 1, n, 0.0)?
        };
        res.value.ln()
    } else {
        0.0
    };
    let mut out = Vec::with_capacity(cands.len());
    for &c in cands {
        let hi = n.min(top);
        let partial = if hi > c { truncated_product_deficit(d, c + 1, hi, 0.0)?.value.ln() } else { 0.0 };
        out.push(shared + partial);
    }
    Ok(out)
}

/// Value and chosen N₀ of the product bound at finite N.
fn product_bound(n: u64, gamma: f64, n0: BaseChoice, with_c: bool) -> Result<(f64, u64)> {
    check_gamma(gamma)?;
    if n < 2 {
        return Err(KacError::invalid(format!("need N ≥ 2, got {n}")));
    }
    let cands = candidates(n0, gamma, with_c)?;
    let logs = log_products(&cands, n, gamma, with_c, n > 100_000)?;
    let mut best: Option<(f64, u64)> = None;
    for (&c, lp) in cands.iter().zip(logs) {
        let value = if n <= c {
            uniform_gap_lb(n, gamma)?
        } else {
            4.0 * (c as f64).powf(gamma - 1.0) * (log_uniform_product(c)? + lp).exp()
        };
        if best.is_none_or(|(b, _)| value > b) {
            best = Some((value, c));
        }
    }
    Ok(best.unwrap())
}

/// Lower bound on Δ̂_N: 4 N₀^{γ−1} P(N₀) ∏_{k=N₀+1}^{N} (1 − A_k/k²), or the
/// uniform bound when N ≤ N₀.
pub fn hat_delta_lb(n: u64, gamma: f64, n0: BaseChoice) -> Result<f64> {
    Ok(product_bound(n, gamma, n0, false)?.0)
}

pub fn hat_delta_lb_with_base(n: u64, gamma: f64, n0: BaseChoice) -> Result<(f64, u64)> {
    product_bound(n, gamma, n0, false)
}

/// Lower bound on Δ_N: as [`hat_delta_lb`] with A_k replaced by A_k + C_k.
pub fn delta_lb(n: u64, gamma: f64, n0: BaseChoice) -> Result<f64> {
    Ok(product_bound(n, gamma, n0, true)?.0)
}

pub fn delta_lb_with_base(n: u64, gamma: f64, n0: BaseChoice) -> Result<(f64, u64)> {
    product_bound(n, gamma, n0, true)
}

/// Certified N → ∞ limit of a product bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitBound {
    /// A number L with bound(N) ≥ L for every N ≥ 2.
    pub value: f64,
    pub n0: u64,
    /// Truncated product value before the tail correction.
    pub truncated_value: f64,
    pub truncation_index: u64,
    /// Certified sup of A_k (+C_k) beyond the truncation index.
    pub tail_majorant: f64,
    /// Bound on the log-error from truncation.
    pub tail_bound: f64,
}

fn limit_bound(gamma: f64, n0: BaseChoice, with_c: bool, parallel: bool) -> Result<LimitBound> {
    check_gamma(gamma)?;
    let cands = candidates(n0, gamma, with_c)?;
    let k = TAIL_CUTOFF;
    let majorant = certified_tail_majorant(gamma, with_c, k)?;
    let tail = integral_tail_bound(majorant, k)?;
    let logs = log_products(&cands, k, gamma, with_c, parallel)?;
    let mut best: Option<LimitBound> = None;
    for (&c, lp) in cands.iter().zip(logs) {
        let log_head = (gamma - 1.0) * (c as f64).ln() + log_uniform_product(c)?;
        let truncated = 4.0 * (log_head + lp).exp();
        // the uniform bound decreases in N, so N ≤ N₀ never undercuts N₀
        let mut floor = f64::INFINITY;
        for m in 2..=c {
            floor = floor.min(uniform_gap_lb(m, gamma)?);
        }
        let value = (truncated * (-tail).exp()).min(floor);
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(LimitBound {
                value,
                n0: c,
                truncated_value: truncated,
                truncation_index: k,
                tail_majorant: majorant,
                tail_bound: tail,
            });
        }
    }
    Ok(best.unwrap())
}

/// Certified inf_N of the Δ̂_N bound, hence a lower bound on Λ.
pub fn lambda_lb(gamma: f64) -> Result<LimitBound> {
    if gamma >= 1.0 {
        return Err(KacError::invalid("the Λ bound needs γ < 1"));
    }
    limit_bound(gamma, BaseChoice::Auto, false, true)
}

pub fn lambda_lb_with(gamma: f64, n0: BaseChoice, parallel: bool) -> Result<LimitBound> {
    if gamma >= 1.0 {
        return Err(KacError::invalid("the Λ bound needs γ < 1"));
    }
    limit_bound(gamma, n0, false, parallel)
}

/// Certified inf_N of the Δ_N bound; positive means liminf Δ_N > 0.
pub fn delta_liminf_lb(gamma: f64) -> Result<LimitBound> {
    limit_bound(gamma, BaseChoice::Auto, true, true)
}

/// Δ₂ = 2^{γ+1}.
pub fn delta2(gamma: f64) -> f64 {
    2f64.powf(gamma + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightPolyBounds {
    /// 1 + γx − (1−γ)x² with x = (1 − v²)/(N − 1).
    pub m_value: f64,
    /// ((N − v²)/(N − 1))^γ.
    pub w_value: f64,
    /// 1 − (2−γ)/(N−1)².
    pub km_lb: f64,
    /// km_lb + (1−γ)(2N−1)/((N−1)³(N+1)).
    pub km_lb_refined: f64,
}

pub fn weight_poly_bounds(n: u64, gamma: f64, v: f64) -> Result<WeightPolyBounds> {
    check_gamma(gamma)?;
    if n < 3 {
        return Err(KacError::invalid(format!("need N ≥ 3, got {n}")));
    }
    let nf = n as f64;
    if v * v > nf {
        return Err(KacError::invalid(format!("v² = {} exceeds N = {n}", v * v)));
    }
    let x = (1.0 - v * v) / (nf - 1.0);
    let m_value = 1.0 + gamma * x - (1.0 - gamma) * x * x;
    let w_value = ((nf - v * v) / (nf - 1.0)).powf(gamma);
    if m_value > w_value * (1.0 + 1e-14) + 1e-15 || m_value < -1e-15 {
        return Err(KacError::numerical(format!(
            "weight polynomial {m_value} outside [0, {w_value}] at v = {v}"
        )));
    }
    let km_lb = 1.0 - (2.0 - gamma) / (nf - 1.0).powi(2);
    let km_lb_refined = km_lb + (1.0 - gamma) * (2.0 * nf - 1.0) / ((nf - 1.0).powi(3) * (nf + 1.0));
    Ok(WeightPolyBounds { m_value, w_value, km_lb, km_lb_refined })
}

/// All bounds for one (N, γ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: u64,
    pub gamma: f64,
    pub a_n: Option<f64>,
    pub c_n: Option<f64>,
    pub mu_n: f64,
    pub uniform_lb: f64,
    pub hat_delta_lb: f64,
    pub hat_n0: u64,
    pub delta_lb: Option<f64>,
    pub delta_n0: Option<u64>,
    pub lambda_lb: Option<f64>,
    pub lambda_n0: Option<u64>,
    pub delta2: f64,
    pub tail_certificate: Option<f64>,
    pub formulas: BTreeMap<String, String>,
}

impl BoundReport {
    pub fn compute(inputs: &GapBoundInputs) -> Result<Self> {
        let GapBoundInputs { n, gamma, n0 } = *inputs;
        check_gamma(gamma)?;
        let (hat, hat_n0) = hat_delta_lb_with_base(n, gamma, n0)?;
        let delta_n0 = match n0 {
            BaseChoice::Fixed(v) if v < 5 => None,
            _ => Some(n0),
        };
        let delta = match delta_n0 {
            Some(choice) => Some(delta_lb_with_base(n, gamma, choice)?),
            None => None,
        };
        let lambda = if gamma < 1.0 { Some(lambda_lb_with(gamma, n0, true)?) } else { None };
        let formulas = [
            ("a_n", "(p(N) + γ q(N)) / r(N)"),
            ("c_n", "√15 (1−γ) N^(5/2) (N−1)^(−2) [2/(N−1) + 8N/((N−2)(N−4)²)]^(1/2) [1 − 15/((N+1)(N+3))]^(−1/2)"),
            ("mu_n", "1/N + 3/(N(N+1))"),
            ("uniform_lb", "4 N^(γ−1) ∏_{j=3}^{N} [1 − (4j+1)/((j−1)²(j+1))]"),
            ("hat_delta_lb", "4 N0^(γ−1) P(N0) ∏_{k=N0+1}^{N} (1 − A_k/k²)"),
            ("delta_lb", "4 N0^(γ−1) P(N0) ∏_{k=N0+1}^{N} (1 − (A_k + C_k)/k²)"),
            ("lambda_lb", "inf_N hat_delta_lb, truncated at K with tail a/(K(1 − a/K²))"),
            ("delta2", "2^(γ+1)"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        Ok(BoundReport {
            n,
            gamma,
            a_n: if n >= 3 { Some(a_coeff(n, gamma)?) } else { None },
            c_n: if n >= 5 { Some(c_coeff(n, gamma)?) } else { None },
            mu_n: mu(n)?,
            uniform_lb: uniform_gap_lb(n, gamma)?,
            hat_delta_lb: hat,
            hat_n0,
            delta_lb: delta.map(|d| d.0),
            delta_n0: delta.map(|d| d.1),
            lambda_lb: lambda.as_ref().map(|l| l.value),
            lambda_n0: lambda.as_ref().map(|l| l.n0),
            delta2: delta2(gamma),
            tail_certificate: lambda.as_ref().map(|l| l.tail_bound),
            formulas,
        })
    }
}
