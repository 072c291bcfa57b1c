//! Upper bounds on the gaps: Rayleigh quotients over sums of single-particle
//! profiles, exact spectra at γ = 0, and a Galerkin estimate of Λ.

mod linearized;
mod maxwellian;

pub use linearized::{linearized_gap, LinearizedModel};
pub use maxwellian::{exact_maxwellian_spectrum, MaxwellianSpectrum};

use crate::error::{KacError, Result};
use crate::poly::Poly;
use crate::special::binomial;
use crate::sphere::{k_apply_polynomial, marginal_recurrence, marginal_rule, moment_monomial, pair_rule, SphereSpec};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// φ(v) = Σ_j c_j v^{2j}, inducing f = Σ_k φ(v_k) on the sphere with E = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialProfile {
    pub coefficients: Vec<f64>,
    pub n: usize,
    pub orthogonalized: bool,
}

impl TrialProfile {
    pub fn new(coefficients: Vec<f64>, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(KacError::invalid(format!("need N ≥ 2, got {n}")));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(KacError::invalid("profile coefficients must be finite"));
        }
        Ok(TrialProfile { coefficients, n, orthogonalized: false })
    }

    /// The profile w⁴ − 3N/(N+2), orthogonalized. The shift by a multiple of
    /// v² − 1 leaves Σ φ(v_k) unchanged on the sphere.
    pub fn f0(n: usize) -> Result<Self> {
        let nf = n as f64;
        orthogonalize(&Self::new(vec![-3.0 * nf / (nf + 2.0), 0.0, 1.0], n)?)
    }

    pub fn poly(&self) -> Poly {
        Poly::from_even(&self.coefficients)
    }

    pub fn eval(&self, v: f64) -> f64 {
        let x = v * v;
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Degree in v.
    pub fn degree(&self) -> usize {
        self.poly().degree()
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|c| *c == 0.0)
    }

    fn spec(&self) -> Result<SphereSpec> {
        SphereSpec::unit(self.n)
    }

    /// Average of φ over the circle of radius r.
    pub fn circle_average(&self, r: f64) -> f64 {
        let r2 = r * r;
        let mut acc = 0.0;
        let mut pow = 1.0;
        for (k, c) in self.coefficients.iter().enumerate() {
            acc += c * pow * binomial(2 * k, k) / 4f64.powi(k as i32);
            pow *= r2;
        }
        acc
    }
}

fn even_moments(spec: &SphereSpec, kmax: usize) -> Result<Vec<f64>> {
    (0..=kmax).map(|k| moment_monomial(spec, &[2 * k as u32])).collect()
}

/// Removes the ν_{N,1}-projection onto span{1, v² − 1}.
pub fn orthogonalize(profile: &TrialProfile) -> Result<TrialProfile> {
    let spec = profile.spec()?;
    let d = profile.coefficients.len();
    let m = even_moments(&spec, d + 1)?;
    let mean: f64 = profile.coefficients.iter().zip(&m).map(|(c, mk)| c * mk).sum();
    let cov: f64 = profile
        .coefficients
        .iter()
        .enumerate()
        .map(|(k, c)| c * (m[k + 1] - m[k]))
        .sum();
    let mean_scale: f64 = profile.coefficients.iter().zip(&m).map(|(c, mk)| (c * mk).abs()).sum();
    let cov_scale: f64 =
        profile.coefficients.iter().enumerate().map(|(k, c)| (c * (m[k + 1] + m[k])).abs()).sum();
    if mean.abs() <= 1e-13 * mean_scale && cov.abs() <= 1e-13 * cov_scale && profile.coefficients.len() > 2 {
        return Ok(TrialProfile { orthogonalized: true, ..profile.clone() });
    }
    let var = m[2] - 1.0;
    let b = cov / var;
    let mut out = profile.coefficients.clone();
    out.resize(d.max(2), 0.0);
    out[0] -= mean - b;
    out[1] -= b;
    // whatever is left of a profile of degree ≤ 2 is rounding noise
    if out.iter().skip(2).all(|c| *c == 0.0) {
        out.iter_mut().for_each(|c| *c = 0.0);
    }
    while out.len() > 1 && out.last() == Some(&0.0) {
        out.pop();
    }
    Ok(TrialProfile { coefficients: out, n: profile.n, orthogonalized: true })
}

pub(crate) fn check_orthogonal(profile: &TrialProfile) -> Result<()> {
    let spec = profile.spec()?;
    let d = profile.coefficients.len();
    let m = even_moments(&spec, d + 1)?;
    let scale: f64 = profile.coefficients.iter().zip(&m).map(|(c, mk)| (c * mk).abs()).sum();
    let mean: f64 = profile.coefficients.iter().zip(&m).map(|(c, mk)| c * mk).sum();
    let cov: f64 = profile.coefficients.iter().enumerate().map(|(k, c)| c * (m[k + 1] - m[k])).sum();
    if mean.abs() > 1e-8 * (1.0 + scale) || cov.abs() > 1e-8 * (1.0 + scale * m[1].max(1.0) * 4.0) {
        return Err(KacError::invalid(format!(
            "profile is not orthogonal to 1 and v² (⟨φ⟩ = {mean:e}, ⟨φ, v²−1⟩ = {cov:e}); orthogonalize it first"
        )));
    }
    Ok(())
}

/// ‖Σ_k φ(v_k)‖² = N‖φ‖² + N(N−1)⟨φ, Kφ⟩.
pub fn profile_norm_sq(profile: &TrialProfile) -> Result<f64> {
    let spec = profile.spec()?;
    let phi = profile.poly();
    let kphi = k_apply_polynomial(&spec, &phi)?;
    let rule = marginal_rule(&spec, phi.degree() + 2)?;
    let nf = spec.n();
    let norm = rule.integrate(|v| phi.eval(v).powi(2));
    let cross = rule.integrate(|v| phi.eval(v) * kphi.eval(v));
    Ok(nf * norm + nf * (nf - 1.0) * cross)
}

/// φ(w₁) + φ(w₂) − 2·(circle average), i.e. f − [f]^{(1,2)} at a pair.
fn pair_defect(profile: &TrialProfile, w: &[f64]) -> f64 {
    let r = (w[0] * w[0] + w[1] * w[1]).sqrt();
    profile.eval(w[0]) + profile.eval(w[1]) - 2.0 * profile.circle_average(r)
}

/// ℰ_N(f, f) for f = Σ φ(v_k), reduced to a pair integral:
/// N ∫ (w₁² + w₂²)^γ (φ(w₁) + φ(w₂) − 2H_φ(|w|))² dν_{N,2}.
/// Exact for polynomial φ when `nodes` exceeds its degree.
#[allow(non_snake_case)]
pub fn dirichlet_form_A(profile: &TrialProfile, gamma: f64, nodes: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(KacError::invalid(format!("γ must lie in [0, 1], got {gamma}")));
    }
    check_orthogonal(profile)?;
    if profile.is_zero() {
        return Ok(0.0);
    }
    let deg = profile.degree();
    if nodes < deg + 1 {
        return Err(KacError::invalid(format!("need at least {} nodes for degree {deg}", deg + 1)));
    }
    let spec = profile.spec()?;
    let rule = pair_rule(&spec, gamma, nodes)?;
    Ok(spec.n() * rule.integrate(|w| pair_defect(profile, w).powi(2)))
}

/// ℰ_N(f, f)/‖f‖² for f = Σ φ(v_k).
pub fn rayleigh_quotient(profile: &TrialProfile, gamma: f64) -> Result<f64> {
    let norm = profile_norm_sq(profile)?;
    if !(norm > 0.0) {
        return Err(KacError::invalid("profile induces the zero function; quotient undefined"));
    }
    Ok(dirichlet_form_A(profile, gamma, profile.degree() + 2)? / norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayleighResult {
    pub value: f64,
    /// Minimizer, normalized so that ‖Σ φ(v_k)‖ = 1.
    pub profile: TrialProfile,
    /// Dimension of the trial space after removing null directions.
    pub retained_dimension: usize,
}

/// Smallest eigenvalue of the pencil (A, B) with B positive semidefinite;
/// directions in the numerical kernel of B are pruned first.
pub(crate) fn pencil_min(a: &DMatrix<f64>, b: &DMatrix<f64>, rel_tol: f64) -> Result<(Vec<f64>, DMatrix<f64>, usize)> {
    let n = b.nrows();
    // unit-diagonal scaling improves conditioning of monomial-type bases
    let d: Vec<f64> = (0..n).map(|i| if b[(i, i)] > 0.0 { 1.0 / b[(i, i)].sqrt() } else { 0.0 }).collect();
    let dm = DMatrix::from_diagonal(&DVector::from_vec(d));
    let bs = &dm * b * &dm;
    let as_ = &dm * a * &dm;
    let eig = SymmetricEigen::new(bs.clone());
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > rel_tol * max).collect();
    if keep.is_empty() {
        return Err(KacError::numerical("trial space is numerically empty (singular Gram matrix)"));
    }
    let mut t = DMatrix::<f64>::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let s = 1.0 / eig.eigenvalues[i].sqrt();
        for r in 0..n {
            t[(r, c)] = eig.eigenvectors[(r, i)] * s;
        }
    }
    let mut reduced = t.transpose() * as_ * &t;
    reduced = (&reduced + reduced.transpose()) * 0.5;
    let re = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..keep.len()).collect();
    order.sort_by(|&i, &j| re.eigenvalues[i].total_cmp(&re.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| re.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, keep.len());
    for (c, &i) in order.iter().enumerate() {
        let y = re.eigenvectors.column(i);
        let x = &dm * (&t * y);
        vectors.set_column(c, &x);
    }
    Ok((values, vectors, keep.len()))
}

/// Even ν_{N,1}-orthonormal polynomials of degrees 4, 6, …, `degree`, in v.
fn profile_basis(spec: &SphereSpec, degree: usize) -> Result<Vec<Poly>> {
    let rec = marginal_recurrence(spec, degree + 1)?;
    let mut polys = vec![Poly::constant(1.0)];
    let t = Poly::monomial(1, 1.0);
    for k in 0..degree {
        let sb = if k == 0 { 0.0 } else { rec.b[k].sqrt() };
        let prev = if k == 0 { Poly::zero() } else { polys[k - 1].clone() };
        let shifted = &t - &Poly::constant(rec.a[k]);
        let next = (&(&shifted * &polys[k]) - &prev.scale(sb)).scale(1.0 / rec.b[k + 1].sqrt());
        polys.push(next);
    }
    let r = spec.radius();
    Ok(polys
        .into_iter()
        .enumerate()
        .filter(|(d, _)| *d >= 4 && d % 2 == 0)
        .map(|(_, p)| Poly::new(p.coeffs().iter().enumerate().map(|(j, c)| c / r.powi(j as i32)).collect()))
        .collect())
}

/// Minimizes ℰ_N(f, f)/‖f‖² over f = Σ φ(v_k) with φ even of degree ≤
/// `degree`. The result is an upper bound on Δ̂_N.
pub fn rayleigh_min(n: usize, gamma: f64, degree: usize) -> Result<RayleighResult> {
    if !(4..=12).contains(&degree) {
        return Err(KacError::invalid(format!("degree must be in 4..=12, got {degree}")));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(KacError::invalid(format!("γ must lie in [0, 1], got {gamma}")));
    }
    let spec = SphereSpec::unit(n)?;
    let basis: Vec<TrialProfile> = profile_basis(&spec, degree)?
        .into_iter()
        .map(|p| TrialProfile { coefficients: p.even_coeffs(), n, orthogonalized: true })
        .collect();
    let dim = basis.len();
    let rule = pair_rule(&spec, gamma, degree + 2)?;
    let defects: Vec<Vec<f64>> = basis
        .iter()
        .map(|b| rule.points.iter().map(|w| pair_defect(b, w)).collect())
        .collect();
    let nf = spec.n();
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut g = DMatrix::<f64>::zeros(dim, dim);
    let mrule = marginal_rule(&spec, degree + 2)?;
    let kb: Vec<Poly> = basis.iter().map(|b| k_apply_polynomial(&spec, &b.poly())).collect::<Result<_>>()?;
    for i in 0..dim {
        for j in 0..=i {
            let e: f64 = rule.weights.iter().enumerate().map(|(q, w)| w * defects[i][q] * defects[j][q]).sum();
            let pi = basis[i].poly();
            let ip = mrule.integrate(|v| pi.eval(v) * basis[j].eval(v));
            let cross = mrule.integrate(|v| pi.eval(v) * kb[j].eval(v));
            a[(i, j)] = nf * e;
            a[(j, i)] = nf * e;
            let gij = nf * ip + nf * (nf - 1.0) * cross;
            g[(i, j)] = gij;
            g[(j, i)] = gij;
        }
    }
    let (values, vectors, kept) = pencil_min(&a, &g, 1e-10)?;
    let x = vectors.column(0);
    let mut coeffs = vec![0.0; degree / 2 + 1];
    for (k, b) in basis.iter().enumerate() {
        for (c, bc) in coeffs.iter_mut().zip(&b.coefficients) {
            *c += x[k] * bc;
        }
    }
    Ok(RayleighResult {
        value: values[0],
        profile: TrialProfile { coefficients: coeffs, n, orthogonalized: true },
        retained_dimension: kept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn orthogonalize_quartic() {
        let n = 10;
        let spec = SphereSpec::unit(n).unwrap();
        let p = orthogonalize(&TrialProfile::new(vec![0.0, 0.0, 1.0], n).unwrap()).unwrap();
        let m4 = moment_monomial(&spec, &[4]).unwrap();
        let m6 = moment_monomial(&spec, &[6]).unwrap();
        let b = (m6 - m4) / (m4 - 1.0);
        assert_relative_eq!(p.coefficients[0], -m4 - b * -1.0, epsilon = 1e-12);
        assert_relative_eq!(p.coefficients[1], -b, epsilon = 1e-12);
        // quadrature check of orthogonality
        let rule = marginal_rule(&spec, 8).unwrap();
        assert!(rule.integrate(|v| p.eval(v)).abs() < 1e-12);
        assert!(rule.integrate(|v| p.eval(v) * (v * v - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn orthogonalize_edge_cases() {
        let p = orthogonalize(&TrialProfile::new(vec![-1.0, 1.0], 7).unwrap()).unwrap();
        assert!(p.is_zero());
        let f0 = TrialProfile::f0(7).unwrap();
        assert!(f0.orthogonalized);
        let again = orthogonalize(&f0).unwrap();
        for (a, b) in again.coefficients.iter().zip(&f0.coefficients) {
            assert!((a - b).abs() < 1e-14, "{a} {b}");
        }
    }

    #[test]
    fn maxwellian_quotient_of_f0() {
        for n in 3..=12usize {
            let q = rayleigh_quotient(&TrialProfile::f0(n).unwrap(), 0.0).unwrap();
            let nf = n as f64;
            assert_relative_eq!(q, (nf + 2.0) / (2.0 * (nf - 1.0)), max_relative = 1e-11);
        }
    }

    #[test]
    fn dirichlet_rejects_unorthogonalized() {
        let p = TrialProfile::new(vec![0.0, 0.0, 1.0], 6).unwrap();
        assert!(dirichlet_form_A(&p, 0.5, 8).is_err());
        let zero = TrialProfile { coefficients: vec![0.0], n: 6, orthogonalized: true };
        assert_eq!(dirichlet_form_A(&zero, 0.5, 8).unwrap(), 0.0);
    }

    #[test]
    fn node_doubling_is_stable() {
        let p = orthogonalize(&TrialProfile::new(vec![0.1, -0.3, 0.2, -0.05, 0.004], 9).unwrap()).unwrap();
        for g in [0.0, 0.5, 1.0] {
            let a = dirichlet_form_A(&p, g, 10).unwrap();
            let b = dirichlet_form_A(&p, g, 20).unwrap();
            assert!((a - b).abs() <= 1e-8 * a.abs());
        }
    }

    #[test]
    fn rayleigh_min_maxwellian() {
        for n in 3..=10usize {
            let nf = n as f64;
            let r = rayleigh_min(n, 0.0, 4).unwrap();
            assert_relative_eq!(r.value, (nf + 2.0) / (2.0 * (nf - 1.0)), max_relative = 1e-9);
            assert_relative_eq!(profile_norm_sq(&r.profile).unwrap(), 1.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn two_particles() {
        for g in [0.0, 0.5, 1.0] {
            let r = rayleigh_min(2, g, 8).unwrap();
            assert_relative_eq!(r.value, 2f64.powf(g + 1.0), max_relative = 1e-9);
        }
    }

    #[test]
    fn monotone_in_degree() {
        let mut prev = f64::INFINITY;
        for d in [4, 6, 8, 10, 12] {
            let v = rayleigh_min(10, 0.5, d).unwrap().value;
            assert!(v <= prev * (1.0 + 1e-10));
            prev = v;
        }
    }

    #[test]
    fn degree_range() {
        assert!(rayleigh_min(10, 0.5, 2).is_err());
        assert!(rayleigh_min(10, 0.5, 14).is_err());
    }
}
