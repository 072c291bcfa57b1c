use crate::error::{KacError, Result};
use crate::sphere::quadrature::gauss_laguerre;
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Galerkin discretization of the linearized operator around the unit
/// Maxwellian on span{He_4, He_6, …, He_{2(basis_size+1)}}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizedModel {
    pub gamma: f64,
    pub basis_size: usize,
    /// Radial Gauss–Laguerre nodes.
    pub quadrature_order: usize,
}

impl LinearizedModel {
    pub fn new(gamma: f64, basis_size: usize) -> Self {
        LinearizedModel { gamma, basis_size, quadrature_order: 2 * basis_size + 4 }
    }
}

/// He_0..He_max normalized by √(n!), so they are orthonormal under M.
fn hermite_normalized(x: f64, max: usize, out: &mut [f64]) {
    out[0] = 1.0;
    if max >= 1 {
        out[1] = x;
    }
    for n in 1..max {
        out[n + 1] = (x * out[n] - (n as f64).sqrt() * out[n - 1]) / ((n + 1) as f64).sqrt();
    }
}

/// Smallest Rayleigh value of −ℒ on the retained basis, an upper bound on Λ.
///
/// With weight r^{2γ} M(v)M(w), the quadratic form is
/// 2∬ r^{2γ} [h(v)g(v) + h(v)g(w) − 2 H_h(r) H_g(r)] M(v)M(w) dv dw where H
/// is the circle average. In polar coordinates with s = r²/2 the radial part
/// is Gauss–Laguerre with exponent γ; the angular part is a trapezoid rule,
/// exact for the trigonometric polynomials involved.
pub fn linearized_gap(model: &LinearizedModel) -> Result<f64> {
    let LinearizedModel { gamma, basis_size, quadrature_order } = *model;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(KacError::invalid(format!("γ must lie in [0, 1], got {gamma}")));
    }
    if !(4..=64).contains(&basis_size) {
        return Err(KacError::invalid(format!("basis_size must be in 4..=64, got {basis_size}")));
    }
    if quadrature_order < 2 * basis_size {
        return Err(KacError::invalid(format!(
            "quadrature_order {quadrature_order} too coarse: need at least 2·basis_size = {}",
            2 * basis_size
        )));
    }
    let max_deg = 2 * (basis_size + 1);
    let radial = gauss_laguerre(quadrature_order, gamma)?;
    let angles = 2 * max_deg + 2;
    let scale = 2f64.powf(gamma) / angles as f64;
    let npts = radial.nodes.len() * angles;

    // values[a][q]: basis function a at v and w of point q; circle averages per radial node
    let mut hv = vec![vec![0.0; npts]; basis_size];
    let mut hw = vec![vec![0.0; npts]; basis_size];
    let mut havg = vec![vec![0.0; radial.nodes.len()]; basis_size];
    let mut weights = vec![0.0; npts];
    let mut buf = vec![0.0; max_deg + 1];
    for (i, (&s, &ws)) in radial.nodes.iter().zip(&radial.weights).enumerate() {
        let r = (2.0 * s).sqrt();
        for j in 0..angles {
            let q = i * angles + j;
            let th = (j as f64 + 0.5) * 2.0 * std::f64::consts::PI / angles as f64;
            weights[q] = ws * scale;
            hermite_normalized(r * th.cos(), max_deg, &mut buf);
            for a in 0..basis_size {
                hv[a][q] = buf[2 * (a + 2)];
                havg[a][i] += buf[2 * (a + 2)] / angles as f64;
            }
            hermite_normalized(r * th.sin(), max_deg, &mut buf);
            for a in 0..basis_size {
                hw[a][q] = buf[2 * (a + 2)];
            }
        }
    }
    let radial_w: Vec<f64> = radial.weights.iter().map(|w| w * 2f64.powf(gamma)).collect();
    let pairs: Vec<(usize, usize)> = (0..basis_size).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
    let entries: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut t1 = 0.0;
            let mut t2 = 0.0;
            for q in 0..npts {
                t1 += weights[q] * hv[a][q] * hv[b][q];
                t2 += weights[q] * 0.5 * (hv[a][q] * hw[b][q] + hw[a][q] * hv[b][q]);
            }
            let t3: f64 = (0..radial_w.len()).map(|i| radial_w[i] * havg[a][i] * havg[b][i]).sum();
            2.0 * (t1 + t2 - 2.0 * t3)
        })
        .collect();
    let mut m = DMatrix::<f64>::zeros(basis_size, basis_size);
    for (&(a, b), e) in pairs.iter().zip(entries) {
        m[(a, b)] = e;
        m[(b, a)] = e;
    }
    let eig = SymmetricEigen::new(m);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !min.is_finite() || min <= 0.0 {
        return Err(KacError::numerical(format!("non-positive Galerkin eigenvalue {min}")));
    }
    Ok(min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_orthonormal() {
        let rule = gauss_laguerre(40, -0.5).unwrap();
        // ∫ f M dv = (1/√π) ∫_0^∞ s^{−1/2} e^{−s} f(√(2s)) ds for even f
        let mut buf = vec![0.0; 13];
        let mut gram = [[0.0; 7]; 7];
        for (s, w) in rule.nodes.iter().zip(&rule.weights) {
            hermite_normalized((2.0 * s).sqrt(), 12, &mut buf);
            for i in 0..7 {
                for j in 0..7 {
                    gram[i][j] += w * buf[2 * i] * buf[2 * j] / std::f64::consts::PI.sqrt();
                }
            }
        }
        for (i, row) in gram.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn maxwellian_value() {
        let v = linearized_gap(&LinearizedModel::new(0.0, 16)).unwrap();
        assert!((v - 0.5).abs() < 1e-10, "{v}");
    }

    #[test]
    fn monotone_in_basis() {
        let mut prev = f64::INFINITY;
        for b in [4, 8, 12, 16] {
            let v = linearized_gap(&LinearizedModel::new(0.5, b)).unwrap();
            assert!(v <= prev * (1.0 + 1e-10) && v > 0.0);
            prev = v;
        }
    }

    #[test]
    fn rejects_coarse_quadrature() {
        let m = LinearizedModel { gamma: 0.5, basis_size: 8, quadrature_order: 10 };
        assert!(linearized_gap(&m).is_err());
    }
}
