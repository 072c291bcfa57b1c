use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// Dense univariate polynomial, coefficient `i` multiplies `x^i`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly::new(vec![0.0])
    }

    pub fn constant(c: f64) -> Self {
        Poly::new(vec![c])
    }

    pub fn monomial(degree: usize, c: f64) -> Self {
        let mut v = vec![0.0; degree + 1];
        v[degree] = c;
        Poly::new(v)
    }

    /// Polynomial in `x` from coefficients of `x^{2j}`.
    pub fn from_even(even: &[f64]) -> Self {
        let mut v = vec![0.0; 2 * even.len().max(1) - 1];
        for (j, c) in even.iter().enumerate() {
            v[2 * j] = *c;
        }
        Poly::new(v)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn scale(&self, s: f64) -> Self {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Keeps only even powers.
    pub fn even_part(&self) -> Self {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| if i % 2 == 0 { *c } else { 0.0 })
                .collect(),
        )
    }

    pub fn is_even(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(|c| *c == 0.0)
    }

    /// Coefficients of `x^{2j}`; odd coefficients are dropped.
    pub fn even_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().step_by(2).copied().collect()
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Poly::constant(1.0), |acc, _| &acc * self)
    }

    /// Substitute `x -> a x^2 + b`, i.e. returns p(a x^2 + b).
    pub fn compose_quadratic(&self, a: f64, b: f64) -> Self {
        let inner = Poly::new(vec![b, 0.0, a]);
        self.coeffs
            .iter()
            .rev()
            .fold(Poly::zero(), |acc, c| &(&acc * &inner) + &Poly::constant(*c))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let p = Poly::new(vec![1.0, 2.0]); // 1 + 2x
        let q = Poly::new(vec![-1.0, 0.0, 1.0]); // x^2 - 1
        assert_eq!((&p * &q).coeffs(), &[-1.0, -2.0, 1.0, 2.0]);
        assert_eq!((&p + &q).coeffs(), &[0.0, 2.0, 1.0]);
        assert_eq!((&q - &q).coeffs(), &[0.0]);
        assert_eq!(p.pow(2).coeffs(), &[1.0, 4.0, 4.0]);
        assert_eq!(p.eval(3.0), 7.0);
    }

    #[test]
    fn even_helpers() {
        let p = Poly::from_even(&[3.0, 0.0, 1.0]);
        assert_eq!(p.coeffs(), &[3.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(p.is_even());
        assert_eq!(p.even_coeffs(), vec![3.0, 0.0, 1.0]);
        let q = Poly::new(vec![1.0, 1.0, 1.0]);
        assert_eq!(q.even_part().coeffs(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn quadratic_substitution() {
        // p(y) = y^2, y = N - x^2 with N = 5
        let p = Poly::monomial(2, 1.0);
        let r = p.compose_quadratic(-1.0, 5.0);
        assert_eq!(r.coeffs(), &[25.0, 0.0, -10.0, 0.0, 1.0]);
    }
}
