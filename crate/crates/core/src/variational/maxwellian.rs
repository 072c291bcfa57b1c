use super::pencil_min;
use crate::error::{KacError, Result};
use crate::special::{binomial, trig_moment};
use crate::sphere::{moment_monomial, SphereSpec};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

const MAX_N: usize = 8;

/// Exponents of v_i² in a monomial ∏ (v_i²)^{e_i}.
type Mono = [u8; MAX_N];
type Sparse = BTreeMap<Mono, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxwellianSpectrum {
    pub n: usize,
    pub max_degree: usize,
    /// Eigenvalues of −L on the symmetric mean-zero sector, ascending.
    pub eigenvalues: Vec<f64>,
    pub gap: f64,
    /// |cos| of the angle between the gap eigenvector and Σ(v_j⁴ − 3N/(N+2)).
    pub gap_alignment: f64,
    pub basis_dimension: usize,
    /// Dimension left after quotienting by the constraint Σ v_j² = N.
    pub retained_dimension: usize,
}

fn partitions(k: u8, max_part: u8, max_len: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if k == 0 {
        out.push(prefix.clone());
        return;
    }
    if prefix.len() == max_len {
        return;
    }
    for p in (1..=k.min(max_part)).rev() {
        prefix.push(p);
        partitions(k - p, p, max_len, prefix, out);
        prefix.pop();
    }
}

/// m_λ: sum over the distinct placements of λ's parts on N variables.
fn monomial_symmetric(lambda: &[u8], n: usize) -> Sparse {
    let mut parts: Vec<u8> = lambda.to_vec();
    parts.resize(n, 0);
    parts.sort_unstable();
    let mut out = Sparse::new();
    loop {
        let mut m = [0u8; MAX_N];
        m[..n].copy_from_slice(&parts);
        out.insert(m, 1.0);
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| parts[i] < parts[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| parts[j] > parts[i]).unwrap();
        parts.swap(i, j);
        parts[i + 1..].reverse();
    }
    out
}

fn multiply(a: &Sparse, b: &Sparse) -> Sparse {
    let mut out = Sparse::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let mut m = [0u8; MAX_N];
            for i in 0..MAX_N {
                m[i] = ma[i] + mb[i];
            }
            *out.entry(m).or_insert(0.0) += ca * cb;
        }
    }
    out
}

/// θ-average of a monomial after rotating coordinates 0 and 1.
fn rotate_average(m: &Mono) -> Sparse {
    let (a, b) = (2 * m[0] as usize, 2 * m[1] as usize);
    let mut out = Sparse::new();
    for k1 in 0..=a {
        for k2 in 0..=b {
            let cos_pow = k1 + b - k2;
            let sin_pow = a - k1 + k2;
            let t = trig_moment(cos_pow, sin_pow);
            if t == 0.0 {
                continue;
            }
            let sign = if k2 % 2 == 0 { 1.0 } else { -1.0 };
            let c = binomial(a, k1) * binomial(b, k2) * sign * t;
            let mut r = *m;
            r[0] = ((k1 + k2) / 2) as u8;
            r[1] = ((a - k1 + b - k2) / 2) as u8;
            *out.entry(r).or_insert(0.0) += c;
        }
    }
    out
}

struct Moments {
    spec: SphereSpec,
    cache: HashMap<Mono, f64>,
}

impl Moments {
    fn get(&mut self, m: &Mono) -> Result<f64> {
        let mut key = *m;
        key.sort_unstable_by(|a, b| b.cmp(a));
        if let Some(v) = self.cache.get(&key) {
            return Ok(*v);
        }
        let exps: Vec<u32> = key.iter().take_while(|&&e| e > 0).map(|&e| 2 * e as u32).collect();
        let v = moment_monomial(&self.spec, &exps)?;
        self.cache.insert(key, v);
        Ok(v)
    }

    fn expect(&mut self, p: &Sparse) -> Result<f64> {
        let mut acc = 0.0;
        for (m, c) in p {
            acc += c * self.get(m)?;
        }
        Ok(acc)
    }
}

/// Spectrum of −L_{N,1} at γ = 0 on symmetric polynomials in v_1², …, v_N²
/// of degree ≤ `max_degree` in v, with constants removed.
pub fn exact_maxwellian_spectrum(n: usize, max_degree: usize) -> Result<MaxwellianSpectrum> {
    if !(3..=MAX_N).contains(&n) {
        return Err(KacError::invalid(format!("N must be in 3..=8, got {n}")));
    }
    if !(4..=8).contains(&max_degree) {
        return Err(KacError::invalid(format!("max_degree must be in 4..=8, got {max_degree}")));
    }
    let spec = SphereSpec::unit(n)?;
    let mut moments = Moments { spec, cache: HashMap::new() };
    let mut parts = Vec::new();
    for k in 1..=(max_degree / 2) as u8 {
        partitions(k, k, n, &mut Vec::new(), &mut parts);
    }
    let basis: Vec<Sparse> = parts.iter().map(|l| monomial_symmetric(l, n)).collect();
    let averaged: Vec<Sparse> = basis
        .iter()
        .map(|p| {
            let mut out = Sparse::new();
            for (m, c) in p {
                for (r, rc) in rotate_average(m) {
                    *out.entry(r).or_insert(0.0) += c * rc;
                }
            }
            out
        })
        .collect();
    let dim = basis.len();
    let means: Vec<f64> = basis.iter().map(|p| moments.expect(p)).collect::<Result<_>>()?;
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    let mut form = DMatrix::<f64>::zeros(dim, dim);
    let nf = n as f64;
    for i in 0..dim {
        for j in 0..dim {
            let g = moments.expect(&multiply(&basis[i], &basis[j]))?;
            let d = moments.expect(&multiply(&basis[i], &averaged[j]))?;
            gram[(i, j)] = g - means[i] * means[j];
            form[(i, j)] = nf * (g - d);
        }
    }
    let gram = (&gram + gram.transpose()) * 0.5;
    let form = (&form + form.transpose()) * 0.5;
    // elements that are constant on the sphere (e.g. Σ v_j²) have a variance
    // that is pure rounding; drop them before rescaling
    let live: Vec<usize> = (0..dim)
        .filter(|&i| gram[(i, i)] > 1e-10 * (gram[(i, i)] + means[i] * means[i]))
        .collect();
    let gram = gram.select_rows(&live).select_columns(&live);
    let form = form.select_rows(&live).select_columns(&live);
    let (eigenvalues, vectors, retained) = pencil_min(&form, &gram, 1e-10)?;

    let full = parts.iter().position(|p| p == &vec![2u8]).expect("degree ≥ 4 includes (2)");
    let idx = live.iter().position(|&i| i == full).expect("Σ v_j⁴ is not constant on the sphere");
    let x = vectors.column(0).into_owned();
    let gx = &gram * &x;
    let norm_f = x.dot(&gx).sqrt();
    let norm_f0 = gram[(idx, idx)].sqrt();
    let gap_alignment = (gx[idx] / (norm_f * norm_f0)).abs();
    Ok(MaxwellianSpectrum {
        n,
        max_degree,
        gap: eigenvalues[0],
        eigenvalues,
        gap_alignment,
        basis_dimension: dim,
        retained_dimension: retained,
    })
}
