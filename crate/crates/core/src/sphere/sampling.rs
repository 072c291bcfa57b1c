use super::{SpherePoint, SphereSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Normalizes a standard Gaussian vector onto the sphere.
pub fn sample_point<R: rand::Rng + ?Sized>(spec: &SphereSpec, rng: &mut R) -> SpherePoint {
    loop {
        let v: Vec<f64> = (0..spec.n_particles).map(|_| StandardNormal.sample(rng)).collect();
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        if norm2 > 1e-300 {
            let s = spec.radius() / norm2.sqrt();
            return SpherePoint::new(v.into_iter().map(|x| x * s).collect(), spec);
        }
    }
}

/// `count` i.i.d. uniform points, reproducible from `seed`.
pub fn sample_uniform(spec: &SphereSpec, seed: u64, count: usize) -> Vec<SpherePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sample_point(spec, &mut rng)).collect()
}

/// (1/N) Σ_k ((NE − v_k²)/((N−1)E))^γ.
pub fn weight_average(spec: &SphereSpec, point: &SpherePoint, gamma: f64) -> f64 {
    let n = spec.n_particles as f64;
    let e = spec.energy_per_particle;
    point
        .velocities
        .iter()
        .map(|v| ((n * e - v * v).max(0.0) / ((n - 1.0) * e)).powf(gamma))
        .sum::<f64>()
        / n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_on_sphere() {
        let spec = SphereSpec::new(7, 1.5).unwrap();
        let a = sample_uniform(&spec, 42, 20);
        let b = sample_uniform(&spec, 42, 20);
        assert_eq!(a, b);
        for p in &a {
            let e = p.energy_per_particle();
            assert!((e - 1.5).abs() < 1e-13);
        }
    }

    #[test]
    fn two_particles_on_circle() {
        let spec = SphereSpec::new(2, 1.0).unwrap();
        for p in sample_uniform(&spec, 1, 1000) {
            let s = p.velocities[0].powi(2) + p.velocities[1].powi(2);
            assert!((s - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn second_moment_three_particles() {
        let spec = SphereSpec::new(3, 1.0).unwrap();
        let pts = sample_uniform(&spec, 7, 200_000);
        let xs: Vec<f64> = pts.iter().map(|p| p.velocities[0].powi(2)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let se = (var / xs.len() as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn jensen_weight_bounds() {
        for n in [3usize, 5, 10, 40] {
            let spec = SphereSpec::new(n, 1.0).unwrap();
            let pts = sample_uniform(&spec, n as u64, 20_000);
            for gamma in [0.1, 0.5, 0.9] {
                let lower = ((n as f64 - 1.0) / n as f64).powf(1.0 - gamma);
                for p in &pts {
                    let w = weight_average(&spec, p, gamma);
                    assert!(w <= 1.0 + 1e-12 && w >= lower - 1e-12, "N={n} γ={gamma} w={w}");
                }
            }
        }
    }
}
