//! Gillespie simulation of the Kac walk with pair rates
//! λ_ij = (2/(N−1)) (v_i² + v_j²)^γ.

mod estimate;

pub use estimate::{dirichlet_mc, estimate_gap_autocorr, AutocorrOptions, GapEstimate, Observable};

use crate::error::{KacError, Result};
use crate::sphere::{sample_point, SphereSpec};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

const RECOMPUTE_EVERY: u64 = 1_000;
const RENORMALIZE_EVERY: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityState {
    pub velocities: Vec<f64>,
    pub time: f64,
    pub collisions: u64,
}

impl VelocityState {
    pub fn new(velocities: Vec<f64>) -> Self {
        VelocityState { velocities, time: 0.0, collisions: 0 }
    }

    pub fn equilibrium<R: Rng + ?Sized>(spec: &SphereSpec, rng: &mut R) -> Self {
        Self::new(sample_point(spec, rng).velocities)
    }

    pub fn energy_per_particle(&self) -> f64 {
        self.velocities.iter().map(|v| v * v).sum::<f64>() / self.velocities.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub dt: f64,
    pub i: usize,
    pub j: usize,
    pub theta: f64,
}

/// A walk with cached per-particle rate sums S_i = Σ_{j≠i} (v_i² + v_j²)^γ,
/// so that each step costs O(N).
#[derive(Debug, Clone)]
pub struct KacWalk {
    state: VelocityState,
    spec: SphereSpec,
    gamma: f64,
    row: Vec<f64>,
    since_recompute: u64,
}

fn pair_rate(a: f64, b: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        1.0
    } else if gamma == 1.0 {
        a + b
    } else {
        (a + b).powf(gamma)
    }
}

impl KacWalk {
    pub fn new(state: VelocityState, spec: SphereSpec, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(KacError::invalid(format!("γ must lie in [0, 1], got {gamma}")));
        }
        if state.velocities.len() != spec.n_particles {
            return Err(KacError::invalid(format!(
                "state has {} velocities, sphere has N = {}",
                state.velocities.len(),
                spec.n_particles
            )));
        }
        let e = state.energy_per_particle();
        if (e - spec.energy_per_particle).abs() > 1e-9 * spec.energy_per_particle {
            return Err(KacError::invalid(format!(
                "state energy per particle {e} differs from E = {}",
                spec.energy_per_particle
            )));
        }
        let mut walk = KacWalk { state, spec, gamma, row: vec![0.0; spec.n_particles], since_recompute: 0 };
        walk.recompute();
        Ok(walk)
    }

    pub fn state(&self) -> &VelocityState {
        &self.state
    }

    pub fn into_state(self) -> VelocityState {
        self.state
    }

    pub fn spec(&self) -> &SphereSpec {
        &self.spec
    }

    fn recompute(&mut self) {
        let sq: Vec<f64> = self.state.velocities.iter().map(|v| v * v).collect();
        for i in 0..sq.len() {
            self.row[i] = (0..sq.len()).filter(|&j| j != i).map(|j| pair_rate(sq[i], sq[j], self.gamma)).sum();
        }
        self.since_recompute = 0;
    }

    /// Total jump rate R = Σ_{i<j} λ_ij.
    pub fn total_rate(&self) -> f64 {
        self.row.iter().sum::<f64>() / (self.spec.n() - 1.0)
    }

    fn renormalize(&mut self) {
        let target = self.spec.total_energy();
        let cur: f64 = self.state.velocities.iter().map(|v| v * v).sum();
        let s = (target / cur).sqrt();
        self.state.velocities.iter_mut().for_each(|v| *v *= s);
        self.recompute();
    }

    /// One collision: Exp(R) waiting time, pair (i, j) with probability
    /// λ_ij/R, rotation by θ uniform on (−π, π].
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StepEvent> {
        let total = self.total_rate();
        if !(total > 0.0) {
            return Err(KacError::numerical("total collision rate vanished"));
        }
        let dt = { let e: f64 = Exp1.sample(rng); e } / total;
        let n = self.spec.n_particles;
        let v = &self.state.velocities;

        let sum_rows: f64 = self.row.iter().sum();
        let mut u = rng.random::<f64>() * sum_rows;
        let mut i = n - 1;
        for (k, s) in self.row.iter().enumerate() {
            if u < *s {
                i = k;
                break;
            }
            u -= s;
        }
        let vi2 = v[i] * v[i];
        let mut u = rng.random::<f64>() * self.row[i];
        let mut j = if i == n - 1 { n - 2 } else { n - 1 };
        for k in 0..n {
            if k == i {
                continue;
            }
            let r = pair_rate(vi2, v[k] * v[k], self.gamma);
            if u < r {
                j = k;
                break;
            }
            u -= r;
        }
        let theta = -rng.random_range(-PI..PI);
        let (s, c) = theta.sin_cos();
        let (a, b) = (v[i], v[j]);
        let (na, nb) = (a * c + b * s, -a * s + b * c);

        if self.gamma != 0.0 {
            let (oa, ob, na2, nb2) = (a * a, b * b, na * na, nb * nb);
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let vk2 = v[k] * v[k];
                self.row[k] += pair_rate(vk2, na2, self.gamma) - pair_rate(vk2, oa, self.gamma)
                    + pair_rate(vk2, nb2, self.gamma)
                    - pair_rate(vk2, ob, self.gamma);
            }
        }
        self.state.velocities[i] = na;
        self.state.velocities[j] = nb;
        self.state.time += dt;
        self.state.collisions += 1;
        self.since_recompute += 1;
        if self.state.collisions.is_multiple_of(RENORMALIZE_EVERY) {
            self.renormalize();
        } else if self.gamma != 0.0 {
            if self.since_recompute >= RECOMPUTE_EVERY {
                self.recompute();
            } else {
                let sq: Vec<f64> = [i, j].iter().map(|&p| self.state.velocities[p].powi(2)).collect();
                for (idx, &p) in [i, j].iter().enumerate() {
                    self.row[p] = (0..n)
                        .filter(|&k| k != p)
                        .map(|k| pair_rate(sq[idx], self.state.velocities[k].powi(2), self.gamma))
                        .sum();
                }
            }
        }
        Ok(StepEvent { dt, i: i.min(j), j: i.max(j), theta })
    }
}

/// Single step from a bare state; builds the rate cache, so O(N²).
pub fn step<R: Rng + ?Sized>(
    state: &VelocityState,
    spec: &SphereSpec,
    gamma: f64,
    rng: &mut R,
) -> Result<(VelocityState, StepEvent)> {
    let mut walk = KacWalk::new(state.clone(), *spec, gamma)?;
    let ev = walk.step(rng)?;
    Ok((walk.into_state(), ev))
}

/// Writes `steps` collisions as CSV with columns
/// time, collision_index, i, j, theta, observable_value.
pub fn write_trajectory_csv<W: Write, R: Rng + ?Sized>(
    out: &mut W,
    walk: &mut KacWalk,
    steps: u64,
    observable: &Observable,
    rng: &mut R,
) -> Result<()> {
    let io = |e: std::io::Error| KacError::numerical(format!("write failed: {e}"));
    writeln!(out, "time,collision_index,i,j,theta,observable_value").map_err(io)?;
    let spec = *walk.spec();
    let profile = observable.resolve(spec.n_particles)?;
    for _ in 0..steps {
        let ev = walk.step(rng)?;
        let s = walk.state();
        let f = estimate::sum_profile(&profile, &spec, &s.velocities);
        writeln!(out, "{},{},{},{},{},{}", s.time, s.collisions, ev.i, ev.j, ev.theta, f).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn walk(n: usize, e: f64, gamma: f64, seed: u64) -> (KacWalk, ChaCha8Rng) {
        let spec = SphereSpec::new(n, e).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let st = VelocityState::equilibrium(&spec, &mut rng);
        (KacWalk::new(st, spec, gamma).unwrap(), rng)
    }

    #[test]
    fn pair_energy_conserved() {
        let (mut w, mut rng) = walk(9, 1.0, 0.5, 1);
        for _ in 0..2000 {
            let before = w.state().velocities.clone();
            let ev = w.step(&mut rng).unwrap();
            let after = &w.state().velocities;
            let e0 = before[ev.i].powi(2) + before[ev.j].powi(2);
            let e1 = after[ev.i].powi(2) + after[ev.j].powi(2);
            assert!((e0 - e1).abs() < 1e-12);
            assert!(ev.theta > -PI && ev.theta <= PI);
        }
    }

    #[test]
    fn energy_drift_small() {
        let (mut w, mut rng) = walk(20, 1.0, 0.5, 2);
        for _ in 0..9_999 {
            w.step(&mut rng).unwrap();
        }
        assert!((w.state().energy_per_particle() - 1.0).abs() < 1e-9);
        w.step(&mut rng).unwrap();
        assert!((w.state().energy_per_particle() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cached_rates_match_recompute() {
        let (mut w, mut rng) = walk(12, 1.3, 0.5, 3);
        for _ in 0..500 {
            w.step(&mut rng).unwrap();
        }
        let cached = w.row.clone();
        w.recompute();
        for (a, b) in cached.iter().zip(&w.row) {
            assert!((a - b).abs() < 1e-10 * b);
        }
    }

    #[test]
    fn uniform_pairs_at_gamma_zero() {
        let n = 5;
        let (mut w, mut rng) = walk(n, 1.0, 0.0, 4);
        let mut counts = vec![vec![0u64; n]; n];
        let steps = 200_000;
        for _ in 0..steps {
            let ev = w.step(&mut rng).unwrap();
            counts[ev.i][ev.j] += 1;
        }
        let expected = steps as f64 / 10.0;
        let chi2: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| (counts[i][j] as f64 - expected).powi(2) / expected)
            .sum();
        // 9 degrees of freedom; 99.9% quantile ≈ 27.9
        assert!(chi2 < 27.9, "χ² = {chi2}");
    }

    #[test]
    fn two_particle_waiting_times() {
        let (mut w, mut rng) = walk(2, 1.0, 0.5, 5);
        let rate = 2.0 * 2f64.powf(0.5);
        assert!((w.total_rate() - rate).abs() < 1e-12);
        let mut dts: Vec<f64> = (0..20_000).map(|_| w.step(&mut rng).unwrap().dt).collect();
        dts.sort_by(f64::total_cmp);
        let n = dts.len() as f64;
        let d = dts
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let cdf = 1.0 - (-rate * t).exp();
                (cdf - k as f64 / n).abs().max(((k + 1) as f64 / n - cdf).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < 1.63 / n.sqrt(), "KS D = {d}");
    }

    #[test]
    fn free_step_matches() {
        let spec = SphereSpec::unit(4).unwrap();
        let st = VelocityState::new(vec![1.0, -1.0, 1.0, -1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (s2, ev) = step(&st, &spec, 1.0, &mut rng).unwrap();
        assert_eq!(s2.collisions, 1);
        assert!(ev.dt > 0.0 && ev.i < ev.j);
        assert!(KacWalk::new(st.clone(), SphereSpec::unit(5).unwrap(), 0.5).is_err());
        assert!(KacWalk::new(VelocityState::new(vec![3.0, 0.0, 0.0, 0.0]), spec, 0.5).is_err());
    }

    #[test]
    fn csv_export() {
        let (mut w, mut rng) = walk(6, 1.0, 0.5, 7);
        let mut buf = Vec::new();
        let obs = Observable::F0;
        write_trajectory_csv(&mut buf, &mut w, 5, &obs, &mut rng).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "time,collision_index,i,j,theta,observable_value");
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[5].split(',').count(), 6);
    }
}
