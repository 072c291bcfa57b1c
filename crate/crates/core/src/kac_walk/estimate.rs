use super::{KacWalk, VelocityState};
use crate::error::{KacError, Result};
use crate::sphere::{sample_uniform, SphereSpec};
use crate::variational::{orthogonalize, TrialProfile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Observable f = Σ_k φ(v_k / √E) for a profile φ normalized at E = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// φ(w) = w⁴ − 3N/(N+2).
    F0,
    Profile(TrialProfile),
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::F0 => "f0".to_string(),
            Observable::Profile(p) => format!("profile{:?}", p.coefficients),
        }
    }

    pub fn resolve(&self, n: usize) -> Result<TrialProfile> {
        match self {
            Observable::F0 => TrialProfile::f0(n),
            Observable::Profile(p) => {
                if p.n != n {
                    return Err(KacError::invalid(format!("profile is for N = {}, walk has N = {n}", p.n)));
                }
                orthogonalize(p)
            }
        }
    }

    pub fn value(&self, spec: &SphereSpec, velocities: &[f64]) -> Result<f64> {
        let p = self.resolve(spec.n_particles)?;
        Ok(sum_profile(&p, spec, velocities))
    }
}

pub(crate) fn sum_profile(p: &TrialProfile, spec: &SphereSpec, v: &[f64]) -> f64 {
    let s = 1.0 / spec.energy_per_particle.sqrt();
    v.iter().map(|x| p.eval(x * s)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutocorrOptions {
    /// Lag grid points on [0, horizon].
    pub grid_points: usize,
    /// Each replica runs for run_factor × horizon.
    pub run_factor: usize,
    /// Fit where C(t)/C(0) lies in [lo, hi].
    pub window: (f64, f64),
    /// Jackknife blocks.
    pub blocks: usize,
}

impl Default for AutocorrOptions {
    fn default() -> Self {
        AutocorrOptions { grid_points: 40, run_factor: 5, window: (0.1, 0.8), blocks: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub rate: f64,
    pub stderr: f64,
    pub fit_window: (f64, f64),
    pub observable: String,
    pub fit_points: usize,
    /// Weighted RMS residual of the log-linear fit.
    pub residual_rms: f64,
    /// Lag spacing of `correlation`.
    pub lag_step: f64,
    /// C(kΔ)/C(0), k = 0..=grid_points.
    pub correlation: Vec<f64>,
}

/// Per-replica sums Σ_m f_m f_{m+k} and pair counts.
fn replica_sums(
    spec: &SphereSpec,
    gamma: f64,
    profile: &TrialProfile,
    seed: u64,
    replica: u64,
    lag_step: f64,
    lags: usize,
    samples: usize,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    let start = VelocityState::equilibrium(spec, &mut rng);
    let mut walk = KacWalk::new(start, *spec, gamma)?;
    let mut f = Vec::with_capacity(samples);
    while f.len() < samples {
        let before = sum_profile(profile, spec, &walk.state().velocities);
        walk.step(&mut rng)?;
        let t_new = walk.state().time;
        while f.len() < samples && (f.len() as f64) * lag_step < t_new {
            f.push(before);
        }
    }
    let mut sums = vec![0.0; lags + 1];
    for k in 0..=lags {
        sums[k] = (0..samples - k).map(|m| f[m] * f[m + k]).sum();
    }
    Ok(sums)
}

struct Fit {
    rate: f64,
    residual_rms: f64,
}

fn wls_fit(tau: &[f64], rho: &[f64]) -> Option<Fit> {
    if rho.iter().any(|r| *r <= 0.0) {
        return None;
    }
    let w: Vec<f64> = rho.iter().map(|r| r * r).collect();
    let y: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let sw: f64 = w.iter().sum();
    let mx = tau.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = y.iter().zip(&w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = tau.iter().zip(&w).map(|(x, w)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = tau.iter().zip(&y).zip(&w).map(|((x, y), w)| w * (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = tau
        .iter()
        .zip(&y)
        .zip(&w)
        .map(|((x, y), w)| w * (y - my - slope * (x - mx)).powi(2))
        .sum();
    Some(Fit { rate: -slope, residual_rms: (resid / sw).sqrt() })
}

/// Decay rate of the stationary autocorrelation C(t) = ⟨f(V₀) f(V_t)⟩.
///
/// Replicas start at equilibrium and C is averaged over time origins. The
/// rate is an eigenvalue of −L overlapping the observable, hence an
/// estimate of a number ≥ Δ_N, not a bound.
pub fn estimate_gap_autocorr(
    spec: &SphereSpec,
    gamma: f64,
    observable: &Observable,
    horizon: f64,
    replicas: usize,
    seed: u64,
    opts: &AutocorrOptions,
) -> Result<GapEstimate> {
    if replicas < 100 {
        return Err(KacError::invalid(format!("need at least 100 replicas, got {replicas}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(KacError::invalid(format!("horizon must be positive, got {horizon}")));
    }
    let (lo, hi) = opts.window;
    if !(0.0 < lo && lo < hi && hi < 1.0) || opts.grid_points < 4 || opts.run_factor < 2 || opts.blocks < 2 {
        return Err(KacError::invalid("invalid autocorrelation options"));
    }
    let profile = observable.resolve(spec.n_particles)?;
    if profile.is_zero() {
        return Err(KacError::invalid("observable is identically zero after orthogonalization"));
    }
    let lags = opts.grid_points;
    let lag_step = horizon / lags as f64;
    let samples = lags * opts.run_factor + 1;
    let per: Vec<Vec<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| replica_sums(spec, gamma, &profile, seed, r, lag_step, lags, samples))
        .collect::<Result<_>>()?;
    let counts: Vec<f64> = (0..=lags).map(|k| ((samples - k) * replicas) as f64).collect();
    let mut total = vec![0.0; lags + 1];
    for s in &per {
        for k in 0..=lags {
            total[k] += s[k];
        }
    }
    let corr_of = |sums: &[f64], scale: f64| -> Vec<f64> {
        let c: Vec<f64> = (0..=lags).map(|k| sums[k] / (counts[k] * scale)).collect();
        c.iter().map(|x| x / c[0]).collect()
    };
    let rho = corr_of(&total, 1.0);

    let Some(first) = (1..=lags).find(|&k| rho[k] <= hi) else {
        return Err(KacError::numerical(format!(
            "C(t)/C(0) stays above {hi} up to the horizon; increase the horizon"
        )));
    };
    let mut last = first;
    while last < lags && rho[last + 1] >= lo && rho[last + 1] > 0.0 {
        last += 1;
    }
    // include the first point at or below hi even if it already undershoots lo
    let idx: Vec<usize> = (first..=last).filter(|&k| rho[k] > 0.0).collect();
    if idx.len() < 3 {
        return Err(KacError::numerical(format!(
            "fit window has {} usable points; refine the lag grid or add replicas",
            idx.len()
        )));
    }
    let tau: Vec<f64> = idx.iter().map(|&k| k as f64 * lag_step).collect();
    let pick = |r: &[f64]| -> Vec<f64> { idx.iter().map(|&k| r[k]).collect() };
    let fit = wls_fit(&tau, &pick(&rho)).ok_or_else(|| KacError::numerical("non-positive correlation in window"))?;

    let blocks = opts.blocks.min(replicas);
    let mut jack = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let mut sums = total.clone();
        let mut n_rep = 0usize;
        for (r, s) in per.iter().enumerate() {
            if r * blocks / replicas == b {
                n_rep += 1;
                for k in 0..=lags {
                    sums[k] -= s[k];
                }
            }
        }
        let scale = (replicas - n_rep) as f64 / replicas as f64;
        let rj = corr_of(&sums, scale);
        let fj = wls_fit(&tau, &pick(&rj))
            .ok_or_else(|| KacError::numerical("jackknife sample has non-positive correlation in window"))?;
        jack.push(fj.rate);
    }
    let mean = jack.iter().sum::<f64>() / blocks as f64;
    let var = jack.iter().map(|x| (x - mean).powi(2)).sum::<f64>() * (blocks - 1) as f64 / blocks as f64;
    let stderr = var.sqrt();
    if !(fit.rate > 0.0) || !(stderr > 0.0) {
        return Err(KacError::numerical(format!("degenerate fit: rate {} ± {stderr}", fit.rate)));
    }
    Ok(GapEstimate {
        rate: fit.rate,
        stderr,
        fit_window: (tau[0], *tau.last().unwrap()),
        observable: observable.name(),
        fit_points: idx.len(),
        residual_rms: fit.residual_rms,
        lag_step,
        correlation: rho,
    })
}

/// Monte Carlo estimate of ℰ_N(f, f)/‖f‖² for f = Σ φ(v_k/√E), with
/// standard error from the ratio-estimator delta method.
pub fn dirichlet_mc(
    spec: &SphereSpec,
    gamma: f64,
    profile: &TrialProfile,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples < 100_000 {
        return Err(KacError::invalid(format!("need at least 10⁵ samples, got {samples}")));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(KacError::invalid(format!("γ must lie in [0, 1], got {gamma}")));
    }
    if profile.n != spec.n_particles {
        return Err(KacError::invalid("profile and sphere disagree on N"));
    }
    crate::variational::check_orthogonal(profile)?;
    if profile.is_zero() {
        return Err(KacError::invalid("zero profile: the quotient is undefined"));
    }
    let n = spec.n_particles;
    let s = 1.0 / spec.energy_per_particle.sqrt();
    let pts = sample_uniform(spec, seed, samples);
    let pairs = (n / 2).max(1);
    let xy: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|p| {
            let v = &p.velocities;
            let mut x = 0.0;
            for q in 0..pairs {
                let (a, b) = (v[2 * q], v[(2 * q + 1) % n]);
                let r2 = a * a + b * b;
                let r = r2.sqrt() * s;
                let d = profile.eval(a * s) + profile.eval(b * s) - 2.0 * profile.circle_average(r);
                x += r2.powf(gamma) * d * d;
            }
            let f: f64 = v.iter().map(|w| profile.eval(w * s)).sum();
            (n as f64 * x / pairs as f64, f * f)
        })
        .collect();
    let m = samples as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / m;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / m;
    let q = mx / my;
    let var = xy.iter().map(|(x, y)| (x - q * y).powi(2)).sum::<f64>() / (m - 1.0);
    Ok((q, (var / m).sqrt() / my))
}
