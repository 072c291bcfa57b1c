//! wasm-bindgen exports for the static page in `www/`.
use kacgap::bounds::{delta_lb, hat_delta_lb, BaseChoice};
use kacgap::kac_walk::{KacWalk, Observable};
use kacgap::sphere::{maxwellian, MarginalDensity, SphereSpec};
use kacgap::VelocityState;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

const MAX_CURVE_N: u32 = 400;
const MAX_TRACE_STEPS: u32 = 200_000;

/// Rows (N, Δ̂ bound, Δ bound) for N = 5..=n_max, flattened.
pub fn bound_rows(gamma: f64, n_max: u32) -> kacgap::Result<Vec<f64>> {
    let mut out = Vec::new();
    for n in 5..=n_max.min(MAX_CURVE_N) as u64 {
        out.push(n as f64);
        out.push(hat_delta_lb(n, gamma, BaseChoice::Auto)?);
        out.push(delta_lb(n, gamma, BaseChoice::Auto)?);
    }
    Ok(out)
}

/// Pairs (v, ρ_N(v)/M(v)) on a uniform grid over [0, v_max].
pub fn marginal_rows(n: u32, v_max: f64, points: u32) -> kacgap::Result<Vec<f64>> {
    let den = MarginalDensity::new(SphereSpec::unit(n as usize)?, 1)?;
    let points = points.clamp(2, 2000);
    let mut out = Vec::with_capacity(2 * points as usize);
    for i in 0..points {
        let v = v_max * i as f64 / (points - 1) as f64;
        out.push(v);
        out.push(den.eval(&[v])? / maxwellian(v));
    }
    Ok(out)
}

/// Pairs (t, f₀(V_t)) along one trajectory started at equilibrium.
pub fn trace_rows(n: u32, gamma: f64, steps: u32, seed: u64) -> kacgap::Result<Vec<f64>> {
    let spec = SphereSpec::unit(n as usize)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut walk = KacWalk::new(VelocityState::equilibrium(&spec, &mut rng), spec, gamma)?;
    let obs = Observable::F0;
    let steps = steps.min(MAX_TRACE_STEPS);
    let mut out = Vec::with_capacity(2 * steps as usize + 2);
    out.push(0.0);
    out.push(obs.value(&spec, &walk.state().velocities)?);
    let profile = obs.resolve(spec.n_particles)?;
    for _ in 0..steps {
        walk.step(&mut rng)?;
        let s = walk.state();
        out.push(s.time);
        out.push(s.velocities.iter().map(|&v| profile.eval(v)).sum());
    }
    Ok(out)
}

fn js(e: kacgap::KacError) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn bound_curve(gamma: f64, n_max: u32) -> Result<Vec<f64>, JsError> {
    bound_rows(gamma, n_max).map_err(js)
}

#[wasm_bindgen]
pub fn marginal_ratio(n: u32, v_max: f64, points: u32) -> Result<Vec<f64>, JsError> {
    marginal_rows(n, v_max, points).map_err(js)
}

#[wasm_bindgen]
pub fn kac_trace(n: u32, gamma: f64, steps: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    trace_rows(n, gamma, steps, seed as u64).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_is_positive_and_ordered() {
        let rows = bound_rows(0.5, 40).unwrap();
        assert_eq!(rows.len(), 3 * 36);
        for r in rows.chunks(3) {
            assert!(r[2] > 0.0 && r[2] <= r[1]);
        }
    }

    #[test]
    fn marginal_ratio_near_one_at_origin() {
        let rows = marginal_rows(400, 3.0, 31).unwrap();
        assert!((rows[1] - 1.0).abs() < 0.01);
        assert!(marginal_rows(1, 1.0, 10).is_err());
    }

    #[test]
    fn trace_is_time_ordered() {
        let rows = trace_rows(8, 1.0, 500, 4).unwrap();
        assert_eq!(rows.len(), 1002);
        assert!(rows.chunks(2).zip(rows.chunks(2).skip(1)).all(|(a, b)| b[0] > a[0]));
        assert!(trace_rows(8, 1.5, 10, 4).is_err());
    }
}
