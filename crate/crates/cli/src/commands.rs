use crate::config::{Format, RunConfig};
use crate::{Demo, Invalid};
use anyhow::{Context, Result};
use kacgap::bounds::{a_coeff, certified_tail_majorant, delta_lb, hat_delta_lb, BoundReport, GapBoundInputs};
use kacgap::correlation::CorrelationSpectrum;
use kacgap::kac_walk::{estimate_gap_autocorr, write_trajectory_csv, AutocorrOptions, KacWalk, Observable};
use kacgap::products::{gamma_product_limit, truncated_product_deficit_par, uniform_factor_spec};
use kacgap::sphere::SphereSpec;
use kacgap::variational::{exact_maxwellian_spectrum, linearized_gap, rayleigh_min, LinearizedModel};
use kacgap::VelocityState;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    config: &'a RunConfig,
    result: T,
}

fn sink(cfg: &RunConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.output {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn emit<T: Serialize>(cfg: &RunConfig, command: &str, result: T) -> Result<()> {
    if cfg.format == Some(Format::Csv) {
        return Err(Invalid(format!("{command} emits json only; csv is for simulate trajectories")).into());
    }
    let mut out = sink(cfg)?;
    serde_json::to_writer_pretty(&mut out, &Envelope { schema_version: SCHEMA_VERSION, command, config: cfg, result })?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn bounds(cfg: &RunConfig) -> Result<()> {
    let inputs = GapBoundInputs::new(cfg.n as u64, cfg.gamma, cfg.base()?)?;
    emit(cfg, "bounds", BoundReport::compute(&inputs)?)
}

#[derive(Serialize)]
struct ProductOut {
    demo: &'static str,
    value: f64,
    certified_lower: f64,
    tail_bound: f64,
}

pub fn products(cfg: &RunConfig, demo: Demo) -> Result<()> {
    let (name, r) = match demo {
        Demo::UniformFactor => ("uniform-factor", gamma_product_limit(&uniform_factor_spec()?)?),
        Demo::Tail => {
            let k = 1_000_000;
            let g = cfg.gamma;
            let majorant = certified_tail_majorant(g, false, k)?;
            let deficit = |j: u64| a_coeff(j, g).map(|a| a / (j as f64).powi(2)).unwrap_or(f64::NAN);
            ("tail", truncated_product_deficit_par(deficit, 11, k, majorant)?)
        }
    };
    emit(cfg, "products", ProductOut { demo: name, value: r.value, certified_lower: r.certified_lower(), tail_bound: r.tail_bound })
}

pub fn spectrum(cfg: &RunConfig) -> Result<()> {
    if cfg.gamma != 0.0 {
        return Err(Invalid("exact spectra exist only at gamma = 0; use `variational` for gamma > 0".into()).into());
    }
    emit(cfg, "spectrum", exact_maxwellian_spectrum(cfg.n, cfg.degree)?)
}

#[derive(Serialize)]
struct VariationalOut {
    rayleigh_min: f64,
    profile_coefficients: Vec<f64>,
    retained_dimension: usize,
    linearized_gap: f64,
    basis_size: usize,
}

pub fn variational(cfg: &RunConfig) -> Result<()> {
    let r = rayleigh_min(cfg.n, cfg.gamma, cfg.degree)?;
    let lin = linearized_gap(&LinearizedModel::new(cfg.gamma, cfg.basis_size))?;
    emit(
        cfg,
        "variational",
        VariationalOut {
            rayleigh_min: r.value,
            profile_coefficients: r.profile.coefficients,
            retained_dimension: r.retained_dimension,
            linearized_gap: lin,
            basis_size: cfg.basis_size,
        },
    )
}

fn default_horizon(cfg: &RunConfig, n: usize) -> Result<f64> {
    if let Some(h) = cfg.horizon {
        return Ok(h);
    }
    let rate = if n == 2 {
        2f64.powf(cfg.gamma + 1.0)
    } else {
        rayleigh_min(n, cfg.gamma, 4.max(cfg.degree.min(12)))?.value
    };
    Ok(3.0 / (rate * cfg.energy.powf(cfg.gamma)))
}

pub fn simulate(cfg: &RunConfig) -> Result<()> {
    let spec = SphereSpec::new(cfg.n, cfg.energy)?;
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let start = VelocityState::equilibrium(&spec, &mut rng);
            let mut walk = KacWalk::new(start, spec, cfg.gamma)?;
            let mut out = sink(cfg)?;
            write_trajectory_csv(&mut out, &mut walk, cfg.steps, &Observable::F0, &mut rng)?;
            out.flush()?;
            Ok(())
        }
        Format::Json => {
            let horizon = default_horizon(cfg, cfg.n)?;
            let est = estimate_gap_autocorr(
                &spec,
                cfg.gamma,
                &Observable::F0,
                horizon,
                cfg.replicas,
                cfg.seed,
                &AutocorrOptions::default(),
            )?;
            emit(cfg, "simulate", est)
        }
    }
}

pub fn correlation(cfg: &RunConfig) -> Result<()> {
    emit(cfg, "correlation", CorrelationSpectrum::new(cfg.n, cfg.m, cfg.k_max)?)
}

#[derive(Serialize)]
struct Row {
    n: usize,
    delta_lb: f64,
    hat_delta_lb: f64,
    rayleigh_min: f64,
    mc_rate: f64,
    mc_stderr: f64,
    sandwich_holds: bool,
}

pub fn report(cfg: &RunConfig) -> Result<()> {
    let base = cfg.base()?;
    let mut rows = Vec::new();
    // rates scale as E^γ
    let scale = cfg.energy.powf(cfg.gamma);
    for &n in &cfg.ns {
        let d = scale * delta_lb(n as u64, cfg.gamma, base)?;
        let h = scale * hat_delta_lb(n as u64, cfg.gamma, base)?;
        let r = scale * rayleigh_min(n, cfg.gamma, cfg.degree)?.value;
        let spec = SphereSpec::new(n, cfg.energy)?;
        let horizon = cfg.horizon.unwrap_or(3.0 / r);
        let est = estimate_gap_autocorr(
            &spec,
            cfg.gamma,
            &Observable::F0,
            horizon,
            cfg.replicas,
            cfg.seed,
            &AutocorrOptions::default(),
        )
        .with_context(|| format!("Monte Carlo estimate at N = {n}"))?;
        rows.push(Row {
            n,
            delta_lb: d,
            hat_delta_lb: h,
            rayleigh_min: r,
            mc_rate: est.rate,
            mc_stderr: est.stderr,
            sandwich_holds: 0.0 < d && d <= h && h <= r && est.rate >= d - 3.0 * est.stderr,
        });
    }
    emit(cfg, "report", rows)
}
