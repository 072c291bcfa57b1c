use kacgap::bounds::{certified_tail_majorant, delta2, delta_lb, hat_delta_lb, lambda_lb, uniform_gap_limit, BaseChoice};
use kacgap::correlation::kappa;
use kacgap::kac_walk::{estimate_gap_autocorr, AutocorrOptions, GapEstimate, Observable};
use kacgap::products::{gamma_product_limit, truncated_product_deficit_par, uniform_factor_spec};
use kacgap::sphere::{gaussian_domination_check, maxwellian, MarginalDensity, SphereSpec};
use kacgap::variational::{exact_maxwellian_spectrum, linearized_gap, rayleigh_min, LinearizedModel};
use std::process::ExitCode;
use std::time::{Duration, Instant};

type Outcome = Result<(bool, String), String>;

fn a_k(k: u64, gamma: f64) -> f64 {
    kacgap::bounds::a_coeff(k, gamma).unwrap()
}

fn mc_rate(n: usize, e: f64, gamma: f64, horizon: f64, seed: u64) -> Result<GapEstimate, String> {
    let spec = SphereSpec::new(n, e).map_err(|x| x.to_string())?;
    estimate_gap_autocorr(&spec, gamma, &Observable::F0, horizon, 200, seed, &AutocorrOptions::default())
        .map_err(|x| x.to_string())
}

fn product_constant() -> Outcome {
    let spec = uniform_factor_spec().map_err(|e| e.to_string())?;
    gamma_product_limit(&spec).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let r = gamma_product_limit(&spec).map_err(|e| e.to_string())?;
    let dt = t.elapsed();
    let ok = (r.value - 0.03881503614).abs() <= 1e-9 && dt < Duration::from_millis(1);
    Ok((ok, format!("value {:.11}, {:?}", r.value, dt)))
}

fn tail_product() -> Outcome {
    let t = Instant::now();
    let majorant = certified_tail_majorant(0.5, false, 1_000_000).map_err(|e| e.to_string())?;
    let r = truncated_product_deficit_par(|k| a_k(k, 0.5) / (k as f64).powi(2), 11, 1_000_000, majorant)
        .map_err(|e| e.to_string())?;
    let dt = t.elapsed();
    let ok = (r.value - 0.5067).abs() <= 5e-4 && dt < Duration::from_secs(1);
    Ok((ok, format!("value {:.5} (target 0.5067), {:?}", r.value, dt)))
}

fn lambda_bounds() -> Outcome {
    let t = Instant::now();
    let half = lambda_lb(0.5).map_err(|e| e.to_string())?;
    let zero = lambda_lb(0.0).map_err(|e| e.to_string())?;
    let dt = t.elapsed();
    let certified = half.tail_majorant > 0.0 && zero.tail_majorant > 0.0 && half.value > 0.0 && zero.value > 0.0;
    let ok = (half.value - 0.0263).abs() < 5e-4
        && (zero.value - 0.0592).abs() < 5e-4
        && certified
        && dt < Duration::from_secs(5);
    Ok((
        ok,
        format!(
            "γ=½ {:.6} (N0={}), γ=0 {:.6} (N0={}), targets 0.0263/0.0592, {:?}",
            half.value, half.n0, zero.value, zero.n0, dt
        ),
    ))
}

fn super_hard_limit() -> Outcome {
    let v = uniform_gap_limit(1.0).map_err(|e| e.to_string())?;
    Ok(((v - 0.1552601446).abs() <= 1e-8, format!("value {v:.10}")))
}

fn maxwellian_gap() -> Outcome {
    let t = Instant::now();
    let mut worst_gap = 0.0f64;
    let mut worst_align = 0.0f64;
    for n in 3..=8 {
        let s = exact_maxwellian_spectrum(n, 8).map_err(|e| e.to_string())?;
        let exact = (n as f64 + 2.0) / (2.0 * (n as f64 - 1.0));
        worst_gap = worst_gap.max((s.gap - exact).abs());
        worst_align = worst_align.max(1.0 - s.gap_alignment);
    }
    let dt = t.elapsed();
    let ok = worst_gap <= 1e-9 && worst_align <= 1e-8 && dt < Duration::from_secs(10);
    Ok((ok, format!("max gap error {worst_gap:.1e}, max misalignment {worst_align:.1e}, {dt:?}")))
}

fn linearized() -> Outcome {
    let v = linearized_gap(&LinearizedModel::new(0.0, 16)).map_err(|e| e.to_string())?;
    Ok(((v - 0.5).abs() <= 1e-6, format!("value {v:.10}")))
}

fn two_particles() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for g in [0.0, 0.5, 1.0] {
        let exact = 2f64.powf(g + 1.0);
        let closed = delta2(g);
        let var = rayleigh_min(2, g, 8).map_err(|e| e.to_string())?.value;
        let mc = mc_rate(2, 1.0, g, 3.0 / exact, 2)?;
        ok &= (closed - exact).abs() <= 1e-9
            && (var - exact).abs() <= 1e-9
            && (mc.rate - exact).abs() <= 3.0 * mc.stderr;
        parts.push(format!("γ={g}: mc {:.3}±{:.3} var {var:.9}", mc.rate, mc.stderr));
    }
    Ok((ok, parts.join("; ")))
}

fn sandwich() -> Outcome {
    let t = Instant::now();
    let mut ok = true;
    let mut bad = Vec::new();
    for n in [4usize, 8, 16, 32] {
        for g in [0.0, 0.5, 1.0] {
            let d = delta_lb(n as u64, g, BaseChoice::Auto).map_err(|e| e.to_string())?;
            let h = hat_delta_lb(n as u64, g, BaseChoice::Auto).map_err(|e| e.to_string())?;
            let r = rayleigh_min(n, g, 8).map_err(|e| e.to_string())?.value;
            let mc = mc_rate(n, 1.0, g, 3.0 / r, 17)?;
            let good = 0.0 < d && d <= h && h <= r && mc.rate >= d - 3.0 * mc.stderr;
            if !good {
                bad.push(format!("N={n} γ={g}: {d} {h} {r} mc {}±{}", mc.rate, mc.stderr));
            }
            ok &= good;
        }
    }
    let dt = t.elapsed();
    ok &= dt < Duration::from_secs(300);
    Ok((ok, if bad.is_empty() { format!("12 cases, {dt:?}") } else { bad.join("; ") }))
}

fn correlation() -> Outcome {
    let mut worst = 0.0f64;
    let mut monotone = true;
    for n in 3..=200usize {
        let nf = n as f64;
        let alphas = [-1.0 / (nf - 1.0), 3.0 / ((nf - 1.0) * (nf + 1.0)), -15.0 / ((nf - 1.0) * (nf + 1.0) * (nf + 3.0))];
        for (k, a) in alphas.iter().enumerate() {
            let v = kappa(n, 1, k + 1).map_err(|e| e.to_string())?;
            worst = worst.max((v - a).abs() / a.abs());
        }
        for m in 1..=n / 2 {
            let (mf, r) = (m as f64, (n - m) as f64);
            let k1 = kappa(n, m, 1).map_err(|e| e.to_string())?;
            let k2 = kappa(n, m, 2).map_err(|e| e.to_string())?;
            worst = worst.max((k1 + mf / r).abs() / (mf / r));
            let e2 = mf * (mf + 2.0) / (r * (r + 2.0));
            worst = worst.max((k2 - e2).abs() / e2);
            if 2 * m < n {
                let mut prev = 1.0;
                for k in 1..=20 {
                    let c = kappa(n, m, k).map_err(|e| e.to_string())?.abs();
                    monotone &= c < prev;
                    prev = c;
                }
            }
        }
    }
    Ok((worst <= 1e-13 && monotone, format!("max relative error {worst:.1e}, strict decrease {monotone}")))
}

fn measure() -> Outcome {
    let mut dom = 0.0f64;
    for n in 10..=200usize {
        let r = (n as f64).sqrt();
        let grid: Vec<f64> = (0..=400).map(|i| -r + 2.0 * r * i as f64 / 400.0).collect();
        dom = dom.max(gaussian_domination_check(n, &grid).map_err(|e| e.to_string())?);
    }
    let den = MarginalDensity::new(SphereSpec::unit(100).map_err(|e| e.to_string())?, 1).map_err(|e| e.to_string())?;
    let mut dev = 0.0f64;
    let mut reach = 0.0;
    for i in 0..=1000 {
        let v = 10.0 * i as f64 / 1000.0;
        dev = dev.max((den.eval(&[v]).map_err(|e| e.to_string())? / maxwellian(v) - 1.0).abs());
        if dev < 0.05 {
            reach = v;
        }
    }
    let mut scaling = true;
    let mut ratios = Vec::new();
    for g in [0.0, 0.5, 1.0] {
        let h = 3.0 / (1.0 + g);
        let r1 = mc_rate(8, 1.0, g, h, 31)?;
        let r2 = mc_rate(8, 2.0, g, h / 2f64.powf(g), 37)?;
        let ratio = r2.rate / r1.rate;
        let sigma = ratio * ((r1.stderr / r1.rate).powi(2) + (r2.stderr / r2.rate).powi(2)).sqrt();
        scaling &= (ratio - 2f64.powf(g)).abs() <= 3.0 * sigma;
        ratios.push(format!("{ratio:.3}±{sigma:.3}"));
    }
    let ok = dom <= std::f64::consts::E.powi(2) && dev < 0.05 && scaling;
    Ok((
        ok,
        format!("sup ρ/M {dom:.4}, sup_|v|≤10 |ρ₁₀₀/M−1| {dev:.4} (below 0.05 only for |v| ≤ {reach:.2}), rate ratios {}", ratios.join(" ")),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("gamma-product constant", product_constant),
        ("hard-sphere tail product", tail_product),
        ("limit lower bounds", lambda_bounds),
        ("super-hard uniform constant", super_hard_limit),
        ("Maxwellian exact gap", maxwellian_gap),
        ("linearized Maxwellian gap", linearized),
        ("two-particle rate", two_particles),
        ("sandwich suite", sandwich),
        ("correlation spectra", correlation),
        ("marginal densities and scaling", measure),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.2}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
