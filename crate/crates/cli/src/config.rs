use crate::Invalid;
use anyhow::Result;
use clap::{Args, ValueEnum};
use kacgap::bounds::BaseChoice;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every command; any of them may also come from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct Params {
    /// key=value file; flags given on the command line win
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Number of particles
    #[arg(long = "n", visible_alias = "N", global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Energy per particle
    #[arg(long = "energy", visible_alias = "E", global = true)]
    pub energy: Option<f64>,
    /// Base case index, or "auto"
    #[arg(long, global = true)]
    pub n0: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub replicas: Option<usize>,
    /// Polynomial degree for spectra and trial profiles
    #[arg(long, global = true)]
    pub degree: Option<usize>,
    /// Hermite basis size for the linearized operator
    #[arg(long, global = true)]
    pub basis_size: Option<usize>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Collisions to record (simulate)
    #[arg(long, global = true)]
    pub steps: Option<u64>,
    /// Block size for correlation spectra
    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long, global = true)]
    pub k_max: Option<usize>,
    /// Comma-separated particle numbers (report)
    #[arg(long, global = true, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// Autocorrelation horizon; defaults to 3 / (variational upper bound)
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub n: usize,
    pub gamma: f64,
    pub energy: f64,
    pub n0: String,
    pub seed: u64,
    pub replicas: usize,
    pub degree: usize,
    pub basis_size: usize,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub steps: u64,
    pub m: usize,
    pub k_max: usize,
    pub ns: Vec<usize>,
    pub horizon: Option<f64>,
}

fn read_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Invalid(format!("reading config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Invalid(format!("{}:{}: expected key=value", path.display(), lineno + 1)).into());
        };
        map.insert(k.trim().replace('-', "_").to_lowercase(), v.trim().to_string());
    }
    Ok(map)
}

fn parse<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| Invalid(format!("config key {key}: cannot parse {v:?}")).into()),
    }
}

const KEYS: [&str; 15] = [
    "n", "gamma", "energy", "n0", "seed", "replicas", "degree", "basis_size", "output", "format", "steps", "m",
    "k_max", "ns", "horizon",
];

impl RunConfig {
    pub fn resolve(p: &Params) -> Result<Self> {
        let file = match &p.config {
            Some(path) => read_file(path)?,
            None => BTreeMap::new(),
        };
        if let Some(k) = file.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Invalid(format!("unknown config key {k:?}")).into());
        }
        let format = match (p.format, file.get("format")) {
            (Some(f), _) => Some(f),
            (None, Some(s)) => Some(Format::from_str(s, true).map_err(|_| Invalid(format!("bad format {s:?}")))?),
            (None, None) => None,
        };
        let ns = match (&p.ns, file.get("ns")) {
            (Some(v), _) => v.clone(),
            (None, Some(s)) => s
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| Invalid(format!("bad ns entry {x:?}"))))
                .collect::<std::result::Result<_, _>>()?,
            (None, None) => vec![4, 8, 16, 32],
        };
        let cfg = RunConfig {
            n: p.n.or(parse(&file, "n")?).unwrap_or(10),
            gamma: p.gamma.or(parse(&file, "gamma")?).unwrap_or(0.5),
            energy: p.energy.or(parse(&file, "energy")?).unwrap_or(1.0),
            n0: p.n0.clone().or(parse(&file, "n0")?).unwrap_or_else(|| "auto".into()),
            seed: p.seed.or(parse(&file, "seed")?).unwrap_or(1),
            replicas: p.replicas.or(parse(&file, "replicas")?).unwrap_or(200),
            degree: p.degree.or(parse(&file, "degree")?).unwrap_or(8),
            basis_size: p.basis_size.or(parse(&file, "basis_size")?).unwrap_or(16),
            output: p.output.clone().or(parse(&file, "output")?),
            format,
            steps: p.steps.or(parse(&file, "steps")?).unwrap_or(1000),
            m: p.m.or(parse(&file, "m")?).unwrap_or(1),
            k_max: p.k_max.or(parse(&file, "k_max")?).unwrap_or(20),
            ns,
            horizon: p.horizon.or(parse(&file, "horizon")?),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| -> Result<()> { Err(Invalid(m).into()) };
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(self.energy > 0.0 && self.energy.is_finite()) {
            return bad(format!("energy must be positive, got {}", self.energy));
        }
        if self.n < 2 {
            return bad(format!("N must be at least 2, got {}", self.n));
        }
        if self.ns.iter().any(|&n| n < 2) {
            return bad("every entry of ns must be at least 2".into());
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("horizon must be positive, got {h}"));
            }
        }
        self.base()?;
        Ok(())
    }

    pub fn base(&self) -> Result<BaseChoice> {
        if self.n0.eq_ignore_ascii_case("auto") {
            return Ok(BaseChoice::Auto);
        }
        self.n0
            .parse()
            .map(BaseChoice::Fixed)
            .map_err(|_| Invalid(format!("n0 must be \"auto\" or an integer, got {:?}", self.n0)).into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_base() {
        let cfg = RunConfig::resolve(&Params::default()).unwrap();
        assert_eq!(cfg.base().unwrap(), BaseChoice::Auto);
        assert_eq!(cfg.ns, vec![4, 8, 16, 32]);
        let p = Params { n0: Some("12".into()), ..Params::default() };
        assert_eq!(RunConfig::resolve(&p).unwrap().base().unwrap(), BaseChoice::Fixed(12));
        let p = Params { n0: Some("x".into()), ..Params::default() };
        assert!(RunConfig::resolve(&p).unwrap_err().downcast_ref::<Invalid>().is_some());
    }

    #[test]
    fn file_values_fill_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c");
        std::fs::write(&path, "gamma = 1\nns = 5, 7\nformat = CSV\nk-max = 4 # comment\n").unwrap();
        let p = Params { config: Some(path), gamma: Some(0.25), ..Params::default() };
        let cfg = RunConfig::resolve(&p).unwrap();
        assert_eq!(cfg.gamma, 0.25);
        assert_eq!(cfg.ns, vec![5, 7]);
        assert_eq!(cfg.format, Some(Format::Csv));
        assert_eq!(cfg.k_max, 4);
    }

    #[test]
    fn rejects_malformed_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c");
        std::fs::write(&path, "gamma 1\n").unwrap();
        let p = Params { config: Some(path.clone()), ..Params::default() };
        assert!(RunConfig::resolve(&p).is_err());
        std::fs::write(&path, "energy = -1\n").unwrap();
        assert!(RunConfig::resolve(&p).is_err());
    }
}
