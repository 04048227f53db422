//! Sweep configuration: defaults, plain-text `key=value` config files and
//! CLI-flag overrides (flags win).
//!
//! Ranges accept either comma lists (`0,0.1,0.2`) or `lo:step:hi` arithmetic
//! progressions; a key repeated across lines appends to the range.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Fig2Gaussian,
    Fig2Loss,
    Fig3Gaussian,
    Fig3Loss,
    Fig4Robustness,
    SingleRun,
}

#[derive(Debug, Clone)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Fully resolved sweep parameters; serialized into the JSON sidecar and
/// hashed into every CSV row.
#[derive(Debug, Clone, Serialize)]
pub struct SweepConfig {
    pub n_range: Vec<usize>,
    pub sigma_range: Vec<f64>,
    pub eta_range: Vec<f64>,
    pub m_range: Vec<usize>,
    pub seeds: usize,
    pub seed: u64,
    pub s_mult: usize,
    pub support: (f64, f64),
    pub grid_points: usize,
    pub theta_r_range: (f64, f64),
    pub fig4_n: usize,
    pub fig4_jx_fraction: f64,
    pub fig4_eta_range: Vec<f64>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let quarter = std::f64::consts::FRAC_PI_4;
        Self {
            n_range: step_range_usize(20, 20, 200),
            sigma_range: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            eta_range: vec![0.0, 0.1, 0.2, 0.3, 0.4],
            m_range: vec![20, 50, 100, 200],
            seeds: 2,
            seed: 42,
            s_mult: 8,
            support: (-quarter, quarter),
            grid_points: 4096,
            theta_r_range: (0.0, std::f64::consts::FRAC_PI_8),
            fig4_n: 100,
            fig4_jx_fraction: 0.1,
            fig4_eta_range: step_range_f64(0.0, 0.01, 0.30),
            out: None,
        }
    }
}

pub fn step_range_usize(lo: usize, step: usize, hi: usize) -> Vec<usize> {
    let mut v = Vec::new();
    let mut x = lo;
    while x <= hi {
        v.push(x);
        x += step;
    }
    v
}

pub fn step_range_f64(lo: f64, step: f64, hi: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut k = 0u32;
    loop {
        let x = lo + step * k as f64;
        if x > hi + 1e-12 {
            break;
        }
        v.push(x);
        k += 1;
    }
    v
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, ConfigError> {
    if let Some((lo, step, hi)) = split_progression(s)? {
        let (lo, step, hi) = (
            lo.parse().map_err(|e| ConfigError(format!("{s}: {e}")))?,
            step.parse().map_err(|e| ConfigError(format!("{s}: {e}")))?,
            hi.parse().map_err(|e| ConfigError(format!("{s}: {e}")))?,
        );
        if step == 0 {
            return Err(ConfigError(format!("zero step in range '{s}'")));
        }
        return Ok(step_range_usize(lo, step, hi));
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|e| ConfigError(format!("'{t}': {e}"))))
        .collect()
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, ConfigError> {
    if let Some((lo, step, hi)) = split_progression(s)? {
        let (lo, step, hi): (f64, f64, f64) = (
            lo.parse().map_err(|e| ConfigError(format!("{s}: {e}")))?,
            step.parse().map_err(|e| ConfigError(format!("{s}: {e}")))?,
            hi.parse().map_err(|e| ConfigError(format!("{s}: {e}")))?,
        );
        if step <= 0.0 {
            return Err(ConfigError(format!("non-positive step in range '{s}'")));
        }
        return Ok(step_range_f64(lo, step, hi));
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|e| ConfigError(format!("'{t}': {e}"))))
        .collect()
}

fn split_progression(s: &str) -> Result<Option<(&str, &str, &str)>, ConfigError> {
    if !s.contains(':') {
        return Ok(None);
    }
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [lo, step, hi] => Ok(Some((lo, step, hi))),
        _ => Err(ConfigError(format!("range '{s}' must be lo:step:hi"))),
    }
}

impl SweepConfig {
    /// Load `key=value` lines; `#` starts a comment, repeated keys append to
    /// list-valued entries.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let mut accumulated: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError(format!(
                    "{}:{}: expected key=value, got '{line}'",
                    path.display(),
                    lineno + 1
                )));
            };
            accumulated
                .entry(key.trim().to_string())
                .or_default()
                .push(value.trim().to_string());
        }
        for (key, values) in accumulated {
            let joined = values.join(",");
            self.apply_kv(&key, &joined)?;
        }
        Ok(())
    }

    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "n" => self.n_range = parse_usize_list(value)?,
            "sigma" => self.sigma_range = parse_f64_list(value)?,
            "eta" => self.eta_range = parse_f64_list(value)?,
            "m" => self.m_range = parse_usize_list(value)?,
            "seeds" => {
                self.seeds =
                    value.parse().map_err(|e| ConfigError(format!("seeds '{value}': {e}")))?
            }
            "seed" => {
                self.seed =
                    value.parse().map_err(|e| ConfigError(format!("seed '{value}': {e}")))?
            }
            "s_mult" => {
                self.s_mult =
                    value.parse().map_err(|e| ConfigError(format!("s_mult '{value}': {e}")))?
            }
            "grid_points" => {
                self.grid_points = value
                    .parse()
                    .map_err(|e| ConfigError(format!("grid_points '{value}': {e}")))?
            }
            "support" => {
                let v = parse_f64_list(value)?;
                if v.len() != 2 || v[0] >= v[1] {
                    return Err(ConfigError(format!("support '{value}' must be lo,hi")));
                }
                self.support = (v[0], v[1]);
            }
            "theta_r" => {
                let v = parse_f64_list(value)?;
                match v.as_slice() {
                    [single] => self.theta_r_range = (*single, *single),
                    [lo, hi] if lo < hi => self.theta_r_range = (*lo, *hi),
                    _ => return Err(ConfigError(format!("theta_r '{value}' must be x or lo,hi"))),
                }
            }
            "fig4_n" => {
                self.fig4_n =
                    value.parse().map_err(|e| ConfigError(format!("fig4_n '{value}': {e}")))?
            }
            "fig4_jx_fraction" => {
                self.fig4_jx_fraction = value
                    .parse()
                    .map_err(|e| ConfigError(format!("fig4_jx_fraction '{value}': {e}")))?
            }
            "fig4_eta" => self.fig4_eta_range = parse_f64_list(value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(ConfigError(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_range.is_empty() || self.m_range.is_empty() {
            return Err(ConfigError("empty n or m range".into()));
        }
        if let Some(&bad) = self.n_range.iter().find(|&&n| n == 0 || n % 2 != 0) {
            return Err(ConfigError(format!("particle numbers must be even and positive: {bad}")));
        }
        if self.eta_range.iter().any(|&e| !(0.0..=1.0).contains(&e)) {
            return Err(ConfigError("eta values must lie in [0,1]".into()));
        }
        if self.sigma_range.iter().any(|&s| s < 0.0) {
            return Err(ConfigError("sigma values must be non-negative".into()));
        }
        if self.seeds == 0 {
            return Err(ConfigError("seeds must be positive".into()));
        }
        Ok(())
    }

    /// Short hex digest of the resolved configuration, stamped onto every
    /// output row.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(12);
        for b in digest.iter().take(6) {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }

    /// Resolve an output path against `DICKE_SIM_OUT_DIR` (the only
    /// environment variable consulted).
    pub fn resolve_out(&self, default_name: &str) -> PathBuf {
        let base = self.out.clone().unwrap_or_else(|| PathBuf::from(default_name));
        if base.is_absolute() {
            return base;
        }
        match std::env::var_os("DICKE_SIM_OUT_DIR") {
            Some(dir) => PathBuf::from(dir).join(base),
            None => base,
        }
    }
}
