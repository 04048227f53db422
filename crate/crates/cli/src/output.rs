//! CSV and JSON-sidecar writers. Every CSV row carries the provenance tuple
//! (config hash, master seed, library version); floats are written with 17
//! significant digits so reruns are byte-comparable.

use std::path::Path;

use serde::Serialize;

use dicke_core::bayes::SweepRow;

use crate::config::{ConfigError, SweepConfig};
use crate::runners::{Fig2Row, Fig2Summary, Fig3Summary, Fig4Row, Fig4Summary};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits, scientific notation, '.' decimal separator.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.16e}")
    }
}

pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn from_config(cfg: &SweepConfig) -> Self {
        Self { config_hash: cfg.hash(), seed: cfg.seed }
    }

    fn cells(&self) -> [String; 3] {
        [self.config_hash.clone(), self.seed.to_string(), VERSION.to_string()]
    }
}

fn open_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, ConfigError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| ConfigError(format!("mkdir {}: {e}", parent.display())))?;
        }
    }
    csv::Writer::from_path(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

pub fn write_fig2_csv(
    path: &Path,
    rows: &[Fig2Row],
    prov: &Provenance,
) -> Result<(), ConfigError> {
    let mut w = open_writer(path)?;
    w.write_record([
        "state_family",
        "n",
        "param",
        "xi_d",
        "sqrt_xi_d_over_n",
        "delta_theta",
        "delta_theta_half_period",
        "ambiguous",
        "error",
        "config_hash",
        "seed",
        "version",
    ])
    .map_err(|e| ConfigError(e.to_string()))?;
    let p = prov.cells();
    for r in rows {
        w.write_record([
            r.family.to_string(),
            r.n.to_string(),
            fmt_f64(r.param),
            fmt_f64(r.xi_d),
            fmt_f64(r.x),
            fmt_f64(r.delta_theta),
            fmt_f64(r.half_period_sd),
            r.ambiguous.to_string(),
            r.error.clone().unwrap_or_default(),
            p[0].clone(),
            p[1].clone(),
            p[2].clone(),
        ])
        .map_err(|e| ConfigError(e.to_string()))?;
    }
    w.flush().map_err(|e| ConfigError(e.to_string()))
}

pub fn write_fig3_csv(
    path: &Path,
    rows: &[SweepRow],
    prov: &Provenance,
) -> Result<(), ConfigError> {
    let mut w = open_writer(path)?;
    w.write_record([
        "family",
        "n",
        "param",
        "m",
        "xi_d",
        "sqrt_xi_d_over_nm",
        "d_theta",
        "theta_pr",
        "theta_r",
        "stream",
        "config_hash",
        "seed",
        "version",
    ])
    .map_err(|e| ConfigError(e.to_string()))?;
    let p = prov.cells();
    for r in rows {
        w.write_record([
            r.family.clone(),
            r.n_source.to_string(),
            fmt_f64(r.param),
            r.rounds.to_string(),
            fmt_f64(r.xi_d),
            fmt_f64(r.x),
            fmt_f64(r.d_theta),
            fmt_f64(r.theta_pr),
            fmt_f64(r.theta_r),
            r.stream.to_string(),
            p[0].clone(),
            p[1].clone(),
            p[2].clone(),
        ])
        .map_err(|e| ConfigError(e.to_string()))?;
    }
    w.flush().map_err(|e| ConfigError(e.to_string()))
}

pub fn write_fig4_csv(
    path: &Path,
    rows: &[Fig4Row],
    prov: &Provenance,
) -> Result<(), ConfigError> {
    let mut w = open_writer(path)?;
    w.write_record(["eta", "xi_s", "xi_d", "config_hash", "seed", "version"])
        .map_err(|e| ConfigError(e.to_string()))?;
    let p = prov.cells();
    for r in rows {
        w.write_record([
            fmt_f64(r.eta),
            r.xi_s.map(fmt_f64).unwrap_or_else(|| "undefined".into()),
            fmt_f64(r.xi_d),
            p[0].clone(),
            p[1].clone(),
            p[2].clone(),
        ])
        .map_err(|e| ConfigError(e.to_string()))?;
    }
    w.flush().map_err(|e| ConfigError(e.to_string()))
}

#[derive(Serialize)]
struct Sidecar<'a, S: Serialize> {
    config: &'a SweepConfig,
    config_hash: String,
    version: &'static str,
    row_count: usize,
    summary: &'a S,
}

/// JSON sidecar next to the CSV (same filename with `.json` appended),
/// holding the resolved config and the fit results.
pub fn write_sidecar<S: Serialize>(
    csv_path: &Path,
    cfg: &SweepConfig,
    row_count: usize,
    summary: &S,
) -> Result<(), ConfigError> {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".json");
    let side = Sidecar { config: cfg, config_hash: cfg.hash(), version: VERSION, row_count, summary };
    let body = serde_json::to_string_pretty(&side).map_err(|e| ConfigError(e.to_string()))?;
    std::fs::write(&name, body)
        .map_err(|e| ConfigError(format!("{}: {e}", Path::new(&name).display())))
}

/// Convenience re-exports used by main for summary typing.
pub type Fig2Out = (Vec<Fig2Row>, Fig2Summary);
pub type Fig3Out = (Vec<SweepRow>, Fig3Summary);
pub type Fig4Out = (Vec<Fig4Row>, Fig4Summary);
