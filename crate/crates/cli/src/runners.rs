//! The figure-reproduction drivers: phase-sensitivity sweeps, Bayesian
//! precision sweeps and the loss-robustness comparison.

use rayon::prelude::*;
use serde::Serialize;

use dicke_core::bayes::{EstimationSupport, SweepRow, SweepState, precision_sweep};
use dicke_core::phase::relative_phase_distribution;
use dicke_core::sector::SectoredState;
use dicke_core::squeezing::{NConvention, xi_d, xi_s};
use dicke_core::states::{
    GaussianDickeParams, SqueezedSearchParams, dicke_state, gaussian_dicke, lossy_dicke,
    min_variance_squeezed_state,
};
use dicke_core::{Axis, noise::loss_channel};

use crate::config::{ConfigError, SweepConfig};
use crate::fit::{FitResult, fit_through_origin};

/// One evaluated cell of the phase-sensitivity sweep.
#[derive(Debug, Clone)]
pub struct Fig2Row {
    pub family: &'static str,
    pub n: usize,
    pub param: f64,
    pub xi_d: f64,
    pub x: f64,
    pub delta_theta: f64,
    pub half_period_sd: f64,
    pub ambiguous: bool,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct FamilyFit {
    pub family: String,
    pub param: f64,
    pub fit: FitResult,
}

#[derive(Debug, Serialize)]
pub struct Fig2Summary {
    pub per_family: Vec<FamilyFit>,
    pub pooled: FitResult,
    /// (max - min) / mean over the per-family slopes.
    pub alpha_spread: f64,
    pub error_rows: usize,
}

fn build_family_state(
    family: &'static str,
    param: f64,
    n: usize,
) -> dicke_core::Result<SectoredState> {
    match family {
        "gaussian" => Ok(SectoredState::from_pure(gaussian_dicke(GaussianDickeParams::new(
            n, param,
        )?)?)),
        "loss" => lossy_dicke(n, param),
        other => Err(dicke_core::Error::InvalidArgument(format!("unknown family {other}"))),
    }
}

/// Phase-sensitivity sweep: delta_theta vs sqrt(xi_D / N) across the
/// Gaussian and loss families.
pub fn run_fig2(cfg: &SweepConfig) -> Result<(Vec<Fig2Row>, Fig2Summary), ConfigError> {
    cfg.validate()?;
    let mut cells: Vec<(&'static str, f64, usize)> = Vec::new();
    for &sigma in &cfg.sigma_range {
        for &n in &cfg.n_range {
            cells.push(("gaussian", sigma, n));
        }
    }
    for &eta in &cfg.eta_range {
        for &n in &cfg.n_range {
            cells.push(("loss", eta, n));
        }
    }

    let rows: Vec<Fig2Row> = cells
        .par_iter()
        .map(|&(family, param, n)| match fig2_cell(family, param, n, cfg.s_mult) {
            Ok(row) => row,
            Err(e) => Fig2Row {
                family,
                n,
                param,
                xi_d: f64::NAN,
                x: f64::NAN,
                delta_theta: f64::NAN,
                half_period_sd: f64::NAN,
                ambiguous: false,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let summary = summarize_fig2(&rows)?;
    Ok((rows, summary))
}

fn fig2_cell(
    family: &'static str,
    param: f64,
    n: usize,
    s_mult: usize,
) -> dicke_core::Result<Fig2Row> {
    let state = build_family_state(family, param, n)?;
    let xi = xi_d(&state, NConvention::MeanParticles)?;
    let x = (xi / state.mean_particles()).sqrt();
    let dist = relative_phase_distribution(&state, s_mult * n)?;
    Ok(Fig2Row {
        family,
        n,
        param,
        xi_d: xi,
        x,
        delta_theta: dist.width.delta_theta,
        half_period_sd: dist.width.half_period_sd,
        ambiguous: dist.width.ambiguous,
        error: None,
    })
}

pub fn summarize_fig2(rows: &[Fig2Row]) -> Result<Fig2Summary, ConfigError> {
    let mut per_family: Vec<FamilyFit> = Vec::new();
    let mut keys: Vec<(&'static str, u64)> = rows
        .iter()
        .filter(|r| r.error.is_none())
        .map(|r| (r.family, r.param.to_bits()))
        .collect();
    keys.sort();
    keys.dedup();
    let mut pooled_pts = Vec::new();
    for (family, param_bits) in keys {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.family == family && r.param.to_bits() == param_bits && r.error.is_none())
            .map(|r| (r.x, r.delta_theta))
            .collect();
        pooled_pts.extend(pts.iter().copied());
        let fit = fit_through_origin(&pts).map_err(ConfigError)?;
        per_family.push(FamilyFit {
            family: family.to_string(),
            param: f64::from_bits(param_bits),
            fit,
        });
    }
    let pooled = fit_through_origin(&pooled_pts).map_err(ConfigError)?;
    let slopes: Vec<f64> = per_family.iter().map(|f| f.fit.slope).collect();
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let max = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Fig2Summary {
        per_family,
        pooled,
        alpha_spread: (max - min) / mean,
        error_rows: rows.iter().filter(|r| r.error.is_some()).count(),
    })
}

#[derive(Debug, Serialize)]
pub struct Fig3Summary {
    pub beta: FitResult,
    pub per_family: Vec<FamilyFit>,
    /// Fraction of rows with theta_pr <= d_theta.
    pub fraction_bounded: f64,
}

/// Bayesian precision sweep: d_theta vs sqrt(xi_D/(N m)) across the same
/// state families as the phase-sensitivity sweep.
pub fn run_fig3(cfg: &SweepConfig) -> Result<(Vec<SweepRow>, Fig3Summary), ConfigError> {
    cfg.validate()?;
    let mut states = Vec::new();
    for &sigma in &cfg.sigma_range {
        for &n in &cfg.n_range {
            let state = build_family_state("gaussian", sigma, n)
                .map_err(|e| ConfigError(e.to_string()))?;
            states.push(SweepState { family: "gaussian".into(), param: sigma, state });
        }
    }
    for &eta in &cfg.eta_range {
        for &n in &cfg.n_range {
            let state =
                build_family_state("loss", eta, n).map_err(|e| ConfigError(e.to_string()))?;
            states.push(SweepState { family: "loss".into(), param: eta, state });
        }
    }
    let support = EstimationSupport::new(cfg.support.0, cfg.support.1, cfg.grid_points)
        .map_err(|e| ConfigError(e.to_string()))?;
    let rows = precision_sweep(
        &states,
        &cfg.m_range,
        cfg.seeds,
        cfg.seed,
        support,
        cfg.theta_r_range,
    )
    .map_err(|e| ConfigError(e.to_string()))?;
    let summary = summarize_fig3(&rows)?;
    Ok((rows, summary))
}

pub fn summarize_fig3(rows: &[SweepRow]) -> Result<Fig3Summary, ConfigError> {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.x, r.d_theta)).collect();
    let beta = fit_through_origin(&pts).map_err(ConfigError)?;
    let mut keys: Vec<(String, u64)> =
        rows.iter().map(|r| (r.family.clone(), r.param.to_bits())).collect();
    keys.sort();
    keys.dedup();
    let mut per_family = Vec::new();
    for (family, param_bits) in keys {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.family == family && r.param.to_bits() == param_bits)
            .map(|r| (r.x, r.d_theta))
            .collect();
        if pts.len() >= 2 {
            per_family.push(FamilyFit {
                family,
                param: f64::from_bits(param_bits),
                fit: fit_through_origin(&pts).map_err(ConfigError)?,
            });
        }
    }
    let bounded = rows.iter().filter(|r| r.theta_pr <= r.d_theta).count();
    Ok(Fig3Summary {
        beta,
        per_family,
        fraction_bounded: bounded as f64 / rows.len() as f64,
    })
}

/// One loss rate of the robustness comparison.
#[derive(Debug, Clone)]
pub struct Fig4Row {
    pub eta: f64,
    /// Spin squeezing of the lossy minimum-variance state; `None` when the
    /// metric is undefined at this loss rate.
    pub xi_s: Option<f64>,
    pub xi_d: f64,
}

#[derive(Debug, Serialize)]
pub struct Fig4Summary {
    pub xi_s_initial: Option<f64>,
    pub xi_d_initial: f64,
    /// Smallest grid eta at which the metric exceeds 1.
    pub eta_cross_xi_s: Option<f64>,
    pub eta_cross_xi_d: Option<f64>,
}

/// Loss-robustness comparison at fixed N: spin squeezing of the constrained
/// minimum-variance state vs Dicke squeezing of the Dicke state, both sent
/// through the same loss channel.
pub fn run_fig4(cfg: &SweepConfig) -> Result<(Vec<Fig4Row>, Fig4Summary), ConfigError> {
    let n = cfg.fig4_n;
    if n == 0 || n % 2 != 0 {
        return Err(ConfigError(format!("fig4 particle number must be even, got {n}")));
    }
    let squeezed = min_variance_squeezed_state(
        SqueezedSearchParams::new(n, cfg.fig4_jx_fraction).map_err(|e| ConfigError(e.to_string()))?,
    )
    .map_err(|e| ConfigError(e.to_string()))?;
    let squeezed = SectoredState::from_pure(squeezed);
    let ideal = SectoredState::from_pure(dicke_state(n).map_err(|e| ConfigError(e.to_string()))?);

    let rows: Result<Vec<Fig4Row>, ConfigError> = cfg
        .fig4_eta_range
        .par_iter()
        .map(|&eta| {
            let lossy_s = loss_channel(&squeezed, eta).map_err(|e| ConfigError(e.to_string()))?;
            let lossy_d = loss_channel(&ideal, eta).map_err(|e| ConfigError(e.to_string()))?;
            let xs = xi_s(&lossy_s, (Axis::X, Axis::Z)).ok();
            let xd = xi_d(&lossy_d, NConvention::MeanParticles)
                .map_err(|e| ConfigError(e.to_string()))?;
            Ok(Fig4Row { eta, xi_s: xs, xi_d: xd })
        })
        .collect();
    let rows = rows?;

    let eta_cross = |pick: &dyn Fn(&Fig4Row) -> Option<f64>| {
        rows.iter()
            .find(|r| pick(r).map(|v| v > 1.0).unwrap_or(false))
            .map(|r| r.eta)
    };
    let summary = Fig4Summary {
        xi_s_initial: rows.first().and_then(|r| r.xi_s),
        xi_d_initial: rows.first().map(|r| r.xi_d).unwrap_or(f64::NAN),
        eta_cross_xi_s: eta_cross(&|r: &Fig4Row| r.xi_s),
        eta_cross_xi_d: eta_cross(&|r: &Fig4Row| Some(r.xi_d)),
    };
    Ok((rows, summary))
}

/// State families reachable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Dicke,
    Gaussian,
    Loss,
    Coherent,
    Squeezed,
}

impl std::str::FromStr for FamilyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dicke" => Ok(Self::Dicke),
            "gaussian" => Ok(Self::Gaussian),
            "loss" | "lossy" => Ok(Self::Loss),
            "coherent" => Ok(Self::Coherent),
            "squeezed" => Ok(Self::Squeezed),
            other => Err(format!(
                "unknown family '{other}' (expected dicke|gaussian|loss|coherent|squeezed)"
            )),
        }
    }
}

/// Build a single state from CLI-style parameters.
pub fn build_state(
    family: FamilyKind,
    n: usize,
    sigma: f64,
    eta: f64,
    jx_fraction: f64,
) -> dicke_core::Result<SectoredState> {
    match family {
        FamilyKind::Dicke => Ok(SectoredState::from_pure(dicke_state(n)?)),
        FamilyKind::Gaussian => Ok(SectoredState::from_pure(gaussian_dicke(
            GaussianDickeParams::new(n, sigma)?,
        )?)),
        FamilyKind::Loss => lossy_dicke(n, eta),
        FamilyKind::Coherent => Ok(SectoredState::from_pure(
            dicke_core::states::spin_coherent_x(n)?,
        )),
        FamilyKind::Squeezed => Ok(SectoredState::from_pure(min_variance_squeezed_state(
            SqueezedSearchParams::new(n, jx_fraction)?,
        )?)),
    }
}
