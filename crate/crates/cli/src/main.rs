//! `dicke-sim`: sweep driver and one-off analysis commands for the two-mode
//! collective-spin metrology simulator.
//!
//! Exit codes: 0 success, 1 invalid configuration or arguments, 2 numerical
//! failure during a run.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dicke_cli::config::{ConfigError, SweepConfig, parse_f64_list, parse_usize_list};
use dicke_cli::output::{
    Provenance, fmt_f64, write_fig2_csv, write_fig3_csv, write_fig4_csv, write_sidecar,
};
use dicke_cli::runners::{FamilyKind, build_state, run_fig2, run_fig3, run_fig4};
use dicke_core::bayes::{EstimationSupport, LikelihoodModel, simulate_experiment};
use dicke_core::squeezing::{NConvention, entanglement_depth_lower_bound, xi_d, xi_s};
use dicke_core::{Axis, collective_moments};

#[derive(Parser)]
#[command(
    name = "dicke-sim",
    about = "Dicke-squeezing metrology sweeps and analysis",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SweepArgs {
    /// key=value config file; flags given here override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// master RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// output CSV path (JSON sidecar written next to it)
    #[arg(long)]
    out: Option<PathBuf>,
    /// particle numbers, list or lo:step:hi (e.g. 20:20:200)
    #[arg(long)]
    n: Option<String>,
    /// Gaussian widths sigma, list or lo:step:hi
    #[arg(long)]
    sigma: Option<String>,
    /// loss rates eta, list or lo:step:hi
    #[arg(long)]
    eta: Option<String>,
    /// measurement rounds m, list or lo:step:hi
    #[arg(long)]
    m: Option<String>,
    /// experiments per (state, m) cell
    #[arg(long)]
    seeds: Option<usize>,
    /// phase-space truncation multiplier (s = s_mult * N)
    #[arg(long, value_name = "K")]
    s_mult: Option<usize>,
    /// estimation support as lo,hi (radians)
    #[arg(long)]
    support: Option<String>,
    /// true-phase draw: single value or lo,hi range
    #[arg(long)]
    theta_r: Option<String>,
}

#[derive(Args, Clone)]
struct StateArgs {
    /// state family: dicke | gaussian | loss | coherent | squeezed
    #[arg(long)]
    family: FamilyKind,
    /// particle number
    #[arg(long)]
    n: usize,
    /// Gaussian width (gaussian family)
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// loss rate (loss family)
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    /// target <J_x> as a fraction of J (squeezed family)
    #[arg(long, default_value_t = 0.1)]
    jx_fraction: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Phase-sensitivity sweep: delta_theta vs sqrt(xi_D/N) with line fits
    Fig2(SweepArgs),
    /// Bayesian precision sweep: d_theta vs sqrt(xi_D/(N m)) with line fits
    Fig3(SweepArgs),
    /// Loss robustness: xi_S vs xi_D under a particle-loss channel
    Fig4 {
        #[command(flatten)]
        sweep: SweepArgs,
        /// particle number for the comparison
        #[arg(long)]
        fig4_n: Option<usize>,
        /// <J_x>/J constraint of the spin-squeezed reference state
        #[arg(long)]
        jx_fraction: Option<f64>,
    },
    /// Print squeezing metrics for one state
    Xi {
        #[command(flatten)]
        state: StateArgs,
        /// particle-number convention: mean | initial
        #[arg(long, default_value = "mean")]
        convention: String,
    },
    /// Single Bayesian experiment with a posterior trace dump
    Simulate {
        #[command(flatten)]
        state: StateArgs,
        /// true phase shift (radians)
        #[arg(long)]
        theta_r: f64,
        /// measurement rounds
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// per-round trace CSV (round, outcome, theta_p, d_theta)
        #[arg(long)]
        out: Option<PathBuf>,
        /// write the final posterior density as CSV (theta, density)
        #[arg(long)]
        dump_density: Option<PathBuf>,
        /// grid points over the support
        #[arg(long, default_value_t = 4096)]
        grid_points: usize,
    },
    /// Entanglement-depth lower bound from a xi_D value or a CSV row
    Depth {
        /// xi_D value
        #[arg(long, conflicts_with_all = ["csv", "row"])]
        xi_d: Option<f64>,
        /// CSV produced by fig2/fig3 (reads its xi_d column)
        #[arg(long, requires = "row")]
        csv: Option<PathBuf>,
        /// zero-based data row index into --csv
        #[arg(long)]
        row: Option<usize>,
    },
}

fn merge_sweep_args(cfg: &mut SweepConfig, a: &SweepArgs) -> Result<(), ConfigError> {
    if let Some(path) = &a.config {
        cfg.apply_file(path)?;
    }
    if let Some(s) = &a.n {
        cfg.n_range = parse_usize_list(s)?;
    }
    if let Some(s) = &a.sigma {
        cfg.sigma_range = parse_f64_list(s)?;
    }
    if let Some(s) = &a.eta {
        cfg.eta_range = parse_f64_list(s)?;
    }
    if let Some(s) = &a.m {
        cfg.m_range = parse_usize_list(s)?;
    }
    if let Some(v) = a.seeds {
        cfg.seeds = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.s_mult {
        cfg.s_mult = v;
    }
    if let Some(s) = &a.support {
        cfg.apply_kv("support", s)?;
    }
    if let Some(s) = &a.theta_r {
        cfg.apply_kv("theta_r", s)?;
    }
    if let Some(p) = &a.out {
        cfg.out = Some(p.clone());
    }
    Ok(())
}

enum Failure {
    /// exit code 1
    Config(String),
    /// exit code 2
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<dicke_core::Error> for Failure {
    fn from(e: dicke_core::Error) -> Self {
        match e {
            dicke_core::Error::InvalidArgument(_) => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Fig2(args) => {
            let mut cfg = SweepConfig::default();
            merge_sweep_args(&mut cfg, &args)?;
            let (rows, summary) = run_fig2(&cfg)?;
            if summary.error_rows > 0 {
                eprintln!("{} cells recorded errors", summary.error_rows);
            }
            let path = cfg.resolve_out("fig2.csv");
            write_fig2_csv(&path, &rows, &Provenance::from_config(&cfg))?;
            write_sidecar(&path, &cfg, rows.len(), &summary)?;
            println!(
                "fig2: {} rows -> {} | pooled alpha = {:.4} (spread {:.1}%)",
                rows.len(),
                path.display(),
                summary.pooled.slope,
                100.0 * summary.alpha_spread
            );
            for f in &summary.per_family {
                println!(
                    "  alpha[{} {}] = {:.4} (rms {:.2e}, {} pts)",
                    f.family, f.param, f.fit.slope, f.fit.residual_rms, f.fit.point_count
                );
            }
            Ok(())
        }
        Command::Fig3(args) => {
            let mut cfg = SweepConfig::default();
            merge_sweep_args(&mut cfg, &args)?;
            let (rows, summary) = run_fig3(&cfg).map_err(|e| Failure::Numerical(e.to_string()))?;
            let path = cfg.resolve_out("fig3.csv");
            write_fig3_csv(&path, &rows, &Provenance::from_config(&cfg))?;
            write_sidecar(&path, &cfg, rows.len(), &summary)?;
            println!(
                "fig3: {} rows -> {} | beta = {:.4}, fraction(theta_pr <= d_theta) = {:.3}",
                rows.len(),
                path.display(),
                summary.beta.slope,
                summary.fraction_bounded
            );
            Ok(())
        }
        Command::Fig4 { sweep, fig4_n, jx_fraction } => {
            let mut cfg = SweepConfig::default();
            merge_sweep_args(&mut cfg, &sweep)?;
            if let Some(n) = fig4_n {
                cfg.fig4_n = n;
            }
            if let Some(c) = jx_fraction {
                cfg.fig4_jx_fraction = c;
            }
            // --eta on fig4 refers to the fig4 loss grid
            if sweep.eta.is_some() {
                cfg.fig4_eta_range = cfg.eta_range.clone();
            }
            let (rows, summary) = run_fig4(&cfg).map_err(|e| Failure::Numerical(e.to_string()))?;
            let path = cfg.resolve_out("fig4.csv");
            write_fig4_csv(&path, &rows, &Provenance::from_config(&cfg))?;
            write_sidecar(&path, &cfg, rows.len(), &summary)?;
            println!(
                "fig4: {} rows -> {} | xi_S(0) = {}, xi_D(0) = {:.6}, crossings: xi_S at {:?}, xi_D at {:?}",
                rows.len(),
                path.display(),
                summary
                    .xi_s_initial
                    .map(|v| format!("{v:.6}"))
                    .unwrap_or_else(|| "undefined".into()),
                summary.xi_d_initial,
                summary.eta_cross_xi_s,
                summary.eta_cross_xi_d
            );
            Ok(())
        }
        Command::Xi { state, convention } => {
            let conv = match convention.as_str() {
                "mean" => NConvention::MeanParticles,
                "initial" => NConvention::InitialN,
                other => {
                    return Err(Failure::Config(format!(
                        "unknown convention '{other}' (mean|initial)"
                    )));
                }
            };
            let st = build_state(state.family, state.n, state.sigma, state.eta, state.jx_fraction)?;
            let moments = collective_moments(&st);
            let xd = xi_d(&st, conv)?;
            println!("mean_particles = {}", fmt_f64(moments.mean_particles));
            println!("mean_jx = {}", fmt_f64(moments.mean_jx));
            println!("mean_jy = {}", fmt_f64(moments.mean_jy));
            println!("mean_jz = {}", fmt_f64(moments.mean_jz));
            println!("var_jz = {}", fmt_f64(moments.var_jz));
            println!("mean_jx2_plus_jy2 = {}", fmt_f64(moments.mean_jx2_plus_jy2));
            println!("xi_d = {}", fmt_f64(xd));
            match xi_s(&st, (Axis::X, Axis::Z)) {
                Ok(v) => println!("xi_s = {}", fmt_f64(v)),
                Err(e) => println!("xi_s = undefined ({e})"),
            }
            println!("depth_lower_bound = {}", entanglement_depth_lower_bound(xd)?);
            Ok(())
        }
        Command::Simulate { state, theta_r, m, seed, out, dump_density, grid_points } => {
            let st = build_state(state.family, state.n, state.sigma, state.eta, state.jx_fraction)?;
            let support = EstimationSupport { points: grid_points, ..Default::default() };
            let model = LikelihoodModel::new(&st, support);
            let record = out.is_some() || dump_density.is_some();
            let trace = simulate_experiment(&model, theta_r, m, seed, 1, record)?;
            println!("theta_r = {}", fmt_f64(trace.theta_r));
            println!("theta_p = {}", fmt_f64(trace.theta_p));
            println!("d_theta = {}", fmt_f64(trace.d_theta));
            println!("theta_pr = {}", fmt_f64(trace.theta_pr));
            if let Some(path) = out {
                let mut w = csv::Writer::from_path(&path)
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                w.write_record(["round", "outcome_sector", "outcome_jz", "theta_p", "d_theta"])
                    .map_err(|e| Failure::Config(e.to_string()))?;
                for (round, (&k, density)) in
                    trace.outcome_indices.iter().zip(&trace.densities).enumerate()
                {
                    let outcome = model.outcomes[k];
                    let (tp, sd) = dicke_core::bayes::posterior_statistics(density, &support);
                    w.write_record([
                        (round + 1).to_string(),
                        outcome.sector.to_string(),
                        fmt_f64(outcome.jz()),
                        fmt_f64(tp),
                        fmt_f64(sd),
                    ])
                    .map_err(|e| Failure::Config(e.to_string()))?;
                }
                w.flush().map_err(|e| Failure::Config(e.to_string()))?;
                println!("trace -> {}", path.display());
            }
            if let Some(path) = dump_density {
                let mut w = csv::Writer::from_path(&path)
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                w.write_record(["theta", "density"])
                    .map_err(|e| Failure::Config(e.to_string()))?;
                let uniform = vec![1.0 / (support.hi - support.lo); support.points];
                let final_density = trace.densities.last().unwrap_or(&uniform);
                for (i, d) in final_density.iter().enumerate() {
                    w.write_record([fmt_f64(support.theta(i)), fmt_f64(*d)])
                        .map_err(|e| Failure::Config(e.to_string()))?;
                }
                w.flush().map_err(|e| Failure::Config(e.to_string()))?;
                println!("density -> {}", path.display());
            }
            Ok(())
        }
        Command::Depth { xi_d: value, csv: csv_path, row } => {
            let xi = match (value, csv_path, row) {
                (Some(v), None, None) => v,
                (None, Some(path), Some(idx)) => read_xi_from_csv(&path, idx)?,
                _ => {
                    return Err(Failure::Config(
                        "provide either --xi-d VALUE or --csv PATH --row K".into(),
                    ));
                }
            };
            let bound = entanglement_depth_lower_bound(xi)?;
            println!("xi_d = {}", fmt_f64(xi));
            println!("depth_lower_bound = {bound}");
            Ok(())
        }
    }
}

fn read_xi_from_csv(path: &std::path::Path, row: usize) -> Result<f64, Failure> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| Failure::Config(e.to_string()))?.clone();
    let col = headers
        .iter()
        .position(|h| h == "xi_d")
        .ok_or_else(|| Failure::Config(format!("{} has no xi_d column", path.display())))?;
    let record = reader
        .records()
        .nth(row)
        .ok_or_else(|| Failure::Config(format!("row {row} out of range")))?
        .map_err(|e| Failure::Config(e.to_string()))?;
    record[col]
        .parse()
        .map_err(|e| Failure::Config(format!("xi_d cell '{}': {e}", &record[col])))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
