use std::fmt;
use std::path::Path;

use mdiscord::entropy_flux::flatten_reports;
use mdiscord::oracle::{verify_suite, Fault};
use mdiscord::{
    arrange, discord, discord_two_measurement, flux_report, states, tree_from_params, Family, MeasurementTree,
    OptimizerConfig, QState, StateSpec, SubsetSpec,
};
use rayon::prelude::*;

use crate::config::{read_params, read_state_file, RunConfig, SweepGrid};
use crate::format::{cell, csv_bytes, emit, sig12};
use crate::{Cli, Command, OptArgs, StateArgs, TreeChoice};

const DEFAULT_SAMPLES: usize = 100;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files.
    Config(String),
    /// A library call failed on valid input.
    Runtime(String),
    /// One or more checks failed.
    Verification(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) | CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Runtime(m) | CliError::Verification(m) => f.write_str(m),
        }
    }
}

impl From<mdiscord::Error> for CliError {
    fn from(e: mdiscord::Error) -> Self {
        match e {
            mdiscord::Error::Identity { .. } => CliError::Verification(e.to_string()),
            mdiscord::Error::Structure(_) | mdiscord::Error::Param(_) | mdiscord::Error::Subset(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, CliError>;

/// Caps the worker pool when `MDISCORD_THREADS` is set.
pub fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("MDISCORD_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("MDISCORD_THREADS must be a positive integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

pub fn run(cli: Cli) -> Res<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(CliError::Config)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Discord {
            state,
            opt,
            two_measurement,
            out,
        } => {
            let out = out.or(cfg.out.clone());
            cmd_discord(&cfg, &state, &opt, two_measurement, out.as_deref())
        }
        Command::Sweep {
            state,
            opt,
            points,
            mu_start,
            mu_stop,
            out,
        } => {
            let mut grid = cfg.sweep.clone().unwrap_or_default();
            grid.points = points.unwrap_or(grid.points);
            grid.start = mu_start.unwrap_or(grid.start);
            grid.stop = mu_stop.unwrap_or(grid.stop);
            let out = out.or(cfg.out.clone());
            cmd_sweep(&cfg, &state, &opt, &grid, out.as_deref())
        }
        Command::Flux {
            state,
            opt,
            params,
            tree,
            out,
        } => {
            let out = out.or(cfg.out.clone());
            cmd_flux(&cfg, &state, &opt, params.as_deref(), tree, out.as_deref())
        }
        Command::Verify {
            samples,
            seed,
            out,
            inject_fault,
        } => {
            let samples = samples.or(cfg.samples).unwrap_or(DEFAULT_SAMPLES);
            let seed = seed.or(cfg.optimizer.as_ref().map(|o| o.seed)).unwrap_or(0);
            let fault = if inject_fault {
                Fault::FlipMonogamySign
            } else {
                Fault::None
            };
            let out = out.or(cfg.out.clone());
            cmd_verify(samples, seed, fault, out.as_deref())
        }
    }
}

pub fn optimizer_config(cfg: &RunConfig, opt: &OptArgs) -> Res<OptimizerConfig> {
    let mut c = cfg.optimizer.clone().unwrap_or_default();
    if let Some(v) = opt.grid_points {
        c.grid_points_per_angle = v;
    }
    if let Some(v) = opt.refine_starts {
        c.refine_starts = v;
    }
    if let Some(v) = opt.simplex_iters {
        c.simplex_max_iters = v;
    }
    if let Some(v) = opt.seed {
        c.seed = v;
    }
    c.validate()?;
    Ok(c)
}

/// The state spec from flags over config, without building it.
fn state_spec(cfg: &RunConfig, args: &StateArgs) -> Res<Option<StateSpec>> {
    let mut spec = match &args.family {
        Some(name) => Some(StateSpec::family(Family::parse(name)?)),
        None => cfg.state.clone(),
    };
    if let Some(s) = spec.as_mut() {
        if args.mu.is_some() {
            s.mu = args.mu;
        }
        if args.qubits.is_some() {
            s.qubits = args.qubits;
        }
    }
    Ok(spec)
}

fn resolve_state(cfg: &RunConfig, args: &StateArgs) -> Res<QState> {
    if let Some(p) = &args.state {
        return read_state_file(p).map_err(CliError::Config);
    }
    if args.family.is_none() {
        if let Some(p) = &cfg.state_file {
            return read_state_file(p).map_err(CliError::Config);
        }
    }
    let spec = state_spec(cfg, args)?
        .ok_or_else(|| CliError::Config("no state given: use --family, --state or a config file".into()))?;
    Ok(states::build(&spec)?)
}

/// Order and level from flags over config; the level defaults to the
/// number of subsystems.
fn order_level(cfg: &RunConfig, args: &StateArgs, n: usize) -> (Vec<usize>, usize) {
    let order = args
        .order
        .clone()
        .or(cfg.order.clone())
        .unwrap_or_else(|| (0..n).collect());
    let level = args.level.or(cfg.level).unwrap_or(n);
    (order, level)
}

fn write(out: Option<&Path>, bytes: &[u8]) -> Res<()> {
    emit(out, bytes).map_err(|e| CliError::Runtime(format!("writing output: {e}")))
}

fn cmd_discord(cfg: &RunConfig, args: &StateArgs, opt: &OptArgs, two: bool, out: Option<&Path>) -> Res<()> {
    let state = resolve_state(cfg, args)?;
    let oc = optimizer_config(cfg, opt)?;
    let (order, level) = order_level(cfg, args, state.n_subsystems());
    let result = if two {
        if level != 2 {
            return Err(CliError::Config(format!(
                "--two-measurement needs level 2, got {level}"
            )));
        }
        discord_two_measurement(&state, &order, &oc)?
    } else {
        discord(&state, &order, level, &oc)?
    };
    let mut json = serde_json::to_vec_pretty(&result).map_err(|e| CliError::Runtime(e.to_string()))?;
    json.push(b'\n');
    write(out, &json)
}

pub const SWEEP_HEADER: [&str; 6] = ["mu", "D", "Delta_AB_C", "Delta_AC_B", "Delta_BC_PiA", "Delta_ABC"];

fn cmd_sweep(cfg: &RunConfig, args: &StateArgs, opt: &OptArgs, grid: &SweepGrid, out: Option<&Path>) -> Res<()> {
    if args.state.is_some() {
        return Err(CliError::Config("sweep needs a state family, not a state file".into()));
    }
    let base =
        state_spec(cfg, args)?.ok_or_else(|| CliError::Config("sweep needs --family or a config state".into()))?;
    if !base.family.takes_mu() {
        return Err(CliError::Config(format!(
            "family {} has no mu to sweep",
            base.family.name()
        )));
    }
    let mus = grid.values().map_err(CliError::Config)?;
    let oc = optimizer_config(cfg, opt)?;
    let (order, level) = order_level(cfg, args, 3);
    if level != 3 {
        return Err(CliError::Config(format!(
            "sweep decomposes tripartite discord, level must be 3, got {level}"
        )));
    }
    let rows: Vec<Vec<String>> = mus
        .par_iter()
        .map(|&mu| -> Res<Vec<String>> {
            let state = states::build(&StateSpec {
                mu: Some(mu),
                ..base.clone()
            })?;
            let r = discord(&state, &order, level, &oc)?;
            let d = r.decomposition.expect("level 3 has a decomposition");
            Ok([mu, r.value, d.delta_ab_c, d.delta_ac_b, d.delta_bc_pia, d.delta_abc]
                .into_iter()
                .map(sig12)
                .collect())
        })
        .collect::<Res<_>>()?;
    let header: Vec<String> = SWEEP_HEADER.iter().map(|s| s.to_string()).collect();
    write(
        out,
        &csv_bytes(&header, &rows).map_err(|e| CliError::Runtime(e.to_string()))?,
    )
}

fn cmd_flux(
    cfg: &RunConfig,
    args: &StateArgs,
    opt: &OptArgs,
    params: Option<&Path>,
    choice: TreeChoice,
    out: Option<&Path>,
) -> Res<()> {
    let state = resolve_state(cfg, args)?;
    let (order, level) = order_level(cfg, args, state.n_subsystems().min(3));
    if !(2..=3).contains(&level) {
        return Err(CliError::Config(format!("flux reports need level 2 or 3, got {level}")));
    }
    let arranged = arrange(&state, &order, level)?;
    let measured = SubsetSpec::range(0, level - 1)?;
    let params = match params {
        Some(p) => Some(read_params(p).map_err(CliError::Config)?),
        None => cfg.params.clone(),
    };
    let tree = match (params, choice) {
        (Some(p), _) => tree_from_params(arranged.dims(), &measured, &p)?,
        (None, TreeChoice::Z) => MeasurementTree::computational(arranged.dims()[..level - 1].to_vec())?,
        (None, TreeChoice::Optimal) => {
            let r = discord(&state, &order, level, &optimizer_config(cfg, opt)?)?;
            r.optimal_tree(&arranged)?
        }
    };
    let flat = flatten_reports(&flux_report(&arranged, &tree)?);
    let header: Vec<String> = flat.iter().map(|(k, _)| k.clone()).collect();
    let row: Vec<String> = flat.iter().map(|(_, v)| cell(*v)).collect();
    write(
        out,
        &csv_bytes(&header, &[row]).map_err(|e| CliError::Runtime(e.to_string()))?,
    )
}

pub const VERIFY_HEADER: [&str; 5] = ["check", "samples", "max_violation", "tolerance", "pass"];

fn cmd_verify(samples: usize, seed: u64, fault: Fault, out: Option<&Path>) -> Res<()> {
    if samples == 0 {
        return Err(CliError::Config("--samples must be positive".into()));
    }
    let reports = verify_suite(seed, samples, fault)?;
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.check.clone(),
                r.samples.to_string(),
                sig12(r.max_violation),
                sig12(r.tolerance),
                r.pass.to_string(),
            ]
        })
        .collect();
    let header: Vec<String> = VERIFY_HEADER.iter().map(|s| s.to_string()).collect();
    write(
        out,
        &csv_bytes(&header, &rows).map_err(|e| CliError::Runtime(e.to_string()))?,
    )?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.check.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("failed checks: {}", failed.join(", "))))
    }
}
