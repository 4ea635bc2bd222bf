//! Drop x grid orchestration and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};

use cfres_core::resilience::{recover, steady_state, ResilienceWeights, TimelineOutcome};
use cfres_core::scenario::generate_drop;
use cfres_core::{NetworkDrop, PerformanceReport, PowerAllocation};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Preset};
use crate::error::CliError;
use crate::trace_io::{write_trace, TraceTable, TRACE_HEADER};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub preset: Preset,
    pub seeds: Vec<u64>,
    pub trace_header: Vec<String>,
    pub t0_ms: f64,
    pub t_d_ms: f64,
    /// Whether absorption and adaptation were clamped to [0, 1] in the traces.
    pub clamped: bool,
    pub drops: Vec<DropStatus>,
    pub runs: Vec<RunEntry>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropStatus {
    pub seed: u64,
    pub ok: bool,
    pub errors: Vec<String>,
}

/// One (drop, omega, lambda) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub seed: u64,
    pub omega: [f64; 2],
    pub lambda: [f64; 3],
    pub preset: Preset,
    /// Paths relative to the run directory.
    pub trace: String,
    pub allocation: String,
    pub psi_steady: f64,
    pub psi_t0: f64,
    pub alpha_abs: f64,
    pub records: usize,
    pub best_index: Option<usize>,
    pub best_t_ms: Option<f64>,
    pub best_alpha_overall: Option<f64>,
    pub final_alpha_ada: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationDoc {
    /// Amplitudes `sqrt(rho)`; one row per AP.
    pub u_users: Vec<Vec<f64>>,
    pub u_an: Vec<f64>,
    pub ap_power_mw: Vec<f64>,
    /// Under the attacked statistics.
    pub performance: PerformanceReport,
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationFile {
    pub seed: u64,
    pub omega: [f64; 2],
    pub lambda: [f64; 3],
    pub steady: AllocationDoc,
    pub best: Option<AllocationDoc>,
    #[serde(rename = "final")]
    pub last: Option<AllocationDoc>,
}

fn doc(outcome: &TimelineOutcome, u: &PowerAllocation) -> AllocationDoc {
    let p = &outcome.attacked;
    AllocationDoc {
        u_users: u.u_users.row_iter().map(|r| r.iter().copied().collect()).collect(),
        u_an: u.u_an.iter().copied().collect(),
        ap_power_mw: (0..u.aps()).map(|l| u.ap_power(l)).collect(),
        performance: p.coeffs.report(u),
        psi: p.psi(u),
    }
}

pub fn trace_name(seed: u64, omega_idx: usize, lambda_idx: usize) -> String {
    format!("traces/trace_s{seed}_w{omega_idx}_l{lambda_idx}.csv")
}

pub fn allocation_name(seed: u64, omega_idx: usize, lambda_idx: usize) -> String {
    format!("allocations/alloc_s{seed}_w{omega_idx}_l{lambda_idx}.json")
}

/// Drop and its pre-attack allocation, shared by every grid point.
pub struct SteadyDrop {
    pub seed: u64,
    pub drop: NetworkDrop,
    pub steady: PowerAllocation,
}

pub fn steady_drop(cfg: &ExperimentConfig, seed: u64) -> Result<SteadyDrop, CliError> {
    let drop = generate_drop(&cfg.scenario_config(), seed)?;
    let pre = cfg.pilot_config().without_attack();
    let steady = steady_state(&drop, &pre, &cfg.targets(), &cfg.p_max(), &cfg.sca_options(), &cfg.timeline_config())?;
    Ok(SteadyDrop { seed, drop, steady })
}

/// Outage and recovery at one priority split.
pub fn run_timeline(cfg: &ExperimentConfig, base: &SteadyDrop, omega: [f64; 2]) -> Result<TimelineOutcome, CliError> {
    let attack = cfg.pilot_config();
    Ok(recover(
        &base.drop,
        &attack.without_attack(),
        &attack,
        base.steady.clone(),
        &cfg.targets().with_omega(omega[0], omega[1]),
        &cfg.p_max(),
        &cfg.sca_options(),
        &cfg.timeline_config(),
    )?)
}

#[derive(Debug)]
pub struct Experiment {
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

impl Experiment {
    pub fn failed_points(&self) -> usize {
        self.manifest.runs.iter().filter(|r| r.records == 0).count()
    }

    pub fn all_failed(&self) -> bool {
        self.manifest.drops.iter().all(|d| !d.ok)
    }
}

/// Every drop times every grid point. The omega grid costs one timeline per
/// point; the lambda grid rescores each trajectory. Timelines run in
/// parallel, files are written afterwards in a fixed order.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, sweep: bool) -> Result<Experiment, CliError> {
    let omegas = cfg.omega_grid(sweep);
    let lambdas = cfg.lambda_grid(sweep);
    let seeds = cfg.seeds();
    let items: Vec<(u64, usize)> = seeds.iter().flat_map(|&s| (0..omegas.len()).map(move |o| (s, o))).collect();
    let bases: Vec<Result<SteadyDrop, CliError>> = seeds.par_iter().map(|&s| steady_drop(cfg, s)).collect();
    let outcomes: Vec<Result<TimelineOutcome, String>> = items
        .par_iter()
        .map(|&(seed, o)| {
            let i = seeds.iter().position(|&s| s == seed).expect("seed listed");
            match &bases[i] {
                Ok(base) => run_timeline(cfg, base, omegas[o]).map_err(|e| e.to_string()),
                Err(e) => Err(format!("steady state: {e}")),
            }
        })
        .collect();

    fs::create_dir_all(out_dir.join("traces"))?;
    fs::create_dir_all(out_dir.join("allocations"))?;

    let mut drops: Vec<DropStatus> = seeds.iter().map(|&seed| DropStatus { seed, ok: true, errors: vec![] }).collect();
    let mut runs = Vec::new();
    for (&(seed, oi), outcome) in items.iter().zip(&outcomes) {
        let status = drops.iter_mut().find(|d| d.seed == seed).expect("seed listed");
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                status.ok = false;
                status.errors.push(format!("omega {:?}: {e}", omegas[oi]));
                continue;
            }
        };
        for (li, lambda) in lambdas.iter().enumerate() {
            let weights = ResilienceWeights::new(lambda[0], lambda[1], lambda[2])?;
            let mut trace = outcome.recovery.trace.rescore(weights)?;
            if cfg.resilience.clamp {
                trace = trace.clamped();
            }
            let trace_rel = trace_name(seed, oi, li);
            let mut file = fs::File::create(out_dir.join(&trace_rel))?;
            write_trace(&TraceTable::from(&trace), &mut file)?;

            let alloc_rel = allocation_name(seed, oi, li);
            let alloc = AllocationFile {
                seed,
                omega: omegas[oi],
                lambda: *lambda,
                steady: doc(outcome, &outcome.steady),
                best: trace.best_index.map(|i| doc(outcome, &outcome.recovery.snapshots[i])),
                last: outcome.recovery.last().map(|u| doc(outcome, u)),
            };
            write_json(&out_dir.join(&alloc_rel), &alloc)?;

            if let Some(f) = &trace.failure {
                status.errors.push(format!("omega {:?}: {f}", omegas[oi]));
            }
            runs.push(RunEntry {
                seed,
                omega: omegas[oi],
                lambda: *lambda,
                preset: cfg.preset,
                trace: trace_rel,
                allocation: alloc_rel,
                psi_steady: outcome.psi_steady,
                psi_t0: outcome.psi_t0,
                alpha_abs: trace.alpha_abs,
                records: trace.records.len(),
                best_index: trace.best_index,
                best_t_ms: trace.best().map(|r| r.t_ms),
                best_alpha_overall: trace.best().map(|r| r.alpha_overall),
                final_alpha_ada: trace.last().map(|r| r.alpha_ada),
                failure: trace.failure.clone(),
            });
        }
        if outcome.recovery.trace.records.is_empty() {
            status.ok = false;
        }
    }
    for d in &mut drops {
        d.errors.dedup();
    }

    let manifest = Manifest {
        command: if sweep { "sweep" } else { "run" }.to_string(),
        config_hash: cfg.hash(),
        preset: cfg.preset,
        seeds,
        trace_header: TRACE_HEADER.iter().map(|s| s.to_string()).collect(),
        t0_ms: cfg.resilience.t0_ms,
        t_d_ms: cfg.resilience.t_d_ms,
        clamped: cfg.resilience.clamp,
        drops,
        runs,
        config: cfg.clone(),
    };
    write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(Experiment { manifest, out_dir: out_dir.to_path_buf() })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("manifest: {e}")))
}

/// Geometry and gain summary of one drop.
#[derive(Debug, Clone, Serialize)]
pub struct DropSummary {
    pub seed: u64,
    pub aps: usize,
    pub users: usize,
    pub ap_positions: Vec<[f64; 2]>,
    pub user_positions: Vec<[f64; 2]>,
    pub eve_position: [f64; 2],
    pub eve_to_attacked_user_m: f64,
    /// `10 log10(beta)`, one row per AP.
    pub beta_users_db: Vec<Vec<f64>>,
    pub beta_eve_db: Vec<f64>,
    /// Users served by zero-forcing at each AP.
    pub strong_users: Vec<Vec<usize>>,
}

pub fn drop_summary(cfg: &ExperimentConfig, seed: u64) -> Result<DropSummary, CliError> {
    let drop = generate_drop(&cfg.scenario_config(), seed)?;
    let pilots = cfg.pilot_config();
    let stats = cfres_core::channel::estimation_quality(&drop, &pilots)?;
    let part = cfres_core::ppzf::partition_users(&stats, cfg.scenario.antennas, cfg.solver.threshold_fraction)?;
    let db = |v: f64| 10.0 * v.log10();
    let xy = |p: &cfres_core::Point| [p.x, p.y];
    Ok(DropSummary {
        seed,
        aps: drop.aps(),
        users: drop.users(),
        ap_positions: drop.ap_positions.iter().map(xy).collect(),
        user_positions: drop.user_positions.iter().map(xy).collect(),
        eve_position: xy(&drop.eve_position),
        eve_to_attacked_user_m: drop.eve_position.distance(&drop.user_positions[pilots.attacked_user]),
        beta_users_db: drop.beta_users.row_iter().map(|r| r.iter().map(|v| db(*v)).collect()).collect(),
        beta_eve_db: drop.beta_eve.iter().map(|v| db(*v)).collect(),
        strong_users: part.strong_sets.clone(),
    })
}
