//! Experiment configuration: a TOML tree whose every key has a default.

use std::fmt;
use std::path::Path;

use cfres_core::resilience::{ClockMode, RecoveryStrategy, ResilienceWeights, TimelineConfig};
use cfres_core::sca::RateEncoding;
use cfres_core::{PilotConfig, ScaOptions, ScenarioConfig, ServiceTargets};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Preset {
    /// Resilience-aware SCA with artificial noise.
    Full,
    /// Optimized power, no artificial noise.
    OpaNoAn,
    /// Equal user power plus a fixed artificial-noise share, no optimization.
    EpaAn,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Full => "full",
            Preset::OpaNoAn => "opa_no_an",
            Preset::EpaAn => "epa_an",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ClockKind {
    Wall,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub scenario: ScenarioSection,
    pub pilots: PilotSection,
    pub targets: TargetSection,
    pub power: PowerSection,
    pub resilience: ResilienceSection,
    pub solver: SolverSection,
    pub baseline: BaselineSection,
    pub sweep: SweepSection,
    pub drops: DropSection,
    pub validate: ValidateSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Full,
            scenario: ScenarioSection::default(),
            pilots: PilotSection::default(),
            targets: TargetSection::default(),
            power: PowerSection::default(),
            resilience: ResilienceSection::default(),
            solver: SolverSection::default(),
            baseline: BaselineSection::default(),
            sweep: SweepSection::default(),
            drops: DropSection::default(),
            validate: ValidateSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub area_side_m: f64,
    pub aps: usize,
    pub antennas: usize,
    pub users: usize,
    pub eve_radius_m: f64,
    pub pathloss_intercept_db: f64,
    pub pathloss_exponent_db_per_decade: f64,
    pub shadow_sigma_db: f64,
    pub noise_power_dbm: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        Self {
            area_side_m: s.area_side_m,
            aps: s.aps,
            antennas: s.antennas,
            users: s.users,
            eve_radius_m: s.eve_radius_m,
            pathloss_intercept_db: s.pathloss_intercept_db,
            pathloss_exponent_db_per_decade: s.pathloss_exponent_db_per_decade,
            shadow_sigma_db: s.shadow_sigma_db,
            noise_power_dbm: s.noise_power_dbm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PilotSection {
    /// Pilot length; defaults to the number of users.
    pub tau_p: Option<usize>,
    pub user_power_mw: f64,
    pub eve_power_mw: f64,
    pub attacked_user: usize,
}

impl Default for PilotSection {
    fn default() -> Self {
        Self {
            tau_p: None,
            user_power_mw: cfres_core::channel::DEFAULT_PILOT_POWER_MW,
            eve_power_mw: cfres_core::channel::DEFAULT_PILOT_POWER_MW,
            attacked_user: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSection {
    /// bit/s/Hz.
    pub sse_des: f64,
    pub se_des: f64,
    pub se_min: f64,
    pub omega: [f64; 2],
}

impl Default for TargetSection {
    fn default() -> Self {
        Self { sse_des: 3.0, se_des: 5.0, se_min: 0.1, omega: [0.5, 0.5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerSection {
    /// Per-AP budget.
    pub p_max_mw: f64,
}

impl Default for PowerSection {
    fn default() -> Self {
        Self { p_max_mw: 200.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResilienceSection {
    pub lambda: [f64; 3],
    pub t0_ms: f64,
    pub t_d_ms: f64,
    pub n_max: usize,
    pub steady_max_iter: usize,
    pub clock: ClockKind,
    pub clock_step_ms: f64,
    /// Clamp absorption and adaptation to [0, 1] in the written traces.
    pub clamp: bool,
}

impl Default for ResilienceSection {
    fn default() -> Self {
        let t = TimelineConfig::default();
        Self {
            lambda: [0.0, 1.0, 0.0],
            t0_ms: t.t0_ms,
            t_d_ms: t.t_d_ms,
            n_max: t.n_max,
            steady_max_iter: t.steady_max_iter,
            clock: ClockKind::Fixed,
            clock_step_ms: cfres_core::resilience::DEFAULT_STEP_MS,
            clamp: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateEncodingKind {
    ExpCone,
    PiecewiseLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tolerance: f64,
    pub max_iter: u32,
    pub stop_tolerance: f64,
    pub threshold_fraction: f64,
    pub epsilon_floor_mw: f64,
    pub x_floor_factor: f64,
    pub denominator_floor: f64,
    pub rate_encoding: RateEncodingKind,
    pub pwl_segments: usize,
    pub pwl_g_max: f64,
    pub overshoot_guard: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = ScaOptions::default();
        Self {
            tolerance: o.solver_tolerance,
            max_iter: o.solver_max_iter,
            stop_tolerance: o.stop_tolerance,
            threshold_fraction: 0.1,
            epsilon_floor_mw: o.epsilon_floor,
            x_floor_factor: o.x_floor_factor,
            denominator_floor: o.denominator_floor,
            rate_encoding: RateEncodingKind::ExpCone,
            pwl_segments: 64,
            pwl_g_max: 1e5,
            overshoot_guard: o.overshoot_guard,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    /// Share of each AP budget spent on AN under `epa_an`; `1 / (K + 1)`
    /// when unset.
    pub an_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub omega: Option<Vec<[f64; 2]>>,
    pub lambda: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DropSection {
    pub count: usize,
    pub base_seed: u64,
}

impl Default for DropSection {
    fn default() -> Self {
        Self { count: 10, base_seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    pub aps: usize,
    pub users: usize,
    pub area_side_m: f64,
    pub samples: usize,
    pub seed: u64,
    pub standard_errors: f64,
    /// Large-scale gains of the single-link grid instance.
    pub grid_beta_user: f64,
    pub grid_beta_eve: f64,
    pub grid_steps: usize,
    pub grid_sca_iter: usize,
    pub grid_max_gap: f64,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self {
            aps: 2,
            users: 3,
            area_side_m: 200.0,
            samples: 100_000,
            seed: 0,
            standard_errors: 5.0,
            grid_beta_user: 0.5,
            grid_beta_eve: 0.2,
            grid_steps: 1000,
            grid_sca_iter: 100,
            grid_max_gap: 0.01,
        }
    }
}

fn invalid(path: &str, message: impl fmt::Display) -> CliError {
    CliError::Config { path: path.to_string(), message: message.to_string() }
}

fn check_weights(path: &str, l: [f64; 3]) -> Result<ResilienceWeights, CliError> {
    ResilienceWeights::new(l[0], l[1], l[2]).map_err(|e| invalid(path, e))
}

fn check_omega(path: &str, w: [f64; 2]) -> Result<(), CliError> {
    if !(w[0] >= 0.0 && w[1] >= 0.0) || (w[0] + w[1] - 1.0).abs() > 1e-9 {
        return Err(invalid(path, format!("{w:?} must be non-negative and sum to one")));
    }
    Ok(())
}

fn check_positive(path: &str, v: f64) -> Result<(), CliError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(path, format!("{v} must be positive and finite")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::new(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config { path, message: e.into_inner().message().trim().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.scenario_config().validate().map_err(|e| invalid("scenario", e))?;
        let users = self.scenario.users;
        self.pilot_config().validate(users).map_err(|e| invalid("pilots", e))?;
        if self.pilots.eve_power_mw <= 0.0 {
            return Err(invalid("pilots.eve_power_mw", "the outage needs an active eavesdropper"));
        }
        self.targets().validate(users).map_err(|e| invalid("targets", e))?;
        check_omega("targets.omega", self.targets.omega)?;
        check_positive("power.p_max_mw", self.power.p_max_mw)?;

        let r = &self.resilience;
        check_weights("resilience.lambda", r.lambda)?;
        check_positive("resilience.t_d_ms", r.t_d_ms)?;
        check_positive("resilience.clock_step_ms", r.clock_step_ms)?;
        if !r.t0_ms.is_finite() {
            return Err(invalid("resilience.t0_ms", "must be finite"));
        }
        if r.n_max == 0 {
            return Err(invalid("resilience.n_max", "must be at least 1"));
        }

        let s = &self.solver;
        if !(s.threshold_fraction > 0.0 && s.threshold_fraction <= 1.0) {
            return Err(invalid("solver.threshold_fraction", "must lie in (0, 1]"));
        }
        self.sca_options().validate().map_err(|e| invalid("solver", e))?;

        if let Some(f) = self.baseline.an_fraction {
            if !(0.0..1.0).contains(&f) {
                return Err(invalid("baseline.an_fraction", format!("{f} outside [0, 1)")));
            }
        }
        if let Some(grid) = &self.sweep.omega {
            if grid.is_empty() {
                return Err(invalid("sweep.omega", "grid must not be empty"));
            }
            for (i, w) in grid.iter().enumerate() {
                check_omega(&format!("sweep.omega[{i}]"), *w)?;
            }
        }
        if let Some(grid) = &self.sweep.lambda {
            if grid.is_empty() {
                return Err(invalid("sweep.lambda", "grid must not be empty"));
            }
            for (i, l) in grid.iter().enumerate() {
                check_weights(&format!("sweep.lambda[{i}]"), *l)?;
            }
        }
        if self.drops.count == 0 {
            return Err(invalid("drops.count", "must be at least 1"));
        }
        let v = &self.validate;
        if v.aps == 0 || v.aps > 4 || v.users == 0 || v.users > 4 {
            return Err(invalid("validate", "oracle instance is limited to 1..=4 APs and users"));
        }
        if v.samples < 2 || v.grid_steps == 0 {
            return Err(invalid("validate", "samples must be at least 2 and grid_steps at least 1"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization; formatting, key order and
    /// spelled-out defaults do not change it.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("configuration serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn scenario_config(&self) -> ScenarioConfig {
        let s = &self.scenario;
        ScenarioConfig {
            area_side_m: s.area_side_m,
            aps: s.aps,
            antennas: s.antennas,
            users: s.users,
            eve_radius_m: s.eve_radius_m,
            pathloss_intercept_db: s.pathloss_intercept_db,
            pathloss_exponent_db_per_decade: s.pathloss_exponent_db_per_decade,
            shadow_sigma_db: s.shadow_sigma_db,
            noise_power_dbm: s.noise_power_dbm,
        }
    }

    /// Pilots during the attack.
    pub fn pilot_config(&self) -> PilotConfig {
        let p = &self.pilots;
        let users = self.scenario.users;
        PilotConfig {
            tau_p: p.tau_p.unwrap_or(users),
            p_users: vec![p.user_power_mw; users],
            p_eve: p.eve_power_mw,
            attacked_user: p.attacked_user,
        }
    }

    pub fn targets(&self) -> ServiceTargets {
        let t = &self.targets;
        ServiceTargets::uniform(self.scenario.users, t.sse_des, t.se_des, t.se_min, (t.omega[0], t.omega[1]))
    }

    pub fn weights(&self) -> ResilienceWeights {
        let l = self.resilience.lambda;
        ResilienceWeights { lambda1: l[0], lambda2: l[1], lambda3: l[2] }
    }

    pub fn p_max(&self) -> Vec<f64> {
        vec![self.power.p_max_mw; self.scenario.aps]
    }

    pub fn sca_options(&self) -> ScaOptions {
        let s = &self.solver;
        ScaOptions {
            solver_tolerance: s.tolerance,
            solver_max_iter: s.max_iter,
            stop_tolerance: s.stop_tolerance,
            epsilon_floor: s.epsilon_floor_mw,
            x_floor_factor: s.x_floor_factor,
            denominator_floor: s.denominator_floor,
            rate_encoding: match s.rate_encoding {
                RateEncodingKind::ExpCone => RateEncoding::ExpCone,
                RateEncodingKind::PiecewiseLinear => {
                    RateEncoding::PiecewiseLinear { segments: s.pwl_segments, g_max: s.pwl_g_max }
                }
            },
            overshoot_guard: s.overshoot_guard,
            artificial_noise: self.preset != Preset::OpaNoAn,
        }
    }

    pub fn an_fraction(&self) -> f64 {
        self.baseline.an_fraction.unwrap_or(1.0 / (self.scenario.users as f64 + 1.0))
    }

    pub fn clock_mode(&self) -> ClockMode {
        match self.resilience.clock {
            ClockKind::Wall => ClockMode::Wall,
            ClockKind::Fixed => ClockMode::Fixed { step_ms: self.resilience.clock_step_ms },
        }
    }

    pub fn timeline_config(&self) -> TimelineConfig {
        let r = &self.resilience;
        TimelineConfig {
            t0_ms: r.t0_ms,
            t_d_ms: r.t_d_ms,
            n_max: r.n_max,
            steady_max_iter: r.steady_max_iter,
            weights: self.weights(),
            clock: self.clock_mode(),
            antennas: self.scenario.antennas,
            threshold_fraction: self.solver.threshold_fraction,
            strategy: match self.preset {
                Preset::EpaAn => RecoveryStrategy::EqualSplit { an_fraction: self.an_fraction() },
                Preset::Full | Preset::OpaNoAn => RecoveryStrategy::Optimize,
            },
        }
    }

    /// Priority weights to run: the sweep grid, or the single configured pair.
    pub fn omega_grid(&self, sweep: bool) -> Vec<[f64; 2]> {
        match (&self.sweep.omega, sweep) {
            (Some(g), true) => g.clone(),
            _ => vec![self.targets.omega],
        }
    }

    pub fn lambda_grid(&self, sweep: bool) -> Vec<[f64; 3]> {
        match (&self.sweep.lambda, sweep) {
            (Some(g), true) => g.clone(),
            _ => vec![self.resilience.lambda],
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.drops.count as u64).map(|i| self.drops.base_seed + i).collect()
    }
}
