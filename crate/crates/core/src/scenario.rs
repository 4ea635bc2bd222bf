//! Random network drops and large-scale fading.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distances below this are treated as this value before evaluating path loss.
pub const MIN_DISTANCE_M: f64 = 1.0;

/// A 2-D position in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Geometry and propagation parameters of the simulated area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
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

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area_side_m: 1000.0,
            aps: 40,
            antennas: 4,
            users: 10,
            eve_radius_m: 100.0,
            pathloss_intercept_db: -30.5,
            pathloss_exponent_db_per_decade: 36.7,
            shadow_sigma_db: 4.0,
            noise_power_dbm: -96.0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("area_side_m", self.area_side_m),
            ("eve_radius_m", self.eve_radius_m),
            ("pathloss_intercept_db", self.pathloss_intercept_db),
            ("pathloss_exponent_db_per_decade", self.pathloss_exponent_db_per_decade),
            ("shadow_sigma_db", self.shadow_sigma_db),
            ("noise_power_dbm", self.noise_power_dbm),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(Error::InvalidConfig(format!("scenario.{name} must be finite")));
            }
        }
        if self.aps < 1 {
            return Err(Error::InvalidConfig("scenario.aps must be at least 1".into()));
        }
        if self.antennas < 2 {
            return Err(Error::InvalidConfig("scenario.antennas must be at least 2".into()));
        }
        if self.users < 1 {
            return Err(Error::InvalidConfig("scenario.users must be at least 1".into()));
        }
        if self.area_side_m <= 0.0 {
            return Err(Error::InvalidConfig("scenario.area_side_m must be positive".into()));
        }
        if self.eve_radius_m < 0.0 {
            return Err(Error::InvalidConfig("scenario.eve_radius_m must be non-negative".into()));
        }
        if self.shadow_sigma_db < 0.0 {
            return Err(Error::InvalidConfig("scenario.shadow_sigma_db must be non-negative".into()));
        }
        Ok(())
    }

    /// Path loss in dB at `distance_m`, clamped below at [`MIN_DISTANCE_M`].
    pub fn path_loss_db(&self, distance_m: f64) -> f64 {
        log_distance_path_loss_db(
            distance_m,
            self.pathloss_intercept_db,
            self.pathloss_exponent_db_per_decade,
        )
    }

    /// Linear gain relative to the noise power for a link with the given
    /// path loss and shadowing realization (both in dB).
    pub fn gain_over_noise(&self, path_loss_db: f64, shadow_db: f64) -> f64 {
        10f64.powf((path_loss_db + shadow_db - self.noise_power_dbm) / 10.0)
    }
}

/// Default urban micro model: `-30.5 - 36.7 log10(d / 1 m)`.
pub fn path_loss_db(distance_m: f64) -> f64 {
    log_distance_path_loss_db(distance_m, -30.5, 36.7)
}

fn log_distance_path_loss_db(distance_m: f64, intercept_db: f64, slope_db: f64) -> f64 {
    let d = distance_m.max(MIN_DISTANCE_M);
    intercept_db - slope_db * d.log10()
}

/// One random placement of APs, users and the eavesdropper.
///
/// Gains are linear and relative to the noise power, in units of 1/mW, so a
/// transmit power in mW times a gain is an SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDrop {
    pub ap_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    pub eve_position: Point,
    /// `aps x users`.
    pub beta_users: DMatrix<f64>,
    /// One entry per AP.
    pub beta_eve: DVector<f64>,
}

impl NetworkDrop {
    pub fn aps(&self) -> usize {
        self.beta_users.nrows()
    }

    pub fn users(&self) -> usize {
        self.beta_users.ncols()
    }
}

/// Draws a drop. Identical `(config, seed)` pairs give bit-identical drops.
///
/// APs and users are uniform over the square; the eavesdropper is uniform
/// over the disc of radius `eve_radius_m` around the first user and may land
/// outside the square.
pub fn generate_drop(config: &ScenarioConfig, seed: u64) -> Result<NetworkDrop> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = config.area_side_m;

    let uniform_point = |rng: &mut ChaCha8Rng| {
        Point::new(rng.gen::<f64>() * side, rng.gen::<f64>() * side)
    };
    let ap_positions: Vec<Point> = (0..config.aps).map(|_| uniform_point(&mut rng)).collect();
    let user_positions: Vec<Point> = (0..config.users).map(|_| uniform_point(&mut rng)).collect();

    let radius = config.eve_radius_m * rng.gen::<f64>().sqrt();
    let angle = 2.0 * PI * rng.gen::<f64>();
    let anchor = user_positions[0];
    let eve_position = Point::new(anchor.x + radius * angle.cos(), anchor.y + radius * angle.sin());

    let sigma = config.shadow_sigma_db;
    let shadow = |rng: &mut ChaCha8Rng| sigma * rng.sample::<f64, _>(StandardNormal);

    let mut beta_users = DMatrix::zeros(config.aps, config.users);
    for l in 0..config.aps {
        for k in 0..config.users {
            let pl = config.path_loss_db(ap_positions[l].distance(&user_positions[k]));
            beta_users[(l, k)] = config.gain_over_noise(pl, shadow(&mut rng));
        }
    }
    let beta_eve = DVector::from_iterator(
        config.aps,
        ap_positions.iter().map(|ap| {
            let pl = config.path_loss_db(ap.distance(&eve_position));
            config.gain_over_noise(pl, shadow(&mut rng))
        }),
    );

    Ok(NetworkDrop { ap_positions, user_positions, eve_position, beta_users, beta_eve })
}
