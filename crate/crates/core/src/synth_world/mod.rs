//! Desk-scale synthetic driving world: a kinematic bicycle model tracked by
//! PID controllers rolls out expert (lane-follow) and dreamer
//! (instruction-conditioned) trajectories across six instruction classes.

mod bicycle;
mod control;
mod dataset;
mod scenario;
mod tokens;

pub use bicycle::{bicycle_step, EgoState};
pub use control::{PidGains, PidTracker};
pub use dataset::{build_dataset, generate_samples, load_dataset, DatasetHeader, DatasetSummary};
pub use scenario::{generate_scenario, WORD_LIST};
pub use tokens::scene_to_tokens;

use crate::grid_codec::Waypoint;
use serde::{Deserialize, Serialize};

/// Instruction classes of the dreaming benchmark.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrClass {
    Faster,
    Slower,
    TargetSpeed,
    LaneChange,
    Object,
    Stop,
}

impl InstrClass {
    pub const ALL: [InstrClass; 6] = [
        InstrClass::Faster,
        InstrClass::Slower,
        InstrClass::TargetSpeed,
        InstrClass::LaneChange,
        InstrClass::Object,
        InstrClass::Stop,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            InstrClass::Faster => "faster",
            InstrClass::Slower => "slower",
            InstrClass::TargetSpeed => "target_speed",
            InstrClass::LaneChange => "lane_change",
            InstrClass::Object => "object",
            InstrClass::Stop => "stop",
        }
    }
}

/// Static scene description; the visual context stand-in.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Scene {
    /// Lane centerlines as polylines, meters, ego frame.
    pub lanes: Vec<Vec<[f64; 2]>>,
    /// Objects as (class, x, y).
    pub objects: Vec<(String, f64, f64)>,
    /// Optional navigation target point.
    pub target_point: Option<[f64; 2]>,
}

/// One (scene, instruction, expert, dreamer) tuple.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sample {
    pub class: InstrClass,
    pub instruction: String,
    pub scene: Scene,
    pub expert_path: Vec<[f64; 2]>,
    pub expert_speed_wps: Vec<[f64; 2]>,
    pub dreamer_path: Vec<[f64; 2]>,
    pub dreamer_speed_wps: Vec<[f64; 2]>,
    pub target_speed: Option<f64>,
    pub seed: u64,
}

impl Sample {
    pub fn dreamer_path_wps(&self) -> Vec<Waypoint> {
        self.dreamer_path.iter().map(|&p| p.into()).collect()
    }
    pub fn dreamer_speed_waypoints(&self) -> Vec<Waypoint> {
        self.dreamer_speed_wps.iter().map(|&p| p.into()).collect()
    }
    pub fn expert_path_wps(&self) -> Vec<Waypoint> {
        self.expert_path.iter().map(|&p| p.into()).collect()
    }
    pub fn expert_speed_waypoints(&self) -> Vec<Waypoint> {
        self.expert_speed_wps.iter().map(|&p| p.into()).collect()
    }
}

/// Physical and sampling constants, frozen for reproducible acceptance runs.
#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub wheelbase: f64,
    pub a_max: f64,
    pub delta_max: f64,
    /// Simulation step.
    pub dt: f64,
    pub cruise: f64,
    pub lane_width: f64,
    /// Timebase of the 10 speed waypoints.
    pub speed_dt: f64,
    /// Rollout horizon; long enough to cover the 20 m nominal path.
    pub rollout_secs: f64,
    /// Nominal geometric path length covered by the 20 path waypoints.
    pub path_nominal_m: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            wheelbase: 2.9,
            a_max: 3.0,
            delta_max: 0.5,
            dt: 0.05,
            cruise: 6.0,
            lane_width: 3.5,
            speed_dt: 0.2,
            rollout_secs: 6.0,
            path_nominal_m: 20.0,
        }
    }
}
