//! Kinematic bicycle model.

use serde::{Deserialize, Serialize};

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    pub x: f64,
    pub y: f64,
    /// Heading, radians, 0 along +x.
    pub heading: f64,
    /// Forward speed, m/s, never negative.
    pub speed: f64,
}

impl EgoState {
    pub fn at_origin(speed: f64) -> Self {
        EgoState { x: 0.0, y: 0.0, heading: 0.0, speed }
    }
}

/// One explicit-Euler step of the kinematic bicycle:
/// position advances along the heading, the heading turns at
/// `v * tan(steer) / wheelbase`, and speed saturates at zero.
pub fn bicycle_step(s: EgoState, accel: f64, steer: f64, dt: f64, wheelbase: f64) -> EgoState {
    debug_assert!(dt > 0.0 && wheelbase > 0.0);
    EgoState {
        x: s.x + s.speed * s.heading.cos() * dt,
        y: s.y + s.speed * s.heading.sin() * dt,
        heading: s.heading + s.speed / wheelbase * steer.tan() * dt,
        speed: (s.speed + accel * dt).max(0.0),
    }
}
