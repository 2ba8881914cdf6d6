//! Bidirectional mapping between continuous BEV waypoints and discrete
//! action tokens over a signed-log non-uniform grid.
//!
//! Each coordinate is transformed with `sign(z) * ln(1 + k * |z|)` and the
//! transformed plane is quantized into uniform cells of width `step`.
//! Resolution is therefore finest near the ego vehicle and widens with
//! distance. Token ids enumerate cells row-major, x-major:
//! `id = i_x * n_y + i_y`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A 2D point in meters, ego frame: x forward, y left-positive.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
}

impl Waypoint {
    pub const ORIGIN: Waypoint = Waypoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Waypoint { x, y }
    }

    pub fn dist(&self, other: &Waypoint) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

impl From<Waypoint> for [f64; 2] {
    fn from(w: Waypoint) -> Self {
        [w.x, w.y]
    }
}

impl From<[f64; 2]> for Waypoint {
    fn from(a: [f64; 2]) -> Self {
        Waypoint { x: a[0], y: a[1] }
    }
}

/// Discrete action token: an index into the flattened grid, `[0, K_action)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionTokenId(pub u32);

/// Grid geometry: metric ranges, signed-log scale `k`, and the cell width
/// `step` in transformed space.
///
/// Cell counts follow `n = floor((T(max) - T(min)) / step) + 1` per axis;
/// indices are assigned by `floor` with clamping at the boundary cells.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub k: f64,
    pub step: f64,
}

impl Default for GridSpec {
    /// The reference configuration: x in [0, 50] m, y in [-30, 30] m,
    /// k = 5, step = 0.1, giving a 56 x 101 grid of 5,656 cells.
    fn default() -> Self {
        GridSpec {
            x_min: 0.0,
            x_max: 50.0,
            y_min: -30.0,
            y_max: 30.0,
            k: 5.0,
            step: 0.1,
        }
    }
}

/// Signed logarithmic coordinate transform: `sign(z) * ln(1 + k * |z|)`.
/// Odd and strictly increasing in `z`.
pub fn log_transform(z: f64, k: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::numeric(format!("log_transform: non-finite input {z}")));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::numeric(format!("log_transform: scale k must be positive, got {k}")));
    }
    Ok(z.signum() * (1.0 + k * z.abs()).ln())
}

/// Inverse of [`log_transform`]: `sign(t) * (exp(|t|) - 1) / k`.
pub fn inverse_log_transform(zt: f64, k: f64) -> Result<f64> {
    if !zt.is_finite() {
        return Err(Error::numeric(format!(
            "inverse_log_transform: non-finite input {zt}"
        )));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::numeric(format!(
            "inverse_log_transform: scale k must be positive, got {k}"
        )));
    }
    Ok(zt.signum() * (zt.abs().exp() - 1.0) / k)
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.x_min < self.x_max
            && self.y_min < self.y_max
            && self.k > 0.0
            && self.step > 0.0
            && [self.x_min, self.x_max, self.y_min, self.y_max, self.k, self.step]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::usage(format!("invalid grid spec: {self:?}")))
        }
    }

    fn t(&self, z: f64) -> f64 {
        z.signum() * (1.0 + self.k * z.abs()).ln()
    }

    fn t_inv(&self, zt: f64) -> f64 {
        zt.signum() * (zt.abs().exp() - 1.0) / self.k
    }

    /// Cell count along x.
    pub fn n_x(&self) -> usize {
        ((self.t(self.x_max) - self.t(self.x_min)) / self.step).floor() as usize + 1
    }

    /// Cell count along y.
    pub fn n_y(&self) -> usize {
        ((self.t(self.y_max) - self.t(self.y_min)) / self.step).floor() as usize + 1
    }

    /// Total number of action tokens.
    pub fn k_action(&self) -> usize {
        self.n_x() * self.n_y()
    }

    fn axis_index(&self, z: f64, z_min: f64, z_max: f64, n: usize) -> usize {
        // NaN-safe clamp: f64::max/min pick the non-NaN operand.
        let z = z.max(z_min).min(z_max);
        let i = ((self.t(z) - self.t(z_min)) / self.step).floor();
        (i.max(0.0) as usize).min(n - 1)
    }

    fn axis_center(&self, i: usize, z_min: f64, z_max: f64) -> f64 {
        let center_t = self.t(z_min) + (i as f64 + 0.5) * self.step;
        // Boundary cell centers can overshoot the metric range; clamp so
        // decoded waypoints stay inside the declared BEV box.
        self.t_inv(center_t).clamp(z_min, z_max)
    }

    /// Split a token id into its `(i_x, i_y)` cell coordinates.
    pub fn cell_of(&self, id: ActionTokenId) -> Result<(usize, usize)> {
        let (n_x, n_y) = (self.n_x(), self.n_y());
        let idx = id.0 as usize;
        if idx >= n_x * n_y {
            return Err(Error::data(format!(
                "action token {idx} out of range (K_action = {})",
                n_x * n_y
            )));
        }
        Ok((idx / n_y, idx % n_y))
    }

    pub fn id_of(&self, i_x: usize, i_y: usize) -> ActionTokenId {
        ActionTokenId((i_x * self.n_y() + i_y) as u32)
    }
}

/// Quantize a waypoint to its action token. Total: out-of-range waypoints
/// clamp to the boundary cells.
pub fn tokenize_waypoint(w: Waypoint, spec: &GridSpec) -> ActionTokenId {
    let (n_x, n_y) = (spec.n_x(), spec.n_y());
    let i_x = spec.axis_index(w.x, spec.x_min, spec.x_max, n_x);
    let i_y = spec.axis_index(w.y, spec.y_min, spec.y_max, n_y);
    ActionTokenId((i_x * n_y + i_y) as u32)
}

/// Decode a token to the metric center of its grid cell.
pub fn detokenize(id: ActionTokenId, spec: &GridSpec) -> Result<Waypoint> {
    let (i_x, i_y) = spec.cell_of(id)?;
    Ok(Waypoint {
        x: spec.axis_center(i_x, spec.x_min, spec.x_max),
        y: spec.axis_center(i_y, spec.y_min, spec.y_max),
    })
}

/// `(n_x, n_y, K_action)` for a validated spec.
pub fn grid_size(spec: &GridSpec) -> Result<(usize, usize, usize)> {
    spec.validate()?;
    Ok((spec.n_x(), spec.n_y(), spec.k_action()))
}

/// Tokenize a whole waypoint sequence.
pub fn tokenize_path(wps: &[Waypoint], spec: &GridSpec) -> Vec<ActionTokenId> {
    wps.iter().map(|w| tokenize_waypoint(*w, spec)).collect()
}

/// Detokenize a whole token sequence.
pub fn detokenize_path(ids: &[ActionTokenId], spec: &GridSpec) -> Result<Vec<Waypoint>> {
    ids.iter().map(|id| detokenize(*id, spec)).collect()
}
