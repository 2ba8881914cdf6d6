//! Instruction-following success scoring: per-class rules over predicted
//! (path, speed waypoint) blocks, plus dataset-level aggregation.
//!
//! All rules are relative comparisons against the sample's own expert and
//! dreamer trajectories, so uniform translations of all three never change
//! a verdict. Ties on strict inequalities count as failures.

use crate::error::{Error, Result};
use crate::grid_codec::Waypoint;
use crate::synth_world::{InstrClass, Sample};
use crate::util::{mean, point_at_arclength, polyline_length};
use serde::Serialize;

#[derive(Copy, Clone, Debug)]
pub struct EvalParams {
    /// Timebase of the speed waypoints, seconds.
    pub dt: f64,
    /// Faster/Slower slope threshold as a fraction of the initial speed.
    pub faster_slope_frac: f64,
    /// Relative band for target-speed matching.
    pub target_band: f64,
    /// ADE gate separating the two object sub-rules, meters.
    pub object_ade_gate: f64,
    /// Relative band for the object speed rule.
    pub object_speed_band: f64,
    /// Stop threshold on the minimum predicted speed, m/s.
    pub stop_speed: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            dt: 0.2,
            faster_slope_frac: 0.05,
            target_band: 0.20,
            object_ade_gate: 1.0,
            object_speed_band: 0.30,
            stop_speed: 0.1,
        }
    }
}

impl EvalParams {
    pub fn with_dt(dt: f64) -> Self {
        EvalParams { dt, ..EvalParams::default() }
    }
}

/// A predicted trajectory block, shaped like the dataset's dreamer block.
#[derive(Clone, Debug)]
pub struct Prediction {
    pub path: Vec<Waypoint>,
    pub speed_wps: Vec<Waypoint>,
}

/// Verdict with the computed quantities that decided it.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub class: InstrClass,
    pub success: bool,
    pub detail: String,
}

/// Consecutive-gap speeds: `v_i = |w_{i+1} - w_i| / dt`.
pub fn speeds_from_waypoints(wps: &[Waypoint], dt: f64) -> Vec<f64> {
    assert!(wps.len() >= 2 && dt > 0.0);
    wps.windows(2).map(|w| w[0].dist(&w[1]) / dt).collect()
}

/// Ordinary least squares slope of speeds against t_i = i * dt.
pub fn regression_slope(speeds: &[f64], dt: f64) -> f64 {
    assert!(speeds.len() >= 2);
    let n = speeds.len() as f64;
    let mean_t = dt * (n - 1.0) / 2.0;
    let mean_v = mean(speeds);
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, v) in speeds.iter().enumerate() {
        let t = i as f64 * dt;
        num += (t - mean_t) * (v - mean_v);
        den += (t - mean_t) * (t - mean_t);
    }
    num / den
}

/// Average displacement error. Unequal lengths resample the longer
/// trajectory to the shorter's point count, uniformly in arc length.
pub fn ade(a: &[Waypoint], b: &[Waypoint]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let long_resampled: Vec<Waypoint> = if short.len() == long.len() {
        long.to_vec()
    } else {
        let pts: Vec<(f64, f64)> = long.iter().map(|w| (w.x, w.y)).collect();
        let total = polyline_length(&pts);
        let n = short.len();
        (0..n)
            .map(|i| {
                let f = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                let p = point_at_arclength(&pts, total * f);
                Waypoint::new(p.0, p.1)
            })
            .collect()
    };
    mean(
        &short
            .iter()
            .zip(long_resampled.iter())
            .map(|(p, q)| p.dist(q))
            .collect::<Vec<_>>(),
    )
}

/// Speed from the last two waypoints of a block.
fn final_speed(wps: &[Waypoint], dt: f64) -> f64 {
    wps[wps.len() - 2].dist(&wps[wps.len() - 1]) / dt
}

fn within_band(v: f64, reference: f64, band: f64) -> bool {
    (v - reference).abs() <= band * reference.abs()
}

/// Apply the sample's class rule to a prediction.
pub fn evaluate_sample(pred: &Prediction, sample: &Sample, params: &EvalParams) -> Result<Verdict> {
    if pred.path.len() != sample.dreamer_path.len()
        || pred.speed_wps.len() != sample.dreamer_speed_wps.len()
    {
        return Err(Error::data(format!(
            "prediction block lengths {}+{} do not match sample {}+{}",
            pred.path.len(),
            pred.speed_wps.len(),
            sample.dreamer_path.len(),
            sample.dreamer_speed_wps.len()
        )));
    }
    let dreamer_speeds = speeds_from_waypoints(&sample.dreamer_speed_waypoints(), params.dt);
    let pred_speeds = speeds_from_waypoints(&pred.speed_wps, params.dt);

    let v = match sample.class {
        InstrClass::Faster | InstrClass::Slower => dreamer_speeds[0],
        _ => 0.0,
    };

    let (success, detail) = match sample.class {
        InstrClass::Faster => {
            let s = regression_slope(&pred_speeds, params.dt);
            (
                s > params.faster_slope_frac * v,
                format!("slope {s:.3} vs threshold {:.3}", params.faster_slope_frac * v),
            )
        }
        InstrClass::Slower => {
            let s = regression_slope(&pred_speeds, params.dt);
            (
                s < -params.faster_slope_frac * v,
                format!("slope {s:.3} vs threshold {:.3}", -params.faster_slope_frac * v),
            )
        }
        InstrClass::TargetSpeed => {
            let target = sample.target_speed.ok_or_else(|| {
                Error::data("target_speed sample without an instructed target")
            })?;
            let v_pred = final_speed(&pred.speed_wps, params.dt);
            let v_gt = final_speed(&sample.dreamer_speed_waypoints(), params.dt);
            let ok = within_band(v_pred, target, params.target_band)
                || within_band(v_pred, v_gt, params.target_band);
            (
                ok,
                format!("final speed {v_pred:.2} vs instructed {target:.2} / achieved {v_gt:.2}"),
            )
        }
        InstrClass::LaneChange => {
            let p = *pred.path.last().unwrap();
            let d = p.dist(sample.dreamer_path.last().map(|&w| w.into()).as_ref().unwrap());
            let e = p.dist(sample.expert_path.last().map(|&w| w.into()).as_ref().unwrap());
            (d < e, format!("final point {d:.2} m from dreamer, {e:.2} m from expert"))
        }
        InstrClass::Stop => {
            let v_min = pred_speeds.iter().cloned().fold(f64::INFINITY, f64::min);
            (v_min < params.stop_speed, format!("min speed {v_min:.3}"))
        }
        InstrClass::Object => {
            let expert = sample.expert_path_wps();
            let dreamer = sample.dreamer_path_wps();
            let split = ade(&expert, &dreamer);
            if split > params.object_ade_gate {
                let to_expert = ade(&pred.path, &expert);
                let to_dreamer = ade(&pred.path, &dreamer);
                (
                    to_expert > to_dreamer,
                    format!("paths split ({split:.2}); pred ADE expert {to_expert:.2} vs dreamer {to_dreamer:.2}"),
                )
            } else {
                let to_dreamer = ade(&pred.path, &dreamer);
                let mp = mean(&pred_speeds);
                let md = mean(&dreamer_speeds);
                (
                    to_dreamer < params.object_ade_gate
                        && within_band(mp, md, params.object_speed_band),
                    format!("paths close ({split:.2}); pred ADE {to_dreamer:.2}, mean speed {mp:.2} vs dreamer {md:.2}"),
                )
            }
        }
    };
    Ok(Verdict { class: sample.class, success, detail })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassRate {
    pub class: String,
    pub n: usize,
    pub successes: usize,
    /// None when the class is absent from the dataset.
    pub rate: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub per_class: Vec<ClassRate>,
    /// Unweighted mean over classes present in the dataset.
    pub mean_rate: f64,
    pub n_total: usize,
}

impl EvalReport {
    pub fn rate_of(&self, class: InstrClass) -> Option<f64> {
        self.per_class
            .iter()
            .find(|r| r.class == class.name())
            .and_then(|r| r.rate)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,n,successes,rate\n");
        for r in &self.per_class {
            let rate = r.rate.map_or("N/A".to_string(), |x| format!("{x:.4}"));
            out.push_str(&format!("{},{},{},{}\n", r.class, r.n, r.successes, rate));
        }
        out.push_str(&format!("mean,{},,{:.4}\n", self.n_total, self.mean_rate));
        out
    }
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:<14}{:>6}{:>10}{:>9}", "class", "n", "success", "rate")?;
        for r in &self.per_class {
            let rate = r.rate.map_or("N/A".into(), |x| format!("{:.1}%", 100.0 * x));
            writeln!(f, "{:<14}{:>6}{:>10}{:>9}", r.class, r.n, r.successes, rate)?;
        }
        writeln!(f, "{:<14}{:>6}{:>10}{:>9.1}", "mean", self.n_total, "", 100.0 * self.mean_rate)
    }
}

/// Score a batch of predictions paired with their samples.
pub fn evaluate_dataset(
    preds: &[Prediction],
    samples: &[Sample],
    params: &EvalParams,
) -> Result<EvalReport> {
    if preds.len() != samples.len() {
        return Err(Error::data(format!(
            "{} predictions for {} samples",
            preds.len(),
            samples.len()
        )));
    }
    let mut counts = vec![(0usize, 0usize); InstrClass::ALL.len()];
    for (p, s) in preds.iter().zip(samples) {
        let v = evaluate_sample(p, s, params)?;
        let slot = InstrClass::ALL.iter().position(|c| *c == s.class).unwrap();
        counts[slot].0 += 1;
        if v.success {
            counts[slot].1 += 1;
        }
    }
    let per_class: Vec<ClassRate> = InstrClass::ALL
        .iter()
        .zip(&counts)
        .map(|(c, &(n, ok))| ClassRate {
            class: c.name().to_string(),
            n,
            successes: ok,
            rate: if n > 0 { Some(ok as f64 / n as f64) } else { None },
        })
        .collect();
    let present: Vec<f64> = per_class.iter().filter_map(|r| r.rate).collect();
    Ok(EvalReport {
        mean_rate: mean(&present),
        n_total: samples.len(),
        per_class,
    })
}
