//! Randomized scenario construction: scene layout, instruction text, and
//! expert/dreamer rollouts, gated by the per-class success rules so every
//! emitted sample is self-consistent.

use super::bicycle::{bicycle_step, EgoState};
use super::control::{PidGains, PidTracker};
use super::{InstrClass, Sample, Scene, WorldConfig};
use crate::dreaming_eval::{evaluate_sample, EvalParams, Prediction};
use crate::error::{Error, Result};
use crate::grid_codec::GridSpec;
use crate::sequence_builder::{PATH_LEN, SPEED_LEN};
use crate::util::{point_at_arclength, polyline_length, Rng};

/// Every word the instruction templates can produce; the codebook is built
/// from this list.
pub const WORD_LIST: &[&str] = &[
    "a", "at", "bring", "car", "change", "come", "down", "drive", "faster", "go", "halt", "head",
    "increase", "keep", "lane", "left", "make", "meters", "move", "nearest", "now", "obstacle",
    "of", "per", "please", "reduce", "right", "second", "set", "slow", "slower", "speed", "steer",
    "stop", "the", "to", "towards", "up", "your", "2", "3", "4", "5", "7", "8",
];

struct LaneSet {
    /// Centerlines indexed left-to-right; each is (s, point, heading) sampled
    /// every `DS` meters.
    lanes: Vec<Vec<(f64, f64)>>,
    ego: usize,
    curvature: f64,
}

const DS: f64 = 2.5;
const LANE_LEN: f64 = 85.0;

/// Ego lane passes through the origin tangent to +x; sibling lanes are
/// normal offsets of it.
fn build_lanes(n: usize, ego: usize, curvature: f64, lane_width: f64) -> LaneSet {
    let steps = (LANE_LEN / DS) as usize + 1;
    let mut lanes: Vec<Vec<(f64, f64)>> = vec![Vec::with_capacity(steps); n];
    for i in 0..steps {
        let s = i as f64 * DS;
        let (x, y, heading) = if curvature.abs() < 1e-12 {
            (s, 0.0, 0.0)
        } else {
            let h = curvature * s;
            ((h.sin()) / curvature, (1.0 - h.cos()) / curvature, h)
        };
        let (nx, ny) = (-heading.sin(), heading.cos());
        for (li, lane) in lanes.iter_mut().enumerate() {
            // left lanes have positive offsets
            let off = (ego as f64 - li as f64) * lane_width;
            lane.push((x + nx * off, y + ny * off));
        }
    }
    LaneSet { lanes, ego, curvature }
}

fn offset_path(center: &[(f64, f64)], curvature: f64, offset_of_s: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(center.len());
    for (i, &(x, y)) in center.iter().enumerate() {
        let s = i as f64 * DS;
        let h = curvature * s;
        let off = offset_of_s(s);
        out.push((x - h.sin() * off, y + h.cos() * off));
    }
    out
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

struct Behavior {
    ref_path: Vec<(f64, f64)>,
    /// Target speed as a function of time.
    profile: Box<dyn Fn(f64) -> f64>,
    instruction: String,
    target_speed: Option<f64>,
    /// Initial ego speed; classes may tighten the default draw.
    v0: f64,
}

fn rollout(
    cfg: &WorldConfig,
    v0: f64,
    path: &[(f64, f64)],
    profile: &dyn Fn(f64) -> f64,
) -> Vec<EgoState> {
    let mut tracker = PidTracker::new(PidGains::default(), cfg.dt, cfg.a_max, cfg.delta_max);
    let steps = (cfg.rollout_secs / cfg.dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = EgoState::at_origin(v0);
    out.push(s);
    for i in 0..steps {
        let t = i as f64 * cfg.dt;
        let (a, d) = tracker.step(&s, path, profile(t));
        s = bicycle_step(s, a, d, cfg.dt, cfg.wheelbase);
        out.push(s);
    }
    out
}

/// 20 points uniformly spaced in arc length over at most the nominal path
/// length, excluding the origin: s_i = i * L / 20.
fn extract_path(states: &[EgoState], cfg: &WorldConfig) -> Vec<[f64; 2]> {
    let pts: Vec<(f64, f64)> = states.iter().map(|s| (s.x, s.y)).collect();
    let total = polyline_length(&pts).min(cfg.path_nominal_m);
    (1..=PATH_LEN)
        .map(|i| {
            let p = point_at_arclength(&pts, total * i as f64 / PATH_LEN as f64);
            [p.0, p.1]
        })
        .collect()
}

/// Positions at t = i * speed_dt, i = 1..=10.
fn extract_speed_wps(states: &[EgoState], cfg: &WorldConfig) -> Vec<[f64; 2]> {
    let per = (cfg.speed_dt / cfg.dt).round() as usize;
    (1..=SPEED_LEN)
        .map(|i| {
            let s = &states[(i * per).min(states.len() - 1)];
            [s.x, s.y]
        })
        .collect()
}

fn clamp_to_box(p: (f64, f64), spec: &GridSpec) -> (f64, f64) {
    (p.0.clamp(spec.x_min, spec.x_max), p.1.clamp(spec.y_min, spec.y_max))
}

/// Build one gated sample. Scene randomization that fails the class's own
/// success rule is rejected and retried with a derived seed; after 100
/// attempts the scenario is declared infeasible.
pub fn generate_scenario(
    class: InstrClass,
    seed: u64,
    spec: &GridSpec,
    cfg: &WorldConfig,
) -> Result<Sample> {
    let base = Rng::new(seed ^ 0x5e_ed_00 ^ (class as u64) << 56);
    for attempt in 0..100u64 {
        let mut rng = base.fork(attempt);
        let sample = build_candidate(class, seed, &mut rng, spec, cfg)?;
        let gate = evaluate_sample(
            &Prediction {
                path: sample.dreamer_path_wps(),
                speed_wps: sample.dreamer_speed_waypoints(),
            },
            &sample,
            &EvalParams::with_dt(cfg.speed_dt),
        )?;
        if gate.success {
            return Ok(sample);
        }
    }
    Err(Error::data(format!(
        "scenario generation infeasible for class {class:?} after 100 attempts (seed {seed})"
    )))
}

fn build_candidate(
    class: InstrClass,
    seed: u64,
    rng: &mut Rng,
    spec: &GridSpec,
    cfg: &WorldConfig,
) -> Result<Sample> {
    // lanes
    let n_lanes = if class == InstrClass::LaneChange {
        2 + rng.below(2)
    } else {
        1 + rng.below(3)
    };
    let ego = rng.below(n_lanes);
    let curvature = if rng.uniform() < 0.5 {
        0.0
    } else {
        let mag = rng.range(0.003, 0.012);
        if rng.coin() {
            mag
        } else {
            -mag
        }
    };
    let lanes = build_lanes(n_lanes, ego, curvature, cfg.lane_width);
    let ego_center = lanes.lanes[lanes.ego].clone();

    // class-specific initial speed
    let v0 = match class {
        InstrClass::Stop => rng.range(3.5, 4.5),
        InstrClass::Faster => rng.range(4.0, 5.5),
        _ => rng.range(4.5, 6.0),
    };

    let mut objects: Vec<(String, f64, f64)> = Vec::new();
    let behavior = make_behavior(class, rng, cfg, &lanes, &ego_center, v0, &mut objects)?;
    let v0 = behavior.v0;

    // distractor objects, never closer than the designated one
    let n_extra = rng.below(3);
    let min_dist = objects
        .first()
        .map(|o| (o.1 * o.1 + o.2 * o.2).sqrt())
        .unwrap_or(10.0);
    for _ in 0..n_extra {
        let x = rng.range(min_dist + 6.0, 44.0);
        let side = if rng.coin() { 1.0 } else { -1.0 };
        let y = side * rng.range(5.0, 12.0);
        objects.push(("obstacle".into(), x, y));
    }
    if objects.len() > 4 {
        objects.truncate(4);
    }

    // rollouts
    let expert_profile = cfg.cruise;
    let expert_states = rollout(cfg, v0, &ego_center, &|_t| expert_profile);
    let dreamer_states = rollout(cfg, v0, &behavior.ref_path, behavior.profile.as_ref());

    let scene = Scene {
        lanes: lanes
            .lanes
            .iter()
            .map(|l| l.iter().map(|&p| { let c = clamp_to_box(p, spec); [c.0, c.1] }).collect())
            .collect(),
        objects: objects
            .into_iter()
            .map(|(c, x, y)| {
                let p = clamp_to_box((x, y), spec);
                (c, p.0, p.1)
            })
            .collect(),
        target_point: None,
    };

    Ok(Sample {
        class,
        instruction: behavior.instruction,
        scene,
        expert_path: extract_path(&expert_states, cfg),
        expert_speed_wps: extract_speed_wps(&expert_states, cfg),
        dreamer_path: extract_path(&dreamer_states, cfg),
        dreamer_speed_wps: extract_speed_wps(&dreamer_states, cfg),
        target_speed: behavior.target_speed,
        seed,
    })
}

fn pick<'a>(rng: &mut Rng, options: &[&'a str]) -> &'a str {
    options[rng.below(options.len())]
}

fn make_behavior(
    class: InstrClass,
    rng: &mut Rng,
    cfg: &WorldConfig,
    lanes: &LaneSet,
    ego_center: &[(f64, f64)],
    v0: f64,
    objects: &mut Vec<(String, f64, f64)>,
) -> Result<Behavior> {
    match class {
        InstrClass::Faster => {
            let accel = rng.range(1.8, 2.6);
            let cap = v0 + rng.range(3.5, 5.0);
            Ok(Behavior {
                ref_path: ego_center.to_vec(),
                profile: Box::new(move |t| (v0 + accel * t).min(cap)),
                instruction: pick(
                    rng,
                    &["speed up", "drive faster", "go faster please", "increase your speed"],
                )
                .to_string(),
                target_speed: None,
                v0,
            })
        }
        InstrClass::Slower => {
            let decel = rng.range(1.8, 2.6);
            let floor = rng.range(1.0, 2.0);
            Ok(Behavior {
                ref_path: ego_center.to_vec(),
                profile: Box::new(move |t| (v0 - decel * t).max(floor)),
                instruction: pick(
                    rng,
                    &["slow down", "drive slower", "reduce your speed", "go slower please"],
                )
                .to_string(),
                target_speed: None,
                v0,
            })
        }
        InstrClass::TargetSpeed => {
            // Quantization sets the rules here. The last-two-waypoint speed
            // of a quantized prediction snaps to whole cell widths, so the
            // reachable targets are those where the 2 s travel distance
            // leaves consecutive waypoints about one cell apart: moderate
            // targets, reached quickly from a nearby initial speed.
            let target = [4.0, 5.0, 7.0][rng.below(3)];
            let v0 = if target < 6.0 {
                target + rng.range(0.8, 1.2) // gentle slowdown
            } else {
                target - rng.range(0.8, 1.6) // gentle speedup
            };
            let accel = 2.9;
            let template = pick(
                rng,
                &[
                    "drive at {n} meters per second",
                    "keep a speed of {n} meters per second",
                    "set your speed to {n} meters per second",
                ],
            );
            Ok(Behavior {
                ref_path: ego_center.to_vec(),
                profile: Box::new(move |t| {
                    let delta = target - v0;
                    v0 + delta.signum() * (accel * t).min(delta.abs())
                }),
                instruction: template.replace("{n}", &format!("{}", target as i64)),
                target_speed: Some(target),
                v0,
            })
        }
        InstrClass::LaneChange => {
            // pick a feasible direction: left decreases the lane index
            let can_left = lanes.ego > 0;
            let can_right = lanes.ego + 1 < lanes.lanes.len();
            let left = match (can_left, can_right) {
                (true, true) => rng.coin(),
                (true, false) => true,
                (false, true) => false,
                (false, false) => {
                    return Err(Error::data("lane change scenario needs two lanes"))
                }
            };
            let side = if left { 1.0 } else { -1.0 };
            let width = cfg.lane_width;
            let s0 = rng.range(1.0, 3.0);
            let s1 = rng.range(12.0, 16.0);
            let ref_path = offset_path(ego_center, lanes.curvature, move |s| {
                side * width * smoothstep((s - s0) / (s1 - s0))
            });
            let dir = if left { "left" } else { "right" };
            let template = pick(
                rng,
                &[
                    "change lane to the {d}",
                    "move to the {d} lane",
                    "make a lane change to the {d}",
                ],
            );
            Ok(Behavior {
                ref_path,
                profile: Box::new(move |_t| v0),
                instruction: template.replace("{d}", dir),
                target_speed: None,
                v0,
            })
        }
        InstrClass::Object => {
            let instruction = pick(
                rng,
                &[
                    "drive towards the nearest obstacle",
                    "head to the nearest obstacle",
                    "steer towards the nearest obstacle",
                ],
            )
            .to_string();
            if rng.uniform() < 0.7 {
                // off-lane object: bend the path toward it
                let s_obj = rng.range(12.0, 20.0);
                let side = if rng.coin() { 1.0 } else { -1.0 };
                let lat = side * rng.range(2.5, 5.0);
                let h = lanes.curvature * s_obj;
                let base = point_at_arclength(ego_center, s_obj);
                let obj = (base.0 - h.sin() * lat, base.1 + h.cos() * lat);
                objects.push(("obstacle".into(), obj.0, obj.1));
                let ramp_start = rng.range(1.0, 2.5);
                let ref_path = offset_path(ego_center, lanes.curvature, move |s| {
                    lat * smoothstep((s - ramp_start) / (s_obj - ramp_start))
                });
                Ok(Behavior {
                    ref_path,
                    profile: Box::new(move |_t| v0),
                    instruction,
                    target_speed: None,
                    v0,
                })
            } else {
                // on-lane object: hold the lane, approach slowly
                let s_obj = rng.range(12.0, 18.0);
                let base = point_at_arclength(ego_center, s_obj);
                objects.push(("obstacle".into(), base.0, base.1));
                let v_slow = rng.range(3.0, 4.0);
                let decel = 1.8;
                Ok(Behavior {
                    ref_path: ego_center.to_vec(),
                    profile: Box::new(move |t| (v0 - decel * t).max(v_slow)),
                    instruction,
                    target_speed: None,
                    v0,
                })
            }
        }
        InstrClass::Stop => {
            let decel = rng.range(2.8, 3.0);
            Ok(Behavior {
                ref_path: ego_center.to_vec(),
                profile: Box::new(move |t| (v0 - decel * t).max(0.0)),
                instruction: pick(
                    rng,
                    &["stop the car", "come to a stop", "bring the car to a halt", "please stop now"],
                )
                .to_string(),
                target_speed: None,
                v0,
            })
        }
    }
}
