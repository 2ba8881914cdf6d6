//! Scene serialization into the unified token space: each element becomes a
//! (class special token, position action token) pair, in canonical order.

use super::Scene;
use crate::codebook::{Codebook, Special};
use crate::grid_codec::{tokenize_waypoint, GridSpec, Waypoint};

const MAX_LANE_POINTS: usize = 6;

/// Canonical order: ego marker, lane points, obstacles, target point; ties
/// broken by x then y. Positions clamp into the grid box when tokenized.
pub fn scene_to_tokens(scene: &Scene, cb: &Codebook, spec: &GridSpec) -> Vec<u32> {
    let mut elements: Vec<(u8, f64, f64, Special)> = Vec::new();
    elements.push((0, 0.0, 0.0, Special::ClsEgo));
    for lane in &scene.lanes {
        for p in subsample(lane, MAX_LANE_POINTS) {
            elements.push((1, p[0], p[1], Special::ClsLane));
        }
    }
    for (_, x, y) in &scene.objects {
        elements.push((2, *x, *y, Special::ClsObstacle));
    }
    if let Some(tp) = scene.target_point {
        elements.push((3, tp[0], tp[1], Special::ClsTarget));
    }
    elements.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.partial_cmp(&b.1).unwrap())
            .then(a.2.partial_cmp(&b.2).unwrap())
    });
    let mut out = Vec::with_capacity(elements.len() * 2);
    for (_, x, y, cls) in elements {
        out.push(cb.special(cls));
        out.push(cb.action_to_unified(tokenize_waypoint(Waypoint::new(x, y), spec)));
    }
    out
}

fn subsample(points: &[[f64; 2]], max: usize) -> Vec<[f64; 2]> {
    if points.len() <= max {
        return points.to_vec();
    }
    (0..max)
        .map(|i| points[i * (points.len() - 1) / (max - 1)])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::build_codebook;

    fn cb() -> Codebook {
        build_codebook(&["go"], GridSpec::default()).unwrap()
    }

    #[test]
    fn empty_scene_has_only_ego_marker() {
        let cb = cb();
        let v = scene_to_tokens(&Scene::default(), &cb, cb.grid());
        assert_eq!(v.len(), 2);
        assert_eq!(v[0], cb.special(Special::ClsEgo));
    }

    #[test]
    fn obstacle_tokenizes_to_its_cell() {
        let cb = cb();
        let scene = Scene {
            lanes: vec![],
            objects: vec![("obstacle".into(), 10.0, -5.0)],
            target_point: None,
        };
        let v = scene_to_tokens(&scene, &cb, cb.grid());
        assert_eq!(v[2], cb.special(Special::ClsObstacle));
        // cell id 3956 lifted by the action offset
        assert_eq!(v[3], cb.action_offset() + 3956);
    }

    #[test]
    fn permuted_elements_tokenize_identically() {
        let cb = cb();
        let a = Scene {
            lanes: vec![vec![[0.0, 0.0], [10.0, 0.0]], vec![[0.0, 3.5], [10.0, 3.5]]],
            objects: vec![("obstacle".into(), 9.0, 2.0), ("obstacle".into(), 4.0, -1.0)],
            target_point: Some([20.0, 0.0]),
        };
        let b = Scene {
            lanes: vec![a.lanes[1].clone(), a.lanes[0].clone()],
            objects: vec![a.objects[1].clone(), a.objects[0].clone()],
            target_point: a.target_point,
        };
        assert_eq!(
            scene_to_tokens(&a, &cb, cb.grid()),
            scene_to_tokens(&b, &cb, cb.grid())
        );
    }

    #[test]
    fn long_lanes_subsample_with_endpoints() {
        let cb = cb();
        let lane: Vec<[f64; 2]> = (0..23).map(|i| [i as f64 * 2.5, 0.0]).collect();
        let scene = Scene { lanes: vec![lane.clone()], objects: vec![], target_point: None };
        let v = scene_to_tokens(&scene, &cb, cb.grid());
        // ego pair + 6 lane pairs
        assert_eq!(v.len(), 2 + 2 * MAX_LANE_POINTS);
        let first = subsample(&lane, MAX_LANE_POINTS);
        assert_eq!(first[0], lane[0]);
        assert_eq!(first[MAX_LANE_POINTS - 1], lane[22]);
    }
}
