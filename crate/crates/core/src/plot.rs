//! Static SVG rendering of a sample: BEV box, optional log-grid cell
//! boundaries, lanes, objects, and the expert/dreamer/predicted trajectories.
//! Coordinates are drawn in metric space with x pointing right and y up.

use crate::dreaming_eval::Prediction;
use crate::grid_codec::{inverse_log_transform, log_transform, GridSpec};
use crate::synth_world::Sample;
use std::fmt::Write;

const SCALE: f64 = 12.0; // pixels per meter
const MARGIN: f64 = 20.0;

struct Canvas {
    svg: String,
    spec: GridSpec,
}

impl Canvas {
    fn x(&self, x: f64) -> f64 {
        MARGIN + (x - self.spec.x_min) * SCALE
    }
    fn y(&self, y: f64) -> f64 {
        // svg y grows downward; metric y (left positive) points up
        MARGIN + (self.spec.y_max - y) * SCALE
    }

    fn polyline(&mut self, pts: &[[f64; 2]], style: &str) {
        if pts.len() < 2 {
            return;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.1},{:.1}", self.x(p[0]), self.y(p[1])))
            .collect();
        let _ = writeln!(
            self.svg,
            "<polyline points=\"{}\" fill=\"none\" {} />",
            coords.join(" "),
            style
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, style: &str) {
        let _ = writeln!(
            self.svg,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"{r}\" {} />",
            self.x(x),
            self.y(y),
            style
        );
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), style: &str) {
        let _ = writeln!(
            self.svg,
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" {} />",
            self.x(a.0),
            self.y(a.1),
            self.x(b.0),
            self.y(b.1),
            style
        );
    }
}

/// Render one sample. `grid_lines` overlays the non-uniform cell boundaries,
/// which makes the near-field resolution concentration visible.
pub fn render_sample(
    sample: &Sample,
    pred: Option<&Prediction>,
    spec: &GridSpec,
    grid_lines: bool,
) -> String {
    let w = (spec.x_max - spec.x_min) * SCALE + 2.0 * MARGIN;
    let h = (spec.y_max - spec.y_min) * SCALE + 2.0 * MARGIN;
    let mut c = Canvas { svg: String::new(), spec: *spec };
    let _ = writeln!(
        c.svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">"
    );
    let _ = writeln!(c.svg, "<rect width=\"{w:.0}\" height=\"{h:.0}\" fill=\"white\"/>");

    if grid_lines {
        let style = "stroke=\"#e5e5e5\" stroke-width=\"0.5\"";
        let t = |z: f64| log_transform(z, spec.k).unwrap();
        let inv = |zt: f64| inverse_log_transform(zt, spec.k).unwrap();
        for i in 0..=spec.n_x() {
            let x = inv(t(spec.x_min) + i as f64 * spec.step).clamp(spec.x_min, spec.x_max);
            c.line((x, spec.y_min), (x, spec.y_max), style);
        }
        for j in 0..=spec.n_y() {
            let y = inv(t(spec.y_min) + j as f64 * spec.step).clamp(spec.y_min, spec.y_max);
            c.line((spec.x_min, y), (spec.x_max, y), style);
        }
    }

    // BEV box
    let _ = writeln!(
        c.svg,
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#888\"/>",
        MARGIN,
        MARGIN,
        (spec.x_max - spec.x_min) * SCALE,
        (spec.y_max - spec.y_min) * SCALE
    );

    for lane in &sample.scene.lanes {
        c.polyline(lane, "stroke=\"#bbbbbb\" stroke-width=\"2\" stroke-dasharray=\"6,4\"");
    }
    for (_, x, y) in &sample.scene.objects {
        c.circle(*x, *y, 5.0, "fill=\"#d08000\"");
    }
    if let Some(tp) = sample.scene.target_point {
        c.circle(tp[0], tp[1], 5.0, "fill=\"none\" stroke=\"#a000a0\" stroke-width=\"2\"");
    }

    c.polyline(&sample.expert_path, "stroke=\"#2a9d2a\" stroke-width=\"2\"");
    c.polyline(&sample.dreamer_path, "stroke=\"#2060d0\" stroke-width=\"2\"");
    if let Some(p) = pred {
        let pts: Vec<[f64; 2]> = p.path.iter().map(|w| [w.x, w.y]).collect();
        c.polyline(&pts, "stroke=\"#d03030\" stroke-width=\"2\" stroke-dasharray=\"3,3\"");
    }
    // ego marker
    c.circle(0.0, 0.0, 4.0, "fill=\"#222\"");

    let _ = writeln!(
        c.svg,
        "<text x=\"{MARGIN}\" y=\"14\" font-size=\"12\" fill=\"#333\">{} — \"{}\" (expert green, dreamer blue, prediction red)</text>",
        sample.class.name(),
        sample.instruction
    );
    c.svg.push_str("</svg>\n");
    c.svg
}
