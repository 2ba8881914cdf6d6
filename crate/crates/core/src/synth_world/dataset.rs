//! JSONL dataset writing and loading.
//!
//! The first line is a header record carrying the grid spec, seed, and
//! class mix; every following line is one `Sample`.

use super::scenario::generate_scenario;
use super::{InstrClass, Sample, WorldConfig};
use crate::error::{Error, Result};
use crate::grid_codec::GridSpec;
use crate::util::{mean, Rng};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub grid: GridSpec,
    pub n: usize,
    pub seed: u64,
    pub class_mix: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub per_class: Vec<(String, usize)>,
    pub mean_dreamer_path_m: f64,
    pub mean_dreamer_speed: f64,
    pub mean_expert_speed: f64,
}

/// Deterministic class allocation: largest-remainder rounding of the mix,
/// then a seeded shuffle. A uniform mix over n=6 yields one sample per class
/// and a zero-weight class never appears.
fn allocate_classes(n: usize, mix: &[f64; 6], rng: &mut Rng) -> Vec<InstrClass> {
    let total: f64 = mix.iter().sum();
    let shares: Vec<f64> = mix.iter().map(|m| m / total * n as f64).collect();
    let mut counts: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let mut rem: Vec<(usize, f64)> = shares
        .iter()
        .enumerate()
        .map(|(i, s)| (i, s - s.floor()))
        .collect();
    rem.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut short = n - counts.iter().sum::<usize>();
    for (i, frac) in rem {
        if short == 0 {
            break;
        }
        if frac > 0.0 {
            counts[i] += 1;
            short -= 1;
        }
    }
    // any residue (all-integer shares) goes to the largest weight
    while short > 0 {
        let top = mix
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        counts[top] += 1;
        short -= 1;
    }
    let mut classes = Vec::with_capacity(n);
    for (i, c) in counts.iter().enumerate() {
        classes.extend(std::iter::repeat(InstrClass::ALL[i]).take(*c));
    }
    rng.shuffle(&mut classes);
    classes
}

/// Generate `n` gated samples and stream them to a JSONL file.
pub fn build_dataset(
    n: usize,
    mix: &[f64; 6],
    seed: u64,
    out: &Path,
    spec: &GridSpec,
    cfg: &WorldConfig,
) -> Result<DatasetSummary> {
    if n == 0 {
        return Err(Error::usage("dataset size must be >= 1"));
    }
    if mix.iter().any(|m| *m < 0.0) || mix.iter().sum::<f64>() <= 0.0 {
        return Err(Error::usage("class mix must be non-negative and sum > 0"));
    }
    let samples = generate_samples(n, mix, seed, spec, cfg)?;

    let mut w = BufWriter::new(std::fs::File::create(out)?);
    let header = DatasetHeader { grid: *spec, n, seed, class_mix: mix.to_vec() };
    writeln!(w, "{}", serde_json::to_string(&serde_json::json!({ "header": header }))
        .map_err(|e| Error::data(e.to_string()))?)?;
    for s in &samples {
        writeln!(w, "{}", serde_json::to_string(s).map_err(|e| Error::data(e.to_string()))?)?;
    }
    w.flush()?;
    Ok(summarize(&samples, cfg))
}

/// In-memory generation, shared by [`build_dataset`] and callers that do
/// not need a file on disk.
pub fn generate_samples(
    n: usize,
    mix: &[f64; 6],
    seed: u64,
    spec: &GridSpec,
    cfg: &WorldConfig,
) -> Result<Vec<Sample>> {
    let mut rng = Rng::new(seed);
    let classes = allocate_classes(n, mix, &mut rng);
    classes
        .iter()
        .enumerate()
        .map(|(i, class)| generate_scenario(*class, seed.wrapping_add(i as u64), spec, cfg))
        .collect()
}

pub fn summarize(samples: &[Sample], cfg: &WorldConfig) -> DatasetSummary {
    let mut per_class: Vec<(String, usize)> = InstrClass::ALL
        .iter()
        .map(|c| (c.name().to_string(), 0))
        .collect();
    for s in samples {
        per_class[InstrClass::ALL.iter().position(|c| c == &s.class).unwrap()].1 += 1;
    }
    let path_lens: Vec<f64> = samples
        .iter()
        .map(|s| crate::util::polyline_length(&s.dreamer_path.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>()))
        .collect();
    let speed_of = |wps: &[[f64; 2]]| {
        let mut speeds = Vec::new();
        for w in wps.windows(2) {
            let d = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
            speeds.push(d / cfg.speed_dt);
        }
        mean(&speeds)
    };
    DatasetSummary {
        n: samples.len(),
        per_class,
        mean_dreamer_path_m: mean(&path_lens),
        mean_dreamer_speed: mean(&samples.iter().map(|s| speed_of(&s.dreamer_speed_wps)).collect::<Vec<_>>()),
        mean_expert_speed: mean(&samples.iter().map(|s| speed_of(&s.expert_speed_wps)).collect::<Vec<_>>()),
    }
}

/// Load a JSONL dataset; the header line is validated when present.
pub fn load_dataset(path: &Path) -> Result<(Vec<Sample>, Option<DatasetHeader>)> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut samples = Vec::new();
    let mut header = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if lineno == 0 {
            if let Ok(v) = serde_json::from_str::<serde_json::Value>(&line) {
                if let Some(h) = v.get("header") {
                    header = Some(
                        serde_json::from_value::<DatasetHeader>(h.clone())
                            .map_err(|e| Error::data(format!("bad dataset header: {e}")))?,
                    );
                    continue;
                }
            }
        }
        let s: Sample = serde_json::from_str(&line)
            .map_err(|e| Error::data(format!("line {}: {e}", lineno + 1)))?;
        samples.push(s);
    }
    Ok((samples, header))
}
