//! CLI contract tests: stable exit codes, reproducible artifacts, and the
//! documented file formats, driven through the real binary.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bevplan"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bevplan_cli_{tag}"));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn gen_data(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let out = dir.join(format!("data_{seed}.jsonl"));
    let status = bin()
        .args(["gen-data", "--n", &n.to_string(), "--seed", &seed.to_string()])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    out
}

#[test]
fn gen_data_is_byte_reproducible() {
    let dir = workdir("gen");
    let a = gen_data(&dir, 6, 5);
    let b_path = dir.join("data_b.jsonl");
    let status = bin()
        .args(["gen-data", "--n", "6", "--seed", "5"])
        .arg("--out")
        .arg(&b_path)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b_path).unwrap());
    // header line carries the grid record
    let first = std::fs::read_to_string(&a).unwrap().lines().next().unwrap().to_string();
    assert!(first.contains("\"header\""));
    assert!(first.contains("\"x_min\""));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn tokenize_detokenize_round_trip() {
    let dir = workdir("tok");
    let traj = dir.join("traj.json");
    std::fs::write(&traj, "[[0.0, 0.0], [10.0, -5.0], [50.0, 30.0]]").unwrap();
    let ids_path = dir.join("ids.json");
    let status = bin()
        .args(["tokenize"])
        .arg("--in")
        .arg(&traj)
        .arg("--out")
        .arg(&ids_path)
        .status()
        .unwrap();
    assert!(status.success());
    let ids: Vec<u32> = serde_json::from_str(&std::fs::read_to_string(&ids_path).unwrap()).unwrap();
    assert_eq!(ids[0], 50);
    assert_eq!(ids[1], 3956);

    let back = dir.join("back.json");
    let status = bin()
        .args(["detokenize"])
        .arg("--in")
        .arg(&ids_path)
        .arg("--out")
        .arg(&back)
        .status()
        .unwrap();
    assert!(status.success());
    let wps: Vec<[f64; 2]> = serde_json::from_str(&std::fs::read_to_string(&back).unwrap()).unwrap();
    assert!((wps[1][0] - 10.19).abs() < 0.01);
    assert!((wps[1][1] + 5.05).abs() < 0.01);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn soft_target_csv_sums_to_one() {
    let out = bin()
        .args(["soft-target", "--id", "3956", "--sigma", "1.2", "--radius", "10"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "id,i_x,i_y,prob");
    let total: f64 = lines
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9, "probabilities sum to {total}");
}

#[test]
fn eval_dream_scores_prediction_file() {
    let dir = workdir("eval");
    let data = gen_data(&dir, 12, 7);
    // dreamer trajectories as predictions: must succeed everywhere
    let preds: String = std::fs::read_to_string(&data)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            format!(
                "{}\n",
                serde_json::json!({
                    "pred_path": v["dreamer_path"],
                    "pred_speed_wps": v["dreamer_speed_wps"],
                })
            )
        })
        .collect();
    let pred_path = dir.join("preds.jsonl");
    std::fs::write(&pred_path, preds).unwrap();
    let report_path = dir.join("report.csv");
    let out = bin()
        .args(["eval-dream"])
        .arg("--data")
        .arg(&data)
        .arg("--pred")
        .arg(&pred_path)
        .arg("--out")
        .arg(&report_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&report_path).unwrap();
    assert!(csv.starts_with("class,n,successes,rate"));
    let mean_line = csv.lines().find(|l| l.starts_with("mean")).unwrap();
    assert!(mean_line.ends_with("1.0000"), "dreamer-as-prediction must score 100%: {mean_line}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn plot_renders_svg() {
    let dir = workdir("plot");
    let data = gen_data(&dir, 6, 9);
    let svg_path = dir.join("fig.svg");
    let status = bin()
        .args(["plot", "--sample", "2", "--grid"])
        .arg("--data")
        .arg(&data)
        .arg("--out")
        .arg(&svg_path)
        .status()
        .unwrap();
    assert!(status.success());
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes_are_stable() {
    // 1: usage error (bad mix)
    let out = bin()
        .args(["gen-data", "--n", "4", "--mix", "1,2", "--out", "/tmp/never.jsonl"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    // 2: data error (missing file)
    let out = bin()
        .args(["tokenize", "--in", "/nonexistent/traj.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // 2: out-of-range token id is a data error
    let dir = workdir("codes");
    let ids = dir.join("ids.json");
    std::fs::write(&ids, "[999999]").unwrap();
    let out = bin().args(["detokenize"]).arg("--in").arg(&ids).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn train_eval_bench_small_pipeline() {
    let dir = workdir("train");
    let data = gen_data(&dir, 24, 11);
    let cfg_path = dir.join("train.toml");
    std::fs::write(
        &cfg_path,
        "d_model = 32\nn_layers = 1\nn_heads = 2\nd_ff = 32\nepochs = 1\nbatch_size = 8\ndropout = 0.0\n",
    )
    .unwrap();
    let ckpt = dir.join("model.ckpt");
    let out = bin()
        .args(["train"])
        .arg("--data")
        .arg(&data)
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&ckpt)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(ckpt.exists());
    assert!(ckpt.with_extension("metrics.csv").exists());
    assert!(ckpt.with_extension("codebook.txt").exists());

    let out = bin()
        .args(["eval-dream"])
        .arg("--data")
        .arg(&data)
        .arg("--ckpt")
        .arg(&ckpt)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("mean"));

    let out = bin()
        .args(["bench", "--trials", "3", "--pad-to", "120"])
        .arg("--ckpt")
        .arg(&ckpt)
        .arg("--data")
        .arg(&data)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8_lossy(&out.stdout);
    assert!(csv.contains("ar,") && csv.contains("c2f,"));
    std::fs::remove_dir_all(&dir).ok();
}
