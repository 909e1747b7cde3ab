use std::path::Path;
use std::process::{Command, Output};

use adarec::partition::PartitionSpec;
use adarec::render::FILLS;
use adarec::verify::grid_membership_oracle;
use adarec::{Exact, Scalar};

fn adarec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adarec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(p: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(p)
        .expect("csv opens")
        .records()
        .map(|r| r.expect("csv row"))
        .collect()
}

fn exact(text: &str) -> Exact {
    <Exact as Scalar>::parse(text).expect("rational")
}

#[test]
fn recover_seven_dimensions_ten_thousand_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = adarec(&[
        "recover",
        "--m",
        "7",
        "--eps",
        "0.1",
        "--trials",
        "10000",
        "--seed",
        "1",
        "--csv",
        path_arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_csv(&out);
    assert_eq!(rows.len(), 10_000);
    let eps = exact("0.1");
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0].parse::<usize>().unwrap(), i);
        assert!(exact(&r[3]) <= eps, "trial {i} error {}", &r[3]);
        assert!(r[4].parse::<usize>().unwrap() <= 4);
    }
}

#[test]
fn recover_origin_in_one_dimension() {
    let o = adarec(&["recover", "--m", "1", "--eps", "0.5", "--x", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("trial,x,x_hat,error,queries"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[2], "0");
    assert_eq!(row[3], "0");
}

#[test]
fn recover_is_byte_reproducible_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let ta = dir.path().join("a.jsonl");
    let tb = dir.path().join("b.jsonl");
    let common = ["recover", "--m", "4", "--eps", "0.01", "--trials", "300", "--seed", "9"];
    let mut first: Vec<&str> = common.to_vec();
    first.extend(["--csv", path_arg(&a), "--transcripts", path_arg(&ta), "--workers", "1"]);
    let mut second: Vec<&str> = common.to_vec();
    second.extend(["--csv", path_arg(&b), "--transcripts", path_arg(&tb), "--workers", "3"]);
    assert_eq!(adarec(&first).status.code(), Some(0));
    assert_eq!(adarec(&second).status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read(&ta).unwrap(), std::fs::read(&tb).unwrap());
    let transcript = std::fs::read_to_string(&ta).unwrap();
    let first_line: serde_json::Value = serde_json::from_str(transcript.lines().next().unwrap()).unwrap();
    assert_eq!(first_line["trial"], 0);
    assert_eq!(first_line["q"], 0);
    assert_eq!(first_line["kind"], "colors");
}

#[test]
fn recover_float_mode_passes_on_moderate_inputs() {
    let o = adarec(&[
        "recover", "--m", "3", "--eps", "0.5", "--trials", "500", "--mode", "float64", "--box-lo", "-1", "--box-hi",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn recover_float_mode_refusal_is_a_violation() {
    let o = adarec(&[
        "recover", "--m", "3", "--eps", "0.001", "--trials", "5", "--mode", "float64", "--box-lo", "1000", "--box-hi",
        "2000",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("trial 0"), "{err}");
    assert!(err.contains("float-mode cell index decode failed"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(adarec(&["recover", "--m", "0"]).status.code(), Some(2));
    assert_eq!(adarec(&["recover", "--m", "2", "--x", "1,2,3"]).status.code(), Some(2));
    assert_eq!(adarec(&["recover", "--eps", "-1"]).status.code(), Some(2));
    assert_eq!(adarec(&["recover", "--bogus"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "colour = 3\n").unwrap();
    assert_eq!(adarec(&["--config", path_arg(&cfg), "recover"]).status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("r.csv");
    std::fs::write(
        &cfg,
        format!(
            "# recovery run\nm = 3\ntrials = 7\neps = 1/4\ncsv = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = adarec(&["--config", path_arg(&cfg), "recover", "--trials", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_csv(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][1].split(' ').count(), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("eps=1/4"));
}

#[test]
fn verify_two_dimensions_fine_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.csv");
    let o = adarec(&["verify", "--m", "2", "--resolution", "1e-3", "--report", path_arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_csv(&out);
    let c = exact("1/8");
    let seps: Vec<&csv::StringRecord> = rows.iter().filter(|r| &r[0] == "estimate_separation").collect();
    assert_eq!(seps.len(), 3);
    for r in seps {
        assert!(exact(&r[2]) >= c, "{r:?}");
    }
    assert!(rows.iter().all(|r| &r[4] == "true"));
}

#[test]
fn verify_three_dimensions() {
    let o = adarec(&[
        "verify",
        "--m",
        "3",
        "--resolution",
        "1e-2",
        "--queries",
        "50",
        "--membership",
        "10000",
        "--pairs",
        "2000",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn verify_four_dimensions_falls_back_to_fuzzing() {
    let o = adarec(&[
        "verify",
        "--m",
        "4",
        "--method",
        "exhaustive",
        "--membership",
        "5000",
        "--pairs",
        "1000",
        "--queries",
        "30",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("running fuzz mode"), "{err}");
    assert!(err.contains("mode=fuzz"), "{err}");
}

#[test]
fn verify_bad_resolution_is_usage_error() {
    assert_eq!(
        adarec(&["verify", "--m", "2", "--resolution", "0.3"]).status.code(),
        Some(2)
    );
}

fn fills(svg: &str) -> Vec<&'static str> {
    FILLS
        .iter()
        .copied()
        .filter(|f| svg.contains(&format!("fill=\"{f}\"")))
        .collect()
}

#[test]
fn render_default_window() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.svg");
    let b = dir.path().join("b.svg");
    assert_eq!(adarec(&["render", "--out", path_arg(&a)]).status.code(), Some(0));
    assert_eq!(adarec(&["render", "--out", path_arg(&b)]).status.code(), Some(0));
    let svg = std::fs::read_to_string(&a).unwrap();
    assert_eq!(fills(&svg).len(), 3);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn render_window_without_lattice_points_matches_grid_oracle() {
    let o = adarec(&["render", "--window", "0.4,0.6,0.1,0.9", "--width", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let svg = String::from_utf8(o.stdout).unwrap();
    assert_eq!(fills(&svg), vec![FILLS[1], FILLS[2]]);

    let spec = PartitionSpec::new(2, exact("1")).unwrap();
    let mut seen = [false; 3];
    for i in 0..=100 {
        for j in 0..=400 {
            let x = vec![exact(&format!("{}/500", 200 + i)), exact(&format!("{}/500", 50 + j))];
            for (level, hit) in seen.iter_mut().enumerate() {
                if grid_membership_oracle(&x, level, &spec).unwrap() {
                    *hit = true;
                }
            }
        }
    }
    assert_eq!(seen, [false, true, true]);
}

#[test]
fn render_needs_two_dimensions() {
    let o = adarec(&["render", "--m", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unsupported"));
}

#[test]
fn widths_geometric_speedup() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("w.csv");
    let json = dir.path().join("w.jsonl");
    let o = adarec(&[
        "widths",
        "--n",
        "4",
        "--eps",
        "0.001",
        "--trials",
        "1000",
        "--csv",
        path_arg(&csv_path),
        "--json",
        path_arg(&json),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_csv(&csv_path);
    assert_eq!(rows.len(), 1000);
    let bound = 0.5f64.powi(5) + 1e-3;
    for r in &rows {
        assert!(r[4].parse::<f64>().unwrap() <= bound);
        assert!(r[3].parse::<usize>().unwrap() <= 5);
    }
    let summary: serde_json::Value =
        serde_json::from_str(std::fs::read_to_string(&json).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(summary["m"], 4);
    assert_eq!(summary["bernstein"], summary["kolmogorov"]);
    assert_eq!(summary["passed"], true);
}

#[test]
fn widths_harmonic() {
    let o = adarec(&["widths", "--weights", "harmonic", "--n", "5", "--trials", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("m=8"));
}

#[test]
fn widths_rejects_sketch_beyond_truncation() {
    let o = adarec(&["widths", "--n", "9", "--d", "16", "--trials", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lipschitz_both_modes() {
    for mode in ["exact", "float64"] {
        let o = adarec(&["lipschitz", "--m", "2", "--pairs", "500", "--mode", mode]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = String::from_utf8(o.stdout).unwrap();
        // 7 color sets and 3 separating functionals plus the header
        assert_eq!(text.lines().count(), 11);
    }
}
