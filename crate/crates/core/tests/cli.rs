use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn unital(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unital"))
        .current_dir(dir)
        .env_remove("UNITAL_CACHE_DIR")
        .env_remove("UNITAL_THREADS")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_passes_at_q3() {
    let dir = TempDir::new().unwrap();
    let o = unital(dir.path(), &["verify", "--p", "3", "--m", "1", "--f", "square"]);
    let out = stdout(&o);
    assert!(o.status.success(), "{out}");
    assert!(!out.contains("FAIL"));
    for check in ["planarity", "plane axioms", "design", "unital in plane", "ovals", "dual ovals", "transitivity"] {
        assert!(out.contains(&format!("PASS {check}")), "missing {check}: {out}");
    }
}

#[test]
fn verify_coulter_matthews() {
    let dir = TempDir::new().unwrap();
    let o = unital(dir.path(), &["verify", "--p", "3", "--m", "2", "--f", "cm:3"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn verify_rejects_non_planar_table() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.do"), "0 1 1\n").unwrap();
    let o = unital(dir.path(), &["verify", "--p", "3", "--m", "2", "--f", "user:bad.do"]);
    assert!(!o.status.success());
    let out = stdout(&o);
    assert!(out.contains("FAIL planarity") && out.contains("a = "), "{out}");
}

#[test]
fn rank_json_schema() {
    let dir = TempDir::new().unwrap();
    let o = unital(dir.path(), &["--no-timing", "rank", "--p", "3", "--m", "2", "--engine", "both"]);
    assert!(o.status.success());
    let files: Vec<_> = fs::read_dir(dir.path().join("out")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1);
    let v = json(&files[0]);
    let text = fs::read_to_string(&files[0]).unwrap();
    let keys: Vec<&str> = text
        .lines()
        .filter_map(|l| l.trim().strip_prefix('"')?.split('"').next())
        .collect();
    assert_eq!(
        keys,
        [
            "q", "p", "m", "modulus", "f", "theta_index", "rank_gf2", "rank_spectrum", "upper_bound", "lx_bound",
            "corollary_bound", "conjecture_match", "wall_ms"
        ]
    );
    assert_eq!(v["rank_gf2"], 721);
    assert_eq!(v["rank_spectrum"], 721);
    assert_eq!(v["corollary_bound"], 527);
    assert_eq!(v["conjecture_match"], true);
    assert!(v["wall_ms"].is_null());
    assert!(stdout(&o).starts_with("# p=3 m=2 q=9 f=square modulus="));
}

#[test]
fn gf2_only_at_q5() {
    let dir = TempDir::new().unwrap();
    let o = unital(dir.path(), &["--out", "r", "rank", "--p", "5", "--engine", "gf2"]);
    assert!(o.status.success());
    let v = json(&dir.path().join("r").join(fs::read_dir(dir.path().join("r")).unwrap().next().unwrap().unwrap().file_name()));
    assert_eq!(v["rank_gf2"], 121);
    assert!(v["rank_spectrum"].is_null());
    assert!(v["wall_ms"].is_u64());
}

#[test]
fn kloosterman_atlas_files() {
    let dir = TempDir::new().unwrap();
    let o = unital(dir.path(), &["kloosterman", "--p", "3", "--m", "1"]);
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("out/kloosterman_p3m1.csv")).unwrap();
    let k: Vec<&str> = csv.lines().skip(2).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(k, ["-1", "-1", "2"]);

    let o = unital(dir.path(), &["kloosterman", "--p", "3", "--m", "3"]);
    assert!(stdout(&o).contains("b 10 (expected 10), c 7 (expected 7)"));
    assert_eq!(fs::read_to_string(dir.path().join("out/kloosterman_p3m3.csv")).unwrap().lines().count(), 29);

    let o = unital(dir.path(), &["kloosterman", "--p", "5", "--m", "1"]);
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("out/kloosterman_p5m1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn report_is_deterministic_with_warm_cache_and_thread_count() {
    let dir = TempDir::new().unwrap();
    let run = |threads: &str, out: &str| {
        let o = unital(dir.path(), &["--no-timing", "--threads", threads, "--out", out, "report", "--q", "3,5"]);
        assert!(o.status.success(), "{}", stdout(&o));
        fs::read(dir.path().join(out).join("report.json")).unwrap()
    };
    let cold = run("1", "a");
    assert!(dir.path().join("cache/p3m1fsquaret8/design.txt").exists());
    let warm = run("2", "b");
    assert_eq!(cold, warm);

    let v: serde_json::Value = serde_json::from_slice(&cold).unwrap();
    let row = &v["rows"][0];
    assert_eq!((row["upper_bound"].as_u64(), row["corollary_bound"].as_u64()), (Some(25), Some(25)));
    assert_eq!(row["rank_gf2"], 25);
    assert!(v["rows"].as_array().unwrap().iter().all(|r| r["conjecture_match"] == true));
}

#[test]
fn corrupt_cache_is_rebuilt() {
    let dir = TempDir::new().unwrap();
    assert!(unital(dir.path(), &["build", "--p", "3"]).status.success());
    let cached = dir.path().join("cache/p3m1fsquaret8/design.txt");
    let good = fs::read_to_string(&cached).unwrap();
    let mut lines: Vec<&str> = good.lines().collect();
    lines.truncate(10);
    fs::write(&cached, lines.join("\n")).unwrap();

    let o = unital(dir.path(), &["build", "--p", "3"]);
    assert!(o.status.success());
    assert!(!stdout(&o).contains("(cached)"));
    assert_eq!(fs::read_to_string(&cached).unwrap(), good);
    assert!(stdout(&unital(dir.path(), &["build", "--p", "3"])).contains("(cached)"));
}

#[test]
fn config_file_and_env_precedence() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.cfg"), "p=5\nengine=spectrum\nout=from_config\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_unital"))
        .current_dir(dir.path())
        .env("UNITAL_CACHE_DIR", "envcache")
        .args(["--config", "run.cfg", "rank", "--engine", "gf2"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("from_config/rank_p5m1fsquaret22.json"));
    assert_eq!((v["q"].as_u64(), v["rank_gf2"].as_u64()), (Some(5), Some(121)));
    assert!(v["rank_spectrum"].is_null());
    assert!(dir.path().join("envcache/p5m1fsquaret22/design.txt").exists());
}

#[test]
fn spectrum_outputs() {
    let dir = TempDir::new().unwrap();
    let o = unital(dir.path(), &["--no-timing", "spectrum", "--p", "3", "--witness-all"]);
    assert!(o.status.success());
    let v = json(&dir.path().join("out/spectrum_p3m1fsquaret8.json"));
    let bits = v["spectrum_bitmap"].as_str().unwrap();
    let ones: u32 = (0..bits.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&bits[i..i + 2], 16).unwrap().count_ones())
        .sum();
    assert_eq!(ones, 25);
    let csv = fs::read_to_string(dir.path().join("out/spectrum_p3m1fsquaret8.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("u,v,w,member,witness_beta"));
    assert_eq!(csv.lines().filter(|l| l.split(',').nth(3) == Some("1")).count(), 25);
    assert!(dir.path().join("out/sbeta_p3m1fsquaret8.csv").exists());
}

#[test]
fn find_theta_counts() {
    let dir = TempDir::new().unwrap();
    let o = unital(dir.path(), &["find-theta", "--p", "5"]);
    assert!(stdout(&o).starts_with("12 admissible theta"));
}

#[test]
fn bad_arguments_exit_nonzero() {
    let dir = TempDir::new().unwrap();
    assert!(!unital(dir.path(), &["rank", "--p", "4"]).status.success());
    assert!(!unital(dir.path(), &["rank", "--p", "3", "--f", "cube"]).status.success());
    assert!(!unital(dir.path(), &["rank"]).status.success());
    assert_eq!(unital(dir.path(), &["frobnicate"]).status.code(), Some(2));
}
