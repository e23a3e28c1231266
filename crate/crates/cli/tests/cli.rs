use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tatfast::geometry::GeometryConfig;
use tatfast::io::Tatb;
use tatfast::recon::metrics;
use tatfast::Image;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tatfast"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, cfg: &GeometryConfig) -> PathBuf {
    let p = dir.join("cfg.json");
    std::fs::write(&p, serde_json::to_string(cfg).unwrap()).unwrap();
    p
}

fn image(p: &Path) -> Image {
    Tatb::read(p).unwrap().to_image().unwrap()
}

#[test]
fn forward_then_invert_recovers_the_phantom() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(d, &GeometryConfig::default());
    let (f, g, r) = (d.join("f.tatb"), d.join("g.tatb"), d.join("r.tatb"));
    ok(&["phantom", "--preset", "paper-disks", "--n", "257", "--out", s(&f)]);
    ok(&["forward", "--in", s(&f), "--config", s(&cfg), "--out", s(&g)]);
    ok(&["invert", "--in", s(&g), "--config", s(&cfg), "--out", s(&r)]);
    let m = metrics(&image(&r), &image(&f)).unwrap();
    assert!(m.rel_l2 <= 5e-3, "{m:?}");
}

#[test]
fn adjoint_and_recon_produce_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(d, &GeometryConfig::scaled(65));
    let (f, g, u, r, t) = (d.join("f.tatb"), d.join("g.tatb"), d.join("u.tatb"), d.join("r.tatb"), d.join("trace.csv"));
    ok(&["phantom", "--n", "65", "--out", s(&f)]);
    ok(&["forward", "--in", s(&f), "--config", s(&cfg), "--out", s(&g)]);
    ok(&["adjoint", "--in", s(&g), "--config", s(&cfg), "--out", s(&u)]);
    assert_eq!(image(&u).n(), 65);
    let out = ok(&[
        "recon", "--method", "tv", "--in", s(&g), "--config", s(&cfg), "--out", s(&r), "--trace", s(&t), "--truth",
        s(&f),
    ]);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["metrics"]["rel_l2"].is_number(), "{summary}");
    let trace = std::fs::read_to_string(&t).unwrap();
    assert!(trace.starts_with("iteration,objective,update_norm,seconds"));
    assert!(trace.lines().count() >= 2);
}

#[test]
fn randomized_commands_follow_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(d, &GeometryConfig::scaled(65));
    let p = |n: &str| d.join(n);
    for (name, seed) in [("a.tatb", "5"), ("b.tatb", "5"), ("c.tatb", "6")] {
        ok(&["phantom", "--preset", "random-ellipses", "--seed", seed, "--n", "65", "--out", s(&p(name))]);
    }
    let read = |n: &str| std::fs::read(p(n)).unwrap();
    assert_eq!(read("a.tatb"), read("b.tatb"));
    assert_ne!(read("a.tatb"), read("c.tatb"));

    ok(&["forward", "--in", s(&p("a.tatb")), "--config", s(&cfg), "--out", s(&p("g.tatb"))]);
    for (name, seed) in [("n1.tatb", "3"), ("n2.tatb", "3"), ("n3.tatb", "4")] {
        ok(&["noise", "--in", s(&p("g.tatb")), "--level", "0.3", "--seed", seed, "--out", s(&p(name))]);
    }
    assert_eq!(read("n1.tatb"), read("n2.tatb"));
    assert_ne!(read("n1.tatb"), read("n3.tatb"));
}

#[test]
fn exports_write_pgm_with_sidecar_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let f = d.join("f.tatb");
    ok(&["phantom", "--n", "33", "--out", s(&f)]);
    let pgm = d.join("f.pgm");
    ok(&["export", "--in", s(&f), "--format", "pgm", "--out", s(&pgm)]);
    assert!(std::fs::read(&pgm).unwrap().starts_with(b"P5"));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("f.pgm.json")).unwrap()).unwrap();
    assert!(sidecar["min"].is_number() && sidecar["max"].is_number());
    let csv = d.join("f.csv");
    ok(&["export", "--in", s(&f), "--format", "csv", "--out", s(&csv)]);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 33);
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(d, &GeometryConfig::scaled(65));
    let out = d.join("out.tatb");

    let r = run(&["invert", "--in", s(&d.join("missing.tatb")), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!r.stderr.is_empty());
    assert!(!out.exists());

    let junk = d.join("junk.tatb");
    std::fs::write(&junk, b"not a container").unwrap();
    let r = run(&["adjoint", "--in", s(&junk), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists());

    // image where a sinogram is expected
    let f = d.join("f.tatb");
    ok(&["phantom", "--n", "65", "--out", s(&f)]);
    let r = run(&["invert", "--in", s(&f), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists());

    let r = run(&["noise", "--in", s(&f), "--level", "oops", "--out", s(&out)]);
    assert!(!r.status.success());
    assert!(!r.stderr.is_empty());
}

#[test]
fn small_selftest_passes() {
    let out = ok(&["selftest", "--small"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
}
