use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
preset = nl-pm-750-810nm
[grid]
points = 64
window = 16
dz = 0.02
[physics]
loss = true
[run]
study = energy_sweep
paths = 6
seed = 5
[study]
energies = 4, 8
length = 0.1
";

fn simulate(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_simulate"));
    cmd.args(args).env_remove("PCFSQUEEZE_OUT_DIR");
    if let Some(d) = env_out {
        cmd.env("PCFSQUEEZE_OUT_DIR", d);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn strip_wall(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn validate_only_prints_and_computes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.conf", SMALL);
    let out_dir = dir.path().join("out");
    let o = simulate(&[&cfg, "--validate-only", "--out", out_dir.to_str().unwrap()], None);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("fibre.beta2_ps2_per_km = 12.2"));
    assert!(text.contains("derived.nbar"));
    assert!(!out_dir.exists());
}

#[test]
fn run_writes_csv_manifest_and_plot_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.conf", SMALL);
    let out = dir.path().join("out");
    let o = simulate(&[&cfg, "--out", out.to_str().unwrap()], None);
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(o.status.success(), "{stderr}");
    // one progress line per sweep point
    assert_eq!(stderr.lines().filter(|l| l.starts_with("E = ")).count(), 2, "{stderr}");
    let csv = fs::read_to_string(out.join("energy_sweep.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert!(lines[0].starts_with("energy_pJ,length_m,"));
    assert_eq!(lines.len(), 1 + 2 * 2);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("energy_sweep.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["paths"], 6);
    assert!(out.join("energy_sweep.dat").exists());
    assert!(fs::read_to_string(out.join("energy_sweep.gp")).unwrap().contains("energy_sweep.dat"));
    let leftovers = fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().contains(".tmp"))
        .count();
    assert_eq!(leftovers, 0);
}

#[test]
fn same_seed_is_reproducible_and_manifest_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.conf", SMALL);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert!(simulate(&[&cfg, "--out", a.to_str().unwrap()], None).status.success());
    assert!(simulate(&[&cfg, "--out", b.to_str().unwrap(), "--workers", "3"], None).status.success());
    let manifest = a.join("energy_sweep.json");
    assert!(simulate(&[manifest.to_str().unwrap(), "--out", c.to_str().unwrap()], None).status.success());
    let read = |d: &Path| fs::read_to_string(d.join("energy_sweep.csv")).unwrap();
    assert_eq!(strip_wall(&read(&a)), strip_wall(&read(&b)));
    assert_eq!(strip_wall(&read(&a)), strip_wall(&read(&c)));

    let other = dir.path().join("d");
    assert!(simulate(&[&cfg, "--out", other.to_str().unwrap(), "--seed", "6"], None).status.success());
    assert_ne!(strip_wall(&read(&a)), strip_wall(&read(&other)));
}

#[test]
fn timings_off_gives_byte_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.conf", &format!("{SMALL}[output]\ntimings = false\n"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(simulate(&[&cfg, "--out", a.to_str().unwrap()], None).status.success());
    assert!(simulate(&[&cfg, "--out", b.to_str().unwrap(), "--workers", "2"], None).status.success());
    let a = fs::read(a.join("energy_sweep.csv")).unwrap();
    assert_eq!(a, fs::read(b.join("energy_sweep.csv")).unwrap());
}

#[test]
fn env_var_sets_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.conf", SMALL);
    let env_dir = dir.path().join("from-env");
    assert!(simulate(&[&cfg], Some(&env_dir)).status.success());
    assert!(env_dir.join("energy_sweep.csv").exists());
}

#[test]
fn bad_config_exits_with_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.conf", &SMALL.replace("paths = 6", "paths = -5"));
    let o = simulate(&[&cfg, "--validate-only"], None);
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("run.paths") && stderr.contains("line 10"), "{stderr}");

    let o = simulate(&[dir.path().join("missing.conf").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn trajectory_failure_gives_nonzero_exit_and_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    // an absurd steepening coefficient trips the stability check at the
    // higher energy only
    let text = SMALL.replace("[physics]\n", "[physics]\nself_steepening = true\ns = 4\n");
    let cfg = write_config(dir.path(), "a.conf", &text);
    let out = dir.path().join("out");
    let o = simulate(&[&cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("energy_sweep.csv")).unwrap();
    assert!(csv.contains("nan"));
    let m = fs::read_to_string(out.join("energy_sweep.json")).unwrap();
    assert!(m.contains("failures"));
}
