//! End-to-end runs of the `tfqkd` binary on temporary files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use tfqkd::cli::{fixture_text, RecordFile};

fn tfqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfqkd"))
        .args(args)
        .env_remove("TFQKD_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = tfqkd(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(path: &Path) -> toml::Table {
    std::fs::read_to_string(path).unwrap().parse().unwrap()
}

fn num(t: &toml::Table, section: &str, key: &str) -> f64 {
    let v = &t[section][key];
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64)).unwrap()
}

#[test]
fn keyrate_1002_km_asymptotic() {
    let dir = TempDir::new().unwrap();
    let rec = write(&dir, "1002.rec", fixture_text("1002").unwrap());
    let out = dir.path().join("report.txt");
    ok(&["keyrate", s(&rec), "--mode", "asymptotic", "--out", s(&out)]);
    let t = report(&out);
    let r = num(&t, "key", "r_per_pulse");
    assert!((r / 9.53e-12 - 1.0).abs() <= 0.02, "{r}");
    assert_eq!(t["key"]["status"].as_str(), Some("positive"));
    assert_eq!(t["plob"]["exceeds_plob"].as_bool(), Some(true));
    // Input digest for provenance.
    assert_eq!(t["input"]["sha256"].as_str().unwrap().len(), 64);
    for key in ["s1_lb", "n1_lb", "e1ph_ub"] {
        assert!(t["decoy"].get(key).is_some(), "{key}");
    }
    for key in ["n_g", "n_t_after", "n1_after", "e1ph_after"] {
        assert!(t["aopp"].get(key).is_some(), "{key}");
    }
}

#[test]
fn keyrate_202_km_short_finite() {
    let dir = TempDir::new().unwrap();
    let rec = write(&dir, "202s.rec", fixture_text("202s").unwrap());
    let out = dir.path().join("report.txt");
    ok(&["keyrate", s(&rec), "--mode", "finite", "--out", s(&out)]);
    let bps = num(&report(&out), "key", "r_bps");
    assert!((bps / 47.06e3 - 1.0).abs() <= 0.15, "{bps}");
}

#[test]
fn keyrate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let rec = write(&dir, "952.rec", fixture_text("952").unwrap());
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    ok(&["keyrate", s(&rec), "--out", s(&a)]);
    ok(&["keyrate", s(&rec), "--out", s(&b)]);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn empty_detections_give_flagged_report() {
    let dir = TempDir::new().unwrap();
    let mut text = String::new();
    for line in fixture_text("1002").unwrap().lines() {
        if line.starts_with("detected_") || line.starts_with("correct_") {
            let key = line.split('=').next().unwrap();
            text.push_str(&format!("{key}= 0\n"));
        } else {
            text.push_str(line);
            text.push('\n');
        }
    }
    let text = text.replace("[aopp]\nn_t_after = 10343\ne_t_after = 1.99e-2\n", "");
    let rec = write(&dir, "empty.rec", &text);
    let out = dir.path().join("report.txt");
    ok(&["keyrate", s(&rec), "--out", s(&out)]);
    let t = report(&out);
    assert_eq!(t["key"]["positive"].as_bool(), Some(false));
    assert_ne!(t["key"]["status"].as_str(), Some("positive"));
    assert_eq!(num(&t, "key", "r_per_pulse"), 0.0);
}

#[test]
fn parse_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = fixture_text("1002").unwrap().replace("ds_deg", "ds_degree");
    let rec = write(&dir, "bad.rec", &bad);
    let out = tfqkd(&["keyrate", s(&rec)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ds_degree"));

    let cfg = write(&dir, "bad.toml", "[sim]\nn_total = \"many\"\n");
    assert_eq!(tfqkd(&["simulate", s(&cfg)]).status.code(), Some(2));

    // Missing file: not a parse error.
    let missing = dir.path().join("missing.rec");
    assert_eq!(tfqkd(&["keyrate", s(&missing)]).status.code(), Some(1));
}

const SIM_1002: &str = "[link]\npreset_km = 1002\n\n[sim]\nn_total = 100000000000000\n";

#[test]
fn simulated_1002_km_record_has_key() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sim.toml", SIM_1002);
    let rec = dir.path().join("sim.rec");
    ok(&["simulate", s(&cfg), "--analytic", "--out", s(&rec)]);
    let out = dir.path().join("report.txt");
    ok(&["keyrate", s(&rec), "--mode", "asymptotic", "--out", s(&out)]);
    assert!(num(&report(&out), "key", "r_per_pulse") > 0.0);
}

#[test]
fn simulate_round_trips_byte_identically() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sim.toml", "[link]\npreset_km = 202\n\n[sim]\nn_total = 2000000\nbatch = 500000\n");
    let rec = dir.path().join("mc.rec");
    ok(&["simulate", s(&cfg), "--mc", "--seed", "9", "--out", s(&rec)]);
    let text = std::fs::read_to_string(&rec).unwrap();
    let parsed = RecordFile::parse(&text, "mc.rec").unwrap();
    assert_eq!(parsed.render(), text);
}

#[test]
fn same_seed_same_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sim.toml", "[link]\npreset_km = 202\n\n[sim]\nn_total = 2000000\nbatch = 250000\n");
    let (a, b, c) = (dir.path().join("a.rec"), dir.path().join("b.rec"), dir.path().join("c.rec"));
    ok(&["simulate", s(&cfg), "--mc", "--seed", "41", "--out", s(&a)]);
    ok(&["simulate", s(&cfg), "--mc", "--seed", "41", "--out", s(&b)]);
    ok(&["simulate", s(&cfg), "--mc", "--seed", "42", "--out", s(&c)]);
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn no_decoy_source_no_decoy_detections() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "sim.toml",
        "[source]\nmu_x = 0.1\nmu_y = 0.4\np_v = 0.6\np_x = 0.0\np_y = 0.4\n\n\
         [link]\npreset_km = 202\n\n[sim]\nn_total = 1000000\n",
    );
    let rec = dir.path().join("sim.rec");
    ok(&["simulate", s(&cfg), "--mc", "--out", s(&rec)]);
    let r = RecordFile::parse(&std::fs::read_to_string(&rec).unwrap(), "sim.rec").unwrap().record;
    assert_eq!((r.detected[0][1], r.detected[1][0], r.detected[1][1]), (0, 0, 0));
    assert!(r.detected[2][2] > 0);
}

fn scan_rows(csv: &str) -> Vec<Vec<f64>> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("distance_km,loss_db,r_per_pulse,r_bps,plob_bits"));
    lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn scan_single_distance() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("scan.csv");
    ok(&["scan", "--distances", "600", "--out", s(&out)]);
    let rows = scan_rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 600.0);
}

#[test]
fn scan_sweep_crosses_plob_between_297_and_499_km() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("scan.csv");
    let distances = "1002,202,297,398,499,600,701,800,901,952,250,350,450";
    ok(&["scan", "--distances", distances, "--out", s(&out)]);
    let rows = scan_rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 13);
    for w in rows.windows(2) {
        assert!(w[1][0] > w[0][0], "sorted by distance");
        assert!(w[1][1] > w[0][1], "loss increases");
        assert!(w[1][2] < w[0][2], "rate decreases at {} km", w[1][0]);
    }
    let first_above = rows.iter().find(|r| r[2] > r[4]).expect("crosses the bound");
    assert!(first_above[0] > 297.0 && first_above[0] < 499.0, "{first_above:?}");
    // Finite-size key runs out past the longest finite-size run (952 km).
    let tail: Vec<_> = rows.iter().filter(|r| r[0] >= first_above[0] && r[0] <= 952.0).collect();
    assert!(tail.len() > 5 && tail.iter().all(|r| r[2] > r[4]));
}

#[test]
fn phase_demo_without_drift_has_no_residual() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "drift.toml",
        "duration_s = 0.2\nsegment_ms = 100.0\nref_rate_hz = 1e9\ndim_rate_hz = 5e3\nnoiseless = true\n\n\
         [drift]\nrate_deg_per_s = 0.0\nosc_amplitude_deg = 0.0\nwalk_deg_per_sqrt_s = 0.0\n",
    );
    let out = dir.path().join("phase.csv");
    ok(&["phase-demo", "--drift-config", s(&cfg), "--out", s(&out), "--stride", "1"]);
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let cols: Vec<usize> = ["free_drift_deg", "simple_residual_deg", "fine_residual_deg"]
        .iter()
        .map(|c| header.iter().position(|h| h == c).unwrap())
        .collect();
    let mut n = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(cols.iter().all(|&c| v[c] == 0.0), "{line}");
        n += 1;
    }
    assert_eq!(n, 5000);
}

#[test]
fn phase_demo_default_reduces_drift() {
    let summary = ok(&["phase-demo"]);
    let t: toml::Table = summary.parse().unwrap();
    let reduction = num(&t, "phase_residuals", "reduction_factor");
    assert!(reduction >= 100.0, "{reduction}");
}

#[test]
fn stabilize_loops_write_traces() {
    let dir = TempDir::new().unwrap();
    for (kind, header) in [
        ("delay", "t_s,delay_ps,measured_ps,control_ps"),
        ("intensity", "t_s,ratio_true,ratio_meas,correction_v"),
        ("polarization", "t_s,rate_l1_hz,rate_l2_hz,mode,adj_1,adj_2,adj_3,adj_4"),
    ] {
        let out = dir.path().join(format!("{kind}.csv"));
        ok(&["stabilize", kind, "--out", s(&out)]);
        let csv = std::fs::read_to_string(&out).unwrap();
        assert_eq!(csv.lines().next(), Some(header));
        assert!(csv.lines().count() > 100);
    }
}
