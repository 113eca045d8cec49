use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn mmloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmloc")).args(args).output().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_map_accepts_good_map() {
    let out = mmloc(&["validate-map", path_str(&fixture("room.map.json"))]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("8 surfaces"));
}

#[test]
fn validate_map_names_nonplanar_surface() {
    let out = mmloc(&["validate-map", path_str(&fixture("nonplanar.map.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("warped_wall"), "{}", stderr(&out));
}

#[test]
fn missing_map_flag_is_a_usage_error() {
    let out = mmloc(&["trace", "--tx", "1,1,1", "--rx", "2,2,1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("--map") && err.contains("Usage"), "{err}");
}

#[test]
fn unknown_flag_is_rejected() {
    let out = mmloc(&["validate-map", "--frobnicate", path_str(&fixture("room.map.json"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unreadable_file_is_an_io_error() {
    let out = mmloc(&["validate-map", "/definitely/not/here.map.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/definitely/not/here.map.json"));
}

#[test]
fn malformed_point_is_rejected() {
    let map = fixture("room.map.json");
    let out = mmloc(&["trace", "--map", path_str(&map), "--tx", "1,1", "--rx", "2,2,1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--tx"));
}

#[test]
fn trace_then_locate_recovers_receiver() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.csv");
    let map = fixture("room.map.json");
    let out = mmloc(&[
        "trace",
        "--map",
        path_str(&map),
        "--tx",
        "3,4,2.5",
        "--rx",
        "9,6,1.5",
        "--tess",
        "20",
        "--observations",
        path_str(&obs),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = String::from_utf8(out.stdout).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "tof_ns,aod_az_deg,aod_el_deg,aoa_az_deg,aoa_el_deg,power_dbm,path_length_m,signature"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[7], "T:part_b");
    let length: f64 = first[6].parse().unwrap();
    assert!((length - 41f64.sqrt()).abs() < 1e-9);

    let out = mmloc(&["locate", "--map", path_str(&map), "--obs", path_str(&obs)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let p: Vec<f64> = v["position"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    let err = ((p[0] - 9.0).powi(2) + (p[1] - 6.0).powi(2) + (p[2] - 1.5).powi(2)).sqrt();
    assert!(err < 1e-6, "{p:?}");
    assert_eq!(v["ambiguous"], false);
    let selected = v["selected_cluster"].as_u64().unwrap() as usize;
    assert_eq!(v["clusters"][selected]["refuted"], false);
}

#[test]
fn locate_rejects_malformed_observations() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("bad.csv");
    fs::write(&obs, "bs_id,bs_x,bs_y,bs_z,az_deg,el_deg,tof_ns\n0,1,1,1,abc,0,10\n").unwrap();
    let out = mmloc(&[
        "locate",
        "--map",
        path_str(&fixture("room.map.json")),
        "--obs",
        path_str(&obs),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bad.csv"));
}

fn simulate(out_dir: &Path, seed: Option<&str>) -> Output {
    let scenario = fixture("scenario.json");
    let mut args = vec![
        "simulate",
        "--scenario",
        path_str(&scenario),
        "--out",
        path_str(out_dir),
    ];
    if let Some(s) = seed {
        args.extend(["--seed", s]);
    }
    mmloc(&args)
}

const OUTPUTS: [&str; 5] = [
    "per_user.csv",
    "summary.csv",
    "links_summary.csv",
    "cdf_1bs.csv",
    "cdf_2bs.csv",
];

#[test]
fn simulate_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for d in [&a, &b] {
        let out = simulate(d, None);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    for name in OUTPUTS {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let out = simulate(&c, Some("99"));
    assert_eq!(out.status.code(), Some(0));
    assert_ne!(
        fs::read(a.join("per_user.csv")).unwrap(),
        fs::read(c.join("per_user.csv")).unwrap()
    );
}

#[test]
fn simulate_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let cdf = fs::read_to_string(dir.path().join("cdf_1bs.csv")).unwrap();
    let rows: Vec<&str> = cdf.lines().collect();
    assert_eq!(rows[0], "error_m,cumulative_fraction");
    assert_eq!(rows.len(), 7);
    assert!(rows[6].ends_with(",1.0"));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("bs_count,class,distance_bin,users,mean_error_cm"));
    assert_eq!(summary.lines().count(), 1 + 2 * 12);
    let per_user = fs::read_to_string(dir.path().join("per_user.csv")).unwrap();
    assert_eq!(per_user.lines().count(), 1 + 2 * 6);
}

#[test]
fn simulate_rejects_invalid_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    let map = fixture("room.map.json");
    fs::write(&scenario, format!(r#"{{"map": {:?}, "n_users": 0}}"#, path_str(&map))).unwrap();
    let out = mmloc(&[
        "simulate",
        "--scenario",
        path_str(&scenario),
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("n_users"), "{}", stderr(&out));
}
