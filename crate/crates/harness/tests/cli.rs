use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use alspg_harness::{parse_geometry_csv, write_geometry_csv, RunOutput, RunRecord};

fn bench(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alspg-bench"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn scenario(rel: &str) -> String {
    scenarios().join(rel).to_string_lossy().into_owned()
}

fn read_records(path: &Path) -> Vec<RunRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bundled_ik_annulus_converges() {
    let dir = tempfile::tempdir().unwrap();
    let o = bench(dir.path(), &["run", &scenario("ik/ik_annulus.scenario")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let recs = read_records(&dir.path().join("ik_annulus.csv"));
    assert_eq!(recs.len(), 1);
    assert!(recs[0].converged);
    assert!(recs[0].max_v <= 1e-4);
    assert!(dir.path().join("ik_annulus_run0_trace.csv").exists());
}

#[test]
fn repeats_with_one_seed_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenarios().join("ik/ik_annulus.scenario"))
        .unwrap()
        .replace("seed = 1", "seed = 1\nrepeat = 10");
    let path = dir.path().join("ten.scenario");
    fs::write(&path, text).unwrap();
    let o = bench(dir.path(), &["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let recs = read_records(&dir.path().join("ik_annulus.csv"));
    assert_eq!(recs.len(), 10);
    let first = recs[0].fingerprint().replace("\"run\":0", "");
    for (k, r) in recs.iter().enumerate() {
        assert_eq!(r.fingerprint().replace(&format!("\"run\":{k}"), ""), first);
    }
}

#[test]
fn unknown_problem_id_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scenario");
    fs::write(&path, "id = \"x\"\nsolver = \"alspg\"\n[problem]\nkind = \"teleport\"\n").unwrap();
    let o = bench(dir.path(), &["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("teleport"), "{}", stderr(&o));
}

#[test]
fn malformed_files_and_bad_usage_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.scenario");
    fs::write(&path, "id = \"x\"\nsolver = \"alspg\"\n[problem\n").unwrap();
    assert_eq!(bench(dir.path(), &["run", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(bench(dir.path(), &["run", "/no/such/file.scenario"]).status.code(), Some(2));
    assert_eq!(bench(dir.path(), &["frobnicate"]).status.code(), Some(2));

    // iLQR has no notion of set constraints.
    let ik = fs::read_to_string(scenarios().join("ik/ik_annulus.scenario"))
        .unwrap()
        .replace("solver = \"alspg\"", "solver = \"ilqr\"");
    fs::write(&path, ik).unwrap();
    let o = bench(dir.path(), &["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ilqr"), "{}", stderr(&o));
}

#[test]
fn suite_with_no_match_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = bench(dir.path(), &["suite", &scenarios().to_string_lossy(), "--filter", "^nothing-here$"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_scenario_suite_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = bench(dir.path(), &["suite", &scenarios().to_string_lossy(), "--filter", "^ik_annulus$"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines: Vec<_> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 3, "{lines:?}");
    assert!(lines[2].starts_with("ik"));
    let summary = fs::read_to_string(dir.path().join("suite_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
}

#[test]
fn ablation_suite_orders_the_two_forms() {
    let dir = tempfile::tempdir().unwrap();
    let o = bench(dir.path(), &["suite", &scenario("ablation"), "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(dir.path().join("suite_summary.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let n_f = |solver: &str| -> f64 {
        rows.iter().find(|r| &r[col("solver")] == solver).unwrap()[col("n_f_mean")].parse().unwrap()
    };
    assert!(n_f("alspg") < n_f("alspg-noproj"));
    let table = stdout(&o);
    assert!(table.contains("alspg-noproj") && table.contains("±"));
}

#[test]
fn push_suite_has_alspg_and_ilqr_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = bench(dir.path(), &["suite", &scenario("push"), "--jobs", "2"]);
    // Several pushes end on a line-search failure at the separation kink.
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let recs = read_records(&dir.path().join("suite_records.csv"));
    for solver in ["alspg", "ilqr"] {
        let runs: Vec<_> = recs.iter().filter(|r| r.solver == solver).collect();
        assert_eq!(runs.len(), 10);
        assert!(runs.iter().all(|r| r.n_f > 0 && r.n_jac > 0));
    }
}

#[test]
fn seed_override_reaches_every_record() {
    let dir = tempfile::tempdir().unwrap();
    let o = bench(dir.path(), &["--seed", "77", "run", &scenario("ik/ik_annulus.scenario")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_records(&dir.path().join("ik_annulus.csv"))[0].seed, 77);
}

#[test]
fn plot_data_has_the_documented_shape() {
    let dir = tempfile::tempdir().unwrap();
    let o = bench(dir.path(), &["run", &scenario("car/car_bicycle.scenario")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let record = dir.path().join("car_bicycle.json");
    let record = record.to_str().unwrap();

    for kind in ["convergence", "trajectory", "geometry"] {
        let o = bench(dir.path(), &["plot", record, "--kind", kind]);
        assert_eq!(o.status.code(), Some(0), "{kind}: {}", stderr(&o));
    }

    let conv = fs::read_to_string(dir.path().join("car_bicycle_run0_convergence.csv")).unwrap();
    let iters: Vec<usize> = conv.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(iters[0], 0);
    assert!(iters.windows(2).all(|w| w[1] > w[0]));

    let traj = fs::read_to_string(dir.path().join("car_bicycle_run0_trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count() - 1, 60 + 1);
    assert!(traj.lines().next().unwrap().starts_with("t,x0,x1,x2,x3,u0,u1"));

    let geo = fs::read_to_string(dir.path().join("car_bicycle_run0_geometry.csv")).unwrap();
    let shapes = parse_geometry_csv(&geo).unwrap();
    assert_eq!(write_geometry_csv(&shapes), geo);
    assert!(shapes.iter().any(|s| s.name == "c_obstacle_0"));
}

#[test]
fn missing_history_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = bench(dir.path(), &["run", &scenario("ik/ik_annulus.scenario")]);
    assert_eq!(o.status.code(), Some(0));
    let record = dir.path().join("ik_annulus.json");
    let o = bench(dir.path(), &["plot", record.to_str().unwrap(), "--kind", "trajectory"]);
    assert_eq!(o.status.code(), Some(1));
    let outputs: Vec<RunOutput> = serde_json::from_str(&fs::read_to_string(&record).unwrap()).unwrap();
    assert!(outputs[0].trajectory.is_none());
}

#[test]
fn failed_solve_exits_with_1_and_keeps_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenarios().join("ik/ik_annulus.scenario"))
        .unwrap()
        .replace("seed = 1", "seed = 1\n\n[alspg]\nmax_outer = 1");
    let path = dir.path().join("short.scenario");
    fs::write(&path, text).unwrap();
    let o = bench(dir.path(), &["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let recs = read_records(&dir.path().join("ik_annulus.csv"));
    assert!(!recs[0].converged);
}
