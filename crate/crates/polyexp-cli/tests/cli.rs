//! End-to-end tests of the `polyexp` binary: flag surface, JSON output
//! shapes, reproducibility under `--seed`, and the exit-code contract
//! (0 success, 2 validation/input, 3 numerical).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polyexp::divergences::jeffreys_gaussians;
use polyexp::gmm::{GaussianComponent, Gmm};
use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyexp"))
        .args(args)
        .output()
        .expect("failed to launch polyexp")
}

fn run_ok(args: &[&str]) -> (String, String) {
    let out = run(args);
    assert!(
        out.status.success(),
        "polyexp {:?} exited with {:?}: {}",
        args,
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write_gmm(dir: &Path, name: &str, components: &[(f64, f64, f64)]) -> PathBuf {
    let comps: Vec<Value> = components
        .iter()
        .map(|&(w, mu, sigma)| serde_json::json!({"weight": w, "mu": mu, "sigma": sigma}))
        .collect();
    let path = dir.join(name);
    std::fs::write(&path, serde_json::json!({ "components": comps }).to_string()).unwrap();
    path
}

fn bimodal(dir: &Path) -> PathBuf {
    write_gmm(dir, "bimodal.json", &[(0.6, -1.0, 1.0), (0.4, 1.5, 0.7)])
}

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn convert_writes_an_order_4_density_that_sample_can_draw_from() {
    let tmp = TempDir::new().unwrap();
    let gmm = bimodal(tmp.path());
    let ped_path = tmp.path().join("fit.json");

    run_ok(&[
        "convert",
        "--gmm",
        gmm.to_str().unwrap(),
        "--order",
        "4",
        "--out",
        ped_path.to_str().unwrap(),
    ]);
    let ped: Value = serde_json::from_str(&std::fs::read_to_string(&ped_path).unwrap()).unwrap();
    assert_eq!(ped["order"], 4);
    assert_eq!(ped["support"]["type"], "real");
    let theta = ped["theta"].as_array().unwrap();
    assert_eq!(theta.len(), 4);
    assert!(theta[3].as_f64().unwrap() < 0.0, "leading coefficient should be negative");

    let (stdout, stderr) = run_ok(&[
        "--seed",
        "7",
        "sample",
        "--ped",
        ped_path.to_str().unwrap(),
        "--n",
        "25",
    ]);
    let draws: Vec<f64> = stdout.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(draws.len(), 25);
    assert!(draws.iter().all(|x| x.is_finite()));
    assert!(stderr.contains("acceptance rate"), "stderr: {stderr}");
}

#[test]
fn convert_mle_emits_the_exact_moment_vector() {
    let tmp = TempDir::new().unwrap();
    let gmm = bimodal(tmp.path());
    let (stdout, _) = run_ok(&[
        "convert",
        "--gmm",
        gmm.to_str().unwrap(),
        "--order",
        "4",
        "--method",
        "mle",
    ]);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let eta: Vec<f64> = v["eta"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    let m = Gmm::new(
        vec![0.6, 0.4],
        vec![
            GaussianComponent::new(-1.0, 1.0).unwrap(),
            GaussianComponent::new(1.5, 0.7).unwrap(),
        ],
    )
    .unwrap();
    let expected = m.raw_moments(4).unwrap();
    assert_eq!(eta.len(), 4);
    for (i, &e) in eta.iter().enumerate() {
        assert_eq!(e, expected[i + 1], "moment {}", i + 1);
    }
}

#[test]
fn convert_on_an_interval_accepts_odd_orders() {
    let tmp = TempDir::new().unwrap();
    let gmm = write_gmm(tmp.path(), "narrow.json", &[(1.0, 0.5, 0.2)]);
    let (stdout, _) = run_ok(&[
        "convert",
        "--gmm",
        gmm.to_str().unwrap(),
        "--order",
        "3",
        "--interval",
        "0,1",
    ]);
    let ped: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(ped["order"], 3);
    assert_eq!(ped["support"]["type"], "interval");
    assert_eq!(ped["support"]["a"], 0.0);
    assert_eq!(ped["support"]["b"], 1.0);
}

#[test]
fn require_integrable_turns_a_sign_flipped_fit_into_exit_3() {
    let m2 = fixture("golden_m2.json");

    // Without the flag the formal fit is delivered as-is.
    let (stdout, _) = run_ok(&["convert", "--gmm", &m2, "--order", "8"]);
    let ped: Value = serde_json::from_str(&stdout).unwrap();
    let theta = ped["theta"].as_array().unwrap();
    assert!(
        theta[7].as_f64().unwrap() > 0.0,
        "reference fit should have a positive leading coefficient"
    );

    let out = run(&["convert", "--gmm", &m2, "--order", "8", "--require-integrable"]);
    assert_eq!(out.status.code(), Some(3), "expected a numerical-failure exit");
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn jeffreys_pair_matches_the_closed_form_for_single_gaussians() {
    let tmp = TempDir::new().unwrap();
    let a = write_gmm(tmp.path(), "a.json", &[(1.0, -0.3, 0.8)]);
    let b = write_gmm(tmp.path(), "b.json", &[(1.0, 1.2, 1.4)]);
    let (stdout, _) = run_ok(&[
        "jeffreys",
        "--m1",
        a.to_str().unwrap(),
        "--m2",
        b.to_str().unwrap(),
        "--method",
        "pair",
        "--order",
        "2",
    ]);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let value = v["value"].as_f64().unwrap();
    let exact = jeffreys_gaussians(-0.3, 0.8, 1.2, 1.4);
    assert!(
        (value - exact).abs() <= 1e-9,
        "pair estimate {value} vs closed form {exact}"
    );
}

#[test]
fn jeffreys_mc_is_reproducible_under_a_seed() {
    let tmp = TempDir::new().unwrap();
    let a = write_gmm(tmp.path(), "a.json", &[(1.0, -0.3, 0.8)]);
    let b = write_gmm(tmp.path(), "b.json", &[(1.0, 1.2, 1.4)]);
    let args = |seed: &'static str| {
        vec![
            "--seed",
            seed,
            "jeffreys",
            "--m1",
            a.to_str().unwrap(),
            "--m2",
            b.to_str().unwrap(),
            "--method",
            "mc",
            "--samples",
            "2000",
        ]
    };
    let value_of = |stdout: &str| {
        let v: Value = serde_json::from_str(stdout).unwrap();
        (v["value"].as_f64().unwrap(), v["stderr"].as_f64().unwrap())
    };
    let (run1, _) = run_ok(&args("42"));
    let (run2, _) = run_ok(&args("42"));
    // Wall time differs between runs, so compare the estimates themselves.
    assert_eq!(value_of(&run1), value_of(&run2));
    let (run3, _) = run_ok(&args("43"));
    assert_ne!(value_of(&run1).0, value_of(&run3).0);
}

#[test]
fn modelselect_picks_order_4_for_a_bimodal_mixture() {
    let tmp = TempDir::new().unwrap();
    let gmm = write_gmm(
        tmp.path(),
        "wide.json",
        &[(0.5, -1.5, 0.5), (0.5, 1.5, 0.5)],
    );
    let (stdout, _) = run_ok(&[
        "modelselect",
        "--gmm",
        gmm.to_str().unwrap(),
        "--orders",
        "2,4",
    ]);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["best"], 4);
    assert!(v["epsilon_satisfied"].is_null());
    let scores = v["scores"].as_array().unwrap();
    assert_eq!(scores.len(), 2);
    assert_eq!(scores[0]["order"], 2);
    assert!(scores[0]["score"].is_f64());
}

#[test]
fn bench_emits_a_summary_and_a_deterministic_trials_csv() {
    let tmp = TempDir::new().unwrap();
    let csv1 = tmp.path().join("t1.csv");
    let csv2 = tmp.path().join("t2.csv");
    let run_once = |path: &Path| {
        run_ok(&[
            "--seed",
            "9",
            "bench",
            "--k",
            "1",
            "--trials",
            "3",
            "--samples",
            "400",
            "--out",
            path.to_str().unwrap(),
        ])
        .0
    };
    let summary1 = run_once(&csv1);
    let summary2 = run_once(&csv2);
    assert!(
        summary1.starts_with("k,D,trials,excluded,mean_error,max_error,mean_speedup\n"),
        "summary: {summary1}"
    );
    assert!(summary1.lines().nth(1).unwrap().starts_with("1,2,3,"));
    // Speed-ups vary between runs; the recorded trials (sans timings) do not.
    let t1 = std::fs::read_to_string(&csv1).unwrap();
    let t2 = std::fs::read_to_string(&csv2).unwrap();
    assert_eq!(t1, t2, "trial records should be byte-identical across reruns");
    assert_eq!(t1.lines().count(), 4);
    assert!(t1.starts_with("k,D,trial,seed,jd_mc,jd_heuristic,rel_error\n"));
    let _ = summary2;
}

#[test]
fn golden_prints_a_full_ok_checklist_and_exits_zero() {
    let (stdout, _) = run_ok(&["golden"]);
    let ok_lines = stdout.lines().filter(|l| l.starts_with("ok  ")).count();
    assert_eq!(ok_lines, 19, "checklist:\n{stdout}");
    assert!(!stdout.contains("FAIL"));
    assert!(stdout.contains("order-8 recomputation took"));
}

#[test]
fn faithful_writes_a_density_and_a_curve_for_the_bundled_dataset() {
    let tmp = TempDir::new().unwrap();
    let prefix = tmp.path().join("fit");
    let (_, stderr) = run_ok(&[
        "--out",
        prefix.to_str().unwrap(),
        "faithful",
        "--data",
        &fixture("faithful_synthetic.txt"),
    ]);
    assert!(stderr.contains("272 points"), "stderr: {stderr}");
    assert!(stderr.contains("2 interior mode(s)"), "stderr: {stderr}");

    let ped: Value =
        serde_json::from_str(&std::fs::read_to_string(prefix.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(ped["order"], 10);
    assert_eq!(ped["support"]["type"], "interval");

    let csv = std::fs::read_to_string(prefix.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), 513);
    assert!(csv.starts_with("x,fit_unnormalized\n"));
}

#[test]
fn curves_names_columns_after_file_stems_and_deduplicates() {
    let tmp = TempDir::new().unwrap();
    std::fs::create_dir(tmp.path().join("a")).unwrap();
    std::fs::create_dir(tmp.path().join("b")).unwrap();
    let first = write_gmm(&tmp.path().join("a"), "m.json", &[(1.0, 0.0, 1.0)]);
    let second = write_gmm(&tmp.path().join("b"), "m.json", &[(1.0, 1.0, 2.0)]);
    let (stdout, _) = run_ok(&[
        "curves",
        "--gmm",
        first.to_str().unwrap(),
        "--gmm",
        second.to_str().unwrap(),
        "--min",
        "-2",
        "--max",
        "2",
        "--points",
        "5",
    ]);
    assert_eq!(stdout.lines().next().unwrap(), "x,m,m#2");
    assert_eq!(stdout.lines().count(), 6);
}

#[test]
fn malformed_mixture_json_exits_2() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("broken.json");
    std::fs::write(&path, "{not json").unwrap();
    let out = run(&["convert", "--gmm", path.to_str().unwrap(), "--order", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn conflicting_convert_flags_exit_2() {
    let tmp = TempDir::new().unwrap();
    let gmm = bimodal(tmp.path());
    let out = run(&[
        "convert",
        "--gmm",
        gmm.to_str().unwrap(),
        "--order",
        "4",
        "--method",
        "mle",
        "--hankel",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--hankel applies to the sme method only"));
}

#[test]
fn sampling_a_non_normalizable_density_exits_3() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("formal.json");
    std::fs::write(
        &path,
        r#"{"order":2,"theta":[0.0,0.5],"support":{"type":"real"}}"#,
    )
    .unwrap();
    let out = run(&["sample", "--ped", path.to_str().unwrap(), "--n", "5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
