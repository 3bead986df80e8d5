//! End-to-end tests of the batch CLI: subcommands, exit codes,
//! deterministic output and the file-based interfaces.

use std::path::{Path, PathBuf};
use std::process::Command;

fn esdg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_esdg"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("esdg_cli_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const WAVE_CASE: &str = "\
[case]
equation = nse3d
degree = 3
t_end = 0.2
cfl = 0.4
cadence = 0.1
seed = 11

[mesh]
elements = 2 2 2
warp = sine
warp_amplitude = 0.1

[scheme]
interface = ec_diss

[gas]
reynolds = 100

[initial]
name = density_wave
amplitude = 0.2
velocity = 0.3 0.2 0.1
";

#[test]
fn run_produces_artifacts_and_exit_zero() {
    let dir = temp_dir("run");
    let case = dir.join("wave.cfg");
    write(&case, WAVE_CASE);
    let out = dir.join("out");
    let status = esdg()
        .args(["run"])
        .arg(&case)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for artifact in [
        "series.csv",
        "solution.snap",
        "solution.snap.idx",
        "report.txt",
    ] {
        assert!(out.join(artifact).exists(), "missing {artifact}");
    }
    let series = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(series.starts_with("t,S,Ekin,ens,diss,Re_num,mass"));
    assert!(series.lines().count() >= 3);
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("status: completed"));
    assert!(report.contains("config_hash:"));
    assert!(report.contains("--- config echo ---"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn deterministic_reruns_are_bitwise_identical() {
    let dir = temp_dir("determinism");
    let case = dir.join("wave.cfg");
    write(&case, WAVE_CASE);
    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let out = dir.join(tag);
        let status = esdg()
            .args(["run"])
            .arg(&case)
            .arg("--out")
            .arg(&out)
            .arg("--deterministic")
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(out.join("series.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "series.csv differs between reruns");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn threaded_run_matches_single_thread() {
    let dir = temp_dir("threads");
    let case = dir.join("wave.cfg");
    write(&case, WAVE_CASE);
    let mut outputs = Vec::new();
    for (tag, threads) in [("t1", "1"), ("t4", "4")] {
        let out = dir.join(tag);
        let status = esdg()
            .args(["run"])
            .arg(&case)
            .arg("--out")
            .arg(&out)
            .args(["--threads", threads])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(out.join("series.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "thread count changed the result");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_errors_exit_two() {
    let dir = temp_dir("config_err");
    let case = dir.join("bad.cfg");
    write(
        &case,
        "[case]\nequation = nse3d\ndegree = 3\nbogus_key = 1\n",
    );
    let output = esdg().args(["run"]).arg(&case).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("bogus_key"), "{stderr}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn missing_case_file_exits_four() {
    let status = esdg()
        .args(["run", "/definitely/not/there.cfg"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
}

#[test]
fn positivity_abort_exits_three_with_partial_series() {
    // under-resolved vortex with the standard (unstable) volume integral
    let dir = temp_dir("abort");
    let case = dir.join("crash.cfg");
    write(
        &case,
        "\
[case]
equation = nse3d
degree = 3
t_end = 10.0
cfl = 0.4
cadence = 0.2

[mesh]
elements = 4 4 4

[scheme]
volume = standard
interface = ec

[gas]
reynolds = 1600
mach = 0.1

[initial]
name = taylor_green
",
    );
    let out = dir.join("out");
    let output = esdg()
        .args(["run"])
        .arg(&case)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    let series = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(series.lines().count() >= 2, "partial series not retained");
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("status: aborted"), "{report}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn audit_passes_and_writes_report() {
    let dir = temp_dir("audit");
    let case = dir.join("audit.cfg");
    write(
        &case,
        "\
[case]
equation = nse3d
degree = 3
seed = 5

[mesh]
elements = 2 2 2
warp = sine
warp_amplitude = 0.1

[gas]
reynolds = 100
",
    );
    let out = dir.join("out");
    let output = esdg()
        .args(["audit"])
        .arg(&case)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("audit: PASS"));
    let report = std::fs::read_to_string(out.join("audit_report.txt")).unwrap();
    assert!(report.contains("result: PASS"));
    assert!(report.contains("entropy_rate_euler_ec"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn zero_time_sweep_has_zero_error() {
    let dir = temp_dir("sweep0");
    let case = dir.join("sweep.cfg");
    write(
        &case,
        "\
[case]
equation = nse3d
degree = 2
t_end = 0.0

[mesh]
elements = 2 2 2

[scheme]
interface = ec_diss

[initial]
name = density_wave
",
    );
    let out = dir.join("out");
    let output = esdg()
        .args(["sweep"])
        .arg(&case)
        .arg("--out")
        .arg(&out)
        .args(["--param", "N=2,3"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let errors = std::fs::read_to_string(out.join("errors.csv")).unwrap();
    for line in errors.lines().skip(1) {
        let error: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(
            error, 0.0,
            "zero-time sweep must reproduce the data: {line}"
        );
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn mesh_refinement_sweep_observes_design_order() {
    // advection-diffusion with the exact manufactured solution: observed
    // order on mesh refinement is N + 1 within +-0.5
    let dir = temp_dir("sweep_order");
    let case = dir.join("advdiff.cfg");
    write(
        &case,
        "\
[case]
equation = advdiff1d
degree = 2
t_end = 0.5
cfl = 0.3

[mesh]
elements = 4
length = 6.283185307179586
periodic = true

[scheme]
interface = upwind
sigma = 1.0

[advdiff]
a = 1.0
b = const
b_value = 0.02

[initial]
name = manufactured_sine
amplitude = 1.0
mode = 1
",
    );
    let out = dir.join("out");
    let output = esdg()
        .args(["sweep"])
        .arg(&case)
        .arg("--out")
        .arg(&out)
        .args(["--param", "mesh=4,8,16"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let table = std::fs::read_to_string(out.join("errors.csv")).unwrap();
    let orders: Vec<f64> = table
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert!(!orders.is_empty());
    for order in &orders {
        assert!(
            (order - 3.0).abs() <= 0.5,
            "observed order {order} not N+1 within 0.5 (table: {table})"
        );
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn burgers_run_entropy_decays_monotonically() {
    let dir = temp_dir("burgers");
    let case = dir.join("burgers.cfg");
    write(
        &case,
        "\
[case]
equation = burgers1d
degree = 4
t_end = 0.5
cfl = 0.3
cadence = 0.05

[mesh]
length = 2.0
elements = 6
periodic = false

[burgers]
viscosity = 0.05

[initial]
name = manufactured_sine
amplitude = 1.0
mode = 1
",
    );
    let out = dir.join("out");
    let status = esdg()
        .args(["run"])
        .arg(&case)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let series = std::fs::read_to_string(out.join("series.csv")).unwrap();
    let entropies: Vec<f64> = series
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(entropies.len() >= 8);
    for pair in entropies.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-12,
            "entropy increased along the run: {pair:?}"
        );
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn mesh_file_and_snapshot_table_round_trip() {
    let dir = temp_dir("meshfile");
    // write a mesh through the library, then consume it from the CLI
    let ops = esdg::operators::OperatorSet::new(3).unwrap();
    let tau = 2.0 * std::f64::consts::PI;
    let mesh = esdg::mesh::build_box_mesh(
        [tau; 3],
        [2, 2, 2],
        &ops,
        esdg::mesh::Warp::Sine { amplitude: 0.1 },
    )
    .unwrap();
    let mesh_path = dir.join("warped.mesh");
    esdg::mesh::write_mesh(&mesh_path, &mesh).unwrap();

    let case = dir.join("from_file.cfg");
    write(
        &case,
        &format!(
            "\
[case]
equation = nse3d
degree = 3
t_end = 0.0

[mesh]
source = file
file = {}

[initial]
name = constant
rho = 1.0
velocity = 0.2 0.1 -0.3
pressure = 1.0
",
            mesh_path.display()
        ),
    );
    let out = dir.join("out");
    let status = esdg()
        .args(["run"])
        .arg(&case)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    // t_end = 0 also emits the audit checks
    assert!(out.join("audit_report.txt").exists());

    // feed the snapshot back as a table initial condition
    let table_case = dir.join("from_table.cfg");
    write(
        &table_case,
        &format!(
            "\
[case]
equation = nse3d
degree = 3
t_end = 0.0

[mesh]
source = file
file = {}

[initial]
name = table
table = {}
",
            mesh_path.display(),
            out.join("solution.snap").display()
        ),
    );
    let out2 = dir.join("out2");
    let status = esdg()
        .args(["run"])
        .arg(&table_case)
        .arg("--out")
        .arg(&out2)
        .status()
        .unwrap();
    assert!(status.success());
    let first = std::fs::read_to_string(out.join("solution.snap")).unwrap();
    let second = std::fs::read_to_string(out2.join("solution.snap")).unwrap();
    assert_eq!(first, second, "table initial condition altered the state");
    std::fs::remove_dir_all(&dir).ok();
}
