use std::path::Path;
use std::process::{Command, Output};

fn weaktraj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weaktraj")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const TINY: &str = r#"
name = "tiny"

[units]
dimensionless = true

[geometry]
x0 = 3.0
final_time = 2.0

[pre_state]
width = 0.5
velocities = [1.0, -1.0]

[post_state]
x_f = 0.0
delta = 0.5
aim = "slits"
"#;

#[test]
fn pattern_writes_csv_with_metadata_and_units() {
    let o = weaktraj(&["pattern", "--scenario", "table1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# table = pattern"));
    assert!(text.contains("# config_hash = "));
    assert!(text.contains("x_f,density"));
}

#[test]
fn json_output_parses() {
    let o = weaktraj(&["protocol", "--scenario", "protocol_default", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(!v.as_array().unwrap().is_empty());
}

#[test]
fn scenario_files_and_out_paths() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("tiny.scenario");
    std::fs::write(&scn, TINY).unwrap();
    let out = dir.path().join("pattern.csv");
    let o = weaktraj(&["pattern", "--scenario", scn.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().contains("# scenario = tiny"));
}

#[test]
fn echo_reproduces_a_loadable_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = weaktraj(&["pattern", "--scenario", "table1", "--echo", "--out", dir.path().join("p.csv").to_str().unwrap()]);
    assert!(o.status.success());
    let echoed = String::from_utf8(o.stderr).unwrap();
    let hash = echoed.lines().next().unwrap().trim_start_matches("# config_hash = ").to_string();
    let copy = dir.path().join("echo.scenario");
    std::fs::write(&copy, &echoed).unwrap();
    let again = weaktraj(&["pattern", "--scenario", copy.to_str().unwrap(), "--echo"]);
    assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
    assert!(String::from_utf8(again.stderr).unwrap().starts_with(&format!("# config_hash = {hash}")));
}

#[test]
fn invert_reads_a_protocol_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("protocol.csv");
    let o = weaktraj(&["protocol", "--scenario", "protocol_default", "--out", table.to_str().unwrap()]);
    assert!(o.status.success());
    let o = weaktraj(&["invert", "--scenario", "protocol_default", "--contrasts", table.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("k_A") && text.contains("kappa"));
}

#[test]
fn sequential_flag_gives_identical_output() {
    let par = weaktraj(&["weak-grid", "--scenario", "fig2_ideal"]);
    let seq = weaktraj(&["weak-grid", "--scenario", "fig2_ideal", "--sequential"]);
    assert!(par.status.success() && seq.status.success());
    assert_eq!(par.stdout, seq.stdout);
}

#[test]
fn errors_exit_non_zero_with_a_message() {
    for args in [
        &["pattern", "--scenario", "no_such_scenario"][..],
        &["pattern", "--scenario", "table1", "--profile", "gaussian:abc"],
        &["invert", "--scenario", "protocol_default", "--contrasts", "/nonexistent/contrasts.csv"],
        &["show", "nothing"],
    ] {
        let o = weaktraj(args);
        assert!(!o.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "), "{args:?}");
    }
    assert!(!Path::new("/nonexistent/contrasts.csv").exists());
}

#[test]
fn show_prints_bundled_scenarios() {
    let o = weaktraj(&["show", "fig3_single_slit"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("name = \"fig3_single_slit\""));
}
