use std::path::Path;
use std::process::Command;

fn sicnet(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sicnet"))
        .args(args)
        .env("SICNET_WORKERS", "2")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, detector: &str, extra: &str) -> String {
    let text = format!(
        r#"seed = 3
output = "{out}"
{extra}
[channel]
alphabet = "bipolar-ask"
order = 2
n_os = 1
n_sim = 1
[channel.pulse]
kind = "custom"
taps = [1.0]
[channel.nonlinearity]
kind = "identity"

[detector]
{detector}

[sweep]
tx_power_db = [0.0, 4.0]

[eval]
blocks = 2
block_len = 50
"#,
        out = dir.join("out").display()
    );
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn evaluate_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = \"fba\"\nmemory = 0", "");
    let out = sicnet(&["evaluate", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = sicnet(&["report", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("fba-N0"), "{text}");
    assert!(text.contains("4.00"));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = \"fba\"\nmemory = 0", "colour = 1");
    let out = sicnet(&["simulate", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let missing = sicnet(&["simulate", "/nonexistent/config.toml"]);
    assert_eq!(missing.status.code(), Some(2));

    let usage = sicnet(&["frobnicate"]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn report_without_results_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = \"uniform\"", "");
    let out = sicnet(&["report", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_worker_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = \"uniform\"", "");
    let out = Command::new(env!("CARGO_BIN_EXE_sicnet"))
        .args(["simulate", &cfg])
        .env("SICNET_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
