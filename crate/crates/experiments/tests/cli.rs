use std::path::Path;
use std::process::{Command, Output};

use tavis_experiments::catalog::SAMPLES;

fn tcsim(args: &[&str], output_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tcsim"));
    cmd.args(args);
    match output_dir {
        Some(dir) => cmd.env("TCSIM_OUTPUT_DIR", dir),
        None => cmd.env_remove("TCSIM_OUTPUT_DIR"),
    };
    cmd.output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn list_shows_every_kind() {
    let out = tcsim(&["list"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    for s in &SAMPLES {
        assert!(text.contains(s.kind.name()));
    }
    let shown = tcsim(&["list", "--show", "swap"], None);
    assert_eq!(String::from_utf8(shown.stdout).unwrap(), SAMPLES[4].text);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let swap = SAMPLES[4].text;
    let good = write(dir.path(), "good.toml", swap);
    assert_eq!(tcsim(&["validate", &good], None).status.code(), Some(0));

    let typo = write(
        dir.path(),
        "typo.toml",
        &swap.replace("delta = 3.5", "delta = 3.5\ndleta = 1.0"),
    );
    assert_eq!(tcsim(&["validate", &typo], None).status.code(), Some(1));
    assert_eq!(
        tcsim(&["validate", "missing.toml"], None).status.code(),
        Some(1)
    );

    // |eps_g| must stay below 1
    let physics = write(
        dir.path(),
        "eps.toml",
        &swap.replace("delta = 3.5", "delta = 3.5\neps_g = 1.5"),
    );
    assert_eq!(tcsim(&["validate", &physics], None).status.code(), Some(2));

    let homodyne = SAMPLES[6].text.replace("[25.0, 100.0, 400.0]", "[900.0]");
    let strong = write(dir.path(), "lo.toml", &homodyne);
    let out = tcsim(&["run", &strong], Some(dir.path()));
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn run_writes_the_bundle_to_the_override_directory() {
    let dir = tempfile::tempdir().unwrap();
    let pinned = format!("output_dir = \"ignored\"\n{}", SAMPLES[4].text);
    let config = write(dir.path(), "swap.toml", &pinned);
    let out_dir = dir.path().join("bundle");
    let out = tcsim(&["run", &config], Some(&out_dir));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in ["swap.csv", "outcomes.json", "meta.json"] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let csv = std::fs::read_to_string(out_dir.join("swap.csv")).unwrap();
    assert!(csv.starts_with("sign,reference [1],P [1],P' [1],P_T [1],F [1]\n"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["kind"], "swap");
    assert!(meta["git_revision"].is_string());
    assert!(meta["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}
