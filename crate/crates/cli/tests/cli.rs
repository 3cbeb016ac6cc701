use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 5

[network]
n_nodes = 60
radius = 0.3

[channel]
alpha = 1.0
c0 = 4
p_swap = 0.9

[simulation]
requests = 6
windows = 30
gammas = [0.1, 0.5, 0.9]
profile_samples = 100

[optimal_gamma]
loads = [6]

[heatmap]
alphas = [1.0]
p_swaps = [0.9]
loads = [10]

[distance]
windows = 300
min_bin_samples = 5
bins = 4

[multipair]
max_pairs = 3

[fairness]
loads = [6, 12]

[bounds]
loads = [4, 8]

[hopfit]
samples = 60
samples_per_topology = 100
"#;

fn troute(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_troute"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run_ok(command: &str, config: &Path, out: &Path) -> PathBuf {
    let result = troute(&[
        command,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "{command} failed: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    PathBuf::from(String::from_utf8(result.stdout).unwrap().trim())
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn sweep_gamma_writes_tables_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    let dir = run_ok("sweep-gamma", &config, &tmp.path().join("runs"));
    let name = dir.file_name().unwrap().to_str().unwrap();
    assert!(name.starts_with("sweep-gamma-seed5-"), "{name}");
    for file in ["sweep_summary.csv", "analytic.csv", "manifest.json"] {
        assert!(dir.join(file).is_file(), "missing {file}");
    }
    let header = fs::read_to_string(dir.join("sweep_summary.csv")).unwrap();
    assert!(header.starts_with("gamma,mean_Tr,std_Tr,sem\n"));
    assert_eq!(read_csv(&dir.join("sweep_summary.csv")).len(), 3);
    assert_eq!(read_csv(&dir.join("sweep_windows.csv")).len(), 90);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "sweep-gamma");
    assert_eq!(manifest["seed"], 5);
    assert!(manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .any(|o| o == "analytic.csv"));
}

#[test]
fn missing_radius_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &SMALL.replace("radius = 0.3", ""));
    let result = troute(&["sweep-gamma", "--config", config.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("radius"));
}

#[test]
fn out_of_domain_gamma_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        &SMALL.replace("gammas = [0.1, 0.5, 0.9]", "gammas = [0.1, 1.5]"),
    );
    let out = tmp.path().join("runs");
    let result = troute(&[
        "fairness",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
    assert!(!out.exists(), "no output before validation passes");
}

#[test]
fn runtime_failure_exits_three() {
    // a single node pair per topology never yields 16 disjoint paths
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL
        .replace("n_nodes = 60", "n_nodes = 2")
        .replace("samples_per_topology = 100", "samples_per_topology = 1");
    let config = write_config(tmp.path(), &text);
    let result = troute(&["hopfit", "--config", config.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(3));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("runs");
    let a = run_ok("sweep-gamma", &config, &out);
    let b = run_ok("sweep-gamma", &config, &out);
    assert_ne!(a, b);
    for file in ["sweep_summary.csv", "sweep_windows.csv", "analytic.csv", "config.toml"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file} differs"
        );
    }
}

#[test]
fn every_experiment_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("runs");

    let dir = run_ok("optimal-gamma", &config, &out);
    assert_eq!(read_csv(&dir.join("optimal_gamma.csv")).len(), 1);

    let dir = run_ok("heatmap", &config, &out);
    assert_eq!(read_csv(&dir.join("heatmap.csv")).len(), 1);

    let dir = run_ok("bounds", &config, &out);
    for row in read_csv(&dir.join("bounds.csv")) {
        let mean: f64 = row[2].parse().unwrap();
        let bound: f64 = row[4].parse().unwrap();
        assert!(mean <= bound);
    }

    let dir = run_ok("fairness", &config, &out);
    for row in read_csv(&dir.join("fairness.csv")) {
        let j: f64 = row[2].parse().unwrap();
        assert!(j > 0.0 && j <= 1.0);
    }

    let dir = run_ok("multipair", &config, &out);
    assert_eq!(read_csv(&dir.join("multipair.csv")).len(), 9);
    assert_eq!(read_csv(&dir.join("multipair_fit.csv")).len(), 3);

    let dir = run_ok("distance", &config, &out);
    assert_eq!(read_csv(&dir.join("decay.csv")).len(), 3);

    let mut text = SMALL.replace("[network]", "[network]\nmax_paths = 4");
    text = text.replace("n_nodes = 60", "n_nodes = 120");
    let config = write_config(tmp.path(), &text);
    let dir = run_ok("hopfit", &config, &out);
    assert_eq!(read_csv(&dir.join("hopfit.csv")).len(), 4);
    assert!(dir.join("hopfit_params.json").is_file());
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("runs");
    let result = troute(&[
        "sweep-gamma",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "9",
        "--quick",
    ]);
    assert!(result.status.success());
    let dir = PathBuf::from(String::from_utf8(result.stdout).unwrap().trim());
    assert!(dir.file_name().unwrap().to_str().unwrap().starts_with("sweep-gamma-seed9-"));
    // --quick divides 30 windows down to 3
    assert_eq!(read_csv(&dir.join("sweep_windows.csv")).len(), 9);
}
