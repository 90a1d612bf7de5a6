//! End-to-end tests of the installed binary: exit codes, stderr messages,
//! and the on-disk formats of every output file.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_basegraph"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("experiment.toml");
    fs::write(&path, body).expect("config written");
    path.into_os_string().into_string().expect("utf-8 path")
}

const SMALL_CONFIG: &str = "seed = 3\n\
    [generator]\n\
    levels = 2\n\
    probabilities = [1.0, 0.7]\n\
    [basegraph]\n\
    side = 6\n\
    [chain]\n\
    steps = 500\n\
    checkpoints = 5\n\
    [routing]\n\
    trials = 50\n\
    [analysis]\n\
    sizes = [4, 8]\n\
    scaling_trials = 40\n";

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn generate_succeeds_and_writes_the_documented_format() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let out = dir.path().join("out");
    let output = run(&[
        "generate",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.starts_with("nodes 36 links "), "stdout: {stdout}");

    let text = fs::read_to_string(out.join("network.txt")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("nodes 36 generation doubling"));
    for line in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(fields.len(), 9, "link line shape: {line}");
        assert_eq!(fields[0], "link");
        assert_eq!(fields[3], "level");
        assert_eq!(fields[5], "prob");
        assert_eq!(fields[7], "fidelity");
        let prob: f64 = fields[6].parse().expect("probability parses");
        assert!(prob > 0.0 && prob <= 1.0, "probability in range: {line}");
    }
}

#[test]
fn invalid_config_value_exits_2_and_names_the_key() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "seed = 1\n[analysis]\ngamma = 1.5\n");
    let out = dir.path().join("out");
    let output = run(&[
        "analyze",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(
        stderr_of(&output).contains("analysis.gamma"),
        "stderr names the key: {}",
        stderr_of(&output)
    );
}

#[test]
fn unknown_config_key_exits_2_and_names_it() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "seed = 1\n[generator]\nnodez = 4\n");
    let out = dir.path().join("out");
    let output = run(&[
        "generate",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(
        stderr_of(&output).contains("nodez"),
        "stderr names the unknown key: {}",
        stderr_of(&output)
    );
}

#[test]
fn malformed_network_file_exits_3_with_the_line_number() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let out = dir.path().join("out");
    fs::create_dir_all(&out).unwrap();
    fs::write(
        out.join("network.txt"),
        "nodes 4 generation doubling\nlink 0 nonsense level 1 prob 1.0 fidelity 1.0\n",
    )
    .unwrap();
    let output = run(&["embed", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(3));
    let stderr = stderr_of(&output);
    assert!(
        stderr.contains("line 2"),
        "stderr points at the line: {stderr}"
    );
    assert!(
        stderr.contains("network.txt"),
        "stderr names the file: {stderr}"
    );
}

#[test]
fn runtime_guard_exits_4() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let out = dir.path().join("out");
    fs::create_dir_all(&out).unwrap();
    // Parses and validates as a network, but a one-node chain cannot swap.
    fs::write(out.join("network.txt"), "nodes 1 generation doubling\n").unwrap();
    let output = run(&["embed", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(4));
    assert!(
        stderr_of(&output).contains("runtime guard"),
        "stderr: {}",
        stderr_of(&output)
    );
}

#[test]
fn missing_input_file_exits_3_and_names_the_path() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let out = dir.path().join("out");
    let output = run(&["embed", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(3));
    assert!(
        stderr_of(&output).contains("network.txt"),
        "stderr names the missing file: {}",
        stderr_of(&output)
    );
}

#[test]
fn mismatched_network_and_placement_exit_3() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let out = dir.path().join("out");
    let out_str = out.to_str().unwrap();
    for sub in ["generate", "embed"] {
        let output = run(&[sub, "--config", &config, "--out", out_str]);
        assert!(output.status.success(), "{sub}: {}", stderr_of(&output));
    }
    // A second network with fewer nodes than the placement covers.
    let small = dir.path().join("small");
    let small_config = dir.path().join("small.toml");
    fs::write(
        &small_config,
        "seed = 3\n[generator]\nnodes = 9\n[basegraph]\nside = 6\n",
    )
    .unwrap();
    let small_config = small_config.to_str().unwrap();
    let output = run(&[
        "generate",
        "--config",
        small_config,
        "--out",
        small.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    for sub in ["route", "analyze"] {
        let output = run(&[
            sub,
            "--config",
            &config,
            "--out",
            out_str,
            "--network",
            small.join("network.txt").to_str().unwrap(),
            "--placement",
            out.join("placement.txt").to_str().unwrap(),
        ]);
        assert_eq!(
            output.status.code(),
            Some(3),
            "{sub}: {}",
            stderr_of(&output)
        );
        assert!(
            stderr_of(&output).contains("placement covers 36 nodes, network has 9"),
            "{sub} stderr: {}",
            stderr_of(&output)
        );
    }
}

#[test]
fn seed_flag_overrides_the_config_seed() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let bytes_for = |seed: &str, out: &str| {
        let out = dir.path().join(out);
        let output = run(&[
            "generate",
            "--config",
            &config,
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "stderr: {}", stderr_of(&output));
        fs::read(out.join("network.txt")).unwrap()
    };
    let nine_a = bytes_for("9", "a");
    let nine_b = bytes_for("9", "b");
    let ten = bytes_for("10", "c");
    assert_eq!(nine_a, nine_b, "same seed, same bytes");
    assert_ne!(nine_a, ten, "different seed, different draws");
}

#[test]
fn pipeline_outputs_follow_their_documented_shapes() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let out = dir.path().join("out");
    let out_str = out.to_str().unwrap();
    for sub in ["generate", "embed", "route", "analyze"] {
        let output = run(&[sub, "--config", &config, "--out", out_str]);
        assert!(output.status.success(), "{sub}: {}", stderr_of(&output));
    }

    let diag = fs::read_to_string(out.join("chain_diagnostics.csv")).unwrap();
    let lines: Vec<&str> = diag.lines().collect();
    assert_eq!(lines[0], "step,loglik,acceptance_rate");
    assert_eq!(lines.len(), 1 + 1 + 5, "header, step 0, five checkpoints");
    assert!(lines[1].starts_with("0,"), "first row is the initial state");
    assert!(
        lines.last().unwrap().starts_with("500,"),
        "last row is the final step"
    );

    let routes = fs::read_to_string(out.join("routes.csv")).unwrap();
    let lines: Vec<&str> = routes.lines().collect();
    assert_eq!(
        lines[0],
        "side,n,k,trials,seed,mean_hops,median_hops,p95_hops,delivery_rate"
    );
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[..5], ["6", "36", "2", "50", "3"]);
    let delivery: f64 = fields[8].parse().unwrap();
    assert!((0.0..=1.0).contains(&delivery));

    let scaling = fs::read_to_string(out.join("scaling.csv")).unwrap();
    let lines: Vec<&str> = scaling.lines().collect();
    assert_eq!(lines[0], "side,n,mean_hops,log2n_sq,ratio");
    assert_eq!(lines.len(), 3, "one row per requested size");

    let tessellation = fs::read_to_string(out.join("tessellation.csv")).unwrap();
    assert!(tessellation.starts_with(
        "gamma,levels_requested,levels_effective,clamped,events_violated,bound_value,"
    ));
    assert_eq!(tessellation.lines().count(), 2);

    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    for key in [
        "seed = 3",
        "nodes = 36",
        "diameter = ",
        "analytic_m = ",
        "conjunction_bound = ",
    ] {
        assert!(summary.contains(key), "summary carries `{key}`:\n{summary}");
    }
    assert!(
        summary.lines().all(|l| l.contains(" = ")),
        "summary stays key = value:\n{summary}"
    );
}
