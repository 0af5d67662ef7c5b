//! End-to-end tests of the CLI binary and the command layer: output file
//! contracts, exit codes, cross-mode replay consistency and CSV round-trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use muxsim::alloc::Allocator;
use muxsim::commands;
use muxsim::complexity::ComplexityMeasure;
use muxsim::rdmodel::EncoderModel;
use muxsim::report;
use muxsim::scenarios::constant_scenario;
use muxsim::sim::{run_multiplex, RunConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_muxsim"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn simulate_writes_the_documented_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(fixture("example_config.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_exit(&out, 0);
    for name in
        [report::GOP_REPORT_FILE, report::SUMMARY_FILE, report::TABLE_FILE, report::VARIANCE_PLOT_FILE]
    {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let table = std::fs::read_to_string(dir.path().join(report::TABLE_FILE)).unwrap();
    for name in ["uniform", "lam", "lfam", "oracle"] {
        assert!(table.contains(name), "table lacks {name}:\n{table}");
    }
    let plot = std::fs::read_to_string(dir.path().join(report::VARIANCE_PLOT_FILE)).unwrap();
    assert!(plot.lines().any(|l| l.starts_with('#')), "plot data needs # headers");
}

const NOISY_CONFIG: &str = r#"
schema_version = 1

[scenario]
channel_rate_bits = 2_000_000
num_super_gops = 8

[[scenario.streams]]
complexity = 1.0
sigma = 1e7

[[scenario.streams]]
complexity = 2.0
sigma = 5e6

[encoder]
kind = "noisy-hyperbolic"
rate_cv = 0.05
dist_cv = 0.05

[complexity]
kind = "noisy-oracle"
noise_cv = 0.2

[run]
seed = 3
"#;

#[test]
fn seed_override_changes_outputs_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("noisy.toml");
    std::fs::write(&config, NOISY_CONFIG).unwrap();

    let report_for = |out_name: &str, seed: Option<u64>| {
        let out = dir.path().join(out_name);
        commands::cmd_simulate(&config, &out, seed, None).unwrap();
        std::fs::read(out.join(report::GOP_REPORT_FILE)).unwrap()
    };
    let base = report_for("base", None);
    let same = report_for("same", Some(3));
    let other = report_for("other", Some(4));
    assert_eq!(base, same, "seed 3 is the config default");
    assert_ne!(base, other, "a different seed must change a noisy run");
}

#[test]
fn malformed_config_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, NOISY_CONFIG.replace("channel_rate_bits = 2_000_000", "channel_rate_bits = -5"))
        .unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_exit(&out, 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("channel_rate_bits"), "stderr: {stderr}");
}

#[test]
fn unknown_allocator_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(fixture("example_config.toml"))
        .arg("--out")
        .arg(dir.path())
        .args(["--allocators", "lam,bogus"])
        .output()
        .unwrap();
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

/// Replay config matching fixtures/example_trace.csv: streams come from the
/// trace, the config only supplies the channel and run settings.
const REPLAY_CONFIG: &str = r#"
schema_version = 1

[scenario]
channel_rate_bits = 2_000_000

[encoder]
kind = "trace-replay"

[complexity]
kind = "trace-provided"

[run]
allocators = ["lam", "lfam"]
seed = 5
"#;

#[test]
fn replay_of_an_exact_hyperbolic_trace_matches_simulate() {
    // The bundled trace samples D = σC²/R exactly (σ = 1e7/4e6, C = 1/2),
    // so replaying it must reproduce the parametric simulation.
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("replay.toml");
    std::fs::write(&config, REPLAY_CONFIG).unwrap();
    let replay_out = dir.path().join("replay");
    commands::cmd_replay(&fixture("example_trace.csv"), &config, &replay_out, None, None).unwrap();

    let scenario = constant_scenario(&[(1.0, 1.0e7), (2.0, 4.0e6)], 2_000_000.0, 4, 5);
    let sim = run_multiplex(&RunConfig::new(
        scenario,
        EncoderModel::ideal(),
        ComplexityMeasure::Oracle,
        vec![Allocator::Lam, Allocator::Lfam],
    ))
    .unwrap();

    let replayed = report::read_gop_report_csv(&replay_out.join(report::GOP_REPORT_FILE)).unwrap();
    let mut idx = 0;
    for summary in &sim.summaries {
        for gop in &summary.gops {
            for record in &gop.streams {
                let (ref allocator, gop_k, ref got) = replayed[idx];
                assert_eq!(allocator, &summary.allocator_name);
                assert_eq!(gop_k, gop.k.0);
                let want = record.mse().mse();
                assert!(
                    (got.mse().mse() - want).abs() / want < 1e-6,
                    "{allocator} GOP {gop_k}: {} vs {want}",
                    got.mse().mse()
                );
                idx += 1;
            }
        }
    }
    assert_eq!(idx, replayed.len());
}

#[test]
fn trace_missing_a_stream_gop_cell_exits_2() {
    let full = std::fs::read_to_string(fixture("example_trace.csv")).unwrap();
    let holed: String =
        full.lines().filter(|l| !l.starts_with("1,3,")).collect::<Vec<_>>().join("\n");
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("holed.csv");
    std::fs::write(&trace, holed).unwrap();
    let config = dir.path().join("replay.toml");
    std::fs::write(&config, REPLAY_CONFIG).unwrap();

    let out = bin()
        .args(["replay", "--trace"])
        .arg(&trace)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_exit(&out, 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("stream 1") && stderr.contains("3"), "stderr: {stderr}");
}

#[test]
fn fit_on_a_noiseless_trace_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["fit", "--trace"])
        .arg(fixture("example_trace.csv"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_exit(&out, 0);

    let fit = std::fs::read_to_string(dir.path().join("fit.csv")).unwrap();
    let mut lines = fit.lines();
    assert_eq!(lines.next(), Some("stream,sigma_fit,r_squared"));
    let expected_sigma = [1.0e7, 4.0e6];
    for (line, want) in lines.zip(expected_sigma) {
        let cols: Vec<&str> = line.split(',').collect();
        let sigma: f64 = cols[1].parse().unwrap();
        let r2: f64 = cols[2].parse().unwrap();
        assert!((sigma - want).abs() / want < 1e-9, "{line}");
        assert!(r2 > 1.0 - 1e-12, "{line}");
    }

    // One gnuplot block per stream, whitespace-separated triples.
    let plot = std::fs::read_to_string(dir.path().join("fit_plot.dat")).unwrap();
    assert_eq!(plot.matches("# stream:").count(), 2);
    assert!(plot
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .all(|l| l.split_whitespace().count() == 3));
}

#[test]
fn fit_with_too_few_samples_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("thin.csv");
    std::fs::write(&trace, "stream,gop,complexity,rate,mse\n0,0,1.0,1000.0,10.0\n1,0,1.0,1000.0,10.0\n")
        .unwrap();
    let out = bin().args(["fit", "--trace"]).arg(&trace).arg("--out").arg(dir.path()).output().unwrap();
    assert_exit(&out, 2);
}

#[test]
fn report_from_the_bundled_fixture_reproduces_the_grand_average() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("table.txt");
    let out = bin()
        .args(["report", "--fixture"])
        .arg(fixture("table1_variances.csv"))
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_exit(&out, 0);
    let table = std::fs::read_to_string(&out_path).unwrap();
    assert!(table.contains("65.94"), "table:\n{table}");
    // stdout mirrors the file
    assert_eq!(String::from_utf8_lossy(&out.stdout), table);
}

#[test]
fn report_over_run_directories_builds_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut run_dirs = Vec::new();
    for (class, sigma1) in [("A", 2.0e7), ("B", 4.0e7)] {
        let config_path = dir.path().join(format!("{class}.toml"));
        let text = NOISY_CONFIG
            .replace("[scenario]", &format!("[meta]\nclass = \"{class}\"\nmeasure = \"noisy\"\n\n[scenario]"))
            .replace("sigma = 1e7", &format!("sigma = {sigma1}"));
        std::fs::write(&config_path, text).unwrap();
        let out = dir.path().join(format!("run_{class}"));
        commands::cmd_simulate(&config_path, &out, None, Some(&["lam".into(), "lfam".into()]))
            .unwrap();
        run_dirs.push(out);
    }
    let out_path = dir.path().join("aggregate.txt");
    commands::cmd_report(&run_dirs, None, &out_path).unwrap();
    let table = std::fs::read_to_string(&out_path).unwrap();
    assert!(table.contains('A') && table.contains('B') && table.contains("noisy"), "{table}");

    // A directory whose summary lacks the candidate allocator breaks the grid.
    let thin = dir.path().join("thin");
    let config_path = dir.path().join("thin.toml");
    std::fs::write(
        &config_path,
        NOISY_CONFIG.replace("[scenario]", "[meta]\nclass = \"Z\"\nmeasure = \"noisy\"\n\n[scenario]"),
    )
    .unwrap();
    commands::cmd_simulate(&config_path, &thin, None, Some(&["lam".into()])).unwrap();
    run_dirs.push(thin);
    let err = commands::cmd_report(&run_dirs, None, &out_path).unwrap_err();
    assert!(err.is_input_error(), "{err}");
    assert!(err.to_string().contains("inconsistent run grid"), "{err}");
}

#[test]
fn gop_report_round_trips_exactly() {
    let mut config = RunConfig::new(
        constant_scenario(&[(2.0, 2500.0), (1.0, 20000.0), (3.3, 777.0)], 98_765.0, 7, 9),
        EncoderModel::ideal(),
        ComplexityMeasure::NoisyOracle { noise_cv: 0.25 },
        vec![Allocator::Lam, Allocator::Lfam],
    );
    config.encoder.kind = muxsim::rdmodel::EncoderKind::NoisyHyperbolic;
    config.encoder.noise.rate_cv = 0.1;
    config.encoder.noise.dist_cv = 0.1;
    let result = run_multiplex(&config).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(report::GOP_REPORT_FILE);
    report::write_gop_report_csv(&path, &result.summaries).unwrap();
    let rows = report::read_gop_report_csv(&path).unwrap();

    let mut idx = 0;
    for summary in &result.summaries {
        for gop in &summary.gops {
            for record in &gop.streams {
                let (ref allocator, gop_k, got) = rows[idx];
                assert_eq!(allocator, &summary.allocator_name);
                assert_eq!(gop_k, gop.k.0);
                // bit-exact round trip via shortest-round-trip decimals
                assert_eq!(got, *record);
                idx += 1;
            }
        }
    }
    assert_eq!(idx, rows.len());
}
