use std::path::Path;
use std::process::Command;

use copaug_cli::pipeline::run_pipeline;
use copaug_cli::ExperimentConfig;

fn copaug(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_copaug"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = r#"
seed = 11
[data]
levels = 5
profiles = 150
[copula]
kinds = ["gaussian"]
factors = [1]
generation_repeats = 2
[training]
repeats = 2
hidden = [8]
epochs = 5
patience = 5
batch_size = 32
[evaluation]
projection_iterations = 4
depth_curves = 20
"#;

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn gen_data_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[data]\nlevels = 20\nprofiles = 1000\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = copaug(&["gen-data", "--config", &cfg, "--seed", "5", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = read(&a.join("profiles.csv"));
    assert_eq!(text, read(&b.join("profiles.csv")));
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 60);
    assert_eq!(lines.count(), 1000);
    assert!(a.join("manifest.json").exists());
}

#[test]
fn fit_sample_radiate_train_eval_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = |name: &str| dir.path().join(name).to_string_lossy().into_owned();

    let o = copaug(&["gen-data", "--config", &cfg, "--out", &out("data")]);
    assert!(o.status.success());
    let data = format!("{}/profiles.csv", out("data"));

    let o = copaug(&["fit", "--config", &cfg, "--kind", "gaussian", "--data", &data, "--out", &out("fit")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let model = format!("{}/copula-gaussian.json", out("fit"));
    let o = copaug(&["fit", "--config", &cfg, "--kind", "gaussian", "--data", &data, "--out", &out("fit2")]);
    assert!(o.status.success());
    assert_eq!(read(Path::new(&model)), read(&dir.path().join("fit2/copula-gaussian.json")));

    let o = copaug(&["sample", "--model", &model, "--n", "40", "--seed", "2", "--out", &out("sample")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let synth = format!("{}/synthetic.csv", out("sample"));
    assert_eq!(read(Path::new(&synth)).lines().count(), 41);

    let o = copaug(&["radiate", "--input", &synth, "--out", &out("rad")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rad = format!("{}/radiated.csv", out("rad"));
    assert_eq!(read(Path::new(&rad)).lines().next().unwrap().split(',').count(), 15 + 6);

    let o = copaug(&["train", "--config", &cfg, "--train", &rad, "--val", &rad, "--out", &out("train")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let net = format!("{}/emulator.json", out("train"));

    for run in ["eval1", "eval2"] {
        let o = copaug(&["eval", "--model", &net, "--test", &rad, "--case", "gaussian-x1", "--out", &out(run)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let rows = read(&dir.path().join("eval1/metrics.csv"));
    assert_eq!(rows, read(&dir.path().join("eval2/metrics.csv")));
    assert!(rows.starts_with("case,repeat,mb,mae\ngaussian-x1,0,"));
}

#[test]
fn failures_print_one_categorised_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = copaug(&["eval", "--model", "/nonexistent/model.json", "--test", "/nonexistent/t.csv", "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    let last = err.lines().last().unwrap();
    assert!(last.starts_with("error[artifact]: "), "{err}");
    assert_eq!(o.status.code(), Some(8));

    let cfg = write_config(dir.path(), "[training]\nrepeats = 0\n");
    let o = copaug(&["pipeline", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error[config]"));
}

#[test]
fn pipeline_counts_runs_and_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(SMALL).unwrap();
    let results = run_pipeline(&cfg, dir.path()).unwrap();
    let labels: Vec<&str> = results.iter().map(|c| c.label.as_str()).collect();
    assert_eq!(labels, vec!["baseline", "gaussian-x1"]);
    assert_eq!(results[0].runs.len(), 2);
    assert_eq!(results[1].runs.len(), 4);
    let n = results[0].runs[0].train_profiles;
    assert_eq!(n, 60);
    assert!(results[1].runs.iter().all(|r| r.train_profiles == 2 * n));
    let table = read(&dir.path().join("results.csv"));
    assert_eq!(table.lines().count(), 1 + 6);
    assert!(dir.path().join("synthetic/gaussian-x1-g1.csv").exists());
    for f in ["summary.csv", "levels.csv", "projection.csv", "depth.csv", "manifest.json", "models/copula-gaussian.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn augmented_sizes_follow_factors() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::parse(SMALL).unwrap();
    cfg.copula.factors = vec![1, 5, 10];
    cfg.copula.generation_repeats = 1;
    cfg.training.repeats = 1;
    let results = run_pipeline(&cfg, dir.path()).unwrap();
    let sizes: Vec<usize> = results.iter().map(|c| c.runs[0].train_profiles).collect();
    assert_eq!(sizes, vec![60, 120, 360, 660]);
}

#[test]
fn case_seeds_are_isolated() {
    let run = |factors: Vec<usize>, seed: u64| {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::parse(SMALL).unwrap();
        cfg.copula.factors = factors;
        cfg.seed = seed;
        run_pipeline(&cfg, dir.path()).unwrap()
    };
    let a = run(vec![1, 2], 11);
    let b = run(vec![1, 3], 11);
    assert_eq!(a[0].runs, b[0].runs);
    assert_eq!(a[1].runs, b[1].runs);
    assert_ne!(a[2].runs[0].seed, b[2].runs[0].seed);
    let c = run(vec![1], 12);
    assert!(a[0].runs.iter().zip(&c[0].runs).all(|(x, y)| x.seed != y.seed));
}

#[test]
fn failed_fit_aborts_only_its_case() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::parse(SMALL).unwrap();
    cfg.copula.kinds = vec![copaug::multicop::CopulaKind::Gaussian, copaug::multicop::CopulaKind::VineParametric];
    // Fewer than 10 training rows: every copula fit fails, the baseline still runs.
    cfg.data.profiles = 20;
    let results = run_pipeline(&cfg, dir.path()).unwrap();
    assert!(results[0].failure.is_none());
    assert!(results[1..].iter().all(|c| c.failure.is_some() && c.runs.is_empty()));
    assert!(read(&dir.path().join("summary.csv")).contains("gaussian-x1,failed,0"));
}
