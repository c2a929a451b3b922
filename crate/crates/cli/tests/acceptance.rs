//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails. Runs without the libtest harness so the
//! lines are always visible.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::{array, Array2};

use copaug::bicop::{fit_pair, kendall_tau, Family, FitOptions, PairCopula, Rotation};
use copaug::dataset::{flatten, generate_surrogate, LevelGrid, Profile, Which};
use copaug::emulator::{huber_loss, init_mlp, train, MlpLayout, MlpModel, Normalizer, TrainConfig};
use copaug::evaluation::{band_depth, error_metrics, random_projection_report, Statistic};
use copaug::marginals::{pseudo_observations, UMatrix};
use copaug::multicop::{fit_vine, CopulaSpec, Edge, EdgeFit, FittedCopula, GaussianCopula, VineModel, VineOptions, VineStructure};
use copaug::radiation::{
    downwelling_longwave, downwelling_recursion, half_level_pressures, layer_optical_depth, sigma_layers, RadiationConstants, DIFFUSIVITY,
    GAS_OPTICAL_DEPTH, STEFAN_BOLTZMANN,
};
use copaug::rng::CounterRng;
use copaug_cli::pipeline::{run_pipeline, CaseResult};
use copaug_cli::ExperimentConfig;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = CounterRng::new(seed);
    Array2::from_shape_simple_fn((rows, cols), || rng.normal())
}

fn tau_of(u: &UMatrix, i: usize, j: usize) -> f64 {
    kendall_tau(&u.column(i).to_vec(), &u.column(j).to_vec()).unwrap()
}

fn ks(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut worst) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        worst = worst.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    worst
}

fn radiation_oracles() -> Outcome {
    let c = RadiationConstants::<f64>::default();
    let clear = RadiationConstants::new(STEFAN_BOLTZMANN, DIFFUSIVITY, 0.0).unwrap();
    let transparent = Profile {
        temperature: vec![220.0, 250.0, 270.0, 290.0],
        pressure: vec![10_000.0, 40_000.0, 70_000.0, 95_000.0],
        cloud_optical_depth: vec![0.0; 4],
    };
    let l = downwelling_longwave(&transparent, &clear).map_err(|e| e.to_string())?;
    ensure(l.flux.iter().all(|&x| x == 0.0), format!("transparent column gave {:?}", l.flux))?;

    let opaque = Profile {
        temperature: vec![280.0; 4],
        pressure: vec![20_000.0, 50_000.0, 80_000.0, 98_000.0],
        cloud_optical_depth: vec![0.0, 0.0, 0.0, 100.0],
    };
    let surface = downwelling_longwave(&opaque, &c).unwrap().surface();
    let black = STEFAN_BOLTZMANN * 280f64.powi(4);
    let rel = (surface - black).abs() / black;
    ensure(rel < 1e-6, format!("opaque surface {surface} vs {black}"))?;

    let two = downwelling_recursion::<f64>(&[100.0, 200.0], &[0.5, 0.25]).unwrap();
    ensure((two[2] - 87.5).abs() < 1e-12, format!("two-layer surface {}", two[2]))?;
    Ok(format!("opaque rel err {rel:.1e}, two-layer {}", two[2]))
}

fn clear_sky_depth() -> Outcome {
    let c = RadiationConstants::<f64>::default();
    let mut rng = CounterRng::new(2024);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = 1 + rng.below(150);
        let mut p: Vec<f64> = (0..n).map(|_| 100.0 + 1.1e5 * rng.uniform()).collect();
        p.sort_by(f64::total_cmp);
        p.dedup();
        let s = sigma_layers(&half_level_pressures(&p).unwrap()).unwrap();
        let total: f64 = s.delta_sigma.iter().map(|&d| layer_optical_depth(0.0, d, &c).unwrap()).sum();
        worst = worst.max((total - GAS_OPTICAL_DEPTH).abs());
    }
    ensure(worst < 1e-12, format!("max deviation {worst:.2e}"))?;
    Ok(format!("500 random grids, max deviation {worst:.1e}"))
}

fn known_vine() -> VineModel {
    let edge = |conditioned, conditioning, nodes| Edge { conditioned, conditioning, nodes };
    let fit = |copula| EdgeFit { copula, tau_hat: None };
    VineModel {
        structure: VineStructure {
            d: 3,
            truncation: None,
            trees: vec![vec![edge((0, 1), vec![], (0, 1)), edge((1, 2), vec![], (1, 2))], vec![edge((0, 2), vec![1], (0, 1))]],
        },
        fits: vec![
            vec![
                fit(PairCopula::gaussian(0.7).unwrap()),
                fit(PairCopula::new(Family::Clayton, Rotation::R0, 2.0, None).unwrap()),
            ],
            vec![fit(PairCopula::independence())],
        ],
    }
}

fn copula_recovery() -> Outcome {
    let truth = GaussianCopula::from_correlation(2, vec![1.0, 0.6, 0.6, 1.0]).unwrap();
    let fitted = GaussianCopula::fit(&truth.simulate(5000, 31).unwrap()).unwrap();
    let r12 = fitted.correlation(0, 1);
    let gauss_ok = (r12 - 0.6).abs() < 0.03;

    // n = 2000 per seed, full family catalogue.
    let clayton = PairCopula::new(Family::Clayton, Rotation::R0, 2.0, None).unwrap();
    let mut hits = 0;
    for seed in 0..50u64 {
        let s = clayton.sample(2000, 1000 + seed).unwrap();
        let raw = Array2::from_shape_fn((2000, 2), |(i, j)| if j == 0 { s[i].0 } else { s[i].1 });
        let u = pseudo_observations(&raw).unwrap();
        let f = fit_pair(&u.column(0).to_vec(), &u.column(1).to_vec(), &FitOptions::default()).unwrap();
        hits += (f.family == Family::Clayton && f.rotation == Rotation::R0) as usize;
    }
    let rate = hits as f64 / 50.0;
    let clayton_ok = rate >= 0.9;

    let u = known_vine().simulate(5000, 14).unwrap();
    let refit = fit_vine(&u, &VineOptions::default()).unwrap();
    let tree1: Vec<(usize, usize)> = refit.structure.trees[0].iter().map(|e| e.conditioned).collect();
    let truth_tau = [(2.0 / std::f64::consts::PI) * 0.7f64.asin(), 0.5];
    let tau_err = refit.fits[0].iter().zip(truth_tau).map(|(f, t)| (f.copula.tau() - t).abs()).fold(0.0, f64::max);
    let vine_ok = tree1 == vec![(0, 1), (1, 2)] && tau_err < 0.05;

    let detail = format!("R12 {r12:.4} (target 0.6); Clayton selected {hits}/50 = {rate:.2}; vine tree-1 tau err {tau_err:.4}");
    if gauss_ok && clayton_ok && vine_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sampling() -> Outcome {
    let g = GaussianCopula::from_correlation(2, vec![1.0, 0.8, 0.8, 1.0]).unwrap();
    let u = g.simulate(5000, 8).unwrap();
    let t = tau_of(&u, 0, 1);
    ensure((t - 0.5903).abs() <= 0.04, format!("tau {t}"))?;
    let inside = |u: &UMatrix| u.view().iter().all(|&x| x > 0.0 && x < 1.0);
    ensure(inside(&u), "gaussian sample outside (0, 1)")?;
    ensure(inside(&known_vine().simulate(5000, 3).unwrap()), "vine sample outside (0, 1)")?;

    let grid = LevelGrid::new(10).unwrap();
    let real = flatten(&generate_surrogate(2000, grid, 22).unwrap(), Which::Inputs).unwrap();
    let mut worst = 0.0f64;
    for spec in [CopulaSpec::gaussian(), CopulaSpec::vine()] {
        let synth = FittedCopula::fit(&real, &spec).unwrap().sample(2000, 23).unwrap();
        for j in 0..real.ncols() {
            worst = worst.max(ks(&real.values.column(j).to_vec(), &synth.values.column(j).to_vec()));
        }
    }
    ensure(worst < 0.05, format!("worst KS {worst}"))?;
    Ok(format!("tau {t:.4}, worst KS {worst:.4} over {} columns x 2 kinds", real.ncols()))
}

fn toy_problem() -> (Array2<f64>, Array2<f64>) {
    let x = random_matrix(10, 9, 11);
    let mut y = Array2::zeros((10, 4));
    for (i, row) in x.rows().into_iter().enumerate() {
        y[[i, 0]] = row[0] * row[1];
        y[[i, 1]] = row.sum().sin();
        y[[i, 2]] = row[3].abs() + 2.0;
        y[[i, 3]] = -row[8];
    }
    (x, y)
}

fn mlp_checks() -> Outcome {
    let layout = MlpLayout::new(9, &[8, 8], 4).unwrap();
    let mut m = init_mlp::<f64>(&layout, 5).unwrap();
    let mut rng = CounterRng::new(77);
    for l in &mut m.layers {
        l.b.mapv_inplace(|_| 0.3 * rng.normal());
    }
    let x = random_matrix(16, 9, 6);
    let y = random_matrix(16, 4, 7) * 1.5;
    m.normalizer = Normalizer::fit(&x).unwrap();
    let (_, grads) = m.loss_and_gradients(x.view(), y.view(), 1.0).unwrap();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for l in 0..m.layers.len() {
        let n_w = m.layers[l].w.len();
        for k in 0..n_w + m.layers[l].b.len() {
            let analytic = if k < n_w { grads[l].w.as_slice().unwrap()[k] } else { grads[l].b[k - n_w] };
            let probe = |delta: f64| {
                let mut p: MlpModel<f64> = m.clone();
                if k < n_w {
                    p.layers[l].w.as_slice_mut().unwrap()[k] += delta;
                } else {
                    p.layers[l].b[k - n_w] += delta;
                }
                p.loss_and_gradients(x.view(), y.view(), 1.0).unwrap().0
            };
            let numeric = (probe(h) - probe(-h)) / (2.0 * h);
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7));
        }
    }
    ensure(worst < 1e-4, format!("gradient rel err {worst:.2e}"))?;

    let (x, y) = toy_problem();
    let cfg = TrainConfig {
        epochs: 2000,
        patience: 2000,
        seed: 4,
        ..TrainConfig::default()
    };
    let layout = MlpLayout::new(9, &[64, 64], 4).unwrap();
    let fit = train(init_mlp(&layout, 9).unwrap(), x.view(), y.view(), x.view(), y.view(), &cfg).unwrap();
    let overfit = (fit.forward(x.view()).unwrap() - &y).mapv(f64::abs).mean().unwrap();
    ensure(overfit < 1e-2, format!("overfit MAE {overfit}"))?;

    let (vx, vy) = (random_matrix(20, 9, 12), random_matrix(20, 4, 13));
    let cfg = TrainConfig {
        epochs: 1000,
        patience: 25,
        learning_rate: 1e-2,
        seed: 1,
        ..TrainConfig::default()
    };
    let layout = MlpLayout::new(9, &[32], 4).unwrap();
    let es = train(init_mlp(&layout, 2).unwrap(), x.view(), y.view(), vx.view(), vy.view(), &cfg).unwrap();
    let best = es.best_epoch.ok_or("no best epoch")?;
    let min = es.history.iter().map(|h| h.val).fold(f64::INFINITY, f64::min);
    let restored = huber_loss(es.forward(vx.view()).unwrap().view(), vy.view(), 1.0).unwrap();
    ensure(es.history.len() < cfg.epochs, "early stopping never triggered")?;
    ensure(es.history[best].val == min && restored == min, format!("restored val {restored} vs best {min}"))?;
    Ok(format!("gradient rel err {worst:.1e}, overfit MAE {overfit:.1e}, stopped at epoch {} (best {best})", es.history.len()))
}

fn evaluation_oracles() -> Outcome {
    let nested = band_depth(array![[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [2.0, 2.0, 2.0]].view()).unwrap();
    ensure(nested == vec![2.0 / 3.0, 1.0, 2.0 / 3.0], format!("nested {nested:?}"))?;
    let ordered = band_depth(array![[0.0, 1.0], [1.0, 2.0], [2.0, 3.0], [3.0, 4.0]].view()).unwrap();
    ensure(ordered == vec![0.5, 5.0 / 6.0, 5.0 / 6.0, 0.5], format!("ordered {ordered:?}"))?;

    let mut rng = CounterRng::new(5);
    for trial in 0..1000u64 {
        let (r, c) = (1 + rng.below(20), 1 + rng.below(12));
        let shift = rng.normal() * 3.0;
        let a = random_matrix(r, c, 2 * trial);
        let b = random_matrix(r, c, 2 * trial + 1).mapv(|v| v + shift);
        let m = error_metrics(a.view(), b.view()).unwrap();
        ensure(m.mae >= m.mb.abs(), format!("trial {trial}: MAE {} < |MB| {}", m.mae, m.mb))?;
    }

    let real = random_matrix(300, 12, 9);
    let rep = random_projection_report(real.view(), real.view(), 50, 3).unwrap();
    for s in Statistic::ALL {
        ensure(rep.get(s).iter().all(|(a, b)| a == b), format!("{} off the diagonal", s.name()))?;
    }
    Ok("depth examples exact, 1000 random MAE/MB pairs, projection diagonal".into())
}

fn desk_config() -> ExperimentConfig {
    ExperimentConfig::parse(
        r#"
seed = 2024
[data]
levels = 20
profiles = 2500
[split]
train = 0.4
validation = 0.2
test = 0.4
[copula]
kinds = ["gaussian"]
factors = [10]
generation_repeats = 1
[training]
repeats = 5
hidden = [64, 64]
epochs = 1000
patience = 25
[evaluation]
depth_curves = 200
"#,
    )
    .unwrap()
}

fn directional(results: &[CaseResult]) -> Outcome {
    let base = results.iter().find(|c| c.label == "baseline").ok_or("no baseline case")?;
    let aug = results.iter().find(|c| c.label == "gaussian-x10").ok_or("no augmented case")?;
    ensure(base.runs.len() >= 5 && aug.runs.len() >= 5, "fewer than 5 training seeds")?;
    let (bm, am) = (base.median_mae().unwrap(), aug.median_mae().unwrap());
    let (bb, ab) = (base.median_abs_mb().unwrap(), aug.median_abs_mb().unwrap());
    let detail = format!("median MAE {bm:.4} -> {am:.4}, median |MB| {bb:.4} -> {ab:.4}");
    if am < bm && ab <= 1.5 * bb {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const TABLES: [&str; 6] = ["results.csv", "summary.csv", "levels.csv", "projection.csv", "depth.csv", "manifest.json"];

fn determinism(first: &Path, scratch: &Path) -> Outcome {
    let second = scratch.join("second");
    let cfg_path = scratch.join("desk.toml");
    std::fs::copy(first.join("config.toml"), &cfg_path).map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_copaug"))
        .args(["pipeline", "--config", cfg_path.to_str().unwrap(), "--out", second.to_str().unwrap()])
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), String::from_utf8_lossy(&out.stderr).into_owned())?;
    for t in TABLES {
        let a = std::fs::read(first.join(t)).map_err(|e| format!("{t}: {e}"))?;
        let b = std::fs::read(second.join(t)).map_err(|e| format!("{t}: {e}"))?;
        ensure(a == b, format!("{t} differs"))?;
    }
    Ok(format!("{} tables byte-identical", TABLES.len()))
}

struct Report {
    failed: usize,
}

impl Report {
    fn run(&mut self, n: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took = start.elapsed();
        let (verdict, detail) = match outcome {
            Ok(d) if took <= budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over the {budget:?} budget")),
            Err(d) => ("FAIL", d),
        };
        if verdict == "FAIL" {
            self.failed += 1;
        }
        println!("criterion {n}: {verdict} {name} ({:.2}s): {detail}", took.as_secs_f64());
    }
}

fn main() {
    let mut r = Report { failed: 0 };
    r.run(1, "radiation oracles", Duration::from_secs(1), radiation_oracles);
    r.run(2, "clear-sky optical depth", Duration::from_secs(1), clear_sky_depth);
    r.run(3, "copula fit recovery", Duration::from_secs(120), copula_recovery);
    r.run(4, "sampling correctness", Duration::from_secs(60), sampling);
    r.run(5, "MLP gradient, overfit, early stopping", Duration::from_secs(60), mlp_checks);
    r.run(6, "evaluation oracles", Duration::from_secs(1), evaluation_oracles);

    let scratch = tempfile::tempdir().expect("temp dir");
    let first = scratch.path().join("first");
    let mut results = None;
    r.run(7, "augmentation beats baseline", Duration::from_secs(30 * 60), || {
        let out = run_pipeline(&desk_config(), &first).map_err(|e| e.to_string())?;
        let v = directional(&out);
        results = Some(out);
        v
    });
    r.run(8, "end-to-end determinism", Duration::from_secs(30 * 60), || {
        results.as_ref().ok_or("criterion 7 produced no outputs")?;
        determinism(&first, scratch.path())
    });

    println!("acceptance: {} of 8 criteria failed", r.failed);
    if r.failed > 0 {
        std::process::exit(1);
    }
}
