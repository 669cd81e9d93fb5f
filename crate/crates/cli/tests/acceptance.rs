//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criteria 1–5 are exact properties and fail the process when violated.
//! Criteria 6–9 are stochastic reproduction targets measured at desk scale;
//! their verdicts are reported but do not change the exit status.
//!
//! Pass substrings as arguments to run a subset, e.g.
//! `cargo test --test acceptance -- c1 c4`.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mihe::detectors::{ace_score, fit_background, hsd_score, Method};
use mihe::eval::{auc, lower_median, ScoreSet};
use mihe::experiment::{derive_seed, run_experiment, run_sweep, ExperimentConfig, SweepParam, SweepSpec};
use mihe::linalg::Matrix;
use mihe::model::{Bag, BagDataset, BagLabel, CodeBook, ConceptDictionary, HyperParams, Instance, SparseCodes};
use mihe::objective::{evaluate_objective, grad_background_atom, grad_target_atom};
use mihe::simgen::{generate_dataset, spectral_angle_deg, SimConfig, SpectralLibrary};
use mihe::sparse::{lasso_objective, IstaConfig, LassoSolver};
use mihe::trainer::train;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 5;
const SETTING_BUDGET: Duration = Duration::from_secs(600);

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

struct Criterion {
    id: &'static str,
    name: &'static str,
    gating: bool,
    run: fn() -> Verdict,
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria = [
        Criterion { id: "c1", name: "gradient correctness", gating: true, run: c1_gradients },
        Criterion { id: "c2", name: "ista", gating: true, run: c2_ista },
        Criterion { id: "c3", name: "detector identities", gating: true, run: c3_detectors },
        Criterion { id: "c4", name: "pipeline determinism", gating: true, run: c4_determinism },
        Criterion { id: "c5", name: "unit-norm invariant", gating: true, run: c5_unit_norm },
        Criterion { id: "c6", name: "incomplete background", gating: false, run: c6_incomplete_background },
        Criterion { id: "c7", name: "multi-target", gating: false, run: c7_multi_target },
        Criterion { id: "c8", name: "parameter robustness", gating: false, run: c8_parameter_robustness },
        Criterion { id: "c9", name: "target recovery", gating: false, run: c9_target_recovery },
    ];
    let mut gating_failures = 0;
    for c in &criteria {
        let label = format!("{} {}", c.id, c.name);
        if !filters.is_empty() && !filters.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = (c.run)();
        let verdict = if v.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {label} [{:.1}s]: {}", start.elapsed().as_secs_f64(), v.detail);
        if !v.pass && c.gating {
            gating_failures += 1;
        }
    }
    if gating_failures > 0 {
        std::process::exit(1);
    }
}

fn unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, range: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-range..range)).collect()
}

struct Toy {
    ds: BagDataset<f64>,
    dict: ConceptDictionary<f64>,
    codes: CodeBook<f64>,
    hp: HyperParams,
}

fn toy(seed: u64) -> Toy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(4..=10);
    let t = rng.random_range(1..=2);
    let m = rng.random_range(2..=3);
    let n_bags = rng.random_range(2..=4);
    let n_pos = rng.random_range(1..n_bags);
    let targets: Vec<Vec<f64>> = (0..t).map(|_| unit(&mut rng, d)).collect();
    let backgrounds: Vec<Vec<f64>> = (0..m).map(|_| unit(&mut rng, d)).collect();
    let dict = ConceptDictionary::new(Matrix::from_columns(d, &targets), Matrix::from_columns(d, &backgrounds)).unwrap();
    let mut bags = Vec::new();
    let mut codes = Vec::new();
    for b in 0..n_bags {
        let label = if b < n_pos { BagLabel::Positive } else { BagLabel::Negative };
        let (mut inst, mut bag_codes) = (Vec::new(), Vec::new());
        for _ in 0..rng.random_range(2..=5) {
            let x = random_vec(&mut rng, d, 1.0);
            let a = random_vec(&mut rng, t + m, 0.8);
            let p = random_vec(&mut rng, m, 0.8);
            bag_codes.push(SparseCodes::new(&x, &dict, a, p));
            inst.push(Instance::new(x));
        }
        bags.push(Bag::new(format!("b{b}"), label, inst));
        codes.push(bag_codes);
    }
    let hp = HyperParams {
        n_targets: t,
        n_backgrounds: m,
        beta: rng.random_range(0.5..5.0),
        b: rng.random_range(1.0..6.0),
        rho: rng.random_range(0.1..1.0),
        alpha_incoh: rng.random_range(0.1..2.0),
        ..HyperParams::default()
    };
    Toy { ds: BagDataset::new(bags), dict, codes, hp }
}

/// Objective with atom `k` replaced, codes frozen and residuals recomputed.
fn frozen_objective(toy: &Toy, k: usize, atom: &[f64]) -> f64 {
    let mut dict = toy.dict.clone();
    dict.set_atom(k, atom);
    let codes: CodeBook<f64> = toy
        .ds
        .bags
        .iter()
        .zip(&toy.codes)
        .map(|(bag, cs)| {
            bag.instances
                .iter()
                .zip(cs)
                .map(|(x, c)| {
                    let mut c = c.clone();
                    c.refresh_residuals(x.as_slice(), &dict);
                    c
                })
                .collect()
        })
        .collect();
    evaluate_objective(&toy.ds, &dict, &toy.hp, &codes).unwrap().total
}

fn c1_gradients() -> Verdict {
    let start = Instant::now();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let toy = toy(seed);
        let n_t = toy.dict.n_targets();
        for k in 0..toy.dict.n_atoms() {
            let g = if k < n_t {
                grad_target_atom(k, &toy.ds, &toy.dict, &toy.hp, &toy.codes).unwrap()
            } else {
                grad_background_atom(k - n_t, &toy.ds, &toy.dict, &toy.hp, &toy.codes).unwrap()
            };
            let atom = toy.dict.atom(k).to_vec();
            let fd: Vec<f64> = (0..atom.len())
                .map(|i| {
                    let (mut up, mut down) = (atom.clone(), atom.clone());
                    up[i] += h;
                    down[i] -= h;
                    (frozen_objective(&toy, k, &up) - frozen_objective(&toy, k, &down)) / (2.0 * h)
                })
                .collect();
            let diff = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-8);
            worst = worst.max(diff / scale);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        worst < 1e-4 && secs < 10.0,
        format!("max relative error {worst:.2e} (< 1e-4) over 20 toys, {secs:.2}s (< 10s)"),
    )
}

fn coordinate_descent(x: &[f64], d: &Matrix<f64>, lambda: f64) -> Vec<f64> {
    let mut a = vec![0.0; d.cols()];
    let mut r = x.to_vec();
    for _ in 0..100_000 {
        let mut max_delta: f64 = 0.0;
        for (k, ak) in a.iter_mut().enumerate() {
            let col = d.col(k);
            let norm_sq: f64 = col.iter().map(|v| v * v).sum();
            let rho = col.iter().zip(&r).map(|(c, ri)| c * ri).sum::<f64>() + norm_sq * *ak;
            let new = rho.signum() * (rho.abs() - lambda).max(0.0) / norm_sq;
            let delta = new - *ak;
            for (ri, c) in r.iter_mut().zip(col) {
                *ri -= delta * c;
            }
            *ak = new;
            max_delta = max_delta.max(delta.abs());
        }
        if max_delta < 1e-14 {
            break;
        }
    }
    a
}

fn c2_ista() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = IstaConfig { max_iters: 1_000_000, ..IstaConfig::default() };
    let slack = 10.0 * cfg.tolerance;
    let (mut rises, mut unconverged, mut kkt_violations) = (0, 0, 0);
    let mut worst_gap: f64 = 0.0;
    for _ in 0..100 {
        let (rows, cols) = (rng.random_range(4..12), rng.random_range(1..6));
        let d = Matrix::from_col_major(rows, cols, random_vec(&mut rng, rows * cols, 1.0));
        let x = random_vec(&mut rng, rows, 1.0);
        let lambda = rng.random_range(0.001..0.3);
        let solver = LassoSolver::new(d.clone(), cfg).unwrap();
        let mut prev = lasso_objective(&x, &d, &vec![0.0; cols], lambda);
        let sol = solver.solve_correlated(&solver.correlate(&x), lambda, |a| {
            let f = lasso_objective(&x, &d, a, lambda);
            if f > prev + 1e-12 * prev.abs().max(1.0) {
                rises += 1;
            }
            prev = f;
        });
        if !sol.converged {
            unconverged += 1;
            continue;
        }
        let recon = d.mul_vec(&sol.code);
        let resid: Vec<f64> = x.iter().zip(&recon).map(|(a, b)| a - b).collect();
        let corr = d.tr_mul_vec(&resid);
        // Slack scales with the step because the stopping rule bounds the iterate change.
        let tol = slack / solver.step();
        for (c, a) in corr.iter().zip(&sol.code) {
            let ok = if *a != 0.0 { (c - lambda * a.signum()).abs() <= tol } else { c.abs() <= lambda + tol };
            kkt_violations += usize::from(!ok);
        }
        let oracle = coordinate_descent(&x, &d, lambda);
        let gap = (lasso_objective(&x, &d, &sol.code, lambda) - lasso_objective(&x, &d, &oracle, lambda)).abs();
        worst_gap = worst_gap.max(gap);
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        rises == 0 && unconverged == 0 && kkt_violations == 0 && worst_gap < 1e-6 && secs < 10.0,
        format!(
            "100 instances: {rises} objective rises, {unconverged} unconverged, {kkt_violations} certificate violations, \
             max gap to coordinate descent {worst_gap:.2e} (< 1e-6), {secs:.2}s (< 10s)"
        ),
    )
}

fn pair_count_auc(scores: &[f64], truth: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (s, t) in scores.iter().zip(truth) {
        if !t {
            continue;
        }
        for (u, v) in scores.iter().zip(truth) {
            if *v {
                continue;
            }
            pairs += 1.0;
            wins += if s > u { 1.0 } else if s == u { 0.5 } else { 0.0 };
        }
    }
    wins / pairs
}

fn c3_detectors() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = 6;
    let (mut ace_range, mut ace_scale, mut ace_collinear, mut hsd_low) = (0, 0, 0, 0);
    let mut worst_auc: f64 = 0.0;
    let ista = IstaConfig { max_iters: 5000, tolerance: 1e-10, step_override: None };
    for _ in 0..50 {
        let cloud: Vec<Vec<f64>> = (0..40).map(|_| random_vec(&mut rng, d, 1.0)).collect();
        let bg = fit_background(cloud.iter().map(Vec::as_slice), Some(1e-3)).unwrap();
        let s = random_vec(&mut rng, d, 1.0);
        for _ in 0..10 {
            let x = random_vec(&mut rng, d, 2.0);
            let a = ace_score(&x, &s, &bg).unwrap();
            ace_range += usize::from(!(0.0..=1.0).contains(&a));
            let c = rng.random_range(0.01..100.0);
            let scaled: Vec<f64> = s.iter().map(|v| c * v).collect();
            ace_scale += usize::from((ace_score(&x, &scaled, &bg).unwrap() - a).abs() > 1e-9);
            let k = rng.random_range(-5.0..5.0);
            let collinear: Vec<f64> = bg.mu.iter().zip(&s).map(|(m, v)| m + k * v).collect();
            ace_collinear += usize::from((ace_score(&collinear, &s, &bg).unwrap() - 1.0).abs() > 1e-9);
        }
        let t = unit(&mut rng, d);
        let b = Matrix::from_columns(d, &[unit(&mut rng, d), unit(&mut rng, d)]);
        let dict = ConceptDictionary::new(Matrix::from_columns(d, &[t]), b).unwrap();
        for _ in 0..5 {
            let x = random_vec(&mut rng, d, 1.0);
            hsd_low += usize::from(hsd_score(&x, &dict, 1e-3, ista).unwrap().ratio < 1.0 - 1e-6);
        }
    }
    for _ in 0..50 {
        // Coarse grid forces ties.
        let scores: Vec<f64> = (0..200).map(|_| f64::from(rng.random_range(0..40u8)) / 4.0).collect();
        // The first two entries guarantee both classes.
        let truth: Vec<bool> = (0..200).map(|i| i == 0 || (i > 1 && rng.random_bool(0.4))).collect();
        let ours = auc(&ScoreSet::from_labeled(&scores, &truth).unwrap()).unwrap();
        worst_auc = worst_auc.max((ours - pair_count_auc(&scores, &truth)).abs());
    }
    Verdict::new(
        ace_range + ace_scale + ace_collinear + hsd_low == 0 && worst_auc < 1e-12,
        format!(
            "ACE out of [0,1]: {ace_range}, scale changes: {ace_scale}, collinear != 1: {ace_collinear}; \
             HSD ratio < 1-1e-6: {hsd_low}; max |AUC - pair count| {worst_auc:.1e} (< 1e-12)"
        ),
    )
}

fn mihe(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_mihe"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

/// Runs simulate, train, detect and eval in `dir`; returns the produced files.
fn pipeline(dir: &Path) -> Option<Vec<(String, Vec<u8>)>> {
    let mut sim = SimConfig::incomplete_background(0.5);
    sim.pts_per_bag = 40;
    sim.target_pts_per_pos_bag = 16;
    sim.seed = 11;
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    fs::write(p("sim.json"), serde_json::json!({ "schema_version": 1, "simulation": sim }).to_string()).ok()?;
    let params = serde_json::json!({
        "schema_version": 1,
        "hyperparams": { "n_backgrounds": 3, "max_outer_iters": 3, "seed": 5 }
    });
    fs::write(p("params.json"), params.to_string()).ok()?;
    let steps: [Vec<String>; 5] = [
        vec!["simulate".into(), "--config".into(), p("sim.json"), "--out".into(), p("data.csv"), "--truth".into(), p("truth.csv")],
        vec!["train".into(), "--data".into(), p("data.csv"), "--params".into(), p("params.json"), "--model".into(), p("model.json"), "--trace".into(), p("trace.csv")],
        vec!["detect".into(), "--model".into(), p("model.json"), "--scene".into(), p("data.csv"), "--method".into(), "hsd".into(), "--out".into(), p("hsd.csv")],
        vec!["detect".into(), "--model".into(), p("model.json"), "--scene".into(), p("data.csv"), "--method".into(), "ace".into(), "--out".into(), p("ace.csv"), "--truth".into(), p("truth.csv")],
        vec!["eval".into(), "--scores".into(), p("ace.csv"), "--metrics".into(), p("metrics.json"), "--roc".into(), p("roc.csv"), "--nauc-far".into(), "1e-2".into()],
    ];
    for step in &steps {
        let args: Vec<&str> = step.iter().map(String::as_str).collect();
        if !mihe(&args) {
            return None;
        }
    }
    let names = ["data.csv", "truth.csv", "model.json", "trace.csv", "hsd.csv", "ace.csv", "metrics.json", "roc.csv"];
    names.iter().map(|n| fs::read(p(n)).ok().map(|b| (n.to_string(), b))).collect()
}

fn c4_determinism() -> Verdict {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    match (pipeline(a.path()), pipeline(b.path())) {
        (Some(x), Some(y)) => {
            let differing: Vec<&str> = x.iter().zip(&y).filter(|(p, q)| p.1 != q.1).map(|(p, _)| p.0.as_str()).collect();
            Verdict::new(
                differing.is_empty(),
                format!("{} output files compared, differing: {differing:?}", x.len()),
            )
        }
        _ => Verdict::new(false, "pipeline command failed"),
    }
}

fn c5_unit_norm() -> Verdict {
    let lib = SpectralLibrary::builtin();
    let mut single = SimConfig::incomplete_background(0.3);
    single.pts_per_bag = 60;
    single.target_pts_per_pos_bag = 24;
    let mut multi = SimConfig::multi_target([0.3, 0.3]);
    multi.pts_per_bag = 60;
    multi.target_pts_per_pos_bag = 24;
    let runs = [(single, 1, 9), (multi, 2, 9), (SimConfig::parameter_study(), 1, 3)];
    let mut worst: f64 = 0.0;
    let mut recorded = 0;
    for (sim, t, m) in runs {
        let ds = generate_dataset(&lib, &sim).unwrap().dataset;
        let hp = HyperParams { n_targets: t, n_backgrounds: m, max_outer_iters: 8, ..HyperParams::default() };
        let report = train(&ds, &hp).unwrap();
        recorded += report.norm_error_trace.len();
        let all = report.norm_error_trace.iter().copied().chain([report.final_dictionary.max_unit_norm_error()]);
        worst = all.fold(worst, f64::max);
        if report.norm_error_trace.len() != report.iterations_run {
            return Verdict::new(false, "norm trace does not cover every outer iteration");
        }
    }
    Verdict::new(worst <= 1e-12, format!("{recorded} recorded iterations, max | ||d||-1 | {worst:.1e} (<= 1e-12)"))
}

struct SettingResult {
    median_auc: f64,
    median_angle: f64,
    aucs: Vec<f64>,
    elapsed: Duration,
}

/// Median over `SEEDS` runs, each with its own scene and training seed.
fn repeated(lib: &SpectralLibrary, sim: &SimConfig, hp: &HyperParams, method: Method, grid: u64) -> SettingResult {
    let start = Instant::now();
    let (mut aucs, mut angles) = (Vec::new(), Vec::new());
    for run in 0..SEEDS {
        let seed = derive_seed(0, grid, run);
        let mut sim = sim.clone();
        sim.seed = seed;
        let cfg = ExperimentConfig::new(sim.clone(), hp.clone(), method);
        let out = run_experiment(lib, &cfg, seed).unwrap();
        aucs.push(out.auc);
        let truth = lib.get(&sim.target_names[0]).unwrap();
        let dict = out.dictionary();
        let angle = (0..dict.n_targets())
            .map(|t| spectral_angle_deg(dict.targets.col(t), truth))
            .fold(f64::INFINITY, f64::min);
        angles.push(angle);
    }
    SettingResult {
        median_auc: lower_median(&aucs).unwrap(),
        median_angle: lower_median(&angles).unwrap(),
        aucs,
        elapsed: start.elapsed(),
    }
}

fn fmt_aucs(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|a| format!("{a:.3}")).collect();
    format!("[{}]", parts.join(" "))
}

fn reference_hp(t: usize, m: usize) -> HyperParams {
    HyperParams {
        n_targets: t,
        n_backgrounds: m,
        rho: 0.8,
        b: 5.0,
        beta: 5.0,
        lambda: 1e-3,
        ..HyperParams::default()
    }
}

fn c6_incomplete_background() -> Verdict {
    let lib = SpectralLibrary::builtin();
    let hp = reference_hp(1, 9);
    let checks: [(f64, &str, fn(f64) -> bool); 3] = [
        (0.1, "within 0.05 of 0.763", |a| (a - 0.763).abs() <= 0.05),
        (0.5, ">= 0.97", |a| a >= 0.97),
        (0.7, ">= 0.99", |a| a >= 0.99),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (grid, (alpha, want, ok)) in checks.iter().enumerate() {
        let mut sim = SimConfig::incomplete_background(*alpha);
        sim.pts_per_bag = 200;
        sim.target_pts_per_pos_bag = 80;
        let r = repeated(&lib, &sim, &hp, Method::Ace, grid as u64);
        let good = ok(r.median_auc) && r.elapsed < SETTING_BUDGET;
        pass &= good;
        parts.push(format!(
            "alpha {alpha}: median AUC {:.3} ({want}) runs {} angle {:.1} deg, {:.0}s (< 600s) {}",
            r.median_auc,
            fmt_aucs(&r.aucs),
            r.median_angle,
            r.elapsed.as_secs_f64(),
            if good { "ok" } else { "miss" }
        ));
    }
    Verdict::new(pass, parts.join("; "))
}

fn c7_multi_target() -> Verdict {
    let lib = SpectralLibrary::builtin();
    let hp = reference_hp(2, 9);
    let checks: [([f64; 2], f64); 2] = [([0.3, 0.3], 0.99), ([0.1, 0.1], 0.85)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (grid, (alpha, floor)) in checks.iter().enumerate() {
        let sim = SimConfig::multi_target(*alpha);
        let r = repeated(&lib, &sim, &hp, Method::Hsd, 10 + grid as u64);
        let good = r.median_auc >= floor - 0.03;
        pass &= good;
        parts.push(format!(
            "alpha {alpha:?}: median HSD AUC {:.3} (>= {floor} - 0.03) runs {}, {:.0}s {}",
            r.median_auc,
            fmt_aucs(&r.aucs),
            r.elapsed.as_secs_f64(),
            if good { "ok" } else { "miss" }
        ));
    }
    Verdict::new(pass, parts.join("; "))
}

fn c8_parameter_robustness() -> Verdict {
    let lib = SpectralLibrary::builtin();
    let mut base = ExperimentConfig::new(SimConfig::parameter_study(), reference_hp(1, 7), Method::Ace);
    base.simulation.seed = derive_seed(0, 20, 0);
    let ms = vec![1.0, 3.0, 5.0, 7.0, 9.0];
    let spec = SweepSpec::single(SweepParam::M, ms.clone(), SEEDS as usize);
    let rows = run_sweep(&lib, &base, &spec).unwrap();
    let medians: Vec<f64> = rows.iter().map(|r| r.median_auc().unwrap_or(f64::NAN)).collect();
    let reference = medians[3];
    let plateau = medians[1..].iter().all(|m| (m - reference).abs() <= 0.03);
    let m1_gap = reference - medians[0];
    let parts: Vec<String> = ms.iter().zip(&medians).map(|(m, a)| format!("M={m}: {a:.3}")).collect();
    Verdict::new(
        plateau && m1_gap >= 0.03,
        format!(
            "median AUC {}; M in 3..9 within 0.03 of M=7: {plateau}; M=7 - M=1 = {m1_gap:.3} (>= 0.03)",
            parts.join(", ")
        ),
    )
}

fn c9_target_recovery() -> Verdict {
    let lib = SpectralLibrary::builtin();
    let hp = reference_hp(1, 3);
    let mut pass = true;
    let mut parts = Vec::new();
    for (grid, alpha) in [0.3, 0.5, 0.7].into_iter().enumerate() {
        let mut sim = SimConfig::incomplete_background(alpha);
        sim.pts_per_bag = 200;
        sim.target_pts_per_pos_bag = 80;
        let r = repeated(&lib, &sim, &hp, Method::Ace, 30 + grid as u64);
        let good = r.median_angle < 10.0;
        pass &= good;
        parts.push(format!(
            "alpha {alpha}: median angle {:.1} deg (< 10), AUC {:.3} {}",
            r.median_angle,
            r.median_auc,
            if good { "ok" } else { "miss" }
        ));
    }
    Verdict::new(pass, parts.join("; "))
}
