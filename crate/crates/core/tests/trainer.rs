use mihe::linalg::Matrix;
use mihe::model::{BackgroundInit, HyperParams};
use mihe::simgen::{add_noise_to_snr, dirichlet, generate_dataset, spectral_angle_deg, SimConfig, SpectralLibrary};
use mihe::trainer::{initialize_dictionary, train, vca};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_scene() -> mihe::BagDataset<f64> {
    let mut cfg = SimConfig::parameter_study();
    cfg.pts_per_bag = 30;
    cfg.target_pts_per_pos_bag = 15;
    cfg.target_mean = vec![0.5];
    generate_dataset(&SpectralLibrary::builtin(), &cfg).unwrap().dataset
}

fn quick_hp() -> HyperParams {
    HyperParams {
        n_backgrounds: 3,
        max_outer_iters: 4,
        ista_iters: 50,
        ..HyperParams::default()
    }
}

/// Best one-to-one matching between recovered and true columns, by angle.
fn matched_angles(found: &Matrix<f64>, truth: &[Vec<f64>]) -> Vec<f64> {
    let mut used = vec![false; found.cols()];
    truth
        .iter()
        .map(|t| {
            let (k, angle) = found
                .columns()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, c)| (k, spectral_angle_deg(c, t)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            used[k] = true;
            angle
        })
        .collect()
}

#[test]
fn vca_recovers_one_hot_vertices() {
    let d = 6;
    let m = 3;
    let mut cols = Vec::new();
    for _ in 0..20 {
        for k in 0..m {
            let mut v = vec![0.0f64; d];
            v[k * 2] = 1.0;
            cols.push(v);
        }
    }
    let data = Matrix::from_columns(d, &cols);
    let truth: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let mut v = vec![0.0f64; d];
            v[k * 2] = 1.0;
            v
        })
        .collect();
    let found = vca(&data, m, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    for t in &truth {
        let best = found
            .columns()
            .map(|c| c.iter().zip(t).map(|(a, b)| (a.abs() - b).abs()).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-6, "vertex {t:?} not recovered: {best}");
    }
}

#[test]
fn vca_on_noisy_simplex_within_five_degrees() {
    let lib = SpectralLibrary::builtin();
    let names = ["verde_antique", "phyllite", "pyroxenite"];
    let ends: Vec<Vec<f64>> = names.iter().map(|n| lib.get(n).unwrap().to_vec()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let clean: Vec<Vec<f64>> = (0..1000)
        .map(|_| {
            let p = dirichlet(&mut rng, &[1.0; 3]);
            (0..lib.dim())
                .map(|i| (0..3).map(|k| p[k] * ends[k][i]).sum())
                .collect()
        })
        .collect();
    let noisy = add_noise_to_snr(&clean, 40.0, &mut rng);
    let found = vca(&Matrix::from_columns(lib.dim(), &noisy), 3, &mut rng).unwrap();
    for a in matched_angles(&found, &ends) {
        assert!(a < 5.0, "angle {a}");
    }
}

#[test]
fn zero_iterations_return_the_initialization() {
    let ds = small_scene();
    let hp = HyperParams {
        max_outer_iters: 0,
        ..quick_hp()
    };
    let report = train(&ds, &hp).unwrap();
    assert_eq!(report.final_dictionary, initialize_dictionary(&ds, &hp).unwrap());
    assert!(report.objective_trace.is_empty());
    assert_eq!(report.iterations_run, 0);
}

#[test]
fn training_is_deterministic() {
    let ds = small_scene();
    let a = train(&ds, &quick_hp()).unwrap();
    let b = train(&ds, &quick_hp()).unwrap();
    assert_eq!(a.final_dictionary, b.final_dictionary);
    assert_eq!(a.objective_trace, b.objective_trace);
    let other = train(&ds, &HyperParams { seed: 9, ..quick_hp() }).unwrap();
    assert_ne!(a.final_dictionary, other.final_dictionary);
}

#[test]
fn columns_stay_unit_norm_and_line_searches_never_increase() {
    let ds = small_scene();
    let report = train(&ds, &quick_hp()).unwrap();
    assert_eq!(report.norm_error_trace.len(), report.iterations_run);
    assert!(report.norm_error_trace.iter().all(|e| *e <= 1e-12));
    for ls in &report.line_searches {
        assert!(ls.value_after <= ls.value_before, "{ls:?}");
    }
}

#[test]
fn kmeans_initialization_trains() {
    let ds = small_scene();
    let hp = HyperParams {
        background_init: BackgroundInit::KMeans,
        ..quick_hp()
    };
    let report = train(&ds, &hp).unwrap();
    assert!(report.final_dictionary.max_unit_norm_error() <= 1e-12);
}

#[test]
fn single_precision_training_runs() {
    let ds = small_scene().cast::<f32>();
    let report = train(&ds, &quick_hp()).unwrap();
    assert!(report.final_dictionary.max_unit_norm_error() < 1e-5);
    assert!(report.objective_trace.iter().all(|o| o.total.is_finite()));
}

#[test]
fn reuse_switch_keeps_invariants() {
    let ds = small_scene();
    let hp = HyperParams {
        reuse_codes_within_iteration: true,
        ..quick_hp()
    };
    let report = train(&ds, &hp).unwrap();
    assert_eq!(report.iterations_run, report.objective_trace.len());
    assert!(report.norm_error_trace.iter().all(|e| *e <= 1e-12));
}
