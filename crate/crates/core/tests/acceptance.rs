//! Acceptance suite: one test per release criterion, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see them on success).
//!
//! The dataset comes from the bundled deterministic generator unless
//! `SURFACE_DATA_DIR` points at a directory with a `manifest.json` and
//! per-material CSVs, in which case that capture is used instead.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use specmap_core::cloud_io::{load_dataset, CsvSchema, Dataset, DatasetManifest, SurfaceClass};
use specmap_core::evaluation::{
    evaluate_once, material_classes, sample_split_materials, split_from_materials, sweep,
    ModelSuite, SplitSpec, DEFAULT_TEST_SURFACES, FIXED_TRAINING_SURFACES,
};
use specmap_core::features::{
    feature_matrix, specularity_db, FeatureMatrix, DEFAULT_EPSILON,
};
use specmap_core::learners::{
    derive_seed, loss_and_gradients, train_gbdt, train_random_forest, BoostConfig, DenseLayer,
    ForestConfig, RegNode,
};
use specmap_core::patching::{
    partition_into_patches, patch_count_report, DEFAULT_BIN_SIZE, DEFAULT_MIN_POINTS,
};
use specmap_core::refdata::{generate_reference_dataset, DEFAULT_REFDATA_SEED};
use specmap_core::synth::{
    generate_scan, rayleigh_threshold, scattering_factor, RoughnessSpec, SyntheticSurfaceSpec,
    WaveSpec,
};

/// Master seed for the evaluation criteria; every split and model seed in
/// criteria 2, 3 and 8 derives from these two constants, so the whole suite
/// is reproducible bit for bit.
const FIXED_EVAL_SEED: u64 = 99;
const SWEEP_MASTER_SEED: u64 = 1234;

/// Published per-material point counts. The published grand total (78,165)
/// does not equal the sum of the fifteen rows; the rows are taken as
/// authoritative, so the expected total is their sum, 73,099.
const POINT_ROWS: [(&str, usize); 15] = [
    ("metal_copper", 4896),
    ("metal_tin", 4780),
    ("whiteboard", 4940),
    ("linoleum", 5189),
    ("tv", 4993),
    ("projector_screen", 4994),
    ("carpet", 3193),
    ("corkboard", 4965),
    ("cardboard", 5010),
    ("rough_wood", 5048),
    ("drywall", 5032),
    ("smooth_wood", 5073),
    ("concrete_wall", 5025),
    ("styrofoam", 4977),
    ("fabric_pinboard", 4984),
];

/// Published per-material patch counts (±10% each, ±5% on the 1,339 total).
const PATCH_ROWS: [(&str, usize); 15] = [
    ("metal_copper", 143),
    ("metal_tin", 94),
    ("whiteboard", 79),
    ("linoleum", 82),
    ("tv", 85),
    ("projector_screen", 75),
    ("carpet", 96),
    ("corkboard", 81),
    ("cardboard", 80),
    ("rough_wood", 84),
    ("drywall", 77),
    ("smooth_wood", 80),
    ("concrete_wall", 83),
    ("styrofoam", 72),
    ("fabric_pinboard", 78),
];

fn load_surfaces() -> Dataset {
    match std::env::var("SURFACE_DATA_DIR") {
        Ok(dir) => {
            let dir = std::path::PathBuf::from(dir);
            let manifest = DatasetManifest::from_path(&dir.join("manifest.json"))
                .expect("SURFACE_DATA_DIR must contain manifest.json");
            load_dataset(&manifest, &dir, &CsvSchema::default()).expect("load SURFACE_DATA_DIR")
        }
        Err(_) => generate_reference_dataset(DEFAULT_REFDATA_SEED),
    }
}

fn featurize(dataset: &Dataset) -> FeatureMatrix {
    let grids: Vec<_> = dataset
        .scans
        .iter()
        .map(|s| partition_into_patches(s, DEFAULT_BIN_SIZE, DEFAULT_MIN_POINTS).unwrap())
        .collect();
    feature_matrix(dataset, &grids, DEFAULT_EPSILON).unwrap()
}

/// Print the criterion verdict line, then fail the test if needed.
fn verdict(criterion: u32, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("[ACCEPTANCE {criterion}] {status}: {detail}");
    assert!(ok, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_1_dataset_accounting() {
    let t = Instant::now();
    let dataset = load_surfaces();
    let report = patch_count_report(&dataset, DEFAULT_BIN_SIZE, DEFAULT_MIN_POINTS).unwrap();

    let mut ok = true;
    let mut notes = Vec::new();
    for (name, points) in POINT_ROWS {
        let got = dataset.scan(name).map_or(0, |s| s.points.len());
        if got != points {
            ok = false;
            notes.push(format!("{name} points {got} != {points}"));
        }
    }
    let expected_total: usize = POINT_ROWS.iter().map(|(_, n)| n).sum();
    if dataset.total_points() != expected_total {
        ok = false;
        notes.push(format!(
            "total points {} != {expected_total}",
            dataset.total_points()
        ));
    }
    for (name, patches) in PATCH_ROWS {
        let got = report
            .rows
            .iter()
            .find(|r| r.material == name)
            .map_or(0, |r| r.patches);
        let dev = (got as f64 - patches as f64).abs() / patches as f64;
        if dev > 0.10 {
            ok = false;
            notes.push(format!("{name} patches {got} vs {patches} (>10%)"));
        }
    }
    let total_dev = (report.total_patches as f64 - 1339.0).abs() / 1339.0;
    if total_dev > 0.05 {
        ok = false;
        notes.push(format!("total patches {} vs 1339 (>5%)", report.total_patches));
    }
    let elapsed = t.elapsed();
    if elapsed.as_secs() >= 30 {
        ok = false;
        notes.push(format!("runtime {elapsed:?} >= 30 s"));
    }
    verdict(
        1,
        ok,
        &format!(
            "15 materials, {} points (table rows sum; printed total 78,165 is inconsistent \
             with its rows), {} patches vs 1,339, {elapsed:.2?}{}",
            dataset.total_points(),
            report.total_patches,
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    );
}

#[test]
fn criterion_2_fixed_split_reproduction() {
    let t = Instant::now();
    let table = featurize(&load_surfaces());
    let train: Vec<String> = FIXED_TRAINING_SURFACES.iter().map(|s| s.to_string()).collect();
    let test: Vec<String> = DEFAULT_TEST_SURFACES.iter().map(|s| s.to_string()).collect();
    let split = split_from_materials(&table, &train, &test).unwrap();

    let n_seeds = 20u64;
    // keyed by model id: (accuracy, low recall, semi recall) sums
    let mut sums: std::collections::BTreeMap<String, (f64, f64, f64)> = Default::default();
    for rep in 0..n_seeds {
        let base = derive_seed(FIXED_EVAL_SEED, &[rep]);
        let mut suite = ModelSuite::all_defaults();
        suite.forest.as_mut().unwrap().seed = derive_seed(base, &[1]);
        suite.boosted.as_mut().unwrap().seed = derive_seed(base, &[2]);
        suite.mlp.as_mut().unwrap().seed = derive_seed(base, &[3]);
        for r in evaluate_once(&table, &split, &suite).unwrap() {
            let e = sums.entry(r.model_id.clone()).or_default();
            e.0 += r.accuracy;
            e.1 += r.per_class[0].recall;
            e.2 += r.per_class[1].recall;
        }
    }
    let mean = |m: &str| {
        let (a, l, s) = sums[m];
        (a / n_seeds as f64, l / n_seeds as f64, s / n_seeds as f64)
    };
    let (f_acc, f_low, f_semi) = mean("forest");
    let (b_acc, b_low, _) = mean("boosted");
    let (m_acc, m_low, _) = mean("mlp");

    let mut ok = true;
    let mut notes = Vec::new();
    let mut window = |name: &str, value: f64, center: f64, tol: f64| {
        if (value - center).abs() > tol {
            ok = false;
            notes.push(format!("{name} {value:.3} outside {center}±{tol}"));
        }
    };
    window("forest accuracy", f_acc, 0.84, 0.05);
    window("boosted accuracy", b_acc, 0.82, 0.05);
    window("mlp accuracy", m_acc, 0.77, 0.07);
    window("forest semi recall", f_semi, 0.73, 0.08);
    for (name, low) in [("forest", f_low), ("boosted", b_low), ("mlp", m_low)] {
        if low < 0.97 {
            ok = false;
            notes.push(format!("{name} low recall {low:.3} < 0.97"));
        }
    }
    let elapsed = t.elapsed();
    if elapsed.as_secs() >= 300 {
        ok = false;
        notes.push(format!("runtime {elapsed:?} >= 5 min"));
    }
    verdict(
        2,
        ok,
        &format!(
            "acc forest {f_acc:.3} boosted {b_acc:.3} mlp {m_acc:.3}; low recall \
             {f_low:.3}/{b_low:.3}/{m_low:.3}; forest semi recall {f_semi:.3}; {elapsed:.2?}{}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    );
}

#[test]
fn criterion_3_sweep_trend_reproduction() {
    let t = Instant::now();
    let table = featurize(&load_surfaces());
    let test: Vec<String> = DEFAULT_TEST_SURFACES.iter().map(|s| s.to_string()).collect();
    let k_values: Vec<usize> = (2..=11).collect();
    let report = sweep(
        &table,
        &k_values,
        50,
        &test,
        &ModelSuite::all_defaults(),
        SWEEP_MASTER_SEED,
    )
    .unwrap();

    let mean = |k: usize, model: &str| {
        report
            .entries
            .iter()
            .find(|e| e.k == k && e.model == model)
            .map(|e| e.mean_accuracy)
            .unwrap_or(f64::NAN)
    };
    let forest_best = k_values
        .iter()
        .filter(|&&k| mean(k, "forest") > mean(k, "boosted") && mean(k, "forest") > mean(k, "mlp"))
        .count();
    let k10 = mean(10, "forest");

    let mut ok = true;
    let mut notes = Vec::new();
    if forest_best < 7 {
        ok = false;
        notes.push(format!("forest best at only {forest_best}/10 k values"));
    }
    if (k10 - 0.746).abs() > 0.05 {
        ok = false;
        notes.push(format!("forest k=10 mean {k10:.3} outside 0.746±0.05"));
    }
    let elapsed = t.elapsed();
    if elapsed.as_secs() >= 900 {
        ok = false;
        notes.push(format!("runtime {elapsed:?} >= 15 min"));
    }
    verdict(
        3,
        ok,
        &format!(
            "forest best at {forest_best}/10 k values, forest k=10 mean {k10:.3}, {elapsed:.2?}{}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    );
}

#[test]
fn criterion_4_physics_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let target = (-std::f64::consts::PI.powi(2) / 8.0).exp();
    let mut ok = true;
    let mut notes = Vec::new();

    for _ in 0..100 {
        let wavelength = rng.gen_range(200e-9..2000e-9);
        let incidence_rad = rng.gen_range(0.0..std::f64::consts::FRAC_PI_2 * 0.95);
        let wave = WaveSpec {
            wavelength,
            incidence_angle: incidence_rad,
        };
        let h_c = rayleigh_threshold(wave).unwrap();
        let rho = scattering_factor(RoughnessSpec { h_rms: h_c }, wave).unwrap();
        let rel = ((rho - target) / target).abs();
        if rel > 1e-12 {
            ok = false;
            notes.push(format!("rho_s(h_c) off by {rel:.2e}"));
            break;
        }
        // rho_s in (0,1] and strictly decreasing in h_rms.
        let mut prev = f64::INFINITY;
        for step in 0..50 {
            let h = h_c * (step as f64) / 10.0 + rng.gen_range(0.0..h_c / 20.0);
            let r = scattering_factor(RoughnessSpec { h_rms: h }, wave).unwrap();
            if !(r > 0.0 && r <= 1.0) {
                ok = false;
                notes.push(format!("rho_s {r} outside (0,1]"));
                break;
            }
            if step > 0 && r >= prev {
                ok = false;
                notes.push("rho_s not strictly decreasing in h_rms".into());
                break;
            }
            prev = r;
        }
        if !ok {
            break;
        }
        // Normal incidence: h_c = wavelength / 8 exactly.
        let normal = WaveSpec {
            wavelength,
            incidence_angle: 0.0,
        };
        if rayleigh_threshold(normal).unwrap() != wavelength / 8.0 {
            ok = false;
            notes.push("h_c(lambda, 0) != lambda/8".into());
            break;
        }
    }
    verdict(
        4,
        ok,
        &format!(
            "rho_s(h_c, theta) = exp(-pi^2/8) = {target:.8} to 1e-12 over 100 draws; monotone \
             decreasing; h_c(lambda, 0) = lambda/8{}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    );
}

#[test]
fn criterion_5_feature_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ok = true;
    let mut notes = Vec::new();

    // Scale invariance of specularity_db under positive scalings.
    let base: Vec<f64> = (0..64).map(|_| rng.gen_range(0.01..500.0)).collect();
    let reference = specularity_db(&base).unwrap();
    for _ in 0..1000 {
        let scale = 10f64.powf(rng.gen_range(-6.0..6.0));
        let scaled: Vec<f64> = base.iter().map(|v| v * scale).collect();
        let db = specularity_db(&scaled).unwrap();
        if (db - reference).abs() > 1e-9 {
            ok = false;
            notes.push(format!("scale {scale:.3e} shifted dB by {:.2e}", db - reference));
            break;
        }
    }

    // Constant patches: 0 dB and MMR within epsilon-rounding of 1.
    let constant = vec![7.5; 40];
    let db = specularity_db(&constant).unwrap();
    if db.abs() > 1e-12 {
        ok = false;
        notes.push(format!("constant patch gave {db} dB"));
    }
    let lnv = (1.0 + 7.5f64).ln();
    let mmr_const = lnv / (lnv + DEFAULT_EPSILON);
    if (mmr_const - 1.0).abs() > 1e-9 {
        ok = false;
        notes.push("constant-patch MMR not ~1".into());
    }

    // Worked example [1, 1, 1, 9]: 10*log10(9/3) = 4.7712 dB. The quoted
    // MMR 2.1017 was produced with rounded intermediates; full precision
    // gives 2.10184, so the pinned tolerance is 2e-4.
    let db = specularity_db(&[1.0, 1.0, 1.0, 9.0]).unwrap();
    if (db - 4.7712).abs() > 5e-5 {
        ok = false;
        notes.push(format!("worked example {db:.5} dB != 4.7712"));
    }
    let logs: Vec<f64> = [1.0f64, 1.0, 1.0, 9.0].iter().map(|v| (1.0 + v).ln()).collect();
    let maxln = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let meanln = logs.iter().sum::<f64>() / logs.len() as f64;
    let mmr = maxln / (meanln + DEFAULT_EPSILON);
    if (mmr - 2.1017).abs() > 2e-4 {
        ok = false;
        notes.push(format!("worked example MMR {mmr:.5} vs 2.1017±2e-4"));
    }
    verdict(
        5,
        ok,
        &format!(
            "scale-invariant to 1e-9 dB over 1,000 scalings; constant patch 0 dB, MMR ~1; \
             worked example {db:.4} dB, MMR {mmr:.5} (2.1017 quoted from rounded \
             intermediates; tolerance 2e-4){}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    );
}

#[test]
fn criterion_6_learner_correctness() {
    let mut ok = true;
    let mut notes = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(6);

    // --- MLP analytic gradients vs central finite differences ---
    let dims = [3usize, 6, 4, 2];
    let mut layers: Vec<DenseLayer> = dims
        .windows(2)
        .map(|w| DenseLayer {
            weights: (0..w[1])
                .map(|_| (0..w[0]).map(|_| rng.gen_range(-0.7..0.7)).collect())
                .collect(),
            bias: (0..w[1]).map(|_| rng.gen_range(-0.2..0.2)).collect(),
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..12)
        .map(|_| (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect())
        .collect();
    let labels: Vec<usize> = (0..12).map(|i| i % 2).collect();
    let (_, grads) = loss_and_gradients(&layers, &rows, &labels, None);
    let h = 1e-5;
    let mut max_rel: f64 = 0.0;
    for li in 0..layers.len() {
        for oi in 0..layers[li].bias.len() {
            for wi in 0..=layers[li].weights[oi].len() {
                let read = |l: &Vec<DenseLayer>| {
                    if wi < l[li].weights[oi].len() {
                        l[li].weights[oi][wi]
                    } else {
                        l[li].bias[oi]
                    }
                };
                let write = |l: &mut Vec<DenseLayer>, v: f64| {
                    if wi < l[li].weights[oi].len() {
                        l[li].weights[oi][wi] = v;
                    } else {
                        l[li].bias[oi] = v;
                    }
                };
                let orig = read(&layers);
                write(&mut layers, orig + h);
                let (lp, _) = loss_and_gradients(&layers, &rows, &labels, None);
                write(&mut layers, orig - h);
                let (lm, _) = loss_and_gradients(&layers, &rows, &labels, None);
                write(&mut layers, orig);
                let numeric = (lp - lm) / (2.0 * h);
                let analytic = if wi < grads[li].weights[oi].len() {
                    grads[li].weights[oi][wi]
                } else {
                    grads[li].bias[oi]
                };
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
                max_rel = max_rel.max(rel);
            }
        }
    }
    if max_rel >= 1e-4 {
        ok = false;
        notes.push(format!("MLP gradient rel err {max_rel:.2e} >= 1e-4"));
    }

    // --- GBDT single stump matches -G/(H+lambda) ---
    let rows: Vec<Vec<f64>> = (0..20)
        .map(|i| vec![i as f64, (i * 7 % 5) as f64, rng.gen_range(-1.0..1.0)])
        .collect();
    let labels: Vec<usize> = (0..20).map(|i| usize::from(i >= 8)).collect();
    let config = BoostConfig {
        n_estimators: 1,
        max_depth: 1,
        learning_rate: 1.0,
        subsample: 1.0,
        colsample_bytree: 1.0,
        reg_alpha: 0.0,
        reg_lambda: 1.7,
        gamma: 0.0,
        seed: 11,
    };
    let model = train_gbdt(&rows, &labels, &config).unwrap();
    let prior = labels.iter().sum::<usize>() as f64 / labels.len() as f64;
    let p = 1.0 / (1.0 + (-model.base_score).exp());
    if (p - prior).abs() > 1e-12 {
        ok = false;
        notes.push("base score is not the prior log-odds".into());
    }
    match &model.trees[0] {
        RegNode::Split {
            feature_index,
            threshold,
            left,
            right,
        } => {
            for (node, side) in [(left, true), (right, false)] {
                let members: Vec<usize> = (0..rows.len())
                    .filter(|&i| (rows[i][*feature_index] < *threshold) == side)
                    .collect();
                // With a constant prior p, g_i = p - y_i and h_i = p(1-p).
                let g: f64 = members.iter().map(|&i| p - labels[i] as f64).sum();
                let h: f64 = members.len() as f64 * p * (1.0 - p);
                let expected = -g / (h + config.reg_lambda);
                let got = match node.as_ref() {
                    RegNode::Leaf { value } => *value,
                    _ => f64::NAN,
                };
                if (got - expected).abs() > 1e-9 {
                    ok = false;
                    notes.push(format!("stump leaf {got} != -G/(H+lambda) {expected}"));
                }
            }
        }
        RegNode::Leaf { .. } => {
            ok = false;
            notes.push("stump did not split".into());
        }
    }

    // --- gamma = 1e9 collapses to the prior log-odds ---
    let config = BoostConfig {
        gamma: 1e9,
        subsample: 1.0,
        colsample_bytree: 1.0,
        ..BoostConfig::default()
    };
    let model = train_gbdt(&rows, &labels, &config).unwrap();
    for row in &rows {
        if (model.decision(row).unwrap() - model.base_score).abs() > 1e-12 {
            ok = false;
            notes.push("gamma=1e9 prediction differs from prior log-odds".into());
            break;
        }
    }

    // --- forest determinism across runs and thread counts ---
    let rows: Vec<Vec<f64>> = (0..60)
        .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let labels: Vec<usize> = rows.iter().map(|r| usize::from(r[0] + r[1] > 0.0)).collect();
    let config = ForestConfig {
        seed: 77,
        ..ForestConfig::default()
    };
    let train = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| train_random_forest(&rows, &labels, &config).unwrap())
    };
    let reference = serde_json::to_string(&train(1)).unwrap();
    for threads in [1usize, 2, 4] {
        if serde_json::to_string(&train(threads)).unwrap() != reference {
            ok = false;
            notes.push(format!("forest differs with {threads} threads"));
        }
    }

    verdict(
        6,
        ok,
        &format!(
            "MLP gradient rel err {max_rel:.2e}; GBDT stump leaves match -G/(H+lambda) to 1e-9; \
             gamma=1e9 yields prior log-odds; forest bit-identical across reruns and 1/2/4 \
             threads{}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    );
}

#[test]
fn criterion_7_synthetic_end_to_end_oracle() {
    let t = Instant::now();
    let smooth = |name: &str, seed: u64| SyntheticSurfaceSpec {
        name: name.into(),
        h_rms: 0.0,
        seed,
        ..SyntheticSurfaceSpec::default()
    };
    let rough = |name: &str, seed: u64| SyntheticSurfaceSpec {
        name: name.into(),
        h_rms: 905e-9, // well past the Rayleigh threshold
        seed,
        ..SyntheticSurfaceSpec::default()
    };
    let mut scans = Vec::new();
    for i in 0..6u64 {
        scans.push(generate_scan(&smooth(&format!("smooth_{i}"), 100 + i)).unwrap());
        scans.push(generate_scan(&rough(&format!("rough_{i}"), 200 + i)).unwrap());
    }
    let dataset = Dataset { scans };
    let table = featurize(&dataset);
    // Train on 8 surfaces (4 smooth, 4 rough), hold out 2 of each.
    let train: Vec<String> = (0..4)
        .flat_map(|i| [format!("smooth_{i}"), format!("rough_{i}")])
        .collect();
    let test: Vec<String> = (4..6)
        .flat_map(|i| [format!("smooth_{i}"), format!("rough_{i}")])
        .collect();
    let split = split_from_materials(&table, &train, &test).unwrap();
    let suite = ModelSuite {
        forest: Some(ForestConfig::default()),
        boosted: None,
        mlp: None,
    };
    let result = &evaluate_once(&table, &split, &suite).unwrap()[0];

    let mut ok = true;
    let mut notes = Vec::new();
    if result.accuracy < 0.95 {
        ok = false;
        notes.push(format!("synthetic oracle accuracy {:.3} < 0.95", result.accuracy));
    }
    let elapsed = t.elapsed();
    if elapsed.as_secs() >= 60 {
        ok = false;
        notes.push(format!("runtime {elapsed:?} >= 1 min"));
    }
    verdict(
        7,
        ok,
        &format!(
            "forest on 8 synthetic train / 4 held-out surfaces: accuracy {:.3} over {} patches, \
             {elapsed:.2?}{}",
            result.accuracy,
            result.n_test,
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    );
}

#[test]
fn criterion_8_protocol_invariants() {
    let table = featurize(&load_surfaces());
    let materials = material_classes(&table);
    let mut ok = true;
    let mut notes = Vec::new();

    // 10,000 sampled splits never share a surface between train and test.
    'outer: for i in 0..10_000u64 {
        let k = 2 + (i % 10) as usize;
        let spec = SplitSpec::with_default_test(k, derive_seed(0xD15C0, &[i]));
        let (train, test) = sample_split_materials(&materials, &spec).unwrap();
        for m in &train {
            if test.contains(m) {
                ok = false;
                notes.push(format!("split {i} shares surface {m}"));
                break 'outer;
            }
        }
    }

    // Confusion-matrix row sums equal the true class counts.
    let train: Vec<String> = FIXED_TRAINING_SURFACES.iter().map(|s| s.to_string()).collect();
    let test: Vec<String> = DEFAULT_TEST_SURFACES.iter().map(|s| s.to_string()).collect();
    let split = split_from_materials(&table, &train, &test).unwrap();
    let truth: [usize; 2] = split.test_indices.iter().fold([0, 0], |mut acc, &i| {
        acc[table.labels[i].index()] += 1;
        acc
    });
    for r in evaluate_once(&table, &split, &ModelSuite::all_defaults()).unwrap() {
        for class in [SurfaceClass::LowSpecular, SurfaceClass::SemiSpecular] {
            let c = class.index();
            let row_sum = r.confusion[c][0] + r.confusion[c][1];
            if row_sum != truth[c] {
                ok = false;
                notes.push(format!(
                    "{} confusion row {c} sums to {row_sum}, true count {}",
                    r.model_id, truth[c]
                ));
            }
        }
    }

    // Sweep output is bit-identical across two runs with one master seed.
    let run = || {
        serde_json::to_string(
            &sweep(&table, &[3, 5], 3, &test, &ModelSuite::all_defaults(), 2024).unwrap(),
        )
        .unwrap()
    };
    if run() != run() {
        ok = false;
        notes.push("sweep reruns differ under a fixed master seed".into());
    }

    verdict(
        8,
        ok,
        &format!(
            "10,000 splits disjoint; confusion rows sum to class counts; sweep bit-identical \
             across reruns{}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    );
}
