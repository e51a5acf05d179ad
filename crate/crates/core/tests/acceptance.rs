//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line and then
//! asserts. Oracles here are written from the update rules and definitions
//! directly and do not call the library's helpers for the quantity under test.
//!
//! The end-to-end check reads the CSV named by `PTSO_DATASET` when set, and
//! falls back to the built-in 288-row synthetic cohort otherwise.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ptso::augment::{self, OversampleConfig};
use ptso::fusion::dmn::{maxout_unit, AffinePiece, DmnNetwork, MaxoutLayer};
use ptso::harness::config::{ExperimentConfig, SyntheticSource};
use ptso::harness::{self, metrics};
use ptso::model::{self, TransferProfile};
use ptso::optim::{self, steps, Algorithm, Bounds, PtsoConfig};
use ptso::qnorm::{self, QuantileStrategy};
use ptso::{FeatureMatrix, LabelVector};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("[criterion {id}] {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// 1 --------------------------------------------------------------------------

/// Solves `x = tsa(po⁻¹(x))` for the next position `x`. Both rules are affine
/// in `x`, so two evaluations of the residual pin down its root.
fn composed_next(prev: f64, best: f64, r: f64, k: f64) -> f64 {
    let current = |next: f64| (next - prev * (1.0 - r)) / r;
    let tangent = |t: f64| t * (1.0 + k) - k * best;
    let residual = |x: f64| tangent(current(x)) - x;
    let g0 = residual(0.0);
    let g1 = residual(1.0);
    -g0 / (g1 - g0)
}

#[test]
fn criterion_1_substitution_oracle() {
    let start = Instant::now();
    let mut r = rng(1);
    let draws = 100_000;
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < draws {
        let rr: f64 = r.gen_range(0.01..0.99);
        let s: f64 = r.gen_range(0.0..1.0);
        let theta = r.gen_range(0.0..std::f64::consts::PI);
        let k = s * theta.tan().clamp(-1e3, 1e3);
        // stay away from the pole R − 1 − k = 0
        if (rr - 1.0 - k).abs() < 1e-2 {
            continue;
        }
        let prev: f64 = r.gen_range(-10.0..10.0);
        let best: f64 = r.gen_range(-10.0..10.0);
        let got = steps::ptso_update(&[prev], &[best], rr, k).expect("non-singular")[0];
        let want = composed_next(prev, best, rr, k);
        worst = worst.max((got - want).abs() / want.abs().max(1.0));
        done += 1;
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-10 && elapsed < Duration::from_secs(5);
    report(
        1,
        "hybrid update equals the composed rules",
        pass,
        format!("max scaled error {worst:.2e} over {draws} draws in {:.2} s", elapsed.as_secs_f64()),
    );
    assert!(pass);
}

// 2 and 3 --------------------------------------------------------------------

struct FloorRuns {
    ptso: Vec<f64>,
    tsa: Vec<f64>,
    violations: usize,
    snapshots: usize,
    elapsed: Duration,
}

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn observed_run(algo: Algorithm, dim: usize, evals: usize, seed: u64, violations: &mut usize, snaps: &mut usize) -> f64 {
    let bounds = Bounds::uniform(dim, -5.0, 5.0).unwrap();
    let cfg = PtsoConfig {
        max_evaluations: evals,
        seed,
        ..PtsoConfig::default()
    };
    let mut last_best = f64::INFINITY;
    let result = optim::run_observed(&sphere, &cfg, &bounds, algo, |snap| {
        *snaps += 1;
        if snap.best_fitness > last_best {
            *violations += 1;
        }
        last_best = snap.best_fitness;
        let inside = |x: &[f64]| x.iter().all(|v| (-5.0..=5.0).contains(v));
        if !inside(snap.best_position) {
            *violations += 1;
        }
        *violations += snap.population.iter().filter(|a| !inside(&a.position)).count();
        // the best must be at least as good as every agent
        *violations += snap
            .population
            .iter()
            .filter(|a| a.fitness < snap.best_fitness)
            .count();
    })
    .unwrap();
    *violations += result.history.windows(2).filter(|w| w[1] > w[0]).count();
    if result.evaluations_used > evals || !bounds.contains(&result.best_position) {
        *violations += 1;
    }
    if (sphere(&result.best_position) - result.best_fitness).abs() > 0.0 {
        *violations += 1;
    }
    result.best_fitness
}

fn floor_runs() -> &'static FloorRuns {
    static RUNS: OnceLock<FloorRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let start = Instant::now();
        let mut violations = 0;
        let mut snapshots = 0;
        let ptso = (0..20)
            .map(|s| observed_run(Algorithm::Ptso, 10, 5000, s, &mut violations, &mut snapshots))
            .collect();
        let tsa = (0..20)
            .map(|s| observed_run(Algorithm::Tsa, 2, 2000, s, &mut violations, &mut snapshots))
            .collect();
        FloorRuns {
            ptso,
            tsa,
            violations,
            snapshots,
            elapsed: start.elapsed(),
        }
    })
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

#[test]
fn criterion_2_optimizer_floor() {
    let runs = floor_runs();
    let p = median(&runs.ptso);
    let t = median(&runs.tsa);
    let pass = p <= 1e-2 && t <= 1e-3 && runs.elapsed < Duration::from_secs(30);
    report(
        2,
        "optimizer floor on the sphere",
        pass,
        format!(
            "PTSO 10-D median {p:.3e} (≤ 1e-2), TSA 2-D median {t:.3e} (≤ 1e-3), {:.2} s",
            runs.elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_monotone_best_and_bounds() {
    let runs = floor_runs();
    let pass = runs.violations == 0 && runs.snapshots > 0;
    report(
        3,
        "monotone best and bounds",
        pass,
        format!("{} violations across {} sweep snapshots of 40 runs", runs.violations, runs.snapshots),
    );
    assert!(pass);
}

// 4 --------------------------------------------------------------------------

#[test]
fn criterion_4_quantile_normalization() {
    let mut r = rng(4);
    let rows: Vec<Vec<f64>> = (0..100)
        .map(|_| (0..8).map(|j| r.gen_range(-50.0..50.0) * (j + 1) as f64).collect())
        .collect();
    let m = FeatureMatrix::from_rows(&rows).unwrap();
    let once = qnorm::quantile_normalize(&m, &QuantileStrategy::all()).unwrap();
    let sorted = |row: &[f64]| {
        let mut s = row.to_vec();
        s.sort_by(f64::total_cmp);
        s
    };
    let first = sorted(once.row(0));
    let mut spread = 0.0f64;
    for row in once.iter_rows() {
        for (a, b) in sorted(row).iter().zip(&first) {
            spread = spread.max((a - b).abs());
        }
    }
    let twice = qnorm::quantile_normalize(&once, &QuantileStrategy::all()).unwrap();
    let drift = once
        .as_slice()
        .iter()
        .zip(twice.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let pass = spread <= 1e-12 && drift <= 1e-12;
    report(
        4,
        "quantile normalization (All)",
        pass,
        format!("sorted-row spread {spread:.1e}, idempotence drift {drift:.1e}"),
    );
    assert!(pass);
}

// 5 --------------------------------------------------------------------------

/// Brute force: is `x` on a segment between two distinct minority originals?
fn on_some_segment(x: &[f64], originals: &[&[f64]]) -> bool {
    for (i, a) in originals.iter().enumerate() {
        for (j, b) in originals.iter().enumerate() {
            if i == j {
                continue;
            }
            let d: Vec<f64> = a.iter().zip(*b).map(|(p, q)| q - p).collect();
            let dd: f64 = d.iter().map(|v| v * v).sum();
            let u = if dd == 0.0 {
                0.0
            } else {
                x.iter().zip(*a).zip(&d).map(|((xv, av), dv)| (xv - av) * dv).sum::<f64>() / dd
            };
            if !(-1e-12..=1.0 + 1e-12).contains(&u) {
                continue;
            }
            let err = x
                .iter()
                .zip(*a)
                .zip(&d)
                .map(|((xv, av), dv)| (xv - (av + u * dv)).abs())
                .fold(0.0, f64::max);
            if err <= 1e-9 {
                return true;
            }
        }
    }
    false
}

#[test]
fn criterion_5_oversampling() {
    let mut r = rng(5);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..80 {
        let class = u8::from(i % 4 == 3);
        let shift = if class == 1 { 3.0 } else { 0.0 };
        rows.push((0..5).map(|_| r.gen_range(-1.0..1.0) + shift).collect::<Vec<f64>>());
        labels.push(class);
    }
    let m = FeatureMatrix::from_rows(&rows).unwrap();
    let y = LabelVector::new(labels).unwrap();
    assert_eq!(y.counts(), [60, 20]);
    let out = augment::balance(&m, &y, &OversampleConfig { neighbors: 5, seed: 9 }).unwrap();
    let counts = out.labels.counts();
    let originals_same = (0..80).all(|i| {
        out.matrix.row(i).iter().zip(m.row(i)).all(|(a, b)| a.to_bits() == b.to_bits()) && out.labels.get(i) == y.get(i)
    });
    let minority: Vec<&[f64]> = y.indices_of(1).into_iter().map(|i| m.row(i)).collect();
    let bad = (80..out.matrix.rows())
        .filter(|&i| out.labels.get(i) != 1 || !on_some_segment(out.matrix.row(i), &minority))
        .count();
    let pass = counts == [60, 60] && originals_same && bad == 0;
    report(
        5,
        "oversampling to parity",
        pass,
        format!(
            "counts {counts:?}, {bad} synthetic rows off every minority segment, originals identical: {originals_same}"
        ),
    );
    assert!(pass);
}

// 6 --------------------------------------------------------------------------

fn random_vec(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-2.0..2.0)).collect()
}

fn affine(w: &[f64], b: f64, x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b
}

fn random_layer(r: &mut ChaCha8Rng, inputs: usize, units: usize, pieces: usize) -> MaxoutLayer {
    let p: Vec<Vec<AffinePiece>> = (0..units)
        .map(|_| {
            (0..pieces)
                .map(|_| AffinePiece::new(random_vec(r, inputs), r.gen_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    MaxoutLayer::from_pieces(&p).unwrap()
}

/// Enumerates every assignment of hidden pieces, keeps the one(s) consistent
/// with being the argmax at `x`, and evaluates the output unit on the
/// resulting affine hidden values.
fn branch_oracle(l1: &MaxoutLayer, l2: &MaxoutLayer, x: &[f64]) -> f64 {
    let h = l1.units();
    let mut value = None;
    for mask in 0..(1usize << h) {
        let choice: Vec<usize> = (0..h).map(|u| (mask >> u) & 1).collect();
        let consistent = (0..h).all(|u| {
            let chosen = affine(l1.piece_weights(u, choice[u]), l1.bias(u, choice[u]), x);
            (0..2).all(|w| affine(l1.piece_weights(u, w), l1.bias(u, w), x) <= chosen)
        });
        if !consistent {
            continue;
        }
        let hidden: Vec<f64> = (0..h)
            .map(|u| affine(l1.piece_weights(u, choice[u]), l1.bias(u, choice[u]), x))
            .collect();
        let out = (0..2)
            .map(|w| affine(l2.piece_weights(0, w), l2.bias(0, w), &hidden))
            .fold(f64::NEG_INFINITY, f64::max);
        value = Some(out);
    }
    value.expect("some branch is the argmax")
}

#[test]
fn criterion_6_maxout_and_dmn() {
    let mut r = rng(6);
    let mut below = 0;
    for _ in 0..10_000 {
        let pieces: Vec<AffinePiece> = (0..3)
            .map(|_| AffinePiece::new(random_vec(&mut r, 4), r.gen_range(-1.0..1.0)))
            .collect();
        let y = random_vec(&mut r, 4);
        let m = maxout_unit(&y, &pieces).unwrap();
        below += pieces.iter().filter(|p| m < affine(&p.weights, p.bias, &y)).count();
    }

    // one piece per unit: the network is W₂(W₁x + b₁) + b₂
    let l1 = random_layer(&mut r, 5, 4, 1);
    let l2 = random_layer(&mut r, 4, 1, 1);
    let linear = DmnNetwork::from_layers(vec![l1.clone(), l2.clone()]).unwrap();
    let mut w = [0.0; 5];
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = (0..4).map(|u| l2.piece_weights(0, 0)[u] * l1.piece_weights(u, 0)[i]).sum();
    }
    let b = l2.bias(0, 0) + (0..4).map(|u| l2.piece_weights(0, 0)[u] * l1.bias(u, 0)).sum::<f64>();
    let mut affine_err = 0.0f64;
    for _ in 0..1000 {
        let x = random_vec(&mut r, 5);
        affine_err = affine_err.max((linear.forward(&x).unwrap() - affine(&w, b, &x)).abs());
    }

    let l1 = random_layer(&mut r, 3, 4, 2);
    let l2 = random_layer(&mut r, 4, 1, 2);
    let net = DmnNetwork::from_layers(vec![l1.clone(), l2.clone()]).unwrap();
    let mut branch_err = 0.0f64;
    for _ in 0..1000 {
        let x = random_vec(&mut r, 3);
        branch_err = branch_err.max((net.forward(&x).unwrap() - branch_oracle(&l1, &l2, &x)).abs());
    }

    let pass = below == 0 && affine_err <= 1e-12 && branch_err <= 1e-12;
    report(
        6,
        "maxout and deep maxout network",
        pass,
        format!(
            "{below} piece dominance violations, one-piece affine error {affine_err:.1e}, branch-enumeration error {branch_err:.1e}"
        ),
    );
    assert!(pass);
}

// 7 --------------------------------------------------------------------------

#[test]
fn criterion_7_metric_identities() {
    let mut r = rng(7);
    let mut mismatches = 0;
    let mut bound_violations = 0;
    for _ in 0..1000 {
        let n = r.gen_range(1..60);
        let truth: Vec<u8> = (0..n).map(|_| r.gen_range(0..2)).collect();
        let pred: Vec<u8> = (0..n).map(|_| r.gen_range(0..2)).collect();
        let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
        for (p, t) in pred.iter().zip(&truth) {
            match (p, t) {
                (1, 1) => tp += 1,
                (1, 0) => fp += 1,
                (0, 1) => fn_ += 1,
                _ => tn += 1,
            }
        }
        let c = metrics::confusion(
            &LabelVector::new(pred).unwrap(),
            &LabelVector::new(truth).unwrap(),
            1,
        )
        .unwrap();
        if (c.true_positive, c.false_positive, c.false_negative, c.true_negative) != (tp, fp, fn_, tn) {
            mismatches += 1;
        }
        let p = metrics::precision(&c).value();
        let rc = metrics::recall(&c).value();
        let want_p = (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64);
        let want_r = (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64);
        if p != want_p || rc != want_r {
            mismatches += 1;
        }
        let f = metrics::f_measure(metrics::Metric(p), metrics::Metric(rc)).value();
        let want_f = (tp > 0).then(|| 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64);
        match (f, want_f) {
            (Some(a), Some(b)) if (a - b).abs() <= 1e-12 => {}
            (None, None) => {}
            _ => mismatches += 1,
        }
        if let (Some(f), Some(p), Some(rc)) = (f, p, rc) {
            if f < p.min(rc) || f > p.max(rc) || (p == rc && f != p) {
                bound_violations += 1;
            }
        }
    }
    let pass = mismatches == 0 && bound_violations == 0;
    report(
        7,
        "metric identities",
        pass,
        format!("{mismatches} mismatches, {bound_violations} harmonic-mean bound violations over 1000 tables"),
    );
    assert!(pass);
}

// 8 --------------------------------------------------------------------------

fn end_to_end_config() -> (ExperimentConfig, &'static str) {
    let mut c = ExperimentConfig {
        seeds: vec![1, 2, 3, 4, 5],
        ..ExperimentConfig::default()
    };
    c.protocol.learning_sets = vec![0.9];
    c.classifier.profile = "desk".into();
    match std::env::var_os("PTSO_DATASET") {
        Some(path) => {
            c.dataset = Some(path.into());
            (c, "dataset file")
        }
        None => {
            c.synthetic = Some(SyntheticSource::default());
            (c, "synthetic surrogate cohort")
        }
    }
}

#[test]
fn criterion_8_end_to_end() {
    let (config, source) = end_to_end_config();
    let start = Instant::now();
    let first = harness::run_pipeline(&config).unwrap();
    let second = harness::run_pipeline(&config).unwrap();
    let elapsed = start.elapsed();
    let deterministic = first.to_json() == second.to_json();
    let point = &first.points[0];
    let f = point.f_measure.median.value();
    let baseline = point.baseline_f_measure.median.value();
    let beats = matches!((f, baseline), (Some(f), Some(b)) if f > b);
    let pass = deterministic && beats && elapsed < Duration::from_secs(300) && first.provenance.rows == 288;
    let per_seed: Vec<String> = point.seeds.iter().map(|s| s.scores.f_measure.to_string()).collect();
    report(
        8,
        "end-to-end pipeline beats the majority baseline",
        pass,
        format!(
            "{source}, {} rows; median F {} vs baseline F {}; per-seed F [{}]; deterministic: {deterministic}; two runs in {:.1} s",
            first.provenance.rows,
            point.f_measure.median,
            point.baseline_f_measure.median,
            per_seed.join(", "),
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

// 9 --------------------------------------------------------------------------

#[test]
fn criterion_9_classifier_trainability() {
    let mut r = rng(9);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    while rows.len() < 20 {
        let x: f64 = r.gen_range(-1.0..1.0);
        let y: f64 = r.gen_range(-1.0..1.0);
        let side = x + 0.5 * y;
        // keep a margin around the separating line
        if side.abs() < 0.2 {
            continue;
        }
        rows.push(vec![x, y]);
        labels.push(u8::from(side > 0.0));
    }
    let m = FeatureMatrix::from_rows(&rows).unwrap();
    let y = LabelVector::new(labels).unwrap();
    let net = model::build_classifier(&TransferProfile::desk(), 2, 2).unwrap();
    let ctx = model::FitnessContext::new(&net, &m, &y).unwrap();
    let cfg = PtsoConfig {
        max_evaluations: 3000,
        seed: 11,
        ..PtsoConfig::default()
    };
    let (w, result) = model::train_classifier(&net, &ctx, &cfg, &model::default_bounds(&net).unwrap()).unwrap();
    let pred = model::predict(&net, &w.values, &m).unwrap();
    let correct = pred.as_slice().iter().zip(y.as_slice()).filter(|(a, b)| a == b).count();
    let accuracy = correct as f64 / 20.0;
    let pass = accuracy >= 0.95 && result.evaluations_used <= 3000;
    report(
        9,
        "classifier trainability",
        pass,
        format!(
            "training accuracy {accuracy:.2} (desk profile, |ψ| = {}) after {} evaluations",
            net.trainable_count(),
            result.evaluations_used
        ),
    );
    assert!(pass);
}
