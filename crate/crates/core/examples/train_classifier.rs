//! Builds the desk-profile classifier, tunes its trainable tail with PTSO on
//! a toy two-moon-like set, and saves the weights.
//!
//! ```text
//! cargo run --release --example train_classifier -- [weights.txt]
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ptso::model::{self, FitnessContext, TransferProfile, WeightVector};
use ptso::optim::PtsoConfig;
use ptso::{FeatureMatrix, LabelVector};

fn main() -> ptso::Result<()> {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..120 {
        let class = (i % 2) as u8;
        let t: f64 = r.gen_range(0.0..std::f64::consts::PI);
        let (x, y) = if class == 0 {
            (t.cos(), t.sin())
        } else {
            (1.0 - t.cos(), 0.5 - t.sin())
        };
        rows.push(vec![x + r.gen_range(-0.1..0.1), y + r.gen_range(-0.1..0.1)]);
        labels.push(class);
    }
    let m = FeatureMatrix::from_rows(&rows)?;
    let y = LabelVector::new(labels)?;

    let profile = TransferProfile::desk();
    let net = model::build_classifier(&profile, 2, 2)?;
    println!(
        "profile {} ({}): {} frozen, {} trainable parameters",
        profile.name,
        profile.hash(),
        net.frozen_count(),
        net.trainable_count()
    );

    let context = FitnessContext::new(&net, &m, &y)?;
    let cfg = PtsoConfig {
        max_evaluations: 6000,
        seed: 1,
        ..PtsoConfig::default()
    };
    let (weights, result) = model::train_classifier(&net, &context, &cfg, &model::default_bounds(&net)?)?;
    let pred = model::predict(&net, &weights.values, &m)?;
    let correct = pred.as_slice().iter().zip(y.as_slice()).filter(|(a, b)| a == b).count();
    println!(
        "fitness {:.4} after {} evaluations, training accuracy {:.3}",
        result.best_fitness,
        result.evaluations_used,
        correct as f64 / y.len() as f64
    );

    if let Some(path) = std::env::args().nth(1) {
        weights.save(&path)?;
        let back = WeightVector::load(&path)?;
        assert_eq!(back, weights);
        println!("weights written to {path}");
    }
    Ok(())
}
