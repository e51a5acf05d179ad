//! Compares PTSO with its two parent update rules on the standard test
//! functions.
//!
//! ```text
//! cargo run --release --example ptso_benchmark -- [dim] [evals] [seeds]
//! ```

use ptso::optim::bench::BenchmarkFunction;
use ptso::optim::{self, Algorithm, PtsoConfig};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn main() -> ptso::Result<()> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("numeric argument"))
        .collect();
    let dim = args.first().copied().unwrap_or(10);
    let evals = args.get(1).copied().unwrap_or(5000);
    let seeds = args.get(2).copied().unwrap_or(10) as u64;

    println!("dim {dim}, {evals} evaluations, median of {seeds} seeds");
    println!("{:<12} {:>12} {:>12} {:>12}", "function", "ptso", "tsa", "po");
    for f in [BenchmarkFunction::Sphere, BenchmarkFunction::Rastrigin, BenchmarkFunction::Rosenbrock] {
        let bounds = f.default_bounds(dim)?;
        let objective = |x: &[f64]| f.eval(x);
        let mut cells = Vec::new();
        for algo in [Algorithm::Ptso, Algorithm::Tsa, Algorithm::Po] {
            let best = (0..seeds)
                .map(|seed| {
                    let cfg = PtsoConfig {
                        max_evaluations: evals,
                        seed,
                        ..PtsoConfig::default()
                    };
                    optim::run(&objective, &cfg, &bounds, algo).map(|r| r.best_fitness)
                })
                .collect::<ptso::Result<Vec<_>>>()?;
            cells.push(format!("{:>12.3e}", median(best)));
        }
        println!("{:<12} {}", format!("{f:?}").to_lowercase(), cells.join(" "));
    }
    Ok(())
}
