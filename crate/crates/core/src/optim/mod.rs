//! Population-based minimization with tangent search, its political
//! optimizer hybrid (PTSO), and the benchmark functions used to validate them.
//!
//! One iteration ("sweep") of [`run`]:
//!
//! 1. The current global best `U` is frozen for the sweep.
//! 2. Every agent draws `R`. If `R < p_switch` it intensifies (hybrid, tangent
//!    or interpolation step toward `U`, then partial coordinate copying from
//!    `U`); otherwise it explores by tangent flight. The candidate is clipped
//!    back into the bounds and replaces the agent only if it is better.
//! 3. With probability `p_esc` a random agent takes an escape move.
//! 4. With probability `worst_replace_prob` the worst agent is replaced by a
//!    fresh uniform sample.
//!
//! Randomness for agent `m` in sweep `q` comes from its own stream keyed by
//! `(seed, m, q)`, so agents are processed in parallel with results identical
//! to a serial run.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rng;

pub mod bench;
pub mod steps;

pub use bench::{benchmark_objective, Benchmark, BenchmarkFunction};
pub use steps::{
    escape_local, explore, po_update, ptso_update, replace_dimensions, restore_bounds, tsa_update,
};

/// Something to minimize.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Box constraints, `lower < upper` in every coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_len(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::invalid("bounds need at least one dimension"));
        }
        if let Some(j) = (0..lower.len()).find(|&j| lower[j] >= upper[j] || !upper[j].is_finite() || !lower[j].is_finite()) {
            return Err(Error::invalid(format!(
                "bound {j}: lower {} must be below upper {}",
                lower[j], upper[j]
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    pub fn sample(&self, rng: &mut rng::Rng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + rng.gen::<f64>() * (hi - lo))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchAgent {
    pub position: Vec<f64>,
    /// Position one sweep earlier.
    pub previous_position: Vec<f64>,
    pub fitness: f64,
}

pub type Population = Vec<SearchAgent>;

/// `l` agents drawn uniformly inside `bounds`. Fitness starts at +∞.
pub fn init_population(bounds: &Bounds, size: usize, seed: u64) -> Result<Population> {
    if size < 1 {
        return Err(Error::invalid("population size must be at least 1"));
    }
    Ok((0..size)
        .map(|m| {
            let position = bounds.sample(&mut rng::stream(seed, &[0, m as u64]));
            SearchAgent {
                previous_position: position.clone(),
                position,
                fitness: f64::INFINITY,
            }
        })
        .collect())
}

/// Intensification rule used by [`run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Hybrid political-tangent step from the previous position.
    Ptso,
    /// Tangent step from the current position.
    Tsa,
    /// Interpolation between previous and current position.
    Po,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ptso" => Ok(Self::Ptso),
            "tsa" => Ok(Self::Tsa),
            "po" => Ok(Self::Po),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ptso => "ptso",
            Self::Tsa => "tsa",
            Self::Po => "po",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PtsoConfig {
    pub population_size: usize,
    pub max_evaluations: usize,
    pub p_switch: f64,
    pub p_esc: f64,
    /// Initial step size `s₀`; the step decays linearly to 0 over the budget.
    pub step_initial: f64,
    /// Per-coordinate probability of copying from the best solution.
    pub p_replace: f64,
    pub worst_replace_prob: f64,
    pub seed: u64,
}

impl Default for PtsoConfig {
    fn default() -> Self {
        Self {
            population_size: 30,
            max_evaluations: 5000,
            p_switch: 0.5,
            p_esc: 0.3,
            step_initial: 1.0,
            p_replace: 0.3,
            worst_replace_prob: 0.01,
            seed: 0,
        }
    }
}

impl PtsoConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {p} outside [0, 1]")))
            }
        };
        unit("p_switch", self.p_switch)?;
        unit("p_esc", self.p_esc)?;
        unit("worst_replace_prob", self.worst_replace_prob)?;
        if !(self.p_replace > 0.0 && self.p_replace < 0.5) {
            return Err(Error::Config(format!(
                "p_replace = {} must be in (0, 0.5)",
                self.p_replace
            )));
        }
        if self.population_size < 1 {
            return Err(Error::Config("population size must be at least 1".into()));
        }
        if self.max_evaluations < self.population_size {
            return Err(Error::Config(format!(
                "budget of {} evaluations is smaller than one sweep of {}",
                self.max_evaluations, self.population_size
            )));
        }
        if !(self.step_initial >= 0.0 && self.step_initial.is_finite()) {
            return Err(Error::Config("step size must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Step size after `used` of the evaluation budget.
    pub fn step_size(&self, used: usize) -> f64 {
        self.step_initial * (1.0 - used as f64 / self.max_evaluations as f64).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    pub evaluations_used: usize,
    /// Best fitness after initialization and after every sweep.
    pub history: Vec<f64>,
}

/// State handed to an observer after initialization and after every sweep.
pub struct SweepSnapshot<'a> {
    pub iteration: usize,
    pub evaluations_used: usize,
    pub best_fitness: f64,
    pub best_position: &'a [f64],
    pub population: &'a [SearchAgent],
}

fn score(objective: &dyn Objective, x: &[f64]) -> f64 {
    let f = objective.evaluate(x);
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

// Stream tags.
const AGENT_STREAM: u64 = 1;
const SWEEP_STREAM: u64 = 2;
const MAX_SINGULAR_RETRIES: usize = 64;

fn intensify(
    algorithm: Algorithm,
    agent: &SearchAgent,
    best: &[f64],
    step: f64,
    config: &PtsoConfig,
    r: &mut rng::Rng,
) -> Vec<f64> {
    let stepped = match algorithm {
        Algorithm::Ptso => {
            let mut out = agent.position.clone();
            for _ in 0..MAX_SINGULAR_RETRIES {
                let rr: f64 = r.gen();
                let k = step * steps::tangent_flight(r);
                if let Ok(v) = ptso_update(&agent.previous_position, best, rr, k) {
                    out = v;
                    break;
                }
            }
            out
        }
        Algorithm::Tsa => tsa_update(&agent.position, best, step * steps::tangent_flight(r)),
        Algorithm::Po => po_update(&agent.previous_position, &agent.position, r.gen()),
    };
    replace_dimensions(&stepped, best, config.p_replace, r)
}

/// Candidate move for agent `m` in sweep `q`.
#[allow(clippy::too_many_arguments)]
pub fn propose(
    algorithm: Algorithm,
    agent: &SearchAgent,
    best: &[f64],
    step: f64,
    config: &PtsoConfig,
    bounds: &Bounds,
    m: usize,
    q: usize,
) -> Vec<f64> {
    let mut r = rng::stream(config.seed, &[AGENT_STREAM, m as u64, q as u64]);
    let moved = if r.gen::<f64>() < config.p_switch {
        intensify(algorithm, agent, best, step, config, &mut r)
    } else {
        explore(&agent.position, step, &mut r)
    };
    restore_bounds(&moved, bounds, &mut r)
}

/// Minimizes `objective` inside `bounds` with the chosen intensification rule.
pub fn run(
    objective: &dyn Objective,
    config: &PtsoConfig,
    bounds: &Bounds,
    algorithm: Algorithm,
) -> Result<OptimizationResult> {
    run_observed(objective, config, bounds, algorithm, |_| {})
}

pub fn run_ptso(objective: &dyn Objective, config: &PtsoConfig, bounds: &Bounds) -> Result<OptimizationResult> {
    run(objective, config, bounds, Algorithm::Ptso)
}

pub fn run_tsa(objective: &dyn Objective, config: &PtsoConfig, bounds: &Bounds) -> Result<OptimizationResult> {
    run(objective, config, bounds, Algorithm::Tsa)
}

pub fn run_po(objective: &dyn Objective, config: &PtsoConfig, bounds: &Bounds) -> Result<OptimizationResult> {
    run(objective, config, bounds, Algorithm::Po)
}

/// [`run`] with a callback after initialization and after each sweep.
pub fn run_observed(
    objective: &dyn Objective,
    config: &PtsoConfig,
    bounds: &Bounds,
    algorithm: Algorithm,
    mut observer: impl FnMut(&SweepSnapshot),
) -> Result<OptimizationResult> {
    config.validate()?;
    let dim = bounds.dim();
    let budget = config.max_evaluations;
    let mut pop = init_population(bounds, config.population_size, config.seed)?;
    let init_fit: Vec<f64> = pop.par_iter().map(|a| score(objective, &a.position)).collect();
    for (a, f) in pop.iter_mut().zip(init_fit) {
        a.fitness = f;
    }
    let mut evals = pop.len();
    let (mut best_pos, mut best_fit) = best_of(&pop);
    let mut history = vec![best_fit];
    observer(&SweepSnapshot {
        iteration: 0,
        evaluations_used: evals,
        best_fitness: best_fit,
        best_position: &best_pos,
        population: &pop,
    });

    // Candidates identical to the current position are not evaluated; the
    // sweep cap only guards against a search that has stopped moving.
    let max_sweeps = budget.saturating_mul(4).max(16);
    let mut q = 0;
    while evals < budget && q < max_sweeps {
        q += 1;
        let step = config.step_size(evals);
        let frozen_best = best_pos.clone();
        let proposals: Vec<Vec<f64>> = pop
            .par_iter()
            .enumerate()
            .map(|(m, a)| propose(algorithm, a, &frozen_best, step, config, bounds, m, q))
            .collect();

        // Evaluation slots go to moving agents in index order until the budget runs out.
        let mut remaining = budget - evals;
        let slots: Vec<bool> = proposals
            .iter()
            .zip(&pop)
            .map(|(c, a)| {
                let take = remaining > 0 && *c != a.position;
                remaining -= usize::from(take);
                take
            })
            .collect();
        let fits: Vec<Option<f64>> = proposals
            .par_iter()
            .zip(slots.par_iter())
            .map(|(c, &s)| s.then(|| score(objective, c)))
            .collect();
        for ((agent, cand), fit) in pop.iter_mut().zip(proposals).zip(fits) {
            agent.previous_position = agent.position.clone();
            if let Some(f) = fit {
                evals += 1;
                if f < agent.fitness {
                    agent.position = cand;
                    agent.fitness = f;
                }
            }
        }

        let mut r = rng::stream(config.seed, &[SWEEP_STREAM, q as u64]);
        let (sweep_best_pos, sweep_best_fit) = best_of(&pop);
        if sweep_best_fit < best_fit {
            best_fit = sweep_best_fit;
            best_pos = sweep_best_pos;
        }
        if evals < budget && r.gen::<f64>() < config.p_esc {
            let m = r.gen_range(0..pop.len());
            let cand = escape_local(&pop[m].position, &best_pos, &mut r, bounds);
            let f = score(objective, &cand);
            evals += 1;
            if f < pop[m].fitness {
                pop[m].position = cand;
                pop[m].fitness = f;
            }
        }
        if evals < budget && r.gen::<f64>() < config.worst_replace_prob {
            let worst = (0..pop.len())
                .max_by(|&a, &b| pop[a].fitness.total_cmp(&pop[b].fitness).then(b.cmp(&a)))
                .unwrap_or(0);
            let fresh = bounds.sample(&mut r);
            let f = score(objective, &fresh);
            evals += 1;
            pop[worst].position = fresh;
            pop[worst].fitness = f;
        }
        let (p, f) = best_of(&pop);
        if f < best_fit {
            best_fit = f;
            best_pos = p;
        }
        history.push(best_fit);
        observer(&SweepSnapshot {
            iteration: q,
            evaluations_used: evals,
            best_fitness: best_fit,
            best_position: &best_pos,
            population: &pop,
        });
    }
    debug_assert_eq!(best_pos.len(), dim);
    Ok(OptimizationResult {
        best_position: best_pos,
        best_fitness: best_fit,
        evaluations_used: evals,
        history,
    })
}

/// Lowest-fitness agent; ties go to the lower index.
fn best_of(pop: &[SearchAgent]) -> (Vec<f64>, f64) {
    let best = pop
        .iter()
        .reduce(|a, b| if b.fitness < a.fitness { b } else { a })
        .expect("population is non-empty");
    (best.position.clone(), best.fitness)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_init() {
        let b = Bounds::uniform(2, 0.0, 1.0).unwrap();
        let p = init_population(&b, 3, 4).unwrap();
        assert_eq!(p.len(), 3);
        assert!(p.iter().all(|a| b.contains(&a.position) && a.previous_position == a.position));
        assert_eq!(p, init_population(&b, 3, 4).unwrap());
        assert!(init_population(&b, 0, 4).is_err());
        assert!(Bounds::new(vec![1.0], vec![1.0]).is_err());
        assert!(Bounds::new(vec![2.0], vec![1.0]).is_err());
    }

    #[test]
    fn config_validation() {
        let ok = PtsoConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            PtsoConfig { p_replace: 0.5, ..ok.clone() },
            PtsoConfig { p_switch: 1.5, ..ok.clone() },
            PtsoConfig { max_evaluations: 10, ..ok.clone() },
            PtsoConfig { population_size: 0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn constant_objective_is_flat() {
        let b = Bounds::uniform(3, -1.0, 1.0).unwrap();
        let cfg = PtsoConfig { max_evaluations: 300, population_size: 10, ..Default::default() };
        for algo in [Algorithm::Ptso, Algorithm::Tsa, Algorithm::Po] {
            let res = run(&|_: &[f64]| 4.0, &cfg, &b, algo).unwrap();
            assert_eq!(res.best_fitness, 4.0);
            assert!(res.history.iter().all(|&h| h == 4.0));
            assert!(res.evaluations_used <= 300);
        }
    }

    #[test]
    fn same_seed_same_result() {
        let b = Bounds::uniform(4, -5.0, 5.0).unwrap();
        let cfg = PtsoConfig { max_evaluations: 1000, seed: 17, ..Default::default() };
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        for algo in [Algorithm::Ptso, Algorithm::Tsa, Algorithm::Po] {
            assert_eq!(run(&f, &cfg, &b, algo).unwrap(), run(&f, &cfg, &b, algo).unwrap());
        }
    }

    #[test]
    fn tsa_reaches_sphere_2d() {
        let b = Bounds::uniform(2, -5.0, 5.0).unwrap();
        let cfg = PtsoConfig { max_evaluations: 2000, seed: 1, ..Default::default() };
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let res = run_tsa(&f, &cfg, &b).unwrap();
        assert!(res.best_fitness < 1e-2, "{}", res.best_fitness);
    }

    #[test]
    fn budget_respected_and_history_monotone() {
        let b = Bounds::uniform(5, -5.12, 5.12).unwrap();
        let obj = benchmark_objective("rastrigin", 5).unwrap();
        for seed in 0..5 {
            let cfg = PtsoConfig { max_evaluations: 777, seed, ..Default::default() };
            let res = run_ptso(&obj, &cfg, &b).unwrap();
            assert!(res.evaluations_used <= 777);
            assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(*res.history.last().unwrap(), res.best_fitness);
            assert!(b.contains(&res.best_position));
        }
    }
}
