//! Standard test functions, each with global minimum 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{Bounds, Objective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchmarkFunction {
    Sphere,
    Rosenbrock,
    Rastrigin,
}

impl std::str::FromStr for BenchmarkFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sphere" => Ok(Self::Sphere),
            "rosenbrock" => Ok(Self::Rosenbrock),
            "rastrigin" => Ok(Self::Rastrigin),
            other => Err(Error::Config(format!("unknown benchmark function `{other}`"))),
        }
    }
}

impl BenchmarkFunction {
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Self::Sphere => x.iter().map(|v| v * v).sum(),
            Self::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
            Self::Rastrigin => {
                10.0 * x.len() as f64
                    + x.iter()
                        .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos())
                        .sum::<f64>()
            }
        }
    }

    /// Location of the global minimum.
    pub fn optimum(self, dim: usize) -> Vec<f64> {
        match self {
            Self::Rosenbrock => vec![1.0; dim],
            _ => vec![0.0; dim],
        }
    }

    /// Conventional search box.
    pub fn default_bounds(self, dim: usize) -> Result<Bounds> {
        match self {
            Self::Sphere => Bounds::uniform(dim, -5.0, 5.0),
            Self::Rosenbrock => Bounds::uniform(dim, -2.048, 2.048),
            Self::Rastrigin => Bounds::uniform(dim, -5.12, 5.12),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Benchmark {
    pub function: BenchmarkFunction,
    pub dim: usize,
}

impl Objective for Benchmark {
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.function.eval(x)
    }
}

pub fn benchmark_objective(name: &str, dim: usize) -> Result<Benchmark> {
    if dim == 0 {
        return Err(Error::invalid("benchmark dimension must be positive"));
    }
    Ok(Benchmark {
        function: name.parse()?,
        dim,
    })
}
