//! Individual position-update rules. All are pure given their random inputs;
//! the `*_rng` wrappers only draw those inputs.

use rand::Rng as _;

use crate::optim::Bounds;
use crate::rng::Rng;

/// Smallest |cos θ| accepted when drawing a tangent angle.
pub const MIN_ABS_COS: f64 = 1e-6;
/// Ceiling on |tan θ|.
pub const MAX_ABS_TAN: f64 = 1e3;
/// Denominator guard for [`ptso_update`].
pub const SINGULAR_EPS: f64 = 1e-9;

/// θ = R·π, redrawn while |cos θ| < [`MIN_ABS_COS`].
pub fn sample_theta(rng: &mut Rng) -> f64 {
    loop {
        let theta = rng.gen::<f64>() * std::f64::consts::PI;
        if theta.cos().abs() >= MIN_ABS_COS {
            return theta;
        }
    }
}

/// tan θ clamped to ±[`MAX_ABS_TAN`].
pub fn clamped_tan(theta: f64) -> f64 {
    theta.tan().clamp(-MAX_ABS_TAN, MAX_ABS_TAN)
}

/// Tangent flight factor `tan θ` for a freshly drawn θ.
pub fn tangent_flight(rng: &mut Rng) -> f64 {
    clamped_tan(sample_theta(rng))
}

/// The denominator `R − 1 − s·tanθ` of the hybrid update is within
/// [`SINGULAR_EPS`] of zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularStep;

/// Hybrid political-tangent intensification step, per coordinate:
///
/// ```text
/// T⁺ = [T⁻ (R − 1)(1 + k) − R k U] / (R − 1 − k),   k = s·tanθ
/// ```
///
/// with `T⁻` the agent's previous position and `U` the current best. This is
/// the exact solution of `T⁺ = T (1 + k) − k U` after eliminating the current
/// position `T` through `T⁺ = T⁻ + R (T − T⁻)`.
pub fn ptso_update(previous: &[f64], best: &[f64], r: f64, s_tan: f64) -> Result<Vec<f64>, SingularStep> {
    hybrid_step(previous, best, r, s_tan, -1.0)
}

/// Variant of [`ptso_update`] with `+ R k U` in the numerator. This form is
/// common in the literature but does not solve the two update rules it is
/// derived from; it pulls agents that sit on `U` towards the origin.
pub fn ptso_update_plus(previous: &[f64], best: &[f64], r: f64, s_tan: f64) -> Result<Vec<f64>, SingularStep> {
    hybrid_step(previous, best, r, s_tan, 1.0)
}

fn hybrid_step(previous: &[f64], best: &[f64], r: f64, s_tan: f64, sign: f64) -> Result<Vec<f64>, SingularStep> {
    let denom = r - 1.0 - s_tan;
    if denom.abs() <= SINGULAR_EPS {
        return Err(SingularStep);
    }
    let a = (r - 1.0) * (1.0 + s_tan);
    let b = sign * r * s_tan;
    Ok(previous
        .iter()
        .zip(best)
        .map(|(p, u)| (p * a + b * u) / denom)
        .collect())
}

/// Plain tangent intensification step: `T⁺ = T (1 + k) − k U`.
pub fn tsa_update(current: &[f64], best: &[f64], s_tan: f64) -> Vec<f64> {
    current
        .iter()
        .zip(best)
        .map(|(t, u)| t * (1.0 + s_tan) - s_tan * u)
        .collect()
}

/// Recent-past interpolation `T⁺ = T⁻ + R (T − T⁻)`.
pub fn po_update(previous: &[f64], current: &[f64], r: f64) -> Vec<f64> {
    previous
        .iter()
        .zip(current)
        .map(|(p, c)| p + r * (c - p))
        .collect()
}

/// Inverse of [`po_update`] for the current position:
/// `T = (T⁺ − T⁻ (1 − R)) / R`.
pub fn po_current_from_next(next: &[f64], previous: &[f64], r: f64) -> Vec<f64> {
    next.iter()
        .zip(previous)
        .map(|(n, p)| (n - p * (1.0 - r)) / r)
        .collect()
}

/// Copies coordinates of `best` into `candidate`, each with probability
/// `p_replace`. Fewer than half of the coordinates are ever copied: surplus
/// picks are dropped at random.
pub fn replace_dimensions(candidate: &[f64], best: &[f64], p_replace: f64, rng: &mut Rng) -> Vec<f64> {
    let m = candidate.len();
    let mut chosen: Vec<usize> = (0..m).filter(|_| rng.gen::<f64>() < p_replace).collect();
    while 2 * chosen.len() >= m && !chosen.is_empty() {
        let drop = rng.gen_range(0..chosen.len());
        chosen.swap_remove(drop);
    }
    let mut out = candidate.to_vec();
    for j in chosen {
        out[j] = best[j];
    }
    out
}

/// Resets each out-of-range coordinate to `ℜ (r − ℓ) + ℓ`, with `ℜ` taken from `draw`.
pub fn restore_bounds_with(position: &[f64], bounds: &Bounds, mut draw: impl FnMut() -> f64) -> Vec<f64> {
    position
        .iter()
        .zip(bounds.lower().iter().zip(bounds.upper()))
        .map(|(&x, (&lo, &hi))| {
            if x < lo || x > hi || !x.is_finite() {
                draw() * (hi - lo) + lo
            } else {
                x
            }
        })
        .collect()
}

pub fn restore_bounds(position: &[f64], bounds: &Bounds, rng: &mut Rng) -> Vec<f64> {
    restore_bounds_with(position, bounds, || rng.gen::<f64>())
}

/// Global tangent-flight walk: each coordinate, with probability 1/M, moves
/// by `s · tan θ` for a fresh θ.
pub fn explore(position: &[f64], step: f64, rng: &mut Rng) -> Vec<f64> {
    let p = 1.0 / position.len().max(1) as f64;
    position
        .iter()
        .map(|&x| {
            if rng.gen::<f64>() < p {
                x + step * tangent_flight(rng)
            } else {
                x
            }
        })
        .collect()
}

/// `T + K (U − R (U − T))`.
pub fn escape_toward_best(position: &[f64], best: &[f64], k: f64, r: f64) -> Vec<f64> {
    position
        .iter()
        .zip(best)
        .map(|(t, u)| t + k * (u - r * (u - t)))
        .collect()
}

/// `T + tan θ (r − ℓ)`.
pub fn escape_flight(position: &[f64], tan_theta: f64, bounds: &Bounds) -> Vec<f64> {
    position
        .iter()
        .zip(bounds.lower().iter().zip(bounds.upper()))
        .map(|(t, (lo, hi))| t + tan_theta * (hi - lo))
        .collect()
}

/// Local-minimum escape: one of the two escape moves with equal probability,
/// then bound restoration.
pub fn escape_local(position: &[f64], best: &[f64], rng: &mut Rng, bounds: &Bounds) -> Vec<f64> {
    let moved = if rng.gen_bool(0.5) {
        let k: f64 = rng.gen();
        let r: f64 = rng.gen();
        escape_toward_best(position, best, k, r)
    } else {
        escape_flight(position, tangent_flight(rng), bounds)
    };
    restore_bounds(&moved, bounds, rng)
}
