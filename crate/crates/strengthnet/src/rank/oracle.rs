//! Exhaustive reference minimizer for the ranking objective.
//!
//! Scans unit directions on a grid and, along each ray, minimizes the
//! objective exactly (it is convex in the magnitude, so the derivative is
//! monotone and a doubling bracket plus bisection suffices). Exponential
//! in dimension and intended purely as a test oracle.

use super::pairs::PairSets;
use super::{RankError, RankResult};

const MAX_ORACLE_DIM: usize = 3;

#[cfg(test)]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Objective restricted to the ray t*u: projections `s_o`/`s_s` are u.d
/// per ordered/similar pair, `sum_s2` their precomputed similar-side sum
/// of squares.
fn ray_value(t: f64, s_o: &[f64], sum_s2: f64, c: f64) -> f64 {
    let hinge: f64 = s_o
        .iter()
        .map(|&s| {
            let v = (1.0 - t * s).max(0.0);
            v * v
        })
        .sum();
    0.5 * t * t + c * hinge + c * t * t * sum_s2
}

fn ray_derivative(t: f64, s_o: &[f64], sum_s2: f64, c: f64) -> f64 {
    let hinge: f64 = s_o.iter().map(|&s| (1.0 - t * s).max(0.0) * s).sum();
    t - 2.0 * c * hinge + 2.0 * c * t * sum_s2
}

fn best_along(u: &[f64], pairs: &PairSets, c: f64) -> (f64, f64) {
    let dim = u.len();
    let mut s_o = Vec::with_capacity(pairs.ordered.len());
    let mut sum_s2 = 0.0;
    for (idx, &(i, j)) in pairs.ordered.iter().chain(&pairs.similar).enumerate() {
        let mut s = 0.0;
        for k in 0..dim {
            s += u[k] * (pairs.features[i][k] - pairs.features[j][k]);
        }
        if idx < pairs.ordered.len() {
            s_o.push(s);
        } else {
            sum_s2 += s * s;
        }
    }
    if ray_derivative(0.0, &s_o, sum_s2, c) >= 0.0 {
        return (0.0, ray_value(0.0, &s_o, sum_s2, c));
    }
    let mut hi = 1.0;
    while ray_derivative(hi, &s_o, sum_s2, c) < 0.0 && hi < 1e9 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ray_derivative(mid, &s_o, sum_s2, c) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    (t, ray_value(t, &s_o, sum_s2, c))
}

/// Grid-search the global minimizer of the training objective.
///
/// `grid_resolution` is the number of azimuthal direction samples (3600
/// gives 0.1 degree steps in 2-D). Only feasible for up to three feature
/// dimensions.
pub fn brute_force_rank_oracle(
    pairs: &PairSets,
    c: f64,
    grid_resolution: usize,
) -> RankResult<Vec<f64>> {
    let dim = pairs.features[0].len();
    if dim > MAX_ORACLE_DIM {
        return Err(RankError::DimensionTooLarge { dim, max: MAX_ORACLE_DIM });
    }
    assert!(grid_resolution >= 4, "grid too coarse to be meaningful");

    let mut directions: Vec<Vec<f64>> = Vec::new();
    match dim {
        1 => {
            directions.push(vec![1.0]);
            directions.push(vec![-1.0]);
        }
        2 => {
            for k in 0..grid_resolution {
                let theta = std::f64::consts::TAU * k as f64 / grid_resolution as f64;
                directions.push(vec![theta.cos(), theta.sin()]);
            }
        }
        3 => {
            let polar = grid_resolution / 2;
            for j in 0..=polar {
                let phi = std::f64::consts::PI * j as f64 / polar as f64;
                for k in 0..grid_resolution {
                    let theta = std::f64::consts::TAU * k as f64 / grid_resolution as f64;
                    directions.push(vec![
                        phi.sin() * theta.cos(),
                        phi.sin() * theta.sin(),
                        phi.cos(),
                    ]);
                }
            }
        }
        _ => unreachable!(),
    }

    let mut best_w = vec![0.0; dim];
    let mut best_val = f64::INFINITY;
    for u in &directions {
        let (t, val) = best_along(u, pairs, c);
        if val < best_val {
            best_val = val;
            best_w = u.iter().map(|&uk| t * uk).collect();
        }
    }
    Ok(best_w)
}
