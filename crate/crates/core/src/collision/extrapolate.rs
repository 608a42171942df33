//! Limits `τ → 0` of finite-collision rates.
//!
//! Samples on a geometric ladder are fitted exactly by `a + Σ_k b_k τ^{p_k}`
//! with one fewer correction than samples, using one of two exponent
//! families: half-integer `p = ½, 1, 3/2, …` or integer `p = 1, 2, 3, …`.
//! The family follows the observed convergence order
//! `p̂ = ln(d_{k+1}/d_k) / ln q` of the two smallest-`τ` sample differences.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Default collision-time ladder.
pub const DEFAULT_TAU_LADDER: [f64; 4] = [1e-2, 5e-3, 2.5e-3, 1.25e-3];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Extrapolation {
    pub limit: f64,
    /// Difference to the fit that drops the largest `τ`.
    pub error_estimate: f64,
    /// Exponent of the largest correction term at the smallest `τ`.
    pub dominant_order: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Observed orders below this select the half-integer family.
const HALF_ORDER_SPLIT: f64 = 0.75;

#[derive(Clone, Copy)]
enum Family {
    HalfInteger,
    Integer,
}

fn exponents(family: Family, count: usize) -> Vec<f64> {
    let step = match family {
        Family::HalfInteger => 0.5,
        Family::Integer => 1.0,
    };
    (1..=count).map(|k| step * k as f64).collect()
}

/// Exact fit through `(x, y)`; returns `[a, b_1, …]`.
fn fit(family: Family, xs: &[f64], ys: &[f64]) -> Result<DVector<f64>> {
    let n = xs.len();
    let powers = exponents(family, n - 1);
    DMatrix::from_fn(n, n, |i, j| {
        if j == 0 {
            1.0
        } else {
            xs[i].powf(powers[j - 1])
        }
    })
    .lu()
    .solve(&DVector::from_column_slice(ys))
    .ok_or_else(|| Error::NonConvergent("singular extrapolation system".into()))
}

/// Validates a collision-time ladder: at least three positive, strictly
/// decreasing values with a constant ratio.
pub fn check_ladder(taus: &[f64]) -> Result<()> {
    if taus.len() < 3 {
        return Err(Error::Domain(format!(
            "need at least 3 tau values, got {}",
            taus.len()
        )));
    }
    if taus.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::Domain(
            "tau values must be positive and finite".into(),
        ));
    }
    if taus.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain(
            "tau ladder must be strictly decreasing".into(),
        ));
    }
    let q = taus[1] / taus[0];
    if taus
        .windows(2)
        .any(|w| ((w[1] / w[0]) / q - 1.0).abs() > 1e-9)
    {
        return Err(Error::Domain(
            "tau ladder must be geometric (constant ratio)".into(),
        ));
    }
    Ok(())
}

/// Extrapolates already-evaluated samples `values[k] = f(taus[k])`.
pub fn extrapolate_samples(taus: &[f64], values: &[f64]) -> Result<Extrapolation> {
    check_ladder(taus)?;
    if taus.len() != values.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} tau values but {} samples",
            taus.len(),
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonConvergent(format!("non-finite sample {v}")));
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-12 * scale.max(1.0);
    for (k, w) in diffs.windows(2).enumerate() {
        if w[1] > w[0] + floor {
            return Err(Error::NonConvergent(format!(
                "successive differences grow at tau = {:e}: {:e} -> {:e}",
                taus[k + 2],
                w[0],
                w[1]
            )));
        }
    }

    let xs: Vec<f64> = taus.iter().map(|t| t / taus[0]).collect();
    let x_min = *xs.last().expect("non-empty");
    let n = diffs.len();
    let observed_order = (diffs[n - 1] / diffs[n - 2]).ln() / (taus[1] / taus[0]).ln();
    let family = if observed_order < HALF_ORDER_SPLIT {
        Family::HalfInteger
    } else {
        // also covers exact data, where the order is undefined
        Family::Integer
    };
    let full = fit(family, &xs, values)?;
    let reduced = fit(family, &xs[1..], &values[1..])?;
    let powers = exponents(family, xs.len() - 1);
    let dominant_order = powers
        .iter()
        .enumerate()
        .map(|(k, &p)| (p, (full[k + 1] * x_min.powf(p)).abs()))
        .fold(
            (powers[0], -1.0),
            |b, cur| if cur.1 > b.1 { cur } else { b },
        )
        .0;
    let (limit, error_estimate) = (full[0], (full[0] - reduced[0]).abs());
    Ok(Extrapolation {
        limit,
        error_estimate,
        dominant_order,
        samples: taus.iter().copied().zip(values.iter().copied()).collect(),
    })
}

/// Evaluates `f` on each `τ` and extrapolates to `τ = 0`.
pub fn rate_extrapolate<F>(mut f: F, taus: &[f64]) -> Result<Extrapolation>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_ladder(taus)?;
    let values = taus.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
    extrapolate_samples(taus, &values)
}
