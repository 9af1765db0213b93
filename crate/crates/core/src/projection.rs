//! Euclidean projection onto the l1 ball `{z : ‖z‖₁ ≤ R}`.

use ndarray::{Array1, ArrayView1};

use crate::error::{RenError, Result};

/// Returns `argmin_z ‖v − z‖₂` subject to `‖z‖₁ ≤ radius`.
///
/// Feasible inputs are returned unchanged; otherwise the result is the
/// soft-threshold `sign(v_i)·max(|v_i| − θ, 0)` with `θ` found by sorting
/// magnitudes in decreasing order.
pub fn project_l1_ball(v: ArrayView1<f64>, radius: f64) -> Result<Array1<f64>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(RenError::InvalidParameter(format!("l1 radius {radius} must be positive")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(RenError::NonFinite("projection input"));
    }
    let theta = match l1_threshold(v, radius) {
        Some(theta) => theta,
        None => return Ok(v.to_owned()),
    };
    Ok(v.mapv(|x| x.signum() * (x.abs() - theta).max(0.0)))
}

/// Soft-threshold level for the projection, or `None` when `v` is feasible.
pub fn l1_threshold(v: ArrayView1<f64>, radius: f64) -> Option<f64> {
    let norm = v.iter().fold(0.0, |acc, x| acc + x.abs());
    if norm <= radius {
        return None;
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - radius) / (j + 1) as f64;
        if u > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    Some(theta.max(0.0))
}
