//! Central-difference gradient checking. This is the ground truth the
//! hand-written backward passes are validated against.

use crate::{Error, Result};

/// Compare analytic gradients against central differences of `loss_fn`.
///
/// Perturbs `params` in place one coordinate at a time (restoring each), and
/// returns the largest relative error
/// `|analytic - numeric| / max(1, |analytic| + |numeric|)` over the checked
/// coordinates. With `max_coords = Some(c)` coordinates are sampled on an
/// even stride so huge models stay checkable; `None` checks every one.
///
/// Errors when the loss comes back non-finite or the lengths disagree.
pub fn finite_diff_check(
    loss_fn: &mut dyn FnMut(&[f64]) -> Result<f64>,
    params: &mut [f64],
    analytic: &[f64],
    step: f64,
    max_coords: Option<usize>,
) -> Result<f64> {
    if params.len() != analytic.len() {
        return Err(Error::shape(format!(
            "{} params vs {} analytic grads",
            params.len(),
            analytic.len()
        )));
    }
    if params.is_empty() {
        return Ok(0.0);
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::invalid(format!("step must be positive and finite, got {step}")));
    }

    let n = params.len();
    let count = match max_coords {
        Some(c) if c < n => c.max(1),
        _ => n,
    };
    let stride = n as f64 / count as f64;

    let mut worst = 0.0f64;
    for j in 0..count {
        let i = ((j as f64 * stride) as usize).min(n - 1);
        let saved = params[i];
        params[i] = saved + step;
        let up = loss_fn(params)?;
        params[i] = saved - step;
        let down = loss_fn(params)?;
        params[i] = saved;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::invalid(format!(
                "loss is not finite near coordinate {i}: {up} / {down}"
            )));
        }
        let numeric = (up - down) / (2.0 * step);
        let a = analytic[i];
        let err = (a - numeric).abs() / 1.0f64.max(a.abs() + numeric.abs());
        if err > worst {
            worst = err;
        }
    }
    Ok(worst)
}
