//! Central finite differences against the analytic backward pass.

use crate::dense::{Head, MlpParams};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    pub checked: usize,
}

fn relative(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

fn objective(p: &MlpParams, x: &[f64], upstream: &[f64], head: Head) -> Result<f64> {
    Ok(p.forward(x, head)?
        .iter()
        .zip(upstream)
        .map(|(y, u)| y * u)
        .sum())
}

/// Compares `p.backward` with central differences of `upstream · forward`
/// over every parameter and input coordinate. Gradients smaller than `floor`
/// are compared absolutely.
pub fn finite_difference_check(
    p: &MlpParams,
    x: &[f64],
    upstream: &[f64],
    head: Head,
    h: f64,
    floor: f64,
) -> Result<GradCheck> {
    let analytic = p.backward(x, upstream, head)?;
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut probe = p.clone();
    for t in 0..4 {
        let len = p.tensors()[t].len();
        for i in 0..len {
            let orig = probe.tensors()[t][i];
            probe.tensors_mut()[t][i] = orig + h;
            let plus = objective(&probe, x, upstream, head)?;
            probe.tensors_mut()[t][i] = orig - h;
            let minus = objective(&probe, x, upstream, head)?;
            probe.tensors_mut()[t][i] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            worst = worst.max(relative(analytic.params.tensors()[t][i], numeric, floor));
            checked += 1;
        }
    }
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let plus = objective(p, &xp, upstream, head)?;
        xp[i] = x[i] - h;
        let minus = objective(p, &xp, upstream, head)?;
        xp[i] = x[i];
        worst = worst.max(relative(
            analytic.input[i],
            (plus - minus) / (2.0 * h),
            floor,
        ));
        checked += 1;
    }
    Ok(GradCheck {
        max_relative_error: worst,
        checked,
    })
}
