//! Gradient verification against central finite differences.

use super::{Tape, Tensor, Var};
use crate::error::TensorError;

/// Compares the analytic gradient of a scalar-valued tensor function against
/// central finite differences with step `eps`, returning the maximum over
/// coordinates of `|analytic - numeric| / max(1, |analytic|)`.
///
/// `f` receives a fresh tape and the input registered as a leaf, and must
/// return a 1x1 result built on that tape.
pub fn finite_difference_check<F>(f: F, x: &Tensor, eps: f64) -> Result<f64, TensorError>
where
    F: Fn(&mut Tape, Var) -> Result<Var, TensorError>,
{
    if !(eps > 0.0) {
        return Err(TensorError::BadStep);
    }

    let mut tape = Tape::new();
    let xv = tape.leaf(x.clone());
    let out = f(&mut tape, xv)?;
    if tape.value(out).shape() != (1, 1) {
        let (r, c) = tape.value(out).shape();
        return Err(TensorError::NonScalarLoss { rows: r, cols: c });
    }
    let mut grads = tape.backward(out)?;
    let analytic = grads.take(xv, x.rows(), x.cols());

    let eval = |probe: &Tensor| -> Result<f64, TensorError> {
        let mut t = Tape::new();
        let v = t.leaf(probe.clone());
        let o = f(&mut t, v)?;
        Ok(t.value(o).item())
    };

    let mut worst = 0.0f64;
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + eps;
        let plus = eval(&probe)?;
        probe.data_mut()[i] = orig - eps;
        let minus = eval(&probe)?;
        probe.data_mut()[i] = orig;

        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic.data()[i];
        let rel = (a - numeric).abs() / f64::max(1.0, a.abs());
        worst = worst.max(rel);
    }
    Ok(worst)
}
