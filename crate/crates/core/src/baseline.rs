//! Plain Sinkhorn at a fixed `eta = log(n) / eps`, for comparison runs.

use crate::error::{Error, Result};
use crate::instance::{ScalingState, TransportInstance};
use crate::scalar::Scalar;
use crate::sinkhorn::{Driver, Limits, SinkhornRun};
use crate::trace::StepKind;

/// Default step budget when `Limits::max_steps` is unset.
pub const PLAIN_DEFAULT_CAP: usize = 5_000_000;

/// Fixed regularization used by the baseline, with `log n` floored at `log 2`.
pub fn plain_eta<T: Scalar>(inst: &TransportInstance<T>, epsilon: T) -> T {
    T::of_usize(inst.n()).ln().max(T::two().ln()) / epsilon
}

/// Alternating row/column rescales until
/// `||a - r_s||_1 + ||b - c_s||_1 <= 1/(2 mu)`, then the same row-exact
/// finishing pass as the doubling engine.
pub fn run_plain_sinkhorn<T: Scalar>(
    inst: &TransportInstance<T>,
    epsilon: T,
    limits: Limits,
) -> Result<SinkhornRun<T>> {
    if !(epsilon > T::zero() && epsilon.is_finite()) {
        return Err(Error::InvalidEpsilon(epsilon.as_f64()));
    }
    let state = ScalingState::with_eta(inst, plain_eta(inst, epsilon));
    let cap = limits.max_steps.unwrap_or(PLAIN_DEFAULT_CAP);
    let mut driver = Driver::new(inst, state, cap);
    let threshold = driver.state.threshold();
    let mut rows_next = true;
    loop {
        let (l1_row, l1_col) = driver.measure()?;
        if l1_row + l1_col <= threshold {
            break;
        }
        let kind = if rows_next { StepKind::Row } else { StepKind::Col };
        driver.rescale(kind, l1_row, l1_col)?;
        rows_next = !rows_next;
    }
    driver.finish()
}
