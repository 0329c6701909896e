//! Integral optimal transport by Sinkhorn scaling with regularization
//! doubling, max-flow repair to an exactly feasible plan, and reductions
//! between transport and minimum-cost circulation.
//!
//! Everything numeric is generic over [`Scalar`] (`f64` or `f32`); the
//! aliases below fix `f64`, with `*32` variants for single precision.
//!
//! ```
//! let inst = expot::validate_instance(2, 2, vec![1.0, 2.0, 3.0, 1.0], vec![2, 1], vec![1, 2]).unwrap();
//! let plan = expot::solve(&inst, 1e-3).unwrap();
//! assert!(plan.cost <= 4.0 + 1e-3);
//! ```

pub mod baseline;
pub mod error;
pub mod gen;
pub mod instance;
pub mod matrix;
pub mod mcc;
pub mod oracle;
pub mod repair;
pub mod scalar;
pub mod sinkhorn;
pub mod trace;

pub use baseline::{plain_eta, run_plain_sinkhorn, PLAIN_DEFAULT_CAP};
pub use error::{Error, Result};
pub use instance::{
    dual_value, initial_state, scale_instance, validate_instance, ScaledMarginals, ScalingState, TransportInstance,
    TransportPlan,
};
pub use matrix::{l1_distance, DenseMatrix};
pub use repair::{extract_half_feasible, max_flow, repair_plan, round_feasible_simple, FlowNetwork, MaxFlow};
pub use scalar::{Compensated, Scalar};
pub use sinkhorn::{
    col_rescale, col_rescale_checked, col_sums, col_sums_log, default_step_cap, double_eta, dual_increase_lower_bound,
    eta_stop, gap_bound, iteration_bound_shape, row_rescale, row_rescale_checked, row_sums, row_sums_log,
    run_expsinkhorn, run_expsinkhorn_observed, Limits, SinkhornRun,
};
pub use trace::{IterationTrace, StepKind, StepOutcome, TraceRecord};

pub type Instance = TransportInstance<f64>;
pub type Plan = TransportPlan<f64>;
pub type State = ScalingState<f64>;
pub type Trace = IterationTrace<f64>;
pub type Run = SinkhornRun<f64>;
pub type Matrix = DenseMatrix<f64>;

pub type Instance32 = TransportInstance<f32>;
pub type Plan32 = TransportPlan<f32>;
pub type State32 = ScalingState<f32>;
pub type Trace32 = IterationTrace<f32>;
pub type Run32 = SinkhornRun<f32>;
pub type Matrix32 = DenseMatrix<f32>;

/// Feasible plan with cost at most `OPT + epsilon`: the doubling run
/// followed by repair. All-zero costs make every feasible plan optimal, so
/// that case returns the northwest-corner plan directly.
pub fn solve<T: Scalar>(inst: &TransportInstance<T>, epsilon: T) -> Result<TransportPlan<T>> {
    match run_expsinkhorn(inst, epsilon, Limits::default()) {
        Ok(run) => repair_plan(&run.plan, inst),
        Err(Error::DegenerateCost) => {
            let x = mcc::northwest_initial(inst.demand(), inst.supply()).map(T::of_u64);
            Ok(TransportPlan::new(x, inst))
        }
        Err(e) => Err(e),
    }
}
