//! Sinkhorn scaling with regularization doubling.
//!
//! The state is `(eta, alpha, beta)`; the scaled matrix
//! `X_ij = exp(eta * (alpha_i + beta_j - Q_ij))` is never stored. Each step
//! evaluates the exponents once, reduces them to log row and column sums
//! with max-shifted log-sum-exp, and then takes exactly one branch:
//!
//! 1. row rescale if `||a - r_s||_1 > 1/(2 mu)`,
//! 2. otherwise column rescale if `||b - c_s||_1 > 1/(2 mu)`,
//! 3. otherwise double `eta`.
//!
//! The loop stops once `eta > 4 mu eps^-1 ||r_s||_1 log(n mu)`. A finishing
//! phase at the last `eta` then rescales rows (and, if the column error has
//! drifted above the threshold, alternates col/row) until the rows are exact
//! and the columns are within `1/(2 mu)`, which is what the repair step needs.

use crate::error::{Error, Result};
use crate::instance::{dual_value, initial_state, ScalingState, TransportInstance};
use crate::matrix::{l1_distance, DenseMatrix};
use crate::scalar::Scalar;
use crate::trace::{increase_floor, IterationTrace, StepKind, StepOutcome, TraceRecord};

/// Step budget for a run. `None` uses [`default_step_cap`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Limits {
    pub max_steps: Option<usize>,
}

impl Limits {
    pub fn capped(max_steps: usize) -> Self {
        Self {
            max_steps: Some(max_steps),
        }
    }
}

/// Result of [`run_expsinkhorn`]: the row-exact candidate plan in original
/// units (`mu * X`), the final state and the full trace.
#[derive(Clone, Debug)]
pub struct SinkhornRun<T> {
    pub plan: DenseMatrix<T>,
    pub state: ScalingState<T>,
    pub trace: IterationTrace<T>,
}

/// Exponent buffer and log-sums reused across steps.
pub(crate) struct Workspace<T> {
    exponents: Vec<T>,
    pub(crate) log_a: Vec<T>,
    pub(crate) log_b: Vec<T>,
    col_max: Vec<T>,
    col_acc: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    pub(crate) fn new(n: usize, m: usize) -> Self {
        Self {
            exponents: vec![T::zero(); n * m],
            log_a: vec![T::zero(); n],
            log_b: vec![T::zero(); m],
            col_max: vec![T::zero(); m],
            col_acc: vec![T::zero(); m],
        }
    }

    /// Fills the exponent buffer and both log-sum vectors.
    pub(crate) fn evaluate(&mut self, state: &ScalingState<T>, inst: &TransportInstance<T>) -> Result<()> {
        let (n, m) = (inst.n(), inst.m());
        let eta = state.eta;
        self.col_max.iter_mut().for_each(|v| *v = T::neg_infinity());
        for i in 0..n {
            let row = &mut self.exponents[i * m..(i + 1) * m];
            let mut row_max = T::neg_infinity();
            for (j, e) in row.iter_mut().enumerate() {
                *e = eta * state.slack(inst, i, j);
                row_max = row_max.max(*e);
                self.col_max[j] = self.col_max[j].max(*e);
            }
            if !row_max.is_finite() {
                return Err(Error::NumericUnderflow { axis: "row", index: i });
            }
            let acc: T = row.iter().map(|&e| (e - row_max).exp()).sum();
            self.log_a[i] = row_max + acc.ln();
        }
        if let Some(j) = self.col_max.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericUnderflow {
                axis: "column",
                index: j,
            });
        }
        self.col_acc.iter_mut().for_each(|v| *v = T::zero());
        for i in 0..n {
            let row = &self.exponents[i * m..(i + 1) * m];
            for j in 0..m {
                self.col_acc[j] += (row[j] - self.col_max[j]).exp();
            }
        }
        for j in 0..m {
            self.log_b[j] = self.col_max[j] + self.col_acc[j].ln();
        }
        Ok(())
    }

    pub(crate) fn l1_errors(&self, state: &ScalingState<T>) -> (T, T) {
        let a: Vec<T> = self.log_a.iter().map(|x| x.exp()).collect();
        let b: Vec<T> = self.log_b.iter().map(|x| x.exp()).collect();
        (l1_distance(&a, &state.r_s), l1_distance(&b, &state.c_s))
    }

    /// `r_i * X_ij / a_i` in original units, so rows sum to `r_i` to
    /// working precision regardless of `eta`.
    pub(crate) fn row_normalized_plan(&self, inst: &TransportInstance<T>) -> DenseMatrix<T> {
        let m = inst.m();
        DenseMatrix::from_fn(inst.n(), m, |i, j| {
            T::of_u64(inst.demand()[i]) * (self.exponents[i * m + j] - self.log_a[i]).exp()
        })
    }
}

fn log_sums<T: Scalar>(state: &ScalingState<T>, inst: &TransportInstance<T>) -> Result<Workspace<T>> {
    let mut ws = Workspace::new(inst.n(), inst.m());
    ws.evaluate(state, inst)?;
    Ok(ws)
}

/// `log a_i` with `a_i = sum_j exp(eta (alpha_i + beta_j - Q_ij))`.
pub fn row_sums_log<T: Scalar>(state: &ScalingState<T>, inst: &TransportInstance<T>) -> Result<Vec<T>> {
    Ok(log_sums(state, inst)?.log_a)
}

/// `log b_j` with `b_j = sum_i exp(eta (alpha_i + beta_j - Q_ij))`.
pub fn col_sums_log<T: Scalar>(state: &ScalingState<T>, inst: &TransportInstance<T>) -> Result<Vec<T>> {
    Ok(log_sums(state, inst)?.log_b)
}

pub fn row_sums<T: Scalar>(state: &ScalingState<T>, inst: &TransportInstance<T>) -> Result<Vec<T>> {
    Ok(row_sums_log(state, inst)?.into_iter().map(|x| x.exp()).collect())
}

pub fn col_sums<T: Scalar>(state: &ScalingState<T>, inst: &TransportInstance<T>) -> Result<Vec<T>> {
    Ok(col_sums_log(state, inst)?.into_iter().map(|x| x.exp()).collect())
}

/// `alpha_i -= eta^-1 log(a_i / r_s,i)`; returns the dual increase
/// `-eta^-1 sum_i r_s,i log(a_i / r_s,i)`.
fn apply_row<T: Scalar>(state: &mut ScalingState<T>, log_a: &[T]) -> T {
    let mut delta = T::zero();
    for i in 0..state.alpha.len() {
        let shift = (log_a[i] - state.log_r_s[i]) / state.eta;
        state.alpha[i] = state.alpha[i].plus(-shift);
        delta -= state.r_s[i] * shift;
    }
    delta
}

fn apply_col<T: Scalar>(state: &mut ScalingState<T>, log_b: &[T]) -> T {
    let mut delta = T::zero();
    for j in 0..state.beta.len() {
        let shift = (log_b[j] - state.log_c_s[j]) / state.eta;
        state.beta[j] = state.beta[j].plus(-shift);
        delta -= state.c_s[j] * shift;
    }
    delta
}

/// Rescales every row to its target sum. Unconditional; the engine only
/// calls the loop branch when the row threshold is exceeded, and the
/// finishing phase calls it to make the rows exact.
pub fn row_rescale<T: Scalar>(state: &mut ScalingState<T>, inst: &TransportInstance<T>) -> Result<StepOutcome<T>> {
    let ws = log_sums(state, inst)?;
    let (l1_row, l1_col) = ws.l1_errors(state);
    let dual_delta = apply_row(state, &ws.log_a);
    Ok(StepOutcome {
        kind: StepKind::Row,
        dual_delta,
        l1_row,
        l1_col,
    })
}

pub fn col_rescale<T: Scalar>(state: &mut ScalingState<T>, inst: &TransportInstance<T>) -> Result<StepOutcome<T>> {
    let ws = log_sums(state, inst)?;
    let (l1_row, l1_col) = ws.l1_errors(state);
    let dual_delta = apply_col(state, &ws.log_b);
    Ok(StepOutcome {
        kind: StepKind::Col,
        dual_delta,
        l1_row,
        l1_col,
    })
}

/// Row rescale guarded by the loop's branch condition.
pub fn row_rescale_checked<T: Scalar>(
    state: &mut ScalingState<T>,
    inst: &TransportInstance<T>,
) -> Result<StepOutcome<T>> {
    let ws = log_sums(state, inst)?;
    let (l1_row, l1_col) = ws.l1_errors(state);
    if l1_row <= state.threshold() {
        return Err(Error::PreconditionViolated("row l1 error is within 1/(2 mu)"));
    }
    let dual_delta = apply_row(state, &ws.log_a);
    Ok(StepOutcome {
        kind: StepKind::Row,
        dual_delta,
        l1_row,
        l1_col,
    })
}

/// Column rescale guarded by the loop's branch condition.
pub fn col_rescale_checked<T: Scalar>(
    state: &mut ScalingState<T>,
    inst: &TransportInstance<T>,
) -> Result<StepOutcome<T>> {
    let ws = log_sums(state, inst)?;
    let (l1_row, l1_col) = ws.l1_errors(state);
    if l1_row > state.threshold() {
        return Err(Error::PreconditionViolated(
            "row l1 error exceeds 1/(2 mu); rows go first",
        ));
    }
    if l1_col <= state.threshold() {
        return Err(Error::PreconditionViolated("column l1 error is within 1/(2 mu)"));
    }
    let dual_delta = apply_col(state, &ws.log_b);
    Ok(StepOutcome {
        kind: StepKind::Col,
        dual_delta,
        l1_row,
        l1_col,
    })
}

/// `eta <- 2 eta`. Potentials are untouched, so every implied entry squares.
pub fn double_eta<T: Scalar>(mut state: ScalingState<T>) -> ScalingState<T> {
    state.eta *= T::two();
    state
}

/// `2 eta^-1 ||r_s||_1 log(n mu)`.
pub fn gap_bound<T: Scalar>(state: &ScalingState<T>) -> T {
    T::two() * state.mass() * state.log_nmu / state.eta
}

/// `eta^-1 / 10 * min{mu^-1, ||r_s||_1^-1 ||a - r_s||_1^2}`.
pub fn dual_increase_lower_bound<T: Scalar>(a: &[T], r_s: &[T], eta: T, mu: u64) -> T {
    let mass: T = r_s.iter().copied().sum();
    increase_floor(l1_distance(a, r_s), mass, eta, mu)
}

/// Regularization at which the main loop stops: `4 mu eps^-1 ||r_s||_1 log(n mu)`.
pub fn eta_stop<T: Scalar>(state: &ScalingState<T>, epsilon: T) -> T {
    T::of_f64(4.0) * T::of_u64(state.mu) * state.mass() * state.log_nmu / epsilon
}

/// Step-count bound with explicit constants, `10x` over the sum of the
/// per-phase dual-progress bounds.
pub fn default_step_cap<T: Scalar>(inst: &TransportInstance<T>, epsilon: T) -> usize {
    let mass = inst.total_mass() as f64;
    let log_nmu = inst.log_nmu().as_f64();
    let eps = epsilon.as_f64();
    let q = inst.cost_norm().as_f64().max(f64::MIN_POSITIVE);
    let eta0 = 10.0 / q * log_nmu;
    let stop = 4.0 * mass * log_nmu / eps;
    let phases = ((stop / eta0).max(1.0).log2().ceil() + 2.0).max(2.0);
    let per_phase = 160.0 * mass * mass * log_nmu + 1.0;
    let first = 1200.0 * mass * mass * log_nmu;
    let bound = 10.0 * (first + phases * per_phase);
    if bound.is_finite() && bound < usize::MAX as f64 / 2.0 {
        bound.ceil() as usize
    } else {
        usize::MAX / 2
    }
}

/// `(mu ||r_s||_1)^2 log(n mu) log(4 mu^2 eps^-1 ||r_s||_1 ||Q||_inf / 10)`, the
/// iteration-count shape, scaled by `k`.
pub fn iteration_bound_shape<T: Scalar>(inst: &TransportInstance<T>, epsilon: T, k: f64) -> f64 {
    let mu = inst.mu() as f64;
    let mass = inst.total_mass() as f64;
    let r_s = mass / mu;
    let log_term = (4.0 * mu * mu * r_s * inst.cost_norm().as_f64() / (10.0 * epsilon.as_f64())).ln();
    k * mass * mass * inst.log_nmu().as_f64() * log_term
}

fn validate_epsilon<T: Scalar>(epsilon: T) -> Result<()> {
    if epsilon > T::zero() && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidEpsilon(epsilon.as_f64()))
    }
}

type Observer<'a, T> = &'a mut dyn FnMut(&ScalingState<T>, &TraceRecord<T>);

/// Shared step driver for the doubling engine and the fixed-eta baseline.
pub(crate) struct Driver<'a, T> {
    pub(crate) inst: &'a TransportInstance<T>,
    pub(crate) state: ScalingState<T>,
    pub(crate) trace: IterationTrace<T>,
    pub(crate) ws: Workspace<T>,
    cap: usize,
    observer: Option<Observer<'a, T>>,
}

impl<'a, T: Scalar> Driver<'a, T> {
    pub(crate) fn new(inst: &'a TransportInstance<T>, state: ScalingState<T>, cap: usize) -> Self {
        let trace = IterationTrace::new(state.mu, state.mass(), dual_value(&state));
        Self {
            ws: Workspace::new(inst.n(), inst.m()),
            inst,
            state,
            trace,
            cap,
            observer: None,
        }
    }

    fn record(&mut self, eta: T, outcome: StepOutcome<T>, dual: T, gap: T) {
        self.trace.push(eta, outcome, dual, gap);
        if let (Some(observe), Some(rec)) = (self.observer.as_mut(), self.trace.records.last()) {
            observe(&self.state, rec);
        }
    }

    fn charge(&self) -> Result<()> {
        if self.trace.len() >= self.cap {
            Err(Error::IterationCapExceeded { cap: self.cap })
        } else {
            Ok(())
        }
    }

    /// Evaluates sums at the current state and returns the l1 errors.
    pub(crate) fn measure(&mut self) -> Result<(T, T)> {
        self.ws.evaluate(&self.state, self.inst)?;
        Ok(self.ws.l1_errors(&self.state))
    }

    /// Applies one rescale using the sums from the last `measure`.
    pub(crate) fn rescale(&mut self, kind: StepKind, l1_row: T, l1_col: T) -> Result<()> {
        self.charge()?;
        let eta = self.state.eta;
        let dual_delta = match kind {
            StepKind::Row => apply_row(&mut self.state, &self.ws.log_a),
            StepKind::Col => apply_col(&mut self.state, &self.ws.log_b),
            _ => unreachable!("rescale called with {kind:?}"),
        };
        let outcome = StepOutcome {
            kind,
            dual_delta,
            l1_row,
            l1_col,
        };
        let dual = dual_value(&self.state);
        let gap = gap_bound(&self.state);
        self.record(eta, outcome, dual, gap);
        Ok(())
    }

    fn double(&mut self, l1_row: T, l1_col: T) -> Result<()> {
        self.charge()?;
        let eta = self.state.eta;
        let gap = gap_bound(&self.state);
        let outcome = StepOutcome {
            kind: StepKind::Double,
            dual_delta: T::zero(),
            l1_row,
            l1_col,
        };
        let dual = dual_value(&self.state);
        self.state.eta = eta * T::two();
        self.record(eta, outcome, dual, gap);
        Ok(())
    }

    /// Makes the rows exact while keeping the column error within
    /// `1/(2 mu)`, then materializes the row-normalized plan.
    pub(crate) fn finish(mut self) -> Result<SinkhornRun<T>> {
        let threshold = self.state.threshold();
        let (l1_row, l1_col) = self.measure()?;
        self.rescale(StepKind::Row, l1_row, l1_col)?;
        loop {
            let (l1_row, l1_col) = self.measure()?;
            if l1_col <= threshold {
                break;
            }
            self.rescale(StepKind::Col, l1_row, l1_col)?;
            let (l1_row, l1_col) = self.measure()?;
            self.rescale(StepKind::Row, l1_row, l1_col)?;
        }
        let plan = self.ws.row_normalized_plan(self.inst);
        Ok(SinkhornRun {
            plan,
            state: self.state,
            trace: self.trace,
        })
    }
}

/// Runs the doubling loop to completion and returns the row-exact candidate.
pub fn run_expsinkhorn<T: Scalar>(inst: &TransportInstance<T>, epsilon: T, limits: Limits) -> Result<SinkhornRun<T>> {
    expsinkhorn(inst, epsilon, limits, None)
}

/// As [`run_expsinkhorn`], calling `observe` with the state and the new
/// trace record after every step.
pub fn run_expsinkhorn_observed<T: Scalar>(
    inst: &TransportInstance<T>,
    epsilon: T,
    limits: Limits,
    observe: &mut dyn FnMut(&ScalingState<T>, &TraceRecord<T>),
) -> Result<SinkhornRun<T>> {
    expsinkhorn(inst, epsilon, limits, Some(observe))
}

fn expsinkhorn<'a, T: Scalar>(
    inst: &'a TransportInstance<T>,
    epsilon: T,
    limits: Limits,
    observer: Option<Observer<'a, T>>,
) -> Result<SinkhornRun<T>> {
    validate_epsilon(epsilon)?;
    let state = initial_state(inst)?;
    let stop = eta_stop(&state, epsilon);
    let cap = limits.max_steps.unwrap_or_else(|| default_step_cap(inst, epsilon));
    let mut driver = Driver::new(inst, state, cap);
    driver.observer = observer;
    let threshold = driver.state.threshold();
    while driver.state.eta <= stop {
        let (l1_row, l1_col) = driver.measure()?;
        if l1_row > threshold {
            driver.rescale(StepKind::Row, l1_row, l1_col)?;
        } else if l1_col > threshold {
            driver.rescale(StepKind::Col, l1_row, l1_col)?;
        } else {
            driver.double(l1_row, l1_col)?;
        }
    }
    driver.finish()
}
