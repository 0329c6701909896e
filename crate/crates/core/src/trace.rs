use std::fmt;

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepKind {
    Row,
    Col,
    Double,
    Terminate,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::Row => "row",
            StepKind::Col => "col",
            StepKind::Double => "double",
            StepKind::Terminate => "terminate",
        }
    }

    pub fn is_rescale(self) -> bool {
        matches!(self, StepKind::Row | StepKind::Col)
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StepKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "row" => Ok(StepKind::Row),
            "col" => Ok(StepKind::Col),
            "double" => Ok(StepKind::Double),
            "terminate" => Ok(StepKind::Terminate),
            other => Err(format!("unknown step kind {other:?}")),
        }
    }
}

/// Which branch a step took, with the l1 marginal errors measured before it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome<T> {
    pub kind: StepKind,
    pub dual_delta: T,
    pub l1_row: T,
    pub l1_col: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord<T> {
    pub step: usize,
    /// Regularization in force when the step was taken (pre-doubling for
    /// `Double` records).
    pub eta: T,
    pub outcome: StepOutcome<T>,
    /// Dual value after the step.
    pub dual: T,
    /// `2 eta^-1 ||r_s||_1 log(n mu)` at `eta`.
    pub gap_bound: T,
}

/// Per-step log of a solver run plus the constants needed to audit it.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace<T> {
    pub records: Vec<TraceRecord<T>>,
    pub mu: u64,
    pub mass: T,
    pub initial_dual: T,
}

impl<T: Scalar> IterationTrace<T> {
    pub fn new(mu: u64, mass: T, initial_dual: T) -> Self {
        Self {
            records: Vec::new(),
            mu,
            mass,
            initial_dual,
        }
    }

    pub fn push(&mut self, eta: T, outcome: StepOutcome<T>, dual: T, gap_bound: T) {
        let step = self.records.len() + 1;
        self.records.push(TraceRecord {
            step,
            eta,
            outcome,
            dual,
            gap_bound,
        });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn rescale_count(&self) -> usize {
        self.records.iter().filter(|r| r.outcome.kind.is_rescale()).count()
    }

    pub fn doublings(&self) -> impl Iterator<Item = &TraceRecord<T>> {
        self.records.iter().filter(|r| r.outcome.kind == StepKind::Double)
    }

    /// First step whose dual value drops by more than `tol` (relative to
    /// `max(1, |D|)`) below its predecessor.
    pub fn first_dual_decrease(&self, tol: T) -> Option<usize> {
        let mut prev = self.initial_dual;
        for r in &self.records {
            if r.dual < prev - tol * prev.abs().max(T::one()) {
                return Some(r.step);
            }
            prev = r.dual;
        }
        None
    }

    /// Guaranteed minimum dual increase for a rescale record.
    pub fn dual_increase_floor(&self, record: &TraceRecord<T>) -> Option<T> {
        let l1 = match record.outcome.kind {
            StepKind::Row => record.outcome.l1_row,
            StepKind::Col => record.outcome.l1_col,
            _ => return None,
        };
        Some(increase_floor(l1, self.mass, record.eta, self.mu))
    }
}

/// `eta^-1 / 10 * min{mu^-1, l1^2 / mass}`.
pub(crate) fn increase_floor<T: Scalar>(l1: T, mass: T, eta: T, mu: u64) -> T {
    let inv_mu = T::one() / T::of_u64(mu);
    (inv_mu.min(l1 * l1 / mass)) / (T::of_f64(10.0) * eta)
}
