//! Transport instances, scaled marginals, the dual scaling state and plans.

use crate::error::{Error, Result};
use crate::matrix::{l1_distance, DenseMatrix};
use crate::scalar::{slack, weighted_sum, Compensated, Scalar};

/// Cost matrix with integral, strictly positive, balanced marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportInstance<T> {
    cost: DenseMatrix<T>,
    demand: Vec<u64>,
    supply: Vec<u64>,
    cost_norm: T,
    mu: u64,
}

/// Checks dimensions, balance, positivity and finiteness, and precomputes
/// `||Q||_inf` and `mu`.
pub fn validate_instance<T: Scalar>(
    n: usize,
    m: usize,
    costs: Vec<T>,
    demand: Vec<u64>,
    supply: Vec<u64>,
) -> Result<TransportInstance<T>> {
    if n == 0 {
        return Err(Error::DimensionMismatch {
            what: "row count",
            expected: 1,
            found: 0,
        });
    }
    if m == 0 {
        return Err(Error::DimensionMismatch {
            what: "column count",
            expected: 1,
            found: 0,
        });
    }
    if demand.len() != n {
        return Err(Error::DimensionMismatch {
            what: "demand vector",
            expected: n,
            found: demand.len(),
        });
    }
    if supply.len() != m {
        return Err(Error::DimensionMismatch {
            what: "supply vector",
            expected: m,
            found: supply.len(),
        });
    }
    let found = costs.len();
    let cost = DenseMatrix::from_vec(n, m, costs).ok_or(Error::DimensionMismatch {
        what: "cost matrix",
        expected: n * m,
        found,
    })?;
    if let Some(index) = demand.iter().position(|&x| x == 0) {
        return Err(Error::NonPositiveMarginal { side: "demand", index });
    }
    if let Some(index) = supply.iter().position(|&x| x == 0) {
        return Err(Error::NonPositiveMarginal { side: "supply", index });
    }
    for i in 0..n {
        if let Some(col) = cost.row(i).iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteCost { row: i, col });
        }
    }
    let total_demand: u64 = demand.iter().sum();
    let total_supply: u64 = supply.iter().sum();
    if total_demand != total_supply {
        return Err(Error::UnbalancedMarginals {
            demand: total_demand,
            supply: total_supply,
        });
    }
    let mu = demand.iter().chain(&supply).copied().max().unwrap_or(1);
    Ok(TransportInstance {
        cost_norm: cost.max_abs(),
        cost,
        demand,
        supply,
        mu,
    })
}

impl<T: Scalar> TransportInstance<T> {
    #[inline]
    pub fn n(&self) -> usize {
        self.cost.rows()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.cost.cols()
    }

    pub fn cost(&self) -> &DenseMatrix<T> {
        &self.cost
    }

    pub fn demand(&self) -> &[u64] {
        &self.demand
    }

    pub fn supply(&self) -> &[u64] {
        &self.supply
    }

    /// `max_ij |Q_ij|`.
    pub fn cost_norm(&self) -> T {
        self.cost_norm
    }

    /// `max{||r||_inf, ||c||_inf}`.
    pub fn mu(&self) -> u64 {
        self.mu
    }

    pub fn total_mass(&self) -> u64 {
        self.demand.iter().sum()
    }

    pub fn demand_real(&self) -> Vec<T> {
        self.demand.iter().map(|&x| T::of_u64(x)).collect()
    }

    pub fn supply_real(&self) -> Vec<T> {
        self.supply.iter().map(|&x| T::of_u64(x)).collect()
    }

    /// `log(n mu)`, floored at `log 2` so that the single-cell instance still
    /// gets a positive starting regularization.
    pub fn log_nmu(&self) -> T {
        let nmu = T::of_usize(self.n()) * T::of_u64(self.mu);
        nmu.ln().max(T::two().ln())
    }

    pub fn is_cost_integral(&self) -> bool {
        self.cost.as_slice().iter().all(|&q| q == q.round())
    }
}

/// Marginals divided by `mu`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledMarginals<T> {
    pub r_s: Vec<T>,
    pub c_s: Vec<T>,
    pub mu: u64,
}

impl<T: Scalar> ScaledMarginals<T> {
    pub fn mass(&self) -> T {
        self.r_s.iter().copied().sum()
    }
}

pub fn scale_instance<T: Scalar>(inst: &TransportInstance<T>) -> ScaledMarginals<T> {
    let mu = T::of_u64(inst.mu());
    ScaledMarginals {
        r_s: inst.demand().iter().map(|&x| T::of_u64(x) / mu).collect(),
        c_s: inst.supply().iter().map(|&x| T::of_u64(x) / mu).collect(),
        mu: inst.mu(),
    }
}

/// Regularization plus dual potentials. The scaled matrix is implicit:
/// `X_ij = exp(eta * (alpha_i + beta_j - Q_ij))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingState<T> {
    pub(crate) eta: T,
    pub(crate) alpha: Vec<Compensated<T>>,
    pub(crate) beta: Vec<Compensated<T>>,
    pub(crate) mu: u64,
    pub(crate) r_s: Vec<T>,
    pub(crate) c_s: Vec<T>,
    pub(crate) log_r_s: Vec<T>,
    pub(crate) log_c_s: Vec<T>,
    pub(crate) log_nmu: T,
}

/// Starting state: `eta = 10 ||Q||_inf^-1 log(n mu)` and every potential at
/// `-||Q||_inf`.
pub fn initial_state<T: Scalar>(inst: &TransportInstance<T>) -> Result<ScalingState<T>> {
    if inst.cost_norm() == T::zero() {
        return Err(Error::DegenerateCost);
    }
    let eta = T::of_f64(10.0) / inst.cost_norm() * inst.log_nmu();
    Ok(ScalingState::with_eta(inst, eta))
}

impl<T: Scalar> ScalingState<T> {
    /// Potentials at `-||Q||_inf`, which keeps every implied entry at most 1
    /// for any positive `eta`.
    pub fn with_eta(inst: &TransportInstance<T>, eta: T) -> Self {
        let scaled = scale_instance(inst);
        let start = Compensated::new(-inst.cost_norm());
        Self {
            eta,
            alpha: vec![start; inst.n()],
            beta: vec![start; inst.m()],
            mu: scaled.mu,
            log_r_s: scaled.r_s.iter().map(|x| x.ln()).collect(),
            log_c_s: scaled.c_s.iter().map(|x| x.ln()).collect(),
            r_s: scaled.r_s,
            c_s: scaled.c_s,
            log_nmu: inst.log_nmu(),
        }
    }

    /// Builds a state from explicit potentials (tests and tooling).
    pub fn from_parts(inst: &TransportInstance<T>, eta: T, alpha: &[T], beta: &[T]) -> Result<Self> {
        if alpha.len() != inst.n() {
            return Err(Error::DimensionMismatch {
                what: "alpha",
                expected: inst.n(),
                found: alpha.len(),
            });
        }
        if beta.len() != inst.m() {
            return Err(Error::DimensionMismatch {
                what: "beta",
                expected: inst.m(),
                found: beta.len(),
            });
        }
        let mut state = Self::with_eta(inst, eta);
        state.alpha = alpha.iter().map(|&a| Compensated::new(a)).collect();
        state.beta = beta.iter().map(|&b| Compensated::new(b)).collect();
        Ok(state)
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn alpha(&self) -> Vec<T> {
        self.alpha.iter().map(|a| a.value()).collect()
    }

    pub fn beta(&self) -> Vec<T> {
        self.beta.iter().map(|b| b.value()).collect()
    }

    pub fn mu(&self) -> u64 {
        self.mu
    }

    pub fn r_s(&self) -> &[T] {
        &self.r_s
    }

    pub fn c_s(&self) -> &[T] {
        &self.c_s
    }

    /// `||r_s||_1`, equal to `||c_s||_1` for balanced instances.
    pub fn mass(&self) -> T {
        self.r_s.iter().copied().sum()
    }

    pub fn log_nmu(&self) -> T {
        self.log_nmu
    }

    /// `1 / (2 mu)`, the l1 threshold that triggers a rescale.
    pub fn threshold(&self) -> T {
        T::one() / (T::two() * T::of_u64(self.mu))
    }

    /// `alpha_i + beta_j - Q_ij`.
    #[inline]
    pub fn slack(&self, inst: &TransportInstance<T>, i: usize, j: usize) -> T {
        slack(self.alpha[i], self.beta[j], inst.cost()[(i, j)])
    }

    /// `max_ij (alpha_i + beta_j - Q_ij)`; non-positive for a dual-feasible state.
    pub fn max_slack(&self, inst: &TransportInstance<T>) -> T {
        let mut worst = T::neg_infinity();
        for i in 0..inst.n() {
            for j in 0..inst.m() {
                worst = worst.max(self.slack(inst, i, j));
            }
        }
        worst
    }

    /// Dense implied matrix in scaled units. Entries underflow to zero far
    /// from the support, which is fine for inspection but not for iteration.
    pub fn implied_matrix(&self, inst: &TransportInstance<T>) -> DenseMatrix<T> {
        DenseMatrix::from_fn(inst.n(), inst.m(), |i, j| (self.eta * self.slack(inst, i, j)).exp())
    }
}

/// A nonnegative plan in original units together with its cost.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan<T> {
    pub x: DenseMatrix<T>,
    pub cost: T,
}

impl<T: Scalar> TransportPlan<T> {
    pub fn new(x: DenseMatrix<T>, inst: &TransportInstance<T>) -> Self {
        let cost = x.dot(inst.cost());
        Self { x, cost }
    }

    /// `||X 1 - r||_1 + ||X^T 1 - c||_1`.
    pub fn marginal_residual(&self, inst: &TransportInstance<T>) -> T {
        l1_distance(&self.x.row_sums(), &inst.demand_real()) + l1_distance(&self.x.col_sums(), &inst.supply_real())
    }

    pub fn min_entry(&self) -> T {
        self.x.as_slice().iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn is_feasible(&self, inst: &TransportInstance<T>, tol: T) -> bool {
        self.min_entry() >= -tol && self.marginal_residual(inst) <= tol
    }
}

/// `D = sum_i r_s,i alpha_i + sum_j c_s,j beta_j`.
pub fn dual_value<T: Scalar>(state: &ScalingState<T>) -> T {
    let mut weights = state.r_s.clone();
    weights.extend_from_slice(&state.c_s);
    let mut values = state.alpha.clone();
    values.extend_from_slice(&state.beta);
    weighted_sum(&weights, &values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> TransportInstance<f64> {
        validate_instance(2, 2, vec![1.0, 2.0, 3.0, 1.0], vec![2, 1], vec![1, 2]).unwrap()
    }

    #[test]
    fn smallest_instance_validates() {
        let inst = validate_instance(1, 1, vec![5.0f64], vec![1], vec![1]).unwrap();
        assert_eq!(inst.mu(), 1);
        assert_eq!(inst.cost_norm(), 5.0);
    }

    #[test]
    fn two_by_two_validates() {
        let inst = two_by_two();
        assert_eq!(inst.mu(), 2);
        assert_eq!(inst.cost_norm(), 3.0);
        assert_eq!(inst.total_mass(), 3);
    }

    #[test]
    fn validation_errors() {
        assert_eq!(
            validate_instance(2, 2, vec![0.0f64; 4], vec![2, 1], vec![1, 1]),
            Err(Error::UnbalancedMarginals { demand: 3, supply: 2 })
        );
        assert!(matches!(
            validate_instance(2, 2, vec![0.0f64; 3], vec![1, 1], vec![1, 1]),
            Err(Error::DimensionMismatch {
                what: "cost matrix",
                ..
            })
        ));
        assert!(matches!(
            validate_instance(2, 1, vec![0.0f64; 2], vec![1, 1, 1], vec![3]),
            Err(Error::DimensionMismatch {
                what: "demand vector",
                ..
            })
        ));
        assert_eq!(
            validate_instance(2, 2, vec![0.0f64; 4], vec![0, 2], vec![1, 1]),
            Err(Error::NonPositiveMarginal {
                side: "demand",
                index: 0
            })
        );
        assert_eq!(
            validate_instance(1, 2, vec![0.0f64, f64::NAN], vec![2], vec![1, 1]),
            Err(Error::NonFiniteCost { row: 0, col: 1 })
        );
        assert!(validate_instance(1, 1, vec![f64::INFINITY], vec![1], vec![1]).is_err());
    }

    #[test]
    fn scaling_examples() {
        let s = scale_instance(&two_by_two());
        assert_eq!(s.mu, 2);
        assert_eq!(s.r_s, vec![1.0, 0.5]);
        assert_eq!(s.c_s, vec![0.5, 1.0]);

        let one = validate_instance(1, 1, vec![5.0f64], vec![1], vec![1]).unwrap();
        let s = scale_instance(&one);
        assert_eq!((s.mu, s.r_s.clone(), s.c_s.clone()), (1, vec![1.0], vec![1.0]));

        let uniform = validate_instance(2, 2, vec![1.0f64; 4], vec![4, 4], vec![4, 4]).unwrap();
        let s = scale_instance(&uniform);
        assert_eq!((s.mu, s.r_s), (4, vec![1.0, 1.0]));
    }

    #[test]
    fn scaling_reconstructs_marginals() {
        for mu in 1..=64u64 {
            let r: Vec<u64> = (1..=mu).collect();
            let total: u64 = r.iter().sum();
            let inst = validate_instance(r.len(), 1, vec![1.0f64; r.len()], r.clone(), vec![total]).unwrap();
            let s = scale_instance(&inst);
            let m = s.mu as f64;
            for (&ri, &rs) in r.iter().zip(&s.r_s) {
                assert!(rs <= 1.0 || s.mu == total);
                let back = rs * m;
                if s.mu.is_power_of_two() {
                    assert_eq!(back, ri as f64);
                } else {
                    assert!((back - ri as f64).abs() <= f64::EPSILON * ri as f64);
                }
            }
        }
    }

    #[test]
    fn initial_eta_examples() {
        let inst = two_by_two();
        let state = initial_state(&inst).unwrap();
        assert!((state.eta() - 10.0 / 3.0 * 4f64.ln()).abs() < 1e-12);
        assert!((state.eta() - 4.6210).abs() < 1e-4);
        assert_eq!(state.alpha(), vec![-3.0, -3.0]);
        assert_eq!(state.beta(), vec![-3.0, -3.0]);

        // log(n mu) = 0 is floored at log 2.
        let one = validate_instance(1, 1, vec![5.0f64], vec![1], vec![1]).unwrap();
        assert!((initial_state(&one).unwrap().eta() - 2.0 * 2f64.ln()).abs() < 1e-15);

        let wide = validate_instance(4, 1, vec![10.0f64, 0.0, 0.0, 0.0], vec![1, 1, 2, 1], vec![5]).unwrap();
        // mu is 5 here; build the mu = 2 case from the formula directly.
        assert!((initial_state(&wide).unwrap().eta() - (20f64).ln()).abs() < 1e-12);
        let q = validate_instance(4, 4, vec![10.0f64; 16], vec![1, 2, 1, 1], vec![2, 1, 1, 1]).unwrap();
        assert!((initial_state(&q).unwrap().eta() - 8f64.ln()).abs() < 1e-12);
        assert!((8f64.ln() - 2.0794).abs() < 1e-4);
    }

    #[test]
    fn initial_entries_are_tiny() {
        let inst = two_by_two();
        let state = initial_state(&inst).unwrap();
        let x = state.implied_matrix(&inst);
        let bound = (2.0f64 * 2.0).powi(-10);
        assert!(x.as_slice().iter().all(|&v| v <= bound));
    }

    #[test]
    fn zero_cost_is_degenerate() {
        let inst = validate_instance(2, 2, vec![0.0f64; 4], vec![1, 1], vec![1, 1]).unwrap();
        assert_eq!(initial_state(&inst), Err(Error::DegenerateCost));
    }

    #[test]
    fn dual_value_at_start() {
        let inst = two_by_two();
        let state = initial_state(&inst).unwrap();
        assert_eq!(dual_value(&state), -9.0);
    }
}
