//! Turning the approximately scaled matrix into an exactly feasible plan.
//!
//! With rows exact and the column error at most `1/(2 mu)`, the support of
//! `X` satisfies a weighted Hall condition, so a flow that routes all of `r`
//! through arcs of capacity `2 X_ij` exists. That flow is `Y = 2 X_hat`, a
//! plan with exact marginals dominated by `2 X`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::instance::{TransportInstance, TransportPlan};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc<T> {
    pub from: usize,
    pub to: usize,
    pub capacity: T,
}

/// Source/sink network with real capacities.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowNetwork<T> {
    pub node_count: usize,
    pub source: usize,
    pub sink: usize,
    pub arcs: Vec<Arc<T>>,
}

impl<T: Scalar> FlowNetwork<T> {
    pub fn new(node_count: usize, source: usize, sink: usize) -> Self {
        Self {
            node_count,
            source,
            sink,
            arcs: Vec::new(),
        }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, capacity: T) -> usize {
        debug_assert!(capacity >= T::zero() && capacity.is_finite());
        self.arcs.push(Arc { from, to, capacity });
        self.arcs.len() - 1
    }

    /// Bipartite repair network: source -> row `i` with capacity `row_caps[i]`,
    /// row `i` -> column `j` with `arc_caps[(i, j)]` for entries above the
    /// support threshold, column `j` -> sink with `col_caps[j]`.
    ///
    /// Nodes are numbered source = 0, rows `1..=n`, columns `n+1..=n+m`,
    /// sink = `n+m+1`. Returns the network and the arc index of each
    /// supported cell.
    pub fn bipartite(arc_caps: &DenseMatrix<T>, row_caps: &[T], col_caps: &[T]) -> (Self, Vec<(usize, usize, usize)>) {
        let (n, m) = (arc_caps.rows(), arc_caps.cols());
        let sink = n + m + 1;
        let mut net = Self::new(n + m + 2, 0, sink);
        for (i, &cap) in row_caps.iter().enumerate() {
            net.add_arc(0, 1 + i, cap);
        }
        let mut cells = Vec::new();
        for i in 0..n {
            for j in 0..m {
                let cap = arc_caps[(i, j)];
                if cap > T::SUPPORT_MIN {
                    let id = net.add_arc(1 + i, 1 + n + j, cap);
                    cells.push((i, j, id));
                }
            }
        }
        for (j, &cap) in col_caps.iter().enumerate() {
            net.add_arc(1 + n + j, sink, cap);
        }
        (net, cells)
    }

    pub fn source_capacity(&self) -> T {
        self.arcs
            .iter()
            .filter(|a| a.from == self.source)
            .map(|a| a.capacity)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxFlow<T> {
    pub value: T,
    /// Flow on each arc, indexed like `FlowNetwork::arcs`.
    pub flows: Vec<T>,
}

struct ResidualEdge<T> {
    to: usize,
    rev: usize,
    residual: T,
    arc: Option<usize>,
}

/// Dinic's blocking-flow algorithm. Augmentations below the flow tolerance
/// (relative to the largest capacity) are not pushed.
pub fn max_flow<T: Scalar>(net: &FlowNetwork<T>) -> MaxFlow<T> {
    let mut graph: Vec<Vec<ResidualEdge<T>>> = (0..net.node_count).map(|_| Vec::new()).collect();
    let mut max_cap = T::one();
    for (id, arc) in net.arcs.iter().enumerate() {
        max_cap = max_cap.max(arc.capacity);
        let fwd = graph[arc.from].len();
        let bwd = graph[arc.to].len() + usize::from(arc.from == arc.to);
        graph[arc.from].push(ResidualEdge {
            to: arc.to,
            rev: bwd,
            residual: arc.capacity,
            arc: Some(id),
        });
        graph[arc.to].push(ResidualEdge {
            to: arc.from,
            rev: fwd,
            residual: T::zero(),
            arc: None,
        });
    }
    let tol = T::FLOW_TOL * max_cap;
    let mut value = T::zero();
    let mut level = vec![usize::MAX; net.node_count];
    let mut next = vec![0usize; net.node_count];
    if net.source != net.sink {
        while bfs_levels(&graph, net.source, net.sink, tol, &mut level) {
            next.iter_mut().for_each(|x| *x = 0);
            loop {
                let pushed = augment(&mut graph, net.source, net.sink, T::infinity(), tol, &level, &mut next);
                if pushed <= tol {
                    break;
                }
                value += pushed;
            }
        }
    }
    let mut flows = vec![T::zero(); net.arcs.len()];
    for edges in &graph {
        for e in edges {
            if let Some(id) = e.arc {
                flows[id] = (net.arcs[id].capacity - e.residual).max(T::zero());
            }
        }
    }
    MaxFlow { value, flows }
}

fn bfs_levels<T: Scalar>(graph: &[Vec<ResidualEdge<T>>], s: usize, t: usize, tol: T, level: &mut [usize]) -> bool {
    level.iter_mut().for_each(|l| *l = usize::MAX);
    level[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        for e in &graph[v] {
            if e.residual > tol && level[e.to] == usize::MAX {
                level[e.to] = level[v] + 1;
                queue.push_back(e.to);
            }
        }
    }
    level[t] != usize::MAX
}

fn augment<T: Scalar>(
    graph: &mut [Vec<ResidualEdge<T>>],
    v: usize,
    t: usize,
    limit: T,
    tol: T,
    level: &[usize],
    next: &mut [usize],
) -> T {
    if v == t {
        return limit;
    }
    while next[v] < graph[v].len() {
        let idx = next[v];
        let (to, residual) = (graph[v][idx].to, graph[v][idx].residual);
        if residual > tol && level[to] == level[v] + 1 {
            let pushed = augment(graph, to, t, limit.min(residual), tol, level, next);
            if pushed > T::zero() {
                graph[v][idx].residual -= pushed;
                let rev = graph[v][idx].rev;
                graph[to][rev].residual += pushed;
                return pushed;
            }
        }
        next[v] += 1;
    }
    T::zero()
}

/// Routes `row_caps` through `arc_caps` into `col_caps` and returns the cell
/// flows. Sub-tolerance shortfalls left by the float max-flow are closed
/// with a rank-one correction so marginals come out exact.
fn route<T: Scalar>(arc_caps: &DenseMatrix<T>, row_caps: &[T], col_caps: &[T]) -> Result<DenseMatrix<T>> {
    let (net, cells) = FlowNetwork::bipartite(arc_caps, row_caps, col_caps);
    let required = net.source_capacity();
    let flow = max_flow(&net);
    let slack = T::FEAS_TOL * required.max(T::one());
    if flow.value < required - slack {
        return Err(Error::InfeasibleExtraction {
            routed: flow.value.as_f64(),
            required: required.as_f64(),
        });
    }
    let mut y = DenseMatrix::zeros(arc_caps.rows(), arc_caps.cols());
    for &(i, j, id) in &cells {
        y[(i, j)] = flow.flows[id];
    }
    close_residual(&mut y, row_caps, col_caps);
    Ok(y)
}

/// Adds `err_r err_c^T / ||err_r||_1` where `err` is the (clamped) shortfall
/// of each marginal. The result has exact marginals when the two shortfalls
/// have equal mass.
fn close_residual<T: Scalar>(y: &mut DenseMatrix<T>, r: &[T], c: &[T]) {
    let err_r: Vec<T> = y
        .row_sums()
        .iter()
        .zip(r)
        .map(|(&s, &t)| (t - s).max(T::zero()))
        .collect();
    let err_c: Vec<T> = y
        .col_sums()
        .iter()
        .zip(c)
        .map(|(&s, &t)| (t - s).max(T::zero()))
        .collect();
    let total: T = err_r.iter().copied().sum();
    if total <= T::zero() {
        return;
    }
    for (i, &ei) in err_r.iter().enumerate() {
        if ei == T::zero() {
            continue;
        }
        for (j, &ej) in err_c.iter().enumerate() {
            y[(i, j)] += ei * ej / total;
        }
    }
}

fn check_shape<T: Scalar>(x: &DenseMatrix<T>, r_len: usize, c_len: usize) -> Result<()> {
    if x.rows() != r_len {
        return Err(Error::DimensionMismatch {
            what: "plan rows",
            expected: r_len,
            found: x.rows(),
        });
    }
    if x.cols() != c_len {
        return Err(Error::DimensionMismatch {
            what: "plan columns",
            expected: c_len,
            found: x.cols(),
        });
    }
    Ok(())
}

/// Finds `0 <= X_hat <= X` with `X_hat 1 = r_s / 2` and `X_hat^T 1 = c_s / 2`.
///
/// Expects `X 1 = r_s`, `||X^T 1 - c_s||_1 <= 1/(2 mu)` and integral
/// `mu r_s`, `mu c_s`; fails with `InfeasibleExtraction` otherwise.
pub fn extract_half_feasible<T: Scalar>(x: &DenseMatrix<T>, r_s: &[T], c_s: &[T], mu: u64) -> Result<DenseMatrix<T>> {
    check_shape(x, r_s.len(), c_s.len())?;
    let mu = T::of_u64(mu);
    let arc_caps = x.scaled(T::two() * mu);
    let rows: Vec<T> = r_s.iter().map(|&v| (v * mu).round()).collect();
    let cols: Vec<T> = c_s.iter().map(|&v| (v * mu).round()).collect();
    let y = route(&arc_caps, &rows, &cols)?;
    Ok(y.scaled(T::one() / (T::two() * mu)))
}

/// `Y = 2 mu X_hat` for the row-exact candidate `x` in original units.
pub fn repair_plan<T: Scalar>(x: &DenseMatrix<T>, inst: &TransportInstance<T>) -> Result<TransportPlan<T>> {
    check_shape(x, inst.n(), inst.m())?;
    let arc_caps = x.scaled(T::two());
    let y = route(&arc_caps, &inst.demand_real(), &inst.supply_real())?;
    Ok(TransportPlan::new(y, inst))
}

/// Clip rows to `r`, clip columns to `c`, then add the rank-one residual
/// `err_r err_c^T / ||err_r||_1`. Works for any nonnegative `x` and real
/// marginals of equal mass; already feasible input comes back unchanged.
pub fn round_feasible_simple<T: Scalar>(x: &DenseMatrix<T>, r: &[T], c: &[T]) -> Result<DenseMatrix<T>> {
    check_shape(x, r.len(), c.len())?;
    let mut y = x.map(|v| v.max(T::zero()));
    for (i, s) in y.row_sums().into_iter().enumerate() {
        if s > r[i] {
            let f = r[i] / s;
            y.row_mut(i).iter_mut().for_each(|v| *v *= f);
        }
    }
    let col_scale: Vec<T> = y
        .col_sums()
        .iter()
        .zip(c)
        .map(|(&s, &t)| if s > t { t / s } else { T::one() })
        .collect();
    for i in 0..y.rows() {
        for (v, &f) in y.row_mut(i).iter_mut().zip(&col_scale) {
            *v *= f;
        }
    }
    close_residual(&mut y, r, c);
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::validate_instance;
    use crate::sinkhorn::{run_expsinkhorn, Limits};

    #[test]
    fn single_path() {
        let mut net = FlowNetwork::new(4, 0, 3);
        net.add_arc(0, 1, 1.0f64);
        net.add_arc(1, 2, 1.0);
        net.add_arc(2, 3, 1.0);
        let f = max_flow(&net);
        assert_eq!(f.value, 1.0);
        assert_eq!(f.flows, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn parallel_paths() {
        let mut net = FlowNetwork::new(4, 0, 3);
        net.add_arc(0, 1, 2.0f64);
        net.add_arc(1, 3, 2.0);
        net.add_arc(0, 2, 3.0);
        net.add_arc(2, 3, 3.0);
        assert_eq!(max_flow(&net).value, 5.0);
    }

    #[test]
    fn classic_network() {
        let mut net = FlowNetwork::new(6, 0, 5);
        for (u, v, c) in [
            (0, 1, 10.0),
            (0, 2, 10.0),
            (1, 3, 4.0),
            (1, 4, 8.0),
            (2, 4, 9.0),
            (3, 5, 10.0),
            (4, 3, 6.0),
            (4, 5, 10.0),
        ] {
            net.add_arc(u, v, c);
        }
        let f = max_flow(&net);
        assert!((f.value - 19.0f64).abs() < 1e-12);
        for (arc, &fl) in net.arcs.iter().zip(&f.flows) {
            assert!(fl <= arc.capacity + 1e-12);
        }
        for v in 1..5 {
            let inflow: f64 = net
                .arcs
                .iter()
                .zip(&f.flows)
                .filter(|(a, _)| a.to == v)
                .map(|(_, f)| f)
                .sum();
            let outflow: f64 = net
                .arcs
                .iter()
                .zip(&f.flows)
                .filter(|(a, _)| a.from == v)
                .map(|(_, f)| f)
                .sum();
            assert!((inflow - outflow).abs() < 1e-12);
        }
    }

    #[test]
    fn disconnected_network_has_zero_flow() {
        let mut net = FlowNetwork::new(4, 0, 3);
        net.add_arc(0, 1, 10.0f64);
        net.add_arc(2, 3, 5.0);
        assert_eq!(max_flow(&net).value, 0.0);
    }

    #[test]
    fn extract_from_exactly_feasible() {
        let x = DenseMatrix::from_vec(1, 1, vec![1.0f64]).unwrap();
        let hat = extract_half_feasible(&x, &[1.0], &[1.0], 1).unwrap();
        assert!((hat[(0, 0)] - 0.5).abs() < 1e-15);

        let x = DenseMatrix::from_vec(2, 2, vec![0.5f64, 0.5, 0.0, 0.5]).unwrap();
        let hat = extract_half_feasible(&x, &[1.0, 0.5], &[0.5, 1.0], 2).unwrap();
        let rows = hat.row_sums();
        let cols = hat.col_sums();
        assert!((rows[0] - 0.5).abs() < 1e-15 && (rows[1] - 0.25).abs() < 1e-15);
        assert!((cols[0] - 0.25).abs() < 1e-15 && (cols[1] - 0.5).abs() < 1e-15);
        for (h, v) in hat.as_slice().iter().zip(x.as_slice()) {
            assert!(*h <= v + 1e-15);
        }
    }

    #[test]
    fn two_by_two_repair_network_saturates() {
        let inst = validate_instance(2, 2, vec![1.0f64, 2.0, 3.0, 1.0], vec![2, 1], vec![1, 2]).unwrap();
        let run = run_expsinkhorn(&inst, 1e-3, Limits::default()).unwrap();
        let (net, _) = FlowNetwork::bipartite(&run.plan.scaled(2.0), &inst.demand_real(), &inst.supply_real());
        let f = max_flow(&net);
        assert!((f.value - 3.0).abs() < 1e-9, "{}", f.value);

        let x_s = run.plan.scaled(0.5);
        let hat = extract_half_feasible(&x_s, run.state.r_s(), run.state.c_s(), 2).unwrap();
        let rows = hat.row_sums();
        let cols = hat.col_sums();
        assert!((rows[0] - 0.5).abs() < 1e-9 && (rows[1] - 0.25).abs() < 1e-9);
        assert!((cols[0] - 0.25).abs() < 1e-9 && (cols[1] - 0.5).abs() < 1e-9);

        let plan = repair_plan(&run.plan, &inst).unwrap();
        assert!(plan.marginal_residual(&inst) < 1e-9);
        assert!(plan.cost >= 4.0 - 1e-9 && plan.cost <= 4.0 + 1e-3, "{}", plan.cost);
    }

    #[test]
    fn infeasible_extraction_is_reported() {
        // Rows exact but the only arc column cannot absorb column 1's supply.
        let x = DenseMatrix::from_vec(2, 2, vec![1.0f64, 0.0, 1.0, 0.0]).unwrap();
        let err = extract_half_feasible(&x, &[1.0, 1.0], &[1.0, 1.0], 1).unwrap_err();
        assert!(matches!(err, Error::InfeasibleExtraction { .. }));
    }

    #[test]
    fn simple_rounding_examples() {
        let x = DenseMatrix::from_vec(2, 2, vec![1.0f64, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(round_feasible_simple(&x, &[2.0, 1.0], &[1.0, 2.0]).unwrap(), x);

        let zero = DenseMatrix::zeros(2, 3);
        let r = [1.0f64, 3.0];
        let c = [2.0f64, 1.0, 1.0];
        let y = round_feasible_simple(&zero, &r, &c).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert!((y[(i, j)] - r[i] * c[j] / 4.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let x = DenseMatrix::zeros(2, 2);
        assert!(matches!(
            round_feasible_simple(&x, &[1.0f64], &[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
