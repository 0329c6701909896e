use crate::error::{Error, Result};
use crate::instance::{TransportInstance, TransportPlan};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// Rounds a feasible fractional plan with integral marginals to an integral
/// plan of no larger cost.
pub fn cycle_cancel_round<T: Scalar>(x: &DenseMatrix<T>, inst: &TransportInstance<T>) -> Result<TransportPlan<T>> {
    cycle_cancel_round_with_history(x, inst).map(|(plan, _)| plan)
}

/// As [`cycle_cancel_round`], also returning the number of fractional
/// entries left after the initial snap and after every cancellation.
pub fn cycle_cancel_round_with_history<T: Scalar>(
    x: &DenseMatrix<T>,
    inst: &TransportInstance<T>,
) -> Result<(TransportPlan<T>, Vec<usize>)> {
    let (n, m) = (inst.n(), inst.m());
    if x.rows() != n || x.cols() != m {
        return Err(Error::DimensionMismatch {
            what: "plan",
            expected: n * m,
            found: x.rows() * x.cols(),
        });
    }
    let mut x = x.clone();
    let mut frac = DenseMatrix::filled(n, m, false);
    for i in 0..n {
        for j in 0..m {
            frac[(i, j)] = !snap(&mut x[(i, j)]);
        }
    }
    let mut history = vec![count(&frac)];
    loop {
        prune_leaves(&mut x, &mut frac);
        if count(&frac) == 0 {
            break;
        }
        let cycle = find_cycle(&frac).ok_or(Error::Rounding("fractional support has no cycle"))?;
        cancel(&mut x, &mut frac, inst.cost(), &cycle);
        history.push(count(&frac));
    }
    if *history.last().unwrap_or(&0) != 0 {
        history.push(0);
    }
    let demand = inst.demand_real();
    let supply = inst.supply_real();
    if x.row_sums() != demand || x.col_sums() != supply {
        return Err(Error::Rounding("rounded plan does not meet the marginals"));
    }
    Ok((TransportPlan::new(x, inst), history))
}

/// Snaps `v` to the nearest integer if within tolerance; reports integrality.
fn snap<T: Scalar>(v: &mut T) -> bool {
    let r = v.round();
    if (*v - r).abs() <= T::INTEGRAL_TOL {
        *v = if r == T::zero() { T::zero() } else { r };
        true
    } else {
        false
    }
}

fn count(frac: &DenseMatrix<bool>) -> usize {
    frac.as_slice().iter().filter(|&&f| f).count()
}

/// A row or column with a single fractional entry can only come from
/// round-off in the marginals, so that entry is rounded directly.
fn prune_leaves<T: Scalar>(x: &mut DenseMatrix<T>, frac: &mut DenseMatrix<bool>) {
    let (n, m) = (x.rows(), x.cols());
    loop {
        let mut changed = false;
        for i in 0..n {
            let cells: Vec<usize> = (0..m).filter(|&j| frac[(i, j)]).collect();
            if let [j] = cells[..] {
                x[(i, j)] = x[(i, j)].round();
                frac[(i, j)] = false;
                changed = true;
            }
        }
        for j in 0..m {
            let cells: Vec<usize> = (0..n).filter(|&i| frac[(i, j)]).collect();
            if let [i] = cells[..] {
                x[(i, j)] = x[(i, j)].round();
                frac[(i, j)] = false;
                changed = true;
            }
        }
        if !changed {
            return;
        }
    }
}

/// Depth-first walk over the fractional support, never leaving a vertex by
/// the cell it was entered through; returns the first closed cycle as an
/// alternating list of cells.
fn find_cycle(frac: &DenseMatrix<bool>) -> Option<Vec<(usize, usize)>> {
    let (n, m) = (frac.rows(), frac.cols());
    let start = (0..n).find(|&i| (0..m).any(|j| frac[(i, j)]))?;
    // Vertices: rows `0..n`, columns `n..n+m`.
    let mut position = vec![usize::MAX; n + m];
    let mut cells: Vec<(usize, usize)> = Vec::new();
    let mut v = start;
    position[v] = 0;
    loop {
        let prev = cells.last().copied();
        let next = if v < n {
            (0..m).map(|j| (v, j)).find(|&c| frac[c] && Some(c) != prev)
        } else {
            (0..n).map(|i| (i, v - n)).find(|&c| frac[c] && Some(c) != prev)
        }?;
        let w = if v < n { n + next.1 } else { next.0 };
        cells.push(next);
        if position[w] != usize::MAX {
            return Some(cells.split_off(position[w]));
        }
        position[w] = cells.len();
        v = w;
    }
}

fn cancel<T: Scalar>(
    x: &mut DenseMatrix<T>,
    frac: &mut DenseMatrix<bool>,
    q: &DenseMatrix<T>,
    cycle: &[(usize, usize)],
) {
    let signed = |k: usize| if k.is_multiple_of(2) { T::one() } else { -T::one() };
    let delta: T = cycle.iter().enumerate().map(|(k, &c)| signed(k) * q[c]).sum();
    let dir = if delta > T::zero() { -T::one() } else { T::one() };
    let room = |k: usize, c: (usize, usize)| {
        if signed(k) * dir > T::zero() {
            x[c].ceil() - x[c]
        } else {
            x[c] - x[c].floor()
        }
    };
    let (mut hit, mut theta) = (0, T::infinity());
    for (k, &c) in cycle.iter().enumerate() {
        let r = room(k, c);
        if r < theta {
            hit = k;
            theta = r;
        }
    }
    let target = if signed(hit) * dir > T::zero() {
        x[cycle[hit]].ceil()
    } else {
        x[cycle[hit]].floor()
    };
    for (k, &c) in cycle.iter().enumerate() {
        x[c] += signed(k) * dir * theta;
        frac[c] = !snap(&mut x[c]);
    }
    x[cycle[hit]] = target;
    frac[cycle[hit]] = false;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::validate_instance;

    #[test]
    fn integral_input_unchanged() {
        let inst = validate_instance(2, 2, vec![1.0f64, 2.0, 3.0, 1.0], vec![2, 1], vec![1, 2]).unwrap();
        let x = DenseMatrix::from_vec(2, 2, vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        let (plan, history) = cycle_cancel_round_with_history(&x, &inst).unwrap();
        assert_eq!(plan.x, x);
        assert_eq!(history, vec![0]);
    }

    #[test]
    fn half_plan_rounds_to_diagonal() {
        let inst = validate_instance(2, 2, vec![0.0f64, 1.0, 1.0, 0.0], vec![1, 1], vec![1, 1]).unwrap();
        let x = DenseMatrix::filled(2, 2, 0.5f64);
        let plan = cycle_cancel_round(&x, &inst).unwrap();
        assert_eq!(plan.x.as_slice(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(plan.cost, 0.0);
    }

    #[test]
    fn fractional_count_strictly_shrinks() {
        let inst = validate_instance(
            3,
            3,
            vec![1.0f64, 2.0, 3.0, 2.0, 1.0, 2.0, 3.0, 2.0, 1.0],
            vec![1, 2, 3],
            vec![2, 2, 2],
        )
        .unwrap();
        // Uniform-ish fractional plan with the right marginals.
        let x = DenseMatrix::from_fn(3, 3, |i, _| inst.demand()[i] as f64 / 3.0);
        let cost_in = TransportPlan::new(x.clone(), &inst).cost;
        let (plan, history) = cycle_cancel_round_with_history(&x, &inst).unwrap();
        assert!(history.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(*history.last().unwrap(), 0);
        assert!(plan.cost <= cost_in + 1e-9);
        assert!(plan.x.as_slice().iter().all(|v| v.fract() == 0.0));
    }

    #[test]
    fn infeasible_marginals_rejected() {
        let inst = validate_instance(1, 2, vec![1.0f64, 1.0], vec![2], vec![1, 1]).unwrap();
        let x = DenseMatrix::from_vec(1, 2, vec![1.5, 0.5]).unwrap();
        assert!(matches!(cycle_cancel_round(&x, &inst), Err(Error::Rounding(_))));
    }
}
