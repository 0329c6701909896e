use crate::error::{Error, Result};
use crate::mcc::{circulation_from_plan, cycle_cancel_round, mcc_to_ot, Circulation, McEdge, MccInstance};
use crate::repair::repair_plan;
use crate::sinkhorn::{run_expsinkhorn, Limits};

/// Drops edges leaving vertices that nothing can enter, repeatedly, then
/// drops vertices left without edges. Returns the reduced graph and, for
/// each surviving edge, its index in `mcc`.
pub fn prune_sourceless(mcc: &MccInstance) -> (MccInstance, Vec<usize>) {
    let mut alive = vec![true; mcc.edge_count()];
    loop {
        let mut inflow = vec![0u64; mcc.vertex_count()];
        for (e, _) in mcc.edges().iter().zip(&alive).filter(|(_, &a)| a) {
            inflow[e.head] += e.capacity;
        }
        let mut changed = false;
        for (e, a) in mcc.edges().iter().zip(alive.iter_mut()) {
            if *a && inflow[e.tail] == 0 {
                *a = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let kept: Vec<usize> = (0..mcc.edge_count()).filter(|&id| alive[id]).collect();
    let mut relabel = vec![usize::MAX; mcc.vertex_count()];
    let mut next = 0;
    for &id in &kept {
        let e = mcc.edges()[id];
        for v in [e.tail, e.head] {
            if relabel[v] == usize::MAX {
                relabel[v] = next;
                next += 1;
            }
        }
    }
    let edges = kept
        .iter()
        .map(|&id| {
            let e = mcc.edges()[id];
            McEdge {
                tail: relabel[e.tail],
                head: relabel[e.head],
                ..e
            }
        })
        .collect();
    let pruned = MccInstance::new(next, edges).expect("relabelled subgraph of a valid instance");
    (pruned, kept)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MccSolution {
    pub circulation: Circulation<i64>,
    pub cost: i64,
    /// Scaling steps spent by the transport solve.
    pub iterations: usize,
}

/// Minimum-cost circulation through the transport reduction. `epsilon`
/// defaults to `1 / (4 |E| U C)`, which is below the unit integrality gap.
pub fn solve_mcc(mcc: &MccInstance, epsilon: Option<f64>) -> Result<MccSolution> {
    let (pruned, kept) = prune_sourceless(mcc);
    let mut flow = vec![0i64; mcc.edge_count()];
    let mut iterations = 0;
    if pruned.edge_count() > 0 {
        let red = mcc_to_ot::<f64>(&pruned)?;
        let eps = epsilon.unwrap_or_else(|| {
            1.0 / (4.0 * pruned.edge_count() as f64 * pruned.max_capacity() as f64 * pruned.max_cost().max(1) as f64)
        });
        let run = run_expsinkhorn(&red.instance, eps, Limits::default())?;
        iterations = run.trace.len();
        let repaired = repair_plan(&run.plan, &red.instance)?;
        let rounded = cycle_cancel_round(&repaired.x, &red.instance)?;
        let circ = circulation_from_plan(&rounded.x, &pruned)?;
        if circ.cost(&pruned) != rounded.cost {
            return Err(Error::Rounding("rounded plan uses penalty cells"));
        }
        for (&id, &f) in kept.iter().zip(&circ.flow) {
            flow[id] = f as i64;
        }
    }
    let circulation = Circulation { flow };
    let cost = circulation.cost(mcc);
    Ok(MccSolution {
        circulation,
        cost,
        iterations,
    })
}
