//! Slow exact solvers used as ground truth. Deliberately independent of the
//! scaling engine: plain successive shortest paths for transport and
//! Bellman-Ford cycle canceling for circulations.

use crate::instance::TransportInstance;
use crate::matrix::DenseMatrix;
use crate::mcc::{Circulation, MccInstance};
use crate::scalar::Scalar;

/// Optimal value and an integral optimal plan.
pub fn exact_ot<T: Scalar>(inst: &TransportInstance<T>) -> (T, DenseMatrix<u64>) {
    let (n, m) = (inst.n(), inst.m());
    let q: Vec<f64> = inst.cost().as_slice().iter().map(|v| v.as_f64()).collect();
    let r = inst.demand();
    let c = inst.supply();
    let mut x = vec![0u64; n * m];
    let mut from_source = vec![0u64; n];
    let mut to_sink = vec![0u64; m];

    // Node ids: rows 0..n, columns n..n+m, then sink and source.
    let sink = n + m;
    let source = n + m + 1;
    let nodes = n + m + 2;
    let mut pot = vec![0.0f64; nodes];
    for j in 0..m {
        pot[n + j] = (0..n).map(|i| q[i * m + j]).fold(f64::INFINITY, f64::min);
    }
    pot[sink] = pot[n..n + m].iter().copied().fold(f64::INFINITY, f64::min);

    let total: u64 = r.iter().sum();
    let mut sent = 0u64;
    while sent < total {
        let mut dist = vec![f64::INFINITY; nodes];
        let mut pred = vec![usize::MAX; nodes];
        let mut done = vec![false; nodes];
        dist[source] = 0.0;
        // Dense Dijkstra on reduced costs.
        while let Some(u) = (0..nodes)
            .filter(|&v| !done[v] && dist[v].is_finite())
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]))
        {
            done[u] = true;
            if u == sink {
                break;
            }
            let relax = |v: usize, cost: f64, dist: &mut [f64], pred: &mut [usize]| {
                let nd = dist[u] + (cost + pot[u] - pot[v]).max(0.0);
                if nd < dist[v] {
                    dist[v] = nd;
                    pred[v] = u;
                }
            };
            if u == source {
                for i in 0..n {
                    if from_source[i] < r[i] {
                        relax(i, 0.0, &mut dist, &mut pred);
                    }
                }
            } else if u < n {
                for j in 0..m {
                    relax(n + j, q[u * m + j], &mut dist, &mut pred);
                }
            } else {
                let j = u - n;
                for i in 0..n {
                    if x[i * m + j] > 0 {
                        relax(i, -q[i * m + j], &mut dist, &mut pred);
                    }
                }
                if to_sink[j] < c[j] {
                    relax(sink, 0.0, &mut dist, &mut pred);
                }
            }
        }
        assert!(
            dist[sink].is_finite(),
            "balanced transport always has an augmenting path"
        );
        let cap = dist[sink];
        for v in 0..nodes {
            pot[v] += dist[v].min(cap);
        }

        // Walk back from the sink to the source, finding the bottleneck.
        let mut path = vec![sink];
        let mut v = sink;
        while v != source {
            v = pred[v];
            path.push(v);
        }
        path.reverse();
        let path = &path[1..];
        let root = path[0];
        let mut push = r[root] - from_source[root];
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b == sink {
                push = push.min(c[a - n] - to_sink[a - n]);
            } else if a >= n {
                push = push.min(x[b * m + (a - n)]);
            }
        }
        from_source[root] += push;
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b == sink {
                to_sink[a - n] += push;
            } else if a < n {
                x[a * m + (b - n)] += push;
            } else {
                x[b * m + (a - n)] -= push;
            }
        }
        sent += push;
    }
    let plan = DenseMatrix::from_vec(n, m, x).expect("n * m entries");
    let opt = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| inst.cost()[(i, j)] * T::of_u64(plan[(i, j)]))
        .fold(T::zero(), |a, b| a + b);
    (opt, plan)
}

/// Residual arc: edge `id` traversed forward (`true`) or backward.
type Residual = (usize, bool);

fn residual_arcs(mcc: &MccInstance, flow: &[i64]) -> Vec<(usize, usize, i64, Residual)> {
    let mut arcs = Vec::with_capacity(2 * mcc.edge_count());
    for (id, e) in mcc.edges().iter().enumerate() {
        if flow[id] < e.capacity as i64 {
            arcs.push((e.tail, e.head, e.cost, (id, true)));
        }
        if flow[id] > 0 {
            arcs.push((e.head, e.tail, -e.cost, (id, false)));
        }
    }
    arcs
}

/// A negative-cost cycle in the residual graph of `flow`, if any.
fn negative_cycle(mcc: &MccInstance, flow: &[i64]) -> Option<Vec<Residual>> {
    let v = mcc.vertex_count();
    let arcs = residual_arcs(mcc, flow);
    let mut dist = vec![0i64; v];
    let mut pred: Vec<Option<usize>> = vec![None; v];
    let mut last = None;
    for _ in 0..v {
        last = None;
        for (k, &(a, b, cost, _)) in arcs.iter().enumerate() {
            if dist[a] + cost < dist[b] {
                dist[b] = dist[a] + cost;
                pred[b] = Some(k);
                last = Some(b);
            }
        }
        last?;
    }
    let mut x = last?;
    for _ in 0..v {
        x = arcs[pred[x]?].0;
    }
    let mut cycle = Vec::new();
    let mut y = x;
    loop {
        let k = pred[y]?;
        cycle.push(arcs[k].3);
        y = arcs[k].0;
        if y == x {
            break;
        }
    }
    Some(cycle)
}

pub fn has_negative_residual_cycle(mcc: &MccInstance, flow: &Circulation<i64>) -> bool {
    negative_cycle(mcc, &flow.flow).is_some()
}

/// Minimum cost and an optimal integral circulation.
pub fn exact_mcc(mcc: &MccInstance) -> (i64, Circulation<i64>) {
    let mut flow = vec![0i64; mcc.edge_count()];
    while let Some(cycle) = negative_cycle(mcc, &flow) {
        let room = |&(id, fwd): &Residual| {
            if fwd {
                mcc.edges()[id].capacity as i64 - flow[id]
            } else {
                flow[id]
            }
        };
        let push = cycle.iter().map(room).min().expect("nonempty cycle");
        for &(id, fwd) in &cycle {
            flow[id] += if fwd { push } else { -push };
        }
    }
    let circ = Circulation { flow };
    (circ.cost(mcc), circ)
}
