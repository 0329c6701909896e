use crate::error::{Error, Result};
use crate::instance::{validate_instance, TransportInstance};
use crate::matrix::DenseMatrix;
use crate::mcc::{Circulation, McEdge, MccInstance};
use crate::scalar::Scalar;

/// Greedy northwest-corner fill: an integral plan with marginals `r`, `c`.
pub fn northwest_initial(r: &[u64], c: &[u64]) -> DenseMatrix<u64> {
    let mut x = DenseMatrix::filled(r.len(), c.len(), 0u64);
    let mut rem_r = r.to_vec();
    let mut rem_c = c.to_vec();
    let (mut i, mut j) = (0, 0);
    while i < r.len() && j < c.len() {
        let amount = rem_r[i].min(rem_c[j]);
        x[(i, j)] = amount;
        rem_r[i] -= amount;
        rem_c[j] -= amount;
        if rem_r[i] == 0 {
            i += 1;
        } else {
            j += 1;
        }
    }
    x
}

/// Which way a bipartite arc moves the plan entry `(row, col)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArcRole {
    /// Row -> column, cost `Q_ij`, raises `X_ij`.
    Increase { row: usize, col: usize },
    /// Column -> row, cost `-Q_ij`, lowers `X_ij`.
    Decrease { row: usize, col: usize },
}

/// Transport as a circulation on the complete bipartite graph around `x0`.
///
/// Vertices `0..n` are rows and `n..n+m` columns. For every cell there is
/// an increase arc with capacity `min(r_i, c_j) - X0_ij` and a decrease arc
/// with capacity `X0_ij`; zero-capacity arcs are omitted.
#[derive(Clone, Debug, PartialEq)]
pub struct OtToMcc {
    pub mcc: MccInstance,
    pub x0: DenseMatrix<u64>,
    pub roles: Vec<ArcRole>,
}

impl OtToMcc {
    /// `X = X0 + Delta(f)`.
    pub fn recover<T: Scalar>(&self, flow: &[T]) -> DenseMatrix<T> {
        let mut x = self.x0.map(T::of_u64);
        for (role, &f) in self.roles.iter().zip(flow) {
            match *role {
                ArcRole::Increase { row, col } => x[(row, col)] += f,
                ArcRole::Decrease { row, col } => x[(row, col)] -= f,
            }
        }
        x
    }
}

pub fn ot_to_mcc<T: Scalar>(inst: &TransportInstance<T>) -> Result<OtToMcc> {
    let (n, m) = (inst.n(), inst.m());
    let x0 = northwest_initial(inst.demand(), inst.supply());
    let mut edges = Vec::new();
    let mut roles = Vec::new();
    for i in 0..n {
        for j in 0..m {
            let q = inst.cost()[(i, j)];
            if q != q.round() {
                return Err(Error::NonIntegralCost { row: i, col: j });
            }
            let q = q.to_i64().ok_or(Error::NonIntegralCost { row: i, col: j })?;
            let room = inst.demand()[i].min(inst.supply()[j]) - x0[(i, j)];
            if room > 0 {
                edges.push(McEdge {
                    tail: i,
                    head: n + j,
                    capacity: room,
                    cost: q,
                });
                roles.push(ArcRole::Increase { row: i, col: j });
            }
            if x0[(i, j)] > 0 {
                edges.push(McEdge {
                    tail: n + j,
                    head: i,
                    capacity: x0[(i, j)],
                    cost: -q,
                });
                roles.push(ArcRole::Decrease { row: i, col: j });
            }
        }
    }
    Ok(OtToMcc {
        mcc: MccInstance::new(n + m, edges)?,
        x0,
        roles,
    })
}

/// Transport instance with rows indexed by vertices and columns by edges.
#[derive(Clone, Debug, PartialEq)]
pub struct MccToOt<T> {
    pub instance: TransportInstance<T>,
    /// Cost of cells joining a vertex to an edge it is not incident to.
    pub big_m: i64,
}

/// Demand `r_u` is the capacity entering `u`, supply `c_e = u_e`, and
/// `Q_ue` is `c_e` at the tail, `0` at the head and `|E| U C` elsewhere
/// (with `C` floored at 1 so the penalty stays positive on zero-cost graphs).
pub fn mcc_to_ot<T: Scalar>(mcc: &MccInstance) -> Result<MccToOt<T>> {
    let demand = mcc.in_capacity();
    if let Some(vertex) = demand.iter().position(|&d| d == 0) {
        return Err(Error::IsolatedVertex { vertex });
    }
    let supply: Vec<u64> = mcc.edges().iter().map(|e| e.capacity).collect();
    let big_m = mcc.edge_count() as i64 * mcc.max_capacity() as i64 * mcc.max_cost().max(1) as i64;
    let (n, m) = (mcc.vertex_count(), mcc.edge_count());
    let mut costs = vec![T::of_f64(big_m as f64); n * m];
    for (id, e) in mcc.edges().iter().enumerate() {
        costs[e.tail * m + id] = T::of_f64(e.cost as f64);
        costs[e.head * m + id] = T::zero();
    }
    Ok(MccToOt {
        instance: validate_instance(n, m, costs, demand, supply)?,
        big_m,
    })
}

/// `f_e = X_{tail(e), e}`; fails if the result does not conserve flow.
pub fn circulation_from_plan<T: Scalar>(x: &DenseMatrix<T>, mcc: &MccInstance) -> Result<Circulation<T>> {
    if x.rows() != mcc.vertex_count() || x.cols() != mcc.edge_count() {
        return Err(Error::DimensionMismatch {
            what: "reduced plan",
            expected: mcc.vertex_count() * mcc.edge_count(),
            found: x.rows() * x.cols(),
        });
    }
    let circ = Circulation {
        flow: mcc.edges().iter().enumerate().map(|(id, e)| x[(e.tail, id)]).collect(),
    };
    for (vertex, net) in circ.net_flow(mcc).into_iter().enumerate() {
        if net.abs() > T::FEAS_TOL {
            return Err(Error::ConservationViolation {
                vertex,
                net: net.as_f64(),
            });
        }
    }
    Ok(circ)
}

/// `X_ue = f_e` at the tail, `u_e - f_e` at the head, `0` elsewhere.
pub fn plan_from_circulation<T: Scalar>(f: &Circulation<T>, mcc: &MccInstance) -> DenseMatrix<T> {
    let mut x = DenseMatrix::zeros(mcc.vertex_count(), mcc.edge_count());
    for (id, (e, &fe)) in mcc.edges().iter().zip(&f.flow).enumerate() {
        x[(e.tail, id)] = fe;
        x[(e.head, id)] = T::of_u64(e.capacity) - fe;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::TransportPlan;

    fn three_cycle() -> MccInstance {
        let edges = vec![
            McEdge {
                tail: 0,
                head: 1,
                capacity: 2,
                cost: -1,
            },
            McEdge {
                tail: 1,
                head: 2,
                capacity: 2,
                cost: -1,
            },
            McEdge {
                tail: 2,
                head: 0,
                capacity: 2,
                cost: -1,
            },
        ];
        MccInstance::new(3, edges).unwrap()
    }

    #[test]
    fn northwest_examples() {
        let x = northwest_initial(&[2, 1], &[1, 2]);
        assert_eq!(x.as_slice(), &[1, 1, 0, 1]);
        assert_eq!(northwest_initial(&[1], &[1]).as_slice(), &[1]);
    }

    #[test]
    fn ot_to_mcc_arc_audit() {
        let inst = validate_instance(2, 2, vec![1.0f64, 2.0, 3.0, 1.0], vec![2, 1], vec![1, 2]).unwrap();
        let red = ot_to_mcc(&inst).unwrap();
        assert_eq!(red.mcc.vertex_count(), 4);
        let find = |role: ArcRole| {
            let id = red.roles.iter().position(|r| *r == role).expect("arc present");
            red.mcc.edges()[id]
        };
        let dec11 = find(ArcRole::Decrease { row: 0, col: 0 });
        assert_eq!((dec11.tail, dec11.head, dec11.capacity, dec11.cost), (2, 0, 1, -1));
        let inc21 = find(ArcRole::Increase { row: 1, col: 0 });
        assert_eq!((inc21.tail, inc21.head, inc21.capacity, inc21.cost), (1, 2, 1, 3));
        // X0_11 = 1 = min(r_1, c_1): no increase arc for that cell.
        assert!(!red.roles.contains(&ArcRole::Increase { row: 0, col: 0 }));
        // Slots with nonzero capacity: (1,1) dec, (1,2) inc+dec, (2,1) inc, (2,2) dec.
        assert_eq!(red.mcc.edge_count(), 5);
        let zero = vec![0.0f64; red.mcc.edge_count()];
        assert_eq!(red.recover(&zero), red.x0.map(|v| v as f64));
    }

    #[test]
    fn ot_to_mcc_rejects_fractional_costs() {
        let inst = validate_instance(1, 1, vec![0.5f64], vec![1], vec![1]).unwrap();
        assert_eq!(ot_to_mcc(&inst).unwrap_err(), Error::NonIntegralCost { row: 0, col: 0 });
    }

    #[test]
    fn mcc_to_ot_three_cycle() {
        let g = three_cycle();
        let red = mcc_to_ot::<f64>(&g).unwrap();
        assert_eq!(red.big_m, 6);
        assert_eq!(red.instance.demand(), &[2, 2, 2]);
        assert_eq!(red.instance.supply(), &[2, 2, 2]);
        // Vertex 0 is the tail of edge 0, head of edge 2, not on edge 1.
        assert_eq!(red.instance.cost().row(0), &[-1.0, 6.0, 0.0]);
    }

    #[test]
    fn mcc_to_ot_two_cycle() {
        let edges = vec![
            McEdge {
                tail: 0,
                head: 1,
                capacity: 1,
                cost: 4,
            },
            McEdge {
                tail: 1,
                head: 0,
                capacity: 1,
                cost: -7,
            },
        ];
        let g = MccInstance::new(2, edges).unwrap();
        let red = mcc_to_ot::<f64>(&g).unwrap();
        assert_eq!(red.instance.cost().as_slice(), &[4.0, 0.0, 0.0, -7.0]);
    }

    #[test]
    fn isolated_vertex_rejected() {
        let edges = vec![
            McEdge {
                tail: 0,
                head: 1,
                capacity: 1,
                cost: 1,
            },
            McEdge {
                tail: 1,
                head: 2,
                capacity: 1,
                cost: 1,
            },
        ];
        let g = MccInstance::new(3, edges).unwrap();
        assert_eq!(mcc_to_ot::<f64>(&g).unwrap_err(), Error::IsolatedVertex { vertex: 0 });
    }

    #[test]
    fn plan_circulation_correspondence() {
        let g = three_cycle();
        let red = mcc_to_ot::<f64>(&g).unwrap();
        let zero = Circulation { flow: vec![0.0; 3] };
        let x = plan_from_circulation(&zero, &g);
        assert_eq!(x[(1, 0)], 2.0);
        assert_eq!(x[(0, 0)], 0.0);
        assert_eq!(circulation_from_plan(&x, &g).unwrap(), zero);

        let full = Circulation { flow: vec![2.0; 3] };
        let x = plan_from_circulation(&full, &g);
        let plan = TransportPlan::new(x.clone(), &red.instance);
        assert_eq!(plan.cost, -6.0);
        assert_eq!(plan.marginal_residual(&red.instance), 0.0);
        let back = circulation_from_plan(&x, &g).unwrap();
        assert_eq!(back, full);
        assert_eq!(back.cost(&g), -6.0);
    }

    #[test]
    fn non_conserving_plan_rejected() {
        let g = three_cycle();
        let mut x = plan_from_circulation(&Circulation { flow: vec![2.0f64; 3] }, &g);
        x[(0, 0)] = 1.0;
        assert!(matches!(
            circulation_from_plan(&x, &g),
            Err(Error::ConservationViolation { .. })
        ));
    }
}
