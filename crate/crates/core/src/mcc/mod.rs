//! Minimum-cost circulation: instance model, the two reductions to and from
//! transport, cycle-cancellation rounding and the composed solver.

mod dimacs;
mod reduce;
mod rounding;
mod solve;

pub use dimacs::{parse_dimacs, write_circulation, write_dimacs, DimacsError};
pub use reduce::{
    circulation_from_plan, mcc_to_ot, northwest_initial, ot_to_mcc, plan_from_circulation, ArcRole, MccToOt, OtToMcc,
};
pub use rounding::{cycle_cancel_round, cycle_cancel_round_with_history};
pub use solve::{prune_sourceless, solve_mcc, MccSolution};

use num_traits::{Num, NumCast};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct McEdge {
    pub tail: usize,
    pub head: usize,
    pub capacity: u64,
    pub cost: i64,
}

/// Directed multigraph with integral costs and positive integral capacities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MccInstance {
    vertices: usize,
    edges: Vec<McEdge>,
    max_cost: u64,
    max_capacity: u64,
}

impl MccInstance {
    pub fn new(vertices: usize, edges: Vec<McEdge>) -> Result<Self> {
        for (id, e) in edges.iter().enumerate() {
            for v in [e.tail, e.head] {
                if v >= vertices {
                    return Err(Error::VertexOutOfRange {
                        edge: id,
                        vertex: v,
                        vertices,
                    });
                }
            }
            if e.tail == e.head {
                return Err(Error::SelfLoop { edge: id });
            }
            if e.capacity == 0 {
                return Err(Error::ZeroCapacity { edge: id });
            }
        }
        let max_cost = edges.iter().map(|e| e.cost.unsigned_abs()).max().unwrap_or(0);
        let max_capacity = edges.iter().map(|e| e.capacity).max().unwrap_or(0);
        Ok(Self {
            vertices,
            edges,
            max_cost,
            max_capacity,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[McEdge] {
        &self.edges
    }

    /// `C = max_e |c_e|`.
    pub fn max_cost(&self) -> u64 {
        self.max_cost
    }

    /// `U = max_e u_e`.
    pub fn max_capacity(&self) -> u64 {
        self.max_capacity
    }

    /// Total capacity entering each vertex.
    pub fn in_capacity(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.vertices];
        for e in &self.edges {
            deg[e.head] += e.capacity;
        }
        deg
    }
}

/// Per-edge flow.
#[derive(Clone, Debug, PartialEq)]
pub struct Circulation<F> {
    pub flow: Vec<F>,
}

impl<F: Copy + Num + NumCast + PartialOrd> Circulation<F> {
    pub fn zero(mcc: &MccInstance) -> Self {
        Self {
            flow: vec![F::zero(); mcc.edge_count()],
        }
    }

    /// Inflow minus outflow at every vertex.
    pub fn net_flow(&self, mcc: &MccInstance) -> Vec<F> {
        let mut net = vec![F::zero(); mcc.vertex_count()];
        for (e, &f) in mcc.edges().iter().zip(&self.flow) {
            net[e.head] = net[e.head] + f;
            net[e.tail] = net[e.tail] - f;
        }
        net
    }

    /// `c^T f`.
    pub fn cost(&self, mcc: &MccInstance) -> F {
        mcc.edges().iter().zip(&self.flow).fold(F::zero(), |acc, (e, &f)| {
            acc + F::from(e.cost).expect("edge cost representable") * f
        })
    }

    pub fn within_capacity(&self, mcc: &MccInstance) -> bool {
        mcc.edges()
            .iter()
            .zip(&self.flow)
            .all(|(e, &f)| f >= F::zero() && f <= F::from(e.capacity).expect("capacity representable"))
    }
}
