//! Seeded random instances for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{validate_instance, TransportInstance};
use crate::matrix::DenseMatrix;
use crate::mcc::{northwest_initial, McEdge, MccInstance};
use crate::scalar::Scalar;

/// `parts` values in `1..=cap` summing to `total`.
fn split<R: Rng>(rng: &mut R, total: u64, parts: usize, cap: u64) -> Vec<u64> {
    let mut out = vec![1u64; parts];
    let mut left = total - parts as u64;
    while left > 0 {
        let k = rng.gen_range(0..parts);
        if out[k] < cap {
            out[k] += 1;
            left -= 1;
        }
    }
    out
}

/// Uniform integral costs in `1..=cost_max` and marginals in `1..=marg_max`
/// with a common random total. When the shape is too lopsided for that cap
/// (`max(n, m) > min(n, m) * marg_max`), the cap is raised just enough.
pub fn random_instance<T: Scalar>(
    n: usize,
    m: usize,
    cost_max: u64,
    marg_max: u64,
    seed: u64,
) -> Result<TransportInstance<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let costs = (0..n * m)
        .map(|_| T::of_u64(rng.gen_range(1..=cost_max.max(1))))
        .collect();
    let (short, long) = (n.min(m) as u64, n.max(m) as u64);
    let cap = marg_max.max(1).max(long.div_ceil(short.max(1)));
    let (lo, hi) = (long, short * cap);
    let total = rng.gen_range(lo..=hi);
    let demand = split(&mut rng, total, n, cap);
    let supply = split(&mut rng, total, m, cap);
    validate_instance(n, m, costs, demand, supply)
}

/// Random multigraph without self-loops; costs in `-cost_max..=cost_max`.
pub fn random_mcc(vertices: usize, edges: usize, cap_max: u64, cost_max: i64, seed: u64) -> Result<MccInstance> {
    if vertices < 2 {
        return Err(Error::PreconditionViolated("random_mcc needs at least two vertices"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let list = (0..edges)
        .map(|_| {
            let tail = rng.gen_range(0..vertices);
            let head = (tail + rng.gen_range(1..vertices)) % vertices;
            McEdge {
                tail,
                head,
                capacity: rng.gen_range(1..=cap_max.max(1)),
                cost: rng.gen_range(-cost_max..=cost_max),
            }
        })
        .collect();
    MccInstance::new(vertices, list)
}

/// Convex combination of a few integral northwest plans taken under random
/// row and column orders; feasible and usually fractional.
pub fn random_fractional_plan<T: Scalar>(inst: &TransportInstance<T>, seed: u64) -> DenseMatrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m) = (inst.n(), inst.m());
    let mut x = DenseMatrix::zeros(n, m);
    let weights: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let mut rows: Vec<usize> = (0..n).collect();
        let mut cols: Vec<usize> = (0..m).collect();
        rows.shuffle(&mut rng);
        cols.shuffle(&mut rng);
        let r: Vec<u64> = rows.iter().map(|&i| inst.demand()[i]).collect();
        let c: Vec<u64> = cols.iter().map(|&j| inst.supply()[j]).collect();
        let nw = northwest_initial(&r, &c);
        let w = T::of_f64(w / total);
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                x[(i, j)] += w * T::of_u64(nw[(a, b)]);
            }
        }
    }
    x
}
