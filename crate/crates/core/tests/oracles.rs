use expot::gen::{random_instance, random_mcc};
use expot::mcc::{mcc_to_ot, ot_to_mcc, prune_sourceless, Circulation};
use expot::oracle::{exact_mcc, exact_ot, has_negative_residual_cycle};
use expot::{validate_instance, DenseMatrix, Instance};

/// Minimum over every integral plan, by exhaustive enumeration.
fn brute_force(inst: &Instance) -> f64 {
    fn go(inst: &Instance, cell: usize, rows: &mut [u64], cols: &mut [u64], cost: f64, best: &mut f64) {
        let m = inst.m();
        if cell == inst.n() * m {
            if rows.iter().all(|&v| v == 0) && cols.iter().all(|&v| v == 0) {
                *best = best.min(cost);
            }
            return;
        }
        let (i, j) = (cell / m, cell % m);
        // The last cell of a row is forced.
        let range = if j == m - 1 {
            rows[i]..=rows[i]
        } else {
            0..=rows[i].min(cols[j])
        };
        for v in range {
            if v > cols[j] {
                continue;
            }
            rows[i] -= v;
            cols[j] -= v;
            go(inst, cell + 1, rows, cols, cost + v as f64 * inst.cost()[(i, j)], best);
            rows[i] += v;
            cols[j] += v;
        }
    }
    let mut best = f64::INFINITY;
    go(
        inst,
        0,
        &mut inst.demand().to_vec(),
        &mut inst.supply().to_vec(),
        0.0,
        &mut best,
    );
    best
}

#[test]
fn exact_ot_matches_enumeration() {
    let mut checked = 0;
    for seed in 0..200u64 {
        let n = 2 + (seed % 3) as usize;
        let m = 2 + (seed / 3 % 3) as usize;
        let inst = random_instance::<f64>(n, m, 10, 3, seed).unwrap();
        if inst.total_mass() > 8 {
            continue;
        }
        let (opt, plan) = exact_ot(&inst);
        assert_eq!(opt, brute_force(&inst), "seed {seed}");
        for i in 0..n {
            assert_eq!(plan.row(i).iter().sum::<u64>(), inst.demand()[i]);
        }
        for j in 0..m {
            assert_eq!((0..n).map(|i| plan[(i, j)]).sum::<u64>(), inst.supply()[j]);
        }
        checked += 1;
    }
    assert!(checked >= 50, "only {checked} instances small enough");
}

#[test]
fn exact_mcc_leaves_no_negative_cycle() {
    for seed in 0..50u64 {
        let g = random_mcc(5, 10, 3, 3, seed).unwrap();
        let (cost, f) = exact_mcc(&g);
        assert!(!has_negative_residual_cycle(&g, &f));
        assert!(f.within_capacity(&g));
        assert!(f.net_flow(&g).iter().all(|&v| v == 0));
        assert_eq!(cost, f.cost(&g));
        assert!(cost <= 0);
    }
}

#[test]
fn oracles_agree_through_the_reduction() {
    for seed in 0..20u64 {
        let g = random_mcc(4, 9, 3, 3, 100 + seed).unwrap();
        let (want, _) = exact_mcc(&g);
        let (pruned, _) = prune_sourceless(&g);
        if pruned.edge_count() == 0 {
            assert_eq!(want, 0);
            continue;
        }
        let red = mcc_to_ot::<f64>(&pruned).unwrap();
        let (opt, _) = exact_ot(&red.instance);
        assert_eq!(opt, want as f64, "seed {seed}");
    }
}

#[test]
fn ot_to_mcc_recovers_the_optimum() {
    for seed in 0..20u64 {
        let inst = random_instance::<f64>(3, 3, 6, 4, 300 + seed).unwrap();
        let (opt, _) = exact_ot(&inst);
        let red = ot_to_mcc(&inst).unwrap();
        let (delta, f) = exact_mcc(&red.mcc);
        let flow: Vec<f64> = f.flow.iter().map(|&v| v as f64).collect();
        let x = red.recover(&flow);
        let x0_cost: f64 = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|c| red.x0[c] as f64 * inst.cost()[c])
            .sum();
        assert_eq!(x0_cost + delta as f64, opt, "seed {seed}");
        assert_eq!(x.row_sums(), inst.demand_real());
        assert_eq!(x.col_sums(), inst.supply_real());
        assert!(x.as_slice().iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn zero_circulation_of_positive_graph() {
    let g = random_mcc(4, 6, 3, 0, 7).unwrap();
    let (cost, f) = exact_mcc(&g);
    assert_eq!((cost, f), (0, Circulation::zero(&g)));
}

#[test]
fn dominant_diagonal_assignment() {
    let q: Vec<f64> = (0..16).map(|k| if k % 5 == 0 { 2.0 } else { 50.0 }).collect();
    let inst = validate_instance(4, 4, q, vec![1; 4], vec![1; 4]).unwrap();
    let (opt, plan) = exact_ot(&inst);
    assert_eq!(opt, 8.0);
    assert_eq!(plan, DenseMatrix::from_fn(4, 4, |i, j| u64::from(i == j)));
}
