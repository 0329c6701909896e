use expot::gen::{random_fractional_plan, random_instance};
use expot::mcc::{
    circulation_from_plan, cycle_cancel_round_with_history, plan_from_circulation, Circulation, McEdge, MccInstance,
};
use expot::oracle::exact_ot;
use expot::{run_expsinkhorn, solve, validate_instance, Limits, TransportPlan};
use proptest::prelude::*;

fn small_instance() -> impl Strategy<Value = expot::Instance> {
    (1usize..=5, 1usize..=5, 1u64..=10, 1u64..=6, any::<u64>())
        .prop_map(|(n, m, cost_max, marg_max, seed)| random_instance(n, m, cost_max, marg_max, seed).unwrap())
}

/// Union of random directed cycles, each carrying its own flow; every edge
/// gets some spare capacity so the circulation is feasible but not tight.
fn feasible_circulation() -> impl Strategy<Value = (MccInstance, Circulation<f64>)> {
    let cycle = (prop::collection::vec(0usize..6, 2..5), 0u64..4, 0u64..3, -5i64..=5);
    prop::collection::vec(cycle, 1..4).prop_filter_map("needs a proper cycle", |cycles| {
        let mut edges = Vec::new();
        let mut flow = Vec::new();
        for (mut verts, f, spare, cost) in cycles {
            verts.dedup();
            if verts.len() > 1 && verts.first() == verts.last() {
                verts.pop();
            }
            if verts.len() < 2 {
                continue;
            }
            for k in 0..verts.len() {
                edges.push(McEdge {
                    tail: verts[k],
                    head: verts[(k + 1) % verts.len()],
                    capacity: f + spare + 1,
                    cost,
                });
                flow.push(f as f64);
            }
        }
        let g = MccInstance::new(6, edges).ok()?;
        // Every vertex needs inflow for the reduced instance to be valid.
        if g.in_capacity().contains(&0) {
            return None;
        }
        Some((g, Circulation { flow }))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_instances_are_balanced(inst in small_instance()) {
        prop_assert_eq!(inst.demand().iter().sum::<u64>(), inst.supply().iter().sum::<u64>());
        prop_assert!(inst.demand().iter().chain(inst.supply()).all(|&v| v >= 1));
    }

    #[test]
    fn solve_is_feasible_and_near_optimal(inst in small_instance()) {
        let (opt, _) = exact_ot(&inst);
        let plan = solve(&inst, 1e-2).unwrap();
        prop_assert!(plan.is_feasible(&inst, 1e-9));
        prop_assert!(plan.cost <= opt + 1e-2);
    }

    #[test]
    fn dual_never_decreases(inst in small_instance()) {
        let run = run_expsinkhorn(&inst, 1e-2, Limits::default()).unwrap();
        prop_assert_eq!(run.trace.first_dual_decrease(1e-12), None);
        prop_assert!(run.trace.records.iter().filter(|r| r.outcome.kind.is_rescale()).all(|r| r.outcome.dual_delta >= -1e-12));
    }

    #[test]
    fn rounding_is_integral_and_cost_nonincreasing(inst in small_instance(), seed in any::<u64>()) {
        let x = random_fractional_plan(&inst, seed);
        let cost_in = TransportPlan::new(x.clone(), &inst).cost;
        let (plan, history) = cycle_cancel_round_with_history(&x, &inst).unwrap();
        prop_assert!(plan.x.as_slice().iter().all(|v| v.fract() == 0.0));
        prop_assert!(plan.cost <= cost_in + 1e-9);
        prop_assert_eq!(plan.marginal_residual(&inst), 0.0);
        prop_assert!(history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn circulation_plan_round_trip((g, f) in feasible_circulation()) {
        let x = plan_from_circulation(&f, &g);
        prop_assert_eq!(circulation_from_plan(&x, &g).unwrap(), f.clone());
        let red = expot::mcc::mcc_to_ot::<f64>(&g).unwrap();
        let plan = TransportPlan::new(x, &red.instance);
        prop_assert_eq!(plan.marginal_residual(&red.instance), 0.0);
        prop_assert_eq!(plan.cost, f.cost(&g));
    }
}

#[test]
fn single_precision_smoke() {
    let inst = validate_instance(2, 2, vec![1.0f32, 2.0, 3.0, 1.0], vec![2, 1], vec![1, 2]).unwrap();
    let plan = solve(&inst, 1e-2f32).unwrap();
    assert!(plan.is_feasible(&inst, 1e-4));
    assert!(plan.cost <= 4.0 + 1e-2, "{}", plan.cost);
    let (opt, _) = exact_ot(&inst);
    assert_eq!(opt, 4.0f32);
}

#[test]
fn zero_costs_fall_back_to_northwest() {
    let inst = validate_instance(2, 3, vec![0.0f64; 6], vec![2, 2], vec![1, 1, 2]).unwrap();
    let plan = solve(&inst, 1e-3).unwrap();
    assert_eq!(plan.cost, 0.0);
    assert!(plan.is_feasible(&inst, 0.0));
}
