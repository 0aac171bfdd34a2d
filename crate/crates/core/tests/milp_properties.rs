mod common;

use common::{dual_objective, enumerate_binaries, random_lp, random_milp};
use proptest::prelude::*;
use pvguard_core::milp::{solve_lp, solve_milp, MilpProblem, Relation, SolveStatus, SolverLimits};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn branch_and_bound_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..150 {
        let p = random_milp(&mut rng, 8, 12);
        let oracle = enumerate_binaries(&p);
        let s = solve_milp(&p, &SolverLimits::default()).unwrap();
        match oracle {
            None => assert_eq!(s.status, SolveStatus::Infeasible, "case {case}"),
            Some(best) => {
                assert_eq!(s.status, SolveStatus::Optimal, "case {case}");
                assert!(
                    (s.objective_value - best).abs() <= 1e-6,
                    "case {case}: bb {} vs enum {best}",
                    s.objective_value
                );
                assert!(p.max_violation(&s.x) <= 1e-7, "case {case}");
            }
        }
    }
}

#[test]
fn knapsack_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let w: Vec<f64> = (0..8).map(|_| rng.gen_range(1.0..10.0)).collect();
        let v: Vec<f64> = (0..8).map(|_| rng.gen_range(1.0..10.0)).collect();
        let cap = w.iter().sum::<f64>() * rng.gen_range(0.2..0.7);
        let mut p = MilpProblem::new();
        for i in 0..8 {
            p.add_binary(format!("k{i}"), 1.0, -v[i]);
        }
        p.add_constraint(w.iter().copied().enumerate().collect(), Relation::Le, cap);
        let mut best = 0.0_f64;
        for mask in 0u32..256 {
            let (mut ww, mut vv) = (0.0, 0.0);
            for i in 0..8 {
                if mask >> i & 1 == 1 {
                    ww += w[i];
                    vv += v[i];
                }
            }
            if ww <= cap {
                best = best.max(vv);
            }
        }
        let s = solve_milp(&p, &SolverLimits::default()).unwrap();
        assert!((s.objective_value + best).abs() < 1e-9);
    }
}

#[test]
fn lp_primal_equals_dual() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..200 {
        let p = random_lp(&mut rng, 20);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal, "case {case}");
        let (dual, infeas) = dual_objective(&p, &s.duals);
        assert!(infeas <= 1e-7, "case {case}: dual infeasibility {infeas}");
        assert!(
            (s.objective_value - dual).abs() <= 1e-6,
            "case {case}: primal {} dual {dual}",
            s.objective_value
        );
    }
}

#[test]
fn repeated_solves_are_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let p = random_milp(&mut rng, 10, 20);
        let a = solve_milp(&p, &SolverLimits::default()).unwrap();
        let b = solve_milp(&p, &SolverLimits::default()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.nodes_explored, b.nodes_explored);
        assert_eq!(
            a.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tightening_a_row_never_improves(seed in any::<u64>(), cut in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_milp(&mut rng, 6, 8);
        let Some(idx) = p.constraints.iter().position(|r| r.relation == Relation::Le) else {
            return Ok(());
        };
        let mut tight = p.clone();
        tight.constraints[idx].rhs -= cut;
        let loose = solve_milp(&p, &SolverLimits::default()).unwrap();
        let tightened = solve_milp(&tight, &SolverLimits::default()).unwrap();
        prop_assert_eq!(loose.status, SolveStatus::Optimal);
        if tightened.status == SolveStatus::Optimal {
            prop_assert!(tightened.objective_value >= loose.objective_value - 1e-9);
        } else {
            prop_assert_eq!(tightened.status, SolveStatus::Infeasible);
        }
    }
}
