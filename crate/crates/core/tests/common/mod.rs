//! Property checks shared by the property suite and the acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeMap;

use hcbb::bench::{brute_force_solve, generate_instance, Family};
use hcbb::bnb::{solve_minlp, Algorithm, BnbOptions};
use hcbb::homotopy::{build_nlprb, homotopy_value, HomotopyAnchor};
use hcbb::model::{parse_problem, Expr, Tape};
use hcbb::nlp::NlpOptions;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn anchor_strategy() -> impl Strategy<Value = HomotopyAnchor> {
    (0usize..3, 1e-6f64..(1.0 - 1e-6), prop::bool::ANY)
        .prop_map(|(k, p, up)| HomotopyAnchor::new(k, p, if up { 1.0 } else { 0.0 }).unwrap())
}

/// Tightened intervals shrink as `t` grows and always contain the target.
pub fn box_nesting(cases: u32) -> Result<(), String> {
    let prob = parse_problem("var x cont [-1,1]\nvar a bin\nvar b bin\nvar c bin\nmin x + a + b + c").unwrap();
    runner(cases)
        .run(&(anchor_strategy(), 0.0f64..=1.0, 0.0f64..=1.0), |(anchor, s, t)| {
            let (t1, t2) = if s <= t { (s, t) } else { (t, s) };
            let bounds = |t: f64| {
                let sub = build_nlprb(&prob, &BTreeMap::new(), &anchor, t).unwrap().problem;
                let v = &sub.variables()[1 + anchor.branch_index];
                (v.lower, v.upper)
            };
            let (lo1, hi1) = bounds(t1);
            let (lo2, hi2) = bounds(t2);
            prop_assert!(lo1 <= lo2 && hi2 <= hi1, "[{lo2},{hi2}] not inside [{lo1},{hi1}]");
            prop_assert!(lo2 <= anchor.target && anchor.target <= hi2);
            let (lo0, hi0) = bounds(0.0);
            prop_assert!(lo0 <= anchor.parent_value && anchor.parent_value <= hi0);
            prop_assert_eq!(bounds(1.0), (anchor.target, anchor.target));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// The path starts exactly at the parent value and ends exactly at the target.
pub fn endpoint_exactness(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&anchor_strategy(), |anchor| {
            prop_assert_eq!(homotopy_value(&anchor, 0.0).unwrap().to_bits(), anchor.parent_value.to_bits());
            prop_assert_eq!(homotopy_value(&anchor, 1.0).unwrap().to_bits(), anchor.target.to_bits());
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(0usize..3).prop_map(Expr::var), (-2.0f64..2.0).prop_map(Expr::constant)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (1.0 + b.powf(2.0))),
            inner.clone().prop_map(|a| (0.5 * a).exp()),
            inner.clone().prop_map(|a| (1.0 + a.powf(2.0)).ln()),
            inner.clone().prop_map(|a| (1.0 + a.powf(2.0)).sqrt()),
            inner.clone().prop_map(|a| a.powf(3.0)),
            inner.prop_map(|a| -a),
        ]
    })
}

/// Reverse-mode gradients agree with central differences.
pub fn gradient_matches_differences(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(smooth_expr(), prop::collection::vec(-1.5f64..1.5, 3)), |(expr, x)| {
            let tape = Tape::compile(&expr);
            let mut grad = vec![0.0; 3];
            let f = tape.value_and_gradient(&x, &mut grad).map_err(|e| TestCaseError::reject(e.to_string()))?;
            if !f.is_finite() || f.abs() > 1e4 {
                return Err(TestCaseError::reject("outside the well-scaled range"));
            }
            let scale = grad.iter().fold(1.0f64, |m, g| m.max(g.abs()));
            for i in 0..3 {
                let h = 1e-6 * x[i].abs().max(1.0);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (tape.value(&xp).unwrap() - tape.value(&xm).unwrap()) / (2.0 * h);
                prop_assert!(
                    (grad[i] - fd).abs() <= 1e-5 * scale,
                    "d/dx{i} of {expr}: tape {} vs differences {fd}",
                    grad[i]
                );
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// No algorithm ends above the enumeration optimum on small convex
/// instances, so no node holding the optimum was pruned.
pub fn pruning_soundness(cases: u32) -> Result<(), String> {
    let opts = BnbOptions::default();
    runner(cases)
        .run(&(any::<u64>(), 1usize..=3, 1usize..=4), |(seed, n, m)| {
            let prob = generate_instance(seed, n, m, Family::ConvexQp).unwrap();
            let oracle = brute_force_solve(&prob, 3, &NlpOptions::default()).unwrap();
            let best = oracle.objective.expect("origin is feasible for every assignment");
            for alg in Algorithm::ALL {
                let r = solve_minlp(&prob, alg, &prob.midpoint(), &opts).unwrap();
                let f = r.objective.ok_or_else(|| TestCaseError::fail(format!("{alg}: no incumbent")))?;
                prop_assert!(
                    f <= best + 1e-6 * best.abs().max(1.0),
                    "seed {seed} n {n} m {m} {alg}: {f} above enumeration {best}"
                );
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}
