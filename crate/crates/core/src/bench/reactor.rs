use serde::{Deserialize, Serialize};

use crate::model::{Constraint, Expr, MinlpProblem, VariableSpec};

/// Rate constant of the feed-consuming reaction `A -> B`, per hour.
pub const K1: f64 = 0.412;
/// Rate constant of the consecutive reaction `B -> C`, per hour.
pub const K2: f64 = 0.055;

/// Data of the three-stage CSTR selection problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactorParams {
    pub flow: f64,
    pub feed: f64,
    pub k1: f64,
    pub k2: f64,
    /// Required fractional conversion of the feed species.
    pub conversion: f64,
    pub max_volume: f64,
    /// Fixed charge of installing each stage.
    pub stage_cost: [f64; 3],
}

impl Default for ReactorParams {
    fn default() -> Self {
        ReactorParams {
            flow: 1.0,
            feed: 1.0,
            k1: K1,
            k2: K2,
            conversion: 0.9,
            max_volume: 30.0,
            stage_cost: [3.0, 3.2, 3.4],
        }
    }
}

impl ReactorParams {
    /// Volume of one stage when `stages` equal reactors reach the target.
    pub fn equal_stage_volume(&self, stages: usize) -> f64 {
        let ratio = 1.0 / (1.0 - self.conversion);
        (ratio.powf(1.0 / stages as f64) - 1.0) * self.flow / self.k1
    }
}

pub fn reactor_network_instance() -> MinlpProblem {
    reactor_network_with(&ReactorParams::default())
}

/// Variables: outlet concentrations `a1..a3`, `b1..b3`, volumes `v1..v3`,
/// then one existence binary per stage.
pub fn reactor_network_with(p: &ReactorParams) -> MinlpProblem {
    let mut vars = Vec::new();
    for s in 1..=3 {
        vars.push(VariableSpec::continuous(format!("a{s}"), 0.0, p.feed));
    }
    for s in 1..=3 {
        vars.push(VariableSpec::continuous(format!("b{s}"), 0.0, p.feed));
    }
    for s in 1..=3 {
        vars.push(VariableSpec::continuous(format!("v{s}"), 0.0, p.max_volume));
    }
    for s in 1..=3 {
        vars.push(VariableSpec::binary(format!("z{s}")));
    }
    let a = |s: usize| Expr::var(s);
    let b = |s: usize| Expr::var(3 + s);
    let vol = |s: usize| Expr::var(6 + s);
    let z = |s: usize| Expr::var(9 + s);

    let mut equalities = Vec::new();
    let mut inequalities = Vec::new();
    for s in 0..3 {
        let (a_in, b_in) = if s == 0 { (Expr::constant(p.feed), Expr::constant(0.0)) } else { (a(s - 1), b(s - 1)) };
        equalities.push(Constraint::new(
            format!("bal_a{}", s + 1),
            p.flow * (a_in - a(s)) - p.k1 * (vol(s) * a(s)),
        ));
        equalities.push(Constraint::new(
            format!("bal_b{}", s + 1),
            p.flow * (b_in - b(s)) + vol(s) * (p.k1 * a(s) - p.k2 * b(s)),
        ));
        inequalities.push(Constraint::new(format!("exist{}", s + 1), vol(s) - p.max_volume * z(s)));
    }
    inequalities.push(Constraint::new("conversion", a(2) - (1.0 - p.conversion) * p.feed));
    let objective = Expr::sum((0..3).map(|s| vol(s) + p.stage_cost[s] * z(s)));
    MinlpProblem::new(vars, objective, equalities, inequalities).expect("reactor model is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{max_violation, print_problem, parse_problem};

    #[test]
    fn closed_form_designs_are_feasible() {
        let p = ReactorParams::default();
        let prob = reactor_network_instance();
        for stages in 1..=3 {
            let v = p.equal_stage_volume(stages);
            let mut a = 1.0;
            let mut b = 0.0;
            let mut point = vec![0.0; 12];
            for s in 0..3 {
                let vs = if s < stages { v } else { 0.0 };
                let a_new = a / (1.0 + p.k1 * vs);
                let b_new = (b + vs * p.k1 * a_new) / (1.0 + p.k2 * vs);
                a = a_new;
                b = b_new;
                point[s] = a;
                point[3 + s] = b;
                point[6 + s] = vs;
                point[9 + s] = if s < stages { 1.0 } else { 0.0 };
            }
            assert!(max_violation(&prob, &point).unwrap() < 1e-12, "{stages}");
            assert!((a - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn text_round_trip() {
        let prob = reactor_network_instance();
        assert_eq!(parse_problem(&print_problem(&prob)).unwrap().num_binary(), 3);
    }
}
