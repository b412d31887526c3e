use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Constraint, Expr, MinlpProblem, VariableSpec};

use super::BenchError;

pub const MAX_GENERATED_CONTINUOUS: usize = 12;
pub const MAX_GENERATED_BINARIES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    ConvexQp,
    NonconvexPoly,
    NarrowChannel,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::ConvexQp, Family::NonconvexPoly, Family::NarrowChannel];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::ConvexQp => "convex_qp",
            Family::NonconvexPoly => "nonconvex_poly",
            Family::NarrowChannel => "narrow_channel",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| BenchError::UnknownName { kind: "family", name: s.to_string() })
    }
}

/// Builds a seeded random instance with `n` continuous and `m` binary
/// variables. Equal arguments always give the same problem.
pub fn generate_instance(seed: u64, n: usize, m: usize, family: Family) -> Result<MinlpProblem, BenchError> {
    if n > MAX_GENERATED_CONTINUOUS || m > MAX_GENERATED_BINARIES || n + m == 0 {
        return Err(BenchError::Size { n, m, reason: "need 0 < n + m, n <= 12 and m <= 8" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prob = match family {
        Family::ConvexQp => convex_qp(&mut rng, n, m),
        Family::NonconvexPoly => nonconvex_poly(&mut rng, n, m),
        Family::NarrowChannel => {
            if n == 0 || m == 0 {
                return Err(BenchError::Size { n, m, reason: "narrow_channel needs n >= 1 and m >= 1" });
            }
            narrow_channel(&mut rng, n, m)
        }
    };
    Ok(prob.expect("generated instances are well formed"))
}

fn variables(n: usize, m: usize, lower: f64, upper: f64) -> Vec<VariableSpec> {
    (0..n)
        .map(|i| VariableSpec::continuous(format!("x{i}"), lower, upper))
        .chain((0..m).map(|j| VariableSpec::binary(format!("y{j}"))))
        .collect()
}

fn linear(coefs: &[f64], offset: usize) -> Expr {
    Expr::sum(coefs.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(i, &c)| c * Expr::var(offset + i)))
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Strictly convex quadratic objective over all variables with affine
/// constraints that `x = 0` satisfies for every binary assignment.
fn convex_qp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Result<MinlpProblem, crate::model::ModelError> {
    let dim = n + m;
    let factor: Vec<Vec<f64>> =
        (0..dim).map(|_| (0..dim).map(|_| round4(rng.gen_range(-1.0..1.0))).collect()).collect();
    let shift = round4(rng.gen_range(0.1..0.5));
    let linear_terms: Vec<f64> = (0..dim).map(|_| round4(rng.gen_range(-2.0..2.0))).collect();

    // (1/2) |F v|^2 + (shift/2) |v|^2 + q.v
    let mut terms = Vec::new();
    for row in &factor {
        let r = linear(row, 0);
        if !r.is_constant() {
            terms.push(0.5 * r.powf(2.0));
        }
    }
    terms.extend((0..dim).map(|i| (0.5 * shift) * Expr::var(i).powf(2.0)));
    terms.push(linear(&linear_terms, 0));
    let objective = Expr::sum(terms);

    let mut inequalities = Vec::new();
    for k in 0..rng.gen_range(1..=2usize) {
        let a: Vec<f64> = (0..n).map(|_| round4(rng.gen_range(-1.0..1.0))).collect();
        let b: Vec<f64> = (0..m).map(|_| round4(rng.gen_range(-1.0..1.0))).collect();
        let rhs = round4(b.iter().map(|v| v.max(0.0)).sum::<f64>() + rng.gen_range(0.1..1.0));
        inequalities.push(Constraint::new(format!("c{k}"), linear(&a, 0) + linear(&b, n) - rhs));
    }
    let mut equalities = Vec::new();
    if n >= 2 {
        let a: Vec<f64> = (0..n).map(|_| round4(rng.gen_range(-1.0..1.0))).collect();
        equalities.push(Constraint::new("e0", linear(&a, 0)));
    }
    MinlpProblem::new(variables(n, m, -5.0, 5.0), objective, equalities, inequalities)
}

/// Double-well quartics in every continuous variable, bilinear couplings to
/// the binaries, binary penalties with interior minima and a linear budget.
fn nonconvex_poly(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Result<MinlpProblem, crate::model::ModelError> {
    let mut terms = Vec::new();
    for i in 0..n {
        let well = round4(rng.gen_range(0.5..2.0));
        let tilt = round4(rng.gen_range(-0.5..0.5));
        terms.push(Expr::var(i).powf(4.0) - well * Expr::var(i).powf(2.0) + tilt * Expr::var(i));
        for j in 0..m {
            let c = round4(rng.gen_range(-1.0..1.0));
            terms.push(c * (Expr::var(i) * Expr::var(n + j)));
        }
    }
    for j in 0..m {
        let a = round4(rng.gen_range(0.5..2.0));
        let w = round4(rng.gen_range(0.2..0.8));
        terms.push(a * (Expr::var(n + j) - w).powf(2.0));
    }
    let objective = Expr::sum(terms);
    let mut inequalities = Vec::new();
    if n > 0 {
        let budget = round4(rng.gen_range(0.5..1.5) * n as f64);
        let ones = vec![1.0; n];
        let ys = vec![-1.0; m];
        inequalities.push(Constraint::new("budget", linear(&ones, 0) + linear(&ys, n) - budget));
    }
    MinlpProblem::new(variables(n, m, -2.0, 2.0), objective, Vec::new(), inequalities)
}

/// Cubic whose only real root is zero. Its square has a second, spurious
/// local minimum near -1.61 separated from zero by a hump near -0.73.
fn channel_cubic(u: Expr) -> Expr {
    u.clone().powf(3.0) + 3.5 * u.clone().powf(2.0) + 3.5 * u
}

/// `x0` must track `D * y0` through the cubic gate. At the relaxed optimum
/// `y0 = v`; fixing `y0 = 1` puts the warm start of `x0` on the far side
/// of the hump, while half a step stays inside the basin of the root. The
/// box midpoint lies on the gate.
fn narrow_channel(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Result<MinlpProblem, crate::model::ModelError> {
    let v = round4(rng.gen_range(0.55..0.68));
    let c = round4(rng.gen_range(0.95..1.1));
    let width = round4(rng.gen_range(0.5..1.5));
    let weight = round4(rng.gen_range(0.05..0.3));
    let reach = width * c / (1.0 - v);
    let x0 = Expr::var(0);
    let y0 = Expr::var(n);

    let mut terms = vec![
        weight * ((x0.clone() - reach * v) / width).powf(2.0),
        0.01 * (y0.clone() - v).powf(2.0),
    ];
    for j in 1..m {
        let a = round4(rng.gen_range(0.5..2.0));
        let w = if rng.gen_bool(0.5) { rng.gen_range(0.05..0.3) } else { rng.gen_range(0.7..0.95) };
        terms.push(a * (Expr::var(n + j) - round4(w)).powf(2.0));
    }
    for i in 1..n {
        let b = round4(rng.gen_range(0.5..1.5));
        terms.push(b * (Expr::var(i) - 0.5 * Expr::var(n + i % m)).powf(2.0));
    }
    let gate = channel_cubic((x0 - reach * y0) / width);
    let mut vars = variables(n, m, -2.0, 2.0);
    vars[0].lower = -reach;
    vars[0].upper = 2.0 * reach;
    MinlpProblem::new(vars, Expr::sum(terms), vec![Constraint::new("gate", gate)], Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::print_problem;

    #[test]
    fn deterministic_per_seed() {
        for family in Family::ALL {
            let a = generate_instance(1, 4, 3, family).unwrap();
            let b = generate_instance(1, 4, 3, family).unwrap();
            assert_eq!(a, b);
            assert_eq!(print_problem(&a), print_problem(&b));
            assert_ne!(a, generate_instance(2, 4, 3, family).unwrap());
        }
    }

    #[test]
    fn sizes() {
        let p = generate_instance(3, 5, 2, Family::ConvexQp).unwrap();
        assert_eq!((p.num_continuous(), p.num_binary()), (5, 2));
        assert!(generate_instance(0, 13, 1, Family::ConvexQp).is_err());
        assert!(generate_instance(0, 1, 9, Family::ConvexQp).is_err());
        assert!(generate_instance(0, 0, 2, Family::NarrowChannel).is_err());
        assert!(generate_instance(0, 0, 2, Family::ConvexQp).is_ok());
    }

    #[test]
    fn convex_origin_feasible_for_all_assignments() {
        for seed in 0..20 {
            let p = generate_instance(seed, 3, 3, Family::ConvexQp).unwrap();
            for code in 0..8u32 {
                let mut point = vec![0.0; 3];
                point.extend((0..3).map(|k| ((code >> k) & 1) as f64));
                assert_eq!(crate::model::max_violation(&p, &point).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn cubic_has_single_root() {
        let f = |u: f64| u * u * u + 3.5 * u * u + 3.5 * u;
        let df = |u: f64| 3.0 * u * u + 7.0 * u + 3.5;
        assert_eq!(f(0.0), 0.0);
        // no sign change away from zero
        assert!((1..400).all(|k| f(-k as f64 * 0.01) < 0.0 && f(k as f64 * 0.01) > 0.0));
        let hump = (-7.0 + (49.0f64 - 42.0).sqrt()) / 6.0;
        assert!(df(hump).abs() < 1e-12 && (hump + 0.7257).abs() < 1e-3);
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.as_str().parse::<Family>().unwrap(), f);
        }
        assert!("qp".parse::<Family>().is_err());
    }
}
