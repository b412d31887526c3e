use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bnb::{solve_minlp, Algorithm, BnbOptions, SolveStatus};
use crate::model::MinlpProblem;

use super::{brute_force_solve, generate_instance, reactor_network_instance, BenchError, Family, MAX_ORACLE_BINARIES};

/// How the root relaxation's initial point is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartStrategy {
    Midpoint,
    Point(Vec<f64>),
    /// Uniform draw inside the box from a seeded generator.
    Random(u64),
}

impl StartStrategy {
    pub fn resolve(&self, prob: &MinlpProblem) -> Result<Vec<f64>, BenchError> {
        match self {
            StartStrategy::Midpoint => Ok(prob.midpoint()),
            StartStrategy::Point(p) if p.len() == prob.num_vars() => Ok(prob.clip(p)),
            StartStrategy::Point(p) => Err(BenchError::StartLength { got: p.len(), expected: prob.num_vars() }),
            StartStrategy::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok(prob
                    .variables()
                    .iter()
                    .map(|v| if v.lower < v.upper { rng.gen_range(v.lower..=v.upper) } else { v.lower })
                    .collect())
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            StartStrategy::Midpoint => "midpoint".into(),
            StartStrategy::Point(_) => "file".into(),
            StartStrategy::Random(seed) => format!("random:{seed}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Convex,
    Nonconvex,
    Narrow,
    Reactor,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Convex, Suite::Nonconvex, Suite::Narrow, Suite::Reactor];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Convex => "convex",
            Suite::Nonconvex => "nonconvex",
            Suite::Narrow => "narrow",
            Suite::Reactor => "reactor",
        }
    }

    pub fn instances(self) -> Vec<NamedInstance> {
        let seeded = |family: Family, seeds: std::ops::RangeInclusive<u64>, size: fn(u64) -> (usize, usize)| {
            seeds
                .map(|seed| {
                    let (n, m) = size(seed);
                    NamedInstance {
                        name: format!("{family}-s{seed}-n{n}-m{m}"),
                        problem: generate_instance(seed, n, m, family).expect("suite sizes are in range"),
                    }
                })
                .collect()
        };
        match self {
            Suite::Convex => seeded(Family::ConvexQp, 1..=10, |s| (2 + s as usize % 5, 1 + s as usize % 4)),
            Suite::Nonconvex => seeded(Family::NonconvexPoly, 1..=6, |s| (2 + s as usize % 3, 2 + s as usize % 2)),
            Suite::Narrow => seeded(Family::NarrowChannel, 1..=6, |s| (1 + s as usize % 3, 1 + s as usize % 3)),
            Suite::Reactor => vec![NamedInstance { name: "reactor3".into(), problem: reactor_network_instance() }],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| BenchError::UnknownName { kind: "suite", name: s.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedInstance {
    pub name: String,
    pub problem: MinlpProblem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub bnb: BnbOptions,
    pub multistarts: usize,
    pub starts: Vec<StartStrategy>,
    /// Worker threads; `0` uses every available core.
    pub jobs: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { bnb: BnbOptions::default(), multistarts: 5, starts: vec![StartStrategy::Midpoint], jobs: 1 }
    }
}

/// One (instance, algorithm, start) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub algorithm: Algorithm,
    pub start: String,
    pub status: Option<SolveStatus>,
    pub objective: Option<f64>,
    pub oracle: Option<f64>,
    /// `|objective - oracle| / max(1, |oracle|)` when both exist.
    pub rel_err: Option<f64>,
    pub n_node: usize,
    pub n_inf: usize,
    pub n_nlp: usize,
    pub t_post_seconds: f64,
    pub n_inf_post: usize,
    pub wall_seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchRow>,
    pub wall_seconds: f64,
}

pub fn relative_error(objective: f64, reference: f64) -> f64 {
    (objective - reference).abs() / reference.abs().max(1.0)
}

/// Runs every algorithm from every configured start on each instance and
/// compares the result with the enumeration oracle.
pub fn run_benchmark(
    instances: &[NamedInstance],
    algorithms: &[Algorithm],
    opts: &BenchOptions,
) -> Result<BenchmarkReport, BenchError> {
    let started = Instant::now();
    opts.bnb.validate()?;
    if let Some(big) = instances.iter().find(|i| i.problem.num_binary() > MAX_ORACLE_BINARIES) {
        return Err(BenchError::TooManyBinaries { count: big.problem.num_binary(), limit: MAX_ORACLE_BINARIES });
    }
    let mut cells = Vec::new();
    for (k, inst) in instances.iter().enumerate() {
        for start in &opts.starts {
            let point = start.resolve(&inst.problem)?;
            for &alg in algorithms {
                cells.push((k, alg, start.label(), point.clone()));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs).build().map_err(|e| BenchError::Pool(e.to_string()))?;
    let nlp = opts.bnb.homotopy.nlp.clone();
    let rows = pool.install(|| -> Result<Vec<BenchRow>, BenchError> {
        let oracles = instances
            .par_iter()
            .map(|inst| brute_force_solve(&inst.problem, opts.multistarts, &nlp).map(|o| o.objective))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(cells
            .into_par_iter()
            .map(|(k, alg, start, point)| run_cell(&instances[k], alg, start, &point, oracles[k], &opts.bnb))
            .collect())
    })?;
    Ok(BenchmarkReport { rows, wall_seconds: started.elapsed().as_secs_f64() })
}

fn run_cell(
    inst: &NamedInstance,
    algorithm: Algorithm,
    start: String,
    point: &[f64],
    oracle: Option<f64>,
    opts: &BnbOptions,
) -> BenchRow {
    let started = Instant::now();
    let mut row = BenchRow {
        instance: inst.name.clone(),
        algorithm,
        start,
        status: None,
        objective: None,
        oracle,
        rel_err: None,
        n_node: 0,
        n_inf: 0,
        n_nlp: 0,
        t_post_seconds: 0.0,
        n_inf_post: 0,
        wall_seconds: 0.0,
        error: None,
    };
    match solve_minlp(&inst.problem, algorithm, point, opts) {
        Ok(r) => {
            row.status = Some(r.status);
            row.objective = r.objective;
            row.rel_err = r.objective.zip(oracle).map(|(a, b)| relative_error(a, b));
            row.n_node = r.n_node;
            row.n_inf = r.n_inf;
            row.n_nlp = r.n_nlp;
            row.t_post_seconds = r.t_post_seconds;
            row.n_inf_post = r.n_inf_post;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row.wall_seconds = started.elapsed().as_secs_f64();
    row
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"))
}

impl BenchmarkReport {
    /// Plain-text table with one aligned line per row.
    pub fn to_table(&self) -> String {
        let header = [
            "instance", "algorithm", "start", "objective", "oracle", "rel_err", "n_node", "n_inf", "n_nlp", "t_post",
            "n_inf_post", "wall", "status",
        ];
        let body: Vec<[String; 13]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.instance.clone(),
                    r.algorithm.to_string(),
                    r.start.clone(),
                    opt(r.objective),
                    opt(r.oracle),
                    r.rel_err.map_or_else(|| "-".to_string(), |e| format!("{e:.1e}")),
                    r.n_node.to_string(),
                    r.n_inf.to_string(),
                    r.n_nlp.to_string(),
                    format!("{:.3}", r.t_post_seconds),
                    r.n_inf_post.to_string(),
                    format!("{:.3}", r.wall_seconds),
                    match (&r.status, &r.error) {
                        (Some(s), _) => format!("{s:?}").to_lowercase(),
                        (None, Some(_)) => "error".into(),
                        (None, None) => "-".into(),
                    },
                ]
            })
            .collect();
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &mut dyn Iterator<Item = &str>| {
            let parts: Vec<String> = cells.zip(&widths).enumerate().map(|(i, (c, w))| {
                if i < 3 { format!("{c:<w$}") } else { format!("{c:>w$}") }
            }).collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut header.iter().copied());
        for row in &body {
            line(&mut row.iter().map(String::as_str));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_suite_gives_empty_report() {
        let r = run_benchmark(&[], &Algorithm::ALL, &BenchOptions::default()).unwrap();
        assert!(r.rows.is_empty());
        assert_eq!(r.to_table().lines().count(), 1);
    }

    #[test]
    fn start_strategies() {
        let prob = crate::model::parse_problem("var x cont [0,4]\nvar y bin\nmin x").unwrap();
        assert_eq!(StartStrategy::Midpoint.resolve(&prob).unwrap(), vec![2.0, 0.5]);
        assert_eq!(StartStrategy::Point(vec![9.0, 0.0]).resolve(&prob).unwrap(), vec![4.0, 0.0]);
        assert!(StartStrategy::Point(vec![1.0]).resolve(&prob).is_err());
        let a = StartStrategy::Random(7).resolve(&prob).unwrap();
        assert_eq!(a, StartStrategy::Random(7).resolve(&prob).unwrap());
        assert!((0.0..=4.0).contains(&a[0]));
    }

    #[test]
    fn suite_names() {
        for s in Suite::ALL {
            assert_eq!(s.as_str().parse::<Suite>().unwrap(), s);
            assert!(!s.instances().is_empty());
        }
    }

    #[test]
    fn convex_cells_match_oracle() {
        let instances = Suite::Convex.instances()[..3].to_vec();
        let opts = BenchOptions { jobs: 2, ..BenchOptions::default() };
        let r = run_benchmark(&instances, &Algorithm::ALL, &opts).unwrap();
        assert_eq!(r.rows.len(), 9);
        for row in &r.rows {
            assert!(row.rel_err.unwrap() <= 1e-6, "{row:?}");
        }
        let table = r.to_table();
        assert_eq!(table.lines().count(), 10);
        assert!(table.starts_with("instance"));
    }
}
