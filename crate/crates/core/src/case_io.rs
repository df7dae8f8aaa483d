//! Economic-dispatch case files, the built-in five-generator case and a
//! synthetic generator for 54-unit systems.
//!
//! File format (UTF-8, LF, `.` decimal separator):
//!
//! ```text
//! # demand=300 name=ieee14 lines=1-2,1-5,2-3
//! id,bus,gamma,beta,mu,pmin,pmax
//! 1,1,0.04,2,0,0,80
//! ```
//!
//! The metadata line must come first; `lines` (bus-to-bus connections) is
//! optional and only used to derive a generator communication graph.
//! Generator `i` costs `gamma·P² + beta·P + mu` on `[pmin, pmax]`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{GraphError, GraphTopology};
use crate::objectives::{LocalProblem, ObjectiveError};

pub const CASE_HEADER: &str = "id,bus,gamma,beta,mu,pmin,pmax";
const SHARE_TOLERANCE: f64 = 1e-9;
const SYNTH_RETRIES: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaseError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("demand {demand} MW outside generation range [{min}, {max}] MW")]
    Feasibility { demand: f64, min: f64, max: f64 },
    #[error("shares sum to {got}, expected demand {expected}")]
    ShareMismatch { expected: f64, got: f64 },
    #[error("expected {expected} shares, got {got}")]
    ShareCount { expected: usize, got: usize },
    #[error("case has no bus line data to derive a graph from")]
    MissingLines,
    #[error("generator count must be at least 1")]
    NoGenerators,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

impl CaseError {
    pub fn kind(&self) -> &'static str {
        match self {
            CaseError::Parse { .. } => "ParseError",
            CaseError::Feasibility { .. } => "FeasibilityError",
            CaseError::ShareMismatch { .. } | CaseError::ShareCount { .. } => "ShareMismatch",
            CaseError::MissingLines => "MissingLines",
            CaseError::NoGenerators => "InvalidArgument",
            CaseError::Graph(e) => e.kind(),
            CaseError::Objective(_) => "InvalidCase",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorRecord {
    pub id: u32,
    pub bus: u32,
    /// Cost per MW².
    pub gamma: f64,
    /// Cost per MW.
    pub beta: f64,
    /// Constant cost.
    pub mu: f64,
    pub pmin: f64,
    pub pmax: f64,
}

impl GeneratorRecord {
    pub fn cost(&self, p: f64) -> f64 {
        self.gamma * p * p + self.beta * p + self.mu
    }
}

/// Generators (sorted by id), total demand and optional bus connections.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchCase {
    pub name: String,
    pub demand: f64,
    pub generators: Vec<GeneratorRecord>,
    pub lines: Vec<(u32, u32)>,
}

impl DispatchCase {
    /// Checks `Σpmin ≤ demand ≤ Σpmax`.
    pub fn check_feasible(&self) -> Result<(), CaseError> {
        let min: f64 = self.generators.iter().map(|g| g.pmin).sum();
        let max: f64 = self.generators.iter().map(|g| g.pmax).sum();
        if self.demand < min || self.demand > max {
            return Err(CaseError::Feasibility {
                demand: self.demand,
                min,
                max,
            });
        }
        Ok(())
    }

    /// Canonical text form; `parse_case(c.to_text())` reproduces `c`.
    pub fn to_text(&self) -> String {
        let mut out = format!("# demand={} name={}", self.demand, self.name);
        if !self.lines.is_empty() {
            let lines: Vec<String> = self.lines.iter().map(|(a, b)| format!("{a}-{b}")).collect();
            let _ = write!(out, " lines={}", lines.join(","));
        }
        out.push('\n');
        out.push_str(CASE_HEADER);
        out.push('\n');
        for g in &self.generators {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                g.id, g.bus, g.gamma, g.beta, g.mu, g.pmin, g.pmax
            );
        }
        out
    }

    pub fn total_cost(&self, allocation: &[f64]) -> f64 {
        self.generators
            .iter()
            .zip(allocation)
            .map(|(g, &p)| g.cost(p))
            .sum()
    }
}

fn parse_err(line: usize, reason: impl Into<String>) -> CaseError {
    CaseError::Parse {
        line,
        reason: reason.into(),
    }
}

fn parse_lines_spec(spec: &str, line: usize) -> Result<Vec<(u32, u32)>, CaseError> {
    spec.split(',')
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (a, b) = pair
                .split_once('-')
                .ok_or_else(|| parse_err(line, format!("bad bus line {pair:?}")))?;
            let a = a
                .parse::<u32>()
                .map_err(|_| parse_err(line, format!("bad bus number {a:?}")))?;
            let b = b
                .parse::<u32>()
                .map_err(|_| parse_err(line, format!("bad bus number {b:?}")))?;
            Ok((a, b))
        })
        .collect()
}

/// Strict parser: unknown metadata keys, missing fields and malformed numbers
/// are errors carrying the 1-based line number.
pub fn parse_case(text: &str) -> Result<DispatchCase, CaseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (meta_no, meta) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty case file"))?;
    let meta = meta
        .strip_prefix('#')
        .ok_or_else(|| parse_err(meta_no, "first line must be '# demand=<MW> name=<label>'"))?;
    let mut demand = None;
    let mut name = None;
    let mut bus_lines = Vec::new();
    for token in meta.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| parse_err(meta_no, format!("expected key=value, found {token:?}")))?;
        match key {
            "demand" => {
                let d = value
                    .parse::<f64>()
                    .ok()
                    .filter(|d| d.is_finite())
                    .ok_or_else(|| parse_err(meta_no, format!("invalid demand {value:?}")))?;
                demand = Some(d);
            }
            "name" => name = Some(value.to_string()),
            "lines" => bus_lines = parse_lines_spec(value, meta_no)?,
            other => return Err(parse_err(meta_no, format!("unknown key {other:?}"))),
        }
    }
    let demand = demand.ok_or_else(|| parse_err(meta_no, "missing demand"))?;
    let name = name.ok_or_else(|| parse_err(meta_no, "missing name"))?;

    match lines.next() {
        Some((_, h)) if h.trim() == CASE_HEADER => {}
        Some((no, _)) => return Err(parse_err(no, format!("expected header {CASE_HEADER:?}"))),
        None => return Err(parse_err(meta_no + 1, "missing header line")),
    }

    let mut generators = Vec::new();
    let mut ids = BTreeSet::new();
    for (no, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(parse_err(no, format!("expected 7 fields, found {}", fields.len())));
        }
        let int = |s: &str, what: &str| {
            s.parse::<u32>()
                .map_err(|_| parse_err(no, format!("invalid {what} {s:?}")))
        };
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(no, format!("invalid {what} {s:?}")))
        };
        let g = GeneratorRecord {
            id: int(fields[0], "id")?,
            bus: int(fields[1], "bus")?,
            gamma: num(fields[2], "gamma")?,
            beta: num(fields[3], "beta")?,
            mu: num(fields[4], "mu")?,
            pmin: num(fields[5], "pmin")?,
            pmax: num(fields[6], "pmax")?,
        };
        if g.gamma < 0.0 {
            return Err(parse_err(no, format!("gamma {} is negative (cost must be convex)", g.gamma)));
        }
        if g.pmin > g.pmax {
            return Err(parse_err(no, format!("pmin {} exceeds pmax {}", g.pmin, g.pmax)));
        }
        if !ids.insert(g.id) {
            return Err(parse_err(no, format!("duplicate generator id {}", g.id)));
        }
        generators.push(g);
    }
    generators.sort_by_key(|g| g.id);
    let case = DispatchCase {
        name,
        demand,
        generators,
        lines: bus_lines,
    };
    case.check_feasible()?;
    Ok(case)
}

/// Branches of the 14-bus test network.
const IEEE14_LINES: [(u32, u32); 20] = [
    (1, 2), (1, 5), (2, 3), (2, 4), (2, 5), (3, 4), (4, 5), (4, 7), (4, 9), (5, 6),
    (6, 11), (6, 12), (6, 13), (7, 8), (7, 9), (9, 10), (9, 14), (10, 11), (12, 13), (13, 14),
];

/// Five generators at buses 1, 2, 3, 6 and 8 serving 300 MW.
pub fn builtin_ieee14() -> DispatchCase {
    let rows: [(u32, f64, f64, f64); 5] = [
        (1, 0.04, 2.0, 80.0),
        (2, 0.03, 3.0, 90.0),
        (3, 0.035, 4.0, 70.0),
        (6, 0.03, 4.0, 70.0),
        (8, 0.04, 2.5, 80.0),
    ];
    DispatchCase {
        name: "ieee14".into(),
        demand: 300.0,
        generators: rows
            .iter()
            .enumerate()
            .map(|(i, &(bus, gamma, beta, pmax))| GeneratorRecord {
                id: i as u32 + 1,
                bus,
                gamma,
                beta,
                mu: 0.0,
                pmin: 0.0,
                pmax,
            })
            .collect(),
        lines: IEEE14_LINES.to_vec(),
    }
}

/// Coefficient ranges of the 54-generator system.
pub mod ieee118_ranges {
    pub const GAMMA: (f64, f64) = (0.0024, 0.0697);
    pub const BETA: (f64, f64) = (8.3391, 37.6968);
    pub const MU: (f64, f64) = (6.78, 74.33);
    pub const PMIN: (f64, f64) = (5.0, 150.0);
    pub const PMAX: (f64, f64) = (150.0, 400.0);
    pub const GENERATORS: usize = 54;
    pub const BUSES: usize = 118;
    pub const DEMAND: f64 = 6000.0;
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (v * s).round() / s
}

/// Deterministic synthetic case with coefficients drawn uniformly from the
/// 54-generator system's ranges. Demand scales as `6000·n_gen/54`. A
/// synthetic bus network (a ring plus seeded chords) is attached so a
/// bus-derived graph can be built.
pub fn synth_ieee118_style(seed: u64, n_gen: usize) -> Result<DispatchCase, CaseError> {
    use ieee118_ranges as r;
    if n_gen == 0 {
        return Err(CaseError::NoGenerators);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let demand = r::DEMAND * n_gen as f64 / r::GENERATORS as f64;
    let n_bus = ((r::BUSES * n_gen) as f64 / r::GENERATORS as f64).round().max(n_gen as f64) as usize;

    let mut last_err = None;
    for _ in 0..SYNTH_RETRIES {
        let mut buses: Vec<u32> = sample(&mut rng, n_bus, n_gen)
            .into_iter()
            .map(|b| b as u32 + 1)
            .collect();
        buses.sort_unstable();
        let generators: Vec<GeneratorRecord> = buses
            .iter()
            .enumerate()
            .map(|(i, &bus)| GeneratorRecord {
                id: i as u32 + 1,
                bus,
                gamma: round_to(rng.gen_range(r::GAMMA.0..=r::GAMMA.1), 6),
                beta: round_to(rng.gen_range(r::BETA.0..=r::BETA.1), 4),
                mu: round_to(rng.gen_range(r::MU.0..=r::MU.1), 2),
                pmin: round_to(rng.gen_range(r::PMIN.0..=r::PMIN.1), 1),
                pmax: round_to(rng.gen_range(r::PMAX.0..=r::PMAX.1), 1),
            })
            .collect();
        let mut lines: BTreeSet<(u32, u32)> = (1..n_bus as u32).map(|b| (b, b + 1)).collect();
        if n_bus > 2 {
            lines.insert((1, n_bus as u32));
        }
        for _ in 0..n_bus / 2 {
            let a = rng.gen_range(1..=n_bus as u32);
            let b = rng.gen_range(1..=n_bus as u32);
            if a != b {
                lines.insert((a.min(b), a.max(b)));
            }
        }
        let case = DispatchCase {
            name: format!("synth{}-{}", r::BUSES, seed),
            demand,
            generators,
            lines: lines.into_iter().collect(),
        };
        match case.check_feasible() {
            Ok(()) => return Ok(case),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// How the total demand is split into per-node shares `b_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum ShareSplit {
    /// `demand/n` each; the last node absorbs the rounding residue.
    Equal,
    Explicit(Vec<f64>),
}

pub fn equal_shares(total: f64, n: usize) -> Vec<f64> {
    let each = total / n as f64;
    let mut shares = vec![each; n];
    if n > 0 {
        let head: f64 = shares[..n - 1].iter().sum();
        shares[n - 1] = total - head;
    }
    shares
}

pub fn to_problems(case: &DispatchCase, split: &ShareSplit) -> Result<Vec<LocalProblem>, CaseError> {
    let n = case.generators.len();
    let shares = match split {
        ShareSplit::Equal => equal_shares(case.demand, n),
        ShareSplit::Explicit(s) => {
            if s.len() != n {
                return Err(CaseError::ShareCount {
                    expected: n,
                    got: s.len(),
                });
            }
            let sum: f64 = s.iter().sum();
            if (sum - case.demand).abs() > SHARE_TOLERANCE {
                return Err(CaseError::ShareMismatch {
                    expected: case.demand,
                    got: sum,
                });
            }
            s.clone()
        }
    };
    case.generators
        .iter()
        .zip(shares)
        .map(|(g, b)| {
            LocalProblem::quadratic(g.gamma, g.beta, g.mu, g.pmin, g.pmax, b).map_err(CaseError::from)
        })
        .collect()
}

/// Generator graph from bus connectivity: two generators are adjacent when
/// their buses coincide or are joined by a bus path whose interior avoids
/// every generator bus. Node `i` is the `i`-th generator in id order.
pub fn bus_derived_graph(case: &DispatchCase) -> Result<GraphTopology, CaseError> {
    if case.lines.is_empty() {
        return Err(CaseError::MissingLines);
    }
    let mut adj: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &(a, b) in &case.lines {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut on_bus: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, g) in case.generators.iter().enumerate() {
        on_bus.entry(g.bus).or_default().push(i);
    }
    let mut edges = BTreeSet::new();
    for gens in on_bus.values() {
        for (x, &i) in gens.iter().enumerate() {
            for &j in &gens[x + 1..] {
                edges.insert((i, j));
            }
        }
    }
    for (&start, start_gens) in &on_bus {
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(bus) = queue.pop_front() {
            for &next in adj.get(&bus).map(Vec::as_slice).unwrap_or(&[]) {
                if !seen.insert(next) {
                    continue;
                }
                if let Some(found) = on_bus.get(&next) {
                    for &i in start_gens {
                        for &j in found {
                            edges.insert((i.min(j), i.max(j)));
                        }
                    }
                } else {
                    queue.push_back(next);
                }
            }
        }
    }
    let edges: Vec<_> = edges.into_iter().collect();
    Ok(GraphTopology::connected(case.generators.len(), &edges)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "# demand=300 name=t\nid,bus,gamma,beta,mu,pmin,pmax\n";

    #[test]
    fn parses_table_row() {
        let text = format!("{HEADER}1,1,0.04,2.0,0.0,0.0,80\n2,2,0.03,3,0,0,300\n");
        let case = parse_case(&text).unwrap();
        assert_eq!(
            case.generators[0],
            GeneratorRecord {
                id: 1,
                bus: 1,
                gamma: 0.04,
                beta: 2.0,
                mu: 0.0,
                pmin: 0.0,
                pmax: 80.0
            }
        );
    }

    #[test]
    fn rejects_negative_gamma() {
        let text = format!("{HEADER}1,1,-0.1,2.0,0,0,80\n2,2,0.1,2,0,0,300\n");
        assert!(matches!(parse_case(&text), Err(CaseError::Parse { line: 3, .. })));
    }

    #[test]
    fn empty_generator_list() {
        let err = parse_case(HEADER).unwrap_err();
        assert_eq!(err.kind(), "FeasibilityError");
        let ok = parse_case("# demand=0 name=empty\nid,bus,gamma,beta,mu,pmin,pmax\n").unwrap();
        assert!(ok.generators.is_empty());
    }

    #[test]
    fn strict_metadata() {
        let bad_key = "# demand=1 name=x color=red\nid,bus,gamma,beta,mu,pmin,pmax\n";
        assert!(matches!(parse_case(bad_key), Err(CaseError::Parse { line: 1, .. })));
        let no_demand = "# name=x\nid,bus,gamma,beta,mu,pmin,pmax\n";
        assert!(matches!(parse_case(no_demand), Err(CaseError::Parse { line: 1, .. })));
        let bad_header = "# demand=1 name=x\nid,bus,gamma\n";
        assert!(matches!(parse_case(bad_header), Err(CaseError::Parse { line: 2, .. })));
        let short = format!("{HEADER}1,1,0.04,2.0,0.0,80\n");
        assert!(matches!(parse_case(&short), Err(CaseError::Parse { line: 3, .. })));
        let nan = format!("{HEADER}1,1,0.04,abc,0.0,0,80\n");
        assert!(matches!(parse_case(&nan), Err(CaseError::Parse { line: 3, .. })));
        let dup = format!("{HEADER}1,1,0.04,2,0,0,200\n1,2,0.04,2,0,0,200\n");
        assert!(matches!(parse_case(&dup), Err(CaseError::Parse { line: 4, .. })));
        let inverted = format!("{HEADER}1,1,0.04,2,0,90,80\n");
        assert!(matches!(parse_case(&inverted), Err(CaseError::Parse { line: 3, .. })));
    }

    #[test]
    fn builtin_case() {
        let case = builtin_ieee14();
        assert_eq!(case.generators.len(), 5);
        assert_eq!(case.demand, 300.0);
        assert_eq!(case.generators[4].bus, 8);
        assert_eq!(parse_case(&case.to_text()).unwrap(), case);
    }

    #[test]
    fn equal_split_of_builtin() {
        let problems = to_problems(&builtin_ieee14(), &ShareSplit::Equal).unwrap();
        assert!(problems.iter().all(|p| p.share == 60.0));
    }

    #[test]
    fn explicit_shares() {
        let case = builtin_ieee14();
        let p = to_problems(&case, &ShareSplit::Explicit(vec![300.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(p[0].share, 300.0);
        let err = to_problems(&case, &ShareSplit::Explicit(vec![299.0, 0.0, 0.0, 0.0, 0.0]));
        assert!(matches!(err, Err(CaseError::ShareMismatch { .. })));
        let err = to_problems(&case, &ShareSplit::Explicit(vec![300.0]));
        assert!(matches!(err, Err(CaseError::ShareCount { .. })));
    }

    #[test]
    fn equal_split_sums_exactly() {
        for (total, n) in [(300.0, 7), (6000.0, 54), (1.0, 3), (1234.567, 11)] {
            let s = equal_shares(total, n);
            assert_eq!(s.iter().sum::<f64>(), total, "{total} / {n}");
        }
    }

    #[test]
    fn synth_is_deterministic_and_in_range() {
        use ieee118_ranges as r;
        let a = synth_ieee118_style(7, 54).unwrap();
        assert_eq!(a, synth_ieee118_style(7, 54).unwrap());
        assert_ne!(a, synth_ieee118_style(8, 54).unwrap());
        assert_eq!(a.generators.len(), 54);
        assert_eq!(a.demand, 6000.0);
        for g in &a.generators {
            assert!((r::GAMMA.0..=r::GAMMA.1).contains(&g.gamma));
            assert!((r::BETA.0..=r::BETA.1).contains(&g.beta));
            assert!((r::MU.0..=r::MU.1).contains(&g.mu));
            assert!((r::PMIN.0..=r::PMIN.1).contains(&g.pmin));
            assert!((r::PMAX.0..=r::PMAX.1).contains(&g.pmax));
            assert!(g.pmin <= g.pmax);
        }
        assert!(a.generators.iter().map(|g| g.pmax).sum::<f64>() >= 8100.0);
        assert_eq!(parse_case(&a.to_text()).unwrap(), a);
        let small = synth_ieee118_style(3, 10).unwrap();
        assert!((small.demand - 6000.0 * 10.0 / 54.0).abs() < 1e-9);
        assert!(synth_ieee118_style(3, 0).is_err());
    }

    #[test]
    fn bus_graph_of_builtin() {
        let g = bus_derived_graph(&builtin_ieee14()).unwrap();
        // generator buses 1,2,3,6,8; e.g. 1-5-6, 1-5-4-3 and 1-5-4-7-8 avoid
        // other generator buses, so every pair ends up adjacent
        assert!(g.has_edge(0, 1));
        assert!(g.has_edge(0, 3));
        assert!(g.has_edge(0, 2));
        assert!(g.has_edge(0, 4));
        assert_eq!(g.edge_count(), 10);
    }

    #[test]
    fn bus_graph_skips_through_generator_buses() {
        // buses 1-2-3 in a line with generators on 1, 2 and 3
        let mut case = builtin_ieee14();
        case.generators.truncate(3);
        case.demand = 100.0;
        case.lines = vec![(1, 2), (2, 3)];
        let g = bus_derived_graph(&case).unwrap();
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2));
        assert!(!g.has_edge(0, 2));
    }

    #[test]
    fn bus_graph_of_synth_is_connected() {
        let case = synth_ieee118_style(7, 54).unwrap();
        let g = bus_derived_graph(&case).unwrap();
        assert_eq!(g.node_count(), 54);
    }

    #[test]
    fn bus_graph_needs_lines() {
        let mut case = builtin_ieee14();
        case.lines.clear();
        assert_eq!(bus_derived_graph(&case), Err(CaseError::MissingLines));
    }
}
