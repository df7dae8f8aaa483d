//! Turning command-line specs into cases, graphs, weights and problems.

use std::fs;
use std::path::{Path, PathBuf};

use dlm_core::case_io::{bus_derived_graph, ieee118_ranges};
use dlm_core::graph::parse_edge_list;
use dlm_core::weights::{lazy_max_degree_weights, parse_weight_matrix, validate_weight_matrix};
use dlm_core::{
    builtin_ieee14, metropolis_weights, parse_case, synth_ieee118_style, to_problems,
    DispatchCase, GraphTopology, LocalProblem, ShareSplit, WeightMatrix,
};

use crate::error::{core, CliError};

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum CaseSource {
    Ieee14,
    Synth { seed: u64, generators: usize },
    File(PathBuf),
}

impl CaseSource {
    /// `builtin:ieee14`, `synth:<seed>[:<generators>]` or a file path.
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        if let Some(name) = spec.strip_prefix("builtin:") {
            return match name {
                "ieee14" => Ok(CaseSource::Ieee14),
                other => Err(CliError::Config(format!("unknown builtin case {other:?}"))),
            };
        }
        if let Some(rest) = spec.strip_prefix("synth:") {
            let mut parts = rest.split(':');
            let seed = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CliError::Config(format!("invalid synth seed in {spec:?}")))?;
            let generators = match parts.next() {
                None => ieee118_ranges::GENERATORS,
                Some(n) => n
                    .parse()
                    .map_err(|_| CliError::Config(format!("invalid generator count in {spec:?}")))?,
            };
            if parts.next().is_some() {
                return Err(CliError::Config(format!("too many fields in {spec:?}")));
            }
            return Ok(CaseSource::Synth { seed, generators });
        }
        Ok(CaseSource::File(PathBuf::from(spec)))
    }

    pub fn load(&self) -> Result<DispatchCase, CliError> {
        match self {
            CaseSource::Ieee14 => Ok(builtin_ieee14()),
            CaseSource::Synth { seed, generators } => {
                synth_ieee118_style(*seed, *generators).map_err(core)
            }
            CaseSource::File(path) => parse_case(&read_file(path)?).map_err(core),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    /// Ring in generator id order.
    Cycle,
    Path,
    Complete,
    BusDerived,
    EdgeList(PathBuf),
}

impl GraphSpec {
    pub fn parse(spec: &str) -> Self {
        match spec {
            "cycle" => GraphSpec::Cycle,
            "path" => GraphSpec::Path,
            "complete" => GraphSpec::Complete,
            "bus-derived" => GraphSpec::BusDerived,
            file => GraphSpec::EdgeList(PathBuf::from(file)),
        }
    }

    pub fn build(&self, case: &DispatchCase) -> Result<GraphTopology, CliError> {
        let n = case.generators.len();
        match self {
            GraphSpec::Cycle => GraphTopology::cycle(n).map_err(core),
            GraphSpec::Path => GraphTopology::path(n).map_err(core),
            GraphSpec::Complete => GraphTopology::complete(n).map_err(core),
            GraphSpec::BusDerived => bus_derived_graph(case).map_err(core),
            GraphSpec::EdgeList(path) => parse_edge_list(&read_file(path)?, Some(n)).map_err(core),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Metropolis,
    LazyMaxDegree,
    File(PathBuf),
}

impl WeightSpec {
    pub fn parse(spec: &str) -> Self {
        match spec {
            "metropolis" => WeightSpec::Metropolis,
            "lazy" => WeightSpec::LazyMaxDegree,
            file => WeightSpec::File(PathBuf::from(file)),
        }
    }

    pub fn build(&self, g: &GraphTopology) -> Result<WeightMatrix, CliError> {
        match self {
            WeightSpec::Metropolis => metropolis_weights(g).map_err(core),
            WeightSpec::LazyMaxDegree => lazy_max_degree_weights(g).map_err(core),
            WeightSpec::File(path) => {
                let rows = parse_weight_matrix(&read_file(path)?).map_err(core)?;
                validate_weight_matrix(&rows, g).map_err(core)
            }
        }
    }
}

/// `equal` or a comma-separated list of per-generator shares.
pub fn parse_shares(spec: &str) -> Result<ShareSplit, CliError> {
    if spec == "equal" {
        return Ok(ShareSplit::Equal);
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("invalid share {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(ShareSplit::Explicit)
}

pub fn parse_checkpoints(spec: &str) -> Result<Vec<usize>, CliError> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| CliError::Config(format!("invalid checkpoint {s:?}")))
        })
        .collect()
}

/// `{1, 10, 100, 1000, iters}` restricted to `1..=iters`.
pub fn default_checkpoints(iters: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = [1, 10, 100, 1000, iters]
        .into_iter()
        .filter(|&k| k >= 1 && k <= iters)
        .collect();
    ks.sort_unstable();
    ks.dedup();
    ks
}

pub fn problems(case: &DispatchCase, shares: &ShareSplit) -> Result<Vec<LocalProblem>, CliError> {
    to_problems(case, shares).map_err(core)
}
