//! Experiments over tree families, the PageRank encoding, and the ct battery.

mod battery;
mod pagerank;

pub use battery::{check_battery, BatteryRow};
pub use pagerank::{pagerank_direct, pagerank_formula, pagerank_pla, read_graph};

use std::fmt::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eliminate::tuple_schedule;
use crate::error::{Error, Result};
use crate::logic::{check, evaluate_at, Formula, Parser, SigmaStructure, Valuation, Var};
use crate::network::{derive_seed, sample_with, Network};
use crate::trees::{generate_tree, TreeGenConfig, TreeSpec};

/// One query of an experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuerySpec {
    pub name: String,
    /// Formula text; may start with `let` definitions.
    pub formula: String,
}

/// An experiment: a tree family, sizes, a network and queries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Tree family without `n`, e.g. `uniform:delta=2`, `mixed-leaves`, `few-big`.
    pub family: String,
    pub ns: Vec<usize>,
    /// Network text, or a path to a network file.
    pub network: String,
    pub queries: Vec<QuerySpec>,
    pub samples: usize,
    pub seed: u64,
    #[serde(default = "default_bucket")]
    pub bucket: f64,
    #[serde(default)]
    pub output: Option<String>,
}

fn default_bucket() -> f64 {
    0.01
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<ExperimentSpec> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.into()));
        if self.ns.is_empty() || self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return bad("ns must be non-empty and strictly increasing");
        }
        if self.samples < 100 {
            return bad("samples must be at least 100");
        }
        if !(self.bucket > 0.0 && self.bucket <= 1.0) {
            return bad("bucket width must lie in (0, 1]");
        }
        if self.queries.is_empty() {
            return bad("no queries");
        }
        Ok(())
    }

    fn network(&self) -> Result<Network> {
        if self.network.trim_start().starts_with("network") {
            Network::parse(&self.network)
        } else {
            Network::parse(&std::fs::read_to_string(&self.network)?)
        }
    }
}

/// A tree family from a spec string without `n`.
pub fn parse_family(s: &str) -> Result<TreeGenConfig> {
    let full = if s.contains(':') { format!("{},n=1", s) } else { format!("{}:n=1", s) };
    match TreeSpec::parse(&full)? {
        TreeSpec::Generated(cfg) => Ok(cfg),
        TreeSpec::File(_) => Err(Error::InvalidSpec("a family must be generated, not a file".into())),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Bucket {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

/// Distribution of `A(φ(ā))` over sampled worlds and scheduled tuples.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct QueryResult {
    pub n: usize,
    pub query: String,
    pub nodes: usize,
    pub values: usize,
    pub tuples: usize,
    pub subsampled: bool,
    pub mean: f64,
    pub histogram: Vec<Bucket>,
    /// Mass-weighted centres of runs of buckets holding at least 5% of the mass.
    pub concentration: Vec<(f64, f64)>,
}

impl QueryResult {
    /// Mass of values in `[lo, hi]`, at bucket resolution.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        self.histogram.iter().filter(|b| b.lo >= lo - 1e-12 && b.hi <= hi + 1e-12).map(|b| b.mass).sum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExperimentResult {
    pub family: String,
    pub seed: u64,
    pub samples: usize,
    pub results: Vec<QueryResult>,
}

/// Runs every query at every size; sample `i` at size `n` uses seed
/// `derive_seed(seed, [n, i])`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let family = parse_family(&spec.family)?;
    let net = spec.network()?;
    let mut parsed = Vec::new();
    for q in &spec.queries {
        let f = Parser::new(net.sig().clone()).parse(&q.formula)?;
        parsed.push((q.name.clone(), f));
    }
    let mut results = Vec::new();
    for &n in &spec.ns {
        let tree = Arc::new(generate_tree(&family.with_n(n))?);
        let probe = SigmaStructure::empty(tree.clone(), net.sig().clone())?;
        let plans: Vec<(Vec<Var>, Vec<Vec<usize>>, bool)> = parsed
            .iter()
            .enumerate()
            .map(|(qi, (_, f))| {
                let vars: Vec<Var> = f.free_vars().into_iter().collect();
                check(&probe, f, &Valuation::from_pairs(vars.iter().map(|v| (v.as_str(), 0))))?;
                let (list, sub) = tuple_schedule(&tree, vars.len(), derive_seed(spec.seed, &[n as u64, u64::MAX, qi as u64]));
                Ok((vars, list, sub))
            })
            .collect::<Result<_>>()?;
        let per_sample: Vec<Vec<Vec<f64>>> = (0..spec.samples)
            .into_par_iter()
            .map_init(
                || probe.clone(),
                |st, i| -> Result<Vec<Vec<f64>>> {
                    sample_with(st, &net, derive_seed(spec.seed, &[n as u64, i as u64]))?;
                    Ok(parsed
                        .iter()
                        .zip(&plans)
                        .map(|((_, f), (vars, list, _))| list.iter().map(|a| evaluate_at::<f64>(st, f, vars, a)).collect())
                        .collect())
                },
            )
            .collect::<Result<_>>()?;
        for (qi, (name, _)) in parsed.iter().enumerate() {
            let values: Vec<f64> = per_sample.iter().flat_map(|s| s[qi].iter().copied()).collect();
            results.push(summarize(n, name, tree.len(), &values, spec.bucket, plans[qi].1.len(), plans[qi].2));
        }
    }
    Ok(ExperimentResult { family: spec.family.clone(), seed: spec.seed, samples: spec.samples, results })
}

fn summarize(n: usize, name: &str, nodes: usize, values: &[f64], width: f64, tuples: usize, subsampled: bool) -> QueryResult {
    let k = (1.0 / width).round().max(1.0) as usize;
    let mut counts = vec![0usize; k];
    for &v in values {
        let b = ((v / width).floor() as isize).clamp(0, k as isize - 1) as usize;
        counts[b] += 1;
    }
    let total = values.len().max(1) as f64;
    let histogram: Vec<Bucket> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| Bucket { lo: i as f64 * width, hi: ((i + 1) as f64 * width).min(1.0), mass: c as f64 / total })
        .collect();
    let mut concentration = Vec::new();
    let mut run: Option<(f64, f64)> = None;
    for b in &histogram {
        if b.mass >= 0.05 {
            let mid = (b.lo + b.hi) / 2.0;
            let (m, w) = run.unwrap_or((0.0, 0.0));
            run = Some((m + mid * b.mass, w + b.mass));
        } else if let Some((m, w)) = run.take() {
            concentration.push((m / w, w));
        }
    }
    if let Some((m, w)) = run {
        concentration.push((m / w, w));
    }
    QueryResult {
        n,
        query: name.to_string(),
        nodes,
        values: values.len(),
        tuples,
        subsampled,
        mean: values.iter().sum::<f64>() / total,
        histogram,
        concentration,
    }
}

impl ExperimentResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("results serialize")
    }

    /// One row per (n, query, bucket).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,query,lo,hi,mass\n");
        for r in &self.results {
            for b in &r.histogram {
                writeln!(out, "{},{},{},{},{}", r.n, r.query, b.lo, b.hi, b.mass).unwrap();
            }
        }
        out
    }

    /// A gnuplot script drawing each histogram from the CSV file `csv`.
    pub fn gnuplot(&self, csv: &str) -> String {
        let mut out = String::from("set datafile separator ','\nset xlabel 'value'\nset ylabel 'mass'\nset style fill solid 0.5\n");
        let plots: Vec<String> = self
            .results
            .iter()
            .map(|r| {
                format!(
                    "'{}' using ((strcol(1) eq '{}' && strcol(2) eq '{}') ? ($3+$4)/2 : 1/0):5 with boxes title '{} n={}'",
                    csv, r.n, r.query, r.query, r.n
                )
            })
            .collect();
        writeln!(out, "plot {}", plots.join(", \\\n     ")).unwrap();
        out
    }

    /// Writes `<stem>.json` and `<stem>.csv`.
    pub fn write(&self, stem: &Path) -> Result<()> {
        std::fs::write(stem.with_extension("json"), self.to_json())?;
        std::fs::write(stem.with_extension("csv"), self.to_csv())?;
        Ok(())
    }
}

/// Shared lookups for formulas used in examples and tests.
pub fn example_formula(net: &Network, text: &str) -> Result<Formula> {
    Parser::new(net.sig().clone()).parse(text)
}
