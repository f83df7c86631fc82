use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use pla::eliminate::{eliminate, EliminationOptions};
use pla::harness::{check_battery, pagerank_pla, read_graph, run_experiment, ExperimentSpec};
use pla::logic::{evaluate, Parser as FormulaParser, SigmaStructure, Structure};
use pla::network::{estimate, sample, ExactDistribution, ExactOptions, Network};
use pla::trees::{Assumption, TreeSpec};
use pla::{Formula, Tree, Valuation, Value};

#[derive(Parser)]
#[command(name = "pla", version, about = "Probabilistic logic with aggregation over trees")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a formula in one sampled world.
    Eval {
        #[command(flatten)]
        world: World,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Formula text, or `@path`.
        #[arg(long)]
        formula: String,
        /// Assignments `var=node`.
        #[arg(long = "at", value_parser = parse_assignment)]
        at: Vec<(String, usize)>,
    },
    /// Exact expectation (and optional conditional) of a formula.
    Exact {
        #[command(flatten)]
        world: World,
        #[arg(long)]
        formula: String,
        /// Condition on this 0/1-valued formula.
        #[arg(long)]
        given: Option<String>,
        #[arg(long = "at", value_parser = parse_assignment)]
        at: Vec<(String, usize)>,
    },
    /// Sample a world and print its true atoms, or estimate a formula's mean.
    Sample {
        #[command(flatten)]
        world: World,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long = "at", value_parser = parse_assignment)]
        at: Vec<(String, usize)>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Compile a formula into a closure-basic one.
    Eliminate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        formula: String,
        #[arg(long)]
        delta: usize,
        #[arg(long, value_enum, default_value_t = AssumptionArg::Full)]
        assumption: AssumptionArg,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run an experiment spec.
    Experiment {
        #[arg(long)]
        spec: PathBuf,
        /// Output stem; defaults to the spec's `output`, else prints JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print a gnuplot script for the CSV output.
        #[arg(long)]
        gnuplot: bool,
    },
    /// Run the convergence-testing battery.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// PageRank stages through the formula encoding.
    Pagerank {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        /// Evaluate with exact rationals.
        #[arg(long)]
        exact: bool,
    },
}

#[derive(clap::Args)]
struct World {
    /// Tree spec, e.g. `uniform:delta=2,n=3` or `file:tree.txt`.
    #[arg(long)]
    tree: String,
    #[arg(long)]
    network: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum AssumptionArg {
    Full,
    Light,
    Violating,
}

fn parse_assignment(s: &str) -> std::result::Result<(String, usize), String> {
    let (v, a) = s.split_once('=').ok_or("expected var=node")?;
    Ok((v.trim().to_string(), a.trim().parse().map_err(|_| "node must be a number")?))
}

/// Errors in the input, as opposed to failed checks.
struct InputError(anyhow::Error);

fn text(arg: &str) -> Result<String> {
    match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {}", path)),
        None => Ok(arg.to_string()),
    }
}

fn load_network(path: &PathBuf) -> Result<Network> {
    let src = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Network::parse(&src)?)
}

fn load(world: &World) -> Result<(Arc<Tree>, Network)> {
    let tree = Arc::new(TreeSpec::parse(&world.tree)?.build()?);
    Ok((tree, load_network(&world.network)?))
}

fn formula(net: &Network, arg: &str) -> Result<Formula> {
    Ok(FormulaParser::new(net.sig().clone()).parse(&text(arg)?)?)
}

fn valuation(at: &[(String, usize)]) -> Valuation {
    Valuation::from_pairs(at.iter().map(|(v, a)| (v.as_str(), *a)))
}

fn print_world(st: &SigmaStructure) {
    let sig = st.signature();
    for r in sig.ids() {
        let table = st.table(r);
        for i in 0..table.tuples() {
            if table.get_index(i) {
                let args: Vec<String> = table.tuple(i).iter().map(|a| a.to_string()).collect();
                println!("{}({})", sig.name(r), args.join(", "));
            }
        }
    }
}

fn run(cmd: Cmd) -> std::result::Result<bool, InputError> {
    let input = InputError;
    match cmd {
        Cmd::Eval { world, seed, formula: f, at } => {
            let (tree, net) = load(&world).map_err(input)?;
            let phi = formula(&net, &f).map_err(input)?;
            let st = sample(&tree, &net, seed).map_err(|e| input(e.into()))?;
            let v: Value = evaluate(&st, &phi, &valuation(&at)).map_err(|e| input(e.into()))?;
            println!("{}", v);
        }
        Cmd::Exact { world, formula: f, given, at } => {
            let (tree, net) = load(&world).map_err(input)?;
            let phi = formula(&net, &f).map_err(input)?;
            let dist = ExactDistribution::new(&tree, &net, &ExactOptions::default()).map_err(|e| input(e.into()))?;
            let val = valuation(&at);
            match given {
                None => println!("{}", dist.expectation(&phi, &val).map_err(|e| input(e.into()))?),
                Some(g) => {
                    let g = formula(&net, &g).map_err(input)?;
                    match dist.conditional(&phi, &g, &val).map_err(|e| input(e.into()))? {
                        Some(v) => println!("{}", v),
                        None => println!("undefined (condition has probability 0)"),
                    }
                }
            }
        }
        Cmd::Sample { world, seed, formula: f, at, samples } => {
            let (tree, net) = load(&world).map_err(input)?;
            match f {
                None => print_world(&sample(&tree, &net, seed).map_err(|e| input(e.into()))?),
                Some(f) => {
                    let phi = formula(&net, &f).map_err(input)?;
                    let e = estimate(&tree, &net, &phi, &valuation(&at), samples, seed).map_err(|e| input(e.into()))?;
                    println!("mean {} se {} samples {}", e.mean, e.se, e.samples);
                }
            }
        }
        Cmd::Eliminate { network, formula: f, delta, assumption, report } => {
            let net = load_network(&network).map_err(input)?;
            let phi = formula(&net, &f).map_err(input)?;
            let a = match assumption {
                AssumptionArg::Full => Assumption::Full,
                AssumptionArg::Light => Assumption::Light,
                AssumptionArg::Violating => Assumption::Violating,
            };
            let opts = EliminationOptions::new(delta).with_assumption(a);
            let (_, rep) = eliminate(&net, &phi, &opts).map_err(|e| input(e.into()))?;
            println!("{}", rep.output_formula);
            for w in &rep.warnings {
                eprintln!("warning: {}", w);
            }
            if let Some(path) = report {
                let json = serde_json::to_string_pretty(&rep).map_err(|e| input(e.into()))?;
                std::fs::write(&path, json).map_err(|e| input(e.into()))?;
            }
        }
        Cmd::Experiment { spec, out, gnuplot } => {
            let src = std::fs::read_to_string(&spec).map_err(|e| input(e.into()))?;
            let spec = ExperimentSpec::from_json(&src).map_err(|e| input(e.into()))?;
            let res = run_experiment(&spec).map_err(|e| input(e.into()))?;
            match out.or(spec.output.as_ref().map(PathBuf::from)) {
                Some(stem) => {
                    res.write(&stem).map_err(|e| input(e.into()))?;
                    for r in &res.results {
                        println!("n={} {} mean={:.4} concentration={:?}", r.n, r.query, r.mean, r.concentration);
                    }
                    if gnuplot {
                        println!("{}", res.gnuplot(&stem.with_extension("csv").to_string_lossy()));
                    }
                }
                None => {
                    println!("{}", res.to_json());
                    if gnuplot {
                        println!("{}", res.gnuplot("results.csv"));
                    }
                }
            }
        }
        Cmd::Check { seed } => {
            let rows = check_battery(seed).map_err(|e| input(e.into()))?;
            let mut all = true;
            for r in &rows {
                let expect = if r.expect_stable { "stable" } else { "unstable" };
                println!(
                    "{:<6} {:<10} {:<28} expect {:<8} discrepancy {:.4}",
                    if r.ok { "PASS" } else { "FAIL" },
                    r.aggregation,
                    r.probe,
                    expect,
                    r.discrepancy
                );
                all &= r.ok;
            }
            return Ok(all);
        }
        Cmd::Pagerank { graph, k, exact } => {
            let src = std::fs::read_to_string(&graph).map_err(|e| input(e.into()))?;
            let g = read_graph(&src).map_err(|e| input(e.into()))?;
            if exact {
                let v: Vec<Value> = pagerank_pla(&g, k).map_err(|e| input(e.into()))?;
                for (a, x) in v.iter().enumerate() {
                    println!("{} {}", a, x);
                }
            } else {
                let v: Vec<f64> = pagerank_pla(&g, k).map_err(|e| input(e.into()))?;
                for (a, x) in v.iter().enumerate() {
                    println!("{} {:.12}", a, x);
                }
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(InputError(e)) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(2)
        }
    }
}
