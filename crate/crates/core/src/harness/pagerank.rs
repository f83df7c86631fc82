//! PageRank stages as formulas with `tsum` and `lengthpow(1)`.

use crate::error::{Error, Result};
use crate::logic::{check, evaluate_at, parse, Formula, GeneralStructure, Signature, Structure, Sym, Valuation};
use crate::scalar::Scalar;
use crate::trees::NodeId;

/// Text of `PR_k(v)`; each stage binds its own `y{i}`, `z{i}` and `w`.
fn stage_text(k: usize, v: &str) -> String {
    if k == 0 {
        return format!("lengthpow(1)({v} = {v} : w : true)");
    }
    let (y, z) = (format!("y{}", k), format!("z{}", k));
    let inner = stage_text(k - 1, &y);
    format!(
        "tsum(and({v} = {v}, product({inner}, lengthpow(1)({y} = {y} : {z} : E({y}, {z})))) : {y} : E({y}, {v}))"
    )
}

/// `PR_k(x)` with free variable `x`.
pub fn pagerank_formula(k: usize) -> Formula {
    parse(&stage_text(k, "x"), &Signature::default()).expect("generated formula parses")
}

fn validate(g: &GeneralStructure) -> Result<()> {
    if g.size() == 0 {
        return Err(Error::InvalidSpec("empty graph".into()));
    }
    match (0..g.size()).find(|&a| g.out_degree(a) == 0) {
        Some(a) => Err(Error::DanglingNode(a)),
        None => Ok(()),
    }
}

/// `PR_k(a)` for every node `a`, by evaluating [`pagerank_formula`].
pub fn pagerank_pla<T: Scalar>(g: &GeneralStructure, k: usize) -> Result<Vec<T>> {
    validate(g)?;
    let f = pagerank_formula(k);
    check(g, &f, &Valuation::new().with("x", 0))?;
    let vars = vec!["x".to_string()];
    Ok((0..g.size()).map(|a| evaluate_at::<T>(g, &f, &vars, &[a])).collect())
}

/// The iteration `PR_{k+1}(x) = Σ_{y → x} PR_k(y) / |OUT_y|` computed directly.
pub fn pagerank_direct(g: &GeneralStructure, k: usize) -> Result<Vec<f64>> {
    validate(g)?;
    let n = g.size();
    let out: Vec<f64> = (0..n).map(|a| g.out_degree(a) as f64).collect();
    let mut pr = vec![1.0 / n as f64; n];
    for _ in 0..k {
        let mut next = vec![0.0; n];
        for y in 0..n {
            for x in 0..n {
                if g.holds(Sym::Edge, &[y, x]) {
                    next[x] += pr[y] / out[y];
                }
            }
        }
        pr = next;
    }
    Ok(pr)
}

/// Parses an edge list: one `a b` pair per line, `#` comments, and an
/// optional `nodes N` line; otherwise the size is one more than the largest id.
pub fn read_graph(text: &str) -> Result<GeneralStructure> {
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let mut size = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse { line: i + 1, col: 1, msg: msg.to_string() };
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["nodes", n] => size = Some(n.parse().map_err(|_| err("bad node count"))?),
            [a, b] => edges.push((a.parse().map_err(|_| err("bad node id"))?, b.parse().map_err(|_| err("bad node id"))?)),
            _ => return Err(err("expected `a b` or `nodes N`")),
        }
    }
    let size = size.unwrap_or_else(|| edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0));
    GeneralStructure::from_edges(size, &edges)
}
