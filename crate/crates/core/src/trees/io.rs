use std::fmt::Write;
use std::path::PathBuf;

use super::generate::{generate_tree, LevelCount, Profile, TreeGenConfig};
use super::tree::Tree;
use crate::error::{Error, Result};

/// Serializes a tree as `tree v1` text.
pub fn write_tree(t: &Tree) -> String {
    let mut out = format!("tree v1\nn={}\n", t.len());
    for (v, p) in t.parents().iter().enumerate() {
        match p {
            Some(p) => writeln!(out, "{} {}", v, p).unwrap(),
            None => writeln!(out, "{} -", v).unwrap(),
        }
    }
    out
}

pub fn read_tree(text: &str) -> Result<Tree> {
    let bad = |m: &str| Error::InvalidTree(m.to_string());
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    if lines.next() != Some("tree v1") {
        return Err(bad("missing `tree v1` header"));
    }
    let n: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("n="))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| bad("missing `n=<count>` line"))?;
    let mut parents = vec![None; n];
    let mut seen = vec![false; n];
    for line in lines {
        let mut parts = line.split_whitespace();
        let (Some(id), Some(p), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad(&format!("malformed line `{}`", line)));
        };
        let id: usize = id.parse().map_err(|_| bad(&format!("bad node id `{}`", id)))?;
        if id >= n || seen[id] {
            return Err(bad(&format!("node id {} out of range or repeated", id)));
        }
        seen[id] = true;
        parents[id] = match p {
            "-" => None,
            p => Some(p.parse().map_err(|_| bad(&format!("bad parent `{}`", p)))?),
        };
    }
    if let Some(v) = seen.iter().position(|s| !s) {
        return Err(bad(&format!("node {} is not listed", v)));
    }
    Tree::new(&parents)
}

/// A tree source given on the command line or in an experiment spec.
#[derive(Clone, Debug)]
pub enum TreeSpec {
    Generated(TreeGenConfig),
    File(PathBuf),
}

impl TreeSpec {
    /// Parses `uniform:delta=2,n=50`, `schedule:n=3,levels=1x1/2x2`,
    /// `mixed-leaves:n=40`, `few-big:n=21` or `file:path`.
    pub fn parse(s: &str) -> Result<TreeSpec> {
        let bad = |m: String| Error::InvalidSpec(m);
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        if kind == "file" {
            return Ok(TreeSpec::File(PathBuf::from(rest)));
        }
        let mut delta = None;
        let mut n = None;
        let mut levels = None;
        for kv in rest.split(',').filter(|kv| !kv.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{}`", kv)))?;
            let num = || v.parse::<usize>().map_err(|_| bad(format!("bad number `{}`", v)));
            match k {
                "delta" => delta = Some(num()?),
                "n" => n = Some(num()?),
                "levels" => levels = Some(parse_levels(v)?),
                _ => return Err(bad(format!("unknown key `{}`", k))),
            }
        }
        let n = n.ok_or_else(|| bad("missing n".into()))?;
        let cfg = match kind {
            "uniform" => TreeGenConfig::uniform(delta.ok_or_else(|| bad("missing delta".into()))?, n),
            "schedule" => {
                let levels = levels.ok_or_else(|| bad("missing levels".into()))?;
                TreeGenConfig { height: levels.len(), profile: Profile::Schedule(levels), n }
            }
            "mixed-leaves" => TreeGenConfig::mixed_leaves(n),
            "few-big" => TreeGenConfig::few_big(n),
            _ => return Err(bad(format!("unknown tree kind `{}`", kind))),
        };
        Ok(TreeSpec::Generated(cfg))
    }

    pub fn build(&self) -> Result<Tree> {
        match self {
            TreeSpec::Generated(cfg) => generate_tree(cfg),
            TreeSpec::File(p) => read_tree(&std::fs::read_to_string(p)?),
        }
    }
}

fn parse_levels(v: &str) -> Result<Vec<LevelCount>> {
    v.split('/')
        .map(|item| {
            let (c, e) = item.split_once('x').unwrap_or((item, "1"));
            match (c.parse(), e.parse()) {
                (Ok(coef), Ok(exp)) => Ok(LevelCount { coef, exp }),
                _ => Err(Error::InvalidSpec(format!("bad level count `{}`", item))),
            }
        })
        .collect()
}
