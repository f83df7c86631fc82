use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::registry::{Aggregation, Connective};
use super::signature::{Signature, Sym};
use crate::types::ClosureType;

pub type Var = String;

/// A PLA* formula.
#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    Const(BigRational),
    Eq(Var, Var),
    Atom { sym: Sym, name: String, args: Vec<Var> },
    Conn(Connective, Vec<Formula>),
    Agg(Box<Aggregate>),
    /// A closure type used as a formula: 1 on tuples realizing it, 0 elsewhere.
    Type(Box<TypeAtom>),
}

/// `F(φ₁, …, φₘ : ȳ : χ₁, …, χₘ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub func: Aggregation,
    pub body: Vec<Formula>,
    pub bound: Vec<Var>,
    pub cond: Vec<Formula>,
}

#[derive(Clone, Debug)]
pub struct TypeAtom {
    pub ty: ClosureType,
    /// One name per type variable; the first `ty.outer()` are free.
    pub names: Vec<Var>,
    pub sig: Arc<Signature>,
}

impl PartialEq for TypeAtom {
    fn eq(&self, other: &Self) -> bool {
        self.ty == other.ty && self.names[..self.ty.outer()] == other.names[..other.ty.outer()]
    }
}

impl TypeAtom {
    pub fn free(&self) -> &[Var] {
        &self.names[..self.ty.outer()]
    }

    /// The type with witnesses named `w0, w1, …` avoiding the free names.
    pub fn new(ty: ClosureType, free: Vec<Var>, sig: Arc<Signature>) -> TypeAtom {
        let mut names = free;
        let mut i = 0;
        while names.len() < ty.len() {
            let cand = format!("w{}", i);
            i += 1;
            if !names.contains(&cand) {
                names.push(cand);
            }
        }
        TypeAtom { ty, names, sig }
    }
}

impl Formula {
    pub fn constant(q: BigRational) -> Formula {
        Formula::Const(q)
    }

    pub fn top() -> Formula {
        Formula::Const(BigRational::one())
    }

    pub fn bottom() -> Formula {
        Formula::Const(BigRational::zero())
    }

    pub fn conn(c: Connective, args: Vec<Formula>) -> Formula {
        Formula::Conn(c, args)
    }

    pub fn agg(func: Aggregation, body: Vec<Formula>, bound: Vec<Var>, cond: Vec<Formula>) -> Formula {
        Formula::Agg(Box::new(Aggregate { func, body, bound, cond }))
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::Const(_) => {}
            Formula::Eq(a, b) => {
                out.insert(a.clone());
                out.insert(b.clone());
            }
            Formula::Atom { args, .. } => out.extend(args.iter().cloned()),
            Formula::Conn(_, args) => args.iter().for_each(|a| a.collect_free(out)),
            Formula::Agg(a) => {
                let mut inner = BTreeSet::new();
                a.body.iter().chain(&a.cond).for_each(|f| f.collect_free(&mut inner));
                out.extend(inner.into_iter().filter(|v| !a.bound.contains(v)));
            }
            Formula::Type(t) => out.extend(t.free().iter().cloned()),
        }
    }

    /// Relation symbols other than `E` that occur in the formula.
    pub fn relations(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| match f {
            Formula::Atom { sym: Sym::Rel(r), .. } => {
                out.insert(*r);
            }
            Formula::Type(t) => out.extend(t.ty.rels_used()),
            _ => {}
        });
        out
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        match self {
            Formula::Conn(_, args) => args.iter().for_each(|a| a.walk(f)),
            Formula::Agg(a) => a.body.iter().chain(&a.cond).for_each(|x| x.walk(f)),
            _ => {}
        }
    }

    pub fn is_aggregation_free(&self) -> bool {
        let mut free = true;
        self.walk(&mut |f| free &= !matches!(f, Formula::Agg(_)));
        free
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Conn(_, args) => 1 + args.iter().map(Formula::depth).max().unwrap_or(0),
            Formula::Agg(a) => 1 + a.body.iter().chain(&a.cond).map(Formula::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Capture-avoiding renaming of free variables.
    pub fn rename(&self, map: &[(Var, Var)]) -> Formula {
        let sub = |v: &Var| map.iter().find(|(a, _)| a == v).map(|(_, b)| b.clone()).unwrap_or_else(|| v.clone());
        match self {
            Formula::Const(_) => self.clone(),
            Formula::Eq(a, b) => Formula::Eq(sub(a), sub(b)),
            Formula::Atom { sym, name, args } => {
                Formula::Atom { sym: *sym, name: name.clone(), args: args.iter().map(sub).collect() }
            }
            Formula::Conn(c, args) => Formula::Conn(c.clone(), args.iter().map(|a| a.rename(map)).collect()),
            Formula::Agg(a) => {
                let targets: BTreeSet<Var> = map.iter().map(|(_, b)| b.clone()).collect();
                let mut inner: Vec<(Var, Var)> = map.iter().filter(|(v, _)| !a.bound.contains(v)).cloned().collect();
                let mut taken: BTreeSet<Var> = targets.clone();
                taken.extend(self.all_vars());
                let mut bound = Vec::new();
                for y in &a.bound {
                    if targets.contains(y) {
                        let fresh = fresh_name(y, &taken);
                        taken.insert(fresh.clone());
                        inner.push((y.clone(), fresh.clone()));
                        bound.push(fresh);
                    } else {
                        bound.push(y.clone());
                    }
                }
                Formula::agg(
                    a.func.clone(),
                    a.body.iter().map(|f| f.rename(&inner)).collect(),
                    bound,
                    a.cond.iter().map(|f| f.rename(&inner)).collect(),
                )
            }
            Formula::Type(t) => {
                let mut names: Vec<Var> = t.free().iter().map(sub).collect();
                let mut taken: BTreeSet<Var> = names.iter().cloned().collect();
                taken.extend(t.names.iter().cloned());
                for w in &t.names[t.ty.outer()..] {
                    let w = if names.contains(w) { fresh_name(w, &taken) } else { w.clone() };
                    taken.insert(w.clone());
                    names.push(w);
                }
                Formula::Type(Box::new(TypeAtom { ty: t.ty.clone(), names, sig: t.sig.clone() }))
            }
        }
    }

    fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| match f {
            Formula::Eq(a, b) => {
                out.insert(a.clone());
                out.insert(b.clone());
            }
            Formula::Atom { args, .. } => out.extend(args.iter().cloned()),
            Formula::Agg(a) => out.extend(a.bound.iter().cloned()),
            Formula::Type(t) => out.extend(t.names.iter().cloned()),
            _ => {}
        });
        out
    }
}

pub fn fresh_name(base: &str, taken: &BTreeSet<Var>) -> Var {
    (1..).map(|i| format!("{}_{}", base, i)).find(|c| !taken.contains(c)).unwrap()
}

fn fmt_list(f: &mut fmt::Formatter<'_>, items: &[Formula]) -> fmt::Result {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{}", x)?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Const(q) => write!(f, "{}", q),
            Formula::Eq(a, b) => write!(f, "{} = {}", a, b),
            Formula::Atom { name, args, .. } => write!(f, "{}({})", name, args.join(", ")),
            Formula::Conn(c, args) => {
                if let Connective::AffineClamp { weights, bias } = c {
                    let ps: Vec<String> = weights.iter().chain([bias]).map(|w| w.to_string()).collect();
                    write!(f, "affine({})", ps.join(", "))?;
                } else {
                    write!(f, "{}", c.name())?;
                }
                write!(f, "(")?;
                fmt_list(f, args)?;
                write!(f, ")")
            }
            Formula::Agg(a) => {
                match &a.func {
                    Aggregation::LengthPow(b) => write!(f, "lengthpow({})", b)?,
                    func => write!(f, "{}", func.name())?,
                }
                write!(f, "(")?;
                fmt_list(f, &a.body)?;
                write!(f, " : {} : ", a.bound.join(", "))?;
                fmt_list(f, &a.cond)?;
                write!(f, ")")
            }
            Formula::Type(t) => write!(f, "{}", t.ty.render(&t.names, &t.sig)),
        }
    }
}
