//! First-order formulas and their embedding into PLA*.

use super::formula::{Formula, Var};
use super::registry::{Aggregation, Connective};
use super::signature::Sym;

#[derive(Clone, Debug, PartialEq)]
pub enum Fo {
    Top,
    Bottom,
    Eq(Var, Var),
    Atom { sym: Sym, name: String, args: Vec<Var> },
    Not(Box<Fo>),
    And(Box<Fo>, Box<Fo>),
    Or(Box<Fo>, Box<Fo>),
    Implies(Box<Fo>, Box<Fo>),
    Exists(Var, Box<Fo>),
    Forall(Var, Box<Fo>),
}

/// ∃y ↦ max(· : y : ⊤), ∀y ↦ min(· : y : ⊤), Boolean connectives ↦ their
/// many-valued counterparts, which agree on {0, 1}.
pub fn embed_fo(fo: &Fo) -> Formula {
    let bin = |c: Connective, a: &Fo, b: &Fo| Formula::Conn(c, vec![embed_fo(a), embed_fo(b)]);
    match fo {
        Fo::Top => Formula::top(),
        Fo::Bottom => Formula::bottom(),
        Fo::Eq(a, b) => Formula::Eq(a.clone(), b.clone()),
        Fo::Atom { sym, name, args } => Formula::Atom { sym: *sym, name: name.clone(), args: args.clone() },
        Fo::Not(a) => Formula::Conn(Connective::Not, vec![embed_fo(a)]),
        Fo::And(a, b) => bin(Connective::And, a, b),
        Fo::Or(a, b) => bin(Connective::Or, a, b),
        Fo::Implies(a, b) => bin(Connective::Implies, a, b),
        Fo::Exists(y, a) => Formula::agg(Aggregation::Max, vec![embed_fo(a)], vec![y.clone()], vec![Formula::top()]),
        Fo::Forall(y, a) => Formula::agg(Aggregation::Min, vec![embed_fo(a)], vec![y.clone()], vec![Formula::top()]),
    }
}
