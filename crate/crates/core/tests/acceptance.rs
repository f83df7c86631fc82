//! Acceptance criteria 1 to 9. Prints one PASS/FAIL line per criterion.
//!
//! The process exits with status 0 even when a criterion fails, so that the
//! workspace test run reports every line; set `PLA_ACCEPTANCE_STRICT=1` to turn
//! failures into a non-zero exit status.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pla::eliminate::{check_asymptotic_equivalence, convergence_constant, eliminate, EliminationOptions};
use pla::harness::{check_battery, pagerank_direct, pagerank_pla};
use pla::logic::{embed_fo, evaluate, Fo, Formula, GeneralStructure, Parser, SigmaStructure, Signature, Structure, Sym};
use pla::network::{estimate, ExactDistribution, ExactOptions, Network};
use pla::scalar::ratio;
use pla::trees::{generate_tree, Assumption, Tree, TreeGenConfig};
use pla::types::ClosureType;
use pla::{Valuation, Value};

const EXAMPLE_NETWORK: &str = include_str!("data/example_network.pla");
const UNIFORM_HALF: &str = include_str!("data/uniform_half.pla");

type Q = BigRational;

fn q(n: i64, d: i64) -> Q {
    ratio(n, d)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// ---------------------------------------------------------------------------
// Criterion 1: evaluator against a reference written from the definitions.

const VARS: [&str; 3] = ["x", "y", "z"];

#[derive(Clone, Debug)]
enum TypeT {
    /// v is the root.
    Root,
    /// v is a child of the root.
    Depth1,
    /// v is on level 2 and U holds at its parent.
    Depth2U,
    /// u is the root and v a child of u.
    RootChild,
    /// u, v are distinct children of the root and B(u, v) fails.
    SiblingsNotB,
    /// u is a child of the root, v a child of u, and B(u, v).
    ChildB,
}

impl TypeT {
    fn arity(&self) -> usize {
        match self {
            TypeT::Root | TypeT::Depth1 | TypeT::Depth2U => 1,
            _ => 2,
        }
    }

    fn text(&self, v: &[usize]) -> String {
        let a = VARS[v[0]];
        match self {
            TypeT::Root => format!("closed{{ {} }}", a),
            TypeT::Depth1 => format!("closed{{ exists r; E(r, {}) }}", a),
            TypeT::Depth2U => format!("closed{{ exists r, s; E(r, s); E(s, {}); U(s) }}", a),
            TypeT::RootChild => format!("closed{{ {a}; E({a}, {b}) }}", a = a, b = VARS[v[1]]),
            TypeT::SiblingsNotB => format!("closed{{ exists r; E(r, {a}); E(r, {b}); !B({a}, {b}) }}", a = a, b = VARS[v[1]]),
            TypeT::ChildB => format!("closed{{ exists r; E(r, {a}); E({a}, {b}); B({a}, {b}) }}", a = a, b = VARS[v[1]]),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum AggK {
    Max,
    Min,
    Am,
    Gm,
    Len1,
    LenHalf,
    TSum,
    NoisyOr,
}

#[derive(Clone, Debug)]
enum RF {
    Const(i64, i64),
    Eq(usize, usize),
    U(usize),
    B(usize, usize),
    E(usize, usize),
    Ty(TypeT, Vec<usize>),
    Not(Box<RF>),
    And(Vec<RF>),
    Or(Vec<RF>),
    Imp(Box<RF>, Box<RF>),
    Prod(Vec<RF>),
    Affine(Vec<(i64, i64)>, (i64, i64), Vec<RF>),
    Agg(AggK, Box<RF>, Vec<usize>, Box<RF>),
    Exists(usize, Box<RF>),
    Forall(usize, Box<RF>),
}

fn join(xs: &[RF]) -> String {
    xs.iter().map(render).collect::<Vec<_>>().join(", ")
}

fn render(f: &RF) -> String {
    match f {
        RF::Const(n, d) => format!("{}/{}", n, d),
        RF::Eq(a, b) => format!("{} = {}", VARS[*a], VARS[*b]),
        RF::U(a) => format!("U({})", VARS[*a]),
        RF::B(a, b) => format!("B({}, {})", VARS[*a], VARS[*b]),
        RF::E(a, b) => format!("E({}, {})", VARS[*a], VARS[*b]),
        RF::Ty(t, v) => t.text(v),
        RF::Not(a) => format!("not({})", render(a)),
        RF::And(xs) => format!("and({})", join(xs)),
        RF::Or(xs) => format!("or({})", join(xs)),
        RF::Imp(a, b) => format!("implies({}, {})", render(a), render(b)),
        RF::Prod(xs) => format!("product({})", join(xs)),
        RF::Affine(w, b, xs) => {
            let ws: Vec<String> = w.iter().chain(std::iter::once(b)).map(|(n, d)| format!("{}/{}", n, d)).collect();
            format!("affine({})({})", ws.join(", "), join(xs))
        }
        RF::Agg(k, body, bound, cond) => {
            let name = match k {
                AggK::Max => "max",
                AggK::Min => "min",
                AggK::Am => "am",
                AggK::Gm => "gm",
                AggK::Len1 => "lengthpow(1)",
                AggK::LenHalf => "lengthpow(1/2)",
                AggK::TSum => "tsum",
                AggK::NoisyOr => "noisyor",
            };
            let vs: Vec<&str> = bound.iter().map(|&v| VARS[v]).collect();
            format!("{}({} : {} : {})", name, render(body), vs.join(", "), render(cond))
        }
        RF::Exists(v, a) => format!("exists {} ({})", VARS[*v], render(a)),
        RF::Forall(v, a) => format!("forall {} ({})", VARS[*v], render(a)),
    }
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
}

impl Gen<'_> {
    fn var(&mut self) -> usize {
        self.rng.gen_range(0..3)
    }

    fn distinct_pair(&mut self) -> Vec<usize> {
        let a = self.var();
        let b = (a + self.rng.gen_range(1..3)) % 3;
        vec![a, b]
    }

    fn type_atom(&mut self, first: Option<usize>) -> RF {
        let t = match self.rng.gen_range(0..6) {
            0 => TypeT::Root,
            1 => TypeT::Depth1,
            2 => TypeT::Depth2U,
            3 => TypeT::RootChild,
            4 => TypeT::SiblingsNotB,
            _ => TypeT::ChildB,
        };
        let mut vars = if t.arity() == 1 { vec![self.var()] } else { self.distinct_pair() };
        if let Some(v) = first {
            let other = vars.iter().position(|&w| w == v);
            match other {
                Some(i) => vars.swap(0, i),
                None => vars[0] = v,
            }
            if self.rng.gen_bool(0.5) && vars.len() == 2 {
                vars.swap(0, 1);
            }
        }
        RF::Ty(t, vars)
    }

    fn atom(&mut self) -> RF {
        match self.rng.gen_range(0..6) {
            0 => RF::Eq(self.var(), self.var()),
            1 => RF::U(self.var()),
            2 => RF::B(self.var(), self.var()),
            3 => RF::E(self.var(), self.var()),
            _ => self.type_atom(None),
        }
    }

    /// A variable outside `bound` (a bitmask), if any.
    fn free_var(&mut self, bound: u8) -> Option<usize> {
        let open: Vec<usize> = (0..3).filter(|v| bound & (1 << v) == 0).collect();
        open.choose(self.rng).copied()
    }

    /// 0/1-valued formulas, used as aggregation conditions.
    fn boolean(&mut self, depth: usize, bound: u8) -> RF {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return self.atom();
        }
        let d = depth - 1;
        match self.rng.gen_range(0..5) {
            0 => RF::Not(Box::new(self.boolean(d, bound))),
            1 => RF::And(vec![self.boolean(d, bound), self.boolean(d, bound)]),
            2 => RF::Or(vec![self.boolean(d, bound), self.boolean(d, bound)]),
            k => match self.free_var(bound) {
                Some(v) if k == 3 => RF::Exists(v, Box::new(self.boolean(d, bound | 1 << v))),
                Some(v) => RF::Forall(v, Box::new(self.boolean(d, bound | 1 << v))),
                None => self.atom(),
            },
        }
    }

    fn constant(&mut self) -> RF {
        let choices = [(0, 1), (1, 1), (1, 2), (1, 3), (2, 3), (1, 4), (3, 4), (1, 5)];
        let (n, d) = choices[self.rng.gen_range(0..choices.len())];
        RF::Const(n, d)
    }

    fn formula(&mut self, depth: usize, bound: u8) -> RF {
        if depth == 0 || self.rng.gen_bool(0.2) {
            return if self.rng.gen_bool(0.25) { self.constant() } else { self.atom() };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..10) {
            0 => RF::Not(Box::new(self.formula(d, bound))),
            1 => RF::And(vec![self.formula(d, bound), self.formula(d, bound)]),
            2 => RF::Or(vec![self.formula(d, bound), self.formula(d, bound), self.formula(d, bound)]),
            3 => RF::Imp(Box::new(self.formula(d, bound)), Box::new(self.formula(d, bound))),
            4 => RF::Prod(vec![self.formula(d, bound), self.formula(d, bound)]),
            5 => RF::Affine(vec![(1, 2), (1, 3)], (1, 6), vec![self.formula(d, bound), self.formula(d, bound)]),
            6 => match self.free_var(bound) {
                Some(v) if self.rng.gen_bool(0.5) => RF::Exists(v, Box::new(self.formula(d, bound | 1 << v))),
                Some(v) => RF::Forall(v, Box::new(self.formula(d, bound | 1 << v))),
                None => self.atom(),
            },
            _ => {
                let Some(v) = self.free_var(bound) else { return self.atom() };
                let mut vars = vec![v];
                if self.rng.gen_bool(0.2) {
                    if let Some(w) = self.free_var(bound | 1 << v) {
                        vars.push(w);
                    }
                }
                let inner = vars.iter().fold(bound, |m, &w| m | 1 << w);
                let k = [AggK::Max, AggK::Min, AggK::Am, AggK::Gm, AggK::Len1, AggK::LenHalf, AggK::TSum, AggK::NoisyOr]
                    [self.rng.gen_range(0..8)];
                let cond = if self.rng.gen_bool(0.5) { self.type_atom(Some(v)) } else { self.boolean(d.min(2), inner) };
                RF::Agg(k, Box::new(self.formula(d, inner)), vars, Box::new(cond))
            }
        }
    }
}

/// Reference values: exact when every step is rational, floating otherwise.
#[derive(Clone, Debug)]
enum RV {
    Q(Q),
    F(f64),
}

impl RV {
    fn f(&self) -> f64 {
        match self {
            RV::Q(x) => x.to_f64().unwrap(),
            RV::F(x) => *x,
        }
    }

    fn lift(a: &RV, b: &RV, fq: impl Fn(&Q, &Q) -> Q, ff: impl Fn(f64, f64) -> f64) -> RV {
        match (a, b) {
            (RV::Q(x), RV::Q(y)) => RV::Q(fq(x, y)),
            _ => RV::F(ff(a.f(), b.f())),
        }
    }

    fn truth(b: bool) -> RV {
        RV::Q(if b { Q::one() } else { Q::zero() })
    }

    fn is_one(&self) -> bool {
        matches!(self, RV::Q(x) if x.is_one())
    }
}

fn rv_min(a: &RV, b: &RV) -> RV {
    RV::lift(a, b, |x, y| x.min(y).clone(), f64::min)
}

fn rv_max(a: &RV, b: &RV) -> RV {
    RV::lift(a, b, |x, y| x.max(y).clone(), f64::max)
}

fn rv_add(a: &RV, b: &RV) -> RV {
    RV::lift(a, b, |x, y| x + y, |x, y| x + y)
}

fn rv_mul(a: &RV, b: &RV) -> RV {
    RV::lift(a, b, |x, y| x * y, |x, y| x * y)
}

fn rv_sub(a: &RV, b: &RV) -> RV {
    RV::lift(a, b, |x, y| x - y, |x, y| x - y)
}

fn rv_clamp(a: RV) -> RV {
    rv_max(&rv_min(&a, &RV::Q(Q::one())), &RV::Q(Q::zero()))
}

struct RefWorld {
    n: usize,
    parent: Vec<Option<usize>>,
    u: Vec<bool>,
    b: Vec<Vec<bool>>,
}

impl RefWorld {
    fn depth(&self, v: usize) -> usize {
        let mut d = 0;
        let mut c = v;
        while let Some(p) = self.parent[c] {
            d += 1;
            c = p;
        }
        d
    }

    fn edge(&self, a: usize, b: usize) -> bool {
        self.parent[b] == Some(a)
    }

    fn type_holds(&self, t: &TypeT, a: &[usize]) -> bool {
        if a.len() == 2 && a[0] == a[1] {
            return false;
        }
        match t {
            TypeT::Root => self.parent[a[0]].is_none(),
            TypeT::Depth1 => self.depth(a[0]) == 1,
            TypeT::Depth2U => self.depth(a[0]) == 2 && self.u[self.parent[a[0]].unwrap()],
            TypeT::RootChild => self.parent[a[0]].is_none() && self.edge(a[0], a[1]),
            TypeT::SiblingsNotB => self.depth(a[0]) == 1 && self.depth(a[1]) == 1 && !self.b[a[0]][a[1]],
            TypeT::ChildB => self.depth(a[0]) == 1 && self.edge(a[0], a[1]) && self.b[a[0]][a[1]],
        }
    }

    fn eval(&self, f: &RF, env: &mut [usize; 3]) -> RV {
        match f {
            RF::Const(n, d) => RV::Q(q(*n, *d)),
            RF::Eq(a, b) => RV::truth(env[*a] == env[*b]),
            RF::U(a) => RV::truth(self.u[env[*a]]),
            RF::B(a, b) => RV::truth(self.b[env[*a]][env[*b]]),
            RF::E(a, b) => RV::truth(self.edge(env[*a], env[*b])),
            RF::Ty(t, v) => {
                let nodes: Vec<usize> = v.iter().map(|&i| env[i]).collect();
                RV::truth(self.type_holds(t, &nodes))
            }
            RF::Not(a) => rv_sub(&RV::Q(Q::one()), &self.eval(a, env)),
            RF::And(xs) => xs.iter().map(|x| self.eval(x, env)).reduce(|a, b| rv_min(&a, &b)).unwrap(),
            RF::Or(xs) => xs.iter().map(|x| self.eval(x, env)).reduce(|a, b| rv_max(&a, &b)).unwrap(),
            RF::Imp(a, b) => {
                let (x, y) = (self.eval(a, env), self.eval(b, env));
                rv_min(&RV::Q(Q::one()), &rv_add(&rv_sub(&RV::Q(Q::one()), &x), &y))
            }
            RF::Prod(xs) => xs.iter().map(|x| self.eval(x, env)).fold(RV::Q(Q::one()), |a, b| rv_mul(&a, &b)),
            RF::Affine(w, b, xs) => {
                let mut acc = RV::Q(q(b.0, b.1));
                for ((n, d), x) in w.iter().zip(xs) {
                    acc = rv_add(&acc, &rv_mul(&RV::Q(q(*n, *d)), &self.eval(x, env)));
                }
                rv_clamp(acc)
            }
            RF::Exists(v, a) | RF::Forall(v, a) => {
                let saved = env[*v];
                let mut vals = Vec::new();
                for c in 0..self.n {
                    env[*v] = c;
                    vals.push(self.eval(a, env));
                }
                env[*v] = saved;
                let pick = if matches!(f, RF::Exists(..)) { rv_max } else { rv_min };
                vals.into_iter().reduce(|a, b| pick(&a, &b)).unwrap()
            }
            RF::Agg(k, body, bound, cond) => {
                let saved = *env;
                let mut vals = Vec::new();
                let total = self.n.pow(bound.len() as u32);
                for code in 0..total {
                    let mut c = code;
                    for &v in bound.iter().rev() {
                        env[v] = c % self.n;
                        c /= self.n;
                    }
                    if self.eval(cond, env).is_one() {
                        vals.push(self.eval(body, env));
                    }
                }
                *env = saved;
                aggregate(*k, &vals)
            }
        }
    }
}

fn aggregate(k: AggK, xs: &[RV]) -> RV {
    if xs.is_empty() {
        return RV::Q(Q::zero());
    }
    let len = xs.len();
    let sum = || xs.iter().fold(RV::Q(Q::zero()), |a, b| rv_add(&a, b));
    match k {
        AggK::Max => xs.iter().cloned().reduce(|a, b| rv_max(&a, &b)).unwrap(),
        AggK::Min => xs.iter().cloned().reduce(|a, b| rv_min(&a, &b)).unwrap(),
        AggK::Am => rv_mul(&sum(), &RV::Q(q(1, len as i64))),
        AggK::Gm => {
            let p = xs.iter().fold(RV::Q(Q::one()), |a, b| rv_mul(&a, b));
            match p {
                RV::Q(ref x) if x.is_zero() => p,
                _ => RV::F(p.f().powf(1.0 / len as f64)),
            }
        }
        AggK::Len1 => RV::Q(q(1, len as i64)),
        AggK::LenHalf => RV::F((len as f64).powf(-0.5)),
        AggK::TSum => rv_min(&sum(), &RV::Q(Q::one())),
        AggK::NoisyOr => {
            let p = xs.iter().fold(RV::Q(Q::one()), |a, b| rv_mul(&a, &rv_sub(&RV::Q(Q::one()), b)));
            rv_sub(&RV::Q(Q::one()), &p)
        }
    }
}

fn random_small_tree(rng: &mut ChaCha8Rng, max_nodes: usize) -> Vec<Option<usize>> {
    let n = rng.gen_range(1..=max_nodes);
    let mut parent = vec![None];
    let mut depth = vec![0];
    for _ in 1..n {
        let candidates: Vec<usize> = (0..parent.len()).filter(|&v| depth[v] < 2).collect();
        let p = *candidates.choose(rng).unwrap();
        parent.push(Some(p));
        depth.push(depth[p] + 1);
    }
    parent
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let sig = Arc::new(Signature::new([("U", 1), ("B", 2)]).unwrap());
    let (mut exact, mut approx, mut bad) = (0, 0, Vec::new());
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let parent = random_small_tree(&mut rng, 7);
        let n = parent.len();
        let world = RefWorld {
            n,
            u: (0..n).map(|_| rng.gen_bool(0.5)).collect(),
            b: (0..n).map(|_| (0..n).map(|_| rng.gen_bool(0.5)).collect()).collect(),
            parent: parent.clone(),
        };
        let tree = Arc::new(Tree::new(&parent).unwrap());
        let mut st = SigmaStructure::empty(tree, sig.clone()).unwrap();
        for a in 0..n {
            st.set(0, &[a], world.u[a]);
            for b in 0..n {
                st.set(1, &[a, b], world.b[a][b]);
            }
        }
        let rf = Gen { rng: &mut rng }.formula(4, 0);
        let text = render(&rf);
        let f = match Parser::new(sig.clone()).parse(&text) {
            Ok(f) => f,
            Err(e) => {
                bad.push(format!("#{} parse error {}: {}", i, e, text));
                continue;
            }
        };
        for _ in 0..12 {
            let mut env = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
            let val = Valuation::from_pairs(VARS.iter().zip(env.iter()).map(|(v, a)| (*v, *a)));
            let got: Value = evaluate(&st, &f, &val).unwrap();
            let want = world.eval(&rf, &mut env);
            let ok = match (&got, &want) {
                (Value::Exact(a), RV::Q(b)) => {
                    exact += 1;
                    a == b
                }
                _ => {
                    approx += 1;
                    let d = (got.to_f64_value() - want.f()).abs();
                    worst = worst.max(d);
                    d <= 1e-12
                }
            };
            if !ok && bad.len() < 5 {
                bad.push(format!("#{} {} at {:?}: got {} want {:?}", i, text, env, got, want));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("1000 formulas, {} exact and {} floating comparisons, worst float gap {:.1e}{}", exact, approx, worst, first(&bad)),
    )
}

fn first(bad: &[String]) -> String {
    bad.first().map(|b| format!("; first mismatch {}", b)).unwrap_or_default()
}

trait ToF64Value {
    fn to_f64_value(&self) -> f64;
}

impl ToF64Value for Value {
    fn to_f64_value(&self) -> f64 {
        match self {
            Value::Exact(q) => q.to_f64().unwrap(),
            Value::Approx(x) => *x,
        }
    }
}

// ---------------------------------------------------------------------------
// Criteria 2 and 3: exact tables, the conditioning lemma, sampler calibration.

struct Instance {
    tree: Arc<Tree>,
    net: Network,
    text: String,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    loop {
        let parent = random_small_tree(rng, 4);
        let n = parent.len();
        if n < 2 {
            continue;
        }
        let k = rng.gen_range(2..=3);
        let mut arities = Vec::new();
        let mut budget = 20;
        for i in 0..k {
            let a = if i > 0 && n <= 3 && rng.gen_bool(0.3) { 2 } else { 1 };
            if n.pow(a as u32) > budget {
                break;
            }
            budget -= n.pow(a as u32);
            arities.push(a);
        }
        if arities.len() < 2 {
            continue;
        }
        let names: Vec<String> = (0..arities.len()).map(|i| format!("S{}", i)).collect();
        let mut text = String::from("network v1\n");
        let mut parents: Vec<Vec<usize>> = Vec::new();
        for (i, &a) in arities.iter().enumerate() {
            let ps: Vec<usize> = (0..i).filter(|_| rng.gen_bool(0.7)).collect();
            let pn: Vec<&str> = ps.iter().map(|&p| names[p].as_str()).collect();
            text += &format!("relation {} arity={} parents={}\n", names[i], a, pn.join(","));
            parents.push(ps);
        }
        let consts = ["0", "1", "1/2", "1/3", "2/3", "1/4", "3/5"];
        let c = |rng: &mut ChaCha8Rng| consts[rng.gen_range(0..consts.len())];
        let mut thetas = Vec::new();
        for (i, &a) in arities.iter().enumerate() {
            let vars = if a == 1 { "x" } else { "x, y" };
            let theta = if parents[i].is_empty() {
                match rng.gen_range(0..3) {
                    0 => c(rng).to_string(),
                    1 => format!("or(product(closed{{ x }}, {}), product(not(closed{{ x }}), {}))", c(rng), c(rng)),
                    _ => format!("implies(E(x, {}), {})", if a == 2 { "y" } else { "x" }, c(rng)),
                }
            } else {
                let p = parents[i][rng.gen_range(0..parents[i].len())];
                let atom = |v: &str| {
                    if arities[p] == 1 {
                        format!("{}({})", names[p], v)
                    } else {
                        format!("{}({}, {})", names[p], v, v)
                    }
                };
                match rng.gen_range(0..5) {
                    0 => format!("implies({}, {})", atom("x"), c(rng)),
                    1 => format!("or(product({}, {}), product(not({}), {}))", atom("x"), c(rng), atom("x"), c(rng)),
                    2 => format!("am({} : w : true)", atom("w")),
                    3 => format!("max(and({}, E(x, w)) : w : true)", atom("w")),
                    _ => {
                        if a == 2 {
                            format!("and({}, not({}), {})", atom("x"), atom("y"), c(rng))
                        } else {
                            format!("product({}, noisyor({} : w : closed{{ w }}))", c(rng), atom("w"))
                        }
                    }
                }
            };
            // unary θ must mention x; binary θ must mention both variables
            let theta = if a == 2 && !theta.contains('y') { format!("and({}, or(y = y, 0))", theta) } else { theta };
            let theta = if !theta.contains('x') { format!("and({}, or(x = x, 0))", theta) } else { theta };
            thetas.push(format!("theta {}({}) = {}\n", names[i], vars, theta));
        }
        for t in thetas {
            text += &t;
        }
        let net = Network::parse(&text).unwrap_or_else(|e| panic!("{}\n{}", e, text));
        return Instance { tree: Arc::new(Tree::new(&parent).unwrap()), net, text };
    }
}

fn all_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    pla::types::tuples(n, k).collect()
}

fn criterion_2(instances: &[Instance]) -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        let dist = ExactDistribution::new(&inst.tree, &inst.net, &ExactOptions::default()).unwrap();
        if dist.total() != Value::one() {
            bad.push(format!("instance {} total {}", i, dist.total()));
            continue;
        }
        let sig = inst.net.sig().clone();
        let worlds = dist.worlds();
        let n = inst.tree.len();
        for r in sig.ids() {
            let rel = inst.net.relation(r);
            let anc: Vec<usize> = inst.net.ancestors(rel.parents.iter().copied());
            for args in all_tuples(n, sig.arity(r)) {
                // group worlds by the reduct to the ancestors of R
                let mut groups: BTreeMap<Vec<bool>, (Value, Value, usize)> = BTreeMap::new();
                for (wi, (st, p)) in worlds.iter().enumerate() {
                    let key: Vec<bool> = anc
                        .iter()
                        .flat_map(|&a| all_tuples(n, sig.arity(a)).into_iter().map(move |t| (a, t)))
                        .map(|(a, t)| st.holds(Sym::Rel(a), &t))
                        .collect();
                    let e = groups.entry(key).or_insert((Value::zero(), Value::zero(), wi));
                    e.0 = e.0.clone() + p.clone();
                    if st.holds(Sym::Rel(r), &args) {
                        e.1 = e.1.clone() + p.clone();
                    }
                }
                for (mass, with, wi) in groups.values() {
                    let val = Valuation::from_pairs(rel.vars.iter().map(|v| v.as_str()).zip(args.iter().copied()));
                    let theta: Value = evaluate(&worlds[*wi].0, &rel.theta, &val).unwrap();
                    checked += 1;
                    if with.clone() / mass.clone() != theta && bad.len() < 3 {
                        bad.push(format!("instance {} {}{:?}: {} vs θ {}\n{}", i, sig.name(r), args, with.clone() / mass.clone(), theta, inst.text));
                    }
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("50 instances sum to 1; {} conditional marginals equal θ{}", checked, first(&bad)))
}

fn criterion_3(instances: &[Instance]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut events = Vec::new();
    'outer: for inst in instances {
        let sig = inst.net.sig().clone();
        let dist = ExactDistribution::new(&inst.tree, &inst.net, &ExactOptions::default()).unwrap();
        for _ in 0..10 {
            let r = rng.gen_range(0..sig.len());
            let s = rng.gen_range(0..sig.len());
            let vars = |k: usize| if k == 1 { "x" } else { "x, y" };
            let text = if rng.gen_bool(0.5) {
                format!("{}({})", sig.name(r), vars(sig.arity(r)))
            } else {
                format!("or({}({}), not({}({})))", sig.name(r), vars(sig.arity(r)), sig.name(s), vars(sig.arity(s)))
            };
            let phi = Parser::new(sig.clone()).parse(&text).unwrap();
            let n = inst.tree.len();
            let val = Valuation::new().with("x", rng.gen_range(0..n)).with("y", rng.gen_range(0..n));
            let p = dist.event_probability(&phi, &val).unwrap();
            if !p.is_zero() && !p.is_one() {
                events.push((inst, phi, val, p));
                if events.len() == 20 {
                    break 'outer;
                }
                break;
            }
        }
    }
    let mut good = 0;
    let mut worst: f64 = 0.0;
    for (i, (inst, phi, val, p)) in events.iter().enumerate() {
        let e = estimate(&inst.tree, &inst.net, phi, val, 100_000, 3_000 + i as u64).unwrap();
        let p = p.to_f64_value();
        let se = (p * (1.0 - p) / 1e5).sqrt();
        let z = (e.mean - p).abs() / se;
        worst = worst.max(z);
        if z <= 4.0 {
            good += 1;
        }
    }
    outcome(events.len() == 20 && good >= 19, format!("{}/{} events within 4 SE, largest |z| {:.2}", good, events.len(), worst))
}

// ---------------------------------------------------------------------------
// Criterion 4: FO embedding against a brute-force model checker.

#[derive(Clone, Debug)]
enum FoT {
    Top,
    Bot,
    Eq(usize, usize),
    U(usize),
    B(usize, usize),
    E(usize, usize),
    Not(Box<FoT>),
    And(Box<FoT>, Box<FoT>),
    Or(Box<FoT>, Box<FoT>),
    Imp(Box<FoT>, Box<FoT>),
    Ex(usize, Box<FoT>),
    All(usize, Box<FoT>),
}

fn random_fo(rng: &mut ChaCha8Rng, bound: &[usize], qdepth: usize, size: usize) -> FoT {
    let can_quantify = qdepth > 0;
    if size == 0 || (bound.is_empty() && !can_quantify) || rng.gen_bool(0.15) {
        if bound.is_empty() {
            return if rng.gen_bool(0.5) { FoT::Top } else { FoT::Bot };
        }
        let v = |rng: &mut ChaCha8Rng| bound[rng.gen_range(0..bound.len())];
        return match rng.gen_range(0..4) {
            0 => FoT::Eq(v(rng), v(rng)),
            1 => FoT::U(v(rng)),
            2 => FoT::B(v(rng), v(rng)),
            _ => FoT::E(v(rng), v(rng)),
        };
    }
    let b = |rng: &mut ChaCha8Rng| Box::new(random_fo(rng, bound, qdepth, size - 1));
    match rng.gen_range(0..if can_quantify { 7 } else { 4 }) {
        0 => FoT::Not(b(rng)),
        1 => FoT::And(b(rng), b(rng)),
        2 => FoT::Or(b(rng), b(rng)),
        3 => FoT::Imp(b(rng), b(rng)),
        k => {
            let v = bound.len().min(2) + rng.gen_range(0..2);
            let mut inner = bound.to_vec();
            inner.push(v);
            let body = Box::new(random_fo(rng, &inner, qdepth - 1, size - 1));
            if k % 2 == 0 {
                FoT::Ex(v, body)
            } else {
                FoT::All(v, body)
            }
        }
    }
}

const FO_VARS: [&str; 4] = ["a", "b", "c", "d"];

fn to_library(f: &FoT, sig: &Signature) -> Fo {
    let atom = |name: &str, args: &[usize]| Fo::Atom {
        sym: if name == "E" { Sym::Edge } else { sig.sym(name).unwrap() },
        name: name.to_string(),
        args: args.iter().map(|&v| FO_VARS[v].to_string()).collect(),
    };
    let bx = |g: &FoT| Box::new(to_library(g, sig));
    match f {
        FoT::Top => Fo::Top,
        FoT::Bot => Fo::Bottom,
        FoT::Eq(a, b) => Fo::Eq(FO_VARS[*a].into(), FO_VARS[*b].into()),
        FoT::U(a) => atom("U", &[*a]),
        FoT::B(a, b) => atom("B", &[*a, *b]),
        FoT::E(a, b) => atom("E", &[*a, *b]),
        FoT::Not(a) => Fo::Not(bx(a)),
        FoT::And(a, b) => Fo::And(bx(a), bx(b)),
        FoT::Or(a, b) => Fo::Or(bx(a), bx(b)),
        FoT::Imp(a, b) => Fo::Implies(bx(a), bx(b)),
        FoT::Ex(v, a) => Fo::Exists(FO_VARS[*v].into(), bx(a)),
        FoT::All(v, a) => Fo::Forall(FO_VARS[*v].into(), bx(a)),
    }
}

struct FoModel {
    n: usize,
    e: Vec<Vec<bool>>,
    u: Vec<bool>,
    b: Vec<Vec<bool>>,
}

fn models(m: &FoModel, f: &FoT, env: &mut [usize; 4]) -> bool {
    match f {
        FoT::Top => true,
        FoT::Bot => false,
        FoT::Eq(a, b) => env[*a] == env[*b],
        FoT::U(a) => m.u[env[*a]],
        FoT::B(a, b) => m.b[env[*a]][env[*b]],
        FoT::E(a, b) => m.e[env[*a]][env[*b]],
        FoT::Not(a) => !models(m, a, env),
        FoT::And(a, b) => models(m, a, env) && models(m, b, env),
        FoT::Or(a, b) => models(m, a, env) || models(m, b, env),
        FoT::Imp(a, b) => !models(m, a, env) || models(m, b, env),
        FoT::Ex(v, a) | FoT::All(v, a) => {
            let saved = env[*v];
            let mut res = matches!(f, FoT::All(..));
            for c in 0..m.n {
                env[*v] = c;
                let h = models(m, a, env);
                if matches!(f, FoT::Ex(..)) && h {
                    res = true;
                }
                if matches!(f, FoT::All(..)) && !h {
                    res = false;
                }
            }
            env[*v] = saved;
            res
        }
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let sig = Signature::new([("U", 1), ("B", 2)]).unwrap();
    let mut agree = 0;
    let mut bad = Vec::new();
    for i in 0..500 {
        let n = rng.gen_range(1..=5);
        let m = FoModel {
            n,
            e: (0..n).map(|_| (0..n).map(|_| rng.gen_bool(0.4)).collect()).collect(),
            u: (0..n).map(|_| rng.gen_bool(0.5)).collect(),
            b: (0..n).map(|_| (0..n).map(|_| rng.gen_bool(0.5)).collect()).collect(),
        };
        let mut g = GeneralStructure::new(n, sig.clone()).unwrap();
        for a in 0..n {
            g.set(Sym::Rel(0), &[a], m.u[a]);
            for b in 0..n {
                g.set(Sym::Edge, &[a, b], m.e[a][b]);
                g.set(Sym::Rel(1), &[a, b], m.b[a][b]);
            }
        }
        let f = random_fo(&mut rng, &[], 3, 6);
        let want = models(&m, &f, &mut [0; 4]);
        let embedded: Formula = embed_fo(&to_library(&f, &sig));
        let got: Value = evaluate(&g, &embedded, &Valuation::new()).unwrap();
        if got == if want { Value::one() } else { Value::zero() } {
            agree += 1;
        } else if bad.len() < 3 {
            bad.push(format!("#{} {:?}", i, f));
        }
    }
    outcome(agree == 500, format!("{}/500 sentences agree{}", agree, first(&bad)))
}

// ---------------------------------------------------------------------------
// Criterion 5: convergence constants against scoped exact tables.

fn type_of(net: &Network, text: &str) -> ClosureType {
    match Parser::new(net.sig().clone()).parse(text).unwrap() {
        Formula::Type(t) => t.ty.clone(),
        other => panic!("not a closure type: {}", other),
    }
}

fn criterion_5() -> Outcome {
    let net = Network::parse(EXAMPLE_NETWORK).unwrap();
    let opts = EliminationOptions::new(3);
    let all: Vec<usize> = net.sig().ids().collect();
    let mut bad = Vec::new();
    let (mut pairs, mut bases) = (0, 0);
    for n in [2, 3] {
        let tree = Arc::new(generate_tree(&TreeGenConfig::uniform(3, n)).unwrap());
        let empty = SigmaStructure::empty(tree.clone(), net.sig().clone()).unwrap();
        let mut reps: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for k in 1..=2 {
            for a in all_tuples(tree.len(), k) {
                if k == 2 && a[0] == a[1] {
                    continue;
                }
                let base = ClosureType::of_tuple(&empty, &tree, &a, &[]).unwrap();
                reps.entry(format!("{:?}", base)).or_insert(a);
            }
        }
        for a in reps.values() {
            bases += 1;
            let scope = tree.closure(a);
            let dist = ExactDistribution::new(&tree, &net, &ExactOptions { scope: Some(scope), ..ExactOptions::default() }).unwrap();
            if dist.total() != Value::one() {
                bad.push(format!("n={} {:?}: total {}", n, a, dist.total()));
            }
            let mut mass: BTreeMap<String, (ClosureType, Value)> = BTreeMap::new();
            dist.for_each::<()>(|st, p| {
                let t = ClosureType::of_tuple(st, &tree, a, &all).unwrap();
                let e = mass.entry(format!("{:?}", t)).or_insert((t, Value::zero()));
                e.1 = e.1.clone() + p.clone();
                Ok(())
            })
            .unwrap();
            let mut sum = Value::zero();
            for (p, m) in mass.values() {
                pairs += 1;
                let c = convergence_constant(&net, p, &p.tau(), &opts).unwrap();
                sum = sum + c.value.clone();
                if c.value != *m && bad.len() < 3 {
                    bad.push(format!("n={} {:?}: exact {} constant {}", n, a, m, c.value));
                }
            }
            if sum != Value::one() {
                bad.push(format!("n={} {:?}: constants over the support sum to {}", n, a, sum));
            }
        }
    }
    // the values named in the example
    let l1 = "closed{ exists r; E(r, x) }";
    let l2 = "closed{ exists r, a; E(r, a); E(a, x) }";
    let named = [
        (format!("closed{{ exists r; E(r, x); P1(x) }}"), l1.to_string(), q(1, 3)),
        (
            "closed{ exists r, a; E(r, a); E(a, x); P1(a); P2(x) }".to_string(),
            "closed{ exists r, a; E(r, a); E(a, x); P1(a) }".to_string(),
            q(2, 3),
        ),
        ("closed{ exists r, a; E(r, a); E(a, x); P1(a); P2(x) }".to_string(), l2.to_string(), q(2, 9)),
    ];
    for (p, base, want) in &named {
        let c = convergence_constant(&net, &type_of(&net, p), &type_of(&net, base), &opts).unwrap();
        if c.value != Value::Exact(want.clone()) {
            bad.push(format!("{} given {}: {} expected {}", p, base, c.value, want));
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} τ-bases, {} complete types match exactly; 1/3, 2/3, 2/9 reproduced{}", bases, pairs, first(&bad)),
    )
}

// ---------------------------------------------------------------------------
// Criterion 6: elimination of the rank-1 example.

const RANK1: &str = "let q(x) = closed{ exists r; E(r, x) };
let p(x, y) = closed{ exists r; E(r, x); E(x, y) };
am(and(R(x), am(and(p(x, y), R(y)) : y : p(x, y))) : x : q(x))";

fn criterion_6() -> Outcome {
    let net = Network::parse(UNIFORM_HALF).unwrap();
    let psi = Parser::new(net.sig().clone()).parse(RANK1).unwrap();
    let opts = EliminationOptions::new(2).with_assumption(Assumption::Light);
    let (out, _) = eliminate(&net, &psi, &opts).unwrap();
    let quarter = !out.cases().is_empty() && out.cases().iter().all(|(_, c)| *c == Value::Exact(q(1, 4)));
    let report = check_asymptotic_equivalence(
        &net,
        &psi,
        &out.to_formula(),
        &TreeGenConfig::few_big(1),
        &[20, 40, 80],
        500,
        0.05,
        1,
    )
    .unwrap();
    let need = [0.6, 0.8, 0.9];
    let fractions: Vec<f64> = report.rows.iter().map(|r| r.fraction).collect();
    let ok = quarter && fractions.iter().zip(need).all(|(f, t)| *f >= t);
    let detail = report
        .rows
        .iter()
        .zip(need)
        .map(|(r, t)| format!("n={} {:.3} (need {})", r.n, r.fraction, t))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(ok, format!("constant 1/4 exact: {}; success fractions {}", quarter, detail))
}

// ---------------------------------------------------------------------------
// Criterion 7: the two non-convergent families.

fn sample_values(net: &Network, tree: &Arc<Tree>, phi: &Formula, samples: usize, seed: u64) -> Vec<f64> {
    use pla::network::{derive_seed, sample};
    (0..samples)
        .map(|i| {
            let st = sample(tree, net, derive_seed(seed, &[tree.len() as u64, i as u64])).unwrap();
            evaluate::<f64>(&st, phi, &Valuation::new()).unwrap()
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn criterion_7() -> Outcome {
    let net = Network::parse(UNIFORM_HALF).unwrap();
    let mut parser = Parser::new(net.sig().clone());
    parser.define("q", &["x"], "closed{ exists r; E(r, x) }").unwrap();
    parser.define("p", &["x", "y"], "closed{ exists r; E(r, x); E(x, y) }").unwrap();
    let chi = parser.parse("am(am(and(p(x, y), R(x), R(y)) : y : p(x, y)) : x : q(x))").unwrap();
    // ∃x p(x, y) is the closure type "y is on level 2"; ∃x (p ∧ R(x) ∧ R(y)) is a
    // max over the unique such x
    let phi = parser
        .parse("am(max(and(R(x), R(y)) : x : p(x, y)) : y : closed{ exists r, s; E(r, s); E(s, y) })")
        .unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    for (n, target, derived) in [(40usize, 0.25, 0.125), (41, 1.0 / 6.0, 13.0 / 41.0 / 4.0)] {
        let tree = Arc::new(generate_tree(&TreeGenConfig::mixed_leaves(n)).unwrap());
        let m = mean(&sample_values(&net, &tree, &chi, 500, 1));
        let pass = (m - target).abs() <= 0.03;
        ok &= pass;
        lines.push(format!("mixed-leaves n={} mean {:.4} target {:.4} {} (large-n value {:.4})", n, m, target, if pass { "ok" } else { "off" }, derived));
    }
    let tree = Arc::new(generate_tree(&TreeGenConfig::few_big(21)).unwrap());
    let vals = sample_values(&net, &tree, &phi, 500, 1);
    let near = |c: f64| vals.iter().filter(|v| (**v - c).abs() <= 0.1).count() as f64 / vals.len() as f64;
    let (m0, m1) = (near(0.0), near(0.5));
    let pass = (m0 - 0.5).abs() <= 0.1 && (m1 - 0.5).abs() <= 0.1;
    ok &= pass;
    lines.push(format!("few-big n=21 mass near 0 {:.3}, near 1/2 {:.3} {}", m0, m1, if pass { "ok" } else { "off" }));
    outcome(ok, lines.join("; "))
}

// ---------------------------------------------------------------------------
// Criteria 8 and 9.

fn criterion_8() -> Outcome {
    let rows = check_battery(1).unwrap();
    let failed: Vec<String> = rows.iter().filter(|r| !r.ok).map(|r| format!("{} {}", r.aggregation, r.probe)).collect();
    let worst = rows.iter().filter(|r| r.expect_stable).map(|r| r.discrepancy).fold(0.0, f64::max);
    outcome(
        failed.is_empty(),
        format!("{} probes, worst stable discrepancy {:.4}{}", rows.len(), worst, failed.first().map(|f| format!("; failed {}", f)).unwrap_or_default()),
    )
}

fn criterion_9() -> Outcome {
    let mut edges: Vec<(usize, usize)> = (0..10).map(|i| (i, (i + 1) % 10)).collect();
    edges.extend([(0, 5), (3, 7), (7, 2), (9, 4), (4, 0), (6, 1)]);
    let g = GeneralStructure::from_edges(10, &edges).unwrap();
    let (mut sum_gap, mut node_gap): (f64, f64) = (0.0, 0.0);
    for k in 0..=5 {
        let v: Vec<f64> = pagerank_pla(&g, k).unwrap();
        let d = pagerank_direct(&g, k).unwrap();
        sum_gap = sum_gap.max((v.iter().sum::<f64>() - 1.0).abs());
        for (a, b) in v.iter().zip(&d) {
            node_gap = node_gap.max((a - b).abs());
        }
    }
    let exact: Vec<Value> = pagerank_pla(&g, 3).unwrap();
    let exact_sum = exact.iter().fold(Value::zero(), |a, b| a + b.clone());
    outcome(
        sum_gap <= 1e-9 && node_gap <= 1e-9 && exact_sum == Value::one(),
        format!("k ≤ 5: |Σ PR_k − 1| ≤ {:.1e}, gap to direct iteration ≤ {:.1e}; exact Σ PR_3 = {}", sum_gap, node_gap, exact_sum),
    )
}

fn main() {
    let strict = std::env::var("PLA_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let instances: Vec<Instance> = (0..50).map(|_| random_instance(&mut rng)).collect();
    let criteria: Vec<(usize, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new(|| criterion_2(&instances))),
        (3, Box::new(|| criterion_3(&instances))),
        (4, Box::new(criterion_4)),
        (5, Box::new(criterion_5)),
        (6, Box::new(criterion_6)),
        (7, Box::new(criterion_7)),
        (8, Box::new(criterion_8)),
        (9, Box::new(criterion_9)),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failures = 0;
    for (i, run) in criteria {
        if only.is_some_and(|o| o != i) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        failures += usize::from(!o.pass);
        println!("criterion {}: {} [{:.1}s] {}", i, if o.pass { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64(), o.detail);
    }
    if strict && failures > 0 {
        std::process::exit(1);
    }
}
