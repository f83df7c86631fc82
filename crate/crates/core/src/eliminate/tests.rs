use std::sync::Arc;

use super::*;
use crate::logic::{evaluate, parse, Parser, SigmaStructure, Signature, Valuation};
use crate::scalar::ratio;
use crate::trees::Tree;

const RANK1: &str = "let q(x) = closed{ exists r; E(r, x) };
let p(x, y) = closed{ exists r; E(r, x); E(x, y) };
am(and(R(x), am(and(p(x, y), R(y)) : y : p(x, y))) : x : q(x))";

fn uniform_half() -> Network {
    let sig = Arc::new(Signature::new([("R", 1)]).unwrap());
    Network::constant(sig, ratio(1, 2))
}

#[test]
fn rank_one_example_gives_one_quarter() {
    let net = uniform_half();
    let psi = Parser::new(net.sig().clone()).parse(RANK1).unwrap();
    let opts = EliminationOptions::new(2).with_assumption(Assumption::Light);
    let (out, report) = eliminate(&net, &psi, &opts).unwrap();
    assert!(!out.cases().is_empty());
    for (_, c) in out.cases() {
        assert_eq!(*c, Value::Exact(ratio(1, 4)));
    }
    assert_eq!(report.provenance, "exact-product");
    assert_eq!(report.ledger.len(), 2);
}

#[test]
fn higher_rank_is_rejected_under_the_light_assumption() {
    let net = uniform_half();
    let phi = Parser::new(net.sig().clone())
        .parse("am(and(R(x), R(y)) : x, y : closed{ exists r; E(r, x); E(x, y) })")
        .unwrap();
    let light = EliminationOptions::new(2).with_assumption(Assumption::Light);
    assert!(matches!(eliminate(&net, &phi, &light), Err(Error::UnsupportedAggregation(_))));
    let (out, _) = eliminate(&net, &phi, &EliminationOptions::new(2)).unwrap();
    assert_eq!(out.cases()[0].1, Value::Exact(ratio(1, 4)));
}

#[test]
fn rejections() {
    let net = uniform_half();
    let sig = net.sig().clone();
    let opts = EliminationOptions::new(2);
    let tsum = parse("tsum(R(y) : y : closed{ exists r; E(r, y) })", &sig).unwrap();
    assert!(matches!(eliminate(&net, &tsum, &opts), Err(Error::UnsupportedAggregation(_))));
    let not_type = parse("am(R(y) : y : R(y))", &sig).unwrap();
    assert!(matches!(eliminate(&net, &not_type, &opts), Err(Error::UnsupportedAggregation(_))));
    let violating = opts.clone().with_assumption(Assumption::Violating);
    let am = parse("am(R(y) : y : closed{ exists r; E(r, y) })", &sig).unwrap();
    assert!(eliminate(&net, &am, &violating).is_err());
}

#[test]
fn max_over_children_is_one_when_a_child_can_satisfy() {
    let net = uniform_half();
    let sig = net.sig().clone();
    let f = parse("max(R(y) : y : closed{ E(x, y) ; exists r; E(r, x) })", &sig).unwrap();
    let (out, _) = eliminate(&net, &f, &EliminationOptions::new(2)).unwrap();
    // x child of root: limit 1; x root or leaf: no such type for Δ = 2 or the atom fails
    let ones = out.cases().iter().filter(|(_, c)| c.is_one()).count();
    assert!(ones > 0);
}

/// Aggregation-free input: the output agrees with the input on every injective
/// tuple of every expansion of a small tree.
#[test]
fn aggregation_free_is_exact() {
    let sig = Arc::new(Signature::new([("R", 1), ("S", 2)]).unwrap());
    let net = Network::constant(sig.clone(), ratio(1, 2));
    let phi = parse("or(and(R(x), not(S(x, y))), implies(E(x, y), 1/3), closed{ exists r; E(r, y) })", &sig).unwrap();
    let (out, _) = eliminate(&net, &phi, &EliminationOptions::new(1)).unwrap();
    let tree = Arc::new(Tree::new(&[None, Some(0), Some(0)]).unwrap());
    let basic = out.to_formula();
    for code in 0u32..(1 << 12) {
        let mut st = SigmaStructure::empty(tree.clone(), sig.clone()).unwrap();
        for a in 0..3 {
            st.set(0, &[a], code >> a & 1 == 1);
        }
        for i in 0..9 {
            st.set(1, &[i / 3, i % 3], code >> (3 + i) & 1 == 1);
        }
        for a in 0..3 {
            for b in 0..3 {
                if a == b {
                    continue;
                }
                let v = Valuation::new().with("x", a).with("y", b);
                let want: Value = evaluate(&st, &phi, &v).unwrap();
                let got = out.value_at(&st, &tree, &[a, b]).unwrap();
                assert_eq!(want, got);
                let via_formula: Value = evaluate(&st, &basic, &v).unwrap();
                assert_eq!(want, via_formula);
            }
        }
    }
}

#[test]
fn chain_constants() {
    let text = "network v1
relation P1 arity=1 parents=
relation P2 arity=1 parents=P1
theta P1(x) = and(implies(closed{ exists r; E(r, x) }, 1/3), implies(not(closed{ exists r; E(r, x) }), 0))
theta P2(x) = and(implies(not(closed{ exists r, u; E(r, u); E(u, x) }), 0),
    implies(closed{ exists r, u; E(r, u); E(u, x); P1(u) }, 2/3),
    implies(closed{ exists r, u; E(r, u); E(u, x); !P1(u) }, 1/3))
";
    let net = Network::parse(text).unwrap();
    let sig = net.sig().clone();
    let opts = EliminationOptions::new(2);
    let ty = |s: &str| match parse(s, &sig).unwrap() {
        Formula::Type(t) => t.ty,
        _ => unreachable!(),
    };
    let base = ty("closed{ exists r; E(r, x) }");
    let p = ty("closed{ exists r; E(r, x); P1(x) }");
    assert_eq!(convergence_constant(&net, &p, &base, &opts).unwrap().value, Value::Exact(ratio(1, 3)));
    let np = ty("closed{ exists r; E(r, x); !P1(x) }");
    assert_eq!(convergence_constant(&net, &np, &base, &opts).unwrap().value, Value::Exact(ratio(2, 3)));
    let base2 = ty("closed{ exists r, u; E(r, u); E(u, x) }");
    let p2 = ty("closed{ exists r, u; E(r, u); E(u, x); P2(x); P1(u) }");
    let c = convergence_constant(&net, &p2, &base2, &opts).unwrap();
    assert_eq!(c.value, Value::Exact(ratio(2, 9)));
    assert_eq!(c.provenance, Provenance::Exact);
    let bad = ty("closed{ exists r; E(r, x); P2(x) }");
    assert_eq!(convergence_constant(&net, &bad, &base, &opts).unwrap().value, Value::zero());
}

#[test]
fn balance_direct_and_chain_agree() {
    let sig = Arc::new(Signature::new([("P", 1)]).unwrap());
    let net = Network::parse(
        "network v1
relation P arity=1 parents=
theta P(x) = and(implies(closed{ x }, 0), implies(not(closed{ x }), 1/3))
",
    )
    .unwrap();
    assert_eq!(net.sig().as_ref(), sig.as_ref());
    let opts = EliminationOptions::new(2);
    let ty = |s: &str| match parse(s, &sig).unwrap() {
        Formula::Type(t) => t.ty,
        _ => unreachable!(),
    };
    // rank 1
    let q = ty("closed{ x; !P(x) }");
    let chi = ty("closed{ E(x, y) }");
    let p = ty("closed{ E(x, y); P(y) }");
    let c = balance_constant(&net, &p, &chi, &q, 1, &opts).unwrap();
    assert_eq!(c.value, Value::Exact(ratio(1, 3)));
    // rank 2 chain
    let chi2 = ty("closed{ E(x, y); E(y, z) }");
    let p2 = ty("closed{ E(x, y); E(y, z); P(y); P(z) }");
    let c2 = balance_constant(&net, &p2, &chi2, &q, 2, &opts).unwrap();
    assert_eq!(c2.value, Value::Exact(ratio(1, 9)));
    let full = ty("closed{ x; E(x, y); E(y, z); !P(x); P(y); P(z) }");
    let (total, steps) = balance_chain(&net, &full, &[1, 2], &opts).unwrap();
    assert_eq!(steps.len(), 2);
    assert_eq!(total, Value::Exact(ratio(1, 9)));
    // rank 0: y is the parent of x
    let q0 = ty("closed{ exists r; E(r, x); P(x); !P(r) }");
    let chi0 = ty("closed{ x; E(y, x) }");
    let hit = ty("closed{ x; E(y, x); !P(y) }");
    let miss = ty("closed{ x; E(y, x); P(y) }");
    assert_eq!(balance_constant(&net, &hit, &chi0, &q0, 1, &opts).unwrap().value, Value::one());
    assert_eq!(balance_constant(&net, &miss, &chi0, &q0, 1, &opts).unwrap().value, Value::zero());
}

#[test]
fn non_local_theta_is_compiled() {
    let net = Network::parse(
        "network v1
relation P arity=1 parents=
relation Q arity=1 parents=P
theta P(x) = 1/2
theta Q(x) = am(P(y) : y : closed{ exists r; E(r, x); E(x, y) })
",
    )
    .unwrap();
    let sig = net.sig().clone();
    let f = parse("Q(x)", &sig).unwrap();
    let (out, report) = eliminate(&net, &f, &EliminationOptions::new(1)).unwrap();
    assert_eq!(report.provenance, "exact-product");
    // Q(x) is its own literal; the network only enters through constants
    assert!(out.cases().iter().all(|(_, c)| c.is_one() || c.is_zero()));
    let g = parse("am(Q(y) : y : closed{ E(x, y) })", &sig).unwrap();
    let (out, report) = eliminate(&net, &g, &EliminationOptions::new(2)).unwrap();
    assert_eq!(report.provenance, "limit-product");
    // x on level 0 of a height-2 tree: children have children, θ_Q → 1/2
    let root_case = out.cases().iter().find(|(q, _)| q.len() == 1).unwrap();
    assert_eq!(root_case.1, Value::Exact(ratio(1, 2)));
}

#[test]
fn discontinuous_connectives_are_rejected() {
    use crate::logic::{Connective, CustomConnective};
    let net = uniform_half();
    let step = Connective::Custom(Arc::new(CustomConnective {
        name: "step".into(),
        arity: 1,
        continuous: false,
        f: Box::new(|x| if x[0] > 0.5 { 1.0 } else { 0.0 }),
    }));
    let r = Parser::new(net.sig().clone()).parse("R(x)").unwrap();
    let phi = Formula::conn(step, vec![r]);
    let err = eliminate(&net, &phi, &EliminationOptions::new(1)).unwrap_err();
    assert_eq!(err, Error::Discontinuous("step".into()));
}
