//! Property tests over trees, closure types, catalogs, exact tables and the sampler.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::{One, Zero};
use proptest::prelude::*;

use pla::logic::{parse, SigmaStructure, Signature};
use pla::network::{sample, ExactDistribution, ExactOptions, Network};
use pla::scalar::ratio;
use pla::trees::Tree;
use pla::types::{catalog, tuples, CatalogLimits, ClosureType};
use pla::Value;

/// Parent arrays of trees of height at most `delta` with up to `max` nodes.
fn tree_strategy(max: usize, delta: usize) -> impl Strategy<Value = Vec<Option<usize>>> {
    prop::collection::vec(any::<prop::sample::Index>(), 0..max).prop_map(move |picks| {
        let mut parent = vec![None];
        let mut depth = vec![0usize];
        for pick in picks {
            let open: Vec<usize> = (0..parent.len()).filter(|&v| depth[v] < delta).collect();
            if open.is_empty() {
                break;
            }
            let p = open[pick.index(open.len())];
            parent.push(Some(p));
            depth.push(depth[p] + 1);
        }
        parent
    })
}

fn structure(parent: &[Option<usize>], bits: &[bool], sig: &Arc<Signature>) -> SigmaStructure {
    let tree = Arc::new(Tree::new(parent).unwrap());
    let mut st = SigmaStructure::empty(tree, sig.clone()).unwrap();
    let mut i = 0;
    for r in sig.ids() {
        for args in tuples(parent.len(), sig.arity(r)) {
            st.set(r, &args, bits[i % bits.len()]);
            i += 1;
        }
    }
    st
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_is_idempotent_and_closed(parent in tree_strategy(12, 3), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..4)) {
        let tree = Tree::new(&parent).unwrap();
        let nodes: Vec<usize> = picks.iter().map(|p| p.index(tree.len())).collect();
        let cl = tree.closure(&nodes);
        prop_assert!(tree.is_closed(&cl));
        prop_assert_eq!(tree.closure(&cl), cl.clone());
        for v in &nodes {
            prop_assert!(cl.contains(v));
        }
    }

    /// Complete types of a catalog partition the injective tuples of every structure.
    #[test]
    fn catalog_partitions_tuples(parent in tree_strategy(6, 2), bits in prop::collection::vec(any::<bool>(), 1..40), k in 1usize..=2) {
        let sig = Arc::new(Signature::new([("P", 1), ("S", 2)]).unwrap());
        let st = structure(&parent, &bits, &sig);
        let cat = catalog(&sig, &[0], k, 2, CatalogLimits::default()).unwrap();
        let tree = st.tree_arc().clone();
        for a in tuples(tree.len(), k) {
            if a.iter().collect::<BTreeSet<_>>().len() < k {
                continue;
            }
            let hits = cat.iter().filter(|p| p.holds(&st, &a)).count();
            prop_assert_eq!(hits, 1, "tuple {:?}", a);
            let own = ClosureType::of_tuple(&st, &tree, &a, &[0]).unwrap();
            prop_assert!(own.holds(&st, &a));
            prop_assert!(cat.contains(&own));
        }
    }

    #[test]
    fn restriction_preserves_satisfaction(parent in tree_strategy(8, 3), bits in prop::collection::vec(any::<bool>(), 1..30), i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let sig = Arc::new(Signature::new([("P", 1)]).unwrap());
        let st = structure(&parent, &bits, &sig);
        let tree = st.tree_arc().clone();
        let (a, b) = (i.index(tree.len()), j.index(tree.len()));
        prop_assume!(a != b);
        let p = ClosureType::of_tuple(&st, &tree, &[a, b], &[0]).unwrap();
        prop_assert!(p.restrict(&[1]).holds(&st, &[b]));
        prop_assert!(p.tau().holds(&st, &[a, b]));
        prop_assert!(p.entails(&p.tau()));
    }

    /// Constant networks: the exact table sums to 1 and every marginal is the constant.
    #[test]
    fn exact_tables_of_constant_networks(parent in tree_strategy(5, 2), num in 0i64..=4) {
        let sig = Arc::new(Signature::new([("R", 1)]).unwrap());
        let net = Network::constant(sig, ratio(num, 4));
        let tree = Arc::new(Tree::new(&parent).unwrap());
        let dist = ExactDistribution::new(&tree, &net, &ExactOptions::default()).unwrap();
        prop_assert_eq!(dist.total(), Value::one());
        for a in 0..tree.len() {
            prop_assert_eq!(dist.marginal(0, &[a]), Value::Exact(ratio(num, 4)));
        }
    }

    #[test]
    fn sampling_is_deterministic(parent in tree_strategy(10, 3), seed in any::<u64>()) {
        let sig = Arc::new(Signature::new([("R", 1), ("S", 2)]).unwrap());
        let net = Network::constant(sig, ratio(1, 3));
        let tree = Arc::new(Tree::new(&parent).unwrap());
        prop_assert_eq!(sample(&tree, &net, seed).unwrap(), sample(&tree, &net, seed).unwrap());
    }
}

/// With one unary symbol the complete types of one variable at depth d fix the
/// symbol on the d + 1 nodes of the closure, so there are Σ_{d ≤ Δ} 2^{d+1}.
#[test]
fn one_variable_catalog_sizes() {
    let sig = Signature::new([("P", 1)]).unwrap();
    for delta in 0..=3 {
        let want: usize = (0..=delta).map(|d| 1 << (d + 1)).sum();
        let got = catalog(&sig, &[0], 1, delta, CatalogLimits::default()).unwrap().len();
        assert_eq!(got, want, "Δ = {}", delta);
    }
    assert_eq!(catalog(&sig, &[0], 1, 1, CatalogLimits::default()).unwrap().len(), 6);
}

/// Types of pairs on trees of height 1, with no relation symbols: the pair is
/// (root, child), (child, root) or two distinct children.
#[test]
fn two_variable_skeletons_on_height_one() {
    let sig = Signature::default();
    let cat = catalog(&sig, &[], 2, 1, CatalogLimits::default()).unwrap();
    assert_eq!(cat.len(), 3);
}

#[test]
fn formulas_round_trip_through_display() {
    let sig = Signature::new([("R", 1), ("S", 2)]).unwrap();
    for text in [
        "and(R(x), or(S(x, y), not(R(y))), implies(1/2, R(x)))",
        "am(R(y) : y : closed{ exists r; E(r, y) })",
        "lengthpow(1/2)(S(x, y) : y : E(x, y))",
        "affine(1/2, 1/4, 0)(R(x), R(y))",
        "max(product(R(x), R(y)) : x, y : closed{ exists r; E(r, x); E(x, y); R(r) })",
    ] {
        let f = parse(text, &sig).unwrap();
        let again = parse(&f.to_string(), &sig).unwrap();
        assert_eq!(f, again, "{}", text);
    }
}

#[test]
fn zero_probability_tuples_are_pruned() {
    let sig = Arc::new(Signature::new([("R", 1)]).unwrap());
    let net = Network::constant(sig, ratio(0, 1));
    let tree = Arc::new(Tree::new(&[None, Some(0), Some(0)]).unwrap());
    let dist = ExactDistribution::new(&tree, &net, &ExactOptions::default()).unwrap();
    assert_eq!(dist.len(), 1);
    assert!(dist.marginal(0, &[1]).is_zero());
}
