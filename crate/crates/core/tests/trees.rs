use mwl::trees::{catalan, enumerate_topologies, EdgeKind, MetricTree, Topology};
use proptest::prelude::*;
use std::collections::BTreeSet;

/// Every full bracketing of `lo..=hi`, as strings, generated independently
/// of the library.
fn bracketings(lo: usize, hi: usize) -> Vec<String> {
    if lo == hi {
        return vec![format!("{}", lo + 1)];
    }
    let mut out = Vec::new();
    for m in lo..hi {
        for a in bracketings(lo, m) {
            for b in bracketings(m + 1, hi) {
                out.push(format!("({a}{b})"));
            }
        }
    }
    out
}

#[test]
fn counts_match_bracketing_oracle() {
    for k in 1..=8 {
        let t = enumerate_topologies(k).unwrap();
        let oracle: BTreeSet<String> = bracketings(0, k - 1).into_iter().collect();
        let got: BTreeSet<String> = t.iter().map(|t| t.bracket.clone()).collect();
        assert_eq!(t.len(), oracle.len(), "k = {k}");
        assert_eq!(got, oracle, "k = {k}");
        assert_eq!(t.len() as u64, catalan(k - 1));
    }
    // frozen oracle values
    assert_eq!((1..=8).map(|k| catalan(k - 1)).collect::<Vec<_>>(), vec![1, 1, 2, 5, 14, 42, 132, 429]);
}

#[test]
fn enumeration_is_sorted_and_ids_are_positions() {
    for k in 1..=6 {
        let t = enumerate_topologies(k).unwrap();
        for (i, w) in t.windows(2).enumerate() {
            assert!(w[0].bracket < w[1].bracket, "k = {k} at {i}");
        }
        for (i, x) in t.iter().enumerate() {
            assert_eq!(x.id, i);
        }
    }
}

#[test]
fn two_tree_has_one_vertex_and_no_internal_edges() {
    let t = enumerate_topologies(2).unwrap();
    assert_eq!(t.len(), 1);
    assert_eq!(t[0].vertices.len(), 1);
    assert!(t[0].internal_labels().is_empty());
    let root = t[0].edges.iter().find(|e| e.kind == EdgeKind::Root).unwrap();
    assert_eq!(root.label, (0, 2));
    // three flags at the vertex
    let v = t[0].vertices[0].id;
    assert_eq!(t[0].flags().iter().filter(|f| f.0 == v).count(), 3);
}

#[test]
fn three_trees_carry_02_and_13() {
    let t = enumerate_topologies(3).unwrap();
    assert_eq!(t.len(), 2);
    // leaves 01, 12 meet first
    assert_eq!(t[0].bracket, "((12)3)");
    assert_eq!(t[0].internal_labels(), vec![(0, 2)]);
    // leaves 12, 23 meet first
    assert_eq!(t[1].bracket, "(1(23))");
    assert_eq!(t[1].internal_labels(), vec![(1, 3)]);
    for x in &t {
        let flags = x.flags();
        for v in &x.vertices {
            assert_eq!(flags.iter().filter(|f| f.0 == v.id).count(), 3);
        }
    }
}

#[test]
fn comb_four_tree_has_four_internal_flags() {
    let t = enumerate_topologies(4).unwrap();
    let comb = t.iter().find(|t| t.bracket == "(((12)3)4)").unwrap();
    let internal: Vec<usize> =
        comb.edges.iter().enumerate().filter(|(_, e)| e.kind == EdgeKind::Internal).map(|(i, _)| i).collect();
    assert_eq!(internal.len(), 2);
    let flags = comb.flags().into_iter().filter(|f| internal.contains(&f.1)).count();
    assert_eq!(flags, 4);
    assert_eq!(comb.internal_labels(), vec![(0, 2), (0, 3)]);
}

#[test]
fn json_round_trip() {
    for k in 1..=5 {
        for t in enumerate_topologies(k).unwrap() {
            let s = serde_json::to_string(&t.to_json()).unwrap();
            let back = Topology::from_json(&serde_json::from_str(&s).unwrap()).unwrap();
            assert_eq!(back, t);
        }
    }
}

#[test]
fn metric_tree_lengths_are_checked() {
    let t = enumerate_topologies(3).unwrap().remove(0);
    let mut lengths: Vec<Option<f64>> = vec![None; t.edges.len()];
    assert!(MetricTree::new(t.clone(), lengths.clone()).is_err());
    let i = t.edges.iter().position(|e| e.kind == EdgeKind::Internal).unwrap();
    lengths[i] = Some(0.5);
    assert!(MetricTree::new(t.clone(), lengths.clone()).is_ok());
    lengths[0] = Some(1.0);
    assert!(MetricTree::new(t, lengths).is_err());
}

proptest! {
    #[test]
    fn labels_follow_the_vertex_rule(k in 1usize..=8, pick in any::<prop::sample::Index>()) {
        let all = enumerate_topologies(k).unwrap();
        let t = &all[pick.index(all.len())];
        // leaves in planar order read 01, 12, ...
        for l in 0..k {
            prop_assert_eq!(t.edges[l].label, (l, l + 1));
            prop_assert_eq!(t.edges[l].kind, if k == 1 { EdgeKind::Root } else { EdgeKind::Leaf });
        }
        // at each vertex the incoming labels (a,b), (b,c) produce (a,c)
        for v in &t.vertices {
            let lo = t.edges[v.lower].label;
            let up = t.edges[v.upper].label;
            prop_assert_eq!(lo.1, up.0);
            prop_assert_eq!(t.edges[v.id].label, (lo.0, up.1));
        }
        let roots: Vec<_> = t.edges.iter().filter(|e| e.kind == EdgeKind::Root).collect();
        prop_assert_eq!(roots.len(), 1);
        prop_assert_eq!(roots[0].label, (0, k));
        prop_assert_eq!(t.internal_labels().len(), k.saturating_sub(2));
        prop_assert_eq!(t.flags().len(), 2 * t.edges.len());
    }
}
