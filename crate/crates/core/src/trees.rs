//! Planar rooted binary trees with `k` ordered leaves.
//!
//! Leaf `l` (0-based) carries the pair `(l, l+1)`; the edge above a subtree
//! spanning leaves `a..=b` carries `(a, b+1)` and the root edge carries `(0, k)`.
//! Nodes are numbered leaves first (`0..k`), then internal vertices in
//! post-order, then the root endpoint.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Shape {
    Leaf(usize),
    Join(Box<Shape>, Box<Shape>),
}

impl Shape {
    fn bracket(&self) -> String {
        match self {
            // single characters above ')' keep string order equal to bracketing order
            Shape::Leaf(l) => char::from_u32('1' as u32 + *l as u32).unwrap().to_string(),
            Shape::Join(a, b) => format!("({}{})", a.bracket(), b.bracket()),
        }
    }
}

fn shapes(lo: usize, hi: usize) -> Vec<Shape> {
    if lo == hi {
        return vec![Shape::Leaf(lo)];
    }
    let mut out = Vec::new();
    for m in lo..hi {
        for a in shapes(lo, m) {
            for b in shapes(m + 1, hi) {
                out.push(Shape::Join(Box::new(a.clone()), Box::new(b)));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Leaf,
    Internal,
    Root,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub label: (usize, usize),
    pub kind: EdgeKind,
}

/// An internal vertex with its two incoming subtrees. `lower` spans the lower
/// leaf indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub id: usize,
    pub lower: usize,
    pub upper: usize,
    pub span: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    pub k: usize,
    pub id: usize,
    pub bracket: String,
    /// Internal vertices in post-order; the last one feeds the root edge.
    pub vertices: Vec<Vertex>,
    /// `edges[v]` is the edge leaving node `v`, for every node except the root endpoint.
    pub edges: Vec<Edge>,
}

impl Topology {
    fn from_shape(k: usize, id: usize, shape: &Shape) -> Topology {
        let mut vertices = Vec::new();
        let mut next = k;
        fn walk(s: &Shape, next: &mut usize, vs: &mut Vec<Vertex>) -> (usize, (usize, usize)) {
            match s {
                Shape::Leaf(l) => (*l, (*l, *l)),
                Shape::Join(a, b) => {
                    let (ia, sa) = walk(a, next, vs);
                    let (ib, sb) = walk(b, next, vs);
                    let id = *next;
                    *next += 1;
                    vs.push(Vertex { id, lower: ia, upper: ib, span: (sa.0, sb.1) });
                    (id, (sa.0, sb.1))
                }
            }
        }
        let (top, _) = walk(shape, &mut next, &mut vertices);
        let root = next;
        let mut edges = Vec::with_capacity(root);
        for l in 0..k {
            edges.push(Edge { src: l, dst: root, label: (l, l + 1), kind: EdgeKind::Leaf });
        }
        for v in &vertices {
            edges.push(Edge {
                src: v.id,
                dst: root,
                label: (v.span.0, v.span.1 + 1),
                kind: EdgeKind::Internal,
            });
        }
        for v in &vertices {
            edges[v.lower].dst = v.id;
            edges[v.upper].dst = v.id;
        }
        edges[top].kind = EdgeKind::Root;
        Topology { k, id, bracket: shape.bracket(), vertices, edges }
    }

    pub fn root_node(&self) -> usize {
        2 * self.k - 1
    }

    pub fn node_count(&self) -> usize {
        2 * self.k
    }

    pub fn internal_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Internal)
    }

    pub fn internal_labels(&self) -> Vec<(usize, usize)> {
        self.internal_edges().map(|e| e.label).collect()
    }

    /// `(vertex, edge index)` incidences. Each internal vertex has three flags,
    /// each leaf and the root endpoint one.
    pub fn flags(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            out.push((e.src, i));
            out.push((e.dst, i));
        }
        out.sort_unstable();
        out
    }

    pub fn to_json(&self) -> TopologyJson {
        TopologyJson {
            k: self.k,
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson { src: e.src, dst: e.dst, label: [e.label.0, e.label.1] })
                .collect(),
            leaf_order: (0..self.k).collect(),
        }
    }

    /// Rebuilds a topology from its serialized edge list.
    pub fn from_json(j: &TopologyJson) -> Result<Topology> {
        let k = j.k;
        if k == 0 || j.edges.len() != 2 * k - 1 || j.leaf_order != (0..k).collect::<Vec<_>>() {
            return Err(Error::Schema { path: "edges".into(), msg: "not a planar binary tree".into() });
        }
        let root = 2 * k - 1;
        fn build(node: usize, k: usize, j: &TopologyJson) -> Result<Shape> {
            if node < k {
                return Ok(Shape::Leaf(node));
            }
            let mut kids: Vec<(usize, usize)> =
                j.edges.iter().filter(|e| e.dst == node).map(|e| (e.label[0], e.src)).collect();
            if kids.len() != 2 {
                return Err(Error::Schema { path: "edges".into(), msg: format!("vertex {node} is not binary") });
            }
            kids.sort_unstable();
            Ok(Shape::Join(Box::new(build(kids[0].1, k, j)?), Box::new(build(kids[1].1, k, j)?)))
        }
        let top: Vec<usize> = j.edges.iter().filter(|e| e.dst == root).map(|e| e.src).collect();
        if top.len() != 1 {
            return Err(Error::Schema { path: "edges".into(), msg: "root must have one edge".into() });
        }
        let shape = build(top[0], k, j)?;
        let all = enumerate_topologies(k)?;
        let t = all
            .into_iter()
            .find(|t| t.bracket == shape.bracket())
            .ok_or_else(|| Error::Schema { path: "edges".into(), msg: "unknown topology".into() })?;
        if t.to_json() != *j {
            return Err(Error::Schema { path: "edges".into(), msg: "edge numbering is not canonical".into() });
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeJson {
    pub src: usize,
    pub dst: usize,
    pub label: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyJson {
    pub k: usize,
    pub edges: Vec<EdgeJson>,
    pub leaf_order: Vec<usize>,
}

/// All `Catalan(k-1)` topologies in lexicographic bracketing order.
pub fn enumerate_topologies(k: usize) -> Result<Vec<Topology>> {
    if k < 1 {
        return Err(Error::InvalidArity(k));
    }
    let mut all: Vec<(String, Shape)> = shapes(0, k - 1).into_iter().map(|s| (s.bracket(), s)).collect();
    all.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(all.iter().enumerate().map(|(id, (_, s))| Topology::from_shape(k, id, s)).collect())
}

/// Internal edges carry finite lengths; leaf and root edges are half-infinite.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricTree {
    pub topology: Topology,
    /// Indexed like `topology.edges`; `None` on half-infinite edges.
    pub lengths: Vec<Option<f64>>,
}

impl MetricTree {
    pub fn new(topology: Topology, lengths: Vec<Option<f64>>) -> Result<MetricTree> {
        if lengths.len() != topology.edges.len() {
            return Err(Error::Schema { path: "lengths".into(), msg: "one entry per edge".into() });
        }
        for (e, l) in topology.edges.iter().zip(&lengths) {
            match (e.kind, l) {
                (EdgeKind::Internal, Some(x)) if *x > 0.0 && x.is_finite() => {}
                (EdgeKind::Internal, _) => {
                    return Err(Error::Schema {
                        path: "lengths".into(),
                        msg: "internal edges need a positive finite length".into(),
                    })
                }
                (_, None) => {}
                (_, Some(_)) => {
                    return Err(Error::Schema {
                        path: "lengths".into(),
                        msg: "leaf and root edges are half-infinite".into(),
                    })
                }
            }
        }
        Ok(MetricTree { topology, lengths })
    }
}

pub fn catalan(n: usize) -> u64 {
    let mut c = 1u64;
    for i in 0..n as u64 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_leaf_labels() {
        let t = enumerate_topologies(3).unwrap();
        assert_eq!(t[0].bracket, "((12)3)");
        assert_eq!(t[0].internal_labels(), vec![(0, 2)]);
        assert_eq!(t[1].internal_labels(), vec![(1, 3)]);
    }

    #[test]
    fn single_edge() {
        let t = enumerate_topologies(1).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].edges.len(), 1);
        assert_eq!(t[0].edges[0].label, (0, 1));
        assert_eq!(t[0].edges[0].kind, EdgeKind::Root);
    }

    #[test]
    fn zero_leaves_rejected() {
        assert!(matches!(enumerate_topologies(0), Err(Error::InvalidArity(0))));
    }
}
