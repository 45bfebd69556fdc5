//! Shared fixtures and the dense-grid tree oracle.
#![allow(dead_code)]

use mwl::morse::*;
use mwl::trees::enumerate_topologies;
use std::f64::consts::TAU;

pub const FINE: usize = 100_000;

/// Dense-grid tree oracle. Positions are cells of a uniform grid; flow
/// membership is decided by marching along the sign of `f'` cell by cell,
/// with no use of the library's arc bookkeeping.
pub mod oracle {
    use super::*;

    pub type Mask = Vec<bool>;

    pub fn cell(theta: f64) -> usize {
        ((wrap(theta) / TAU) * FINE as f64).round() as usize % FINE
    }

    fn pos(c: usize) -> f64 {
        TAU * c as f64 / FINE as f64
    }

    fn slope(f: &PeriodicFunction) -> Vec<f64> {
        (0..FINE).map(|c| f.d1(pos(c))).collect()
    }

    /// Cells whose ascending line (dir = 1) or descending line (dir = -1)
    /// ends at the critical point `q`.
    pub fn basin(f: &PeriodicFunction, q: f64, dir: f64) -> Mask {
        let s = slope(f);
        let mut m = vec![false; FINE];
        let c0 = cell(q);
        m[c0] = true;
        // walk away from q while the flow still points back towards it
        for step in [1isize, -1] {
            let mut c = c0 as isize;
            loop {
                c += step;
                let i = c.rem_euclid(FINE as isize) as usize;
                if i == c0 {
                    break;
                }
                let toward = -(step as f64) * dir;
                if s[i] * toward > 0.0 {
                    m[i] = true;
                } else {
                    break;
                }
            }
        }
        m
    }

    pub fn point(q: f64) -> Mask {
        let mut m = vec![false; FINE];
        m[cell(q)] = true;
        m
    }

    /// Cells reached by flowing up `f` for positive time from cells of `from`.
    pub fn forward(f: &PeriodicFunction, from: &Mask) -> Mask {
        let s = slope(f);
        let mut m = vec![false; FINE];
        for c0 in (0..FINE).filter(|&c| from[c]) {
            let step = if s[c0] > 0.0 { 1isize } else { -1 };
            let mut c = c0 as isize;
            loop {
                c += step;
                let i = c.rem_euclid(FINE as isize) as usize;
                if m[i] || (s[i] > 0.0) != (step > 0) || i == c0 {
                    break;
                }
                m[i] = true;
            }
        }
        m
    }

    pub fn and(a: &Mask, b: &Mask) -> Mask {
        a.iter().zip(b).map(|(x, y)| *x && *y).collect()
    }

    /// Centres of the connected runs of `m` shorter than `max_len` cells.
    pub fn isolated(m: &Mask, max_len: usize) -> Vec<f64> {
        let mut out = Vec::new();
        let start = (0..FINE).find(|&c| !m[c]).unwrap_or(0);
        let mut run: Vec<usize> = Vec::new();
        for off in 1..=FINE {
            let c = (start + off) % FINE;
            if m[c] {
                run.push(c);
            } else if !run.is_empty() {
                if run.len() <= max_len {
                    let mid = run[0] as f64 + (run.len() - 1) as f64 / 2.0;
                    out.push(wrap(TAU * mid / FINE as f64));
                }
                run.clear();
            }
        }
        out
    }

    /// Vertex positions (post-order) of every rigid tree of each topology.
    pub fn trees(seq: &Sequence, q: &[CriticalPoint]) -> Vec<(usize, Vec<f64>)> {
        let k = q.len() - 1;
        let mut out = Vec::new();
        for topo in enumerate_topologies(k).unwrap() {
            let leaf = |l: usize| {
                let f = seq.f(l, l + 1);
                if q[l].index == 1 {
                    point(q[l].theta)
                } else {
                    basin(f, q[l].theta, -1.0)
                }
            };
            let root = if q[k].index == 0 { point(q[k].theta) } else { basin(seq.f(0, k), q[k].theta, 1.0) };
            // enumerate by fixing vertex positions one at a time (k <= 3 has at most 2 vertices)
            let mut masks: Vec<Mask> = (0..k).map(leaf).collect();
            let mut chosen: Vec<Vec<f64>> = vec![vec![]];
            for v in &topo.vertices {
                let incoming = |node: usize, masks: &Vec<Mask>| {
                    if node < k {
                        masks[node].clone()
                    } else {
                        let (i, j) = topo.edges[node].label;
                        forward(seq.f(i, j), &masks[node])
                    }
                };
                let here = and(&incoming(v.lower, &masks), &incoming(v.upper, &masks));
                let here = if v.id == topo.vertices.last().unwrap().id { and(&here, &root) } else { here };
                let pts = isolated(&here, 8);
                masks.resize(v.id + 1, vec![false; FINE]);
                if pts.len() > 1 {
                    // keep it simple: the fixtures have at most one candidate per inner vertex
                    panic!("oracle: several candidates for vertex {}", v.id);
                }
                chosen = pts.iter().flat_map(|p| chosen.iter().map(move |c| [c.clone(), vec![*p]].concat())).collect();
                masks[v.id] = pts.first().map(|p| point(*p)).unwrap_or_else(|| vec![false; FINE]);
            }
            for c in chosen {
                out.push((topo.id, c));
            }
        }
        out
    }
}

pub fn cosine_triple() -> (Sequence, Vec<CriticalPoint>) {
    let seq = Sequence::new(vec![PeriodicFunction::zero(), PeriodicFunction::cosine(1, 1.0, 0.0), PeriodicFunction::cosine(1, 1.0, 2.0)])
        .unwrap();
    let min = |i: usize, j: usize| seq.crit(i, j).iter().find(|c| c.index == 0).unwrap().theta;
    let q = seq.snap(&[min(0, 1), min(1, 2), min(0, 2)]).unwrap();
    (seq, q)
}

pub fn k3_fixture() -> (Sequence, Vec<CriticalPoint>) {
    let seq = Sequence::new(vec![
        PeriodicFunction::zero(),
        PeriodicFunction::cosine(1, 0.7, 3.45),
        PeriodicFunction::cosine(1, 1.4, 2.2),
        PeriodicFunction::cosine(1, 1.3, 2.75),
    ])
    .unwrap();
    let q = seq.snap(&[3.45, 4.828593114698931, 4.17631788984486, 2.75]).unwrap();
    (seq, q)
}

/// Checks the library trees against the oracle and returns their number.
pub fn compare_with_oracle(seq: &Sequence, q: &[CriticalPoint]) -> usize {
    let k = q.len() - 1;
    let oracle = oracle::trees(seq, q);
    let mut found = Vec::new();
    for t in enumerate_topologies(k).unwrap() {
        for g in find_gradient_trees(&t, seq, q).unwrap() {
            found.push((g.topology_id, g.vertices.clone()));
        }
    }
    assert_eq!(found.len(), oracle.len(), "found {found:?}, oracle {oracle:?}");
    for (id, v) in &found {
        let m = oracle.iter().find(|(oid, ov)| oid == id && ov.iter().zip(v).all(|(a, b)| circle_dist(*a, *b) < 1e-4));
        assert!(m.is_some(), "tree {id} at {v:?} not in oracle {oracle:?}");
    }
    found.len()
}

