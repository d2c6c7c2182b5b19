//! Label-setting shortest paths over the arc arrays.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Attach, MetricGraph};

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Initial labels for an attached source point with offset `off`.
pub(super) fn seeds(a: &Attach, off: f64) -> Vec<(usize, f64)> {
    match a {
        Attach::Node(n) => vec![(*n, off)],
        Attach::Links { links, .. } => links.iter().map(|&(n, w_out, _)| (n, off + w_out)).collect(),
    }
}

/// Multi-source search; `reverse` follows arcs backwards.
pub(super) fn run(g: &MetricGraph, seeds: &[(usize, f64)], reverse: bool) -> Vec<f64> {
    let arcs = if reverse { &g.reverse } else { &g.arcs };
    let mut dist = vec![f64::INFINITY; g.nodes.len()];
    let mut heap = BinaryHeap::new();
    for &(n, d) in seeds {
        if d < dist[n] {
            dist[n] = d;
            heap.push(Entry(d, n));
        }
    }
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for (v, w) in arcs.out(u) {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry(nd, v));
            }
        }
    }
    dist
}
