//! Weighted digraph instances with demand pairs, plus the shortest-path and
//! reachability primitives the reductions and verifiers share.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet, VecDeque};

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Directed graph with unbounded nonnegative integer weights and demand pairs.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct WeightedDigraph {
    pub node_count: usize,
    pub edges: Vec<(usize, usize, BigUint)>,
    pub demands: Vec<(usize, usize)>,
    /// Optional terminal flags (empty = none recorded).
    pub terminal: Vec<bool>,
}

impl WeightedDigraph {
    pub fn new(node_count: usize) -> Self {
        WeightedDigraph {
            node_count,
            ..Default::default()
        }
    }

    /// No self-loops, at most one edge per ordered pair, ids in range.
    pub fn check_valid(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, (u, v, _)) in self.edges.iter().enumerate() {
            if *u >= self.node_count || *v >= self.node_count {
                return Err(Error::input(format!("edge {i} has an endpoint out of range")));
            }
            if u == v {
                return Err(Error::input(format!("edge {i} is a self-loop at {u}")));
            }
            if !seen.insert((*u, *v)) {
                return Err(Error::input(format!("parallel edge {u}→{v}")));
            }
        }
        if let Some((s, t)) = self.demands.iter().find(|(s, t)| *s >= self.node_count || *t >= self.node_count) {
            return Err(Error::input(format!("demand ({s},{t}) out of range")));
        }
        if !self.terminal.is_empty() && self.terminal.len() != self.node_count {
            return Err(Error::input("terminal flags do not cover every node"));
        }
        Ok(())
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::new(self.node_count, self.edges.iter().map(|(u, v, _)| (*u, *v)))
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edges.iter().position(|(a, b, _)| *a == u && *b == v)
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("digraph 1\nnodes {}\n", self.node_count);
        for (u, v, w) in &self.edges {
            out.push_str(&format!("edge {u} {v} {w}\n"));
        }
        for (s, t) in &self.demands {
            out.push_str(&format!("demand {s} {t}\n"));
        }
        for (v, &t) in self.terminal.iter().enumerate() {
            if t {
                out.push_str(&format!("terminal {v}\n"));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<WeightedDigraph> {
        let raw = RawDigraph::parse(text)?;
        if !raw.types.is_empty() {
            return Err(Error::Parse {
                line: 0,
                reason: "typed edges belong to a gap instance".into(),
            });
        }
        let mut g = WeightedDigraph::new(raw.node_count);
        g.edges = raw.edges;
        g.demands = raw.demands;
        if !raw.terminals.is_empty() {
            g.terminal = vec![false; raw.node_count];
            for v in raw.terminals {
                g.terminal[v] = true;
            }
        }
        g.check_valid()?;
        Ok(g)
    }
}

/// Line-level contents of a digraph-format file, shared with gap instances.
#[derive(Debug, Default)]
pub(crate) struct RawDigraph {
    pub node_count: usize,
    pub edges: Vec<(usize, usize, BigUint)>,
    pub demands: Vec<(usize, usize)>,
    pub terminals: Vec<usize>,
    pub types: Vec<(usize, u32)>,
    pub params: Option<Vec<usize>>,
}

impl RawDigraph {
    pub fn parse(text: &str) -> Result<RawDigraph> {
        let err = |line: usize, reason: String| Error::Parse { line, reason };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines.next().ok_or_else(|| err(0, "empty input".into()))?;
        if header.split_whitespace().collect::<Vec<_>>() != ["digraph", "1"] {
            return Err(err(ln, "expected header `digraph 1`".into()));
        }
        let (ln, nodes) = lines.next().ok_or_else(|| err(ln, "missing `nodes` line".into()))?;
        let toks: Vec<&str> = nodes.split_whitespace().collect();
        let n: usize = match toks.as_slice() {
            ["nodes", v] => v.parse().map_err(|_| err(ln, "bad node count".into()))?,
            _ => return Err(err(ln, "expected `nodes <n>`".into())),
        };
        let mut raw = RawDigraph {
            node_count: n,
            ..Default::default()
        };
        for (ln, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| -> Result<usize> {
                s.parse().map_err(|_| err(ln, format!("bad integer `{s}`")))
            };
            let node = |s: &str| -> Result<usize> {
                let v = num(s)?;
                if v >= n {
                    return Err(err(ln, format!("node {v} out of range")));
                }
                Ok(v)
            };
            match toks.as_slice() {
                ["edge", u, v, w] => {
                    let w: BigUint = w.parse().map_err(|_| err(ln, format!("bad weight `{w}`")))?;
                    raw.edges.push((node(u)?, node(v)?, w));
                }
                ["demand", s, t] => raw.demands.push((node(s)?, node(t)?)),
                ["terminal", v] => raw.terminals.push(node(v)?),
                ["type", e, i] => {
                    let ty = num(i)? as u32;
                    raw.types.push((num(e)?, ty));
                }
                ["params", rest @ ..] => {
                    raw.params = Some(rest.iter().map(|s| num(s)).collect::<Result<_>>()?);
                }
                _ => return Err(err(ln, format!("unrecognised line `{line}`"))),
            }
        }
        Ok(raw)
    }
}

/// Forward and backward adjacency lists holding edge indices.
#[derive(Clone, Debug)]
pub struct Adjacency {
    pub out: Vec<Vec<(usize, usize)>>,
    pub inc: Vec<Vec<(usize, usize)>>,
}

impl Adjacency {
    pub fn new(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> Self {
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for (i, (u, v)) in edges.enumerate() {
            out[u].push((v, i));
            inc[v].push((u, i));
        }
        Adjacency { out, inc }
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    /// Nodes reachable from `s` (forward) using edges accepted by `ok`.
    pub fn reach(&self, s: usize, ok: impl Fn(usize) -> bool) -> Vec<bool> {
        reach_in(&self.out, s, ok)
    }

    pub fn coreach(&self, t: usize, ok: impl Fn(usize) -> bool) -> Vec<bool> {
        reach_in(&self.inc, t, ok)
    }

    /// Fewest-edge s⇝t path as an edge-index list, using edges accepted by `ok`.
    pub fn bfs_path(&self, s: usize, t: usize, ok: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
        let n = self.node_count();
        let mut via = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for &(v, e) in &self.out[u] {
                if !seen[v] && ok(e) {
                    seen[v] = true;
                    via[v] = e;
                    queue.push_back(v);
                }
            }
        }
        if !seen[t] {
            return None;
        }
        let mut path = Vec::new();
        let mut x = t;
        while x != s {
            let e = via[x];
            path.push(e);
            x = self.inc_source(e, x);
        }
        path.reverse();
        Some(path)
    }

    fn inc_source(&self, e: usize, head: usize) -> usize {
        self.inc[head].iter().find(|&&(_, i)| i == e).map(|&(u, _)| u).unwrap()
    }

    pub fn hop_distance(&self, s: usize, t: usize, ok: impl Fn(usize) -> bool) -> Option<usize> {
        self.bfs_path(s, t, ok).map(|p| p.len())
    }
}

fn reach_in(lists: &[Vec<(usize, usize)>], s: usize, ok: impl Fn(usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; lists.len()];
    seen[s] = true;
    let mut stack = vec![s];
    while let Some(u) = stack.pop() {
        for &(v, e) in &lists[u] {
            if !seen[v] && ok(e) {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Exact shortest distances from `s` (None = unreachable).
pub fn dijkstra(adj: &Adjacency, weights: &[BigUint], s: usize) -> Vec<Option<BigUint>> {
    let n = adj.node_count();
    let mut dist: Vec<Option<BigUint>> = vec![None; n];
    let mut done = vec![false; n];
    dist[s] = Some(BigUint::zero());
    let mut heap = BinaryHeap::from([Reverse((BigUint::zero(), s))]);
    while let Some(Reverse((d, u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, e) in &adj.out[u] {
            let nd = &d + &weights[e];
            if dist[v].as_ref().is_none_or(|old| nd < *old) {
                dist[v] = Some(nd.clone());
                heap.push(Reverse((nd, v)));
            }
        }
    }
    dist
}

/// Distance and number of minimum-weight s⇝t paths, the count saturating at 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShortestCount {
    pub distance: Option<BigUint>,
    pub count: u8,
}

/// Counts minimum-weight s⇝t paths over the tight-edge subgraph.
///
/// A zero-weight cycle on a tight s⇝t route is reported as count 2.
pub fn count_shortest_paths(adj: &Adjacency, weights: &[BigUint], s: usize, t: usize) -> ShortestCount {
    let (count, dist, _) = shortest_path_dag(adj, weights, s, t);
    ShortestCount { distance: dist, count }
}

/// The unique minimum-weight s⇝t path as edge indices, if exactly one exists.
pub fn unique_shortest_path(adj: &Adjacency, weights: &[BigUint], s: usize, t: usize) -> Option<Vec<usize>> {
    let (count, _, tight) = shortest_path_dag(adj, weights, s, t);
    if count != 1 {
        return None;
    }
    // every relevant node has exactly one relevant tight out-edge except t
    let mut path = Vec::new();
    let mut x = s;
    while x != t {
        let e = adj.out[x].iter().find(|(_, e)| tight[*e]).map(|&(_, e)| e)?;
        path.push(e);
        x = adj.out[x].iter().find(|&&(_, i)| i == e).unwrap().0;
    }
    Some(path)
}

/// (saturated count, distance, tight edges lying on some shortest s⇝t path).
fn shortest_path_dag(adj: &Adjacency, weights: &[BigUint], s: usize, t: usize) -> (u8, Option<BigUint>, Vec<bool>) {
    let n = adj.node_count();
    let m = weights.len();
    let dist = dijkstra(adj, weights, s);
    let Some(dt) = dist[t].clone() else {
        return (0, None, vec![false; m]);
    };
    if s == t {
        return (1, Some(dt), vec![false; m]);
    }
    let mut tight = vec![false; m];
    for u in 0..n {
        let Some(du) = &dist[u] else { continue };
        for &(v, e) in &adj.out[u] {
            if let Some(dv) = &dist[v] {
                if du + &weights[e] == *dv {
                    tight[e] = true;
                }
            }
        }
    }
    let fwd = adj.reach(s, |e| tight[e]);
    let back = adj.coreach(t, |e| tight[e]);
    for u in 0..n {
        for &(v, e) in &adj.out[u] {
            if tight[e] && !(fwd[u] && back[v]) {
                tight[e] = false;
            }
        }
    }
    // Kahn over the relevant tight subgraph
    let relevant: Vec<bool> = (0..n).map(|v| fwd[v] && back[v]).collect();
    let mut indeg = vec![0usize; n];
    for u in 0..n {
        for &(v, e) in &adj.out[u] {
            if tight[e] {
                indeg[v] += 1;
            }
        }
    }
    let mut ways = vec![0u8; n];
    ways[s] = 1;
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| relevant[v] && indeg[v] == 0).collect();
    let mut processed = 0;
    while let Some(u) = queue.pop_front() {
        processed += 1;
        for &(v, e) in &adj.out[u] {
            if tight[e] {
                ways[v] = (ways[v] + ways[u]).min(2);
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    queue.push_back(v);
                }
            }
        }
    }
    let total = relevant.iter().filter(|&&r| r).count();
    let count = if processed < total { 2 } else { ways[t] };
    (count, Some(dt), tight)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize, u64)]) -> WeightedDigraph {
        let mut g = WeightedDigraph::new(n);
        g.edges = edges.iter().map(|&(u, v, w)| (u, v, BigUint::from(w))).collect();
        g
    }

    fn weights(g: &WeightedDigraph) -> Vec<BigUint> {
        g.edges.iter().map(|e| e.2.clone()).collect()
    }

    #[test]
    fn diamond_has_two_shortest_paths() {
        let g = graph(4, &[(0, 1, 1), (1, 3, 1), (0, 2, 1), (2, 3, 1)]);
        let c = count_shortest_paths(&g.adjacency(), &weights(&g), 0, 3);
        assert_eq!(c, ShortestCount { distance: Some(BigUint::from(2u32)), count: 2 });
        assert_eq!(unique_shortest_path(&g.adjacency(), &weights(&g), 0, 3), None);
    }

    #[test]
    fn single_edge_and_unreachable() {
        let g = graph(3, &[(0, 1, 7)]);
        let c = count_shortest_paths(&g.adjacency(), &weights(&g), 0, 1);
        assert_eq!(c, ShortestCount { distance: Some(BigUint::from(7u32)), count: 1 });
        let c = count_shortest_paths(&g.adjacency(), &weights(&g), 0, 2);
        assert_eq!(c, ShortestCount { distance: None, count: 0 });
    }

    #[test]
    fn heavier_alternative_does_not_count() {
        let g = graph(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 5)]);
        assert_eq!(unique_shortest_path(&g.adjacency(), &weights(&g), 0, 2), Some(vec![0, 1]));
    }

    #[test]
    fn zero_cycle_counts_as_many() {
        let g = graph(4, &[(0, 1, 1), (1, 2, 0), (2, 1, 0), (1, 3, 1)]);
        assert_eq!(count_shortest_paths(&g.adjacency(), &weights(&g), 0, 3).count, 2);
    }

    #[test]
    fn digraph_round_trip() {
        let mut g = graph(3, &[(0, 1, 1), (1, 2, 1)]);
        g.edges[1].2 = "123456789012345678901234567890".parse().unwrap();
        g.demands.push((0, 2));
        g.terminal = vec![true, false, true];
        assert_eq!(WeightedDigraph::parse(&g.serialize()).unwrap(), g);
        assert!(WeightedDigraph::parse("digraph 1\nnodes 2\nedge 0 0 1\n").is_err());
        assert!(WeightedDigraph::parse("digraph 1\nnodes 2\nedge 0 1 x\n").is_err());
    }
}
