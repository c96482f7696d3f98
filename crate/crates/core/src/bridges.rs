//! Bridge detection.
//!
//! A b-bridge is a river path containing v₁ before v_b plus b−1 arcs, the
//! i-th arc containing v_i before v_{i+1}, with all paths and nodes distinct.
//! For ordered systems the river must come after every arc.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::system::PathSystem;

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BridgeWitness {
    pub river: usize,
    pub arcs: Vec<usize>,
    pub nodes: Vec<usize>,
}

impl BridgeWitness {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }
}

/// Two paths holding two nodes in opposite orders: `u` before `v` on `first`,
/// `v` before `u` on `second`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoCycle {
    pub u: usize,
    pub v: usize,
    pub first: usize,
    pub second: usize,
}

fn position(path: &[usize], v: usize) -> Option<usize> {
    path.iter().position(|&x| x == v)
}

fn precedes(path: &[usize], a: usize, b: usize) -> bool {
    matches!((position(path, a), position(path, b)), (Some(i), Some(j)) if i < j)
}

/// Checks every bridge condition of `w` against `system`.
pub fn validate_bridge(system: &PathSystem, w: &BridgeWitness) -> Result<bool> {
    let p = system.paths.len();
    if w.river >= p || w.arcs.iter().any(|&a| a >= p) {
        return Err(Error::input("witness path index out of range"));
    }
    if w.nodes.iter().any(|&v| v >= system.node_count) {
        return Err(Error::input("witness node out of range"));
    }
    let b = w.nodes.len();
    if b < 2 || w.arcs.len() != b - 1 {
        return Ok(false);
    }
    let mut paths = w.arcs.clone();
    paths.push(w.river);
    if !all_distinct(&paths) || !all_distinct(&w.nodes) {
        return Ok(false);
    }
    let arcs_ok = w
        .arcs
        .iter()
        .enumerate()
        .all(|(i, &a)| precedes(&system.paths[a], w.nodes[i], w.nodes[i + 1]));
    Ok(arcs_ok && precedes(&system.paths[w.river], w.nodes[0], w.nodes[b - 1]))
}

/// [`validate_bridge`] plus the ordered condition: river after every arc.
pub fn validate_ordered_bridge(system: &PathSystem, w: &BridgeWitness) -> Result<bool> {
    Ok(validate_bridge(system, w)? && w.arcs.iter().all(|&a| a < w.river))
}

fn all_distinct(xs: &[usize]) -> bool {
    let mut v = xs.to_vec();
    v.sort_unstable();
    v.windows(2).all(|w| w[0] != w[1])
}

/// Walks the common nodes of every path pair `i < j` in the order of `j`,
/// handing their positions on `i` to `f`, which may stop the scan.
fn scan_pairs<T>(system: &PathSystem, mut f: impl FnMut(usize, usize, &[(usize, usize)]) -> Option<T>) -> Option<T> {
    let mut pos_i = vec![usize::MAX; system.node_count];
    let mut common = Vec::new();
    for (i, pi) in system.paths.iter().enumerate() {
        for (k, &v) in pi.iter().enumerate() {
            pos_i[v] = k;
        }
        for j in i + 1..system.paths.len() {
            common.clear();
            for &v in &system.paths[j] {
                if pos_i[v] != usize::MAX {
                    common.push((v, pos_i[v]));
                }
            }
            if common.len() >= 2 {
                if let Some(t) = f(i, j, &common) {
                    return Some(t);
                }
            }
        }
        for &v in pi {
            pos_i[v] = usize::MAX;
        }
    }
    None
}

/// A 2-bridge: two distinct paths sharing two nodes in the same order.
pub fn find_two_bridges(system: &PathSystem) -> Option<BridgeWitness> {
    scan_pairs(system, |i, j, common| {
        common.windows(2).find(|w| w[0].1 < w[1].1).map(|w| BridgeWitness {
            river: j,
            arcs: vec![i],
            nodes: vec![w[0].0, w[1].0],
        })
    })
}

pub fn find_two_cycles(system: &PathSystem) -> Option<TwoCycle> {
    scan_pairs(system, |i, j, common| {
        common.windows(2).find(|w| w[0].1 > w[1].1).map(|w| TwoCycle {
            u: w[1].0,
            v: w[0].0,
            first: i,
            second: j,
        })
    })
}

/// node → list of (path, position), paths ascending.
pub(crate) fn incidences(system: &PathSystem) -> Vec<Vec<(usize, usize)>> {
    let mut inc = vec![Vec::new(); system.node_count];
    for (i, p) in system.paths.iter().enumerate() {
        for (k, &v) in p.iter().enumerate() {
            inc[v].push((i, k));
        }
    }
    inc
}

struct ChainSearch<'a> {
    system: &'a PathSystem,
    inc: Vec<Vec<(usize, usize)>>,
    ordered: bool,
    budget: u64,
    used_work: u64,
    path_used: Vec<bool>,
    node_used: Vec<bool>,
    arcs: Vec<usize>,
    nodes: Vec<usize>,
}

impl ChainSearch<'_> {
    /// Extends the chain from `cur` with `left` more arcs, ending exactly at `target`.
    fn extend(&mut self, cur: usize, left: usize, target: usize, river: usize) -> Result<bool> {
        self.used_work += 1;
        if self.used_work > self.budget {
            return Err(Error::Budget {
                what: "bridge search node expansions".into(),
                limit: self.budget,
                lower_bound: None,
            });
        }
        for idx in 0..self.inc[cur].len() {
            let (q, k) = self.inc[cur][idx];
            if self.path_used[q] || (self.ordered && q >= river) {
                continue;
            }
            let path = &self.system.paths[q];
            for t in k + 1..path.len() {
                let w = path[t];
                if left == 1 {
                    if w == target {
                        self.arcs.push(q);
                        self.nodes.push(w);
                        return Ok(true);
                    }
                    continue;
                }
                if w == target || self.node_used[w] {
                    continue;
                }
                self.path_used[q] = true;
                self.node_used[w] = true;
                self.arcs.push(q);
                self.nodes.push(w);
                if self.extend(w, left - 1, target, river)? {
                    return Ok(true);
                }
                self.arcs.pop();
                self.nodes.pop();
                self.node_used[w] = false;
                self.path_used[q] = false;
            }
        }
        Ok(false)
    }
}

/// A minimum-size (ordered) bridge with at most `kmax` nodes, if any.
///
/// Sizes are tried in increasing order; for each size rivers, then v₁ and v_b
/// positions, are explored in index order, so the witness is deterministic.
pub fn find_bridge_upto(
    system: &PathSystem,
    kmax: usize,
    ordered: bool,
    budget: u64,
) -> Result<Option<BridgeWitness>> {
    if kmax < 2 {
        return Err(Error::input("kmax must be at least 2"));
    }
    let nonempty = system.paths.iter().filter(|p| !p.is_empty()).count();
    let top = kmax.min(nonempty).min(system.node_count);
    let mut s = ChainSearch {
        system,
        inc: incidences(system),
        ordered,
        budget,
        used_work: 0,
        path_used: vec![false; system.paths.len()],
        node_used: vec![false; system.node_count],
        arcs: Vec::new(),
        nodes: Vec::new(),
    };
    for b in 2..=top {
        for (r, river) in system.paths.iter().enumerate() {
            for i in 0..river.len() {
                for j in i + 1..river.len() {
                    let (v1, vb) = (river[i], river[j]);
                    s.path_used[r] = true;
                    s.node_used[v1] = true;
                    s.node_used[vb] = true;
                    s.nodes.push(v1);
                    let found = s.extend(v1, b - 1, vb, r)?;
                    if found {
                        return Ok(Some(BridgeWitness {
                            river: r,
                            arcs: std::mem::take(&mut s.arcs),
                            nodes: std::mem::take(&mut s.nodes),
                        }));
                    }
                    s.nodes.pop();
                    s.node_used[v1] = false;
                    s.node_used[vb] = false;
                    s.path_used[r] = false;
                }
            }
        }
    }
    Ok(None)
}

/// Smallest b ≤ kmax with a b-bridge, or `None` for "> kmax".
pub fn bridge_girth(system: &PathSystem, kmax: usize, ordered: bool, budget: u64) -> Result<Option<usize>> {
    Ok(find_bridge_upto(system, kmax, ordered, budget)?.map(|w| w.size()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    BridgeFree,
    /// A bridge whose river is `river` and whose endpoints are `u` before `v`.
    BridgeExists {
        u: usize,
        v: usize,
        river: usize,
        witness: BridgeWitness,
    },
}

impl Certificate {
    pub fn is_bridge_free(&self) -> bool {
        matches!(self, Certificate::BridgeFree)
    }

    pub fn witness(&self) -> Option<&BridgeWitness> {
        match self {
            Certificate::BridgeFree => None,
            Certificate::BridgeExists { witness, .. } => Some(witness),
        }
    }
}

/// Adjacency of the consecutive-pair digraph, each edge tagged with the first
/// path that contributed it.
struct OwnedGraph {
    succ: Vec<Vec<(usize, usize)>>,
    owner: HashMap<(usize, usize), usize>,
}

impl OwnedGraph {
    fn new(n: usize) -> Self {
        OwnedGraph {
            succ: vec![Vec::new(); n],
            owner: HashMap::new(),
        }
    }

    fn add_path(&mut self, idx: usize, path: &[usize]) {
        for w in path.windows(2) {
            if let std::collections::hash_map::Entry::Vacant(e) = self.owner.entry((w[0], w[1])) {
                e.insert(idx);
                self.succ[w[0]].push((w[1], idx));
            }
        }
    }

    /// BFS tree from `src`, skipping edges owned by `skip`.
    fn bfs(&self, src: usize, skip: Option<usize>, parent: &mut [usize]) {
        parent.fill(usize::MAX);
        parent[src] = src;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &(v, o) in &self.succ[u] {
                if Some(o) != skip && parent[v] == usize::MAX {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
    }

    /// Turns the BFS walk `src ⇝ dst` into a bridge with `river` by merging
    /// same-path runs; a repeated path is shortcut between its first and last use.
    fn walk_to_bridge(&self, system: &PathSystem, parent: &[usize], dst: usize, river: usize) -> BridgeWitness {
        let mut walk = vec![dst];
        let mut x = dst;
        while parent[x] != x {
            x = parent[x];
            walk.push(x);
        }
        walk.reverse();
        // segments (path, from, to)
        let mut segs: Vec<(usize, usize, usize)> = Vec::new();
        for w in walk.windows(2) {
            let o = self.owner[&(w[0], w[1])];
            match segs.last_mut() {
                Some(last) if last.0 == o => last.2 = w[1],
                _ => segs.push((o, w[0], w[1])),
            }
        }
        loop {
            let dup = (0..segs.len()).find_map(|a| {
                (a + 1..segs.len()).rev().find(|&c| segs[c].0 == segs[a].0).map(|c| (a, c))
            });
            match dup {
                Some((a, c)) => {
                    debug_assert!(precedes(&system.paths[segs[a].0], segs[a].1, segs[c].2));
                    let merged = (segs[a].0, segs[a].1, segs[c].2);
                    segs.splice(a..=c, [merged]);
                }
                None => break,
            }
        }
        let mut nodes = vec![segs[0].1];
        nodes.extend(segs.iter().map(|s| s.2));
        BridgeWitness {
            river,
            arcs: segs.iter().map(|s| s.0).collect(),
            nodes,
        }
    }
}

/// Decides bridge-freeness of an acyclic system by reachability.
///
/// A 2-bridge is reported first. Otherwise every consecutive pair belongs to a
/// single path, and a bridge with river π exists iff some u before v on π is
/// reachable in the consecutive-pair digraph with π's own edges removed.
pub fn certify_bridge_free_acyclic(system: &PathSystem) -> Result<Certificate> {
    system.check_valid()?;
    if let Err(cycle) = system.topological_order() {
        return Err(Error::precondition(format!(
            "system is not acyclic (cycle through {cycle:?})"
        )));
    }
    if let Some(w) = find_two_bridges(system) {
        return Ok(Certificate::BridgeExists {
            u: w.nodes[0],
            v: w.nodes[1],
            river: w.river,
            witness: w,
        });
    }
    let mut g = OwnedGraph::new(system.node_count);
    for (i, p) in system.paths.iter().enumerate() {
        g.add_path(i, p);
    }
    let mut parent = vec![usize::MAX; system.node_count];
    for (r, path) in system.paths.iter().enumerate() {
        for a in 0..path.len().saturating_sub(1) {
            g.bfs(path[a], Some(r), &mut parent);
            if let Some(&v) = path[a + 1..].iter().find(|&&v| parent[v] != usize::MAX) {
                let witness = g.walk_to_bridge(system, &parent, v, r);
                return Ok(Certificate::BridgeExists {
                    u: path[a],
                    v,
                    river: r,
                    witness,
                });
            }
        }
    }
    Ok(Certificate::BridgeFree)
}

/// Ordered analogue: path i may not have a pair u before v that is already
/// connected through paths with smaller index. Reports the first failing i.
pub fn certify_ordered_bridge_free_acyclic(system: &PathSystem) -> Result<Certificate> {
    system.check_valid()?;
    if let Err(cycle) = system.topological_order() {
        return Err(Error::precondition(format!(
            "system is not acyclic (cycle through {cycle:?})"
        )));
    }
    let mut g = OwnedGraph::new(system.node_count);
    let mut parent = vec![usize::MAX; system.node_count];
    for (r, path) in system.paths.iter().enumerate() {
        for a in 0..path.len().saturating_sub(1) {
            g.bfs(path[a], None, &mut parent);
            if let Some(&v) = path[a + 1..].iter().find(|&&v| parent[v] != usize::MAX) {
                let witness = g.walk_to_bridge(system, &parent, v, r);
                return Ok(Certificate::BridgeExists {
                    u: path[a],
                    v,
                    river: r,
                    witness,
                });
            }
        }
        g.add_path(r, path);
    }
    Ok(Certificate::BridgeFree)
}
