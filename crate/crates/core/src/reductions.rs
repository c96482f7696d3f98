//! Path systems compiled into digraph instances, the independence rewrites,
//! adversaries for shortcut sets and exact hopsets, the online preserver game,
//! the approximate-preserver instance and the greedy spanner.

use std::collections::{HashMap, HashSet, VecDeque};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use petgraph::graph::DiGraph;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bridges::{
    certify_bridge_free_acyclic, certify_ordered_bridge_free_acyclic, find_bridge_upto, Certificate,
};
use crate::error::{Error, Result};
use crate::graph::{count_shortest_paths, dijkstra, unique_shortest_path, Adjacency, ShortestCount, WeightedDigraph};
use crate::system::PathSystem;

/// Perturbation residues lie in [0, 2^PERTURB_BITS).
const PERTURB_BITS: u32 = 40;
const PERTURB_RETRIES: usize = 16;

/// Consecutive-pair digraph with unit weights and one (first, last) demand per path.
pub fn system_to_digraph(system: &PathSystem) -> Result<WeightedDigraph> {
    system.check_valid()?;
    if let Some(i) = system.paths.iter().position(|p| p.len() < 2) {
        return Err(Error::input(format!("path {i} has fewer than 2 nodes")));
    }
    let mut g = WeightedDigraph::new(system.node_count);
    let mut seen = HashSet::new();
    for (_, u, v) in system.hops() {
        if seen.insert((u, v)) {
            g.edges.push((u, v, BigUint::one()));
        }
    }
    g.demands = system.paths.iter().map(|p| (p[0], p[p.len() - 1])).collect();
    Ok(g)
}

fn edge_ids(g: &WeightedDigraph) -> HashMap<(usize, usize), usize> {
    g.edges.iter().enumerate().map(|(i, (u, v, _))| ((*u, *v), i)).collect()
}

fn path_edges(ids: &HashMap<(usize, usize), usize>, path: &[usize]) -> Vec<usize> {
    path.windows(2).map(|w| ids[&(w[0], w[1])]).collect()
}

/// Weighted hard instance for distance preservers.
///
/// Paths are taken in order; the edges of path i all get weight
/// 1 + (total weight assigned so far), so any route through a newer edge is
/// longer than every route made of older ones.
pub fn dp_hard_instance(system: &PathSystem) -> Result<WeightedDigraph> {
    if let Some(i) = system.paths.iter().position(|p| p.len() < 2) {
        return Err(Error::input(format!("path {i} has fewer than 2 nodes")));
    }
    if let Certificate::BridgeExists { witness, .. } = certify_ordered_bridge_free_acyclic(system)? {
        return Err(Error::precondition(format!("ordered bridge {witness:?}")));
    }
    let mut g = WeightedDigraph::new(system.node_count);
    let mut total = BigUint::zero();
    let mut seen = HashSet::new();
    for p in &system.paths {
        let w = &total + 1u32;
        let mut added = BigUint::zero();
        for e in p.windows(2) {
            if seen.insert((e[0], e[1])) {
                g.edges.push((e[0], e[1], w.clone()));
                added += &w;
            }
        }
        total += added;
        g.demands.push((p[0], p[p.len() - 1]));
    }
    Ok(g)
}

fn weights_of(g: &WeightedDigraph) -> Vec<BigUint> {
    g.edges.iter().map(|e| e.2.clone()).collect()
}

/// Distance and saturated count of minimum-weight s⇝t paths in `inst`.
pub fn count_instance_shortest_paths(inst: &WeightedDigraph, s: usize, t: usize) -> ShortestCount {
    count_shortest_paths(&inst.adjacency(), &weights_of(inst), s, t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// unique shortest paths
    Distance,
    /// unique paths
    Reachability,
}

/// Edge-index path of each demand, if it is unique in the given sense.
fn demand_paths(inst: &WeightedDigraph, mode: Mode) -> std::result::Result<Vec<Vec<usize>>, String> {
    let adj = inst.adjacency();
    let w = weights_of(inst);
    let mut out = Vec::with_capacity(inst.demands.len());
    for (i, &(s, t)) in inst.demands.iter().enumerate() {
        if s == t {
            return Err(format!("demand {i} ({s},{t}) is degenerate"));
        }
        let path = match mode {
            Mode::Distance => {
                let c = count_shortest_paths(&adj, &w, s, t);
                match c.count {
                    0 => return Err(format!("demand {i} ({s},{t}) is unreachable")),
                    1 => unique_shortest_path(&adj, &w, s, t).unwrap(),
                    _ => return Err(format!("demand {i} ({s},{t}) has a non-unique shortest path")),
                }
            }
            Mode::Reachability => {
                let Some(p) = adj.bfs_path(s, t, |_| true) else {
                    return Err(format!("demand {i} ({s},{t}) is unreachable"));
                };
                // a second simple path must skip some edge of this one
                if p.iter().any(|&e| adj.reach(s, |f| f != e)[t]) {
                    return Err(format!("demand {i} ({s},{t}) has a non-unique path"));
                }
                p
            }
        };
        out.push(path);
    }
    Ok(out)
}

/// Checks that every demand has a unique (shortest) path and that these paths
/// are pairwise edge-disjoint. Returns the paths as edge-index lists.
pub fn check_independence(inst: &WeightedDigraph, mode: Mode) -> Result<Vec<Vec<usize>>> {
    inst.check_valid()?;
    let paths = demand_paths(inst, mode).map_err(Error::Violation)?;
    let mut owner: HashMap<usize, usize> = HashMap::new();
    for (i, p) in paths.iter().enumerate() {
        for &e in p {
            if let Some(j) = owner.insert(e, i) {
                let (u, v, _) = &inst.edges[e];
                return Err(Error::Violation(format!(
                    "shared edge {u}→{v} between demands {j} and {i}"
                )));
            }
        }
    }
    Ok(paths)
}

/// Edges in the union of the demand paths of an independent instance.
pub fn preserver_size(inst: &WeightedDigraph, mode: Mode) -> Result<usize> {
    Ok(check_independence(inst, mode)?.iter().map(Vec::len).sum())
}

/// One rewrite of an independence procedure, with the path-length-sum
/// potential after it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rewrite {
    DeleteDemand { demand: (usize, usize), potential: usize },
    Reroute { from: (usize, usize), to: (usize, usize), potential: usize },
    SkipEdge { x: usize, y: usize, z: usize, potential: usize },
    /// Several same-kind rewrites at once (reroutes of the suffix pass).
    Start { potential: usize },
}

impl Rewrite {
    pub fn potential(&self) -> usize {
        match self {
            Rewrite::DeleteDemand { potential, .. }
            | Rewrite::Reroute { potential, .. }
            | Rewrite::SkipEdge { potential, .. }
            | Rewrite::Start { potential } => *potential,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct IndependenceLog {
    pub rewrites: Vec<Rewrite>,
    pub perturb_attempts: usize,
}

impl IndependenceLog {
    /// True iff the potential strictly drops at every logged rewrite.
    pub fn strictly_decreasing(&self) -> bool {
        self.rewrites.windows(2).all(|w| w[1].potential() < w[0].potential())
    }
}

fn perturb(weights: &[BigUint], rng: &mut ChaCha8Rng) -> Vec<BigUint> {
    let scale = BigUint::from(weights.len().max(1) as u64) << PERTURB_BITS;
    weights
        .iter()
        .map(|w| w * &scale + BigUint::from(rng.gen_range(0..(1u64 << PERTURB_BITS))))
        .collect()
}

/// Rewrites a distance-preserver instance into an independent one.
///
/// Weights are scaled by m·2⁴⁰ and get a random residue below 2⁴⁰, which
/// keeps every strictly longer route strictly longer and breaks ties; the
/// perturbation is resampled until every demand has a unique shortest path.
/// The graph is cut down to the union of those paths, then two rules run
/// until neither applies: drop a demand that uses no edge alone; or, where a
/// path has consecutive edges (x,y),(y,z) exactly one of which it uses alone,
/// replace the lone edge by (x,z) weighted w(x,y)+w(y,z).
pub fn make_independent_dp(inst: &WeightedDigraph, seed: u64) -> Result<(WeightedDigraph, IndependenceLog)> {
    inst.check_valid()?;
    let adj = inst.adjacency();
    for (i, &(s, t)) in inst.demands.iter().enumerate() {
        if s == t || !adj.reach(s, |_| true)[t] {
            return Err(Error::precondition(format!("demand {i} ({s},{t}) is not reachable")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = weights_of(inst);
    let mut log = IndependenceLog::default();
    let mut found = None;
    for attempt in 1..=PERTURB_RETRIES {
        log.perturb_attempts = attempt;
        let w = perturb(&base, &mut rng);
        let paths: Option<Vec<Vec<usize>>> = inst
            .demands
            .iter()
            .map(|&(s, t)| unique_shortest_path(&adj, &w, s, t))
            .collect();
        if let Some(paths) = paths {
            found = Some((w, paths));
            break;
        }
    }
    let Some((w, paths)) = found else {
        return Err(Error::Budget {
            what: "perturbation retries".into(),
            limit: PERTURB_RETRIES as u64,
            lower_bound: None,
        });
    };

    // keep only edges on demand paths; edges become Option so ids stay stable
    let used: HashSet<usize> = paths.iter().flatten().copied().collect();
    let mut edges: Vec<Option<(usize, usize, BigUint)>> = inst
        .edges
        .iter()
        .enumerate()
        .map(|(i, (u, v, _))| used.contains(&i).then(|| (*u, *v, w[i].clone())))
        .collect();
    let mut demands: Vec<(usize, usize)> = inst.demands.clone();
    let mut paths = paths;
    let potential = |paths: &[Vec<usize>]| paths.iter().map(Vec::len).sum::<usize>();
    log.rewrites.push(Rewrite::Start { potential: potential(&paths) });

    loop {
        let mut usage: HashMap<usize, usize> = HashMap::new();
        for p in &paths {
            for &e in p {
                *usage.entry(e).or_default() += 1;
            }
        }
        let alone = |e: &usize| usage[e] == 1;
        if let Some(i) = paths.iter().position(|p| !p.iter().any(alone)) {
            let d = demands.remove(i);
            paths.remove(i);
            for e in 0..edges.len() {
                if edges[e].is_some() && !paths.iter().any(|p| p.contains(&e)) {
                    edges[e] = None;
                }
            }
            log.rewrites.push(Rewrite::DeleteDemand { demand: d, potential: potential(&paths) });
            continue;
        }
        let skip = paths.iter().enumerate().find_map(|(i, p)| {
            p.windows(2)
                .position(|pair| alone(&pair[0]) != alone(&pair[1]))
                .map(|k| (i, k))
        });
        let Some((i, k)) = skip else { break };
        let (e1, e2) = (paths[i][k], paths[i][k + 1]);
        let (x, y, w1) = edges[e1].clone().unwrap();
        let (_, z, w2) = edges[e2].clone().unwrap();
        if edges.iter().flatten().any(|(a, b, _)| *a == x && *b == z) {
            return Err(Error::Violation(format!("edge skip {x}→{z} would duplicate an edge")));
        }
        let lone = if alone(&e1) { e1 } else { e2 };
        edges[lone] = None;
        edges.push(Some((x, z, w1 + w2)));
        paths[i].splice(k..k + 2, [edges.len() - 1]);
        log.rewrites.push(Rewrite::SkipEdge { x, y, z, potential: potential(&paths) });

        // the other demands' paths must be untouched and still unique
        let snapshot = compact(inst.node_count, &edges, &demands);
        let fresh = demand_paths(&snapshot.0, Mode::Distance).map_err(|e| {
            Error::Violation(format!("uniqueness lost after edge skip: {e}"))
        })?;
        let expected: Vec<Vec<usize>> = paths
            .iter()
            .map(|p| p.iter().map(|e| snapshot.1[e]).collect())
            .collect();
        if fresh != expected {
            return Err(Error::Violation("edge skip changed another demand's path".into()));
        }
    }
    let (out, _) = compact(inst.node_count, &edges, &demands);
    check_independence(&out, Mode::Distance)?;
    Ok((out, log))
}

/// Drops deleted edges; returns the instance and the old→new edge id map.
fn compact(
    n: usize,
    edges: &[Option<(usize, usize, BigUint)>],
    demands: &[(usize, usize)],
) -> (WeightedDigraph, HashMap<usize, usize>) {
    let mut g = WeightedDigraph::new(n);
    let mut map = HashMap::new();
    for (i, e) in edges.iter().enumerate() {
        if let Some(e) = e {
            map.insert(i, g.edges.len());
            g.edges.push(e.clone());
        }
    }
    g.demands = demands.to_vec();
    (g, map)
}

#[derive(Clone, Debug)]
pub struct RpIndependent {
    pub instance: WeightedDigraph,
    /// Strongly connected component of each input node (= node of the output).
    pub contraction: Vec<usize>,
    /// In- and out-tree edges (input ids) that keep each component strongly connected.
    pub tree_edges: Vec<(usize, usize)>,
    /// Demands dropped because both ends fell into one component.
    pub dropped_inside: usize,
    pub log: IndependenceLog,
}

/// Unit-weight graph state for the reachability rewrites.
struct RpState {
    n: usize,
    edges: Vec<Option<(usize, usize)>>,
}

impl RpState {
    fn adjacency(&self) -> Adjacency {
        // deleted edges become self-loops that `ok` filters out
        Adjacency::new(self.n, self.edges.iter().map(|e| e.unwrap_or((0, 0))))
    }

    fn live(&self) -> impl Fn(usize) -> bool + '_ {
        move |e| self.edges[e].is_some()
    }

    fn requires(&self, adj: &Adjacency, (s, t): (usize, usize), e: usize) -> bool {
        let live = self.live();
        !adj.reach(s, |f| f != e && live(f))[t]
    }

    /// For each live edge, the demands requiring it.
    fn requirers(&self, demands: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        (0..self.edges.len())
            .map(|e| {
                if self.edges[e].is_none() {
                    return Vec::new();
                }
                (0..demands.len()).filter(|&i| self.requires(&adj, demands[i], e)).collect()
            })
            .collect()
    }

    fn drop_unrequired(&mut self, demands: &[(usize, usize)]) {
        loop {
            let req = self.requirers(demands);
            match (0..self.edges.len()).find(|&e| self.edges[e].is_some() && req[e].is_empty()) {
                Some(e) => self.edges[e] = None,
                None => break,
            }
        }
    }
}

/// Rewrites a reachability-preserver instance into an independent one.
///
/// Strongly connected components are contracted (their in/out trees are
/// reported separately), unrequired edges are dropped, every demand is moved
/// to start at the first edge it alone requires (or deleted), and then the
/// skip rule replaces (x,y),(y,z) by (x,z) where the demand alone requires
/// (x,y) but not (y,z), always at the topologically earliest y.
pub fn make_independent_rp(inst: &WeightedDigraph) -> Result<RpIndependent> {
    inst.check_valid()?;
    let n = inst.node_count;
    let mut pg: DiGraph<(), ()> = DiGraph::with_capacity(n, inst.edges.len());
    let ids: Vec<_> = (0..n).map(|_| pg.add_node(())).collect();
    for (u, v, _) in &inst.edges {
        pg.add_edge(ids[*u], ids[*v], ());
    }
    let mut comps: Vec<Vec<usize>> = petgraph::algo::tarjan_scc(&pg)
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(|x| x.index()).collect();
            c.sort_unstable();
            c
        })
        .collect();
    comps.sort_unstable_by_key(|c| c[0]);
    let mut contraction = vec![0; n];
    for (ci, c) in comps.iter().enumerate() {
        for &v in c {
            contraction[v] = ci;
        }
    }
    let mut tree_edges = Vec::new();
    let full = inst.adjacency();
    for c in comps.iter().filter(|c| c.len() > 1) {
        let root = c[0];
        let inside = |e: usize| contraction[inst.edges[e].0] == contraction[inst.edges[e].1];
        for backward in [false, true] {
            let lists = if backward { &full.inc } else { &full.out };
            let mut seen = HashSet::from([root]);
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                for &(v, e) in &lists[u] {
                    if inside(e) && seen.insert(v) {
                        tree_edges.push((inst.edges[e].0, inst.edges[e].1));
                        queue.push_back(v);
                    }
                }
            }
        }
    }

    let cn = comps.len();
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for (u, v, _) in &inst.edges {
        let (a, b) = (contraction[*u], contraction[*v]);
        if a != b && seen.insert((a, b)) {
            edges.push(Some((a, b)));
        }
    }
    let mut st = RpState { n: cn, edges };
    let mut dropped_inside = 0;
    let mut demands: Vec<(usize, usize)> = Vec::new();
    {
        let adj = st.adjacency();
        for &(s, t) in &inst.demands {
            let (a, b) = (contraction[s], contraction[t]);
            if a == b {
                dropped_inside += 1;
            } else if adj.reach(a, |_| true)[b] {
                demands.push((a, b));
            }
        }
    }
    st.drop_unrequired(&demands);

    let mut log = IndependenceLog::default();
    let adj = st.adjacency();
    let mut paths: Vec<Vec<usize>> = demands
        .iter()
        .map(|&(s, t)| adj.bfs_path(s, t, st.live()).expect("demand reachable"))
        .collect();
    let potential = |paths: &[Vec<usize>]| paths.iter().map(Vec::len).sum::<usize>();
    log.rewrites.push(Rewrite::Start { potential: potential(&paths) });

    // suffix pass
    let mut i = 0;
    while i < demands.len() {
        let req = st.requirers(&demands);
        let lone = paths[i].iter().position(|&e| req[e] == [i]);
        match lone {
            None => {
                let d = demands.remove(i);
                paths.remove(i);
                log.rewrites.push(Rewrite::DeleteDemand { demand: d, potential: potential(&paths) });
            }
            Some(0) => i += 1,
            Some(k) => {
                let u = st.edges[paths[i][k]].unwrap().0;
                let from = demands[i];
                demands[i] = (u, from.1);
                paths[i].drain(..k);
                log.rewrites.push(Rewrite::Reroute { from, to: demands[i], potential: potential(&paths) });
                i += 1;
            }
        }
    }

    // skip pass
    loop {
        let req = st.requirers(&demands);
        let order = topo_positions(&st);
        let mut best: Option<(usize, usize, usize)> = None; // (pos of y, demand, k)
        for (i, p) in paths.iter().enumerate() {
            for k in 0..p.len().saturating_sub(1) {
                if req[p[k]] == [i] && req[p[k + 1]] != [i] {
                    let y = st.edges[p[k]].unwrap().1;
                    let cand = (order[y], i, k);
                    if best.is_none_or(|b| cand < b) {
                        best = Some(cand);
                    }
                }
            }
        }
        let Some((_, i, k)) = best else { break };
        let (x, y) = st.edges[paths[i][k]].unwrap();
        let z = st.edges[paths[i][k + 1]].unwrap().1;
        if st.edges.iter().flatten().any(|&(a, b)| a == x && b == z) {
            return Err(Error::Violation(format!("skip edge {x}→{z} already present")));
        }
        st.edges[paths[i][k]] = None;
        st.edges.push(Some((x, z)));
        let new_id = st.edges.len() - 1;
        paths[i].splice(k..k + 2, [new_id]);
        log.rewrites.push(Rewrite::SkipEdge { x, y, z, potential: potential(&paths) });
    }
    st.drop_unrequired(&demands);

    let mut out = WeightedDigraph::new(cn);
    out.edges = st.edges.iter().flatten().map(|&(u, v)| (u, v, BigUint::one())).collect();
    out.demands = demands;
    check_independence(&out, Mode::Reachability)?;
    Ok(RpIndependent {
        instance: out,
        contraction,
        tree_edges,
        dropped_inside,
        log,
    })
}

fn topo_positions(st: &RpState) -> Vec<usize> {
    let mut succ = vec![Vec::new(); st.n];
    let mut indeg = vec![0; st.n];
    for &(u, v) in st.edges.iter().flatten() {
        succ[u].push(v);
        indeg[v] += 1;
    }
    let mut queue: VecDeque<usize> = (0..st.n).filter(|&v| indeg[v] == 0).collect();
    let mut pos = vec![usize::MAX; st.n];
    let mut next = 0;
    while let Some(u) = queue.pop_front() {
        pos[u] = next;
        next += 1;
        for &v in &succ[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                queue.push_back(v);
            }
        }
    }
    pos
}

/// The demand an adversary picks against a set of added edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdversaryPick {
    pub demand: usize,
    pub pair: (usize, usize),
    pub hops: usize,
}

/// First path with no added edge joining two of its nodes in path order.
fn untouched_path(system: &PathSystem, added: &[(usize, usize)]) -> Option<usize> {
    let mut pos: HashMap<(usize, usize), usize> = HashMap::new();
    for (i, p) in system.paths.iter().enumerate() {
        for (k, &v) in p.iter().enumerate() {
            pos.insert((i, v), k);
        }
    }
    (0..system.paths.len()).find(|&i| {
        !added.iter().any(|&(x, y)| match (pos.get(&(i, x)), pos.get(&(i, y))) {
            (Some(a), Some(b)) => a < b,
            _ => false,
        })
    })
}

/// Finds a demand whose hop distance stays |π|−1 after adding shortcut set `h`.
pub fn shortcut_adversary(system: &PathSystem, h: &[(usize, usize)]) -> Result<AdversaryPick> {
    let g = system_to_digraph(system)?;
    if h.len() >= system.paths.len() {
        return Err(Error::input(format!(
            "shortcut set has {} edges; needs fewer than p = {}",
            h.len(),
            system.paths.len()
        )));
    }
    if let Certificate::BridgeExists { witness, .. } = certify_bridge_free_acyclic(system)? {
        return Err(Error::precondition(format!("system has a bridge {witness:?}")));
    }
    let adj = g.adjacency();
    for &(x, y) in h {
        if x >= g.node_count || y >= g.node_count || x == y || !adj.reach(x, |_| true)[y] {
            return Err(Error::input(format!("({x},{y}) is not in the transitive closure")));
        }
    }
    let i = untouched_path(system, h)
        .ok_or_else(|| Error::Violation("every demand path is shortcut".into()))?;
    let path = &system.paths[i];
    let (s, t) = (path[0], path[path.len() - 1]);
    let combined = Adjacency::new(
        g.node_count,
        g.edges.iter().map(|(u, v, _)| (*u, *v)).chain(h.iter().copied()),
    );
    let hops = combined.hop_distance(s, t, |_| true).unwrap();
    if hops != path.len() - 1 {
        return Err(Error::Violation(format!(
            "demand {i} has {hops} hops, expected {}",
            path.len() - 1
        )));
    }
    Ok(AdversaryPick { demand: i, pair: (s, t), hops })
}

/// Finds a demand whose unique shortest path in G ∪ H still has |π|−1 edges,
/// where G is the weighted hard instance and H an exact hopset.
pub fn hopset_adversary(system: &PathSystem, h: &[(usize, usize, BigUint)]) -> Result<AdversaryPick> {
    let g = dp_hard_instance(system)?;
    if h.len() >= system.paths.len() {
        return Err(Error::input(format!(
            "hopset has {} edges; needs fewer than p = {}",
            h.len(),
            system.paths.len()
        )));
    }
    let adj = g.adjacency();
    let w = weights_of(&g);
    let mut dist_from: HashMap<usize, Vec<Option<BigUint>>> = HashMap::new();
    for (x, y, wt) in h {
        if *x >= g.node_count || *y >= g.node_count {
            return Err(Error::input(format!("hopset edge ({x},{y}) out of range")));
        }
        let d = dist_from.entry(*x).or_insert_with(|| dijkstra(&adj, &w, *x));
        if x == y || d[*y].as_ref() != Some(wt) {
            return Err(Error::input(format!("({x},{y},{wt}) is not an exact hopset edge")));
        }
    }
    let pairs: Vec<(usize, usize)> = h.iter().map(|(x, y, _)| (*x, *y)).collect();
    let i = untouched_path(system, &pairs)
        .ok_or_else(|| Error::Violation("every demand path is touched".into()))?;
    let path = &system.paths[i];
    let (s, t) = (path[0], path[path.len() - 1]);
    let combined = Adjacency::new(
        g.node_count,
        g.edges.iter().map(|(u, v, _)| (*u, *v)).chain(pairs.iter().copied()),
    );
    let cw: Vec<BigUint> = w.iter().cloned().chain(h.iter().map(|e| e.2.clone())).collect();
    let Some(p) = unique_shortest_path(&combined, &cw, s, t) else {
        return Err(Error::Violation(format!("demand {i} lost its unique shortest path")));
    };
    if p.len() != path.len() - 1 {
        return Err(Error::Violation(format!("demand {i} shortest path has {} edges", p.len())));
    }
    Ok(AdversaryPick { demand: i, pair: (s, t), hops: p.len() })
}

/// `size` distinct random pairs (x, y) with y reachable from x, x ≠ y.
pub fn random_closure_pairs(g: &WeightedDigraph, size: usize, seed: u64) -> Vec<(usize, usize)> {
    let adj = g.adjacency();
    let mut all = Vec::new();
    for x in 0..g.node_count {
        let r = adj.reach(x, |_| true);
        all.extend((0..g.node_count).filter(|&y| y != x && r[y]).map(|y| (x, y)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    all.shuffle(&mut rng);
    all.truncate(size);
    all
}

/// Random exact hopset: closure pairs weighted by their exact distance.
pub fn random_exact_hopset(g: &WeightedDigraph, size: usize, seed: u64) -> Vec<(usize, usize, BigUint)> {
    let adj = g.adjacency();
    let w = weights_of(g);
    random_closure_pairs(g, size, seed)
        .into_iter()
        .map(|(x, y)| {
            let d = dijkstra(&adj, &w, x)[y].clone().unwrap();
            (x, y, d)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builder {
    /// adds nothing when already connected, else the fewest-hop route's missing edges
    Lazy,
    /// adds the missing edges of a route minimizing the number of missing edges
    GreedyShortest,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round {
    pub adversary_edges: Vec<(usize, usize)>,
    pub demand: Option<(usize, usize)>,
    pub builder_edges: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameTranscript {
    pub rounds: Vec<Round>,
    pub final_builder_edges: usize,
}

/// Online reachability preserver game: the adversary reveals path i's
/// consecutive pairs and asks for (first, last); the builder answers.
pub fn online_game(system: &PathSystem, builder: Builder) -> Result<GameTranscript> {
    if let Certificate::BridgeExists { witness, .. } = certify_ordered_bridge_free_acyclic(system)? {
        return Err(Error::precondition(format!("ordered bridge {witness:?}")));
    }
    let n = system.node_count;
    let mut a_edges: Vec<(usize, usize)> = Vec::new();
    let mut a_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut a_out: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut in_b: Vec<bool> = Vec::new();
    let mut rounds = Vec::new();
    for p in &system.paths {
        let mut adversary_edges = Vec::new();
        for w in p.windows(2) {
            if !a_ids.contains_key(&(w[0], w[1])) {
                a_ids.insert((w[0], w[1]), a_edges.len());
                a_out[w[0]].push((w[1], a_edges.len()));
                a_edges.push((w[0], w[1]));
                in_b.push(false);
                adversary_edges.push((w[0], w[1]));
            }
        }
        let demand = (!p.is_empty()).then(|| (p[0], p[p.len() - 1]));
        let mut builder_edges = Vec::new();
        if let Some((s, t)) = demand {
            let route = match builder {
                Builder::GreedyShortest => zero_one_bfs(&a_out, &in_b, s, t),
                Builder::Lazy => {
                    if reaches(&a_out, s, t, |e| in_b[e]) {
                        Some(Vec::new())
                    } else {
                        zero_one_bfs(&a_out, &vec![false; in_b.len()], s, t)
                    }
                }
            }
            .ok_or_else(|| Error::Violation(format!("demand ({s},{t}) unreachable in A")))?;
            for e in route {
                if !in_b[e] {
                    in_b[e] = true;
                    builder_edges.push(a_edges[e]);
                }
            }
            if !reaches(&a_out, s, t, |e| in_b[e]) {
                return Err(Error::Violation(format!("builder left ({s},{t}) disconnected")));
            }
        }
        rounds.push(Round { adversary_edges, demand, builder_edges });
    }
    Ok(GameTranscript {
        final_builder_edges: in_b.iter().filter(|&&b| b).count(),
        rounds,
    })
}

fn reaches(out: &[Vec<(usize, usize)>], s: usize, t: usize, ok: impl Fn(usize) -> bool) -> bool {
    let mut seen = vec![false; out.len()];
    seen[s] = true;
    let mut stack = vec![s];
    while let Some(u) = stack.pop() {
        if u == t {
            return true;
        }
        for &(v, e) in &out[u] {
            if !seen[v] && ok(e) {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    false
}

/// Route s⇝t minimizing the number of edges not yet in the builder's graph.
fn zero_one_bfs(out: &[Vec<(usize, usize)>], free: &[bool], s: usize, t: usize) -> Option<Vec<usize>> {
    let n = out.len();
    let mut dist = vec![usize::MAX; n];
    let mut via: Vec<Option<(usize, usize)>> = vec![None; n];
    dist[s] = 0;
    let mut dq = VecDeque::from([s]);
    while let Some(u) = dq.pop_front() {
        for &(v, e) in &out[u] {
            let c = usize::from(!free[e]);
            if dist[u] + c < dist[v] {
                dist[v] = dist[u] + c;
                via[v] = Some((u, e));
                if c == 0 {
                    dq.push_front(v);
                } else {
                    dq.push_back(v);
                }
            }
        }
    }
    if dist[t] == usize::MAX {
        return None;
    }
    let mut route = Vec::new();
    let mut x = t;
    while let Some((u, e)) = via[x] {
        route.push(e);
        x = u;
    }
    route.reverse();
    Some(route)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdpReport {
    pub k: usize,
    /// Per demand: the fewest hops s⇝t after deleting one of its path edges
    /// (minimum over those edges; None = always disconnected).
    pub per_demand: Vec<Option<usize>>,
    pub min_hops: Option<usize>,
}

impl AdpReport {
    pub fn holds(&self) -> bool {
        self.min_hops.is_none_or(|h| h >= self.k)
    }
}

/// Unit-weight instance of a system with girth > k, and the single-edge
/// deletion hop report for every demand path edge.
pub fn adp_instance(system: &PathSystem, k: usize, budget: u64) -> Result<(WeightedDigraph, AdpReport)> {
    if let Some(w) = find_bridge_upto(system, k, false, budget)? {
        return Err(Error::precondition(format!(
            "system has a {}-bridge {w:?}; need girth > {k}",
            w.size()
        )));
    }
    let g = system_to_digraph(system)?;
    let adj = g.adjacency();
    let ids = edge_ids(&g);
    let mut per_demand = Vec::with_capacity(system.paths.len());
    for p in &system.paths {
        let (s, t) = (p[0], p[p.len() - 1]);
        let best = path_edges(&ids, p)
            .into_iter()
            .filter_map(|e| adj.hop_distance(s, t, |f| f != e))
            .min();
        per_demand.push(best);
    }
    let min_hops = per_demand.iter().flatten().copied().min();
    Ok((g, AdpReport { k, per_demand, min_hops }))
}

/// Undirected graph with positive integer weights.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct UGraph {
    pub node_count: usize,
    pub edges: Vec<(usize, usize, u64)>,
}

impl UGraph {
    fn neighbours(&self) -> Vec<Vec<(usize, u64, usize)>> {
        let mut nb = vec![Vec::new(); self.node_count];
        for (i, &(u, v, w)) in self.edges.iter().enumerate() {
            nb[u].push((v, w, i));
            nb[v].push((u, w, i));
        }
        nb
    }

    /// Weighted single-source distances.
    pub fn distances(&self, s: usize) -> Vec<Option<u64>> {
        let nb = self.neighbours();
        dijkstra_u64(&nb, s, None)
    }

    /// Fewest edges on a cycle, None for a forest.
    pub fn girth(&self) -> Option<usize> {
        let nb = self.neighbours();
        let mut best: Option<usize> = None;
        for root in 0..self.node_count {
            let mut dist = vec![usize::MAX; self.node_count];
            let mut via = vec![usize::MAX; self.node_count];
            dist[root] = 0;
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                for &(v, _, e) in &nb[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        via[v] = e;
                        queue.push_back(v);
                    } else if via[u] != e {
                        let c = dist[u] + dist[v] + 1;
                        best = Some(best.map_or(c, |b| b.min(c)));
                    }
                }
            }
        }
        best
    }
}

fn dijkstra_u64(nb: &[Vec<(usize, u64, usize)>], s: usize, cap: Option<u64>) -> Vec<Option<u64>> {
    use std::cmp::Reverse;
    let mut dist: Vec<Option<u64>> = vec![None; nb.len()];
    dist[s] = Some(0);
    let mut heap = std::collections::BinaryHeap::from([Reverse((0u64, s))]);
    while let Some(Reverse((d, u))) = heap.pop() {
        if dist[u].is_some_and(|x| x < d) {
            continue;
        }
        for &(v, w, _) in &nb[u] {
            let nd = d + w;
            if cap.is_some_and(|c| nd > c) {
                continue;
            }
            if dist[v].is_none_or(|x| nd < x) {
                dist[v] = Some(nd);
                heap.push(Reverse((nd, v)));
            }
        }
    }
    dist
}

/// Greedy k-spanner: edges by nondecreasing weight (stable), kept iff the
/// current spanner distance between the endpoints exceeds k·w.
pub fn greedy_spanner(g: &UGraph, k: u64) -> Result<UGraph> {
    if k < 1 {
        return Err(Error::input("stretch k must be at least 1"));
    }
    if let Some(e) = g.edges.iter().find(|e| e.2 == 0 || e.0 >= g.node_count || e.1 >= g.node_count) {
        return Err(Error::input(format!("bad edge {e:?}")));
    }
    let mut order: Vec<usize> = (0..g.edges.len()).collect();
    order.sort_by_key(|&i| g.edges[i].2);
    let mut h = UGraph { node_count: g.node_count, edges: Vec::new() };
    let mut nb: Vec<Vec<(usize, u64, usize)>> = vec![Vec::new(); g.node_count];
    for i in order {
        let (u, v, w) = g.edges[i];
        let bound = k * w;
        let d = dijkstra_u64(&nb, u, Some(bound))[v];
        if d.is_none_or(|d| d > bound) {
            let id = h.edges.len();
            nb[u].push((v, w, id));
            nb[v].push((u, w, id));
            h.edges.push((u, v, w));
        }
    }
    Ok(h)
}

/// True iff dist_H(u,v) ≤ k·dist_G(u,v) for every pair connected in G.
pub fn check_stretch(g: &UGraph, h: &UGraph, k: u64) -> bool {
    (0..g.node_count).all(|s| {
        let dg = g.distances(s);
        let dh = h.distances(s);
        dg.iter().zip(&dh).all(|(a, b)| match (a, b) {
            (None, _) => true,
            (Some(a), Some(b)) => *b <= k * a,
            (Some(_), None) => false,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{ap_free_set, lattice_construction, rs_construction, ApMethod};

    fn sys(n: usize, paths: &[&[usize]]) -> PathSystem {
        PathSystem::new(n, paths.iter().map(|p| p.to_vec()).collect())
    }

    fn digraph(n: usize, edges: &[(usize, usize, u64)], demands: &[(usize, usize)]) -> WeightedDigraph {
        let mut g = WeightedDigraph::new(n);
        g.edges = edges.iter().map(|&(u, v, w)| (u, v, BigUint::from(w))).collect();
        g.demands = demands.to_vec();
        g
    }

    #[test]
    fn digraph_examples() {
        let tri = system_to_digraph(&sys(3, &[&[0, 1], &[1, 2], &[2, 0]])).unwrap();
        assert_eq!((tri.edges.len(), tri.demands.len()), (3, 3));
        let dup = system_to_digraph(&sys(2, &[&[0, 1], &[0, 1]])).unwrap();
        assert_eq!((dup.edges.len(), dup.demands.len()), (1, 2));
        assert!(system_to_digraph(&sys(2, &[&[0]])).is_err());
    }

    #[test]
    fn rs_digraph_is_independent() {
        let s = rs_construction(5, &ap_free_set(5, ApMethod::Greedy).unwrap()).unwrap();
        let g = system_to_digraph(&s).unwrap();
        assert_eq!(g.edges.len(), 40);
        assert_eq!(preserver_size(&g, Mode::Reachability).unwrap(), 40);
    }

    #[test]
    fn dp_weights_follow_the_rule() {
        let l = lattice_construction(8, 2).unwrap();
        let g = dp_hard_instance(&l).unwrap();
        let w: Vec<u64> = g.edges.iter().map(|e| e.2.to_u64_digits().first().copied().unwrap_or(0)).collect();
        assert_eq!(w, vec![1, 2]);
        assert_eq!(preserver_size(&g, Mode::Distance).unwrap(), 2);
        let c = count_instance_shortest_paths(&g, g.demands[1].0, g.demands[1].1);
        assert_eq!(c, ShortestCount { distance: Some(BigUint::from(2u32)), count: 1 });

        let single = dp_hard_instance(&PathSystem::new_ordered(3, vec![vec![0, 1, 2]])).unwrap();
        let c = count_instance_shortest_paths(&single, 0, 2);
        assert_eq!(c, ShortestCount { distance: Some(BigUint::from(2u32)), count: 1 });
    }

    #[test]
    fn dp_rejects_ordered_bridge() {
        let s = PathSystem::new_ordered(3, vec![vec![0, 1], vec![1, 2], vec![0, 2]]);
        assert!(matches!(dp_hard_instance(&s), Err(Error::Precondition(_))));
    }

    #[test]
    fn independence_violations() {
        // two demands sharing the edge 1→2
        let g = digraph(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1)], &[(0, 2), (1, 3)]);
        let e = check_independence(&g, Mode::Distance).unwrap_err();
        assert!(e.to_string().contains("shared edge"), "{e}");
        let d = digraph(4, &[(0, 1, 1), (1, 3, 1), (0, 2, 1), (2, 3, 1)], &[(0, 3)]);
        let e = check_independence(&d, Mode::Distance).unwrap_err();
        assert!(e.to_string().contains("non-unique"), "{e}");
    }

    #[test]
    fn dp_independence_skips_shared_edge() {
        // s1=0 → a=1 → b=2 → t=3 ; s2=1 shares (1,2)... demands (0,2) and (1,3)
        let g = digraph(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1)], &[(0, 2), (1, 3)]);
        let (out, log) = make_independent_dp(&g, 7).unwrap();
        assert!(check_independence(&out, Mode::Distance).is_ok());
        assert!(log.strictly_decreasing());
        assert!(log.rewrites.iter().any(|r| matches!(r, Rewrite::SkipEdge { .. })));
        assert_eq!(out.edges.len(), 3);
    }

    #[test]
    fn dp_independence_keeps_independent_input() {
        let g = digraph(4, &[(0, 1, 3), (2, 3, 5)], &[(0, 1), (2, 3)]);
        let (out, log) = make_independent_dp(&g, 1).unwrap();
        assert_eq!(out.demands, g.demands);
        assert_eq!(out.edges.len(), 2);
        assert_eq!(log.rewrites.len(), 1);
    }

    #[test]
    fn dp_independence_deletes_redundant_demand() {
        // (0,2) uses both edges, (0,1) and (1,2) each use one: (0,2) owns nothing alone
        let g = digraph(3, &[(0, 1, 1), (1, 2, 1)], &[(0, 2), (0, 1), (1, 2)]);
        let (out, log) = make_independent_dp(&g, 3).unwrap();
        assert!(matches!(log.rewrites[1], Rewrite::DeleteDemand { demand: (0, 2), .. }));
        assert_eq!(out.demands.len(), 2);
    }

    #[test]
    fn rp_independence_on_diamond() {
        let g = digraph(4, &[(0, 1, 1), (1, 3, 1), (0, 2, 1), (2, 3, 1)], &[(0, 3)]);
        let r = make_independent_rp(&g).unwrap();
        assert!(check_independence(&r.instance, Mode::Reachability).is_ok());
        assert!(r.log.strictly_decreasing());
        assert_eq!(r.instance.demands, vec![(0, 3)]);
        assert_eq!(r.instance.edges.len(), 2);
    }

    #[test]
    fn rp_contracts_cycles() {
        let g = digraph(5, &[(0, 1, 1), (1, 2, 1), (2, 0, 1), (2, 3, 1), (3, 4, 1)], &[(0, 4), (1, 2)]);
        let r = make_independent_rp(&g).unwrap();
        assert_eq!(r.contraction[0], r.contraction[1]);
        assert_eq!(r.contraction[1], r.contraction[2]);
        assert!(r.tree_edges.len() <= 2 * 3);
        assert_eq!(r.dropped_inside, 1);
        assert!(check_independence(&r.instance, Mode::Reachability).is_ok());
    }

    #[test]
    fn rp_keeps_independent_dag() {
        let g = digraph(4, &[(0, 1, 1), (2, 3, 1)], &[(0, 1), (2, 3)]);
        let r = make_independent_rp(&g).unwrap();
        assert_eq!(r.instance.edges.len(), 2);
        assert_eq!(r.instance.demands, vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn shortcut_adversary_examples() {
        let s = sys(6, &[&[0, 1, 2], &[3, 4, 5]]);
        let pick = shortcut_adversary(&s, &[]).unwrap();
        assert_eq!((pick.demand, pick.hops), (0, 2));
        let pick = shortcut_adversary(&s, &[(0, 2)]).unwrap();
        assert_eq!(pick.demand, 1);
        assert!(shortcut_adversary(&s, &[(2, 0)]).is_err());
        assert!(shortcut_adversary(&s, &[(0, 2), (3, 5)]).is_err());
    }

    #[test]
    fn hopset_adversary_rejects_wrong_weight() {
        let l = lattice_construction(128, 4).unwrap();
        let g = dp_hard_instance(&l).unwrap();
        let mut h = random_exact_hopset(&g, 5, 2);
        assert_eq!(hopset_adversary(&l, &h).unwrap().hops, 3);
        h[0].2 += 1u32;
        assert!(hopset_adversary(&l, &h).unwrap_err().to_string().contains("not an exact hopset edge"));
        let full = random_exact_hopset(&g, 64, 2);
        assert!(matches!(hopset_adversary(&l, &full), Err(Error::Input(_))));
    }

    #[test]
    fn game_examples() {
        let l = lattice_construction(8, 2).unwrap();
        assert_eq!(online_game(&l, Builder::GreedyShortest).unwrap().final_builder_edges, 2);
        let single = PathSystem::new_ordered(4, vec![vec![0, 1, 2, 3]]);
        let t = online_game(&single, Builder::Lazy).unwrap();
        assert_eq!(t.final_builder_edges, 3);
        assert_eq!(t.rounds[0].builder_edges.len(), 3);
    }

    #[test]
    fn adp_examples() {
        let (_, r) = adp_instance(&sys(3, &[&[0, 1, 2]]), 2, 1000).unwrap();
        assert_eq!(r.min_hops, None);
        assert!(r.holds());
        let s = rs_construction(5, &[0, 1, 3, 4]).unwrap();
        let (_, r) = adp_instance(&s, 4, 1_000_000).unwrap();
        assert_eq!(r.min_hops, None);
        let bad = sys(3, &[&[0, 1], &[1, 2], &[0, 2]]);
        assert!(matches!(adp_instance(&bad, 3, 1000), Err(Error::Precondition(_))));
    }

    #[test]
    fn spanner_examples() {
        let tri = UGraph { node_count: 3, edges: vec![(0, 1, 1), (1, 2, 1), (0, 2, 1)] };
        let h = greedy_spanner(&tri, 2).unwrap();
        assert_eq!(h.edges.len(), 2);
        let tree = UGraph { node_count: 4, edges: vec![(0, 1, 2), (1, 2, 1), (1, 3, 5)] };
        let h = greedy_spanner(&tree, 3).unwrap();
        assert_eq!(h.edges.len(), 3);
        let mut k4 = UGraph { node_count: 4, edges: Vec::new() };
        for u in 0..4 {
            for v in u + 1..4 {
                k4.edges.push((u, v, 1));
            }
        }
        let h = greedy_spanner(&k4, 2).unwrap();
        assert!(check_stretch(&k4, &h, 2));
        assert!(h.girth().is_none_or(|g| g > 3));
        assert_eq!(k4.girth(), Some(3));
    }
}
