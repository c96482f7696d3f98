//! Integrality-gap instances: the typed product graph for vertex multicut,
//! node splitting, and the directed Steiner forest instance.

use std::collections::{HashMap, HashSet, VecDeque};

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bridges::{certify_bridge_free_acyclic, Certificate};
use crate::error::{Error, Result};
use crate::graph::{RawDigraph, WeightedDigraph};
use crate::system::PathSystem;
use crate::transforms::is_source_restricted;

pub const DEFAULT_MULTICUT_LIMIT: usize = 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct GapParams {
    pub d: usize,
    pub d_prime: usize,
    pub width: usize,
    /// number of nonterminals of the product (d·n)
    pub big_n: usize,
}

/// Digraph with terminal flags and typed edges. Parallel edges of different
/// types are allowed. Types run 1..=d.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GapInstance {
    pub node_count: usize,
    pub terminal: Vec<bool>,
    pub edges: Vec<(usize, usize, usize)>,
    pub demands: Vec<(usize, usize)>,
    pub demand_types: Vec<usize>,
    pub params: GapParams,
}

impl GapInstance {
    fn with_nodes(nonterminals: usize, terminals: usize) -> Self {
        let mut terminal = vec![false; nonterminals];
        terminal.resize(nonterminals + terminals, true);
        GapInstance {
            node_count: nonterminals + terminals,
            terminal,
            ..Default::default()
        }
    }

    pub fn nonterminal_count(&self) -> usize {
        self.terminal.iter().filter(|&&t| !t).count()
    }

    fn out_lists(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![Vec::new(); self.node_count];
        for (i, &(u, v, _)) in self.edges.iter().enumerate() {
            out[u].push((v, i));
        }
        out
    }

    /// Untyped unit-weight digraph (parallel edges merged), terminals kept.
    pub fn to_digraph(&self) -> WeightedDigraph {
        let mut g = WeightedDigraph::new(self.node_count);
        let mut seen = HashSet::new();
        for &(u, v, _) in &self.edges {
            if seen.insert((u, v)) {
                g.edges.push((u, v, BigUint::one()));
            }
        }
        g.demands = self.demands.clone();
        g.terminal = self.terminal.clone();
        g
    }

    pub fn serialize(&self) -> String {
        let p = &self.params;
        let mut out = format!("digraph 1\nnodes {}\nparams {} {} {} {}\n", self.node_count, p.d, p.d_prime, p.width, p.big_n);
        for (v, &t) in self.terminal.iter().enumerate() {
            if t {
                out.push_str(&format!("terminal {v}\n"));
            }
        }
        for (i, (u, v, ty)) in self.edges.iter().enumerate() {
            out.push_str(&format!("edge {u} {v} 1\ntype {i} {ty}\n"));
        }
        for (s, t) in &self.demands {
            out.push_str(&format!("demand {s} {t}\n"));
        }
        out
    }

    /// Demand types are recovered from the type of the source's out-edges.
    pub fn parse(text: &str) -> Result<GapInstance> {
        let raw = RawDigraph::parse(text)?;
        let mut g = GapInstance::with_nodes(raw.node_count, 0);
        for v in raw.terminals {
            g.terminal[v] = true;
        }
        let mut types = vec![None; raw.edges.len()];
        for (e, ty) in raw.types {
            let slot = types
                .get_mut(e)
                .ok_or_else(|| Error::Parse { line: 0, reason: format!("type for missing edge {e}") })?;
            *slot = Some(ty as usize);
        }
        for (i, (u, v, _)) in raw.edges.into_iter().enumerate() {
            let ty = types[i].ok_or_else(|| Error::Parse { line: 0, reason: format!("edge {i} has no type") })?;
            g.edges.push((u, v, ty));
        }
        if let Some(p) = raw.params {
            let [d, d_prime, width, big_n] = p[..] else {
                return Err(Error::Parse { line: 0, reason: "params needs 4 values".into() });
            };
            g.params = GapParams { d, d_prime, width, big_n };
        }
        g.demand_types = raw
            .demands
            .iter()
            .map(|&(s, _)| g.edges.iter().find(|e| e.0 == s).map_or(1, |e| e.2))
            .collect();
        g.demands = raw.demands;
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverageReport {
    /// Nodes touched by each part.
    pub per_part: Vec<usize>,
    /// Parts touching at least n/4 nodes.
    pub large_parts: usize,
}

/// Shuffles the paths into d parts of sizes ⌊p/d⌋ or ⌈p/d⌉.
pub fn partition_paths(system: &PathSystem, d: usize, seed: u64) -> Result<(Vec<Vec<usize>>, CoverageReport)> {
    let p = system.paths.len();
    if d == 0 || d > p {
        return Err(Error::input(format!("cannot split {p} paths into {d} nonempty parts")));
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut parts = vec![Vec::new(); d];
    for (k, i) in order.into_iter().enumerate() {
        parts[k % d].push(i);
    }
    for part in &mut parts {
        part.sort_unstable();
    }
    let report = coverage(system, &parts);
    Ok((parts, report))
}

pub fn coverage(system: &PathSystem, parts: &[Vec<usize>]) -> CoverageReport {
    let per_part: Vec<usize> = parts
        .iter()
        .map(|part| {
            part.iter()
                .flat_map(|&i| system.paths[i].iter().copied())
                .collect::<HashSet<_>>()
                .len()
        })
        .collect();
    let large_parts = per_part.iter().filter(|&&c| 4 * c >= system.node_count).count();
    CoverageReport { per_part, large_parts }
}

/// Typed closure graph: nonterminals 0..n, part i gives type i+1, and each
/// path gets fresh terminals s → first and last → t.
pub fn build_gs(system: &PathSystem, parts: &[Vec<usize>]) -> Result<GapInstance> {
    system.check_valid()?;
    let n = system.node_count;
    let count: usize = parts.iter().map(Vec::len).sum();
    let mut g = GapInstance::with_nodes(n, 2 * count);
    g.params.d = parts.len();
    let mut seen = HashSet::new();
    let mut next = n;
    for (i, part) in parts.iter().enumerate() {
        let ty = i + 1;
        for &j in part {
            let path = system
                .paths
                .get(j)
                .ok_or_else(|| Error::input(format!("partition names missing path {j}")))?;
            if path.is_empty() {
                return Err(Error::input(format!("path {j} is empty")));
            }
            for a in 0..path.len() {
                for b in a + 1..path.len() {
                    if seen.insert((path[a], path[b], ty)) {
                        g.edges.push((path[a], path[b], ty));
                    }
                }
            }
            let (s, t) = (next, next + 1);
            next += 2;
            g.edges.push((s, path[0], ty));
            g.edges.push((path[path.len() - 1], t, ty));
            g.demands.push((s, t));
            g.demand_types.push(ty);
        }
    }
    Ok(g)
}

/// (⌈log₂ d⌉, d′, layer width) for the layered graph.
pub fn layer_params(d: usize) -> (usize, usize, usize) {
    let log = d.next_power_of_two().trailing_zeros() as usize;
    let d_prime = (d / (2 * log)).max(1);
    let width = log.min(d / (2 * d_prime));
    (log, d_prime, width)
}

/// Layered random graph on nonterminals 0..d: for each type i, d′ disjoint
/// random layers joined completely in sequence, between terminals s_i, t_i.
pub fn build_h(d: usize, seed: u64) -> Result<GapInstance> {
    if d < 4 {
        return Err(Error::input("layered graph needs d ≥ 4"));
    }
    let (_, d_prime, width) = layer_params(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = GapInstance::with_nodes(d, 2 * d);
    g.params = GapParams { d, d_prime, width, big_n: d };
    for i in 0..d {
        let ty = i + 1;
        let (s, t) = (d + 2 * i, d + 2 * i + 1);
        let mut pool: Vec<usize> = (0..d).collect();
        pool.shuffle(&mut rng);
        let layers: Vec<&[usize]> = pool.chunks(width).take(d_prime).collect();
        for &v in layers[0] {
            g.edges.push((s, v, ty));
        }
        for pair in layers.windows(2) {
            for &u in pair[0] {
                for &v in pair[1] {
                    g.edges.push((u, v, ty));
                }
            }
        }
        for &v in layers[d_prime - 1] {
            g.edges.push((v, t, ty));
        }
        g.demands.push((s, t));
        g.demand_types.push(ty);
    }
    Ok(g)
}

/// Typed product of the layered graph `h` and the closure graph `gs`.
///
/// Nonterminal (x, x′) gets id x·n_S + x′; the terminals of `gs` are kept
/// as fresh nodes after the N = d·n_S nonterminals.
pub fn build_product(gs: &GapInstance, h: &GapInstance) -> Result<GapInstance> {
    let d = h.params.d;
    if gs.params.d != d {
        return Err(Error::input(format!("type count mismatch: {} vs {d}", gs.params.d)));
    }
    if gs.demands.is_empty() {
        return Err(Error::input("closure graph has no demands"));
    }
    let ns = gs.nonterminal_count();
    let nh = h.nonterminal_count();
    if gs.terminal[..ns].iter().any(|&t| t) || h.terminal[..nh].iter().any(|&t| t) {
        return Err(Error::input("nonterminals must come first"));
    }
    let big_n = nh * ns;
    let mut g = GapInstance::with_nodes(big_n, gs.node_count - ns);
    g.params = GapParams { big_n, ..h.params };
    let term = |v: usize| big_n + v - ns;
    let prod = |x: usize, y: usize| x * ns + y;

    let by_type = |inst: &GapInstance| {
        let mut m: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
        for &(u, v, ty) in &inst.edges {
            m.entry(ty).or_default().push((u, v));
        }
        m
    };
    let (he, se) = (by_type(h), by_type(gs));
    let h_pair: HashMap<usize, (usize, usize)> =
        h.demand_types.iter().zip(&h.demands).map(|(&ty, &st)| (ty, st)).collect();
    for ty in 1..=d {
        let (Some(hs), Some(ss)) = (he.get(&ty), se.get(&ty)) else { continue };
        let (s_h, t_h) = h_pair[&ty];
        for &(x, y) in hs {
            for &(a, b) in ss {
                let e = match (h.terminal[x], h.terminal[y], gs.terminal[a], gs.terminal[b]) {
                    (false, false, false, false) => (prod(x, a), prod(y, b)),
                    (true, false, true, false) if x == s_h => (term(a), prod(y, b)),
                    (false, true, false, true) if y == t_h => (prod(x, a), term(b)),
                    _ => continue,
                };
                g.edges.push((e.0, e.1, ty));
            }
        }
    }
    for (&(s, t), &ty) in gs.demands.iter().zip(&gs.demand_types) {
        g.demands.push((term(s), term(t)));
        g.demand_types.push(ty);
    }
    Ok(g)
}

/// Whether a closure-graph path with `len` nodes survives the product with
/// d′ layers: the product walk takes d′+1 steps in both coordinates.
pub fn demand_satisfiable(d_prime: usize, len: usize) -> bool {
    (d_prime == 1 && len == 1) || (2..=len).contains(&d_prime)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LongPathReport {
    /// Fewest nonterminals on any route, over demands that are connected.
    pub min_nonterminals: Option<usize>,
    pub connected_demands: usize,
    pub d_prime: usize,
    /// N/d′: value of the uniform assignment 1/d′ on every nonterminal.
    pub fractional_value: Ratio<u64>,
}

/// Fewest nonterminals on an s⇝t route (0/1 BFS), restricted to edges
/// accepted by `ok`, with one such route.
fn fewest_nonterminals(
    gap: &GapInstance,
    out: &[Vec<(usize, usize)>],
    s: usize,
    t: usize,
    ok: impl Fn(usize) -> bool,
) -> Option<(usize, Vec<usize>)> {
    let mut dist = vec![usize::MAX; gap.node_count];
    let mut via = vec![usize::MAX; gap.node_count];
    dist[s] = 0;
    let mut dq = VecDeque::from([s]);
    while let Some(u) = dq.pop_front() {
        for &(v, e) in &out[u] {
            if !ok(e) {
                continue;
            }
            let c = usize::from(!gap.terminal[v]);
            if dist[u] + c < dist[v] {
                dist[v] = dist[u] + c;
                via[v] = u;
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
    let mut route = vec![t];
    while *route.last().unwrap() != s {
        route.push(via[*route.last().unwrap()]);
    }
    route.reverse();
    Some((dist[t], route))
}

/// Fewest nonterminals over canonical routes, minimised over demands.
pub fn canonical_min_nonterminals(gap: &GapInstance) -> Option<usize> {
    let out = gap.out_lists();
    gap.demands
        .iter()
        .zip(&gap.demand_types)
        .filter_map(|(&(s, t), &ty)| fewest_nonterminals(gap, &out, s, t, |e| gap.edges[e].2 == ty))
        .map(|(c, _)| c)
        .min()
}

/// Checks that every demand route has at least d′ nonterminals and uses only
/// edges of the demand's type.
pub fn check_long_paths(gap: &GapInstance) -> Result<LongPathReport> {
    let out = gap.out_lists();
    let d_prime = gap.params.d_prime.max(1);
    let mut min: Option<usize> = None;
    let mut connected = 0;
    for (k, (&(s, t), &ty)) in gap.demands.iter().zip(&gap.demand_types).enumerate() {
        let Some((c, route)) = fewest_nonterminals(gap, &out, s, t, |_| true) else { continue };
        connected += 1;
        if c < d_prime {
            return Err(Error::Violation(format!(
                "demand {k} route {route:?} has {c} nonterminals, fewer than {d_prime}"
            )));
        }
        min = Some(min.map_or(c, |m| m.min(c)));
        if let Some(route) = noncanonical_walk(gap, &out, s, t, ty) {
            return Err(Error::Violation(format!("demand {k} has a non-canonical route {route:?}")));
        }
    }
    Ok(LongPathReport {
        min_nonterminals: min,
        connected_demands: connected,
        d_prime,
        fractional_value: Ratio::new(gap.params.big_n as u64, d_prime as u64),
    })
}

/// An s⇝t walk using some edge whose type is not `ty`, if one exists.
fn noncanonical_walk(
    gap: &GapInstance,
    out: &[Vec<(usize, usize)>],
    s: usize,
    t: usize,
    ty: usize,
) -> Option<Vec<usize>> {
    let n = gap.node_count;
    let mut via: Vec<Option<usize>> = vec![None; 2 * n];
    let mut seen = vec![false; 2 * n];
    seen[s] = true;
    let mut queue = VecDeque::from([s]);
    while let Some(state) = queue.pop_front() {
        let (u, flag) = (state % n, state >= n);
        if u == t && flag {
            let mut route = vec![u];
            let mut x = state;
            while let Some(p) = via[x] {
                route.push(p % n);
                x = p;
            }
            route.reverse();
            return Some(route);
        }
        for &(v, e) in out[u].iter() {
            let next = v + n * usize::from(flag || gap.edges[e].2 != ty);
            if !seen[next] {
                seen[next] = true;
                via[next] = Some(state);
                queue.push_back(next);
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multicut {
    pub size: usize,
    pub cut: Vec<usize>,
}

/// Nonterminals lying on some route of some demand.
fn relevant_nonterminals(gap: &GapInstance) -> Result<Vec<usize>> {
    let g = gap.to_digraph();
    let adj = g.adjacency();
    let mut rel = vec![false; gap.node_count];
    for (k, &(s, t)) in gap.demands.iter().enumerate() {
        let terminal_only = adj.reach(s, |e| gap.terminal[g.edges[e].1] || g.edges[e].1 == t);
        if terminal_only[t] {
            return Err(Error::input(format!("demand {k} is joined through terminals only")));
        }
        let fwd = adj.reach(s, |_| true);
        let bwd = adj.coreach(t, |_| true);
        for v in 0..gap.node_count {
            rel[v] |= !gap.terminal[v] && fwd[v] && bwd[v];
        }
    }
    Ok((0..gap.node_count).filter(|&v| rel[v]).collect())
}

fn connected_demands(gap: &GapInstance, out: &[Vec<(usize, usize)>], removed: &[bool]) -> usize {
    gap.demands
        .iter()
        .filter(|&&(s, t)| {
            let mut seen = vec![false; gap.node_count];
            seen[s] = true;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                if u == t {
                    return true;
                }
                for &(v, _) in &out[u] {
                    if !seen[v] && !removed[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            false
        })
        .count()
}

/// Exact minimum vertex multicut by enumerating subsets of the relevant
/// nonterminals in increasing size.
pub fn brute_force_vertex_multicut(gap: &GapInstance, limit: usize) -> Result<Multicut> {
    let rel = relevant_nonterminals(gap)?;
    let r = rel.len();
    if r > limit.min(30) {
        return Err(Error::Budget {
            what: "relevant nonterminals".into(),
            limit: limit as u64,
            lower_bound: Some(disjoint_path_packing(gap) as u64),
        });
    }
    let out = gap.out_lists();
    let cuts = |mask: u32| {
        let mut removed = vec![false; gap.node_count];
        for (b, &v) in rel.iter().enumerate() {
            removed[v] = mask >> b & 1 == 1;
        }
        connected_demands(gap, &out, &removed) == 0
    };
    for k in 0..=r as u32 {
        let found = (0u32..1 << r)
            .into_par_iter()
            .filter(|m| m.count_ones() == k)
            .find_first(|&m| cuts(m));
        if let Some(mask) = found {
            let cut: Vec<usize> = (0..r).filter(|b| mask >> b & 1 == 1).map(|b| rel[b]).collect();
            return Ok(Multicut { size: cut.len(), cut });
        }
    }
    unreachable!("removing every relevant nonterminal cuts all demands")
}

/// Greedy packing of demand routes with pairwise disjoint nonterminals;
/// any multicut needs a distinct node on each.
pub fn disjoint_path_packing(gap: &GapInstance) -> usize {
    let out = gap.out_lists();
    let mut used = vec![false; gap.node_count];
    let mut packed = 0;
    for &(s, t) in &gap.demands {
        loop {
            let mut via = vec![usize::MAX; gap.node_count];
            via[s] = s;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &(v, _) in &out[u] {
                    if via[v] == usize::MAX && !used[v] {
                        via[v] = u;
                        queue.push_back(v);
                    }
                }
            }
            if via[t] == usize::MAX {
                break;
            }
            let mut x = via[t];
            while x != s {
                if !gap.terminal[x] {
                    used[x] = true;
                }
                x = via[x];
            }
            packed += 1;
            if via[t] == s {
                break;
            }
        }
    }
    packed
}

#[derive(Clone, Debug, PartialEq)]
pub struct BigMulticutReport {
    pub max_set_size: usize,
    pub sets: u64,
    /// Sets after whose removal at least (1−ε)·|demands| demands stay connected.
    pub sets_leaving_most: u64,
    pub fraction: f64,
}

/// Removes every set of at most `max_set_size` relevant nonterminals and
/// counts how often most demands survive.
pub fn big_multicut_report(gap: &GapInstance, max_set_size: usize, eps: f64, limit: usize) -> Result<BigMulticutReport> {
    let rel = relevant_nonterminals(gap)?;
    if rel.len() > limit.min(30) {
        return Err(Error::Budget { what: "relevant nonterminals".into(), limit: limit as u64, lower_bound: None });
    }
    let out = gap.out_lists();
    let need = (1.0 - eps) * gap.demands.len() as f64;
    let (sets, most) = (0u32..1 << rel.len())
        .into_par_iter()
        .filter(|m| m.count_ones() as usize <= max_set_size)
        .map(|mask| {
            let mut removed = vec![false; gap.node_count];
            for (b, &v) in rel.iter().enumerate() {
                removed[v] = mask >> b & 1 == 1;
            }
            let c = connected_demands(gap, &out, &removed) as f64;
            (1u64, u64::from(c >= need))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(BigMulticutReport {
        max_set_size,
        sets,
        sets_leaving_most: most,
        fraction: most as f64 / sets as f64,
    })
}

/// Node splitting: each nonterminal v becomes v⁺ → v⁻ of weight 1; an edge
/// (u, v) becomes (u⁻, v⁺) of weight 0; terminals stay single nodes.
/// Returns the graph and each node's (in, out) ids.
pub fn node_split(g: &WeightedDigraph) -> (WeightedDigraph, Vec<(usize, usize)>) {
    let is_term = |v: usize| g.terminal.get(v).copied().unwrap_or(false);
    let mut ids = Vec::with_capacity(g.node_count);
    let mut next = 0;
    for v in 0..g.node_count {
        if is_term(v) {
            ids.push((next, next));
            next += 1;
        } else {
            ids.push((next, next + 1));
            next += 2;
        }
    }
    let mut out = WeightedDigraph::new(next);
    out.terminal = vec![false; next];
    for v in 0..g.node_count {
        if is_term(v) {
            out.terminal[ids[v].0] = true;
        } else {
            out.edges.push((ids[v].0, ids[v].1, BigUint::one()));
        }
    }
    for (u, v, _) in &g.edges {
        out.edges.push((ids[*u].1, ids[*v].0, BigUint::ZERO));
    }
    out.demands = g.demands.iter().map(|&(s, t)| (ids[s].1, ids[t].0)).collect();
    (out, ids)
}

/// Max flow where weight-1 edges have capacity 1 and all others are
/// unbounded; None if the flow is unbounded.
pub fn split_max_flow(g: &WeightedDigraph, s: usize, t: usize) -> Option<u64> {
    const INF: u64 = u64::MAX / 4;
    let caps = g.edges.iter().map(|(u, v, w)| (*u, *v, if w.is_one() { 1 } else { INF }));
    let f = max_flow(g.node_count, caps, s, t, INF);
    (f < INF).then_some(f)
}

/// Edmonds–Karp; stops once the flow reaches `stop`.
fn max_flow(n: usize, edges: impl Iterator<Item = (usize, usize, u64)>, s: usize, t: usize, stop: u64) -> u64 {
    // residual edges in pairs: 2k forward, 2k+1 backward
    let mut to = Vec::new();
    let mut cap = Vec::new();
    let mut adj = vec![Vec::new(); n];
    for (u, v, c) in edges {
        adj[u].push(to.len());
        to.push(v);
        cap.push(c);
        adj[v].push(to.len());
        to.push(u);
        cap.push(0);
    }
    let mut flow = 0;
    while flow < stop {
        let mut via = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &adj[u] {
                if cap[e] > 0 && !seen[to[e]] {
                    seen[to[e]] = true;
                    via[to[e]] = e;
                    queue.push_back(to[e]);
                }
            }
        }
        if !seen[t] {
            break;
        }
        let mut push = stop - flow;
        let mut x = t;
        while x != s {
            push = push.min(cap[via[x]]);
            x = to[via[x] ^ 1];
        }
        let mut x = t;
        while x != s {
            cap[via[x]] -= push;
            cap[via[x] ^ 1] += push;
            x = to[via[x] ^ 1];
        }
        flow += push;
    }
    flow
}

/// Most s⇝t paths pairwise sharing no node besides s and t.
pub fn max_node_disjoint_paths(node_count: usize, edges: &[(usize, usize)], s: usize, t: usize) -> Result<usize> {
    if s == t || s >= node_count || t >= node_count {
        return Err(Error::input(format!("bad endpoints ({s},{t})")));
    }
    let mut g = WeightedDigraph::new(node_count);
    g.terminal = vec![false; node_count];
    g.terminal[s] = true;
    g.terminal[t] = true;
    let mut seen = HashSet::new();
    let mut direct = 0;
    for &(u, v) in edges {
        if (u, v) == (s, t) {
            direct = 1;
        } else if u != v && seen.insert((u, v)) {
            g.edges.push((u, v, BigUint::ZERO));
        }
    }
    let (split, ids) = node_split(&g);
    let f = split_max_flow(&split, ids[s].1, ids[t].0).expect("every route crosses a split edge");
    Ok(f as usize + direct)
}

/// Graph with sources X, fresh sinks y_x and demands (x, y_x).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DsfInstance {
    pub node_count: usize,
    pub edges: Vec<(usize, usize)>,
    pub terminal: Vec<bool>,
    pub demands: Vec<(usize, usize)>,
    /// Indices of the paths starting at each source.
    pub families: Vec<Vec<usize>>,
    /// Disjoint x⇝y_x route count for each source (equals its degree).
    pub disjoint_routes: Vec<usize>,
}

/// Builds the Steiner forest instance of a bridge-free, source-restricted
/// system and checks that each source has deg(x) disjoint routes to its sink.
pub fn build_dsf_instance(system: &PathSystem, sources: &[usize]) -> Result<DsfInstance> {
    system.check_valid()?;
    if !is_source_restricted(system, sources) {
        return Err(Error::precondition("system is not source-restricted"));
    }
    if let Certificate::BridgeExists { witness, .. } = certify_bridge_free_acyclic(system)? {
        return Err(Error::precondition(format!("system has a bridge {witness:?}")));
    }
    let n = system.node_count;
    let mut terminal = vec![false; n + sources.len()];
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    for (_, u, v) in system.hops() {
        if seen.insert((u, v)) {
            edges.push((u, v));
        }
    }
    let mut demands = Vec::new();
    let mut families = Vec::new();
    let degrees = system.degrees();
    for (k, &x) in sources.iter().enumerate() {
        let y = n + k;
        terminal[x] = true;
        terminal[y] = true;
        let family: Vec<usize> = (0..system.paths.len())
            .filter(|&i| system.paths[i].first() == Some(&x))
            .collect();
        for &i in &family {
            edges.push((*system.paths[i].last().unwrap(), y));
        }
        demands.push((x, y));
        families.push(family);
    }
    let mut disjoint_routes = Vec::new();
    for (k, &(x, y)) in demands.iter().enumerate() {
        let f = max_node_disjoint_paths(n + sources.len(), &edges, x, y)?;
        if f != degrees[x] {
            return Err(Error::Violation(format!(
                "source {} has {f} disjoint routes but degree {}",
                sources[k], degrees[x]
            )));
        }
        disjoint_routes.push(f);
    }
    Ok(DsfInstance {
        node_count: n + sources.len(),
        edges,
        terminal,
        demands,
        families,
        disjoint_routes,
    })
}

/// Checks on small instances that every simple x⇝y_x route contains a path
/// of its family as a subsequence. Gives up after `max_routes` routes.
pub fn check_route_subsequences(dsf: &DsfInstance, system: &PathSystem, max_routes: usize) -> Result<usize> {
    let mut out = vec![Vec::new(); dsf.node_count];
    for &(u, v) in &dsf.edges {
        out[u].push(v);
    }
    let mut checked = 0;
    for (k, &(x, y)) in dsf.demands.iter().enumerate() {
        let mut stack = vec![(x, 0usize)];
        let mut on = vec![false; dsf.node_count];
        on[x] = true;
        let mut route = vec![x];
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if u == y {
                checked += 1;
                let body = &route[..route.len() - 1];
                let ok = dsf.families[k].iter().any(|&i| is_subsequence(&system.paths[i], body));
                if !ok {
                    return Err(Error::Violation(format!("route {route:?} contains no family path")));
                }
                if checked >= max_routes {
                    return Ok(checked);
                }
            }
            if u != y && *next < out[u].len() {
                let v = out[u][*next];
                *next += 1;
                if !on[v] {
                    on[v] = true;
                    route.push(v);
                    stack.push((v, 0));
                }
            } else {
                stack.pop();
                on[u] = false;
                route.pop();
            }
        }
    }
    Ok(checked)
}

fn is_subsequence(needle: &[usize], hay: &[usize]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|x| it.any(|y| y == x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::rs_construction;

    fn sys(n: usize, paths: &[&[usize]]) -> PathSystem {
        PathSystem::new(n, paths.iter().map(|p| p.to_vec()).collect())
    }

    #[test]
    fn partition_examples() {
        let s = rs_construction(5, &[0, 1, 3, 4]).unwrap();
        let (parts, rep) = partition_paths(&s, 20, 1).unwrap();
        assert!(parts.iter().all(|p| p.len() == 1));
        assert!(rep.per_part.iter().all(|&c| c == 3));
        let (parts, rep) = partition_paths(&s, 1, 1).unwrap();
        assert_eq!(parts[0].len(), 20);
        assert_eq!(rep.per_part, vec![27]);
        let (parts, _) = partition_paths(&s, 6, 9).unwrap();
        assert!(parts.iter().all(|p| p.len() == 3 || p.len() == 4));
        assert!(partition_paths(&s, 21, 0).is_err());
    }

    #[test]
    fn gs_single_path() {
        let g = build_gs(&sys(3, &[&[0, 1, 2]]), &[vec![0]]).unwrap();
        let inner: Vec<_> = g.edges.iter().filter(|e| e.0 < 3 && e.1 < 3).collect();
        assert_eq!(inner, vec![&(0, 1, 1), &(0, 2, 1), &(1, 2, 1)]);
        assert_eq!(g.edges.len(), 5);
        assert_eq!(g.demands, vec![(3, 4)]);
    }

    #[test]
    fn gs_rs_demands_are_long_and_canonical() {
        let s = rs_construction(5, &[0, 1, 3, 4]).unwrap();
        let (parts, _) = partition_paths(&s, 2, 3).unwrap();
        let g = build_gs(&s, &parts).unwrap();
        let dg = g.to_digraph();
        let adj = dg.adjacency();
        for &(a, b) in &g.demands {
            assert!(adj.hop_distance(a, b, |_| true).unwrap() >= 3);
        }
        let out = g.out_lists();
        for (&(a, b), &ty) in g.demands.iter().zip(&g.demand_types) {
            assert!(noncanonical_walk(&g, &out, a, b, ty).is_none());
        }
    }

    #[test]
    fn layer_formulas() {
        assert_eq!(layer_params(4), (2, 1, 2));
        assert_eq!(layer_params(16), (4, 2, 4));
        assert_eq!(layer_params(5), (3, 1, 2));
        for d in 4..200 {
            let (_, dp, w) = layer_params(d);
            assert!(dp * w <= d / 2, "d={d}");
        }
        assert_eq!(canonical_min_nonterminals(&build_h(4, 7).unwrap()), Some(1));
        assert_eq!(canonical_min_nonterminals(&build_h(16, 7).unwrap()), Some(2));
        assert!(build_h(3, 0).is_err());
    }

    #[test]
    fn product_rs_with_h16() {
        let s = rs_construction(5, &[0, 1, 3, 4]).unwrap();
        let (parts, _) = partition_paths(&s, 16, 3).unwrap();
        let gs = build_gs(&s, &parts).unwrap();
        let g = build_product(&gs, &build_h(16, 5).unwrap()).unwrap();
        assert_eq!(g.params.big_n, 480);
        let r = check_long_paths(&g).unwrap();
        assert_eq!(r.connected_demands, 20);
        assert_eq!(r.min_nonterminals, Some(2));
        assert_eq!(r.fractional_value, Ratio::from_integer(240));
    }

    #[test]
    fn product_with_one_layer_cannot_route_long_paths() {
        let gs = build_gs(&sys(3, &[&[0, 1, 2]]), &[vec![0], vec![], vec![], vec![]]).unwrap();
        let g = build_product(&gs, &build_h(4, 1).unwrap()).unwrap();
        assert!(!demand_satisfiable(1, 3));
        assert_eq!(check_long_paths(&g).unwrap().connected_demands, 0);
        let empty = build_gs(&sys(3, &[]), &[vec![], vec![], vec![], vec![]]).unwrap();
        assert!(build_product(&empty, &build_h(4, 1).unwrap()).is_err());
    }

    #[test]
    fn serialization_round_trip() {
        let g = build_h(5, 2).unwrap();
        assert_eq!(GapInstance::parse(&g.serialize()).unwrap(), g);
    }

    #[test]
    fn direct_terminal_edge_is_violation() {
        let mut g = GapInstance::with_nodes(1, 2);
        g.edges = vec![(1, 0, 1), (0, 2, 1), (1, 2, 1)];
        g.demands = vec![(1, 2)];
        g.demand_types = vec![1];
        g.params.d_prime = 1;
        assert!(matches!(check_long_paths(&g), Err(Error::Violation(_))));
    }

    #[test]
    fn multicut_examples() {
        let mut g = GapInstance::with_nodes(1, 2);
        g.edges = vec![(1, 0, 1), (0, 2, 1)];
        g.demands = vec![(1, 2)];
        g.demand_types = vec![1];
        assert_eq!(brute_force_vertex_multicut(&g, 22).unwrap(), Multicut { size: 1, cut: vec![0] });

        let mut g = GapInstance::with_nodes(2, 4);
        g.edges = vec![(2, 0, 1), (0, 3, 1), (4, 1, 1), (1, 5, 1)];
        g.demands = vec![(2, 3), (4, 5)];
        g.demand_types = vec![1, 1];
        assert_eq!(brute_force_vertex_multicut(&g, 22).unwrap().size, 2);
        assert_eq!(disjoint_path_packing(&g), 2);
    }

    #[test]
    fn tiny_product_multicut() {
        let s = sys(4, &[&[0, 1], &[2, 3]]);
        let mut parts = vec![Vec::new(); 16];
        parts[0] = vec![0];
        parts[1] = vec![1];
        let gs = build_gs(&s, &parts).unwrap();
        let g = build_product(&gs, &build_h(16, 11).unwrap()).unwrap();
        let cut = brute_force_vertex_multicut(&g, 22).unwrap();
        assert_eq!(cut.size, 8);
        assert_eq!(disjoint_path_packing(&g), 8);
        assert_eq!(check_long_paths(&g).unwrap().fractional_value, Ratio::from_integer(32));
    }

    #[test]
    fn node_split_examples() {
        let mut g = WeightedDigraph::new(3);
        g.terminal = vec![true, false, true];
        g.edges = vec![(0, 1, BigUint::one()), (1, 2, BigUint::one())];
        let (h, _) = node_split(&g);
        let mut w: Vec<u32> = h.edges.iter().map(|e| if e.2.is_one() { 1 } else { 0 }).collect();
        w.sort();
        assert_eq!(w, vec![0, 0, 1]);
        g.terminal = vec![true; 3];
        assert!(node_split(&g).0.edges.iter().all(|e| e.2 == BigUint::ZERO));
    }

    #[test]
    fn disjoint_paths_examples() {
        assert_eq!(max_node_disjoint_paths(4, &[(0, 1), (1, 3), (0, 2), (2, 3)], 0, 3).unwrap(), 2);
        assert_eq!(max_node_disjoint_paths(3, &[(0, 1), (1, 2)], 0, 2).unwrap(), 1);
        assert_eq!(max_node_disjoint_paths(4, &[(0, 1), (0, 2), (1, 3), (2, 1)], 0, 3).unwrap(), 1);
    }

    #[test]
    fn dsf_examples() {
        let s = sys(5, &[&[0, 1, 2], &[0, 3, 4]]);
        let dsf = build_dsf_instance(&s, &[0]).unwrap();
        assert_eq!(dsf.disjoint_routes, vec![2]);
        assert_eq!(check_route_subsequences(&dsf, &s, 100).unwrap(), 2);
        let shared = sys(4, &[&[0, 1, 2], &[0, 1, 3]]);
        assert!(matches!(build_dsf_instance(&shared, &[0]), Err(Error::Precondition(_))));
        assert!(matches!(build_dsf_instance(&s, &[1]), Err(Error::Precondition(_))));
    }
}
