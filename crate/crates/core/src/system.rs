//! The path system data model: validation, statistics, topological order,
//! induced subsystems and the line-based text format.

use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Reverse;
use std::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Node ground set `0..node_count` plus a list of repeat-free node sequences.
///
/// When `ordered` is set, the list order is the total order of the paths and
/// operations that care about it (ordered bridges, online games, weighted
/// hard instances) use it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PathSystem {
    pub node_count: usize,
    pub paths: Vec<Vec<usize>>,
    pub ordered: bool,
}

/// First broken invariant of a system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Invalid {
    OutOfRange { path: usize, node: usize },
    Repeated { path: usize, node: usize },
}

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Invalid::OutOfRange { path, node } => {
                write!(f, "node {node} out of range in path {path}")
            }
            Invalid::Repeated { path, node } => write!(f, "repeated node {node} in path {path}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemStats {
    pub node_count: usize,
    pub path_count: usize,
    pub size: u64,
    pub avg_degree: Ratio<u64>,
    pub avg_length: Ratio<u64>,
    pub min_degree: usize,
    pub max_degree: usize,
    pub min_length: usize,
    pub max_length: usize,
    pub l2_norm_sq: u64,
    pub acyclic: bool,
}

/// Result of [`PathSystem::induced_subsystem`].
#[derive(Clone, Debug)]
pub struct Induced {
    pub system: PathSystem,
    /// `map[old] = Some(new)` for kept nodes.
    pub map: Vec<Option<usize>>,
    /// For each output path, the index of the input path it came from.
    pub path_origin: Vec<usize>,
}

impl PathSystem {
    pub fn new(node_count: usize, paths: Vec<Vec<usize>>) -> Self {
        PathSystem {
            node_count,
            paths,
            ordered: false,
        }
    }

    pub fn new_ordered(node_count: usize, paths: Vec<Vec<usize>>) -> Self {
        PathSystem {
            node_count,
            paths,
            ordered: true,
        }
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    /// ‖S‖, the number of node slots.
    pub fn size(&self) -> u64 {
        self.paths.iter().map(|p| p.len() as u64).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count];
        for p in &self.paths {
            for &v in p {
                deg[v] += 1;
            }
        }
        deg
    }

    pub fn validate(&self) -> std::result::Result<(), Invalid> {
        let mut seen = vec![usize::MAX; self.node_count];
        for (i, p) in self.paths.iter().enumerate() {
            for &v in p {
                if v >= self.node_count {
                    return Err(Invalid::OutOfRange { path: i, node: v });
                }
                if seen[v] == i {
                    return Err(Invalid::Repeated { path: i, node: v });
                }
                seen[v] = i;
            }
        }
        Ok(())
    }

    pub fn check_valid(&self) -> Result<()> {
        self.validate().map_err(|e| Error::Input(e.to_string()))
    }

    pub fn stats(&self) -> Result<SystemStats> {
        self.check_valid()?;
        let deg = self.degrees();
        let size = self.size();
        let n = self.node_count as u64;
        let p = self.paths.len() as u64;
        let avg = |den: u64| {
            if den == 0 {
                Ratio::from_integer(0)
            } else {
                Ratio::new(size, den)
            }
        };
        let lens = self.paths.iter().map(Vec::len);
        Ok(SystemStats {
            node_count: self.node_count,
            path_count: self.paths.len(),
            size,
            avg_degree: avg(n),
            avg_length: avg(p),
            min_degree: deg.iter().copied().min().unwrap_or(0),
            max_degree: deg.iter().copied().max().unwrap_or(0),
            min_length: lens.clone().min().unwrap_or(0),
            max_length: lens.max().unwrap_or(0),
            l2_norm_sq: self.paths.iter().map(|p| (p.len() as u64).pow(2)).sum(),
            acyclic: self.topological_order().is_ok(),
        })
    }

    /// Edges of the consecutive-pair digraph, in path order, duplicates kept.
    pub fn hops(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.paths
            .iter()
            .enumerate()
            .flat_map(|(i, p)| p.windows(2).map(move |w| (i, w[0], w[1])))
    }

    /// Successor lists of the consecutive-pair digraph (deduplicated, sorted).
    pub fn successor_lists(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![BTreeSet::new(); self.node_count];
        for (_, u, v) in self.hops() {
            sets[u].insert(v);
        }
        sets.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// A node order consistent with every path, smallest id first among ties.
    /// On failure returns a directed cycle `c0 → c1 → … → c0` of forward hops.
    pub fn topological_order(&self) -> std::result::Result<Vec<usize>, Vec<usize>> {
        let succ = self.successor_lists();
        let mut indeg = vec![0usize; self.node_count];
        for s in &succ {
            for &v in s {
                indeg[v] += 1;
            }
        }
        let mut heap: BinaryHeap<Reverse<usize>> = (0..self.node_count)
            .filter(|&v| indeg[v] == 0)
            .map(Reverse)
            .collect();
        let mut order = Vec::with_capacity(self.node_count);
        while let Some(Reverse(u)) = heap.pop() {
            order.push(u);
            for &v in &succ[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    heap.push(Reverse(v));
                }
            }
        }
        if order.len() == self.node_count {
            Ok(order)
        } else {
            Err(find_cycle(&succ).expect("Kahn left nodes but no cycle found"))
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_ok()
    }

    /// Keeps the nodes with `keep[v]`, replacing every path by its subsequence
    /// of kept nodes. Paths that become empty stay as length-0 entries.
    pub fn induced_subsystem(&self, keep: &[bool]) -> Induced {
        self.induced_subsystem_with(keep, false)
    }

    pub fn induced_subsystem_with(&self, keep: &[bool], drop_empty: bool) -> Induced {
        assert_eq!(keep.len(), self.node_count, "keep mask length");
        let mut map = vec![None; self.node_count];
        let mut next = 0;
        for v in 0..self.node_count {
            if keep[v] {
                map[v] = Some(next);
                next += 1;
            }
        }
        let mut paths = Vec::new();
        let mut path_origin = Vec::new();
        for (i, p) in self.paths.iter().enumerate() {
            let q: Vec<usize> = p.iter().filter_map(|&v| map[v]).collect();
            if drop_empty && q.is_empty() {
                continue;
            }
            paths.push(q);
            path_origin.push(i);
        }
        Induced {
            system: PathSystem {
                node_count: next,
                paths,
                ordered: self.ordered,
            },
            map,
            path_origin,
        }
    }

    /// Keeps the paths whose index satisfies `keep`, preserving their order.
    pub fn select_paths(&self, keep: impl Fn(usize) -> bool) -> PathSystem {
        PathSystem {
            node_count: self.node_count,
            paths: self
                .paths
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, p)| p.clone())
                .collect(),
            ordered: self.ordered,
        }
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str("pathsys 1\n");
        out.push_str(&format!("nodes {}\n", self.node_count));
        out.push_str(&format!("ordered {}\n", u8::from(self.ordered)));
        for p in &self.paths {
            out.push_str("path");
            for v in p {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<PathSystem> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let err = |line: usize, reason: &str| Error::Parse {
            line,
            reason: reason.to_string(),
        };

        let (ln, header) = lines.next().ok_or_else(|| err(0, "empty input"))?;
        if header.split_whitespace().collect::<Vec<_>>() != ["pathsys", "1"] {
            return Err(err(ln, "expected header `pathsys 1`"));
        }
        let (ln, nodes) = lines.next().ok_or_else(|| err(ln, "missing `nodes` line"))?;
        let n = keyword_value(nodes, "nodes").ok_or_else(|| err(ln, "expected `nodes <n>`"))?;
        let (ln, ord) = lines.next().ok_or_else(|| err(ln, "missing `ordered` line"))?;
        let ordered = match keyword_value(ord, "ordered") {
            Some(0) => false,
            Some(1) => true,
            _ => return Err(err(ln, "expected `ordered <0|1>`")),
        };

        let mut paths = Vec::new();
        let mut seen = vec![usize::MAX; n];
        for (ln, line) in lines {
            let mut tok = line.split_whitespace();
            if tok.next() != Some("path") {
                return Err(err(ln, "expected `path <ids...>`"));
            }
            let idx = paths.len();
            let mut p = Vec::new();
            for t in tok {
                let v: usize = t
                    .parse()
                    .map_err(|_| err(ln, &format!("bad node id `{t}`")))?;
                if v >= n {
                    return Err(err(ln, &format!("node {v} out of range")));
                }
                if seen[v] == idx {
                    return Err(err(ln, &format!("repeated node {v}")));
                }
                seen[v] = idx;
                p.push(v);
            }
            paths.push(p);
        }
        Ok(PathSystem {
            node_count: n,
            paths,
            ordered,
        })
    }
}

fn keyword_value(line: &str, key: &str) -> Option<usize> {
    let mut tok = line.split_whitespace();
    if tok.next()? != key {
        return None;
    }
    let v = tok.next()?.parse().ok()?;
    tok.next().is_none().then_some(v)
}

/// Some directed cycle of a digraph given by successor lists.
pub(crate) fn find_cycle(succ: &[Vec<usize>]) -> Option<Vec<usize>> {
    // 0 = unseen, 1 = on stack, 2 = done
    let mut color = vec![0u8; succ.len()];
    for root in 0..succ.len() {
        if color[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        color[root] = 1;
        while let Some(&mut (u, ref mut i)) = stack.last_mut() {
            if *i < succ[u].len() {
                let v = succ[u][*i];
                *i += 1;
                match color[v] {
                    0 => {
                        color[v] = 1;
                        stack.push((v, 0));
                    }
                    1 => {
                        let start = stack.iter().position(|&(w, _)| w == v).unwrap();
                        return Some(stack[start..].iter().map(|&(w, _)| w).collect());
                    }
                    _ => {}
                }
            } else {
                color[u] = 2;
                stack.pop();
            }
        }
    }
    None
}
