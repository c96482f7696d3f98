//! Exhaustive search for the largest path systems of bridge girth > k.
//!
//! Paths of at least two nodes are grown one node at a time; nodes get labels
//! in first-use order. Without ordering, paths come in non-increasing length.
//! Paths of one node never lie on a bridge, so every unused path slot is
//! filled by one at the end.

use rayon::prelude::*;

use crate::bridges::find_bridge_upto;
use crate::error::{Error, Result};
use crate::system::PathSystem;

pub const DEFAULT_SEARCH_BUDGET: u64 = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchParams {
    pub n: usize,
    pub p: usize,
    /// None = infinite girth
    pub k: Option<usize>,
    pub ordered: bool,
    pub acyclic_only: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchResult {
    pub value: u64,
    pub witness: PathSystem,
    /// Search tree nodes visited.
    pub explored: u64,
    pub params: SearchParams,
}

struct Search {
    n: usize,
    p: usize,
    kmax: usize,
    ordered: bool,
    acyclic: bool,
    budget: u64,
    explored: u64,
    paths: Vec<Vec<usize>>,
    caps: Vec<usize>,
    labels: usize,
    total: usize,
    best: Option<(u64, Vec<Vec<usize>>)>,
}

impl Search {
    fn best_value(&self) -> u64 {
        self.best.as_ref().map_or(0, |b| b.0)
    }

    fn value_if_closed(&self) -> u64 {
        let fill = if self.n > 0 { self.p - self.paths.len() } else { 0 };
        (self.total + fill) as u64
    }

    fn grow(&mut self) -> Result<()> {
        self.explored += 1;
        if self.explored > self.budget {
            return Err(Error::Budget {
                what: "search tree nodes".into(),
                limit: self.budget,
                lower_bound: Some(self.best_value()),
            });
        }
        let c = self.paths.len() - 1;
        let len = self.paths[c].len();
        let cap = self.caps[c];
        let later = if self.ordered { self.n } else { cap };
        let bound = self.total + (cap - len) + (self.p - self.paths.len()) * later;
        if self.best.is_some() && bound as u64 <= self.best_value() {
            return Ok(());
        }
        if len >= 2 {
            let v = self.value_if_closed();
            if self.best.is_none() || v > self.best_value() {
                self.best = Some((v, self.paths.clone()));
            }
            if self.paths.len() < self.p {
                self.caps.push(if self.ordered { self.n } else { len });
                for w in 0..=self.labels.min(self.n - 1) {
                    self.push_new_path(w)?;
                }
                self.caps.pop();
            }
        }
        if len < cap {
            for w in 0..=self.labels.min(self.n - 1) {
                if self.paths[c].contains(&w) {
                    continue;
                }
                self.paths[c].push(w);
                if self.admissible() {
                    let fresh = w == self.labels;
                    self.labels += usize::from(fresh);
                    self.total += 1;
                    self.grow()?;
                    self.total -= 1;
                    self.labels -= usize::from(fresh);
                }
                self.paths[c].pop();
            }
        }
        Ok(())
    }

    fn push_new_path(&mut self, w: usize) -> Result<()> {
        let fresh = w == self.labels;
        self.labels += usize::from(fresh);
        self.paths.push(vec![w]);
        self.total += 1;
        self.grow()?;
        self.total -= 1;
        self.paths.pop();
        self.labels -= usize::from(fresh);
        Ok(())
    }

    /// Whether the node `w` just appended to the last path keeps the system valid.
    fn admissible(&self) -> bool {
        let c = self.paths.len() - 1;
        let (&w, cur) = self.paths[c].split_last().unwrap();
        let Some(&prev) = cur.last() else { return true };
        if self.acyclic && self.reaches(w, prev) {
            return false;
        }
        if self.kmax < 2 {
            return true;
        }
        let mut nodes = vec![false; self.n];
        let mut used = vec![false; self.paths.len()];
        // the last path as river, ending its bridge at w
        used[c] = true;
        nodes[w] = true;
        for &u in cur {
            nodes[u] = true;
            if self.chain(u, w, self.kmax - 1, &mut used, &mut nodes, None) {
                return false;
            }
            nodes[u] = false;
        }
        used[c] = false;
        nodes[w] = false;
        if self.ordered {
            // a later river does not exist yet
            return true;
        }
        // the last path as an arc arriving at w
        for r in 0..c {
            let river = &self.paths[r];
            used[r] = true;
            for i in 0..river.len() {
                for j in i + 1..river.len() {
                    let (a, b) = (river[i], river[j]);
                    nodes[a] = true;
                    nodes[b] = true;
                    if self.chain(a, b, self.kmax - 1, &mut used, &mut nodes, Some((c, w, false))) {
                        return false;
                    }
                    nodes[a] = false;
                    nodes[b] = false;
                }
            }
            used[r] = false;
        }
        true
    }

    /// Chain of at most `left` arcs from `from` to `target` over unused
    /// paths and fresh nodes; `must` = (path, node, seen) asks for a hop on
    /// that path arriving at that node (w itself is the current tail).
    fn chain(
        &self,
        from: usize,
        target: usize,
        left: usize,
        used: &mut [bool],
        nodes: &mut [bool],
        must: Option<(usize, usize, bool)>,
    ) -> bool {
        for q in 0..self.paths.len() {
            if used[q] {
                continue;
            }
            let path = &self.paths[q];
            let Some(k) = path.iter().position(|&x| x == from) else { continue };
            for &y in &path[k + 1..] {
                let must = must.map(|(mq, mw, seen)| (mq, mw, seen || (q == mq && y == mw)));
                if y == target {
                    if must.is_none_or(|m| m.2) {
                        return true;
                    }
                    continue;
                }
                if left == 1 || nodes[y] {
                    continue;
                }
                used[q] = true;
                nodes[y] = true;
                let hit = self.chain(y, target, left - 1, used, nodes, must);
                used[q] = false;
                nodes[y] = false;
                if hit {
                    return true;
                }
            }
        }
        false
    }

    fn reaches(&self, s: usize, t: usize) -> bool {
        let mut seen = vec![false; self.n];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            if u == t {
                return true;
            }
            for p in &self.paths {
                if let Some(k) = p.iter().position(|&x| x == u) {
                    if let Some(&v) = p.get(k + 1) {
                        if !seen[v] {
                            seen[v] = true;
                            stack.push(v);
                        }
                    }
                }
            }
        }
        false
    }
}

/// Exact largest size of a system on at most n nodes and p paths with
/// (ordered) bridge girth > k, with a witness re-checked by the bridge finder.
pub fn max_system(params: SearchParams, budget: u64) -> Result<SearchResult> {
    let SearchParams { n, p, k, ordered, acyclic_only } = params;
    let kmax = k.unwrap_or(usize::MAX).min(p).min(n);
    let mut s = Search {
        n,
        p,
        kmax,
        ordered,
        acyclic: acyclic_only,
        budget,
        explored: 0,
        paths: Vec::new(),
        caps: vec![n],
        labels: 0,
        total: 0,
        best: None,
    };
    // all paths single nodes
    s.best = Some((if n > 0 { p as u64 } else { 0 }, Vec::new()));
    if n > 0 && p > 0 {
        s.push_new_path(0)?;
    }
    let (value, mut paths) = s.best.take().unwrap_or((0, Vec::new()));
    let mut nodes = paths.iter().flatten().max().map_or(0, |&m| m + 1);
    if n > 0 {
        nodes = nodes.max(1);
        paths.resize(p, vec![0]);
    }
    let witness = PathSystem {
        node_count: nodes,
        paths,
        ordered,
    };
    verify_witness(&witness, kmax, acyclic_only, value)?;
    Ok(SearchResult {
        value,
        witness,
        explored: s.explored,
        params,
    })
}

fn verify_witness(w: &PathSystem, kmax: usize, acyclic: bool, value: u64) -> Result<()> {
    w.check_valid()?;
    if w.size() != value {
        return Err(Error::Violation(format!("witness size {} differs from {value}", w.size())));
    }
    if kmax >= 2 {
        if let Some(b) = find_bridge_upto(w, kmax, w.ordered, crate::bridges::DEFAULT_BUDGET)? {
            return Err(Error::Violation(format!("witness has a bridge {b:?}")));
        }
    }
    if acyclic && !w.is_acyclic() {
        return Err(Error::Violation("witness is cyclic".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableRow {
    pub n: usize,
    pub p: usize,
    pub k: Option<usize>,
    pub beta: SearchResult,
    pub beta_star: SearchResult,
}

/// β and β* over 1..=max_n × 1..=max_p × ks, with monotonicity checked.
pub fn beta_table(max_n: usize, max_p: usize, ks: &[Option<usize>], acyclic_only: bool, budget: u64) -> Result<Vec<TableRow>> {
    let mut ks = ks.to_vec();
    ks.sort_by_key(|k| k.unwrap_or(usize::MAX));
    ks.dedup();
    let mut cells = Vec::new();
    for n in 1..=max_n {
        for p in 1..=max_p {
            cells.extend(ks.iter().map(|&k| (n, p, k)));
        }
    }
    let rows: Vec<TableRow> = cells
        .par_iter()
        .map(|&(n, p, k)| {
            let base = SearchParams { n, p, k, ordered: false, acyclic_only };
            Ok(TableRow {
                n,
                p,
                k,
                beta: max_system(base, budget)?,
                beta_star: max_system(SearchParams { ordered: true, ..base }, budget)?,
            })
        })
        .collect::<Result<_>>()?;
    check_monotone(&rows)?;
    Ok(rows)
}

/// β non-increasing in k, non-decreasing in n and p; β* ≥ β.
pub fn check_monotone(rows: &[TableRow]) -> Result<()> {
    let key = |k: Option<usize>| k.unwrap_or(usize::MAX);
    for a in rows {
        if a.beta_star.value < a.beta.value {
            return Err(Error::Violation(format!("β* < β at ({}, {}, {:?})", a.n, a.p, a.k)));
        }
        for b in rows {
            let dominated = b.n >= a.n && b.p >= a.p && key(b.k) <= key(a.k);
            if dominated && (b.beta.value < a.beta.value || b.beta_star.value < a.beta_star.value) {
                return Err(Error::Violation(format!(
                    "monotonicity fails between ({}, {}, {:?}) and ({}, {}, {:?})",
                    a.n, a.p, a.k, b.n, b.p, b.k
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(n: usize, p: usize, k: Option<usize>, ordered: bool) -> SearchResult {
        max_system(SearchParams { n, p, k, ordered, acyclic_only: false }, DEFAULT_SEARCH_BUDGET).unwrap()
    }

    #[test]
    fn tiny_values() {
        assert_eq!(run(3, 2, Some(2), false).value, 6);
        assert_eq!(run(3, 3, Some(2), false).value, 7);
        assert!(run(3, 3, None, false).value >= 7);
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(run(0, 3, Some(2), false).value, 0);
        assert_eq!(run(4, 0, Some(2), false).value, 0);
        assert_eq!(run(4, 1, Some(2), false).value, 4);
        assert_eq!(run(1, 3, None, true).value, 3);
    }

    #[test]
    fn budget_reports_lower_bound() {
        let e = max_system(SearchParams { n: 5, p: 4, k: Some(2), ordered: false, acyclic_only: false }, 50).unwrap_err();
        assert!(matches!(e, Error::Budget { lower_bound: Some(_), .. }));
    }

    #[test]
    fn small_table_is_monotone() {
        let rows = beta_table(3, 3, &[Some(2), Some(3), None], false, DEFAULT_SEARCH_BUDGET).unwrap();
        assert_eq!(rows.len(), 27);
        let acyclic = beta_table(3, 2, &[Some(2)], true, DEFAULT_SEARCH_BUDGET).unwrap();
        assert!(acyclic.iter().all(|r| r.beta.witness.is_acyclic()));
    }
}
