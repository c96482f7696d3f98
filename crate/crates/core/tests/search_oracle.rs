//! Exhaustive search checked against plain enumeration of every system.

use bridgegirth::bridges::find_bridge_upto;
use bridgegirth::search::{max_system, SearchParams, DEFAULT_SEARCH_BUDGET};
use bridgegirth::PathSystem;

fn all_paths(n: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        for v in 0..n {
            if !cur.contains(&v) {
                cur.push(v);
                rec(n, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(n, &mut Vec::new(), &mut out);
    out
}

/// Index tuples of length p: all of them, or only non-decreasing ones.
fn tuples(m: usize, p: usize, sorted: bool) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..p {
        let mut next = Vec::new();
        for t in &out {
            let lo = if sorted { t.last().copied().unwrap_or(0) } else { 0 };
            for i in lo..m {
                let mut u = t.clone();
                u.push(i);
                next.push(u);
            }
        }
        out = next;
    }
    out
}

fn brute(n: usize, p: usize, k: Option<usize>, ordered: bool, acyclic: bool) -> u64 {
    let paths = all_paths(n);
    let kmax = k.unwrap_or(usize::MAX).min(p).min(n);
    let mut best = 0;
    for t in tuples(paths.len(), p, !ordered) {
        let sys = PathSystem {
            node_count: n,
            paths: t.iter().map(|&i| paths[i].clone()).collect(),
            ordered,
        };
        if sys.size() <= best || (acyclic && !sys.is_acyclic()) {
            continue;
        }
        if kmax < 2 || find_bridge_upto(&sys, kmax, ordered, u64::MAX).unwrap().is_none() {
            best = sys.size();
        }
    }
    best
}

fn search(n: usize, p: usize, k: Option<usize>, ordered: bool, acyclic: bool) -> u64 {
    let r = max_system(SearchParams { n, p, k, ordered, acyclic_only: acyclic }, DEFAULT_SEARCH_BUDGET).unwrap();
    assert!(r.witness.node_count <= n.max(1) && r.witness.paths.len() <= p);
    r.value
}

#[test]
fn unordered_matches_enumeration() {
    for n in 1..=4 {
        for p in 1..=3 {
            for k in [Some(2), Some(3), None] {
                for acyclic in [false, true] {
                    assert_eq!(search(n, p, k, false, acyclic), brute(n, p, k, false, acyclic), "n={n} p={p} k={k:?} acyclic={acyclic}");
                }
            }
        }
    }
}

#[test]
fn ordered_matches_enumeration() {
    for n in 1..=3 {
        for p in 1..=3 {
            for k in [Some(2), None] {
                assert_eq!(search(n, p, k, true, false), brute(n, p, k, true, false), "n={n} p={p} k={k:?}");
            }
        }
    }
    for k in [Some(2), Some(3), None] {
        assert_eq!(search(4, 2, k, true, false), brute(4, 2, k, true, false));
    }
}
