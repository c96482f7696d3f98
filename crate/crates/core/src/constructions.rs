//! Extremal and baseline path systems.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::system::PathSystem;

pub fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= q {
        if q % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Polynomials ax²+bx+c over F_q, one path per (point, third of the derivative circle).
///
/// Node id is a·q²+b·q+c. Through each point (x, y) pass q² polynomials; they
/// are sorted by f′(x) = 2ax+b starting from 0, ties by (a, b), and cut into
/// three contiguous blocks of sizes ⌈q²/3⌉ or ⌊q²/3⌋.
pub fn quad_construction(q: u64) -> Result<PathSystem> {
    if q < 3 || !is_prime(q) {
        return Err(Error::input(format!("q = {q} must be an odd prime")));
    }
    let q2 = (q * q) as usize;
    let sizes = [q2.div_ceil(3), (q2 + 1) / 3, q2 / 3];
    debug_assert_eq!(sizes.iter().sum::<usize>(), q2);
    let mut paths = Vec::with_capacity(3 * q2);
    for x in 0..q {
        for y in 0..q {
            let mut through: Vec<(u64, u64, u64, u64)> = Vec::with_capacity(q2);
            for a in 0..q {
                for b in 0..q {
                    let c = (y + 2 * q * q - (a * x % q) * x % q - b * x % q) % q;
                    let deriv = (2 * a * x + b) % q;
                    through.push((deriv, a, b, c));
                }
            }
            through.sort_unstable();
            let mut start = 0;
            for &len in &sizes {
                paths.push(
                    through[start..start + len]
                        .iter()
                        .map(|&(_, a, b, c)| (a * q * q + b * q + c) as usize)
                        .collect(),
                );
                start += len;
            }
        }
    }
    Ok(PathSystem::new((q * q * q) as usize, paths))
}

/// Lines in the grid [1,ℓ]×[1,⌊n/ℓ⌋], ordered by slope then start.
///
/// Starts are (1, j) for j ≤ ⌊n/(2ℓ)⌋, slopes (1, i) for i ≤ ⌊n/(2ℓ²)⌋. The
/// grid point (col, row) has id (col−1)·⌊n/ℓ⌋ + (row−1).
pub fn lattice_construction(n: usize, ell: usize) -> Result<PathSystem> {
    if ell == 0 {
        return Err(Error::input("ell must be positive"));
    }
    let height = n / ell;
    let starts = n / (2 * ell);
    let slopes = n / (2 * ell * ell);
    if starts == 0 || slopes == 0 {
        return Err(Error::input(format!(
            "lattice n={n}, ell={ell} has {starts} starts and {slopes} slopes; need 2·ell² ≤ n"
        )));
    }
    let mut paths = Vec::with_capacity(starts * slopes);
    for i in 1..=slopes {
        for j in 1..=starts {
            let path: Vec<usize> = (0..ell)
                .map(|t| {
                    let row = j + t * i;
                    assert!(row <= height, "lattice point out of range");
                    t * height + (row - 1)
                })
                .collect();
            paths.push(path);
        }
    }
    Ok(PathSystem::new_ordered(ell * height, paths))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApMethod {
    Greedy,
    Behrend,
}

/// First 3-term progression a < b < c (c − b = b − a) inside `set`.
pub fn find_progression(set: &[u64]) -> Option<(u64, u64, u64)> {
    let lookup: HashSet<u64> = set.iter().copied().collect();
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for (i, &a) in sorted.iter().enumerate() {
        for &b in &sorted[i + 1..] {
            if lookup.contains(&(2 * b - a)) {
                return Some((a, b, 2 * b - a));
            }
        }
    }
    None
}

/// A subset of [0, m) with no 3-term arithmetic progression.
pub fn ap_free_set(m: u64, method: ApMethod) -> Result<Vec<u64>> {
    if m == 0 {
        return Err(Error::input("m must be at least 1"));
    }
    let set = match method {
        ApMethod::Greedy => greedy_ap_free(m),
        ApMethod::Behrend => {
            let s = behrend(m);
            if s.len() >= 1 { s } else { vec![0] }
        }
    };
    assert!(find_progression(&set).is_none(), "AP-free postcondition");
    Ok(set)
}

fn greedy_ap_free(m: u64) -> Vec<u64> {
    let mut taken = vec![false; m as usize];
    let mut set = Vec::new();
    for x in 0..m {
        // x would be the top of a progression b−d, b, x
        let completes = set.iter().any(|&b: &u64| 2 * b >= x && taken[(2 * b - x) as usize] && 2 * b - x < b);
        if !completes {
            taken[x as usize] = true;
            set.push(x);
        }
    }
    set
}

/// Digits in [0, t] base 2t+1 with a fixed sum of squares; no carries when
/// adding two members, and a sphere holds no three collinear lattice points.
fn behrend(m: u64) -> Vec<u64> {
    let mut best: Vec<u64> = Vec::new();
    for dim in 1..=16u32 {
        let mut t = 1u64;
        let value_cap = |t: u64| {
            let base = 2 * t + 1;
            // largest member: t·(1 + base + … + base^(dim−1))
            (0..dim).try_fold(0u64, |acc, i| base.checked_pow(i).and_then(|p| acc.checked_add(t * p)))
        };
        if !matches!(value_cap(1), Some(v) if v < m) {
            break;
        }
        while matches!(value_cap(t + 1), Some(v) if v < m) {
            t += 1;
        }
        let base = 2 * t + 1;
        let mut by_radius: std::collections::BTreeMap<u64, Vec<u64>> = Default::default();
        let mut digits = vec![0u64; dim as usize];
        loop {
            let r: u64 = digits.iter().map(|d| d * d).sum();
            let v = digits.iter().rev().fold(0u64, |acc, &d| acc * base + d);
            by_radius.entry(r).or_default().push(v);
            let mut k = 0;
            while k < digits.len() && digits[k] == t {
                digits[k] = 0;
                k += 1;
            }
            if k == digits.len() {
                break;
            }
            digits[k] += 1;
        }
        for (_, mut vals) in by_radius {
            if vals.len() > best.len() {
                vals.sort_unstable();
                best = vals;
            }
        }
    }
    best
}

/// Three-layer system with paths (x, m+x+a, 3m+x+2a) for x ∈ [0,m), a ∈ A.
pub fn rs_construction(m: usize, set: &[u64]) -> Result<PathSystem> {
    if let Some(&a) = set.iter().find(|&&a| a as usize >= m) {
        return Err(Error::input(format!("{a} is outside [0, {m})")));
    }
    if let Some((a, b, c)) = find_progression(set) {
        return Err(Error::input(format!("set contains the progression {a}, {b}, {c}")));
    }
    let mut paths = Vec::with_capacity(m * set.len());
    for x in 0..m {
        for &a in set {
            let a = a as usize;
            paths.push(vec![x, m + x + a, 3 * m + x + 2 * a]);
        }
    }
    Ok(PathSystem::new(6 * m, paths))
}

/// One path per right-side vertex holding its neighbours in ascending order.
pub fn bipartite_to_path_system(left: usize, right_adj: &[Vec<usize>]) -> Result<PathSystem> {
    let mut paths = Vec::with_capacity(right_adj.len());
    for (r, nbrs) in right_adj.iter().enumerate() {
        let mut p = nbrs.clone();
        p.sort_unstable();
        p.dedup();
        if let Some(&v) = p.iter().find(|&&v| v >= left) {
            return Err(Error::input(format!("right vertex {r} has neighbour {v} ≥ {left}")));
        }
        paths.push(p);
    }
    Ok(PathSystem::new(left, paths))
}

/// Random node deletions down to `target_n`, then random path deletions down to `target_p`.
pub fn trim(system: &PathSystem, target_n: usize, target_p: usize, seed: u64) -> Result<PathSystem> {
    if target_n > system.node_count || target_p > system.paths.len() {
        return Err(Error::input("trim targets exceed the current system"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; system.node_count];
    for v in sample(&mut rng, system.node_count, target_n) {
        keep[v] = true;
    }
    let induced = system.induced_subsystem(&keep).system;
    let mut keep_path = vec![false; induced.paths.len()];
    for i in sample(&mut rng, induced.paths.len(), target_p) {
        keep_path[i] = true;
    }
    Ok(induced.select_paths(|i| keep_path[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridges::{find_two_bridges, certify_ordered_bridge_free_acyclic, Certificate};

    #[test]
    fn quad_small_counts() {
        let s = quad_construction(3).unwrap();
        assert_eq!(s.node_count, 27);
        assert_eq!(s.paths.len(), 27);
        assert_eq!(s.size(), 81);
        assert!(s.degrees().iter().all(|&d| d == 3));
        assert!(s.paths.iter().all(|p| p.len() == 3));
        assert!(s.validate().is_ok());
        assert_eq!(find_two_bridges(&s), None);
    }

    #[test]
    fn quad_rejects_bad_q() {
        assert!(quad_construction(2).is_err());
        assert!(quad_construction(9).is_err());
    }

    #[test]
    fn quad_paths_lie_on_their_point() {
        let q = 5u64;
        let s = quad_construction(q).unwrap();
        for (idx, p) in s.paths.iter().enumerate() {
            let point = idx as u64 / 3;
            let (x, y) = (point / q, point % q);
            for &v in p {
                let v = v as u64;
                let (a, b, c) = (v / (q * q), v / q % q, v % q);
                assert_eq!((a * x * x + b * x + c) % q, y);
            }
        }
    }

    #[test]
    fn lattice_small() {
        let s = lattice_construction(8, 2).unwrap();
        assert_eq!(s.paths.len(), 2);
        assert_eq!(s.size(), 4);
        assert!(s.ordered);
        assert_eq!(certify_ordered_bridge_free_acyclic(&s).unwrap(), Certificate::BridgeFree);
        let s = lattice_construction(128, 4).unwrap();
        assert_eq!(s.paths.len(), 64);
        assert_eq!(s.size(), 256);
        assert!(lattice_construction(4, 2).is_err());
    }

    #[test]
    fn ap_free_examples() {
        assert_eq!(ap_free_set(5, ApMethod::Greedy).unwrap(), vec![0, 1, 3, 4]);
        assert_eq!(ap_free_set(1, ApMethod::Greedy).unwrap(), vec![0]);
        assert_eq!(ap_free_set(1, ApMethod::Behrend).unwrap(), vec![0]);
        for m in 1..200 {
            for method in [ApMethod::Greedy, ApMethod::Behrend] {
                let s = ap_free_set(m, method).unwrap();
                assert!(s.iter().all(|&x| x < m));
                assert!(find_progression(&s).is_none());
            }
        }
    }

    #[test]
    fn progression_checker() {
        assert_eq!(find_progression(&[0, 1, 2]), Some((0, 1, 2)));
        assert_eq!(find_progression(&[0, 2, 4, 5]), Some((0, 2, 4)));
        assert_eq!(find_progression(&[0, 1, 3, 4]), None);
    }

    #[test]
    fn rs_examples() {
        let s = rs_construction(5, &[0, 1, 3, 4]).unwrap();
        assert_eq!((s.node_count, s.paths.len(), s.size()), (30, 20, 60));
        assert!(s.is_acyclic());
        let one = rs_construction(1, &[0]).unwrap();
        assert_eq!(one.paths, vec![vec![0, 1, 3]]);
        assert_eq!(one.node_count, 6);
        assert!(rs_construction(5, &[0, 1, 2]).is_err());
    }

    #[test]
    fn bipartite_examples() {
        let star = bipartite_to_path_system(3, &[vec![2, 0, 1]]).unwrap();
        assert_eq!(star.paths, vec![vec![0, 1, 2]]);
        // a 4-cycle: two right vertices sharing both left neighbours
        let c4 = bipartite_to_path_system(2, &[vec![0, 1], vec![1, 0]]).unwrap();
        assert!(find_two_bridges(&c4).is_some());
    }

    #[test]
    fn trim_examples() {
        let s = quad_construction(3).unwrap();
        assert_eq!(trim(&s, 27, 27, 1).unwrap(), s);
        assert_eq!(trim(&s, 27, 10, 4).unwrap().paths.len(), 10);
        assert!(trim(&s, 27, 0, 4).unwrap().paths.is_empty());
        assert_eq!(trim(&s, 20, 5, 9).unwrap(), trim(&s, 20, 5, 9).unwrap());
    }
}
