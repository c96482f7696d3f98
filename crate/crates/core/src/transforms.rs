//! Girth-safe rewrites of path systems: regularization, 2-cycle stripping,
//! random subsampling, source restriction and the random base-path subsystem.

use num_rational::Ratio;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::system::PathSystem;

type Q = Ratio<u64>;

fn q(n: usize) -> Q {
    Q::from_integer(n as u64)
}

/// Regularizes lengths and degrees while keeping at least half the size.
///
/// With d and ℓ the input averages: paths of length ≥ ℓ/2 are cut in half,
/// nodes of degree ≥ d/2 are split in two (incidences alternating), as long
/// as both halves reach the quarter threshold. Then nodes of degree < d/4 and
/// paths of length < ℓ/4 are deleted until none remain. Node ids in the
/// output are dense; split copies follow the originals.
pub fn clean_regularize(system: &PathSystem) -> PathSystem {
    let size = system.size();
    if size == 0 {
        return system.clone();
    }
    let d = Q::new(size, system.node_count as u64);
    let ell = Q::new(size, system.paths.len() as u64);
    let half = Q::new(1, 2);
    let quarter = Q::new(1, 4);

    let mut paths = system.paths.clone();
    let mut n = system.node_count;
    loop {
        let mut changed = false;
        // step 1: long paths
        let mut i = 0;
        while i < paths.len() {
            let len = paths[i].len();
            if q(len) >= ell * half && len >= 2 && q(len / 2) >= ell * quarter {
                let tail = paths[i].split_off(len.div_ceil(2));
                paths.push(tail);
                changed = true;
            } else {
                i += 1;
            }
        }
        // step 2: high-degree nodes
        let mut holders: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (pi, p) in paths.iter().enumerate() {
            for &v in p {
                holders[v].push(pi);
            }
        }
        for v in 0..holders.len() {
            let deg = holders[v].len();
            if q(deg) >= d * half && deg >= 2 && q(deg / 2) >= d * quarter {
                let copy = n;
                n += 1;
                for &pi in holders[v].iter().skip(1).step_by(2) {
                    for x in paths[pi].iter_mut().filter(|x| **x == v) {
                        *x = copy;
                    }
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // step 3: prune light nodes and short paths
    let mut alive = vec![true; n];
    loop {
        let mut deg = vec![0usize; n];
        for p in &paths {
            for &v in p {
                deg[v] += 1;
            }
        }
        let mut changed = false;
        for v in 0..n {
            if alive[v] && q(deg[v]) < d * quarter {
                alive[v] = false;
                changed = true;
            }
        }
        for p in paths.iter_mut() {
            p.retain(|&v| alive[v]);
        }
        let before = paths.len();
        paths.retain(|p| q(p.len()) >= ell * quarter && !p.is_empty());
        changed |= paths.len() != before;
        if !changed {
            break;
        }
    }
    PathSystem {
        node_count: n,
        paths,
        ordered: system.ordered,
    }
    .induced_subsystem(&alive)
    .system
}

/// Drops from each path every node that would close a 2-cycle with an
/// already processed path. Paths are processed in index order.
pub fn strip_two_cycles(system: &PathSystem) -> PathSystem {
    let n = system.node_count;
    let mut kept: Vec<Vec<usize>> = Vec::with_capacity(system.paths.len());
    // pos[q][v] for kept paths, stored sparsely per node
    let mut at: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for path in &system.paths {
        let mut out = Vec::with_capacity(path.len());
        for (i, &v) in path.iter().enumerate() {
            // omit v if some later u on this path precedes v on a kept path
            let omit = path[i + 1..].iter().any(|&u| {
                at[u].iter().any(|&(qi, pu)| {
                    at[v].iter().any(|&(qj, pv)| qj == qi && pu < pv)
                })
            });
            if !omit {
                out.push(v);
            }
        }
        let idx = kept.len();
        for (k, &v) in out.iter().enumerate() {
            at[v].push((idx, k));
        }
        kept.push(out);
    }
    PathSystem {
        node_count: n,
        paths: kept,
        ordered: system.ordered,
    }
}

/// Keeps ⌈c·n⌉ random nodes and ⌈c·p⌉ random paths (induced on the kept nodes).
pub fn subsample(system: &PathSystem, c: Ratio<u64>, seed: u64) -> Result<PathSystem> {
    if c > Ratio::from_integer(1) {
        return Err(Error::input("c must lie in [0, 1]"));
    }
    let keep_n = (c * q(system.node_count)).ceil().to_integer() as usize;
    let keep_p = (c * q(system.paths.len())).ceil().to_integer() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; system.node_count];
    for v in sample(&mut rng, system.node_count, keep_n) {
        keep[v] = true;
    }
    let mut keep_path = vec![false; system.paths.len()];
    for i in sample(&mut rng, system.paths.len(), keep_p) {
        keep_path[i] = true;
    }
    Ok(system.select_paths(|i| keep_path[i]).induced_subsystem(&keep).system)
}

#[derive(Clone, Debug)]
pub struct SourceRestricted {
    pub system: PathSystem,
    /// Surviving designated sources.
    pub sources: Vec<usize>,
    pub size_before: u64,
    pub size_after: u64,
}

/// Samples ⌊p/d⌋ sources and restricts every path to start at its first source.
pub fn clean_source_restricted(system: &PathSystem, lambda: Q, seed: u64) -> Result<SourceRestricted> {
    let size = system.size();
    if size == 0 || system.node_count == 0 {
        return Err(Error::input("source restriction needs a nonempty system"));
    }
    // |X| = ⌊p/d⌋ = ⌊p·n/‖S‖⌋
    let x = (system.paths.len() as u64 * system.node_count as u64 / size) as usize;
    let x = x.min(system.node_count);
    if x == 0 {
        return Err(Error::input(
            "sampled source set is empty (p/d < 1); use a system with more paths",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sources: Vec<usize> = sample(&mut rng, system.node_count, x).into_vec();
    sources.sort_unstable();
    restrict_to_sources(system, &sources, lambda)
}

/// Source restriction with a caller-chosen source set.
pub fn restrict_to_sources(system: &PathSystem, sources: &[usize], lambda: Q) -> Result<SourceRestricted> {
    let n = system.node_count;
    if let Some(&v) = sources.iter().find(|&&v| v >= n) {
        return Err(Error::input(format!("source {v} out of range")));
    }
    let size = system.size();
    let d = if n == 0 { Q::from_integer(0) } else { Q::new(size, n as u64) };
    let ell = if system.paths.is_empty() {
        Q::from_integer(0)
    } else {
        Q::new(size, system.paths.len() as u64)
    };
    let mut is_src = vec![false; n];
    for &v in sources {
        is_src[v] = true;
    }
    let mut paths: Vec<Vec<usize>> = Vec::new();
    for p in &system.paths {
        let Some(first) = p.iter().position(|&v| is_src[v]) else { continue };
        let mut r = vec![p[first]];
        r.extend(p[first + 1..].iter().copied().filter(|&v| !is_src[v]));
        paths.push(r);
    }
    let mut alive = vec![true; n];
    loop {
        let mut deg = vec![0usize; n];
        for p in &paths {
            for &v in p {
                deg[v] += 1;
            }
        }
        let mut changed = false;
        for v in 0..n {
            if alive[v] && deg[v] > 0 && q(deg[v]) < lambda * d {
                alive[v] = false;
                changed = true;
            }
        }
        let before = paths.len();
        // a dead source takes its paths with it
        paths.retain(|p| alive[p[0]]);
        for p in paths.iter_mut() {
            p.retain(|&v| alive[v]);
        }
        paths.retain(|p| q(p.len()) >= lambda * ell);
        changed |= paths.len() != before;
        if !changed {
            break;
        }
    }
    let out = PathSystem {
        node_count: n,
        paths,
        ordered: system.ordered,
    };
    let size_after = out.size();
    Ok(SourceRestricted {
        sources: sources.iter().copied().filter(|&v| alive[v]).collect(),
        system: out,
        size_before: size,
        size_after,
    })
}

/// True iff every nonempty path starts in `sources` and holds no other source.
pub fn is_source_restricted(system: &PathSystem, sources: &[usize]) -> bool {
    let mut is_src = vec![false; system.node_count];
    for &v in sources {
        is_src[v] = true;
    }
    system
        .paths
        .iter()
        .filter(|p| !p.is_empty())
        .all(|p| is_src[p[0]] && p[1..].iter().all(|&v| !is_src[v]))
}

#[derive(Clone, Debug)]
pub struct BaseSample {
    pub system: PathSystem,
    pub base: usize,
    pub forward: bool,
    /// Paths other than the base meeting it in exactly one node.
    pub crossing: usize,
    /// `map[old] = Some(new)` for nodes of V′.
    pub map: Vec<Option<usize>>,
}

/// Random base path π_b and the induced subsystem on π_b plus, for each path
/// meeting π_b in one node, the nodes within h−1 positions of that node in the
/// direction picked by a fair coin.
pub fn sample_base_subsystem(system: &PathSystem, h: usize, seed: u64) -> Result<BaseSample> {
    let candidates: Vec<usize> = (0..system.paths.len()).filter(|&i| !system.paths[i].is_empty()).collect();
    if candidates.is_empty() {
        return Err(Error::input("system has no nonempty path"));
    }
    if h == 0 {
        return Err(Error::input("h must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = candidates[rng.gen_range(0..candidates.len())];
    let forward: bool = rng.gen();
    let mut on_base = vec![false; system.node_count];
    for &v in &system.paths[base] {
        on_base[v] = true;
    }
    let mut keep = on_base.clone();
    let mut crossing = 0;
    for (i, p) in system.paths.iter().enumerate() {
        if i == base {
            continue;
        }
        let hits: Vec<usize> = (0..p.len()).filter(|&k| on_base[p[k]]).collect();
        if hits.len() != 1 {
            continue;
        }
        crossing += 1;
        let k = hits[0];
        let range = if forward {
            k..(k + h).min(p.len())
        } else {
            (k + 1).saturating_sub(h)..k + 1
        };
        for &v in &p[range] {
            keep[v] = true;
        }
    }
    let kept = keep.iter().filter(|&&k| k).count();
    assert!(kept <= h * crossing + system.paths[base].len(), "|V'| bound");
    let induced = system.induced_subsystem(&keep);
    Ok(BaseSample {
        system: induced.system,
        base,
        forward,
        crossing,
        map: induced.map,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct L2Report {
    pub l2_norm_sq: u64,
    pub max_length: usize,
    /// n·L
    pub n_times_max: u64,
    /// p^{1/3} n^{4/3}
    pub power_term: f64,
    /// ‖S‖₂² / (n·L + p^{1/3} n^{4/3}), 0 when the denominator is 0
    pub ratio: f64,
}

pub fn l2_report(system: &PathSystem) -> L2Report {
    let l2: u64 = system.paths.iter().map(|p| (p.len() as u64).pow(2)).sum();
    let max_length = system.paths.iter().map(Vec::len).max().unwrap_or(0);
    let n = system.node_count as f64;
    let p = system.paths.len() as f64;
    let n_times_max = system.node_count as u64 * max_length as u64;
    let power_term = p.cbrt() * n.powf(4.0 / 3.0);
    let den = n_times_max as f64 + power_term;
    L2Report {
        l2_norm_sq: l2,
        max_length,
        n_times_max,
        power_term,
        ratio: if den > 0.0 { l2 as f64 / den } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridges::find_two_cycles;
    use crate::constructions::quad_construction;

    fn sys(n: usize, paths: &[&[usize]]) -> PathSystem {
        PathSystem::new(n, paths.iter().map(|p| p.to_vec()).collect())
    }

    #[test]
    fn clean_single_path_splits_to_singletons() {
        let out = clean_regularize(&sys(4, &[&[0, 1, 2, 3]]));
        assert_eq!(out.paths.len(), 4);
        assert!(out.paths.iter().all(|p| p.len() == 1));
        assert_eq!(out.size(), 4);
    }

    #[test]
    fn clean_two_regular_system() {
        // ℓ = 2, d = 2: every path splits, every node stays
        let s = sys(3, &[&[0, 1], &[1, 2], &[2, 0]]);
        let out = clean_regularize(&s);
        assert_eq!(out.size(), s.size());
        assert!(out.paths.iter().all(|p| p.len() == 1));
        assert!(out.validate().is_ok());
    }

    #[test]
    fn clean_empty() {
        let e = PathSystem::default();
        assert_eq!(clean_regularize(&e), e);
    }

    #[test]
    fn strip_examples() {
        let out = strip_two_cycles(&sys(2, &[&[0, 1], &[1, 0]]));
        assert_eq!(out.paths, vec![vec![0, 1], vec![0]]);
        let acyclic = sys(4, &[&[0, 1, 2], &[1, 3], &[0, 3]]);
        assert_eq!(strip_two_cycles(&acyclic), acyclic);
        let q5 = quad_construction(5).unwrap();
        let out = strip_two_cycles(&q5);
        assert_eq!(find_two_cycles(&out), None);
        assert_eq!(strip_two_cycles(&out), out);
    }

    #[test]
    fn subsample_examples() {
        let s = quad_construction(3).unwrap();
        assert_eq!(subsample(&s, Q::from_integer(1), 5).unwrap(), s);
        let e = subsample(&s, Q::from_integer(0), 5).unwrap();
        assert_eq!((e.node_count, e.paths.len()), (0, 0));
        let half = Q::new(1, 2);
        assert_eq!(subsample(&s, half, 11).unwrap(), subsample(&s, half, 11).unwrap());
        let h = subsample(&s, half, 11).unwrap();
        assert_eq!((h.node_count, h.paths.len()), (14, 14));
    }

    #[test]
    fn source_restriction_examples() {
        let s = sys(5, &[&[0, 1, 2], &[0, 3, 4]]);
        let r = restrict_to_sources(&s, &[0], Q::new(1, 16)).unwrap();
        assert_eq!(r.system, s);
        let r = restrict_to_sources(&sys(3, &[&[0, 1, 2]]), &[1], Q::new(1, 16)).unwrap();
        assert_eq!(r.system.paths, vec![vec![1, 2]]);
        let r = restrict_to_sources(&sys(4, &[&[0, 1, 2, 3]]), &[1, 3], Q::new(1, 16)).unwrap();
        assert_eq!(r.system.paths, vec![vec![1, 2]]);
        assert!(is_source_restricted(&r.system, &r.sources));
    }

    #[test]
    fn sampled_sources_are_restricted() {
        let s = quad_construction(3).unwrap();
        let r = clean_source_restricted(&s, Q::new(1, 16), 2).unwrap();
        assert!(is_source_restricted(&r.system, &r.sources));
        assert!(!r.sources.is_empty());
    }

    #[test]
    fn base_sample_examples() {
        let s = quad_construction(5).unwrap();
        let b = sample_base_subsystem(&s, 3, 1).unwrap();
        assert!(b.system.node_count <= 3 * b.crossing + s.paths[b.base].len());
        let deg_before = s.degrees();
        let deg_after = b.system.degrees();
        for (old, new) in b.map.iter().enumerate() {
            if let Some(new) = new {
                assert_eq!(deg_before[old], deg_after[*new]);
            }
        }
        let one = sample_base_subsystem(&s, 1, 1).unwrap();
        assert_eq!(one.system.node_count, s.paths[one.base].len());
        assert!(sample_base_subsystem(&PathSystem::default(), 1, 1).is_err());
    }

    #[test]
    fn l2_examples() {
        let r = l2_report(&sys(8, &[&[0, 1, 2, 3], &[4, 5, 6, 7]]));
        assert_eq!((r.l2_norm_sq, r.max_length, r.n_times_max), (32, 4, 32));
        assert_eq!(l2_report(&quad_construction(3).unwrap()).l2_norm_sq, 243);
        let e = l2_report(&PathSystem::default());
        assert_eq!((e.l2_norm_sq, e.ratio), (0, 0.0));
    }
}
