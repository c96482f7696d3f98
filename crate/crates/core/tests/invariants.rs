use bridgegirth::bridges::{
    certify_bridge_free_acyclic, certify_ordered_bridge_free_acyclic, find_bridge_upto, find_two_cycles,
    validate_bridge, validate_ordered_bridge, Certificate,
};
use bridgegirth::gaps::max_node_disjoint_paths;
use bridgegirth::graph::WeightedDigraph;
use bridgegirth::reductions::{check_stretch, greedy_spanner, UGraph};
use bridgegirth::transforms::{clean_regularize, strip_two_cycles};
use bridgegirth::PathSystem;
use num_bigint::BigUint;
use num_rational::Ratio;
use proptest::prelude::*;

fn system(max_n: usize, max_p: usize) -> impl Strategy<Value = PathSystem> {
    (1..=max_n).prop_flat_map(move |n| {
        let path = Just((0..n).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_flat_map(move |perm| (0..=n).prop_map(move |len| perm[..len].to_vec()));
        prop::collection::vec(path, 0..=max_p).prop_map(move |paths| PathSystem::new(n, paths))
    })
}

fn ordered(s: PathSystem) -> PathSystem {
    PathSystem::new_ordered(s.node_count, s.paths)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn text_round_trip(s in system(9, 6), o in any::<bool>()) {
        let s = if o { ordered(s) } else { s };
        prop_assert_eq!(PathSystem::parse(&s.serialize()).unwrap(), s);
    }

    #[test]
    fn size_identity(s in system(9, 6)) {
        let st = s.stats().unwrap();
        let deg_sum: usize = s.degrees().iter().sum();
        prop_assert_eq!(deg_sum as u64, st.size);
        if st.path_count > 0 {
            prop_assert_eq!(st.avg_degree * Ratio::from_integer(st.node_count as u64), Ratio::from_integer(st.size));
            prop_assert_eq!(st.avg_length * Ratio::from_integer(st.path_count as u64), Ratio::from_integer(st.size));
        }
    }

    #[test]
    fn induced_keeps_order_and_degrees(s in system(9, 6), mask in prop::collection::vec(any::<bool>(), 9)) {
        let keep = &mask[..s.node_count];
        let ind = s.induced_subsystem(keep);
        let deg = s.degrees();
        let sub_deg = ind.system.degrees();
        for (old, new) in ind.map.iter().enumerate() {
            if let Some(new) = new {
                prop_assert!(keep[old]);
                prop_assert_eq!(sub_deg[*new], deg[old]);
            }
        }
        for (out, &from) in ind.system.paths.iter().zip(&ind.path_origin) {
            let expect: Vec<usize> = s.paths[from].iter().filter_map(|&v| ind.map[v]).collect();
            prop_assert_eq!(out, &expect);
        }
    }

    #[test]
    fn topological_order_respects_hops(s in system(9, 6)) {
        match s.topological_order() {
            Ok(order) => {
                let mut pos = vec![0; s.node_count];
                for (i, &v) in order.iter().enumerate() {
                    pos[v] = i;
                }
                for (_, u, v) in s.hops() {
                    prop_assert!(pos[u] < pos[v]);
                }
            }
            Err(cycle) => prop_assert!(!cycle.is_empty() && !s.is_acyclic()),
        }
    }

    #[test]
    fn strip_is_idempotent(s in system(8, 6)) {
        let once = strip_two_cycles(&s);
        prop_assert!(find_two_cycles(&once).is_none());
        prop_assert_eq!(strip_two_cycles(&once), once);
    }

    #[test]
    fn clean_keeps_valid_system(s in system(8, 6)) {
        let out = clean_regularize(&s);
        prop_assert!(out.check_valid().is_ok());
        prop_assert!(out.size() <= s.size());
    }

    #[test]
    fn certificates_match_search(s in system(7, 5)) {
        prop_assume!(s.is_acyclic());
        let kmax = s.paths.len().max(2);
        let full = find_bridge_upto(&s, kmax, false, u64::MAX).unwrap();
        let cert = certify_bridge_free_acyclic(&s).unwrap();
        prop_assert_eq!(cert.is_bridge_free(), full.is_none());
        if let Certificate::BridgeExists { witness, .. } = &cert {
            prop_assert!(validate_bridge(&s, witness).unwrap());
        }
        let o = ordered(s);
        let full = find_bridge_upto(&o, kmax, true, u64::MAX).unwrap();
        let cert = certify_ordered_bridge_free_acyclic(&o).unwrap();
        prop_assert_eq!(cert.is_bridge_free(), full.is_none());
        if let Some(w) = cert.witness() {
            prop_assert!(validate_ordered_bridge(&o, w).unwrap());
        }
    }

    #[test]
    fn digraph_round_trip(n in 1usize..8, raw in prop::collection::vec((0usize..8, 0usize..8, 1u64..1000), 0..12)) {
        let mut g = WeightedDigraph::new(n);
        for (u, v, w) in raw {
            let (u, v) = (u % n, v % n);
            if u != v && g.edge_index(u, v).is_none() {
                g.edges.push((u, v, BigUint::from(w) << 70));
            }
        }
        g.demands = vec![(0, n - 1)];
        prop_assert_eq!(WeightedDigraph::parse(&g.serialize()).unwrap(), g);
    }

    #[test]
    fn spanner_stretch_and_girth(n in 2usize..10, raw in prop::collection::vec((0usize..10, 0usize..10, 1u64..20), 0..30), k in 2u64..4) {
        let mut g = UGraph { node_count: n, edges: Vec::new() };
        for (u, v, w) in raw {
            if u % n != v % n {
                g.edges.push((u % n, v % n, w));
            }
        }
        let h = greedy_spanner(&g, k).unwrap();
        prop_assert!(check_stretch(&g, &h, k));
        prop_assert!(h.girth().is_none_or(|c| c as u64 > k + 1));
    }

    #[test]
    fn disjoint_paths_bounded_by_degree(n in 2usize..8, raw in prop::collection::vec((0usize..8, 0usize..8), 0..20)) {
        let edges: Vec<(usize, usize)> = raw.into_iter().map(|(u, v)| (u % n, v % n)).collect();
        let f = max_node_disjoint_paths(n, &edges, 0, n - 1).unwrap();
        let out: std::collections::HashSet<_> = edges.iter().filter(|e| e.0 == 0 && e.1 != 0).collect();
        prop_assert!(f <= out.len());
    }
}
