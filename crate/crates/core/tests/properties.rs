use jedi::distance::{audit_bounds, jedi_baseline, quickjedi};
use jedi::index::label_intersection_bound;
use jedi::oracle::{min_mapping_with_limit, validate_mapping, ConstraintSet};
use jedi::order::{jedi_order_exact, jofilter, jofilter_with_stats};
use jedi::synth::{random_small_tree, reorder_members, synth_sized_tree};
use jedi::{parse_document, JsonTree, NodeType};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tree(max_nodes: usize) -> impl Strategy<Value = JsonTree> {
    any::<u64>().prop_map(move |seed| random_small_tree(&mut ChaCha8Rng::seed_from_u64(seed), max_nodes))
}

fn log2_ceil(n: usize) -> usize {
    (usize::BITS - (n.max(1) - 1).leading_zeros()) as usize
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn engines_match_exhaustive_search(t1 in tree(7), t2 in tree(7)) {
        let m = min_mapping_with_limit(&t1, &t2, ConstraintSet::JEDI, 7).unwrap();
        prop_assert!(validate_mapping(&m, &t1, &t2, ConstraintSet::JEDI));
        prop_assert_eq!(jedi_baseline(&t1, &t2), m.cost);
        prop_assert_eq!(quickjedi(&t1, &t2), m.cost);

        let (s1, s2) = (t1.sort(), t2.sort());
        let ordered = min_mapping_with_limit(&s1, &s2, ConstraintSet::JEDI_ORDER, 7).unwrap();
        prop_assert_eq!(jedi_order_exact(&s1, &s2).unwrap(), ordered.cost);
    }

    #[test]
    fn distance_is_symmetric(t1 in tree(30), t2 in tree(30)) {
        prop_assert_eq!(quickjedi(&t1, &t2), quickjedi(&t2, &t1));
        let (s1, s2) = (t1.sort(), t2.sort());
        prop_assert_eq!(jedi_order_exact(&s1, &s2).unwrap(), jedi_order_exact(&s2, &s1).unwrap());
    }

    #[test]
    fn bound_chain(t1 in tree(30), t2 in tree(30)) {
        let d = quickjedi(&t1, &t2);
        prop_assert!(t1.len().abs_diff(t2.len()) <= label_intersection_bound(&t1, &t2));
        prop_assert!(label_intersection_bound(&t1, &t2) <= d);
        prop_assert!(d <= jedi_order_exact(&t1.sort(), &t2.sort()).unwrap());
        prop_assert!(d <= t1.len() + t2.len());
        prop_assert_eq!(d, jedi_baseline(&t1, &t2));
    }

    #[test]
    fn triangle_inequality_on_small_trees(a in tree(12), b in tree(12), c in tree(12)) {
        let (ab, bc, ac) = (quickjedi(&a, &b), quickjedi(&b, &c), quickjedi(&a, &c));
        prop_assert!(ac <= ab + bc, "{} {} {}: {ac} > {ab} + {bc}", a.to_json(), b.to_json(), c.to_json());
    }

    #[test]
    fn matching_bounds_hold_everywhere(t1 in tree(25), t2 in tree(25)) {
        let audit = audit_bounds(&t1, &t2);
        prop_assert_eq!(audit.violations(), 0, "{:?}", audit);
    }

    #[test]
    fn filter_decides_threshold(t1 in tree(40), t2 in tree(40), tau in 0usize..14) {
        let (s1, s2) = (t1.sort(), t2.sort());
        let exact = jedi_order_exact(&s1, &s2).unwrap();
        let outcome = jofilter_with_stats(&s1, &s2, tau);
        prop_assert_eq!(outcome.accepted, exact <= tau);
        if outcome.accepted {
            prop_assert_eq!(outcome.distance, Some(exact));
        }
        prop_assert!(outcome.cells <= ((2 * s1.len() - 1) * (2 * tau + 1)) as u64);
        prop_assert!(outcome.peak_states <= log2_ceil(s1.len()) + 1);
    }

    #[test]
    fn filter_on_near_duplicates(seed in any::<u64>(), size in 20usize..200, tau in 0usize..13) {
        let t1 = synth_sized_tree(size, seed).sort();
        let t2 = jedi::synth::perturb_tree(&t1, (seed % 6) as usize, seed ^ 1).sort();
        let exact = jedi_order_exact(&t1, &t2).unwrap();
        prop_assert_eq!(jofilter(&t1, &t2, tau), exact <= tau);
    }

    #[test]
    fn text_round_trip(t in tree(40)) {
        let text = t.to_json();
        let back = parse_document(&text).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn member_order_is_invisible(t in tree(40), seed in any::<u64>()) {
        let shuffled = reorder_members(&t, seed);
        prop_assert_eq!(quickjedi(&t, &shuffled), 0);
        prop_assert_eq!(jedi_baseline(&t, &shuffled), 0);
        prop_assert_eq!(shuffled.sort(), t.sort());
    }

    #[test]
    fn array_swaps_are_visible(items in prop::collection::btree_set(0i64..1000, 2..8), i in 0usize..8, j in 0usize..8) {
        let items: Vec<i64> = items.into_iter().collect();
        let (i, j) = (i % items.len(), j % items.len());
        prop_assume!(i != j);
        let mut swapped = items.clone();
        swapped.swap(i, j);
        let a = parse_document(&serde_json::to_string(&items).unwrap()).unwrap();
        let b = parse_document(&serde_json::to_string(&swapped).unwrap()).unwrap();
        prop_assert!(quickjedi(&a, &b) >= 1);
    }

    #[test]
    fn region_counts_partition_the_tree(t in tree(40)) {
        for v in 0..t.len() {
            prop_assert_eq!(t.desc_count(v) + t.anc_count(v) + t.lr_count(v) + 1, t.len());
            let mut sizes: Vec<usize> = t.children(v).iter().map(|&c| t.subtree_size(c)).collect();
            sizes.sort_unstable();
            let prefix: Vec<usize> = sizes.iter().scan(0, |acc, s| { *acc += s; Some(*acc) }).collect();
            prop_assert_eq!(t.sas(v), &prefix[..]);
            if t.node_type(v) == NodeType::Key {
                prop_assert_eq!(t.degree(v), 1);
            }
        }
        let order = t.favorable_child_order();
        let mut seen = vec![false; t.len()];
        for &v in &order {
            prop_assert!(t.children(v).iter().all(|&c| seen[c]));
            seen[v] = true;
        }
        prop_assert!(seen.into_iter().all(|s| s));
    }
}
