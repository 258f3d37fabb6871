use advsample::dimension::{self, Littlestone};
use advsample::{BitSet, SetFamily};
use advsample_oracles::{brute_ldim, brute_vcdim, has_shattered_tree};
use proptest::prelude::*;

fn family_strategy() -> impl Strategy<Value = SetFamily> {
    (1usize..=5).prop_flat_map(|m| {
        prop::collection::vec(0u32..(1 << m), 0..=12).prop_map(move |masks| {
            let sets = masks
                .into_iter()
                .map(|mask| BitSet::from_indices(m, (0..m).filter(|i| mask >> i & 1 == 1)))
                .collect();
            SetFamily::new(m, sets, "random").unwrap()
        })
    })
}

proptest! {
    #[test]
    fn ldim_matches_tree_enumeration(f in family_strategy()) {
        prop_assert_eq!(dimension::ldim(&f).unwrap(), brute_ldim(&f));
    }

    #[test]
    fn vcdim_matches_subset_check(f in family_strategy()) {
        prop_assert_eq!(dimension::vcdim(&f).unwrap(), brute_vcdim(&f));
    }

    #[test]
    fn witness_tree_is_shattered(f in family_strategy()) {
        let d = dimension::ldim(&f).unwrap();
        if d >= 0 {
            let tree = dimension::shattered_tree(&f, d as usize).unwrap().unwrap();
            prop_assert!(dimension::is_shattered(&f, &tree));
            prop_assert!(!has_shattered_tree(f.sets(), f.domain_size(), d as usize + 1));
        }
    }

    #[test]
    fn lmaj_definition(f in family_strategy()) {
        let mut engine = Littlestone::new(&f).unwrap();
        let root = engine.root();
        let d = engine.ldim(root);
        let lmaj = engine.lmaj(root);
        for x in 0..f.domain_size() {
            let inside = SetFamily::new(
                f.domain_size(),
                f.iter().filter(|s| s.contains(x)).cloned().collect(),
                "in",
            ).unwrap();
            prop_assert_eq!(lmaj.contains(x), brute_ldim(&inside) == d && d >= 0);
        }
    }
}
