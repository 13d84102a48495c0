//! Property tests for pair designs: cardinality bookkeeping, index ranges,
//! diagonal exclusion, and the reproducibility of subsampled designs.

use kdisc::Design;
use proptest::prelude::*;
use std::collections::HashSet;

fn design_strategy() -> impl Strategy<Value = (usize, Design)> {
    (2usize..40).prop_flat_map(|n| {
        let max_m = n * (n - 1) / 2;
        let blocks = prop::collection::vec(2usize..5, 1..4)
            .prop_filter("blocks must fit", move |sizes| sizes.iter().sum::<usize>() <= n)
            .prop_map(|sizes| Design::Blocks { sizes });
        prop_oneof![
            Just(Design::Full),
            Just(Design::Distinct),
            Just(Design::Linear),
            (1..n).prop_map(|r| Design::Diagonals { r }),
            (1..n).prop_map(|n1| Design::Cross { n1 }),
            blocks,
            (1..=max_m, any::<bool>(), any::<u64>()).prop_map(|(m, with_replacement, seed)| {
                Design::Random { m, with_replacement, seed }
            }),
        ]
        .prop_map(move |design| (n, design))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_respects_the_declared_shape((n, design) in design_strategy()) {
        design.validate(n).unwrap();
        let pairs = design.enumerate_pairs(n).unwrap();
        prop_assert_eq!(pairs.len(), design.cardinality(n).unwrap());
        for &(i, j) in &pairs {
            prop_assert!(i < n && j < n);
            if !matches!(design, Design::Full) {
                prop_assert_ne!(i, j);
            }
        }
        if let Design::Random { with_replacement: false, .. } = design {
            let unique: HashSet<(usize, usize)> = pairs.iter().cloned().collect();
            prop_assert_eq!(unique.len(), pairs.len());
        }
        if matches!(design, Design::Random { .. }) {
            let again = design.enumerate_pairs(n).unwrap();
            prop_assert_eq!(pairs, again);
        }
    }
}

#[test]
fn one_block_covering_everything_is_the_distinct_design() {
    for n in 2..10 {
        let blocks = Design::Blocks { sizes: vec![n] };
        assert_eq!(
            blocks.enumerate_pairs(n).unwrap(),
            Design::Distinct.enumerate_pairs(n).unwrap()
        );
    }
}

#[test]
fn cross_design_covers_the_between_group_product() {
    let n = 9;
    for n1 in 1..n {
        let pairs = Design::Cross { n1 }.enumerate_pairs(n).unwrap();
        let got: HashSet<(usize, usize)> = pairs.iter().cloned().collect();
        let mut want = HashSet::new();
        for i in 0..n1 {
            for j in n1..n {
                want.insert((i, j));
            }
        }
        assert_eq!(got, want);
        assert_eq!(pairs.len(), n1 * (n - n1));
    }
}

#[test]
fn linear_design_drops_the_odd_tail() {
    assert_eq!(
        Design::Linear.enumerate_pairs(7).unwrap(),
        vec![(0, 1), (2, 3), (4, 5)]
    );
    assert_eq!(Design::Linear.cardinality(7).unwrap(), 3);
}

#[test]
fn different_seeds_draw_different_pairs() {
    let a = Design::Random { m: 20, with_replacement: false, seed: 1 };
    let b = Design::Random { m: 20, with_replacement: false, seed: 2 };
    assert_ne!(a.enumerate_pairs(12).unwrap(), b.enumerate_pairs(12).unwrap());
}
