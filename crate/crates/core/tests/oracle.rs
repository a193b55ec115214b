mod common;

use motifcast::MotifVocabulary;
use proptest::prelude::*;

#[test]
fn vocabulary_matches_brute_force() {
    for size in 1..=3 {
        let vocab = MotifVocabulary::new(size).unwrap();
        let codes: Vec<_> = vocab.types().iter().map(|t| t.code().to_vec()).collect();
        assert_eq!(codes, common::brute_force_vocabulary(size));
    }
    let counts: Vec<_> = (1..=3)
        .map(|s| common::brute_force_types(s).len())
        .collect();
    assert_eq!(counts, vec![1, 6, 60]);
}

fn stream() -> impl Strategy<Value = Vec<(u32, u32, i64)>> {
    prop::collection::vec((0u32..6, 0u32..6, 0i64..4), 2..=30).prop_filter_map(
        "needs a positive time span",
        |raw| {
            let mut t = 0;
            let mut out = Vec::new();
            for (a, b, gap) in raw {
                if a != b {
                    out.push((a, b, t));
                    t += gap;
                }
            }
            (out.len() >= 2 && out.last().unwrap().2 > 0).then_some(out)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn library_matches_oracles(
        events in stream(),
        max_size in 2usize..=3,
        delta_c in 1i64..8,
        seed in 0u64..1000,
    ) {
        let errors = common::check_stream(&events, max_size, delta_c, 6, seed);
        prop_assert!(errors.is_empty(), "{:#?}", errors);
    }
}
