//! Property tests over the seeded generators: the codec round-trip, the
//! shuffler's permutation invariants, and mask-count preservation.

use proptest::prelude::*;

use lowres_nlu::augment::{
    make_spans, shuffle_order, token_mask, ShuffleBound, ShuffleSpec,
};
use lowres_nlu::harness::synth::{rng_from_seed, TreeGrammar};
use lowres_nlu::parse_repr::{
    decode_flat, encode_flat, parse_hierarchical, serialize, validate_flat, validate_tree,
    DEFAULT_MAX_FERTILITY,
};

proptest! {
    /// decode(encode(t)) == t, encodings validate cleanly, and the
    /// bracketed serialization reparses to the same tree.
    #[test]
    fn codec_round_trip_and_reparse(seed in any::<u64>(), deep in any::<bool>()) {
        let mut grammar = TreeGrammar::small();
        if deep {
            grammar.max_depth = 6;
            grammar.min_len = 4;
        }
        let mut rng = rng_from_seed(seed);
        let tree = grammar.sample(&mut rng);
        prop_assert!(validate_tree(&tree, DEFAULT_MAX_FERTILITY).is_empty());

        let flat = encode_flat(&tree, DEFAULT_MAX_FERTILITY).expect("valid tree encodes");
        prop_assert!(validate_flat(&flat).is_empty(), "encode output must validate");
        prop_assert_eq!(
            flat.fine_intents.len(),
            tree.tokens.len()
        );
        let back = decode_flat(&flat, &tree.tokens).expect("well-formed labels decode");
        prop_assert_eq!(&back, &tree);

        let text = serialize(&tree);
        let reparsed = parse_hierarchical(&text, &tree.tokens).expect("canonical form reparses");
        prop_assert_eq!(&reparsed, &tree);
        prop_assert_eq!(serialize(&reparsed), text);
    }

    /// Fertility consistency: each token's stack depth equals the number
    /// of slot nodes covering it.
    #[test]
    fn fertility_counts_covering_slots(seed in any::<u64>()) {
        let mut grammar = TreeGrammar::small();
        grammar.max_depth = 6;
        let mut rng = rng_from_seed(seed);
        let tree = grammar.sample(&mut rng);
        let flat = encode_flat(&tree, DEFAULT_MAX_FERTILITY).expect("valid tree encodes");
        for (i, stack) in flat.slot_stacks.iter().enumerate() {
            let covering = tree
                .nodes()
                .iter()
                .filter(|n| {
                    n.kind == lowres_nlu::parse_repr::NodeKind::Slot
                        && n.span.contains_token(i + 1)
                })
                .count();
            prop_assert_eq!(stack.len(), covering, "token {}", i + 1);
        }
    }

    /// Shuffling always emits a multiset-preserving permutation within the
    /// displacement bound, keeping entity spans contiguous.
    #[test]
    fn shuffle_is_a_bounded_permutation(
        n in 1usize..12,
        k in 0usize..4,
        seed in any::<u64>(),
        unbounded in any::<bool>(),
    ) {
        let tokens: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
        let bound = if unbounded { ShuffleBound::Unbounded } else { ShuffleBound::Bounded(k) };
        let spans = if n >= 4 { vec![(1usize, 2usize)] } else { vec![] };
        let spec = ShuffleSpec { bound, copies: 1, entity_spans: spans.clone(), seed };
        let (out, source) = shuffle_order(&tokens, &spec).expect("valid spec");
        // Permutation over token indices.
        let mut sorted = source.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(out.len(), n);
        // Entity tokens stay contiguous and ordered.
        if !spans.is_empty() {
            let at = source.iter().position(|&t| t == 1).expect("span present");
            prop_assert_eq!(&source[at..at + 2], &[1, 2]);
        }
        // Unit-level displacement bound for the no-entity case.
        if spans.is_empty() {
            if let ShuffleBound::Bounded(k) = bound {
                for (i, &p) in source.iter().enumerate() {
                    prop_assert!(p.abs_diff(i) <= k, "|{p} - {i}| > {k}");
                }
            }
        }
    }

    /// Span-moving preserves the masked count and keeps positions sorted,
    /// unique, and in range.
    #[test]
    fn span_mask_preserves_counts(n in 1usize..80, seed in any::<u64>(), rate in 0.0f64..0.5) {
        let plan = token_mask(n, rate, seed);
        let moved = make_spans(&plan);
        prop_assert_eq!(moved.masked_count(), plan.masked_count());
        prop_assert!(moved.masked.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(moved.masked.iter().all(|&p| p < n));
        if !plan.masked.is_empty() {
            prop_assert!(!moved.runs().is_empty());
        }
    }

    /// Augmenters are deterministic functions of (input, seed).
    #[test]
    fn augmenters_are_deterministic(seed in any::<u64>()) {
        let tokens: Vec<String> = (0..9).map(|i| format!("t{i}")).collect();
        let spec = ShuffleSpec {
            bound: ShuffleBound::Bounded(2),
            copies: 1,
            entity_spans: vec![(3, 4)],
            seed,
        };
        prop_assert_eq!(shuffle_order(&tokens, &spec).unwrap(), shuffle_order(&tokens, &spec).unwrap());
        prop_assert_eq!(token_mask(20, 0.15, seed), token_mask(20, 0.15, seed));
    }
}
