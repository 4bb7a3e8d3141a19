//! The flattened-label codec: parse a bracketed compositional query,
//! flatten it into per-token targets, and reconstruct the tree.
//!
//!     cargo run --release --example codec_roundtrip

use lowres_nlu::harness::synth::{rng_from_seed, TreeGrammar};
use lowres_nlu::parse_repr::{
    decode_flat, encode_flat, parse_hierarchical, serialize, DEFAULT_MAX_FERTILITY,
};

fn main() {
    let tokens: Vec<String> = ["remind", "me", "to", "message", "Alex", "tomorrow"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let bracketed = "[IN:CREATE_REMINDER remind me to [SL:TODO [IN:SEND_MESSAGE \
                     [SL:METHOD_MESSAGE message ] [SL:RECIPIENT Alex ] ] ] \
                     [SL:DATE_TIME tomorrow ] ]";
    let tree = parse_hierarchical(bracketed, &tokens).expect("canonical parse");
    let flat = encode_flat(&tree, DEFAULT_MAX_FERTILITY).expect("within fertility budget");

    println!("utterance      : {}", tokens.join(" "));
    println!("coarse intent  : {}", flat.coarse_intent);
    println!("token          fine intent          slot stack");
    for (i, token) in tokens.iter().enumerate() {
        println!(
            "{:<14} {:<20} {:?}",
            token, flat.fine_intents[i], flat.slot_stacks[i]
        );
    }

    let back = decode_flat(&flat, &tokens).expect("lossless reconstruction");
    println!("\nreconstructed  : {}", serialize(&back));
    assert_eq!(back, tree);

    // Bulk check over random trees.
    let grammar = TreeGrammar::small();
    let mut rng = rng_from_seed(7);
    let n = 2000;
    for _ in 0..n {
        let tree = grammar.sample(&mut rng);
        let flat = encode_flat(&tree, DEFAULT_MAX_FERTILITY).expect("valid sample");
        assert_eq!(decode_flat(&flat, &tree.tokens).expect("decodes"), tree);
    }
    println!("\n{n} random trees round-tripped losslessly");
}
