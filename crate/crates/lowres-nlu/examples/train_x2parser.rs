//! Train the fertility-based non-autoregressive parser on a synthetic
//! compositional grammar and inspect a prediction.
//!
//!     cargo run --release --example train_x2parser

use lowres_nlu::harness::synth::{rng_from_seed, TreeGrammar};
use lowres_nlu::parse_repr::serialize;
use lowres_nlu::x2parser::{X2Config, X2Parser};

fn main() {
    let mut grammar = TreeGrammar::learnable();
    grammar.max_depth = 3;
    let mut rng = rng_from_seed(11);
    let train: Vec<_> = (0..100).map(|_| grammar.sample(&mut rng)).collect();

    let cfg = X2Config {
        hidden: 48,
        encoder_layers: 2,
        encoder_heads: 4,
        learning_rate: 2e-3,
        batch_size: 25,
        seed: 1,
        ..X2Config::tiny()
    };
    let mut parser = X2Parser::new(cfg, &train).expect("nonempty training set");
    println!(
        "inventories: {} coarse intents, {} fine labels, {} slot labels",
        parser.coarse_intents.len(),
        parser.fine_labels.len(),
        parser.slot_labels.len()
    );

    let report = parser.train(&train, 150).expect("training");
    println!(
        "loss: {:.2} -> {:.3} over {} steps",
        report.steps[0],
        report.final_loss,
        report.steps.len()
    );
    let em = parser.exact_match(&train).expect("evaluable");
    println!("train exact match: {:.1}%", em * 100.0);

    let sample = &train[0];
    let outcome = parser.parse_utterance(&sample.tokens).expect("parses");
    println!("\nutterance : {}", sample.tokens.join(" "));
    println!("gold      : {}", serialize(sample));
    println!("predicted : {}", serialize(&outcome.tree));
    println!("fertility : {:?}", outcome.fertility.0);
    println!(
        "passes    : encoder {}, slot decoder {} (single-pass contract)",
        outcome.encoder_passes, outcome.slot_decoder_passes
    );
    if outcome.repairs.total() > 0 {
        println!("repairs   : {:?}", outcome.repairs);
    }
}
