//! Latency by output length for the non-autoregressive parser. The
//! decoder-invocation counters stay at one per utterance no matter how
//! long the flattened output grows.
//!
//!     cargo run --release --example latency_bench

use lowres_nlu::harness::bench_latency;
use lowres_nlu::harness::synth::{rng_from_seed, TreeGrammar};
use lowres_nlu::x2parser::{X2Config, X2Parser};

fn main() {
    let mut grammar = TreeGrammar::small();
    grammar.max_len = 8;
    let mut rng = rng_from_seed(2);
    let trees: Vec<_> = (0..10).map(|_| grammar.sample(&mut rng)).collect();
    let cfg = X2Config {
        hidden: 64,
        encoder_layers: 2,
        encoder_heads: 4,
        max_len: 64,
        ..X2Config::tiny()
    };
    let parser = X2Parser::new(cfg, &trees).expect("model");

    let rows = bench_latency(&parser, &grammar.vocab, &[5, 10, 20, 40], 31);
    println!("tokens  flattened  median (us)  encoder passes  slot passes");
    for row in &rows {
        println!(
            "{:<7} {:<10} {:<12.1} {:<15} {}",
            row.tokens, row.flattened_len, row.median_micros, row.encoder_passes,
            row.slot_decoder_passes
        );
    }
    let first = rows.first().expect("rows");
    let last = rows.last().expect("rows");
    println!(
        "\nlatency grows {:.1}x from length {} to {}, with a constant pass count",
        last.median_micros / first.median_micros,
        first.tokens,
        last.tokens
    );
}
