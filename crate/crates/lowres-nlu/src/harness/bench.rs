use std::time::Instant;

use crate::x2parser::X2Parser;

use super::metrics::LatencyRow;

/// Measures single-utterance parse latency per flattened-output-length
/// bucket: 10 warmup parses, then the median of `repeats` timed parses.
/// Also reports the per-utterance encoder and slot-decoder pass counts,
/// which are 1 at every bucket (the non-autoregressive contract).
pub fn bench_latency(
    parser: &X2Parser,
    token_pool: &[String],
    buckets: &[usize],
    repeats: usize,
) -> Vec<LatencyRow> {
    assert!(!token_pool.is_empty(), "token pool must be nonempty");
    let mut rows = Vec::with_capacity(buckets.len());
    for &bucket in buckets {
        let tokens: Vec<String> =
            (0..bucket).map(|i| token_pool[i % token_pool.len()].clone()).collect();
        for _ in 0..10 {
            let _ = parser.parse_utterance(&tokens);
        }
        let mut timings = Vec::with_capacity(repeats);
        parser.reset_pass_counters();
        let outcome = parser.parse_utterance(&tokens).expect("bench parse");
        let (encoder_passes, slot_decoder_passes) = parser.pass_counters();
        for _ in 0..repeats.max(1) {
            let start = Instant::now();
            let _ = parser.parse_utterance(&tokens);
            timings.push(start.elapsed().as_secs_f64() * 1e6);
        }
        timings.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
        let median = timings[timings.len() / 2];
        rows.push(LatencyRow {
            bucket,
            tokens: bucket,
            flattened_len: outcome.fertility.total(),
            median_micros: median,
            encoder_passes,
            slot_decoder_passes,
        });
    }
    rows
}
