//! Orthogonality-constrained embedding refinement: recover a planted
//! rotation from full supervision, then refine a noisy space with only
//! the 11-keyword seed dictionary.
//!
//!     cargo run --release --example embedding_refinement

use ndarray::Array2;
use rand::Rng;

use lowres_nlu::embed_align::{
    orthogonality_defect, preprocess, random_orthogonal, refine, solve_mapping, AlignmentProblem,
    EmbeddingTable, DEFAULT_SEED_PAIRS,
};
use lowres_nlu::harness::synth::rng_from_seed;

fn main() {
    let mut rng = rng_from_seed(9);

    // Planted rotation with a full dictionary.
    let words: Vec<String> = (0..300).map(|i| format!("w{i}")).collect();
    let vectors = Array2::from_shape_fn((300, 40), |_| rng.gen_range(-1.0..1.0));
    let source = preprocess(&EmbeddingTable::new(words.clone(), vectors)).expect("no zero rows");
    let rotation = random_orthogonal(40, &mut rng);
    let problem = AlignmentProblem {
        source: source.vectors.clone(),
        target: source.vectors.dot(&rotation),
        pairs: (0..300).map(|i| (i, i)).collect(),
    };
    let w = solve_mapping(&problem).expect("solvable");
    let frobenius = (&w - &rotation).iter().map(|v| v * v).sum::<f64>().sqrt();
    println!("planted rotation: Frobenius error {frobenius:.2e}, orthogonality defect {:.2e}", orthogonality_defect(&w));

    // Seed-dictionary refinement between two related spaces. The source
    // vocabulary holds the English keywords, the target their Spanish
    // translations, embedded as noisy rotations of the source rows.
    let mut src_words: Vec<String> = DEFAULT_SEED_PAIRS.iter().map(|(s, _)| s.to_string()).collect();
    let mut tgt_words: Vec<String> = DEFAULT_SEED_PAIRS.iter().map(|(_, t)| t.to_string()).collect();
    for i in 0..100 {
        src_words.push(format!("filler{i}"));
        tgt_words.push(format!("relleno{i}"));
    }
    let base = Array2::from_shape_fn((src_words.len(), 24), |_| rng.gen_range(-1.0..1.0));
    let hidden_rotation = random_orthogonal(24, &mut rng);
    let noise = Array2::from_shape_fn(base.dim(), |_| rng.gen_range(-0.05..0.05));
    let source = EmbeddingTable::new(src_words, base.clone());
    let target = EmbeddingTable::new(tgt_words, base.dot(&hidden_rotation) + noise);

    let dict: Vec<(String, String)> =
        DEFAULT_SEED_PAIRS.iter().map(|(s, t)| (s.to_string(), t.to_string())).collect();
    let (_, history) = refine(&source, &target, &dict, 0.25, 10).expect("refinable");
    println!("\nseed-dictionary refinement over {} keyword pairs:", dict.len());
    for (i, (obj, dist)) in
        history.objectives.iter().zip(&history.seed_distances).enumerate()
    {
        println!("  iteration {}: trace objective {obj:.3}, mean seed cosine distance {dist:.4}", i + 1);
    }
    println!("converged: {}", history.converged);
}
