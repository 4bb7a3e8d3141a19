//! Coarse-to-fine cross-domain transfer: train on two source domains,
//! type an unseen slot purely from its description, then fine-tune on a
//! handful of target samples.
//!
//!     cargo run --release --example coach_transfer

use lowres_nlu::augment::bio_spans;
use lowres_nlu::coach::{CoachConfig, CoachModel, DescriptionMatrix, EntityEncoderKind, EntitySpan};
use lowres_nlu::harness::bio_f1;
use lowres_nlu::harness::synth::{rng_from_seed, CoachWorld};

fn main() {
    let mut world = CoachWorld::new(4);
    let unseen = world.add_mixed_type(0, 2);
    let mut rng = rng_from_seed(6);

    let mut source = Vec::new();
    for domain in [&[0usize, 1][..], &[2usize, 3][..]] {
        for _ in 0..60 {
            source.push(world.sample(domain, &mut rng));
        }
    }
    let target_types = vec![0, 2, unseen];
    let target_train: Vec<_> = (0..50).map(|_| world.sample(&target_types, &mut rng)).collect();
    let target_test: Vec<_> = (0..80).map(|_| world.sample(&target_types, &mut rng)).collect();

    let all: Vec<usize> = (0..world.slot_types.len()).collect();
    let all_desc = DescriptionMatrix::parse(&world.description_lines(&all)).expect("descs");
    let src_desc =
        DescriptionMatrix::parse(&world.description_lines(&[0, 1, 2, 3])).expect("descs");

    // The additive span encoder transfers most reliably to composed
    // unseen types at this scale.
    let cfg = CoachConfig {
        epochs: 10,
        seed: 5,
        entity_encoder: EntityEncoderKind::PlainSum,
        ..CoachConfig::default()
    };
    let mut model = CoachModel::new(cfg, &source, &all_desc, &src_desc).expect("model");
    let report = model.train(&source);
    println!(
        "source objective (template term is negative): {:.1} -> {:.1}",
        report.epoch_losses[0],
        report.epoch_losses.last().unwrap()
    );

    // Zero-shot: swap in the target inventory (including the unseen type)
    // and type gold spans of the unseen type.
    model.adapt_inventory(all_desc);
    let mut hits = 0;
    let mut total = 0;
    for (tokens, labels) in &target_test {
        for (s, e, ty) in bio_spans(labels) {
            if ty == world.slot_types[unseen] {
                total += 1;
                let typed = model.type_entities(tokens, &[EntitySpan { start: s, end: e }]);
                hits += usize::from(typed[0] == ty);
            }
        }
    }
    println!(
        "zero-shot typing of unseen type {}: {}/{} ({:.0}% vs {:.0}% random)",
        world.slot_types[unseen],
        hits,
        total,
        hits as f64 * 100.0 / total as f64,
        100.0 / world.slot_types.len() as f64
    );

    // Few-shot fine-tuning on the target domain.
    model.train_epochs(&target_train, 5);
    let gold: Vec<Vec<String>> = target_test.iter().map(|(_, l)| l.clone()).collect();
    let pred: Vec<Vec<String>> = target_test.iter().map(|(t, _)| model.predict(t)).collect();
    let score = bio_f1(&gold, &pred).expect("aligned");
    println!(
        "after 50-shot fine-tuning: typed span F1 {:.1} (P {:.1} / R {:.1})",
        score.f1, score.precision, score.recall
    );
}
