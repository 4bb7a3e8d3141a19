//! The augmentation toolbox: k-constrained shuffling with protected
//! entities, token- and span-level mask plans, and corpus
//! selection/integration.
//!
//!     cargo run --release --example augment_pipeline

use lowres_nlu::augment::{
    integrate_corpora, make_spans, select_corpus, shuffle_order, token_mask, CorpusLevel,
    CorpusSpec, MaskAction, MaskPlan, ShuffleBound, ShuffleSpec,
};

fn main() {
    // Shuffling: the entity span [3, 4] ("nine pm") moves as one unit.
    let tokens: Vec<String> =
        ["set", "an", "alarm", "nine", "pm", "please"].iter().map(|s| s.to_string()).collect();
    println!("original: {}", tokens.join(" "));
    for k in [ShuffleBound::Bounded(1), ShuffleBound::Bounded(2), ShuffleBound::Unbounded] {
        let spec = ShuffleSpec { bound: k, copies: 1, entity_spans: vec![(3, 4)], seed: 4 };
        let (shuffled, _) = shuffle_order(&tokens, &spec).expect("valid spans");
        println!("{k:?}: {}", shuffled.join(" "));
    }

    // Masking: random token plan, then isolated indices join runs.
    let sentence: Vec<&str> =
        "Western music's effect would continue to grow within the country's cultural sphere"
            .split(' ')
            .collect();
    let plan = MaskPlan {
        n: sentence.len(),
        masked: vec![4, 10],
        actions: vec![MaskAction::MaskToken; 2],
    };
    let moved = make_spans(&plan);
    let render = |plan: &MaskPlan| -> String {
        sentence
            .iter()
            .enumerate()
            .map(|(i, w)| if plan.masked.contains(&i) { "[MASK]" } else { *w })
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!("\ntoken-level : {}", render(&plan));
    println!("span-level  : {}", render(&moved));
    let random_plan = token_mask(20, 0.15, 7);
    println!(
        "random plan over 20 tokens: positions {:?}, actions {:?}",
        random_plan.masked, random_plan.actions
    );

    // Corpus selection and integration.
    let corpus: Vec<String> = [
        "the jazz band played a song",
        "weather stays dry today",
        "jazz festival hosted the jazz band",
        "a quiet afternoon",
        "festival tickets sold out",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let entities = vec!["jazz band".to_string(), "festival".to_string()];
    let entity_level = select_corpus(
        &corpus,
        &CorpusSpec {
            level: CorpusLevel::Entity,
            entities: entities.clone(),
            min_entities: 2,
            upsample_factor: 2,
        },
    )
    .expect("entity list provided");
    let task_level = select_corpus(
        &corpus,
        &CorpusSpec {
            level: CorpusLevel::Task,
            entities,
            min_entities: 1,
            upsample_factor: 2,
        },
    )
    .expect("entity list provided");
    println!("\nentity-level corpus ({}): {entity_level:?}", entity_level.len());
    println!("task-level corpus ({}): {task_level:?}", task_level.len());
    let integrated = integrate_corpora(&entity_level, &task_level, 2, 1);
    println!(
        "integrated pretraining corpus: {} sentences ({} + 2 x {})",
        integrated.len(),
        entity_level.len(),
        task_level.len()
    );
}
