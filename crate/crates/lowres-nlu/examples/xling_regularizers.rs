//! The regularized-alignment toolkit on a toy slot-filling task: latent
//! variable heads with Gaussian noise, label regularization with a
//! pretrained label encoder, and the adversarial latent regularizer with
//! its alpha schedule.
//!
//!     cargo run --release --example xling_regularizers

use lowres_nlu::harness::bio_f1;
use lowres_nlu::harness::synth::{rng_from_seed, TaggingGrammar};
use lowres_nlu::xling_reg::{XlingConfig, XlingModel, XlingSample};

fn dataset(n: usize, seed: u64) -> Vec<XlingSample> {
    let grammar = TaggingGrammar::small(3);
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|i| {
            let (tokens, labels) = grammar.sample(&mut rng);
            XlingSample { tokens, labels, intent: format!("INTENT_{}", i % 3) }
        })
        .collect()
}

fn main() {
    let train = dataset(40, 1);
    let test = dataset(40, 2);

    for (name, use_label_reg, use_alvm) in
        [("plain LVM", false, false), ("+ LR", true, false), ("+ LR & ALVM", true, true)]
    {
        let cfg = XlingConfig {
            use_label_reg,
            use_alvm,
            pretrain_epochs: if use_label_reg { 2 } else { 0 },
            epochs: 14,
            seed: 3,
            ..XlingConfig::default()
        };
        let mut model = XlingModel::new(cfg, &train).expect("model");
        let report = model.train(&train);
        let gold: Vec<Vec<String>> = test.iter().map(|s| s.labels.clone()).collect();
        let pred: Vec<Vec<String>> =
            test.iter().map(|s| model.predict(&s.tokens).0).collect();
        let f1 = bio_f1(&gold, &pred).expect("aligned").f1;
        let last = report.epochs.last().expect("trained");
        println!(
            "{name:<12} slot F1 {f1:5.1} | last epoch: slot {:.2} intent {:.2} lr {:.3} fc {:.3} lvm {:.3} (alpha {:.2})",
            last.slot, last.intent, last.label_reg, last.adversary, last.lvm, last.alpha
        );
        if use_label_reg {
            println!(
                "             label-encoder pretraining L_lr per epoch: {:?}",
                report
                    .pretrain_label_reg
                    .iter()
                    .map(|v| (v * 100.0).round() / 100.0)
                    .collect::<Vec<_>>()
            );
        }
        if use_alvm {
            let alphas: Vec<f64> = report.epochs.iter().map(|e| e.alpha).collect();
            println!("             alpha schedule: {alphas:?}");
        }
    }
}
