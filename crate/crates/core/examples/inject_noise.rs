//! Generate a synthetic corpus, relabel 10% of each class and write the
//! noisy corpus plus its ground-truth id list.
//!
//! Run with `cargo run --example inject_noise`.

use codeclean::corpus::synth::{generate, SynthConfig};
use codeclean::corpus::{inject_noise, parse_corpus, per_class_noise_count, Split};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        num_classes: 4,
        per_class: 25,
        seed: 3,
        ..Default::default()
    };
    let corpus = generate(&cfg, Split::Train)?;
    let (noisy, ids) = inject_noise(&corpus, 10.0, 7)?;

    for (c, name) in corpus.label_names().iter().enumerate() {
        let moved = ids.iter().filter(|id| corpus.get(id).unwrap().label == c).count();
        println!("{name:12} {moved} of {} relabeled", corpus.class_counts()[c]);
        assert_eq!(moved, per_class_noise_count(10.0, 25));
    }

    // The noisy corpus keeps the original label, so the ground truth can be
    // recovered from the file alone.
    let text = noisy.to_jsonl();
    let reloaded = parse_corpus(&text, 4, Split::Train)?;
    assert_eq!(reloaded.injected_noise_ids(), ids);
    println!("first noisy record: {}", text.lines().find(|l| l.contains("original_label")).unwrap());

    let dir = std::env::temp_dir().join("codeclean-inject-example");
    std::fs::create_dir_all(&dir)?;
    noisy.save(dir.join("noisy.jsonl"))?;
    std::fs::write(dir.join("noisy.noise.json"), serde_json::to_string(&ids)?)?;
    println!("wrote {}", dir.display());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
