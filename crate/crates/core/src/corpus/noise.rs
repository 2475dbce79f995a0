use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Corpus;
use crate::error::{Error, Result};

/// `ceil(p/100 · n)`, with a small guard so that exact products such as
/// 10% of 30 do not round up through floating-point error.
pub fn per_class_noise_count(p: f64, n: usize) -> usize {
    let x = p * n as f64 / 100.0;
    ((x - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Relabels `ceil(p/100 · n_c)` uniformly chosen samples of every class `c`
/// to a label drawn uniformly from the other classes.
///
/// Returns the noisy corpus and the relabeled ids in corpus order. Each
/// relabeled sample keeps its previous label in `original_label`.
pub fn inject_noise(corpus: &Corpus, p: f64, seed: u64) -> Result<(Corpus, Vec<String>)> {
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("noise percentage {p} outside [0, 100]")));
    }
    let num_classes = corpus.num_classes();
    if num_classes < 2 && p > 0.0 {
        return Err(Error::InvalidArgument(
            "cannot relabel samples of a single-class corpus".into(),
        ));
    }
    if let Some(s) = corpus.samples().iter().find(|s| s.original_label.is_some()) {
        return Err(Error::InvalidArgument(format!(
            "sample `{}` already carries injected noise",
            s.id
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, s) in corpus.samples().iter().enumerate() {
        members[s.label].push(i);
    }

    let mut noisy = corpus.clone();
    let mut selected = Vec::new();
    for (class, idx) in members.iter().enumerate() {
        let count = per_class_noise_count(p, idx.len());
        let mut picks: Vec<usize> = index::sample(&mut rng, idx.len(), count)
            .into_iter()
            .map(|j| idx[j])
            .collect();
        picks.sort_unstable();
        for i in picks {
            let r = rng.gen_range(0..num_classes - 1);
            let new_label = if r < class { r } else { r + 1 };
            let s = &mut noisy.samples_mut()[i];
            s.original_label = Some(class);
            s.label = new_label;
            selected.push(i);
        }
    }
    selected.sort_unstable();
    let ids = selected
        .into_iter()
        .map(|i| noisy.samples()[i].id.clone())
        .collect();
    Ok((noisy, ids))
}
