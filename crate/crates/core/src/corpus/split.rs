use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::event::EventPhrase;
use super::records::AnnotationRecord;
use super::CorpusError;

#[derive(Clone, Debug, Default)]
pub struct Splits {
    pub train: Vec<AnnotationRecord>,
    pub dev: Vec<AnnotationRecord>,
    pub test: Vec<AnnotationRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            dev: 0.1,
        }
    }
}

/// Partition records into train/dev/test by unique event, so no event's
/// annotations leak across splits. Deterministic given the seed.
pub fn split_dataset(
    records: Vec<AnnotationRecord>,
    ratios: SplitRatios,
    seed: u64,
) -> Result<Splits, CorpusError> {
    // unique events in first-appearance order, then a seeded shuffle
    let mut events: Vec<EventPhrase> = Vec::new();
    let mut seen: HashMap<EventPhrase, usize> = HashMap::new();
    for rec in &records {
        if !seen.contains_key(&rec.event) {
            seen.insert(rec.event.clone(), events.len());
            events.push(rec.event.clone());
        }
    }
    if events.len() < 10 {
        return Err(CorpusError::TooFewEvents { found: events.len() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    events.shuffle(&mut rng);

    let n = events.len();
    let n_train = (n as f64 * ratios.train).round() as usize;
    let n_dev = (n as f64 * ratios.dev).round() as usize;
    let n_train = n_train.min(n - 2);
    let n_dev = n_dev.min(n - n_train - 1).max(1);

    let mut bucket: HashMap<&EventPhrase, usize> = HashMap::new();
    for (idx, event) in events.iter().enumerate() {
        let b = if idx < n_train {
            0
        } else if idx < n_train + n_dev {
            1
        } else {
            2
        };
        bucket.insert(event, b);
    }

    let mut splits = Splits::default();
    for rec in records {
        match bucket[&rec.event] {
            0 => splits.train.push(rec),
            1 => splits.dev.push(rec),
            _ => splits.test.push(rec),
        }
    }
    Ok(splits)
}
