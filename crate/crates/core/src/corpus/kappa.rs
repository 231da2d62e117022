use std::collections::HashMap;

use super::CorpusError;

/// Pairwise Cohen's kappa between two rater columns over the same items.
/// Returns 1.0 when both raters agree perfectly with degenerate marginals.
pub fn kappa_pair<L: Eq + std::hash::Hash>(a: &[L], b: &[L]) -> f64 {
    assert_eq!(a.len(), b.len(), "rater columns must align");
    let n = a.len() as f64;
    let observed = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;

    let mut freq_a: HashMap<&L, f64> = HashMap::new();
    let mut freq_b: HashMap<&L, f64> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *freq_a.entry(x).or_insert(0.0) += 1.0;
        *freq_b.entry(y).or_insert(0.0) += 1.0;
    }
    let mut expected = 0.0;
    for (label, ca) in &freq_a {
        if let Some(cb) = freq_b.get(label) {
            expected += (ca / n) * (cb / n);
        }
    }
    if (1.0 - expected).abs() < 1e-15 {
        return if (observed - 1.0).abs() < 1e-15 { 1.0 } else { 0.0 };
    }
    (observed - expected) / (1.0 - expected)
}

/// Agreement for one annotation question: items x raters categorical labels.
#[derive(Clone, Debug)]
pub struct KappaReport {
    /// Kappa per rater-position pair, keyed (i, j) with i < j.
    pub pairwise: Vec<((usize, usize), f64)>,
    /// Mean over rater pairs.
    pub average: f64,
}

/// Average pairwise Cohen's kappa across rater positions. Every item must
/// carry the same number (>= 2) of labels.
pub fn cohen_kappa<L: Eq + std::hash::Hash + Clone>(
    items: &[Vec<L>],
) -> Result<KappaReport, CorpusError> {
    let k = items.first().map(|i| i.len()).unwrap_or(0);
    if k < 2 {
        return Err(CorpusError::NotEnoughRaters { found: k });
    }
    if items.iter().any(|i| i.len() != k) {
        return Err(CorpusError::RaggedRatings);
    }

    let mut pairwise = Vec::new();
    let mut total = 0.0;
    for i in 0..k {
        for j in (i + 1)..k {
            let a: Vec<L> = items.iter().map(|item| item[i].clone()).collect();
            let b: Vec<L> = items.iter().map(|item| item[j].clone()).collect();
            let kappa = kappa_pair(&a, &b);
            total += kappa;
            pairwise.push(((i, j), kappa));
        }
    }
    let average = total / pairwise.len() as f64;
    Ok(KappaReport { pairwise, average })
}

/// Kappa per question plus the overall average, for multi-question
/// agreement tables.
pub fn average_kappa<L: Eq + std::hash::Hash + Clone>(
    questions: &[Vec<Vec<L>>],
) -> Result<(Vec<f64>, f64), CorpusError> {
    let mut per_question = Vec::new();
    for q in questions {
        per_question.push(cohen_kappa(q)?.average);
    }
    let avg = per_question.iter().sum::<f64>() / per_question.len().max(1) as f64;
    Ok((per_question, avg))
}
