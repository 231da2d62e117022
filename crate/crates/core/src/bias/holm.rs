/// Holm step-down correction at level `alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct HolmOutcome {
    /// Adjusted p-values, aligned with the input order.
    pub adjusted: Vec<f64>,
    /// Rejection flags, aligned with the input order.
    pub reject: Vec<bool>,
}

/// Sort ascending, multiply the i-th smallest by (m - i), enforce monotone
/// nondecreasing adjusted values, cap at 1; rejection walks the sorted
/// list and stops at the first failure.
pub fn holm_correct(pvalues: &[f64], alpha: f64) -> HolmOutcome {
    let m = pvalues.len();
    if m == 0 {
        return HolmOutcome {
            adjusted: Vec::new(),
            reject: Vec::new(),
        };
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]).then(a.cmp(&b)));

    let mut adjusted = vec![0.0f64; m];
    let mut reject = vec![false; m];
    let mut running_max = 0.0f64;
    let mut still_rejecting = true;
    for (i, &idx) in order.iter().enumerate() {
        let scaled = (pvalues[idx] * (m - i) as f64).min(1.0);
        running_max = running_max.max(scaled);
        adjusted[idx] = running_max;
        if still_rejecting && running_max <= alpha {
            reject[idx] = true;
        } else {
            still_rejecting = false;
        }
    }
    HolmOutcome { adjusted, reject }
}
