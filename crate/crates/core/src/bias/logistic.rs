use super::BiasError;

/// Ridge strength on the IRLS normal equations; keeps near-separated fits
/// finite and is noted in rendered reports.
pub const RIDGE: f64 = 1e-6;
const MAX_ITERATIONS: usize = 100;
const CONVERGENCE_TOL: f64 = 1e-10;
/// Coefficient magnitude beyond which the fit is flagged as suspected
/// separation.
const SEPARATION_BOUND: f64 = 30.0;

/// Wald-test result for the predictor of interest in
/// `logit P(y) = b0 + b1 x + b2 control`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticFit {
    pub intercept: f64,
    pub coefficient: f64,
    pub control_coefficient: f64,
    pub std_err: f64,
    pub z: f64,
    pub p_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub separation_suspected: bool,
}

/// Fit by iteratively reweighted least squares with a small ridge term and
/// return the Wald p-value for the `x` coefficient.
pub fn fit_logistic(y: &[bool], x: &[f64], control: &[f64]) -> Result<LogisticFit, BiasError> {
    let n = y.len();
    if n != x.len() || n != control.len() {
        return Err(BiasError::NotEnoughData(format!(
            "column lengths differ: y {} / x {} / control {}",
            n,
            x.len(),
            control.len()
        )));
    }
    if n < 10 {
        return Err(BiasError::NotEnoughData(format!(
            "logistic regression needs at least 10 rows, got {n}"
        )));
    }
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == n {
        return Err(BiasError::SingleClass);
    }

    let rows: Vec<[f64; 3]> = (0..n).map(|i| [1.0, x[i], control[i]]).collect();
    let mut beta = [0.0f64; 3];
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=MAX_ITERATIONS {
        iterations = iter;
        // info = X^T W X + ridge, score = X^T (y - p)
        let mut info = [[0.0f64; 3]; 3];
        let mut score = [0.0f64; 3];
        for (i, row) in rows.iter().enumerate() {
            let eta: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let p = sigmoid(eta);
            let w = (p * (1.0 - p)).max(1e-10);
            let resid = (y[i] as u8 as f64) - p;
            for a in 0..3 {
                score[a] += row[a] * resid;
                for b in 0..3 {
                    info[a][b] += row[a] * w * row[b];
                }
            }
        }
        for d in 0..3 {
            info[d][d] += RIDGE;
        }
        let delta = solve3(info, score).ok_or_else(|| {
            BiasError::NotEnoughData("singular information matrix".into())
        })?;
        for d in 0..3 {
            beta[d] += delta[d];
        }
        if delta.iter().map(|v| v.abs()).fold(0.0, f64::max) < CONVERGENCE_TOL {
            converged = true;
            break;
        }
    }

    // covariance = (X^T W X + ridge)^{-1} at the final beta
    let mut info = [[0.0f64; 3]; 3];
    for row in &rows {
        let eta: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
        let p = sigmoid(eta);
        let w = (p * (1.0 - p)).max(1e-10);
        for a in 0..3 {
            for b in 0..3 {
                info[a][b] += row[a] * w * row[b];
            }
        }
    }
    for d in 0..3 {
        info[d][d] += RIDGE;
    }
    let cov = invert3(info).ok_or_else(|| {
        BiasError::NotEnoughData("singular information matrix at optimum".into())
    })?;
    let std_err = cov[1][1].max(0.0).sqrt();
    let z = if std_err > 0.0 { beta[1] / std_err } else { 0.0 };
    // two-sided normal tail: 2 (1 - Phi(|z|)) = erfc(|z| / sqrt(2))
    let p_value = libm::erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0);

    let separation_suspected =
        !converged || beta.iter().any(|b| b.abs() > SEPARATION_BOUND);
    Ok(LogisticFit {
        intercept: beta[0],
        coefficient: beta[1],
        control_coefficient: beta[2],
        std_err,
        z,
        p_value,
        iterations,
        converged,
        separation_suspected,
    })
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let inv = invert3(a)?;
    let mut out = [0.0f64; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i] += inv[i][j] * b[j];
        }
    }
    Some(out)
}

fn invert3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv_det = 1.0 / det;
    let mut inv = [[0.0f64; 3]; 3];
    inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_det;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det;
    inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_det;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det;
    inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_det;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det;
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn balanced_null_gives_tiny_coefficient_and_large_p() {
        // mirror x and control across classes so the empirical association
        // is exactly zero
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let half = 5_000usize;
        let mut y = Vec::new();
        let mut x = Vec::new();
        let mut c = Vec::new();
        for _ in 0..half {
            let xv: f64 = rng.random_range(-2.0..2.0);
            let cv: f64 = rng.random_range(-2.0..2.0);
            for label in [true, false] {
                y.push(label);
                x.push(xv);
                c.push(cv);
            }
        }
        let fit = fit_logistic(&y, &x, &c).unwrap();
        assert!(fit.coefficient.abs() < 1e-6, "beta1 = {}", fit.coefficient);
        assert!(fit.p_value > 0.5, "p = {}", fit.p_value);
    }

    #[test]
    fn planted_coefficient_is_recovered() {
        // y ~ Bernoulli(sigmoid(0.3 + 2 x + 0.5 c)) at n = 10,000
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000usize;
        let mut y = Vec::new();
        let mut x = Vec::new();
        let mut c = Vec::new();
        for _ in 0..n {
            let xv: f64 = rng.random_range(-1.5..1.5);
            let cv: f64 = rng.random_range(-1.5..1.5);
            let p = sigmoid(0.3 + 2.0 * xv + 0.5 * cv);
            y.push(rng.random_bool(p));
            x.push(xv);
            c.push(cv);
        }
        let fit = fit_logistic(&y, &x, &c).unwrap();
        assert!(fit.coefficient > 0.0);
        assert!(
            (fit.coefficient - 2.0).abs() / 2.0 < 0.2,
            "beta1 = {}",
            fit.coefficient
        );
        assert!(fit.p_value < 1e-10);
    }

    #[test]
    fn control_fully_explaining_y_nulls_x() {
        // y determined by the control; x correlates with the control but
        // adds nothing
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 10_000usize;
        let mut y = Vec::new();
        let mut x = Vec::new();
        let mut c = Vec::new();
        for _ in 0..n {
            let cv: f64 = rng.random_range(-2.0..2.0);
            let p = sigmoid(3.0 * cv);
            let label = rng.random_bool(p);
            y.push(label);
            c.push(cv);
            x.push(cv + rng.random_range(-0.5..0.5));
        }
        let fit = fit_logistic(&y, &x, &c).unwrap();
        assert!(
            fit.coefficient.abs() < 0.15,
            "beta1 = {} should be near zero",
            fit.coefficient
        );
    }

    #[test]
    fn perfect_separation_is_flagged_not_fatal() {
        let n = 40;
        let y: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let x: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
        let c: Vec<f64> = (0..n).map(|i| (i as f64) / n as f64).collect();
        let fit = fit_logistic(&y, &x, &c).unwrap();
        assert!(fit.separation_suspected);
        assert!(fit.coefficient > 0.0);
    }

    #[test]
    fn single_class_or_tiny_samples_error() {
        let y = vec![true; 20];
        let x = vec![0.0; 20];
        let c = vec![0.0; 20];
        assert!(matches!(fit_logistic(&y, &x, &c), Err(BiasError::SingleClass)));

        let y: Vec<bool> = vec![true, false, true, false];
        let x = vec![0.0; 4];
        let c = vec![0.0; 4];
        assert!(matches!(
            fit_logistic(&y, &x, &c),
            Err(BiasError::NotEnoughData(_))
        ));
    }
}
