use super::tape::{Tape, Var};
use super::tensor::{Real, Tensor};
use super::NumericsError;

/// Central differences carry roundoff of roughly `eps / h`; coordinates
/// whose absolute discrepancy sits below this floor are measurement noise,
/// not gradient errors.
pub const FD_NOISE_FLOOR: f64 = 1e-9;

/// One coordinate of a finite-difference comparison.
#[derive(Clone, Debug)]
pub struct CoordCheck {
    pub param: usize,
    pub coord: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

/// Outcome of [`grad_check`]: per-coordinate relative errors against a
/// central-difference oracle, plus the worst case and a pass flag. A
/// coordinate passes when its relative error is under `tol` or its
/// absolute discrepancy is under [`FD_NOISE_FLOOR`].
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub coords: Vec<CoordCheck>,
    /// Largest relative error among coordinates above the noise floor.
    pub max_rel_err: f64,
    pub tol: f64,
    pub pass: bool,
}

pub(crate) fn rel_err(a: f64, n: f64) -> f64 {
    let denom = (a.abs() + n.abs()).max(1e-8);
    (a - n).abs() / denom
}

pub(crate) fn coord_passes(a: f64, n: f64, tol: f64) -> bool {
    (a - n).abs() <= FD_NOISE_FLOOR || rel_err(a, n) < tol
}

/// Compare analytic gradients of `build` against central finite differences
/// `(f(x+h) - f(x-h)) / 2h` at `point`, coordinate by coordinate.
///
/// `build` receives a fresh tape plus one registered leaf per point tensor
/// and must return the scalar loss node.
pub fn grad_check<T, F>(
    build: F,
    point: &[Tensor<T>],
    h: f64,
    tol: f64,
) -> Result<GradCheckReport, NumericsError>
where
    T: Real,
    F: Fn(&mut Tape<T>, &[Var]) -> Result<Var, NumericsError>,
{
    // Analytic pass.
    let mut tape = Tape::new();
    let vars: Vec<Var> = point
        .iter()
        .map(|t| tape.leaf(t.clone(), true))
        .collect();
    let loss = build(&mut tape, &vars)?;
    tape.backward(loss)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .map(|&v| {
            tape.grad(v)
                .expect("backward populates all leaves")
                .data()
                .iter()
                .map(|x| x.as_f64())
                .collect()
        })
        .collect();

    let eval = |perturbed: &[Tensor<T>]| -> Result<f64, NumericsError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = perturbed
            .iter()
            .map(|t| tape.leaf(t.clone(), false))
            .collect();
        let loss = build(&mut tape, &vars)?;
        Ok(tape.value(loss).item().as_f64())
    };

    let mut coords = Vec::new();
    let mut max_rel = 0.0f64;
    let mut all_pass = true;
    let mut work: Vec<Tensor<T>> = point.to_vec();
    for (pi, tensor) in point.iter().enumerate() {
        for ci in 0..tensor.numel() {
            let orig = tensor.data()[ci].as_f64();
            work[pi].data_mut()[ci] = T::from_f64(orig + h);
            let plus = eval(&work)?;
            work[pi].data_mut()[ci] = T::from_f64(orig - h);
            let minus = eval(&work)?;
            work[pi].data_mut()[ci] = T::from_f64(orig);

            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[pi][ci];
            let re = rel_err(a, numeric);
            if (a - numeric).abs() > FD_NOISE_FLOOR {
                max_rel = max_rel.max(re);
            }
            all_pass &= coord_passes(a, numeric, tol);
            coords.push(CoordCheck {
                param: pi,
                coord: ci,
                analytic: a,
                numeric,
                rel_err: re,
            });
        }
    }

    Ok(GradCheckReport {
        coords,
        max_rel_err: max_rel,
        tol,
        pass: all_pass,
    })
}
