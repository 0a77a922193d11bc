use rand::seq::index;
use rand::Rng;

use crate::error::Result;

use super::{Batch, Param, Scalar};

/// A model with a scalar loss whose parameter gradients can be computed.
pub trait Differentiable<T: Scalar> {
    /// Loss without touching gradients.
    fn loss(&mut self, input: &Batch<T>, target: &Batch<T>) -> Result<T>;
    /// Loss, writing the gradient of every parameter into its `grad`.
    fn loss_and_grad(&mut self, input: &Batch<T>, target: &Batch<T>) -> Result<T>;
    fn params_mut(&mut self) -> Vec<&mut Param<T>>;
    /// Which side of every non-differentiable point the last `loss` call
    /// landed on. Empty if the model is smooth.
    fn kink_pattern(&self) -> Vec<bool> {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// (parameter array, element) with the largest error.
    pub worst: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
    /// Parameters whose difference quotient was retaken with a smaller step
    /// because the first one crossed a kink.
    pub kink_retries: usize,
}

/// `|a - f| / max(|a|, |f|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares analytic gradients against central differences with step `eps` on
/// a random `fraction` of all parameters (at least one). The model must be
/// deterministic, e.g. batch norm in inference mode.
///
/// If either perturbation moves the model across a kink (see
/// [`Differentiable::kink_pattern`]) the step is divided by ten, up to three
/// times, and the last quotient is used.
pub fn grad_check<T, M, R>(
    model: &mut M,
    input: &Batch<T>,
    target: &Batch<T>,
    eps: f64,
    fraction: f64,
    rng: &mut R,
) -> Result<GradCheckReport>
where
    T: Scalar,
    M: Differentiable<T>,
    R: Rng + ?Sized,
{
    model.loss_and_grad(input, target)?;
    let grads: Vec<Vec<T>> = model.params_mut().iter().map(|p| p.grad.clone()).collect();
    let offsets: Vec<usize> = grads
        .iter()
        .scan(0, |acc, g| {
            let start = *acc;
            *acc += g.len();
            Some(start)
        })
        .collect();
    let total: usize = grads.iter().map(Vec::len).sum();
    let count = ((total as f64 * fraction).ceil() as usize).clamp(1, total.max(1));
    let mut picks = index::sample(rng, total, count).into_vec();
    picks.sort_unstable();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: (0, 0),
        analytic: 0.0,
        numeric: 0.0,
        checked: picks.len(),
        kink_retries: 0,
    };
    model.loss(input, target)?;
    let base = model.kink_pattern();
    for flat in picks {
        let array = offsets.partition_point(|&o| o <= flat) - 1;
        let elem = flat - offsets[array];
        let original = model.params_mut()[array].value[elem];
        let mut h = eps;
        let mut numeric = 0.0;
        for attempt in 0..4 {
            let step = T::lit(h);
            model.params_mut()[array].value[elem] = original + step;
            let plus = model.loss(input, target)?;
            let smooth = model.kink_pattern() == base;
            model.params_mut()[array].value[elem] = original - step;
            let minus = model.loss(input, target)?;
            let smooth = smooth && model.kink_pattern() == base;
            model.params_mut()[array].value[elem] = original;
            numeric = (plus - minus).as_f64() / (2.0 * h);
            if smooth || attempt == 3 {
                break;
            }
            if attempt == 0 {
                report.kink_retries += 1;
            }
            h /= 10.0;
        }
        let analytic = grads[array][elem].as_f64();
        let err = relative_error(analytic, numeric);
        if err > report.max_rel_error || err.is_nan() {
            report.max_rel_error = err;
            report.worst = (array, elem);
            report.analytic = analytic;
            report.numeric = numeric;
        }
    }
    Ok(report)
}
