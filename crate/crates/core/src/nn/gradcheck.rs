use super::{Example, Trainable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
    /// `(tensor, index)` of the worst parameter.
    pub worst: (usize, usize),
    pub checked: usize,
}

/// Compares analytic gradients with central finite differences of the loss,
/// parameter by parameter. The relative error denominator is floored at 1e-6
/// so parameters with vanishing gradients are judged on absolute error.
pub fn gradient_check<M: Trainable>(model: &mut M, ex: &Example, h: f64) -> GradCheckReport {
    let mut analytic = model.zero_grads();
    model.loss_and_grad(ex, &mut analytic);

    let mut report = GradCheckReport { max_relative_error: 0.0, max_absolute_error: 0.0, worst: (0, 0), checked: 0 };
    let shapes: alloc::vec::Vec<usize> = analytic.iter().map(|g| g.len()).collect();
    for (k, &len) in shapes.iter().enumerate() {
        for j in 0..len {
            let orig = model.params()[k][j];
            model.params_mut()[k][j] = orig + h;
            let plus = model.loss(ex);
            model.params_mut()[k][j] = orig - h;
            let minus = model.loss(ex);
            model.params_mut()[k][j] = orig;

            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[k][j];
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(1e-6);
            report.checked += 1;
            report.max_absolute_error = report.max_absolute_error.max(abs);
            if rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst = (k, j);
            }
        }
    }
    report
}
