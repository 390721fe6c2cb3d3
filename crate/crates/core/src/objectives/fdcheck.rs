use crate::numerics::Matrix;

/// Outcome of a central finite-difference comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub max_rel_error: f64,
    /// Flat index of the worst coordinate.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub passed: bool,
}

const DENOM_FLOOR: f64 = 1e-8;

/// Compares the analytic gradient returned by `f` at `point` with central differences
/// `(f(x + h e_i) - f(x - h e_i)) / 2h` on every coordinate. The relative error uses
/// `max(|analytic|, |numeric|, 1e-8)` as denominator.
pub fn fd_check<F>(mut f: F, point: &Matrix, step: f64, tolerance: f64) -> FdReport
where
    F: FnMut(&Matrix) -> (f64, Matrix),
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let (_, analytic) = f(point);
    assert_eq!(analytic.shape(), point.shape(), "gradient shape differs from point");
    let mut x = point.clone();
    let mut report = FdReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        passed: true,
    };
    for i in 0..x.as_slice().len() {
        let orig = x.as_slice()[i];
        x.as_mut_slice()[i] = orig + step;
        let (up, _) = f(&x);
        x.as_mut_slice()[i] = orig - step;
        let (down, _) = f(&x);
        x.as_mut_slice()[i] = orig;
        let numeric = (up - down) / (2.0 * step);
        let a = analytic.as_slice()[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(DENOM_FLOOR);
        if rel > report.max_rel_error || i == 0 {
            report.max_rel_error = rel;
            report.worst_index = i;
            report.analytic = a;
            report.numeric = numeric;
        }
    }
    report.passed = report.max_rel_error <= tolerance;
    report
}
