use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Collocation grid size for degree `L`: the next power of two at or above
/// `4L + 4`, enough to resolve a product of two degree-`L` functions.
pub fn grid_size(degree: usize) -> usize {
    (4 * degree + 4).next_power_of_two()
}

/// Values of `sum c_l e^{2 pi i l (x_j + i y)}` at `x_j = j / n`.
pub(crate) fn synthesize(coeffs: &[Complex64], degree: usize, n: usize, y: f64) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (i, c) in coeffs.iter().enumerate() {
        let l = i as i64 - degree as i64;
        let damp = if y == 0.0 { 1.0 } else { (-2.0 * PI * l as f64 * y).exp() };
        buf[l.rem_euclid(n as i64) as usize] += c * damp;
    }
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut buf));
    buf
}

/// Discrete Fourier coefficients of real samples, index `l mod n`.
pub(crate) fn analyze(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
    let inv = 1.0 / n as f64;
    for c in &mut buf {
        *c *= inv;
    }
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        assert_eq!(grid_size(32), 256);
        assert_eq!(grid_size(31), 128);
        assert_eq!(grid_size(0), 4);
    }

    #[test]
    fn synth_then_analyze() {
        let coeffs = vec![
            Complex64::new(0.1, -0.2),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.1, 0.2),
        ];
        let v: Vec<f64> = synthesize(&coeffs, 1, 8, 0.0).iter().map(|z| z.re).collect();
        let spec = analyze(&v);
        assert!((spec[1] - coeffs[2]).norm() < 1e-15);
        assert!((spec[7] - coeffs[0]).norm() < 1e-15);
    }
}
