use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Matrix;

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Per-parameter Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Matrix,
    pub second_moment: Matrix,
    pub step: u64,
    pub params: AdamParams,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize, params: AdamParams) -> Self {
        AdamState {
            first_moment: Matrix::zeros(rows, cols),
            second_moment: Matrix::zeros(rows, cols),
            step: 0,
            params,
        }
    }
}

/// One bias-corrected Adam step on `param`, in place.
pub fn adam_step(param: &mut Matrix, grad: &Matrix, state: &mut AdamState) -> Result<()> {
    if param.shape() != grad.shape() || param.shape() != state.first_moment.shape() {
        return Err(Error::shape(format!(
            "adam: param {:?}, grad {:?}, moments {:?}",
            param.shape(),
            grad.shape(),
            state.first_moment.shape()
        )));
    }
    let AdamParams {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.params;
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);

    let m = state.first_moment.as_mut_slice();
    let v = state.second_moment.as_mut_slice();
    for (((p, &g), m), v) in param
        .as_mut_slice()
        .iter_mut()
        .zip(grad.as_slice())
        .zip(m.iter_mut())
        .zip(v.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_betas_are_defaults() {
        let p = AdamParams::default();
        assert_eq!((p.beta1, p.beta2, p.epsilon), (0.9, 0.999, 1e-8));
    }

    #[test]
    fn zero_gradient_leaves_params_bitwise_unchanged() {
        let mut p = Matrix::from_rows(&[vec![1.5, -0.25, 3e-7]]).unwrap();
        let before = p.clone();
        let mut st = AdamState::new(1, 3, AdamParams::default());
        for _ in 0..5 {
            adam_step(&mut p, &Matrix::zeros(1, 3), &mut st).unwrap();
        }
        assert_eq!(p.as_slice(), before.as_slice());
        assert_eq!(st.step, 5);
    }

    #[test]
    fn first_step_matches_scalar_oracle() {
        // m = 0.1, v = 0.001; bias-corrected both become 1, so the step is lr / (1 + eps).
        let oracle = 1.0 - 0.1 * 1.0 / (1.0 + 1e-8);
        let mut p = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let params = AdamParams {
            learning_rate: 0.1,
            ..AdamParams::default()
        };
        let mut st = AdamState::new(1, 1, params);
        adam_step(&mut p, &Matrix::from_rows(&[vec![1.0]]).unwrap(), &mut st).unwrap();
        assert!((p[(0, 0)] - oracle).abs() < 1e-15);
        assert!((p[(0, 0)] - 0.9).abs() < 1e-8);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = Matrix::zeros(2, 2);
        let mut st = AdamState::new(2, 2, AdamParams::default());
        assert!(adam_step(&mut p, &Matrix::zeros(1, 2), &mut st).is_err());
        assert_eq!(st.step, 0);
    }
}
