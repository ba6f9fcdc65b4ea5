use alloc::vec::Vec;

use super::linalg::{Linear, Matrix};
use super::NnError;

/// Two-layer perceptron `y = W2 ReLU(W1 x + b1) + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layer1: Linear,
    pub layer2: Linear,
}

impl MlpParams {
    pub fn zeros(in_dim: usize, hidden: usize, out_dim: usize) -> Self {
        Self {
            layer1: Linear::zeros(in_dim, hidden),
            layer2: Linear::zeros(hidden, out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.layer1.in_dim
    }
}

pub fn mlp_forward(x: &[f32], p: &MlpParams) -> Result<Vec<f32>, NnError> {
    let mut h = p.layer1.forward(x)?;
    for v in &mut h {
        *v = v.max(0.0);
    }
    p.layer2.forward(&h)
}

/// Row-wise [`mlp_forward`].
pub fn mlp_rows(x: &Matrix, p: &MlpParams) -> Result<Matrix, NnError> {
    let mut h = p.layer1.forward_rows(x)?;
    for r in 0..h.rows() {
        for v in h.row_mut(r) {
            *v = v.max(0.0);
        }
    }
    p.layer2.forward_rows(&h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_output_bias() {
        let mut p = MlpParams::zeros(3, 4, 2);
        p.layer2.bias = alloc::vec![0.25, -1.5];
        assert_eq!(mlp_forward(&[1.0, -2.0, 3.0], &p).unwrap(), [0.25, -1.5]);
    }

    #[test]
    fn identity_construction_passes_non_negative_input() {
        let mut p = MlpParams::zeros(3, 3, 3);
        for i in 0..3 {
            p.layer1.weight[i * 3 + i] = 1.0;
            p.layer2.weight[i * 3 + i] = 1.0;
        }
        let x = [0.0, 2.5, 7.0];
        assert_eq!(mlp_forward(&x, &p).unwrap(), x);
        let rows = mlp_rows(&Matrix::from_rows(3, &[x, [1.0, 0.0, 4.0]]).unwrap(), &p).unwrap();
        assert_eq!(rows.row(1), &[1.0, 0.0, 4.0]);
        // negative inputs are clipped by the hidden ReLU
        assert_eq!(mlp_forward(&[-1.0, 1.0, 0.0], &p).unwrap(), [0.0, 1.0, 0.0]);
    }
}
