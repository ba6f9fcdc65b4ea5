use alloc::vec;
use alloc::vec::Vec;

use super::linalg::{check_dim, matmul_t, Matrix};
use super::NnError;
use crate::math::{sigmoidf, tanhf};

/// GRU cell parameters. Gate blocks are stacked `[r; z; n]` along the rows
/// of `weight_ih` (`[3H, in]`), `weight_hh` (`[3H, H]`) and `bias` (`[3H]`).
///
/// ```text
/// r  = σ(W_r x + U_r h + b_r)
/// z  = σ(W_z x + U_z h + b_z)
/// n  = tanh(W_n x + r ⊙ (U_n h) + b_n)
/// h' = (1 − z) ⊙ n + z ⊙ h
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub weight_ih: Vec<f32>,
    pub weight_hh: Vec<f32>,
    pub bias: Vec<f32>,
}

impl GruParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            weight_ih: vec![0.0; 3 * hidden_dim * input_dim],
            weight_hh: vec![0.0; 3 * hidden_dim * hidden_dim],
            bias: vec![0.0; 3 * hidden_dim],
        }
    }

    fn check(&self) -> Result<(), NnError> {
        let (i, h) = (self.input_dim, self.hidden_dim);
        check_dim("gru weight_ih", 3 * h * i, self.weight_ih.len())?;
        check_dim("gru weight_hh", 3 * h * h, self.weight_hh.len())?;
        check_dim("gru bias", 3 * h, self.bias.len())
    }
}

/// One GRU step for a single state vector.
pub fn gru_cell(x: &[f32], h: &[f32], p: &GruParams) -> Result<Vec<f32>, NnError> {
    check_dim("gru input", p.input_dim, x.len())?;
    check_dim("gru state", p.hidden_dim, h.len())?;
    let xs = Matrix::from_vec(1, x.len(), x.to_vec())?;
    let hs = Matrix::from_vec(1, h.len(), h.to_vec())?;
    Ok(gru_rows(&xs, &hs, p)?.into_vec())
}

/// Row-wise GRU step over a batch; row `i` of the result depends only on
/// row `i` of the inputs.
pub fn gru_rows(xs: &Matrix, hs: &Matrix, p: &GruParams) -> Result<Matrix, NnError> {
    p.check()?;
    check_dim("gru input", p.input_dim, xs.cols())?;
    check_dim("gru state", p.hidden_dim, hs.cols())?;
    check_dim("gru batch", xs.rows(), hs.rows())?;
    let hd = p.hidden_dim;
    let gx = matmul_t(xs, &p.weight_ih, 3 * hd);
    let gh = matmul_t(hs, &p.weight_hh, 3 * hd);
    let mut out = Matrix::zeros(hs.rows(), hd);
    for r in 0..hs.rows() {
        let (gxr, ghr, hr) = (gx.row(r), gh.row(r), hs.row(r));
        let orow = out.row_mut(r);
        for j in 0..hd {
            let (jr, jz, jn) = (j, hd + j, 2 * hd + j);
            let rg = sigmoidf(gxr[jr] + ghr[jr] + p.bias[jr]);
            let zg = sigmoidf(gxr[jz] + ghr[jz] + p.bias[jz]);
            let n = tanhf(gxr[jn] + rg * ghr[jn] + p.bias[jn]);
            orow[j] = (1.0 - zg) * n + zg * hr[j];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_halve_state() {
        let p = GruParams::zeros(2, 3);
        let h = [0.4, -1.0, 2.0];
        assert_eq!(gru_cell(&[5.0, -5.0], &h, &p).unwrap(), [0.2, -0.5, 1.0]);
    }

    #[test]
    fn saturated_update_gate_carries_state() {
        let mut p = GruParams::zeros(1, 2);
        p.bias[2] = 100.0;
        p.bias[3] = 100.0;
        let h = [0.3, -0.7];
        assert_eq!(gru_cell(&[1.0], &h, &p).unwrap(), h);
    }

    #[test]
    fn batch_rows_match_single_cell() {
        let mut p = GruParams::zeros(3, 5);
        for (i, w) in p.weight_ih.iter_mut().enumerate() {
            *w = ((i * 7 % 13) as f32 - 6.0) * 0.05;
        }
        for (i, w) in p.weight_hh.iter_mut().enumerate() {
            *w = ((i * 5 % 11) as f32 - 5.0) * 0.04;
        }
        let xs = Matrix::from_rows(3, &[[0.1, 0.2, 0.3], [-1.0, 0.0, 2.0]]).unwrap();
        let hs = Matrix::from_rows(5, &[[0.0; 5], [0.5, -0.5, 0.25, 1.0, -1.0]]).unwrap();
        let out = gru_rows(&xs, &hs, &p).unwrap();
        for r in 0..2 {
            assert_eq!(out.row(r), gru_cell(xs.row(r), hs.row(r), &p).unwrap().as_slice());
        }
        assert!(gru_cell(&[0.0; 2], &[0.0; 5], &p).is_err());
    }
}
