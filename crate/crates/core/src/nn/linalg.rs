use alloc::vec;
use alloc::vec::Vec;

use super::NnError;

/// Row-major `f32` matrix; one row per graph node or batch element.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self, NnError> {
        if data.len() != rows * cols {
            return Err(NnError::Dimension {
                what: "matrix data",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Stacks equal-length rows.
    pub fn from_rows<R: AsRef<[f32]>>(cols: usize, rows: &[R]) -> Result<Self, NnError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(NnError::Dimension {
                    what: "matrix row",
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f32] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    /// Concatenates columns: `[self | other]`.
    pub fn hcat(&self, other: &Matrix) -> Result<Matrix, NnError> {
        if self.rows != other.rows {
            return Err(NnError::Dimension {
                what: "hcat rows",
                expected: self.rows,
                got: other.rows,
            });
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Ok(Matrix {
            rows: self.rows,
            cols,
            data,
        })
    }
}

const LANES: usize = 8;

/// Dot product with a fixed summation order: eight strided partial sums,
/// combined pairwise, then the tail.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; LANES];
    let chunks = a.len() / LANES;
    for c in 0..chunks {
        let xa = &a[c * LANES..(c + 1) * LANES];
        let xb = &b[c * LANES..(c + 1) * LANES];
        for k in 0..LANES {
            acc[k] += xa[k] * xb[k];
        }
    }
    let mut s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for i in chunks * LANES..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Four dot products against one shared `w`, each summed exactly like
/// [`dot`].
#[inline]
pub(crate) fn dot4(w: &[f32], x: [&[f32]; 4]) -> [f32; 4] {
    let n = w.len();
    let chunks = n / LANES;
    let body = chunks * LANES;
    let (w_body, x0, x1, x2, x3) = (&w[..body], &x[0][..body], &x[1][..body], &x[2][..body], &x[3][..body]);
    let mut a0 = [0.0f32; LANES];
    let mut a1 = [0.0f32; LANES];
    let mut a2 = [0.0f32; LANES];
    let mut a3 = [0.0f32; LANES];
    for c in 0..chunks {
        let o = c * LANES;
        let wc: &[f32; LANES] = w_body[o..o + LANES].try_into().unwrap();
        let c0: &[f32; LANES] = x0[o..o + LANES].try_into().unwrap();
        let c1: &[f32; LANES] = x1[o..o + LANES].try_into().unwrap();
        let c2: &[f32; LANES] = x2[o..o + LANES].try_into().unwrap();
        let c3: &[f32; LANES] = x3[o..o + LANES].try_into().unwrap();
        for k in 0..LANES {
            a0[k] += wc[k] * c0[k];
            a1[k] += wc[k] * c1[k];
            a2[k] += wc[k] * c2[k];
            a3[k] += wc[k] * c3[k];
        }
    }
    let mut out = [0.0f32; 4];
    for (r, a) in [a0, a1, a2, a3].iter().enumerate() {
        let mut s = ((a[0] + a[1]) + (a[2] + a[3])) + ((a[4] + a[5]) + (a[6] + a[7]));
        for i in body..n {
            s += w[i] * x[r][i];
        }
        out[r] = s;
    }
    out
}

/// `x Wᵀ` for `W` stored row-major `[out_dim, x.cols()]`, without bias.
/// Entry `(r, o)` equals `dot(W[o], x[r])` bit for bit.
pub(crate) fn matmul_t(x: &Matrix, weight: &[f32], out_dim: usize) -> Matrix {
    let k = x.cols();
    let n = x.rows();
    let mut out = Matrix::zeros(n, out_dim);
    let quads = n / 4;
    for o in 0..out_dim {
        let wr = &weight[o * k..(o + 1) * k];
        for q in 0..quads {
            let r = 4 * q;
            let y = dot4(wr, [x.row(r), x.row(r + 1), x.row(r + 2), x.row(r + 3)]);
            for (i, v) in y.into_iter().enumerate() {
                out.data[(r + i) * out_dim + o] = v;
            }
        }
        for r in 4 * quads..n {
            out.data[r * out_dim + o] = dot(wr, x.row(r));
        }
    }
    out
}

/// Dense affine map `y = W x + b` with `W` stored row-major `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
}

impl Linear {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weight: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    pub fn weight_row(&self, o: usize) -> &[f32] {
        &self.weight[o * self.in_dim..(o + 1) * self.in_dim]
    }

    pub fn forward(&self, x: &[f32]) -> Result<Vec<f32>, NnError> {
        check_dim("linear input", self.in_dim, x.len())?;
        Ok((0..self.out_dim)
            .map(|o| dot(self.weight_row(o), x) + self.bias[o])
            .collect())
    }

    /// Row-wise forward over a batch.
    pub fn forward_rows(&self, x: &Matrix) -> Result<Matrix, NnError> {
        let mut out = Matrix::zeros(x.rows(), self.out_dim);
        self.accumulate_rows(x, &mut out, true)?;
        Ok(out)
    }

    /// `out += x Wᵀ (+ b)`.
    pub fn accumulate_rows(
        &self,
        x: &Matrix,
        out: &mut Matrix,
        with_bias: bool,
    ) -> Result<(), NnError> {
        check_dim("linear input", self.in_dim, x.cols())?;
        check_dim("linear output", self.out_dim, out.cols())?;
        check_dim("linear batch", x.rows(), out.rows())?;
        let y = matmul_t(x, &self.weight, self.out_dim);
        for r in 0..x.rows() {
            let (yr, orow) = (y.row(r), out.row_mut(r));
            for o in 0..self.out_dim {
                let mut v = yr[o];
                if with_bias {
                    v += self.bias[o];
                }
                orow[o] += v;
            }
        }
        Ok(())
    }
}

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<(), NnError> {
    if expected != got {
        return Err(NnError::Dimension {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive_sum() {
        let a: Vec<f32> = (0..37).map(|i| i as f32 * 0.25).collect();
        let b: Vec<f32> = (0..37).map(|i| 1.0 - i as f32 * 0.5).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| *x as f64 * *y as f64).sum();
        assert!((dot(&a, &b) as f64 - naive).abs() < 1e-3);
    }

    #[test]
    fn linear_batch_equals_single() {
        let mut lin = Linear::zeros(3, 20);
        for (i, w) in lin.weight.iter_mut().enumerate() {
            *w = (i as f32 * 0.37).sin();
        }
        lin.bias[5] = 2.0;
        let x = Matrix::from_rows(3, &[[1.0, 2.0, 3.0], [-1.0, 0.5, 0.0]]).unwrap();
        let batch = lin.forward_rows(&x).unwrap();
        for r in 0..2 {
            assert_eq!(batch.row(r), lin.forward(x.row(r)).unwrap().as_slice());
        }
    }

    #[test]
    fn blocked_matmul_matches_dot() {
        let x = Matrix::from_vec(7, 21, (0..147).map(|i| (i as f32 * 0.731).cos()).collect()).unwrap();
        let w: Vec<f32> = (0..5 * 21).map(|i| (i as f32 * 0.17).sin()).collect();
        let y = matmul_t(&x, &w, 5);
        for r in 0..7 {
            for o in 0..5 {
                assert_eq!(y.row(r)[o].to_bits(), dot(&w[o * 21..(o + 1) * 21], x.row(r)).to_bits());
            }
        }
    }

    #[test]
    fn shape_mismatch() {
        let lin = Linear::zeros(3, 2);
        assert!(matches!(
            lin.forward(&[1.0]),
            Err(NnError::Dimension { expected: 3, got: 1, .. })
        ));
    }
}
