use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Dense row-major 2-D tensor. Scalars are `1x1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "tensor data does not match {rows}x{cols}");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn scalar(value: f64) -> Self {
        Self::new(1, 1, vec![value])
    }

    pub fn row(data: Vec<f64>) -> Self {
        let n = data.len();
        Self::new(1, n, data)
    }

    pub fn column(data: Vec<f64>) -> Self {
        let n = data.len();
        Self::new(n, 1, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn is_scalar(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }

    /// The value of a `1x1` tensor.
    pub fn item(&self) -> f64 {
        assert!(self.is_scalar(), "item() on a {}x{} tensor", self.rows, self.cols);
        self.data[0]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor::new(self.rows, self.cols, self.data.iter().map(|&x| f(x)).collect())
    }

    pub fn reshaped(mut self, rows: usize, cols: usize) -> Tensor {
        assert_eq!(rows * cols, self.data.len(), "reshape changes element count");
        self.rows = rows;
        self.cols = cols;
        self
    }

    pub fn transposed(&self) -> Tensor {
        let mut out = vec![0.0; self.data.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        Tensor::new(self.cols, self.rows, out)
    }

    pub fn sum(&self) -> f64 {
        math::pairwise_sum(&self.data)
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|x| x * x).sum::<f64>())
    }

    pub(crate) fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// `a [m x k] * b [k x n]`, optionally transposing either operand.
    pub(crate) fn matmul(a: &Tensor, trans_a: bool, b: &Tensor, trans_b: bool) -> Tensor {
        let (m, k) = if trans_a { (a.cols, a.rows) } else { (a.rows, a.cols) };
        let (k2, n) = if trans_b { (b.cols, b.rows) } else { (b.rows, b.cols) };
        assert_eq!(k, k2, "matmul inner dimensions differ");
        let mut out = vec![0.0; m * n];
        if m == 0 || n == 0 {
            return Tensor::new(m, n, out);
        }
        let (rsa, csa) = if trans_a { (1, a.cols as isize) } else { (a.cols as isize, 1) };
        let (rsb, csb) = if trans_b { (1, b.cols as isize) } else { (b.cols as isize, 1) };
        // SAFETY: strides and extents describe the owned buffers exactly.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.data.as_ptr(),
                rsa,
                csa,
                b.data.as_ptr(),
                rsb,
                csb,
                0.0,
                out.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        Tensor::new(m, n, out)
    }
}

/// Result shape of broadcasting `a` against `b`, if compatible.
pub(crate) fn broadcast_shape(a: (usize, usize), b: (usize, usize)) -> Option<(usize, usize)> {
    fn dim(x: usize, y: usize) -> Option<usize> {
        if x == y {
            Some(x)
        } else if x == 1 {
            Some(y)
        } else if y == 1 {
            Some(x)
        } else {
            None
        }
    }
    Some((dim(a.0, b.0)?, dim(a.1, b.1)?))
}

/// Elementwise `f(a, b)` with broadcasting of unit dimensions.
pub(crate) fn zip_broadcast(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    if a.shape() == b.shape() {
        let data = a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect();
        return Tensor::new(a.rows, a.cols, data);
    }
    let (rows, cols) = broadcast_shape(a.shape(), b.shape())
        .unwrap_or_else(|| panic!("cannot broadcast {:?} with {:?}", a.shape(), b.shape()));
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let ra = if a.rows == 1 { 0 } else { r };
        let rb = if b.rows == 1 { 0 } else { r };
        for c in 0..cols {
            let ca = if a.cols == 1 { 0 } else { c };
            let cb = if b.cols == 1 { 0 } else { c };
            data.push(f(a.data[ra * a.cols + ca], b.data[rb * b.cols + cb]));
        }
    }
    Tensor::new(rows, cols, data)
}

/// Sum `g` down to `shape`, undoing a broadcast.
pub(crate) fn reduce_to(g: Tensor, shape: (usize, usize)) -> Tensor {
    if g.shape() == shape {
        return g;
    }
    let mut out = Tensor::zeros(shape.0, shape.1);
    for r in 0..g.rows {
        let ro = if shape.0 == 1 { 0 } else { r };
        for c in 0..g.cols {
            let co = if shape.1 == 1 { 0 } else { c };
            out.data[ro * shape.1 + co] += g.data[r * g.cols + c];
        }
    }
    out
}
