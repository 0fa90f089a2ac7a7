use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Rng;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

/// Dense vector of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector {
    values: Vec<f64>,
}

/// Shape as printed in error messages, e.g. `3x4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape(pub usize, pub usize);

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.0, self.1)
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(format!("{what}[{i}]"))),
        None => Ok(()),
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major values, rejecting bad lengths and non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::shape(
                "Matrix::from_vec",
                Shape(rows, cols),
                format!("{} values", values.len()),
            ));
        }
        check_finite(&values, "matrix")?;
        Ok(Matrix { rows, cols, values })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::shape("Matrix::from_rows", cols, bad.len()));
        }
        let values = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Matrix::from_vec(rows.len(), cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> Shape {
        Shape(self.rows, self.cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.values[c * self.rows + r] = self.values[r * self.cols + c];
            }
        }
        t
    }

    /// `self += alpha * g xᵀ`, the accumulation step of every weight gradient.
    pub fn add_outer(&mut self, alpha: f64, g: &Vector, x: &Vector) -> Result<()> {
        if g.dim() != self.rows || x.dim() != self.cols {
            return Err(Error::shape(
                "add_outer",
                self.shape(),
                Shape(g.dim(), x.dim()),
            ));
        }
        for (r, &gr) in g.values.iter().enumerate() {
            let ag = alpha * gr;
            let row = &mut self.values[r * self.cols..(r + 1) * self.cols];
            for (w, &xc) in row.iter_mut().zip(&x.values) {
                *w += ag * xc;
            }
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape("Matrix::add_assign", self.shape(), other.shape()));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        Vector {
            values: vec![0.0; dim],
        }
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        check_finite(&values, "vector")?;
        Ok(Vector { values })
    }

    /// Builds a vector without the finiteness check. Used for intermediate
    /// values whose finiteness is checked by the caller.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Vector { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Element-wise combination of two equal-length vectors.
    pub fn zip_map(&self, other: &Vector, f: impl Fn(f64, f64) -> f64) -> Result<Vector> {
        if self.dim() != other.dim() {
            return Err(Error::shape("Vector::zip_map", self.dim(), other.dim()));
        }
        Ok(Vector {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn hadamard(&self, other: &Vector) -> Result<Vector> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn add_assign(&mut self, other: &Vector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::shape("Vector::add_assign", self.dim(), other.dim()));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &Vector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::shape("Vector::add_scaled", self.dim(), other.dim()));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Index of the largest entry; ties resolve to the lowest index.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.values.iter().enumerate() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| i)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.values
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Vector::from_vec(values)
    }
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl From<Matrix> for RawMatrix {
    fn from(m: Matrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            values: m.values,
        }
    }
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::from_vec(raw.rows, raw.cols, raw.values)
    }
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::shape("matmul", a.shape(), b.shape()));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.values[i * a.cols + k];
            let brow = b.row(k);
            let orow = &mut out.values[i * b.cols..(i + 1) * b.cols];
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// `A x`
pub fn matvec(a: &Matrix, x: &Vector) -> Result<Vector> {
    if a.cols != x.dim() {
        return Err(Error::shape("matvec", a.shape(), Shape(x.dim(), 1)));
    }
    let values = (0..a.rows)
        .map(|r| {
            let mut acc = 0.0;
            for (&w, &v) in a.row(r).iter().zip(&x.values) {
                acc += w * v;
            }
            acc
        })
        .collect();
    Ok(Vector { values })
}

/// `Aᵀ g` without materializing the transpose. Sums run in the same order as
/// `matvec(&a.transpose(), g)`, so the two agree bitwise.
pub fn matvec_t(a: &Matrix, g: &Vector) -> Result<Vector> {
    if a.rows != g.dim() {
        return Err(Error::shape("matvec_t", a.shape(), Shape(g.dim(), 1)));
    }
    let mut out = vec![0.0; a.cols];
    for (r, &gr) in g.values.iter().enumerate() {
        for (o, &w) in out.iter_mut().zip(a.row(r)) {
            *o += w * gr;
        }
    }
    Ok(Vector { values: out })
}

/// `g xᵀ`
pub fn outer(g: &Vector, x: &Vector) -> Matrix {
    let mut m = Matrix::zeros(g.dim(), x.dim());
    m.add_outer(1.0, g, x)
        .expect("outer product shape is derived from its operands");
    m
}

pub fn inner(a: &Vector, b: &Vector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::shape("inner", a.dim(), b.dim()));
    }
    let mut acc = 0.0;
    for (&x, &y) in a.values.iter().zip(&b.values) {
        acc += x * y;
    }
    Ok(acc)
}

/// `alpha x + y`
pub fn axpy(alpha: f64, x: &Vector, y: &Vector) -> Result<Vector> {
    x.zip_map(y, |a, b| alpha * a + b)
        .map_err(|_| Error::shape("axpy", x.dim(), y.dim()))
}

pub fn scale(alpha: f64, a: &Matrix) -> Matrix {
    Matrix {
        rows: a.rows,
        cols: a.cols,
        values: a.values.iter().map(|v| alpha * v).collect(),
    }
}

pub fn frobenius_norm(a: &Matrix) -> f64 {
    a.values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Matrix with entries drawn i.i.d. from `U[-half_width, half_width]`.
pub fn uniform_init(rows: usize, cols: usize, half_width: f64, rng: &mut Rng) -> Result<Matrix> {
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "uniform_init half_width must be positive, got {half_width}"
        )));
    }
    let values = (0..rows * cols)
        .map(|_| rng.uniform(-half_width, half_width))
        .collect();
    Ok(Matrix { rows, cols, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::tensor::Rng;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn v(values: &[f64]) -> Vector {
        Vector::from_vec(values.to_vec()).unwrap()
    }

    #[test]
    fn matmul_identity_and_hand_values() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(matmul(&Matrix::identity(2), &a).unwrap(), a);
        let ones = m(&[&[1.0], &[1.0]]);
        assert_eq!(matmul(&a, &ones).unwrap(), m(&[&[3.0], &[7.0]]));
        assert_eq!(matmul(&a, &Matrix::zeros(2, 3)).unwrap(), Matrix::zeros(2, 3));
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let err = matmul(&Matrix::zeros(2, 3), &Matrix::zeros(2, 3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3"), "{msg}");
        assert!(matches!(err, Error::Shape { .. }));
    }

    #[test]
    fn inner_and_outer_hand_values() {
        assert_eq!(inner(&v(&[1.0, -1.0]), &v(&[4.0, 6.0])).unwrap(), -2.0);
        assert_eq!(inner(&v(&[1.5, 2.0]), &Vector::zeros(2)).unwrap(), 0.0);
        assert_eq!(
            outer(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])),
            m(&[&[0.0, 1.0], &[0.0, 0.0]])
        );
        assert!(inner(&v(&[1.0]), &v(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn axpy_and_scale() {
        let y = axpy(2.0, &v(&[1.0, 2.0]), &v(&[0.5, 0.5])).unwrap();
        assert_eq!(y, v(&[2.5, 4.5]));
        assert_eq!(scale(-1.0, &m(&[&[1.0, 2.0]])), m(&[&[-1.0, -2.0]]));
        assert!(axpy(1.0, &v(&[1.0]), &v(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn frobenius_values() {
        assert_eq!(frobenius_norm(&Matrix::zeros(3, 2)), 0.0);
        assert_eq!(frobenius_norm(&Matrix::identity(4)), 2.0);
        assert_eq!(frobenius_norm(&m(&[&[3.0, 4.0]])), 5.0);
    }

    #[test]
    fn uniform_init_shape_range_determinism() {
        let a = uniform_init(2, 3, 0.1, &mut Rng::new(5)).unwrap();
        let b = uniform_init(2, 3, 0.1, &mut Rng::new(5)).unwrap();
        assert_eq!((a.rows(), a.cols()), (2, 3));
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let big = uniform_init(40, 40, 0.1, &mut Rng::new(9)).unwrap();
        assert!(big.values().iter().all(|x| (-0.1..=0.1).contains(x)));
        assert!(uniform_init(1, 1, 0.0, &mut Rng::new(1)).is_err());
        assert!(uniform_init(1, 1, -1.0, &mut Rng::new(1)).is_err());
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert!(Matrix::from_vec(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::from_vec(1, 1, vec![f64::NAN]).is_err());
        assert!(Vector::from_vec(vec![f64::INFINITY]).is_err());
        assert!(serde_json::from_str::<Matrix>(r#"{"rows":1,"cols":2,"values":[1.0]}"#).is_err());
    }

    fn matrix_strategy() -> impl Strategy<Value = Matrix> {
        (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
            prop::collection::vec(-10.0f64..10.0, r * c)
                .prop_map(move |vals| Matrix::from_vec(r, c, vals).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matvec_t_matches_explicit_transpose(a in matrix_strategy(), seed in any::<u64>()) {
            let mut rng = Rng::new(seed);
            let g = Vector::from_vec((0..a.rows()).map(|_| rng.uniform(-3.0, 3.0)).collect()).unwrap();
            let fast = matvec_t(&a, &g).unwrap();
            let slow = matvec(&a.transpose(), &g).unwrap();
            for (x, y) in fast.values().iter().zip(slow.values()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }

        #[test]
        fn inner_symmetric_and_positive(a in prop::collection::vec(-5.0f64..5.0, 0..8)) {
            let b: Vec<f64> = a.iter().rev().copied().collect();
            let (va, vb) = (v(&a), v(&b));
            prop_assert_eq!(inner(&va, &vb).unwrap(), inner(&vb, &va).unwrap());
            let aa = inner(&va, &va).unwrap();
            prop_assert!(aa >= 0.0);
            prop_assert_eq!(aa == 0.0, a.iter().all(|x| *x == 0.0));
        }

        #[test]
        fn frobenius_is_absolutely_homogeneous(a in matrix_strategy(), c in -20.0f64..20.0) {
            let lhs = frobenius_norm(&scale(c, &a));
            let rhs = c.abs() * frobenius_norm(&a);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn ops_are_deterministic(a in matrix_strategy()) {
            let x = Vector::from_vec(vec![0.25; a.cols()]).unwrap();
            let p = matvec(&a, &x).unwrap();
            let q = matvec(&a.clone(), &x.clone()).unwrap();
            prop_assert_eq!(p, q);
        }
    }
}
