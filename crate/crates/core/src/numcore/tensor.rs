use super::{Real, TensorError};

/// Dense row-major array.
///
/// Rank-1 tensors are viewed as a single row when an operation needs a
/// matrix; higher ranks collapse their leading dimensions into rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    values: Vec<T>,
    requires_grad: bool,
}

impl<T: Real> Tensor<T> {
    pub fn new(shape: Vec<usize>, values: Vec<T>) -> Result<Self, TensorError> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(TensorError::InvalidShape { shape });
        }
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(TensorError::DataLength { expected, got: values.len() });
        }
        Ok(Self { shape, values, requires_grad: false })
    }

    pub fn matrix(rows: usize, cols: usize, values: Vec<T>) -> Result<Self, TensorError> {
        Self::new(vec![rows, cols], values)
    }

    /// Builds a matrix from `f64` values, converting to the element type.
    pub fn from_f64(shape: Vec<usize>, values: &[f64]) -> Result<Self, TensorError> {
        Self::new(shape, values.iter().map(|&v| T::from_f64(v)).collect())
    }

    /// Shape `[1]`.
    pub fn scalar(value: T) -> Self {
        Self { shape: vec![1], values: vec![value], requires_grad: false }
    }

    /// Shape `[1, n]`. Panics on an empty slice.
    pub fn row(values: Vec<T>) -> Self {
        assert!(!values.is_empty(), "row vector must be non-empty");
        Self { shape: vec![1, values.len()], values, requires_grad: false }
    }

    /// Shape `[n, 1]`. Panics on an empty slice.
    pub fn column(values: Vec<T>) -> Self {
        assert!(!values.is_empty(), "column vector must be non-empty");
        Self { shape: vec![values.len(), 1], values, requires_grad: false }
    }

    /// Panics if any dimension is zero.
    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, T::zero())
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        assert!(!shape.is_empty() && !shape.contains(&0), "invalid shape {shape:?}");
        let n = shape.iter().product();
        Self { shape: shape.to_vec(), values: vec![value; n], requires_grad: false }
    }

    pub fn with_grad(mut self, requires_grad: bool) -> Self {
        self.requires_grad = requires_grad;
        self
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(rows, cols)` of the matrix view.
    pub fn dims2(&self) -> (usize, usize) {
        match self.shape.as_slice() {
            [n] => (1, *n),
            [r, c] => (*r, *c),
            dims => {
                let cols = *dims.last().expect("non-empty shape");
                (self.values.len() / cols, cols)
            }
        }
    }

    pub fn rows(&self) -> usize {
        self.dims2().0
    }

    pub fn cols(&self) -> usize {
        self.dims2().1
    }

    /// Element at `(row, col)` of the matrix view.
    pub fn get(&self, row: usize, col: usize) -> T {
        let (_, cols) = self.dims2();
        self.values[row * cols + col]
    }

    /// The single element of a one-element tensor.
    pub fn item(&self) -> Result<T, TensorError> {
        if self.values.len() == 1 {
            Ok(self.values[0])
        } else {
            Err(TensorError::NotScalar { shape: self.shape.clone() })
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            requires_grad: false,
        }
    }

    /// Same values under a new shape with equal element count.
    pub fn reshape(self, shape: Vec<usize>) -> Result<Self, TensorError> {
        let requires_grad = self.requires_grad;
        Ok(Self::new(shape, self.values)?.with_grad(requires_grad))
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            values: self.values.iter().map(|v| U::from_f64(v.as_f64())).collect(),
            requires_grad: self.requires_grad,
        }
    }

    pub fn transpose(&self) -> Self {
        let (r, c) = self.dims2();
        let mut out = Vec::with_capacity(self.values.len());
        for j in 0..c {
            for i in 0..r {
                out.push(self.values[i * c + j]);
            }
        }
        Self { shape: vec![c, r], values: out, requires_grad: false }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_finite(self, op: &'static str) -> Result<Self, TensorError> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(TensorError::NonFinite { op })
        }
    }

    pub fn sum(&self) -> T {
        self.values.iter().copied().sum()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.shape == other.shape
    }

    pub(crate) fn from_parts(shape: Vec<usize>, values: Vec<T>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        Self { shape, values, requires_grad: false }
    }
}
