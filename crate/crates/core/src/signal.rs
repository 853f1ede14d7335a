use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layout of a [`Signal`]: a 1D signal or a row-major image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Line(usize),
    Grid { rows: usize, cols: usize },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Line(n) => n,
            Shape::Grid { rows, cols } => rows * cols,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A finite real vector of pixel intensities with an attached layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    values: Vec<f64>,
    shape: Shape,
}

impl Signal {
    pub fn new(values: Vec<f64>, shape: Shape) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("a signal needs at least one entry"));
        }
        if shape.len() != values.len() {
            return Err(Error::Dimension {
                expected: shape.len(),
                found: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("entry {k} is not finite")));
        }
        Ok(Signal { values, shape })
    }

    /// A 1D signal.
    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Signal::new(values, Shape::Line(n))
    }

    /// A row-major image.
    pub fn image(values: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        Signal::new(values, Shape::Grid { rows, cols })
    }

    pub fn constant(value: f64, shape: Shape) -> Result<Self> {
        Signal::new(vec![value; shape.len()], shape)
    }

    pub fn zeros(shape: Shape) -> Result<Self> {
        Signal::constant(0.0, shape)
    }

    /// Build a signal with this signal's layout. Finiteness is checked.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Signal::new(values, self.shape)
    }

    /// Same as [`Signal::with_values`] for values produced by the solvers,
    /// which are finite whenever their inputs are.
    pub(crate) fn like(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Signal {
            values,
            shape: self.shape,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        crate::linalg::norm_sq(&self.values)
    }

    pub fn distance_sq(&self, other: &Signal) -> f64 {
        crate::linalg::dist_sq(&self.values, &other.values)
    }

    pub(crate) fn check_len(&self, expected: usize) -> Result<()> {
        if self.len() != expected {
            return Err(Error::Dimension {
                expected,
                found: self.len(),
            });
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for Signal {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.values[k]
    }
}
