//! Fully connected layers with hand-written backward passes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ItrdError, Result};
use crate::tensor::{FeatureBatch, Matrix};

/// Affine map `y = x W + b` with `W` of shape `in x out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

/// Parameter gradients of a [`Linear`] layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrads {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weight.cols() {
            return Err(ItrdError::Dimension(format!(
                "bias has length {} but weight has {} output columns",
                bias.len(),
                weight.cols()
            )));
        }
        Ok(Self { weight, bias })
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Matrix::zeros(fan_in, fan_out),
            bias: vec![0.0; fan_out],
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let weight = Matrix::from_fn(fan_in, fan_out, |_, _| rng.gen_range(-limit..limit));
        Self {
            weight,
            bias: vec![0.0; fan_out],
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, x: &FeatureBatch) -> Result<FeatureBatch> {
        if x.cols() != self.fan_in() {
            return Err(ItrdError::Dimension(format!(
                "layer expects {} input features, got {}",
                self.fan_in(),
                x.cols()
            )));
        }
        let mut y = x.matmul(&self.weight)?;
        for i in 0..y.rows() {
            for (v, b) in y.row_mut(i).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(y)
    }

    /// Returns the gradient with respect to the input and the parameter
    /// gradients, given the layer input `x` and upstream `grad_out`.
    pub fn backward(&self, x: &FeatureBatch, grad_out: &Matrix) -> Result<(Matrix, LinearGrads)> {
        let dx = grad_out.matmul_transpose(&self.weight)?;
        let dw = x.transpose_matmul(grad_out)?;
        let mut db = vec![0.0; self.fan_out()];
        for i in 0..grad_out.rows() {
            for (acc, g) in db.iter_mut().zip(grad_out.row(i)) {
                *acc += g;
            }
        }
        Ok((
            dx,
            LinearGrads {
                weight: dw,
                bias: db,
            },
        ))
    }

    pub fn is_finite(&self) -> bool {
        self.weight.all_finite() && self.bias.iter().all(|b| b.is_finite())
    }
}

impl LinearGrads {
    pub fn zeros_like(layer: &Linear) -> Self {
        Self {
            weight: Matrix::zeros(layer.fan_in(), layer.fan_out()),
            bias: vec![0.0; layer.fan_out()],
        }
    }
}

/// Linear map from the student representation to the teacher's dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingLayer {
    pub linear: Linear,
    pub trainable: bool,
}

impl EmbeddingLayer {
    pub fn new(linear: Linear, trainable: bool) -> Self {
        Self { linear, trainable }
    }

    pub fn glorot<R: Rng + ?Sized>(student_dim: usize, teacher_dim: usize, rng: &mut R) -> Self {
        Self::new(Linear::glorot(student_dim, teacher_dim, rng), true)
    }

    pub fn input_dim(&self) -> usize {
        self.linear.fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.linear.fan_out()
    }

    pub fn forward(&self, z: &FeatureBatch) -> Result<FeatureBatch> {
        self.linear.forward(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_and_backward_shapes() {
        let layer = Linear::new(
            Matrix::from_rows(&[[1.0, 0.0, 2.0], [0.0, 1.0, -1.0]]).unwrap(),
            vec![0.5, 0.0, 0.0],
        )
        .unwrap();
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let y = layer.forward(&x).unwrap();
        assert_eq!(
            y,
            Matrix::from_rows(&[[1.5, 2.0, 0.0], [3.5, 4.0, 2.0]]).unwrap()
        );

        let g = Matrix::filled(2, 3, 1.0);
        let (dx, grads) = layer.backward(&x, &g).unwrap();
        assert_eq!(dx, Matrix::from_rows(&[[3.0, 0.0], [3.0, 0.0]]).unwrap());
        assert_eq!(grads.bias, vec![2.0, 2.0, 2.0]);
        assert_eq!(
            grads.weight,
            Matrix::from_rows(&[[4.0; 3], [6.0; 3]]).unwrap()
        );
        assert!(layer.forward(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn glorot_within_limit_and_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = Linear::glorot(8, 16, &mut rng);
        let limit = (6.0f64 / 24.0).sqrt();
        assert!(a.weight.as_slice().iter().all(|w| w.abs() <= limit));
        let b = Linear::glorot(8, 16, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }
}
