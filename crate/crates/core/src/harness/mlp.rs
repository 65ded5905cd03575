use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ItrdError, Result};
use crate::nn::{Linear, LinearGrads};
use crate::tensor::{FeatureBatch, Matrix};

/// Multilayer perceptron with ReLU hidden units.
///
/// The representation is the input to the final layer: the post-ReLU
/// activations of the last hidden layer, or the raw input for a
/// single-layer network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    layers: Vec<Linear>,
}

/// Per-layer inputs and pre-activations recorded during a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Matrix>,
    pre_activations: Vec<Matrix>,
    pub logits: Matrix,
}

impl ForwardCache {
    pub fn representation(&self) -> &Matrix {
        self.inputs.last().expect("at least one layer")
    }
}

impl MlpModel {
    /// Glorot-initialized network with layer widths `sizes` (input first,
    /// number of classes last).
    pub fn glorot<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(ItrdError::Argument(format!(
                "architecture needs at least two positive widths, got {sizes:?}"
            )));
        }
        let layers = sizes
            .windows(2)
            .map(|w| Linear::glorot(w[0], w[1], rng))
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Linear>) -> Result<Self> {
        if layers.is_empty() {
            return Err(ItrdError::Argument(
                "network needs at least one layer".into(),
            ));
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].fan_out() != w[1].fan_in() {
                return Err(ItrdError::Dimension(format!(
                    "layer {i} outputs {} features but layer {} expects {}",
                    w[0].fan_out(),
                    i + 1,
                    w[1].fan_in()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Linear] {
        &mut self.layers
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].fan_in()];
        s.extend(self.layers.iter().map(Linear::fan_out));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn representation_dim(&self) -> usize {
        self.layers.last().map(Linear::fan_in).unwrap_or(0)
    }

    pub fn classes(&self) -> usize {
        self.layers.last().map(Linear::fan_out).unwrap_or(0)
    }

    pub fn forward_cached(&self, x: &FeatureBatch) -> Result<ForwardCache> {
        if x.cols() != self.input_dim() {
            return Err(ItrdError::Dimension(format!(
                "network expects {} input features, got {}",
                self.input_dim(),
                x.cols()
            )));
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(last);
        let mut h = x.clone();
        for layer in &self.layers[..last] {
            let pre = layer.forward(&h)?;
            let next = pre.map(|v| v.max(0.0));
            inputs.push(h);
            pre_activations.push(pre);
            h = next;
        }
        let logits = self.layers[last].forward(&h)?;
        inputs.push(h);
        Ok(ForwardCache {
            inputs,
            pre_activations,
            logits,
        })
    }

    /// Returns `(representation, logits)`.
    pub fn forward(&self, x: &FeatureBatch) -> Result<(FeatureBatch, FeatureBatch)> {
        let mut cache = self.forward_cached(x)?;
        let rep = cache.inputs.pop().expect("at least one layer");
        Ok((rep, cache.logits))
    }

    /// Parameter gradients given upstream gradients on the logits and,
    /// optionally, on the representation.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        d_logits: &Matrix,
        d_representation: Option<&Matrix>,
    ) -> Result<Vec<LinearGrads>> {
        let last = self.layers.len() - 1;
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = d_logits.clone();
        for i in (0..=last).rev() {
            let (mut dx, g) = self.layers[i].backward(&cache.inputs[i], &upstream)?;
            grads.push(g);
            if i == last {
                if let Some(d_rep) = d_representation {
                    dx = dx.add(d_rep)?;
                }
            }
            if i > 0 {
                let pre = &cache.pre_activations[i - 1];
                for (d, &p) in dx.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                    if p <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            upstream = dx;
        }
        grads.reverse();
        Ok(grads)
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Linear::is_finite)
    }
}
