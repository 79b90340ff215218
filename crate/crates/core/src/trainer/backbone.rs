//! A two-layer perceptron `affine → tanh → affine` with manual backprop.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// out × in
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrads {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    /// Gaussian weights with standard deviation `1/√fan_in`, zero bias.
    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let weight = gaussian_matrix(outputs, inputs, rng);
        Self {
            weight,
            bias: Array1::zeros(outputs),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.in_dim() {
            return Err(Error::DimensionMismatch(format!(
                "layer expects {} inputs, got {}",
                self.in_dim(),
                x.ncols()
            )));
        }
        Ok(x.dot(&self.weight.t()) + &self.bias)
    }

    /// Returns parameter gradients and the gradient w.r.t. `x`.
    pub fn backward(&self, x: ArrayView2<'_, f64>, grad_out: ArrayView2<'_, f64>) -> Result<(LinearGrads, Array2<f64>)> {
        if x.ncols() != self.in_dim() || grad_out.ncols() != self.out_dim() || x.nrows() != grad_out.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "linear backward: input {:?}, upstream {:?}, layer {}x{}",
                x.dim(),
                grad_out.dim(),
                self.out_dim(),
                self.in_dim()
            )));
        }
        let grads = LinearGrads {
            weight: grad_out.t().dot(&x),
            bias: grad_out.sum_axis(Axis(0)),
        };
        Ok((grads, grad_out.dot(&self.weight)))
    }
}

/// Gaussian matrix with standard deviation `1/√cols`.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let normal = Normal::new(0.0, 1.0 / (cols as f64).sqrt()).expect("positive std");
    Array2::from_shape_simple_fn((rows, cols), || normal.sample(rng))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Backbone {
    pub hidden: Linear,
    pub output: Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackboneGrads {
    pub hidden: LinearGrads,
    pub output: LinearGrads,
    pub inputs: Array2<f64>,
}

impl Backbone {
    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, embedding_dim: usize, rng: &mut R) -> Self {
        Self {
            hidden: Linear::init(input_dim, hidden_dim, rng),
            output: Linear::init(hidden_dim, embedding_dim, rng),
        }
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize, embedding_dim: usize) -> Self {
        Self {
            hidden: Linear::zeros(input_dim, hidden_dim),
            output: Linear::zeros(hidden_dim, embedding_dim),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.in_dim()
    }

    pub fn embedding_dim(&self) -> usize {
        self.output.out_dim()
    }

    fn check(&self) -> Result<()> {
        if self.hidden.out_dim() != self.output.in_dim() {
            return Err(Error::DimensionMismatch(format!(
                "hidden layer emits {} values but output layer takes {}",
                self.hidden.out_dim(),
                self.output.in_dim()
            )));
        }
        Ok(())
    }
}

pub fn backbone_forward(params: &Backbone, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    params.check()?;
    let hidden = params.hidden.forward(inputs)?.mapv(f64::tanh);
    params.output.forward(hidden.view())
}

pub fn backbone_backward(
    params: &Backbone,
    inputs: ArrayView2<'_, f64>,
    grad_embeddings: ArrayView2<'_, f64>,
) -> Result<BackboneGrads> {
    params.check()?;
    let activated = params.hidden.forward(inputs)?.mapv(f64::tanh);
    let (output, grad_hidden) = params.output.backward(activated.view(), grad_embeddings)?;
    // tanh' = 1 - tanh²
    let grad_pre = grad_hidden * activated.mapv(|a| 1.0 - a * a);
    let (hidden, grad_inputs) = params.hidden.backward(inputs, grad_pre.view())?;
    Ok(BackboneGrads {
        hidden,
        output,
        inputs: grad_inputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
        Array2::from_shape_simple_fn((r, c), || rng.random_range(-1.0..1.0))
    }

    #[test]
    fn zero_params_give_zero_embeddings() {
        let params = Backbone::zeros(4, 6, 3);
        let out = backbone_forward(&params, array![[1.0, -2.0, 0.5, 3.0]].view()).unwrap();
        assert_eq!(out, Array2::<f64>::zeros((1, 3)));
    }

    #[test]
    fn small_inputs_are_nearly_linear() {
        let mut params = Backbone::zeros(3, 3, 3);
        params.hidden.weight = Array2::eye(3);
        params.output.weight = Array2::eye(3);
        let x = array![[1e-4, -2e-4, 3e-4]];
        let out = backbone_forward(&params, x.view()).unwrap();
        for j in 0..3 {
            assert!((out[[0, j]] - x[[0, j]]).abs() < 1e-11);
        }
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params = Backbone::init(5, 7, 4, &mut rng);
        let x = random(&mut rng, 3, 5);
        let g = backbone_backward(&params, x.view(), Array2::zeros((3, 4)).view()).unwrap();
        assert!(g.hidden.weight.iter().chain(g.output.weight.iter()).all(|&v| v == 0.0));
        assert!(g.hidden.bias.iter().chain(g.output.bias.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn linear_weight_grad_is_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let layer = Linear::init(3, 2, &mut rng);
        let x = array![[0.5, -1.0, 2.0]];
        let up = array![[3.0, -0.25]];
        let (g, gx) = layer.backward(x.view(), up.view()).unwrap();
        for o in 0..2 {
            for i in 0..3 {
                assert_eq!(g.weight[[o, i]], up[[0, o]] * x[[0, i]]);
            }
        }
        assert_eq!(g.bias, array![3.0, -0.25]);
        assert_eq!(gx, up.dot(&layer.weight));
    }

    #[test]
    fn dimension_mismatch() {
        let params = Backbone::zeros(4, 6, 3);
        assert!(matches!(
            backbone_forward(&params, Array2::zeros((2, 5)).view()),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(backbone_backward(&params, Array2::zeros((2, 4)).view(), Array2::zeros((2, 2)).view()).is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut params = Backbone::init(4, 5, 3, &mut rng);
        params.hidden.bias = Array1::from_shape_simple_fn(5, || rng.random_range(-0.5..0.5));
        params.output.bias = Array1::from_shape_simple_fn(3, || rng.random_range(-0.5..0.5));
        let x = random(&mut rng, 3, 4);
        let probe = random(&mut rng, 3, 3);
        // scalar objective <probe, backbone(x)>
        let objective = |p: &Backbone, x: &Array2<f64>| (backbone_forward(p, x.view()).unwrap() * &probe).sum();
        let grads = backbone_backward(&params, x.view(), probe.view()).unwrap();
        let h = 1e-6;
        let check = |analytic: f64, numeric: f64| {
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            assert!(rel < 1e-5, "{analytic} vs {numeric}");
        };
        for idx in 0..params.hidden.weight.len() {
            let (mut p, mut m) = (params.clone(), params.clone());
            p.hidden.weight.as_slice_mut().unwrap()[idx] += h;
            m.hidden.weight.as_slice_mut().unwrap()[idx] -= h;
            check(grads.hidden.weight.as_slice().unwrap()[idx], (objective(&p, &x) - objective(&m, &x)) / (2.0 * h));
        }
        for idx in 0..params.output.weight.len() {
            let (mut p, mut m) = (params.clone(), params.clone());
            p.output.weight.as_slice_mut().unwrap()[idx] += h;
            m.output.weight.as_slice_mut().unwrap()[idx] -= h;
            check(grads.output.weight.as_slice().unwrap()[idx], (objective(&p, &x) - objective(&m, &x)) / (2.0 * h));
        }
        for idx in 0..5 {
            let (mut p, mut m) = (params.clone(), params.clone());
            p.hidden.bias[idx] += h;
            m.hidden.bias[idx] -= h;
            check(grads.hidden.bias[idx], (objective(&p, &x) - objective(&m, &x)) / (2.0 * h));
        }
        for idx in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp.as_slice_mut().unwrap()[idx] += h;
            xm.as_slice_mut().unwrap()[idx] -= h;
            check(grads.inputs.as_slice().unwrap()[idx], (objective(&params, &xp) - objective(&params, &xm)) / (2.0 * h));
        }
    }

    #[test]
    fn jacobian_vector_product_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = Backbone::init(6, 8, 4, &mut rng);
        let x = random(&mut rng, 2, 6);
        let dir = random(&mut rng, 2, 6);
        let h = 1e-6;
        let plus = backbone_forward(&params, (&x + &(&dir * h)).view()).unwrap();
        let minus = backbone_forward(&params, (&x - &(&dir * h)).view()).unwrap();
        let numeric = (plus - minus) / (2.0 * h);
        // analytic JVP: W2 · diag(1 - a²) · W1 · dir
        let a = params.hidden.forward(x.view()).unwrap().mapv(f64::tanh);
        let analytic = (dir.dot(&params.hidden.weight.t()) * a.mapv(|v| 1.0 - v * v)).dot(&params.output.weight.t());
        for (an, nu) in analytic.iter().zip(numeric.iter()) {
            assert!((an - nu).abs() / an.abs().max(nu.abs()).max(1e-6) < 1e-5);
        }
    }
}
