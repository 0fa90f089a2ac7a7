use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::activation::Activation;
use crate::layers::params::{ParamKind, Parameters, StabilizerMode};
use crate::tensor::{inner, matvec, matvec_t, uniform_init, Matrix, Rng, Shape, Vector};

/// Fully connected layer computing `act(e^beta * W x + b)`.
///
/// The bias sits outside the stabilizer scale, so `dL/db` is the same as for a
/// plain affine layer. With `StabilizerMode::None` the beta is pinned to 0 and
/// is not exposed as a trainable parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AffineRepr", into = "AffineRepr")]
pub struct AffineLayer {
    weight: Matrix,
    bias: Vector,
    beta: f64,
    mode: StabilizerMode,
    activation: Activation,
}

/// Gradient mirror of an [`AffineLayer`].
#[derive(Debug, Clone, PartialEq)]
pub struct AffineGrads {
    pub weight: Matrix,
    pub bias: Vector,
    /// Always 0 for an unstabilized layer.
    pub beta: f64,
    mode: StabilizerMode,
}

impl AffineLayer {
    pub fn new(
        weight: Matrix,
        bias: Vector,
        mode: StabilizerMode,
        activation: Activation,
    ) -> Result<Self> {
        if bias.dim() != weight.rows() {
            return Err(Error::shape("AffineLayer::new", weight.shape(), bias.dim()));
        }
        Ok(AffineLayer {
            weight,
            bias,
            beta: 0.0,
            mode,
            activation,
        })
    }

    /// Uniform weights in `[-half_width, half_width]`, zero bias, zero beta.
    pub fn init(
        input_dim: usize,
        output_dim: usize,
        mode: StabilizerMode,
        activation: Activation,
        half_width: f64,
        rng: &mut Rng,
    ) -> Result<Self> {
        let weight = uniform_init(output_dim, input_dim, half_width, rng)?;
        AffineLayer::new(weight, Vector::zeros(output_dim), mode, activation)
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        self.set_beta(beta)?;
        Ok(self)
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    pub fn weight_mut(&mut self) -> &mut Matrix {
        &mut self.weight
    }

    pub fn bias(&self) -> &Vector {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut Vector {
        &mut self.bias
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn set_beta(&mut self, beta: f64) -> Result<()> {
        if !beta.is_finite() {
            return Err(Error::NonFinite("beta".into()));
        }
        if !self.mode.is_stabilized() && beta != 0.0 {
            return Err(Error::InvalidArgument(
                "an unstabilized layer's beta is fixed at 0".into(),
            ));
        }
        self.beta = beta;
        Ok(())
    }

    pub fn mode(&self) -> StabilizerMode {
        self.mode
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// The effective multiplier `e^beta` on `W x`.
    pub fn scale(&self) -> f64 {
        self.beta.exp()
    }

    pub fn zero_grads(&self) -> AffineGrads {
        AffineGrads {
            weight: Matrix::zeros(self.weight.rows(), self.weight.cols()),
            bias: Vector::zeros(self.bias.dim()),
            beta: 0.0,
            mode: self.mode,
        }
    }
}

impl AffineGrads {
    pub fn mode(&self) -> StabilizerMode {
        self.mode
    }

    pub fn add_assign(&mut self, other: &AffineGrads) -> Result<()> {
        self.weight.add_assign(&other.weight)?;
        self.bias.add_assign(&other.bias)?;
        self.beta += other.beta;
        Ok(())
    }
}

/// Returns `(y, pre_activation)` with `pre_activation = e^beta * (W x) + b`.
pub fn affine_forward(layer: &AffineLayer, x: &Vector) -> Result<(Vector, Vector)> {
    if x.dim() != layer.input_dim() {
        return Err(Error::shape(
            "affine_forward",
            layer.weight.shape(),
            Shape(x.dim(), 1),
        ));
    }
    let s = layer.scale();
    let mut pre = matvec(&layer.weight, x)?;
    for (p, &b) in pre.values_mut().iter_mut().zip(layer.bias.values()) {
        *p = s * *p + b;
    }
    let y = pre.map(|z| layer.activation.apply_scalar(z));
    Ok((y, pre))
}

/// Backward pass for one input; returns `(dL/dx, grads)`.
pub fn affine_backward(
    layer: &AffineLayer,
    x: &Vector,
    pre_activation: &Vector,
    dldy: &Vector,
) -> Result<(Vector, AffineGrads)> {
    let mut grads = layer.zero_grads();
    let dldx = affine_backward_into(layer, x, pre_activation, dldy, &mut grads)?;
    Ok((dldx, grads))
}

/// Same as [`affine_backward`] but adds the parameter gradients into `grads`.
pub fn affine_backward_into(
    layer: &AffineLayer,
    x: &Vector,
    pre_activation: &Vector,
    dldy: &Vector,
    grads: &mut AffineGrads,
) -> Result<Vector> {
    if x.dim() != layer.input_dim() || pre_activation.dim() != layer.output_dim() {
        return Err(Error::shape(
            "affine_backward",
            layer.weight.shape(),
            Shape(pre_activation.dim(), x.dim()),
        ));
    }
    if dldy.dim() != layer.output_dim() {
        return Err(Error::shape("affine_backward", layer.output_dim(), dldy.dim()));
    }
    if !dldy.all_finite() {
        return Err(Error::NonFinite("affine_backward upstream gradient".into()));
    }
    let act = layer.activation;
    let g = dldy.zip_map(pre_activation, |d, z| d * act.deriv_scalar(z))?;
    let s = layer.scale();
    let mut dldx = matvec_t(&layer.weight, &g)?;
    for v in dldx.values_mut() {
        *v *= s;
    }
    grads.weight.add_outer(s, &g, x)?;
    grads.bias.add_assign(&g)?;
    if layer.mode.is_stabilized() {
        grads.beta += inner(&dldx, x)?;
    }
    Ok(dldx)
}

impl Parameters for AffineLayer {
    fn visit(&self, f: &mut dyn FnMut(&str, ParamKind, &[f64])) {
        f("W", ParamKind::Weight, self.weight.values());
        f("b", ParamKind::Bias, self.bias.values());
        if self.mode.is_stabilized() {
            f("beta", ParamKind::Beta, std::slice::from_ref(&self.beta));
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, ParamKind, &mut [f64])) {
        f("W", ParamKind::Weight, self.weight.values_mut());
        f("b", ParamKind::Bias, self.bias.values_mut());
        if self.mode.is_stabilized() {
            f("beta", ParamKind::Beta, std::slice::from_mut(&mut self.beta));
        }
    }
}

impl Parameters for AffineGrads {
    fn visit(&self, f: &mut dyn FnMut(&str, ParamKind, &[f64])) {
        f("W", ParamKind::Weight, self.weight.values());
        f("b", ParamKind::Bias, self.bias.values());
        if self.mode.is_stabilized() {
            f("beta", ParamKind::Beta, std::slice::from_ref(&self.beta));
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, ParamKind, &mut [f64])) {
        f("W", ParamKind::Weight, self.weight.values_mut());
        f("b", ParamKind::Bias, self.bias.values_mut());
        if self.mode.is_stabilized() {
            f("beta", ParamKind::Beta, std::slice::from_mut(&mut self.beta));
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AffineRepr {
    mode: StabilizerMode,
    activation: Activation,
    beta: f64,
    weight: Matrix,
    bias: Vector,
}

impl From<AffineLayer> for AffineRepr {
    fn from(l: AffineLayer) -> Self {
        AffineRepr {
            mode: l.mode,
            activation: l.activation,
            beta: l.beta,
            weight: l.weight,
            bias: l.bias,
        }
    }
}

impl TryFrom<AffineRepr> for AffineLayer {
    type Error = Error;

    fn try_from(r: AffineRepr) -> Result<Self> {
        AffineLayer::new(r.weight, r.bias, r.mode, r.activation)?.with_beta(r.beta)
    }
}
