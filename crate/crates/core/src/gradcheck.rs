//! Central finite-difference gradients and comparison reports.
//!
//! The oracle here only ever calls forward passes; it never touches the
//! backward code it is used to certify.

use std::fmt;

use crate::data::Sequence;
use crate::error::{Error, Result};
use crate::layers::{
    affine_backward, affine_forward, blocks, flatten, lstm_backward, lstm_forward, network_backward,
    network_forward, unflatten, Activation, AffineLayer, LstmCell, Network, ParamKind, Parameters,
    Stage, StabilizerMode,
};
use crate::tensor::{inner, Rng, Vector};

pub const DEFAULT_EPSILON: f64 = 1e-5;

/// Largest layer width a check instance may use.
pub const MAX_DIM: usize = 8;
/// Longest sequence a check instance may use.
pub const MAX_SEQ_LEN: usize = 5;

/// Gradient values of one named parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedGrad {
    pub name: String,
    pub values: Vec<f64>,
}

/// `(L(θ_i + ε) − L(θ_i − ε)) / 2ε` for every entry of `params`, holding the
/// others fixed. `params` is restored exactly before returning, also on error.
pub fn finite_diff(
    params: &mut [f64],
    epsilon: f64,
    mut loss: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<Vec<f64>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut out = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = params[i];
        params[i] = orig + epsilon;
        let plus = loss(params);
        params[i] = orig - epsilon;
        let minus = loss(params);
        params[i] = orig;
        let (plus, minus) = (plus?, minus?);
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("loss while probing parameter {i}")));
        }
        out.push((plus - minus) / (2.0 * epsilon));
    }
    Ok(out)
}

/// Finite differences over every parameter block of a model.
pub fn finite_diff_model<M: Parameters + Clone>(
    model: &M,
    epsilon: f64,
    mut loss: impl FnMut(&M) -> Result<f64>,
) -> Result<Vec<NamedGrad>> {
    let mut flat = flatten(model);
    let mut scratch = model.clone();
    let numeric = finite_diff(&mut flat, epsilon, |p| {
        unflatten(&mut scratch, p)?;
        loss(&scratch)
    })?;
    let mut offset = 0;
    Ok(blocks(model)
        .into_iter()
        .map(|b| {
            let values = numeric[offset..offset + b.len].to_vec();
            offset += b.len;
            NamedGrad { name: b.name, values }
        })
        .collect())
}

/// `|a − fd| / max(|a|, |fd|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupError {
    pub name: String,
    pub max_rel_error: f64,
    pub worst_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub groups: Vec<GroupError>,
    pub epsilon: f64,
    pub tolerance: f64,
    pub max_rel_error: f64,
    /// Parameter name and index with the largest error.
    pub worst: Option<(String, usize)>,
    pub pass: bool,
}

impl fmt::Display for GradReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let worst = self
            .worst
            .as_ref()
            .map_or_else(|| "-".to_string(), |(n, i)| format!("{n}[{i}]"));
        write!(
            f,
            "{} max_rel_err={:.3e} tol={:.1e} eps={:.1e} worst={worst}",
            if self.pass { "PASS" } else { "FAIL" },
            self.max_rel_error,
            self.tolerance,
            self.epsilon,
        )
    }
}

/// Compares analytic against numeric gradients block by block.
pub fn compare(
    analytic: &[NamedGrad],
    numeric: &[NamedGrad],
    epsilon: f64,
    tolerance: f64,
) -> Result<GradReport> {
    if analytic.len() != numeric.len() {
        return Err(Error::shape("gradcheck::compare", analytic.len(), numeric.len()));
    }
    let mut groups = Vec::with_capacity(analytic.len());
    let mut max_rel_error = 0.0;
    let mut worst = None;
    for (a, n) in analytic.iter().zip(numeric) {
        if a.name != n.name || a.values.len() != n.values.len() {
            return Err(Error::shape(
                "gradcheck::compare",
                format!("{}[{}]", a.name, a.values.len()),
                format!("{}[{}]", n.name, n.values.len()),
            ));
        }
        let mut group = GroupError {
            name: a.name.clone(),
            max_rel_error: 0.0,
            worst_index: 0,
        };
        for (i, (&x, &y)) in a.values.iter().zip(&n.values).enumerate() {
            let e = relative_error(x, y);
            if e.is_nan() || e > group.max_rel_error {
                group.max_rel_error = if e.is_nan() { f64::INFINITY } else { e };
                group.worst_index = i;
            }
        }
        if group.max_rel_error > max_rel_error || worst.is_none() {
            if group.max_rel_error >= max_rel_error {
                max_rel_error = group.max_rel_error;
                worst = Some((group.name.clone(), group.worst_index));
            }
        }
        groups.push(group);
    }
    Ok(GradReport {
        groups,
        epsilon,
        tolerance,
        max_rel_error,
        worst,
        pass: max_rel_error < tolerance,
    })
}

/// A model instance with a scalar loss whose gradients can be certified.
pub trait GradientCase {
    /// Gradients from the hand-written backward pass.
    fn analytic(&self) -> Result<Vec<NamedGrad>>;
    /// Gradients from central finite differences of the loss.
    fn numeric(&self, epsilon: f64) -> Result<Vec<NamedGrad>>;
}

/// Certifies every analytic gradient of `case` against finite differences.
pub fn check_model(case: &impl GradientCase, epsilon: f64, tolerance: f64) -> Result<GradReport> {
    compare(&case.analytic()?, &case.numeric(epsilon)?, epsilon, tolerance)
}

fn named_from(p: &impl Parameters) -> Vec<NamedGrad> {
    let mut out = Vec::new();
    p.visit(&mut |name, _, values| {
        out.push(NamedGrad {
            name: name.to_string(),
            values: values.to_vec(),
        })
    });
    out
}

/// A model together with the inputs it is evaluated on, so input gradients
/// can be probed like parameters.
#[derive(Debug, Clone)]
struct WithInputs<M> {
    model: M,
    inputs: Vec<Vector>,
}

impl<M: Parameters> Parameters for WithInputs<M> {
    fn visit(&self, f: &mut dyn FnMut(&str, ParamKind, &[f64])) {
        self.model.visit(f);
        for (t, x) in self.inputs.iter().enumerate() {
            f(&format!("input[{t}]"), ParamKind::Weight, x.values());
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, ParamKind, &mut [f64])) {
        self.model.visit_mut(f);
        for (t, x) in self.inputs.iter_mut().enumerate() {
            f(&format!("input[{t}]"), ParamKind::Weight, x.values_mut());
        }
    }
}

fn random_vector(rng: &mut Rng, dim: usize, half_width: f64) -> Vector {
    Vector::from_raw((0..dim).map(|_| rng.uniform(-half_width, half_width)).collect())
}

fn check_caps(what: &str, dims: &[usize], seq_len: usize) -> Result<()> {
    if dims.iter().any(|&d| d == 0 || d > MAX_DIM) || seq_len == 0 || seq_len > MAX_SEQ_LEN {
        return Err(Error::InvalidArgument(format!(
            "{what} instance exceeds check caps (dims 1..={MAX_DIM}, sequence 1..={MAX_SEQ_LEN})"
        )));
    }
    Ok(())
}

/// Affine layer with loss `L = uᵀ y` for a fixed projection `u`.
#[derive(Debug, Clone)]
pub struct AffineCase {
    pub layer: AffineLayer,
    pub x: Vector,
    pub projection: Vector,
}

impl AffineCase {
    pub fn new(layer: AffineLayer, x: Vector, projection: Vector) -> Result<Self> {
        check_caps("affine", &[layer.input_dim(), layer.output_dim()], 1)?;
        if x.dim() != layer.input_dim() || projection.dim() != layer.output_dim() {
            return Err(Error::shape("AffineCase::new", layer.weight().shape(), format!("x {} u {}", x.dim(), projection.dim())));
        }
        Ok(AffineCase { layer, x, projection })
    }

    /// Random instance with dimensions in `1..=MAX_DIM` and, when stabilized,
    /// a non-zero beta.
    pub fn random(seed: u64, mode: StabilizerMode, activation: Activation) -> Self {
        let mut rng = Rng::new(seed);
        let input = 1 + rng.below(MAX_DIM);
        let output = 1 + rng.below(MAX_DIM);
        let mut layer = AffineLayer::init(input, output, mode, activation, 1.0, &mut rng)
            .expect("positive init width");
        *layer.bias_mut() = random_vector(&mut rng, output, 0.5);
        if mode.is_stabilized() {
            layer.set_beta(rng.uniform(-0.5, 0.5)).expect("finite beta");
        }
        let x = random_vector(&mut rng, input, 1.0);
        let projection = random_vector(&mut rng, output, 1.0);
        AffineCase { layer, x, projection }
    }

    fn loss(layer: &AffineLayer, x: &Vector, u: &Vector) -> Result<f64> {
        inner(&affine_forward(layer, x)?.0, u)
    }
}

impl GradientCase for AffineCase {
    fn analytic(&self) -> Result<Vec<NamedGrad>> {
        let (_, pre) = affine_forward(&self.layer, &self.x)?;
        let (dx, grads) = affine_backward(&self.layer, &self.x, &pre, &self.projection)?;
        let mut out = named_from(&grads);
        out.push(NamedGrad {
            name: "input[0]".into(),
            values: dx.into_values(),
        });
        Ok(out)
    }

    fn numeric(&self, epsilon: f64) -> Result<Vec<NamedGrad>> {
        let probe = WithInputs {
            model: self.layer.clone(),
            inputs: vec![self.x.clone()],
        };
        finite_diff_model(&probe, epsilon, |p| Self::loss(&p.model, &p.inputs[0], &self.projection))
    }
}

/// LSTM cell over a sequence with loss `L = Σ_t r_tᵀ h_t`.
#[derive(Debug, Clone)]
pub struct LstmCase {
    pub cell: LstmCell,
    pub xs: Vec<Vector>,
    pub projections: Vec<Vector>,
}

impl LstmCase {
    pub fn new(cell: LstmCell, xs: Vec<Vector>, projections: Vec<Vector>) -> Result<Self> {
        check_caps("lstm", &[cell.input_dim(), cell.hidden_dim()], xs.len())?;
        if projections.len() != xs.len() {
            return Err(Error::shape("LstmCase::new", xs.len(), projections.len()));
        }
        Ok(LstmCase { cell, xs, projections })
    }

    /// Random instance with the given sizes; stabilized modes get non-zero betas.
    pub fn random_sized(
        seed: u64,
        mode: StabilizerMode,
        input_dim: usize,
        hidden_dim: usize,
        seq_len: usize,
    ) -> Result<Self> {
        let mut rng = Rng::new(seed);
        let mut cell = LstmCell::init(input_dim, hidden_dim, mode, 0.5, &mut rng)?;
        for gate in crate::layers::Gate::ALL {
            cell.set_bias(gate, random_vector(&mut rng, hidden_dim, 0.3))?;
        }
        let slots = cell.beta_slots().iter().map(|_| rng.uniform(-0.5, 0.5)).collect();
        cell.set_beta_slots(slots)?;
        let xs = (0..seq_len).map(|_| random_vector(&mut rng, input_dim, 1.0)).collect();
        let projections = (0..seq_len).map(|_| random_vector(&mut rng, hidden_dim, 1.0)).collect();
        LstmCase::new(cell, xs, projections)
    }

    /// Random instance with `input ≤ 4`, `hidden ≤ 6` and `seq_len ≤ 5`.
    pub fn random(seed: u64, mode: StabilizerMode) -> Self {
        let mut rng = Rng::stream(seed, 1);
        let input = 1 + rng.below(4);
        let hidden = 1 + rng.below(6);
        let len = 1 + rng.below(MAX_SEQ_LEN);
        LstmCase::random_sized(seed, mode, input, hidden, len).expect("sizes within caps")
    }

    fn loss(cell: &LstmCell, xs: &[Vector], rs: &[Vector]) -> Result<f64> {
        let mut total = 0.0;
        for (step, r) in lstm_forward(cell, xs)?.iter().zip(rs) {
            total += inner(&step.h, r)?;
        }
        Ok(total)
    }
}

impl GradientCase for LstmCase {
    fn analytic(&self) -> Result<Vec<NamedGrad>> {
        let caches = lstm_forward(&self.cell, &self.xs)?;
        let (grads, dxs) = lstm_backward(&self.cell, &caches, &self.projections)?;
        let mut out = named_from(&grads);
        out.extend(dxs.into_iter().enumerate().map(|(t, d)| NamedGrad {
            name: format!("input[{t}]"),
            values: d.into_values(),
        }));
        Ok(out)
    }

    fn numeric(&self, epsilon: f64) -> Result<Vec<NamedGrad>> {
        let probe = WithInputs {
            model: self.cell.clone(),
            inputs: self.xs.clone(),
        };
        finite_diff_model(&probe, epsilon, |p| Self::loss(&p.model, &p.inputs, &self.projections))
    }
}

/// Whole network under its mean softmax cross-entropy over a batch.
#[derive(Debug, Clone)]
pub struct NetworkCase {
    pub net: Network,
    pub batch: Vec<Sequence>,
}

impl NetworkCase {
    pub fn new(net: Network, batch: Vec<Sequence>) -> Result<Self> {
        let dims: Vec<usize> = net
            .stages()
            .iter()
            .flat_map(|s| [s.input_dim(), s.output_dim()])
            .collect();
        let longest = batch.iter().map(Sequence::len).max().unwrap_or(0);
        check_caps("network", &dims, longest)?;
        Ok(NetworkCase { net, batch })
    }

    /// Three affine layers (two hidden with `activation`, linear output) on a
    /// batch of four frames, every layer carrying a non-zero beta when stabilized.
    pub fn random_dnn(seed: u64, mode: StabilizerMode, activation: Activation) -> Self {
        let mut rng = Rng::new(seed);
        let widths = [1 + rng.below(MAX_DIM), 2 + rng.below(MAX_DIM - 1), 2 + rng.below(MAX_DIM - 1)];
        let classes = 2 + rng.below(MAX_DIM - 1);
        let mut stages = Vec::new();
        let mut input = widths[0];
        for (i, &out) in widths[1..].iter().chain([&classes]).enumerate() {
            let act = if i < 2 { activation } else { Activation::Linear };
            let mut layer = AffineLayer::init(input, out, mode, act, 1.0, &mut rng).expect("positive width");
            *layer.bias_mut() = random_vector(&mut rng, out, 0.5);
            if mode.is_stabilized() {
                layer.set_beta(rng.uniform(-0.5, 0.5)).expect("finite beta");
            }
            stages.push(Stage::Affine(layer));
            input = out;
        }
        let batch = (0..4)
            .map(|_| Sequence {
                frames: vec![random_vector(&mut rng, widths[0], 1.0)],
                labels: vec![rng.below(classes)],
            })
            .collect();
        NetworkCase {
            net: Network::new(stages).expect("widths chain"),
            batch,
        }
    }

    /// LSTM cell followed by a linear output layer, on two sequences.
    pub fn random_lstm(seed: u64, mode: StabilizerMode) -> Self {
        let lstm = LstmCase::random(seed, mode);
        let mut rng = Rng::stream(seed, 2);
        let classes = 2 + rng.below(4);
        let hidden = lstm.cell.hidden_dim();
        let mut out = AffineLayer::init(hidden, classes, mode, Activation::Linear, 1.0, &mut rng)
            .expect("positive width");
        if mode.is_stabilized() {
            out.set_beta(rng.uniform(-0.5, 0.5)).expect("finite beta");
        }
        let input = lstm.cell.input_dim();
        let len = lstm.xs.len();
        let batch = (0..2)
            .map(|_| Sequence {
                frames: (0..len).map(|_| random_vector(&mut rng, input, 1.0)).collect(),
                labels: (0..len).map(|_| rng.below(classes)).collect(),
            })
            .collect();
        NetworkCase {
            net: Network::new(vec![Stage::Lstm(lstm.cell), Stage::Affine(out)]).expect("dims chain"),
            batch,
        }
    }
}

impl GradientCase for NetworkCase {
    fn analytic(&self) -> Result<Vec<NamedGrad>> {
        let pass = network_forward(&self.net, &self.batch)?;
        Ok(named_from(&network_backward(&self.net, &pass.cache)?))
    }

    fn numeric(&self, epsilon: f64) -> Result<Vec<NamedGrad>> {
        finite_diff_model(&self.net, epsilon, |net| Ok(network_forward(net, &self.batch)?.loss))
    }
}
