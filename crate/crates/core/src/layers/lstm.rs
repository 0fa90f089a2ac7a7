//! Peephole LSTM cell with a stabilizer scalar on each linear transform.
//!
//! One step computes
//!
//! ```text
//! i_t = σ(e^β_xi W_xi x_t + e^β_hi W_hi h_{t-1} + e^β_ci W_ci c_{t-1} + b_i)
//! f_t = σ(e^β_xf W_xf x_t + e^β_hf W_hf h_{t-1} + e^β_cf W_cf c_{t-1} + b_f)
//! c_t = f_t ⊙ c_{t-1} + i_t ⊙ tanh(e^β_xc W_xc x_t + e^β_hc W_hc h_{t-1} + b_c)
//! o_t = σ(e^β_xo W_xo x_t + e^β_ho W_ho h_{t-1} + e^β_co W_co c_t + b_o)
//! h_t = o_t ⊙ tanh(c_t)
//! ```
//!
//! The peephole matrices are full `hidden × hidden` matrices. How the eleven
//! betas are tied together depends on the [`StabilizerMode`]; tied betas are
//! stored once, so they cannot drift apart.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::activation::sigmoid;
use crate::layers::params::{ParamKind, Parameters, StabilizerMode};
use crate::tensor::{inner, matvec, matvec_t, uniform_init, Matrix, Rng, Vector};

/// Gate a linear transform feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    Input,
    Forget,
    Cell,
    Output,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Cell, Gate::Output];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn bias_name(self) -> &'static str {
        match self {
            Gate::Input => "b_i",
            Gate::Forget => "b_f",
            Gate::Cell => "b_c",
            Gate::Output => "b_o",
        }
    }

    fn beta_name(self) -> &'static str {
        match self {
            Gate::Input => "beta_i",
            Gate::Forget => "beta_f",
            Gate::Cell => "beta_c",
            Gate::Output => "beta_o",
        }
    }
}

/// Vector a linear transform reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    /// `x_t`
    Input,
    /// `h_{t-1}`
    Hidden,
    /// `c_{t-1}` for the input and forget gates, `c_t` for the output gate.
    Cell,
}

/// The eleven linear transforms of the cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transform {
    Xi,
    Hi,
    Ci,
    Xf,
    Hf,
    Cf,
    Xc,
    Hc,
    Xo,
    Ho,
    Co,
}

impl Transform {
    pub const ALL: [Transform; 11] = [
        Transform::Xi,
        Transform::Hi,
        Transform::Ci,
        Transform::Xf,
        Transform::Hf,
        Transform::Cf,
        Transform::Xc,
        Transform::Hc,
        Transform::Xo,
        Transform::Ho,
        Transform::Co,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Matrix name, e.g. `W_xi`.
    pub fn name(self) -> &'static str {
        match self {
            Transform::Xi => "W_xi",
            Transform::Hi => "W_hi",
            Transform::Ci => "W_ci",
            Transform::Xf => "W_xf",
            Transform::Hf => "W_hf",
            Transform::Cf => "W_cf",
            Transform::Xc => "W_xc",
            Transform::Hc => "W_hc",
            Transform::Xo => "W_xo",
            Transform::Ho => "W_ho",
            Transform::Co => "W_co",
        }
    }

    fn beta_name(self) -> &'static str {
        match self {
            Transform::Xi => "beta_xi",
            Transform::Hi => "beta_hi",
            Transform::Ci => "beta_ci",
            Transform::Xf => "beta_xf",
            Transform::Hf => "beta_hf",
            Transform::Cf => "beta_cf",
            Transform::Xc => "beta_xc",
            Transform::Hc => "beta_hc",
            Transform::Xo => "beta_xo",
            Transform::Ho => "beta_ho",
            Transform::Co => "beta_co",
        }
    }

    pub fn gate(self) -> Gate {
        match self {
            Transform::Xi | Transform::Hi | Transform::Ci => Gate::Input,
            Transform::Xf | Transform::Hf | Transform::Cf => Gate::Forget,
            Transform::Xc | Transform::Hc => Gate::Cell,
            Transform::Xo | Transform::Ho | Transform::Co => Gate::Output,
        }
    }

    pub fn source(self) -> Source {
        match self {
            Transform::Xi | Transform::Xf | Transform::Xc | Transform::Xo => Source::Input,
            Transform::Hi | Transform::Hf | Transform::Hc | Transform::Ho => Source::Hidden,
            Transform::Ci | Transform::Cf | Transform::Co => Source::Cell,
        }
    }

    pub fn by_gate(gate: Gate) -> &'static [Transform] {
        match gate {
            Gate::Input => &[Transform::Xi, Transform::Hi, Transform::Ci],
            Gate::Forget => &[Transform::Xf, Transform::Hf, Transform::Cf],
            Gate::Cell => &[Transform::Xc, Transform::Hc],
            Gate::Output => &[Transform::Xo, Transform::Ho, Transform::Co],
        }
    }
}

/// Number of stored beta scalars for a mode.
pub fn beta_slots(mode: StabilizerMode) -> usize {
    match mode {
        StabilizerMode::None => 0,
        StabilizerMode::LayerShared => 1,
        StabilizerMode::GateShared => 4,
        StabilizerMode::Independent => 11,
    }
}

/// Storage slot of the beta applied to `t`, if any.
pub fn beta_slot(mode: StabilizerMode, t: Transform) -> Option<usize> {
    match mode {
        StabilizerMode::None => None,
        StabilizerMode::LayerShared => Some(0),
        StabilizerMode::GateShared => Some(t.gate().index()),
        StabilizerMode::Independent => Some(t.index()),
    }
}

fn slot_name(mode: StabilizerMode, slot: usize) -> &'static str {
    match mode {
        StabilizerMode::None => unreachable!("no beta slots without a stabilizer"),
        StabilizerMode::LayerShared => "beta",
        StabilizerMode::GateShared => Gate::ALL[slot].beta_name(),
        StabilizerMode::Independent => Transform::ALL[slot].beta_name(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    input_dim: usize,
    hidden_dim: usize,
    mode: StabilizerMode,
    weights: [Matrix; 11],
    biases: [Vector; 4],
    betas: Vec<f64>,
}

/// Everything one forward step produces that the backward pass needs.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmStepCache {
    pub x: Vector,
    pub h_prev: Vector,
    pub c_prev: Vector,
    pub pre_i: Vector,
    pub pre_f: Vector,
    pub pre_g: Vector,
    pub pre_o: Vector,
    pub i: Vector,
    pub f: Vector,
    /// Candidate `tanh(e^β_xc W_xc x + e^β_hc W_hc h + b_c)`.
    pub g: Vector,
    pub o: Vector,
    pub c: Vector,
    pub tanh_c: Vector,
    pub h: Vector,
}

/// Gradient mirror of an [`LstmCell`].
#[derive(Debug, Clone, PartialEq)]
pub struct LstmGrads {
    pub weights: [Matrix; 11],
    pub biases: [Vector; 4],
    /// Gradient of every stored beta slot: per-transform gradients summed
    /// over the transforms that share the slot.
    pub betas: Vec<f64>,
    /// Gradient with respect to each transform's beta as if it were free.
    pub transform_betas: [f64; 11],
    mode: StabilizerMode,
}

impl LstmCell {
    /// All-zero cell.
    pub fn zeros(input_dim: usize, hidden_dim: usize, mode: StabilizerMode) -> Self {
        LstmCell {
            input_dim,
            hidden_dim,
            mode,
            weights: Transform::ALL.map(|t| {
                let cols = match t.source() {
                    Source::Input => input_dim,
                    Source::Hidden | Source::Cell => hidden_dim,
                };
                Matrix::zeros(hidden_dim, cols)
            }),
            biases: Gate::ALL.map(|_| Vector::zeros(hidden_dim)),
            betas: vec![0.0; beta_slots(mode)],
        }
    }

    /// Uniform weights in `[-half_width, half_width]`, zero biases and betas.
    pub fn init(
        input_dim: usize,
        hidden_dim: usize,
        mode: StabilizerMode,
        half_width: f64,
        rng: &mut Rng,
    ) -> Result<Self> {
        let mut cell = LstmCell::zeros(input_dim, hidden_dim, mode);
        for w in cell.weights.iter_mut() {
            *w = uniform_init(w.rows(), w.cols(), half_width, rng)?;
        }
        Ok(cell)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn mode(&self) -> StabilizerMode {
        self.mode
    }

    pub fn weight(&self, t: Transform) -> &Matrix {
        &self.weights[t.index()]
    }

    pub fn set_weight(&mut self, t: Transform, w: Matrix) -> Result<()> {
        let cur = &self.weights[t.index()];
        if cur.shape() != w.shape() {
            return Err(Error::shape("LstmCell::set_weight", cur.shape(), w.shape()));
        }
        self.weights[t.index()] = w;
        Ok(())
    }

    pub fn bias(&self, gate: Gate) -> &Vector {
        &self.biases[gate.index()]
    }

    pub fn set_bias(&mut self, gate: Gate, b: Vector) -> Result<()> {
        if b.dim() != self.hidden_dim {
            return Err(Error::shape("LstmCell::set_bias", self.hidden_dim, b.dim()));
        }
        self.biases[gate.index()] = b;
        Ok(())
    }

    /// Beta applied to transform `t` (0 when unstabilized).
    pub fn beta(&self, t: Transform) -> f64 {
        beta_slot(self.mode, t).map_or(0.0, |s| self.betas[s])
    }

    /// The eleven per-transform betas, expanded from the stored slots.
    pub fn betas(&self) -> [f64; 11] {
        Transform::ALL.map(|t| self.beta(t))
    }

    /// Stored beta slots (0, 1, 4 or 11 values depending on the mode).
    pub fn beta_slots(&self) -> &[f64] {
        &self.betas
    }

    /// Sets the slot that drives transform `t`; every transform sharing the
    /// slot changes with it.
    pub fn set_beta(&mut self, t: Transform, beta: f64) -> Result<()> {
        if !beta.is_finite() {
            return Err(Error::NonFinite(t.beta_name().into()));
        }
        match beta_slot(self.mode, t) {
            Some(s) => {
                self.betas[s] = beta;
                Ok(())
            }
            None if beta == 0.0 => Ok(()),
            None => Err(Error::InvalidArgument(
                "an unstabilized cell's betas are fixed at 0".into(),
            )),
        }
    }

    pub fn set_beta_slots(&mut self, betas: Vec<f64>) -> Result<()> {
        if betas.len() != beta_slots(self.mode) {
            return Err(Error::shape(
                "LstmCell::set_beta_slots",
                beta_slots(self.mode),
                betas.len(),
            ));
        }
        if betas.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("beta".into()));
        }
        self.betas = betas;
        Ok(())
    }

    /// Same weights and biases under another stabilizer mode. Betas of the new
    /// cell are zero.
    pub fn with_mode(&self, mode: StabilizerMode) -> LstmCell {
        LstmCell {
            mode,
            betas: vec![0.0; beta_slots(mode)],
            ..self.clone()
        }
    }

    pub fn zero_grads(&self) -> LstmGrads {
        LstmGrads {
            weights: self.weights.clone().map(|w| Matrix::zeros(w.rows(), w.cols())),
            biases: Gate::ALL.map(|_| Vector::zeros(self.hidden_dim)),
            betas: vec![0.0; self.betas.len()],
            transform_betas: [0.0; 11],
            mode: self.mode,
        }
    }

    /// `e^β_t W_t v`
    fn branch(&self, t: Transform, v: &Vector) -> Result<Vector> {
        let mut out = matvec(self.weight(t), v)?;
        let s = self.beta(t).exp();
        for o in out.values_mut() {
            *o *= s;
        }
        Ok(out)
    }

    fn gate_pre(&self, gate: Gate, inputs: [&Vector; 3]) -> Result<Vector> {
        let mut acc: Option<Vector> = None;
        for &t in Transform::by_gate(gate) {
            let v = match t.source() {
                Source::Input => inputs[0],
                Source::Hidden => inputs[1],
                Source::Cell => inputs[2],
            };
            let b = self.branch(t, v)?;
            match acc.as_mut() {
                None => acc = Some(b),
                Some(a) => a.add_assign(&b)?,
            }
        }
        let mut pre = acc.expect("every gate has at least two transforms");
        pre.add_assign(self.bias(gate))?;
        Ok(pre)
    }
}

impl LstmGrads {
    pub fn mode(&self) -> StabilizerMode {
        self.mode
    }

    pub fn weight(&self, t: Transform) -> &Matrix {
        &self.weights[t.index()]
    }

    pub fn bias(&self, gate: Gate) -> &Vector {
        &self.biases[gate.index()]
    }

    pub fn add_assign(&mut self, other: &LstmGrads) -> Result<()> {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.add_assign(b)?;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.add_assign(b)?;
        }
        if self.betas.len() != other.betas.len() {
            return Err(Error::shape("LstmGrads::add_assign", self.betas.len(), other.betas.len()));
        }
        for (a, b) in self.betas.iter_mut().zip(&other.betas) {
            *a += b;
        }
        for (a, b) in self.transform_betas.iter_mut().zip(&other.transform_betas) {
            *a += b;
        }
        Ok(())
    }
}

/// One time step from `(h_prev, c_prev)`.
pub fn lstm_step(
    cell: &LstmCell,
    x: &Vector,
    h_prev: &Vector,
    c_prev: &Vector,
) -> Result<LstmStepCache> {
    if x.dim() != cell.input_dim {
        return Err(Error::shape("lstm_step input", cell.input_dim, x.dim()));
    }
    if h_prev.dim() != cell.hidden_dim || c_prev.dim() != cell.hidden_dim {
        return Err(Error::shape(
            "lstm_step state",
            cell.hidden_dim,
            format!("h {} / c {}", h_prev.dim(), c_prev.dim()),
        ));
    }
    let pre_i = cell.gate_pre(Gate::Input, [x, h_prev, c_prev])?;
    let pre_f = cell.gate_pre(Gate::Forget, [x, h_prev, c_prev])?;
    let pre_g = cell.gate_pre(Gate::Cell, [x, h_prev, c_prev])?;
    let i = pre_i.map(sigmoid);
    let f = pre_f.map(sigmoid);
    let g = pre_g.map(f64::tanh);
    let mut c = f.hadamard(c_prev)?;
    c.add_assign(&i.hadamard(&g)?)?;
    let pre_o = cell.gate_pre(Gate::Output, [x, h_prev, &c])?;
    let o = pre_o.map(sigmoid);
    let tanh_c = c.map(f64::tanh);
    let h = o.hadamard(&tanh_c)?;
    Ok(LstmStepCache {
        x: x.clone(),
        h_prev: h_prev.clone(),
        c_prev: c_prev.clone(),
        pre_i,
        pre_f,
        pre_g,
        pre_o,
        i,
        f,
        g,
        o,
        c,
        tanh_c,
        h,
    })
}

/// Runs the cell over a sequence from a zero state.
pub fn lstm_forward(cell: &LstmCell, xs: &[Vector]) -> Result<Vec<LstmStepCache>> {
    let mut h = Vector::zeros(cell.hidden_dim);
    let mut c = Vector::zeros(cell.hidden_dim);
    let mut caches = Vec::with_capacity(xs.len());
    for x in xs {
        let step = lstm_step(cell, x, &h, &c)?;
        h = step.h.clone();
        c = step.c.clone();
        caches.push(step);
    }
    Ok(caches)
}

/// Backpropagation through time over a whole sequence.
///
/// `dldh[t]` is the loss gradient arriving at `h_t` from outside the cell.
/// Returns the parameter gradients and `dL/dx_t` for every step.
pub fn lstm_backward(
    cell: &LstmCell,
    caches: &[LstmStepCache],
    dldh: &[Vector],
) -> Result<(LstmGrads, Vec<Vector>)> {
    let mut grads = cell.zero_grads();
    let dldx = lstm_backward_into(cell, caches, dldh, &mut grads)?;
    Ok((grads, dldx))
}

/// Same as [`lstm_backward`] but adds the parameter gradients into `grads`.
pub fn lstm_backward_into(
    cell: &LstmCell,
    caches: &[LstmStepCache],
    dldh: &[Vector],
    grads: &mut LstmGrads,
) -> Result<Vec<Vector>> {
    if caches.is_empty() {
        return Err(Error::InvalidArgument("lstm_backward needs at least one step".into()));
    }
    if caches.len() != dldh.len() {
        return Err(Error::shape("lstm_backward steps", caches.len(), dldh.len()));
    }
    if grads.mode != cell.mode || grads.betas.len() != cell.betas.len() {
        return Err(Error::InvalidArgument("gradient buffer does not mirror the cell".into()));
    }
    let n = cell.hidden_dim;
    let scales = cell.betas().map(f64::exp);
    let mut dh_next = Vector::zeros(n);
    let mut dc_next = Vector::zeros(n);
    let mut dxs = vec![Vector::zeros(cell.input_dim); caches.len()];

    for (t, step) in caches.iter().enumerate().rev() {
        if dldh[t].dim() != n {
            return Err(Error::shape("lstm_backward dL/dh", n, dldh[t].dim()));
        }
        if !dldh[t].all_finite() {
            return Err(Error::NonFinite(format!("lstm_backward dL/dh[{t}]")));
        }
        let mut dh = dldh[t].clone();
        dh.add_assign(&dh_next)?;

        let mut dx = Vector::zeros(cell.input_dim);
        let mut dh_prev = Vector::zeros(n);
        let mut dc_prev = Vector::zeros(n);

        // Output gate first: W_co reads c_t, so its branch feeds dc.
        let delta_o = Vector::from_raw(
            (0..n)
                .map(|k| {
                    let o = step.o.get(k);
                    dh.get(k) * step.tanh_c.get(k) * o * (1.0 - o)
                })
                .collect(),
        );
        let mut dc = dc_next.clone();
        for k in 0..n {
            let tc = step.tanh_c.get(k);
            dc.values_mut()[k] += dh.get(k) * step.o.get(k) * (1.0 - tc * tc);
        }

        let accumulate = |tr: Transform,
                              delta: &Vector,
                              grads: &mut LstmGrads,
                              sink: &mut Vector|
         -> Result<()> {
            let v = match tr.source() {
                Source::Input => &step.x,
                Source::Hidden => &step.h_prev,
                Source::Cell if tr == Transform::Co => &step.c,
                Source::Cell => &step.c_prev,
            };
            let s = scales[tr.index()];
            grads.weights[tr.index()].add_outer(s, delta, v)?;
            let mut u = matvec_t(cell.weight(tr), delta)?;
            for e in u.values_mut() {
                *e *= s;
            }
            if let Some(slot) = beta_slot(cell.mode, tr) {
                let db = inner(&u, v)?;
                grads.transform_betas[tr.index()] += db;
                grads.betas[slot] += db;
            }
            sink.add_assign(&u)
        };

        for &tr in Transform::by_gate(Gate::Output) {
            let sink = match tr.source() {
                Source::Input => &mut dx,
                Source::Hidden => &mut dh_prev,
                Source::Cell => &mut dc,
            };
            accumulate(tr, &delta_o, grads, sink)?;
        }
        grads.biases[Gate::Output.index()].add_assign(&delta_o)?;

        let delta_i = Vector::from_raw(
            (0..n)
                .map(|k| {
                    let i = step.i.get(k);
                    dc.get(k) * step.g.get(k) * i * (1.0 - i)
                })
                .collect(),
        );
        let delta_g = Vector::from_raw(
            (0..n)
                .map(|k| {
                    let g = step.g.get(k);
                    dc.get(k) * step.i.get(k) * (1.0 - g * g)
                })
                .collect(),
        );
        let delta_f = Vector::from_raw(
            (0..n)
                .map(|k| {
                    let f = step.f.get(k);
                    dc.get(k) * step.c_prev.get(k) * f * (1.0 - f)
                })
                .collect(),
        );
        for k in 0..n {
            dc_prev.values_mut()[k] = dc.get(k) * step.f.get(k);
        }

        for (gate, delta) in [
            (Gate::Input, &delta_i),
            (Gate::Forget, &delta_f),
            (Gate::Cell, &delta_g),
        ] {
            for &tr in Transform::by_gate(gate) {
                let sink = match tr.source() {
                    Source::Input => &mut dx,
                    Source::Hidden => &mut dh_prev,
                    Source::Cell => &mut dc_prev,
                };
                accumulate(tr, delta, grads, sink)?;
            }
            grads.biases[gate.index()].add_assign(delta)?;
        }

        dxs[t] = dx;
        dh_next = dh_prev;
        dc_next = dc_prev;
    }
    Ok(dxs)
}

impl Parameters for LstmCell {
    fn visit(&self, f: &mut dyn FnMut(&str, ParamKind, &[f64])) {
        for t in Transform::ALL {
            f(t.name(), ParamKind::Weight, self.weights[t.index()].values());
        }
        for g in Gate::ALL {
            f(g.bias_name(), ParamKind::Bias, self.biases[g.index()].values());
        }
        for (slot, b) in self.betas.iter().enumerate() {
            f(slot_name(self.mode, slot), ParamKind::Beta, std::slice::from_ref(b));
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, ParamKind, &mut [f64])) {
        for t in Transform::ALL {
            f(t.name(), ParamKind::Weight, self.weights[t.index()].values_mut());
        }
        for g in Gate::ALL {
            f(g.bias_name(), ParamKind::Bias, self.biases[g.index()].values_mut());
        }
        let mode = self.mode;
        for (slot, b) in self.betas.iter_mut().enumerate() {
            f(slot_name(mode, slot), ParamKind::Beta, std::slice::from_mut(b));
        }
    }
}

impl Parameters for LstmGrads {
    fn visit(&self, f: &mut dyn FnMut(&str, ParamKind, &[f64])) {
        for t in Transform::ALL {
            f(t.name(), ParamKind::Weight, self.weights[t.index()].values());
        }
        for g in Gate::ALL {
            f(g.bias_name(), ParamKind::Bias, self.biases[g.index()].values());
        }
        for (slot, b) in self.betas.iter().enumerate() {
            f(slot_name(self.mode, slot), ParamKind::Beta, std::slice::from_ref(b));
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, ParamKind, &mut [f64])) {
        for t in Transform::ALL {
            f(t.name(), ParamKind::Weight, self.weights[t.index()].values_mut());
        }
        for g in Gate::ALL {
            f(g.bias_name(), ParamKind::Bias, self.biases[g.index()].values_mut());
        }
        let mode = self.mode;
        for (slot, b) in self.betas.iter_mut().enumerate() {
            f(slot_name(mode, slot), ParamKind::Beta, std::slice::from_mut(b));
        }
    }
}

/// On-disk layout of a cell: matrices and biases by name, beta slots in
/// storage order.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct LstmRepr {
    mode: StabilizerMode,
    input_dim: usize,
    hidden_dim: usize,
    betas: Vec<f64>,
    #[serde(rename = "W_xi")]
    w_xi: Matrix,
    #[serde(rename = "W_hi")]
    w_hi: Matrix,
    #[serde(rename = "W_ci")]
    w_ci: Matrix,
    #[serde(rename = "W_xf")]
    w_xf: Matrix,
    #[serde(rename = "W_hf")]
    w_hf: Matrix,
    #[serde(rename = "W_cf")]
    w_cf: Matrix,
    #[serde(rename = "W_xc")]
    w_xc: Matrix,
    #[serde(rename = "W_hc")]
    w_hc: Matrix,
    #[serde(rename = "W_xo")]
    w_xo: Matrix,
    #[serde(rename = "W_ho")]
    w_ho: Matrix,
    #[serde(rename = "W_co")]
    w_co: Matrix,
    b_i: Vector,
    b_f: Vector,
    b_c: Vector,
    b_o: Vector,
}

impl From<LstmCell> for LstmRepr {
    fn from(cell: LstmCell) -> Self {
        let [w_xi, w_hi, w_ci, w_xf, w_hf, w_cf, w_xc, w_hc, w_xo, w_ho, w_co] = cell.weights;
        let [b_i, b_f, b_c, b_o] = cell.biases;
        LstmRepr {
            mode: cell.mode,
            input_dim: cell.input_dim,
            hidden_dim: cell.hidden_dim,
            betas: cell.betas,
            w_xi,
            w_hi,
            w_ci,
            w_xf,
            w_hf,
            w_cf,
            w_xc,
            w_hc,
            w_xo,
            w_ho,
            w_co,
            b_i,
            b_f,
            b_c,
            b_o,
        }
    }
}

impl TryFrom<LstmRepr> for LstmCell {
    type Error = Error;

    fn try_from(r: LstmRepr) -> Result<Self> {
        let mut cell = LstmCell::zeros(r.input_dim, r.hidden_dim, r.mode);
        let weights = [
            r.w_xi, r.w_hi, r.w_ci, r.w_xf, r.w_hf, r.w_cf, r.w_xc, r.w_hc, r.w_xo, r.w_ho, r.w_co,
        ];
        for (t, w) in Transform::ALL.into_iter().zip(weights) {
            cell.set_weight(t, w)?;
        }
        for (g, b) in Gate::ALL.into_iter().zip([r.b_i, r.b_f, r.b_c, r.b_o]) {
            cell.set_bias(g, b)?;
        }
        cell.set_beta_slots(r.betas)?;
        Ok(cell)
    }
}

impl Serialize for LstmCell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LstmRepr::from(self.clone()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for LstmCell {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = LstmRepr::deserialize(d)?;
        LstmCell::try_from(repr).map_err(serde::de::Error::custom)
    }
}
