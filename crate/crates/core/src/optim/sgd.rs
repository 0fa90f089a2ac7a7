use crate::error::{Error, Result};
use crate::layers::{blocks, BlockInfo, ParamKind, Parameters};

/// Classical momentum SGD:
///
/// ```text
/// v ← μ v − η Δ
/// θ ← θ + v
/// ```
///
/// Betas are updated by the same rule and learning rate as weights and
/// biases, unless `freeze_betas` is set.
#[derive(Debug, Clone)]
pub struct SgdState {
    lr: f64,
    momentum: f64,
    freeze_betas: bool,
    layout: Vec<BlockInfo>,
    velocity: Vec<Vec<f64>>,
}

impl SgdState {
    pub fn new(model: &impl Parameters, lr: f64, momentum: f64) -> Result<Self> {
        check_lr(lr)?;
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::InvalidArgument(format!("momentum must lie in [0, 1), got {momentum}")));
        }
        let layout = blocks(model);
        let velocity = layout.iter().map(|b| vec![0.0; b.len]).collect();
        Ok(SgdState {
            lr,
            momentum,
            freeze_betas: false,
            layout,
            velocity,
        })
    }

    /// Keeps every beta at its current value; weight and bias updates are unaffected.
    pub fn with_frozen_betas(mut self, freeze: bool) -> Self {
        self.freeze_betas = freeze;
        self
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn set_lr(&mut self, lr: f64) -> Result<()> {
        check_lr(lr)?;
        self.lr = lr;
        Ok(())
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    pub fn velocity(&self) -> &[Vec<f64>] {
        &self.velocity
    }
}

fn check_lr(lr: f64) -> Result<()> {
    if lr > 0.0 && lr.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("learning rate must be positive, got {lr}")))
    }
}

fn collect_grads(grads: &impl Parameters, layout: &[BlockInfo]) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(layout.len());
    let mut names = Vec::with_capacity(layout.len());
    grads.visit(&mut |name, kind, values| {
        names.push((name.to_string(), kind, values.len()));
        out.push(values.to_vec());
    });
    let mirrors = names.len() == layout.len()
        && names
            .iter()
            .zip(layout)
            .all(|((n, k, l), b)| *n == b.name && *k == b.kind && *l == b.len);
    if !mirrors {
        return Err(Error::shape(
            "sgd_step",
            format!("{} parameter blocks", layout.len()),
            format!("{} gradient blocks", names.len()),
        ));
    }
    for ((name, _, _), values) in names.iter().zip(&out) {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of {name}[{i}]")));
        }
    }
    Ok(out)
}

/// Applies one momentum step. Nothing is modified if any gradient entry is
/// non-finite; the error names the offending parameter.
pub fn sgd_step(params: &mut impl Parameters, grads: &impl Parameters, state: &mut SgdState) -> Result<()> {
    let grads = collect_grads(grads, &state.layout)?;
    let (lr, mu, freeze) = (state.lr, state.momentum, state.freeze_betas);
    let mut block = 0;
    let velocity = &mut state.velocity;
    params.visit_mut(&mut |_, kind, values| {
        if !(freeze && kind == ParamKind::Beta) {
            let v = &mut velocity[block];
            for ((theta, vel), &g) in values.iter_mut().zip(v.iter_mut()).zip(&grads[block]) {
                *vel = mu * *vel - lr * g;
                *theta += *vel;
            }
        }
        block += 1;
    });
    Ok(())
}

/// `θ ← θ − η Δ` with no state, the momentum-free reference rule.
pub fn gradient_descent_step(params: &mut impl Parameters, grads: &impl Parameters, lr: f64) -> Result<()> {
    check_lr(lr)?;
    let layout = blocks(params);
    let grads = collect_grads(grads, &layout)?;
    let mut block = 0;
    params.visit_mut(&mut |_, _, values| {
        for (theta, &g) in values.iter_mut().zip(&grads[block]) {
            *theta -= lr * g;
        }
        block += 1;
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::{
        lstm_backward, lstm_forward, Activation, AffineLayer, LstmCell, StabilizerMode,
        Transform,
    };
    use crate::tensor::{Matrix, Rng, Vector};

    /// A bare parameter vector for exercising the update rule.
    #[derive(Debug, Clone, PartialEq)]
    struct Theta(Vec<f64>);

    impl Parameters for Theta {
        fn visit(&self, f: &mut dyn FnMut(&str, ParamKind, &[f64])) {
            f("theta", ParamKind::Weight, &self.0);
        }
        fn visit_mut(&mut self, f: &mut dyn FnMut(&str, ParamKind, &mut [f64])) {
            f("theta", ParamKind::Weight, &mut self.0);
        }
    }

    #[test]
    fn plain_rule_without_momentum() {
        let mut theta = Theta(vec![1.0]);
        let mut state = SgdState::new(&theta, 0.1, 0.0).unwrap();
        sgd_step(&mut theta, &Theta(vec![2.0]), &mut state).unwrap();
        assert!((theta.0[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut theta = Theta(vec![1.0, -2.0, 3.5]);
        let mut state = SgdState::new(&theta, 0.5, 0.9).unwrap();
        sgd_step(&mut theta, &Theta(vec![0.0; 3]), &mut state).unwrap();
        assert_eq!(theta.0, vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn momentum_recurrence() {
        let mut theta = Theta(vec![1.0]);
        let mut state = SgdState::new(&theta, 0.1, 0.9).unwrap();
        let g = Theta(vec![2.0]);
        sgd_step(&mut theta, &g, &mut state).unwrap();
        assert!((theta.0[0] - 0.8).abs() < 1e-15);
        assert!((state.velocity()[0][0] + 0.2).abs() < 1e-15);
        sgd_step(&mut theta, &g, &mut state).unwrap();
        assert!((theta.0[0] - 0.42).abs() < 1e-15);
        assert!((state.velocity()[0][0] + 0.38).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_aborts_without_update() {
        let mut theta = Theta(vec![1.0, 2.0]);
        let mut state = SgdState::new(&theta, 0.1, 0.0).unwrap();
        let err = sgd_step(&mut theta, &Theta(vec![0.5, f64::NAN]), &mut state).unwrap_err();
        assert!(err.to_string().contains("theta[1]"), "{err}");
        assert_eq!(theta.0, vec![1.0, 2.0]);
    }

    #[test]
    fn rejects_bad_hyperparameters_and_shapes() {
        let theta = Theta(vec![1.0]);
        assert!(SgdState::new(&theta, 0.0, 0.0).is_err());
        assert!(SgdState::new(&theta, 0.1, 1.0).is_err());
        let mut state = SgdState::new(&theta, 0.1, 0.0).unwrap();
        assert!(state.set_lr(-1.0).is_err());
        let mut theta = theta;
        assert!(sgd_step(&mut theta, &Theta(vec![1.0, 2.0]), &mut state).is_err());
    }

    #[test]
    fn momentum_free_step_matches_plain_descent_bitwise() {
        let mut rng = Rng::new(6);
        for _ in 0..20 {
            let start: Vec<f64> = (0..16).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let mut a = Theta(start.clone());
            let mut b = Theta(start);
            let mut state = SgdState::new(&a, 0.037, 0.0).unwrap();
            for _ in 0..5 {
                let g = Theta((0..16).map(|_| rng.uniform(-2.0, 2.0)).collect());
                sgd_step(&mut a, &g, &mut state).unwrap();
                gradient_descent_step(&mut b, &g, 0.037).unwrap();
            }
            let bits = |t: &Theta| t.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a), bits(&b));
        }
    }

    #[test]
    fn shared_betas_stay_equal_after_updates() {
        let mut rng = Rng::new(12);
        for mode in [StabilizerMode::LayerShared, StabilizerMode::GateShared] {
            let mut cell = LstmCell::init(3, 4, mode, 0.5, &mut rng).unwrap();
            let mut state = SgdState::new(&cell, 0.3, 0.9).unwrap();
            let xs: Vec<Vector> = (0..4)
                .map(|_| Vector::from_vec((0..3).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap())
                .collect();
            let dh: Vec<Vector> = (0..4)
                .map(|_| Vector::from_vec((0..4).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap())
                .collect();
            for _ in 0..10 {
                let caches = lstm_forward(&cell, &xs).unwrap();
                let (g, _) = lstm_backward(&cell, &caches, &dh).unwrap();
                sgd_step(&mut cell, &g, &mut state).unwrap();
            }
            let betas = cell.betas();
            assert!(betas.iter().any(|&b| b != 0.0));
            for t in Transform::ALL {
                let peers = Transform::ALL.iter().filter(|u| match mode {
                    StabilizerMode::LayerShared => true,
                    _ => u.gate() == t.gate(),
                });
                for u in peers {
                    assert_eq!(betas[t.index()], betas[u.index()]);
                }
            }
        }
    }

    #[test]
    fn frozen_betas_do_not_move() {
        let mut layer = AffineLayer::new(
            Matrix::identity(2),
            Vector::zeros(2),
            StabilizerMode::Independent,
            Activation::Linear,
        )
        .unwrap();
        let mut grads = layer.zero_grads();
        grads.beta = 1.0;
        grads.bias = Vector::from_vec(vec![1.0, 1.0]).unwrap();
        let mut state = SgdState::new(&layer, 0.1, 0.0).unwrap().with_frozen_betas(true);
        sgd_step(&mut layer, &grads, &mut state).unwrap();
        assert_eq!(layer.beta(), 0.0);
        assert!((layer.bias().get(0) + 0.1).abs() < 1e-15);
    }
}
