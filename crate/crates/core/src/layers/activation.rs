use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::tensor::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::Sigmoid,
        Activation::Relu,
        Activation::Tanh,
        Activation::Linear,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }

    pub fn apply_scalar(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(z),
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative at the pre-activation `z`. `relu'(0)` is 0.
    pub fn deriv_scalar(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Linear => 1.0,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Activation::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown activation `{s}`")))
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn activation_apply(a: Activation, v: &Vector) -> Vector {
    v.map(|z| a.apply_scalar(z))
}

pub fn activation_deriv(a: Activation, pre: &Vector) -> Vector {
    pre.map(|z| a.deriv_scalar(z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(1.0) - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert_eq!(Activation::Relu.apply_scalar(-1.0), 0.0);
        assert_eq!(Activation::Relu.apply_scalar(2.0), 2.0);
        assert_eq!(Activation::Relu.deriv_scalar(0.0), 0.0);
        assert_eq!(Activation::Linear.deriv_scalar(-3.0), 1.0);
        assert_eq!(Activation::Tanh.deriv_scalar(0.0), 1.0);
        assert_eq!(Activation::Sigmoid.deriv_scalar(0.0), 0.25);
    }

    #[test]
    fn sigmoid_saturates_without_nan() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(Activation::Sigmoid.deriv_scalar(-1000.0), 0.0);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let eps = 1e-6;
        for a in [Activation::Sigmoid, Activation::Tanh, Activation::Relu, Activation::Linear] {
            for &z in &[-2.3, -0.4, 0.7, 1.9] {
                let fd = (a.apply_scalar(z + eps) - a.apply_scalar(z - eps)) / (2.0 * eps);
                assert!((fd - a.deriv_scalar(z)).abs() < 1e-8, "{a:?} at {z}");
            }
        }
    }

    #[test]
    fn vector_forms() {
        let v = Vector::from_vec(vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(activation_apply(Activation::Relu, &v).values(), &[0.0, 0.0, 2.0]);
        assert_eq!(activation_deriv(Activation::Relu, &v).values(), &[0.0, 0.0, 1.0]);
        assert_eq!("tanh".parse::<Activation>().unwrap(), Activation::Tanh);
        assert!("gelu".parse::<Activation>().is_err());
    }
}
