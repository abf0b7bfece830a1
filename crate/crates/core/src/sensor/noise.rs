use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Analog noise injected per digitized sample, on the 0–255 intensity scale.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseModel {
    #[default]
    None,
    Gaussian {
        std: f64,
    },
    /// Scaled shot noise: `Poisson(sample * lambda_scale) / lambda_scale`.
    Poisson {
        lambda_scale: f64,
    },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::Gaussian { std } if std >= 0.0 && std.is_finite() => Ok(()),
            NoiseModel::Poisson { lambda_scale } if lambda_scale > 0.0 && lambda_scale.is_finite() => Ok(()),
            ref bad => Err(Error::Config(format!("invalid noise model {bad:?}"))),
        }
    }

    pub fn apply<R: Rng + ?Sized>(&self, sample: f64, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::None => sample,
            NoiseModel::Gaussian { std } => apply_gaussian_noise(sample, std, rng),
            NoiseModel::Poisson { lambda_scale } => apply_poisson_noise(sample, lambda_scale, rng),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            NoiseModel::None => "none".into(),
            NoiseModel::Gaussian { std } => format!("gaussian:{std}"),
            NoiseModel::Poisson { lambda_scale } => format!("poisson:{lambda_scale}"),
        }
    }
}

impl std::str::FromStr for NoiseModel {
    type Err = Error;

    /// `none`, `gaussian:<std>` or `poisson:<lambda_scale>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s.as_str(), None),
        };
        let num = |default: f64| -> Result<f64> {
            arg.map_or(Ok(default), |a| {
                a.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad noise parameter `{a}`")))
            })
        };
        let model = match kind {
            "none" => NoiseModel::None,
            "gaussian" => NoiseModel::Gaussian { std: num(10.0)? },
            "poisson" => NoiseModel::Poisson {
                lambda_scale: num(1.0)?,
            },
            other => return Err(Error::Config(format!("unknown noise model `{other}`"))),
        };
        model.validate()?;
        Ok(model)
    }
}

pub fn apply_gaussian_noise<R: Rng + ?Sized>(sample: f64, std: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    (sample + z * std).clamp(0.0, 255.0)
}

pub fn apply_poisson_noise<R: Rng + ?Sized>(sample: f64, lambda_scale: f64, rng: &mut R) -> f64 {
    let mean = sample * lambda_scale;
    if mean <= 0.0 {
        return 0.0;
    }
    let count: f64 = Poisson::new(mean).expect("positive finite mean").sample(rng);
    (count / lambda_scale).clamp(0.0, 255.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn gaussian_zero_std_is_identity() {
        let mut r = rng::stream(1);
        assert_eq!(apply_gaussian_noise(100.0, 0.0, &mut r), 100.0);
    }

    #[test]
    fn gaussian_moments_match_configuration() {
        let mut r = rng::stream(2024);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| apply_gaussian_noise(128.0, 10.0, &mut r))
            .collect();
        let (mean, var) = moments(&draws);
        assert!((mean - 128.0).abs() < 0.2, "mean {mean}");
        assert!((var.sqrt() - 10.0).abs() < 0.3, "std {}", var.sqrt());
    }

    #[test]
    fn poisson_zero_stays_zero() {
        let mut r = rng::stream(3);
        assert_eq!(apply_poisson_noise(0.0, 1.0, &mut r), 0.0);
    }

    #[test]
    fn poisson_moments_match_shot_noise() {
        let mut r = rng::stream(77);
        let draws: Vec<f64> = (0..100_000).map(|_| apply_poisson_noise(100.0, 1.0, &mut r)).collect();
        let (mean, var) = moments(&draws);
        assert!((mean - 100.0).abs() < 0.5, "mean {mean}");
        assert!((var - 100.0).abs() < 5.0, "var {var}");
    }

    #[test]
    fn noise_is_seed_deterministic() {
        let a = apply_poisson_noise(40.0, 1.0, &mut rng::stream(5));
        let b = apply_poisson_noise(40.0, 1.0, &mut rng::stream(5));
        assert_eq!(a, b);
        let a = apply_gaussian_noise(40.0, 3.0, &mut rng::stream(5));
        let b = apply_gaussian_noise(40.0, 3.0, &mut rng::stream(5));
        assert_eq!(a, b);
    }

    #[test]
    fn parses_cli_labels() {
        assert_eq!("none".parse::<NoiseModel>().unwrap(), NoiseModel::None);
        assert_eq!(
            "gaussian:10".parse::<NoiseModel>().unwrap(),
            NoiseModel::Gaussian { std: 10.0 }
        );
        assert_eq!(
            "Poisson:1".parse::<NoiseModel>().unwrap(),
            NoiseModel::Poisson { lambda_scale: 1.0 }
        );
        assert!("poisson:0".parse::<NoiseModel>().is_err());
        assert!("gaussian:-1".parse::<NoiseModel>().is_err());
        assert!("salt".parse::<NoiseModel>().is_err());
    }
}
