//! Constant-velocity Kalman filter in (center-x, center-y, aspect, height)
//! image space, with noise scaled by the current box height.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;

pub type StateVector = SVector<f64, 8>;
pub type StateCovariance = SMatrix<f64, 8, 8>;
pub type Measurement = SVector<f64, 4>;

#[derive(Clone, Debug, PartialEq)]
pub struct KalmanState {
    pub mean: StateVector,
    pub covariance: StateCovariance,
}

impl KalmanState {
    pub fn bbox(&self) -> BBox {
        BBox::from_xyah([self.mean[0], self.mean[1], self.mean[2], self.mean[3]])
    }

    pub fn is_finite(&self) -> bool {
        self.mean.iter().all(|v| v.is_finite()) && self.covariance.iter().all(|v| v.is_finite())
    }

    /// Velocity of the box center in px/frame.
    pub fn velocity(&self) -> (f64, f64) {
        (self.mean[4], self.mean[5])
    }
}

/// Which block of the covariance feeds the tracking-uncertainty score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeterminantScope {
    /// Full 8×8 state covariance.
    Full,
    /// 4×4 block over (u, v, a, h).
    #[default]
    Positional,
}

impl DeterminantScope {
    pub fn determinant(self, cov: &StateCovariance) -> f64 {
        match self {
            DeterminantScope::Full => cov.determinant(),
            DeterminantScope::Positional => cov.fixed_view::<4, 4>(0, 0).into_owned().determinant(),
        }
    }
}

/// Constant-velocity transition: position components advance by their velocities.
pub fn transition() -> StateCovariance {
    let mut f = StateCovariance::identity();
    for i in 0..4 {
        f[(i, i + 4)] = 1.0;
    }
    f
}

fn observation() -> SMatrix<f64, 4, 8> {
    let mut h = SMatrix::<f64, 4, 8>::zeros();
    for i in 0..4 {
        h[(i, i)] = 1.0;
    }
    h
}

/// `mean' = F mean`, `cov' = F cov Fᵀ + q`.
pub fn propagate(state: &KalmanState, q: &StateCovariance) -> KalmanState {
    let f = transition();
    KalmanState {
        mean: f * state.mean,
        covariance: symmetrize(f * state.covariance * f.transpose() + q),
    }
}

fn symmetrize<const N: usize>(m: SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (m + m.transpose()) * 0.5
}

/// Linear Kalman correction with the Joseph-form covariance update.
///
/// Returns the posterior mean, covariance and the gain. Fails when the
/// innovation covariance is not positive definite.
#[allow(clippy::type_complexity)]
pub fn correct<const N: usize, const M: usize>(
    mean: &SVector<f64, N>,
    cov: &SMatrix<f64, N, N>,
    h: &SMatrix<f64, M, N>,
    r: &SMatrix<f64, M, M>,
    z: &SVector<f64, M>,
) -> Result<(SVector<f64, N>, SMatrix<f64, N, N>, SMatrix<f64, N, M>)> {
    let s = symmetrize(h * cov * h.transpose() + r);
    let chol = s
        .cholesky()
        .ok_or_else(|| Error::Numerical("innovation covariance is singular".into()))?;
    let gain = chol.solve(&(h * cov)).transpose();
    let innovation = z - h * mean;
    let new_mean = mean + gain * innovation;
    let i_kh = SMatrix::<f64, N, N>::identity() - gain * h;
    let new_cov = symmetrize(i_kh * cov * i_kh.transpose() + gain * r * gain.transpose());
    Ok((new_mean, new_cov, gain))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KalmanFilter {
    pub std_weight_position: f64,
    pub std_weight_velocity: f64,
    /// Multiplier on the measurement variance.
    pub measurement_noise_scale: f64,
}

impl Default for KalmanFilter {
    fn default() -> Self {
        Self {
            std_weight_position: 1.0 / 20.0,
            std_weight_velocity: 1.0 / 160.0,
            measurement_noise_scale: 1.0,
        }
    }
}

impl KalmanFilter {
    pub fn initiate(&self, bbox: &BBox) -> Result<KalmanState> {
        let z = measurement(bbox)?;
        let h = z[3];
        let (p, v) = (self.std_weight_position * h, self.std_weight_velocity * h);
        let std = [2.0 * p, 2.0 * p, 1e-2, 2.0 * p, 10.0 * v, 10.0 * v, 1e-5, 10.0 * v];
        let mut mean = StateVector::zeros();
        mean.fixed_rows_mut::<4>(0).copy_from(&z);
        Ok(KalmanState {
            mean,
            covariance: StateCovariance::from_diagonal(&StateVector::from_iterator(std.iter().map(|s| s * s))),
        })
    }

    pub fn process_noise(&self, state: &KalmanState) -> StateCovariance {
        let h = state.mean[3];
        let (p, v) = (self.std_weight_position * h, self.std_weight_velocity * h);
        let std = [p, p, 1e-2, p, v, v, 1e-5, v];
        StateCovariance::from_diagonal(&StateVector::from_iterator(std.iter().map(|s| s * s)))
    }

    fn measurement_noise(&self, state: &KalmanState) -> SMatrix<f64, 4, 4> {
        let p = self.std_weight_position * state.mean[3];
        let std = [p, p, 1e-1, p];
        SMatrix::<f64, 4, 4>::from_diagonal(&Measurement::from_iterator(
            std.iter().map(|s| s * s * self.measurement_noise_scale),
        ))
    }

    pub fn predict(&self, state: &KalmanState) -> Result<KalmanState> {
        if !state.is_finite() {
            return Err(Error::Numerical("non-finite Kalman state".into()));
        }
        Ok(propagate(state, &self.process_noise(state)))
    }

    pub fn update(&self, state: &KalmanState, bbox: &BBox) -> Result<KalmanState> {
        if !state.is_finite() {
            return Err(Error::Numerical("non-finite Kalman state".into()));
        }
        let z = measurement(bbox)?;
        let r = self.measurement_noise(state);
        let (mean, covariance, _) = correct(&state.mean, &state.covariance, &observation(), &r, &z)?;
        Ok(KalmanState { mean, covariance })
    }
}

fn measurement(bbox: &BBox) -> Result<Measurement> {
    if !(bbox.w > 0.0 && bbox.h > 0.0) || !bbox.is_finite() {
        return Err(Error::InvalidInput(format!(
            "measurement box {bbox:?} must have positive size"
        )));
    }
    Ok(Measurement::from(bbox.to_xyah()))
}
