//! Energy-delay product of a proposed system relative to a baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdpInputs {
    pub baseline_gflops: f64,
    pub proposed_gflops: f64,
    pub baseline_ms: f64,
    pub proposed_ms: f64,
    /// Board power in W; needed only for the measured model.
    pub baseline_power_w: Option<f64>,
    pub proposed_power_w: Option<f64>,
    pub idle_power_w: Option<f64>,
}

impl EdpInputs {
    /// Workload, latency and power figures of the reference comparison.
    pub fn reference() -> Self {
        Self {
            baseline_gflops: 1022.0,
            proposed_gflops: 103.0,
            baseline_ms: 180.0,
            proposed_ms: 61.0,
            baseline_power_w: Some(173.2),
            proposed_power_w: Some(113.4),
            idle_power_w: Some(30.0),
        }
    }

    fn check_timing(&self) -> Result<()> {
        for (name, v) in [
            ("baseline GFLOPs", self.baseline_gflops),
            ("proposed GFLOPs", self.proposed_gflops),
            ("baseline ms", self.baseline_ms),
            ("proposed ms", self.proposed_ms),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealEdp {
    pub power_ratio: f64,
    pub edp_ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredEdp {
    /// Ws per frame.
    pub baseline_energy: f64,
    pub proposed_energy: f64,
    pub power_ratio: f64,
    pub edp_ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdpReport {
    pub inputs: EdpInputs,
    pub ideal: IdealEdp,
    pub measured: Option<MeasuredEdp>,
}

/// Equal GFLOPs/W: the power ratio is the workload ratio.
pub fn edp_ideal(inputs: &EdpInputs) -> Result<IdealEdp> {
    inputs.check_timing()?;
    let power_ratio = inputs.baseline_gflops / inputs.proposed_gflops;
    Ok(IdealEdp {
        power_ratio,
        edp_ratio: power_ratio * (inputs.baseline_ms / inputs.proposed_ms),
    })
}

/// Per-frame energy above idle from board power.
pub fn edp_measured(inputs: &EdpInputs) -> Result<MeasuredEdp> {
    inputs.check_timing()?;
    let (Some(pb), Some(pp), Some(idle)) = (inputs.baseline_power_w, inputs.proposed_power_w, inputs.idle_power_w)
    else {
        return Err(Error::InvalidInput(
            "measured EDP needs baseline, proposed and idle power".into(),
        ));
    };
    if !(idle >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "idle power must be non-negative, got {idle}"
        )));
    }
    for (name, board) in [("baseline", pb), ("proposed", pp)] {
        if !(board > idle) {
            return Err(Error::InvalidInput(format!(
                "{name} board power {board} W must exceed idle power {idle} W"
            )));
        }
    }
    let baseline_energy = (pb - idle) * inputs.baseline_ms / 1000.0;
    let proposed_energy = (pp - idle) * inputs.proposed_ms / 1000.0;
    let power_ratio = baseline_energy / proposed_energy;
    Ok(MeasuredEdp {
        baseline_energy,
        proposed_energy,
        power_ratio,
        edp_ratio: power_ratio * (inputs.baseline_ms / inputs.proposed_ms),
    })
}

pub fn edp_report(inputs: &EdpInputs) -> Result<EdpReport> {
    let has_power =
        inputs.baseline_power_w.is_some() || inputs.proposed_power_w.is_some() || inputs.idle_power_w.is_some();
    Ok(EdpReport {
        inputs: *inputs,
        ideal: edp_ideal(inputs)?,
        measured: if has_power { Some(edp_measured(inputs)?) } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn equal_systems_are_unity() {
        let e = EdpInputs {
            baseline_gflops: 50.0,
            proposed_gflops: 50.0,
            baseline_ms: 10.0,
            proposed_ms: 10.0,
            baseline_power_w: Some(80.0),
            proposed_power_w: Some(80.0),
            idle_power_w: Some(20.0),
        };
        assert_eq!(edp_ideal(&e).unwrap().edp_ratio, 1.0);
        assert_eq!(edp_measured(&e).unwrap().edp_ratio, 1.0);
    }

    #[test]
    fn ratio_homogeneity() {
        let e = EdpInputs::reference();
        let scaled = EdpInputs {
            baseline_gflops: 2.0 * e.baseline_gflops,
            proposed_gflops: 2.0 * e.proposed_gflops,
            ..e
        };
        assert_relative_eq!(
            edp_ideal(&e).unwrap().power_ratio,
            edp_ideal(&scaled).unwrap().power_ratio,
            max_relative = 1e-15
        );
    }

    #[test]
    fn idle_equal_to_board_is_rejected() {
        let e = EdpInputs {
            idle_power_w: Some(113.4),
            ..EdpInputs::reference()
        };
        assert!(edp_measured(&e).is_err());
    }

    #[test]
    fn ratio_is_product_of_printed_factors() {
        let e = EdpInputs::reference();
        let i = edp_ideal(&e).unwrap();
        assert_eq!(i.edp_ratio, i.power_ratio * (e.baseline_ms / e.proposed_ms));
    }
}
