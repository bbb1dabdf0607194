//! Piecewise wind-turbine power curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A turbine power curve: zero below cut-in and at/above cut-out, rated
/// power on the rated plateau, cubic ramp in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerCurve {
    /// Cut-in speed (m/s).
    pub cut_in: f64,
    /// Speed (m/s) at which rated power is reached.
    pub rated_speed: f64,
    /// Cut-out speed (m/s); output is zero at and above it.
    pub cut_out: f64,
    /// Rated power (MW).
    pub rated_power: f64,
}

impl PowerCurve {
    pub fn validate(&self) -> Result<()> {
        let ok = self.cut_in >= 0.0
            && self.cut_in < self.rated_speed
            && self.rated_speed < self.cut_out
            && self.rated_power > 0.0
            && [
                self.cut_in,
                self.rated_speed,
                self.cut_out,
                self.rated_power,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid power curve: require 0 <= cut_in < rated_speed < cut_out and \
                 rated_power > 0, got cut_in={}, rated_speed={}, cut_out={}, rated_power={}",
                self.cut_in, self.rated_speed, self.cut_out, self.rated_power
            )))
        }
    }
}

/// Map a wind speed (m/s) to electrical power (MW) through the curve:
/// cubic interpolation `rated * (v^3 - v_ci^3) / (v_r^3 - v_ci^3)` on the
/// ramp, rated power on the plateau, zero outside.
pub fn wind_power_curve(speed: f64, curve: &PowerCurve) -> Result<f64> {
    curve.validate()?;
    if !speed.is_finite() || speed < 0.0 {
        return Err(Error::Domain(format!(
            "wind speed must be non-negative, got {speed}"
        )));
    }
    if speed < curve.cut_in || speed >= curve.cut_out {
        return Ok(0.0);
    }
    if speed >= curve.rated_speed {
        return Ok(curve.rated_power);
    }
    let v3 = speed.powi(3);
    let ci3 = curve.cut_in.powi(3);
    let r3 = curve.rated_speed.powi(3);
    Ok(curve.rated_power * (v3 - ci3) / (r3 - ci3))
}
