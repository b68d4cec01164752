//! Ordered sample series with unit tags.
//!
//! One container carries every 1-D measurement the library consumes:
//! IV curves (mV, nA), differential conductance (mV, 1/kΩ), time-domain
//! decays (µs, population), and probe-map resistances (nm, Ω).

use crate::error::{Error, Result};

/// Unit of the abscissa samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XUnit {
    /// Bias voltage (mV).
    Millivolts,
    /// Pulse delay (µs).
    Microseconds,
    /// Electrode dimension (nm).
    Nanometers,
}

/// Unit of the ordinate samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YUnit {
    /// Tunnel current (nA).
    Nanoamps,
    /// Excited-state population (dimensionless, nominally 0..1).
    Population,
    /// Resistance (Ω).
    Ohms,
    /// Differential conductance dI/dV (1/kΩ).
    InverseKiloohms,
}

/// Immutable ordered (x, y) series.
///
/// Invariants enforced at construction: equal lengths ≥ 4, strictly
/// increasing finite x, finite y.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrace {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Unit of `x`.
    pub x_unit: XUnit,
    /// Unit of `y`.
    pub y_unit: YUnit,
    /// Sample temperature (K), when the series was taken at a fixed one.
    pub temperature_k: Option<f64>,
    /// Free-form labels (key, value), e.g. ("die", "3,4").
    pub meta: Vec<(String, String)>,
}

impl SampledTrace {
    /// Build a trace, validating the container invariants.
    pub fn new(x: Vec<f64>, y: Vec<f64>, x_unit: XUnit, y_unit: YUnit) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Data(format!(
                "x has {} samples, y has {}",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 4 {
            return Err(Error::Data(format!(
                "need at least 4 samples, got {}",
                x.len()
            )));
        }
        if let Some(v) = x.iter().chain(y.iter()).find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite sample {v}")));
        }
        if let Some(w) = x.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Data(format!(
                "x must be strictly increasing, found {} after {}",
                w[1], w[0]
            )));
        }
        Ok(Self {
            x,
            y,
            x_unit,
            y_unit,
            temperature_k: None,
            meta: Vec::new(),
        })
    }

    /// Attach the temperature the series was measured at.
    pub fn with_temperature(mut self, kelvin: f64) -> Result<Self> {
        if !(kelvin > 0.0) || !kelvin.is_finite() {
            return Err(Error::Parameter(format!(
                "temperature must be positive and finite, got {kelvin} K"
            )));
        }
        self.temperature_k = Some(kelvin);
        Ok(self)
    }

    /// Abscissa samples (strictly increasing).
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Ordinate samples, same length as [`Self::x`].
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.x.len()
    }

    /// Always false: construction requires ≥ 4 samples.
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}
