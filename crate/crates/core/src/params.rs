//! Model constants and the quantities derived from them.
//!
//! All values are nondimensional. The coating occupies `(-l, 0)` and the
//! media `(0, 1)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Names accepted by [`validate_params`], in a fixed order.
pub const PARAM_NAMES: [&str; 7] = ["delta", "p_tilde", "pe", "da", "k_part", "phi", "l"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Coating diffusivity.
    pub delta: f64,
    /// Interface permeability (Kedem-Katchalsky coefficient).
    pub p_tilde: f64,
    /// Peclet number of the media.
    pub pe: f64,
    /// Damkohler number (uptake rate).
    pub da: f64,
    /// Partition coefficient between intra- and extracellular drug.
    pub k_part: f64,
    /// Media porosity.
    pub phi: f64,
    /// Coating thickness.
    pub l: f64,
}

impl ModelParams {
    /// Literature values for a sirolimus-type coating.
    pub const fn paper_defaults() -> Self {
        ModelParams {
            delta: 4e-7,
            p_tilde: 4.5e4,
            pe: 0.1044,
            da: 0.0162,
            k_part: 15.0,
            phi: 0.61,
            l: 0.028,
        }
    }

    /// Checks every invariant, reporting the first offending parameter.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.named_values() {
            if !value.is_finite() {
                return Err(Error::InvalidParam {
                    name: name.to_string(),
                    value,
                    reason: "must be finite",
                });
            }
            if name == "phi" {
                if value <= 0.0 || value >= 1.0 {
                    return Err(Error::InvalidParam {
                        name: name.to_string(),
                        value,
                        reason: "must lie strictly between 0 and 1",
                    });
                }
            } else if value <= 0.0 {
                return Err(Error::InvalidParam {
                    name: name.to_string(),
                    value,
                    reason: "must be positive",
                });
            }
        }
        Ok(())
    }

    pub fn named_values(&self) -> [(&'static str, f64); 7] {
        [
            ("delta", self.delta),
            ("p_tilde", self.p_tilde),
            ("pe", self.pe),
            ("da", self.da),
            ("k_part", self.k_part),
            ("phi", self.phi),
            ("l", self.l),
        ]
    }

    /// Interface transfer coefficient `delta * p_tilde`.
    #[inline]
    pub fn transfer(&self) -> f64 {
        self.delta * self.p_tilde
    }
}

/// Builds validated parameters from a name/value map.
///
/// Keys absent from `raw` are an error unless `use_paper_defaults` is set, in
/// which case they take the literature values.
pub fn validate_params(raw: &BTreeMap<String, f64>, use_paper_defaults: bool) -> Result<ModelParams> {
    if let Some(unknown) = raw.keys().find(|k| !PARAM_NAMES.contains(&k.as_str())) {
        return Err(Error::UnknownParam(unknown.clone()));
    }
    let defaults = ModelParams::paper_defaults();
    let get = |name: &str, fallback: f64| -> Result<f64> {
        match raw.get(name) {
            Some(&v) => Ok(v),
            None if use_paper_defaults => Ok(fallback),
            None => Err(Error::MissingParam(name.to_string())),
        }
    };
    let p = ModelParams {
        delta: get("delta", defaults.delta)?,
        p_tilde: get("p_tilde", defaults.p_tilde)?,
        pe: get("pe", defaults.pe)?,
        da: get("da", defaults.da)?,
        k_part: get("k_part", defaults.k_part)?,
        phi: get("phi", defaults.phi)?,
        l: get("l", defaults.l)?,
    };
    p.validate()?;
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// Energy weight `min(phi, 1 - phi) / 2`.
    pub gamma: f64,
    /// Gronwall growth rate `(1 + Da) / (2 gamma)`.
    pub big_m: f64,
    /// Explicit-Euler bound `h_s^2 / (2 delta)` for the coating.
    pub dt_max_s: f64,
    /// Explicit-Euler bound `phi h_m^2 / 2` for the media.
    pub dt_max_m: f64,
}

pub fn derived_constants(p: &ModelParams, h_s: f64, h_m: f64) -> DerivedConstants {
    debug_assert!(h_s > 0.0 && h_m > 0.0);
    let gamma = 0.5 * p.phi.min(1.0 - p.phi);
    DerivedConstants {
        gamma,
        big_m: (1.0 + p.da) / (2.0 * gamma),
        dt_max_s: h_s * h_s / (2.0 * p.delta),
        dt_max_m: p.phi * h_m * h_m / 2.0,
    }
}
