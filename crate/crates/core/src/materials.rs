//! Refractive index of Al(x)Ga(1-x)As below the direct band gap.
//!
//! The default model is the modified single-effective-oscillator fit of
//! Afromowitz (Solid State Commun. 15, 59, 1974):
//!
//! ```text
//! eps(E) = 1 + Ed/E0 + Ed E^2/E0^3 + (eta/pi) E^4 ln[(2 E0^2 - Eg^2 - E^2) / (Eg^2 - E^2)]
//! eta    = pi Ed / (2 E0^3 (E0^2 - Eg^2))
//! ```
//!
//! with `E0`, `Ed` and the direct gap `Eg` quadratic in the aluminium
//! fraction. A plain Wemple-DiDomenico oscillator (`eps = 1 + Ed E0 / (E0^2 - E^2)`)
//! is available as a second registered form. Both are lossless: photon
//! energies at or above the direct gap are rejected.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `hc` in eV nm.
pub const HC_EV_NM: f64 = 1239.841_984_332_002_9;

/// Default central-difference step for group indices, in nm.
pub const DEFAULT_GROUP_STEP_NM: f64 = 0.1;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MaterialError {
    #[error("aluminium fraction {0} outside [0, 1]")]
    InvalidComposition(f64),

    #[error(
        "({wavelength_nm} nm, x = {x}) outside the validity window of `{model}` \
         ([{lambda_min_nm}, {lambda_max_nm}] nm, x in [{x_min}, {x_max}])"
    )]
    OutOfValidityWindow {
        model: String,
        wavelength_nm: f64,
        x: f64,
        lambda_min_nm: f64,
        lambda_max_nm: f64,
        x_min: f64,
        x_max: f64,
    },

    #[error("{wavelength_nm} nm is at or above the direct gap of Al{x}GaAs ({gap_ev:.4} eV)")]
    AboveBandgap {
        wavelength_nm: f64,
        x: f64,
        gap_ev: f64,
    },

    #[error("invalid dispersion model: {0}")]
    InvalidModel(String),

    #[error("fixed index {0} must be finite and >= 1")]
    InvalidIndex(f64),
}

/// Aluminium mole fraction of an Al(x)Ga(1-x)As alloy.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Composition(f64);

impl Composition {
    pub fn new(x: f64) -> Result<Self, MaterialError> {
        if x.is_finite() && (0.0..=1.0).contains(&x) {
            Ok(Self(x))
        } else {
            Err(MaterialError::InvalidComposition(x))
        }
    }

    pub fn x(self) -> f64 {
        self.0
    }
}

impl<'de> Deserialize<'de> for Composition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let x = f64::deserialize(d)?;
        Composition::new(x).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Al{:.2}Ga{:.2}As", self.0, 1.0 - self.0)
    }
}

/// Functional form a [`DispersionModel`]'s coefficients plug into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelForm {
    /// Single oscillator plus the direct-gap logarithmic term.
    ModifiedSingleOscillator,
    /// Wemple-DiDomenico single oscillator, no gap term.
    SingleOscillator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityWindow {
    pub lambda_min_nm: f64,
    pub lambda_max_nm: f64,
    pub x_min: f64,
    pub x_max: f64,
}

/// A published index formula with its coefficient table.
///
/// `coefficients` holds three quadratics in `x`, nine numbers in total:
/// `[E0_0, E0_1, E0_2, Ed_0, Ed_1, Ed_2, Eg_0, Eg_1, Eg_2]` (eV).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionModel {
    pub name: String,
    pub form: ModelForm,
    pub coefficients: Vec<f64>,
    pub validity: ValidityWindow,
}

impl Default for DispersionModel {
    fn default() -> Self {
        Self::afromowitz()
    }
}

#[derive(Debug, Clone, Copy)]
struct OscillatorParams {
    e0: f64,
    ed: f64,
    gap: f64,
}

impl DispersionModel {
    pub fn afromowitz() -> Self {
        Self {
            name: "afromowitz-1974".into(),
            form: ModelForm::ModifiedSingleOscillator,
            coefficients: vec![3.65, 0.871, 0.179, 36.1, -2.45, 0.0, 1.424, 1.266, 0.26],
            validity: ValidityWindow {
                lambda_min_nm: 650.0,
                lambda_max_nm: 2000.0,
                x_min: 0.0,
                x_max: 1.0,
            },
        }
    }

    /// Same oscillator parameters without the band-edge term.
    pub fn wemple_didomenico() -> Self {
        Self {
            name: "wemple-didomenico".into(),
            form: ModelForm::SingleOscillator,
            ..Self::afromowitz()
        }
    }

    /// Looks up a built-in model by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "afromowitz" | "afromowitz-1974" => Some(Self::afromowitz()),
            "wemple" | "wemple-didomenico" => Some(Self::wemple_didomenico()),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, MaterialError> {
        let model: Self =
            serde_json::from_str(text).map_err(|e| MaterialError::InvalidModel(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        if self.coefficients.len() != 9 {
            return Err(MaterialError::InvalidModel(format!(
                "expected 9 coefficients, got {}",
                self.coefficients.len()
            )));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(MaterialError::InvalidModel("non-finite coefficient".into()));
        }
        let w = &self.validity;
        if !(w.lambda_min_nm > 0.0 && w.lambda_min_nm < w.lambda_max_nm) {
            return Err(MaterialError::InvalidModel("empty wavelength window".into()));
        }
        if !(0.0 <= w.x_min && w.x_min <= w.x_max && w.x_max <= 1.0) {
            return Err(MaterialError::InvalidModel("bad composition window".into()));
        }
        Ok(())
    }

    fn params(&self, x: f64) -> OscillatorParams {
        let c = &self.coefficients;
        let quad = |o: usize| c[o] + c[o + 1] * x + c[o + 2] * x * x;
        OscillatorParams {
            e0: quad(0),
            ed: quad(3),
            gap: quad(6),
        }
    }

    /// Direct band gap in eV.
    pub fn gap_ev(&self, c: Composition) -> f64 {
        self.params(c.x()).gap
    }

    fn check_window(&self, c: Composition, wavelength_nm: f64) -> Result<(), MaterialError> {
        let w = &self.validity;
        let x = c.x();
        let inside = wavelength_nm >= w.lambda_min_nm
            && wavelength_nm <= w.lambda_max_nm
            && x >= w.x_min
            && x <= w.x_max;
        if inside {
            Ok(())
        } else {
            Err(MaterialError::OutOfValidityWindow {
                model: self.name.clone(),
                wavelength_nm,
                x,
                lambda_min_nm: w.lambda_min_nm,
                lambda_max_nm: w.lambda_max_nm,
                x_min: w.x_min,
                x_max: w.x_max,
            })
        }
    }

    /// Relative permittivity at `wavelength_nm`, real below the gap.
    pub fn permittivity(&self, c: Composition, wavelength_nm: f64) -> Result<f64, MaterialError> {
        self.check_window(c, wavelength_nm)?;
        let p = self.params(c.x());
        let e = HC_EV_NM / wavelength_nm;
        if e >= p.gap {
            return Err(MaterialError::AboveBandgap {
                wavelength_nm,
                x: c.x(),
                gap_ev: p.gap,
            });
        }
        let e2 = e * e;
        let e0_2 = p.e0 * p.e0;
        let eps = match self.form {
            ModelForm::SingleOscillator => 1.0 + p.ed * p.e0 / (e0_2 - e2),
            ModelForm::ModifiedSingleOscillator => {
                let g2 = p.gap * p.gap;
                let eta = std::f64::consts::PI * p.ed / (2.0 * p.e0.powi(3) * (e0_2 - g2));
                let log = ((2.0 * e0_2 - g2 - e2) / (g2 - e2)).ln();
                1.0 + p.ed / p.e0
                    + p.ed * e2 / p.e0.powi(3)
                    + eta / std::f64::consts::PI * e2 * e2 * log
            }
        };
        Ok(eps)
    }

    pub fn refractive_index(&self, c: Composition, wavelength_nm: f64) -> Result<f64, MaterialError> {
        self.permittivity(c, wavelength_nm).map(f64::sqrt)
    }

    /// `n - lambda dn/dlambda` with the default 0.1 nm central difference.
    pub fn group_index(&self, c: Composition, wavelength_nm: f64) -> Result<f64, MaterialError> {
        self.group_index_with_step(c, wavelength_nm, DEFAULT_GROUP_STEP_NM)
    }

    pub fn group_index_with_step(
        &self,
        c: Composition,
        wavelength_nm: f64,
        step_nm: f64,
    ) -> Result<f64, MaterialError> {
        let n = self.refractive_index(c, wavelength_nm)?;
        let hi = self.refractive_index(c, wavelength_nm + step_nm)?;
        let lo = self.refractive_index(c, wavelength_nm - step_nm)?;
        Ok(n - wavelength_nm * (hi - lo) / (2.0 * step_nm))
    }
}

/// Optical medium of a layer or a semi-infinite region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Medium {
    /// Alloy evaluated through the stack's dispersion model.
    Alloy { x: Composition },
    /// Wavelength-independent real index.
    Fixed { index: f64 },
}

impl Medium {
    pub fn alloy(x: f64) -> Result<Self, MaterialError> {
        Ok(Medium::Alloy {
            x: Composition::new(x)?,
        })
    }

    pub fn fixed(index: f64) -> Result<Self, MaterialError> {
        if index.is_finite() && index >= 1.0 {
            Ok(Medium::Fixed { index })
        } else {
            Err(MaterialError::InvalidIndex(index))
        }
    }

    pub fn index(&self, model: &DispersionModel, wavelength_nm: f64) -> Result<f64, MaterialError> {
        match *self {
            Medium::Alloy { x } => model.refractive_index(x, wavelength_nm),
            Medium::Fixed { index } => Ok(index),
        }
    }

    pub fn composition(&self) -> Option<Composition> {
        match *self {
            Medium::Alloy { x } => Some(x),
            Medium::Fixed { .. } => None,
        }
    }
}

impl fmt::Display for Medium {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Medium::Alloy { x } => write!(f, "{x}"),
            Medium::Fixed { index } => write!(f, "n={index}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn al(x: f64) -> Composition {
        Composition::new(x).unwrap()
    }

    // Frozen from a standalone evaluation of the Afromowitz formula
    // (python, math module) with the coefficient table above.
    const N_025_1520: f64 = 3.252_720_214_731_786_6;
    const N_080_1520: f64 = 2.986_467_026_483_608;
    const N_035_760: f64 = 3.447_932_536_081_254_7;
    const N_090_760: f64 = 3.084_654_157_126_889;

    #[test]
    fn composition_range_is_enforced() {
        assert!(Composition::new(-0.01).is_err());
        assert!(Composition::new(1.01).is_err());
        assert!(Composition::new(f64::NAN).is_err());
        assert!(Composition::new(0.0).is_ok());
        assert!(Composition::new(1.0).is_ok());
    }

    #[test]
    fn telecom_indices_match_fixture() {
        let m = DispersionModel::default();
        let a = m.refractive_index(al(0.25), 1520.0).unwrap();
        let b = m.refractive_index(al(0.80), 1520.0).unwrap();
        assert!((a - N_025_1520).abs() < 1e-12, "{a}");
        assert!((b - N_080_1520).abs() < 1e-12, "{b}");
        assert!(a > b);
        for n in [a, b] {
            assert!(n > 2.8 && n < 3.6);
        }
    }

    #[test]
    fn pump_contrast_of_mirror_pair() {
        let m = DispersionModel::default();
        let h = m.refractive_index(al(0.35), 760.0).unwrap();
        let l = m.refractive_index(al(0.90), 760.0).unwrap();
        assert!((h - N_035_760).abs() < 1e-12, "{h}");
        assert!((l - N_090_760).abs() < 1e-12, "{l}");
        assert!(h - l > 0.3);
    }

    #[test]
    fn deterministic_bits() {
        let m = DispersionModel::default();
        let a = m.refractive_index(al(0.42), 1333.3).unwrap();
        let b = m.refractive_index(al(0.42), 1333.3).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn errors_outside_window_and_above_gap() {
        let m = DispersionModel::default();
        assert!(matches!(
            m.refractive_index(al(0.3), 3000.0),
            Err(MaterialError::OutOfValidityWindow { .. })
        ));
        // GaAs absorbs at the pump wavelength.
        assert!(matches!(
            m.refractive_index(al(0.0), 760.0),
            Err(MaterialError::AboveBandgap { .. })
        ));
        assert!(m.refractive_index(al(0.25), 760.0).is_ok());
    }

    #[test]
    fn group_index_exceeds_phase_index() {
        let m = DispersionModel::default();
        for x in [0.0, 0.25, 0.5, 0.9] {
            for lambda in [1300.0, 1520.0, 1700.0] {
                let n = m.refractive_index(al(x), lambda).unwrap();
                let ng = m.group_index(al(x), lambda).unwrap();
                assert!(ng > n, "x={x} lambda={lambda}");
            }
        }
    }

    #[test]
    fn group_index_step_halving() {
        let m = DispersionModel::default();
        let a = m.group_index_with_step(al(0.25), 1520.0, 0.1).unwrap();
        let b = m.group_index_with_step(al(0.25), 1520.0, 0.05).unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    /// Analytic d(eps)/dE of the Afromowitz formula, written out
    /// independently of the evaluation path above.
    fn analytic_group_index(x: f64, lambda: f64) -> f64 {
        use std::f64::consts::PI;
        let e0 = 3.65 + 0.871 * x + 0.179 * x * x;
        let ed = 36.1 - 2.45 * x;
        let g = 1.424 + 1.266 * x + 0.26 * x * x;
        let e = HC_EV_NM / lambda;
        let eta = PI * ed / (2.0 * e0.powi(3) * (e0 * e0 - g * g));
        let a = 2.0 * e0 * e0 - g * g;
        let eps = 1.0
            + ed / e0
            + ed * e * e / e0.powi(3)
            + eta / PI * e.powi(4) * ((a - e * e) / (g * g - e * e)).ln();
        let deps_de = 2.0 * ed * e / e0.powi(3)
            + eta / PI * 4.0 * e.powi(3) * ((a - e * e) / (g * g - e * e)).ln()
            + eta / PI * e.powi(4) * (-2.0 * e / (a - e * e) + 2.0 * e / (g * g - e * e));
        let n = eps.sqrt();
        // n_g = n + E dn/dE
        n + e * deps_de / (2.0 * n)
    }

    #[test]
    fn group_index_matches_analytic_derivative() {
        let m = DispersionModel::default();
        for x in [0.0, 0.35] {
            let fd = m.group_index(al(x), 1520.0).unwrap();
            let exact = analytic_group_index(x, 1520.0);
            assert!((fd - exact).abs() < 1e-6, "x={x}: {fd} vs {exact}");
        }
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let m = DispersionModel::afromowitz();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(DispersionModel::from_json(&text).unwrap(), m);
        let bad = text.replace("0.26]", "0.26, 1.0]");
        assert!(DispersionModel::from_json(&bad).is_err());
    }

    #[test]
    fn second_model_is_lower_near_gap() {
        // Dropping the band-edge term can only lower eps below the gap.
        let a = DispersionModel::afromowitz();
        let w = DispersionModel::wemple_didomenico();
        let na = a.refractive_index(al(0.25), 760.0).unwrap();
        let nw = w.refractive_index(al(0.25), 760.0).unwrap();
        assert!(nw < na);
    }

    proptest! {
        #[test]
        fn index_decreases_with_aluminium(x in 0.0f64..0.89, lambda in 1300.0f64..1700.0) {
            let m = DispersionModel::default();
            let a = m.refractive_index(al(x), lambda).unwrap();
            let b = m.refractive_index(al(x + 0.01), lambda).unwrap();
            prop_assert!(b < a);
        }

        #[test]
        fn index_is_lipschitz_in_wavelength(x in 0.25f64..1.0, lambda in 760.0f64..1990.0) {
            // |dn/dlambda| stays below 2e-3 / nm for x >= 0.25 above 760 nm.
            let m = DispersionModel::default();
            let d = 0.5;
            let a = m.refractive_index(al(x), lambda).unwrap();
            let b = m.refractive_index(al(x), lambda + d).unwrap();
            prop_assert!((a - b).abs() <= 2e-3 * d);
        }

        #[test]
        fn group_difference_converges_quadratically(x in 0.0f64..0.9, lambda in 1300.0f64..1700.0) {
            let m = DispersionModel::default();
            let exact = analytic_group_index(x, lambda);
            let e1 = (m.group_index_with_step(al(x), lambda, 2.0).unwrap() - exact).abs();
            let e2 = (m.group_index_with_step(al(x), lambda, 1.0).unwrap() - exact).abs();
            // Halving h divides the truncation error by ~4.
            prop_assert!(e2 < 0.3 * e1 + 1e-11, "e1={} e2={}", e1, e2);
        }
    }
}
