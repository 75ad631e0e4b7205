//! Cavity enhancement of the conversion efficiency, source brightness and
//! the expected count rates of the detection chain.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::materials::HC_EV_NM;
use crate::stack::CavityResonance;

/// Elementary charge, J/eV.
const EV_J: f64 = 1.602_176_634e-19;

#[derive(Debug, Error, PartialEq)]
pub enum EfficiencyError {
    #[error("enhancement undefined for a top-mirror transmittance of zero")]
    DivisionDomain,
    #[error("invalid cavity parameter: {0}")]
    InvalidCavity(String),
    #[error("non-physical input: {0}")]
    NonPhysicalInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Mean effective index of the guided photons.
    pub n: f64,
    pub finesse: f64,
    pub t_up: f64,
    pub t_down: f64,
}

impl CavityParams {
    pub fn from_resonance(res: &CavityResonance, n: f64) -> Self {
        Self {
            n,
            finesse: res.finesse,
            t_up: res.t_up,
            t_down: res.t_down,
        }
    }

    pub fn validate(&self) -> Result<(), EfficiencyError> {
        let bad = |m: String| Err(EfficiencyError::InvalidCavity(m));
        if !(self.n.is_finite() && self.n > 1.0) {
            return bad(format!("mean index {} must exceed 1", self.n));
        }
        if !(self.finesse.is_finite() && self.finesse > 0.0) {
            return bad(format!("finesse {} must be positive", self.finesse));
        }
        if self.t_up == 0.0 {
            return Err(EfficiencyError::DivisionDomain);
        }
        for (name, t) in [("T_up", self.t_up), ("T_down", self.t_down)] {
            if !(t.is_finite() && t > 0.0 && t <= 1.0) {
                return bad(format!("{name} = {t} outside (0, 1]"));
            }
        }
        Ok(())
    }
}

/// `2 (1 + n)^2 / (pi n) * F / (1 + |1 + T_down / T_up|)`.
pub fn enhancement_factor(p: &CavityParams) -> Result<f64, EfficiencyError> {
    p.validate()?;
    let n = p.n;
    let prefactor = 2.0 * (1.0 + n).powi(2) / (std::f64::consts::PI * n);
    Ok(prefactor * p.finesse / (1.0 + (1.0 + p.t_down / p.t_up).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpPulse {
    pub peak_power_w: f64,
    pub duration_ns: f64,
    pub wavelength_nm: f64,
}

impl Default for PumpPulse {
    fn default() -> Self {
        Self {
            peak_power_w: 10.0,
            duration_ns: 150.0,
            wavelength_nm: 760.0,
        }
    }
}

impl PumpPulse {
    pub fn energy_j(&self) -> f64 {
        self.peak_power_w * self.duration_ns * 1e-9
    }

    pub fn photons(&self) -> f64 {
        self.energy_j() / (HC_EV_NM / self.wavelength_nm * EV_J)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Brightness {
    pub pump_photons: f64,
    pub conversion_efficiency: f64,
    /// Illuminated length over the length the efficiency refers to.
    pub length_factor: f64,
    pub pairs_per_pulse: f64,
}

/// Pairs per pulse from the pump photon number and the pair conversion
/// efficiency `eta`, scaled by the illuminated fraction of the sample.
pub fn brightness(pump: &PumpPulse, eta: f64, length_factor: f64) -> Result<Brightness, EfficiencyError> {
    let bad = |m: String| Err(EfficiencyError::NonPhysicalInput(m));
    if !(eta.is_finite() && (0.0..1.0).contains(&eta)) {
        return bad(format!("conversion efficiency {eta} outside [0, 1)"));
    }
    if !(length_factor.is_finite() && length_factor >= 0.0) {
        return bad(format!("length factor {length_factor}"));
    }
    for (name, v) in [
        ("peak power", pump.peak_power_w),
        ("pulse duration", pump.duration_ns),
        ("wavelength", pump.wavelength_nm),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return bad(format!("{name} {v}"));
        }
    }
    let pump_photons = pump.photons();
    Ok(Brightness {
        pump_photons,
        conversion_efficiency: eta,
        length_factor,
        pairs_per_pulse: eta * pump_photons * length_factor,
    })
}

/// Source rates, per-element transmissions and detector figures of the
/// coincidence set-up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionChain {
    /// Mean pairs per pump pulse, all interactions.
    pub pairs_per_pulse: f64,
    /// Share of the pairs produced by the selected interaction.
    pub interaction_share: f64,
    pub pulse_rate_hz: f64,
    pub facet_transmission: f64,
    pub objective_transmission: f64,
    pub filter_transmission: f64,
    pub beam_splitter_transmission: f64,
    pub detector_efficiency: f64,
    /// Dark counts per detector, 1/s.
    pub dark_rate_hz: f64,
    /// Photoluminescence reaching the filter, photons/nm/pulse.
    pub luminescence_per_nm: f64,
    pub filter_bandwidth_nm: f64,
    pub filter_centre_nm: f64,
    pub pulse_duration_ns: f64,
    /// Coincidence window inside the gate.
    pub coincidence_window_ns: f64,
}

impl Default for DetectionChain {
    fn default() -> Self {
        Self {
            pairs_per_pulse: 10.0,
            interaction_share: 0.5,
            pulse_rate_hz: 3000.0,
            facet_transmission: 0.70,
            objective_transmission: 0.70,
            filter_transmission: 0.50,
            beam_splitter_transmission: 0.50,
            detector_efficiency: 0.20,
            dark_rate_hz: 20.0,
            luminescence_per_nm: 0.05,
            filter_bandwidth_nm: 10.0,
            filter_centre_nm: 1520.0,
            pulse_duration_ns: 150.0,
            coincidence_window_ns: 4.0,
        }
    }
}

impl DetectionChain {
    pub fn validate(&self) -> Result<(), EfficiencyError> {
        let probabilities = [
            ("interaction_share", self.interaction_share),
            ("facet_transmission", self.facet_transmission),
            ("objective_transmission", self.objective_transmission),
            ("filter_transmission", self.filter_transmission),
            ("beam_splitter_transmission", self.beam_splitter_transmission),
            ("detector_efficiency", self.detector_efficiency),
        ];
        for (name, p) in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(EfficiencyError::NonPhysicalInput(format!("{name} = {p} outside [0, 1]")));
            }
        }
        let rates = [
            ("pairs_per_pulse", self.pairs_per_pulse),
            ("pulse_rate_hz", self.pulse_rate_hz),
            ("dark_rate_hz", self.dark_rate_hz),
            ("luminescence_per_nm", self.luminescence_per_nm),
            ("filter_bandwidth_nm", self.filter_bandwidth_nm),
            ("coincidence_window_ns", self.coincidence_window_ns),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v >= 0.0) {
                return Err(EfficiencyError::NonPhysicalInput(format!("{name} = {v} must be >= 0")));
            }
        }
        if !(self.pulse_duration_ns > 0.0 && self.coincidence_window_ns <= self.pulse_duration_ns) {
            return Err(EfficiencyError::NonPhysicalInput(format!(
                "coincidence window {} ns must fit in the {} ns pulse",
                self.coincidence_window_ns, self.pulse_duration_ns
            )));
        }
        Ok(())
    }

    /// Product of the element transmissions of one arm.
    pub fn arm_transmission(&self) -> f64 {
        self.facet_transmission * self.objective_transmission * self.filter_transmission * self.beam_splitter_transmission
    }

    /// Probability that a photon entering an arm is counted.
    pub fn detection_probability(&self) -> f64 {
        self.arm_transmission() * self.detector_efficiency
    }
}

/// Expected rates with every intermediate factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountBudget {
    pub arm_transmission: f64,
    pub detection_probability: f64,
    pub selected_pairs_per_pulse: f64,
    pub pair_singles_hz: f64,
    pub luminescence_photons_per_pulse: f64,
    pub luminescence_singles_hz: f64,
    pub dark_rate_hz: f64,
    pub singles_hz: f64,
    pub true_coincidences_hz: f64,
    /// Coincidence window over pulse duration.
    pub gate_fraction: f64,
    pub accidental_coincidences_hz: f64,
    /// Accidentals over total coincidences.
    pub accidental_fraction: f64,
}

/// Singles, true and accidental coincidences per detector pair, with one
/// detection opportunity per pump pulse.
pub fn expected_counts(d: &DetectionChain) -> Result<CountBudget, EfficiencyError> {
    d.validate()?;
    let eta = d.detection_probability();
    let pairs = d.pairs_per_pulse * d.interaction_share;
    let pair_singles = d.pulse_rate_hz * pairs * eta;
    let lum_photons = d.luminescence_per_nm * d.filter_bandwidth_nm;
    let lum_singles = d.pulse_rate_hz * lum_photons * eta;
    let singles = pair_singles + lum_singles + d.dark_rate_hz;
    let true_coinc = d.pulse_rate_hz * pairs * eta * eta;
    let gate_fraction = d.coincidence_window_ns / d.pulse_duration_ns;
    // Per-pulse click probabilities of both detectors falling in one window.
    let accidentals = if d.pulse_rate_hz > 0.0 {
        singles * singles / d.pulse_rate_hz * gate_fraction
    } else {
        0.0
    };
    let total = true_coinc + accidentals;
    Ok(CountBudget {
        arm_transmission: d.arm_transmission(),
        detection_probability: eta,
        selected_pairs_per_pulse: pairs,
        pair_singles_hz: pair_singles,
        luminescence_photons_per_pulse: lum_photons,
        luminescence_singles_hz: lum_singles,
        dark_rate_hz: d.dark_rate_hz,
        singles_hz: singles,
        true_coincidences_hz: true_coinc,
        gate_fraction,
        accidental_coincidences_hz: accidentals,
        accidental_fraction: if total > 0.0 { accidentals / total } else { 0.0 },
    })
}
