//! JSON device configuration with dotted-path overrides.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::efficiency::{CavityParams, DetectionChain, PumpPulse};
use crate::hom::{self, DipModel, FitOptions, ScanRates};
use crate::materials::{DispersionModel, MaterialError, Medium};
use crate::phasematch::Interaction;
use crate::spectra::{ConvolutionKernel, FluorescenceOptions, DEFAULT_MARGIN_NM, DEFAULT_STEP_NM};
use crate::stack::{
    Layer, LayerStack, NonlinearSign, Polarization, Region, RegionRole, StackError, GAAS_INDEX_760,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("bad override `{0}`: {1}")]
    Override(String, String),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Stack(#[from] StackError),
}

/// Either a built-in model name or a full coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DispersionChoice {
    Named(String),
    Table(DispersionModel),
}

/// Layer thickness: nanometres or a rule string.
///
/// Rules: `quarter-wave@L` gives `L / (4 n)` with the layer's own index at
/// `L` nm; `mean-quarter-wave@L` uses the mean index of every layer of the
/// region's period that carries the same rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Thickness {
    Nm(f64),
    Rule(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Rule {
    Fixed(f64),
    QuarterWave(f64),
    MeanQuarterWave(f64),
}

impl Thickness {
    fn rule(&self) -> Result<Rule, ConfigError> {
        match self {
            Thickness::Nm(t) => Ok(Rule::Fixed(*t)),
            Thickness::Rule(s) => {
                let bad = || ConfigError::Invalid(format!("unknown thickness rule `{s}`"));
                let (name, lambda) = s.split_once('@').ok_or_else(bad)?;
                let lambda: f64 = lambda.trim().parse().map_err(|_| bad())?;
                if !(lambda.is_finite() && lambda > 0.0) {
                    return Err(bad());
                }
                match name.trim() {
                    "quarter-wave" => Ok(Rule::QuarterWave(lambda)),
                    "mean-quarter-wave" => Ok(Rule::MeanQuarterWave(lambda)),
                    _ => Err(bad()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub medium: Medium,
    pub thickness: Thickness,
    #[serde(default = "zero_sign")]
    pub sign: NonlinearSign,
}

fn zero_sign() -> NonlinearSign {
    NonlinearSign::Zero
}

/// A run of `periods` repetitions of `layers`; fractional periods truncate
/// the last repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub name: String,
    pub role: RegionRole,
    pub periods: f64,
    pub layers: Vec<LayerSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpConfig {
    pub wavelength_nm: f64,
    pub linewidth_nm: f64,
    pub theta_deg: f64,
    pub peak_power_w: f64,
    pub duration_ns: f64,
}

impl Default for PumpConfig {
    fn default() -> Self {
        Self {
            wavelength_nm: 760.0,
            linewidth_nm: 0.3,
            theta_deg: 0.37,
            peak_power_w: 10.0,
            duration_ns: 150.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub theta_deg: f64,
    pub pump_wavelength_nm: f64,
    pub monochromator_nm: f64,
    pub noise_floor: f64,
    /// Defaults to the squared facet reflectance.
    pub long_wavelength_factor: Option<f64>,
    pub interactions: Vec<Interaction>,
    pub step_nm: f64,
    pub margin_nm: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            theta_deg: 3.1,
            pump_wavelength_nm: 759.5,
            monochromator_nm: 0.1,
            noise_floor: 0.02,
            long_wavelength_factor: None,
            interactions: Interaction::BOTH.to_vec(),
            step_nm: DEFAULT_STEP_NM,
            margin_nm: DEFAULT_MARGIN_NM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    pub theta_start_deg: f64,
    pub theta_stop_deg: f64,
    pub theta_step_deg: f64,
    pub pump_wavelength_nm: f64,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            theta_start_deg: -1.0,
            theta_stop_deg: 4.0,
            theta_step_deg: 0.05,
            pump_wavelength_nm: 760.0,
        }
    }
}

/// Wavelength grid of the mode table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesConfig {
    pub start_nm: f64,
    pub stop_nm: f64,
    pub step_nm: f64,
}

impl Default for ModesConfig {
    fn default() -> Self {
        Self {
            start_nm: 1480.0,
            stop_nm: 1560.0,
            step_nm: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StackScanConfig {
    pub start_nm: f64,
    pub stop_nm: f64,
    pub step_nm: f64,
    pub theta_deg: f64,
    pub polarization: Polarization,
    pub resonance_window_nm: (f64, f64),
    pub profile_samples_per_layer: usize,
}

impl Default for StackScanConfig {
    fn default() -> Self {
        Self {
            start_nm: 720.0,
            stop_nm: 800.0,
            step_nm: 0.05,
            theta_deg: 0.0,
            polarization: Polarization::TE,
            resonance_window_nm: (740.0, 780.0),
            profile_samples_per_layer: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomConfig {
    /// Defaults to `1 / (1 + 2 R^2)` of the facet reflectance.
    pub visibility: Option<f64>,
    pub delta_lambda_nm: f64,
    pub wavelength_nm: f64,
    pub start_mm: f64,
    pub stop_mm: f64,
    pub points: usize,
    pub dwell_s: f64,
    /// Defaults to the count budget of the detection chain.
    pub rates: Option<ScanRates>,
    pub fit: FitOptions,
}

impl Default for HomConfig {
    fn default() -> Self {
        Self {
            visibility: None,
            delta_lambda_nm: 0.53,
            wavelength_nm: 1520.0,
            start_mm: -6.0,
            stop_mm: 6.0,
            points: 25,
            dwell_s: 60.0,
            rates: None,
            fit: FitOptions::default(),
        }
    }
}

/// Replaces resonance-derived cavity figures for the enhancement report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityOverride {
    pub n: Option<f64>,
    pub finesse: Option<f64>,
    pub t_up: Option<f64>,
    pub t_down: Option<f64>,
}

impl CavityOverride {
    pub fn is_complete(&self) -> bool {
        self.n.is_some() && self.finesse.is_some() && self.t_up.is_some() && self.t_down.is_some()
    }

    pub fn apply(&self, base: CavityParams) -> CavityParams {
        CavityParams {
            n: self.n.unwrap_or(base.n),
            finesse: self.finesse.unwrap_or(base.finesse),
            t_up: self.t_up.unwrap_or(base.t_up),
            t_down: self.t_down.unwrap_or(base.t_down),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    pub dispersion: DispersionChoice,
    pub ambient_index: f64,
    pub substrate: Medium,
    /// Lower cladding seen by guided modes; the substrate when null.
    pub mode_substrate: Option<Medium>,
    pub regions: Vec<RegionSpec>,
    pub pump: PumpConfig,
    pub sample_length_mm: f64,
    pub illuminated_length_mm: f64,
    pub conversion_efficiency: f64,
    pub facet_reflectance: f64,
    pub spectrum: SpectrumConfig,
    pub tuning: TuningConfig,
    pub stack_scan: StackScanConfig,
    pub modes: ModesConfig,
    pub detection: DetectionChain,
    pub hom: HomConfig,
    pub cavity_override: CavityOverride,
    pub seed: u64,
}

fn alloy(x: f64) -> Medium {
    Medium::alloy(x).expect("valid composition")
}

fn layer(x: f64, thickness: &str, sign: NonlinearSign) -> LayerSpec {
    LayerSpec {
        medium: alloy(x),
        thickness: Thickness::Rule(thickness.into()),
        sign,
    }
}

impl Default for DeviceConfig {
    fn default() -> Self {
        let qw = "quarter-wave@760";
        let mqw = "mean-quarter-wave@760";
        let mirror = |name: &str, role, periods| RegionSpec {
            name: name.into(),
            role,
            periods,
            layers: vec![layer(0.35, qw, NonlinearSign::Zero), layer(0.90, qw, NonlinearSign::Zero)],
        };
        Self {
            dispersion: DispersionChoice::Named("afromowitz".into()),
            ambient_index: 1.0,
            substrate: Medium::Fixed { index: GAAS_INDEX_760 },
            mode_substrate: Some(alloy(0.90)),
            regions: vec![
                mirror("top_dbr", RegionRole::TopMirror, 18.0),
                RegionSpec {
                    name: "core".into(),
                    role: RegionRole::Core,
                    periods: 4.5,
                    layers: vec![layer(0.25, mqw, NonlinearSign::Plus), layer(0.80, mqw, NonlinearSign::Minus)],
                },
                mirror("bottom_dbr", RegionRole::BottomMirror, 41.0),
            ],
            pump: PumpConfig::default(),
            sample_length_mm: 1.0,
            illuminated_length_mm: 0.65,
            conversion_efficiency: 1e-11,
            facet_reflectance: 0.30,
            spectrum: SpectrumConfig::default(),
            tuning: TuningConfig::default(),
            stack_scan: StackScanConfig::default(),
            modes: ModesConfig::default(),
            detection: DetectionChain::default(),
            hom: HomConfig::default(),
            cavity_override: CavityOverride::default(),
            seed: 1,
        }
    }
}

/// Recursive merge: objects merge key by key, everything else replaces.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if !v.is_null() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

/// Parses `key.path=value`. The value is read as JSON when it parses,
/// otherwise as a bare string.
pub fn parse_override(spec: &str) -> Result<(String, Value), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(spec.into(), "expected KEY=VALUE".into()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::Override(spec.into(), "empty key".into()));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().into()));
    Ok((key.into(), value))
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), ConfigError> {
    let err = |m: &str| ConfigError::Override(key.into(), m.into());
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = root;
    for (depth, part) in parts.iter().enumerate() {
        let last = depth + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if !map.contains_key(*part) {
                    return Err(err(&format!("no field `{part}`")));
                }
                let slot = map.get_mut(*part).expect("checked");
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            Value::Array(items) => {
                let i: usize = part.parse().map_err(|_| err(&format!("`{part}` is not an index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(i)
                    .ok_or_else(|| err(&format!("index {i} out of range ({len} items)")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(err(&format!("`{part}` is below a scalar"))),
        };
    }
    unreachable!("loop returns on the last segment")
}

impl DeviceConfig {
    /// Defaults, then the JSON document (if any), then the overrides.
    pub fn load(json: Option<&str>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut value = serde_json::to_value(Self::default()).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if let Some(text) = json {
            let doc: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
            if !doc.is_object() {
                return Err(ConfigError::Parse("top level must be an object".into()));
            }
            merge(&mut value, doc);
        }
        for spec in overrides {
            let (key, v) = parse_override(spec)?;
            set_path(&mut value, &key, v)?;
        }
        let cfg: Self = serde_json::from_value(value).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.regions.is_empty() || self.regions.iter().all(|r| r.layers.is_empty()) {
            return bad("layer list is empty".into());
        }
        for (name, v) in [
            ("sample_length_mm", self.sample_length_mm),
            ("illuminated_length_mm", self.illuminated_length_mm),
            ("pump.wavelength_nm", self.pump.wavelength_nm),
            ("pump.linewidth_nm", self.pump.linewidth_nm),
            ("spectrum.pump_wavelength_nm", self.spectrum.pump_wavelength_nm),
            ("spectrum.monochromator_nm", self.spectrum.monochromator_nm),
            ("tuning.pump_wavelength_nm", self.tuning.pump_wavelength_nm),
            ("hom.dwell_s", self.hom.dwell_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.facet_reflectance) {
            return bad(format!("facet_reflectance {} outside [0, 1)", self.facet_reflectance));
        }
        if self.hom.points < 5 {
            return bad(format!("hom.points = {} (need at least 5)", self.hom.points));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<DispersionModel, ConfigError> {
        match &self.dispersion {
            DispersionChoice::Named(name) => DispersionModel::builtin(name)
                .ok_or_else(|| ConfigError::Invalid(format!("unknown dispersion model `{name}`"))),
            DispersionChoice::Table(m) => {
                m.validate()?;
                Ok(m.clone())
            }
        }
    }

    pub fn build_stack(&self) -> Result<LayerStack, ConfigError> {
        let model = self.model()?;
        let mut layers = Vec::new();
        let mut regions = Vec::new();
        for spec in &self.regions {
            let per = spec.layers.len();
            if per == 0 {
                return Err(ConfigError::Invalid(format!("region `{}` has no layers", spec.name)));
            }
            let count = spec.periods * per as f64;
            if !(count.is_finite() && count >= 1.0 && (count - count.round()).abs() < 1e-9) {
                return Err(ConfigError::Invalid(format!(
                    "region `{}`: {} periods of {per} layers is not a whole layer count",
                    spec.name, spec.periods
                )));
            }
            let rules: Vec<Rule> = spec.layers.iter().map(|l| l.thickness.rule()).collect::<Result<_, _>>()?;
            let thickness = |i: usize| -> Result<f64, ConfigError> {
                Ok(match rules[i] {
                    Rule::Fixed(t) => t,
                    Rule::QuarterWave(l) => l / (4.0 * spec.layers[i].medium.index(&model, l)?),
                    Rule::MeanQuarterWave(l) => {
                        let (mut sum, mut n) = (0.0, 0.0);
                        for (j, r) in rules.iter().enumerate() {
                            if *r == rules[i] {
                                sum += spec.layers[j].medium.index(&model, l)?;
                                n += 1.0;
                            }
                        }
                        l / (4.0 * (sum / n))
                    }
                })
            };
            let start = layers.len();
            let count = count.round() as usize;
            for k in 0..count {
                let i = k % per;
                let l = &spec.layers[i];
                layers.push(Layer::with_sign(l.medium, thickness(i)?, l.sign)?);
            }
            regions.push(Region {
                name: spec.name.clone(),
                role: spec.role,
                start,
                len: count,
                layers_per_period: per,
                periods: spec.periods,
            });
        }
        let mut stack = LayerStack::new(self.ambient_index, layers, self.substrate, model)?.with_regions(regions)?;
        stack.guide_substrate = self.mode_substrate;
        Ok(stack)
    }

    pub fn pump_pulse(&self) -> PumpPulse {
        PumpPulse {
            peak_power_w: self.pump.peak_power_w,
            duration_ns: self.pump.duration_ns,
            wavelength_nm: self.pump.wavelength_nm,
        }
    }

    pub fn fluorescence_options(&self) -> Result<FluorescenceOptions, ConfigError> {
        let kernel = |w: f64| ConvolutionKernel::gaussian(w).map_err(|e| ConfigError::Invalid(e.to_string()));
        Ok(FluorescenceOptions {
            length_mm: self.sample_length_mm,
            kernels: vec![kernel(self.pump.linewidth_nm)?, kernel(self.spectrum.monochromator_nm)?],
            noise_floor: self.spectrum.noise_floor,
            long_wavelength_factor: self.spectrum.long_wavelength_factor.unwrap_or(self.facet_reflectance.powi(2)),
            interactions: self.spectrum.interactions.clone(),
            step_nm: self.spectrum.step_nm,
            margin_nm: self.spectrum.margin_nm,
        })
    }

    pub fn dip_model(&self) -> Result<DipModel, ConfigError> {
        let visibility = match self.hom.visibility {
            Some(v) => v,
            None => hom::visibility_from_reflectivity(self.facet_reflectance)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?,
        };
        let m = DipModel {
            visibility,
            wavelength_nm: self.hom.wavelength_nm,
            delta_lambda_nm: self.hom.delta_lambda_nm,
        };
        m.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(m)
    }

    pub fn scan_rates(&self) -> Result<ScanRates, ConfigError> {
        match self.hom.rates {
            Some(r) => Ok(r),
            None => crate::efficiency::expected_counts(&self.detection)
                .map(|b| ScanRates::from(&b))
                .map_err(|e| ConfigError::Invalid(e.to_string())),
        }
    }

    /// SHA-256 of the canonical JSON form, hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stack::{build_nominal_stack, StackDesign};

    #[test]
    fn default_config_builds_nominal_stack() {
        let cfg = DeviceConfig::default();
        assert_eq!(cfg.build_stack().unwrap(), build_nominal_stack(&StackDesign::default()).unwrap());
    }

    #[test]
    fn json_round_trip_and_overrides() {
        let text = serde_json::to_string_pretty(&DeviceConfig::default()).unwrap();
        let cfg = DeviceConfig::load(Some(&text), &[]).unwrap();
        assert_eq!(cfg, DeviceConfig::default());
        assert_eq!(cfg.hash(), DeviceConfig::default().hash());

        let cfg = DeviceConfig::load(None, &["hom.dwell_s=30".into(), "regions.1.periods=3.5".into()]).unwrap();
        assert_eq!(cfg.hom.dwell_s, 30.0);
        assert_eq!(cfg.build_stack().unwrap().layers.len(), 36 + 7 + 82);
        assert_ne!(cfg.hash(), DeviceConfig::default().hash());

        let cfg = DeviceConfig::load(None, &["dispersion=wemple".into()]).unwrap();
        assert_eq!(cfg.model().unwrap().name, "wemple-didomenico");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(DeviceConfig::load(None, &["nope=1".into()]), Err(ConfigError::Override(..))));
        assert!(matches!(DeviceConfig::load(Some("{\"typo\": 1}"), &[]), Err(ConfigError::Parse(_))));
        assert!(matches!(DeviceConfig::load(Some("{\"regions\": []}"), &[]), Err(ConfigError::Invalid(_))));
        let cfg = DeviceConfig::load(None, &["regions.0.layers.0.thickness=\"half-wave@760\"".into()]).unwrap();
        assert!(cfg.build_stack().is_err());
    }

    #[test]
    fn explicit_thickness_and_fixed_media() {
        let doc = r#"{"regions": [
            {"name": "a", "role": "top_mirror", "periods": 1,
             "layers": [{"medium": {"index": 3.5}, "thickness": 100.0}, {"medium": {"x": 0.9}, "thickness": 120.5}]},
            {"name": "c", "role": "core", "periods": 0.5,
             "layers": [{"medium": {"x": 0.25}, "thickness": "quarter-wave@760", "sign": 1}, {"medium": {"x": 0.8}, "thickness": 50, "sign": -1}]}
        ]}"#;
        let s = DeviceConfig::load(Some(doc), &[]).unwrap().build_stack().unwrap();
        assert_eq!(s.layers.len(), 3);
        assert_eq!(s.layers[0].thickness_nm, 100.0);
        let n = s.model.refractive_index(crate::materials::Composition::new(0.25).unwrap(), 760.0).unwrap();
        assert!((s.layers[2].thickness_nm - 760.0 / (4.0 * n)).abs() < 1e-12);
    }
}
