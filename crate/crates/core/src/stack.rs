//! One-dimensional transfer-matrix optics of the epitaxial stack.
//!
//! Layers are listed top (ambient side) to bottom (substrate side). The
//! engine uses the characteristic-matrix formalism: tangential fields at
//! the top of a layer follow from those at its bottom through
//!
//! ```text
//! | E |       | cos d       i sin d / y |   | E |
//! | H |top  = | i y sin d   cos d       | . | H |bottom
//! ```
//!
//! where `d = k0 q t` is the layer phase thickness, `q = sqrt(n^2 - b^2)`
//! with `b` the conserved in-plane index, and `y` the tilted admittance
//! (`q` for TE, `n^2 / q` for TM), in units of the free-space admittance.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::materials::{DispersionModel, MaterialError, Medium};
use crate::roots::golden_min;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    TE,
    TM,
}

impl Polarization {
    pub fn other(self) -> Self {
        match self {
            Polarization::TE => Polarization::TM,
            Polarization::TM => Polarization::TE,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::TE => "TE",
            Polarization::TM => "TM",
        })
    }
}

impl std::str::FromStr for Polarization {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "TE" => Ok(Polarization::TE),
            "TM" => Ok(Polarization::TM),
            other => Err(format!("unknown polarization `{other}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum StackError {
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("invalid design parameters: {0}")]
    InvalidDesignParams(String),
    #[error("invalid layer stack: {0}")]
    InvalidStack(String),
    #[error("stack has no {0:?} region")]
    MissingRegion(RegionRole),
    #[error("no reflectance dip in [{0}, {1}] nm")]
    NoResonanceInWindow(f64, f64),
    #[error("{count} comparable reflectance dips in [{lo}, {hi}] nm")]
    MultipleResonances { count: usize, lo: f64, hi: f64 },
    #[error("resonance linewidth not resolved inside the window")]
    UnresolvedLinewidth,
}

/// Sign of the effective second-order susceptibility of a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum NonlinearSign {
    Minus,
    Zero,
    Plus,
}

impl TryFrom<i8> for NonlinearSign {
    type Error = String;
    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            -1 => Ok(Self::Minus),
            0 => Ok(Self::Zero),
            1 => Ok(Self::Plus),
            _ => Err(format!("nonlinear sign must be -1, 0 or 1, got {v}")),
        }
    }
}

impl From<NonlinearSign> for i8 {
    fn from(s: NonlinearSign) -> i8 {
        match s {
            NonlinearSign::Minus => -1,
            NonlinearSign::Zero => 0,
            NonlinearSign::Plus => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub medium: Medium,
    pub thickness_nm: f64,
    pub nonlinear_sign: NonlinearSign,
}

impl Layer {
    pub fn new(medium: Medium, thickness_nm: f64) -> Result<Self, StackError> {
        Self::with_sign(medium, thickness_nm, NonlinearSign::Zero)
    }

    pub fn with_sign(
        medium: Medium,
        thickness_nm: f64,
        nonlinear_sign: NonlinearSign,
    ) -> Result<Self, StackError> {
        if !(thickness_nm.is_finite() && thickness_nm > 0.0) {
            return Err(StackError::InvalidStack(format!(
                "layer thickness {thickness_nm} nm must be positive"
            )));
        }
        Ok(Self {
            medium,
            thickness_nm,
            nonlinear_sign,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionRole {
    TopMirror,
    Core,
    BottomMirror,
    Other,
}

/// Named contiguous run of layers made of repeated periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub role: RegionRole,
    pub start: usize,
    pub len: usize,
    pub layers_per_period: usize,
    pub periods: f64,
}

impl Region {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    pub ambient_index: f64,
    pub layers: Vec<Layer>,
    pub substrate: Medium,
    /// Semi-infinite medium seen below the stack by guided modes; falls
    /// back to `substrate` when unset.
    pub guide_substrate: Option<Medium>,
    pub regions: Vec<Region>,
    pub model: DispersionModel,
}

impl LayerStack {
    pub fn new(
        ambient_index: f64,
        layers: Vec<Layer>,
        substrate: Medium,
        model: DispersionModel,
    ) -> Result<Self, StackError> {
        let s = Self {
            ambient_index,
            layers,
            substrate,
            guide_substrate: None,
            regions: Vec::new(),
            model,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_regions(mut self, regions: Vec<Region>) -> Result<Self, StackError> {
        self.regions = regions;
        self.validate()?;
        Ok(self)
    }

    pub fn with_guide_substrate(mut self, medium: Medium) -> Self {
        self.guide_substrate = Some(medium);
        self
    }

    pub fn validate(&self) -> Result<(), StackError> {
        let bad = |m: String| Err(StackError::InvalidStack(m));
        if !(self.ambient_index.is_finite() && self.ambient_index >= 1.0) {
            return bad(format!("ambient index {} must be >= 1", self.ambient_index));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.thickness_nm.is_finite() && l.thickness_nm > 0.0) {
                return bad(format!("layer {i} has thickness {}", l.thickness_nm));
            }
        }
        if self.regions.is_empty() {
            return Ok(());
        }
        let mut next = 0;
        for r in &self.regions {
            if r.start != next || r.len == 0 {
                return bad(format!("region `{}` does not continue the partition", r.name));
            }
            let expected = r.periods * r.layers_per_period as f64;
            if r.layers_per_period == 0 || (expected - r.len as f64).abs() > 1e-9 {
                return bad(format!(
                    "region `{}`: {} periods of {} layers != {} layers",
                    r.name, r.periods, r.layers_per_period, r.len
                ));
            }
            if r.role == RegionRole::Core {
                let signs: Vec<_> = self.layers[r.range()].iter().map(|l| l.nonlinear_sign).collect();
                let alternating = signs.iter().all(|s| *s != NonlinearSign::Zero)
                    && signs.windows(2).all(|w| w[0] != w[1]);
                if !alternating {
                    return bad(format!("core region `{}` must alternate +1/-1", r.name));
                }
            }
            next += r.len;
        }
        if next != self.layers.len() {
            return bad("regions do not cover every layer".into());
        }
        Ok(())
    }

    pub fn region(&self, role: RegionRole) -> Result<&Region, StackError> {
        self.regions
            .iter()
            .find(|r| r.role == role)
            .ok_or(StackError::MissingRegion(role))
    }

    pub fn total_thickness_nm(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness_nm).sum()
    }

    /// Layer indices at one wavelength, top to bottom.
    pub fn layer_indices(&self, wavelength_nm: f64) -> Result<Vec<f64>, MaterialError> {
        self.layers
            .iter()
            .map(|l| l.medium.index(&self.model, wavelength_nm))
            .collect()
    }

    pub fn substrate_index(&self, wavelength_nm: f64) -> Result<f64, MaterialError> {
        self.substrate.index(&self.model, wavelength_nm)
    }

    /// Index of the lower half-space used by the guided-mode solver.
    pub fn guide_substrate_index(&self, wavelength_nm: f64) -> Result<f64, MaterialError> {
        self.guide_substrate
            .unwrap_or(self.substrate)
            .index(&self.model, wavelength_nm)
    }

    /// Same layers in reverse order with ambient and substrate exchanged.
    pub fn reversed(&self, wavelength_nm: f64) -> Result<LayerStack, StackError> {
        let sub = self.substrate_index(wavelength_nm)?;
        let mut layers = self.layers.clone();
        layers.reverse();
        LayerStack::new(sub, layers, Medium::fixed(self.ambient_index)?, self.model.clone())
    }
}

/// Design inputs of the nominal microcavity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StackDesign {
    pub pump_wavelength_nm: f64,
    pub top_mirror_periods: f64,
    pub core_periods: f64,
    pub bottom_mirror_periods: f64,
    /// High- and low-index aluminium fractions of both mirrors.
    pub mirror_x: (f64, f64),
    /// Aluminium fractions of the two QPM core layers.
    pub core_x: (f64, f64),
    pub substrate: Medium,
    pub guide_substrate: Option<Medium>,
    pub ambient_index: f64,
    pub model: DispersionModel,
}

/// Real index of GaAs at 760 nm; the substrate is treated as lossless.
pub const GAAS_INDEX_760: f64 = 3.68;

impl Default for StackDesign {
    fn default() -> Self {
        Self {
            pump_wavelength_nm: 760.0,
            top_mirror_periods: 18.0,
            core_periods: 4.5,
            bottom_mirror_periods: 41.0,
            mirror_x: (0.35, 0.90),
            core_x: (0.25, 0.80),
            substrate: Medium::Fixed {
                index: GAAS_INDEX_760,
            },
            guide_substrate: Some(Medium::Alloy {
                x: crate::materials::Composition::new(0.90).expect("valid"),
            }),
            ambient_index: 1.0,
            model: DispersionModel::default(),
        }
    }
}

fn layers_for_periods(periods: f64, per_period: usize) -> Result<usize, StackError> {
    let n = periods * per_period as f64;
    if !(n.is_finite() && n >= 1.0 && (n - n.round()).abs() < 1e-9) {
        return Err(StackError::InvalidDesignParams(format!(
            "{periods} periods of {per_period} layers is not a whole layer count"
        )));
    }
    Ok(n.round() as usize)
}

/// Quarter-wave thickness `lambda / (4 n)` of a medium.
pub fn quarter_wave_nm(
    medium: &Medium,
    model: &DispersionModel,
    wavelength_nm: f64,
) -> Result<f64, MaterialError> {
    Ok(wavelength_nm / (4.0 * medium.index(model, wavelength_nm)?))
}

/// Builds the nominal ridge-microcavity stack.
///
/// Top mirror `[H L] x N_top`, QPM core `[A B A ... A]` (2 layers per
/// period, alternating nonlinear sign), bottom mirror `[H L] x N_bottom`
/// over the substrate. Mirror layers are quarter-wave at the pump
/// wavelength; both core layers share the thickness
/// `lambda_p / (4 n_mean)` with `n_mean` the mean of the two core indices.
/// The core's last high-index layer sitting on the bottom mirror's first
/// high-index layer forms the half-wave defect that makes the structure
/// resonate at the pump.
pub fn build_nominal_stack(design: &StackDesign) -> Result<LayerStack, StackError> {
    let lp = design.pump_wavelength_nm;
    if !(lp.is_finite() && lp > 0.0) {
        return Err(StackError::InvalidDesignParams(format!("pump wavelength {lp}")));
    }
    let model = &design.model;
    let hi = Medium::alloy(design.mirror_x.0)?;
    let lo = Medium::alloy(design.mirror_x.1)?;
    let ca = Medium::alloy(design.core_x.0)?;
    let cb = Medium::alloy(design.core_x.1)?;
    let t_hi = quarter_wave_nm(&hi, model, lp)?;
    let t_lo = quarter_wave_nm(&lo, model, lp)?;
    let n_core = 0.5 * (ca.index(model, lp)? + cb.index(model, lp)?);
    let t_core = lp / (4.0 * n_core);

    let n_top = layers_for_periods(design.top_mirror_periods, 2)?;
    let n_core_layers = layers_for_periods(design.core_periods, 2)?;
    let n_bottom = layers_for_periods(design.bottom_mirror_periods, 2)?;

    let mirror = |count: usize| -> Result<Vec<Layer>, StackError> {
        (0..count)
            .map(|i| {
                if i % 2 == 0 {
                    Layer::new(hi, t_hi)
                } else {
                    Layer::new(lo, t_lo)
                }
            })
            .collect()
    };
    let mut layers = mirror(n_top)?;
    for i in 0..n_core_layers {
        let (m, sign) = if i % 2 == 0 {
            (ca, NonlinearSign::Plus)
        } else {
            (cb, NonlinearSign::Minus)
        };
        layers.push(Layer::with_sign(m, t_core, sign)?);
    }
    layers.extend(mirror(n_bottom)?);

    let regions = vec![
        Region {
            name: "top_dbr".into(),
            role: RegionRole::TopMirror,
            start: 0,
            len: n_top,
            layers_per_period: 2,
            periods: design.top_mirror_periods,
        },
        Region {
            name: "core".into(),
            role: RegionRole::Core,
            start: n_top,
            len: n_core_layers,
            layers_per_period: 2,
            periods: design.core_periods,
        },
        Region {
            name: "bottom_dbr".into(),
            role: RegionRole::BottomMirror,
            start: n_top + n_core_layers,
            len: n_bottom,
            layers_per_period: 2,
            periods: design.bottom_mirror_periods,
        },
    ];
    let mut stack = LayerStack::new(design.ambient_index, layers, design.substrate, model.clone())?
        .with_regions(regions)?;
    stack.guide_substrate = design.guide_substrate;
    Ok(stack)
}

/// 2x2 complex matrix, row-major.
pub type Mat2 = [[Complex64; 2]; 2];

pub const IDENTITY: Mat2 = [
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn apply(m: &Mat2, v: [Complex64; 2]) -> [Complex64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// Per-medium quantities for a fixed wavelength, angle and polarization.
#[derive(Debug, Clone, Copy)]
struct Wave {
    k0: f64,
    beta: f64,
    pol: Polarization,
}

impl Wave {
    fn new(wavelength_nm: f64, ambient_index: f64, theta_deg: f64, pol: Polarization) -> Self {
        Self {
            k0: 2.0 * PI / wavelength_nm,
            beta: ambient_index * theta_deg.to_radians().sin(),
            pol,
        }
    }

    fn q(&self, n: f64) -> Complex64 {
        Complex64::new(n * n - self.beta * self.beta, 0.0).sqrt()
    }

    fn admittance(&self, n: f64) -> Complex64 {
        let q = self.q(n);
        match self.pol {
            Polarization::TE => q,
            Polarization::TM => n * n / q,
        }
    }

    fn layer_matrix(&self, n: f64, thickness_nm: f64) -> Mat2 {
        let y = self.admittance(n);
        let d = self.q(n) * self.k0 * thickness_nm;
        let (s, c) = (d.sin(), d.cos());
        let i = Complex64::i();
        [[c, i * s / y], [i * y * s, c]]
    }
}

fn product(wave: &Wave, indices: &[f64], layers: &[Layer]) -> Mat2 {
    indices
        .iter()
        .zip(layers)
        .fold(IDENTITY, |m, (&n, l)| mat_mul(&m, &wave.layer_matrix(n, l.thickness_nm)))
}

/// Characteristic matrix of a run of layers, top to bottom.
pub fn characteristic_matrix(
    stack: &LayerStack,
    range: std::ops::Range<usize>,
    wavelength_nm: f64,
    theta_deg: f64,
    pol: Polarization,
) -> Result<Mat2, StackError> {
    let wave = Wave::new(wavelength_nm, stack.ambient_index, theta_deg, pol);
    let layers = &stack.layers[range];
    let indices: Vec<f64> = layers
        .iter()
        .map(|l| l.medium.index(&stack.model, wavelength_nm))
        .collect::<Result<_, _>>()?;
    Ok(product(&wave, &indices, layers))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StackResponse {
    pub r: Complex64,
    pub t: Complex64,
    pub reflectance: f64,
    pub transmittance: f64,
    pub wavelength_nm: f64,
    pub theta_deg: f64,
    pub polarization: Polarization,
}

fn response_from_matrix(
    m: &Mat2,
    y_in: Complex64,
    y_out: Complex64,
) -> (Complex64, Complex64, f64, f64) {
    let [b, c] = apply(m, [Complex64::new(1.0, 0.0), y_out]);
    let den = y_in * b + c;
    let r = (y_in * b - c) / den;
    let t = 2.0 * y_in / den;
    let refl = r.norm_sqr();
    let trans = 4.0 * y_in.re * y_out.re / den.norm_sqr();
    (r, t, refl, trans)
}

/// Plane-wave reflection and transmission of the whole stack from the
/// ambient side. `theta_deg` is the incidence angle in the ambient.
pub fn stack_response(
    stack: &LayerStack,
    wavelength_nm: f64,
    theta_deg: f64,
    pol: Polarization,
) -> Result<StackResponse, StackError> {
    let wave = Wave::new(wavelength_nm, stack.ambient_index, theta_deg, pol);
    let indices = stack.layer_indices(wavelength_nm)?;
    let m = product(&wave, &indices, &stack.layers);
    let y_in = wave.admittance(stack.ambient_index);
    let y_out = wave.admittance(stack.substrate_index(wavelength_nm)?);
    let (r, t, reflectance, transmittance) = response_from_matrix(&m, y_in, y_out);
    Ok(StackResponse {
        r,
        t,
        reflectance,
        transmittance,
        wavelength_nm,
        theta_deg,
        polarization: pol,
    })
}

/// Flux transmittance of a sub-range of layers embedded between two
/// semi-infinite media, at the in-plane index set by `theta_deg` in the
/// stack's ambient.
pub fn substack_transmittance(
    stack: &LayerStack,
    range: std::ops::Range<usize>,
    n_in: f64,
    n_out: f64,
    wavelength_nm: f64,
    theta_deg: f64,
    pol: Polarization,
) -> Result<f64, StackError> {
    let wave = Wave::new(wavelength_nm, stack.ambient_index, theta_deg, pol);
    let m = characteristic_matrix(stack, range, wavelength_nm, theta_deg, pol)?;
    let (_, _, _, t) = response_from_matrix(&m, wave.admittance(n_in), wave.admittance(n_out));
    Ok(t)
}

/// Tangential electric field through the stack for unit incident amplitude.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldProfile {
    /// Depth in nm, 0 at the top surface, positive into the stack.
    pub depth_nm: Vec<f64>,
    pub field: Vec<Complex64>,
    /// Refractive index at each sample.
    pub index: Vec<f64>,
    /// Layer the sample belongs to; `None` for ambient or substrate.
    pub layer: Vec<Option<usize>>,
    pub wavelength_nm: f64,
    pub theta_deg: f64,
    pub polarization: Polarization,
}

impl FieldProfile {
    pub fn intensity(&self) -> impl Iterator<Item = f64> + '_ {
        self.field.iter().map(|e| e.norm_sqr())
    }

    /// Largest |E|^2 over the samples of a layer range.
    pub fn max_intensity_in(&self, range: std::ops::Range<usize>) -> f64 {
        self.layer
            .iter()
            .zip(&self.field)
            .filter(|(l, _)| l.is_some_and(|i| range.contains(&i)))
            .map(|(_, e)| e.norm_sqr())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSampling {
    /// Samples per layer, both boundaries included (at least 10).
    pub per_layer: usize,
    /// Thickness of ambient and substrate shown around the stack, nm.
    pub margin_nm: f64,
    pub margin_samples: usize,
}

impl Default for ProfileSampling {
    fn default() -> Self {
        Self {
            per_layer: 16,
            margin_nm: 500.0,
            margin_samples: 50,
        }
    }
}

/// Tangential fields at every layer boundary, top surface first,
/// normalized to unit incident amplitude.
struct BoundaryFields {
    wave: Wave,
    indices: Vec<f64>,
    n_sub: f64,
    /// `fields[j]` holds (E, H) at the top of layer `j`; the last entry is
    /// the top of the substrate.
    fields: Vec<[Complex64; 2]>,
}

fn boundary_fields(
    stack: &LayerStack,
    wavelength_nm: f64,
    theta_deg: f64,
    pol: Polarization,
) -> Result<BoundaryFields, StackError> {
    let wave = Wave::new(wavelength_nm, stack.ambient_index, theta_deg, pol);
    let indices = stack.layer_indices(wavelength_nm)?;
    let n_sub = stack.substrate_index(wavelength_nm)?;
    let mut fields = vec![[Complex64::default(); 2]; stack.layers.len() + 1];
    let mut v = [Complex64::new(1.0, 0.0), wave.admittance(n_sub)];
    fields[stack.layers.len()] = v;
    for (j, l) in stack.layers.iter().enumerate().rev() {
        v = apply(&wave.layer_matrix(indices[j], l.thickness_nm), v);
        fields[j] = v;
    }
    let y0 = wave.admittance(stack.ambient_index);
    let [e0, h0] = fields[0];
    let incident = (y0 * e0 + h0) / (2.0 * y0);
    for f in &mut fields {
        f[0] /= incident;
        f[1] /= incident;
    }
    Ok(BoundaryFields {
        wave,
        indices,
        n_sub,
        fields,
    })
}

/// Samples the tangential electric field across ambient, stack and
/// substrate. Fields inside each layer come from the same matrix cascade
/// as [`stack_response`].
pub fn field_profile(
    stack: &LayerStack,
    wavelength_nm: f64,
    theta_deg: f64,
    pol: Polarization,
    sampling: ProfileSampling,
) -> Result<FieldProfile, StackError> {
    let per_layer = sampling.per_layer.max(10);
    let b = boundary_fields(stack, wavelength_nm, theta_deg, pol)?;
    let wave = b.wave;
    let mut out = FieldProfile {
        depth_nm: Vec::new(),
        field: Vec::new(),
        index: Vec::new(),
        layer: Vec::new(),
        wavelength_nm,
        theta_deg,
        polarization: pol,
    };
    let mut push = |z: f64, e: Complex64, n: f64, l: Option<usize>| {
        out.depth_nm.push(z);
        out.field.push(e);
        out.index.push(n);
        out.layer.push(l);
    };

    let m = sampling.margin_samples;
    if m > 0 && sampling.margin_nm > 0.0 {
        for k in 0..m {
            let height = sampling.margin_nm * (m - k) as f64 / m as f64;
            let mat = wave.layer_matrix(stack.ambient_index, height);
            push(-height, apply(&mat, b.fields[0])[0], stack.ambient_index, None);
        }
    }
    let mut top = 0.0;
    for (j, l) in stack.layers.iter().enumerate() {
        let bottom = b.fields[j + 1];
        for k in 0..per_layer {
            let s = l.thickness_nm * k as f64 / (per_layer - 1) as f64;
            let mat = wave.layer_matrix(b.indices[j], l.thickness_nm - s);
            push(top + s, apply(&mat, bottom)[0], b.indices[j], Some(j));
        }
        top += l.thickness_nm;
    }
    if m > 0 && sampling.margin_nm > 0.0 {
        let sub = b.fields[stack.layers.len()];
        for k in 1..=m {
            let depth = sampling.margin_nm * k as f64 / m as f64;
            // Propagating downward is the inverse of the layer matrix.
            let mat = wave.layer_matrix(b.n_sub, -depth);
            push(top + depth, apply(&mat, sub)[0], b.n_sub, None);
        }
    }
    Ok(out)
}

/// Mean |E|^2 over a range of layers, `samples` points per layer.
pub fn mean_intensity(
    stack: &LayerStack,
    range: std::ops::Range<usize>,
    wavelength_nm: f64,
    theta_deg: f64,
    pol: Polarization,
    samples: usize,
) -> Result<f64, StackError> {
    let b = boundary_fields(stack, wavelength_nm, theta_deg, pol)?;
    let mut sum = 0.0;
    let mut weight = 0.0;
    for j in range {
        let l = &stack.layers[j];
        let bottom = b.fields[j + 1];
        let dz = l.thickness_nm / samples as f64;
        for k in 0..samples {
            let s = (k as f64 + 0.5) * dz;
            let mat = b.wave.layer_matrix(b.indices[j], l.thickness_nm - s);
            sum += apply(&mat, bottom)[0].norm_sqr() * dz;
        }
        weight += l.thickness_nm;
    }
    Ok(sum / weight)
}

/// Vertical-cavity resonance and the quantities entering the cavity
/// enhancement factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavityResonance {
    pub wavelength_nm: f64,
    pub reflectance: f64,
    pub finesse: f64,
    pub linewidth_nm: f64,
    pub free_spectral_range_nm: f64,
    pub t_up: f64,
    pub t_down: f64,
    pub core_intensity: f64,
}

/// Locates the single reflectance dip inside `window_nm`, then measures
/// the cavity finesse from the core-intensity resonance and the
/// transmittances of the two mirrors taken alone.
///
/// The free spectral range is `lambda^2 / (2 OPL_core)` with `OPL_core`
/// the optical thickness of the core region at resonance.
pub fn find_resonance(
    stack: &LayerStack,
    window_nm: (f64, f64),
    theta_deg: f64,
    pol: Polarization,
) -> Result<CavityResonance, StackError> {
    let (lo, hi) = window_nm;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(StackError::InvalidDesignParams(format!("window [{lo}, {hi}]")));
    }
    let core = stack.region(RegionRole::Core)?.range();
    let top = stack.region(RegionRole::TopMirror)?.range();
    let bottom = stack.region(RegionRole::BottomMirror)?.range();

    let step = ((hi - lo) / 4000.0).min(0.01);
    let n = ((hi - lo) / step).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| (lo + i as f64 * step).min(hi)).collect();
    let refl: Vec<f64> = grid
        .iter()
        .map(|&l| stack_response(stack, l, theta_deg, pol).map(|r| r.reflectance))
        .collect::<Result<_, _>>()?;
    let r_max = refl.iter().copied().fold(f64::MIN, f64::max);
    let minima: Vec<usize> = (1..refl.len() - 1)
        .filter(|&i| refl[i] < refl[i - 1] && refl[i] <= refl[i + 1])
        .collect();
    let deepest = minima.iter().map(|&i| r_max - refl[i]).fold(0.0, f64::max);
    if deepest <= 1e-9 {
        return Err(StackError::NoResonanceInWindow(lo, hi));
    }
    let dips: Vec<usize> = minima
        .into_iter()
        .filter(|&i| r_max - refl[i] >= 0.5 * deepest)
        .collect();
    if dips.len() != 1 {
        return Err(StackError::MultipleResonances {
            count: dips.len(),
            lo,
            hi,
        });
    }
    let i = dips[0];
    let (lambda_res, r_res) = golden_min(
        |l| stack_response(stack, l, theta_deg, pol).map(|r| r.reflectance),
        grid[i - 1],
        grid[i + 1],
        1e-7,
    )?;

    // Core-intensity linewidth.
    let core_i = |l: f64| mean_intensity(stack, core.clone(), l, theta_deg, pol, 8);
    let peak = golden_min(|l| core_i(l).map(|v| -v), lambda_res - step, lambda_res + step, 1e-7)?;
    let (lambda_peak, i_peak) = (peak.0, -peak.1);
    let half = 0.5 * i_peak;
    let edge = |dir: f64| -> Result<f64, StackError> {
        let mut inner = lambda_peak;
        loop {
            let outer = inner + dir * step;
            if outer < lo || outer > hi {
                return Err(StackError::UnresolvedLinewidth);
            }
            if core_i(outer)? < half {
                return crate::roots::bisect(|l| core_i(l).map(|v| v - half), inner, outer, 1e-7)
                    .map_err(|e| match e {
                        crate::roots::RootError::Eval(e) => e,
                        _ => StackError::UnresolvedLinewidth,
                    });
            }
            inner = outer;
        }
    };
    let linewidth = edge(1.0)? - edge(-1.0)?;

    let wave = Wave::new(lambda_res, stack.ambient_index, theta_deg, pol);
    let indices = stack.layer_indices(lambda_res)?;
    let opl: f64 = core
        .clone()
        .map(|j| wave.q(indices[j]).re * stack.layers[j].thickness_nm)
        .sum();
    let fsr = lambda_res * lambda_res / (2.0 * opl);

    let t_up = substack_transmittance(
        stack,
        top,
        stack.ambient_index,
        indices[core.start],
        lambda_res,
        theta_deg,
        pol,
    )?;
    let t_down = substack_transmittance(
        stack,
        bottom,
        indices[core.end - 1],
        stack.substrate_index(lambda_res)?,
        lambda_res,
        theta_deg,
        pol,
    )?;

    Ok(CavityResonance {
        wavelength_nm: lambda_res,
        reflectance: r_res,
        finesse: fsr / linewidth,
        linewidth_nm: linewidth,
        free_spectral_range_nm: fsr,
        t_up,
        t_down,
        core_intensity: i_peak,
    })
}
