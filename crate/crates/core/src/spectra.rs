//! Emission spectra: sinc² phase-matching profiles, Gaussian instrument
//! kernels, widths and peak finding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modes::{EffectiveIndex, ModeError, TabulatedIndex};
use crate::phasematch::{delta_k, solve_pair, Interaction, PhaseMatchError};

/// `x` with `sinc²(x) = 1/2`.
pub const SINC2_HALF_MAX_X: f64 = 1.391_557_378_251_51;
/// Default grid step, nm.
pub const DEFAULT_STEP_NM: f64 = 0.005;
/// Default half-width of the grid around each peak, nm.
pub const DEFAULT_MARGIN_NM: f64 = 5.0;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error(transparent)]
    PhaseMatch(#[from] PhaseMatchError),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("kernel FWHM {fwhm_nm} nm is below two grid steps of {step_nm} nm")]
    KernelUnderResolved { fwhm_nm: f64, step_nm: f64 },
    #[error("spectrum has no unique maximum")]
    NoPeak,
    #[error("half maximum not crossed on the {0} side of the peak")]
    HalfMaxNotBracketed(&'static str),
}

impl From<ModeError> for SpectrumError {
    fn from(e: ModeError) -> Self {
        SpectrumError::PhaseMatch(e.into())
    }
}

/// Uniform wavelength grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start_nm: f64,
    pub step_nm: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(start_nm: f64, step_nm: f64, count: usize) -> Result<Self, SpectrumError> {
        if !(start_nm.is_finite() && step_nm.is_finite() && step_nm > 0.0 && count >= 2) {
            return Err(SpectrumError::InvalidGrid(format!(
                "start {start_nm}, step {step_nm}, {count} points"
            )));
        }
        Ok(Self {
            start_nm,
            step_nm,
            count,
        })
    }

    /// Grid covering `[lo, hi]` with the given step.
    pub fn spanning(lo_nm: f64, hi_nm: f64, step_nm: f64) -> Result<Self, SpectrumError> {
        if !(hi_nm > lo_nm) {
            return Err(SpectrumError::InvalidGrid(format!("empty span {lo_nm}-{hi_nm} nm")));
        }
        let count = ((hi_nm - lo_nm) / step_nm - 1e-9).ceil() as usize + 1;
        Self::new(lo_nm, step_nm, count)
    }

    pub fn around(centre_nm: f64, half_width_nm: f64, step_nm: f64) -> Result<Self, SpectrumError> {
        Self::spanning(centre_nm - half_width_nm, centre_nm + half_width_nm, step_nm)
    }

    pub fn at(&self, k: usize) -> f64 {
        self.start_nm + k as f64 * self.step_nm
    }

    pub fn end_nm(&self) -> f64 {
        self.at(self.count - 1)
    }

    pub fn wavelengths(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.at(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelShape {
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionKernel {
    pub shape: KernelShape,
    pub fwhm_nm: f64,
}

impl ConvolutionKernel {
    pub fn gaussian(fwhm_nm: f64) -> Result<Self, SpectrumError> {
        if !(fwhm_nm.is_finite() && fwhm_nm > 0.0) {
            return Err(SpectrumError::InvalidParameter(format!("kernel FWHM {fwhm_nm} nm")));
        }
        Ok(Self {
            shape: KernelShape::Gaussian,
            fwhm_nm,
        })
    }

    /// Taps on a grid of the given step, centred, summing to 1.
    fn taps(&self, step_nm: f64) -> Vec<f64> {
        let sigma = self.fwhm_nm / (8.0 * 2f64.ln()).sqrt();
        let half = (5.0 * sigma / step_nm).ceil() as isize;
        let mut taps: Vec<f64> = (-half..=half)
            .map(|j| {
                let x = j as f64 * step_nm / sigma;
                (-0.5 * x * x).exp()
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= sum);
        taps
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_p_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interactions: Vec<Interaction>,
    /// Kernels applied, in order.
    #[serde(default)]
    pub kernels: Vec<ConvolutionKernel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub grid: Grid,
    pub intensity: Vec<f64>,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    pub fn new(grid: Grid, intensity: Vec<f64>, meta: SpectrumMeta) -> Result<Self, SpectrumError> {
        if intensity.len() != grid.count {
            return Err(SpectrumError::InvalidGrid(format!(
                "{} intensities for {} grid points",
                intensity.len(),
                grid.count
            )));
        }
        if let Some(v) = intensity.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(SpectrumError::InvalidParameter(format!("intensity {v}")));
        }
        Ok(Self {
            grid,
            intensity,
            meta,
        })
    }

    pub fn wavelengths(&self) -> Vec<f64> {
        self.grid.wavelengths()
    }

    pub fn max(&self) -> f64 {
        self.intensity.iter().copied().fold(0.0, f64::max)
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        let v = &self.intensity;
        let inner: f64 = v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]);
        inner * self.grid.step_nm
    }

    /// Scales the peak to 1.
    pub fn normalized(mut self) -> Self {
        let m = self.max();
        if m > 0.0 {
            self.intensity.iter_mut().for_each(|v| *v /= m);
        }
        self
    }

    /// Linear interpolation; zero outside the grid.
    pub fn value_at(&self, wavelength_nm: f64) -> f64 {
        let t = (wavelength_nm - self.grid.start_nm) / self.grid.step_nm;
        if t < 0.0 || t > (self.grid.count - 1) as f64 {
            return 0.0;
        }
        let i = (t.floor() as usize).min(self.grid.count - 2);
        let f = t - i as f64;
        self.intensity[i] * (1.0 - f) + self.intensity[i + 1] * f
    }
}

pub fn sinc2(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 3.0
    } else {
        let s = x.sin() / x;
        s * s
    }
}

/// Which photon of a pair a spectral axis refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Photon {
    Copropagating,
    Counterpropagating,
}

fn length_nm(length_mm: f64) -> Result<f64, SpectrumError> {
    if !(length_mm.is_finite() && length_mm > 0.0) {
        return Err(SpectrumError::InvalidParameter(format!("sample length {length_mm} mm")));
    }
    Ok(length_mm * 1e6)
}

/// Table of indices covering a set of wavelengths and their energy partners.
fn table_for(
    idx: &impl EffectiveIndex,
    lambda_p_nm: f64,
    lo_nm: f64,
    hi_nm: f64,
) -> Result<TabulatedIndex, SpectrumError> {
    let partner = |l: f64| 1.0 / (1.0 / lambda_p_nm - 1.0 / l);
    let lo = lo_nm.min(partner(hi_nm));
    let hi = hi_nm.max(partner(lo_nm));
    Ok(TabulatedIndex::new(idx, lo, hi, TabulatedIndex::STEP_NM)?)
}

fn sinc2_profile(
    idx: &impl EffectiveIndex,
    grid: &Grid,
    theta_deg: f64,
    lambda_p_nm: f64,
    inter: Interaction,
    photon: Photon,
    length_nm: f64,
) -> Result<Vec<f64>, SpectrumError> {
    (0..grid.count)
        .map(|k| {
            let l = grid.at(k);
            let lambda_s = match photon {
                Photon::Copropagating => l,
                Photon::Counterpropagating => 1.0 / (1.0 / lambda_p_nm - 1.0 / l),
            };
            let dk = delta_k(idx, lambda_s, theta_deg, lambda_p_nm, inter)?;
            Ok(sinc2(0.5 * dk * length_nm))
        })
        .collect()
}

/// `sinc²(delta_k L / 2)` of one photon of an interaction over `grid`.
pub fn phase_matching_spectrum(
    idx: &impl EffectiveIndex,
    theta_deg: f64,
    lambda_p_nm: f64,
    inter: Interaction,
    photon: Photon,
    length_mm: f64,
    grid: &Grid,
) -> Result<Spectrum, SpectrumError> {
    let l = length_nm(length_mm)?;
    let table = table_for(idx, lambda_p_nm, grid.start_nm, grid.end_nm())?;
    let intensity = sinc2_profile(&table, grid, theta_deg, lambda_p_nm, inter, photon, l)?;
    Spectrum::new(
        *grid,
        intensity,
        SpectrumMeta {
            theta_deg: Some(theta_deg),
            lambda_p_nm: Some(lambda_p_nm),
            length_mm: Some(length_mm),
            interactions: vec![inter],
            ..Default::default()
        },
    )
}

/// Discrete convolution on the same grid, zero outside it.
pub fn convolve(sp: &Spectrum, kernel: &ConvolutionKernel) -> Result<Spectrum, SpectrumError> {
    let step = sp.grid.step_nm;
    if kernel.fwhm_nm < 2.0 * step * (1.0 - 1e-9) {
        return Err(SpectrumError::KernelUnderResolved {
            fwhm_nm: kernel.fwhm_nm,
            step_nm: step,
        });
    }
    let taps = kernel.taps(step);
    let half = (taps.len() / 2) as isize;
    let n = sp.intensity.len() as isize;
    let out = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, t) in taps.iter().enumerate() {
                let src = i + half - j as isize;
                if (0..n).contains(&src) {
                    acc += t * sp.intensity[src as usize];
                }
            }
            acc
        })
        .collect();
    let mut meta = sp.meta.clone();
    meta.kernels.push(*kernel);
    Spectrum::new(sp.grid, out, meta)
}

/// Width at half the peak value, linearly interpolated between samples.
pub fn fwhm(sp: &Spectrum) -> Result<f64, SpectrumError> {
    let v = &sp.intensity;
    let (imax, &peak) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(SpectrumError::NoPeak)?;
    if peak <= 0.0 {
        return Err(SpectrumError::NoPeak);
    }
    let tie = peak * (1.0 - 1e-9);
    let rivals = local_maxima(v).into_iter().filter(|&i| v[i] >= tie).count();
    if rivals > 1 {
        return Err(SpectrumError::NoPeak);
    }
    let half = 0.5 * peak;
    let cross = |a: usize, b: usize| {
        // a inside (>= half), b outside (< half)
        let f = (v[a] - half) / (v[a] - v[b]);
        sp.grid.at(a) + f * (sp.grid.at(b) - sp.grid.at(a))
    };
    let left = (1..=imax)
        .rev()
        .find(|&i| v[i - 1] < half)
        .map(|i| cross(i, i - 1))
        .ok_or(SpectrumError::HalfMaxNotBracketed("short-wavelength"))?;
    let right = (imax..v.len() - 1)
        .find(|&i| v[i + 1] < half)
        .map(|i| cross(i, i + 1))
        .ok_or(SpectrumError::HalfMaxNotBracketed("long-wavelength"))?;
    Ok(right - left)
}

/// Indices of strict local maxima (plateaus count once, at their start).
fn local_maxima(v: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < v.len() {
        if v[i] > v[i - 1] {
            let mut j = i;
            while j + 1 < v.len() && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < v.len() && v[j + 1] < v[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub wavelength_nm: f64,
    pub height: f64,
    pub prominence: f64,
}

/// Local maxima whose prominence exceeds `min_prominence`, sorted by
/// wavelength. The position is refined by a parabola through three samples.
pub fn find_peaks(sp: &Spectrum, min_prominence: f64) -> Vec<Peak> {
    let v = &sp.intensity;
    let mut peaks = Vec::new();
    for i in local_maxima(v) {
        let h = v[i];
        let base = |range: &mut dyn Iterator<Item = usize>| {
            let mut low = h;
            for j in range {
                if v[j] > h {
                    break;
                }
                low = low.min(v[j]);
            }
            low
        };
        let left = base(&mut (0..i).rev());
        let right = base(&mut (i + 1..v.len()));
        let prominence = h - left.max(right);
        if prominence <= min_prominence {
            continue;
        }
        let (a, b, c) = (v[i - 1], h, v[i + 1]);
        let denom = a - 2.0 * b + c;
        let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
        peaks.push(Peak {
            wavelength_nm: sp.grid.at(i) + shift * sp.grid.step_nm,
            height: h,
            prominence,
        });
    }
    peaks
}

/// Inputs of a four-photon fluorescence spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FluorescenceOptions {
    pub length_mm: f64,
    pub kernels: Vec<ConvolutionKernel>,
    /// Flat background, in units of the unattenuated peak height.
    pub noise_floor: f64,
    /// Amplitude of the longer-wavelength photon of each pair, which is
    /// collected after reflection on the opposite facet; `R^2` by default.
    pub long_wavelength_factor: f64,
    pub interactions: Vec<Interaction>,
    pub step_nm: f64,
    pub margin_nm: f64,
}

impl Default for FluorescenceOptions {
    fn default() -> Self {
        Self {
            length_mm: 1.0,
            kernels: vec![
                ConvolutionKernel::gaussian(0.3).unwrap(),
                ConvolutionKernel::gaussian(0.1).unwrap(),
            ],
            noise_floor: 0.02,
            long_wavelength_factor: 0.30 * 0.30,
            interactions: Interaction::BOTH.to_vec(),
            step_nm: DEFAULT_STEP_NM,
            margin_nm: DEFAULT_MARGIN_NM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluorescenceSpectrum {
    pub spectrum: Spectrum,
    /// Phase-matched pairs the peaks come from.
    pub pairs: Vec<crate::phasematch::PhaseMatchPoint>,
}

/// Sum of the convolved sinc² peaks of both photons of every selected
/// interaction plus a flat floor.
pub fn fluorescence_spectrum(
    idx: &impl EffectiveIndex,
    theta_deg: f64,
    lambda_p_nm: f64,
    opts: &FluorescenceOptions,
) -> Result<FluorescenceSpectrum, SpectrumError> {
    let l = length_nm(opts.length_mm)?;
    if !(opts.noise_floor >= 0.0 && opts.long_wavelength_factor >= 0.0) {
        return Err(SpectrumError::InvalidParameter(
            "noise floor and amplitude factor must be non-negative".into(),
        ));
    }
    if opts.interactions.is_empty() {
        return Err(SpectrumError::InvalidParameter("no interaction selected".into()));
    }
    let pairs = opts
        .interactions
        .iter()
        .map(|&inter| solve_pair(idx, theta_deg, lambda_p_nm, inter))
        .collect::<Result<Vec<_>, _>>()?;
    let (lo, hi) = pairs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (
            lo.min(p.lambda_s_nm.min(p.lambda_i_nm)),
            hi.max(p.lambda_s_nm.max(p.lambda_i_nm)),
        )
    });
    let grid = Grid::spanning(lo - opts.margin_nm, hi + opts.margin_nm, opts.step_nm)?;
    let table = table_for(idx, lambda_p_nm, grid.start_nm, grid.end_nm())?;

    let mut total = vec![0.0; grid.count];
    for p in &pairs {
        for photon in [Photon::Copropagating, Photon::Counterpropagating] {
            let (own, other) = match photon {
                Photon::Copropagating => (p.lambda_s_nm, p.lambda_i_nm),
                Photon::Counterpropagating => (p.lambda_i_nm, p.lambda_s_nm),
            };
            let amplitude = if own > other { opts.long_wavelength_factor } else { 1.0 };
            let profile = sinc2_profile(&table, &grid, theta_deg, lambda_p_nm, p.interaction, photon, l)?;
            total.iter_mut().zip(profile).for_each(|(t, v)| *t += amplitude * v);
        }
    }
    let mut spectrum = Spectrum::new(grid, total, SpectrumMeta::default())?;
    for k in &opts.kernels {
        spectrum = convolve(&spectrum, k)?;
    }
    spectrum.intensity.iter_mut().for_each(|v| *v += opts.noise_floor);
    spectrum.meta = SpectrumMeta {
        theta_deg: Some(theta_deg),
        lambda_p_nm: Some(lambda_p_nm),
        length_mm: Some(opts.length_mm),
        interactions: opts.interactions.clone(),
        kernels: opts.kernels.clone(),
        noise_floor: Some(opts.noise_floor),
    };
    Ok(FluorescenceSpectrum { spectrum, pairs })
}

/// Relative prominence above the floor that counts as an emission peak;
/// smaller bumps are sinc² sidelobe ripple left by the convolution.
pub const PEAK_PROMINENCE_FRACTION: f64 = 0.05;

impl FluorescenceSpectrum {
    pub fn peaks(&self) -> Vec<Peak> {
        let floor = self.spectrum.meta.noise_floor.unwrap_or(0.0);
        find_peaks(&self.spectrum, PEAK_PROMINENCE_FRACTION * (self.spectrum.max() - floor))
    }
}

/// sinc² FWHM for a mismatch linear in frequency,
/// `|d delta_k / d nu| = 2 pi * group_index_term`, at wavelength `lambda`.
pub fn linearized_fwhm_nm(group_index_term: f64, wavelength_nm: f64, length_mm: f64) -> f64 {
    let l = length_mm * 1e6;
    let dnu = 2.0 * SINC2_HALF_MAX_X / (std::f64::consts::PI * group_index_term.abs() * l);
    wavelength_nm * wavelength_nm * dnu
}

/// Linearized widths of the counterpropagating pair (`n_gs + n_gi`) and of
/// a copropagating pair on the same modes (`n_gs - n_gi`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandwidthComparison {
    pub counterpropagating_nm: f64,
    pub copropagating_nm: f64,
}

pub fn bandwidth_comparison(
    idx: &impl EffectiveIndex,
    point: &crate::phasematch::PhaseMatchPoint,
    length_mm: f64,
) -> Result<BandwidthComparison, SpectrumError> {
    let ng_s = idx.group_index(point.interaction.copropagating(), point.lambda_s_nm)?;
    let ng_i = idx.group_index(point.interaction.counterpropagating(), point.lambda_i_nm)?;
    Ok(BandwidthComparison {
        counterpropagating_nm: linearized_fwhm_nm(ng_s + ng_i, point.lambda_s_nm, length_mm),
        copropagating_nm: linearized_fwhm_nm(ng_s - ng_i, point.lambda_s_nm, length_mm),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::LinearIndex;

    fn gaussian(grid: Grid, centre: f64, fwhm_nm: f64) -> Spectrum {
        let s = fwhm_nm / (8.0 * 2f64.ln()).sqrt();
        let v = grid
            .wavelengths()
            .iter()
            .map(|l| (-0.5 * ((l - centre) / s).powi(2)).exp())
            .collect();
        Spectrum::new(grid, v, SpectrumMeta::default()).unwrap()
    }

    #[test]
    fn gaussian_fwhm() {
        let g = Grid::around(1520.0, 5.0, 0.005).unwrap();
        let w = fwhm(&gaussian(g, 1520.0, 0.4)).unwrap();
        assert!((w / 0.4 - 1.0).abs() < 0.005);
    }

    #[test]
    fn sinc2_fwhm_matches_dense_oracle() {
        // sinc²(pi x) has unit first-zero spacing; FWHM = 2 * 1.39156 / pi.
        let grid = Grid::around(0.0, 3.0, 0.001).unwrap();
        let v = grid.wavelengths().iter().map(|&x| sinc2(std::f64::consts::PI * x)).collect();
        let sp = Spectrum::new(grid, v, SpectrumMeta::default()).unwrap();
        let expected = 2.0 * SINC2_HALF_MAX_X / std::f64::consts::PI;
        assert!((fwhm(&sp).unwrap() / expected - 1.0).abs() < 0.005);
        assert!((sinc2(SINC2_HALF_MAX_X) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn twin_maxima_have_no_peak() {
        let g = Grid::around(1520.0, 5.0, 0.01).unwrap();
        let mut sp = gaussian(g, 1518.0, 0.5);
        let b = gaussian(g, 1522.0, 0.5);
        sp.intensity.iter_mut().zip(&b.intensity).for_each(|(a, b)| *a += b);
        assert!(matches!(fwhm(&sp), Err(SpectrumError::NoPeak)));
        let zero = Spectrum::new(g, vec![0.0; g.count], SpectrumMeta::default()).unwrap();
        assert!(matches!(fwhm(&zero), Err(SpectrumError::NoPeak)));
    }

    #[test]
    fn truncated_peak_is_not_bracketed() {
        let g = Grid::new(1520.0, 0.01, 100).unwrap();
        assert!(matches!(
            fwhm(&gaussian(g, 1520.2, 1.0)),
            Err(SpectrumError::HalfMaxNotBracketed(_))
        ));
    }

    #[test]
    fn gaussian_convolution_adds_in_quadrature() {
        let g = Grid::around(1520.0, 5.0, 0.005).unwrap();
        let out = convolve(&gaussian(g, 1520.0, 0.3), &ConvolutionKernel::gaussian(0.4).unwrap()).unwrap();
        let w = fwhm(&out).unwrap();
        assert!((w / 0.5 - 1.0).abs() < 0.01, "{w}");
        assert_eq!(out.meta.kernels.len(), 1);
    }

    #[test]
    fn narrow_kernel_is_near_identity_and_preserves_area() {
        let g = Grid::around(1520.0, 5.0, 0.005).unwrap();
        let sp = gaussian(g, 1520.0, 0.5);
        let out = convolve(&sp, &ConvolutionKernel::gaussian(0.01).unwrap()).unwrap();
        for (a, b) in sp.intensity.iter().zip(&out.intensity) {
            assert!((a - b).abs() < 0.02);
        }
        let wide = convolve(&sp, &ConvolutionKernel::gaussian(1.0).unwrap()).unwrap();
        assert!((wide.integral() / sp.integral() - 1.0).abs() < 1e-3);
        assert!(wide.intensity.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn under_resolved_kernel_rejected() {
        let g = Grid::around(1520.0, 1.0, 0.01).unwrap();
        assert!(matches!(
            convolve(&gaussian(g, 1520.0, 0.5), &ConvolutionKernel::gaussian(0.015).unwrap()),
            Err(SpectrumError::KernelUnderResolved { .. })
        ));
    }

    fn idx() -> LinearIndex {
        LinearIndex {
            reference_nm: 1520.0,
            n: [3.088, 3.076],
            slope: [-1.4e-4, -1.4e-4],
        }
    }

    #[test]
    fn sinc2_peak_and_zeros() {
        let (theta, lp) = (2.0, 760.0);
        let p = solve_pair(&idx(), theta, lp, Interaction::One).unwrap();
        let grid = Grid::around(p.lambda_s_nm, 2.0, 0.001).unwrap();
        let sp = phase_matching_spectrum(&idx(), theta, lp, Interaction::One, Photon::Copropagating, 1.0, &grid)
            .unwrap();
        assert!((sp.value_at(p.lambda_s_nm) - 1.0).abs() < 1e-4);
        let bw = bandwidth_comparison(&idx(), &p, 1.0).unwrap();
        assert!((fwhm(&sp).unwrap() / bw.counterpropagating_nm - 1.0).abs() < 0.01);
        // First zero where delta_k L / 2 = pi.
        let ng = idx().group_index(crate::Polarization::TE, 1520.0).unwrap()
            + idx().group_index(crate::Polarization::TM, 1520.0).unwrap();
        let dnu = 1.0 / (ng * 1e6);
        let zero = 1.0 / (1.0 / p.lambda_s_nm - dnu);
        let dk = delta_k(&idx(), zero, theta, lp, Interaction::One).unwrap();
        assert!(((0.5 * dk * 1e6).abs() / std::f64::consts::PI - 1.0).abs() < 1e-3);
    }

    #[test]
    fn single_interaction_without_floor_has_two_peaks() {
        let opts = FluorescenceOptions {
            noise_floor: 0.0,
            interactions: vec![Interaction::Two],
            ..Default::default()
        };
        let f = fluorescence_spectrum(&idx(), 3.1, 759.5, &opts).unwrap();
        assert_eq!(find_peaks(&f.spectrum, 0.05).len(), 2);
        let all = fluorescence_spectrum(&idx(), 3.1, 759.5, &FluorescenceOptions::default()).unwrap();
        let peaks = find_peaks(&all.spectrum, 0.05);
        assert_eq!(peaks.len(), 4);
        assert!(all.spectrum.intensity.iter().all(|v| *v >= 0.02 - 1e-12));
    }
}
