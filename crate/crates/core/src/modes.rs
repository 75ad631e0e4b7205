//! Guided TE/TM modes of the planar multilayer waveguide.
//!
//! For a trial effective index `N` the transverse field `psi` (E_y for TE,
//! H_y for TM) obeys `psi'' + k0^2 (n^2 - N^2) psi = 0` in every layer with
//! `psi` and `psi' / p` continuous (`p = 1` for TE, `p = n^2` for TM).
//! Starting from the decaying solution in the ambient and propagating the
//! real vector `(psi, psi'/p)` through the layers, a guided mode is a
//! value of `N` for which the field also decays into the lower half-space:
//!
//! ```text
//! F(N) = u(D) + (gamma_s / p_s) psi(D) = 0
//! ```
//!
//! `F` has no poles, so roots are isolated by sign changes on a fine grid
//! of `N` and refined by bisection.

use serde::Serialize;
use thiserror::Error;

use crate::materials::MaterialError;
use crate::roots::{bisect, brent, RootError};
pub use crate::stack::Polarization;
use crate::stack::LayerStack;

/// Grid step of the root scan in effective index.
pub const SCAN_STEP: f64 = 1e-4;
/// Offset of the scan window from the guiding bounds.
pub const BOUND_MARGIN: f64 = 1e-6;
/// Default wavelength step of modal group indices, nm.
pub const GROUP_STEP_NM: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ModeError {
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("stack has no layers to guide light")]
    NonGuidingStack,
    #[error("no guided {pol} mode at {wavelength_nm} nm")]
    NoGuidedMode { pol: Polarization, wavelength_nm: f64 },
    #[error("{pol} mode of order {order} lost while stepping to {wavelength_nm} nm")]
    ModeTrackingLost {
        pol: Polarization,
        order: usize,
        wavelength_nm: f64,
    },
    #[error("root refinement failed: {0}")]
    Root(String),
}

impl From<RootError<ModeError>> for ModeError {
    fn from(e: RootError<ModeError>) -> Self {
        match e {
            RootError::Eval(e) => e,
            other => ModeError::Root(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuidedMode {
    pub polarization: Polarization,
    pub wavelength_nm: f64,
    pub n_eff: f64,
    /// `None` when the mode cannot be followed over the difference step
    /// (typically right at cutoff).
    pub group_index: Option<f64>,
    /// 0 is the fundamental (largest `n_eff`).
    pub order: usize,
    /// Normalized dispersion-relation residual at `n_eff`.
    pub residual: f64,
}

/// Waveguide cross-section frozen at one wavelength and polarization.
#[derive(Debug, Clone)]
pub struct Guide {
    k0: f64,
    pol: Polarization,
    indices: Vec<f64>,
    thickness: Vec<f64>,
    n_top: f64,
    n_bottom: f64,
    /// Interface (top of this layer) where both solutions meet.
    matching: usize,
}

impl Guide {
    pub fn new(stack: &LayerStack, wavelength_nm: f64, pol: Polarization) -> Result<Self, ModeError> {
        if stack.layers.is_empty() {
            return Err(ModeError::NonGuidingStack);
        }
        Ok(Self {
            k0: 2.0 * std::f64::consts::PI / wavelength_nm,
            pol,
            indices: stack.layer_indices(wavelength_nm)?,
            thickness: stack.layers.iter().map(|l| l.thickness_nm).collect(),
            n_top: stack.ambient_index,
            n_bottom: stack.guide_substrate_index(wavelength_nm)?,
            matching: 0,
        }
        .with_matching_interface())
    }

    /// Middle of the highest-index layers, where guided fields peak.
    fn with_matching_interface(mut self) -> Self {
        let top = self.indices.iter().copied().fold(f64::MIN, f64::max);
        let hits: Vec<usize> = (0..self.indices.len())
            .filter(|&i| self.indices[i] >= top - 1e-12)
            .collect();
        self.matching = hits[hits.len() / 2];
        self
    }

    /// Open interval of effective indices that can be guided.
    pub fn window(&self) -> (f64, f64) {
        let lower = self.n_top.max(self.n_bottom) + BOUND_MARGIN;
        let upper = self.indices.iter().copied().fold(f64::MIN, f64::max) - BOUND_MARGIN;
        (lower, upper)
    }

    fn p(&self, n: f64) -> f64 {
        match self.pol {
            Polarization::TE => 1.0,
            Polarization::TM => n * n,
        }
    }

    /// Matrix of one layer acting on `(psi, u)`; determinant 1.
    fn layer(&self, i: usize, b2: f64) -> (f64, f64, f64) {
        let (n, d) = (self.indices[i], self.thickness[i]);
        let p = self.p(n);
        let kappa2 = self.k0 * self.k0 * (n * n - b2);
        if kappa2 > 0.0 {
            let k = kappa2.sqrt();
            let (s, c) = (k * d).sin_cos();
            (c, p * s / k, -k * s / p)
        } else if kappa2 < 0.0 {
            let g = (-kappa2).sqrt();
            (
                (g * d).cosh(),
                p * (g * d).sinh() / g,
                g * (g * d).sinh() / p,
            )
        } else {
            (1.0, p * d, 0.0)
        }
    }

    /// Normalized dispersion function; zero at a guided mode.
    ///
    /// The decaying solutions of both half-spaces are carried to the top
    /// of the highest-index layer and compared there. The value is the
    /// sine of the angle between the two `(psi, u / k0)` vectors, so it is
    /// bounded by 1 and keeps the sign of the Wronskian.
    pub fn dispersion(&self, n_eff: f64) -> f64 {
        let b2 = n_eff * n_eff;
        let unit = |v: (f64, f64)| {
            let norm = v.0.hypot(v.1 / self.k0);
            (v.0 / norm, v.1 / norm)
        };
        let gamma_top = self.k0 * (b2 - self.n_top * self.n_top).max(0.0).sqrt();
        let mut top = unit((1.0, gamma_top / self.p(self.n_top)));
        for i in 0..self.matching {
            let (a, b, c) = self.layer(i, b2);
            top = unit((a * top.0 + b * top.1, c * top.0 + a * top.1));
        }
        let gamma_bottom = self.k0 * (b2 - self.n_bottom * self.n_bottom).max(0.0).sqrt();
        let mut bottom = unit((1.0, -gamma_bottom / self.p(self.n_bottom)));
        for i in (self.matching..self.indices.len()).rev() {
            let (a, b, c) = self.layer(i, b2);
            bottom = unit((a * bottom.0 - b * bottom.1, -c * bottom.0 + a * bottom.1));
        }
        (top.0 * bottom.1 - top.1 * bottom.0) / self.k0
    }

    fn scan(&self, step: f64) -> Result<Vec<f64>, ModeError> {
        let (lower, upper) = self.window();
        if upper <= lower {
            return Ok(Vec::new());
        }
        let n = ((upper - lower) / step).ceil() as usize;
        let grid = (0..=n).map(|i| if i == n { upper } else { lower + i as f64 * step });
        let mut roots = Vec::new();
        let mut prev: Option<(f64, f64)> = None;
        for x in grid {
            let fx = self.dispersion(x);
            if let Some((xp, fp)) = prev {
                if fx == 0.0 {
                    roots.push(x);
                } else if fp != 0.0 && fp.signum() != fx.signum() {
                    roots.push(bisect(|t| Ok::<_, ModeError>(self.dispersion(t)), xp, x, 0.0)?);
                }
            }
            prev = Some((x, fx));
        }
        roots.sort_by(|a, b| b.total_cmp(a));
        roots.dedup();
        Ok(roots)
    }

    /// Root closest to `guess`, searching outward up to `radius`.
    pub fn root_near(&self, guess: f64, radius: f64) -> Option<f64> {
        let (lower, upper) = self.window();
        let f = |x: f64| self.dispersion(x);
        let g = guess.clamp(lower, upper);
        let fg = f(g);
        if fg == 0.0 {
            return Some(g);
        }
        let mut step = 1e-7;
        let (mut left, mut fl) = (g, fg);
        let (mut right, mut fr) = (g, fg);
        while step <= radius * 2.0 {
            let r = (g + step).min(upper);
            let l = (g - step).max(lower);
            let (fr_new, fl_new) = (f(r), f(l));
            let right_hit = fr_new.signum() != fr.signum();
            let left_hit = fl_new.signum() != fl.signum();
            let refine = |a: f64, b: f64| brent(|t| Ok::<_, ()>(f(t)), a, b, 1e-15, 0.0).ok();
            match (left_hit, right_hit) {
                (true, true) => {
                    let a = refine(l, left)?;
                    let b = refine(right, r)?;
                    return Some(if (a - g).abs() <= (b - g).abs() { a } else { b });
                }
                (false, true) => return refine(right, r),
                (true, false) => return refine(l, left),
                (false, false) => {}
            }
            if r >= upper && l <= lower {
                return None;
            }
            right = r;
            fr = fr_new;
            left = l;
            fl = fl_new;
            step *= 2.0;
        }
        None
    }
}

/// Dispersion-relation residual of a trial effective index.
pub fn dispersion_residual(
    stack: &LayerStack,
    wavelength_nm: f64,
    pol: Polarization,
    n_eff: f64,
) -> Result<f64, ModeError> {
    Ok(Guide::new(stack, wavelength_nm, pol)?.dispersion(n_eff))
}

fn scan_modes(stack: &LayerStack, wavelength_nm: f64, pol: Polarization) -> Result<Vec<f64>, ModeError> {
    let guide = Guide::new(stack, wavelength_nm, pol)?;
    let mut roots = guide.scan(SCAN_STEP)?;
    if roots.is_empty() {
        roots = guide.scan(SCAN_STEP / 10.0)?;
    }
    if roots.is_empty() {
        return Err(ModeError::NoGuidedMode { pol, wavelength_nm });
    }
    Ok(roots)
}

/// Follows the mode at `n_eff` (wavelength `from_nm`) to `to_nm`.
fn follow(
    stack: &LayerStack,
    pol: Polarization,
    order: usize,
    n_eff: f64,
    neighbour_gap: f64,
    to_nm: f64,
) -> Result<f64, ModeError> {
    let guide = Guide::new(stack, to_nm, pol)?;
    let radius = (0.25 * neighbour_gap).min(5e-3);
    let lost = ModeError::ModeTrackingLost {
        pol,
        order,
        wavelength_nm: to_nm,
    };
    let n = guide.root_near(n_eff, radius).ok_or(lost)?;
    if (n - n_eff).abs() > radius {
        return Err(ModeError::ModeTrackingLost {
            pol,
            order,
            wavelength_nm: to_nm,
        });
    }
    Ok(n)
}

fn gap_to_neighbours(roots: &[f64], i: usize) -> f64 {
    let above = if i > 0 { roots[i - 1] - roots[i] } else { f64::INFINITY };
    let below = roots.get(i + 1).map_or(f64::INFINITY, |r| roots[i] - r);
    above.min(below)
}

fn central_group_index(
    stack: &LayerStack,
    pol: Polarization,
    wavelength_nm: f64,
    order: usize,
    n_eff: f64,
    gap: f64,
    step_nm: f64,
) -> Result<f64, ModeError> {
    let hi = follow(stack, pol, order, n_eff, gap, wavelength_nm + step_nm)?;
    let lo = follow(stack, pol, order, n_eff, gap, wavelength_nm - step_nm)?;
    Ok(n_eff - wavelength_nm * (hi - lo) / (2.0 * step_nm))
}

/// All guided modes of one polarization, fundamental first.
pub fn guided_modes(
    stack: &LayerStack,
    wavelength_nm: f64,
    pol: Polarization,
) -> Result<Vec<GuidedMode>, ModeError> {
    let roots = scan_modes(stack, wavelength_nm, pol)?;
    let guide = Guide::new(stack, wavelength_nm, pol)?;
    let mut modes = Vec::with_capacity(roots.len());
    for (order, &n_eff) in roots.iter().enumerate() {
        let gap = gap_to_neighbours(&roots, order);
        let group_index =
            central_group_index(stack, pol, wavelength_nm, order, n_eff, gap, GROUP_STEP_NM).ok();
        modes.push(GuidedMode {
            polarization: pol,
            wavelength_nm,
            n_eff,
            group_index,
            order,
            residual: guide.dispersion(n_eff),
        });
    }
    Ok(modes)
}

pub fn fundamental_mode(
    stack: &LayerStack,
    wavelength_nm: f64,
    pol: Polarization,
) -> Result<GuidedMode, ModeError> {
    Ok(guided_modes(stack, wavelength_nm, pol)?[0])
}

/// `n_eff(TE0) - n_eff(TM0)`.
pub fn birefringence(stack: &LayerStack, wavelength_nm: f64) -> Result<f64, ModeError> {
    let te = scan_modes(stack, wavelength_nm, Polarization::TE)?[0];
    let tm = scan_modes(stack, wavelength_nm, Polarization::TM)?[0];
    Ok(te - tm)
}

/// Group index of the mode of a given order, by central difference with
/// the mode followed across `wavelength_nm +- step_nm`.
pub fn mode_group_index(
    stack: &LayerStack,
    pol: Polarization,
    wavelength_nm: f64,
    order: usize,
    step_nm: f64,
) -> Result<f64, ModeError> {
    let roots = scan_modes(stack, wavelength_nm, pol)?;
    let n_eff = *roots.get(order).ok_or(ModeError::ModeTrackingLost {
        pol,
        order,
        wavelength_nm,
    })?;
    let gap = gap_to_neighbours(&roots, order);
    central_group_index(stack, pol, wavelength_nm, order, n_eff, gap, step_nm)
}

/// Source of effective indices for the phase-matching solver.
pub trait EffectiveIndex {
    fn effective_index(&self, pol: Polarization, wavelength_nm: f64) -> Result<f64, ModeError>;

    fn group_index(&self, pol: Polarization, wavelength_nm: f64) -> Result<f64, ModeError> {
        let h = GROUP_STEP_NM;
        let n = self.effective_index(pol, wavelength_nm)?;
        let hi = self.effective_index(pol, wavelength_nm + h)?;
        let lo = self.effective_index(pol, wavelength_nm - h)?;
        Ok(n - wavelength_nm * (hi - lo) / (2.0 * h))
    }
}

/// Effective indices linear in wavelength; for artificial dispersion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearIndex {
    pub reference_nm: f64,
    /// `[TE, TM]` indices at the reference wavelength.
    pub n: [f64; 2],
    /// `[TE, TM]` slopes `dn/dlambda`, 1/nm.
    pub slope: [f64; 2],
}

impl LinearIndex {
    /// Same dispersionless index for both polarizations.
    pub fn isotropic(n: f64) -> Self {
        Self {
            reference_nm: 1.0,
            n: [n, n],
            slope: [0.0, 0.0],
        }
    }
}

impl EffectiveIndex for LinearIndex {
    fn effective_index(&self, pol: Polarization, wavelength_nm: f64) -> Result<f64, ModeError> {
        let i = match pol {
            Polarization::TE => 0,
            Polarization::TM => 1,
        };
        Ok(self.n[i] + self.slope[i] * (wavelength_nm - self.reference_nm))
    }
}

/// Effective indices of another source sampled on a uniform wavelength
/// grid and interpolated with local cubic polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedIndex {
    start_nm: f64,
    step_nm: f64,
    /// `[TE, TM]` samples.
    values: [Vec<f64>; 2],
}

impl TabulatedIndex {
    /// Default node spacing, nm.
    pub const STEP_NM: f64 = 0.25;

    /// Samples `source` over `[lo_nm, hi_nm]` (widened by one node each side).
    pub fn new(source: &impl EffectiveIndex, lo_nm: f64, hi_nm: f64, step_nm: f64) -> Result<Self, ModeError> {
        let start_nm = lo_nm - step_nm;
        let count = ((hi_nm + step_nm - start_nm) / step_nm).ceil() as usize + 1;
        let sample = |pol| -> Result<Vec<f64>, ModeError> {
            (0..count.max(4))
                .map(|k| source.effective_index(pol, start_nm + k as f64 * step_nm))
                .collect()
        };
        Ok(Self {
            start_nm,
            step_nm,
            values: [sample(Polarization::TE)?, sample(Polarization::TM)?],
        })
    }

    pub fn range_nm(&self) -> (f64, f64) {
        let n = self.values[0].len();
        (self.start_nm, self.start_nm + (n - 1) as f64 * self.step_nm)
    }
}

impl EffectiveIndex for TabulatedIndex {
    fn effective_index(&self, pol: Polarization, wavelength_nm: f64) -> Result<f64, ModeError> {
        let v = match pol {
            Polarization::TE => &self.values[0],
            Polarization::TM => &self.values[1],
        };
        let (lo, hi) = self.range_nm();
        if !(wavelength_nm >= lo && wavelength_nm <= hi) {
            return Err(ModeError::ModeTrackingLost {
                pol,
                order: 0,
                wavelength_nm,
            });
        }
        let t = (wavelength_nm - self.start_nm) / self.step_nm;
        let i = (t.floor() as usize).clamp(1, v.len() - 3) - 1;
        let x = t - i as f64;
        // Lagrange cubic through nodes i..i+3 at x = 0, 1, 2, 3.
        let w = [
            -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0,
            x * (x - 2.0) * (x - 3.0) / 2.0,
            -x * (x - 1.0) * (x - 3.0) / 2.0,
            x * (x - 1.0) * (x - 2.0) / 6.0,
        ];
        Ok((0..4).map(|k| w[k] * v[i + k]).sum())
    }
}

#[derive(Debug, Clone, Copy)]
struct Anchor {
    wavelength_nm: f64,
    n_eff: f64,
    slope: f64,
    gap: f64,
}

/// Fundamental TE and TM modes of a stack, followed continuously from a
/// full scan at a reference wavelength.
///
/// Each query re-solves the dispersion relation at the requested
/// wavelength, starting from a first-order extrapolation of the reference
/// mode and taking the nearest root.
#[derive(Debug, Clone)]
pub struct FundamentalModes {
    stack: LayerStack,
    anchors: [Anchor; 2],
}

impl FundamentalModes {
    pub fn new(stack: LayerStack, reference_nm: f64) -> Result<Self, ModeError> {
        let anchor = |pol: Polarization| -> Result<Anchor, ModeError> {
            let roots = scan_modes(&stack, reference_nm, pol)?;
            let gap = gap_to_neighbours(&roots, 0);
            let ng = central_group_index(&stack, pol, reference_nm, 0, roots[0], gap, GROUP_STEP_NM)?;
            Ok(Anchor {
                wavelength_nm: reference_nm,
                n_eff: roots[0],
                slope: (roots[0] - ng) / reference_nm,
                gap,
            })
        };
        let anchors = [anchor(Polarization::TE)?, anchor(Polarization::TM)?];
        Ok(Self { stack, anchors })
    }

    pub fn stack(&self) -> &LayerStack {
        &self.stack
    }

    /// Effective index at the reference wavelength.
    pub fn reference_index(&self, pol: Polarization) -> f64 {
        self.anchor(pol).n_eff
    }

    pub fn reference_wavelength(&self) -> f64 {
        self.anchors[0].wavelength_nm
    }

    fn anchor(&self, pol: Polarization) -> &Anchor {
        match pol {
            Polarization::TE => &self.anchors[0],
            Polarization::TM => &self.anchors[1],
        }
    }
}

impl EffectiveIndex for FundamentalModes {
    fn effective_index(&self, pol: Polarization, wavelength_nm: f64) -> Result<f64, ModeError> {
        let a = self.anchor(pol);
        let guess = a.n_eff + a.slope * (wavelength_nm - a.wavelength_nm);
        let guide = Guide::new(&self.stack, wavelength_nm, pol)?;
        let radius = (0.5 * a.gap).min(0.02);
        guide
            .root_near(guess, radius)
            .filter(|n| (n - guess).abs() <= radius)
            .ok_or(ModeError::ModeTrackingLost {
                pol,
                order: 0,
                wavelength_nm,
            })
    }
}
