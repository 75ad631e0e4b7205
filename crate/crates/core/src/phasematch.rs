//! Energy and longitudinal momentum conservation for twin photons emitted
//! along the guide in opposite directions.
//!
//! Wavelengths are handled through vacuum wavenumbers `nu = 1 / lambda`
//! (1/nm). The copropagating photon (`s`) travels along the in-plane
//! component of the pump wavevector, the counterpropagating one (`i`)
//! against it:
//!
//! ```text
//! nu_s + nu_i = nu_p
//! nu_p sin(theta) = n_s nu_s - n_i nu_i
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modes::{EffectiveIndex, ModeError};
use crate::roots::{brent, RootError};
use crate::stack::Polarization;

/// Half-width of the first copropagating-wavelength search window, nm.
pub const SEARCH_HALF_WIDTH_NM: f64 = 150.0;
/// Momentum tolerance relative to `k_p`.
pub const MOMENTUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PhaseMatchError {
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error("pump angle {0} deg outside (-90, 90)")]
    InvalidAngle(f64),
    #[error("pump wavelength {0} nm is not positive and finite")]
    InvalidWavelength(f64),
    #[error("interaction {interaction}: no phase matching at {theta_deg} deg within {lo_nm}-{hi_nm} nm")]
    NoSolutionInWindow {
        interaction: Interaction,
        theta_deg: f64,
        lo_nm: f64,
        hi_nm: f64,
    },
    #[error("root refinement failed: {0}")]
    Root(String),
}

impl From<RootError<PhaseMatchError>> for PhaseMatchError {
    fn from(e: RootError<PhaseMatchError>) -> Self {
        match e {
            RootError::Eval(e) => e,
            other => PhaseMatchError::Root(other.to_string()),
        }
    }
}

/// The two type-II processes of the guide. Serialized as 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Interaction {
    /// Copropagating photon TE, counterpropagating photon TM.
    One,
    /// Copropagating photon TM, counterpropagating photon TE.
    Two,
}

impl Interaction {
    pub const BOTH: [Interaction; 2] = [Interaction::One, Interaction::Two];

    pub fn id(self) -> u8 {
        match self {
            Interaction::One => 1,
            Interaction::Two => 2,
        }
    }

    pub fn copropagating(self) -> Polarization {
        match self {
            Interaction::One => Polarization::TE,
            Interaction::Two => Polarization::TM,
        }
    }

    pub fn counterpropagating(self) -> Polarization {
        self.copropagating().other()
    }
}

impl From<Interaction> for u8 {
    fn from(i: Interaction) -> u8 {
        i.id()
    }
}

impl TryFrom<u8> for Interaction {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(Interaction::One),
            2 => Ok(Interaction::Two),
            _ => Err(format!("interaction must be 1 or 2, got {v}")),
        }
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseMatchPoint {
    pub theta_deg: f64,
    pub lambda_p_nm: f64,
    pub interaction: Interaction,
    /// Copropagating photon.
    pub lambda_s_nm: f64,
    /// Counterpropagating photon.
    pub lambda_i_nm: f64,
    pub n_s: f64,
    pub n_i: f64,
    /// `delta_k / k_p` at the solution.
    pub momentum_residual: f64,
}

fn check_inputs(theta_deg: f64, lambda_p_nm: f64) -> Result<(), PhaseMatchError> {
    if !(theta_deg.is_finite() && theta_deg.abs() < 90.0) {
        return Err(PhaseMatchError::InvalidAngle(theta_deg));
    }
    if !(lambda_p_nm.is_finite() && lambda_p_nm > 0.0) {
        return Err(PhaseMatchError::InvalidWavelength(lambda_p_nm));
    }
    Ok(())
}

/// `(nu_p sin(theta) - n_s nu_s + n_i nu_i)`, 1/nm; `delta_k` divided by 2 pi.
fn mismatch_nu(
    idx: &impl EffectiveIndex,
    nu_s: f64,
    nu_p: f64,
    sin_theta: f64,
    inter: Interaction,
) -> Result<f64, ModeError> {
    let nu_i = nu_p - nu_s;
    let n_s = idx.effective_index(inter.copropagating(), 1.0 / nu_s)?;
    let n_i = idx.effective_index(inter.counterpropagating(), 1.0 / nu_i)?;
    Ok(nu_p * sin_theta - (n_s * nu_s - n_i * nu_i))
}

/// Longitudinal wavevector mismatch `k_p sin(theta) - (n_s k_s - n_i k_i)`
/// in 1/nm, with the counterpropagating photon fixed by energy.
pub fn delta_k(
    idx: &impl EffectiveIndex,
    lambda_s_nm: f64,
    theta_deg: f64,
    lambda_p_nm: f64,
    inter: Interaction,
) -> Result<f64, PhaseMatchError> {
    check_inputs(theta_deg, lambda_p_nm)?;
    let nu_p = 1.0 / lambda_p_nm;
    let f = mismatch_nu(idx, 1.0 / lambda_s_nm, nu_p, theta_deg.to_radians().sin(), inter)?;
    Ok(2.0 * std::f64::consts::PI * f)
}

/// Signal and idler wavelengths phase matched at pump angle `theta_deg`.
pub fn solve_pair(
    idx: &impl EffectiveIndex,
    theta_deg: f64,
    lambda_p_nm: f64,
    inter: Interaction,
) -> Result<PhaseMatchPoint, PhaseMatchError> {
    check_inputs(theta_deg, lambda_p_nm)?;
    let nu_p = 1.0 / lambda_p_nm;
    let sin_theta = theta_deg.to_radians().sin();
    let f = |nu_s: f64| mismatch_nu(idx, nu_s, nu_p, sin_theta, inter).map_err(PhaseMatchError::from);
    let centre = 2.0 * lambda_p_nm;

    let mut last_window = (0.0, 0.0);
    for half_width in [SEARCH_HALF_WIDTH_NM, 2.0 * SEARCH_HALF_WIDTH_NM] {
        let (lo_nm, hi_nm) = (centre - half_width, centre + half_width);
        last_window = (lo_nm, hi_nm);
        if lo_nm <= lambda_p_nm {
            continue;
        }
        let (a, b) = (1.0 / hi_nm, 1.0 / lo_nm);
        // The widened window may leave the range the index model covers;
        // that ends the search rather than failing it.
        let (fa, fb) = match (f(a), f(b)) {
            (Ok(fa), Ok(fb)) => (fa, fb),
            (Err(e), _) | (_, Err(e)) if half_width == SEARCH_HALF_WIDTH_NM => return Err(e),
            _ => break,
        };
        if fa.signum() == fb.signum() && fa != 0.0 && fb != 0.0 {
            continue;
        }
        let nu_s = brent(f, a, b, 0.0, 1e-3 * MOMENTUM_TOLERANCE * nu_p)?;
        let nu_i = nu_p - nu_s;
        let (lambda_s_nm, lambda_i_nm) = (1.0 / nu_s, 1.0 / nu_i);
        let n_s = idx.effective_index(inter.copropagating(), lambda_s_nm)?;
        let n_i = idx.effective_index(inter.counterpropagating(), lambda_i_nm)?;
        let residual = (nu_p * sin_theta - (n_s * nu_s - n_i * nu_i)) / nu_p;
        if residual.abs() >= MOMENTUM_TOLERANCE {
            return Err(PhaseMatchError::Root(format!(
                "momentum residual {residual:e} k_p after refinement"
            )));
        }
        return Ok(PhaseMatchPoint {
            theta_deg,
            lambda_p_nm,
            interaction: inter,
            lambda_s_nm,
            lambda_i_nm,
            n_s,
            n_i,
            momentum_residual: residual,
        });
    }
    Err(PhaseMatchError::NoSolutionInWindow {
        interaction: inter,
        theta_deg,
        lo_nm: last_window.0,
        hi_nm: last_window.1,
    })
}

/// Pump angle at which the two photons of `inter` are degenerate at
/// `2 lambda_p`: `sin(theta) = (n_s - n_i) lambda_p / lambda_deg`.
pub fn degeneracy_angle(
    idx: &impl EffectiveIndex,
    inter: Interaction,
    lambda_p_nm: f64,
) -> Result<f64, PhaseMatchError> {
    check_inputs(0.0, lambda_p_nm)?;
    let lambda_deg = 2.0 * lambda_p_nm;
    let n_s = idx.effective_index(inter.copropagating(), lambda_deg)?;
    let n_i = idx.effective_index(inter.counterpropagating(), lambda_deg)?;
    let s = (n_s - n_i) * lambda_p_nm / lambda_deg;
    if s.abs() >= 1.0 {
        return Err(PhaseMatchError::InvalidAngle(f64::NAN));
    }
    Ok(s.asin().to_degrees())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TuningPoint {
    #[serde(flatten)]
    pub point: PhaseMatchPoint,
    /// Row inserted at the degeneracy angle of its interaction.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningFailure {
    pub interaction: Interaction,
    pub theta_deg: f64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TuningCurve {
    /// Sorted by interaction, then angle.
    pub points: Vec<TuningPoint>,
    pub failures: Vec<TuningFailure>,
}

impl TuningCurve {
    pub fn branch(&self, inter: Interaction) -> impl Iterator<Item = &TuningPoint> {
        self.points.iter().filter(move |p| p.point.interaction == inter)
    }
}

/// Uniform angle grid from `start` to `stop` inclusive.
pub fn angle_grid(start_deg: f64, stop_deg: f64, step_deg: f64) -> Result<Vec<f64>, PhaseMatchError> {
    if !(step_deg.is_finite() && step_deg > 0.0 && stop_deg >= start_deg) {
        return Err(PhaseMatchError::InvalidAngle(step_deg));
    }
    check_inputs(start_deg, 1.0)?;
    check_inputs(stop_deg, 1.0)?;
    let n = ((stop_deg - start_deg) / step_deg + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start_deg + k as f64 * step_deg).collect())
}

/// Sweep of both interactions over `angles`, with one extra row per
/// interaction at its degeneracy angle when it falls inside the sweep.
/// Points that fail are recorded and the sweep continues.
pub fn tuning_curve(idx: &impl EffectiveIndex, angles: &[f64], lambda_p_nm: f64) -> TuningCurve {
    let mut curve = TuningCurve::default();
    let (lo, hi) = angles
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    for inter in Interaction::BOTH {
        let mut rows: Vec<(f64, bool)> = angles.iter().map(|&t| (t, false)).collect();
        match degeneracy_angle(idx, inter, lambda_p_nm) {
            Ok(t) if t >= lo && t <= hi => rows.push((t, true)),
            Ok(_) => {}
            Err(e) => curve.failures.push(TuningFailure {
                interaction: inter,
                theta_deg: f64::NAN,
                message: format!("degeneracy angle: {e}"),
            }),
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (theta_deg, degenerate) in rows {
            match solve_pair(idx, theta_deg, lambda_p_nm, inter) {
                Ok(point) => curve.points.push(TuningPoint { point, degenerate }),
                Err(e) => curve.failures.push(TuningFailure {
                    interaction: inter,
                    theta_deg,
                    message: e.to_string(),
                }),
            }
        }
    }
    curve
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::LinearIndex;

    fn birefringent() -> LinearIndex {
        LinearIndex {
            reference_nm: 1520.0,
            n: [3.09, 3.077],
            slope: [-1.0e-4, -1.1e-4],
        }
    }

    #[test]
    fn zero_birefringence_is_degenerate_at_normal_incidence() {
        let idx = LinearIndex::isotropic(3.2);
        for inter in Interaction::BOTH {
            let p = solve_pair(&idx, 0.0, 760.0, inter).unwrap();
            assert!((p.lambda_s_nm - 1520.0).abs() < 1e-9);
            assert!((p.lambda_i_nm - 1520.0).abs() < 1e-9);
            assert_eq!(degeneracy_angle(&idx, inter, 760.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn degeneracy_angles_are_opposite() {
        let idx = birefringent();
        let a = degeneracy_angle(&idx, Interaction::One, 760.0).unwrap();
        let b = degeneracy_angle(&idx, Interaction::Two, 760.0).unwrap();
        assert!(a > 0.0);
        assert_eq!(a, -b);
        let p = solve_pair(&idx, a, 760.0, Interaction::One).unwrap();
        assert!((p.lambda_s_nm - 1520.0).abs() < 1e-6);
    }

    #[test]
    fn delta_k_vanishes_and_flips_at_solution() {
        let idx = birefringent();
        let p = solve_pair(&idx, 2.0, 760.0, Interaction::Two).unwrap();
        let kp = 2.0 * std::f64::consts::PI / 760.0;
        let at = delta_k(&idx, p.lambda_s_nm, 2.0, 760.0, Interaction::Two).unwrap();
        assert!(at.abs() < 1e-9 * kp);
        let below = delta_k(&idx, p.lambda_s_nm - 0.1, 2.0, 760.0, Interaction::Two).unwrap();
        let above = delta_k(&idx, p.lambda_s_nm + 0.1, 2.0, 760.0, Interaction::Two).unwrap();
        assert!(below.signum() != above.signum());
    }

    #[test]
    fn unreachable_angle_reports_window() {
        let idx = LinearIndex::isotropic(3.2);
        assert!(matches!(
            solve_pair(&idx, 60.0, 760.0, Interaction::One),
            Err(PhaseMatchError::NoSolutionInWindow { .. })
        ));
        assert!(matches!(
            solve_pair(&idx, 90.0, 760.0, Interaction::One),
            Err(PhaseMatchError::InvalidAngle(_))
        ));
    }

    #[test]
    fn tuning_inserts_degenerate_rows_and_records_failures() {
        let idx = birefringent();
        let angles = angle_grid(-1.0, 4.0, 0.5).unwrap();
        assert_eq!(angles.len(), 11);
        let curve = tuning_curve(&idx, &angles, 760.0);
        assert_eq!(curve.points.iter().filter(|p| p.degenerate).count(), 2);
        assert_eq!(curve.points.len(), 24);
        assert!(curve.failures.is_empty());

        let wide = tuning_curve(&LinearIndex::isotropic(3.2), &[0.0, 60.0], 760.0);
        assert_eq!(wide.failures.len(), 2);
        assert!(wide.points.iter().all(|p| p.point.theta_deg < 1.0));
    }

    #[test]
    fn interaction_serializes_as_number() {
        assert_eq!(serde_json::to_string(&Interaction::Two).unwrap(), "2");
        let i: Interaction = serde_json::from_str("1").unwrap();
        assert_eq!(i, Interaction::One);
        assert!(serde_json::from_str::<Interaction>("3").is_err());
    }
}
