//! Two-photon interference dip: analytic shape, facet-reflection
//! visibility, Poisson-sampled coincidence scans and dip fitting.
//!
//! The normalized coincidence rate versus path difference `dz` is
//!
//! ```text
//! N_c(dz) = 1 - V exp(-(pi^2 / ln 2) (dz * dlambda / lambda^2)^2)
//! ```
//!
//! with `dlambda` the FWHM of the single-photon spectral intensity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::efficiency::CountBudget;

const MM_TO_NM: f64 = 1e6;

#[derive(Debug, Error, PartialEq)]
pub enum HomError {
    #[error("invalid dip model: {0}")]
    InvalidModel(String),
    #[error("invalid scan: {0}")]
    InvalidScan(String),
    #[error("no dip resolvable in the scan: {0}")]
    DegenerateScan(String),
    #[error("fit did not converge after {0} iterations")]
    NoConvergence(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipModel {
    pub visibility: f64,
    pub wavelength_nm: f64,
    /// FWHM of the photon spectrum, nm.
    pub delta_lambda_nm: f64,
}

impl Default for DipModel {
    fn default() -> Self {
        Self {
            visibility: 0.85,
            wavelength_nm: 1520.0,
            delta_lambda_nm: 0.53,
        }
    }
}

impl DipModel {
    pub fn validate(&self) -> Result<(), HomError> {
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(HomError::InvalidModel(format!("visibility {} outside [0, 1]", self.visibility)));
        }
        if !(self.wavelength_nm.is_finite() && self.wavelength_nm > 0.0) {
            return Err(HomError::InvalidModel(format!("wavelength {}", self.wavelength_nm)));
        }
        if !(self.delta_lambda_nm.is_finite() && self.delta_lambda_nm > 0.0) {
            return Err(HomError::InvalidModel(format!("spectral width {}", self.delta_lambda_nm)));
        }
        Ok(())
    }

    /// Path difference at which the dip is half as deep, mm.
    pub fn half_width_mm(&self) -> f64 {
        half_width_mm(self.wavelength_nm, self.delta_lambda_nm)
    }

    pub fn fwhm_mm(&self) -> f64 {
        2.0 * self.half_width_mm()
    }
}

/// `(lambda^2 / dlambda) ln2 / pi`, mm.
pub fn half_width_mm(wavelength_nm: f64, delta_lambda_nm: f64) -> f64 {
    wavelength_nm * wavelength_nm / delta_lambda_nm * std::f64::consts::LN_2 / std::f64::consts::PI / MM_TO_NM
}

/// Gaussian envelope of the dip at `dz_mm`.
fn envelope(wavelength_nm: f64, delta_lambda_nm: f64, dz_mm: f64) -> f64 {
    let a = std::f64::consts::PI.powi(2) / std::f64::consts::LN_2;
    let x = dz_mm * MM_TO_NM * delta_lambda_nm / (wavelength_nm * wavelength_nm);
    (-a * x * x).exp()
}

/// Normalized coincidence rate.
pub fn dip_value(m: &DipModel, dz_mm: f64) -> f64 {
    1.0 - m.visibility * envelope(m.wavelength_nm, m.delta_lambda_nm, dz_mm)
}

/// `1 / (1 + 2 R^2)`: visibility left by photons reaching the beam splitter
/// after two facet reflections.
pub fn visibility_from_reflectivity(r: f64) -> Result<f64, HomError> {
    if !(0.0..1.0).contains(&r) {
        return Err(HomError::InvalidModel(format!("facet reflectance {r} outside [0, 1)")));
    }
    Ok(1.0 / (1.0 + 2.0 * r * r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub delta_z_mm: f64,
    pub total_counts: u64,
    pub accidental_counts: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomScan {
    pub points: Vec<ScanPoint>,
    pub dwell_s: f64,
    pub seed: Option<u64>,
}

impl HomScan {
    pub fn new(points: Vec<ScanPoint>, dwell_s: f64, seed: Option<u64>) -> Result<Self, HomError> {
        let s = Self { points, dwell_s, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), HomError> {
        if !(self.dwell_s.is_finite() && self.dwell_s > 0.0) {
            return Err(HomError::InvalidScan(format!("dwell time {} s", self.dwell_s)));
        }
        if self.points.iter().any(|p| !p.delta_z_mm.is_finite()) {
            return Err(HomError::InvalidScan("non-finite delay".into()));
        }
        if !self.points.windows(2).all(|w| w[1].delta_z_mm > w[0].delta_z_mm) {
            return Err(HomError::InvalidScan("delays must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Total minus accidental counts.
    pub fn net(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.total_counts as f64 - p.accidental_counts as f64)
            .collect()
    }
}

/// Coincidence rates driving a scan, 1/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRates {
    /// True coincidences far from the dip.
    pub coincidence_hz: f64,
    pub accidental_hz: f64,
}

impl From<&CountBudget> for ScanRates {
    fn from(b: &CountBudget) -> Self {
        Self {
            coincidence_hz: b.true_coincidences_hz,
            accidental_hz: b.accidental_coincidences_hz,
        }
    }
}

/// `count` delays evenly spaced over `[start, stop]`, mm.
pub fn linear_positions(start_mm: f64, stop_mm: f64, count: usize) -> Result<Vec<f64>, HomError> {
    if count < 2 || !(stop_mm > start_mm) {
        return Err(HomError::InvalidScan(format!("{count} points over {start_mm}..{stop_mm} mm")));
    }
    let step = (stop_mm - start_mm) / (count - 1) as f64;
    Ok((0..count).map(|k| start_mm + k as f64 * step).collect())
}

fn check_sim_inputs(m: &DipModel, rates: &ScanRates, positions: &[f64], dwell_s: f64) -> Result<(), HomError> {
    m.validate()?;
    if !(rates.coincidence_hz >= 0.0 && rates.accidental_hz >= 0.0) {
        return Err(HomError::InvalidScan("rates must be non-negative".into()));
    }
    if !(dwell_s.is_finite() && dwell_s > 0.0) {
        return Err(HomError::InvalidScan(format!("dwell time {dwell_s} s")));
    }
    if !positions.windows(2).all(|w| w[1] > w[0]) {
        return Err(HomError::InvalidScan("positions must be strictly increasing".into()));
    }
    Ok(())
}

/// Expected total and accidental counts at each delay.
pub fn expected_means(
    m: &DipModel,
    rates: &ScanRates,
    positions: &[f64],
    dwell_s: f64,
) -> Result<Vec<(f64, f64, f64)>, HomError> {
    check_sim_inputs(m, rates, positions, dwell_s)?;
    let acc = dwell_s * rates.accidental_hz;
    Ok(positions
        .iter()
        .map(|&z| (z, dwell_s * rates.coincidence_hz * dip_value(m, z) + acc, acc))
        .collect())
}

/// Scan with expected counts rounded to integers; no sampling noise.
pub fn expected_scan(m: &DipModel, rates: &ScanRates, positions: &[f64], dwell_s: f64) -> Result<HomScan, HomError> {
    let points = expected_means(m, rates, positions, dwell_s)?
        .into_iter()
        .map(|(z, total, acc)| ScanPoint {
            delta_z_mm: z,
            total_counts: total.round() as u64,
            accidental_counts: acc.round() as u64,
        })
        .collect();
    HomScan::new(points, dwell_s, None)
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Poisson-sampled scan; identical for identical inputs and seed.
pub fn simulate_scan(
    m: &DipModel,
    rates: &ScanRates,
    positions: &[f64],
    dwell_s: f64,
    seed: u64,
) -> Result<HomScan, HomError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = expected_means(m, rates, positions, dwell_s)?
        .into_iter()
        .map(|(z, total, acc)| ScanPoint {
            delta_z_mm: z,
            total_counts: poisson(&mut rng, total),
            accidental_counts: poisson(&mut rng, acc),
        })
        .collect();
    HomScan::new(points, dwell_s, Some(seed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub visibility: f64,
    pub visibility_se: f64,
    pub delta_lambda_nm: f64,
    pub delta_lambda_se: f64,
    pub wavelength_nm: f64,
    /// Net counts far from the dip used for normalization.
    pub baseline: f64,
    pub fwhm_mm: f64,
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
    /// Weighted residuals of the normalized points.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Points beyond this many dip half-widths set the baseline.
    pub baseline_half_widths: f64,
    pub min_baseline_points: usize,
    pub rel_tol: f64,
    /// Consecutive iterations below `rel_tol` needed to stop.
    pub stable_iterations: usize,
    pub max_iterations: usize,
    /// Coarse initial-width search range, nm.
    pub init_width_range_nm: (f64, f64),
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            baseline_half_widths: 3.0,
            min_baseline_points: 3,
            rel_tol: 1e-8,
            stable_iterations: 3,
            max_iterations: 200,
            init_width_range_nm: (0.1, 2.0),
        }
    }
}

struct Data<'a> {
    z: &'a [f64],
    net: &'a [f64],
    var: &'a [f64],
    lambda: f64,
}

impl Data<'_> {
    /// Weighted residuals and Jacobian rows for (V, dlambda) at baseline `b`.
    fn linearize(&self, b: f64, v: f64, w: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
        let a = std::f64::consts::PI.powi(2) / std::f64::consts::LN_2;
        let l4 = self.lambda.powi(4);
        let mut r = Vec::with_capacity(self.z.len());
        let mut jac = Vec::with_capacity(self.z.len());
        for i in 0..self.z.len() {
            let sigma = self.var[i].sqrt() / b;
            let g = envelope(self.lambda, w, self.z[i]);
            let model = 1.0 - v * g;
            let z_nm = self.z[i] * MM_TO_NM;
            let dg_dw = -2.0 * a * z_nm * z_nm * w / l4 * g;
            r.push((self.net[i] / b - model) / sigma);
            // d(model)/d(V, dlambda), weighted
            jac.push([-g / sigma, -v * dg_dw / sigma]);
        }
        (r, jac)
    }

    fn chi2(&self, b: f64, v: f64, w: f64) -> f64 {
        self.linearize(b, v, w).0.iter().map(|x| x * x).sum()
    }

    /// Points farther than `outer` dip half-widths from zero delay.
    fn outer_points(&self, w: f64, outer: f64, min_points: usize) -> Result<Vec<usize>, HomError> {
        let hw = half_width_mm(self.lambda, w);
        let idx: Vec<usize> = (0..self.z.len()).filter(|&i| self.z[i].abs() > outer * hw).collect();
        if idx.len() < min_points {
            return Err(HomError::DegenerateScan(format!(
                "{} points beyond {outer} dip half-widths ({:.3} mm), need {min_points}",
                idx.len(),
                outer * hw
            )));
        }
        Ok(idx)
    }

    /// Mean net counts over `idx` divided by the mean model value there.
    fn baseline(&self, v: f64, w: f64, idx: &[usize]) -> Result<f64, HomError> {
        let net: f64 = idx.iter().map(|&i| self.net[i]).sum::<f64>() / idx.len() as f64;
        let model: f64 =
            idx.iter().map(|&i| 1.0 - v * envelope(self.lambda, w, self.z[i])).sum::<f64>() / idx.len() as f64;
        let b = net / model;
        if !(b.is_finite() && b > 0.0) {
            return Err(HomError::DegenerateScan("non-positive baseline".into()));
        }
        Ok(b)
    }
}

/// Solves the 2x2 system `(A + mu diag A) x = g`.
fn solve2(a: [[f64; 2]; 2], g: [f64; 2], mu: f64) -> Option<[f64; 2]> {
    let m = [
        [a[0][0] * (1.0 + mu), a[0][1]],
        [a[1][0], a[1][1] * (1.0 + mu)],
    ];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([
        (g[0] * m[1][1] - g[1] * m[0][1]) / det,
        (m[0][0] * g[1] - m[1][0] * g[0]) / det,
    ])
}

fn normal_equations(r: &[f64], jac: &[[f64; 2]]) -> ([[f64; 2]; 2], [f64; 2]) {
    let mut a = [[0.0; 2]; 2];
    let mut g = [0.0; 2];
    for (ri, ji) in r.iter().zip(jac) {
        for p in 0..2 {
            g[p] += ji[p] * ri;
            for q in 0..2 {
                a[p][q] += ji[p] * ji[q];
            }
        }
    }
    (a, g)
}

/// Weighted Levenberg-Marquardt fit of `(V, dlambda)` to the net counts,
/// normalized by the baseline far from the dip.
pub fn fit_dip(scan: &HomScan, wavelength_nm: f64, opts: &FitOptions) -> Result<FitResult, HomError> {
    scan.validate()?;
    if scan.points.len() < 8 {
        return Err(HomError::InvalidScan(format!("{} points, need at least 8", scan.points.len())));
    }
    if !(wavelength_nm.is_finite() && wavelength_nm > 0.0) {
        return Err(HomError::InvalidModel(format!("wavelength {wavelength_nm}")));
    }
    let z: Vec<f64> = scan.points.iter().map(|p| p.delta_z_mm).collect();
    let net = scan.net();
    let var: Vec<f64> = scan
        .points
        .iter()
        .map(|p| ((p.total_counts + p.accidental_counts) as f64).max(1.0))
        .collect();
    let data = Data {
        z: &z,
        net: &net,
        var: &var,
        lambda: wavelength_nm,
    };

    // Start: outer third by |dz| as baseline, depth from the minimum.
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[b].abs().total_cmp(&z[a].abs()));
    let outer = &order[..(z.len() / 3).max(1)];
    let mut b = outer.iter().map(|&i| net[i]).sum::<f64>() / outer.len() as f64;
    if !(b > 0.0) {
        return Err(HomError::DegenerateScan("no net coincidences far from the dip".into()));
    }
    let min_net = net.iter().copied().fold(f64::INFINITY, f64::min);
    let mut v = (1.0 - min_net / b).clamp(0.0, 1.0);
    let (w_lo, w_hi) = opts.init_width_range_nm;
    let mut w = (0..=190)
        .map(|k| w_lo + (w_hi - w_lo) * k as f64 / 190.0)
        .map(|w| (w, data.chi2(b, v, w)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(w, _)| w)
        .unwrap_or(0.5);

    // Baseline points are chosen once, from the starting width, so that
    // the set cannot flip back and forth as the width converges.
    let outer_idx = data.outer_points(w, opts.baseline_half_widths, opts.min_baseline_points)?;
    let mut mu = 1e-3;
    let mut stable = 0;
    for iter in 1..=opts.max_iterations {
        b = data.baseline(v, w, &outer_idx)?;
        let (r, jac) = data.linearize(b, v, w);
        let chi2: f64 = r.iter().map(|x| x * x).sum();
        let (a, g) = normal_equations(&r, &jac);
        let mut accepted = None;
        for _ in 0..30 {
            let Some(step) = solve2(a, g, mu) else {
                mu *= 10.0;
                continue;
            };
            let (vn, wn) = (v + step[0], w + step[1]);
            if wn > 0.0 && vn.is_finite() {
                let trial = data.chi2(b, vn, wn);
                if trial <= chi2 {
                    accepted = Some((vn, wn));
                    mu = (mu * 0.3).max(1e-12);
                    break;
                }
            }
            mu *= 10.0;
        }
        let (vn, wn) = accepted.unwrap_or((v, w));
        let change = ((vn - v) / v.abs().max(1e-12)).abs().max(((wn - w) / w).abs());
        let b_next = data.baseline(vn, wn, &outer_idx)?;
        let b_change = ((b_next - b) / b).abs();
        v = vn;
        w = wn;
        if change < opts.rel_tol && b_change < opts.rel_tol {
            stable += 1;
        } else {
            stable = 0;
        }
        if stable >= opts.stable_iterations {
            return finish(&data, b_next, v, w, iter);
        }
    }
    Err(HomError::NoConvergence(opts.max_iterations))
}

fn finish(data: &Data, b: f64, v: f64, w: f64, iterations: usize) -> Result<FitResult, HomError> {
    let (r, jac) = data.linearize(b, v, w);
    let (a, _) = normal_equations(&r, &jac);
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if !(det.is_finite() && det > 0.0) {
        return Err(HomError::DegenerateScan("singular curvature at the optimum".into()));
    }
    let v_se = (a[1][1] / det).sqrt();
    let w_se = (a[0][0] / det).sqrt();
    if !(v > 2.0 * v_se) {
        return Err(HomError::DegenerateScan(format!(
            "visibility {v:.4} not above twice its standard error {v_se:.4}"
        )));
    }
    let chi2 = r.iter().map(|x| x * x).sum();
    Ok(FitResult {
        visibility: v,
        visibility_se: v_se,
        delta_lambda_nm: w,
        delta_lambda_se: w_se,
        wavelength_nm: data.lambda,
        baseline: b,
        fwhm_mm: 2.0 * half_width_mm(data.lambda, w),
        chi2,
        dof: data.z.len().saturating_sub(2),
        iterations,
        residuals: r,
    })
}
