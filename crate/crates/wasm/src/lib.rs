//! Browser bindings. Every export returns a JSON string for the page to
//! parse; errors surface as JS exceptions.

use std::cell::RefCell;

use serde_json::json;
use wasm_bindgen::prelude::*;

use twinphoton::config::DeviceConfig;
use twinphoton::hom::{self, DipModel, FitOptions, ScanRates};
use twinphoton::modes::FundamentalModes;
use twinphoton::phasematch::{angle_grid, tuning_curve};
use twinphoton::spectra::fluorescence_spectrum;

thread_local! {
    // Tracker of the nominal stack, keyed by its reference wavelength.
    static MODES: RefCell<Option<(f64, FundamentalModes)>> = const { RefCell::new(None) };
}

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn with_modes<T>(lambda_p_nm: f64, f: impl FnOnce(&FundamentalModes) -> Result<T, JsError>) -> Result<T, JsError> {
    let reference = 2.0 * lambda_p_nm;
    MODES.with(|cell| {
        let mut slot = cell.borrow_mut();
        if slot.as_ref().is_none_or(|(r, _)| *r != reference) {
            let stack = DeviceConfig::default().build_stack().map_err(err)?;
            *slot = Some((reference, FundamentalModes::new(stack, reference).map_err(err)?));
        }
        f(&slot.as_ref().expect("initialised").1)
    })
}

/// Tuning curve of the nominal device: rows of
/// `{interaction, theta_deg, lambda_s_nm, lambda_i_nm, degenerate}`.
#[wasm_bindgen]
pub fn tuning(lambda_p_nm: f64, start_deg: f64, stop_deg: f64, step_deg: f64) -> Result<String, JsError> {
    let angles = angle_grid(start_deg, stop_deg, step_deg).map_err(err)?;
    with_modes(lambda_p_nm, |idx| {
        let curve = tuning_curve(idx, &angles, lambda_p_nm);
        let rows: Vec<_> = curve
            .points
            .iter()
            .map(|p| {
                json!({
                    "interaction": p.point.interaction.id(),
                    "theta_deg": p.point.theta_deg,
                    "lambda_s_nm": p.point.lambda_s_nm,
                    "lambda_i_nm": p.point.lambda_i_nm,
                    "degenerate": p.degenerate,
                })
            })
            .collect();
        Ok(json!({"rows": rows, "failures": curve.failures.len()}).to_string())
    })
}

/// Four-peak fluorescence spectrum with the default instrument kernels.
#[wasm_bindgen]
pub fn spectrum(theta_deg: f64, lambda_p_nm: f64, length_mm: f64) -> Result<String, JsError> {
    let cfg = DeviceConfig {
        sample_length_mm: length_mm,
        ..DeviceConfig::default()
    };
    let opts = cfg.fluorescence_options().map_err(err)?;
    with_modes(lambda_p_nm, |idx| {
        let f = fluorescence_spectrum(idx, theta_deg, lambda_p_nm, &opts).map_err(err)?;
        Ok(json!({
            "start_nm": f.spectrum.grid.start_nm,
            "step_nm": f.spectrum.grid.step_nm,
            "intensity": f.spectrum.intensity,
            "peaks": f.peaks(),
        })
        .to_string())
    })
}

/// Simulated delay scan at the default count rates, its fit and the
/// generating curve.
#[wasm_bindgen]
pub fn hom_scan(visibility: f64, delta_lambda_nm: f64, dwell_s: f64, points: usize, seed: u64) -> Result<String, JsError> {
    let cfg = DeviceConfig::default();
    let m = DipModel {
        visibility,
        wavelength_nm: cfg.hom.wavelength_nm,
        delta_lambda_nm,
    };
    let rates: ScanRates = cfg.scan_rates().map_err(err)?;
    let z = hom::linear_positions(cfg.hom.start_mm, cfg.hom.stop_mm, points).map_err(err)?;
    let scan = hom::simulate_scan(&m, &rates, &z, dwell_s, seed).map_err(err)?;
    let fit = hom::fit_dip(&scan, m.wavelength_nm, &FitOptions::default());
    let fine = hom::linear_positions(cfg.hom.start_mm, cfg.hom.stop_mm, 241).map_err(err)?;
    let curve: Vec<_> = hom::expected_means(&m, &rates, &fine, dwell_s)
        .map_err(err)?
        .into_iter()
        .map(|(z, total, acc)| [z, total - acc])
        .collect();
    let fit = match fit {
        Ok(f) => json!({
            "visibility": f.visibility,
            "visibility_se": f.visibility_se,
            "delta_lambda_nm": f.delta_lambda_nm,
            "delta_lambda_se": f.delta_lambda_se,
            "fwhm_mm": f.fwhm_mm,
            "baseline": f.baseline,
        }),
        Err(e) => json!({"error": e.to_string()}),
    };
    Ok(json!({
        "points": scan.points,
        "expected_net": curve,
        "fit": fit,
        "fwhm_mm": m.fwhm_mm(),
    })
    .to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exports_return_json() {
        let t: serde_json::Value = serde_json::from_str(&tuning(760.0, -1.0, 4.0, 0.5).unwrap()).unwrap();
        assert_eq!(t["rows"].as_array().unwrap().len(), 2 * 12);
        let s: serde_json::Value = serde_json::from_str(&spectrum(3.1, 759.5, 1.0).unwrap()).unwrap();
        assert_eq!(s["peaks"].as_array().unwrap().len(), 4);
        let h: serde_json::Value = serde_json::from_str(&hom_scan(0.85, 0.53, 60.0, 25, 3).unwrap()).unwrap();
        assert_eq!(h["points"].as_array().unwrap().len(), 25);
        assert!(h["fit"]["visibility"].as_f64().is_some());
    }
}
