//! Emission spectra of the nominal device.

use std::sync::OnceLock;

use twinphoton::modes::FundamentalModes;
use twinphoton::phasematch::{degeneracy_angle, solve_pair, Interaction};
use twinphoton::spectra::{
    bandwidth_comparison, convolve, fluorescence_spectrum, fwhm, phase_matching_spectrum, ConvolutionKernel,
    FluorescenceOptions, Grid, Photon, Spectrum,
};
use twinphoton::stack::{build_nominal_stack, StackDesign};

fn modes() -> &'static FundamentalModes {
    static M: OnceLock<FundamentalModes> = OnceLock::new();
    M.get_or_init(|| FundamentalModes::new(build_nominal_stack(&StackDesign::default()).unwrap(), 1520.0).unwrap())
}

fn degenerate_sinc2() -> Spectrum {
    let theta = degeneracy_angle(modes(), Interaction::One, 760.0).unwrap();
    let p = solve_pair(modes(), theta, 760.0, Interaction::One).unwrap();
    let grid = Grid::around(p.lambda_s_nm, 5.0, 0.005).unwrap();
    phase_matching_spectrum(modes(), theta, 760.0, Interaction::One, Photon::Copropagating, 1.0, &grid).unwrap()
}

#[test]
fn one_millimetre_bandwidth() {
    let w = fwhm(&degenerate_sinc2()).unwrap();
    assert!((0.15..=0.45).contains(&w), "{w}");
    // Regression value of this engine.
    assert!((w - 0.317_65).abs() < 1e-3, "{w}");
}

#[test]
fn counterpropagating_is_much_narrower_than_copropagating() {
    let theta = degeneracy_angle(modes(), Interaction::One, 760.0).unwrap();
    let p = solve_pair(modes(), theta, 760.0, Interaction::One).unwrap();
    let bw = bandwidth_comparison(modes(), &p, 1.0).unwrap();
    let measured = fwhm(&degenerate_sinc2()).unwrap();
    assert!((measured / bw.counterpropagating_nm - 1.0).abs() < 0.01);
    assert!(bw.copropagating_nm >= 10.0 * measured);
}

#[test]
fn instrument_convolution_broadens_towards_measured_width() {
    let sp = degenerate_sinc2();
    let pump = convolve(&sp, &ConvolutionKernel::gaussian(0.3).unwrap()).unwrap();
    let both = convolve(&pump, &ConvolutionKernel::gaussian(0.1).unwrap()).unwrap();
    let (w0, w1, w2) = (fwhm(&sp).unwrap(), fwhm(&pump).unwrap(), fwhm(&both).unwrap());
    assert!(w0 <= w1 && w1 <= w2 && w2 >= 0.3);
    assert!((w2 - 0.53).abs() <= 0.15, "{w2}");
    assert!((both.integral() / sp.integral() - 1.0).abs() < 1e-3);
}

#[test]
fn fluorescence_at_three_degrees_has_four_peaks() {
    let f = fluorescence_spectrum(modes(), 3.1, 759.5, &FluorescenceOptions::default()).unwrap();
    let peaks = f.peaks();
    assert_eq!(peaks.len(), 4, "{peaks:?}");
    let step = f.spectrum.grid.step_nm;
    for p in &f.pairs {
        let s = peaks.iter().find(|k| (k.wavelength_nm - p.lambda_s_nm).abs() < 2.0 * step).unwrap();
        let i = peaks.iter().find(|k| (k.wavelength_nm - p.lambda_i_nm).abs() < 2.0 * step).unwrap();
        let mismatch = 1.0 / s.wavelength_nm + 1.0 / i.wavelength_nm - 1.0 / 759.5;
        // Within grid resolution, expressed in wavenumber.
        assert!(mismatch.abs() < 2.0 * step / (1520.0 * 1520.0));
        // Longer photon of each pair is attenuated by one facet reflection.
        assert!(i.height < s.height);
    }
}

#[test]
fn fluorescence_at_degeneracy_merges_one_pair() {
    let theta = degeneracy_angle(modes(), Interaction::One, 760.0).unwrap();
    let opts = FluorescenceOptions {
        interactions: vec![Interaction::One],
        ..Default::default()
    };
    let f = fluorescence_spectrum(modes(), theta, 760.0, &opts).unwrap();
    assert_eq!(f.peaks().len(), 1);
    let both = fluorescence_spectrum(modes(), theta, 760.0, &FluorescenceOptions::default()).unwrap();
    assert_eq!(both.peaks().len(), 3);
}

#[test]
fn fluorescence_is_deterministic() {
    let a = fluorescence_spectrum(modes(), 3.1, 759.5, &FluorescenceOptions::default()).unwrap();
    let b = fluorescence_spectrum(modes(), 3.1, 759.5, &FluorescenceOptions::default()).unwrap();
    assert_eq!(a, b);
}
