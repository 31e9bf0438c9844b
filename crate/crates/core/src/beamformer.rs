//! Delay-and-sum beamforming over the MIMO virtual array and peak extraction.
//!
//! Element `(ntx, nrx)` sits at position dtx·ntx + drx·nrx. The angle spectrum is
//!
//! ```text
//! x_A[α] = Σ_ntx Σ_nrx x_R[ntx, nrx] · exp{−j2π (dtx·ntx + drx·nrx)·sin α / λ_c}
//! ```
//!
//! with λ_c the chirp-centre wavelength. Grid points are evaluated in parallel;
//! the sum over elements for each point always runs in index order.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::signal_chain::{ElementValues, RangeSpectrum};

#[derive(Debug, Clone, PartialEq)]
pub struct AngleSpectrum {
    angles: Vec<f64>,
    values: Vec<Complex64>,
    amplitude: f64,
    peak_index: usize,
}

/// Beamforms the detected-bin values of `r` on the scenario's angle grid.
pub fn beamform(r: &RangeSpectrum, s: &Scenario) -> AngleSpectrum {
    beamform_values(&r.detected_values(), s)
}

pub fn beamform_values(v: &ElementValues, s: &Scenario) -> AngleSpectrum {
    beamform_on(v, s, s.grid().angles())
}

/// Beamforms on an explicit, strictly increasing list of angles (rad).
pub fn beamform_on(v: &ElementValues, s: &Scenario, angles: Vec<f64>) -> AngleSpectrum {
    let positions = element_positions(v, s);
    let wavenumber = TAU / s.steering_wavelength_m();
    let values: Vec<Complex64> = angles
        .par_iter()
        .map(|&alpha| steer_unit(v.unit_values(), &positions, wavenumber, alpha))
        .collect();
    let peak_index = peak_index(&values);
    AngleSpectrum {
        angles,
        values,
        amplitude: v.amplitude(),
        peak_index,
    }
}

/// x_A at a single angle, gain included.
pub fn steer(v: &ElementValues, s: &Scenario, alpha: f64) -> Complex64 {
    let positions = element_positions(v, s);
    v.amplitude()
        * steer_unit(
            v.unit_values(),
            &positions,
            TAU / s.steering_wavelength_m(),
            alpha,
        )
}

fn element_positions(v: &ElementValues, s: &Scenario) -> Vec<f64> {
    let a = s.array();
    v.tx_indices()
        .iter()
        .flat_map(|&ntx| {
            v.rx_indices()
                .iter()
                .map(move |&nrx| a.tx_spacing_m * ntx as f64 + a.rx_spacing_m * nrx as f64)
        })
        .collect()
}

fn steer_unit(values: &[Complex64], positions: &[f64], wavenumber: f64, alpha: f64) -> Complex64 {
    let sin_alpha = alpha.sin();
    values
        .iter()
        .zip(positions)
        .fold(Complex64::new(0.0, 0.0), |acc, (x, &p)| {
            acc + x * Complex64::cis(-wavenumber * p * sin_alpha)
        })
}

/// Index of the largest magnitude; the smallest index wins ties.
fn peak_index(values: &[Complex64]) -> usize {
    let mut best = 0;
    let mut best_power = f64::NEG_INFINITY;
    for (i, x) in values.iter().enumerate() {
        let p = x.norm_sqr();
        if p > best_power {
            best = i;
            best_power = p;
        }
    }
    best
}

impl AngleSpectrum {
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn value(&self, i: usize) -> Complex64 {
        self.amplitude * self.values[i]
    }

    pub fn magnitude(&self, i: usize) -> f64 {
        self.value(i).norm()
    }

    pub fn peak_index(&self) -> usize {
        self.peak_index
    }

    /// Grid angle of the global maximum.
    pub fn grid_peak(&self) -> f64 {
        self.angles[self.peak_index]
    }

    pub fn peak_value(&self) -> Complex64 {
        self.value(self.peak_index)
    }

    /// Sub-grid peak angle: parabola through |x_A|² at the grid maximum and its
    /// neighbours, fitted in sin α.
    pub fn refine_peak(&self) -> Result<f64> {
        let i = self.peak_index;
        let n = self.angles.len();
        if i == 0 || i + 1 >= n {
            return Err(Error::PeakAtBoundary { index: i, len: n });
        }
        let x = [
            self.angles[i - 1].sin(),
            self.angles[i].sin(),
            self.angles[i + 1].sin(),
        ];
        let y = [
            self.values[i - 1].norm_sqr(),
            self.values[i].norm_sqr(),
            self.values[i + 1].norm_sqr(),
        ];
        Ok(parabolic_vertex(x, y).asin())
    }

    /// CSV dump with columns `alpha_deg,re,im,mag_db`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha_deg", "re", "im", "mag_db"])?;
        for i in 0..self.len() {
            let x = self.value(i);
            w.write_record(&[
                self.angles[i].to_degrees().to_string(),
                x.re.to_string(),
                x.im.to_string(),
                (20.0 * x.norm().log10()).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn refine_peak(a: &AngleSpectrum) -> Result<f64> {
    a.refine_peak()
}

/// Abscissa of the vertex of the parabola through three points, clamped to
/// `[x[0], x[2]]`. Spacing need not be uniform.
pub fn parabolic_vertex(x: [f64; 3], y: [f64; 3]) -> f64 {
    let (l, r) = (x[1] - x[0], x[1] - x[2]);
    let num = l * l * (y[1] - y[2]) - r * r * (y[1] - y[0]);
    let den = l * (y[1] - y[2]) - r * (y[1] - y[0]);
    if den == 0.0 {
        return x[1];
    }
    (x[1] - 0.5 * num / den).clamp(x[0], x[2])
}

/// Keeps the listed element indices of a range spectrum. Spacings are unchanged,
/// so beamforming uses the true positions of the kept elements.
pub fn select_subset(
    r: &RangeSpectrum,
    tx_keep: &[usize],
    rx_keep: &[usize],
) -> Result<RangeSpectrum> {
    r.select_subset(tx_keep, rx_keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::AngleGrid;
    use crate::signal_chain::{analytic_element_values, run_chain, ChainOptions};

    fn full_chain_peak(s: &Scenario) -> f64 {
        let r = run_chain(s, &ChainOptions::default()).unwrap();
        beamform(&r, s).refine_peak().unwrap()
    }

    #[test]
    fn symmetric_triple_refines_to_centre() {
        assert_eq!(parabolic_vertex([-0.1, 0.0, 0.1], [0.5, 1.0, 0.5]), 0.0);
        assert!((parabolic_vertex([0.2, 0.3, 0.4], [0.5, 1.0, 0.5]) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn parabola_vertex_is_exact_for_quadratics() {
        let f = |x: f64| 3.0 - 2.0 * (x - 0.123).powi(2);
        let x = [0.1, 0.11, 0.13];
        let v = parabolic_vertex(x, x.map(f));
        assert!((v - 0.123).abs() < 1e-12);
    }

    #[test]
    fn flat_triple_keeps_centre() {
        assert_eq!(parabolic_vertex([1.0, 2.0, 3.0], [1.0, 1.0, 1.0]), 2.0);
    }

    #[test]
    fn boresight_coherent_gain() {
        for (ntx, nrx) in [(2, 4), (1, 1), (3, 2)] {
            let s = Scenario::builder()
                .array_counts(ntx, nrx)
                .amplitude(1.5)
                .rts_delay_s(64e-9 - 2.0 / crate::SPEED_OF_LIGHT)
                .build()
                .unwrap();
            let r = run_chain(&s, &ChainOptions::default()).unwrap();
            let a = beamform(&r, &s);
            let zero = a.angles().iter().position(|&x| x.abs() < 1e-9).unwrap();
            if ntx * nrx > 1 {
                assert_eq!(a.peak_index(), zero);
                assert!(a.refine_peak().unwrap().abs() < 1e-6);
            }
            let gain = 1.5 * 1024.0 * (ntx * nrx) as f64;
            assert!((a.magnitude(zero) - gain).abs() / gain < 1e-9);
        }
    }

    #[test]
    fn baseline_array_with_displaced_transmitter() {
        // Brute-force array-factor oracle on a 1e-6° grid: 0.476492°.
        let s = Scenario::builder()
            .rts_angles_deg(0.0, 2.0)
            .build()
            .unwrap();
        let alpha = full_chain_peak(&s).to_degrees();
        assert!((alpha - 0.476492).abs() < 0.005, "{alpha}");
    }

    #[test]
    fn refined_peak_tracks_the_fine_grid_oracle() {
        let s = Scenario::builder()
            .rts_angles_deg(0.0, 2.0)
            .build()
            .unwrap();
        let values = analytic_element_values(&s, 0.0).unwrap();
        let coarse = beamform_values(&values, &s)
            .refine_peak()
            .unwrap()
            .to_degrees();
        // fine-grid argmax of the same spectrum on a 0.001° grid
        let fine = s
            .with_grid(AngleGrid::from_degrees(-5.0, 5.0, 0.001).unwrap())
            .unwrap();
        let fine_spectrum = beamform_values(&values, &fine);
        let oracle = fine_spectrum.grid_peak().to_degrees();
        assert!((coarse - oracle).abs() < 0.005, "{coarse} vs {oracle}");
    }

    #[test]
    fn single_tx_follows_the_rts_transmitter() {
        for theta_rx in [-8.0, 0.0, 3.0, 20.0] {
            let s = Scenario::builder()
                .array_counts(1, 4)
                .rts_angles_deg(theta_rx, 5.0)
                .build()
                .unwrap();
            let alpha = full_chain_peak(&s).to_degrees();
            assert!((alpha - 5.0).abs() < 0.01, "θrx = {theta_rx}: {alpha}");
        }
    }

    #[test]
    fn subset_beamforming_uses_true_positions() {
        let s = Scenario::builder()
            .rts_angles_deg(0.0, 2.0)
            .build()
            .unwrap();
        let r = run_chain(&s, &ChainOptions::default()).unwrap();
        let one_by_four = select_subset(&r, &[0], &[0, 1, 2, 3]).unwrap();
        let alpha = beamform(&one_by_four, &s)
            .refine_peak()
            .unwrap()
            .to_degrees();
        assert!((alpha - 2.0).abs() < 0.01);
        // keeping only TX 1 shifts the phase reference but not the RX-array angle
        let tx1 = select_subset(&r, &[1], &[0, 1, 2, 3]).unwrap();
        let alpha1 = beamform(&tx1, &s).refine_peak().unwrap().to_degrees();
        assert!((alpha1 - alpha).abs() < 1e-6);
    }

    #[test]
    fn peak_on_grid_edge_is_reported() {
        let s = Scenario::builder()
            .array_counts(1, 4)
            .rts_angles_deg(0.0, 8.0)
            .grid(AngleGrid::from_degrees(-5.0, 5.0, 0.01).unwrap())
            .build()
            .unwrap();
        let r = run_chain(&s, &ChainOptions::default()).unwrap();
        let a = beamform(&r, &s);
        assert_eq!(a.peak_index(), a.len() - 1);
        assert!(matches!(a.refine_peak(), Err(Error::PeakAtBoundary { .. })));
    }

    #[test]
    fn ties_go_to_the_smallest_angle() {
        let v = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(2.0, 0.0),
        ];
        assert_eq!(peak_index(&v), 1);
    }

    #[test]
    fn grid_peak_dominates() {
        let s = Scenario::builder()
            .rts_angles_deg(-3.0, 4.0)
            .build()
            .unwrap();
        let r = run_chain(&s, &ChainOptions::default()).unwrap();
        let a = beamform(&r, &s);
        let peak = a.magnitude(a.peak_index());
        assert!((0..a.len()).all(|i| a.magnitude(i) <= peak));
        let refined = a.refine_peak().unwrap();
        let nearest = a
            .angles()
            .iter()
            .enumerate()
            .min_by(|x, y| (x.1 - refined).abs().total_cmp(&(y.1 - refined).abs()))
            .unwrap()
            .0;
        assert_eq!(nearest, a.peak_index());
    }

    #[test]
    fn steer_matches_grid_values() {
        let s = Scenario::builder()
            .rts_angles_deg(1.0, 6.0)
            .build()
            .unwrap();
        let v = analytic_element_values(&s, 0.0).unwrap();
        let a = beamform_values(&v, &s);
        for i in [0, 4000, 9000, 12345] {
            assert_eq!(steer(&v, &s, a.angles()[i]), a.value(i));
        }
    }

    #[test]
    fn csv_dump() {
        let s = Scenario::builder()
            .grid(AngleGrid::from_degrees(-1.0, 1.0, 0.5).unwrap())
            .build()
            .unwrap();
        let r = run_chain(&s, &ChainOptions::default()).unwrap();
        let mut out = Vec::new();
        beamform(&r, &s).write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "alpha_deg,re,im,mag_db");
        assert_eq!(lines.len(), 6);
        assert!(lines[3].starts_with("0,"));
    }
}
