//! Analytic angle spectrum of the quasi-monostatic channel.
//!
//! Summing the ideal range-bin phasors over the virtual array is a product of
//! two finite geometric series, one per array:
//!
//! ```text
//! |x_A[α]| = A·Ns·Ntx·Nrx · K_tx(dtx/λ_c · (sin θrx − sin α)) · K_rx(drx/λ_c · (sin θtx − sin α))
//! ```
//!
//! The TX factor is steered by the RTS *receiver* angle and the RX factor by the
//! RTS *transmitter* angle, so the detected angle lands between the two.
//! [`KernelMode::Dirichlet`] uses the exact kernel |sin(πNx)/(N sin(πx))|;
//! [`KernelMode::Sinc`] uses the small-angle form sinc(N·x).

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::beamformer::parabolic_vertex;
use crate::error::{Error, Result};
use crate::scenario::{AngleGrid, Scenario, SPEED_OF_LIGHT};

/// Grid step used by [`predicted_peak`].
pub const PREDICTION_STEP_DEG: f64 = 0.001;

/// Top-two peak separation below which a spectrum is flagged as ambiguous.
pub const AMBIGUITY_GAP_DB: f64 = 3.0;

/// Wider separation used for user-facing grating-lobe risk warnings.
pub const GRATING_WARNING_GAP_DB: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelMode {
    Sinc,
    Dirichlet,
}

impl fmt::Display for KernelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelMode::Sinc => "sinc",
            KernelMode::Dirichlet => "dirichlet",
        })
    }
}

impl FromStr for KernelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sinc" => Ok(KernelMode::Sinc),
            "dirichlet" => Ok(KernelMode::Dirichlet),
            other => Err(Error::invalid(
                "mode",
                format!("expected sinc or dirichlet, got {other:?}"),
            )),
        }
    }
}

/// Normalized sinc, sin(πx)/(πx), with sinc(0) = 1.
pub fn sinc(x: f64) -> f64 {
    let px = PI * x;
    if x.abs() < 1e-8 {
        1.0 - px * px / 6.0
    } else {
        px.sin() / px
    }
}

/// |sin(πNx) / (N·sin(πx))|, the normalized magnitude of Σ_{n<N} e^{j2πnx}.
pub fn dirichlet(n: usize, x: f64) -> f64 {
    if n <= 1 {
        return 1.0;
    }
    let nf = n as f64;
    let den = nf * (PI * x).sin();
    if den.abs() < 1e-12 {
        // removable singularity at integer x (main lobe and grating lobes)
        return ((PI * nf * x).cos() / (PI * x).cos()).abs();
    }
    ((PI * nf * x).sin() / den).abs()
}

fn kernel(mode: KernelMode, n: usize, x: f64) -> f64 {
    match mode {
        KernelMode::Sinc => sinc(n as f64 * x).abs(),
        KernelMode::Dirichlet => dirichlet(n, x),
    }
}

/// TX-array factor at angle α (driven by θrx).
pub fn tx_factor(s: &Scenario, mode: KernelMode, alpha: f64) -> f64 {
    let a = s.array();
    let u = s.rts().theta_rx_rad.sin() - alpha.sin();
    kernel(
        mode,
        a.tx_count,
        a.tx_spacing_m / s.steering_wavelength_m() * u,
    )
}

/// RX-array factor at angle α (driven by θtx).
pub fn rx_factor(s: &Scenario, mode: KernelMode, alpha: f64) -> f64 {
    let a = s.array();
    let u = s.rts().theta_tx_rad.sin() - alpha.sin();
    kernel(
        mode,
        a.rx_count,
        a.rx_spacing_m / s.steering_wavelength_m() * u,
    )
}

/// Peak gain A·Ns·Ntx·Nrx.
pub fn coherent_gain(s: &Scenario) -> f64 {
    s.rts().amplitude * (s.chirp().samples * s.array().element_count()) as f64
}

/// |x_A[α]| in the chosen kernel mode.
pub fn magnitude_at(s: &Scenario, mode: KernelMode, alpha: f64) -> f64 {
    coherent_gain(s) * tx_factor(s, mode, alpha) * rx_factor(s, mode, alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormSpectrum {
    angles: Vec<f64>,
    magnitudes: Vec<f64>,
    phase: f64,
    mode: KernelMode,
}

impl ClosedFormSpectrum {
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    /// Spectrum phase φ_A (rad), the same at every grid point.
    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    pub fn peak_index(&self) -> usize {
        first_max(&self.magnitudes)
    }

    /// CSV dump with columns `alpha_deg,re,im,mag_db,mode`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha_deg", "re", "im", "mag_db", "mode"])?;
        let (sin_p, cos_p) = self.phase.sin_cos();
        let mode = self.mode.to_string();
        for (alpha, &m) in self.angles.iter().zip(&self.magnitudes) {
            w.write_record(&[
                alpha.to_degrees().to_string(),
                (m * cos_p).to_string(),
                (m * sin_p).to_string(),
                (20.0 * m.log10()).to_string(),
                mode.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn closed_form_spectrum(s: &Scenario, mode: KernelMode) -> ClosedFormSpectrum {
    closed_form_spectrum_on(s, mode, s.grid().angles())
}

pub fn closed_form_spectrum_on(
    s: &Scenario,
    mode: KernelMode,
    angles: Vec<f64>,
) -> ClosedFormSpectrum {
    let magnitudes = angles
        .par_iter()
        .map(|&alpha| magnitude_at(s, mode, alpha))
        .collect();
    ClosedFormSpectrum {
        angles,
        magnitudes,
        phase: closed_form_phase(s),
        mode,
    }
}

/// φ_A = 2π[(fc + B/2)·2Rc/c0 + (frts + B/2)·τrts
///          + dtx/(2λ_c)·(Ntx−1)·sin θrx + drx/(2λ_c)·(Nrx−1)·sin θtx]  mod 2π
pub fn closed_form_phase(s: &Scenario) -> f64 {
    let c = s.chirp();
    let a = s.array();
    let r = s.rts();
    let lambda = s.steering_wavelength_m();
    let half_b = 0.5 * c.bandwidth_hz;
    let terms = [
        (c.start_frequency_hz + half_b) * 2.0 * r.range_m / SPEED_OF_LIGHT,
        (r.intermediate_frequency_hz + half_b) * r.delay_s,
        a.tx_spacing_m / (2.0 * lambda) * (a.tx_count - 1) as f64 * r.theta_rx_rad.sin(),
        a.rx_spacing_m / (2.0 * lambda) * (a.rx_count - 1) as f64 * r.theta_tx_rad.sin(),
    ];
    let cycles = terms.iter().map(|t| t.rem_euclid(1.0)).sum::<f64>();
    TAU * cycles.rem_euclid(1.0)
}

/// Detected angle predicted by the closed form: argmax over a 0.001° grid spanning
/// the scenario's angle range, refined by a parabola in sin α.
pub fn predicted_peak(s: &Scenario, mode: KernelMode) -> Result<f64> {
    let g = s.grid();
    let fine = AngleGrid {
        step_rad: PREDICTION_STEP_DEG.to_radians(),
        ..*g
    };
    let angles = fine.angles();
    let power: Vec<f64> = angles
        .par_iter()
        .map(|&alpha| magnitude_at(s, mode, alpha).powi(2))
        .collect();
    let i = first_max(&power);
    if i == 0 || i + 1 >= angles.len() {
        return Err(Error::PeakAtBoundary {
            index: i,
            len: angles.len(),
        });
    }
    let x = [angles[i - 1].sin(), angles[i].sin(), angles[i + 1].sin()];
    let y = [power[i - 1], power[i], power[i + 1]];
    Ok(parabolic_vertex(x, y).asin())
}

/// Aperture-weighted centroid of the two RTS angles, weights (dtx·Ntx/λ)² and
/// (drx·Nrx/λ)². Only a small-displacement approximation of the sinc-mode peak.
pub fn centroid_estimate(s: &Scenario) -> f64 {
    let a = s.array();
    let r = s.rts();
    let w_tx = (a.tx_spacing_m * a.tx_count as f64).powi(2);
    let w_rx = (a.rx_spacing_m * a.rx_count as f64).powi(2);
    ((w_tx * r.theta_rx_rad.sin() + w_rx * r.theta_tx_rad.sin()) / (w_tx + w_rx)).asin()
}

fn first_max(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// The two strongest local maxima of a closed-form spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LobePair {
    pub primary_rad: f64,
    pub secondary_rad: f64,
    pub gap_db: f64,
}

/// Flags grating-lobe ambiguity on the scenario grid: the two strongest lobes
/// when they are within [`AMBIGUITY_GAP_DB`] of each other.
pub fn peak_ambiguity(s: &Scenario, mode: KernelMode) -> Option<LobePair> {
    strongest_lobes(s, mode).filter(|p| p.gap_db < AMBIGUITY_GAP_DB)
}

/// The two strongest local maxima (grid endpoints included), if there are two.
pub fn strongest_lobes(s: &Scenario, mode: KernelMode) -> Option<LobePair> {
    let spectrum = closed_form_spectrum(s, mode);
    let m = spectrum.magnitudes();
    let n = m.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || m[i] > m[i - 1];
            let right = i + 1 == n || m[i] >= m[i + 1];
            left && right
        })
        .collect();
    peaks.sort_by(|&a, &b| m[b].total_cmp(&m[a]).then(a.cmp(&b)));
    let (&first, &second) = (peaks.first()?, peaks.get(1)?);
    let gap_db = 20.0 * (m[first] / m[second]).log10();
    Some(LobePair {
        primary_rad: spectrum.angles()[first],
        secondary_rad: spectrum.angles()[second],
        gap_db,
    })
}
