//! Time-domain FMCW chain: dechirped beat signal per virtual element, range DFT
//! and range-bin detection.
//!
//! Each virtual element `(ntx, nrx)` sees the total delay τ = τc + τrts from
//! [`crate::propagation`]. Sample `n` of its beat signal is
//!
//! ```text
//! A · exp{ j2π [ fc·τc + frts·τrts + (B/T)·τ·t_n ] },   t_n = n·T/Ns
//! ```
//!
//! optionally with the residual video phase −(B/2T)·τ² (see [`ChainOptions`]).
//! MIMO channels are ideally orthogonal and share one phase reference; the model
//! is noiseless and the ADC is not quantized.
//!
//! The amplitude A is carried as a separate gain next to unit-magnitude data, so
//! detection and peak search never depend on it.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::propagation::path_delays_with_offset;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOptions {
    /// Zero-padding factor of the range DFT (power of two, 1 = none).
    pub zero_pad: usize,
    /// Include the residual video phase −(B/2T)·τ² in the beat signal.
    pub residual_video_phase: bool,
    /// Extra return-leg path length in metres (displaced RTS transmitter).
    pub return_offset_m: f64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            zero_pad: 1,
            residual_video_phase: false,
            return_offset_m: 0.0,
        }
    }
}

impl ChainOptions {
    pub fn validate(&self) -> Result<()> {
        if self.zero_pad == 0 || !self.zero_pad.is_power_of_two() {
            return Err(Error::invalid(
                "zero_pad",
                format!(
                    "zero-pad factor must be a power of two ≥ 1 (got {})",
                    self.zero_pad
                ),
            ));
        }
        if !(self.return_offset_m >= 0.0 && self.return_offset_m.is_finite()) {
            return Err(Error::invalid("return_offset_m", "offset must be ≥ 0"));
        }
        Ok(())
    }
}

/// Beat samples indexed `[ntx][nrx][n]`, stored as unit phasors plus a gain.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatCube {
    tx_count: usize,
    rx_count: usize,
    samples: usize,
    sample_rate_hz: f64,
    amplitude: f64,
    phasors: Vec<Complex64>,
}

impl BeatCube {
    /// Wraps precomputed unit-scale samples, flattened `[ntx][nrx][n]`.
    pub fn from_unit_samples(
        tx_count: usize,
        rx_count: usize,
        sample_rate_hz: f64,
        amplitude: f64,
        phasors: Vec<Complex64>,
    ) -> Result<Self> {
        if tx_count == 0 || rx_count == 0 {
            return Err(Error::EmptySelection);
        }
        let elements = tx_count * rx_count;
        if phasors.is_empty() || !phasors.len().is_multiple_of(elements) {
            return Err(Error::invalid(
                "samples",
                format!(
                    "{} samples do not fill {tx_count}x{rx_count} elements",
                    phasors.len()
                ),
            ));
        }
        Ok(BeatCube {
            tx_count,
            rx_count,
            samples: phasors.len() / elements,
            sample_rate_hz,
            amplitude,
            phasors,
        })
    }

    /// `(Ntx, Nrx, Ns)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.tx_count, self.rx_count, self.samples)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn sample(&self, ntx: usize, nrx: usize, n: usize) -> Complex64 {
        self.amplitude * self.unit_samples(ntx, nrx)[n]
    }

    pub fn unit_samples(&self, ntx: usize, nrx: usize) -> &[Complex64] {
        let start = (ntx * self.rx_count + nrx) * self.samples;
        &self.phasors[start..start + self.samples]
    }

    /// CSV dump with columns `ntx,nrx,n_or_k,re,im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["ntx", "nrx", "n_or_k", "re", "im"])?;
        for ntx in 0..self.tx_count {
            for nrx in 0..self.rx_count {
                for n in 0..self.samples {
                    let x = self.sample(ntx, nrx, n);
                    w.write_record(&[
                        ntx.to_string(),
                        nrx.to_string(),
                        n.to_string(),
                        x.re.to_string(),
                        x.im.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Synthesizes the dechirped beat signal of every virtual element.
pub fn synthesize_beat(s: &Scenario, opts: &ChainOptions) -> Result<BeatCube> {
    opts.validate()?;
    let chirp = s.chirp();
    let rts = s.rts();
    let (tx_count, rx_count) = (s.array().tx_count, s.array().rx_count);
    let ns = chirp.samples;
    let limit_hz = 0.5 * chirp.sample_rate_hz();

    let mut phasors = Vec::with_capacity(tx_count * rx_count * ns);
    for ntx in 0..tx_count {
        for nrx in 0..rx_count {
            let d = path_delays_with_offset(s, ntx, nrx, opts.return_offset_m)?;
            let beat_hz = chirp.slope_hz_per_s() * d.total_s;
            if beat_hz >= limit_hz {
                return Err(Error::Nyquist { beat_hz, limit_hz });
            }
            let mut constant = chirp.start_frequency_hz * d.free_space_s
                + rts.intermediate_frequency_hz * rts.delay_s;
            if opts.residual_video_phase {
                constant -= 0.5 * chirp.slope_hz_per_s() * d.total_s * d.total_s;
            }
            let constant = constant.rem_euclid(1.0);
            // (B/T)·τ·t_n = Bτ·n/Ns cycles
            let per_sample = chirp.bandwidth_hz * d.total_s / ns as f64;
            phasors.extend((0..ns).map(|n| {
                let cycles = (constant + per_sample * n as f64).rem_euclid(1.0);
                Complex64::cis(TAU * cycles)
            }));
        }
    }
    BeatCube::from_unit_samples(
        tx_count,
        rx_count,
        chirp.sample_rate_hz(),
        rts.amplitude,
        phasors,
    )
}

/// Per-element range spectrum with the detected bin.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeSpectrum {
    tx_indices: Vec<usize>,
    rx_indices: Vec<usize>,
    bins: usize,
    zero_pad: usize,
    amplitude: f64,
    data: Vec<Complex64>,
    detected_bin: usize,
}

/// Unpadded range DFT of every element.
pub fn range_dft(b: &BeatCube) -> RangeSpectrum {
    range_dft_padded(b, 1).expect("unit zero-pad factor is valid")
}

/// Range DFT with `zero_pad`·Ns points per element, forward kernel e^{−j2πkn/N}.
pub fn range_dft_padded(b: &BeatCube, zero_pad: usize) -> Result<RangeSpectrum> {
    ChainOptions {
        zero_pad,
        ..Default::default()
    }
    .validate()?;
    let (tx_count, rx_count, ns) = b.dims();
    let bins = ns * zero_pad;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(bins);

    let mut data = vec![Complex64::new(0.0, 0.0); tx_count * rx_count * bins];
    for (e, chunk) in data.chunks_exact_mut(bins).enumerate() {
        let (ntx, nrx) = (e / rx_count, e % rx_count);
        chunk[..ns].copy_from_slice(b.unit_samples(ntx, nrx));
        fft.process(chunk);
    }

    let mut r = RangeSpectrum {
        tx_indices: (0..tx_count).collect(),
        rx_indices: (0..rx_count).collect(),
        bins,
        zero_pad,
        amplitude: b.amplitude,
        data,
        detected_bin: 0,
    };
    r.detected_bin = argmax_first(&r.noncoherent_power());
    Ok(r)
}

/// Synthesis followed by the (optionally padded) range DFT.
pub fn run_chain(s: &Scenario, opts: &ChainOptions) -> Result<RangeSpectrum> {
    range_dft_padded(&synthesize_beat(s, opts)?, opts.zero_pad)
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl RangeSpectrum {
    /// Element indices (positions in the full array) of the kept TX elements.
    pub fn tx_indices(&self) -> &[usize] {
        &self.tx_indices
    }

    pub fn rx_indices(&self) -> &[usize] {
        &self.rx_indices
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn zero_pad(&self) -> usize {
        self.zero_pad
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn detected_bin(&self) -> usize {
        self.detected_bin
    }

    /// Detected bin in unpadded units, i.e. the estimate of Bτ.
    pub fn detected_bin_unpadded(&self) -> f64 {
        self.detected_bin as f64 / self.zero_pad as f64
    }

    fn position(&self, i_tx: usize, i_rx: usize) -> Result<usize> {
        if i_tx >= self.tx_indices.len() {
            return Err(Error::IndexOutOfRange {
                what: "ntx",
                index: i_tx,
                len: self.tx_indices.len(),
            });
        }
        if i_rx >= self.rx_indices.len() {
            return Err(Error::IndexOutOfRange {
                what: "nrx",
                index: i_rx,
                len: self.rx_indices.len(),
            });
        }
        Ok(i_tx * self.rx_indices.len() + i_rx)
    }

    /// Unit-gain spectrum of the element at positions `(i_tx, i_rx)` of the kept lists.
    pub fn unit_spectrum(&self, i_tx: usize, i_rx: usize) -> Result<&[Complex64]> {
        let e = self.position(i_tx, i_rx)?;
        Ok(&self.data[e * self.bins..(e + 1) * self.bins])
    }

    pub fn value(&self, i_tx: usize, i_rx: usize, k: usize) -> Result<Complex64> {
        let spectrum = self.unit_spectrum(i_tx, i_rx)?;
        let x = spectrum.get(k).ok_or(Error::IndexOutOfRange {
            what: "bin",
            index: k,
            len: self.bins,
        })?;
        Ok(self.amplitude * x)
    }

    pub fn detected_value(&self, i_tx: usize, i_rx: usize) -> Result<Complex64> {
        self.value(i_tx, i_rx, self.detected_bin)
    }

    /// Sum over elements of |X[k]|² (unit gain).
    pub fn noncoherent_power(&self) -> Vec<f64> {
        let mut power = vec![0.0; self.bins];
        for chunk in self.data.chunks_exact(self.bins) {
            for (p, x) in power.iter_mut().zip(chunk) {
                *p += x.norm_sqr();
            }
        }
        power
    }

    /// Detected-bin value of every kept element, the input to beamforming.
    pub fn detected_values(&self) -> ElementValues {
        let values = self
            .data
            .chunks_exact(self.bins)
            .map(|chunk| chunk[self.detected_bin])
            .collect();
        ElementValues {
            tx_indices: self.tx_indices.clone(),
            rx_indices: self.rx_indices.clone(),
            amplitude: self.amplitude,
            values,
        }
    }

    /// Restricts the spectrum to the listed element indices. The detected bin is kept.
    pub fn select_subset(&self, tx_keep: &[usize], rx_keep: &[usize]) -> Result<RangeSpectrum> {
        let tx_pos = positions(&self.tx_indices, tx_keep, "ntx")?;
        let rx_pos = positions(&self.rx_indices, rx_keep, "nrx")?;
        let mut data = Vec::with_capacity(tx_pos.len() * rx_pos.len() * self.bins);
        for &t in &tx_pos {
            for &r in &rx_pos {
                data.extend_from_slice(self.unit_spectrum(t, r)?);
            }
        }
        Ok(RangeSpectrum {
            tx_indices: tx_keep.to_vec(),
            rx_indices: rx_keep.to_vec(),
            bins: self.bins,
            zero_pad: self.zero_pad,
            amplitude: self.amplitude,
            data,
            detected_bin: self.detected_bin,
        })
    }

    /// CSV dump with columns `ntx,nrx,n_or_k,re,im`; `ntx`/`nrx` are array element indices.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["ntx", "nrx", "n_or_k", "re", "im"])?;
        for (t, &ntx) in self.tx_indices.iter().enumerate() {
            for (r, &nrx) in self.rx_indices.iter().enumerate() {
                for (k, x) in self.unit_spectrum(t, r)?.iter().enumerate() {
                    let x = self.amplitude * x;
                    w.write_record(&[
                        ntx.to_string(),
                        nrx.to_string(),
                        k.to_string(),
                        x.re.to_string(),
                        x.im.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn positions(available: &[usize], keep: &[usize], what: &'static str) -> Result<Vec<usize>> {
    if keep.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut out = Vec::with_capacity(keep.len());
    for (i, &k) in keep.iter().enumerate() {
        if keep[..i].contains(&k) {
            return Err(Error::invalid(
                "subsets",
                format!("{what} index {k} selected twice"),
            ));
        }
        let pos = available
            .iter()
            .position(|&a| a == k)
            .ok_or(Error::IndexOutOfRange {
                what,
                index: k,
                len: available.len(),
            })?;
        out.push(pos);
    }
    Ok(out)
}

/// Argument of the detected-bin value at positions `(i_tx, i_rx)`.
pub fn detected_bin_phase(r: &RangeSpectrum, i_tx: usize, i_rx: usize) -> Result<f64> {
    Ok(r.detected_value(i_tx, i_rx)?.arg())
}

/// Range-bin phase 2π[fc·τc + frts·τrts + ½(Bτ − f_R)] mod 2π of element `(ntx, nrx)`
/// at bin `f_R` (unpadded units).
pub fn predicted_bin_phase(
    s: &Scenario,
    ntx: usize,
    nrx: usize,
    bin: f64,
    return_offset_m: f64,
) -> Result<f64> {
    let d = path_delays_with_offset(s, ntx, nrx, return_offset_m)?;
    Ok(TAU * range_phase_cycles(s, d.free_space_s, d.total_s, bin))
}

fn range_phase_cycles(s: &Scenario, free_space_s: f64, total_s: f64, bin: f64) -> f64 {
    let chirp = s.chirp();
    let rts = s.rts();
    let carrier = (chirp.start_frequency_hz * free_space_s).rem_euclid(1.0);
    let rts_term = (rts.intermediate_frequency_hz * rts.delay_s).rem_euclid(1.0);
    let window = 0.5 * (chirp.bandwidth_hz * total_s - bin);
    (carrier + rts_term + window).rem_euclid(1.0)
}

/// Nearest bin to Bτ of element (0, 0), the bin a range detector picks.
pub fn expected_bin(s: &Scenario, return_offset_m: f64) -> f64 {
    let d = path_delays_with_offset(s, 0, 0, return_offset_m).expect("element (0, 0) exists");
    (s.chirp().bandwidth_hz * d.total_s).round()
}

/// One complex value per kept virtual element (after range detection).
#[derive(Debug, Clone, PartialEq)]
pub struct ElementValues {
    tx_indices: Vec<usize>,
    rx_indices: Vec<usize>,
    amplitude: f64,
    values: Vec<Complex64>,
}

impl ElementValues {
    pub fn tx_indices(&self) -> &[usize] {
        &self.tx_indices
    }

    pub fn rx_indices(&self) -> &[usize] {
        &self.rx_indices
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Unit-gain values, flattened `[i_tx][i_rx]`.
    pub fn unit_values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, i_tx: usize, i_rx: usize) -> Complex64 {
        self.amplitude * self.values[i_tx * self.rx_indices.len() + i_rx]
    }

    pub fn select(&self, tx_keep: &[usize], rx_keep: &[usize]) -> Result<ElementValues> {
        let tx_pos = positions(&self.tx_indices, tx_keep, "ntx")?;
        let rx_pos = positions(&self.rx_indices, rx_keep, "nrx")?;
        let n_rx = self.rx_indices.len();
        let values = tx_pos
            .iter()
            .flat_map(|&t| rx_pos.iter().map(move |&r| t * n_rx + r))
            .map(|e| self.values[e])
            .collect();
        Ok(ElementValues {
            tx_indices: tx_keep.to_vec(),
            rx_indices: rx_keep.to_vec(),
            amplitude: self.amplitude,
            values,
        })
    }
}

/// Ideal detected-bin values Ns·exp{jφ_R} straight from the range-bin phase model,
/// with f_R = [`expected_bin`]. Gain A is carried separately.
pub fn analytic_element_values(s: &Scenario, return_offset_m: f64) -> Result<ElementValues> {
    let (tx_count, rx_count) = (s.array().tx_count, s.array().rx_count);
    let bin = expected_bin(s, return_offset_m);
    let ns = s.chirp().samples as f64;
    let mut values = Vec::with_capacity(tx_count * rx_count);
    for ntx in 0..tx_count {
        for nrx in 0..rx_count {
            let d = path_delays_with_offset(s, ntx, nrx, return_offset_m)?;
            let cycles = range_phase_cycles(s, d.free_space_s, d.total_s, bin);
            values.push(ns * Complex64::cis(TAU * cycles));
        }
    }
    Ok(ElementValues {
        tx_indices: (0..tx_count).collect(),
        rx_indices: (0..rx_count).collect(),
        amplitude: s.rts().amplitude,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::SPEED_OF_LIGHT;

    fn wrap(x: f64) -> f64 {
        (x + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI
    }

    /// τrts that puts Bτ of element (0, 0) at `bins` exactly (Rc = 1 m).
    fn on_bin_delay(bins: f64) -> f64 {
        bins / 1e9 - 2.0 / SPEED_OF_LIGHT
    }

    #[test]
    fn beat_frequency_at_one_metre() {
        let s = Scenario::builder().build().unwrap();
        let d = path_delays_with_offset(&s, 0, 0, 0.0).unwrap();
        let beat = s.chirp().slope_hz_per_s() * d.total_s;
        assert!((beat - 66712.81903963041).abs() < 1e-6);
        assert!((beat - 66.71e3).abs() < 10.0);
    }

    #[test]
    fn samples_carry_the_amplitude() {
        let s = Scenario::builder()
            .amplitude(2.0)
            .rts_angles_deg(3.0, -4.0)
            .build()
            .unwrap();
        let b = synthesize_beat(&s, &ChainOptions::default()).unwrap();
        assert_eq!(b.dims(), (2, 4, 1024));
        for ntx in 0..2 {
            for nrx in 0..4 {
                for n in (0..1024).step_by(37) {
                    assert!((b.sample(ntx, nrx, n).norm() - 2.0).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn boresight_elements_are_identical() {
        let s = Scenario::builder().rts_delay_s(40e-9).build().unwrap();
        let b = synthesize_beat(&s, &ChainOptions::default()).unwrap();
        let reference = b.unit_samples(0, 0).to_vec();
        for ntx in 0..2 {
            for nrx in 0..4 {
                assert_eq!(b.unit_samples(ntx, nrx), &reference[..]);
            }
        }
    }

    #[test]
    fn nyquist_violation_from_return_offset() {
        // Bτ ≈ 506.7 bins, just under Ns/2 = 512; 2 m of extra return path adds ~6.7 bins.
        let s = Scenario::builder().rts_delay_s(500e-9).build().unwrap();
        assert!(synthesize_beat(&s, &ChainOptions::default()).is_ok());
        let opts = ChainOptions {
            return_offset_m: 2.0,
            ..Default::default()
        };
        assert!(matches!(
            synthesize_beat(&s, &opts),
            Err(Error::Nyquist { .. })
        ));
    }

    #[test]
    fn zero_pad_must_be_power_of_two() {
        let s = Scenario::builder().build().unwrap();
        let opts = ChainOptions {
            zero_pad: 3,
            ..Default::default()
        };
        assert!(matches!(
            synthesize_beat(&s, &opts),
            Err(Error::Invalid {
                key: "zero_pad",
                ..
            })
        ));
    }

    #[test]
    fn detects_nearest_bin_at_one_metre() {
        // Bτ = 6.671
        let s = Scenario::builder().build().unwrap();
        let r = run_chain(&s, &ChainOptions::default()).unwrap();
        assert_eq!(r.detected_bin(), 7);
        assert_eq!(expected_bin(&s, 0.0), 7.0);
    }

    #[test]
    fn on_bin_phase_matches_range_phase_model() {
        let s = Scenario::builder()
            .rts_delay_s(on_bin_delay(64.0))
            .build()
            .unwrap();
        let r = run_chain(&s, &ChainOptions::default()).unwrap();
        assert_eq!(r.detected_bin(), 64);
        let measured = detected_bin_phase(&r, 0, 0).unwrap();
        let predicted = predicted_bin_phase(&s, 0, 0, 64.0, 0.0).unwrap();
        assert!(wrap(measured - predicted).abs() < 1e-6);
        assert!((r.detected_value(0, 0).unwrap().norm() - 1024.0).abs() < 1e-6);
    }

    #[test]
    fn residual_video_phase_offsets_by_pi_b_tau_squared_over_t() {
        let s = Scenario::builder()
            .rts_delay_s(on_bin_delay(64.0))
            .build()
            .unwrap();
        let plain = run_chain(&s, &ChainOptions::default()).unwrap();
        let rvp = run_chain(
            &s,
            &ChainOptions {
                residual_video_phase: true,
                ..Default::default()
            },
        )
        .unwrap();
        let tau = path_delays_with_offset(&s, 0, 0, 0.0).unwrap().total_s;
        let expected = -std::f64::consts::PI * 1e9 * tau * tau / 100e-6;
        let got = wrap(
            detected_bin_phase(&rvp, 0, 0).unwrap() - detected_bin_phase(&plain, 0, 0).unwrap(),
        );
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
        assert!((expected + 0.1287).abs() < 1e-3);
    }

    #[test]
    fn dc_bin_for_constant_phasors() {
        let phasors = vec![Complex64::cis(0.3); 2 * 2 * 64];
        let b = BeatCube::from_unit_samples(2, 2, 1e6, 1.0, phasors).unwrap();
        assert_eq!(range_dft(&b).detected_bin(), 0);
    }

    #[test]
    fn identical_delays_give_identical_phase() {
        let s = Scenario::builder().rts_delay_s(20e-9).build().unwrap();
        let r = run_chain(&s, &ChainOptions::default()).unwrap();
        let p = detected_bin_phase(&r, 0, 0).unwrap();
        assert_eq!(detected_bin_phase(&r, 1, 3).unwrap(), p);
    }

    #[test]
    fn zero_intermediate_frequency_drops_the_rts_term() {
        let base = Scenario::builder()
            .intermediate_frequency_hz(0.0)
            .rts_delay_s(on_bin_delay(20.0))
            .build()
            .unwrap();
        let r = run_chain(&base, &ChainOptions::default()).unwrap();
        let d = path_delays_with_offset(&base, 0, 0, 0.0).unwrap();
        let expected = TAU * (77e9 * d.free_space_s).rem_euclid(1.0);
        assert!(wrap(detected_bin_phase(&r, 0, 0).unwrap() - expected).abs() < 1e-6);
    }

    #[test]
    fn zero_padding_scales_the_bin_index() {
        let s = Scenario::builder()
            .rts_delay_s(on_bin_delay(40.0))
            .build()
            .unwrap();
        let opts = ChainOptions {
            zero_pad: 4,
            ..Default::default()
        };
        let r = run_chain(&s, &opts).unwrap();
        assert_eq!(r.bins(), 4096);
        assert_eq!(r.detected_bin(), 160);
        assert_eq!(r.detected_bin_unpadded(), 40.0);
    }

    #[test]
    fn subset_selection() {
        let s = Scenario::builder()
            .rts_angles_deg(1.0, 3.0)
            .build()
            .unwrap();
        let r = run_chain(&s, &ChainOptions::default()).unwrap();
        assert_eq!(r.select_subset(&[0, 1], &[0, 1, 2, 3]).unwrap(), r);

        let one_by_four = r.select_subset(&[0], &[0, 1, 2, 3]).unwrap();
        assert_eq!(one_by_four.tx_indices(), &[0]);
        assert_eq!(one_by_four.rx_indices(), &[0, 1, 2, 3]);
        assert_eq!(
            one_by_four.value(0, 2, 5).unwrap(),
            r.value(0, 2, 5).unwrap()
        );

        let two_by_two = r.select_subset(&[0, 1], &[0, 1]).unwrap();
        assert_eq!(
            two_by_two.value(1, 1, 9).unwrap(),
            r.value(1, 1, 9).unwrap()
        );
        assert_eq!(two_by_two.detected_bin(), r.detected_bin());

        let rx_only = r.select_subset(&[1], &[3]).unwrap();
        assert_eq!(rx_only.value(0, 0, 3).unwrap(), r.value(1, 3, 3).unwrap());

        assert!(matches!(
            r.select_subset(&[], &[0]),
            Err(Error::EmptySelection)
        ));
        assert!(matches!(
            r.select_subset(&[0], &[]),
            Err(Error::EmptySelection)
        ));
        assert!(matches!(
            r.select_subset(&[2], &[0]),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(r.select_subset(&[0, 0], &[0]).is_err());
    }

    #[test]
    fn element_values_selection_matches_spectrum_selection() {
        let s = Scenario::builder()
            .rts_angles_deg(-2.0, 5.0)
            .build()
            .unwrap();
        let r = run_chain(&s, &ChainOptions::default()).unwrap();
        let a = r.detected_values().select(&[1], &[0, 2]).unwrap();
        let b = r.select_subset(&[1], &[0, 2]).unwrap().detected_values();
        assert_eq!(a, b);
    }

    #[test]
    fn analytic_values_follow_the_full_chain_on_bin() {
        let s = Scenario::builder()
            .rts_angles_deg(4.0, -3.0)
            .rts_delay_s(on_bin_delay(64.0))
            .build()
            .unwrap();
        let r = run_chain(&s, &ChainOptions::default()).unwrap();
        let full = r.detected_values();
        let ideal = analytic_element_values(&s, 0.0).unwrap();
        for t in 0..2 {
            for x in 0..4 {
                let a = full.value(t, x);
                let b = ideal.value(t, x);
                assert!(wrap(a.arg() - b.arg()).abs() < 1e-4);
                assert!((a.norm() - b.norm()).abs() / b.norm() < 1e-3);
            }
        }
    }

    #[test]
    fn csv_dumps_have_expected_shape() {
        let s = Scenario::builder()
            .samples(16)
            .array_counts(1, 2)
            .build()
            .unwrap();
        let b = synthesize_beat(&s, &ChainOptions::default()).unwrap();
        let mut out = Vec::new();
        b.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("ntx,nrx,n_or_k,re,im\n"));
        assert_eq!(text.lines().count(), 1 + 2 * 16);

        let r = range_dft(&b).select_subset(&[0], &[1]).unwrap();
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1 + 16);
        assert!(text.lines().nth(1).unwrap().starts_with("0,1,0,"));
    }
}
