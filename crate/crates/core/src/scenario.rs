//! Scenario configuration: the FMCW chirp, the MIMO array of the radar under
//! test, one RTS channel, and the beamforming angle grid.
//!
//! Configuration files are TOML with four flat sections (plus the optional
//! `[sweep]` section read by [`crate::experiment`]):
//!
//! ```toml
//! [chirp]
//! fc_hz = 77e9
//! b_hz = 1e9
//! t_s = 100e-6      # optional, default 100 µs
//! ns = 1024         # optional, default 1024
//!
//! [array]
//! ntx = 2
//! nrx = 4
//! dtx_lambda = 2.0  # or dtx_m, exactly one of the two
//! drx_lambda = 0.5  # or drx_m
//!
//! [rts]
//! rc_m = 1.0
//! theta_rx_deg = 0.0
//! theta_tx_deg = 2.0
//! tau_rts_s = 0.0   # optional
//! f_rts_hz = 500e6  # optional
//! amplitude = 1.0   # optional
//!
//! [grid]            # optional section
//! angle_min_deg = -90.0
//! angle_max_deg = 90.0
//! angle_step_deg = 0.01
//! ```
//!
//! Unknown keys are rejected. Angles are held in radians once loaded.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagation;

/// Speed of light in vacuum (m/s), exact SI value.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const DEFAULT_CHIRP_PERIOD_S: f64 = 100e-6;
pub const DEFAULT_SAMPLES: usize = 1024;
pub const DEFAULT_GRID_STEP_DEG: f64 = 0.01;

/// Slack for grid bounds converted from degrees.
const ANGLE_BOUND_EPS: f64 = 1e-12;

/// FMCW chirp parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpConfig {
    /// Start frequency fc (Hz).
    pub start_frequency_hz: f64,
    /// Sweep bandwidth B (Hz).
    pub bandwidth_hz: f64,
    /// Chirp period T (s).
    pub period_s: f64,
    /// ADC samples per chirp, Ns.
    pub samples: usize,
}

impl ChirpConfig {
    pub fn sample_rate_hz(&self) -> f64 {
        self.samples as f64 / self.period_s
    }

    /// Chirp slope B/T (Hz/s).
    pub fn slope_hz_per_s(&self) -> f64 {
        self.bandwidth_hz / self.period_s
    }

    /// Wavelength at the start frequency, c0/fc. Spacings given in wavelengths
    /// resolve against this.
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.start_frequency_hz
    }

    /// Wavelength at the chirp centre, c0/(fc + B/2).
    ///
    /// After range processing the phase of every virtual element advances at
    /// (fc + B/2)·Δτ, so this is the wavelength the steering vectors and the
    /// analytic spectrum must use.
    pub fn steering_wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / (self.start_frequency_hz + 0.5 * self.bandwidth_hz)
    }
}

/// MIMO geometry of the radar under test. Both arrays are uniform and linear in azimuth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarArrayConfig {
    pub tx_count: usize,
    pub rx_count: usize,
    pub tx_spacing_m: f64,
    pub rx_spacing_m: f64,
}

impl RadarArrayConfig {
    /// Virtual-array aperture dtx·(Ntx−1) + drx·(Nrx−1).
    pub fn virtual_aperture_m(&self) -> f64 {
        self.tx_spacing_m * (self.tx_count - 1) as f64
            + self.rx_spacing_m * (self.rx_count - 1) as f64
    }

    pub fn element_count(&self) -> usize {
        self.tx_count * self.rx_count
    }
}

/// One RTS channel: where its two antennas sit and what it does to the signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtsChannelConfig {
    /// Distance Rc between radar and RTS front ends (m).
    pub range_m: f64,
    /// Azimuth of the RTS receive antenna, as seen by the radar (rad).
    pub theta_rx_rad: f64,
    /// Azimuth of the RTS transmit antenna, as seen by the radar (rad).
    pub theta_tx_rad: f64,
    /// RTS internal delay τrts (s).
    pub delay_s: f64,
    /// RTS intermediate frequency frts (Hz).
    pub intermediate_frequency_hz: f64,
    /// Linear amplitude A.
    pub amplitude: f64,
}

/// Uniform grid of candidate angles α for beamforming.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleGrid {
    pub min_rad: f64,
    pub max_rad: f64,
    pub step_rad: f64,
}

impl Default for AngleGrid {
    fn default() -> Self {
        AngleGrid {
            min_rad: (-90.0f64).to_radians(),
            max_rad: 90.0f64.to_radians(),
            step_rad: DEFAULT_GRID_STEP_DEG.to_radians(),
        }
    }
}

impl AngleGrid {
    pub fn from_degrees(min_deg: f64, max_deg: f64, step_deg: f64) -> Result<Self> {
        let grid = AngleGrid {
            min_rad: min_deg.to_radians(),
            max_rad: max_deg.to_radians(),
            step_rad: step_deg.to_radians(),
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn with_step(&self, step_rad: f64) -> Result<Self> {
        let grid = AngleGrid { step_rad, ..*self };
        grid.validate()?;
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        ((self.max_rad - self.min_rad) / self.step_rad + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn angle(&self, i: usize) -> f64 {
        (self.min_rad + i as f64 * self.step_rad).min(self.max_rad)
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.angle(i)).collect()
    }

    fn validate(&self) -> Result<()> {
        let finite =
            self.min_rad.is_finite() && self.max_rad.is_finite() && self.step_rad.is_finite();
        if !finite || self.step_rad <= 0.0 {
            return Err(Error::invalid("angle_step_deg", "grid step must be > 0"));
        }
        if self.min_rad < -FRAC_PI_2 - ANGLE_BOUND_EPS {
            return Err(Error::invalid("angle_min_deg", "grid minimum below −90°"));
        }
        if self.max_rad > FRAC_PI_2 + ANGLE_BOUND_EPS {
            return Err(Error::invalid("angle_max_deg", "grid maximum above 90°"));
        }
        if self.min_rad >= self.max_rad {
            return Err(Error::invalid(
                "angle_min_deg",
                "grid minimum must be below grid maximum",
            ));
        }
        if self.len() < 3 {
            return Err(Error::invalid(
                "angle_step_deg",
                "grid needs at least 3 points",
            ));
        }
        Ok(())
    }
}

/// A validated simulation scenario. Immutable; derive variants with the `with_*` methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    chirp: ChirpConfig,
    array: RadarArrayConfig,
    rts: RtsChannelConfig,
    grid: AngleGrid,
}

impl Scenario {
    pub fn new(
        chirp: ChirpConfig,
        array: RadarArrayConfig,
        rts: RtsChannelConfig,
        grid: AngleGrid,
    ) -> Result<Self> {
        let s = Scenario {
            chirp,
            array,
            rts,
            grid,
        };
        s.validate()?;
        Ok(s)
    }

    /// Builder preloaded with the 77 GHz, 2x4 baseline (dtx = 2λ, drx = λ/2,
    /// frts = 500 MHz, Rc = 1 m, both RTS antennas at boresight).
    pub fn builder() -> ScenarioBuilder {
        ScenarioBuilder::default()
    }

    pub fn chirp(&self) -> &ChirpConfig {
        &self.chirp
    }

    pub fn array(&self) -> &RadarArrayConfig {
        &self.array
    }

    pub fn rts(&self) -> &RtsChannelConfig {
        &self.rts
    }

    pub fn grid(&self) -> &AngleGrid {
        &self.grid
    }

    pub fn wavelength_m(&self) -> f64 {
        self.chirp.wavelength_m()
    }

    pub fn steering_wavelength_m(&self) -> f64 {
        self.chirp.steering_wavelength_m()
    }

    pub fn with_chirp(&self, chirp: ChirpConfig) -> Result<Self> {
        Scenario::new(chirp, self.array, self.rts, self.grid)
    }

    pub fn with_array(&self, array: RadarArrayConfig) -> Result<Self> {
        Scenario::new(self.chirp, array, self.rts, self.grid)
    }

    pub fn with_rts(&self, rts: RtsChannelConfig) -> Result<Self> {
        Scenario::new(self.chirp, self.array, rts, self.grid)
    }

    pub fn with_grid(&self, grid: AngleGrid) -> Result<Self> {
        Scenario::new(self.chirp, self.array, self.rts, grid)
    }

    /// Same scenario with the array reduced to its first `tx_count` × `rx_count` elements.
    pub fn with_subarray(&self, tx_count: usize, rx_count: usize) -> Result<Self> {
        if tx_count == 0 || rx_count == 0 {
            return Err(Error::EmptySelection);
        }
        if tx_count > self.array.tx_count || rx_count > self.array.rx_count {
            return Err(Error::invalid(
                "subsets",
                format!(
                    "{tx_count}x{rx_count} does not fit the {}x{} array",
                    self.array.tx_count, self.array.rx_count
                ),
            ));
        }
        self.with_array(RadarArrayConfig {
            tx_count,
            rx_count,
            ..self.array
        })
    }

    /// Whether Rc is at least the Fraunhofer distance of the virtual array.
    pub fn far_field_ok(&self) -> bool {
        self.rts.range_m >= propagation::far_field_distance(self)
    }

    /// Human-readable warnings that do not invalidate the scenario.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.far_field_ok() {
            out.push(format!(
                "far-field condition violated: Rc = {} m < 2D²/λ = {:.6} m",
                self.rts.range_m,
                propagation::far_field_distance(self)
            ));
        }
        out
    }

    /// Largest beat frequency over all virtual elements (Hz).
    pub fn max_beat_frequency_hz(&self) -> f64 {
        self.chirp.slope_hz_per_s() * propagation::max_total_delay(self, 0.0)
    }

    /// fs/2 minus the largest beat frequency (Hz). Positive means no aliasing.
    pub fn nyquist_margin_hz(&self) -> f64 {
        0.5 * self.chirp.sample_rate_hz() - self.max_beat_frequency_hz()
    }

    fn validate(&self) -> Result<()> {
        let c = &self.chirp;
        if !(c.start_frequency_hz > 0.0 && c.start_frequency_hz.is_finite()) {
            return Err(Error::invalid("fc_hz", "fc > 0 required"));
        }
        if !(c.bandwidth_hz > 0.0 && c.bandwidth_hz.is_finite()) {
            return Err(Error::invalid("b_hz", "B > 0 required"));
        }
        if !(c.period_s > 0.0 && c.period_s.is_finite()) {
            return Err(Error::invalid("t_s", "T > 0 required"));
        }
        if c.samples < 2 {
            return Err(Error::invalid(
                "ns",
                format!("Ns ≥ 2 required (got {})", c.samples),
            ));
        }

        let a = &self.array;
        if a.tx_count < 1 {
            return Err(Error::invalid("ntx", "Ntx ≥ 1 required"));
        }
        if a.rx_count < 1 {
            return Err(Error::invalid("nrx", "Nrx ≥ 1 required"));
        }
        if !(a.tx_spacing_m > 0.0 && a.tx_spacing_m.is_finite()) {
            return Err(Error::invalid("dtx", "dtx > 0 required"));
        }
        if !(a.rx_spacing_m > 0.0 && a.rx_spacing_m.is_finite()) {
            return Err(Error::invalid("drx", "drx > 0 required"));
        }

        let r = &self.rts;
        if !(r.range_m > 0.0 && r.range_m.is_finite()) {
            return Err(Error::invalid("rc_m", "Rc > 0 required"));
        }
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&r.theta_rx_rad) {
            return Err(Error::invalid(
                "theta_rx_deg",
                format!(
                    "θrx out of [−90°, 90°] (got {}°)",
                    r.theta_rx_rad.to_degrees()
                ),
            ));
        }
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&r.theta_tx_rad) {
            return Err(Error::invalid(
                "theta_tx_deg",
                format!(
                    "θtx out of [−90°, 90°] (got {}°)",
                    r.theta_tx_rad.to_degrees()
                ),
            ));
        }
        if !(r.delay_s >= 0.0 && r.delay_s.is_finite()) {
            return Err(Error::invalid("tau_rts_s", "τrts ≥ 0 required"));
        }
        if !(r.intermediate_frequency_hz >= 0.0 && r.intermediate_frequency_hz.is_finite()) {
            return Err(Error::invalid("f_rts_hz", "frts ≥ 0 required"));
        }
        if !(r.amplitude > 0.0 && r.amplitude.is_finite()) {
            return Err(Error::invalid("amplitude", "A > 0 required"));
        }

        self.grid.validate()?;

        let beat_hz = self.max_beat_frequency_hz();
        let limit_hz = 0.5 * self.chirp.sample_rate_hz();
        if beat_hz >= limit_hz {
            return Err(Error::Nyquist { beat_hz, limit_hz });
        }
        Ok(())
    }
}

/// Signed lateral separation of the RTS antennas, Rc·(sin θtx − sin θrx).
pub fn rts_displacement(s: &Scenario) -> f64 {
    displacement(s.rts.range_m, s.rts.theta_rx_rad, s.rts.theta_tx_rad)
}

pub fn displacement(range_m: f64, theta_rx_rad: f64, theta_tx_rad: f64) -> f64 {
    range_m * (theta_tx_rad.sin() - theta_rx_rad.sin())
}

/// Element spacing either in metres or in units of c0/fc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spacing {
    Meters(f64),
    Wavelengths(f64),
}

impl Spacing {
    pub fn resolve(self, wavelength_m: f64) -> f64 {
        match self {
            Spacing::Meters(m) => m,
            Spacing::Wavelengths(w) => w * wavelength_m,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioBuilder {
    chirp: ChirpConfig,
    tx_count: usize,
    rx_count: usize,
    tx_spacing: Spacing,
    rx_spacing: Spacing,
    rts: RtsChannelConfig,
    grid: AngleGrid,
}

impl Default for ScenarioBuilder {
    fn default() -> Self {
        ScenarioBuilder {
            chirp: ChirpConfig {
                start_frequency_hz: 77e9,
                bandwidth_hz: 1e9,
                period_s: DEFAULT_CHIRP_PERIOD_S,
                samples: DEFAULT_SAMPLES,
            },
            tx_count: 2,
            rx_count: 4,
            tx_spacing: Spacing::Wavelengths(2.0),
            rx_spacing: Spacing::Wavelengths(0.5),
            rts: RtsChannelConfig {
                range_m: 1.0,
                theta_rx_rad: 0.0,
                theta_tx_rad: 0.0,
                delay_s: 0.0,
                intermediate_frequency_hz: 500e6,
                amplitude: 1.0,
            },
            grid: AngleGrid::default(),
        }
    }
}

impl ScenarioBuilder {
    pub fn chirp(mut self, chirp: ChirpConfig) -> Self {
        self.chirp = chirp;
        self
    }

    pub fn samples(mut self, ns: usize) -> Self {
        self.chirp.samples = ns;
        self
    }

    pub fn array_counts(mut self, tx_count: usize, rx_count: usize) -> Self {
        self.tx_count = tx_count;
        self.rx_count = rx_count;
        self
    }

    pub fn spacings(mut self, tx: Spacing, rx: Spacing) -> Self {
        self.tx_spacing = tx;
        self.rx_spacing = rx;
        self
    }

    pub fn rts(mut self, rts: RtsChannelConfig) -> Self {
        self.rts = rts;
        self
    }

    pub fn range_m(mut self, rc: f64) -> Self {
        self.rts.range_m = rc;
        self
    }

    pub fn rts_angles(mut self, theta_rx_rad: f64, theta_tx_rad: f64) -> Self {
        self.rts.theta_rx_rad = theta_rx_rad;
        self.rts.theta_tx_rad = theta_tx_rad;
        self
    }

    pub fn rts_angles_deg(self, theta_rx_deg: f64, theta_tx_deg: f64) -> Self {
        self.rts_angles(theta_rx_deg.to_radians(), theta_tx_deg.to_radians())
    }

    pub fn rts_delay_s(mut self, tau: f64) -> Self {
        self.rts.delay_s = tau;
        self
    }

    pub fn intermediate_frequency_hz(mut self, f: f64) -> Self {
        self.rts.intermediate_frequency_hz = f;
        self
    }

    pub fn amplitude(mut self, a: f64) -> Self {
        self.rts.amplitude = a;
        self
    }

    pub fn grid(mut self, grid: AngleGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn build(self) -> Result<Scenario> {
        let lambda = self.chirp.wavelength_m();
        let array = RadarArrayConfig {
            tx_count: self.tx_count,
            rx_count: self.rx_count,
            tx_spacing_m: self.tx_spacing.resolve(lambda),
            rx_spacing_m: self.rx_spacing.resolve(lambda),
        };
        Scenario::new(self.chirp, array, self.rts, self.grid)
    }
}

// ---------------------------------------------------------------------------
// Configuration document
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    chirp: ChirpSection,
    array: ArraySection,
    rts: RtsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChirpSection {
    fc_hz: f64,
    b_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ns: Option<i64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArraySection {
    ntx: i64,
    nrx: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dtx_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dtx_lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    drx_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    drx_lambda: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RtsSection {
    rc_m: f64,
    theta_rx_deg: f64,
    theta_tx_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tau_rts_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f_rts_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle_min_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle_max_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle_step_deg: Option<f64>,
}

/// Raw keys of the optional `[sweep]` section. Interpreted by [`crate::experiment`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_max_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsets: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_compensation: Option<bool>,
}

/// A parsed configuration file.
#[derive(Debug, Clone)]
pub struct Config {
    pub scenario: Scenario,
    pub sweep: Option<SweepSection>,
}

fn spacing(meters: Option<f64>, lambdas: Option<f64>, key: &'static str) -> Result<Spacing> {
    match (meters, lambdas) {
        (Some(m), None) => Ok(Spacing::Meters(m)),
        (None, Some(l)) => Ok(Spacing::Wavelengths(l)),
        (Some(_), Some(_)) => Err(Error::invalid(
            key,
            "give exactly one of the _m and _lambda keys, not both",
        )),
        (None, None) => Err(Error::invalid(
            key,
            "missing spacing: give exactly one of the _m and _lambda keys",
        )),
    }
}

fn count(value: i64, key: &'static str, min: i64, label: &str) -> Result<usize> {
    if value < min {
        return Err(Error::invalid(
            key,
            format!("{label} ≥ {min} required (got {value})"),
        ));
    }
    Ok(value as usize)
}

pub fn parse_config(text: &str) -> Result<Config> {
    let doc: Document = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;

    let samples = count(
        doc.chirp.ns.unwrap_or(DEFAULT_SAMPLES as i64),
        "ns",
        2,
        "Ns",
    )?;
    let chirp = ChirpConfig {
        start_frequency_hz: doc.chirp.fc_hz,
        bandwidth_hz: doc.chirp.b_hz,
        period_s: doc.chirp.t_s.unwrap_or(DEFAULT_CHIRP_PERIOD_S),
        samples,
    };

    let tx_spacing = spacing(doc.array.dtx_m, doc.array.dtx_lambda, "dtx")?;
    let rx_spacing = spacing(doc.array.drx_m, doc.array.drx_lambda, "drx")?;
    let lambda = chirp.wavelength_m();
    let array = RadarArrayConfig {
        tx_count: count(doc.array.ntx, "ntx", 1, "Ntx")?,
        rx_count: count(doc.array.nrx, "nrx", 1, "Nrx")?,
        tx_spacing_m: tx_spacing.resolve(lambda),
        rx_spacing_m: rx_spacing.resolve(lambda),
    };

    let rts = RtsChannelConfig {
        range_m: doc.rts.rc_m,
        theta_rx_rad: doc.rts.theta_rx_deg.to_radians(),
        theta_tx_rad: doc.rts.theta_tx_deg.to_radians(),
        delay_s: doc.rts.tau_rts_s.unwrap_or(0.0),
        intermediate_frequency_hz: doc.rts.f_rts_hz.unwrap_or(0.0),
        amplitude: doc.rts.amplitude.unwrap_or(1.0),
    };

    let grid = match doc.grid {
        None => AngleGrid::default(),
        Some(g) => {
            let d = AngleGrid::default();
            AngleGrid {
                min_rad: g.angle_min_deg.map_or(d.min_rad, f64::to_radians),
                max_rad: g.angle_max_deg.map_or(d.max_rad, f64::to_radians),
                step_rad: g.angle_step_deg.map_or(d.step_rad, f64::to_radians),
            }
        }
    };

    Ok(Config {
        scenario: Scenario::new(chirp, array, rts, grid)?,
        sweep: doc.sweep,
    })
}

/// Parses and validates a scenario document. A `[sweep]` section, if present,
/// is checked for unknown keys and otherwise ignored.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    parse_config(text).map(|c| c.scenario)
}

pub fn load_config_file(path: impl AsRef<Path>) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Writes `s` as a configuration document. Every key is explicit; spacings are
/// written in metres.
pub fn emit_scenario(s: &Scenario) -> String {
    emit_config(s, None)
}

pub fn emit_config(s: &Scenario, sweep: Option<&SweepSection>) -> String {
    let doc = Document {
        chirp: ChirpSection {
            fc_hz: s.chirp.start_frequency_hz,
            b_hz: s.chirp.bandwidth_hz,
            t_s: Some(s.chirp.period_s),
            ns: Some(s.chirp.samples as i64),
        },
        array: ArraySection {
            ntx: s.array.tx_count as i64,
            nrx: s.array.rx_count as i64,
            dtx_m: Some(s.array.tx_spacing_m),
            dtx_lambda: None,
            drx_m: Some(s.array.rx_spacing_m),
            drx_lambda: None,
        },
        rts: RtsSection {
            rc_m: s.rts.range_m,
            theta_rx_deg: exact_degrees(s.rts.theta_rx_rad),
            theta_tx_deg: exact_degrees(s.rts.theta_tx_rad),
            tau_rts_s: Some(s.rts.delay_s),
            f_rts_hz: Some(s.rts.intermediate_frequency_hz),
            amplitude: Some(s.rts.amplitude),
        },
        grid: Some(GridSection {
            angle_min_deg: Some(exact_degrees(s.grid.min_rad)),
            angle_max_deg: Some(exact_degrees(s.grid.max_rad)),
            angle_step_deg: Some(exact_degrees(s.grid.step_rad)),
        }),
        sweep: sweep.cloned(),
    };
    toml::to_string(&doc).expect("scenario documents always serialize")
}

/// Degree value whose `to_radians()` reproduces `rad` bit for bit, when one
/// exists within a few ulps of `rad.to_degrees()`.
fn exact_degrees(rad: f64) -> f64 {
    let guess = rad.to_degrees();
    if guess.to_radians() == rad {
        return guess;
    }
    let (mut below, mut above) = (guess, guess);
    for _ in 0..64 {
        below = below.next_down();
        above = above.next_up();
        if below.to_radians() == rad {
            return below;
        }
        if above.to_radians() == rad {
            return above;
        }
    }
    guess
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const BASELINE: &str = r#"
[chirp]
fc_hz = 77e9
b_hz = 1e9

[array]
ntx = 2
nrx = 4
dtx_lambda = 2.0
drx_lambda = 0.5

[rts]
rc_m = 1.0
theta_rx_deg = 0.0
theta_tx_deg = 0.0
f_rts_hz = 500e6
"#;

    fn with_replaced(from: &str, to: &str) -> String {
        assert!(BASELINE.contains(from));
        BASELINE.replace(from, to)
    }

    fn invalid_key(err: Error) -> &'static str {
        match err {
            Error::Invalid { key, .. } => key,
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn baseline_document_loads() {
        let s = load_scenario(BASELINE).unwrap();
        let lambda = SPEED_OF_LIGHT / 77e9;
        assert_eq!(s.chirp().samples, 1024);
        assert_eq!(s.chirp().period_s, 100e-6);
        assert_eq!(s.array().tx_count, 2);
        assert_eq!(s.array().rx_count, 4);
        assert!((s.array().tx_spacing_m - 2.0 * lambda).abs() < 1e-18);
        assert!((s.array().rx_spacing_m - 0.5 * lambda).abs() < 1e-18);
        assert_eq!(s.rts().intermediate_frequency_hz, 500e6);
        assert_eq!(s.rts().amplitude, 1.0);
        assert_eq!(s.rts().delay_s, 0.0);
        assert_eq!(s.grid().len(), 18001);
        assert!(s.far_field_ok());
        assert!(s.warnings().is_empty());
    }

    #[test]
    fn wavelength_at_77_ghz() {
        let s = Scenario::builder().build().unwrap();
        assert!((s.wavelength_m() - 3.8934085454545454e-3).abs() < 1e-15);
        assert!((s.steering_wavelength_m() - 3.8682897806451614e-3).abs() < 1e-15);
    }

    #[test]
    fn single_sample_is_rejected() {
        let err = load_scenario(&with_replaced("b_hz = 1e9", "b_hz = 1e9\nns = 1")).unwrap_err();
        assert!(err.to_string().contains("Ns ≥ 2"), "{err}");
        assert_eq!(invalid_key(err), "ns");
    }

    #[test]
    fn theta_tx_out_of_range_is_rejected() {
        let err = load_scenario(&with_replaced("theta_tx_deg = 0.0", "theta_tx_deg = 100.0"))
            .unwrap_err();
        assert!(err.to_string().contains("θtx out of [−90°, 90°]"), "{err}");
        assert_eq!(invalid_key(err), "theta_tx_deg");
    }

    #[test]
    fn unknown_key_is_a_parse_error() {
        let err = load_scenario(&with_replaced("rc_m = 1.0", "rc_m = 1.0\nbogus = 3")).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn unknown_section_is_a_parse_error() {
        let err = load_scenario(&format!("{BASELINE}\n[extra]\nx = 1\n")).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn missing_key_is_named() {
        let err = load_scenario(&with_replaced("fc_hz = 77e9\n", "")).unwrap_err();
        assert!(err.to_string().contains("fc_hz"), "{err}");
    }

    #[test]
    fn malformed_document_is_a_parse_error() {
        assert!(matches!(
            load_scenario("[chirp\nfc_hz = "),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn spacing_needs_exactly_one_unit() {
        let both = with_replaced("dtx_lambda = 2.0", "dtx_lambda = 2.0\ndtx_m = 0.0078");
        assert_eq!(invalid_key(load_scenario(&both).unwrap_err()), "dtx");
        let none = with_replaced("dtx_lambda = 2.0\n", "");
        assert_eq!(invalid_key(load_scenario(&none).unwrap_err()), "dtx");
        let meters = with_replaced("dtx_lambda = 2.0", "dtx_m = 0.0078");
        assert_eq!(load_scenario(&meters).unwrap().array().tx_spacing_m, 0.0078);
    }

    #[test]
    fn integer_valued_floats_are_accepted() {
        let s = load_scenario(&with_replaced("fc_hz = 77e9", "fc_hz = 77000000000")).unwrap();
        assert_eq!(s.chirp().start_frequency_hz, 77e9);
    }

    #[test]
    fn other_invariants() {
        let cases = [
            ("rc_m = 1.0", "rc_m = 0.0", "rc_m"),
            ("ntx = 2", "ntx = 0", "ntx"),
            ("nrx = 4", "nrx = -1", "nrx"),
            ("b_hz = 1e9", "b_hz = -1e9", "b_hz"),
            ("f_rts_hz = 500e6", "f_rts_hz = -1.0", "f_rts_hz"),
            (
                "f_rts_hz = 500e6",
                "f_rts_hz = 500e6\namplitude = 0.0",
                "amplitude",
            ),
            (
                "f_rts_hz = 500e6",
                "f_rts_hz = 500e6\ntau_rts_s = -1e-9",
                "tau_rts_s",
            ),
            ("theta_rx_deg = 0.0", "theta_rx_deg = -90.5", "theta_rx_deg"),
            ("drx_lambda = 0.5", "drx_lambda = 0.0", "drx"),
        ];
        for (from, to, key) in cases {
            assert_eq!(
                invalid_key(load_scenario(&with_replaced(from, to)).unwrap_err()),
                key
            );
        }
    }

    #[test]
    fn grid_section_is_validated() {
        let doc = format!("{BASELINE}\n[grid]\nangle_min_deg = 10.0\nangle_max_deg = -10.0\n");
        assert_eq!(
            invalid_key(load_scenario(&doc).unwrap_err()),
            "angle_min_deg"
        );
        let doc = format!("{BASELINE}\n[grid]\nangle_step_deg = 0.0\n");
        assert_eq!(
            invalid_key(load_scenario(&doc).unwrap_err()),
            "angle_step_deg"
        );
        let doc = format!("{BASELINE}\n[grid]\nangle_max_deg = 91.0\n");
        assert_eq!(
            invalid_key(load_scenario(&doc).unwrap_err()),
            "angle_max_deg"
        );
        let doc = format!("{BASELINE}\n[grid]\nangle_min_deg = -20.0\nangle_max_deg = 20.0\nangle_step_deg = 0.5\n");
        assert_eq!(load_scenario(&doc).unwrap().grid().len(), 81);
    }

    #[test]
    fn default_grid_spans_the_half_plane() {
        let g = AngleGrid::default();
        assert_eq!(g.min_rad, -FRAC_PI_2);
        assert_eq!(g.max_rad, FRAC_PI_2);
        assert_eq!(g.angle(g.len() - 1), FRAC_PI_2);
        let angles = g.angles();
        assert!(angles.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn nyquist_violation_is_rejected() {
        // Bτ ≈ 6.67 + 1000 bins against Ns/2 = 512.
        let err = Scenario::builder().rts_delay_s(1e-6).build().unwrap_err();
        assert!(matches!(err, Error::Nyquist { .. }));
        assert!(Scenario::builder()
            .rts_delay_s(1e-6)
            .samples(4096)
            .build()
            .is_ok());
    }

    #[test]
    fn close_range_warns_but_loads() {
        let s = load_scenario(&with_replaced("rc_m = 1.0", "rc_m = 0.05")).unwrap();
        assert!(!s.far_field_ok());
        assert_eq!(s.warnings().len(), 1);
    }

    #[test]
    fn displacement_values() {
        let s = Scenario::builder().build().unwrap();
        assert_eq!(rts_displacement(&s), 0.0);
        let s = Scenario::builder()
            .rts_angles_deg(0.0, 1.0)
            .build()
            .unwrap();
        assert!((rts_displacement(&s) - 0.0174524).abs() < 1e-7);
        let s = Scenario::builder()
            .rts_angles_deg(1.0, 0.0)
            .build()
            .unwrap();
        assert!((rts_displacement(&s) + 0.0174524).abs() < 1e-7);
    }

    #[test]
    fn subarray_must_fit() {
        let s = Scenario::builder().build().unwrap();
        assert_eq!(s.with_subarray(1, 4).unwrap().array().tx_count, 1);
        assert!(s.with_subarray(3, 4).is_err());
        assert!(matches!(s.with_subarray(0, 4), Err(Error::EmptySelection)));
    }

    #[test]
    fn emitted_document_round_trips() {
        let doc = with_replaced("theta_tx_deg = 0.0", "theta_tx_deg = 2.3")
            + "\n[grid]\nangle_min_deg = -33.3\nangle_max_deg = 47.1\nangle_step_deg = 0.007\n";
        let s = load_scenario(&doc).unwrap();
        assert_eq!(load_scenario(&emit_scenario(&s)).unwrap(), s);
    }

    #[test]
    fn sweep_section_is_carried() {
        let doc = format!("{BASELINE}\n[sweep]\nd_max_m = 0.05\npoints = 11\n");
        let cfg = parse_config(&doc).unwrap();
        let sweep = cfg.sweep.unwrap();
        assert_eq!(sweep.d_max_m, Some(0.05));
        assert_eq!(sweep.points, Some(11));
        let bad = format!("{BASELINE}\n[sweep]\nd_max = 0.05\n");
        assert!(matches!(parse_config(&bad), Err(Error::Parse(_))));
    }
}
