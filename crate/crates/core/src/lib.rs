//! Simulation of FMCW MIMO radar angle estimation in front of a quasi-monostatic
//! radar target simulator (RTS).
//!
//! An RTS channel receives the radar signal with one antenna and re-radiates it
//! from a second antenna a few millimetres to centimetres away. The outbound path
//! sees the RTS receiver angle, the return path sees the RTS transmitter angle, so
//! the MIMO virtual array of the radar under test observes a phase front that
//! belongs to neither position. This crate models that effect at three levels:
//!
//! - a full time-domain chain ([`signal_chain`]): dechirped beat signal per
//!   virtual element, range DFT, bin detection, then delay-and-sum
//!   beamforming ([`beamformer`]);
//! - ideal per-element phasors fed to the same beamformer;
//! - the analytic angle spectrum ([`closed_form`]) in its sinc product form and
//!   its exact Dirichlet-kernel form.
//!
//! [`experiment`] sweeps the RTS transmitter displacement and tabulates the
//! detected-angle deviation for several antenna subsets.
//!
//! ```
//! use quasimono::{beamformer, closed_form, scenario, signal_chain};
//!
//! let s = scenario::Scenario::builder()
//!     .rts_angles_deg(0.0, 2.0)
//!     .build()
//!     .unwrap();
//! let beat = signal_chain::synthesize_beat(&s, &Default::default()).unwrap();
//! let range = signal_chain::range_dft(&beat);
//! let spectrum = beamformer::beamform(&range, &s);
//! let detected = spectrum.refine_peak().unwrap().to_degrees();
//! let predicted = closed_form::predicted_peak(&s, closed_form::KernelMode::Dirichlet)
//!     .unwrap()
//!     .to_degrees();
//! assert!((detected - predicted).abs() < 0.02);
//! ```

pub mod beamformer;
pub mod closed_form;
mod error;
pub mod experiment;
mod format;
pub mod propagation;
pub mod scenario;
pub mod signal_chain;

pub use error::{Error, Result};
pub use scenario::{Scenario, SPEED_OF_LIGHT};
