//! Per-element propagation delays through a quasi-monostatic RTS channel.
//!
//! The outbound leg runs from radar TX element `ntx` to the RTS receive
//! antenna, so its length depends on the TX spacing and on θrx. The return leg
//! runs from the RTS transmit antenna to radar RX element `nrx` and depends on
//! the RX spacing and on θtx. Plane-wave (far-field) geometry is assumed.

use crate::error::{Error, Result};
use crate::scenario::{Scenario, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathDelays {
    /// Radar TX element → RTS receiver (s).
    pub outbound_s: f64,
    /// RTS transmitter → radar RX element (s).
    pub return_s: f64,
    /// `outbound_s + return_s`.
    pub free_space_s: f64,
    /// `free_space_s` plus the RTS internal delay.
    pub total_s: f64,
}

pub fn path_delays(s: &Scenario, ntx: usize, nrx: usize) -> Result<PathDelays> {
    path_delays_with_offset(s, ntx, nrx, 0.0)
}

/// Like [`path_delays`], with `return_offset_m` of extra path length on the return leg
/// (used to model the range increase of a laterally displaced RTS transmitter).
pub fn path_delays_with_offset(
    s: &Scenario,
    ntx: usize,
    nrx: usize,
    return_offset_m: f64,
) -> Result<PathDelays> {
    let a = s.array();
    if ntx >= a.tx_count {
        return Err(Error::IndexOutOfRange {
            what: "ntx",
            index: ntx,
            len: a.tx_count,
        });
    }
    if nrx >= a.rx_count {
        return Err(Error::IndexOutOfRange {
            what: "nrx",
            index: nrx,
            len: a.rx_count,
        });
    }
    let r = s.rts();
    let outbound_s =
        (r.range_m + a.tx_spacing_m * ntx as f64 * r.theta_rx_rad.sin()) / SPEED_OF_LIGHT;
    let return_s =
        (r.range_m + return_offset_m + a.rx_spacing_m * nrx as f64 * r.theta_tx_rad.sin())
            / SPEED_OF_LIGHT;
    let free_space_s = outbound_s + return_s;
    Ok(PathDelays {
        outbound_s,
        return_s,
        free_space_s,
        total_s: free_space_s + r.delay_s,
    })
}

/// Largest total delay over all virtual elements.
pub fn max_total_delay(s: &Scenario, return_offset_m: f64) -> f64 {
    let a = s.array();
    let r = s.rts();
    let tx_extra = (a.tx_spacing_m * (a.tx_count - 1) as f64 * r.theta_rx_rad.sin()).max(0.0);
    let rx_extra = (a.rx_spacing_m * (a.rx_count - 1) as f64 * r.theta_tx_rad.sin()).max(0.0);
    (2.0 * r.range_m + return_offset_m + tx_extra + rx_extra) / SPEED_OF_LIGHT + r.delay_s
}

/// Fraunhofer distance 2D²/λ of the virtual array, D = dtx·(Ntx−1) + drx·(Nrx−1),
/// λ = c0/fc.
pub fn far_field_distance(s: &Scenario) -> f64 {
    let d = s.array().virtual_aperture_m();
    2.0 * d * d / s.wavelength_m()
}
