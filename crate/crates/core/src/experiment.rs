//! Displacement sweep: the RTS receiver stays at θrx while the transmitter moves
//! laterally by d_rts, and every point is processed for several antenna subsets.
//!
//! Each row runs the full chain (synthesis, range DFT, subset selection,
//! beamforming, peak refinement) and the Dirichlet closed-form prediction.

use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;

use crate::beamformer::beamform;
use crate::closed_form::{predicted_peak, KernelMode};
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::scenario::{RtsChannelConfig, Scenario, SweepSection};
use crate::signal_chain::{run_chain, ChainOptions};

pub const DEFAULT_D_MAX_M: f64 = 0.1;
pub const DEFAULT_POINTS: usize = 51;
pub const DEFAULT_SUBSETS: &str = "2x4,2x2,1x4";

pub const CSV_HEADER: [&str; 8] = [
    "d_rts_m",
    "theta_rx_deg",
    "theta_tx_deg",
    "subset",
    "detected_fullchain_deg",
    "detected_closedform_deg",
    "deviation_deg",
    "range_compensated",
];

/// Antenna selection keeping the first `tx_count` TX and `rx_count` RX elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subset {
    pub label: String,
    pub tx_count: usize,
    pub rx_count: usize,
}

impl Subset {
    pub fn new(tx_count: usize, rx_count: usize) -> Self {
        Subset {
            label: format!("{tx_count}x{rx_count}"),
            tx_count,
            rx_count,
        }
    }

    pub fn tx_indices(&self) -> Vec<usize> {
        (0..self.tx_count).collect()
    }

    pub fn rx_indices(&self) -> Vec<usize> {
        (0..self.rx_count).collect()
    }

    /// Parses a comma-separated list such as `"2x4,2x2,1x4"`.
    pub fn parse_list(text: &str) -> Result<Vec<Subset>> {
        text.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid("subsets", format!("expected NTXxNRX, got {s:?}"));
        let (tx, rx) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let tx_count: usize = tx.parse().map_err(|_| bad())?;
        let rx_count: usize = rx.parse().map_err(|_| bad())?;
        if tx_count == 0 || rx_count == 0 {
            return Err(Error::EmptySelection);
        }
        Ok(Subset::new(tx_count, rx_count))
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    base: Scenario,
    d_max_m: f64,
    points: usize,
    subsets: Vec<Subset>,
    range_compensation: bool,
    zero_pad: usize,
}

impl SweepSpec {
    pub fn new(
        base: Scenario,
        d_max_m: f64,
        points: usize,
        subsets: Vec<Subset>,
        range_compensation: bool,
    ) -> Result<Self> {
        let rc = base.rts().range_m;
        if !(d_max_m >= 0.0 && d_max_m < rc) {
            return Err(Error::invalid(
                "d_max_m",
                format!("displacement range must satisfy 0 ≤ d_max < Rc = {rc} m (got {d_max_m})"),
            ));
        }
        if points < 2 {
            return Err(Error::invalid(
                "points",
                format!("step count ≥ 2 required (got {points})"),
            ));
        }
        if subsets.is_empty() {
            return Err(Error::invalid("subsets", "at least one subset required"));
        }
        for (i, sub) in subsets.iter().enumerate() {
            if subsets[..i].iter().any(|o| o.label == sub.label) {
                return Err(Error::invalid(
                    "subsets",
                    format!("subset label {} repeated", sub.label),
                ));
            }
            base.with_subarray(sub.tx_count, sub.rx_count)?;
        }
        Ok(SweepSpec {
            base,
            d_max_m,
            points,
            subsets,
            range_compensation,
            zero_pad: 1,
        })
    }

    /// Builds a spec from the `[sweep]` section, falling back to the defaults
    /// (0.1 m, 51 points, 2x4/2x2/1x4, compensation on) for absent keys.
    pub fn from_section(base: Scenario, section: Option<&SweepSection>) -> Result<Self> {
        let empty = SweepSection::default();
        let sec = section.unwrap_or(&empty);
        let points = sec.points.unwrap_or(DEFAULT_POINTS as i64);
        if points < 2 {
            return Err(Error::invalid(
                "points",
                format!("step count ≥ 2 required (got {points})"),
            ));
        }
        let subsets = Subset::parse_list(sec.subsets.as_deref().unwrap_or(DEFAULT_SUBSETS))?;
        SweepSpec::new(
            base,
            sec.d_max_m.unwrap_or(DEFAULT_D_MAX_M),
            points as usize,
            subsets,
            sec.range_compensation.unwrap_or(true),
        )
    }

    pub fn with_zero_pad(mut self, zero_pad: usize) -> Self {
        self.zero_pad = zero_pad;
        self
    }

    pub fn with_subsets(self, subsets: Vec<Subset>) -> Result<Self> {
        SweepSpec::new(
            self.base,
            self.d_max_m,
            self.points,
            subsets,
            self.range_compensation,
        )
        .map(|s| s.with_zero_pad(self.zero_pad))
    }

    pub fn with_range_compensation(mut self, on: bool) -> Self {
        self.range_compensation = on;
        self
    }

    pub fn base(&self) -> &Scenario {
        &self.base
    }

    pub fn subsets(&self) -> &[Subset] {
        &self.subsets
    }

    pub fn range_compensation(&self) -> bool {
        self.range_compensation
    }

    /// Displacement of every sweep point, evenly spaced over [0, d_max].
    pub fn displacements(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| self.d_max_m * i as f64 / last)
            .collect()
    }

    /// Far-field status of the sweep. Rc and the array do not change between points.
    pub fn far_field_ok(&self) -> bool {
        self.base.far_field_ok()
    }
}

/// θtx = asin(sin θrx + d/Rc), the inverse of [`crate::scenario::displacement`].
pub fn displacement_to_theta_tx(theta_rx_rad: f64, d_m: f64, range_m: f64) -> Result<f64> {
    let arg = theta_rx_rad.sin() + d_m / range_m;
    if !(-1.0..=1.0).contains(&arg) {
        return Err(Error::Domain(format!(
            "sin θrx + d/Rc = {arg} lies outside [−1, 1]"
        )));
    }
    Ok(arg.asin())
}

/// One (displacement, subset) result. Field names match the CSV header.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SweepRow {
    pub d_rts_m: f64,
    pub theta_rx_deg: f64,
    pub theta_tx_deg: f64,
    pub subset: String,
    pub detected_fullchain_deg: f64,
    pub detected_closedform_deg: f64,
    /// `detected_fullchain_deg − theta_rx_deg`.
    pub deviation_deg: f64,
    pub range_compensated: bool,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let per_point: Vec<Vec<SweepRow>> = spec
        .displacements()
        .into_par_iter()
        .enumerate()
        .map(|(index, d)| {
            sweep_point(spec, d).map_err(|e| Error::SweepPoint {
                index,
                d_rts_m: d,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

fn sweep_point(spec: &SweepSpec, d: f64) -> Result<Vec<SweepRow>> {
    let base = &spec.base;
    let rts = *base.rts();
    let theta_tx = displacement_to_theta_tx(rts.theta_rx_rad, d, rts.range_m)?;
    let s = base.with_rts(RtsChannelConfig {
        theta_tx_rad: theta_tx,
        ..rts
    })?;
    let return_offset_m = if spec.range_compensation {
        rts.range_m.hypot(d) - rts.range_m
    } else {
        0.0
    };
    let opts = ChainOptions {
        zero_pad: spec.zero_pad,
        return_offset_m,
        ..Default::default()
    };
    let range = run_chain(&s, &opts)?;

    let theta_rx_deg = rts.theta_rx_rad.to_degrees();
    spec.subsets
        .iter()
        .map(|sub| {
            let selected = range.select_subset(&sub.tx_indices(), &sub.rx_indices())?;
            let detected = beamform(&selected, &s).refine_peak()?.to_degrees();
            let closed = predicted_peak(
                &s.with_subarray(sub.tx_count, sub.rx_count)?,
                KernelMode::Dirichlet,
            )?
            .to_degrees();
            Ok(SweepRow {
                d_rts_m: d,
                theta_rx_deg,
                theta_tx_deg: theta_tx.to_degrees(),
                subset: sub.label.clone(),
                detected_fullchain_deg: detected,
                detected_closedform_deg: closed,
                deviation_deg: detected - theta_rx_deg,
                range_compensated: spec.range_compensation,
            })
        })
        .collect()
}

/// Writes rows as CSV, floats with nine significant digits.
pub fn write_results<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::NoRows);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(&[
            sig9(r.d_rts_m),
            sig9(r.theta_rx_deg),
            sig9(r.theta_tx_deg),
            r.subset.clone(),
            sig9(r.detected_fullchain_deg),
            sig9(r.detected_closedform_deg),
            sig9(r.deviation_deg),
            r.range_compensated.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the CSV file at `path`. Nothing is created when `rows` is empty.
pub fn emit_results(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_results(rows, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}
