//! Per-slot records of a simulated frame and their CSV form.

use std::io::Write;

use serde::Serialize;

use crate::binning::SlotType;
use crate::error::Result;

/// One row per slot and rail. Outage slots get a single row with only the
/// fading columns filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub frame: u64,
    pub slot: usize,
    pub rail: usize,
    pub outage: bool,
    pub h_a_re: f64,
    pub h_a_im: f64,
    pub h_b_re: f64,
    pub h_b_im: f64,
    pub ht_a_re: f64,
    pub ht_a_im: f64,
    pub ht_b_re: f64,
    pub ht_b_im: f64,
    pub x_a: Option<i32>,
    pub x_b: Option<i32>,
    pub type_a: Option<SlotType>,
    pub type_b: Option<SlotType>,
    /// Rail component of the relay observation.
    pub y: Option<f64>,
    pub y_sum: Option<i32>,
    pub s: Option<i32>,
    /// Equalized rail components at A and B.
    pub z_a: Option<f64>,
    pub z_b: Option<f64>,
    pub x_b_at_a: Option<i32>,
    pub x_a_at_b: Option<i32>,
    pub bits_a: Option<String>,
    pub bits_b: Option<String>,
    /// Symbol bits recovered at the opposite node; align with `bits_a` / `bits_b`.
    pub bits_a_at_b: Option<String>,
    pub bits_b_at_a: Option<String>,
    pub relay_error: Option<bool>,
    pub error_at_a: Option<bool>,
    pub error_at_b: Option<bool>,
    pub energy_a: Option<f64>,
    pub energy_b: Option<f64>,
}

impl SlotRecord {
    pub(crate) fn outage(frame: u64, slot: usize, h: [num_complex::Complex64; 4]) -> Self {
        SlotRecord {
            frame,
            slot,
            rail: 0,
            outage: true,
            h_a_re: h[0].re,
            h_a_im: h[0].im,
            h_b_re: h[1].re,
            h_b_im: h[1].im,
            ht_a_re: h[2].re,
            ht_a_im: h[2].im,
            ht_b_re: h[3].re,
            ht_b_im: h[3].im,
            x_a: None,
            x_b: None,
            type_a: None,
            type_b: None,
            y: None,
            y_sum: None,
            s: None,
            z_a: None,
            z_b: None,
            x_b_at_a: None,
            x_a_at_b: None,
            bits_a: None,
            bits_b: None,
            bits_a_at_b: None,
            bits_b_at_a: None,
            relay_error: None,
            error_at_a: None,
            error_at_b: None,
            energy_a: None,
            energy_b: None,
        }
    }
}

pub fn write_csv<W: Write>(records: &[SlotRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
