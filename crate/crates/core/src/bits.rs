//! Bit-string helpers. Labels are stored as integers, most significant bit
//! first, so position 0 is the leftmost bit of the written code.

use crate::error::{Error, Result};

pub fn to_label(bits: &[u8]) -> u32 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u32::from(b & 1))
}

pub fn from_label(label: u32, width: u32) -> Vec<u8> {
    (0..width)
        .map(|p| bit_at(label, width, p as usize))
        .collect()
}

/// Bit at `pos` (0 = leftmost) of a `width`-bit label.
pub fn bit_at(label: u32, width: u32, pos: usize) -> u8 {
    ((label >> (width as usize - 1 - pos)) & 1) as u8
}

pub fn set_bit(label: &mut u32, width: u32, pos: usize, bit: u8) {
    let shift = width as usize - 1 - pos;
    *label = (*label & !(1 << shift)) | (u32::from(bit & 1) << shift);
}

/// Parses a code such as `"110"`.
pub fn parse(code: &str) -> Result<Vec<u8>> {
    code.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::InvalidLabeling(format!("non-binary code {code:?}"))),
        })
        .collect()
}

pub fn format(bits: &[u8]) -> String {
    bits.iter()
        .map(|&b| if b == 0 { '0' } else { '1' })
        .collect()
}

pub fn log2_exact(order: u32) -> Option<u32> {
    (order >= 2 && order.is_power_of_two()).then(|| order.trailing_zeros())
}
