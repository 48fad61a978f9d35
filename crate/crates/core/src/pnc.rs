//! Relay processing: quantize the noisy superposition onto the sum lattice,
//! re-wrap it onto the host constellation, and the end nodes' inverse that
//! cancels their own symbol.
//!
//! All values here are unit-scale integers (channel inversion has already
//! removed the fading).

use serde::Serialize;

use crate::binning::Node;
use crate::bits;
use crate::constellation::PamConstellation;
use crate::error::{Error, Result};

/// Largest absolute value of `x_A + x_B`.
fn sum_extent(order_a: u32, order_b: u32) -> i32 {
    (order_a + order_b) as i32 - 2
}

/// The `M_A + M_B - 1` even values the noiseless sum can take.
pub fn sum_support(order_a: u32, order_b: u32) -> Vec<i32> {
    let e = sum_extent(order_a, order_b);
    (-e..=e).step_by(2).collect()
}

/// Nearest point of the sum support. Values beyond the support clamp to
/// its extremes; exact midpoints round toward the smaller magnitude.
pub fn quantize_sum(y: f64, order_a: u32, order_b: u32) -> i32 {
    let e = f64::from(sum_extent(order_a, order_b));
    let half = y.clamp(-e, e) / 2.0;
    let lo = half.floor();
    let k = match (half - lo).partial_cmp(&0.5) {
        Some(std::cmp::Ordering::Greater) => lo + 1.0,
        Some(std::cmp::Ordering::Less) => lo,
        _ if lo >= 0.0 => lo,
        _ => lo + 1.0,
    };
    (2.0 * k) as i32
}

/// `((y + M) mod 2M) - (M - 1)` for host order `M`.
pub fn wrap_value(y_sum: i32, host_order: u32) -> i32 {
    let m = host_order as i32;
    (y_sum + m).rem_euclid(2 * m) - (m - 1)
}

/// A relay symbol: a host constellation point and its cycle-2 label bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PncSymbol {
    pub value: i32,
    pub cycle2_bits: Vec<u8>,
}

/// One row of the relay's wrap table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WrapRow {
    pub y: i32,
    /// `(x_A, x_B)` pairs producing `y`, ordered by `x_A`.
    pub pairs: Vec<(i32, i32)>,
    pub s: i32,
}

/// Wrap map for a pair of unit-scale constellations.
#[derive(Debug, Clone)]
pub struct WrapCodebook {
    a: PamConstellation,
    b: PamConstellation,
}

impl WrapCodebook {
    pub fn new(a: PamConstellation, b: PamConstellation) -> Self {
        WrapCodebook { a, b }
    }

    pub fn gray(order_a: u32, order_b: u32) -> Result<Self> {
        Ok(Self::new(
            PamConstellation::gray(order_a)?,
            PamConstellation::gray(order_b)?,
        ))
    }

    pub fn host(&self) -> &PamConstellation {
        if self.a.order() > self.b.order() {
            &self.a
        } else {
            &self.b
        }
    }

    fn constellation(&self, node: Node) -> &PamConstellation {
        match node {
            Node::A => &self.a,
            Node::B => &self.b,
        }
    }

    pub fn support(&self) -> Vec<i32> {
        sum_support(self.a.order(), self.b.order())
    }

    fn in_support(&self, y: i32) -> bool {
        let e = sum_extent(self.a.order(), self.b.order());
        y.abs() <= e && (y + e) % 2 == 0
    }

    pub fn quantize(&self, y: f64) -> i32 {
        quantize_sum(y, self.a.order(), self.b.order())
    }

    pub fn wrap(&self, y_sum: i32) -> Result<PncSymbol> {
        if !self.in_support(y_sum) {
            return Err(Error::OutOfSupport(y_sum));
        }
        let host = self.host();
        let value = wrap_value(y_sum, host.order());
        let label = host
            .label_of_point(value)
            .expect("wrapped value lies on the host constellation");
        Ok(PncSymbol {
            value,
            cycle2_bits: bits::from_label(label, host.width()),
        })
    }

    /// Recovers the other node's point from the PNC value and the caller's
    /// own point.
    pub fn unwrap(&self, s: i32, own: i32, own_node: Node) -> Result<i32> {
        let host_order = self.host().order();
        if self.constellation(own_node).index_of_point(own).is_none() {
            return Err(Error::NoConsistentSymbol { s, own });
        }
        let other = self.constellation(own_node.other());
        let mut found = other
            .unit_points()
            .into_iter()
            .filter(|&x| wrap_value(own + x, host_order) == s);
        match (found.next(), found.next()) {
            (Some(x), None) => Ok(x),
            _ => Err(Error::NoConsistentSymbol { s, own }),
        }
    }

    /// All constellation pairs whose sum is `y_sum`.
    pub fn posterior(&self, y_sum: i32) -> Vec<(i32, i32)> {
        relay_symbol_posterior(y_sum, self.a.order(), self.b.order())
    }

    pub fn rows(&self) -> Vec<WrapRow> {
        self.support()
            .into_iter()
            .map(|y| WrapRow {
                y,
                pairs: self.posterior(y),
                s: wrap_value(y, self.host().order()),
            })
            .collect()
    }
}

pub fn relay_symbol_posterior(y_sum: i32, order_a: u32, order_b: u32) -> Vec<(i32, i32)> {
    let (ma, mb) = (order_a as i32, order_b as i32);
    (0..ma)
        .map(|j| 2 * j - (ma - 1))
        .filter_map(|xa| {
            let xb = y_sum - xa;
            (xb.abs() < mb && (xb + mb - 1) % 2 == 0).then_some((xa, xb))
        })
        .collect()
}

/// Cycle-2 transmit amplitude for a PNC value.
pub fn pnc_reencode(s: &PncSymbol, energy_scale: f64) -> f64 {
    f64::from(s.value) * energy_scale
}
