//! Unit-spaced M-PAM constellations, their bit labelings, and the rectangular
//! M-QAM built from two independent PAM rails.
//!
//! Points are the odd integers `-(M-1), ..., -1, +1, ..., +(M-1)` times a
//! scale factor. Labelings are written left to right onto ascending points:
//! the first code of a table labels the most negative point.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::error::{Error, Result};

/// How bit strings are assigned to points.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", content = "table", rename_all = "kebab-case")]
pub enum Labeling {
    /// The reflected Gray sequence of the reference mapping table: for 2-PAM
    /// `1, 0` and for 8-PAM `111, 110, 100, 101, 001, 000, 010, 011`. Other
    /// orders use the same construction (bitwise complement of the
    /// binary-reflected Gray code), which reproduces both rows exactly.
    #[default]
    GrayTable1,
    NaturalBinary,
    /// Explicit codes, one per point, in ascending point order.
    Custom(Vec<String>),
}

impl Labeling {
    fn labels(&self, order: u32, width: u32) -> Result<Vec<u32>> {
        let mask = order - 1;
        match self {
            Labeling::GrayTable1 => Ok((0..order).map(|j| !(j ^ (j >> 1)) & mask).collect()),
            Labeling::NaturalBinary => Ok((0..order).collect()),
            Labeling::Custom(codes) => {
                if codes.len() != order as usize {
                    return Err(Error::InvalidLabeling(format!(
                        "{} codes for order {order}",
                        codes.len()
                    )));
                }
                let mut seen = vec![false; order as usize];
                codes
                    .iter()
                    .map(|c| {
                        let b = bits::parse(c)?;
                        if b.len() != width as usize {
                            return Err(Error::InvalidLabeling(format!(
                                "code {c:?} has length {}, expected {width}",
                                b.len()
                            )));
                        }
                        let l = bits::to_label(&b);
                        if std::mem::replace(&mut seen[l as usize], true) {
                            return Err(Error::InvalidLabeling(format!("duplicate code {c:?}")));
                        }
                        Ok(l)
                    })
                    .collect()
            }
        }
    }
}

/// Serialized description of a PAM constellation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationSpec {
    pub order: u32,
    pub labeling: Labeling,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConstellationSpec", into = "ConstellationSpec")]
pub struct PamConstellation {
    order: u32,
    width: u32,
    scale: f64,
    labeling: Labeling,
    /// `labels[j]` labels the j-th point in ascending order.
    labels: Vec<u32>,
    /// Inverse of `labels`.
    index_of: Vec<usize>,
}

impl TryFrom<ConstellationSpec> for PamConstellation {
    type Error = Error;

    fn try_from(spec: ConstellationSpec) -> Result<Self> {
        PamConstellation::new(spec.order, spec.labeling, spec.scale)
    }
}

impl From<PamConstellation> for ConstellationSpec {
    fn from(c: PamConstellation) -> Self {
        ConstellationSpec {
            order: c.order,
            labeling: c.labeling,
            scale: c.scale,
        }
    }
}

impl PamConstellation {
    pub fn new(order: u32, labeling: Labeling, scale: f64) -> Result<Self> {
        let width = bits::log2_exact(order).ok_or(Error::InvalidOrder(order))?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidScale(scale));
        }
        let labels = labeling.labels(order, width)?;
        let mut index_of = vec![0; order as usize];
        for (j, &l) in labels.iter().enumerate() {
            index_of[l as usize] = j;
        }
        Ok(PamConstellation {
            order,
            width,
            scale,
            labeling,
            labels,
            index_of,
        })
    }

    /// Unit-scale constellation with the reference Gray labeling.
    pub fn gray(order: u32) -> Result<Self> {
        Self::new(order, Labeling::GrayTable1, 1.0)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Bits per symbol, `log2(M)`.
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn labeling(&self) -> &Labeling {
        &self.labeling
    }

    /// Unit-scale odd integer of point `j` (ascending).
    pub fn unit_point(&self, j: usize) -> i32 {
        2 * j as i32 - (self.order as i32 - 1)
    }

    /// Index of a unit-scale point, if it belongs to the constellation.
    pub fn index_of_point(&self, point: i32) -> Option<usize> {
        let shifted = point + self.order as i32 - 1;
        (shifted >= 0 && shifted % 2 == 0 && (shifted / 2) < self.order as i32)
            .then_some((shifted / 2) as usize)
    }

    /// Unit-scale points in ascending order.
    pub fn unit_points(&self) -> Vec<i32> {
        (0..self.order as usize)
            .map(|j| self.unit_point(j))
            .collect()
    }

    pub fn points(&self) -> Vec<f64> {
        self.unit_points()
            .into_iter()
            .map(|p| f64::from(p) * self.scale)
            .collect()
    }

    pub fn label_at(&self, j: usize) -> u32 {
        self.labels[j]
    }

    pub fn label_of_point(&self, point: i32) -> Option<u32> {
        self.index_of_point(point).map(|j| self.labels[j])
    }

    /// Unit-scale point carrying `label`.
    pub fn point_of_label(&self, label: u32) -> i32 {
        self.unit_point(self.index_of[label as usize])
    }

    pub fn modulate(&self, bits: &[u8]) -> Result<f64> {
        if bits.len() != self.width as usize {
            return Err(Error::BitLength {
                expected: self.width as usize,
                actual: bits.len(),
            });
        }
        Ok(f64::from(self.point_of_label(bits::to_label(bits))) * self.scale)
    }

    /// Index of the point nearest to `observation`; exact midpoints go to the
    /// more negative point.
    pub fn nearest_index(&self, observation: f64) -> usize {
        let u = (observation / self.scale + f64::from(self.order - 1)) / 2.0;
        let j = (u - 0.5).ceil();
        j.clamp(0.0, f64::from(self.order - 1)) as usize
    }

    pub fn demodulate(&self, observation: f64) -> Vec<u8> {
        bits::from_label(self.labels[self.nearest_index(observation)], self.width)
    }

    /// Mean squared amplitude under uniform symbols, by enumeration.
    pub fn average_energy(&self) -> f64 {
        let sum: f64 = self.points().iter().map(|p| p * p).sum();
        sum / f64::from(self.order)
    }

    pub fn min_distance(&self) -> f64 {
        2.0 * self.scale
    }
}

/// One-dimensional (PAM) or two-dimensional (QAM, two PAM rails) signalling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    #[default]
    Pam,
    Qam,
}

impl Modulation {
    pub fn rails(self) -> usize {
        match self {
            Modulation::Pam => 1,
            Modulation::Qam => 2,
        }
    }

    /// PAM order of one rail for a constellation of `order` points.
    pub fn rail_order(self, order: u32) -> Result<u32> {
        match self {
            Modulation::Pam => bits::log2_exact(order)
                .map(|_| order)
                .ok_or(Error::InvalidOrder(order)),
            Modulation::Qam => qam_rail_order(order),
        }
    }
}

/// Rectangular QAM as two independent PAM rails. A symbol's bits are the
/// in-phase rail bits followed by the quadrature rail bits.
#[derive(Debug, Clone, PartialEq)]
pub struct QamConstellation {
    order: u32,
    i_rail: PamConstellation,
    q_rail: PamConstellation,
}

/// Order of each PAM rail of an M-QAM, if M is an even power of two.
pub fn qam_rail_order(order: u32) -> Result<u32> {
    match bits::log2_exact(order) {
        Some(m) if m % 2 == 0 => Ok(1 << (m / 2)),
        _ => Err(Error::InvalidQamOrder(order)),
    }
}

impl QamConstellation {
    pub fn new(order: u32, labeling: Labeling) -> Result<Self> {
        let rail = qam_rail_order(order)?;
        let i_rail = PamConstellation::new(rail, labeling.clone(), 1.0)?;
        let q_rail = PamConstellation::new(rail, labeling, 1.0)?;
        Ok(QamConstellation {
            order,
            i_rail,
            q_rail,
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn i_rail(&self) -> &PamConstellation {
        &self.i_rail
    }

    pub fn q_rail(&self) -> &PamConstellation {
        &self.q_rail
    }

    pub fn modulate(&self, bits: &[u8]) -> Result<Complex64> {
        let w = self.i_rail.width() as usize;
        if bits.len() != 2 * w {
            return Err(Error::BitLength {
                expected: 2 * w,
                actual: bits.len(),
            });
        }
        Ok(Complex64::new(
            self.i_rail.modulate(&bits[..w])?,
            self.q_rail.modulate(&bits[w..])?,
        ))
    }

    pub fn demodulate(&self, observation: Complex64) -> Vec<u8> {
        let mut out = self.i_rail.demodulate(observation.re);
        out.extend(self.q_rail.demodulate(observation.im));
        out
    }

    pub fn average_energy(&self) -> f64 {
        self.i_rail.average_energy() + self.q_rail.average_energy()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn code(c: &PamConstellation, point: i32) -> String {
        bits::format(&bits::from_label(
            c.label_of_point(point).unwrap(),
            c.width(),
        ))
    }

    #[test]
    fn gray_table1_reproduces_reference_rows() {
        let c8 = PamConstellation::gray(8).unwrap();
        let row: Vec<String> = c8.unit_points().iter().map(|&p| code(&c8, p)).collect();
        assert_eq!(
            row,
            ["111", "110", "100", "101", "001", "000", "010", "011"]
        );
        let c2 = PamConstellation::gray(2).unwrap();
        assert_eq!(c2.modulate(&[1]).unwrap(), -1.0);
        assert_eq!(c2.modulate(&[0]).unwrap(), 1.0);
    }

    #[test]
    fn modulate_examples() {
        let c8 = PamConstellation::gray(8).unwrap();
        assert_eq!(c8.modulate(&[1, 1, 1]).unwrap(), -7.0);
        assert_eq!(c8.modulate(&[0, 1, 1]).unwrap(), 7.0);
        assert_eq!(c8.modulate(&[1, 1, 0]).unwrap(), -5.0);
        assert_eq!(c8.modulate(&[0, 0, 0]).unwrap(), 3.0);
        assert_eq!(
            c8.modulate(&[1, 0]),
            Err(Error::BitLength {
                expected: 3,
                actual: 2
            })
        );
    }

    #[test]
    fn demodulate_examples() {
        let c8 = PamConstellation::gray(8).unwrap();
        assert_eq!(c8.demodulate(-6.9), vec![1, 1, 1]);
        // -1 and +1 tie at zero; the negative point wins
        assert_eq!(c8.demodulate(0.0), vec![1, 0, 1]);
        assert_eq!(c8.demodulate(-2.0), vec![1, 0, 0]);
        assert_eq!(c8.demodulate(1e9), vec![0, 1, 1]);
        let c2 = PamConstellation::gray(2).unwrap();
        assert_eq!(c2.demodulate(0.3), vec![0]);
    }

    #[test]
    fn average_energy_examples() {
        assert_eq!(PamConstellation::gray(2).unwrap().average_energy(), 1.0);
        assert_eq!(PamConstellation::gray(8).unwrap().average_energy(), 21.0);
        let c4 = PamConstellation::new(4, Labeling::GrayTable1, 2.0).unwrap();
        assert_eq!(c4.average_energy(), 20.0);
        assert_eq!(c4.min_distance(), 4.0);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            PamConstellation::gray(6).unwrap_err(),
            Error::InvalidOrder(6)
        );
        assert!(PamConstellation::gray(1).is_err());
        assert!(PamConstellation::new(4, Labeling::GrayTable1, 0.0).is_err());
        let dup = Labeling::Custom(vec!["00".into(), "01".into(), "01".into(), "11".into()]);
        assert!(matches!(
            PamConstellation::new(4, dup, 1.0),
            Err(Error::InvalidLabeling(_))
        ));
        let short = Labeling::Custom(vec!["0".into(), "01".into(), "10".into(), "11".into()]);
        assert!(PamConstellation::new(4, short, 1.0).is_err());
    }

    #[test]
    fn qam_decomposition() {
        let q4 = QamConstellation::new(4, Labeling::GrayTable1).unwrap();
        assert_eq!(q4.i_rail().order(), 2);
        let q64 = QamConstellation::new(64, Labeling::GrayTable1).unwrap();
        assert_eq!(q64.i_rail().order() * q64.q_rail().order(), 64);
        assert_eq!(
            q64.modulate(&[1, 1, 1, 0, 1, 1]).unwrap(),
            Complex64::new(-7.0, 7.0)
        );
        assert_eq!(
            QamConstellation::new(8, Labeling::GrayTable1).unwrap_err(),
            Error::InvalidQamOrder(8)
        );
        assert_eq!(q64.average_energy(), 42.0);
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for m in 1..=8 {
            let c = PamConstellation::gray(1 << m).unwrap();
            for j in 1..c.order() as usize {
                assert_eq!((c.label_at(j) ^ c.label_at(j - 1)).count_ones(), 1);
            }
        }
    }

    #[test]
    fn only_edges_end_in_11_for_8pam() {
        let c8 = PamConstellation::gray(8).unwrap();
        let edges: Vec<i32> = c8
            .unit_points()
            .into_iter()
            .filter(|&p| c8.label_of_point(p).unwrap() & 0b011 == 0b011)
            .collect();
        assert_eq!(edges, vec![-7, 7]);
    }

    #[test]
    fn energy_closed_form() {
        for m in 1..=8 {
            for &scale in &[1.0, 0.5, 3.0] {
                let c = PamConstellation::new(1 << m, Labeling::GrayTable1, scale).unwrap();
                let mm = f64::from(c.order());
                let closed = (mm * mm - 1.0) / 3.0 * scale * scale;
                assert!((c.average_energy() - closed).abs() < 1e-9 * closed);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let c = PamConstellation::new(8, Labeling::GrayTable1, 2.0).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(
            s,
            r#"{"order":8,"labeling":{"kind":"gray-table1"},"scale":2.0}"#
        );
        let back: PamConstellation = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let bad = r#"{"order":8,"labeling":{"kind":"gray-table1"},"scale":1.0,"x":1}"#;
        assert!(serde_json::from_str::<PamConstellation>(bad).is_err());
    }

    proptest! {
        #[test]
        fn demodulate_inverts_modulate(m in 1u32..=8, raw in any::<u32>(), natural in any::<bool>()) {
            let labeling = if natural { Labeling::NaturalBinary } else { Labeling::GrayTable1 };
            let c = PamConstellation::new(1 << m, labeling, 1.0).unwrap();
            let b = bits::from_label(raw & (c.order() - 1), m);
            let x = c.modulate(&b).unwrap();
            prop_assert_eq!(c.demodulate(x), b);
        }
    }
}
