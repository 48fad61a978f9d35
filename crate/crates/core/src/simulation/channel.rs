//! Block fading, channel-inversion precoding and complex AWGN.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inversion is refused (outage) when `|h|` is at or below this value.
pub const OUTAGE_THRESHOLD: f64 = 1e-3;

/// Fading law of a per-slot coefficient, normalized to `E|h|^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Fading {
    #[default]
    Unit,
    Rayleigh,
    Rician {
        k_factor: f64,
    },
    Nakagami {
        m: f64,
    },
}

impl Fading {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Fading::Rician { k_factor } if !(k_factor >= 0.0 && k_factor.is_finite()) => Err(
                Error::InvalidFading(format!("rician k_factor {k_factor} must be >= 0")),
            ),
            Fading::Nakagami { m } if !(m >= 0.5 && m.is_finite()) => Err(Error::InvalidFading(
                format!("nakagami m {m} must be >= 0.5"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "ChannelSpec", into = "ChannelSpec")]
pub struct ChannelModel {
    pub fading: Fading,
    /// `E|w|^2` of the circularly-symmetric complex noise.
    pub sigma2: f64,
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        self.fading.validate()?;
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Config(format!(
                "sigma2 {} must be >= 0",
                self.sigma2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingKind {
    Unit,
    Rayleigh,
    Rician,
    Nakagami,
}

/// Wire form: `{"fading": "rician", "k_factor": 10, "sigma2": 0.1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default = "default_kind")]
    pub fading: FadingKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default)]
    pub sigma2: f64,
}

fn default_kind() -> FadingKind {
    FadingKind::Unit
}

impl TryFrom<ChannelSpec> for ChannelModel {
    type Error = Error;

    fn try_from(s: ChannelSpec) -> Result<Self> {
        let missing = |p: &str| Error::Config(format!("{p} required for {:?} fading", s.fading));
        let fading = match s.fading {
            FadingKind::Unit => Fading::Unit,
            FadingKind::Rayleigh => Fading::Rayleigh,
            FadingKind::Rician => Fading::Rician {
                k_factor: s.k_factor.ok_or_else(|| missing("k_factor"))?,
            },
            FadingKind::Nakagami => Fading::Nakagami {
                m: s.m.ok_or_else(|| missing("m"))?,
            },
        };
        let model = ChannelModel {
            fading,
            sigma2: s.sigma2,
        };
        model.validate()?;
        Ok(model)
    }
}

impl From<ChannelModel> for ChannelSpec {
    fn from(c: ChannelModel) -> Self {
        let (fading, k_factor, m) = match c.fading {
            Fading::Unit => (FadingKind::Unit, None, None),
            Fading::Rayleigh => (FadingKind::Rayleigh, None, None),
            Fading::Rician { k_factor } => (FadingKind::Rician, Some(k_factor), None),
            Fading::Nakagami { m } => (FadingKind::Nakagami, None, Some(m)),
        };
        ChannelSpec {
            fading,
            k_factor,
            m,
            sigma2: c.sigma2,
        }
    }
}

fn cn01<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn sample_fading<R: Rng + ?Sized>(fading: &Fading, rng: &mut R) -> Result<Complex64> {
    fading.validate()?;
    Ok(match *fading {
        Fading::Unit => Complex64::new(1.0, 0.0),
        Fading::Rayleigh => cn01(rng),
        Fading::Rician { k_factor } => {
            let los = (k_factor / (k_factor + 1.0)).sqrt();
            let nlos = (1.0 / (k_factor + 1.0)).sqrt();
            Complex64::new(los, 0.0) + cn01(rng) * nlos
        }
        Fading::Nakagami { m } => {
            let power: f64 = Gamma::new(m, 1.0 / m)
                .map_err(|e| Error::InvalidFading(e.to_string()))?
                .sample(rng);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(power.sqrt(), phase)
        }
    })
}

/// Circularly-symmetric complex Gaussian sample with `E|w|^2 = sigma2`.
///
/// Always consumes the same draws, so runs that differ only in `sigma2` see
/// the same scaled noise realizations.
pub fn awgn<R: Rng + ?Sized>(sigma2: f64, rng: &mut R) -> Complex64 {
    let w = cn01(rng);
    if sigma2 == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    w * sigma2.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precoded {
    pub tx: Complex64,
    /// `|tx|^2 = |symbol|^2 / |h|^2`.
    pub energy: f64,
}

/// Pre-multiplies by `h* / |h|^2` so that `h * tx == symbol`.
pub fn invert_precode(symbol: Complex64, h: Complex64) -> Result<Precoded> {
    let mag = h.norm();
    if mag <= OUTAGE_THRESHOLD {
        return Err(Error::Outage(mag));
    }
    let tx = symbol * h.conj() / h.norm_sqr();
    Ok(Precoded {
        tx,
        energy: tx.norm_sqr(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cycle1 {
    pub h_a: Complex64,
    pub h_b: Complex64,
    pub tx_a: Precoded,
    pub tx_b: Precoded,
    pub y: Complex64,
}

/// First cycle for one slot: fading, inversion at both transmitters and the
/// relay's noisy superposition. Outage is reported as an error.
pub fn cycle1<R: Rng + ?Sized>(
    x_a: Complex64,
    x_b: Complex64,
    model: &ChannelModel,
    rng: &mut R,
) -> Result<Cycle1> {
    let h_a = sample_fading(&model.fading, rng)?;
    let h_b = sample_fading(&model.fading, rng)?;
    cycle1_with(x_a, x_b, h_a, h_b, model.sigma2, rng)
}

pub fn cycle1_with<R: Rng + ?Sized>(
    x_a: Complex64,
    x_b: Complex64,
    h_a: Complex64,
    h_b: Complex64,
    sigma2: f64,
    rng: &mut R,
) -> Result<Cycle1> {
    let tx_a = invert_precode(x_a, h_a)?;
    let tx_b = invert_precode(x_b, h_b)?;
    let y = h_a * tx_a.tx + h_b * tx_b.tx + awgn(sigma2, rng);
    Ok(Cycle1 {
        h_a,
        h_b,
        tx_a,
        tx_b,
        y,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cycle2 {
    pub h_a: Complex64,
    pub h_b: Complex64,
    pub z_a: Complex64,
    pub z_b: Complex64,
}

impl Cycle2 {
    /// Coherent equalization at A and B.
    pub fn equalized(&self) -> (Complex64, Complex64) {
        (self.z_a / self.h_a, self.z_b / self.h_b)
    }
}

/// Second cycle: the relay broadcasts `x` at constant power.
pub fn cycle2<R: Rng + ?Sized>(x: Complex64, model: &ChannelModel, rng: &mut R) -> Result<Cycle2> {
    let h_a = sample_fading(&model.fading, rng)?;
    let h_b = sample_fading(&model.fading, rng)?;
    Ok(cycle2_with(x, h_a, h_b, model.sigma2, rng))
}

pub fn cycle2_with<R: Rng + ?Sized>(
    x: Complex64,
    h_a: Complex64,
    h_b: Complex64,
    sigma2: f64,
    rng: &mut R,
) -> Cycle2 {
    let z_a = h_a * x + awgn(sigma2, rng);
    let z_b = h_b * x + awgn(sigma2, rng);
    Cycle2 { h_a, h_b, z_a, z_b }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_fading_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(sample_fading(&Fading::Unit, &mut rng).unwrap(), c(1.0, 0.0));
        }
    }

    #[test]
    fn strong_los_rician_has_unit_magnitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let h = sample_fading(&Fading::Rician { k_factor: 1e9 }, &mut rng).unwrap();
            assert!((h.norm() - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(sample_fading(&Fading::Rician { k_factor: -1.0 }, &mut rng).is_err());
        assert!(sample_fading(&Fading::Nakagami { m: 0.4 }, &mut rng).is_err());
    }

    #[test]
    fn fading_is_power_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for f in [
            Fading::Rayleigh,
            Fading::Rician { k_factor: 3.0 },
            Fading::Nakagami { m: 2.0 },
        ] {
            let n = 200_000;
            let p: f64 = (0..n)
                .map(|_| sample_fading(&f, &mut rng).unwrap().norm_sqr())
                .sum::<f64>()
                / n as f64;
            assert!((p - 1.0).abs() < 0.02, "{f:?} {p}");
        }
    }

    #[test]
    fn channel_json() {
        let m: ChannelModel =
            serde_json::from_str(r#"{"fading":"rician","k_factor":10,"sigma2":0.1}"#).unwrap();
        assert_eq!(m.fading, Fading::Rician { k_factor: 10.0 });
        assert!(serde_json::from_str::<ChannelModel>(r#"{"fading":"nakagami"}"#).is_err());
        assert!(serde_json::from_str::<ChannelModel>(r#"{"fading":"unit","foo":1}"#).is_err());
        assert!(serde_json::from_str::<ChannelModel>(r#"{"fading":"nakagami","m":0.2}"#).is_err());
    }

    #[test]
    fn precode_examples() {
        assert_eq!(
            invert_precode(c(-3.0, 0.0), c(1.0, 0.0)).unwrap().tx,
            c(-3.0, 0.0)
        );
        let p = invert_precode(c(1.0, 0.0), c(0.5, 0.0)).unwrap();
        assert_eq!(p.tx, c(2.0, 0.0));
        assert_eq!(p.energy, 4.0);
        assert_eq!(c(0.5, 0.0) * p.tx, c(1.0, 0.0));
        let p = invert_precode(c(1.0, 0.0), c(0.0, 1.0)).unwrap();
        assert_eq!(p.tx, c(0.0, -1.0));
        assert_eq!(c(0.0, 1.0) * p.tx, c(1.0, 0.0));
        assert_eq!(
            invert_precode(c(1.0, 0.0), c(1e-4, 0.0)),
            Err(Error::Outage(1e-4))
        );
    }

    #[test]
    fn noiseless_cycle1_is_exact_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = ChannelModel {
            fading: Fading::Rayleigh,
            sigma2: 0.0,
        };
        let r = cycle1(
            c(-1.0, 0.0),
            c(-7.0, 0.0),
            &ChannelModel::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(r.y, c(-8.0, 0.0));
        let mut checked = 0;
        while checked < 1000 {
            match cycle1(c(1.0, 0.0), c(-5.0, 0.0), &model, &mut rng) {
                Ok(r) => {
                    assert!((r.y - c(-4.0, 0.0)).norm() < 1e-9);
                    checked += 1;
                }
                Err(Error::Outage(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn noise_variance_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let model = ChannelModel {
            fading: Fading::Unit,
            sigma2: 0.3,
        };
        let n = 100_000;
        let var: f64 = (0..n)
            .map(|_| {
                let r = cycle1(c(1.0, 0.0), c(3.0, 0.0), &model, &mut rng).unwrap();
                (r.y - c(4.0, 0.0)).norm_sqr()
            })
            .sum::<f64>()
            / n as f64;
        assert!((var - 0.3).abs() < 0.05 * 0.3, "{var}");
    }

    #[test]
    fn cycle2_equalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = cycle2(c(3.0, 0.0), &ChannelModel::default(), &mut rng).unwrap();
        assert_eq!(r.equalized().0, c(3.0, 0.0));
        let r = cycle2_with(c(-7.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), 0.0, &mut rng);
        assert_eq!(r.z_a, c(-14.0, 0.0));
        assert_eq!(r.equalized().0, c(-7.0, 0.0));
    }
}
