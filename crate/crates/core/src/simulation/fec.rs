//! Block codes for the common, secret and index streams.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FecCode {
    #[default]
    None,
    /// Odd repetition factor, majority decoding.
    Repetition(u32),
    /// Systematic `[d1 d2 d3 d4 p1 p2 p3]`, syndrome decoding.
    Hamming74,
}

impl FromStr for FecCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let code = match s {
            "none" => FecCode::None,
            "hamming74" => FecCode::Hamming74,
            _ => {
                let r = s
                    .strip_prefix("repetition")
                    .or_else(|| s.strip_prefix("rep"))
                    .and_then(|r| r.parse::<u32>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown code {s:?}")))?;
                FecCode::Repetition(r)
            }
        };
        code.validate()?;
        Ok(code)
    }
}

impl TryFrom<String> for FecCode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FecCode> for String {
    fn from(c: FecCode) -> Self {
        c.to_string()
    }
}

impl fmt::Display for FecCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FecCode::None => f.write_str("none"),
            FecCode::Repetition(r) => write!(f, "rep{r}"),
            FecCode::Hamming74 => f.write_str("hamming74"),
        }
    }
}

// parity equations over (d1, d2, d3, d4)
const PARITY: [[u8; 4]; 3] = [[1, 1, 0, 1], [1, 0, 1, 1], [0, 1, 1, 1]];

fn parity(d: &[u8]) -> [u8; 3] {
    PARITY.map(|row| row.iter().zip(d).fold(0, |acc, (r, b)| acc ^ (r & b)))
}

/// Position (0..7) flagged by a nonzero syndrome.
fn error_position(syndrome: [u8; 3]) -> Option<usize> {
    if syndrome == [0, 0, 0] {
        return None;
    }
    (0..7).find(|&pos| {
        let column = if pos < 4 {
            PARITY.map(|row| row[pos])
        } else {
            let mut c = [0; 3];
            c[pos - 4] = 1;
            c
        };
        column == syndrome
    })
}

impl FecCode {
    pub fn validate(&self) -> Result<()> {
        match self {
            FecCode::Repetition(r) if r % 2 == 0 => {
                Err(Error::Config(format!("repetition factor {r} must be odd")))
            }
            _ => Ok(()),
        }
    }

    pub fn message_len(&self) -> usize {
        match self {
            FecCode::Hamming74 => 4,
            _ => 1,
        }
    }

    pub fn codeword_len(&self) -> usize {
        match self {
            FecCode::None => 1,
            FecCode::Repetition(r) => *r as usize,
            FecCode::Hamming74 => 7,
        }
    }

    pub fn encode(&self, bits: &[u8]) -> Result<Vec<u8>> {
        let k = self.message_len();
        if !bits.len().is_multiple_of(k) {
            return Err(Error::LengthMismatch {
                len: bits.len(),
                block: k,
            });
        }
        Ok(match self {
            FecCode::None => bits.to_vec(),
            FecCode::Repetition(r) => bits
                .iter()
                .flat_map(|&b| std::iter::repeat_n(b, *r as usize))
                .collect(),
            FecCode::Hamming74 => bits
                .chunks(4)
                .flat_map(|d| d.iter().copied().chain(parity(d)))
                .collect(),
        })
    }

    pub fn decode(&self, bits: &[u8]) -> Result<Vec<u8>> {
        let n = self.codeword_len();
        if !bits.len().is_multiple_of(n) {
            return Err(Error::LengthMismatch {
                len: bits.len(),
                block: n,
            });
        }
        Ok(self.decode_prefix(bits))
    }

    /// Decodes whole codewords, then recovers what it can of a trailing
    /// partial codeword: its systematic bits for Hamming, a majority of the
    /// copies received for repetition (ties go to the first copy).
    pub fn decode_prefix(&self, bits: &[u8]) -> Vec<u8> {
        let n = self.codeword_len();
        let mut out = Vec::with_capacity(bits.len() / n * self.message_len() + 4);
        for word in bits.chunks(n) {
            match self {
                FecCode::None => out.push(word[0]),
                FecCode::Repetition(_) => {
                    let ones = word.iter().filter(|&&b| b == 1).count();
                    let zeros = word.len() - ones;
                    out.push(match ones.cmp(&zeros) {
                        std::cmp::Ordering::Greater => 1,
                        std::cmp::Ordering::Less => 0,
                        std::cmp::Ordering::Equal => word[0],
                    });
                }
                FecCode::Hamming74 if word.len() == 7 => {
                    let mut w = [0u8; 7];
                    w.copy_from_slice(word);
                    let p = parity(&w[..4]);
                    let syndrome = [p[0] ^ w[4], p[1] ^ w[5], p[2] ^ w[6]];
                    if let Some(pos) = error_position(syndrome) {
                        w[pos] ^= 1;
                    }
                    out.extend_from_slice(&w[..4]);
                }
                FecCode::Hamming74 => out.extend(word.iter().take(4)),
            }
        }
        out
    }
}

/// Codes applied to each of a node's three bit streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FecConfig {
    #[serde(default)]
    pub common: FecCode,
    #[serde(default)]
    pub secret: FecCode,
    #[serde(default)]
    pub index: FecCode,
}

impl FecConfig {
    pub fn all(code: FecCode) -> Self {
        FecConfig {
            common: code,
            secret: code,
            index: code,
        }
    }
}
