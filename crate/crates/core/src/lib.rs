//! Two-way relay physical-layer network coding with triple-binning secrecy
//! encoders.
//!
//! - [`constellation`]: PAM/QAM points and labelings.
//! - [`binning`]: the host/guest bin layout, slot encoders and rate regions.
//! - [`pnc`]: relay quantization and re-wrapping, and its inverse at the
//!   end nodes.
//! - [`simulation`]: seeded two-cycle frame simulation over fading channels
//!   with per-stream block codes.
//! - [`audit`]: exact enumeration of what the relay learns about the secret
//!   bits.

pub mod audit;
pub mod binning;
pub mod bits;
pub mod constellation;
pub mod error;
pub mod pnc;
pub mod simulation;

pub use binning::{plan_bins, plan_bins_by_node, BinLayout, Node, Role, SlotType};
pub use constellation::{Labeling, Modulation, PamConstellation, QamConstellation};
pub use error::{Category, Error, Result};
pub use pnc::WrapCodebook;
