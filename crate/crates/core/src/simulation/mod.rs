//! Seeded two-cycle frame simulation.
//!
//! Each slot: both encoders run (one invocation per rail), both nodes invert
//! their channel, the relay quantizes and re-wraps the noisy sum, broadcasts
//! the PNC symbol, and each node equalizes, demodulates, cancels its own
//! symbol and splits the recovered bits back into streams. Streams are
//! block-coded per frame.
//!
//! Randomness: frame `f` draws its source bits from the ChaCha8 stream `2f`
//! and its channel from stream `2f + 1`, both keyed by the master seed, so a
//! frame's randomness does not depend on how earlier frames consumed theirs.
//! In frame-pipeline mode the announcements governing frame 0 are a
//! bootstrap both nodes derive from stream [`BOOTSTRAP_STREAM`].

pub mod channel;
pub mod fec;
pub mod trace;

use std::collections::VecDeque;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binning::{
    guest_encode_slot, host_encode_slot, plan_bins_by_node, BinLayout, EncoderState, IndexStream,
    Node, SlotType,
};
use crate::bits;
use crate::constellation::{Labeling, Modulation, QamConstellation};
use crate::error::{Error, Result};
use crate::pnc::{wrap_value, WrapCodebook};

use channel::{cycle1_with, cycle2_with, sample_fading, ChannelModel, OUTAGE_THRESHOLD};
use fec::{FecCode, FecConfig};
use trace::SlotRecord;

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// ChaCha8 stream of the pre-agreed frame-0 announcements.
pub const BOOTSTRAP_STREAM: u64 = u64::MAX;

/// When the guest learns its announced slot types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexPipeline {
    /// Raw announcement bits of slot `i` set the guest's type at slot `i + 1`.
    Slot,
    /// Announcements of frame `f` are decoded with the index code at the end
    /// of the frame and govern frame `f + 1`. The default, since a block-coded
    /// index stream is only decodable once its block is complete.
    #[default]
    Frame,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub order_a: u32,
    pub order_b: u32,
    #[serde(default)]
    pub modulation: Modulation,
    #[serde(default)]
    pub labeling: Labeling,
    pub k_a: u32,
    pub k_b: u32,
    #[serde(default)]
    pub channel: ChannelModel,
    #[serde(default)]
    pub fec: FecConfig,
    /// Slots per frame.
    pub n: usize,
    #[serde(default = "one", alias = "repetitions")]
    pub frames: usize,
    pub seed: Option<u64>,
    #[serde(default)]
    pub index_pipeline: IndexPipeline,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            order_a: 2,
            order_b: 8,
            modulation: Modulation::Pam,
            labeling: Labeling::GrayTable1,
            k_a: 1,
            k_b: 1,
            channel: ChannelModel::default(),
            fec: FecConfig::default(),
            n: 1000,
            frames: 1,
            seed: Some(0),
            index_pipeline: IndexPipeline::Frame,
        }
    }
}

impl SimConfig {
    /// Per-rail bin layout; `k_a`, `k_b` are mapped onto guest/host roles.
    pub fn layout(&self) -> Result<BinLayout> {
        let ra = self.modulation.rail_order(self.order_a)?;
        let rb = self.modulation.rail_order(self.order_b)?;
        plan_bins_by_node(ra, rb, self.k_a, self.k_b, &self.labeling)
    }

    pub fn validate(&self) -> Result<BinLayout> {
        if self.n == 0 || self.frames == 0 {
            return Err(Error::Config("n and frames must be positive".into()));
        }
        if self.seed.is_none() {
            return Err(Error::Config("a seed is required".into()));
        }
        self.channel.validate()?;
        for code in [self.fec.common, self.fec.secret, self.fec.index] {
            code.validate()?;
        }
        self.layout()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StreamCount {
    pub bits: u64,
    pub errors: u64,
}

impl StreamCount {
    fn add(&mut self, o: StreamCount) {
        self.bits += o.bits;
        self.errors += o.errors;
    }
}

/// Raw counts of one frame (or a whole run).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Counters {
    pub slots: u64,
    pub outage_slots: u64,
    /// Non-outage slot-rails.
    pub symbols: u64,
    pub relay_symbol_errors: u64,
    pub symbol_errors_at_a: u64,
    pub symbol_errors_at_b: u64,
    /// Guest slots whose type differs from what the host announced.
    pub guest_type_desync: u64,
    /// Host slots whose type the guest read wrongly.
    pub host_type_misread: u64,
    pub host_secret_symbols: u64,
    pub guest_secret_symbols: u64,
    pub host_secret: StreamCount,
    pub host_common: StreamCount,
    pub host_index: StreamCount,
    pub guest_secret: StreamCount,
    pub guest_common: StreamCount,
    pub energy_a: f64,
    pub energy_b: f64,
    pub predicted_energy_a: f64,
    pub predicted_energy_b: f64,
    /// Largest `| |tx|^2 - |x|^2/|h|^2 |` over transmitted symbols.
    pub max_energy_error: f64,
    /// Largest distance between the noiseless relay input and `x_A + x_B`.
    pub max_inversion_residual: f64,
}

impl Counters {
    fn merge(&mut self, o: &Counters) {
        self.slots += o.slots;
        self.outage_slots += o.outage_slots;
        self.symbols += o.symbols;
        self.relay_symbol_errors += o.relay_symbol_errors;
        self.symbol_errors_at_a += o.symbol_errors_at_a;
        self.symbol_errors_at_b += o.symbol_errors_at_b;
        self.guest_type_desync += o.guest_type_desync;
        self.host_type_misread += o.host_type_misread;
        self.host_secret_symbols += o.host_secret_symbols;
        self.guest_secret_symbols += o.guest_secret_symbols;
        self.host_secret.add(o.host_secret);
        self.host_common.add(o.host_common);
        self.host_index.add(o.host_index);
        self.guest_secret.add(o.guest_secret);
        self.guest_common.add(o.guest_common);
        self.energy_a += o.energy_a;
        self.energy_b += o.energy_b;
        self.predicted_energy_a += o.predicted_energy_a;
        self.predicted_energy_b += o.predicted_energy_b;
        self.max_energy_error = self.max_energy_error.max(o.max_energy_error);
        self.max_inversion_residual = self.max_inversion_residual.max(o.max_inversion_residual);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrace {
    pub frame: u64,
    pub records: Vec<SlotRecord>,
    pub counters: Counters,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamStats {
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
}

impl From<StreamCount> for StreamStats {
    fn from(c: StreamCount) -> Self {
        StreamStats {
            bits: c.bits,
            errors: c.errors,
            ber: ratio(c.errors, c.bits),
        }
    }
}

/// Bit-error rates of the streams sent in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionStats {
    pub secret: StreamStats,
    pub common: StreamStats,
    /// Only the host sends index bits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<StreamStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerStats {
    pub a_to_b: DirectionStats,
    pub b_to_a: DirectionStats,
}

impl BerStats {
    /// Every reported BER, in a fixed order.
    pub fn all(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for d in [&self.a_to_b, &self.b_to_a] {
            v.push(d.secret.ber);
            v.push(d.common.ber);
            if let Some(i) = d.index {
                v.push(i.ber);
            }
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyStats {
    /// Mean `|tx|^2` per symbol.
    pub mean_tx_energy_a: f64,
    pub mean_tx_energy_b: f64,
    /// Mean of `E_avg / |h|^2` with `E_avg` the constellation mean energy.
    pub mean_predicted_a: f64,
    pub mean_predicted_b: f64,
    pub max_accounting_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub schema_version: u32,
    pub config: SimConfig,
    pub host_node: Node,
    pub slots: u64,
    pub outage_slots: u64,
    pub outage_rate: f64,
    pub symbols: u64,
    pub relay_symbol_errors: u64,
    pub relay_symbol_error_rate: f64,
    pub symbol_error_rate_at_a: f64,
    pub symbol_error_rate_at_b: f64,
    pub guest_type_desync: u64,
    pub host_type_misread: u64,
    pub host_secret_fraction: f64,
    pub guest_secret_fraction: f64,
    pub ber: BerStats,
    pub energy: EnergyStats,
    pub max_inversion_residual: f64,
}

impl SimSummary {
    fn new(config: &SimConfig, host_node: Node, c: &Counters) -> Self {
        let active = (c.slots - c.outage_slots) as f64;
        let mean = |x: f64| if active > 0.0 { x / active } else { 0.0 };
        let host_dir = DirectionStats {
            secret: c.host_secret.into(),
            common: c.host_common.into(),
            index: Some(c.host_index.into()),
        };
        let guest_dir = DirectionStats {
            secret: c.guest_secret.into(),
            common: c.guest_common.into(),
            index: None,
        };
        let ber = match host_node {
            Node::B => BerStats {
                a_to_b: guest_dir,
                b_to_a: host_dir,
            },
            Node::A => BerStats {
                a_to_b: host_dir,
                b_to_a: guest_dir,
            },
        };
        SimSummary {
            schema_version: SUMMARY_SCHEMA_VERSION,
            config: config.clone(),
            host_node,
            slots: c.slots,
            outage_slots: c.outage_slots,
            outage_rate: ratio(c.outage_slots, c.slots),
            symbols: c.symbols,
            relay_symbol_errors: c.relay_symbol_errors,
            relay_symbol_error_rate: ratio(c.relay_symbol_errors, c.symbols),
            symbol_error_rate_at_a: ratio(c.symbol_errors_at_a, c.symbols),
            symbol_error_rate_at_b: ratio(c.symbol_errors_at_b, c.symbols),
            guest_type_desync: c.guest_type_desync,
            host_type_misread: c.host_type_misread,
            host_secret_fraction: ratio(c.host_secret_symbols, c.symbols),
            guest_secret_fraction: ratio(c.guest_secret_symbols, c.symbols),
            ber,
            energy: EnergyStats {
                mean_tx_energy_a: mean(c.energy_a),
                mean_tx_energy_b: mean(c.energy_b),
                mean_predicted_a: mean(c.predicted_energy_a),
                mean_predicted_b: mean(c.predicted_energy_b),
                max_accounting_error: c.max_energy_error,
            },
            max_inversion_residual: c.max_inversion_residual,
        }
    }
}

/// Message bits and their codeword bits, enough codewords to cover `need`.
fn source(code: FecCode, need: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let words = need.div_ceil(code.codeword_len());
    let msg: Vec<u8> = (0..words * code.message_len())
        .map(|_| rng.gen_range(0..=1))
        .collect();
    code.encode(&msg).expect("whole messages")
}

/// Errors between what was sent (a codeword prefix) and what arrived.
fn compare(code: FecCode, sent: &[u8], received: &[u8]) -> StreamCount {
    let reference = code.decode_prefix(sent);
    let got = code.decode_prefix(received);
    let overlap = reference.len().min(got.len());
    let flips = (0..overlap).filter(|&i| reference[i] != got[i]).count();
    StreamCount {
        bits: reference.len() as u64,
        errors: (flips + reference.len().abs_diff(got.len())) as u64,
    }
}

/// Corrects whole codewords of `received` and re-encodes them; a trailing
/// partial codeword is kept as received.
fn recode(code: FecCode, received: &[u8]) -> Vec<u8> {
    let full = received.len() / code.codeword_len() * code.codeword_len();
    let mut out = code
        .encode(&code.decode_prefix(&received[..full]))
        .expect("whole messages");
    out.extend_from_slice(&received[full..]);
    out
}

struct HostRx {
    info: Vec<u8>,
    read_type: SlotType,
    true_type: SlotType,
}

#[derive(Default)]
struct Streams {
    secret: Vec<u8>,
    common: Vec<u8>,
    index: Vec<u8>,
}

/// Stateful simulator; frames run in sequence because index pipelines
/// carry over frame boundaries.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    layout: BinLayout,
    codebook: WrapCodebook,
    seed: u64,
    host: EncoderState,
    guest: EncoderState,
    /// Guest slot types the host expects, in order.
    intended: VecDeque<SlotType>,
    /// Corrected announcements governing the guest in the current frame.
    guest_prev_view: Vec<Vec<u8>>,
    frame: u64,
    avg_energy: (f64, f64),
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        let layout = config.validate()?;
        let seed = config.seed.expect("validated");
        let codebook = WrapCodebook::new(
            layout.constellation_of(Node::A).clone(),
            layout.constellation_of(Node::B).clone(),
        );
        let rails = config.modulation.rails();
        let host = EncoderState::host(IndexStream::preloaded()).with_pipeline_delay(
            match config.index_pipeline {
                IndexPipeline::Slot => rails,
                IndexPipeline::Frame => usize::MAX,
            },
        );
        let energy = |order: u32| -> Result<f64> {
            Ok(match config.modulation {
                Modulation::Pam => {
                    crate::constellation::PamConstellation::gray(order)?.average_energy()
                }
                Modulation::Qam => {
                    QamConstellation::new(order, Labeling::GrayTable1)?.average_energy()
                }
            })
        };
        let avg_energy = (energy(config.order_a)?, energy(config.order_b)?);
        let mut sim = Simulator {
            layout,
            codebook,
            seed,
            host,
            guest: EncoderState::guest(),
            intended: VecDeque::new(),
            guest_prev_view: Vec::new(),
            frame: 0,
            avg_energy,
            config,
        };
        if sim.config.index_pipeline == IndexPipeline::Frame && sim.layout.k_guest() > 0 {
            let kg = sim.layout.k_guest() as usize;
            let mut rng = sim.rng(BOOTSTRAP_STREAM);
            let boot: Vec<Vec<u8>> = (0..sim.config.n * rails)
                .map(|_| (0..kg).map(|_| rng.gen_range(0..=1u8)).collect())
                .collect();
            sim.install_announcements(boot.clone(), boot);
        }
        Ok(sim)
    }

    /// Makes `issued` (as the host sent them) and `view` (as the guest
    /// decoded them) govern the next frame.
    fn install_announcements(&mut self, issued: Vec<Vec<u8>>, view: Vec<Vec<u8>>) {
        self.intended = issued.iter().map(|a| SlotType::from_index(a)).collect();
        self.guest.reset_pipeline(view.clone(), 1);
        if self.layout.shared_index() {
            let delay = if issued.is_empty() {
                usize::MAX
            } else {
                issued.len()
            };
            self.host.reset_pipeline(issued, delay);
        }
        self.guest_prev_view = view;
    }

    pub fn layout(&self) -> &BinLayout {
        &self.layout
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Recovers the other node's point; on an inconsistent PNC symbol picks
    /// the point whose wrap is closest to it.
    fn recover(&self, s_hat: i32, own: i32, own_node: Node) -> i32 {
        self.codebook
            .unwrap(s_hat, own, own_node)
            .unwrap_or_else(|_| {
                let host_order = self.layout.host().order();
                self.layout
                    .constellation_of(own_node.other())
                    .unit_points()
                    .into_iter()
                    .min_by_key(|&x| (wrap_value(own + x, host_order) - s_hat).abs())
                    .expect("non-empty constellation")
            })
    }

    /// Simulates the next frame. Slot records are kept only if `keep_records`.
    pub fn run_frame(&mut self, keep_records: bool) -> Result<FrameTrace> {
        let cfg = &self.config;
        let layout = &self.layout;
        let frame = self.frame;
        let rails = cfg.modulation.rails();
        let capacity = cfg.n * rails;
        let tau = layout.tau() as usize;
        let kg = layout.k_guest() as usize;
        let fresh = layout.fresh_index_bits();
        let own_fresh = if layout.shared_index() {
            0
        } else {
            layout.k_host() as usize
        };
        let host_node = layout.host_node();
        let fec = cfg.fec;

        let mut src = self.rng(2 * frame);
        let mut chan = self.rng(2 * frame + 1);
        let tx_host = Streams {
            secret: source(fec.secret, capacity * tau, &mut src),
            common: source(fec.common, capacity, &mut src),
            index: source(fec.index, capacity * fresh, &mut src),
        };
        let tx_guest = Streams {
            secret: source(fec.secret, capacity * tau, &mut src),
            common: source(fec.common, capacity, &mut src),
            index: Vec::new(),
        };
        self.host.clear_queues();
        self.guest.clear_queues();
        self.host.push_secret(&tx_host.secret);
        self.host.push_common(&tx_host.common);
        self.host.push_index(&tx_host.index);
        self.guest.push_secret(&tx_guest.secret);
        self.guest.push_common(&tx_guest.common);
        let start_host = self.host.consumed();
        let start_guest = self.guest.consumed();

        let mut rx_host = Streams::default();
        let mut rx_guest = Streams::default();
        let mut announced: Vec<Vec<u8>> = Vec::new();
        let mut host_rx: Vec<HostRx> = Vec::new();
        let mut c = Counters::default();
        let mut records = Vec::new();
        let sigma2 = cfg.channel.sigma2;

        for slot in 0..cfg.n {
            c.slots += 1;
            let h = [
                sample_fading(&cfg.channel.fading, &mut chan)?,
                sample_fading(&cfg.channel.fading, &mut chan)?,
                sample_fading(&cfg.channel.fading, &mut chan)?,
                sample_fading(&cfg.channel.fading, &mut chan)?,
            ];
            if h[0].norm() <= OUTAGE_THRESHOLD || h[1].norm() <= OUTAGE_THRESHOLD {
                c.outage_slots += 1;
                if keep_records {
                    records.push(SlotRecord::outage(frame, slot, h));
                }
                continue;
            }

            let mut host_dec = Vec::with_capacity(rails);
            let mut guest_dec = Vec::with_capacity(rails);
            let mut expected = Vec::with_capacity(rails);
            for _ in 0..rails {
                host_dec.push(host_encode_slot(&mut self.host, layout)?);
                guest_dec.push(guest_encode_slot(&mut self.guest, layout)?);
                expected.push(if kg == 0 {
                    SlotType::Common
                } else {
                    self.intended.pop_front().unwrap_or(SlotType::Common)
                });
            }
            let points = |node: Node, r: usize| {
                if node == host_node {
                    host_dec[r].point
                } else {
                    guest_dec[r].point
                }
            };
            let rail_vec = |f: &dyn Fn(usize) -> i32| {
                Complex64::new(
                    f64::from(f(0)),
                    if rails == 2 { f64::from(f(1)) } else { 0.0 },
                )
            };
            let x_a = rail_vec(&|r| points(Node::A, r));
            let x_b = rail_vec(&|r| points(Node::B, r));

            let c1 = cycle1_with(x_a, x_b, h[0], h[1], sigma2, &mut chan)?;
            let noiseless = h[0] * c1.tx_a.tx + h[1] * c1.tx_b.tx;
            c.max_inversion_residual = c.max_inversion_residual.max((noiseless - x_a - x_b).norm());
            for (tx, x, hh) in [(&c1.tx_a, x_a, h[0]), (&c1.tx_b, x_b, h[1])] {
                let err = (tx.energy - x.norm_sqr() / hh.norm_sqr()).abs();
                c.max_energy_error = c.max_energy_error.max(err);
            }
            c.energy_a += c1.tx_a.energy;
            c.energy_b += c1.tx_b.energy;
            c.predicted_energy_a += self.avg_energy.0 / h[0].norm_sqr();
            c.predicted_energy_b += self.avg_energy.1 / h[1].norm_sqr();

            let component = |z: Complex64, r: usize| if r == 0 { z.re } else { z.im };
            let host_c = layout.host();
            let mut y_sum = Vec::with_capacity(rails);
            let mut s = Vec::with_capacity(rails);
            for r in 0..rails {
                let q = self.codebook.quantize(component(c1.y, r));
                y_sum.push(q);
                s.push(self.codebook.wrap(q)?.value);
            }
            let x_relay = rail_vec(&|r| s[r]);
            let c2 = cycle2_with(x_relay, h[2], h[3], sigma2, &mut chan);
            let (z_a, z_b) = c2.equalized();

            let mut new_announcements = Vec::new();
            for r in 0..rails {
                c.symbols += 1;
                let (xa, xb) = (points(Node::A, r), points(Node::B, r));
                let s_true = wrap_value(xa + xb, host_c.order());
                let relay_error = s[r] != s_true;
                let s_at_a = host_c.unit_point(host_c.nearest_index(component(z_a, r)));
                let s_at_b = host_c.unit_point(host_c.nearest_index(component(z_b, r)));
                let xb_at_a = self.recover(s_at_a, xa, Node::A);
                let xa_at_b = self.recover(s_at_b, xb, Node::B);
                let (err_a, err_b) = (xb_at_a != xb, xa_at_b != xa);
                c.relay_symbol_errors += relay_error as u64;
                c.symbol_errors_at_a += err_a as u64;
                c.symbol_errors_at_b += err_b as u64;

                let hd = &host_dec[r];
                let gd = &guest_dec[r];
                let (host_at_guest, guest_at_host) = match host_node {
                    Node::B => (xb_at_a, xa_at_b),
                    Node::A => (xa_at_b, xb_at_a),
                };
                c.host_secret_symbols += (hd.slot_type == SlotType::Secret) as u64;
                c.guest_secret_symbols += (gd.slot_type == SlotType::Secret) as u64;
                if gd.slot_type != expected[r] {
                    c.guest_type_desync += 1;
                }

                // guest side: read the host label's bins
                let host_label = host_c
                    .label_of_point(host_at_guest)
                    .expect("recovered point lies on the host constellation");
                let host_index = layout.extract(host_label, layout.host_index_positions());
                host_rx.push(HostRx {
                    info: layout.extract(host_label, layout.info_positions()),
                    read_type: SlotType::from_index(&host_index),
                    true_type: hd.slot_type,
                });
                let ann = layout.extract(host_label, layout.guest_index_positions());
                if own_fresh > 0 {
                    rx_host.index.extend_from_slice(&host_index);
                }
                rx_host.index.extend_from_slice(&ann);
                rx_host
                    .index
                    .extend(layout.extract(host_label, layout.padding_positions()));
                if kg > 0 {
                    announced.push(hd.announced_guest_index.clone());
                    new_announcements.push((ann, SlotType::from_index(&hd.announced_guest_index)));
                }

                // host side: the guest label is all information bits
                let guest_label = layout
                    .guest()
                    .label_of_point(guest_at_host)
                    .expect("recovered point lies on the guest constellation");
                let ginfo = bits::from_label(guest_label, layout.tau());
                match expected[r] {
                    SlotType::Common => {
                        rx_guest.common.push(ginfo[0]);
                        rx_guest.secret.extend_from_slice(&ginfo[1..]);
                    }
                    SlotType::Secret => rx_guest.secret.extend_from_slice(&ginfo),
                }

                if keep_records {
                    let (ta, tb) = match host_node {
                        Node::B => (gd.slot_type, hd.slot_type),
                        Node::A => (hd.slot_type, gd.slot_type),
                    };
                    let node_bits = |node: Node| {
                        if node == host_node {
                            bits::format(&hd.symbol_bits)
                        } else {
                            bits::format(&gd.symbol_bits)
                        }
                    };
                    let label_bits = |node: Node, x: i32| {
                        let con = layout.constellation_of(node);
                        bits::format(&bits::from_label(
                            con.label_of_point(x).expect("on constellation"),
                            con.width(),
                        ))
                    };
                    records.push(SlotRecord {
                        frame,
                        slot,
                        rail: r,
                        outage: false,
                        h_a_re: h[0].re,
                        h_a_im: h[0].im,
                        h_b_re: h[1].re,
                        h_b_im: h[1].im,
                        ht_a_re: h[2].re,
                        ht_a_im: h[2].im,
                        ht_b_re: h[3].re,
                        ht_b_im: h[3].im,
                        x_a: Some(xa),
                        x_b: Some(xb),
                        type_a: Some(ta),
                        type_b: Some(tb),
                        y: Some(component(c1.y, r)),
                        y_sum: Some(y_sum[r]),
                        s: Some(s[r]),
                        z_a: Some(component(z_a, r)),
                        z_b: Some(component(z_b, r)),
                        x_b_at_a: Some(xb_at_a),
                        x_a_at_b: Some(xa_at_b),
                        bits_a: Some(node_bits(Node::A)),
                        bits_b: Some(node_bits(Node::B)),
                        bits_a_at_b: Some(label_bits(Node::A, xa_at_b)),
                        bits_b_at_a: Some(label_bits(Node::B, xb_at_a)),
                        relay_error: Some(relay_error),
                        error_at_a: Some(err_a),
                        error_at_b: Some(err_b),
                        energy_a: Some(c1.tx_a.energy),
                        energy_b: Some(c1.tx_b.energy),
                    });
                }
            }
            if cfg.index_pipeline == IndexPipeline::Slot {
                for (ann, ty) in new_announcements {
                    self.guest.push_announcement(ann);
                    self.intended.push_back(ty);
                }
            }
        }

        // frame mode: correct the index stream, then derive the host's slot
        // types the same way the host chose them
        let corrected: Vec<Vec<u8>> = match cfg.index_pipeline {
            IndexPipeline::Frame if fresh > 0 => recode(fec.index, &rx_host.index)
                .chunks(fresh)
                .map(<[u8]>::to_vec)
                .collect(),
            _ => Vec::new(),
        };
        let guest_view: Vec<Vec<u8>> = corrected
            .iter()
            .map(|chunk| chunk[own_fresh..own_fresh + kg].to_vec())
            .collect();
        let host_types: Vec<SlotType> = match cfg.index_pipeline {
            IndexPipeline::Slot => host_rx.iter().map(|h| h.read_type).collect(),
            IndexPipeline::Frame if layout.k_host() == 0 => vec![SlotType::Common; host_rx.len()],
            IndexPipeline::Frame if layout.shared_index() => {
                if self.guest_prev_view.is_empty() {
                    vec![SlotType::Common; host_rx.len()]
                } else {
                    self.guest_prev_view
                        .iter()
                        .chain(&guest_view)
                        .take(host_rx.len())
                        .map(|a| SlotType::from_index(a))
                        .collect()
                }
            }
            IndexPipeline::Frame => corrected
                .iter()
                .map(|chunk| SlotType::from_index(&chunk[..own_fresh]))
                .collect(),
        };
        for (h, &ty) in host_rx.iter().zip(&host_types) {
            if ty != h.true_type {
                c.host_type_misread += 1;
            }
            match ty {
                SlotType::Common => {
                    rx_host.common.push(h.info[0]);
                    rx_host.secret.extend_from_slice(&h.info[1..]);
                }
                SlotType::Secret => rx_host.secret.extend_from_slice(&h.info),
            }
        }

        let used_host = self.host.consumed();
        let used_guest = self.guest.consumed();
        let sent = |s: &[u8], a: u64, b: u64| s[..(b - a) as usize].to_vec();
        c.host_secret = compare(
            fec.secret,
            &sent(&tx_host.secret, start_host.secret, used_host.secret),
            &rx_host.secret,
        );
        c.host_common = compare(
            fec.common,
            &sent(&tx_host.common, start_host.common, used_host.common),
            &rx_host.common,
        );
        c.host_index = compare(
            fec.index,
            &sent(&tx_host.index, start_host.index, used_host.index),
            &rx_host.index,
        );
        c.guest_secret = compare(
            fec.secret,
            &sent(&tx_guest.secret, start_guest.secret, used_guest.secret),
            &rx_guest.secret,
        );
        c.guest_common = compare(
            fec.common,
            &sent(&tx_guest.common, start_guest.common, used_guest.common),
            &rx_guest.common,
        );

        if cfg.index_pipeline == IndexPipeline::Frame && kg > 0 {
            self.install_announcements(announced, guest_view);
        }

        self.frame += 1;
        Ok(FrameTrace {
            frame,
            records,
            counters: c,
        })
    }
}

fn run_inner(config: &SimConfig, keep_records: bool) -> Result<(SimSummary, Vec<FrameTrace>)> {
    let mut sim = Simulator::new(config.clone())?;
    let mut total = Counters::default();
    let mut traces = Vec::new();
    for _ in 0..config.frames {
        let t = sim.run_frame(keep_records)?;
        total.merge(&t.counters);
        if keep_records {
            traces.push(t);
        }
    }
    Ok((
        SimSummary::new(config, sim.layout.host_node(), &total),
        traces,
    ))
}

/// Runs all frames and summarizes.
pub fn run(config: &SimConfig) -> Result<SimSummary> {
    Ok(run_inner(config, false)?.0)
}

/// Like [`run`], also returning every frame's slot records.
pub fn run_with_traces(config: &SimConfig) -> Result<(SimSummary, Vec<FrameTrace>)> {
    run_inner(config, true)
}
