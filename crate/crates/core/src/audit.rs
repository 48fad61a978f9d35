//! Exact secrecy audit by exhaustive enumeration.
//!
//! The joint law of the secret bits and the relay's observations over a
//! window of `w` slots is built by enumerating every host label, guest label
//! and initial pipeline value (all equiprobable), in steady state: the
//! guest's first slot type comes from a uniformly random earlier
//! announcement. Channels are noiseless with unit gain.
//!
//! Each stream's secret variable is the first `L = w * capacity` bits of its
//! secret queue, where `capacity` is the most secret bits a slot can carry.
//! Bits the window did not transmit stay uniform and independent of the
//! observations; they are kept in the variable (so `H(S) = L`) and expanded
//! analytically rather than enumerated.
//!
//! Probabilities are exact integer counts over a power-of-two total.
//! Entropies are summed in `f64` in a fixed (sorted) order.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::binning::{nominal_rates, plan_bins_by_node, BinLayout, Node, SlotType};
use crate::constellation::Labeling;
use crate::error::{Error, Result};
use crate::pnc::{relay_symbol_posterior, wrap_value};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const MAX_WINDOW: usize = 3;
/// Largest `M_A * M_B` enumerated per slot.
pub const MAX_PAIRS_PER_SLOT: u64 = 1 << 14;
/// Largest number of enumerated paths over the whole window.
pub const MAX_PATHS: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stream {
    GuestSecret,
    HostSecret,
}

impl Stream {
    fn name(self) -> &'static str {
        match self {
            Stream::GuestSecret => "guest_secret",
            Stream::HostSecret => "host_secret",
        }
    }
}

/// What the relay is taken to observe in each slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    /// The integer sum `x_A + x_B`.
    Sum,
    /// The re-wrapped PNC value.
    Wrapped,
    /// Nothing (every observation constant).
    Constant,
}

/// The transmitted part of a secret variable: `len` bits, MSB first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Prefix {
    pub len: u32,
    pub bits: u64,
}

impl Prefix {
    fn push(&mut self, value: u64, n: u32) {
        self.bits = (self.bits << n) | value;
        self.len += n;
    }

    fn bit(&self, d: u32) -> u64 {
        (self.bits >> (self.len - 1 - d)) & 1
    }
}

/// One joint outcome. Per-slot vectors have the window's length.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Outcome {
    pub guest_secret: Prefix,
    pub host_secret: Prefix,
    pub y: Vec<i32>,
    pub host_symbols: Vec<i32>,
    pub guest_symbols: Vec<i32>,
    pub guest_types: Vec<SlotType>,
    pub host_types: Vec<SlotType>,
}

/// Exact joint law: `P(outcome) = count / total`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    window: usize,
    observation: Observation,
    variables: Vec<String>,
    guest_len: u32,
    host_len: u32,
    table: BTreeMap<Outcome, u128>,
    total: u128,
}

impl JointDistribution {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn observation(&self) -> Observation {
        self.observation
    }

    /// Names of the random variables present, secret streams first.
    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn table(&self) -> &BTreeMap<Outcome, u128> {
        &self.table
    }

    pub fn total(&self) -> u128 {
        self.total
    }

    pub fn probability(&self, outcome: &Outcome) -> f64 {
        self.table
            .get(outcome)
            .map_or(0.0, |&c| c as f64 / self.total as f64)
    }

    /// Sum of all probabilities (one, up to rounding of the division).
    pub fn probability_sum(&self) -> f64 {
        self.table
            .values()
            .map(|&c| c as f64 / self.total as f64)
            .sum()
    }

    /// Whether the integer counts add up to the total exactly.
    pub fn is_normalized(&self) -> bool {
        self.table.values().sum::<u128>() == self.total
    }

    /// Secret-variable length in bits; zero means the stream is absent.
    pub fn secret_len(&self, stream: Stream) -> u32 {
        match stream {
            Stream::GuestSecret => self.guest_len,
            Stream::HostSecret => self.host_len,
        }
    }

    pub fn has_stream(&self, stream: Stream) -> bool {
        self.secret_len(stream) > 0
    }

    /// Same secrets, constant observations.
    pub fn with_constant_observations(&self) -> JointDistribution {
        let mut table = BTreeMap::new();
        for (o, &c) in &self.table {
            let mut o = o.clone();
            o.y.iter_mut().for_each(|y| *y = 0);
            *table.entry(o).or_insert(0) += c;
        }
        JointDistribution {
            observation: Observation::Constant,
            table,
            ..self.clone()
        }
    }

    /// Marginal of the host symbol in slot `slot` (zero-based).
    pub fn host_symbol_marginal(&self, slot: usize) -> BTreeMap<i32, f64> {
        self.marginal(|o| o.host_symbols[slot])
    }

    pub fn observation_marginal(&self, slot: usize) -> BTreeMap<i32, f64> {
        self.marginal(|o| o.y[slot])
    }

    fn marginal(&self, f: impl Fn(&Outcome) -> i32) -> BTreeMap<i32, f64> {
        let mut counts: BTreeMap<i32, u128> = BTreeMap::new();
        for (o, &c) in &self.table {
            *counts.entry(f(o)).or_insert(0) += c;
        }
        counts
            .into_iter()
            .map(|(k, c)| (k, c as f64 / self.total as f64))
            .collect()
    }

    /// `H(Y)` over the window, in bits.
    pub fn observation_entropy(&self) -> f64 {
        let mut counts: BTreeMap<&[i32], u128> = BTreeMap::new();
        for (o, &c) in &self.table {
            *counts.entry(&o.y).or_insert(0) += c;
        }
        entropy(counts.values().copied(), self.total)
    }

    /// Expected secret bits actually transmitted per slot.
    pub fn secret_bits_sent_per_slot(&self, stream: Stream) -> f64 {
        let sent: u128 = self
            .table
            .iter()
            .map(|(o, &c)| c * u128::from(prefix_of(o, stream).len))
            .sum();
        sent as f64 / self.total as f64 / self.window as f64
    }

    /// `H(S | Y)` over the window, in bits.
    fn conditional_entropy(&self, stream: Stream) -> f64 {
        let l = self.secret_len(stream);
        let mut by_y: BTreeMap<&[i32], BTreeMap<Prefix, u128>> = BTreeMap::new();
        for (o, &c) in &self.table {
            *by_y
                .entry(&o.y)
                .or_default()
                .entry(prefix_of(o, stream))
                .or_insert(0) += c;
        }
        by_y.values()
            .map(|prefixes| {
                let entries: Vec<(Prefix, u128)> = prefixes.iter().map(|(p, &c)| (*p, c)).collect();
                let n_y: u128 = entries.iter().map(|e| e.1).sum();
                // leaf weights W(s) = sum over prefixes of s of count * 2^len
                // add up to n_y * 2^l
                let scale = n_y as f64 * pow2(l);
                let h_y = scale.log2() - completion_xlogx(&entries, 0, l, 0) / scale;
                n_y as f64 / self.total as f64 * h_y
            })
            .sum()
    }
}

fn prefix_of(o: &Outcome, stream: Stream) -> Prefix {
    match stream {
        Stream::GuestSecret => o.guest_secret,
        Stream::HostSecret => o.host_secret,
    }
}

fn pow2(n: u32) -> f64 {
    f64::powi(2.0, n as i32)
}

fn xlogx(v: u128) -> f64 {
    if v == 0 {
        0.0
    } else {
        let v = v as f64;
        v * v.log2()
    }
}

fn entropy(counts: impl Iterator<Item = u128>, total: u128) -> f64 {
    let t = total as f64;
    counts
        .map(|c| {
            let p = c as f64 / t;
            if p > 0.0 {
                -p * p.log2()
            } else {
                0.0
            }
        })
        .sum()
}

/// `sum_s W(s) log2 W(s)` over all `2^l` completions below depth `d`, where
/// `acc` is the weight already contributed by shorter prefixes.
fn completion_xlogx(entries: &[(Prefix, u128)], d: u32, l: u32, acc: u128) -> f64 {
    let mut acc = acc;
    let mut deeper = Vec::new();
    for &(p, c) in entries {
        if p.len == d {
            acc += c << d;
        } else {
            deeper.push((p, c));
        }
    }
    if d == l {
        return xlogx(acc);
    }
    let mut sum = 0.0;
    for bit in 0..2 {
        let sub: Vec<(Prefix, u128)> = deeper
            .iter()
            .copied()
            .filter(|(p, _)| p.bit(d) == bit)
            .collect();
        if sub.is_empty() {
            sum += pow2(l - d - 1) * xlogx(acc);
        } else {
            sum += completion_xlogx(&sub, d + 1, l, acc);
        }
    }
    sum
}

/// Number of paths `exact_joint` would enumerate, after checking the window
/// and per-slot bounds.
pub fn enumeration_size(layout: &BinLayout, window: usize) -> Result<u64> {
    if !(1..=MAX_WINDOW).contains(&window) {
        return Err(Error::Intractable(format!(
            "window {window} outside 1..={MAX_WINDOW}"
        )));
    }
    let pairs = u64::from(layout.host().order()) * u64::from(layout.guest().order());
    if pairs > MAX_PAIRS_PER_SLOT {
        return Err(Error::Intractable(format!(
            "{pairs} symbol pairs per slot exceed {MAX_PAIRS_PER_SLOT}"
        )));
    }
    let shared = if layout.shared_index() {
        layout.k_host()
    } else {
        0
    };
    let per_slot_bits = layout.total_bits() - shared + layout.tau();
    let bits = layout.k_guest() as u64 + window as u64 * per_slot_bits as u64;
    if bits > 63 || (1u64 << bits) > MAX_PATHS {
        return Err(Error::Intractable(format!(
            "2^{bits} enumeration paths exceed {MAX_PATHS}"
        )));
    }
    Ok(1 << bits)
}

struct HostEntry {
    point: i32,
    index: u32,
    announced: u32,
    info: u64,
}

struct Enumerator<'a> {
    layout: &'a BinLayout,
    window: usize,
    observation: Observation,
    host: Vec<HostEntry>,
    guest: Vec<i32>,
    table: BTreeMap<Outcome, u128>,
}

fn bits_value(bits: &[u8]) -> u32 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u32::from(b))
}

impl Enumerator<'_> {
    fn run(&mut self, slot: usize, pipe: u32, cur: &mut Outcome) {
        if slot == self.window {
            *self.table.entry(cur.clone()).or_insert(0) += 1;
            return;
        }
        let l = self.layout;
        let tau = l.tau();
        let kg = l.k_guest();
        let full = |k: u32| (1u32 << k) - 1;
        let guest_type = if kg == 0 || pipe == full(kg) {
            SlotType::Common
        } else {
            SlotType::Secret
        };
        let rest_mask = (1u64 << (tau - 1)) - 1;
        let shared = l.shared_index();
        for hi in 0..self.host.len() {
            let h = &self.host[hi];
            if shared && h.index != pipe {
                continue;
            }
            let (point, announced, info) = (h.point, h.announced, h.info);
            let host_type = if h.index == full(l.k_host()) {
                SlotType::Common
            } else {
                SlotType::Secret
            };
            for gi in 0..self.guest.len() {
                let gpoint = self.guest[gi];
                let saved = (cur.guest_secret, cur.host_secret);
                match host_type {
                    SlotType::Secret => cur.host_secret.push(info, tau),
                    SlotType::Common => cur.host_secret.push(info & rest_mask, tau - 1),
                }
                match guest_type {
                    SlotType::Secret => cur.guest_secret.push(gi as u64, tau),
                    SlotType::Common => cur.guest_secret.push(gi as u64 & rest_mask, tau - 1),
                }
                let sum = gpoint + point;
                cur.y.push(match self.observation {
                    Observation::Sum => sum,
                    Observation::Wrapped => wrap_value(sum, l.host().order()),
                    Observation::Constant => 0,
                });
                cur.host_symbols.push(point);
                cur.guest_symbols.push(gpoint);
                cur.guest_types.push(guest_type);
                cur.host_types.push(host_type);
                self.run(slot + 1, announced, cur);
                cur.y.pop();
                cur.host_symbols.pop();
                cur.guest_symbols.pop();
                cur.guest_types.pop();
                cur.host_types.pop();
                (cur.guest_secret, cur.host_secret) = saved;
            }
        }
    }
}

/// Exact joint law over `window` slots with the raw sum observed.
pub fn exact_joint(layout: &BinLayout, window: usize) -> Result<JointDistribution> {
    exact_joint_with(layout, window, Observation::Sum)
}

pub fn exact_joint_with(
    layout: &BinLayout,
    window: usize,
    observation: Observation,
) -> Result<JointDistribution> {
    let paths = enumeration_size(layout, window)?;
    let host_c = layout.host();
    let host: Vec<HostEntry> = (0..host_c.order())
        .map(|label| HostEntry {
            point: host_c.point_of_label(label),
            index: bits_value(&layout.extract(label, layout.host_index_positions())),
            announced: bits_value(&layout.extract(label, layout.guest_index_positions())),
            info: u64::from(bits_value(&layout.extract(label, layout.info_positions()))),
        })
        .collect();
    // guest labels are the information bits themselves
    let guest: Vec<i32> = (0..layout.guest().order())
        .map(|label| layout.guest().point_of_label(label))
        .collect();
    let mut e = Enumerator {
        layout,
        window,
        observation,
        host,
        guest,
        table: BTreeMap::new(),
    };
    let empty = Prefix { len: 0, bits: 0 };
    for pipe in 0..(1u32 << layout.k_guest()) {
        let mut cur = Outcome {
            guest_secret: empty,
            host_secret: empty,
            y: Vec::with_capacity(window),
            host_symbols: Vec::with_capacity(window),
            guest_symbols: Vec::with_capacity(window),
            guest_types: Vec::with_capacity(window),
            host_types: Vec::with_capacity(window),
        };
        e.run(0, pipe, &mut cur);
    }
    let w = window as u32;
    let guest_len = w * layout.guest_secret_capacity();
    let host_len = w * layout.host_secret_capacity();
    let mut variables = Vec::new();
    if guest_len > 0 {
        variables.push(Stream::GuestSecret.name().to_string());
    }
    if host_len > 0 {
        variables.push(Stream::HostSecret.name().to_string());
    }
    for prefix in ["y", "x_host", "x_guest", "type_guest", "type_host"] {
        variables.extend((1..=window).map(|i| format!("{prefix}_{i}")));
    }
    Ok(JointDistribution {
        window,
        observation,
        variables,
        guest_len,
        host_len,
        table: e.table,
        total: u128::from(paths),
    })
}

fn require(joint: &JointDistribution, stream: Stream) -> Result<()> {
    if joint.has_stream(stream) {
        Ok(())
    } else {
        Err(Error::StreamAbsent(stream.name()))
    }
}

/// `H(S | Y) / w` in bits per slot.
pub fn equivocation(joint: &JointDistribution, stream: Stream) -> Result<f64> {
    require(joint, stream)?;
    let h = joint.conditional_entropy(stream);
    let l = f64::from(joint.secret_len(stream));
    Ok(h.clamp(0.0, l) / joint.window as f64)
}

/// `I(S; Y) / w = (H(S) - H(S | Y)) / w` in bits per slot.
pub fn leakage(joint: &JointDistribution, stream: Stream) -> Result<f64> {
    let eq = equivocation(joint, stream)?;
    let rate = f64::from(joint.secret_len(stream)) / joint.window as f64;
    Ok((rate - eq).max(0.0))
}

/// `H(X_A | X_A + X_B)` for independent uniform symbols, in bits.
pub fn symbol_equivocation(order_a: u32, order_b: u32) -> Result<f64> {
    let support = sum_counts(order_a, order_b)?;
    let total = f64::from(order_a) * f64::from(order_b);
    // given y, X_A is uniform over the n_y consistent pairs
    Ok(support.values().map(|&n| xlogx(n as u128)).sum::<f64>() / total)
}

fn sum_counts(order_a: u32, order_b: u32) -> Result<BTreeMap<i32, usize>> {
    for o in [order_a, order_b] {
        if crate::bits::log2_exact(o).is_none() {
            return Err(Error::InvalidOrder(o));
        }
    }
    let e = (order_a + order_b) as i32 - 2;
    Ok((-e..=e)
        .step_by(2)
        .map(|y| (y, relay_symbol_posterior(y, order_a, order_b).len()))
        .collect())
}

/// Observations that pin down both symbols, with their probabilities.
pub fn unambiguous_observations(order_a: u32, order_b: u32) -> Result<Vec<(i32, f64)>> {
    let total = f64::from(order_a) * f64::from(order_b);
    Ok(sum_counts(order_a, order_b)?
        .into_iter()
        .filter(|&(_, n)| n == 1)
        .map(|(y, _)| (y, 1.0 / total))
        .collect())
}

/// Closed-form large-constellation loss term `M / (M_A + M_B - 1)` with `M`
/// the smaller order.
pub fn asymptotic_leakage_estimate(order_a: u32, order_b: u32) -> f64 {
    f64::from(order_a.min(order_b)) / f64::from(order_a + order_b - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamReport {
    pub present: bool,
    /// `H(S) / w`: secret entropy carried per slot by the variable.
    pub secret_entropy_per_slot: f64,
    /// Expected secret bits actually transmitted per slot.
    pub secret_bits_sent_per_slot: f64,
    pub equivocation: f64,
    pub leakage: f64,
    /// Leakage when the relay keeps only the re-wrapped value.
    pub leakage_wrapped: f64,
}

impl StreamReport {
    fn absent() -> Self {
        StreamReport {
            present: false,
            secret_entropy_per_slot: 0.0,
            secret_bits_sent_per_slot: 0.0,
            equivocation: 0.0,
            leakage: 0.0,
            leakage_wrapped: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowReport {
    pub window: usize,
    pub guest: StreamReport,
    pub host: StreamReport,
    pub observation_entropy: f64,
    pub probability_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NominalRates {
    pub guest: f64,
    pub host: f64,
    pub rate_a: f64,
    pub rate_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecrecyReport {
    pub schema_version: u32,
    pub order_a: u32,
    pub order_b: u32,
    pub k_a: u32,
    pub k_b: u32,
    pub host_node: Node,
    pub nominal_rates: NominalRates,
    pub windows: Vec<WindowReport>,
    /// `H(X_guest | X_A + X_B)` for uniform symbols, in bits.
    pub symbol_equivocation: f64,
    /// Probability that the sum reveals both symbols.
    pub unambiguous_probability: f64,
    pub asymptotic_leakage_estimate: f64,
}

fn stream_report(
    raw: &JointDistribution,
    wrapped: &JointDistribution,
    s: Stream,
) -> Result<StreamReport> {
    if !raw.has_stream(s) {
        return Ok(StreamReport::absent());
    }
    Ok(StreamReport {
        present: true,
        secret_entropy_per_slot: f64::from(raw.secret_len(s)) / raw.window as f64,
        secret_bits_sent_per_slot: raw.secret_bits_sent_per_slot(s),
        equivocation: equivocation(raw, s)?,
        leakage: leakage(raw, s)?,
        leakage_wrapped: leakage(wrapped, s)?,
    })
}

pub fn window_report(layout: &BinLayout, window: usize) -> Result<WindowReport> {
    let raw = exact_joint(layout, window)?;
    let wrapped = exact_joint_with(layout, window, Observation::Wrapped)?;
    Ok(WindowReport {
        window,
        guest: stream_report(&raw, &wrapped, Stream::GuestSecret)?,
        host: stream_report(&raw, &wrapped, Stream::HostSecret)?,
        observation_entropy: raw.observation_entropy(),
        probability_sum: raw.probability_sum(),
    })
}

pub fn build_report(layout: &BinLayout, windows: &[usize]) -> Result<SecrecyReport> {
    for &w in windows {
        enumeration_size(layout, w)?;
    }
    let (guest, host) = nominal_rates(layout);
    let (k_a, k_b) = layout.k_by_node();
    let (order_a, order_b) = (
        layout.constellation_of(Node::A).order(),
        layout.constellation_of(Node::B).order(),
    );
    let (rate_a, rate_b) = match layout.host_node() {
        Node::B => (guest, host),
        Node::A => (host, guest),
    };
    Ok(SecrecyReport {
        schema_version: REPORT_SCHEMA_VERSION,
        order_a,
        order_b,
        k_a,
        k_b,
        host_node: layout.host_node(),
        nominal_rates: NominalRates {
            guest,
            host,
            rate_a,
            rate_b,
        },
        windows: windows
            .iter()
            .map(|&w| window_report(layout, w))
            .collect::<Result<_>>()?,
        symbol_equivocation: symbol_equivocation(layout.guest().order(), layout.host().order())?,
        unambiguous_probability: unambiguous_observations(order_a, order_b)?
            .iter()
            .map(|e| e.1)
            .sum(),
        asymptotic_leakage_estimate: asymptotic_leakage_estimate(order_a, order_b),
    })
}

/// One row of a leakage sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "M_A")]
    pub m_a: u32,
    #[serde(rename = "M_B")]
    pub m_b: u32,
    #[serde(rename = "K_A")]
    pub k_a: u32,
    #[serde(rename = "K_B")]
    pub k_b: u32,
    pub window: usize,
    pub nominal_guest: f64,
    pub nominal_host: f64,
    #[serde(rename = "H_sym")]
    pub h_sym: f64,
    pub leak_guest: f64,
    pub leak_host: f64,
    pub asymptotic_estimate: f64,
}

/// Exact per-slot leakage for the index shape `(k_a, k_b)` with node A's
/// order fixed and node B's order swept. Cells run in parallel; rows come
/// back in `(host order, window)` order.
pub fn leakage_sweep(
    order_a: u32,
    host_orders: &[u32],
    shape: (u32, u32),
    windows: &[usize],
) -> Result<Vec<SweepRow>> {
    let cells: Vec<(u32, usize)> = host_orders
        .iter()
        .flat_map(|&m| windows.iter().map(move |&w| (m, w)))
        .collect();
    // validate everything before the expensive part
    for &(m, w) in &cells {
        let layout = plan_bins_by_node(order_a, m, shape.0, shape.1, &Labeling::GrayTable1)?;
        enumeration_size(&layout, w)?;
    }
    cells
        .par_iter()
        .map(|&(m_b, w)| {
            let layout = plan_bins_by_node(order_a, m_b, shape.0, shape.1, &Labeling::GrayTable1)?;
            let joint = exact_joint(&layout, w)?;
            let leak = |s| {
                if joint.has_stream(s) {
                    leakage(&joint, s)
                } else {
                    Ok(0.0)
                }
            };
            let (nominal_guest, nominal_host) = nominal_rates(&layout);
            Ok(SweepRow {
                m_a: order_a,
                m_b,
                k_a: shape.0,
                k_b: shape.1,
                window: w,
                nominal_guest,
                nominal_host,
                h_sym: symbol_equivocation(order_a, m_b)?,
                leak_guest: leak(Stream::GuestSecret)?,
                leak_host: leak(Stream::HostSecret)?,
                asymptotic_estimate: asymptotic_leakage_estimate(order_a, m_b),
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::binning::plan_bins;

    fn layout(a: u32, b: u32, kg: u32, kh: u32) -> BinLayout {
        plan_bins(a, b, kg, kh, &Labeling::GrayTable1).unwrap()
    }

    #[test]
    fn observation_and_host_marginals() {
        let j = exact_joint(&layout(2, 8, 1, 1), 1).unwrap();
        assert!(j.is_normalized());
        let y = j.observation_marginal(0);
        assert_eq!(y[&-8], 1.0 / 16.0);
        assert_eq!(y[&8], 1.0 / 16.0);
        let x = j.host_symbol_marginal(0);
        assert_eq!(x.len(), 8);
        assert!(x.values().all(|&p| p == 0.125));
    }

    #[test]
    fn symbol_equivocation_examples() {
        assert_eq!(symbol_equivocation(2, 8).unwrap(), 0.875);
        assert_eq!(symbol_equivocation(2, 2).unwrap(), 0.5);
        assert_eq!(symbol_equivocation(2, 4).unwrap(), 0.75);
        assert_eq!(
            unambiguous_observations(2, 8).unwrap(),
            vec![(-8, 0.0625), (8, 0.0625)]
        );
    }

    #[test]
    fn estimate_examples() {
        assert_eq!(asymptotic_leakage_estimate(2, 8), 2.0 / 9.0);
        assert_eq!(asymptotic_leakage_estimate(2, 64), 2.0 / 65.0);
        assert_eq!(asymptotic_leakage_estimate(8, 8), 8.0 / 15.0);
    }

    #[test]
    fn degenerate_layout_has_no_secrets() {
        let j = exact_joint(&layout(2, 2, 0, 0), 2).unwrap();
        assert!(!j.has_stream(Stream::GuestSecret));
        assert!(!j.has_stream(Stream::HostSecret));
        assert_eq!(
            equivocation(&j, Stream::HostSecret),
            Err(Error::StreamAbsent("host_secret"))
        );
        assert!(j.variables().iter().all(|v| !v.contains("secret")));
        let r = build_report(&layout(2, 2, 0, 0), &[1]).unwrap();
        assert_eq!(r.nominal_rates.guest, 0.0);
        assert_eq!(r.windows[0].host, StreamReport::absent());
    }

    #[test]
    fn constant_observations_leak_nothing() {
        let j = exact_joint(&layout(2, 8, 1, 1), 2).unwrap();
        let c = j.with_constant_observations();
        for s in [Stream::GuestSecret, Stream::HostSecret] {
            assert!((equivocation(&c, s).unwrap() - 1.0).abs() < 1e-12);
            assert!(leakage(&c, s).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn sent_rate_matches_nominal() {
        for (a, b, kg, kh) in [
            (2, 8, 1, 1),
            (2, 8, 0, 2),
            (4, 16, 1, 1),
            (4, 64, 2, 1),
            (8, 8, 0, 0),
        ] {
            let l = layout(a, b, kg, kh);
            let j = exact_joint(&l, 1).unwrap();
            let (g, h) = nominal_rates(&l);
            assert!((j.secret_bits_sent_per_slot(Stream::HostSecret) - h).abs() < 1e-12);
            assert!((j.secret_bits_sent_per_slot(Stream::GuestSecret) - g).abs() < 1e-12);
        }
    }

    #[test]
    fn tractability_bounds() {
        let l = layout(2, 8, 1, 1);
        assert!(matches!(exact_joint(&l, 4), Err(Error::Intractable(_))));
        assert!(matches!(exact_joint(&l, 0), Err(Error::Intractable(_))));
        let big = layout(128, 256, 0, 1);
        assert!(matches!(exact_joint(&big, 1), Err(Error::Intractable(_))));
        let long = layout(4, 64, 1, 1);
        assert!(matches!(exact_joint(&long, 3), Err(Error::Intractable(_))));
    }

    #[test]
    fn sweep_rows_are_ordered() {
        let rows = leakage_sweep(2, &[8, 16], (1, 1), &[1, 2]).unwrap();
        let keys: Vec<(u32, usize)> = rows.iter().map(|r| (r.m_b, r.window)).collect();
        assert_eq!(keys, vec![(8, 1), (8, 2), (16, 1), (16, 2)]);
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "M_A,M_B,K_A,K_B,window,nominal_guest,nominal_host,H_sym,leak_guest,leak_host,asymptotic_estimate\n"
        ));
    }
}
