//! Triple binning of the host symbol.
//!
//! The node with the larger constellation (the host) splits the bits of each
//! of its symbols into an information bin, a bin of its own index bits, a bin
//! of index bits announcing the other node's (the guest's) next slot type,
//! and padding. A slot is *common* when all of its governing index bits are
//! ones; then one designated information bit is taken from the common queue
//! instead of the secret queue.
//!
//! When both index bins have the same size the host reuses the bits it
//! announced to the guest as its own index bits after the pipeline delay, so
//! both nodes switch to common together.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::constellation::{Labeling, Modulation, PamConstellation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    A,
    B,
}

impl Node {
    pub fn other(self) -> Node {
        match self {
            Node::A => Node::B,
            Node::B => Node::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Host,
    Guest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotType {
    Secret,
    Common,
}

impl SlotType {
    /// Common iff every governing index bit is one (vacuously so for none).
    pub fn from_index(index: &[u8]) -> SlotType {
        if index.iter().all(|&b| b == 1) {
            SlotType::Common
        } else {
            SlotType::Secret
        }
    }
}

/// Partition of the host label positions. Position 0 is the leftmost bit.
#[derive(Debug, Clone, PartialEq)]
pub struct BinLayout {
    guest: PamConstellation,
    host: PamConstellation,
    host_node: Node,
    tau: u32,
    total: u32,
    k_guest: u32,
    k_host: u32,
    /// Designated (queue-switched) position first.
    info_positions: Vec<usize>,
    host_index_positions: Vec<usize>,
    guest_index_positions: Vec<usize>,
    padding_positions: Vec<usize>,
}

/// Plans the bins for orders `order_a`, `order_b`. The larger order hosts
/// (node B on ties). A custom labeling applies to the host; the guest then
/// uses the reference Gray labeling unless both orders match.
pub fn plan_bins(
    order_a: u32,
    order_b: u32,
    k_guest: u32,
    k_host: u32,
    labeling: &Labeling,
) -> Result<BinLayout> {
    let host_order = order_a.max(order_b);
    let guest_order = order_a.min(order_b);
    let guest_labeling = match labeling {
        Labeling::Custom(_) if guest_order != host_order => Labeling::GrayTable1,
        l => l.clone(),
    };
    let a = PamConstellation::new(
        order_a,
        if order_a == guest_order {
            guest_labeling.clone()
        } else {
            labeling.clone()
        },
        1.0,
    )?;
    let b = PamConstellation::new(
        order_b,
        if order_b == host_order {
            labeling.clone()
        } else {
            guest_labeling
        },
        1.0,
    )?;
    BinLayout::new(a, b, k_guest, k_host)
}

/// [`plan_bins`] with the index sizes given per node instead of per role.
pub fn plan_bins_by_node(
    order_a: u32,
    order_b: u32,
    k_a: u32,
    k_b: u32,
    labeling: &Labeling,
) -> Result<BinLayout> {
    let (k_guest, k_host) = if order_a > order_b {
        (k_b, k_a)
    } else {
        (k_a, k_b)
    };
    plan_bins(order_a, order_b, k_guest, k_host, labeling)
}

impl BinLayout {
    pub fn new(
        a: PamConstellation,
        b: PamConstellation,
        k_guest: u32,
        k_host: u32,
    ) -> Result<Self> {
        let (guest, host, host_node) = if a.order() > b.order() {
            (b, a, Node::A)
        } else {
            (a, b, Node::B)
        };
        let tau = guest.width();
        let total = host.width();
        let budget = total - tau;
        if k_guest + k_host > budget {
            return Err(Error::BudgetExceeded {
                requested: k_guest + k_host,
                budget,
            });
        }
        let host_index_positions =
            find_edge_positions(&host, k_host).ok_or(Error::NoEdgeRegion { k_host })?;
        let free: Vec<usize> = (0..total as usize)
            .filter(|p| !host_index_positions.contains(p))
            .collect();
        let kg = k_guest as usize;
        let rest = tau as usize - 1;
        let guest_index_positions = free[1..1 + kg].to_vec();
        let padding_positions = free[1 + kg..free.len() - rest].to_vec();
        let mut info_positions = vec![free[0]];
        info_positions.extend_from_slice(&free[free.len() - rest..]);
        Ok(BinLayout {
            guest,
            host,
            host_node,
            tau,
            total,
            k_guest,
            k_host,
            info_positions,
            host_index_positions,
            guest_index_positions,
            padding_positions,
        })
    }

    pub fn guest(&self) -> &PamConstellation {
        &self.guest
    }

    pub fn host(&self) -> &PamConstellation {
        &self.host
    }

    pub fn host_node(&self) -> Node {
        self.host_node
    }

    pub fn guest_node(&self) -> Node {
        self.host_node.other()
    }

    pub fn constellation_of(&self, node: Node) -> &PamConstellation {
        if node == self.host_node {
            &self.host
        } else {
            &self.guest
        }
    }

    /// `min(m_A, m_B)`.
    pub fn tau(&self) -> u32 {
        self.tau
    }

    /// `max(m_A, m_B)`.
    pub fn total_bits(&self) -> u32 {
        self.total
    }

    pub fn k_guest(&self) -> u32 {
        self.k_guest
    }

    pub fn k_host(&self) -> u32 {
        self.k_host
    }

    /// `(K_A, K_B)` in node terms.
    pub fn k_by_node(&self) -> (u32, u32) {
        match self.host_node {
            Node::B => (self.k_guest, self.k_host),
            Node::A => (self.k_host, self.k_guest),
        }
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn host_index_positions(&self) -> &[usize] {
        &self.host_index_positions
    }

    pub fn guest_index_positions(&self) -> &[usize] {
        &self.guest_index_positions
    }

    pub fn padding_positions(&self) -> &[usize] {
        &self.padding_positions
    }

    /// Whether the host reuses its announcements as its own index bits.
    pub fn shared_index(&self) -> bool {
        self.k_guest == self.k_host && self.k_guest > 0
    }

    /// Fresh index-stream bits the host draws per slot, in draw order:
    /// own index (unless shared), guest announcement, padding.
    pub fn fresh_index_bits(&self) -> usize {
        let own = if self.shared_index() {
            0
        } else {
            self.k_host as usize
        };
        own + self.k_guest as usize + self.padding_positions.len()
    }

    /// Most secret bits the host can send in a slot.
    pub fn host_secret_capacity(&self) -> u32 {
        if self.k_host > 0 {
            self.tau
        } else {
            self.tau - 1
        }
    }

    pub fn guest_secret_capacity(&self) -> u32 {
        if self.k_guest > 0 {
            self.tau
        } else {
            self.tau - 1
        }
    }

    /// Host points whose slots are common (all host index bits one).
    pub fn common_points(&self) -> Vec<i32> {
        (0..self.host.order() as usize)
            .filter(|&j| {
                let l = self.host.label_at(j);
                self.host_index_positions
                    .iter()
                    .all(|&p| bits::bit_at(l, self.total, p) == 1)
            })
            .map(|j| self.host.unit_point(j))
            .collect()
    }

    /// Builds a host label from its bins. `info` lists the designated bit first.
    pub fn assemble_host_label(
        &self,
        host_index: &[u8],
        guest_index: &[u8],
        padding: &[u8],
        info: &[u8],
    ) -> u32 {
        let mut label = 0;
        let groups = [
            (&self.host_index_positions, host_index),
            (&self.guest_index_positions, guest_index),
            (&self.padding_positions, padding),
            (&self.info_positions, info),
        ];
        for (positions, values) in groups {
            debug_assert_eq!(positions.len(), values.len());
            for (&p, &b) in positions.iter().zip(values) {
                bits::set_bit(&mut label, self.total, p, b);
            }
        }
        label
    }

    /// Reads the bits at `positions` of a host label.
    pub fn extract(&self, label: u32, positions: &[usize]) -> Vec<u8> {
        positions
            .iter()
            .map(|&p| bits::bit_at(label, self.total, p))
            .collect()
    }
}

/// Finds `k` label positions whose all-ones event selects exactly the
/// `2^(T-k-1)` outermost points on each side.
fn find_edge_positions(host: &PamConstellation, k: u32) -> Option<Vec<usize>> {
    let width = host.width();
    let order = host.order() as usize;
    let per_side = 1usize << (width - k - 1);
    let is_edge = |j: usize| j < per_side || j >= order - per_side;
    combinations(width as usize, k as usize)
        .into_iter()
        .find(|set| {
            (0..order).all(|j| {
                let l = host.label_at(j);
                set.iter().all(|&p| bits::bit_at(l, width, p) == 1) == is_edge(j)
            })
        })
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Source of index and padding bits: preloaded bits first, then an optional
/// seeded generator.
#[derive(Debug, Clone)]
pub struct IndexStream {
    queue: VecDeque<u8>,
    rng: Option<ChaCha8Rng>,
}

impl IndexStream {
    pub fn seeded(seed: u64) -> Self {
        IndexStream {
            queue: VecDeque::new(),
            rng: Some(ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    pub fn preloaded() -> Self {
        IndexStream {
            queue: VecDeque::new(),
            rng: None,
        }
    }

    fn ensure(&mut self, n: usize) -> Result<()> {
        while self.queue.len() < n {
            match self.rng.as_mut() {
                Some(rng) => self.queue.push_back(rng.gen_range(0..=1)),
                None => return Err(Error::QueueUnderflow { queue: "index" }),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Consumed {
    pub secret: u64,
    pub common: u64,
    pub index: u64,
}

/// Queues and pipeline register of one node.
#[derive(Debug, Clone)]
pub struct EncoderState {
    role: Role,
    secret: VecDeque<u8>,
    common: VecDeque<u8>,
    index: IndexStream,
    pipeline: VecDeque<Vec<u8>>,
    pipeline_delay: usize,
    consumed: Consumed,
}

impl EncoderState {
    pub fn new(role: Role, index: IndexStream) -> Self {
        EncoderState {
            role,
            secret: VecDeque::new(),
            common: VecDeque::new(),
            index,
            pipeline: VecDeque::new(),
            pipeline_delay: 1,
            consumed: Consumed::default(),
        }
    }

    pub fn host(index: IndexStream) -> Self {
        Self::new(Role::Host, index)
    }

    pub fn guest() -> Self {
        Self::new(Role::Guest, IndexStream::preloaded())
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// Slots between an announcement and its use by the host's own index
    /// (shared mode). Defaults to one.
    pub fn with_pipeline_delay(mut self, delay: usize) -> Self {
        self.pipeline_delay = delay.max(1);
        self
    }

    pub fn push_secret(&mut self, bits: &[u8]) {
        self.secret.extend(bits);
    }

    pub fn push_common(&mut self, bits: &[u8]) {
        self.common.extend(bits);
    }

    pub fn push_index(&mut self, bits: &[u8]) {
        self.index.queue.extend(bits);
    }

    /// Drops whatever is left in the data and index queues.
    pub fn clear_queues(&mut self) {
        self.secret.clear();
        self.common.clear();
        self.index.queue.clear();
    }

    /// Appends a received (guest) or issued (host) announcement.
    pub fn push_announcement(&mut self, bits: Vec<u8>) {
        self.pipeline.push_back(bits);
    }

    /// Replaces the pipeline register and its delay, e.g. at a frame
    /// boundary when announcements are used one frame later.
    pub fn reset_pipeline(&mut self, entries: Vec<Vec<u8>>, delay: usize) {
        self.pipeline = entries.into();
        self.pipeline_delay = delay.max(1);
    }

    pub fn pipeline_len(&self) -> usize {
        self.pipeline.len()
    }

    pub fn consumed(&self) -> Consumed {
        self.consumed
    }

    fn take(queue: &mut VecDeque<u8>, n: usize) -> Vec<u8> {
        queue.drain(..n).collect()
    }
}

/// Outcome of one encoder invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotDecision {
    pub slot_type: SlotType,
    /// Designated bit first.
    pub info_bits: Vec<u8>,
    pub symbol_bits: Vec<u8>,
    pub label: u32,
    /// Unit-scale point.
    pub point: i32,
    pub host_index: Vec<u8>,
    pub announced_guest_index: Vec<u8>,
    pub padding: Vec<u8>,
    /// Index-stream bits drawn this slot, in draw order.
    pub fresh_index: Vec<u8>,
    pub secret_used: Vec<u8>,
    pub common_used: Vec<u8>,
}

pub fn host_encode_slot(state: &mut EncoderState, layout: &BinLayout) -> Result<SlotDecision> {
    if state.role != Role::Host {
        return Err(Error::RoleMismatch { expected: "host" });
    }
    let shared = layout.shared_index();
    let kh = layout.k_host as usize;
    let kg = layout.k_guest as usize;
    let pad = layout.padding_positions.len();
    let fresh = layout.fresh_index_bits();
    state.index.ensure(fresh)?;

    let from_pipeline = shared && state.pipeline.len() >= state.pipeline_delay;
    let host_index: Vec<u8> = if !shared {
        state.index.queue.iter().take(kh).copied().collect()
    } else if from_pipeline {
        state.pipeline[0].clone()
    } else {
        // initialization: no announcement exists yet
        vec![1; kh]
    };
    let slot_type = SlotType::from_index(&host_index);
    let rest = layout.tau as usize - 1;
    let (need_secret, need_common) = match slot_type {
        SlotType::Common => (rest, 1),
        SlotType::Secret => (rest + 1, 0),
    };
    if state.secret.len() < need_secret {
        return Err(Error::QueueUnderflow { queue: "secret" });
    }
    if state.common.len() < need_common {
        return Err(Error::QueueUnderflow { queue: "common" });
    }

    if from_pipeline {
        state.pipeline.pop_front();
    }
    let fresh_index = EncoderState::take(&mut state.index.queue, fresh);
    let own_fresh = if shared { 0 } else { kh };
    let announced = fresh_index[own_fresh..own_fresh + kg].to_vec();
    let padding = fresh_index[own_fresh + kg..own_fresh + kg + pad].to_vec();
    if shared {
        state.pipeline.push_back(announced.clone());
    }
    let common_used = EncoderState::take(&mut state.common, need_common);
    let secret_used = EncoderState::take(&mut state.secret, need_secret);
    let mut info = Vec::with_capacity(layout.tau as usize);
    match slot_type {
        SlotType::Common => {
            info.push(common_used[0]);
            info.extend_from_slice(&secret_used);
        }
        SlotType::Secret => info.extend_from_slice(&secret_used),
    }
    state.consumed.secret += need_secret as u64;
    state.consumed.common += need_common as u64;
    state.consumed.index += fresh as u64;

    let label = layout.assemble_host_label(&host_index, &announced, &padding, &info);
    Ok(SlotDecision {
        slot_type,
        info_bits: info,
        symbol_bits: bits::from_label(label, layout.total),
        label,
        point: layout.host.point_of_label(label),
        host_index,
        announced_guest_index: announced,
        padding,
        fresh_index,
        secret_used,
        common_used,
    })
}

pub fn guest_encode_slot(state: &mut EncoderState, layout: &BinLayout) -> Result<SlotDecision> {
    if state.role != Role::Guest {
        return Err(Error::RoleMismatch { expected: "guest" });
    }
    let slot_type = if layout.k_guest == 0 {
        SlotType::Common
    } else {
        state
            .pipeline
            .front()
            .map_or(SlotType::Common, |b| SlotType::from_index(b))
    };
    let rest = layout.tau as usize - 1;
    let (need_secret, need_common) = match slot_type {
        SlotType::Common => (rest, 1),
        SlotType::Secret => (rest + 1, 0),
    };
    if state.secret.len() < need_secret {
        return Err(Error::QueueUnderflow { queue: "secret" });
    }
    if state.common.len() < need_common {
        return Err(Error::QueueUnderflow { queue: "common" });
    }
    if layout.k_guest > 0 {
        state.pipeline.pop_front();
    }
    let common_used = EncoderState::take(&mut state.common, need_common);
    let secret_used = EncoderState::take(&mut state.secret, need_secret);
    let mut info = common_used.clone();
    info.extend_from_slice(&secret_used);
    state.consumed.secret += need_secret as u64;
    state.consumed.common += need_common as u64;
    let label = bits::to_label(&info);
    Ok(SlotDecision {
        slot_type,
        symbol_bits: info.clone(),
        info_bits: info,
        label,
        point: layout.guest.point_of_label(label),
        host_index: Vec::new(),
        announced_guest_index: Vec::new(),
        padding: Vec::new(),
        fresh_index: Vec::new(),
        secret_used,
        common_used,
    })
}

/// `2^-k` with `k = 0` giving one.
fn pow2_neg(k: u32) -> f64 {
    f64::powi(2.0, -(k as i32))
}

/// Nominal per-slot secrecy rates `(guest, host) = (tau - 2^-K_guest, tau - 2^-K_host)`.
pub fn nominal_rates(layout: &BinLayout) -> (f64, f64) {
    let tau = f64::from(layout.tau);
    (
        tau - pow2_neg(layout.k_guest),
        tau - pow2_neg(layout.k_host),
    )
}

/// Nominal rates as `(R_A, R_B)`.
pub fn nominal_rates_by_node(layout: &BinLayout) -> (f64, f64) {
    let (g, h) = nominal_rates(layout);
    match layout.host_node {
        Node::B => (g, h),
        Node::A => (h, g),
    }
}

/// One corner of a rate region, in node terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub k_a: u32,
    pub k_b: u32,
    pub rate_a: f64,
    pub rate_b: f64,
}

/// All integer index splits with `K_A + K_B <= T - tau` and their nominal
/// rates.
///
/// For QAM the formula is doubled (two orthogonal rails) with `tau` taken as
/// the bits of one rail of the smaller constellation, while the index budget
/// still spans the larger constellation's full symbol: `T - tau` with
/// `T = log2 max(M_A, M_B)`. For (4, 64)-QAM this gives host corners
/// `2 (1 - 2^-K)` up to `K = 5`.
pub fn rate_region(order_a: u32, order_b: u32, modulation: Modulation) -> Result<Vec<RatePoint>> {
    modulation.rail_order(order_a)?;
    modulation.rail_order(order_b)?;
    let m_a = order_a.trailing_zeros();
    let m_b = order_b.trailing_zeros();
    let (tau, gain) = match modulation {
        Modulation::Pam => (m_a.min(m_b), 1.0),
        Modulation::Qam => (m_a.min(m_b) / 2, 2.0),
    };
    let budget = m_a.max(m_b) - tau;
    let host_is_a = order_a > order_b;
    let mut out = Vec::new();
    for k_guest in 0..=budget {
        for k_host in 0..=budget - k_guest {
            let rg = gain * (f64::from(tau) - pow2_neg(k_guest));
            let rh = gain * (f64::from(tau) - pow2_neg(k_host));
            out.push(if host_is_a {
                RatePoint {
                    k_a: k_host,
                    k_b: k_guest,
                    rate_a: rh,
                    rate_b: rg,
                }
            } else {
                RatePoint {
                    k_a: k_guest,
                    k_b: k_host,
                    rate_a: rg,
                    rate_b: rh,
                }
            });
        }
    }
    out.sort_by_key(|p| (p.k_a, p.k_b));
    Ok(out)
}

/// Vertices of the Pareto-optimal part of the convex hull of `points`,
/// ordered by increasing first coordinate.
pub fn pareto_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.dedup_by(|a, b| a.0 == b.0);
    // upper hull, monotone chain
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    // keep the non-increasing (Pareto) stretch
    let top = hull
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(b.0.cmp(&a.0)))
        .map_or(0, |(i, _)| i);
    hull.split_off(top)
}

/// Convex combination of rate pairs.
pub fn timeshare(points: &[(f64, f64)], weights: &[f64]) -> Result<(f64, f64)> {
    let sum: f64 = weights.iter().sum();
    if points.len() != weights.len()
        || points.is_empty()
        || weights.iter().any(|w| w.is_nan() || *w < 0.0)
        || (sum - 1.0).abs() > 1e-12
    {
        return Err(Error::InvalidWeights(sum));
    }
    Ok(points
        .iter()
        .zip(weights)
        .fold((0.0, 0.0), |acc, (p, w)| (acc.0 + w * p.0, acc.1 + w * p.1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn layout(a: u32, b: u32, kg: u32, kh: u32) -> BinLayout {
        plan_bins(a, b, kg, kh, &Labeling::GrayTable1).unwrap()
    }

    fn host_with(index: &[u8], secret: &[u8], common: &[u8]) -> EncoderState {
        let mut s = EncoderState::host(IndexStream::preloaded());
        s.push_index(index);
        s.push_secret(secret);
        s.push_common(common);
        s
    }

    #[test]
    fn option_layouts_select_edge_points() {
        let opt1 = layout(2, 8, 0, 2);
        assert_eq!(opt1.common_points(), vec![-7, 7]);
        assert_eq!(opt1.info_positions(), &[0]);
        assert_eq!(opt1.host_index_positions(), &[1, 2]);
        let opt2 = layout(2, 8, 1, 1);
        assert_eq!(opt2.common_points(), vec![-7, -5, 5, 7]);
        assert_eq!(opt2.host_index_positions(), &[1]);
        assert_eq!(opt2.guest_index_positions(), &[2]);
        let flat = layout(2, 2, 0, 0);
        assert_eq!((flat.tau(), flat.total_bits()), (1, 1));
        assert!(flat.host_index_positions().is_empty());
    }

    #[test]
    fn budget_and_labeling_errors() {
        assert_eq!(
            plan_bins(2, 8, 2, 1, &Labeling::GrayTable1).unwrap_err(),
            Error::BudgetExceeded {
                requested: 3,
                budget: 2
            }
        );
        assert_eq!(
            plan_bins(2, 8, 0, 1, &Labeling::NaturalBinary).unwrap_err(),
            Error::NoEdgeRegion { k_host: 1 }
        );
        // natural binary is fine when no host index is needed
        assert!(plan_bins(2, 8, 2, 0, &Labeling::NaturalBinary).is_ok());
    }

    #[test]
    fn roles_swap_when_a_is_larger() {
        let l = layout(16, 4, 1, 1);
        assert_eq!(l.host_node(), Node::A);
        assert_eq!(l.host().order(), 16);
        assert_eq!(nominal_rates_by_node(&l), (1.5, 1.5));
        let l = layout(16, 4, 0, 2);
        assert_eq!(l.k_by_node(), (2, 0));
        assert_eq!(nominal_rates_by_node(&l), (1.75, 1.0));
    }

    #[test]
    fn host_common_slot_option2() {
        let l = layout(2, 8, 1, 1);
        // shared index: host index comes from the pipeline register
        let mut s = host_with(&[0], &[], &[1]);
        s.push_announcement(vec![1]);
        let d = host_encode_slot(&mut s, &l).unwrap();
        assert_eq!(d.slot_type, SlotType::Common);
        assert_eq!(d.symbol_bits, vec![1, 1, 0]);
        assert_eq!(d.point, -5);
        assert_eq!(d.announced_guest_index, vec![0]);
    }

    #[test]
    fn host_secret_slot_option2() {
        let l = layout(2, 8, 1, 1);
        let mut s = host_with(&[0], &[0], &[]);
        s.push_announcement(vec![0]);
        let d = host_encode_slot(&mut s, &l).unwrap();
        assert_eq!(d.slot_type, SlotType::Secret);
        assert_eq!(d.symbol_bits, vec![0, 0, 0]);
        assert_eq!(d.point, 3);
        assert_eq!(
            s.consumed(),
            Consumed {
                secret: 1,
                common: 0,
                index: 1
            }
        );
    }

    #[test]
    fn host_edge_slot_option1() {
        let l = layout(2, 8, 0, 2);
        let mut s = host_with(&[1, 1], &[], &[1]);
        let d = host_encode_slot(&mut s, &l).unwrap();
        assert_eq!(d.slot_type, SlotType::Common);
        assert_eq!(d.symbol_bits, vec![1, 1, 1]);
        assert_eq!(d.point, -7);
    }

    #[test]
    fn underflow_leaves_queues_untouched() {
        let l = layout(2, 8, 0, 2);
        let mut s = host_with(&[0, 1], &[], &[1]);
        assert_eq!(
            host_encode_slot(&mut s, &l).unwrap_err(),
            Error::QueueUnderflow { queue: "secret" }
        );
        s.push_secret(&[1]);
        let d = host_encode_slot(&mut s, &l).unwrap();
        assert_eq!(d.symbol_bits, vec![1, 0, 1]);
        assert_eq!(s.consumed().common, 0);
    }

    #[test]
    fn guest_follows_pipeline() {
        let l = layout(2, 8, 1, 1);
        let mut g = EncoderState::guest();
        g.push_secret(&[1]);
        g.push_common(&[0, 0]);
        // initialization slot
        assert_eq!(
            guest_encode_slot(&mut g, &l).unwrap().slot_type,
            SlotType::Common
        );
        g.push_announcement(vec![0]);
        let d = guest_encode_slot(&mut g, &l).unwrap();
        assert_eq!((d.slot_type, d.point), (SlotType::Secret, -1));
        g.push_announcement(vec![1]);
        assert_eq!(
            guest_encode_slot(&mut g, &l).unwrap().slot_type,
            SlotType::Common
        );
        assert!(guest_encode_slot(&mut EncoderState::host(IndexStream::preloaded()), &l).is_err());
    }

    #[test]
    fn guest_without_index_is_always_common() {
        let l = layout(2, 8, 0, 2);
        let mut g = EncoderState::guest();
        g.push_common(&[1]);
        g.push_announcement(vec![]);
        assert_eq!(
            guest_encode_slot(&mut g, &l).unwrap().slot_type,
            SlotType::Common
        );
        assert_eq!(nominal_rates(&l).0, 0.0);
    }

    #[test]
    fn shifted_queue_announcement_becomes_host_index() {
        let l = layout(2, 8, 1, 1);
        let mut s = EncoderState::host(IndexStream::seeded(11));
        s.push_secret(&[0; 64]);
        s.push_common(&[1; 64]);
        let mut prev: Option<Vec<u8>> = None;
        for _ in 0..40 {
            let d = host_encode_slot(&mut s, &l).unwrap();
            match &prev {
                Some(p) => assert_eq!(&d.host_index, p),
                None => assert_eq!(d.slot_type, SlotType::Common),
            }
            prev = Some(d.announced_guest_index.clone());
        }
    }

    #[test]
    fn nominal_rate_examples() {
        assert_eq!(nominal_rates(&layout(2, 8, 0, 2)), (0.0, 0.75));
        assert_eq!(nominal_rates(&layout(2, 8, 1, 1)), (0.5, 0.5));
        assert_eq!(nominal_rates(&layout(2, 64, 0, 5)), (0.0, 0.96875));
    }

    #[test]
    fn rate_region_examples() {
        let r = rate_region(2, 8, Modulation::Pam).unwrap();
        let pairs: Vec<(f64, f64)> = r.iter().map(|p| (p.rate_a, p.rate_b)).collect();
        for want in [(0.0, 0.75), (0.5, 0.5), (0.75, 0.0)] {
            assert!(pairs.contains(&want));
        }
        let q = rate_region(4, 64, Modulation::Qam).unwrap();
        assert!(q.iter().any(|p| p.rate_a == 0.0 && p.rate_b == 1.75));
        assert_eq!(q.iter().map(|p| p.rate_b).fold(0.0, f64::max), 1.9375);
        let flat = rate_region(2, 2, Modulation::Pam).unwrap();
        assert_eq!(
            flat,
            vec![RatePoint {
                k_a: 0,
                k_b: 0,
                rate_a: 0.0,
                rate_b: 0.0
            }]
        );
        assert!(rate_region(8, 64, Modulation::Qam).is_err());
    }

    #[test]
    fn hull_of_basic_region() {
        let r = rate_region(2, 8, Modulation::Pam).unwrap();
        let pts: Vec<(f64, f64)> = r.iter().map(|p| (p.rate_a, p.rate_b)).collect();
        assert_eq!(
            pareto_hull(&pts),
            vec![(0.0, 0.75), (0.5, 0.5), (0.75, 0.0)]
        );
    }

    #[test]
    fn timeshare_examples() {
        assert_eq!(
            timeshare(&[(0.0, 0.75), (0.75, 0.0)], &[0.5, 0.5]).unwrap(),
            (0.375, 0.375)
        );
        assert_eq!(timeshare(&[(0.5, 0.5)], &[1.0]).unwrap(), (0.5, 0.5));
        let (a, b) = timeshare(&[(0.5, 0.5), (0.0, 0.75)], &[0.2, 0.8]).unwrap();
        assert!((a - 0.1).abs() < 1e-15 && (b - 0.7).abs() < 1e-15);
        assert!(timeshare(&[(0.5, 0.5), (0.0, 0.75)], &[0.2, 0.7]).is_err());
        assert!(timeshare(&[(0.5, 0.5)], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn budget_is_exact_for_all_orders() {
        for ma in 1..=8u32 {
            for mb in 1..=8u32 {
                let budget = ma.max(mb) - ma.min(mb);
                for kg in 0..=budget + 1 {
                    for kh in 0..=budget + 1 {
                        let r = plan_bins(1 << ma, 1 << mb, kg, kh, &Labeling::GrayTable1);
                        assert_eq!(r.is_ok(), kg + kh <= budget, "{ma} {mb} {kg} {kh}");
                    }
                }
            }
        }
    }

    #[test]
    fn rates_respect_tau_and_grow_with_k() {
        for ma in 1..=8u32 {
            for mb in ma..=8u32 {
                let budget = mb - ma;
                let mut prev = f64::NEG_INFINITY;
                for kh in 0..=budget {
                    let l = layout(1 << ma, 1 << mb, 0, kh);
                    let (g, h) = nominal_rates(&l);
                    assert!(g <= f64::from(l.tau()) && h <= f64::from(l.tau()));
                    assert!(h > prev);
                    prev = h;
                }
            }
        }
    }

    proptest! {
        #[test]
        fn bins_partition_label(ma in 1u32..=7, extra in 0u32..=5, split in 0u32..=5) {
            let mb = (ma + extra).min(8);
            let budget = mb - ma;
            let kg = split.min(budget);
            let kh = budget - kg;
            let l = layout(1 << ma, 1 << mb, kg, kh);
            let mut all: Vec<usize> = l.info_positions().iter()
                .chain(l.host_index_positions())
                .chain(l.guest_index_positions())
                .chain(l.padding_positions())
                .copied()
                .collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..mb as usize).collect::<Vec<_>>());
            prop_assert_eq!(l.info_positions().len() as u32, ma);
            prop_assert_eq!(l.common_points().len() as u32, (1u32 << mb) >> kh);
        }
    }
}
