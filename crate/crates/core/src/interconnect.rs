//! Cache-coherent interconnect model at cache-line granularity.
//!
//! Coherence is modelled as reliable request/response message passing over
//! point-to-point links, not as a full protocol state machine: the
//! interconnect here is a transport for data and synchronization. Each link
//! direction tracks when it next becomes free; a message occupies the link
//! for `payload_bytes / bandwidth` and then takes the one-way latency to
//! propagate. Line-carrying kinds charge 64 bytes, control kinds 8.
//!
//! Occupancy is accounted in picoseconds internally (bandwidths do not
//! divide 64 bytes into whole nanoseconds); delivery times are rounded to
//! the nearest nanosecond when they re-enter simulated time.

use crate::engine::{ActorId, AppId, SimConfig, SimTime};

/// The 64-byte transfer unit of all coherence-level interaction.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct CacheLine(pub [u8; 64]);

pub const LINE_SIZE: u64 = 64;

impl CacheLine {
    pub const ZERO: CacheLine = CacheLine([0; 64]);

    pub fn from_slice(bytes: &[u8]) -> CacheLine {
        assert_eq!(bytes.len(), 64, "cache lines are exactly 64 bytes");
        let mut line = [0u8; 64];
        line.copy_from_slice(bytes);
        CacheLine(line)
    }

    pub fn u64_at(&self, offset: usize) -> u64 {
        let mut b = [0u8; 8];
        b.copy_from_slice(&self.0[offset..offset + 8]);
        u64::from_le_bytes(b)
    }

    pub fn set_u64_at(&mut self, offset: usize, value: u64) {
        self.0[offset..offset + 8].copy_from_slice(&value.to_le_bytes());
    }

    pub fn u32_at(&self, offset: usize) -> u32 {
        let mut b = [0u8; 4];
        b.copy_from_slice(&self.0[offset..offset + 4]);
        u32::from_le_bytes(b)
    }
}

impl std::fmt::Debug for CacheLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CacheLine[{:02x}{:02x}{:02x}{:02x}..]", self.0[0], self.0[1], self.0[2], self.0[3])
    }
}

/// Message kinds. `SegSync` is the protection-metadata push that keeps node
/// segment replicas current; `Ack` acknowledges it. `ObserveNotify` tells a
/// node that the host consumed a streamed data-area line (the host-line-read
/// ack that returns stream credit).
#[derive(Debug, Clone, PartialEq)]
pub enum MsgKind {
    LoadReq,
    StoreReq(CacheLine),
    DataResp(CacheLine),
    Ack { token: u64 },
    ObserveNotify,
    SegSync { app: AppId, epoch: u64 },
}

impl MsgKind {
    /// Link occupancy charge.
    pub fn payload_bytes(&self) -> u64 {
        match self {
            MsgKind::StoreReq(_) | MsgKind::DataResp(_) => LINE_SIZE,
            _ => 8,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MsgKind::LoadReq => "LoadReq",
            MsgKind::StoreReq(_) => "StoreReq",
            MsgKind::DataResp(_) => "DataResp",
            MsgKind::Ack { .. } => "Ack",
            MsgKind::ObserveNotify => "ObserveNotify",
            MsgKind::SegSync { .. } => "SegSync",
        }
    }
}

/// One coherence-level transaction on the wire.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceMessage {
    pub kind: MsgKind,
    /// Virtual line address the transaction refers to, 64-aligned.
    pub line_addr: u64,
    pub src: ActorId,
    pub dst: ActorId,
    pub issued_at: SimTime,
}

impl CoherenceMessage {
    pub fn well_formed(&self) -> bool {
        self.line_addr % LINE_SIZE == 0
    }
}

/// Point-to-point link parameters. One-way latency is
/// `base + hops * per_hop`; bandwidth is in bytes per microsecond.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkConfig {
    pub base_latency_ns: u64,
    pub per_hop_latency_ns: u64,
    pub hops: u32,
    pub bandwidth_bytes_per_us: u64,
}

impl LinkConfig {
    pub fn from_sim(cfg: &SimConfig) -> LinkConfig {
        LinkConfig {
            base_latency_ns: cfg.far_base_latency_ns,
            per_hop_latency_ns: cfg.per_hop_latency_ns,
            hops: cfg.hops,
            bandwidth_bytes_per_us: cfg.far_bandwidth_bytes_per_us,
        }
    }

    pub fn one_way_latency_ns(&self) -> u64 {
        self.base_latency_ns + self.hops as u64 * self.per_hop_latency_ns
    }

    /// Time the link is occupied by `bytes`, in picoseconds, rounded up so
    /// delivered throughput never exceeds the configured bandwidth.
    pub fn occupancy_ps(&self, bytes: u64) -> u64 {
        // bytes / (bw bytes per us) in ps = bytes * 1e6 / bw
        let num = bytes * 1_000_000;
        num.div_ceil(self.bandwidth_bytes_per_us)
    }

    /// Serialization charge for `bytes` in whole nanoseconds (round up).
    pub fn occupancy_ns(&self, bytes: u64) -> u64 {
        self.occupancy_ps(bytes).div_ceil(1000)
    }
}

/// Unloaded round-trip for a line read: two one-way propagations plus the
/// remote memory service time. Serialization is excluded here; callers that
/// need the loaded figure go through [`Link::send_at`].
pub fn round_trip_ns(link: &LinkConfig, remote_service_ns: u64) -> u64 {
    2 * link.one_way_latency_ns() + remote_service_ns
}

/// Occupancy state for one direction of one link.
#[derive(Debug, Clone, Copy, Default)]
pub struct Link {
    free_at_ps: u64,
}

impl Link {
    pub fn new() -> Link {
        Link { free_at_ps: 0 }
    }

    /// Compute the delivery time of a message handed to the link at `now`
    /// and advance the occupancy horizon. FIFO per link direction follows
    /// from the monotone `free_at` horizon plus constant latency.
    pub fn send_at(&mut self, now: SimTime, cfg: &LinkConfig, payload_bytes: u64) -> SimTime {
        let now_ps = now.ns() * 1000;
        let start_ps = now_ps.max(self.free_at_ps);
        self.free_at_ps = start_ps + cfg.occupancy_ps(payload_bytes);
        let delivery_ps = self.free_at_ps + cfg.one_way_latency_ns() * 1000;
        SimTime((delivery_ps + 500) / 1000)
    }

    pub fn free_at_ps(&self) -> u64 {
        self.free_at_ps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link_cfg(base: u64, per_hop: u64, hops: u32, bw: u64) -> LinkConfig {
        LinkConfig {
            base_latency_ns: base,
            per_hop_latency_ns: per_hop,
            hops,
            bandwidth_bytes_per_us: bw,
        }
    }

    #[test]
    fn idle_link_load_req_delivers_at_base_latency() {
        // base 250, hops 0: an 8-byte request serializes in well under 1 ns,
        // so rounding lands delivery exactly on the base latency.
        let cfg = link_cfg(250, 300, 0, 52_000);
        let mut link = Link::new();
        let t = link.send_at(SimTime(0), &cfg, 8);
        assert_eq!(t, SimTime(250));
    }

    #[test]
    fn hop_latency_sums() {
        let cfg = link_cfg(250, 300, 2, 52_000);
        assert_eq!(cfg.one_way_latency_ns(), 850);
        let mut link = Link::new();
        let t = link.send_at(SimTime(0), &cfg, 8);
        assert_eq!(t, SimTime(850));
    }

    #[test]
    fn back_to_back_stores_space_by_serialization() {
        // Derived oracle: recompute the queueing by hand for 100 messages.
        // 64 bytes at 64 bytes/ns occupies exactly 1 ns each.
        let cfg = link_cfg(0, 0, 0, 64_000);
        let mut link = Link::new();
        let mut deliveries = Vec::new();
        for _ in 0..100 {
            deliveries.push(link.send_at(SimTime(0), &cfg, 64).ns());
        }
        let mut free_ps = 0u64;
        for (k, d) in deliveries.iter().enumerate() {
            free_ps += 1000;
            let expect = (free_ps + 500) / 1000;
            assert_eq!(*d, expect, "message {k}");
        }
        // spacing exactly 1 ns apart
        for w in deliveries.windows(2) {
            assert_eq!(w[1] - w[0], 1);
        }
    }

    #[test]
    fn round_trip_matches_hand_sum() {
        // 2 * 250 + 80 = 580, summed independently of the implementation.
        let cfg = link_cfg(250, 0, 0, 52_000);
        let base = 250u64;
        let hops_part = 0u64;
        let service = 80u64;
        let hand = base + hops_part + base + hops_part + service;
        assert_eq!(round_trip_ns(&cfg, service), hand);
        assert_eq!(hand, 580);
    }

    #[test]
    fn zero_link_round_trip_is_zero() {
        let cfg = link_cfg(0, 0, 0, 52_000);
        assert_eq!(round_trip_ns(&cfg, 0), 0);
    }

    #[test]
    fn round_trip_monotone_in_base_latency() {
        let lo = link_cfg(150, 0, 0, 52_000);
        let hi = link_cfg(400, 0, 0, 52_000);
        assert!(round_trip_ns(&hi, 80) > round_trip_ns(&lo, 80));
    }

    #[test]
    fn control_kinds_charge_eight_bytes() {
        assert_eq!(MsgKind::LoadReq.payload_bytes(), 8);
        assert_eq!(MsgKind::Ack { token: 1 }.payload_bytes(), 8);
        assert_eq!(MsgKind::ObserveNotify.payload_bytes(), 8);
        assert_eq!(MsgKind::StoreReq(CacheLine::ZERO).payload_bytes(), 64);
        assert_eq!(MsgKind::DataResp(CacheLine::ZERO).payload_bytes(), 64);
    }

    #[test]
    fn throughput_never_exceeds_bandwidth() {
        // Over any window, delivered payload bytes <= bandwidth * window + one line.
        // ceil-charging occupancy makes this hold for awkward bandwidths too.
        for bw in [130_000u64, 52_000, 7_777, 64_000, 1] {
            let cfg = link_cfg(10, 0, 0, bw);
            let mut link = Link::new();
            let n = 500u64;
            let mut last = 0u64;
            for _ in 0..n {
                last = link.send_at(SimTime(0), &cfg, 64).ns();
            }
            let window_ns = last - cfg.one_way_latency_ns(); // serialization window
            let delivered = n * 64;
            let bound = bw * window_ns / 1000 + 64 + bw / 1000 + 1;
            assert!(
                delivered <= bound,
                "bw={bw}: delivered {delivered} > bound {bound} over {window_ns}ns"
            );
        }
    }
}
