//! Per-application virtual address space built from contiguous segments.
//!
//! Protection is segmentation, not paging: each segment is a contiguous
//! base+length mapping onto host-local memory, a far-memory node, or a
//! controller's control/data region, and the physical location of memory is
//! explicit in the layout. Virtual addresses are allocated bump-pointer per
//! region class from fixed bases:
//!
//! - host-local at `0x0001_0000`
//! - far direct at `0x1000_0000`
//! - controller control/data regions at `0x2000_0000`
//!
//! Nodes work from value-copied replicas of the segment table, tagged with
//! the epoch at which they were synced; any mutation bumps the epoch and the
//! machine re-syncs every node before dependent accesses complete.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{MccId, NodeId};

pub const HOST_VA_BASE: u64 = 0x0001_0000;
pub const FAR_VA_BASE: u64 = 0x1000_0000;
pub const MCC_VA_BASE: u64 = 0x2000_0000;

pub const CONTROL_AREA_BYTES: u64 = 4096;
pub const DATA_AREA_BYTES: u64 = 65536;

/// Read/write permission set; never empty for a mapped segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perms {
    pub read: bool,
    pub write: bool,
}

impl Perms {
    pub const RW: Perms = Perms { read: true, write: true };
    pub const R: Perms = Perms { read: true, write: false };

    pub fn allows(&self, access: Access) -> bool {
        match access {
            Access::Read => self.read,
            Access::Write => self.write,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Read,
    Write,
}

/// What a segment maps onto. Offsets are absolute within the backing store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backing {
    HostLocal { offset: u64 },
    FarDirect { node: NodeId, offset: u64 },
    MccControl { mcc: MccId },
    MccData { mcc: MccId },
}

/// Contiguous virtual->physical mapping with permissions; the protection unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub base_va: u64,
    pub length: u64,
    pub perms: Perms,
    pub backing: Backing,
}

impl Segment {
    pub fn contains(&self, va: u64) -> bool {
        va >= self.base_va && va - self.base_va < self.length
    }

    pub fn end_va(&self) -> u64 {
        self.base_va + self.length
    }
}

/// Who is asking for a translation. Controller requesters carry their
/// affinity so the restriction to local far memory (plus the host-local
/// path used by bulk copies) can be enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Requester {
    Host,
    Mcc { mcc: MccId, affinity: NodeId },
}

/// Fully resolved translation result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Host { offset: u64 },
    Far { node: NodeId, offset: u64 },
    Control { mcc: MccId, offset: u64 },
    Data { mcc: MccId, offset: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Fault {
    #[error("unmapped address {va:#x}")]
    Unmapped { va: u64 },
    #[error("permission denied at {va:#x}")]
    Permission { va: u64 },
    #[error("affinity violation at {va:#x}")]
    AffinityViolation { va: u64 },
}

impl Fault {
    pub fn code(&self) -> u64 {
        match self {
            Fault::Unmapped { .. } => 2,
            Fault::Permission { .. } => 3,
            Fault::AffinityViolation { .. } => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("zero or unaligned length")]
    BadLength,
    #[error("far memory exhausted on node")]
    OutOfFarMemory,
}

/// Shared lookup logic so the host master table and node replicas cannot
/// diverge in behaviour, only in staleness.
fn translate_in(
    segments: &[Segment],
    va: u64,
    access: Access,
    requester: Requester,
    strict_affinity: bool,
) -> Result<Location, Fault> {
    let seg = segments
        .iter()
        .find(|s| s.contains(va))
        .ok_or(Fault::Unmapped { va })?;
    if !seg.perms.allows(access) {
        return Err(Fault::Permission { va });
    }
    let off = va - seg.base_va;
    match (seg.backing, requester) {
        (Backing::HostLocal { offset }, _) => Ok(Location::Host { offset: offset + off }),
        (Backing::FarDirect { node, offset }, Requester::Host) => {
            Ok(Location::Far { node, offset: offset + off })
        }
        (Backing::FarDirect { node, offset }, Requester::Mcc { affinity, .. }) => {
            if strict_affinity && node != affinity {
                Err(Fault::AffinityViolation { va })
            } else {
                Ok(Location::Far { node, offset: offset + off })
            }
        }
        // Control and data regions are host-side interfaces only; to a
        // controller they do not exist, which keeps node replicas (which
        // never carry them) in exact agreement with the master.
        (Backing::MccControl { mcc }, Requester::Host) => Ok(Location::Control { mcc, offset: off }),
        (Backing::MccData { mcc }, Requester::Host) => Ok(Location::Data { mcc, offset: off }),
        (Backing::MccControl { .. }, Requester::Mcc { .. })
        | (Backing::MccData { .. }, Requester::Mcc { .. }) => Err(Fault::Unmapped { va }),
    }
}

/// The host-side master table for one application.
#[derive(Debug, Clone)]
pub struct AddressSpace {
    segments: Vec<Segment>,
    epoch: u64,
    next_host_va: u64,
    next_far_va: u64,
    next_mcc_va: u64,
}

impl Default for AddressSpace {
    fn default() -> Self {
        Self::new()
    }
}

impl AddressSpace {
    pub fn new() -> AddressSpace {
        AddressSpace {
            segments: Vec::new(),
            epoch: 0,
            next_host_va: HOST_VA_BASE,
            next_far_va: FAR_VA_BASE,
            next_mcc_va: MCC_VA_BASE,
        }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    fn push(&mut self, seg: Segment) -> Segment {
        debug_assert!(seg.base_va % 64 == 0 && seg.length % 64 == 0 && seg.length > 0);
        debug_assert!(
            self.segments.iter().all(|s| seg.end_va() <= s.base_va || s.end_va() <= seg.base_va),
            "segments must not overlap"
        );
        self.segments.push(seg);
        self.epoch += 1;
        seg
    }

    /// Append a far-direct segment over already-allocated node memory.
    pub fn map_far(
        &mut self,
        node: NodeId,
        node_offset: u64,
        length: u64,
        perms: Perms,
    ) -> Result<Segment, MapError> {
        if length == 0 || length % 64 != 0 {
            return Err(MapError::BadLength);
        }
        let base_va = self.next_far_va;
        self.next_far_va += length.next_multiple_of(64);
        Ok(self.push(Segment {
            base_va,
            length,
            perms,
            backing: Backing::FarDirect { node, offset: node_offset },
        }))
    }

    pub fn map_host(&mut self, host_offset: u64, length: u64) -> Result<Segment, MapError> {
        if length == 0 || length % 64 != 0 {
            return Err(MapError::BadLength);
        }
        let base_va = self.next_host_va;
        self.next_host_va += length.next_multiple_of(64);
        Ok(self.push(Segment {
            base_va,
            length,
            perms: Perms::RW,
            backing: Backing::HostLocal { offset: host_offset },
        }))
    }

    /// Carve the control+data window for a freshly created controller.
    pub fn map_mcc(&mut self, mcc: MccId) -> (Segment, Segment) {
        let base = self.next_mcc_va;
        self.next_mcc_va += 0x20000;
        let ctrl = self.push(Segment {
            base_va: base,
            length: CONTROL_AREA_BYTES,
            perms: Perms::RW,
            backing: Backing::MccControl { mcc },
        });
        let data = self.push(Segment {
            base_va: base + 0x10000,
            length: DATA_AREA_BYTES,
            perms: Perms::RW,
            backing: Backing::MccData { mcc },
        });
        (ctrl, data)
    }

    /// Remove the segment starting at `base_va`. The backing store is not
    /// reclaimed; this simulator never reuses node memory within a run.
    pub fn unmap(&mut self, base_va: u64) -> Option<Segment> {
        let idx = self.segments.iter().position(|s| s.base_va == base_va)?;
        let seg = self.segments.remove(idx);
        self.epoch += 1;
        Some(seg)
    }

    pub fn translate(
        &self,
        va: u64,
        access: Access,
        requester: Requester,
        strict_affinity: bool,
    ) -> Result<Location, Fault> {
        translate_in(&self.segments, va, access, requester, strict_affinity)
    }

    /// Translate a byte range that must fall entirely inside one segment.
    pub fn translate_range(
        &self,
        va: u64,
        len: u64,
        access: Access,
        requester: Requester,
        strict_affinity: bool,
    ) -> Result<Location, Fault> {
        range_check(&self.segments, va, len)?;
        translate_in(&self.segments, va, access, requester, strict_affinity)
    }

    /// The slice of this space a node needs for its own translations: every
    /// far segment (other nodes' included, so affinity violations fault as
    /// such) plus host-local segments (bulk-copy targets). Control and data
    /// regions are never replicated.
    pub fn segments_for_node(&self, _node: NodeId) -> Vec<Segment> {
        self.segments
            .iter()
            .filter(|s| {
                matches!(
                    s.backing,
                    Backing::FarDirect { .. } | Backing::HostLocal { .. }
                )
            })
            .copied()
            .collect()
    }

    pub fn find_segment(&self, va: u64) -> Option<&Segment> {
        self.segments.iter().find(|s| s.contains(va))
    }
}

fn range_check(segments: &[Segment], va: u64, len: u64) -> Result<(), Fault> {
    if len == 0 {
        return Ok(());
    }
    let seg = segments.iter().find(|s| s.contains(va)).ok_or(Fault::Unmapped { va })?;
    let end = va.checked_add(len).ok_or(Fault::Unmapped { va })?;
    if end > seg.end_va() {
        return Err(Fault::Unmapped { va: seg.end_va() });
    }
    Ok(())
}

/// A node's value-copied view of one application's relevant segments.
#[derive(Debug, Clone, Default)]
pub struct SegmentTable {
    pub epoch: u64,
    pub segments: Vec<Segment>,
}

impl SegmentTable {
    pub fn translate(
        &self,
        va: u64,
        access: Access,
        requester: Requester,
        strict_affinity: bool,
    ) -> Result<Location, Fault> {
        translate_in(&self.segments, va, access, requester, strict_affinity)
    }

    pub fn translate_range(
        &self,
        va: u64,
        len: u64,
        access: Access,
        requester: Requester,
        strict_affinity: bool,
    ) -> Result<Location, Fault> {
        range_check(&self.segments, va, len)?;
        translate_in(&self.segments, va, access, requester, strict_affinity)
    }
}

/// Bump allocator for one backing store (a node's DRAM or host memory).
#[derive(Debug, Clone)]
pub struct BumpAlloc {
    capacity: u64,
    used: u64,
}

impl BumpAlloc {
    pub fn new(capacity: u64) -> BumpAlloc {
        BumpAlloc { capacity, used: 0 }
    }

    pub fn alloc(&mut self, len: u64) -> Result<u64, MapError> {
        let len = len.next_multiple_of(64);
        if self.capacity - self.used < len {
            return Err(MapError::OutOfFarMemory);
        }
        let off = self.used;
        self.used += len;
        Ok(off)
    }

    pub fn used(&self) -> u64 {
        self.used
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const N0: NodeId = NodeId(0);
    const N1: NodeId = NodeId(1);

    fn mcc_req(affinity: NodeId) -> Requester {
        Requester::Mcc { mcc: MccId(9), affinity }
    }

    #[test]
    fn first_far_mapping_lands_at_region_base() {
        let mut a = AddressSpace::new();
        let seg = a.map_far(N0, 0, 4096, Perms::RW).unwrap();
        assert_eq!(seg.base_va, 0x1000_0000);
        assert_eq!(seg.length, 4096);
    }

    #[test]
    fn far_mappings_are_disjoint() {
        let mut a = AddressSpace::new();
        let s1 = a.map_far(N0, 0, 4096, Perms::RW).unwrap();
        let s2 = a.map_far(N0, 4096, 8192, Perms::RW).unwrap();
        assert!(s1.end_va() <= s2.base_va || s2.end_va() <= s1.base_va);
    }

    #[test]
    fn zero_length_is_rejected() {
        let mut a = AddressSpace::new();
        assert_eq!(a.map_far(N0, 0, 0, Perms::RW), Err(MapError::BadLength));
        assert_eq!(a.map_far(N0, 0, 100, Perms::RW), Err(MapError::BadLength));
    }

    #[test]
    fn host_read_of_far_segment_resolves() {
        let mut a = AddressSpace::new();
        let seg = a.map_far(N0, 128, 4096, Perms::RW).unwrap();
        let loc = a
            .translate(seg.base_va + 64, Access::Read, Requester::Host, true)
            .unwrap();
        assert_eq!(loc, Location::Far { node: N0, offset: 128 + 64 });
    }

    #[test]
    fn cross_node_access_is_affinity_violation_when_strict() {
        let mut a = AddressSpace::new();
        let seg = a.map_far(N1, 0, 4096, Perms::RW).unwrap();
        let err = a
            .translate(seg.base_va, Access::Read, mcc_req(N0), true)
            .unwrap_err();
        assert!(matches!(err, Fault::AffinityViolation { .. }));
        // relaxed mode permits it
        let loc = a.translate(seg.base_va, Access::Read, mcc_req(N0), false).unwrap();
        assert_eq!(loc, Location::Far { node: N1, offset: 0 });
    }

    #[test]
    fn write_to_readonly_is_permission_fault() {
        let mut a = AddressSpace::new();
        let seg = a.map_far(N0, 0, 4096, Perms::R).unwrap();
        let err = a
            .translate(seg.base_va, Access::Write, Requester::Host, true)
            .unwrap_err();
        assert!(matches!(err, Fault::Permission { .. }));
    }

    #[test]
    fn control_and_data_are_host_only() {
        let mut a = AddressSpace::new();
        let (ctrl, data) = a.map_mcc(MccId(1));
        assert!(a.translate(ctrl.base_va, Access::Read, Requester::Host, true).is_ok());
        for seg in [ctrl, data] {
            let err = a.translate(seg.base_va, Access::Read, mcc_req(N0), true).unwrap_err();
            assert!(matches!(err, Fault::Unmapped { .. }));
        }
    }

    #[test]
    fn mcc_may_reach_host_local_for_bulk_copies() {
        let mut a = AddressSpace::new();
        let seg = a.map_host(256, 4096).unwrap();
        let loc = a.translate(seg.base_va, Access::Write, mcc_req(N0), true).unwrap();
        assert_eq!(loc, Location::Host { offset: 256 });
    }

    #[test]
    fn unmap_then_translate_faults() {
        let mut a = AddressSpace::new();
        let seg = a.map_far(N0, 0, 4096, Perms::RW).unwrap();
        let e0 = a.epoch();
        assert!(a.unmap(seg.base_va).is_some());
        assert!(a.epoch() > e0);
        let err = a.translate(seg.base_va, Access::Read, Requester::Host, true).unwrap_err();
        assert!(matches!(err, Fault::Unmapped { .. }));
    }

    #[test]
    fn replica_with_no_relevant_segments_is_empty() {
        let mut a = AddressSpace::new();
        a.map_mcc(MccId(3));
        assert!(a.segments_for_node(N0).is_empty());
    }

    #[test]
    fn range_must_stay_inside_one_segment() {
        let mut a = AddressSpace::new();
        let seg = a.map_far(N0, 0, 4096, Perms::RW).unwrap();
        assert!(a
            .translate_range(seg.base_va + 4032, 64, Access::Read, Requester::Host, true)
            .is_ok());
        let err = a
            .translate_range(seg.base_va + 4032, 128, Access::Read, Requester::Host, true)
            .unwrap_err();
        assert!(matches!(err, Fault::Unmapped { .. }));
    }

    #[test]
    fn bump_alloc_exhausts() {
        let mut b = BumpAlloc::new(8192);
        assert_eq!(b.alloc(4096), Ok(0));
        assert_eq!(b.alloc(4096), Ok(4096));
        assert_eq!(b.alloc(64), Err(MapError::OutOfFarMemory));
    }

    proptest! {
        /// Any sequence of mappings yields pairwise non-overlapping segments,
        /// and node replicas agree with the master on every probe when their
        /// epochs match.
        #[test]
        fn segments_disjoint_and_replica_agrees(
            lens in proptest::collection::vec(1u64..64, 1..12),
            kinds in proptest::collection::vec(0u8..3, 1..12),
            probes in proptest::collection::vec(0u64..0x3000_0000, 64),
        ) {
            let mut a = AddressSpace::new();
            for (i, (l, k)) in lens.iter().zip(kinds.iter()).enumerate() {
                let len = l * 64;
                match k % 3 {
                    0 => { a.map_far(N0, i as u64 * 0x10000, len, Perms::RW).unwrap(); }
                    1 => { a.map_host(i as u64 * 0x10000, len).unwrap(); }
                    _ => { a.map_mcc(MccId(i as u32)); }
                }
            }
            let segs = a.segments();
            for (i, s) in segs.iter().enumerate() {
                for t in &segs[i + 1..] {
                    prop_assert!(s.end_va() <= t.base_va || t.end_va() <= s.base_va);
                }
            }
            let replica = SegmentTable { epoch: a.epoch(), segments: a.segments_for_node(N0) };
            for va in probes {
                for access in [Access::Read, Access::Write] {
                    let master = a.translate(va, access, mcc_req(N0), true);
                    let node = replica.translate(va, access, mcc_req(N0), true);
                    prop_assert_eq!(master, node);
                }
            }
        }
    }
}
