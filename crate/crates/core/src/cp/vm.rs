//! Event-driven interpreter for one controller instance.
//!
//! The VM is a plain state machine: a node dispatches it with a fuel budget,
//! it executes instructions until it halts, faults, yields, blocks, or runs
//! out of fuel. All interaction with the node (translation, DRAM, streaming,
//! bulk copies) goes through [`CpEnv`], which keeps the interpreter
//! independently testable.
//!
//! Memory timing model: loads and stores sample/apply memory at issue time;
//! the DRAM latency shows up as a tagged completion event delivered
//! `node_dram_latency` later, which is when a load's value lands in its
//! destination register. `WAITT` blocks on a specific tag. Tag 0 requests no
//! completion and is valid for stores and bulk copies only. In-flight tags
//! must be distinct; reuse faults the program.

use std::collections::VecDeque;

use crate::address_space::Fault;
use crate::interconnect::CacheLine;

use super::image::ChannelProgramImage;
use super::isa::{decode_word, EventSet, Opcode};

pub const EVENT_QUEUE_BOUND: usize = 1024;
pub const DEFAULT_STREAM_CREDITS: u32 = 8;
pub const DATA_AREA_SLOTS: u32 = 1024;

/// Why a translation-dependent operation could not run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XlateErr {
    Fault(Fault),
    /// The node's segment replica is older than the master table; the access
    /// must be retried once the in-flight sync lands.
    StaleReplica,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagKind {
    Dram,
    Dma,
}

/// Events delivered to a program's FIFO queue (or, for completions and
/// lifecycle, applied directly to VM state).
#[derive(Debug, Clone, PartialEq)]
pub enum CpEvent {
    HostLineWrite { offset: u32, line: CacheLine },
    HostLineRead { offset: u32 },
    Observe { line_addr: u64, write: bool },
}

impl CpEvent {
    pub fn kind_bit(&self) -> u16 {
        match self {
            CpEvent::HostLineWrite { .. } => EventSet::HOST_WRITE,
            CpEvent::HostLineRead { .. } => EventSet::HOST_READ,
            CpEvent::Observe { .. } => EventSet::OBSERVE,
        }
    }
}

/// Fault classes surfaced to the host through the control area.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum FaultCode {
    None = 0,
    NotLoaded = 1,
    Unmapped = 2,
    Permission = 3,
    AffinityViolation = 4,
    IllegalOpcode = 5,
    DivisionByZero = 6,
    EventOverflow = 7,
    BadTag = 8,
    OutOfRange = 9,
    BadPc = 10,
    UndeclaredEvent = 11,
    NoPendingRead = 12,
    BadParam = 13,
    BadAlign = 14,
    BadImage = 15,
}

impl From<Fault> for FaultCode {
    fn from(f: Fault) -> FaultCode {
        match f {
            Fault::Unmapped { .. } => FaultCode::Unmapped,
            Fault::Permission { .. } => FaultCode::Permission,
            Fault::AffinityViolation { .. } => FaultCode::AffinityViolation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultInfo {
    pub code: FaultCode,
    pub pc: u32,
}

impl FaultInfo {
    /// Packed form for the control area's FAULT_INFO register.
    pub fn encode(&self) -> u64 {
        self.code as u64 | ((self.pc as u64) << 16)
    }
}

/// What a blocked program is waiting for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaitCond {
    /// An event whose kind is in the filter.
    Events(u16),
    /// Completion of a specific in-flight tag.
    Tag(u8),
    /// A stream credit.
    Credit,
    /// The node's segment replica to catch up with the master.
    Resync,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VmStatus {
    #[default]
    Idle,
    Ready,
    Running,
    Waiting(WaitCond),
    Halted,
    Faulted(FaultInfo),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Yielded,
    Waiting,
    Halted,
    Faulted,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PendingTag {
    kind: TagKind,
    /// For loads: destination register and the value sampled at issue.
    dest: Option<(u8, u64)>,
}

/// Node-side services an executing program uses. Implementations translate
/// through the node's segment replica, account DRAM bytes, and schedule the
/// asynchronous completions.
pub trait CpEnv {
    fn load8(&mut self, va: u64, intra_ns: u64) -> Result<u64, XlateErr>;
    fn store8(&mut self, va: u64, value: u64, intra_ns: u64) -> Result<(), XlateErr>;
    fn read_line(&mut self, va: u64, intra_ns: u64) -> Result<CacheLine, XlateErr>;
    fn write_line(&mut self, va: u64, line: CacheLine, intra_ns: u64) -> Result<(), XlateErr>;
    /// Schedule the DramCompletion/DmaCompletion for an issued tag.
    fn schedule_tag(&mut self, tag: u8, kind: TagKind, intra_ns: u64);
    /// Push a streamed line toward the host data-area mailbox.
    fn send_line(&mut self, offset: u32, line: CacheLine, intra_ns: u64);
    /// Answer a pending host read; false if none is outstanding at `offset`.
    fn reply_line(&mut self, offset: u32, line: CacheLine, intra_ns: u64) -> bool;
    /// Validate and launch a bulk copy; schedules the completion itself.
    fn dma(&mut self, tag: u8, dst: u64, src: u64, len: u64, intra_ns: u64) -> Result<(), XlateErr>;
    fn subscribe(&mut self);
    /// Scheduler charge (in fuel units) for one 8-byte DRAM access.
    fn charge_dram_word(&self) -> i64;
    /// Charge for a full line touched in DRAM (stream/reply/recv).
    fn charge_dram_line(&self) -> i64;
    /// Charge for a bulk copy of `len` bytes.
    fn charge_dma(&self, len: u64) -> i64;
}

/// Register file, program counter, event queue, and stream-flow state for
/// one controller instance.
#[derive(Debug, Clone, Default)]
pub struct VmState {
    pub pc: u32,
    pub regs: [u64; 16],
    flag_eq: bool,
    flag_lt: bool,
    pub status: VmStatus,
    events: VecDeque<CpEvent>,
    pending: std::collections::BTreeMap<u8, PendingTag>,
    /// Completion kinds seen since the last WAIT that consumed them.
    sticky: u16,
    pub stream_credits: u32,
    max_credits: u32,
    pub subscribed: bool,
    stop_requested: bool,
    params: [u64; 8],
    /// Cumulative executed instructions (scheduling statistics).
    pub instructions: u64,
    pub stream_lines: u64,
}

impl VmState {
    pub fn new() -> VmState {
        VmState::default()
    }

    /// Load parameters and arm the program for dispatch.
    pub fn start(&mut self, image: &ChannelProgramImage, params: &[u64]) {
        debug_assert!(params.len() <= 8);
        *self = VmState {
            pc: image.entry_pc,
            stream_credits: DEFAULT_STREAM_CREDITS,
            max_credits: DEFAULT_STREAM_CREDITS,
            status: VmStatus::Ready,
            instructions: self.instructions,
            stream_lines: self.stream_lines,
            ..VmState::default()
        };
        self.params[..params.len()].copy_from_slice(params);
    }

    pub fn reset(&mut self) {
        *self = VmState::default();
    }

    pub fn is_ready(&self) -> bool {
        matches!(self.status, VmStatus::Ready)
    }

    pub fn is_waiting(&self) -> bool {
        matches!(self.status, VmStatus::Waiting(_))
    }

    pub fn fault_info(&self) -> Option<FaultInfo> {
        match self.status {
            VmStatus::Faulted(fi) => Some(fi),
            _ => None,
        }
    }

    pub fn queued_events(&self) -> usize {
        self.events.len()
    }

    fn fault(&mut self, code: FaultCode) -> StepOutcome {
        self.status = VmStatus::Faulted(FaultInfo { code, pc: self.pc });
        StepOutcome::Faulted
    }

    fn wake(&mut self) {
        self.status = VmStatus::Ready;
    }

    /// Append an event to the FIFO queue. Returns true if this woke the
    /// program. Events to idle, halted, or faulted instances are dropped.
    pub fn deliver(&mut self, ev: CpEvent) -> bool {
        match self.status {
            VmStatus::Idle | VmStatus::Halted | VmStatus::Faulted(_) => return false,
            _ => {}
        }
        if self.events.len() >= EVENT_QUEUE_BOUND {
            self.fault(FaultCode::EventOverflow);
            return false;
        }
        let bit = ev.kind_bit();
        self.events.push_back(ev);
        if let VmStatus::Waiting(WaitCond::Events(filter)) = self.status {
            if filter & bit != 0 {
                self.wake();
                return true;
            }
        }
        false
    }

    /// A tagged DRAM or bulk-copy completion arrived.
    pub fn on_tag_done(&mut self, tag: u8, kind: TagKind) -> bool {
        if let Some(p) = self.pending.remove(&tag) {
            if let Some((reg, value)) = p.dest {
                self.regs[reg as usize] = value;
            }
        }
        let bit = match kind {
            TagKind::Dram => EventSet::DRAM,
            TagKind::Dma => EventSet::DMA,
        };
        self.sticky |= bit;
        match self.status {
            VmStatus::Waiting(WaitCond::Tag(t)) if t == tag => {
                self.wake();
                true
            }
            VmStatus::Waiting(WaitCond::Events(filter)) if filter & bit != 0 => {
                self.wake();
                true
            }
            _ => false,
        }
    }

    /// The host consumed a streamed line; one credit returns.
    pub fn on_credit_return(&mut self) -> bool {
        if self.stream_credits < self.max_credits {
            self.stream_credits += 1;
        }
        if matches!(self.status, VmStatus::Waiting(WaitCond::Credit)) {
            self.wake();
            return true;
        }
        false
    }

    /// Stop always wakes a waiting program; it halts at its next dispatch.
    pub fn request_stop(&mut self) -> bool {
        match self.status {
            VmStatus::Ready | VmStatus::Running => {
                self.stop_requested = true;
                false
            }
            VmStatus::Waiting(_) => {
                self.stop_requested = true;
                self.wake();
                true
            }
            _ => false,
        }
    }

    /// The node applied a fresh segment replica.
    pub fn on_resync(&mut self) -> bool {
        if matches!(self.status, VmStatus::Waiting(WaitCond::Resync)) {
            self.wake();
            return true;
        }
        false
    }

    fn first_event<F: Fn(&CpEvent) -> bool>(&self, f: F) -> Option<usize> {
        self.events.iter().position(f)
    }

    /// Run up to `*fuel` units of work. Each instruction costs 1; when
    /// `charge_mem` is set (weighted fair queueing), DRAM and interconnect
    /// use is billed to the fuel as well. Returns the outcome and how many
    /// instructions executed (1 ns each of processor time).
    pub fn step(
        &mut self,
        image: &ChannelProgramImage,
        env: &mut dyn CpEnv,
        fuel: &mut i64,
        charge_mem: bool,
    ) -> (StepOutcome, u32) {
        debug_assert!(self.is_ready(), "step() requires a Ready program");
        self.status = VmStatus::Running;
        let mut executed: u32 = 0;

        macro_rules! charge {
            ($units:expr) => {
                if charge_mem {
                    *fuel -= $units;
                }
            };
        }

        loop {
            if self.stop_requested {
                self.status = VmStatus::Halted;
                return (StepOutcome::Halted, executed);
            }
            if *fuel <= 0 {
                self.status = VmStatus::Ready;
                return (StepOutcome::BudgetExhausted, executed);
            }
            let Some(&word) = image.code.get(self.pc as usize) else {
                return (self.fault(FaultCode::BadPc), executed);
            };
            let instr = match decode_word(word) {
                Ok(i) => i,
                Err(_) => return (self.fault(FaultCode::IllegalOpcode), executed),
            };
            // The instruction issues now; completions are timed from here.
            let intra = executed as u64;
            executed += 1;
            self.instructions += 1;
            *fuel -= 1;

            let rd = instr.rd as usize;
            let ra = instr.ra as usize;
            let rb = instr.rb as usize;
            let mut next_pc = self.pc + 1;

            macro_rules! xlate {
                ($e:expr) => {
                    match $e {
                        Ok(v) => v,
                        Err(XlateErr::Fault(f)) => return (self.fault(f.into()), executed),
                        Err(XlateErr::StaleReplica) => {
                            self.status = VmStatus::Waiting(WaitCond::Resync);
                            return (StepOutcome::Waiting, executed);
                        }
                    }
                };
            }

            match instr.op {
                Opcode::Halt => {
                    self.status = VmStatus::Halted;
                    return (StepOutcome::Halted, executed);
                }
                Opcode::Yield => {
                    self.pc = next_pc;
                    self.status = VmStatus::Ready;
                    return (StepOutcome::Yielded, executed);
                }
                Opcode::Wait => {
                    let filter = instr.imm as u16 & EventSet::ALL;
                    if !image.declared_events.contains_all(filter) {
                        return (self.fault(FaultCode::UndeclaredEvent), executed);
                    }
                    if self.sticky & filter != 0 {
                        self.sticky &= !filter;
                    } else if let Some(idx) = self.first_event(|e| e.kind_bit() & filter != 0) {
                        // Observe events are left for STAT_NEXT to pop.
                        if !matches!(self.events[idx], CpEvent::Observe { .. }) {
                            self.events.remove(idx);
                        }
                    } else {
                        self.status = VmStatus::Waiting(WaitCond::Events(filter));
                        return (StepOutcome::Waiting, executed);
                    }
                }
                Opcode::Waitt => {
                    let tag = instr.imm as u8;
                    if self.pending.contains_key(&tag) {
                        self.status = VmStatus::Waiting(WaitCond::Tag(tag));
                        return (StepOutcome::Waiting, executed);
                    }
                }
                Opcode::SetCredits => {
                    let c = instr.imm.clamp(1, 256);
                    self.stream_credits = c;
                    self.max_credits = c;
                }
                Opcode::MovR => self.regs[rd] = self.regs[ra],
                Opcode::MovI => self.regs[rd] = instr.imm_sx(),
                Opcode::AddR => self.regs[rd] = self.regs[ra].wrapping_add(self.regs[rb]),
                Opcode::AddI => self.regs[rd] = self.regs[ra].wrapping_add(instr.imm_sx()),
                Opcode::SubR => self.regs[rd] = self.regs[ra].wrapping_sub(self.regs[rb]),
                Opcode::SubI => self.regs[rd] = self.regs[ra].wrapping_sub(instr.imm_sx()),
                Opcode::MulR => self.regs[rd] = self.regs[ra].wrapping_mul(self.regs[rb]),
                Opcode::MulI => self.regs[rd] = self.regs[ra].wrapping_mul(instr.imm_sx()),
                Opcode::DivR => {
                    if self.regs[rb] == 0 {
                        return (self.fault(FaultCode::DivisionByZero), executed);
                    }
                    self.regs[rd] = self.regs[ra] / self.regs[rb];
                }
                Opcode::DivI => {
                    if instr.imm_sx() == 0 {
                        return (self.fault(FaultCode::DivisionByZero), executed);
                    }
                    self.regs[rd] = self.regs[ra] / instr.imm_sx();
                }
                Opcode::AndR => self.regs[rd] = self.regs[ra] & self.regs[rb],
                Opcode::AndI => self.regs[rd] = self.regs[ra] & instr.imm_sx(),
                Opcode::OrR => self.regs[rd] = self.regs[ra] | self.regs[rb],
                Opcode::OrI => self.regs[rd] = self.regs[ra] | instr.imm_sx(),
                Opcode::XorR => self.regs[rd] = self.regs[ra] ^ self.regs[rb],
                Opcode::XorI => self.regs[rd] = self.regs[ra] ^ instr.imm_sx(),
                Opcode::ShlR => self.regs[rd] = self.regs[ra] << (self.regs[rb] & 63),
                Opcode::ShlI => self.regs[rd] = self.regs[ra] << (instr.imm as u64 & 63),
                Opcode::ShrR => self.regs[rd] = self.regs[ra] >> (self.regs[rb] & 63),
                Opcode::ShrI => self.regs[rd] = self.regs[ra] >> (instr.imm as u64 & 63),
                Opcode::CmpR => {
                    self.flag_eq = self.regs[ra] == self.regs[rb];
                    self.flag_lt = self.regs[ra] < self.regs[rb];
                }
                Opcode::CmpI => {
                    self.flag_eq = self.regs[ra] == instr.imm_sx();
                    self.flag_lt = self.regs[ra] < instr.imm_sx();
                }
                Opcode::Br => next_pc = instr.imm,
                Opcode::Beq => {
                    if self.flag_eq {
                        next_pc = instr.imm;
                    }
                }
                Opcode::Blt => {
                    if self.flag_lt {
                        next_pc = instr.imm;
                    }
                }
                Opcode::Lda => {
                    let tag = instr.imm as u8;
                    if tag == 0 || self.pending.contains_key(&tag) {
                        return (self.fault(FaultCode::BadTag), executed);
                    }
                    let va = self.regs[ra];
                    if va % 8 != 0 {
                        return (self.fault(FaultCode::BadAlign), executed);
                    }
                    let value = xlate!(env.load8(va, intra));
                    self.pending.insert(tag, PendingTag { kind: TagKind::Dram, dest: Some((instr.rd, value)) });
                    env.schedule_tag(tag, TagKind::Dram, intra);
                    charge!(env.charge_dram_word());
                }
                Opcode::Sta => {
                    let tag = instr.imm as u8;
                    if tag != 0 && self.pending.contains_key(&tag) {
                        return (self.fault(FaultCode::BadTag), executed);
                    }
                    let va = self.regs[ra];
                    if va % 8 != 0 {
                        return (self.fault(FaultCode::BadAlign), executed);
                    }
                    xlate!(env.store8(va, self.regs[rb], intra));
                    if tag != 0 {
                        self.pending.insert(tag, PendingTag { kind: TagKind::Dram, dest: None });
                        env.schedule_tag(tag, TagKind::Dram, intra);
                    }
                    charge!(env.charge_dram_word());
                }
                Opcode::SendLine => {
                    let off = self.regs[rd];
                    if off % 64 != 0 || off >= DATA_AREA_SLOTS as u64 * 64 {
                        return (self.fault(FaultCode::OutOfRange), executed);
                    }
                    if self.stream_credits == 0 {
                        self.status = VmStatus::Waiting(WaitCond::Credit);
                        return (StepOutcome::Waiting, executed);
                    }
                    let va = self.regs[ra];
                    if va % 64 != 0 {
                        return (self.fault(FaultCode::BadAlign), executed);
                    }
                    let line = xlate!(env.read_line(va, intra));
                    self.stream_credits -= 1;
                    self.stream_lines += 1;
                    env.send_line(off as u32, line, intra);
                    charge!(env.charge_dram_line());
                }
                Opcode::RecvLine => {
                    let Some(idx) = self.first_event(|e| matches!(e, CpEvent::HostLineWrite { .. })) else {
                        self.status = VmStatus::Waiting(WaitCond::Events(EventSet::HOST_WRITE));
                        return (StepOutcome::Waiting, executed);
                    };
                    let va = self.regs[ra];
                    if va % 64 != 0 {
                        return (self.fault(FaultCode::BadAlign), executed);
                    }
                    let Some(CpEvent::HostLineWrite { offset, line }) = self.events.remove(idx) else {
                        unreachable!()
                    };
                    xlate!(env.write_line(va, line, intra));
                    self.regs[rd] = offset as u64;
                    charge!(env.charge_dram_line());
                }
                Opcode::ReplyLine => {
                    let off = self.regs[rd];
                    if off % 64 != 0 || off >= DATA_AREA_SLOTS as u64 * 64 {
                        return (self.fault(FaultCode::OutOfRange), executed);
                    }
                    let va = self.regs[ra];
                    if va % 64 != 0 {
                        return (self.fault(FaultCode::BadAlign), executed);
                    }
                    let line = xlate!(env.read_line(va, intra));
                    if !env.reply_line(off as u32, line, intra) {
                        return (self.fault(FaultCode::NoPendingRead), executed);
                    }
                    charge!(env.charge_dram_line());
                }
                Opcode::Dma => {
                    let tag = instr.imm as u8;
                    if tag != 0 && self.pending.contains_key(&tag) {
                        return (self.fault(FaultCode::BadTag), executed);
                    }
                    let (dst, src, len) = (self.regs[rd], self.regs[ra], self.regs[rb]);
                    if len == 0 {
                        return (self.fault(FaultCode::OutOfRange), executed);
                    }
                    if dst % 64 != 0 || src % 64 != 0 || len % 64 != 0 {
                        return (self.fault(FaultCode::BadAlign), executed);
                    }
                    xlate!(env.dma(tag, dst, src, len, intra));
                    if tag != 0 {
                        self.pending.insert(tag, PendingTag { kind: TagKind::Dma, dest: None });
                    }
                    charge!(env.charge_dma(len));
                }
                Opcode::StatSub => {
                    self.subscribed = true;
                    env.subscribe();
                }
                Opcode::StatNext => {
                    if let Some(idx) = self.first_event(|e| matches!(e, CpEvent::Observe { .. })) {
                        let Some(CpEvent::Observe { line_addr, write }) = self.events.remove(idx) else {
                            unreachable!()
                        };
                        self.regs[rd] = line_addr | write as u64;
                    } else {
                        self.regs[rd] = u64::MAX;
                    }
                }
                Opcode::Param => {
                    let idx = instr.imm;
                    if idx >= image.param_count as u32 {
                        return (self.fault(FaultCode::BadParam), executed);
                    }
                    self.regs[rd] = self.params[idx as usize];
                }
            }
            self.pc = next_pc;
        }
    }
}

#[cfg(test)]
pub(crate) mod testenv {
    use super::*;

    /// Flat-memory environment for interpreter tests: addresses below the
    /// buffer length translate, everything else faults.
    pub struct MockEnv {
        pub mem: Vec<u8>,
        pub sent: Vec<(u32, CacheLine)>,
        pub replied: Vec<(u32, CacheLine)>,
        pub pending_reads: std::collections::BTreeSet<u32>,
        pub scheduled: Vec<(u8, TagKind)>,
        pub dmas: Vec<(u8, u64, u64, u64)>,
        pub subscribed: bool,
        pub stale: bool,
    }

    impl MockEnv {
        pub fn new(size: usize) -> MockEnv {
            MockEnv {
                mem: vec![0; size],
                sent: Vec::new(),
                replied: Vec::new(),
                pending_reads: std::collections::BTreeSet::new(),
                scheduled: Vec::new(),
                dmas: Vec::new(),
                subscribed: false,
                stale: false,
            }
        }

        fn check(&self, va: u64, len: u64) -> Result<usize, XlateErr> {
            if self.stale {
                return Err(XlateErr::StaleReplica);
            }
            if (va + len) as usize <= self.mem.len() {
                Ok(va as usize)
            } else {
                Err(XlateErr::Fault(Fault::Unmapped { va }))
            }
        }
    }

    impl CpEnv for MockEnv {
        fn load8(&mut self, va: u64, _i: u64) -> Result<u64, XlateErr> {
            let o = self.check(va, 8)?;
            Ok(u64::from_le_bytes(self.mem[o..o + 8].try_into().unwrap()))
        }
        fn store8(&mut self, va: u64, value: u64, _i: u64) -> Result<(), XlateErr> {
            let o = self.check(va, 8)?;
            self.mem[o..o + 8].copy_from_slice(&value.to_le_bytes());
            Ok(())
        }
        fn read_line(&mut self, va: u64, _i: u64) -> Result<CacheLine, XlateErr> {
            let o = self.check(va, 64)?;
            Ok(CacheLine::from_slice(&self.mem[o..o + 64]))
        }
        fn write_line(&mut self, va: u64, line: CacheLine, _i: u64) -> Result<(), XlateErr> {
            let o = self.check(va, 64)?;
            self.mem[o..o + 64].copy_from_slice(&line.0);
            Ok(())
        }
        fn schedule_tag(&mut self, tag: u8, kind: TagKind, _i: u64) {
            self.scheduled.push((tag, kind));
        }
        fn send_line(&mut self, offset: u32, line: CacheLine, _i: u64) {
            self.sent.push((offset, line));
        }
        fn reply_line(&mut self, offset: u32, line: CacheLine, _i: u64) -> bool {
            if self.pending_reads.remove(&offset) {
                self.replied.push((offset, line));
                true
            } else {
                false
            }
        }
        fn dma(&mut self, tag: u8, dst: u64, src: u64, len: u64, _i: u64) -> Result<(), XlateErr> {
            self.check(src, len)?;
            self.check(dst, len)?;
            self.dmas.push((tag, dst, src, len));
            if tag != 0 {
                self.scheduled.push((tag, TagKind::Dma));
            }
            Ok(())
        }
        fn subscribe(&mut self) {
            self.subscribed = true;
        }
        fn charge_dram_word(&self) -> i64 {
            80
        }
        fn charge_dram_line(&self) -> i64 {
            82
        }
        fn charge_dma(&self, len: u64) -> i64 {
            (len / 52) as i64
        }
    }
}
