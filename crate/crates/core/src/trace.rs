//! Processed-event log and its 64-bit hash.
//!
//! The hash folds every processed event (time, sequence number, target, and
//! the payload's identifying fields) through FNV-1a. Two runs of the same
//! scenario with the same seed must produce the same hash; the CLI prints it
//! and the acceptance suite compares reruns.

use crate::engine::{ActorId, DramClient, EventPayload, HostStepKind, SimEvent};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone)]
pub struct TraceLog {
    hash: u64,
    pub count: u64,
    /// When set, formatted lines are retained (the CLI's `--trace`).
    pub lines: Option<Vec<String>>,
}

impl Default for TraceLog {
    fn default() -> Self {
        TraceLog::new(false)
    }
}

impl TraceLog {
    pub fn new(capture_lines: bool) -> TraceLog {
        TraceLog {
            hash: FNV_OFFSET,
            count: 0,
            lines: if capture_lines { Some(Vec::new()) } else { None },
        }
    }

    pub fn hash(&self) -> u64 {
        self.hash
    }

    fn eat(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.hash ^= *b as u64;
            self.hash = self.hash.wrapping_mul(FNV_PRIME);
        }
    }

    fn eat_u64(&mut self, v: u64) {
        self.eat(&v.to_le_bytes());
    }

    pub fn record(&mut self, ev: &SimEvent) {
        self.count += 1;
        self.eat_u64(ev.at.ns());
        self.eat_u64(ev.seq);
        match ev.target {
            ActorId::Host => self.eat_u64(u64::MAX),
            ActorId::Node(n) => self.eat_u64(n.0 as u64),
        }
        match &ev.payload {
            EventPayload::MessageDelivery(m) => {
                self.eat(b"M");
                self.eat(m.kind.name().as_bytes());
                self.eat_u64(m.line_addr);
            }
            EventPayload::DramCompletion(c) => {
                self.eat(b"R");
                match c {
                    DramClient::Mcc { mcc, tag } => {
                        self.eat_u64(mcc.0 as u64);
                        self.eat_u64(*tag as u64);
                    }
                    DramClient::HostServe { line_va, .. } => {
                        self.eat_u64(u64::MAX);
                        self.eat_u64(*line_va);
                    }
                }
            }
            EventPayload::DmaCompletion { mcc, tag } => {
                self.eat(b"D");
                self.eat_u64(mcc.0 as u64);
                self.eat_u64(*tag as u64);
            }
            EventPayload::DispatchQuantum { processor } => {
                self.eat(b"Q");
                self.eat_u64(*processor as u64);
            }
            EventPayload::HostScriptStep { app, kind } => {
                self.eat(b"S");
                self.eat_u64(app.0 as u64);
                let t = match kind {
                    HostStepKind::Compute { token } => *token,
                    HostStepKind::Timeout { token } => *token | (1 << 63),
                };
                self.eat_u64(t);
            }
        }
        if let Some(lines) = &mut self.lines {
            lines.push(format_event(ev));
        }
    }
}

pub fn format_event(ev: &SimEvent) -> String {
    let what = match &ev.payload {
        EventPayload::MessageDelivery(m) => {
            format!("{} addr={:#x} {}->{}", m.kind.name(), m.line_addr, m.src, m.dst)
        }
        EventPayload::DramCompletion(DramClient::Mcc { mcc, tag }) => {
            format!("dram-done {mcc} tag={tag}")
        }
        EventPayload::DramCompletion(DramClient::HostServe { line_va, .. }) => {
            format!("dram-serve addr={line_va:#x}")
        }
        EventPayload::DmaCompletion { mcc, tag } => format!("dma-done {mcc} tag={tag}"),
        EventPayload::DispatchQuantum { processor } => format!("quantum p{processor}"),
        EventPayload::HostScriptStep { app, kind } => match kind {
            HostStepKind::Compute { token } => format!("host-step {app} #{token}"),
            HostStepKind::Timeout { token } => format!("host-timeout {app} #{token}"),
        },
    };
    format!("t={} seq={} {} {}", ev.at.ns(), ev.seq, ev.target, what)
}
