//! Fixed-width instruction encoding.
//!
//! Every instruction is one little-endian 8-byte word:
//!
//! ```text
//! byte 0      opcode
//! byte 1      rD << 4 | rA
//! byte 2      rB << 4 | pad
//! byte 3      reserved (0)
//! bytes 4..8  imm32 (little endian)
//! ```
//!
//! Sixteen 64-bit registers, wrap-around arithmetic, unsigned compares.
//! Branch targets are absolute instruction indices carried in `imm32`;
//! there are no indirect jumps, which keeps the static safety checks
//! decidable. Asynchronous memory instructions carry a small tag in
//! `imm32`; tag 0 means "no completion wanted" and is valid for stores and
//! bulk copies only.

/// Event kinds a program can wait on, as a bitmap. Doubles as the
/// `declared_events` field of the image header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EventSet(pub u16);

impl EventSet {
    pub const NONE: EventSet = EventSet(0);
    pub const HOST_WRITE: u16 = 1 << 0;
    pub const HOST_READ: u16 = 1 << 1;
    pub const DRAM: u16 = 1 << 2;
    pub const DMA: u16 = 1 << 3;
    pub const OBSERVE: u16 = 1 << 4;
    pub const STOP: u16 = 1 << 5;
    pub const ALL: u16 = 0x3f;

    pub fn contains_all(self, bits: u16) -> bool {
        bits & !self.0 == 0
    }

    pub fn names(self) -> Vec<&'static str> {
        let mut v = Vec::new();
        for (bit, name) in EVENT_NAMES {
            if self.0 & bit != 0 {
                v.push(*name);
            }
        }
        v
    }
}

pub const EVENT_NAMES: &[(u16, &str)] = &[
    (EventSet::HOST_WRITE, "HOST_WRITE"),
    (EventSet::HOST_READ, "HOST_READ"),
    (EventSet::DRAM, "DRAM"),
    (EventSet::DMA, "DMA"),
    (EventSet::OBSERVE, "OBSERVE"),
    (EventSet::STOP, "STOP"),
];

pub fn event_bit_by_name(name: &str) -> Option<u16> {
    if name == "NONE" {
        return Some(0);
    }
    EVENT_NAMES.iter().find(|(_, n)| *n == name).map(|(b, _)| *b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Opcode {
    Halt = 0x00,
    Yield = 0x01,
    Wait = 0x02,
    Waitt = 0x03,
    SetCredits = 0x04,

    MovR = 0x10,
    MovI = 0x11,
    AddR = 0x12,
    AddI = 0x13,
    SubR = 0x14,
    SubI = 0x15,
    MulR = 0x16,
    MulI = 0x17,
    DivR = 0x18,
    DivI = 0x19,
    AndR = 0x1a,
    AndI = 0x1b,
    OrR = 0x1c,
    OrI = 0x1d,
    XorR = 0x1e,
    XorI = 0x1f,
    ShlR = 0x20,
    ShlI = 0x21,
    ShrR = 0x22,
    ShrI = 0x23,
    CmpR = 0x24,
    CmpI = 0x25,

    Br = 0x30,
    Beq = 0x31,
    Blt = 0x32,

    Lda = 0x40,
    Sta = 0x41,
    SendLine = 0x42,
    RecvLine = 0x43,
    ReplyLine = 0x44,
    Dma = 0x45,
    StatSub = 0x46,
    StatNext = 0x47,
    Param = 0x48,
}

impl Opcode {
    pub fn from_u8(b: u8) -> Option<Opcode> {
        use Opcode::*;
        Some(match b {
            0x00 => Halt,
            0x01 => Yield,
            0x02 => Wait,
            0x03 => Waitt,
            0x04 => SetCredits,
            0x10 => MovR,
            0x11 => MovI,
            0x12 => AddR,
            0x13 => AddI,
            0x14 => SubR,
            0x15 => SubI,
            0x16 => MulR,
            0x17 => MulI,
            0x18 => DivR,
            0x19 => DivI,
            0x1a => AndR,
            0x1b => AndI,
            0x1c => OrR,
            0x1d => OrI,
            0x1e => XorR,
            0x1f => XorI,
            0x20 => ShlR,
            0x21 => ShlI,
            0x22 => ShrR,
            0x23 => ShrI,
            0x24 => CmpR,
            0x25 => CmpI,
            0x30 => Br,
            0x31 => Beq,
            0x32 => Blt,
            0x40 => Lda,
            0x41 => Sta,
            0x42 => SendLine,
            0x43 => RecvLine,
            0x44 => ReplyLine,
            0x45 => Dma,
            0x46 => StatSub,
            0x47 => StatNext,
            0x48 => Param,
            _ => return None,
        })
    }
}

/// One decoded instruction word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Instr {
    pub op: Opcode,
    pub rd: u8,
    pub ra: u8,
    pub rb: u8,
    pub imm: u32,
}

impl Instr {
    pub fn new(op: Opcode) -> Instr {
        Instr { op, rd: 0, ra: 0, rb: 0, imm: 0 }
    }

    pub fn rd(mut self, r: u8) -> Instr {
        self.rd = r;
        self
    }
    pub fn ra(mut self, r: u8) -> Instr {
        self.ra = r;
        self
    }
    pub fn rb(mut self, r: u8) -> Instr {
        self.rb = r;
        self
    }
    pub fn imm(mut self, v: u32) -> Instr {
        self.imm = v;
        self
    }

    /// Sign-extended immediate, the form ALU ops consume.
    pub fn imm_sx(&self) -> u64 {
        self.imm as i32 as i64 as u64
    }
}

pub fn encode(i: &Instr) -> u64 {
    debug_assert!(i.rd < 16 && i.ra < 16 && i.rb < 16);
    let b0 = i.op as u8 as u64;
    let b1 = (((i.rd & 0xf) << 4) | (i.ra & 0xf)) as u64;
    let b2 = ((i.rb & 0xf) << 4) as u64;
    b0 | (b1 << 8) | (b2 << 16) | ((i.imm as u64) << 32)
}

/// Decode a word; `Err` carries the unknown opcode byte.
pub fn decode_word(w: u64) -> Result<Instr, u8> {
    let b0 = (w & 0xff) as u8;
    let op = Opcode::from_u8(b0).ok_or(b0)?;
    let b1 = ((w >> 8) & 0xff) as u8;
    let b2 = ((w >> 16) & 0xff) as u8;
    Ok(Instr {
        op,
        rd: b1 >> 4,
        ra: b1 & 0xf,
        rb: b2 >> 4,
        imm: (w >> 32) as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode_round_trip() {
        let i = Instr::new(Opcode::AddR).rd(3).ra(15).rb(7).imm(0xdead_beef);
        let w = encode(&i);
        assert_eq!(decode_word(w).unwrap(), i);
    }

    #[test]
    fn unknown_opcode_is_reported() {
        assert_eq!(decode_word(0xff), Err(0xff));
    }

    #[test]
    fn layout_is_bit_exact() {
        let i = Instr::new(Opcode::MovI).rd(0xa).ra(0x1).rb(0x2).imm(0x11223344);
        let w = encode(&i);
        let bytes = w.to_le_bytes();
        assert_eq!(bytes[0], 0x11); // MovI
        assert_eq!(bytes[1], 0xa1); // rd|ra
        assert_eq!(bytes[2], 0x20); // rb|pad
        assert_eq!(bytes[3], 0x00);
        assert_eq!(&bytes[4..8], &0x11223344u32.to_le_bytes());
    }

    #[test]
    fn event_names_round_trip() {
        for (bit, name) in EVENT_NAMES {
            assert_eq!(event_bit_by_name(name), Some(*bit));
        }
        assert_eq!(event_bit_by_name("NONE"), Some(0));
        assert_eq!(event_bit_by_name("BOGUS"), None);
    }
}
