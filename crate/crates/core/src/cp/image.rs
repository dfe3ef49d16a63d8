//! The on-wire program image: what gets uploaded through the control area
//! and stored in `.mccp` files.
//!
//! Layout (little endian, 17-byte header followed by code):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "MCCP"
//! 4       2     version (currently 1)
//! 6       4     entry_pc (instruction index)
//! 10      1     param_count (<= 8)
//! 11      2     declared_events bitmap
//! 13      4     code_len in bytes (multiple of 8, 8..=65536)
//! 17      n     instruction words
//! ```

use thiserror::Error;

use super::isa::EventSet;

pub const MAGIC: [u8; 4] = *b"MCCP";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 17;
pub const MAX_CODE_BYTES: u32 = 65536;
pub const MAX_PARAMS: u8 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ImageError {
    #[error("image shorter than header")]
    TruncatedHeader,
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u16),
    #[error("bad code length {0}")]
    BadCodeLen(u32),
    #[error("entry point {0} outside code")]
    EntryOutOfRange(u32),
    #[error("too many parameters: {0}")]
    TooManyParams(u8),
    #[error("code truncated")]
    TruncatedCode,
}

/// Verified bytecode plus metadata. Immutable once built; instances share it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelProgramImage {
    pub entry_pc: u32,
    pub param_count: u8,
    pub declared_events: EventSet,
    pub code: Vec<u64>,
}

impl ChannelProgramImage {
    pub fn new(entry_pc: u32, param_count: u8, declared_events: EventSet, code: Vec<u64>) -> ChannelProgramImage {
        ChannelProgramImage { entry_pc, param_count, declared_events, code }
    }

    pub fn code_len_bytes(&self) -> u32 {
        (self.code.len() * 8) as u32
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.code.len() * 8);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.entry_pc.to_le_bytes());
        out.push(self.param_count);
        out.extend_from_slice(&self.declared_events.0.to_le_bytes());
        out.extend_from_slice(&self.code_len_bytes().to_le_bytes());
        for w in &self.code {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    /// Parse and validate. Trailing bytes beyond `code_len` are ignored so
    /// word-granular uploads may pad. Only the header and gross structure
    /// are validated here; instruction-level checks live in the assembler
    /// and, as a backstop, in the interpreter's fault paths.
    pub fn decode(bytes: &[u8]) -> Result<ChannelProgramImage, ImageError> {
        if bytes.len() < HEADER_LEN {
            return Err(ImageError::TruncatedHeader);
        }
        if bytes[0..4] != MAGIC {
            return Err(ImageError::BadMagic);
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(ImageError::BadVersion(version));
        }
        let entry_pc = u32::from_le_bytes([bytes[6], bytes[7], bytes[8], bytes[9]]);
        let param_count = bytes[10];
        if param_count > MAX_PARAMS {
            return Err(ImageError::TooManyParams(param_count));
        }
        let declared = u16::from_le_bytes([bytes[11], bytes[12]]);
        let code_len = u32::from_le_bytes([bytes[13], bytes[14], bytes[15], bytes[16]]);
        if code_len == 0 || code_len % 8 != 0 || code_len > MAX_CODE_BYTES {
            return Err(ImageError::BadCodeLen(code_len));
        }
        if entry_pc >= code_len / 8 {
            return Err(ImageError::EntryOutOfRange(entry_pc));
        }
        let body = &bytes[HEADER_LEN..];
        if body.len() < code_len as usize {
            return Err(ImageError::TruncatedCode);
        }
        let code = body[..code_len as usize]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(ChannelProgramImage {
            entry_pc,
            param_count,
            declared_events: EventSet(declared),
            code,
        })
    }
}
