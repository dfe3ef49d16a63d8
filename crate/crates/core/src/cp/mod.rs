//! Channel programs: the bytecode format, instruction set, and the
//! event-driven interpreter a node runs for each controller instance.

pub mod image;
pub mod isa;
pub mod vm;

pub use image::{ChannelProgramImage, ImageError};
pub use isa::{decode_word, encode, EventSet, Instr, Opcode};
pub use vm::{CpEnv, CpEvent, FaultCode, StepOutcome, TagKind, VmState, VmStatus, WaitCond, XlateErr};
