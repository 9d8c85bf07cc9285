//! Frame-stack file layout (all integers little-endian):
//!
//! | bytes | field                                  |
//! |-------|----------------------------------------|
//! | 4     | magic `ABSK`                           |
//! | 2     | format version (u16)                   |
//! | 4     | width (u32)                            |
//! | 4     | height (u32)                           |
//! | 8     | n_frames (u64)                         |
//! | 8     | pulse rate in Hz (f64)                 |
//! | 8     | seed (u64)                             |
//! | 32    | config digest                          |
//! | ...   | frames, row-major, rows padded to bytes |
//!
//! Within a row, pixel `x` is bit `x % 8` (LSB first) of byte `x / 8`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::camera::{FrameLayout, FrameStack, StackMeta};
use crate::error::{Error, Result};
use crate::optics::PixelGrid;

pub const STACK_MAGIC: &[u8; 4] = b"ABSK";
pub const STACK_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 8 + 8 + 8 + 32;

pub fn encode_stack<W: Write>(stack: &FrameStack, mut w: W) -> std::io::Result<()> {
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(STACK_MAGIC);
    header.extend_from_slice(&STACK_VERSION.to_le_bytes());
    header.extend_from_slice(&(stack.grid.width as u32).to_le_bytes());
    header.extend_from_slice(&(stack.grid.height as u32).to_le_bytes());
    header.extend_from_slice(&(stack.n_frames() as u64).to_le_bytes());
    header.extend_from_slice(&stack.meta.pulse_rate_hz.to_le_bytes());
    header.extend_from_slice(&stack.meta.seed.to_le_bytes());
    header.extend_from_slice(&stack.meta.digest);
    w.write_all(&header)?;
    w.write_all(stack.packed())?;
    w.flush()
}

/// Parses a stack. The file does not record the physical pixel pitch, so the
/// caller supplies the grid geometry; its width and height must match the
/// header. Without one, a grid with unit pitch is assumed.
pub fn decode_stack<R: Read>(mut r: R, grid: Option<PixelGrid>) -> Result<FrameStack> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("truncated stack header".into()))?;
    if &header[0..4] != STACK_MAGIC {
        return Err(Error::Format("not a frame stack (bad magic)".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != STACK_VERSION {
        return Err(Error::Format(format!(
            "unsupported stack version {version}"
        )));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap()) as usize;
    let u64_at = |o: usize| u64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    let width = u32_at(6);
    let height = u32_at(10);
    let n_frames = u64_at(14);
    let pulse_rate_hz = f64::from_bits(u64_at(22));
    let seed = u64_at(30);
    let digest: [u8; 32] = header[38..70].try_into().unwrap();
    if width == 0 || height == 0 {
        return Err(Error::Format("stack has an empty frame geometry".into()));
    }
    let grid = match grid {
        Some(g) if g.width != width || g.height != height => {
            return Err(Error::Format(format!(
                "stack is {width}x{height} but the configured grid is {}x{}",
                g.width, g.height
            )))
        }
        Some(g) => g,
        None => PixelGrid {
            width,
            height,
            pitch_nm: 1.0,
            origin_nm: [0.0, 0.0],
        },
    };
    let fb = FrameLayout::new(width, height).frame_bytes() as u64;
    let len = fb
        .checked_mul(n_frames)
        .ok_or_else(|| Error::Format("frame count overflows".into()))?;
    let mut data = Vec::new();
    r.take(len)
        .read_to_end(&mut data)
        .map_err(|e| Error::Format(format!("reading frames: {e}")))?;
    if data.len() as u64 != len {
        return Err(Error::Format(format!(
            "truncated stack: expected {len} frame bytes, found {}",
            data.len()
        )));
    }
    FrameStack::from_packed(
        grid,
        StackMeta {
            seed,
            pulse_rate_hz,
            digest,
        },
        data,
    )
}

pub fn write_stack(stack: &FrameStack, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    encode_stack(stack, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn read_stack(path: &Path, grid: Option<PixelGrid>) -> Result<FrameStack> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode_stack(BufReader::new(file), grid)
}
