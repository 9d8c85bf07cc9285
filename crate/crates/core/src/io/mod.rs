//! On-disk formats: the bit-packed frame stack and the correlation-map
//! container with its PNG preview.

mod mapfile;
mod stackfile;

pub use mapfile::{decode_map, encode_map, read_map, write_map, write_png_preview, PngScaling};
pub use stackfile::{
    decode_stack, encode_stack, read_stack, write_stack, STACK_MAGIC, STACK_VERSION,
};
