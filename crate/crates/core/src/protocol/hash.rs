//! Slot selection hash.
//!
//! `slot_of(y, L, nonce) = mix64(y ^ u64::from(nonce)) % L`, where `mix64` is
//! the SplitMix64 output finalizer:
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58_476D_1CE4_E5B9   (wrapping)
//! z = (z ^ (z >> 27)) * 0x94D0_49BB_1331_11EB   (wrapping)
//! z =  z ^ (z >> 31)
//! ```

pub const MIX_MUL_1: u64 = 0xBF58_476D_1CE4_E5B9;
pub const MIX_MUL_2: u64 = 0x94D0_49BB_1331_11EB;

pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_MUL_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_MUL_2);
    z ^ (z >> 31)
}

/// Slot index in `[0, l)`. A frame length of 0 is treated as 1.
pub fn slot_of(y: u64, l: u16, nonce: u32) -> u16 {
    let l = u64::from(l.max(1));
    (mix64(y ^ u64::from(nonce)) % l) as u16
}
