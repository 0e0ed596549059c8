use std::fmt;

use rand::Rng;

use crate::error::EncodingError;

/// Longest registration number whose base-36 value fits in a `u64`.
pub const MAX_VRN_LEN: usize = 12;

fn digit_value(ch: char) -> Result<u64, EncodingError> {
    match ch {
        '0'..='9' => Ok(u64::from(ch as u8 - b'0')),
        'A'..='Z' => Ok(u64::from(ch as u8 - b'A') + 10),
        _ => Err(EncodingError::IllegalChar { ch }),
    }
}

/// Base-36 value of a registration number, most significant character first
/// (`0`-`9` are 0-9, `A`-`Z` are 10-35).
pub fn vrn_to_integer(vrn: &str) -> Result<u64, EncodingError> {
    if vrn.is_empty() {
        return Err(EncodingError::Empty);
    }
    if vrn.chars().count() > MAX_VRN_LEN {
        return Err(EncodingError::TooLong {
            vrn: vrn.to_string(),
            max: MAX_VRN_LEN,
        });
    }
    vrn.chars()
        .try_fold(0u64, |acc, ch| Ok(acc * 36 + digit_value(ch)?))
}

/// A registration number together with its integer encoding.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VehicleIdentity {
    vrn: String,
    y: u64,
}

impl VehicleIdentity {
    pub fn new(vrn: impl Into<String>) -> Result<Self, EncodingError> {
        let vrn = vrn.into();
        let y = vrn_to_integer(&vrn)?;
        Ok(VehicleIdentity { vrn, y })
    }

    /// Plate-shaped random identity: two letters, two digits, two letters,
    /// four digits (e.g. `KA01AB1234`).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        const LETTERS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
        const DIGITS: &[u8] = b"0123456789";
        let mut vrn = String::with_capacity(10);
        for pool in [
            LETTERS, LETTERS, DIGITS, DIGITS, LETTERS, LETTERS, DIGITS, DIGITS, DIGITS, DIGITS,
        ] {
            vrn.push(pool[rng.random_range(0..pool.len())] as char);
        }
        VehicleIdentity::new(vrn).expect("generated plate uses the legal alphabet")
    }

    pub fn vrn(&self) -> &str {
        &self.vrn
    }

    pub fn y(&self) -> u64 {
        self.y
    }
}

impl fmt::Display for VehicleIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.vrn)
    }
}
