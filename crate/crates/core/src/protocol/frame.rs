//! On-air frame layouts. One tag byte, then the body; integers little-endian.
//!
//! | kind      | tag  | body                                                  |
//! |-----------|------|-------------------------------------------------------|
//! | Probe mPS | 0x01 | nonce u32, frame_length u16                           |
//! | Dummy     | 0x02 | y_low u16                                             |
//! | Probe dPS | 0x03 | nonce u32, frame_length u16, bitmap ceil(L/8) bytes   |
//! | Data      | 0x04 | vrn_len u8, vrn ASCII bytes, y u64                    |
//! | Ack       | 0x05 | slot u16, y u64                                       |
//!
//! Bitmap bit `i` (byte `i / 8`, bit `i % 8`, LSB first) is set when mini-slot
//! `i` is in the slot map. Bits at or beyond the frame length must be zero.

use crate::error::FrameError;

use super::identity::{vrn_to_integer, VehicleIdentity};
use super::slot_map::SlotMap;

pub const TAG_PROBE_MPS: u8 = 0x01;
pub const TAG_DUMMY: u8 = 0x02;
pub const TAG_PROBE_DPS: u8 = 0x03;
pub const TAG_DATA: u8 = 0x04;
pub const TAG_ACK: u8 = 0x05;

pub const DUMMY_LEN: usize = 3;
/// Data frame carrying a one-character registration number.
pub const MIN_DATA_LEN: usize = 1 + 1 + 1 + 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    ProbeMps { nonce: u32, frame_length: u16 },
    Dummy { y_low: u16 },
    ProbeDps { nonce: u32, slot_map: SlotMap },
    Data { vrn: String, y: u64 },
    Ack { slot: u16, y: u64 },
}

impl Frame {
    pub fn dummy_for(identity: &VehicleIdentity) -> Frame {
        Frame::Dummy {
            y_low: identity.y() as u16,
        }
    }

    pub fn data_for(identity: &VehicleIdentity) -> Frame {
        Frame::Data {
            vrn: identity.vrn().to_string(),
            y: identity.y(),
        }
    }

    pub fn tag(&self) -> u8 {
        match self {
            Frame::ProbeMps { .. } => TAG_PROBE_MPS,
            Frame::Dummy { .. } => TAG_DUMMY,
            Frame::ProbeDps { .. } => TAG_PROBE_DPS,
            Frame::Data { .. } => TAG_DATA,
            Frame::Ack { .. } => TAG_ACK,
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>, FrameError> {
        let mut out = vec![self.tag()];
        match self {
            Frame::ProbeMps { nonce, frame_length } => {
                out.extend_from_slice(&nonce.to_le_bytes());
                out.extend_from_slice(&frame_length.to_le_bytes());
            }
            Frame::Dummy { y_low } => out.extend_from_slice(&y_low.to_le_bytes()),
            Frame::ProbeDps { nonce, slot_map } => {
                out.extend_from_slice(&nonce.to_le_bytes());
                out.extend_from_slice(&slot_map.frame_length().to_le_bytes());
                out.extend_from_slice(&slot_map.to_bitmap());
            }
            Frame::Data { vrn, y } => {
                let len = u8::try_from(vrn.len()).map_err(|_| FrameError::TooLarge("vrn"))?;
                out.push(len);
                out.extend_from_slice(vrn.as_bytes());
                out.extend_from_slice(&y.to_le_bytes());
            }
            Frame::Ack { slot, y } => {
                out.extend_from_slice(&slot.to_le_bytes());
                out.extend_from_slice(&y.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Frame, FrameError> {
        let (&tag, body) = bytes.split_first().ok_or(FrameError::Empty)?;
        let mut r = Reader { buf: body, pos: 0 };
        let frame = match tag {
            TAG_PROBE_MPS => Frame::ProbeMps {
                nonce: r.u32()?,
                frame_length: r.u16()?,
            },
            TAG_DUMMY => Frame::Dummy { y_low: r.u16()? },
            TAG_PROBE_DPS => {
                let nonce = r.u32()?;
                let frame_length = r.u16()?;
                let bits = r.take(usize::from(frame_length).div_ceil(8))?;
                let slot_map = SlotMap::from_bitmap(frame_length, bits)
                    .map_err(|slot| FrameError::BitmapOutOfRange { slot, frame_length })?;
                Frame::ProbeDps { nonce, slot_map }
            }
            TAG_DATA => {
                let len = usize::from(r.u8()?);
                let raw = r.take(len)?;
                let vrn = std::str::from_utf8(raw)
                    .map_err(|_| {
                        FrameError::BadVrn(crate::error::EncodingError::IllegalChar {
                            ch: char::REPLACEMENT_CHARACTER,
                        })
                    })?
                    .to_string();
                let expected = vrn_to_integer(&vrn)?;
                let y = r.u64()?;
                if y != expected {
                    return Err(FrameError::IdentityMismatch { carried: y, expected });
                }
                Frame::Data { vrn, y }
            }
            TAG_ACK => Frame::Ack {
                slot: r.u16()?,
                y: r.u64()?,
            },
            other => return Err(FrameError::UnknownKind(other)),
        };
        let rest = body.len() - r.pos;
        if rest != 0 {
            return Err(FrameError::Trailing(rest));
        }
        Ok(frame)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FrameError> {
        let end = self.pos + n;
        if end > self.buf.len() {
            return Err(FrameError::Truncated {
                needed: end + 1,
                have: self.buf.len() + 1,
            });
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, FrameError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, FrameError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, FrameError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, FrameError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn byte_layouts() {
        let probe = Frame::ProbeMps {
            nonce: 0x0403_0201,
            frame_length: 0x0605,
        };
        assert_eq!(probe.encode().unwrap(), vec![0x01, 1, 2, 3, 4, 5, 6]);

        assert_eq!(
            Frame::Dummy { y_low: 0xBEEF }.encode().unwrap(),
            vec![0x02, 0xEF, 0xBE]
        );

        let m = SlotMap::new(10, vec![0, 3, 9]).unwrap();
        let dps = Frame::ProbeDps {
            nonce: 7,
            slot_map: m,
        };
        assert_eq!(
            dps.encode().unwrap(),
            vec![0x03, 7, 0, 0, 0, 10, 0, 0b0000_1001, 0b0000_0010]
        );

        let id = VehicleIdentity::new("B10").unwrap();
        assert_eq!(
            Frame::data_for(&id).encode().unwrap(),
            vec![0x04, 3, b'B', b'1', b'0', 0xD4, 0x37, 0, 0, 0, 0, 0, 0]
        );

        assert_eq!(
            Frame::Ack { slot: 2, y: 1 }.encode().unwrap(),
            vec![0x05, 2, 0, 1, 0, 0, 0, 0, 0, 0, 0]
        );
    }

    #[test]
    fn dummy_is_several_times_shorter_than_data() {
        let id = VehicleIdentity::new("7").unwrap();
        let dummy = Frame::dummy_for(&id).encode().unwrap();
        let data = Frame::data_for(&id).encode().unwrap();
        assert_eq!(dummy.len(), DUMMY_LEN);
        assert_eq!(data.len(), MIN_DATA_LEN);
        assert!(3 * dummy.len() <= data.len());
    }

    #[test]
    fn decode_errors() {
        assert_eq!(Frame::decode(&[]), Err(FrameError::Empty));
        assert_eq!(Frame::decode(&[0x09]), Err(FrameError::UnknownKind(0x09)));
        assert!(matches!(
            Frame::decode(&[0x02, 1]),
            Err(FrameError::Truncated { .. })
        ));
        assert_eq!(Frame::decode(&[0x02, 1, 2, 3]), Err(FrameError::Trailing(1)));
        // bit 3 set in a 3-slot bitmap
        assert!(matches!(
            Frame::decode(&[0x03, 0, 0, 0, 0, 3, 0, 0b1000]),
            Err(FrameError::BitmapOutOfRange { slot: 3, .. })
        ));
        // lowercase plate
        assert!(matches!(
            Frame::decode(&[0x04, 1, b'a', 0, 0, 0, 0, 0, 0, 0, 0]),
            Err(FrameError::BadVrn(_))
        ));
        // y does not match "A" = 10
        assert!(matches!(
            Frame::decode(&[0x04, 1, b'A', 11, 0, 0, 0, 0, 0, 0, 0]),
            Err(FrameError::IdentityMismatch {
                carried: 11,
                expected: 10
            })
        ));
    }

    fn frames() -> impl Strategy<Value = Frame> {
        prop_oneof![
            (any::<u32>(), any::<u16>())
                .prop_map(|(nonce, frame_length)| Frame::ProbeMps { nonce, frame_length }),
            any::<u16>().prop_map(|y_low| Frame::Dummy { y_low }),
            (any::<u32>(), 1u16..512).prop_flat_map(|(nonce, l)| {
                prop::collection::btree_set(0..l, 0..=usize::from(l)).prop_map(move |s| Frame::ProbeDps {
                    nonce,
                    slot_map: SlotMap::new(l, s.into_iter().collect()).unwrap(),
                })
            }),
            "[A-Z0-9]{1,12}".prop_map(|v| Frame::data_for(&VehicleIdentity::new(v).unwrap())),
            (any::<u16>(), any::<u64>()).prop_map(|(slot, y)| Frame::Ack { slot, y }),
        ]
    }

    proptest! {
        #[test]
        fn round_trip(f in frames()) {
            let bytes = f.encode().unwrap();
            prop_assert_eq!(bytes[0], f.tag());
            prop_assert_eq!(Frame::decode(&bytes).unwrap(), f);
        }

        #[test]
        fn decode_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..40)) {
            let _ = Frame::decode(&bytes);
        }
    }
}
