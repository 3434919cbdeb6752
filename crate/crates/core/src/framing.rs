//! CRC-24 and segment framing of the data phase.
//!
//! Each block's data phase carries `S` segments of `L_data + L_CRC` bits,
//! with `S·(L_data + L_CRC) = T_d·(bits per transmit vector)`.
//!
//! The CRC uses the generator `z^24 + z^23 + z^14 + z^12 + z^8 + 1` with a
//! zero-initialised register, MSB-first bit order, no reflection and no final
//! XOR, so `crc24(m)` is the remainder of `m(z)·z^24` modulo the generator.

use crate::error::{Error, Result};
use crate::labels::LabelSet;

/// Generator without the leading `z^24` term.
pub const CRC24_POLY: u32 = 0x80_5101;
pub const CRC24_WIDTH: usize = 24;
const MASK: u32 = (1 << CRC24_WIDTH) - 1;

pub const DEFAULT_DATA_BITS: usize = 16;
pub const DEFAULT_CRC_BITS: usize = 24;

fn crc_register(bits: &[u8]) -> u32 {
    let mut reg = 0u32;
    for &b in bits {
        let feedback = ((reg >> 23) & 1) ^ (b as u32 & 1);
        reg = (reg << 1) & MASK;
        if feedback == 1 {
            reg ^= CRC24_POLY;
        }
    }
    reg
}

/// 24 parity bits for `data`, MSB first.
pub fn crc24(data: &[u8]) -> Vec<u8> {
    let reg = crc_register(data);
    (0..CRC24_WIDTH).rev().map(|i| ((reg >> i) & 1) as u8).collect()
}

/// Packed form of [`crc24`].
pub fn crc24_value(data: &[u8]) -> u32 {
    crc_register(data)
}

/// True when `codeword = data ‖ crc` leaves a zero remainder.
pub fn crc24_check(codeword: &[u8]) -> bool {
    codeword.len() >= CRC24_WIDTH && crc_register(codeword) == 0
}

/// Segment layout of one block's data phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegmentPlan {
    pub data_bits: usize,
    pub crc_bits: usize,
    pub segments: usize,
    pub bits_per_vector: usize,
    pub slots_per_segment: usize,
}

impl SegmentPlan {
    pub fn new(data_slots: usize, bits_per_vector: usize, data_bits: usize, crc_bits: usize) -> Result<Self> {
        if crc_bits != CRC24_WIDTH {
            return Err(Error::InvalidParameter(format!(
                "CRC length must be {CRC24_WIDTH} bits, got {crc_bits}"
            )));
        }
        if bits_per_vector == 0 || data_bits == 0 {
            return Err(Error::InvalidParameter(
                "segment and vector sizes must be positive".into(),
            ));
        }
        let seg = data_bits + crc_bits;
        if !seg.is_multiple_of(bits_per_vector) {
            return Err(Error::InvalidParameter(format!(
                "segment of {seg} bits is not a multiple of {bits_per_vector} bits per vector"
            )));
        }
        let total = data_slots * bits_per_vector;
        if total == 0 || !total.is_multiple_of(seg) {
            return Err(Error::InvalidParameter(format!(
                "{data_slots} data slots carry {total} bits, not a multiple of the {seg}-bit segment"
            )));
        }
        Ok(SegmentPlan {
            data_bits,
            crc_bits,
            segments: total / seg,
            bits_per_vector,
            slots_per_segment: seg / bits_per_vector,
        })
    }

    pub fn segment_bits(&self) -> usize {
        self.data_bits + self.crc_bits
    }

    pub fn data_slots(&self) -> usize {
        self.segments * self.slots_per_segment
    }

    /// Slot range (relative to the data phase) of segment `s`.
    pub fn slot_range(&self, s: usize) -> std::ops::Range<usize> {
        s * self.slots_per_segment..(s + 1) * self.slots_per_segment
    }
}

/// Appends a CRC to each `L_data`-bit chunk and maps the codewords onto label
/// indices, one inner `Vec` per segment.
pub fn frame_segments(data: &[u8], plan: &SegmentPlan, labels: &LabelSet) -> Result<Vec<Vec<usize>>> {
    if labels.bits_per_label() != plan.bits_per_vector {
        return Err(Error::Dimension(format!(
            "labels carry {} bits, plan expects {}",
            labels.bits_per_label(),
            plan.bits_per_vector
        )));
    }
    let expected = plan.segments * plan.data_bits;
    if data.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: data.len(),
        });
    }
    data.chunks(plan.data_bits)
        .map(|chunk| {
            let mut word = chunk.to_vec();
            word.extend(crc24(chunk));
            word.chunks(plan.bits_per_vector)
                .map(|bits| labels.index_of_bits(bits))
                .collect()
        })
        .collect()
}

/// Bits carried by a sequence of label indices.
pub fn labels_to_bits(indices: &[usize], labels: &LabelSet) -> Vec<u8> {
    indices.iter().flat_map(|&k| labels.bits_of(k)).collect()
}

/// Recovers the payload bits (CRC stripped) from framed segments.
pub fn deframe(segments: &[Vec<usize>], plan: &SegmentPlan, labels: &LabelSet) -> Vec<u8> {
    segments
        .iter()
        .flat_map(|seg| {
            let mut bits = labels_to_bits(seg, labels);
            bits.truncate(plan.data_bits);
            bits
        })
        .collect()
}

/// CRC check of one decoded segment.
pub fn verify_segment(decoded: &[usize], plan: &SegmentPlan, labels: &LabelSet) -> bool {
    decoded.len() == plan.slots_per_segment && crc24_check(&labels_to_bits(decoded, labels))
}
