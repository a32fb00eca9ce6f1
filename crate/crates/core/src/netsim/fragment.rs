//! Splitting application PDUs into link-layer frames and putting them back.

use serde::{Deserialize, Serialize};

use super::NetsimError;

/// Application payload carried by one full MPDU.
pub const MPDU_PAYLOAD: u32 = 1400;
pub const UDP_HEADER: u32 = 8;
pub const IP_HEADER: u32 = 20;
/// MAC header plus trailer.
pub const MAC_OVERHEAD: u32 = 14;
pub const HEADER_BYTES: u32 = UDP_HEADER + IP_HEADER + MAC_OVERHEAD;
/// Wire size of a full MPDU: 1442 bytes.
pub const FULL_MPDU_WIRE: u32 = MPDU_PAYLOAD + HEADER_BYTES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacFrame {
    pub parent_frame_id: u64,
    pub fragment_index: u32,
    /// Number of data fragments the parent was split into.
    pub fragment_count: u32,
    pub payload_bytes: u32,
    pub wire_bytes: u32,
    /// Redundancy frame rather than data.
    pub parity: bool,
    pub tx_start_us: u64,
    pub tx_end_us: u64,
}

impl MacFrame {
    pub fn data(parent: u64, index: u32, count: u32, payload: u32) -> Self {
        Self {
            parent_frame_id: parent,
            fragment_index: index,
            fragment_count: count,
            payload_bytes: payload,
            wire_bytes: payload + HEADER_BYTES,
            parity: false,
            tx_start_us: 0,
            tx_end_us: 0,
        }
    }
}

pub fn wire_bytes(payload: u32) -> u32 {
    payload + HEADER_BYTES
}

pub fn fragment_count(apdu_bytes: u32) -> u32 {
    apdu_bytes.div_ceil(MPDU_PAYLOAD)
}

/// Payload sizes of the MPDUs carrying an `apdu_bytes` PDU: all full except
/// possibly the last.
pub fn fragment(apdu_bytes: u32) -> Result<Vec<u32>, NetsimError> {
    if apdu_bytes < 1 {
        return Err(NetsimError::Input("APDU size must be >= 1 byte".into()));
    }
    let n = fragment_count(apdu_bytes);
    let mut sizes = vec![MPDU_PAYLOAD; n as usize];
    sizes[n as usize - 1] = apdu_bytes - (n - 1) * MPDU_PAYLOAD;
    Ok(sizes)
}

pub fn fragment_frames(parent: u64, apdu_bytes: u32) -> Result<Vec<MacFrame>, NetsimError> {
    let sizes = fragment(apdu_bytes)?;
    let n = sizes.len() as u32;
    Ok(sizes
        .into_iter()
        .enumerate()
        .map(|(i, p)| MacFrame::data(parent, i as u32, n, p))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReassemblyError {
    #[error("no fragments")]
    Empty,
    #[error("fragments belong to different frames ({0} and {1})")]
    MixedParents(u64, u64),
    #[error("frame {parent}: missing fragment {missing}")]
    Missing { parent: u64, missing: u32 },
    #[error("frame {parent}: duplicate fragment {index}")]
    Duplicate { parent: u64, index: u32 },
}

/// Rebuild the APDU size from its data fragments. Parity frames are ignored
/// and arrival order does not matter.
pub fn reassemble(fragments: &[MacFrame]) -> Result<u32, ReassemblyError> {
    let mut data: Vec<&MacFrame> = fragments.iter().filter(|f| !f.parity).collect();
    let first = data.first().ok_or(ReassemblyError::Empty)?;
    let parent = first.parent_frame_id;
    let count = first.fragment_count;
    if let Some(other) = data.iter().find(|f| f.parent_frame_id != parent) {
        return Err(ReassemblyError::MixedParents(parent, other.parent_frame_id));
    }
    data.sort_by_key(|f| f.fragment_index);
    let mut expected = 0u32;
    let mut total = 0u32;
    for f in data {
        if f.fragment_index < expected {
            return Err(ReassemblyError::Duplicate {
                parent,
                index: f.fragment_index,
            });
        }
        if f.fragment_index > expected {
            return Err(ReassemblyError::Missing {
                parent,
                missing: expected,
            });
        }
        total += f.payload_bytes;
        expected += 1;
    }
    if expected < count {
        return Err(ReassemblyError::Missing {
            parent,
            missing: expected,
        });
    }
    Ok(total)
}
