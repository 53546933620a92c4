//! Binary framing for queries and answers.
//!
//! Query frame (little-endian):
//! `0x57 0x51 | version u8 | scheme_id u8 | files u16 | n u16 |
//! server_index u16 (1-based) | payload_len u32 | payload |
//! [partition u16, scheme_id 3 only]`.
//!
//! `payload_len` counts elements: symbol entries for additive-style queries
//! (one byte each) or bits for mask-style queries (packed LSB-first). Scheme
//! ids 1 and 2 fix the payload kind; ids 3 and 4 wrap either scheme, and the
//! kind is recovered from the byte count, which is unambiguous whenever
//! `payload_len >= 2`. Answer frame: `0x57 0x41 | version u8 |
//! payload_len u32 (bits) | packed bits`. Padding bits must be zero; any
//! trailing bytes are rejected.

use crate::error::{Error, Result};
use crate::query::Query;

pub const QUERY_MAGIC: [u8; 2] = [0x57, 0x51];
pub const ANSWER_MAGIC: [u8; 2] = [0x57, 0x41];
pub const WIRE_VERSION: u8 = 1;

const QUERY_HEADER: usize = 14;
const ANSWER_HEADER: usize = 7;

/// A query frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryMsg {
    pub scheme_id: u8,
    pub files: u16,
    pub n: u16,
    /// 1-based position of the addressed server.
    pub server_index: u16,
    pub query: Query,
}

fn pack_bits(bits: &[u8]) -> Vec<u8> {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        bytes[i / 8] |= (b & 1) << (i % 8);
    }
    bytes
}

fn unpack_bits(bytes: &[u8], count: usize) -> Result<Vec<u8>> {
    let mut bits = Vec::with_capacity(count);
    for i in 0..count {
        bits.push((bytes[i / 8] >> (i % 8)) & 1);
    }
    // Canonical encoding: padding bits beyond `count` must be zero.
    for i in count..bytes.len() * 8 {
        if (bytes[i / 8] >> (i % 8)) & 1 != 0 {
            return Err(Error::Wire("nonzero padding bit".into()));
        }
    }
    Ok(bits)
}

fn read_u16(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

impl QueryMsg {
    /// True when the payload travels as packed bits rather than one byte
    /// per entry.
    fn bit_packed(&self) -> Result<bool> {
        match self.scheme_id {
            1 => Ok(false),
            2 => Ok(true),
            3 | 4 => Ok(self.query.alphabet == 2),
            id => Err(Error::Wire(format!("unknown scheme id {id}"))),
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        if self.n < 2 {
            return Err(Error::Wire("need at least two servers".into()));
        }
        if self.server_index == 0 || self.server_index > self.n {
            return Err(Error::Wire(format!(
                "server index {} outside 1..={}",
                self.server_index, self.n
            )));
        }
        let entries = &self.query.entries;
        let packed = self.bit_packed()?;
        match self.scheme_id {
            1 => {
                if entries.len() != self.files as usize {
                    return Err(Error::Wire(
                        "additive query length must equal the file count".into(),
                    ));
                }
                if self.query.alphabet as u16 != self.n {
                    return Err(Error::Wire("additive alphabet must equal n".into()));
                }
            }
            2 => {
                if self.query.alphabet != 2 {
                    return Err(Error::Wire("mask queries are binary".into()));
                }
                if entries.len() != self.files as usize * (self.n as usize - 1) {
                    return Err(Error::Wire(
                        "mask query length must equal files * (n-1)".into(),
                    ));
                }
            }
            3 | 4 => {
                if entries.len() < 2 {
                    return Err(Error::Wire(
                        "wrapped payloads of fewer than 2 elements are ambiguous".into(),
                    ));
                }
            }
            _ => unreachable!("checked by bit_packed"),
        }
        if self.scheme_id == 3 && self.query.partition.is_none() {
            return Err(Error::Wire("partitioned query needs a block index".into()));
        }
        if self.scheme_id != 3 && self.query.partition.is_some() {
            return Err(Error::Wire(
                "only scheme id 3 carries a block index".into(),
            ));
        }
        if !packed && self.query.alphabet as u16 > self.n {
            return Err(Error::Wire("alphabet exceeds server count".into()));
        }
        let len = u32::try_from(entries.len())
            .map_err(|_| Error::Wire("payload too long".into()))?;

        let mut out = Vec::with_capacity(QUERY_HEADER + entries.len() + 2);
        out.extend_from_slice(&QUERY_MAGIC);
        out.push(WIRE_VERSION);
        out.push(self.scheme_id);
        out.extend_from_slice(&self.files.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.server_index.to_le_bytes());
        out.extend_from_slice(&len.to_le_bytes());
        if packed {
            out.extend_from_slice(&pack_bits(entries));
        } else {
            out.extend_from_slice(entries);
        }
        if let Some(p) = self.query.partition {
            out.extend_from_slice(&p.to_le_bytes());
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < QUERY_HEADER {
            return Err(Error::Wire("truncated query frame".into()));
        }
        if bytes[..2] != QUERY_MAGIC {
            return Err(Error::Wire("bad query magic".into()));
        }
        if bytes[2] != WIRE_VERSION {
            return Err(Error::Wire(format!("unsupported version {}", bytes[2])));
        }
        let scheme_id = bytes[3];
        if !(1..=4).contains(&scheme_id) {
            return Err(Error::Wire(format!("unknown scheme id {scheme_id}")));
        }
        let files = read_u16(bytes, 4);
        let n = read_u16(bytes, 6);
        let server_index = read_u16(bytes, 8);
        if n < 2 {
            return Err(Error::Wire("need at least two servers".into()));
        }
        if server_index == 0 || server_index > n {
            return Err(Error::Wire(format!(
                "server index {server_index} outside 1..={n}"
            )));
        }
        let payload_len = read_u32(bytes, 10) as usize;
        let trailer = if scheme_id == 3 { 2 } else { 0 };
        let payload_bytes = bytes
            .len()
            .checked_sub(QUERY_HEADER + trailer)
            .ok_or_else(|| Error::Wire("truncated query frame".into()))?;

        let entry_bytes = payload_len;
        let bit_bytes = payload_len.div_ceil(8);
        let packed = match scheme_id {
            1 if payload_bytes == entry_bytes => false,
            2 if payload_bytes == bit_bytes => true,
            3 | 4 => {
                if payload_len < 2 {
                    return Err(Error::Wire(
                        "wrapped payloads of fewer than 2 elements are ambiguous".into(),
                    ));
                }
                if payload_bytes == entry_bytes {
                    false
                } else if payload_bytes == bit_bytes {
                    true
                } else {
                    return Err(Error::Wire("payload size mismatch".into()));
                }
            }
            _ => return Err(Error::Wire("payload size mismatch".into())),
        };

        let payload = &bytes[QUERY_HEADER..QUERY_HEADER + payload_bytes];
        let entries = if packed {
            unpack_bits(payload, payload_len)?
        } else {
            payload.to_vec()
        };
        let alphabet = if packed {
            2u8
        } else {
            u8::try_from(n).map_err(|_| Error::Wire("alphabet exceeds 255".into()))?
        };
        let mut query = Query::new(entries, alphabet)
            .map_err(|e| Error::Wire(format!("invalid payload: {e}")))?;

        match scheme_id {
            1 if query.entries.len() != files as usize => {
                return Err(Error::Wire(
                    "additive query length must equal the file count".into(),
                ));
            }
            2 if query.entries.len() != files as usize * (n as usize - 1) => {
                return Err(Error::Wire(
                    "mask query length must equal files * (n-1)".into(),
                ));
            }
            _ => {}
        }
        if scheme_id == 3 {
            let at = QUERY_HEADER + payload_bytes;
            query = query.with_partition(read_u16(bytes, at));
        }
        Ok(Self {
            scheme_id,
            files,
            n,
            server_index,
            query,
        })
    }
}

/// An answer frame: a bit vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerMsg {
    /// One entry per answer bit, each 0 or 1. Empty answers are legal.
    pub bits: Vec<u8>,
}

impl AnswerMsg {
    pub fn encode(&self) -> Result<Vec<u8>> {
        if self.bits.iter().any(|&b| b > 1) {
            return Err(Error::Wire("answer entries must be bits".into()));
        }
        let len = u32::try_from(self.bits.len())
            .map_err(|_| Error::Wire("payload too long".into()))?;
        let mut out = Vec::with_capacity(ANSWER_HEADER + self.bits.len().div_ceil(8));
        out.extend_from_slice(&ANSWER_MAGIC);
        out.push(WIRE_VERSION);
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&pack_bits(&self.bits));
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < ANSWER_HEADER {
            return Err(Error::Wire("truncated answer frame".into()));
        }
        if bytes[..2] != ANSWER_MAGIC {
            return Err(Error::Wire("bad answer magic".into()));
        }
        if bytes[2] != WIRE_VERSION {
            return Err(Error::Wire(format!("unsupported version {}", bytes[2])));
        }
        let count = read_u32(bytes, 3) as usize;
        if bytes.len() != ANSWER_HEADER + count.div_ceil(8) {
            return Err(Error::Wire("payload size mismatch".into()));
        }
        Ok(Self {
            bits: unpack_bits(&bytes[ANSWER_HEADER..], count)?,
        })
    }
}
