// SPDX-License-Identifier: Apache-2.0

//! Wire-level types shared by every party.
//!
//! This crate deliberately knows nothing about labels, keys, or pairings: a
//! [`Tag`] is 20 opaque bytes, and frames are plain byte layouts. The service
//! provider is built against this crate alone.
//!
//! Report frame (`PEPR`):
//!
//! ```text
//! "PEPR" | version u8 = 1 | tag 20B | nonce 12B | payload-len u32 BE | ciphertext (payload-len + 16)
//! ```
//!
//! Subscription frame (`PEPS`):
//!
//! ```text
//! "PEPS" | version u8 = 1 | tag 20B | endpoint-len u16 BE | endpoint bytes
//! ```

use std::fmt;

use thiserror::Error;

/// Protocol version carried in every frame header.
pub const PROTOCOL_VERSION: u8 = 1;

/// Length of a [`Tag`] in bytes (160 bits).
pub const TAG_LEN: usize = 20;
/// Length of the per-report AEAD nonce.
pub const NONCE_LEN: usize = 12;
/// Length of the AEAD authentication tag appended to every ciphertext.
pub const AUTH_TAG_LEN: usize = 16;
/// Largest accepted measurement payload.
pub const MAX_PAYLOAD_LEN: usize = 4096;

pub const REPORT_MAGIC: [u8; 4] = *b"PEPR";
pub const SUBSCRIPTION_MAGIC: [u8; 4] = *b"PEPS";

/// Bytes preceding the ciphertext in a report frame.
pub const REPORT_HEADER_LEN: usize = 4 + 1 + TAG_LEN + NONCE_LEN + 4;
/// Serialized report length minus payload length.
pub const REPORT_OVERHEAD: usize = REPORT_HEADER_LEN + AUTH_TAG_LEN;
/// Bytes preceding the endpoint in a subscription frame.
pub const SUBSCRIPTION_HEADER_LEN: usize = 4 + 1 + TAG_LEN + 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("frame truncated: need at least {needed} bytes, got {actual}")]
    Truncated { needed: usize, actual: usize },
    #[error("bad frame magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported frame version {0}")]
    VersionMismatch(u8),
    #[error("payload length {0} outside 1..={MAX_PAYLOAD_LEN}")]
    PayloadLength(usize),
    #[error("frame length mismatch: header declares {declared} bytes, frame has {actual}")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("subscription endpoint is empty")]
    EmptyEndpoint,
    #[error("subscription endpoint longer than {max} bytes", max = u16::MAX)]
    EndpointTooLong,
}

/// 160-bit opaque matching token. Compared by byte equality only.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tag([u8; TAG_LEN]);

impl Tag {
    pub const fn from_bytes(bytes: [u8; TAG_LEN]) -> Self {
        Tag(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        bytes.try_into().ok().map(Tag)
    }

    pub const fn as_bytes(&self) -> &[u8; TAG_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tag({})", self.to_hex())
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl AsRef<[u8]> for Tag {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

fn check_header(bytes: &[u8], magic: [u8; 4], min_len: usize) -> Result<(), FrameError> {
    if bytes.len() < min_len {
        return Err(FrameError::Truncated {
            needed: min_len,
            actual: bytes.len(),
        });
    }
    let got: [u8; 4] = bytes[..4].try_into().expect("length checked");
    if got != magic {
        return Err(FrameError::BadMagic(got));
    }
    if bytes[4] != PROTOCOL_VERSION {
        return Err(FrameError::VersionMismatch(bytes[4]));
    }
    Ok(())
}

/// Validates report framing and returns the tag without touching the ciphertext.
///
/// Only the tag and the declared/actual lengths are inspected; this is all the
/// service provider ever looks at.
pub fn peek_report_tag(bytes: &[u8]) -> Result<Tag, FrameError> {
    check_header(bytes, REPORT_MAGIC, REPORT_HEADER_LEN)?;
    let len_at = REPORT_HEADER_LEN - 4;
    let payload_len =
        u32::from_be_bytes(bytes[len_at..REPORT_HEADER_LEN].try_into().expect("4 bytes")) as usize;
    if payload_len == 0 || payload_len > MAX_PAYLOAD_LEN {
        return Err(FrameError::PayloadLength(payload_len));
    }
    let declared = REPORT_OVERHEAD + payload_len;
    if bytes.len() != declared {
        return Err(FrameError::LengthMismatch {
            declared,
            actual: bytes.len(),
        });
    }
    Ok(Tag::from_slice(&bytes[5..5 + TAG_LEN]).expect("20 bytes"))
}

/// A parsed `PEPR` frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFrame {
    pub tag: Tag,
    pub nonce: [u8; NONCE_LEN],
    /// AEAD output: payload followed by the 16-byte authentication tag.
    pub ciphertext: Vec<u8>,
}

impl ReportFrame {
    /// Length of the plaintext this frame carries.
    pub fn payload_len(&self) -> usize {
        self.ciphertext.len().saturating_sub(AUTH_TAG_LEN)
    }

    /// `tag || nonce`, bound into the ciphertext as associated data.
    pub fn associated_data(&self) -> [u8; TAG_LEN + NONCE_LEN] {
        associated_data(&self.tag, &self.nonce)
    }

    pub fn encoded_len(&self) -> usize {
        REPORT_HEADER_LEN + self.ciphertext.len()
    }

    /// Panics if the ciphertext is shorter than the authentication tag or the
    /// payload exceeds [`MAX_PAYLOAD_LEN`]; frames built by the node pipeline
    /// never are.
    pub fn encode(&self) -> Vec<u8> {
        let payload_len = self.payload_len();
        assert!(
            self.ciphertext.len() > AUTH_TAG_LEN && payload_len <= MAX_PAYLOAD_LEN,
            "report ciphertext length {} out of range",
            self.ciphertext.len()
        );
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&REPORT_MAGIC);
        out.push(PROTOCOL_VERSION);
        out.extend_from_slice(self.tag.as_bytes());
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&(payload_len as u32).to_be_bytes());
        out.extend_from_slice(&self.ciphertext);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        let tag = peek_report_tag(bytes)?;
        let nonce_at = 5 + TAG_LEN;
        let nonce = bytes[nonce_at..nonce_at + NONCE_LEN]
            .try_into()
            .expect("12 bytes");
        Ok(ReportFrame {
            tag,
            nonce,
            ciphertext: bytes[REPORT_HEADER_LEN..].to_vec(),
        })
    }
}

pub fn associated_data(tag: &Tag, nonce: &[u8; NONCE_LEN]) -> [u8; TAG_LEN + NONCE_LEN] {
    let mut ad = [0u8; TAG_LEN + NONCE_LEN];
    ad[..TAG_LEN].copy_from_slice(tag.as_bytes());
    ad[TAG_LEN..].copy_from_slice(nonce);
    ad
}

/// A parsed `PEPS` frame. Holds a tag and an opaque endpoint, nothing else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubscriptionFrame {
    pub tag: Tag,
    pub endpoint: Vec<u8>,
}

impl SubscriptionFrame {
    pub fn new(tag: Tag, endpoint: impl Into<Vec<u8>>) -> Result<Self, FrameError> {
        let endpoint = endpoint.into();
        if endpoint.is_empty() {
            return Err(FrameError::EmptyEndpoint);
        }
        if endpoint.len() > u16::MAX as usize {
            return Err(FrameError::EndpointTooLong);
        }
        Ok(SubscriptionFrame { tag, endpoint })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(SUBSCRIPTION_HEADER_LEN + self.endpoint.len());
        out.extend_from_slice(&SUBSCRIPTION_MAGIC);
        out.push(PROTOCOL_VERSION);
        out.extend_from_slice(self.tag.as_bytes());
        out.extend_from_slice(&(self.endpoint.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.endpoint);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        check_header(bytes, SUBSCRIPTION_MAGIC, SUBSCRIPTION_HEADER_LEN)?;
        let tag = Tag::from_slice(&bytes[5..5 + TAG_LEN]).expect("20 bytes");
        let len_at = 5 + TAG_LEN;
        let endpoint_len =
            u16::from_be_bytes([bytes[len_at], bytes[len_at + 1]]) as usize;
        let declared = SUBSCRIPTION_HEADER_LEN + endpoint_len;
        if bytes.len() != declared {
            return Err(FrameError::LengthMismatch {
                declared,
                actual: bytes.len(),
            });
        }
        SubscriptionFrame::new(tag, &bytes[SUBSCRIPTION_HEADER_LEN..])
    }
}
