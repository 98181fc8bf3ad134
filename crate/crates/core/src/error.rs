// SPDX-License-Identifier: Apache-2.0

use std::io;

use pepsi_wire::FrameError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("label has no keywords after normalization")]
    EmptyLabel,
    #[error("keyword is {0} bytes after normalization; the limit is {max}", max = crate::label::MAX_KEYWORD_LEN)]
    KeywordTooLong(usize),
    #[error("label has {0} keywords; the limit is {max}", max = crate::label::MAX_KEYWORDS)]
    TooManyKeywords(usize),
    #[error("identity bytes are not a canonical label encoding: {0}")]
    MalformedIdentity(&'static str),

    #[error("malformed key file: {0}")]
    MalformedKeyFile(String),
    #[error("unsupported file version {0}")]
    VersionMismatch(u8),
    #[error("key point is not in the prime-order subgroup")]
    GroupMembershipFailed,
    #[error("wrong passphrase or corrupted master key file")]
    MasterKeyDecryptFailed,
    #[error("invalid party id {0:?}")]
    InvalidPartyId(String),
    #[error("ledger write failed: {0}")]
    LedgerWriteFailed(#[source] io::Error),
    #[error("malformed ledger record at line {0}")]
    MalformedLedger(usize),

    #[error("measurement payload is empty")]
    EmptyPayload,
    #[error("measurement payload is {0} bytes; the limit is {max}", max = pepsi_wire::MAX_PAYLOAD_LEN)]
    PayloadTooLarge(usize),
    #[error("report failed authentication")]
    AuthenticationFailed,
    #[error("malformed report: {0}")]
    MalformedReport(#[source] FrameError),
    #[error("invalid subscription: {0}")]
    InvalidSubscription(#[source] FrameError),

    #[error("invalid scenario config: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
