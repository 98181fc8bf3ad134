// SPDX-License-Identifier: Apache-2.0

//! The offline registration authority.
//!
//! Holds the master scalar `z` and issues per-label keys:
//!
//! - node key (G1):    `z · H1(id)`
//! - querier key (G2): `z · H2(id)`
//!
//! where `id` is the label's identity encoding. Both sides then reach the same
//! target-group value `e(H1(id), H2(id))^z`. The issuance formula is a
//! reconstruction; it is the simplest form under which two different secrets
//! derive one shared tag through a type-3 pairing.
//!
//! Key file layout:
//!
//! ```text
//! "PEPK" | version u8 = 1 | role u8 (0 = node, 1 = querier) | id-len u16 BE | identity bytes | compressed point
//! ```
//!
//! Master key file layout (encrypted at rest):
//!
//! ```text
//! "PEPM" | version u8 = 1 | pbkdf2 iterations u32 BE | salt 16B | nonce 12B | AES-256-GCM(scalar 32B) 48B
//! ```

use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes256Gcm, Nonce};
use rand::{CryptoRng, RngCore};
use sha2::Sha256;
use zeroize::Zeroizing;

use crate::error::{Error, Result};
use crate::label::{encode_identity, IdentityBytes, Label};
use crate::pairing::{
    domain, hash_to_g1, hash_to_g2, random_scalar, G1Element, G2Element, PointError, Scalar,
    CURVE_ID, G1_LEN, G2_LEN, SCALAR_LEN,
};

pub use pepsi_wire::PROTOCOL_VERSION;

pub const KEY_FILE_MAGIC: [u8; 4] = *b"PEPK";
pub const MASTER_FILE_MAGIC: [u8; 4] = *b"PEPM";

const MASTER_SALT_LEN: usize = 16;
const MASTER_NONCE_LEN: usize = 12;
const MASTER_HEADER_LEN: usize = 4 + 1 + 4 + MASTER_SALT_LEN + MASTER_NONCE_LEN;
const MASTER_FILE_LEN: usize = MASTER_HEADER_LEN + SCALAR_LEN + 16;
pub const DEFAULT_PBKDF2_ITERATIONS: u32 = 100_000;

/// Public parameters shared by every party.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemParams {
    pub protocol_version: u8,
    pub g1_generator: G1Element,
    pub g2_generator: G2Element,
    pub curve_id: &'static str,
}

impl SystemParams {
    pub fn standard() -> Self {
        SystemParams {
            protocol_version: PROTOCOL_VERSION,
            g1_generator: G1Element::generator(),
            g2_generator: G2Element::generator(),
            curve_id: CURVE_ID,
        }
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::standard()
    }
}

/// The authority's root secret. Never leaves this module except sealed under
/// a passphrase.
pub struct MasterSecret {
    z: Scalar,
}

impl fmt::Debug for MasterSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MasterSecret(<redacted>)")
    }
}

pub fn setup<R: RngCore + CryptoRng>(rng: &mut R) -> (MasterSecret, SystemParams) {
    (MasterSecret::generate(rng), SystemParams::standard())
}

fn derive_wrapping_key(passphrase: &[u8], salt: &[u8], iterations: u32) -> Zeroizing<[u8; 32]> {
    let mut key = Zeroizing::new([0u8; 32]);
    pbkdf2::pbkdf2_hmac::<Sha256>(passphrase, salt, iterations, key.as_mut());
    key
}

impl MasterSecret {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        MasterSecret {
            z: random_scalar(rng),
        }
    }

    /// Fixed secret, for reference vectors and tests. Zero is rejected.
    pub fn from_scalar(z: Scalar) -> Option<Self> {
        (!z.is_zero()).then_some(MasterSecret { z })
    }

    pub fn issue_node_key(&self, label: &Label) -> NodeKey {
        let id = encode_identity(label);
        NodeKey {
            label: label.clone(),
            key: hash_to_g1(id.as_bytes(), domain::H1).mul(&self.z),
        }
    }

    pub fn issue_querier_key(&self, label: &Label) -> QuerierKey {
        let id = encode_identity(label);
        QuerierKey {
            label: label.clone(),
            key: hash_to_g2(id.as_bytes(), domain::H2).mul(&self.z),
        }
    }

    /// Encrypts the secret under a passphrase-derived key. Salt and nonce come
    /// from `rng`, so a seeded rng gives a reproducible file.
    pub fn seal<R: RngCore + CryptoRng>(
        &self,
        passphrase: &[u8],
        iterations: u32,
        rng: &mut R,
    ) -> Vec<u8> {
        let mut salt = [0u8; MASTER_SALT_LEN];
        let mut nonce = [0u8; MASTER_NONCE_LEN];
        rng.fill_bytes(&mut salt);
        rng.fill_bytes(&mut nonce);

        let mut out = Vec::with_capacity(MASTER_FILE_LEN);
        out.extend_from_slice(&MASTER_FILE_MAGIC);
        out.push(PROTOCOL_VERSION);
        out.extend_from_slice(&iterations.to_be_bytes());
        out.extend_from_slice(&salt);
        out.extend_from_slice(&nonce);

        let key = derive_wrapping_key(passphrase, &salt, iterations);
        let cipher = Aes256Gcm::new(key.as_ref().into());
        let plain = Zeroizing::new(self.z.to_bytes());
        let ct = cipher
            .encrypt(
                Nonce::from_slice(&nonce),
                Payload {
                    msg: plain.as_ref(),
                    aad: &out,
                },
            )
            .expect("AES-GCM encryption of 32 bytes");
        out.extend_from_slice(&ct);
        out
    }

    pub fn unseal(bytes: &[u8], passphrase: &[u8]) -> Result<Self> {
        if bytes.len() < 5 || bytes[..4] != MASTER_FILE_MAGIC {
            return Err(Error::MalformedKeyFile("not a master key file".into()));
        }
        if bytes[4] != PROTOCOL_VERSION {
            return Err(Error::VersionMismatch(bytes[4]));
        }
        if bytes.len() != MASTER_FILE_LEN {
            return Err(Error::MalformedKeyFile(format!(
                "master key file is {} bytes, expected {MASTER_FILE_LEN}",
                bytes.len()
            )));
        }
        let (header, ct) = bytes.split_at(MASTER_HEADER_LEN);
        let iterations = u32::from_be_bytes(header[5..9].try_into().expect("4 bytes"));
        if iterations == 0 {
            return Err(Error::MalformedKeyFile("zero pbkdf2 iterations".into()));
        }
        let salt = &header[9..9 + MASTER_SALT_LEN];
        let nonce = &header[9 + MASTER_SALT_LEN..];
        let key = derive_wrapping_key(passphrase, salt, iterations);
        let cipher = Aes256Gcm::new(key.as_ref().into());
        let plain = Zeroizing::new(
            cipher
                .decrypt(Nonce::from_slice(nonce), Payload { msg: ct, aad: header })
                .map_err(|_| Error::MasterKeyDecryptFailed)?,
        );
        let scalar_bytes: [u8; SCALAR_LEN] = plain[..].try_into().expect("32-byte plaintext");
        Scalar::from_bytes(&scalar_bytes)
            .and_then(MasterSecret::from_scalar)
            .ok_or_else(|| Error::MalformedKeyFile("master scalar out of range".into()))
    }

    pub fn save<R: RngCore + CryptoRng>(
        &self,
        path: impl AsRef<Path>,
        passphrase: &[u8],
        rng: &mut R,
    ) -> Result<()> {
        write_file_atomic(path.as_ref(), &self.seal(passphrase, DEFAULT_PBKDF2_ITERATIONS, rng))
    }

    pub fn load(path: impl AsRef<Path>, passphrase: &[u8]) -> Result<Self> {
        Self::unseal(&fs::read(path)?, passphrase)
    }
}

/// Writes to a sibling temp file and renames it over `path`.
pub(crate) fn write_file_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Node,
    Querier,
}

impl Role {
    fn code(self) -> u8 {
        match self {
            Role::Node => 0,
            Role::Querier => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Node => "node",
            Role::Querier => "querier",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tagging secret held by a mobile node for one label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeKey {
    label: Label,
    key: G1Element,
}

/// Decryption and subscription secret held by a querier for one label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerierKey {
    label: Label,
    key: G2Element,
}

impl NodeKey {
    pub fn label(&self) -> &Label {
        &self.label
    }

    pub fn point(&self) -> &G1Element {
        &self.key
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode_key_file(Role::Node, &self.label, &self.key.to_bytes())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        match IssuedKey::from_bytes(bytes)? {
            IssuedKey::Node(k) => Ok(k),
            IssuedKey::Querier(_) => Err(Error::MalformedKeyFile(
                "expected a node key, found a querier key".into(),
            )),
        }
    }
}

impl QuerierKey {
    pub fn label(&self) -> &Label {
        &self.label
    }

    pub fn point(&self) -> &G2Element {
        &self.key
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode_key_file(Role::Querier, &self.label, &self.key.to_bytes())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        match IssuedKey::from_bytes(bytes)? {
            IssuedKey::Querier(k) => Ok(k),
            IssuedKey::Node(_) => Err(Error::MalformedKeyFile(
                "expected a querier key, found a node key".into(),
            )),
        }
    }
}

/// Either kind of issued key, as read back from a key file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IssuedKey {
    Node(NodeKey),
    Querier(QuerierKey),
}

impl From<NodeKey> for IssuedKey {
    fn from(k: NodeKey) -> Self {
        IssuedKey::Node(k)
    }
}

impl From<QuerierKey> for IssuedKey {
    fn from(k: QuerierKey) -> Self {
        IssuedKey::Querier(k)
    }
}

fn encode_key_file(role: Role, label: &Label, point: &[u8]) -> Vec<u8> {
    let id = encode_identity(label);
    let mut out = Vec::with_capacity(8 + id.as_bytes().len() + point.len());
    out.extend_from_slice(&KEY_FILE_MAGIC);
    out.push(PROTOCOL_VERSION);
    out.push(role.code());
    out.extend_from_slice(&(id.as_bytes().len() as u16).to_be_bytes());
    out.extend_from_slice(id.as_bytes());
    out.extend_from_slice(point);
    out
}

fn point_error(e: PointError) -> Error {
    match e {
        PointError::Malformed => Error::MalformedKeyFile("invalid point encoding".into()),
        PointError::NotInSubgroup => Error::GroupMembershipFailed,
    }
}

impl IssuedKey {
    pub fn role(&self) -> Role {
        match self {
            IssuedKey::Node(_) => Role::Node,
            IssuedKey::Querier(_) => Role::Querier,
        }
    }

    pub fn label(&self) -> &Label {
        match self {
            IssuedKey::Node(k) => &k.label,
            IssuedKey::Querier(k) => &k.label,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            IssuedKey::Node(k) => k.to_bytes(),
            IssuedKey::Querier(k) => k.to_bytes(),
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let malformed = |msg: &str| Error::MalformedKeyFile(msg.to_owned());
        if bytes.len() < 8 {
            return Err(malformed("key file truncated"));
        }
        if bytes[..4] != KEY_FILE_MAGIC {
            return Err(malformed("bad magic"));
        }
        if bytes[4] != PROTOCOL_VERSION {
            return Err(Error::VersionMismatch(bytes[4]));
        }
        let role = match bytes[5] {
            0 => Role::Node,
            1 => Role::Querier,
            _ => return Err(malformed("unknown role")),
        };
        let id_len = u16::from_be_bytes([bytes[6], bytes[7]]) as usize;
        let point_len = match role {
            Role::Node => G1_LEN,
            Role::Querier => G2_LEN,
        };
        if bytes.len() != 8 + id_len + point_len {
            return Err(malformed("length does not match header"));
        }
        let (id, point) = bytes[8..].split_at(id_len);
        let label = IdentityBytes::decode(id).map_err(|e| Error::MalformedKeyFile(e.to_string()))?;
        Ok(match role {
            Role::Node => IssuedKey::Node(NodeKey {
                label,
                key: G1Element::from_bytes(point).map_err(point_error)?,
            }),
            Role::Querier => IssuedKey::Querier(QuerierKey {
                label,
                key: G2Element::from_bytes(point).map_err(point_error)?,
            }),
        })
    }
}

pub fn export_key(key: &IssuedKey, path: impl AsRef<Path>) -> Result<()> {
    write_file_atomic(path.as_ref(), &key.to_bytes())
}

pub fn import_key(path: impl AsRef<Path>) -> Result<IssuedKey> {
    IssuedKey::from_bytes(&fs::read(path)?)
}

/// One issuance record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerEntry {
    pub party_id: String,
    pub role: Role,
    pub label: Label,
    pub issued_at: u64,
}

impl LedgerEntry {
    /// `party-id \t role \t label-hex \t unix-time \n`
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\n",
            self.party_id,
            self.role,
            hex::encode(encode_identity(&self.label).as_bytes()),
            self.issued_at
        )
    }

    fn parse(line: &str, line_no: usize) -> Result<Self> {
        let bad = || Error::MalformedLedger(line_no);
        let mut fields = line.split('\t');
        let (Some(party), Some(role), Some(label), Some(time), None) = (
            fields.next(),
            fields.next(),
            fields.next(),
            fields.next(),
            fields.next(),
        ) else {
            return Err(bad());
        };
        validate_party_id(party).map_err(|_| bad())?;
        let role = match role {
            "node" => Role::Node,
            "querier" => Role::Querier,
            _ => return Err(bad()),
        };
        let id = hex::decode(label).map_err(|_| bad())?;
        Ok(LedgerEntry {
            party_id: party.to_owned(),
            role,
            label: IdentityBytes::decode(&id).map_err(|_| bad())?,
            issued_at: time.parse().map_err(|_| bad())?,
        })
    }
}

fn validate_party_id(id: &str) -> Result<()> {
    if id.is_empty() || id.contains(['\t', '\n', '\r']) {
        return Err(Error::InvalidPartyId(id.to_owned()));
    }
    Ok(())
}

/// Append-only issuance log.
///
/// Each record is one line written with a single `write` followed by an
/// fsync. A crash mid-write can only leave an unterminated trailing line;
/// readers skip it and the next writer truncates it before appending.
#[derive(Debug, Default)]
pub struct Ledger {
    path: Option<PathBuf>,
    entries: Vec<LedgerEntry>,
}

impl Ledger {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or creates) a file-backed ledger for writing.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(&path)?;
        let mut raw = Vec::new();
        file.read_to_end(&mut raw)?;
        let complete = raw.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        if complete != raw.len() {
            file.set_len(complete as u64)?;
            file.sync_all()?;
        }
        let entries = parse_ledger(&raw[..complete])?;
        Ok(Ledger {
            path: Some(path),
            entries,
        })
    }

    /// Reads a consistent snapshot without taking the writer role.
    pub fn snapshot(path: impl AsRef<Path>) -> Result<Vec<LedgerEntry>> {
        let raw = fs::read(path)?;
        let complete = raw.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        parse_ledger(&raw[..complete])
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn append(&mut self, entry: LedgerEntry) -> Result<()> {
        validate_party_id(&entry.party_id)?;
        if let Some(path) = &self.path {
            let line = entry.to_line();
            let mut f = OpenOptions::new()
                .append(true)
                .open(path)
                .map_err(Error::LedgerWriteFailed)?;
            f.write_all(line.as_bytes())
                .and_then(|()| f.sync_data())
                .map_err(Error::LedgerWriteFailed)?;
        }
        self.entries.push(entry);
        Ok(())
    }
}

fn parse_ledger(raw: &[u8]) -> Result<Vec<LedgerEntry>> {
    let text = std::str::from_utf8(raw).map_err(|_| Error::MalformedLedger(0))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| LedgerEntry::parse(line, i + 1))
        .collect()
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Master secret plus ledger. Issuance takes `&mut self`, so registrations
/// are serialized.
#[derive(Debug)]
pub struct RegistrationAuthority {
    master: MasterSecret,
    params: SystemParams,
    ledger: Ledger,
}

impl RegistrationAuthority {
    pub fn new(master: MasterSecret, ledger: Ledger) -> Self {
        RegistrationAuthority {
            master,
            params: SystemParams::standard(),
            ledger,
        }
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn register_node(&mut self, label: &Label, node_id: &str) -> Result<NodeKey> {
        validate_party_id(node_id)?;
        let key = self.master.issue_node_key(label);
        self.record(node_id, Role::Node, label)?;
        Ok(key)
    }

    pub fn register_querier(&mut self, label: &Label, querier_id: &str) -> Result<QuerierKey> {
        validate_party_id(querier_id)?;
        let key = self.master.issue_querier_key(label);
        self.record(querier_id, Role::Querier, label)?;
        Ok(key)
    }

    fn record(&mut self, party_id: &str, role: Role, label: &Label) -> Result<()> {
        self.ledger.append(LedgerEntry {
            party_id: party_id.to_owned(),
            role,
            label: label.clone(),
            issued_at: unix_now(),
        })
    }
}
