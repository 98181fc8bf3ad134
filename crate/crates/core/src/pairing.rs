// SPDX-License-Identifier: Apache-2.0

//! Thin wrapper over the BLS12-381 type-3 pairing plus the hash and KDF
//! primitives built on it.
//!
//! Every value here is immutable and `Send + Sync`. Nothing outside this
//! module touches arkworks types directly.

use std::fmt;
use std::ops::Mul;

use ark_bls12_381::{g1, g2, Bls12_381, Fr, G1Affine, G1Projective, G2Affine, G2Projective};
use ark_ec::hashing::curve_maps::wb::WBMap;
use ark_ec::hashing::map_to_curve_hasher::MapToCurveBasedHasher;
use ark_ec::hashing::HashToCurve;
use ark_ec::pairing::{Pairing, PairingOutput};
use ark_ec::{AffineRepr, CurveGroup, PrimeGroup};
use ark_ff::field_hashers::DefaultFieldHasher;
use ark_ff::{UniformRand, Zero};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize, Compress, Validate};
use hkdf::Hkdf;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use zeroize::{Zeroize, ZeroizeOnDrop};

pub use pepsi_wire::{Tag, TAG_LEN};

/// Domain-separation constants. Bit-exact ASCII, bound to protocol version 1.
pub mod domain {
    pub const H1: &[u8] = b"PEPSI-v1-H1";
    pub const H2: &[u8] = b"PEPSI-v1-H2";
    pub const TAG: &[u8] = b"PEPSI-v1-TAG";
    pub const ENC: &[u8] = b"PEPSI-v1-ENC";
}

pub const CURVE_ID: &str = "BLS12-381";

pub const SCALAR_LEN: usize = 32;
pub const G1_LEN: usize = 48;
pub const G2_LEN: usize = 96;
pub const GT_LEN: usize = 576;
pub const SYMMETRIC_KEY_LEN: usize = 32;

type G1Hasher = MapToCurveBasedHasher<G1Projective, DefaultFieldHasher<Sha256, 128>, WBMap<g1::Config>>;
type G2Hasher = MapToCurveBasedHasher<G2Projective, DefaultFieldHasher<Sha256, 128>, WBMap<g2::Config>>;

/// Why a byte string failed to decode as a group element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointError {
    /// Wrong length, bad flags, or x-coordinate not on the curve.
    Malformed,
    /// On the curve but outside the prime-order subgroup.
    NotInSubgroup,
}

/// Integer modulo the BLS12-381 group order r.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Scalar(Fr);

impl Scalar {
    pub fn zero() -> Self {
        Scalar(Fr::zero())
    }

    pub fn one() -> Self {
        Scalar(Fr::from(1u64))
    }

    pub fn from_u64(v: u64) -> Self {
        Scalar(Fr::from(v))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Little-endian canonical encoding.
    pub fn to_bytes(&self) -> [u8; SCALAR_LEN] {
        let mut out = [0u8; SCALAR_LEN];
        self.0
            .serialize_compressed(&mut out[..])
            .expect("scalar fits in 32 bytes");
        out
    }

    /// Rejects non-canonical encodings (values >= r).
    pub fn from_bytes(bytes: &[u8; SCALAR_LEN]) -> Option<Self> {
        Fr::deserialize_compressed(&bytes[..]).ok().map(Scalar)
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 * rhs.0)
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Scalar(..)")
    }
}

/// Element of the first source group, always in the prime-order subgroup.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct G1Element(G1Affine);

/// Element of the second source group, always in the prime-order subgroup.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct G2Element(G2Affine);

macro_rules! impl_source_group {
    ($name:ident, $affine:ty, $proj:ty, $len:expr) => {
        impl $name {
            pub fn generator() -> Self {
                $name(<$proj>::generator().into_affine())
            }

            pub fn identity() -> Self {
                $name(<$affine>::zero())
            }

            pub fn is_identity(&self) -> bool {
                self.0.is_zero()
            }

            /// Standard compressed encoding.
            pub fn to_bytes(&self) -> [u8; $len] {
                let mut out = [0u8; $len];
                self.0
                    .serialize_compressed(&mut out[..])
                    .expect("compressed point length");
                out
            }

            /// Decodes a compressed point and checks subgroup membership.
            pub fn from_bytes(bytes: &[u8]) -> Result<Self, PointError> {
                if bytes.len() != $len {
                    return Err(PointError::Malformed);
                }
                let point = <$affine>::deserialize_with_mode(bytes, Compress::Yes, Validate::No)
                    .map_err(|_| PointError::Malformed)?;
                if !point.is_on_curve() {
                    return Err(PointError::Malformed);
                }
                if !point.is_in_correct_subgroup_assuming_on_curve() {
                    return Err(PointError::NotInSubgroup);
                }
                Ok($name(point))
            }

            pub fn mul(&self, k: &Scalar) -> Self {
                $name((self.0 * k.0).into_affine())
            }
        }
    };
}

impl_source_group!(G1Element, G1Affine, G1Projective, G1_LEN);
impl_source_group!(G2Element, G2Affine, G2Projective, G2_LEN);

/// Element of the pairing target group.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct GtElement(PairingOutput<Bls12_381>);

impl GtElement {
    pub fn identity() -> Self {
        GtElement(PairingOutput::zero())
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_zero()
    }

    /// Exponentiation in the (multiplicative) target group.
    pub fn pow(&self, k: &Scalar) -> Self {
        GtElement(self.0 * k.0)
    }

    /// Group operation in the target group.
    pub fn combine(&self, other: &GtElement) -> Self {
        GtElement(self.0 + other.0)
    }

    /// Canonical uncompressed Fp12 encoding; equal elements give equal bytes.
    pub fn to_bytes(&self) -> [u8; GT_LEN] {
        let mut out = [0u8; GT_LEN];
        self.0
            .serialize_uncompressed(&mut out[..])
            .expect("target group element length");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != GT_LEN {
            return None;
        }
        PairingOutput::<Bls12_381>::deserialize_uncompressed(bytes)
            .ok()
            .map(GtElement)
    }
}

/// 32-byte AEAD key. Zeroized on drop; has no serialization and a redacted
/// `Debug`.
#[derive(Clone, PartialEq, Eq, Zeroize, ZeroizeOnDrop)]
pub struct SymmetricKey([u8; SYMMETRIC_KEY_LEN]);

impl SymmetricKey {
    pub(crate) fn expose(&self) -> &[u8; SYMMETRIC_KEY_LEN] {
        &self.0
    }
}

impl fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SymmetricKey(<redacted>)")
    }
}

/// Uniform nonzero scalar.
pub fn random_scalar<R: RngCore + CryptoRng>(rng: &mut R) -> Scalar {
    loop {
        let k = Fr::rand(rng);
        if !k.is_zero() {
            return Scalar(k);
        }
    }
}

/// Hash-to-curve into G1 (RFC 9380 `BLS12381G1_XMD:SHA-256_SSWU_RO_`), with
/// `domain` as the DST.
pub fn hash_to_g1(identity: &[u8], domain: &[u8]) -> G1Element {
    let hasher = G1Hasher::new(domain).expect("SSWU parameters for BLS12-381 G1");
    G1Element(hasher.hash(identity).expect("SSWU map is total"))
}

/// Hash-to-curve into G2 (RFC 9380 `BLS12381G2_XMD:SHA-256_SSWU_RO_`).
pub fn hash_to_g2(identity: &[u8], domain: &[u8]) -> G2Element {
    let hasher = G2Hasher::new(domain).expect("SSWU parameters for BLS12-381 G2");
    G2Element(hasher.hash(identity).expect("SSWU map is total"))
}

pub fn pair(a: &G1Element, b: &G2Element) -> GtElement {
    GtElement(Bls12_381::pairing(a.0, b.0))
}

pub fn scalar_mul_g1(k: &Scalar, p: &G1Element) -> G1Element {
    p.mul(k)
}

pub fn scalar_mul_g2(k: &Scalar, p: &G2Element) -> G2Element {
    p.mul(k)
}

/// First 20 bytes of `SHA-256(TAG-domain || bytes(shared))`.
pub fn derive_tag(shared: &GtElement) -> Tag {
    let digest = Sha256::new()
        .chain_update(domain::TAG)
        .chain_update(shared.to_bytes())
        .finalize();
    Tag::from_slice(&digest[..TAG_LEN]).expect("digest longer than tag")
}

/// HKDF-SHA256 over `bytes(shared)` with the ENC domain as info.
pub fn derive_key(shared: &GtElement) -> SymmetricKey {
    let hk = Hkdf::<Sha256>::new(None, &shared.to_bytes());
    let mut okm = [0u8; SYMMETRIC_KEY_LEN];
    hk.expand(domain::ENC, &mut okm)
        .expect("32 bytes is a valid HKDF-SHA256 length");
    SymmetricKey(okm)
}
