// SPDX-License-Identifier: Apache-2.0

//! Pairing backend over BLS12-381.
//!
//! The scheme is written for a symmetric pairing `e: G0 x G0 -> GT`; BLS12-381
//! is asymmetric, so the generator `g` is realized as the pair `(g1, g2)` and
//! each key or ciphertext component is placed on whichever side keeps every
//! decryption equation well-typed:
//!
//! | component                 | group |
//! |---------------------------|-------|
//! | `h`, `C`, `C_y`           | G1    |
//! | `D_j'`                    | G1    |
//! | `g^alpha`, `D`, `D_j`     | G2    |
//! | `H(att)`, `C_y'`          | G2    |
//!
//! Elements travel as arkworks compressed encodings; scalars as 32-byte
//! big-endian integers. Decoding always validates curve and subgroup
//! membership.

use std::sync::OnceLock;

use ark_bls12_381::{g2, Bls12_381, Fr, G1Affine, G1Projective, G2Affine, G2Projective};
use ark_ec::{
    hashing::{curve_maps::wb::WBMap, map_to_curve_hasher::MapToCurveBasedHasher, HashToCurve},
    pairing::{Pairing, PairingOutput},
    short_weierstrass::{Affine, SWCurveConfig},
    AffineRepr, CurveGroup,
};
use ark_ff::{field_hashers::DefaultFieldHasher, BigInteger, PrimeField};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize, Compress, Validate};
use rand::{CryptoRng, RngCore};
use sha2::Sha256;

use crate::error::{Error, Result};
use crate::policy::validate_attribute;

pub type Scalar = Fr;
pub type Gt = PairingOutput<Bls12_381>;
pub use ark_bls12_381::{G1Affine as G1, G2Affine as G2};

/// Domain-separation tag for hashing attribute tokens onto the curve.
pub const ATTRIBUTE_DST: &[u8] = b"CPABE-ATTR-V1";

pub const GROUP_ID: &str = "BLS12-381";

type AttributeHasher =
    MapToCurveBasedHasher<G2Projective, DefaultFieldHasher<Sha256, 128>, WBMap<g2::Config>>;

fn attribute_hasher() -> &'static AttributeHasher {
    static HASHER: OnceLock<AttributeHasher> = OnceLock::new();
    HASHER.get_or_init(|| AttributeHasher::new(ATTRIBUTE_DST).expect("valid WB map parameters"))
}

/// The bilinear group everything else is built on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupContext {
    security_bits: u32,
    g1: G1Affine,
    g2: G2Affine,
    gt: Gt,
}

/// Returns the fixed BLS12-381 context. 128-bit is the only level offered.
pub fn group_setup(security_bits: u32) -> Result<GroupContext> {
    if security_bits != 128 {
        return Err(Error::UnsupportedSecurityLevel(security_bits));
    }
    let g1 = G1Affine::generator();
    let g2 = G2Affine::generator();
    Ok(GroupContext {
        security_bits,
        g1,
        g2,
        gt: Bls12_381::pairing(g1, g2),
    })
}

impl GroupContext {
    pub fn group_id(&self) -> &'static str {
        GROUP_ID
    }

    pub fn security_bits(&self) -> u32 {
        self.security_bits
    }

    /// Prime order `p` of every group, big-endian.
    pub fn order_be(&self) -> Vec<u8> {
        Fr::MODULUS.to_bytes_be()
    }

    pub fn g1(&self) -> G1Affine {
        self.g1
    }

    pub fn g2(&self) -> G2Affine {
        self.g2
    }

    /// `e(g1, g2)`, precomputed.
    pub fn gt(&self) -> Gt {
        self.gt
    }

    /// Deterministic encoding of the fixed parameters.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(GROUP_ID.as_bytes());
        out.extend_from_slice(&self.security_bits.to_be_bytes());
        out.extend_from_slice(&self.order_be());
        out.extend_from_slice(&self.g1.to_bytes());
        out.extend_from_slice(&self.g2.to_bytes());
        out
    }

    /// Hashes an attribute token into the prime-order subgroup of G2.
    pub fn hash_to_group(&self, attribute: &str) -> Result<G2Affine> {
        validate_attribute(attribute)?;
        attribute_hasher()
            .hash(attribute.as_bytes())
            .map_err(|e| Error::InvalidGroupElement(e.to_string()))
    }

    pub fn pair(&self, a: &G1Affine, b: &G2Affine) -> Gt {
        pair(a, b)
    }

    pub fn random_scalar<R: RngCore + CryptoRng + ?Sized>(&self, rng: &mut R) -> Result<Scalar> {
        random_scalar(rng)
    }
}

pub fn pair(a: &G1Affine, b: &G2Affine) -> Gt {
    Bls12_381::pairing(*a, *b)
}

/// Product of pairings with a single final exponentiation.
pub fn multi_pair(a: &[G1Affine], b: &[G2Affine]) -> Gt {
    debug_assert_eq!(a.len(), b.len());
    Bls12_381::multi_pairing(a.iter().copied(), b.iter().copied())
}

/// Uniform scalar from 512 bits of entropy reduced mod `p`.
pub fn random_scalar<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Result<Scalar> {
    let mut wide = [0u8; 64];
    rng.try_fill_bytes(&mut wide)
        .map_err(|e| Error::RandomnessUnavailable(e.to_string()))?;
    Ok(Fr::from_le_bytes_mod_order(&wide))
}

pub(crate) fn random_nonzero_scalar<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Result<Scalar> {
    loop {
        let s = random_scalar(rng)?;
        if s != Scalar::from(0u64) {
            return Ok(s);
        }
    }
}

pub(crate) fn g1_mul(p: &G1Affine, s: &Scalar) -> G1Affine {
    (G1Projective::from(*p) * s).into_affine()
}

pub(crate) fn g2_mul(p: &G2Affine, s: &Scalar) -> G2Affine {
    (G2Projective::from(*p) * s).into_affine()
}

/// Canonical byte encoding for scalars and group elements.
pub trait Encoding: Sized {
    fn to_bytes(&self) -> Vec<u8>;
    fn from_bytes(bytes: &[u8]) -> Result<Self>;
}

impl Encoding for Scalar {
    fn to_bytes(&self) -> Vec<u8> {
        let be = self.into_bigint().to_bytes_be();
        debug_assert_eq!(be.len(), 32);
        be
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != 32 {
            return Err(Error::InvalidGroupElement(format!(
                "scalar must be 32 bytes, got {}",
                bytes.len()
            )));
        }
        let mut le = bytes.to_vec();
        le.reverse();
        let mut limbs = [0u64; 4];
        for (limb, chunk) in limbs.iter_mut().zip(le.chunks_exact(8)) {
            *limb = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        Fr::from_bigint(ark_ff::BigInt(limbs))
            .ok_or_else(|| Error::InvalidGroupElement("scalar not reduced mod p".into()))
    }
}

fn ark_encode<T: CanonicalSerialize>(v: &T) -> Vec<u8> {
    let mut out = Vec::with_capacity(v.serialized_size(Compress::Yes));
    v.serialize_compressed(&mut out)
        .expect("serialization into a Vec cannot fail");
    out
}

fn ark_decode<T: CanonicalDeserialize + CanonicalSerialize>(bytes: &[u8], what: &str) -> Result<T> {
    let mut reader = bytes;
    let v = T::deserialize_with_mode(&mut reader, Compress::Yes, Validate::Yes)
        .map_err(|e| Error::InvalidGroupElement(format!("{what}: {e}")))?;
    if !reader.is_empty() {
        return Err(Error::InvalidGroupElement(format!("{what}: trailing bytes")));
    }
    Ok(v)
}

impl<P: SWCurveConfig> Encoding for Affine<P> {
    fn to_bytes(&self) -> Vec<u8> {
        ark_encode(self)
    }
    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        ark_decode(bytes, "curve point")
    }
}

impl Encoding for Gt {
    fn to_bytes(&self) -> Vec<u8> {
        ark_encode(self)
    }
    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        ark_decode(bytes, "GT")
    }
}
