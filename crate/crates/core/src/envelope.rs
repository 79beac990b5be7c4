// SPDX-License-Identifier: Apache-2.0

//! KEM/DEM envelope.
//!
//! The ABE layer encapsulates a random target-group element; the data key is
//! `SHA-256("CPABE-DEM-V1" || encode(M))`. Payload bytes are AES-256-CBC with
//! PKCS#7 padding, either under an all-zero IV (DET: equal plaintexts give
//! equal ciphertexts under one key) or a fresh random IV (RND).
//!
//! There is no MAC on field ciphertexts; only the wrapped key carries a digest.
//! CBC without authentication is malleable and exposes a padding oracle to
//! anyone who can submit ciphertexts for decryption.

use std::fmt;

use aes::cipher::{block_padding::Pkcs7, BlockDecryptMut, BlockEncryptMut, KeyIvInit};
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use crate::abe::{self, AbeCiphertext, LeafCiphertext, PrivateKey, PublicParams};
use crate::error::{Error, Result};
use crate::pairing::{Encoding, Gt, G1, G2};
use crate::policy::AccessTree;
use crate::wire::{Reader, Writer};

type Aes256CbcEnc = cbc::Encryptor<aes::Aes256>;
type Aes256CbcDec = cbc::Decryptor<aes::Aes256>;

pub const DEM_KDF_TAG: &[u8] = b"CPABE-DEM-V1";
const DEK_DIGEST_TAG: &[u8] = b"CPABE-DEK-DIGEST-V1";
const DEK_ID_TAG: &[u8] = b"CPABE-DEK-ID-V1";

const FIELD_MAGIC: &[u8; 4] = b"CPFC";
const WRAPPED_MAGIC: &[u8; 4] = b"CPWK";
const FILE_MAGIC: &[u8; 4] = b"CPEF";
const VERSION: u8 = 0x01;

pub const BLOCK: usize = 16;

/// 32-byte symmetric data key plus its identifier.
#[derive(Clone, PartialEq, Eq)]
pub struct Dek {
    key_bytes: [u8; 32],
    dek_id: [u8; 16],
}

impl fmt::Debug for Dek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dek")
            .field("dek_id", &hex::encode(self.dek_id))
            .finish_non_exhaustive()
    }
}

impl Dek {
    /// A key not bound to any ABE encapsulation, for symmetric-only use.
    pub fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Result<Self> {
        let mut key_bytes = [0u8; 32];
        rng.try_fill_bytes(&mut key_bytes)
            .map_err(|e| Error::RandomnessUnavailable(e.to_string()))?;
        Ok(Self::from_key_bytes(key_bytes))
    }

    pub fn from_key_bytes(key_bytes: [u8; 32]) -> Self {
        let dek_id = dek_id_for(&dek_digest(&key_bytes));
        Dek { key_bytes, dek_id }
    }

    pub fn key_bytes(&self) -> &[u8; 32] {
        &self.key_bytes
    }

    pub fn dek_id(&self) -> [u8; 16] {
        self.dek_id
    }

    pub fn digest(&self) -> [u8; 32] {
        dek_digest(&self.key_bytes)
    }
}

fn dek_digest(key: &[u8; 32]) -> [u8; 32] {
    Sha256::new()
        .chain_update(DEK_DIGEST_TAG)
        .chain_update(key)
        .finalize()
        .into()
}

fn dek_id_for(digest: &[u8; 32]) -> [u8; 16] {
    let h = Sha256::new().chain_update(DEK_ID_TAG).chain_update(digest).finalize();
    h[..16].try_into().expect("16 bytes")
}

fn derive_key(m: &Gt) -> [u8; 32] {
    Sha256::new()
        .chain_update(DEM_KDF_TAG)
        .chain_update(m.to_bytes())
        .finalize()
        .into()
}

/// An ABE-encapsulated data key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WrappedDek {
    pub abe_ct: AbeCiphertext,
    pub bound_dek_digest: [u8; 32],
}

impl WrappedDek {
    /// Identifier of the key this record unwraps to.
    pub fn dek_id(&self) -> [u8; 16] {
        dek_id_for(&self.bound_dek_digest)
    }

    pub fn policy(&self) -> &AccessTree {
        &self.abe_ct.tree
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let ct = &self.abe_ct;
        let mut w = Writer::with_header(WRAPPED_MAGIC, VERSION);
        w.str16(&ct.tree.to_string());
        w.u32(2 + 2 * ct.leaves.len() as u32);
        w.bytes32(&ct.c_tilde.to_bytes());
        w.bytes32(&ct.c.to_bytes());
        for leaf in &ct.leaves {
            w.bytes32(&leaf.c.to_bytes());
            w.bytes32(&leaf.c_prime.to_bytes());
        }
        w.raw(&self.bound_dek_digest);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::with_header(bytes, WRAPPED_MAGIC, VERSION)?;
        let policy = r.str16()?;
        let tree = AccessTree::parse(&policy)
            .map_err(|e| Error::CorruptContainer(format!("embedded policy: {e}")))?;
        let count = r.u32()? as usize;
        let leaves_n = tree.leaves().len();
        if count != 2 + 2 * leaves_n {
            return Err(Error::CorruptContainer(format!(
                "{count} components for a policy with {leaves_n} leaves"
            )));
        }
        let c_tilde = Gt::from_bytes(r.bytes32()?)?;
        let c = G1::from_bytes(r.bytes32()?)?;
        let mut leaves = Vec::with_capacity(leaves_n);
        for _ in 0..leaves_n {
            let c = G1::from_bytes(r.bytes32()?)?;
            let c_prime = G2::from_bytes(r.bytes32()?)?;
            leaves.push(LeafCiphertext { c, c_prime });
        }
        let bound_dek_digest = r.array()?;
        r.finish()?;
        Ok(WrappedDek {
            abe_ct: AbeCiphertext {
                tree,
                c_tilde,
                c,
                leaves,
            },
            bound_dek_digest,
        })
    }
}

/// Generates a fresh data key under `tree`.
///
/// The key is derived from the encapsulated element, so it cannot be chosen by
/// the caller; the returned [`Dek`] is the one to encrypt with.
pub fn wrap_dek<R: RngCore + CryptoRng + ?Sized>(
    pk: &PublicParams,
    tree: &AccessTree,
    rng: &mut R,
) -> Result<(Dek, WrappedDek)> {
    let m = abe::random_gt(&pk.ctx, rng)?;
    let abe_ct = abe::encrypt(pk, tree, &m, rng)?;
    let dek = Dek::from_key_bytes(derive_key(&m));
    let wrapped = WrappedDek {
        abe_ct,
        bound_dek_digest: dek.digest(),
    };
    Ok((dek, wrapped))
}

pub fn unwrap_dek(pk: &PublicParams, wrapped: &WrappedDek, sk: &PrivateKey) -> Result<Dek> {
    let m = abe::decrypt(pk, &wrapped.abe_ct, sk)?;
    let dek = Dek::from_key_bytes(derive_key(&m));
    if dek.digest() != wrapped.bound_dek_digest {
        return Err(Error::IntegrityFailure);
    }
    Ok(dek)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SymMode {
    Det,
    Rnd,
}

impl SymMode {
    fn byte(self) -> u8 {
        match self {
            SymMode::Det => 0x00,
            SymMode::Rnd => 0x01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldCiphertext {
    pub mode: SymMode,
    pub iv: [u8; 16],
    pub body: Vec<u8>,
    pub dek_id: [u8; 16],
}

impl FieldCiphertext {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_header(FIELD_MAGIC, VERSION);
        w.u8(self.mode.byte());
        w.raw(&self.iv);
        w.raw(&self.dek_id);
        w.bytes32(&self.body);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::with_header(bytes, FIELD_MAGIC, VERSION)?;
        let mode = match r.u8()? {
            0x00 => SymMode::Det,
            0x01 => SymMode::Rnd,
            other => return Err(Error::CorruptContainer(format!("unknown mode byte {other:#04x}"))),
        };
        let iv: [u8; 16] = r.array()?;
        let dek_id = r.array()?;
        let body = r.bytes32()?.to_vec();
        r.finish()?;
        if mode == SymMode::Det && iv != [0; 16] {
            return Err(Error::CorruptContainer("DET ciphertext with nonzero IV".into()));
        }
        if body.is_empty() || body.len() % BLOCK != 0 {
            return Err(Error::CorruptContainer(format!(
                "body length {} is not a positive multiple of {BLOCK}",
                body.len()
            )));
        }
        Ok(FieldCiphertext {
            mode,
            iv,
            body,
            dek_id,
        })
    }
}

pub fn sym_encrypt<R: RngCore + CryptoRng + ?Sized>(
    dek: &Dek,
    plaintext: &[u8],
    mode: SymMode,
    rng: &mut R,
) -> Result<FieldCiphertext> {
    let mut iv = [0u8; 16];
    if mode == SymMode::Rnd {
        rng.try_fill_bytes(&mut iv)
            .map_err(|e| Error::RandomnessUnavailable(e.to_string()))?;
    }
    let body = Aes256CbcEnc::new(&dek.key_bytes.into(), &iv.into())
        .encrypt_padded_vec_mut::<Pkcs7>(plaintext);
    Ok(FieldCiphertext {
        mode,
        iv,
        body,
        dek_id: dek.dek_id,
    })
}

/// Deterministic encryption; needs no randomness.
pub fn sym_encrypt_det(dek: &Dek, plaintext: &[u8]) -> FieldCiphertext {
    let body = Aes256CbcEnc::new(&dek.key_bytes.into(), &[0u8; 16].into())
        .encrypt_padded_vec_mut::<Pkcs7>(plaintext);
    FieldCiphertext {
        mode: SymMode::Det,
        iv: [0; 16],
        body,
        dek_id: dek.dek_id,
    }
}

pub fn sym_decrypt(dek: &Dek, fc: &FieldCiphertext) -> Result<Vec<u8>> {
    if fc.dek_id != dek.dek_id {
        return Err(Error::DekMismatch);
    }
    Aes256CbcDec::new(&dek.key_bytes.into(), &fc.iv.into())
        .decrypt_padded_vec_mut::<Pkcs7>(&fc.body)
        .map_err(|_| Error::BadPadding)
}

/// A whole-file hybrid ciphertext: the wrapped key followed by the payload.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncryptedFile {
    pub wrapped: WrappedDek,
    pub payload: FieldCiphertext,
}

impl EncryptedFile {
    pub fn seal<R: RngCore + CryptoRng + ?Sized>(
        pk: &PublicParams,
        tree: &AccessTree,
        plaintext: &[u8],
        mode: SymMode,
        rng: &mut R,
    ) -> Result<Self> {
        let (dek, wrapped) = wrap_dek(pk, tree, rng)?;
        let payload = sym_encrypt(&dek, plaintext, mode, rng)?;
        Ok(EncryptedFile { wrapped, payload })
    }

    pub fn open(&self, pk: &PublicParams, sk: &PrivateKey) -> Result<Vec<u8>> {
        let dek = unwrap_dek(pk, &self.wrapped, sk)?;
        sym_decrypt(&dek, &self.payload)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_header(FILE_MAGIC, VERSION);
        w.bytes32(&self.wrapped.to_bytes());
        w.bytes32(&self.payload.to_bytes());
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::with_header(bytes, FILE_MAGIC, VERSION)?;
        let wrapped = WrappedDek::from_bytes(r.bytes32()?)?;
        let payload = FieldCiphertext::from_bytes(r.bytes32()?)?;
        r.finish()?;
        Ok(EncryptedFile { wrapped, payload })
    }
}
