// SPDX-License-Identifier: Apache-2.0

//! Attribute authority: bootstraps the system keys, owns the attribute
//! universe and issues per-user private keys.
//!
//! On-disk layout:
//!
//! ```text
//! <dir>/pk.bin        public parameters     (CPPK container)
//! <dir>/mk.bin        master key, mode 0600 (CPMK container)
//! <dir>/universe.txt  one attribute per line
//! <dir>/users.tsv     user_id \t attrs \t key fingerprint
//! ```
//!
//! Issuance is single-writer: callers serialize access to one directory.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use crate::abe::{self, AttributeKey, MasterKey, PrivateKey, PublicParams};
use crate::error::{Error, Result};
use crate::pairing::{group_setup, Encoding, Gt, Scalar, G1, G2, GROUP_ID};
use crate::policy::{validate_attribute, AttributeSet};
use crate::wire::{Reader, Writer};

pub const KEY_VERSION: u8 = 0x01;

pub const PK_FILE: &str = "pk.bin";
pub const MK_FILE: &str = "mk.bin";
pub const UNIVERSE_FILE: &str = "universe.txt";
pub const USERS_FILE: &str = "users.tsv";
const USERS_HEADER: &str = "user_id\tattributes\tkey_fingerprint";

/// The attribute universe `A = {a_1, ..., a_k}`, in insertion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeUniverse(Vec<String>);

impl AttributeUniverse {
    pub fn new<I, S>(attrs: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out: Vec<String> = Vec::new();
        for a in attrs {
            let a = a.into();
            validate_attribute(&a)?;
            if out.contains(&a) {
                return Err(Error::InvalidAttributeToken(format!("{a} (duplicate)")));
            }
            out.push(a);
        }
        if out.is_empty() {
            return Err(Error::EmptyAttributeSet);
        }
        Ok(AttributeUniverse(out))
    }

    pub fn contains(&self, attr: &str) -> bool {
        self.0.iter().any(|a| a == attr)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Fails with the first attribute outside the universe.
    pub fn check(&self, attrs: &AttributeSet) -> Result<()> {
        match attrs.iter().find(|a| !self.contains(a)) {
            Some(a) => Err(Error::UnknownAttribute(a.to_string())),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserRecord {
    pub user_id: String,
    pub attrs: AttributeSet,
    /// Hex SHA-256 of the serialized private key.
    pub key_fingerprint: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyKind {
    Public,
    Master,
    Private,
}

impl KeyKind {
    fn magic(self) -> &'static [u8; 4] {
        match self {
            KeyKind::Public => b"CPPK",
            KeyKind::Master => b"CPMK",
            KeyKind::Private => b"CPSK",
        }
    }
}

/// A serialized key with its kind and format version.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyContainer {
    pub kind: KeyKind,
    pub version: u8,
    pub payload: Vec<u8>,
}

impl KeyContainer {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_header(self.kind.magic(), self.version);
        w.raw(&self.payload);
        w.finish()
    }

    /// Parses the header. The payload is validated by the typed decoders.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 5 {
            return Err(Error::CorruptContainer("truncated header".into()));
        }
        let kind = [KeyKind::Public, KeyKind::Master, KeyKind::Private]
            .into_iter()
            .find(|k| &bytes[..4] == k.magic())
            .ok_or_else(|| Error::CorruptContainer("unknown key magic".into()))?;
        let mut r = Reader::with_header(bytes, kind.magic(), KEY_VERSION)?;
        Ok(KeyContainer {
            kind,
            version: KEY_VERSION,
            payload: r.rest().to_vec(),
        })
    }

    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }

    fn expect_kind(&self, kind: KeyKind) -> Result<Reader<'_>> {
        if self.kind != kind {
            return Err(Error::CorruptContainer(format!(
                "expected {kind:?} key, found {:?}",
                self.kind
            )));
        }
        Ok(Reader::new(&self.payload))
    }

    pub fn from_public(pk: &PublicParams) -> Self {
        let mut w = Writer::default();
        w.str16(GROUP_ID);
        w.bytes32(&pk.h.to_bytes());
        w.bytes32(&pk.e_gg_alpha.to_bytes());
        Self::wrap(KeyKind::Public, w)
    }

    pub fn to_public(&self) -> Result<PublicParams> {
        let mut r = self.expect_kind(KeyKind::Public)?;
        let group = r.str16()?;
        if group != GROUP_ID {
            return Err(Error::CorruptContainer(format!("unknown group {group:?}")));
        }
        let h = G1::from_bytes(r.bytes32()?)?;
        let e_gg_alpha = Gt::from_bytes(r.bytes32()?)?;
        r.finish()?;
        Ok(PublicParams {
            ctx: group_setup(128)?,
            h,
            e_gg_alpha,
        })
    }

    pub fn from_master(mk: &MasterKey) -> Self {
        let mut w = Writer::default();
        w.bytes32(&mk.beta.to_bytes());
        w.bytes32(&mk.g_alpha.to_bytes());
        Self::wrap(KeyKind::Master, w)
    }

    pub fn to_master(&self) -> Result<MasterKey> {
        let mut r = self.expect_kind(KeyKind::Master)?;
        let beta = Scalar::from_bytes(r.bytes32()?)?;
        if beta == Scalar::from(0u64) {
            return Err(Error::InvalidGroupElement("master beta is zero".into()));
        }
        let g_alpha = G2::from_bytes(r.bytes32()?)?;
        r.finish()?;
        Ok(MasterKey { beta, g_alpha })
    }

    pub fn from_private(sk: &PrivateKey) -> Self {
        let mut w = Writer::default();
        w.bytes32(&sk.d().to_bytes());
        w.u32(sk.components().len() as u32);
        for (attr, comp) in sk.components() {
            w.str16(attr);
            w.bytes32(&comp.d.to_bytes());
            w.bytes32(&comp.d_prime.to_bytes());
        }
        Self::wrap(KeyKind::Private, w)
    }

    pub fn to_private(&self) -> Result<PrivateKey> {
        let mut r = self.expect_kind(KeyKind::Private)?;
        let d = G2::from_bytes(r.bytes32()?)?;
        let n = r.u32()? as usize;
        let mut components = BTreeMap::new();
        let mut last: Option<String> = None;
        for _ in 0..n {
            let attr = r.str16()?;
            validate_attribute(&attr)
                .map_err(|_| Error::CorruptContainer(format!("bad attribute {attr:?}")))?;
            if last.as_ref().is_some_and(|l| *l >= attr) {
                return Err(Error::CorruptContainer("attributes not in canonical order".into()));
            }
            let comp = AttributeKey {
                d: G2::from_bytes(r.bytes32()?)?,
                d_prime: G1::from_bytes(r.bytes32()?)?,
            };
            last = Some(attr.clone());
            components.insert(attr, comp);
        }
        r.finish()?;
        PrivateKey::from_components(d, components)
            .map_err(|_| Error::CorruptContainer("private key without attributes".into()))
    }

    fn wrap(kind: KeyKind, w: Writer) -> Self {
        KeyContainer {
            kind,
            version: KEY_VERSION,
            payload: w.finish(),
        }
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)
            .map_err(|e| Error::StorageError(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }
}

pub fn load_public(path: &Path) -> Result<PublicParams> {
    KeyContainer::read_file(path)?.to_public()
}

pub fn load_private(path: &Path) -> Result<PrivateKey> {
    KeyContainer::read_file(path)?.to_private()
}

fn validate_user_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '@'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidUserId(id.to_string()))
    }
}

/// A bootstrapped authority directory.
#[derive(Debug)]
pub struct Authority {
    dir: PathBuf,
    pk: PublicParams,
    mk: MasterKey,
    universe: AttributeUniverse,
    users: Vec<UserRecord>,
}

impl Authority {
    /// Runs setup and persists the keys and universe. Refuses to overwrite an
    /// existing authority.
    pub fn bootstrap<R: RngCore + CryptoRng + ?Sized>(
        dir: &Path,
        universe: AttributeUniverse,
        rng: &mut R,
    ) -> Result<Self> {
        fs::create_dir_all(dir)?;
        for f in [PK_FILE, MK_FILE, UNIVERSE_FILE, USERS_FILE] {
            if dir.join(f).exists() {
                return Err(Error::StorageError(format!(
                    "{} already exists; refusing to overwrite",
                    dir.join(f).display()
                )));
            }
        }
        let ctx = group_setup(128)?;
        let (pk, mk) = abe::setup(&ctx, rng)?;

        write_secret(&dir.join(MK_FILE), &KeyContainer::from_master(&mk).to_bytes())?;
        KeyContainer::from_public(&pk).write_file(&dir.join(PK_FILE))?;
        let mut text = universe.0.join("\n");
        text.push('\n');
        fs::write(dir.join(UNIVERSE_FILE), text)?;
        fs::write(dir.join(USERS_FILE), format!("{USERS_HEADER}\n"))?;

        Ok(Authority {
            dir: dir.to_path_buf(),
            pk,
            mk,
            universe,
            users: Vec::new(),
        })
    }

    pub fn open(dir: &Path) -> Result<Self> {
        let pk = load_public(&dir.join(PK_FILE))?;
        let mk = KeyContainer::read_file(&dir.join(MK_FILE))?.to_master()?;
        let universe_text = read_text(&dir.join(UNIVERSE_FILE))?;
        let universe = AttributeUniverse::new(
            universe_text.lines().map(str::trim).filter(|l| !l.is_empty()),
        )?;
        let users = read_text(&dir.join(USERS_FILE))?
            .lines()
            .skip(1)
            .filter(|l| !l.is_empty())
            .map(parse_user_line)
            .collect::<Result<Vec<_>>>()?;
        Ok(Authority {
            dir: dir.to_path_buf(),
            pk,
            mk,
            universe,
            users,
        })
    }

    pub fn public(&self) -> &PublicParams {
        &self.pk
    }

    pub fn master(&self) -> &MasterKey {
        &self.mk
    }

    pub fn universe(&self) -> &AttributeUniverse {
        &self.universe
    }

    pub fn users(&self) -> &[UserRecord] {
        &self.users
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Issues a key for `attrs` and appends the user to the registry.
    pub fn issue_user_key<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        user_id: &str,
        attrs: &AttributeSet,
        rng: &mut R,
    ) -> Result<(UserRecord, KeyContainer)> {
        let (record, container) =
            issue_user_key(&self.mk, &self.pk, user_id, attrs, &self.universe, &self.users, rng)?;
        let mut f = OpenOptions::new()
            .append(true)
            .open(self.dir.join(USERS_FILE))?;
        writeln!(
            f,
            "{}\t{}\t{}",
            record.user_id, record.attrs, record.key_fingerprint
        )?;
        self.users.push(record.clone());
        Ok((record, container))
    }
}

/// Stateless issuance against an explicit registry.
pub fn issue_user_key<R: RngCore + CryptoRng + ?Sized>(
    mk: &MasterKey,
    pk: &PublicParams,
    user_id: &str,
    attrs: &AttributeSet,
    universe: &AttributeUniverse,
    existing: &[UserRecord],
    rng: &mut R,
) -> Result<(UserRecord, KeyContainer)> {
    validate_user_id(user_id)?;
    if existing.iter().any(|u| u.user_id == user_id) {
        return Err(Error::DuplicateUser(user_id.to_string()));
    }
    universe.check(attrs)?;
    let sk = abe::keygen(mk, pk, attrs, rng)?;
    let container = KeyContainer::from_private(&sk);
    let record = UserRecord {
        user_id: user_id.to_string(),
        attrs: attrs.clone(),
        key_fingerprint: container.fingerprint(),
    };
    Ok((record, container))
}

fn parse_user_line(line: &str) -> Result<UserRecord> {
    let mut parts = line.split('\t');
    let (Some(user_id), Some(attrs), Some(fp), None) =
        (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(Error::StorageError(format!("malformed registry line {line:?}")));
    };
    Ok(UserRecord {
        user_id: user_id.to_string(),
        attrs: AttributeSet::parse_list(attrs)?,
        key_fingerprint: fp.to_string(),
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::StorageError(format!("{}: {e}", path.display())))
}

fn write_secret(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut opts = OpenOptions::new();
    opts.write(true).create_new(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        opts.mode(0o600);
    }
    let mut f = opts
        .open(path)
        .map_err(|e| Error::StorageError(format!("{}: {e}", path.display())))?;
    f.write_all(bytes)?;
    Ok(())
}
