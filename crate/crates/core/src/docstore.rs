// SPDX-License-Identifier: Apache-2.0

//! File-backed document collections with per-field encryption.
//!
//! Each encrypted field owns one data key, wrapped once under the field's
//! policy when the collection is created. Clients unwrap the keys their
//! attributes allow and encrypt or decrypt locally; the collection itself
//! never sees a key. Equality queries on DET fields compare ciphertext bytes.
//!
//! A collection file is newline-delimited JSON: one header record followed by
//! one record per document, with binary payloads in base64.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use base64::{engine::general_purpose::STANDARD as B64, Engine as _};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::abe::{PrivateKey, PublicParams};
use crate::envelope::{
    sym_decrypt, sym_encrypt, sym_encrypt_det, unwrap_dek, wrap_dek, Dek, FieldCiphertext,
    SymMode, WrappedDek,
};
use crate::error::{Error, Result};
use crate::policy::AccessTree;

pub const STORE_FORMAT: &str = "CPDS";
pub const STORE_VERSION: u8 = 1;
pub const STORE_EXTENSION: &str = "cpds";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldMode {
    Det,
    Rnd,
    Plaintext,
}

impl FieldMode {
    fn sym(self) -> Option<SymMode> {
        match self {
            FieldMode::Det => Some(SymMode::Det),
            FieldMode::Rnd => Some(SymMode::Rnd),
            FieldMode::Plaintext => None,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "det" => Some(FieldMode::Det),
            "rnd" => Some(FieldMode::Rnd),
            "plain" | "plaintext" => Some(FieldMode::Plaintext),
            _ => None,
        }
    }
}

/// Requested field layout, before keys exist.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldSpec {
    pub name: String,
    pub mode: FieldMode,
    pub policy: Option<String>,
}

impl FieldSpec {
    pub fn encrypted(name: &str, mode: FieldMode, policy: &str) -> Self {
        FieldSpec {
            name: name.to_string(),
            mode,
            policy: Some(policy.to_string()),
        }
    }

    pub fn plaintext(name: &str) -> Self {
        FieldSpec {
            name: name.to_string(),
            mode: FieldMode::Plaintext,
            policy: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldConfig {
    pub field_name: String,
    pub mode: FieldMode,
    /// Canonical policy text; `None` for plaintext fields.
    pub policy_text: Option<String>,
    pub wrapped_dek: Option<WrappedDek>,
}

impl FieldConfig {
    pub fn dek_id(&self) -> Option<[u8; 16]> {
        self.wrapped_dek.as_ref().map(WrappedDek::dek_id)
    }
}

/// A plaintext document: field name to canonical string value.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Document(pub BTreeMap<String, String>);

impl Document {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, field: &str, value: impl Into<String>) -> Self {
        self.0.insert(field.to_string(), value.into());
        self
    }

    /// Integers are stored as canonical decimal strings.
    pub fn with_int(self, field: &str, value: i64) -> Self {
        self.with(field, value.to_string())
    }

    pub fn get(&self, field: &str) -> Option<&str> {
        self.0.get(field).map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum StoredValue {
    Plain(String),
    Ct(String),
}

/// A record as the store holds it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoredRecord {
    pub doc_id: u64,
    pub fields: BTreeMap<String, StoredField>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StoredField {
    Plain(String),
    Encrypted(FieldCiphertext),
}

/// A field as a reader sees it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FieldValue {
    Plain(String),
    /// The reader's key does not open this field.
    Opaque(FieldCiphertext),
}

impl FieldValue {
    pub fn as_plain(&self) -> Option<&str> {
        match self {
            FieldValue::Plain(s) => Some(s),
            FieldValue::Opaque(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecryptedDocument {
    pub doc_id: u64,
    pub fields: BTreeMap<String, FieldValue>,
}

/// Field keys a given private key can open, unwrapped once.
#[derive(Clone, Debug, Default)]
pub struct KeyRing {
    deks: BTreeMap<String, Dek>,
}

impl KeyRing {
    pub fn dek(&self, field: &str) -> Option<&Dek> {
        self.deks.get(field)
    }

    pub fn fields(&self) -> impl Iterator<Item = &str> {
        self.deks.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collection {
    name: String,
    fields: Vec<FieldConfig>,
    records: Vec<StoredRecord>,
    next_id: u64,
    path: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// On-disk records

#[derive(Serialize, Deserialize)]
struct HeaderBody {
    format: String,
    version: u8,
    name: String,
    fields: Vec<FieldLine>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    #[serde(flatten)]
    body: HeaderBody,
    digest: String,
}

#[derive(Serialize, Deserialize)]
struct FieldLine {
    name: String,
    mode: FieldMode,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    wrapped_dek: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    doc_id: u64,
    fields: BTreeMap<String, StoredValue>,
}

fn header_digest(body: &HeaderBody) -> String {
    let json = serde_json::to_vec(body).expect("header serializes");
    hex::encode(Sha256::digest(json))
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptStore(msg.into())
}

impl Collection {
    /// Builds an in-memory collection, generating and wrapping one data key
    /// per encrypted field.
    pub fn new<R: RngCore + CryptoRng + ?Sized>(
        name: &str,
        specs: &[FieldSpec],
        pk: &PublicParams,
        rng: &mut R,
    ) -> Result<Self> {
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::StorageError(format!("invalid collection name {name:?}")));
        }
        let mut fields: Vec<FieldConfig> = Vec::with_capacity(specs.len());
        for spec in specs {
            if fields.iter().any(|f| f.field_name == spec.name) {
                return Err(Error::DuplicateField(spec.name.clone()));
            }
            if spec.name.is_empty() {
                return Err(Error::UnknownField(String::new()));
            }
            let config = match spec.mode {
                FieldMode::Plaintext => FieldConfig {
                    field_name: spec.name.clone(),
                    mode: spec.mode,
                    policy_text: None,
                    wrapped_dek: None,
                },
                FieldMode::Det | FieldMode::Rnd => {
                    let text = spec.policy.as_deref().ok_or_else(|| Error::SyntaxError {
                        position: 0,
                        message: format!("field {} needs a policy", spec.name),
                    })?;
                    let tree = AccessTree::parse(text)?;
                    let (_, wrapped) = wrap_dek(pk, &tree, rng)?;
                    FieldConfig {
                        field_name: spec.name.clone(),
                        mode: spec.mode,
                        policy_text: Some(tree.to_string()),
                        wrapped_dek: Some(wrapped),
                    }
                }
            };
            fields.push(config);
        }
        Ok(Collection {
            name: name.to_string(),
            fields,
            records: Vec::new(),
            next_id: 1,
            path: None,
        })
    }

    /// Creates the collection file `<store_dir>/<name>.cpds`.
    pub fn create<R: RngCore + CryptoRng + ?Sized>(
        store_dir: &Path,
        name: &str,
        specs: &[FieldSpec],
        pk: &PublicParams,
        rng: &mut R,
    ) -> Result<Self> {
        let mut coll = Self::new(name, specs, pk, rng)?;
        fs::create_dir_all(store_dir)?;
        let path = Self::file_path(store_dir, name);
        if path.exists() {
            return Err(Error::StorageError(format!("{} already exists", path.display())));
        }
        coll.save(&path)?;
        coll.path = Some(path);
        Ok(coll)
    }

    pub fn file_path(store_dir: &Path, name: &str) -> PathBuf {
        store_dir.join(format!("{name}.{STORE_EXTENSION}"))
    }

    pub fn open(store_dir: &Path, name: &str) -> Result<Self> {
        Self::load(&Self::file_path(store_dir, name))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn fields(&self) -> &[FieldConfig] {
        &self.fields
    }

    pub fn field(&self, name: &str) -> Result<&FieldConfig> {
        self.fields
            .iter()
            .find(|f| f.field_name == name)
            .ok_or_else(|| Error::UnknownField(name.to_string()))
    }

    pub fn records(&self) -> &[StoredRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Unwraps every field key `sk` satisfies. Fields it cannot open are
    /// simply absent from the ring.
    pub fn keyring(&self, pk: &PublicParams, sk: &PrivateKey) -> KeyRing {
        let deks = self
            .fields
            .iter()
            .filter_map(|f| {
                let w = f.wrapped_dek.as_ref()?;
                let dek = unwrap_dek(pk, w, sk).ok()?;
                Some((f.field_name.clone(), dek))
            })
            .collect();
        KeyRing { deks }
    }

    /// Encrypts and appends a document. The writer must be able to open every
    /// encrypted field present in the document.
    pub fn insert<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        doc: &Document,
        pk: &PublicParams,
        sk_writer: &PrivateKey,
        rng: &mut R,
    ) -> Result<u64> {
        for field in doc.0.keys() {
            self.field(field)?;
        }
        let mut ring = KeyRing::default();
        for cfg in &self.fields {
            if let (Some(w), true) = (&cfg.wrapped_dek, doc.0.contains_key(&cfg.field_name)) {
                let dek = unwrap_dek(pk, w, sk_writer)?;
                ring.deks.insert(cfg.field_name.clone(), dek);
            }
        }
        self.insert_with(&ring, doc, rng)
    }

    /// Insert using keys already unwrapped.
    pub fn insert_with<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        ring: &KeyRing,
        doc: &Document,
        rng: &mut R,
    ) -> Result<u64> {
        let mut fields = BTreeMap::new();
        for (name, value) in &doc.0 {
            let cfg = self.field(name)?;
            let stored = match cfg.mode.sym() {
                None => StoredField::Plain(value.clone()),
                Some(mode) => {
                    let dek = ring.dek(name).ok_or(Error::PolicyNotSatisfied)?;
                    StoredField::Encrypted(sym_encrypt(dek, value.as_bytes(), mode, rng)?)
                }
            };
            fields.insert(name.clone(), stored);
        }
        let record = StoredRecord {
            doc_id: self.next_id,
            fields,
        };
        if let Some(path) = &self.path {
            let mut f = OpenOptions::new()
                .append(true)
                .open(path)
                .map_err(|e| Error::StorageError(format!("{}: {e}", path.display())))?;
            f.write_all(record_line(&record).as_bytes())?;
        }
        self.next_id += 1;
        self.records.push(record);
        Ok(self.next_id - 1)
    }

    /// Q1: every document, decrypted where the key allows.
    pub fn find_all(&self, pk: &PublicParams, sk: &PrivateKey) -> Vec<DecryptedDocument> {
        let ring = self.keyring(pk, sk);
        self.find_all_with(&ring)
    }

    pub fn find_all_with(&self, ring: &KeyRing) -> Vec<DecryptedDocument> {
        self.records.iter().map(|r| open_record(r, ring)).collect()
    }

    /// Q2: equality on one field. DET fields match on ciphertext bytes;
    /// plaintext fields by direct comparison; RND fields cannot be queried.
    pub fn find_eq(
        &self,
        field: &str,
        value: &str,
        pk: &PublicParams,
        sk: &PrivateKey,
    ) -> Result<Vec<DecryptedDocument>> {
        let cfg = self.field(field)?;
        let ring = match cfg.mode {
            FieldMode::Rnd => return Err(Error::NotDeterministicField(field.to_string())),
            FieldMode::Plaintext => self.keyring(pk, sk),
            FieldMode::Det => {
                let w = cfg.wrapped_dek.as_ref().expect("DET field has a key");
                let dek = unwrap_dek(pk, w, sk)?;
                let mut ring = self.keyring_without(field, pk, sk);
                ring.deks.insert(field.to_string(), dek);
                ring
            }
        };
        self.find_eq_with(&ring, field, value)
    }

    fn keyring_without(&self, skip: &str, pk: &PublicParams, sk: &PrivateKey) -> KeyRing {
        let deks = self
            .fields
            .iter()
            .filter(|f| f.field_name != skip)
            .filter_map(|f| {
                let dek = unwrap_dek(pk, f.wrapped_dek.as_ref()?, sk).ok()?;
                Some((f.field_name.clone(), dek))
            })
            .collect();
        KeyRing { deks }
    }

    pub fn find_eq_with(
        &self,
        ring: &KeyRing,
        field: &str,
        value: &str,
    ) -> Result<Vec<DecryptedDocument>> {
        let cfg = self.field(field)?;
        let ids = match cfg.mode {
            FieldMode::Rnd => return Err(Error::NotDeterministicField(field.to_string())),
            FieldMode::Plaintext => self.scan_plain(field, value),
            FieldMode::Det => {
                let dek = ring.dek(field).ok_or(Error::PolicyNotSatisfied)?;
                let token = sym_encrypt_det(dek, value.as_bytes());
                self.match_token(field, &token)
            }
        };
        Ok(self
            .records
            .iter()
            .filter(|r| ids.binary_search(&r.doc_id).is_ok())
            .map(|r| open_record(r, ring))
            .collect())
    }

    /// Server-side half of an equality query: byte comparison of stored
    /// ciphertexts against a client-computed token. No key is involved.
    pub fn match_token(&self, field: &str, token: &FieldCiphertext) -> Vec<u64> {
        self.records
            .iter()
            .filter(|r| match r.fields.get(field) {
                Some(StoredField::Encrypted(fc)) => fc.body == token.body && fc.dek_id == token.dek_id,
                _ => false,
            })
            .map(|r| r.doc_id)
            .collect()
    }

    fn scan_plain(&self, field: &str, value: &str) -> Vec<u64> {
        self.records
            .iter()
            .filter(|r| matches!(r.fields.get(field), Some(StoredField::Plain(v)) if v == value))
            .map(|r| r.doc_id)
            .collect()
    }

    // -----------------------------------------------------------------------
    // Persistence

    pub fn to_file_bytes(&self) -> Vec<u8> {
        let mut out = header_line(&self.name, &self.fields).into_bytes();
        for r in &self.records {
            out.extend_from_slice(record_line(r).as_bytes());
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_file_bytes())
            .map_err(|e| Error::StorageError(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)
            .map_err(|e| Error::StorageError(format!("{}: {e}", path.display())))?;
        let mut coll = Self::from_file_bytes(&bytes)?;
        coll.path = Some(path.to_path_buf());
        Ok(coll)
    }

    pub fn from_file_bytes(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|_| corrupt("not UTF-8"))?;
        let mut lines = text.split_terminator('\n');
        let header_text = lines.next().ok_or_else(|| corrupt("missing header"))?;
        let header: HeaderLine =
            serde_json::from_str(header_text).map_err(|e| corrupt(format!("header: {e}")))?;
        if header.body.format != STORE_FORMAT {
            return Err(corrupt(format!("unknown format {:?}", header.body.format)));
        }
        if header.body.version != STORE_VERSION {
            return Err(Error::VersionUnsupported(header.body.version));
        }
        if header_digest(&header.body) != header.digest {
            return Err(corrupt("header digest mismatch"));
        }
        let fields = header
            .body
            .fields
            .iter()
            .map(decode_field)
            .collect::<Result<Vec<_>>>()?;

        let mut records = Vec::new();
        let mut last_id = 0u64;
        for (n, line) in lines.enumerate() {
            let rec: RecordLine =
                serde_json::from_str(line).map_err(|e| corrupt(format!("record {}: {e}", n + 1)))?;
            if rec.doc_id <= last_id {
                return Err(corrupt(format!("doc_id {} out of order", rec.doc_id)));
            }
            last_id = rec.doc_id;
            let mut out = BTreeMap::new();
            for (name, v) in rec.fields {
                let cfg = fields
                    .iter()
                    .find(|f| f.field_name == name)
                    .ok_or_else(|| corrupt(format!("record {} has unknown field {name}", rec.doc_id)))?;
                let stored = match (v, cfg.mode.sym()) {
                    (StoredValue::Plain(s), None) => StoredField::Plain(s),
                    (StoredValue::Ct(b64), Some(mode)) => {
                        let raw = B64.decode(b64).map_err(|e| corrupt(e.to_string()))?;
                        let fc = FieldCiphertext::from_bytes(&raw)
                            .map_err(|e| corrupt(format!("doc {} field {name}: {e}", rec.doc_id)))?;
                        if fc.mode != mode || Some(fc.dek_id) != cfg.dek_id() {
                            return Err(corrupt(format!(
                                "doc {} field {name} does not match the field key",
                                rec.doc_id
                            )));
                        }
                        StoredField::Encrypted(fc)
                    }
                    _ => return Err(corrupt(format!("doc {} field {name}: wrong value kind", rec.doc_id))),
                };
                out.insert(name, stored);
            }
            records.push(StoredRecord {
                doc_id: rec.doc_id,
                fields: out,
            });
        }
        Ok(Collection {
            name: header.body.name,
            fields,
            records,
            next_id: last_id + 1,
            path: None,
        })
    }
}

fn open_record(r: &StoredRecord, ring: &KeyRing) -> DecryptedDocument {
    let fields = r
        .fields
        .iter()
        .map(|(name, stored)| {
            let value = match stored {
                StoredField::Plain(s) => FieldValue::Plain(s.clone()),
                StoredField::Encrypted(fc) => ring
                    .dek(name)
                    .and_then(|dek| sym_decrypt(dek, fc).ok())
                    .and_then(|pt| String::from_utf8(pt).ok())
                    .map_or_else(|| FieldValue::Opaque(fc.clone()), FieldValue::Plain),
            };
            (name.clone(), value)
        })
        .collect();
    DecryptedDocument {
        doc_id: r.doc_id,
        fields,
    }
}

fn header_line(name: &str, fields: &[FieldConfig]) -> String {
    let body = HeaderBody {
        format: STORE_FORMAT.to_string(),
        version: STORE_VERSION,
        name: name.to_string(),
        fields: fields
            .iter()
            .map(|f| FieldLine {
                name: f.field_name.clone(),
                mode: f.mode,
                policy: f.policy_text.clone(),
                wrapped_dek: f.wrapped_dek.as_ref().map(|w| B64.encode(w.to_bytes())),
            })
            .collect(),
    };
    let digest = header_digest(&body);
    let mut line = serde_json::to_string(&HeaderLine { body, digest }).expect("header serializes");
    line.push('\n');
    line
}

fn record_line(r: &StoredRecord) -> String {
    let fields = r
        .fields
        .iter()
        .map(|(k, v)| {
            let v = match v {
                StoredField::Plain(s) => StoredValue::Plain(s.clone()),
                StoredField::Encrypted(fc) => StoredValue::Ct(B64.encode(fc.to_bytes())),
            };
            (k.clone(), v)
        })
        .collect();
    let mut line = serde_json::to_string(&RecordLine {
        doc_id: r.doc_id,
        fields,
    })
    .expect("record serializes");
    line.push('\n');
    line
}

fn decode_field(f: &FieldLine) -> Result<FieldConfig> {
    let wrapped_dek = match (&f.wrapped_dek, f.mode) {
        (None, FieldMode::Plaintext) => None,
        (Some(b64), FieldMode::Det | FieldMode::Rnd) => {
            let raw = B64.decode(b64).map_err(|e| corrupt(e.to_string()))?;
            Some(WrappedDek::from_bytes(&raw).map_err(|e| corrupt(format!("field {}: {e}", f.name)))?)
        }
        _ => return Err(corrupt(format!("field {}: key presence does not match mode", f.name))),
    };
    if let (Some(w), Some(p)) = (&wrapped_dek, &f.policy) {
        if w.policy().to_string() != *p {
            return Err(corrupt(format!("field {}: policy does not match wrapped key", f.name)));
        }
    }
    Ok(FieldConfig {
        field_name: f.name.clone(),
        mode: f.mode,
        policy_text: f.policy.clone(),
        wrapped_dek,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abe::{keygen, setup, MasterKey};
    use crate::pairing::group_setup;
    use crate::policy::AttributeSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::collections::BTreeSet;

    struct Env {
        pk: PublicParams,
        mk: MasterKey,
        rng: ChaCha20Rng,
    }

    impl Env {
        fn new(seed: u64) -> Self {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let (pk, mk) = setup(&group_setup(128).unwrap(), &mut rng).unwrap();
            Env { pk, mk, rng }
        }

        fn key(&mut self, attrs: &[&str]) -> PrivateKey {
            keygen(&self.mk, &self.pk, &AttributeSet::new(attrs.iter().copied()).unwrap(), &mut self.rng)
                .unwrap()
        }
    }

    fn people_fields() -> Vec<FieldSpec> {
        vec![
            FieldSpec::encrypted("name", FieldMode::Det, "analyst or admin"),
            FieldSpec::encrypted("salary", FieldMode::Rnd, "admin"),
            FieldSpec::encrypted("credit_card_number", FieldMode::Rnd, "admin"),
        ]
    }

    fn person(name: &str, salary: i64) -> Document {
        Document::new()
            .with("name", name)
            .with_int("salary", salary)
            .with("credit_card_number", "4111111111111111")
    }

    #[test]
    fn create_layout() {
        let mut env = Env::new(1);
        let coll = Collection::new("people", &people_fields(), &env.pk, &mut env.rng).unwrap();
        assert_eq!(coll.fields().len(), 3);
        assert!(coll.fields().iter().all(|f| f.wrapped_dek.is_some()));
        let ids: BTreeSet<_> = coll.fields().iter().map(|f| f.dek_id().unwrap()).collect();
        assert_eq!(ids.len(), 3);

        let mut dup = people_fields();
        dup.push(FieldSpec::plaintext("name"));
        assert_eq!(
            Collection::new("people", &dup, &env.pk, &mut env.rng),
            Err(Error::DuplicateField("name".into()))
        );

        let plain = Collection::new("p", &[FieldSpec::plaintext("note")], &env.pk, &mut env.rng).unwrap();
        assert!(plain.fields()[0].wrapped_dek.is_none());

        assert!(matches!(
            Collection::new("p", &[FieldSpec::encrypted("x", FieldMode::Det, "a and")], &env.pk, &mut env.rng),
            Err(Error::SyntaxError { .. })
        ));
    }

    #[test]
    fn insert_leaks_only_det_equality() {
        let mut env = Env::new(2);
        let admin = env.key(&["admin"]);
        let mut coll = Collection::new("people", &people_fields(), &env.pk, &mut env.rng).unwrap();
        let a = coll.insert(&person("Alice", 100), &env.pk, &admin, &mut env.rng).unwrap();
        let b = coll.insert(&person("Alice", 100), &env.pk, &admin, &mut env.rng).unwrap();
        assert_eq!((a, b), (1, 2));
        let (r1, r2) = (&coll.records()[0], &coll.records()[1]);
        assert_eq!(r1.fields["name"], r2.fields["name"]);
        assert_ne!(r1.fields["salary"], r2.fields["salary"]);

        assert_eq!(
            coll.insert(&Document::new().with("age", "40"), &env.pk, &admin, &mut env.rng),
            Err(Error::UnknownField("age".into()))
        );
        let analyst = env.key(&["analyst"]);
        assert_eq!(
            coll.insert(&person("Bob", 1), &env.pk, &analyst, &mut env.rng),
            Err(Error::PolicyNotSatisfied)
        );
        // A failed insert must not consume an id.
        assert_eq!(coll.insert(&person("Bob", 1), &env.pk, &admin, &mut env.rng).unwrap(), 3);
    }

    #[test]
    fn reads_respect_policies() {
        let mut env = Env::new(3);
        let admin = env.key(&["admin"]);
        let analyst = env.key(&["analyst"]);
        let outsider = env.key(&["intern"]);
        let mut coll = Collection::new("people", &people_fields(), &env.pk, &mut env.rng).unwrap();
        assert!(coll.find_all(&env.pk, &admin).is_empty());
        for (i, n) in ["Alice", "Bob", "Alice", "Carol"].iter().enumerate() {
            coll.insert(&person(n, 1000 + i as i64), &env.pk, &admin, &mut env.rng).unwrap();
        }

        let all = coll.find_all(&env.pk, &admin);
        assert_eq!(all.len(), 4);
        assert_eq!(all[3].fields["salary"].as_plain(), Some("1003"));

        let partial = coll.find_all(&env.pk, &analyst);
        for d in &partial {
            assert!(d.fields["name"].as_plain().is_some());
            assert!(matches!(d.fields["salary"], FieldValue::Opaque(_)));
            assert!(matches!(d.fields["credit_card_number"], FieldValue::Opaque(_)));
        }
        let none = coll.find_all(&env.pk, &outsider);
        assert!(none.iter().all(|d| d.fields.values().all(|v| v.as_plain().is_none())));

        let hits = coll.find_eq("name", "Alice", &env.pk, &analyst).unwrap();
        assert_eq!(hits.iter().map(|d| d.doc_id).collect::<Vec<_>>(), [1, 3]);
        assert!(coll.find_eq("name", "Zed", &env.pk, &admin).unwrap().is_empty());
        assert_eq!(
            coll.find_eq("salary", "1000", &env.pk, &admin),
            Err(Error::NotDeterministicField("salary".into()))
        );
        assert_eq!(
            coll.find_eq("name", "Alice", &env.pk, &outsider),
            Err(Error::PolicyNotSatisfied)
        );
        assert_eq!(
            coll.find_eq("nope", "x", &env.pk, &admin),
            Err(Error::UnknownField("nope".into()))
        );
    }

    #[test]
    fn plaintext_field_equality() {
        let mut env = Env::new(4);
        let sk = env.key(&["admin"]);
        let specs = [FieldSpec::plaintext("city"), FieldSpec::encrypted("name", FieldMode::Det, "admin")];
        let mut coll = Collection::new("c", &specs, &env.pk, &mut env.rng).unwrap();
        for city in ["Oslo", "Rome", "Oslo"] {
            coll.insert(&Document::new().with("city", city).with("name", "x"), &env.pk, &sk, &mut env.rng)
                .unwrap();
        }
        let hits = coll.find_eq("city", "Oslo", &env.pk, &sk).unwrap();
        assert_eq!(hits.len(), 2);
    }

    #[test]
    fn det_differs_across_fields() {
        let mut env = Env::new(5);
        let sk = env.key(&["admin"]);
        let specs = [
            FieldSpec::encrypted("first", FieldMode::Det, "admin"),
            FieldSpec::encrypted("last", FieldMode::Det, "admin"),
        ];
        let mut coll = Collection::new("c", &specs, &env.pk, &mut env.rng).unwrap();
        coll.insert(&Document::new().with("first", "Lee").with("last", "Lee"), &env.pk, &sk, &mut env.rng)
            .unwrap();
        let r = &coll.records()[0];
        assert_ne!(r.fields["first"], r.fields["last"]);
    }

    #[test]
    fn persistence() {
        let tmp = tempfile::tempdir().unwrap();
        let mut env = Env::new(6);
        let admin = env.key(&["admin"]);
        let mut coll = Collection::create(tmp.path(), "people", &people_fields(), &env.pk, &mut env.rng).unwrap();
        for n in ["Alice", "Bob", "Alice"] {
            coll.insert(&person(n, 5), &env.pk, &admin, &mut env.rng).unwrap();
        }
        let path = Collection::file_path(tmp.path(), "people");
        let on_disk = fs::read(&path).unwrap();
        assert_eq!(on_disk, coll.to_file_bytes());

        let loaded = Collection::open(tmp.path(), "people").unwrap();
        assert_eq!(loaded.to_file_bytes(), on_disk);
        assert_eq!(loaded.records(), coll.records());
        let hits = loaded.find_eq("name", "Alice", &env.pk, &admin).unwrap();
        assert_eq!(hits.len(), 2);

        // Appending after reload keeps ids monotonic.
        let mut loaded = loaded;
        assert_eq!(loaded.insert(&person("Dan", 1), &env.pk, &admin, &mut env.rng).unwrap(), 4);

        assert!(matches!(
            Collection::create(tmp.path(), "people", &people_fields(), &env.pk, &mut env.rng),
            Err(Error::StorageError(_))
        ));
    }

    #[test]
    fn tampering_detected() {
        let mut env = Env::new(7);
        let admin = env.key(&["admin"]);
        let mut coll = Collection::new("people", &people_fields(), &env.pk, &mut env.rng).unwrap();
        coll.insert(&person("Alice", 5), &env.pk, &admin, &mut env.rng).unwrap();
        let bytes = String::from_utf8(coll.to_file_bytes()).unwrap();

        let swapped = bytes.replacen("analyst or admin", "analyst or admi", 1);
        assert!(matches!(Collection::from_file_bytes(swapped.as_bytes()), Err(Error::CorruptStore(_))));

        let renamed = bytes.replacen("\"name\":\"people\"", "\"name\":\"peoplf\"", 1);
        assert!(matches!(Collection::from_file_bytes(renamed.as_bytes()), Err(Error::CorruptStore(_))));

        let versioned = bytes.replacen("\"version\":1", "\"version\":9", 1);
        assert_eq!(Collection::from_file_bytes(versioned.as_bytes()), Err(Error::VersionUnsupported(9)));

        let magic = bytes.replacen("CPDS", "XXXX", 1);
        assert!(matches!(Collection::from_file_bytes(magic.as_bytes()), Err(Error::CorruptStore(_))));

        let truncated = &bytes[..bytes.len() - 10];
        assert!(matches!(Collection::from_file_bytes(truncated.as_bytes()), Err(Error::CorruptStore(_))));
    }
}
