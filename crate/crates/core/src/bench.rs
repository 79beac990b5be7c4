// SPDX-License-Identifier: Apache-2.0

//! Benchmark harness: query timings for three store variants, ciphertext
//! size scaling, and encryption/decryption time scaling.

use std::collections::BTreeSet;
use std::fmt;
use std::hint::black_box;
use std::io;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{CryptoRng, Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::abe::{keygen, setup, MasterKey, PrivateKey, PublicParams};
use crate::authority::{KeyContainer, MK_FILE, PK_FILE};
use crate::docstore::{Collection, Document, FieldMode, FieldSpec};
use crate::envelope::{sym_decrypt, sym_encrypt, sym_encrypt_det, Dek, EncryptedFile, FieldCiphertext, SymMode};
use crate::error::{Error, Result};
use crate::pairing::group_setup;
use crate::policy::{AccessTree, AttributeSet};

pub const NAME_POOL: [&str; 20] = [
    "Alice", "Bob", "Carol", "Dave", "Erin", "Frank", "Grace", "Heidi", "Ivan", "Judy",
    "Mallory", "Niaj", "Olivia", "Peggy", "Rupert", "Sybil", "Trent", "Uma", "Victor", "Walter",
];

pub const QUERY_FIELDS: [&str; 3] = ["name", "salary", "credit_card_number"];

/// Reference means (ms) reported by the original experiment, as
/// (variant, Q1, Q2). Echoed in reports, never asserted.
pub const REFERENCE_QUERY_MS: [(Variant, f64, f64); 3] = [
    (Variant::Plaintext, 0.47, 3.93),
    (Variant::Symmetric, 31.86, 34.72),
    (Variant::Cpabe, 40.93, 45.41),
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchConfig {
    pub runs: usize,
    pub warmup: usize,
    pub doc_count: usize,
    pub attr_range: Vec<usize>,
    pub size_range_kb: Vec<usize>,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            runs: 15,
            warmup: 3,
            doc_count: 100,
            attr_range: (5..=30).step_by(5).collect(),
            size_range_kb: (100..=1000).step_by(100).collect(),
            seed: 42,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.doc_count == 0 {
            return bad("doc_count must be at least 1");
        }
        for (name, r) in [("attr_range", &self.attr_range), ("size_range_kb", &self.size_range_kb)] {
            if r.is_empty() || r[0] == 0 || r.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidConfig(format!("{name} must be non-empty, positive and ascending")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    Plaintext,
    Symmetric,
    Cpabe,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Plaintext => "plaintext",
            Variant::Symmetric => "symmetric",
            Variant::Cpabe => "cpabe",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiment {
    Queries,
    Size,
    EncTime,
    DecTime,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Queries => "queries",
            Experiment::Size => "size",
            Experiment::EncTime => "enc-time",
            Experiment::DecTime => "dec-time",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Query {
    Q1,
    Q2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unit {
    Ms,
    Bytes,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub experiment: Experiment,
    pub variant: Variant,
    pub query: Option<Query>,
    pub attrs: Option<usize>,
    pub plaintext_kb: Option<usize>,
    pub unit: Unit,
    /// Raw measurements, one per timed run.
    pub samples: Vec<f64>,
    pub reference: Option<f64>,
}

impl BenchRow {
    pub fn runs(&self) -> usize {
        self.samples.len()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.samples)
    }

    pub fn std_dev(&self) -> f64 {
        std_dev(&self.samples)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub environment: String,
}

impl BenchReport {
    pub fn query_row(&self, variant: Variant, query: Query) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.variant == variant && r.query == Some(query))
    }

    pub fn point(&self, attrs: usize, kb: usize) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.attrs == Some(attrs) && r.plaintext_kb == Some(kb))
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let res: csv::Result<()> = (|| {
            out.write_record([
                "experiment", "variant", "query", "attrs", "plaintext_kb", "unit", "mean", "std_dev", "runs",
                "reference_ms",
            ])?;
            for r in &self.rows {
                out.write_record([
                    r.experiment.to_string(),
                    r.variant.to_string(),
                    r.query.map(|q| format!("{q:?}")).unwrap_or_default(),
                    opt(r.attrs),
                    opt(r.plaintext_kb),
                    unit(r.unit).to_string(),
                    num(r.mean()),
                    num(r.std_dev()),
                    r.runs().to_string(),
                    r.reference.map(num).unwrap_or_default(),
                ])?;
            }
            out.flush()?;
            Ok(())
        })();
        res.map_err(|e| Error::StorageError(e.to_string()))
    }

    pub fn write_raw_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let res: csv::Result<()> = (|| {
            out.write_record(["experiment", "variant", "query", "attrs", "plaintext_kb", "unit", "run", "value"])?;
            for r in &self.rows {
                for (i, v) in r.samples.iter().enumerate() {
                    out.write_record([
                        r.experiment.to_string(),
                        r.variant.to_string(),
                        r.query.map(|q| format!("{q:?}")).unwrap_or_default(),
                        opt(r.attrs),
                        opt(r.plaintext_kb),
                        unit(r.unit).to_string(),
                        (i + 1).to_string(),
                        num(*v),
                    ])?;
                }
            }
            out.flush()?;
            Ok(())
        })();
        res.map_err(|e| Error::StorageError(e.to_string()))
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv is UTF-8")
    }
}

fn opt(v: Option<usize>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn unit(u: Unit) -> &'static str {
    match u {
        Unit::Ms => "ms",
        Unit::Bytes => "bytes",
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for a single sample.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Least-squares line through the points: (slope, intercept, r²).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

pub fn environment(cfg: &BenchConfig) -> String {
    let cpus = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    format!(
        "os={} arch={} cpus={} debug-assertions={} curve=BLS12-381 dem=AES-256-CBC/PKCS7 \
         symmetric-baseline=one-key,name-DET,others-RND,client-side-decrypt warmup={} runs={}",
        std::env::consts::OS,
        std::env::consts::ARCH,
        cpus,
        if cfg!(debug_assertions) { "on" } else { "off" },
        cfg.warmup,
        cfg.runs,
    )
}

// ---------------------------------------------------------------------------
// Keys

/// Public parameters and master key the harness issues its own keys from.
pub struct BenchKeys {
    pub pk: PublicParams,
    pub mk: MasterKey,
}

impl BenchKeys {
    /// Reads `pk.bin` and `mk.bin` from an authority directory.
    pub fn load(dir: &Path) -> Result<Self> {
        let (pk_path, mk_path) = (dir.join(PK_FILE), dir.join(MK_FILE));
        for p in [&pk_path, &mk_path] {
            if !p.is_file() {
                return Err(Error::SetupMissing(format!("{} not found", p.display())));
            }
        }
        Ok(BenchKeys {
            pk: KeyContainer::read_file(&pk_path)?.to_public()?,
            mk: KeyContainer::read_file(&mk_path)?.to_master()?,
        })
    }

    pub fn generate<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Result<Self> {
        let (pk, mk) = setup(&group_setup(128)?, rng)?;
        Ok(BenchKeys { pk, mk })
    }

    pub fn key_for<R: RngCore + CryptoRng + ?Sized>(&self, attrs: &[String], rng: &mut R) -> Result<PrivateKey> {
        keygen(&self.mk, &self.pk, &AttributeSet::new(attrs)?, rng)
    }
}

// ---------------------------------------------------------------------------
// Dataset and store variants

pub fn gen_dataset(seed: u64, doc_count: usize) -> Vec<Document> {
    assert!(doc_count >= 1, "doc_count must be at least 1");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let alice_max = (doc_count / 4).max(1);
    let alices = rng.gen_range(1..=alice_max);
    let mut names: Vec<&str> = vec!["Alice"; alices];
    names.extend((alices..doc_count).map(|_| NAME_POOL[rng.gen_range(1..NAME_POOL.len())]));
    names.shuffle(&mut rng);
    names
        .into_iter()
        .map(|name| {
            Document::new()
                .with("name", name)
                .with_int("salary", rng.gen_range(10_000..=999_999))
                .with_int("credit_card_number", rng.gen_range(1_000_000_000_000_000..=9_999_999_999_999_999))
        })
        .collect()
}

/// Unencrypted reference store.
#[derive(Clone, Debug, Default)]
pub struct PlainStore {
    docs: Vec<(u64, Document)>,
}

impl PlainStore {
    pub fn new(docs: &[Document]) -> Self {
        PlainStore {
            docs: docs.iter().cloned().enumerate().map(|(i, d)| (i as u64 + 1, d)).collect(),
        }
    }

    pub fn find_all(&self) -> Vec<(u64, Document)> {
        self.docs.clone()
    }

    pub fn find_eq(&self, field: &str, value: &str) -> Vec<(u64, Document)> {
        self.docs
            .iter()
            .filter(|(_, d)| d.get(field) == Some(value))
            .cloned()
            .collect()
    }
}

/// Baseline: every field under one symmetric key, `name` DET and the rest
/// RND, decrypted client-side. No policy layer.
pub struct SymmetricStore {
    dek: Dek,
    records: Vec<(u64, Vec<(String, FieldCiphertext)>)>,
}

impl SymmetricStore {
    pub fn new<R: RngCore + CryptoRng + ?Sized>(docs: &[Document], rng: &mut R) -> Result<Self> {
        let dek = Dek::random(rng)?;
        let mut records = Vec::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            let mut fields = Vec::new();
            for (k, v) in &d.0 {
                let mode = if k == "name" { SymMode::Det } else { SymMode::Rnd };
                fields.push((k.clone(), sym_encrypt(&dek, v.as_bytes(), mode, rng)?));
            }
            records.push((i as u64 + 1, fields));
        }
        Ok(SymmetricStore { dek, records })
    }

    fn open(&self, fields: &[(String, FieldCiphertext)]) -> Result<Document> {
        let mut d = Document::new();
        for (k, fc) in fields {
            let pt = sym_decrypt(&self.dek, fc)?;
            d.0.insert(k.clone(), String::from_utf8(pt).map_err(|_| Error::BadPadding)?);
        }
        Ok(d)
    }

    pub fn find_all(&self) -> Result<Vec<(u64, Document)>> {
        self.records.iter().map(|(id, f)| Ok((*id, self.open(f)?))).collect()
    }

    pub fn find_eq(&self, field: &str, value: &str) -> Result<Vec<(u64, Document)>> {
        if field != "name" {
            return Err(Error::NotDeterministicField(field.to_string()));
        }
        let token = sym_encrypt_det(&self.dek, value.as_bytes());
        self.records
            .iter()
            .filter(|(_, f)| f.iter().any(|(k, fc)| k == field && fc.body == token.body))
            .map(|(id, f)| Ok((*id, self.open(f)?)))
            .collect()
    }
}

pub fn query_field_specs() -> Vec<FieldSpec> {
    vec![
        FieldSpec::encrypted("name", FieldMode::Det, "analyst or admin"),
        FieldSpec::encrypted("salary", FieldMode::Rnd, "admin"),
        FieldSpec::encrypted("credit_card_number", FieldMode::Rnd, "admin"),
    ]
}

// ---------------------------------------------------------------------------
// Experiments

fn time_runs<T>(cfg: &BenchConfig, mut op: impl FnMut() -> Result<T>) -> Result<Vec<f64>> {
    for _ in 0..cfg.warmup {
        black_box(op()?);
    }
    let mut samples = Vec::with_capacity(cfg.runs);
    for _ in 0..cfg.runs {
        let start = Instant::now();
        let out = op()?;
        samples.push(start.elapsed().as_secs_f64() * 1e3);
        black_box(out);
    }
    Ok(samples)
}

/// Q1 (retrieve all) and Q2 (name equals "Alice") against the plaintext,
/// symmetric-only and CP-ABE stores.
pub fn bench_queries(cfg: &BenchConfig, keys: &BenchKeys) -> Result<BenchReport> {
    cfg.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let docs = gen_dataset(cfg.seed, cfg.doc_count);

    let plain = PlainStore::new(&docs);
    let sym = SymmetricStore::new(&docs, &mut rng)?;
    let admin = keys.key_for(&["admin".to_string()], &mut rng)?;
    let mut coll = Collection::new("bench", &query_field_specs(), &keys.pk, &mut rng)?;
    let ring = coll.keyring(&keys.pk, &admin);
    for d in &docs {
        coll.insert_with(&ring, d, &mut rng)?;
    }

    let mut rows = Vec::new();
    let mut push = |variant: Variant, query: Query, samples: Vec<f64>| {
        let reference = REFERENCE_QUERY_MS.iter().find(|p| p.0 == variant).map(|p| match query {
            Query::Q1 => p.1,
            Query::Q2 => p.2,
        });
        rows.push(BenchRow {
            experiment: Experiment::Queries,
            variant,
            query: Some(query),
            attrs: None,
            plaintext_kb: None,
            unit: Unit::Ms,
            samples,
            reference,
        });
    };

    push(Variant::Plaintext, Query::Q1, time_runs(cfg, || Ok(plain.find_all()))?);
    push(Variant::Plaintext, Query::Q2, time_runs(cfg, || Ok(plain.find_eq("name", "Alice")))?);
    push(Variant::Symmetric, Query::Q1, time_runs(cfg, || sym.find_all())?);
    push(Variant::Symmetric, Query::Q2, time_runs(cfg, || sym.find_eq("name", "Alice"))?);
    push(Variant::Cpabe, Query::Q1, time_runs(cfg, || Ok(coll.find_all(&keys.pk, &admin)))?);
    push(Variant::Cpabe, Query::Q2, time_runs(cfg, || coll.find_eq("name", "Alice", &keys.pk, &admin))?);

    Ok(BenchReport {
        rows,
        environment: environment(cfg),
    })
}

pub fn synthetic_attrs(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("attr_{i}")).collect()
}

/// Flat AND of `attr_1 … attr_n`.
pub fn and_chain(n: usize) -> Result<AccessTree> {
    AccessTree::parse(&synthetic_attrs(n).join(" and "))
}

fn payload(rng: &mut impl RngCore, kb: usize) -> Vec<u8> {
    let mut v = vec![0u8; kb * 1024];
    rng.fill_bytes(&mut v);
    v
}

/// Serialized encrypted-file size against attribute count (at the largest
/// plaintext size) and against plaintext size (at the smallest and largest
/// attribute counts).
pub fn bench_size_scaling(cfg: &BenchConfig, keys: &BenchKeys) -> Result<BenchReport> {
    cfg.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let max_kb = *cfg.size_range_kb.last().unwrap();
    let (min_a, max_a) = (cfg.attr_range[0], *cfg.attr_range.last().unwrap());

    let mut points = BTreeSet::new();
    points.extend(cfg.attr_range.iter().map(|&a| (a, max_kb)));
    for &kb in &cfg.size_range_kb {
        points.insert((min_a, kb));
        points.insert((max_a, kb));
    }

    let mut rows = Vec::new();
    for (attrs, kb) in points {
        let tree = and_chain(attrs)?;
        let data = payload(&mut rng, kb);
        let sealed = EncryptedFile::seal(&keys.pk, &tree, &data, SymMode::Rnd, &mut rng)?;
        rows.push(BenchRow {
            experiment: Experiment::Size,
            variant: Variant::Cpabe,
            query: None,
            attrs: Some(attrs),
            plaintext_kb: Some(kb),
            unit: Unit::Bytes,
            samples: vec![sealed.to_bytes().len() as f64],
            reference: None,
        });
    }
    Ok(BenchReport {
        rows,
        environment: environment(cfg),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Encrypt,
    Decrypt,
}

/// Wall-clock time to seal (or open) an encrypted file over the full
/// attribute × plaintext-size grid. Decryption keys hold exactly the
/// policy's attributes.
pub fn bench_time_scaling(cfg: &BenchConfig, keys: &BenchKeys, phase: Phase) -> Result<BenchReport> {
    Ok(bench_time_grid(cfg, keys, &[phase])?.remove(0))
}

/// Times several phases in one sweep, one report per phase.
///
/// Within each plaintext size the runs are taken round-robin over every
/// (attribute count, phase) cell, so a burst of host contention lands on
/// all cells alike instead of on whichever one happened to be running.
pub fn bench_time_grid(cfg: &BenchConfig, keys: &BenchKeys, phases: &[Phase]) -> Result<Vec<BenchReport>> {
    cfg.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let trees = cfg.attr_range.iter().map(|&a| and_chain(a)).collect::<Result<Vec<_>>>()?;
    let sks = match phases.contains(&Phase::Decrypt) {
        true => cfg
            .attr_range
            .iter()
            .map(|&a| keys.key_for(&synthetic_attrs(a), &mut rng).map(Some))
            .collect::<Result<Vec<_>>>()?,
        false => vec![None; trees.len()],
    };
    let mut enc_rng = ChaCha20Rng::seed_from_u64(rng.gen());

    let mut reports: Vec<BenchReport> = phases
        .iter()
        .map(|_| BenchReport {
            rows: Vec::new(),
            environment: environment(cfg),
        })
        .collect();
    for &kb in &cfg.size_range_kb {
        let data = payload(&mut rng, kb);
        let sealed = trees
            .iter()
            .map(|t| EncryptedFile::seal(&keys.pk, t, &data, SymMode::Rnd, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let mut samples = vec![vec![Vec::with_capacity(cfg.runs); trees.len()]; phases.len()];
        for round in 0..cfg.warmup + cfg.runs {
            for (i, tree) in trees.iter().enumerate() {
                for (p, phase) in phases.iter().enumerate() {
                    let start = Instant::now();
                    match phase {
                        Phase::Encrypt => {
                            black_box(EncryptedFile::seal(&keys.pk, tree, &data, SymMode::Rnd, &mut enc_rng)?);
                        }
                        Phase::Decrypt => {
                            let sk = sks[i].as_ref().expect("decrypt keys issued");
                            black_box(sealed[i].open(&keys.pk, sk)?);
                        }
                    }
                    let ms = start.elapsed().as_secs_f64() * 1e3;
                    if round >= cfg.warmup {
                        samples[p][i].push(ms);
                    }
                }
            }
        }
        for (p, phase) in phases.iter().enumerate() {
            for (i, &attrs) in cfg.attr_range.iter().enumerate() {
                reports[p].rows.push(BenchRow {
                    experiment: match phase {
                        Phase::Encrypt => Experiment::EncTime,
                        Phase::Decrypt => Experiment::DecTime,
                    },
                    variant: Variant::Cpabe,
                    query: None,
                    attrs: Some(attrs),
                    plaintext_kb: Some(kb),
                    unit: Unit::Ms,
                    samples: std::mem::take(&mut samples[p][i]),
                    reference: None,
                });
            }
        }
    }
    for r in &mut reports {
        r.rows.sort_by_key(|row| (row.attrs, row.plaintext_kb));
    }
    Ok(reports)
}
