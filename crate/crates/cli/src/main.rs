// SPDX-License-Identifier: Apache-2.0

//! `cpabe`: attribute authority, file encryption, encrypted document store and
//! the benchmark experiments.
//!
//! Exit codes: 0 success, 2 usage, 3 crypto or policy failure, 4 storage.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use base64::{engine::general_purpose::STANDARD as B64, Engine as _};
use clap::{Args, Parser, Subcommand};
use rand::rngs::OsRng;
use serde_json::{Map, Value};

use cpabe_core::authority::{load_private, load_public, AttributeUniverse, Authority, PK_FILE};
use cpabe_core::bench::{self, BenchConfig, BenchKeys, BenchReport, Phase};
use cpabe_core::docstore::{Collection, DecryptedDocument, Document, FieldMode, FieldSpec, FieldValue};
use cpabe_core::envelope::{EncryptedFile, SymMode};
use cpabe_core::policy::{AccessTree, AttributeSet};
use cpabe_core::{Error, ErrorCategory};

#[derive(Parser, Debug)]
#[command(name = "cpabe", version, about = "Ciphertext-policy ABE toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Create an attribute authority (public params, master key, universe).
    Setup {
        #[arg(long)]
        dir: PathBuf,
        /// Comma-separated attribute universe.
        #[arg(long)]
        universe: String,
    },
    /// Issue a private key to a user.
    Keygen {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        user: String,
        #[arg(long)]
        attrs: String,
        /// Key file to write [default: <dir>/<user>.key]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encrypt a file under a policy.
    Enc {
        #[arg(long = "pub")]
        pk: PathBuf,
        #[arg(long)]
        policy: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Deterministic payload encryption (zero IV).
        #[arg(long)]
        det: bool,
    },
    /// Decrypt a file.
    Dec {
        #[arg(long = "pub")]
        pk: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encrypted document store.
    Store {
        #[command(subcommand)]
        op: StoreOp,
    },
    /// Benchmark experiments, written as CSV.
    Bench {
        #[command(subcommand)]
        exp: BenchExp,
    },
}

#[derive(Args, Debug)]
struct StoreLoc {
    /// Store directory.
    #[arg(long)]
    store: PathBuf,
    /// Collection name.
    #[arg(long)]
    name: String,
    #[arg(long = "pub")]
    pk: PathBuf,
}

#[derive(Subcommand, Debug)]
enum StoreOp {
    /// Create a collection. Fields are NAME:MODE[:POLICY], MODE one of det, rnd, plain.
    Create {
        #[command(flatten)]
        loc: StoreLoc,
        #[arg(long = "field", required = true)]
        fields: Vec<String>,
    },
    /// Insert JSON documents: one per --doc, or one per line of --jsonl.
    Insert {
        #[command(flatten)]
        loc: StoreLoc,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        doc: Vec<String>,
        #[arg(long)]
        jsonl: Option<PathBuf>,
    },
    /// Print every document as JSON lines.
    FindAll {
        #[command(flatten)]
        loc: StoreLoc,
        #[arg(long)]
        key: PathBuf,
    },
    /// Print documents whose FIELD equals VALUE.
    FindEq {
        #[command(flatten)]
        loc: StoreLoc,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        field: String,
        #[arg(long)]
        value: String,
    },
}

#[derive(Args, Debug)]
struct BenchOpts {
    #[arg(long, default_value_t = 15)]
    runs: usize,
    #[arg(long, default_value_t = 3)]
    warmup: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    docs: usize,
    /// Comma-separated attribute counts.
    #[arg(long, default_value = "5,10,15,20,25,30")]
    attrs: String,
    /// Comma-separated plaintext sizes in KB.
    #[arg(long, default_value = "100,200,300,400,500,600,700,800,900,1000")]
    sizes_kb: String,
    /// Authority directory to take pk/mk from; a throwaway setup is used if omitted.
    #[arg(long)]
    dir: Option<PathBuf>,
    /// Summary CSV path [default: stdout]
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Per-run measurements CSV.
    #[arg(long)]
    raw: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum BenchExp {
    /// Q1/Q2 over plaintext, symmetric-only and CP-ABE stores.
    Queries(BenchOpts),
    /// Ciphertext bytes against attributes and plaintext size.
    Size(BenchOpts),
    /// Encryption time over the attribute x size grid.
    EncTime(BenchOpts),
    /// Decryption time over the attribute x size grid.
    DecTime(BenchOpts),
}

enum Failure {
    Core(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.category() {
                ErrorCategory::Usage => 2,
                ErrorCategory::Crypto => 3,
                ErrorCategory::Storage => 4,
            })
        }
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Setup { dir, universe } => {
            let universe = AttributeUniverse::new(split_list(&universe))?;
            let auth = Authority::bootstrap(&dir, universe, &mut OsRng)?;
            println!("authority created in {}", dir.display());
            println!("universe: {}", auth.universe().iter().collect::<Vec<_>>().join(","));
            println!("public params: {}", dir.join(PK_FILE).display());
        }
        Command::Keygen { dir, user, attrs, out } => {
            let mut auth = Authority::open(&dir)?;
            let attrs = AttributeSet::parse_list(&attrs)?;
            let out = out.unwrap_or_else(|| dir.join(format!("{user}.key")));
            if out.exists() {
                return Err(Error::StorageError(format!("{} already exists", out.display())).into());
            }
            let (record, container) = auth.issue_user_key(&user, &attrs, &mut OsRng)?;
            container.write_file(&out)?;
            println!("issued key for {} [{}] -> {}", record.user_id, record.attrs, out.display());
            println!("fingerprint {}", record.key_fingerprint);
        }
        Command::Enc { pk, policy, input, out, det } => {
            let pk = load_public(&pk)?;
            let tree = AccessTree::parse(&policy)?;
            let data = read(&input)?;
            let mode = if det { SymMode::Det } else { SymMode::Rnd };
            let sealed = EncryptedFile::seal(&pk, &tree, &data, mode, &mut OsRng)?;
            write(&out, &sealed.to_bytes())?;
        }
        Command::Dec { pk, key, input, out } => {
            let pk = load_public(&pk)?;
            let sk = load_private(&key)?;
            let sealed = EncryptedFile::from_bytes(&read(&input)?)?;
            write(&out, &sealed.open(&pk, &sk)?)?;
        }
        Command::Store { op } => store(op)?,
        Command::Bench { exp } => run_bench(exp)?,
    }
    Ok(())
}

fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect()
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| Error::StorageError(format!("{}: {e}", path.display())).into())
}

fn write(path: &Path, bytes: &[u8]) -> CliResult {
    fs::write(path, bytes).map_err(|e| Error::StorageError(format!("{}: {e}", path.display())).into())
}

// ---------------------------------------------------------------------------
// store

fn parse_field(spec: &str) -> CliResult<FieldSpec> {
    let mut parts = spec.splitn(3, ':');
    let name = parts.next().unwrap_or_default();
    let mode = parts.next().and_then(FieldMode::parse).ok_or_else(|| {
        Failure::Usage(format!("field {spec:?}: expected NAME:det|rnd|plain[:POLICY]"))
    })?;
    let policy = parts.next();
    match (mode, policy) {
        (FieldMode::Plaintext, None) => Ok(FieldSpec::plaintext(name)),
        (FieldMode::Plaintext, Some(_)) => Err(Failure::Usage(format!("plaintext field {name} takes no policy"))),
        (m, Some(p)) => Ok(FieldSpec::encrypted(name, m, p)),
        (_, None) => Err(Failure::Usage(format!("encrypted field {name} needs a policy"))),
    }
}

fn parse_doc(text: &str) -> CliResult<Document> {
    let value: Value = serde_json::from_str(text).map_err(|e| Failure::Usage(format!("document: {e}")))?;
    let Value::Object(map) = value else {
        return Err(Failure::Usage("document must be a JSON object".into()));
    };
    let mut doc = Document::new();
    for (k, v) in map {
        doc = match v {
            Value::String(s) => doc.with(&k, s),
            Value::Number(n) if n.is_i64() => doc.with_int(&k, n.as_i64().unwrap()),
            Value::Number(n) if n.is_u64() => doc.with(&k, n.as_u64().unwrap().to_string()),
            other => return Err(Failure::Usage(format!("field {k}: unsupported value {other}"))),
        };
    }
    Ok(doc)
}

fn doc_json(d: &DecryptedDocument) -> String {
    let mut m = Map::new();
    m.insert("doc_id".into(), Value::from(d.doc_id));
    for (k, v) in &d.fields {
        let v = match v {
            FieldValue::Plain(s) => Value::String(s.clone()),
            FieldValue::Opaque(fc) => {
                let mut o = Map::new();
                o.insert("opaque".into(), Value::String(B64.encode(fc.to_bytes())));
                o.insert("dek_id".into(), Value::String(hex::encode(fc.dek_id)));
                Value::Object(o)
            }
        };
        m.insert(k.clone(), v);
    }
    Value::Object(m).to_string()
}

fn print_docs(docs: &[DecryptedDocument]) -> CliResult {
    let mut out = io::stdout().lock();
    for d in docs {
        writeln!(out, "{}", doc_json(d)).map_err(Error::from)?;
    }
    Ok(())
}

fn store(op: StoreOp) -> CliResult {
    match op {
        StoreOp::Create { loc, fields } => {
            let pk = load_public(&loc.pk)?;
            let specs = fields.iter().map(|f| parse_field(f)).collect::<CliResult<Vec<_>>>()?;
            let coll = Collection::create(&loc.store, &loc.name, &specs, &pk, &mut OsRng)?;
            println!(
                "created {} with {} fields",
                Collection::file_path(&loc.store, coll.name()).display(),
                coll.fields().len()
            );
        }
        StoreOp::Insert { loc, key, doc, jsonl } => {
            let pk = load_public(&loc.pk)?;
            let sk = load_private(&key)?;
            let mut docs = doc.iter().map(|d| parse_doc(d)).collect::<CliResult<Vec<_>>>()?;
            if let Some(path) = jsonl {
                let f = fs::File::open(&path).map_err(|e| Error::StorageError(format!("{}: {e}", path.display())))?;
                for line in io::BufReader::new(f).lines() {
                    let line = line.map_err(Error::from)?;
                    if !line.trim().is_empty() {
                        docs.push(parse_doc(&line)?);
                    }
                }
            }
            if docs.is_empty() {
                return Err(Failure::Usage("nothing to insert; pass --doc or --jsonl".into()));
            }
            let mut coll = Collection::open(&loc.store, &loc.name)?;
            for d in &docs {
                println!("{}", coll.insert(d, &pk, &sk, &mut OsRng)?);
            }
        }
        StoreOp::FindAll { loc, key } => {
            let pk = load_public(&loc.pk)?;
            let sk = load_private(&key)?;
            let coll = Collection::open(&loc.store, &loc.name)?;
            print_docs(&coll.find_all(&pk, &sk))?;
        }
        StoreOp::FindEq { loc, key, field, value } => {
            let pk = load_public(&loc.pk)?;
            let sk = load_private(&key)?;
            let coll = Collection::open(&loc.store, &loc.name)?;
            print_docs(&coll.find_eq(&field, &value, &pk, &sk)?)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// bench

fn parse_usizes(s: &str, what: &str) -> CliResult<Vec<usize>> {
    split_list(s)
        .into_iter()
        .map(|t| t.parse().map_err(|_| Failure::Usage(format!("{what}: not a count: {t:?}"))))
        .collect()
}

fn run_bench(exp: BenchExp) -> CliResult {
    let (opts, f): (BenchOpts, fn(&BenchConfig, &BenchKeys) -> cpabe_core::Result<BenchReport>) = match exp {
        BenchExp::Queries(o) => (o, bench::bench_queries),
        BenchExp::Size(o) => (o, bench::bench_size_scaling),
        BenchExp::EncTime(o) => (o, |c, k| bench::bench_time_scaling(c, k, Phase::Encrypt)),
        BenchExp::DecTime(o) => (o, |c, k| bench::bench_time_scaling(c, k, Phase::Decrypt)),
    };
    let cfg = BenchConfig {
        runs: opts.runs,
        warmup: opts.warmup,
        doc_count: opts.docs,
        attr_range: parse_usizes(&opts.attrs, "--attrs")?,
        size_range_kb: parse_usizes(&opts.sizes_kb, "--sizes-kb")?,
        seed: opts.seed,
    };
    cfg.validate()?;
    let keys = match &opts.dir {
        Some(dir) => BenchKeys::load(dir)?,
        None => BenchKeys::generate(&mut OsRng)?,
    };
    let report = f(&cfg, &keys)?;
    eprintln!("# {}", report.environment);
    match &opts.csv {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| Error::StorageError(format!("{}: {e}", path.display())))?;
            report.write_csv(file)?;
        }
        None => report.write_csv(io::stdout().lock())?,
    }
    if let Some(path) = &opts.raw {
        let file = fs::File::create(path).map_err(|e| Error::StorageError(format!("{}: {e}", path.display())))?;
        report.write_raw_csv(file)?;
    }
    Ok(())
}
