// SPDX-License-Identifier: Apache-2.0

//! Browser bindings: policy explorer, ABE round trip, DET vs RND.
//!
//! Every export takes and returns plain strings; results are JSON objects
//! with either the fields described below or a single `error` field.

use std::cell::OnceCell;
use std::collections::BTreeMap;

use rand::rngs::OsRng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use cpabe_core::abe::{keygen, setup, MasterKey, PublicParams};
use cpabe_core::envelope::{sym_encrypt, Dek, EncryptedFile, SymMode};
use cpabe_core::pairing::group_setup;
use cpabe_core::policy::{min_satisfying_selection, AccessTree, AttributeSet};
use cpabe_core::Result;

thread_local! {
    static KEYS: OnceCell<(PublicParams, MasterKey)> = const { OnceCell::new() };
}

fn with_keys<T>(f: impl FnOnce(&PublicParams, &MasterKey) -> Result<T>) -> Result<T> {
    KEYS.with(|cell| {
        if cell.get().is_none() {
            let keys = setup(&group_setup(128)?, &mut OsRng)?;
            let _ = cell.set(keys);
        }
        let (pk, mk) = cell.get().expect("keys initialised");
        f(pk, mk)
    })
}

fn render(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// `{policy, attributes, satisfied, used}`: canonical policy text, whether
/// the comma-separated attributes satisfy it, and the leaf attributes a
/// decryptor would use.
#[wasm_bindgen]
pub fn explore_policy(policy: &str, attrs: &str) -> String {
    render((|| {
        let tree = AccessTree::parse(policy)?;
        let set = AttributeSet::parse_list(attrs)?;
        let used: Vec<&str> = match min_satisfying_selection(&tree, &set) {
            Ok(sel) => sel.leaves().iter().filter_map(|&l| tree.leaf_attribute(l)).collect(),
            Err(_) => Vec::new(),
        };
        Ok(json!({
            "policy": tree.to_string(),
            "attributes": tree.attributes().into_iter().collect::<Vec<_>>(),
            "satisfied": tree.satisfies(&set),
            "used": used,
        }))
    })())
}

/// Seals `message` under `policy`, issues a key for `attrs` and tries to
/// open it: `{ciphertext_bytes, leaves, opened, plaintext?, reason?}`.
#[wasm_bindgen]
pub fn abe_round_trip(policy: &str, attrs: &str, message: &str) -> String {
    render(with_keys(|pk, mk| {
        let tree = AccessTree::parse(policy)?;
        let set = AttributeSet::parse_list(attrs)?;
        let sealed = EncryptedFile::seal(pk, &tree, message.as_bytes(), SymMode::Rnd, &mut OsRng)?;
        let sk = keygen(mk, pk, &set, &mut OsRng)?;
        let mut out = json!({
            "ciphertext_bytes": sealed.to_bytes().len(),
            "leaves": tree.leaves().len(),
        });
        match sealed.open(pk, &sk) {
            Ok(pt) => {
                out["opened"] = json!(true);
                out["plaintext"] = json!(String::from_utf8_lossy(&pt));
            }
            Err(e) => {
                out["opened"] = json!(false);
                out["reason"] = json!(e.to_string());
            }
        }
        Ok(out)
    }))
}

/// Encrypts each line of `values` under one field key in both modes:
/// `{rows: [{value, det, rnd, det_group}], det_distinct, rnd_distinct}`.
/// Equal values share a DET ciphertext and a `det_group`; RND never repeats.
#[wasm_bindgen]
pub fn det_vs_rnd(values: &str) -> String {
    render((|| {
        let dek = Dek::random(&mut OsRng)?;
        let mut groups: BTreeMap<String, usize> = BTreeMap::new();
        let mut rnd_seen = std::collections::BTreeSet::new();
        let mut rows = Vec::new();
        for v in values.lines().map(str::trim).filter(|v| !v.is_empty()) {
            let det = hex::encode(sym_encrypt(&dek, v.as_bytes(), SymMode::Det, &mut OsRng)?.to_bytes());
            let rnd = hex::encode(sym_encrypt(&dek, v.as_bytes(), SymMode::Rnd, &mut OsRng)?.to_bytes());
            let next = groups.len();
            let group = *groups.entry(det.clone()).or_insert(next);
            rnd_seen.insert(rnd.clone());
            rows.push(json!({ "value": v, "det": det, "rnd": rnd, "det_group": group }));
        }
        Ok(json!({
            "rows": rows,
            "det_distinct": groups.len(),
            "rnd_distinct": rnd_seen.len(),
        }))
    })())
}
