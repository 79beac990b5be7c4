// SPDX-License-Identifier: Apache-2.0

//! Setup, issue a key, seal a message under a policy, open it.

use cpabe_core::abe::{keygen, setup};
use cpabe_core::envelope::{EncryptedFile, SymMode};
use cpabe_core::pairing::group_setup;
use cpabe_core::policy::{AccessTree, AttributeSet};
use rand::rngs::OsRng;

fn main() -> cpabe_core::Result<()> {
    let mut rng = OsRng;
    let (pk, mk) = setup(&group_setup(128)?, &mut rng)?;

    let policy = AccessTree::parse("admin or (analyst and 2 of (eu, us, audit))")?;
    let sealed = EncryptedFile::seal(&pk, &policy, b"quarterly numbers", SymMode::Rnd, &mut rng)?;
    println!("policy: {policy}");
    println!("sealed: {} bytes", sealed.to_bytes().len());

    for attrs in [vec!["analyst", "eu", "audit"], vec!["analyst", "eu"], vec!["admin"]] {
        let sk = keygen(&mk, &pk, &AttributeSet::new(attrs.iter().copied())?, &mut rng)?;
        match sealed.open(&pk, &sk) {
            Ok(pt) => println!("{attrs:?}: {}", String::from_utf8_lossy(&pt)),
            Err(e) => println!("{attrs:?}: {e}"),
        }
    }
    Ok(())
}
