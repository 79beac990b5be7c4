// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;
use std::fs;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use cpabe_core::authority::{load_private, AttributeUniverse, Authority, KeyContainer, MK_FILE, USERS_FILE};
use cpabe_core::envelope::{EncryptedFile, SymMode};
use cpabe_core::policy::{AccessTree, AttributeSet};
use cpabe_core::Error;

#[test]
fn issued_keys_work_across_reopen() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let uni = AttributeUniverse::new(["admin", "analyst", "eu"]).unwrap();
    let mut auth = Authority::bootstrap(tmp.path(), uni, &mut rng).unwrap();
    let attrs = AttributeSet::parse_list("admin,eu").unwrap();
    let (_, c1) = auth.issue_user_key("u1", &attrs, &mut rng).unwrap();
    let (_, c2) = auth.issue_user_key("u2", &attrs, &mut rng).unwrap();
    assert_ne!(c1.fingerprint(), c2.fingerprint());
    c1.write_file(&tmp.path().join("u1.key")).unwrap();

    let mut auth = Authority::open(tmp.path()).unwrap();
    assert_eq!(auth.users().len(), 2);
    assert_eq!(
        auth.issue_user_key("u1", &attrs, &mut rng).unwrap_err(),
        Error::DuplicateUser("u1".into())
    );
    let tree = AccessTree::parse("admin and eu").unwrap();
    let sealed = EncryptedFile::seal(auth.public(), &tree, b"m", SymMode::Rnd, &mut rng).unwrap();
    let sk = load_private(&tmp.path().join("u1.key")).unwrap();
    assert_eq!(sealed.open(auth.public(), &sk).unwrap(), b"m");

    let fps: HashSet<String> = (0..20)
        .map(|i| auth.issue_user_key(&format!("x{i}"), &attrs, &mut rng).unwrap().1.fingerprint())
        .collect();
    assert_eq!(fps.len(), 20);
    let registry = fs::read_to_string(tmp.path().join(USERS_FILE)).unwrap();
    assert_eq!(registry.lines().count(), 1 + 22);
}

#[cfg(unix)]
#[test]
fn master_key_is_private() {
    use std::os::unix::fs::PermissionsExt;
    let tmp = tempfile::tempdir().unwrap();
    let uni = AttributeUniverse::new(["a"]).unwrap();
    Authority::bootstrap(tmp.path(), uni, &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
    let mode = fs::metadata(tmp.path().join(MK_FILE)).unwrap().permissions().mode();
    assert_eq!(mode & 0o077, 0);
}

#[test]
fn corrupted_files() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let uni = AttributeUniverse::new(["a", "b"]).unwrap();
    let mut auth = Authority::bootstrap(tmp.path(), uni, &mut rng).unwrap();
    let (_, c) = auth.issue_user_key("u", &AttributeSet::parse_list("a").unwrap(), &mut rng).unwrap();
    let path = tmp.path().join("u.key");
    let bytes = c.to_bytes();

    fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert!(matches!(load_private(&path), Err(Error::CorruptContainer(_))));

    // Flip a byte inside the compressed D point: either not on the curve or
    // not canonical; both are encoding failures.
    let mut b = bytes.clone();
    b[20] ^= 0x55;
    fs::write(&path, &b).unwrap();
    assert!(matches!(load_private(&path), Err(Error::InvalidGroupElement(_))));

    assert!(matches!(
        load_private(&tmp.path().join("absent.key")),
        Err(Error::StorageError(_))
    ));
    assert!(matches!(
        KeyContainer::read_file(&tmp.path().join(MK_FILE)).unwrap().to_private(),
        Err(Error::CorruptContainer(_))
    ));
}
