// SPDX-License-Identifier: Apache-2.0

//! Ciphertext-policy ABE in the Bethencourt–Sahai–Waters construction.
//!
//! ```text
//! Setup     alpha, beta <- Zp
//!           pk = (h = g1^beta, e(g,g)^alpha)       mk = (beta, g2^alpha)
//! KeyGen    r <- Zp; for j in S: r_j <- Zp
//!           D = g2^((alpha + r) / beta)
//!           D_j = g2^r * H(j)^r_j                 D_j' = g1^r_j
//! Encrypt   s <- Zp; q_y(0) from sharing s over T
//!           C~ = M * e(g,g)^(alpha s)             C = h^s
//!           C_y = g1^q_y(0)                       C_y' = H(att(y))^q_y(0)
//! Decrypt   A = e(g,g)^(r s) from the leaves;     M = C~ / (e(C, D) / A)
//! ```
//!
//! Every key embeds its own `r`, so components from different keys never
//! recombine to the right `A`.

use std::collections::BTreeMap;

use ark_ec::{pairing::PairingOutput, AffineRepr, CurveGroup};
use ark_ff::{Field, Zero};
use rand::{CryptoRng, RngCore};

use crate::error::{Error, Result};
use crate::pairing::{
    g1_mul, g2_mul, multi_pair, pair, random_nonzero_scalar, random_scalar, GroupContext, Gt,
    Scalar, G1, G2,
};
use crate::policy::{
    leaf_coefficients, lagrange_coeff, min_satisfying_selection, share_secret, AccessTree,
    AttributeSet, NodeId, NodeKind, Selection,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicParams {
    pub ctx: GroupContext,
    /// `g1^beta`
    pub h: G1,
    /// `e(g1, g2)^alpha`
    pub e_gg_alpha: Gt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterKey {
    pub beta: Scalar,
    /// `g2^alpha`
    pub g_alpha: G2,
}

/// Per-attribute key components `(D_j, D_j')`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AttributeKey {
    pub d: G2,
    pub d_prime: G1,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrivateKey {
    attrs: AttributeSet,
    d: G2,
    components: BTreeMap<String, AttributeKey>,
}

impl PrivateKey {
    /// Assembles a key from raw components. Used by deserialization; nothing
    /// checks that the parts came from one keygen run.
    pub fn from_components(d: G2, components: BTreeMap<String, AttributeKey>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyAttributeSet);
        }
        let attrs = AttributeSet::new(components.keys().cloned())?;
        Ok(PrivateKey {
            attrs,
            d,
            components,
        })
    }

    pub fn attrs(&self) -> &AttributeSet {
        &self.attrs
    }

    pub fn d(&self) -> &G2 {
        &self.d
    }

    pub fn component(&self, attr: &str) -> Option<&AttributeKey> {
        self.components.get(attr)
    }

    pub fn components(&self) -> &BTreeMap<String, AttributeKey> {
        &self.components
    }
}

/// Ciphertext leaf components `(C_y, C_y')`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LeafCiphertext {
    pub c: G1,
    pub c_prime: G2,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbeCiphertext {
    pub tree: AccessTree,
    /// `M * e(g,g)^(alpha s)`
    pub c_tilde: Gt,
    /// `h^s`
    pub c: G1,
    /// One entry per tree leaf, in [`AccessTree::leaves`] order.
    pub leaves: Vec<LeafCiphertext>,
}

impl AbeCiphertext {
    fn leaf(&self, leaf: NodeId) -> Result<&LeafCiphertext> {
        let pos = self
            .tree
            .leaves()
            .iter()
            .position(|&l| l == leaf)
            .ok_or_else(|| Error::MalformedCiphertext(format!("node {} is not a leaf", leaf.0)))?;
        self.leaves
            .get(pos)
            .ok_or_else(|| Error::MalformedCiphertext("missing leaf component".into()))
    }

    fn check_shape(&self) -> Result<()> {
        if self.leaves.len() != self.tree.leaves().len() {
            return Err(Error::MalformedCiphertext(format!(
                "{} leaf components for {} leaves",
                self.leaves.len(),
                self.tree.leaves().len()
            )));
        }
        Ok(())
    }
}

pub fn setup<R: RngCore + CryptoRng + ?Sized>(
    ctx: &GroupContext,
    rng: &mut R,
) -> Result<(PublicParams, MasterKey)> {
    let alpha = random_scalar(rng)?;
    let beta = random_nonzero_scalar(rng)?;
    let pk = PublicParams {
        ctx: ctx.clone(),
        h: g1_mul(&ctx.g1(), &beta),
        e_gg_alpha: ctx.gt() * alpha,
    };
    let mk = MasterKey {
        beta,
        g_alpha: g2_mul(&ctx.g2(), &alpha),
    };
    Ok((pk, mk))
}

pub fn keygen<R: RngCore + CryptoRng + ?Sized>(
    mk: &MasterKey,
    pk: &PublicParams,
    attrs: &AttributeSet,
    rng: &mut R,
) -> Result<PrivateKey> {
    keygen_exposing_r(mk, pk, attrs, rng).map(|(k, _)| k)
}

fn keygen_exposing_r<R: RngCore + CryptoRng + ?Sized>(
    mk: &MasterKey,
    pk: &PublicParams,
    attrs: &AttributeSet,
    rng: &mut R,
) -> Result<(PrivateKey, Scalar)> {
    if attrs.is_empty() {
        return Err(Error::EmptyAttributeSet);
    }
    let ctx = &pk.ctx;
    let r = random_scalar(rng)?;
    let beta_inv = mk.beta.inverse().expect("master beta is nonzero");
    let g2_r = ctx.g2() * r;
    let d = ((mk.g_alpha.into_group() + g2_r) * beta_inv).into_affine();

    let mut components = BTreeMap::new();
    for j in attrs.iter() {
        let r_j = random_scalar(rng)?;
        let h_j = ctx.hash_to_group(j)?;
        components.insert(
            j.to_string(),
            AttributeKey {
                d: (g2_r + h_j * r_j).into_affine(),
                d_prime: g1_mul(&ctx.g1(), &r_j),
            },
        );
    }
    Ok((
        PrivateKey {
            attrs: attrs.clone(),
            d,
            components,
        },
        r,
    ))
}

pub fn encrypt<R: RngCore + CryptoRng + ?Sized>(
    pk: &PublicParams,
    tree: &AccessTree,
    m: &Gt,
    rng: &mut R,
) -> Result<AbeCiphertext> {
    encrypt_exposing_s(pk, tree, m, rng).map(|(ct, _)| ct)
}

fn encrypt_exposing_s<R: RngCore + CryptoRng + ?Sized>(
    pk: &PublicParams,
    tree: &AccessTree,
    m: &Gt,
    rng: &mut R,
) -> Result<(AbeCiphertext, Scalar)> {
    let ctx = &pk.ctx;
    let s = random_scalar(rng)?;
    let shares = share_secret(tree, s, rng)?;

    let mut leaves = Vec::with_capacity(tree.leaves().len());
    for &leaf in tree.leaves() {
        let q = shares.get(leaf).expect("share for every leaf");
        let attr = tree.leaf_attribute(leaf).expect("leaf has attribute");
        let h_att = ctx.hash_to_group(attr)?;
        leaves.push(LeafCiphertext {
            c: g1_mul(&ctx.g1(), q),
            c_prime: g2_mul(&h_att, q),
        });
    }
    let ct = AbeCiphertext {
        tree: tree.clone(),
        c_tilde: *m + pk.e_gg_alpha * s,
        c: g1_mul(&pk.h, &s),
        leaves,
    };
    Ok((ct, s))
}

/// Recovers the encapsulated target-group element.
///
/// Leaf pairings are merged into one multi-pairing: each chosen leaf's
/// contribution `(e(C_y, D_j) / e(D_j', C_y'))^c_y` is folded in by raising
/// the G1 arguments to the flattened interpolation coefficient `c_y`, and the
/// final `e(C, D)` rides along with a negated G1 argument.
pub fn decrypt(_pk: &PublicParams, ct: &AbeCiphertext, sk: &PrivateKey) -> Result<Gt> {
    ct.check_shape()?;
    let sel = min_satisfying_selection(&ct.tree, sk.attrs()).map_err(|_| Error::PolicyNotSatisfied)?;
    let coeffs = leaf_coefficients(&ct.tree, &sel)?;

    let mut g1s = Vec::with_capacity(2 * coeffs.len() + 1);
    let mut g2s = Vec::with_capacity(2 * coeffs.len() + 1);
    for (leaf, coeff) in coeffs {
        let (key, c) = leaf_inputs(ct, sk, leaf)?;
        g1s.push(g1_mul(&c.c, &coeff));
        g2s.push(key.d);
        g1s.push(g1_mul(&key.d_prime, &-coeff));
        g2s.push(c.c_prime);
    }
    g1s.push((-ct.c.into_group()).into_affine());
    g2s.push(sk.d);

    // C~ * A / e(C, D), written additively.
    Ok(ct.c_tilde + multi_pair(&g1s, &g2s))
}

fn leaf_inputs<'a>(
    ct: &'a AbeCiphertext,
    sk: &'a PrivateKey,
    leaf: NodeId,
) -> Result<(&'a AttributeKey, &'a LeafCiphertext)> {
    let attr = ct
        .tree
        .leaf_attribute(leaf)
        .ok_or_else(|| Error::MalformedCiphertext("selected node is not a leaf".into()))?;
    let key = sk
        .component(attr)
        .ok_or_else(|| Error::AttributeMissing(attr.to_string()))?;
    Ok((key, ct.leaf(leaf)?))
}

/// `DecryptNode`: for a leaf, `e(C_x, D_i) / e(D_i', C_x') = e(g,g)^(r q_x(0))`;
/// for a gate, the Lagrange-weighted product over the selected children.
pub fn decrypt_node(
    ct: &AbeCiphertext,
    sk: &PrivateKey,
    node: NodeId,
    sel: &Selection,
) -> Result<Gt> {
    match &ct.tree.node(node).kind {
        NodeKind::Leaf { .. } => {
            let (key, c) = leaf_inputs(ct, sk, node)?;
            Ok(pair(&c.c, &key.d) - pair(&key.d_prime, &c.c_prime))
        }
        NodeKind::Gate { .. } => {
            let picked = sel.children_of(node).ok_or_else(|| {
                Error::MalformedCiphertext(format!("node {} not on the selected frontier", node.0))
            })?;
            let xs: Vec<Scalar> = picked
                .iter()
                .map(|&c| Scalar::from(u64::from(ct.tree.node(c).index)))
                .collect();
            let mut acc = PairingOutput::zero();
            for (&child, &x) in picked.iter().zip(&xs) {
                let f = decrypt_node(ct, sk, child, sel)?;
                acc += f * lagrange_coeff(x, &xs)?;
            }
            Ok(acc)
        }
    }
}

/// Reference decryption following the recursive `DecryptNode` definition.
pub fn decrypt_recursive(_pk: &PublicParams, ct: &AbeCiphertext, sk: &PrivateKey) -> Result<Gt> {
    ct.check_shape()?;
    let sel = min_satisfying_selection(&ct.tree, sk.attrs()).map_err(|_| Error::PolicyNotSatisfied)?;
    let a = decrypt_node(ct, sk, ct.tree.root(), &sel)?;
    Ok(ct.c_tilde - (pair(&ct.c, &sk.d) - a))
}

/// Random target-group element `e(g,g)^t`.
pub fn random_gt<R: RngCore + CryptoRng + ?Sized>(ctx: &GroupContext, rng: &mut R) -> Result<Gt> {
    Ok(ctx.gt() * random_scalar(rng)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::group_setup;
    use crate::policy::parse_policy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::collections::HashSet;

    fn fixture(seed: u64) -> (PublicParams, MasterKey, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let ctx = group_setup(128).unwrap();
        let (pk, mk) = setup(&ctx, &mut rng).unwrap();
        (pk, mk, rng)
    }

    fn attrs(list: &[&str]) -> AttributeSet {
        AttributeSet::new(list.iter().copied()).unwrap()
    }

    #[test]
    fn setup_consistency() {
        let (pk, mk, mut rng) = fixture(1);
        assert_eq!(pair(&pk.ctx.g1(), &mk.g_alpha), pk.e_gg_alpha);
        assert_eq!(pk.h, g1_mul(&pk.ctx.g1(), &mk.beta));
        assert!(!pk.h.is_zero());
        assert!(!pk.e_gg_alpha.is_zero());
        let (pk2, _) = setup(&pk.ctx, &mut rng).unwrap();
        assert_ne!(pk.h, pk2.h);
    }

    #[test]
    fn keygen_structure() {
        let (pk, mk, mut rng) = fixture(2);
        let set = attrs(&["doctor", "nurse", "admin"]);
        let (k1, r) = keygen_exposing_r(&mk, &pk, &set, &mut rng).unwrap();
        let k2 = keygen(&mk, &pk, &set, &mut rng).unwrap();
        assert_ne!(k1.d, k2.d);
        assert_eq!(k1.components().len(), 3);

        // e(g1, D_j) / e(D_j', H(j)) = e(g,g)^r for every j
        let expected = pk.ctx.gt() * r;
        for (j, comp) in k1.components() {
            let h = pk.ctx.hash_to_group(j).unwrap();
            let lhs = pair(&pk.ctx.g1(), &comp.d) - pair(&comp.d_prime, &h);
            assert_eq!(lhs, expected, "{j}");
        }

        assert_eq!(
            keygen(&mk, &pk, &AttributeSet::default(), &mut rng),
            Err(Error::EmptyAttributeSet)
        );
    }

    #[test]
    fn round_trip_and_failure() {
        let (pk, mk, mut rng) = fixture(3);
        let tree = parse_policy("(doctor and cardiology) or admin").unwrap();
        let m = random_gt(&pk.ctx, &mut rng).unwrap();
        let ct = encrypt(&pk, &tree, &m, &mut rng).unwrap();

        let admin = keygen(&mk, &pk, &attrs(&["admin"]), &mut rng).unwrap();
        assert_eq!(decrypt(&pk, &ct, &admin).unwrap(), m);
        let cardio = keygen(&mk, &pk, &attrs(&["doctor", "cardiology"]), &mut rng).unwrap();
        assert_eq!(decrypt(&pk, &ct, &cardio).unwrap(), m);
        assert_eq!(decrypt_recursive(&pk, &ct, &cardio).unwrap(), m);

        let doctor = keygen(&mk, &pk, &attrs(&["doctor"]), &mut rng).unwrap();
        assert_eq!(decrypt(&pk, &ct, &doctor), Err(Error::PolicyNotSatisfied));
    }

    #[test]
    fn encryption_is_randomized() {
        let (pk, _, mut rng) = fixture(4);
        let tree = parse_policy("a").unwrap();
        let m = random_gt(&pk.ctx, &mut rng).unwrap();
        let mut seen = HashSet::new();
        for _ in 0..100 {
            let ct = encrypt(&pk, &tree, &m, &mut rng).unwrap();
            assert!(seen.insert(crate::pairing::Encoding::to_bytes(&ct.c)));
        }
    }

    #[test]
    fn identity_message() {
        let (pk, _, mut rng) = fixture(5);
        let tree = parse_policy("a").unwrap();
        let (ct, s) = encrypt_exposing_s(&pk, &tree, &Gt::zero(), &mut rng).unwrap();
        assert_eq!(ct.c_tilde, pk.e_gg_alpha * s);
    }

    #[test]
    fn decrypt_node_values() {
        let (pk, mk, mut rng) = fixture(6);
        let m = random_gt(&pk.ctx, &mut rng).unwrap();

        let single = parse_policy("a").unwrap();
        let (ct, s) = encrypt_exposing_s(&pk, &single, &m, &mut rng).unwrap();
        let (sk, r) = keygen_exposing_r(&mk, &pk, &attrs(&["a"]), &mut rng).unwrap();
        let sel = min_satisfying_selection(&single, sk.attrs()).unwrap();
        assert_eq!(decrypt_node(&ct, &sk, single.root(), &sel).unwrap(), pk.ctx.gt() * (r * s));

        let both = parse_policy("a and b").unwrap();
        let (ct, s) = encrypt_exposing_s(&pk, &both, &m, &mut rng).unwrap();
        let (sk, r) = keygen_exposing_r(&mk, &pk, &attrs(&["a", "b"]), &mut rng).unwrap();
        let sel = min_satisfying_selection(&both, sk.attrs()).unwrap();
        assert_eq!(decrypt_node(&ct, &sk, both.root(), &sel).unwrap(), pk.ctx.gt() * (r * s));

        // Selection built from a broader set than the key actually holds.
        let wide = attrs(&["a", "b"]);
        let narrow = keygen(&mk, &pk, &attrs(&["a"]), &mut rng).unwrap();
        let sel = min_satisfying_selection(&both, &wide).unwrap();
        assert_eq!(
            decrypt_node(&ct, &narrow, both.root(), &sel),
            Err(Error::AttributeMissing("b".into()))
        );
    }

    #[test]
    fn flattened_matches_recursive() {
        let (pk, mk, mut rng) = fixture(7);
        let sk = keygen(&mk, &pk, &attrs(&["a", "b", "c", "d", "e"]), &mut rng).unwrap();
        for policy in [
            "a",
            "a and b",
            "a or z",
            "2 of (a, z, b)",
            "(a and z) or (2 of (b, c, y) and 3 of (d, e, a, x))",
        ] {
            let tree = parse_policy(policy).unwrap();
            let m = random_gt(&pk.ctx, &mut rng).unwrap();
            let ct = encrypt(&pk, &tree, &m, &mut rng).unwrap();
            assert_eq!(decrypt(&pk, &ct, &sk).unwrap(), m, "{policy}");
            assert_eq!(decrypt_recursive(&pk, &ct, &sk).unwrap(), m, "{policy}");
        }
    }

    #[test]
    fn chimera_key_fails() {
        let (pk, mk, mut rng) = fixture(8);
        let tree = parse_policy("a and b").unwrap();
        let m = random_gt(&pk.ctx, &mut rng).unwrap();
        let ct = encrypt(&pk, &tree, &m, &mut rng).unwrap();
        let u1 = keygen(&mk, &pk, &attrs(&["a"]), &mut rng).unwrap();
        let u2 = keygen(&mk, &pk, &attrs(&["b"]), &mut rng).unwrap();
        let mut parts = BTreeMap::new();
        parts.insert("a".to_string(), *u1.component("a").unwrap());
        parts.insert("b".to_string(), *u2.component("b").unwrap());
        let chimera = PrivateKey::from_components(*u1.d(), parts).unwrap();
        assert_ne!(decrypt(&pk, &ct, &chimera).unwrap(), m);
    }

    #[test]
    fn malformed_ciphertext() {
        let (pk, mk, mut rng) = fixture(9);
        let tree = parse_policy("a and b").unwrap();
        let m = random_gt(&pk.ctx, &mut rng).unwrap();
        let mut ct = encrypt(&pk, &tree, &m, &mut rng).unwrap();
        ct.leaves.pop();
        let sk = keygen(&mk, &pk, &attrs(&["a", "b"]), &mut rng).unwrap();
        assert!(matches!(decrypt(&pk, &ct, &sk), Err(Error::MalformedCiphertext(_))));
    }
}
