// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use rand::Rng;

/// Policy expression generated independently of the library's tree type,
/// with its own satisfaction evaluator.
#[derive(Clone, Debug)]
pub enum GenExpr {
    Leaf(String),
    Gate(usize, Vec<GenExpr>),
}

impl GenExpr {
    /// Random expression with at most `depth` levels over `universe`.
    pub fn random(rng: &mut impl Rng, universe: &[&str], depth: usize) -> GenExpr {
        if depth <= 1 || rng.gen_bool(0.3) {
            return GenExpr::Leaf(universe[rng.gen_range(0..universe.len())].to_string());
        }
        let n = rng.gen_range(2..=3);
        let k = rng.gen_range(1..=n);
        GenExpr::Gate(k, (0..n).map(|_| GenExpr::random(rng, universe, depth - 1)).collect())
    }

    /// Same as `random` but never a bare leaf at the root.
    pub fn random_gate(rng: &mut impl Rng, universe: &[&str], depth: usize) -> GenExpr {
        loop {
            let e = GenExpr::random(rng, universe, depth);
            if matches!(e, GenExpr::Gate(..)) {
                return e;
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            GenExpr::Leaf(_) => 1,
            GenExpr::Gate(_, c) => 1 + c.iter().map(GenExpr::depth).max().unwrap_or(0),
        }
    }

    /// Brute-force satisfaction by counting.
    pub fn eval(&self, held: &[&str]) -> bool {
        match self {
            GenExpr::Leaf(a) => held.contains(&a.as_str()),
            GenExpr::Gate(k, c) => c.iter().filter(|e| e.eval(held)).count() >= *k,
        }
    }

    /// Fully parenthesized policy text.
    pub fn render(&self) -> String {
        match self {
            GenExpr::Leaf(a) => a.clone(),
            GenExpr::Gate(k, c) => {
                let parts: Vec<String> = c.iter().map(|e| format!("({})", e.render())).collect();
                if *k == c.len() {
                    parts.join(" and ")
                } else if *k == 1 {
                    parts.join(" or ")
                } else {
                    format!("{k} of ({})", parts.join(", "))
                }
            }
        }
    }
}

/// All subsets of `universe`, indexed by bitmask.
pub fn subsets<'a>(universe: &[&'a str]) -> Vec<Vec<&'a str>> {
    (0u32..1 << universe.len())
        .map(|m| {
            universe
                .iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .map(|(_, a)| *a)
                .collect()
        })
        .collect()
}
