// SPDX-License-Identifier: Apache-2.0

//! Access trees: textual policies, satisfaction, secret sharing over the tree
//! and the Lagrange machinery used to recombine shares.
//!
//! Grammar (keywords case-insensitive, attributes case-sensitive):
//!
//! ```text
//! policy  := or_expr
//! or_expr := and_expr ('or' and_expr)*
//! and_expr:= atom ('and' atom)*
//! atom    := ATTR | INT 'of' '(' policy (',' policy)+ ')' | '(' policy ')'
//! ATTR    := [A-Za-z_][A-Za-z0-9_]*
//! ```
//!
//! `a and b and c` is a single 3-of-3 gate; `(a and b) and c` nests. Children
//! are indexed 1..=n in the order they appear, and that index is the
//! x-coordinate used when sharing and interpolating.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use ark_ff::{Field, One, Zero};
use rand::{CryptoRng, RngCore};

use crate::error::{Error, Result};
use crate::pairing::{random_scalar, Scalar};

const KEYWORDS: [&str; 3] = ["and", "or", "of"];

/// Checks an attribute token against the grammar. Keywords are not attributes.
pub fn validate_attribute(token: &str) -> Result<()> {
    let mut chars = token.chars();
    let head_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_');
    let tail_ok = chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    let keyword = KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(token));
    if head_ok && tail_ok && !keyword {
        Ok(())
    } else {
        Err(Error::InvalidAttributeToken(token.to_string()))
    }
}

/// A set of validated attribute tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AttributeSet(BTreeSet<String>);

impl AttributeSet {
    pub fn new<I, S>(attrs: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = BTreeSet::new();
        for a in attrs {
            let a = a.into();
            validate_attribute(&a)?;
            set.insert(a);
        }
        Ok(AttributeSet(set))
    }

    /// Parses a comma-separated list such as `doctor, cardiology`.
    pub fn parse_list(text: &str) -> Result<Self> {
        Self::new(text.split(',').map(str::trim).filter(|s| !s.is_empty()))
    }

    pub fn contains(&self, attr: &str) -> bool {
        self.0.contains(attr)
    }

    pub fn is_subset(&self, other: &AttributeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl fmt::Display for AttributeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.iter().collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Leaf { attribute: String },
    Gate { threshold: usize, children: Vec<NodeId> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessNode {
    pub kind: NodeKind,
    /// Position under the parent, 1-based. The root carries 0.
    pub index: u32,
}

impl AccessNode {
    /// `k_x`; leaves have threshold 1.
    pub fn threshold(&self) -> usize {
        match &self.kind {
            NodeKind::Leaf { .. } => 1,
            NodeKind::Gate { threshold, .. } => *threshold,
        }
    }

    pub fn children(&self) -> &[NodeId] {
        match &self.kind {
            NodeKind::Leaf { .. } => &[],
            NodeKind::Gate { children, .. } => children,
        }
    }

    pub fn attribute(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::Leaf { attribute } => Some(attribute),
            NodeKind::Gate { .. } => None,
        }
    }
}

/// Threshold-gate policy tree. Only constructible by parsing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessTree {
    nodes: Vec<AccessNode>,
    root: NodeId,
    leaves: Vec<NodeId>,
}

impl AccessTree {
    pub fn parse(text: &str) -> Result<Self> {
        parse_policy(text)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &AccessNode {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Leaves in left-to-right order. Ciphertext leaf components follow this order.
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn leaf_attribute(&self, leaf: NodeId) -> Option<&str> {
        self.node(leaf).attribute()
    }

    /// Distinct attributes mentioned anywhere in the tree.
    pub fn attributes(&self) -> BTreeSet<&str> {
        self.leaves
            .iter()
            .filter_map(|&l| self.leaf_attribute(l))
            .collect()
    }

    pub fn satisfies(&self, attrs: &AttributeSet) -> bool {
        satisfies(self, attrs)
    }

    fn satisfied_at(&self, id: NodeId, attrs: &AttributeSet) -> bool {
        let node = self.node(id);
        match &node.kind {
            NodeKind::Leaf { attribute } => attrs.contains(attribute),
            NodeKind::Gate { threshold, children } => {
                children
                    .iter()
                    .filter(|&&c| self.satisfied_at(c, attrs))
                    .count()
                    >= *threshold
            }
        }
    }

    fn write_node(&self, id: NodeId, f: &mut fmt::Formatter<'_>, nested: bool) -> fmt::Result {
        match &self.node(id).kind {
            NodeKind::Leaf { attribute } => f.write_str(attribute),
            NodeKind::Gate { threshold, children } => {
                let n = children.len();
                let (open, sep, close) = if *threshold == n {
                    ("", " and ", "")
                } else if *threshold == 1 {
                    ("", " or ", "")
                } else {
                    write!(f, "{threshold} of ")?;
                    ("(", ", ", ")")
                };
                let wrap = nested && open.is_empty();
                if wrap {
                    f.write_str("(")?;
                }
                f.write_str(open)?;
                for (i, &c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    self.write_node(c, f, true)?;
                }
                f.write_str(close)?;
                if wrap {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

/// Canonical policy text; re-parsing it yields a structurally identical tree.
impl fmt::Display for AccessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_node(self.root, f, false)
    }
}

/// `T_x(gamma)`: a leaf holds iff its attribute is in the set; a gate holds iff
/// at least `k_x` of its children hold.
pub fn satisfies(tree: &AccessTree, attrs: &AttributeSet) -> bool {
    tree.satisfied_at(tree.root, attrs)
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    LParen,
    RParen,
    Comma,
    And,
    Or,
    Of,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            b',' => {
                out.push((i, Tok::Comma));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n = text[start..i].parse::<u64>().map_err(|_| Error::SyntaxError {
                    position: start,
                    message: "integer too large".into(),
                })?;
                out.push((start, Tok::Int(n)));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                let tok = match word.to_ascii_lowercase().as_str() {
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    "of" => Tok::Of,
                    _ => Tok::Ident(word.to_string()),
                };
                out.push((start, tok));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(Error::SyntaxError {
                    position: i,
                    message: format!("unexpected character {ch:?}"),
                });
            }
        }
    }
    Ok(out)
}

/// Intermediate syntax tree; flattened into the arena once parsing succeeds.
enum Expr {
    Attr(String),
    Gate(usize, Vec<Expr>),
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::SyntaxError {
            position: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn policy(&mut self) -> Result<Expr> {
        let mut terms = vec![self.and_expr()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            terms.push(self.and_expr()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().expect("one term")
        } else {
            Expr::Gate(1, terms)
        })
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.atom()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            terms.push(self.atom()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().expect("one term")
        } else {
            let n = terms.len();
            Expr::Gate(n, terms)
        })
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(Expr::Attr(name))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.policy()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Some(Tok::Int(k)) => {
                let k_pos = self.offset();
                self.pos += 1;
                self.expect(Tok::Of, "'of' after threshold")?;
                self.expect(Tok::LParen, "'(' after 'of'")?;
                let mut children = vec![self.policy()?];
                while self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    children.push(self.policy()?);
                }
                self.expect(Tok::RParen, "',' or ')'")?;
                if children.len() < 2 {
                    return Err(Error::SyntaxError {
                        position: k_pos,
                        message: "threshold gate needs at least two children".into(),
                    });
                }
                if k < 1 || k > children.len() as u64 {
                    return Err(Error::ThresholdOutOfRange {
                        threshold: k,
                        children: children.len(),
                    });
                }
                Ok(Expr::Gate(k as usize, children))
            }
            Some(_) => self.err("expected attribute, threshold or '('"),
            None => self.err("unexpected end of policy"),
        }
    }
}

pub fn parse_policy(text: &str) -> Result<AccessTree> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(Error::SyntaxError {
            position: 0,
            message: "empty policy".into(),
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let expr = p.policy()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }

    let mut tree = AccessTree {
        nodes: Vec::new(),
        root: NodeId(0),
        leaves: Vec::new(),
    };
    tree.root = push_expr(&mut tree, expr, 0);
    Ok(tree)
}

fn push_expr(tree: &mut AccessTree, expr: Expr, index: u32) -> NodeId {
    let id = NodeId(tree.nodes.len());
    match expr {
        Expr::Attr(attribute) => {
            tree.nodes.push(AccessNode {
                kind: NodeKind::Leaf { attribute },
                index,
            });
            tree.leaves.push(id);
        }
        Expr::Gate(threshold, children) => {
            tree.nodes.push(AccessNode {
                kind: NodeKind::Gate {
                    threshold,
                    children: Vec::new(),
                },
                index,
            });
            let ids: Vec<NodeId> = children
                .into_iter()
                .enumerate()
                .map(|(i, c)| push_expr(tree, c, i as u32 + 1))
                .collect();
            tree.nodes[id.0].kind = NodeKind::Gate {
                threshold,
                children: ids,
            };
        }
    }
    id
}

// ---------------------------------------------------------------------------
// Sharing and interpolation

/// `q_y(0)` for every leaf `y` of the tree it was produced from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafShareMap {
    shares: BTreeMap<NodeId, Scalar>,
}

impl LeafShareMap {
    pub fn get(&self, leaf: NodeId) -> Option<&Scalar> {
        self.shares.get(&leaf)
    }

    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &Scalar)> {
        self.shares.iter().map(|(k, v)| (*k, v))
    }
}

/// Splits `secret` down the tree: each node gets a random polynomial of degree
/// `k_x - 1` whose constant term is its parent's polynomial evaluated at the
/// node's index (the root's constant term is the secret).
pub fn share_secret<R: RngCore + CryptoRng + ?Sized>(
    tree: &AccessTree,
    secret: Scalar,
    rng: &mut R,
) -> Result<LeafShareMap> {
    let mut shares = BTreeMap::new();
    let mut stack = vec![(tree.root, secret)];
    while let Some((id, value)) = stack.pop() {
        let node = tree.node(id);
        match &node.kind {
            NodeKind::Leaf { .. } => {
                shares.insert(id, value);
            }
            NodeKind::Gate { threshold, children } => {
                let mut coeffs = Vec::with_capacity(*threshold);
                coeffs.push(value);
                for _ in 1..*threshold {
                    coeffs.push(random_scalar(rng)?);
                }
                for &c in children {
                    let x = Scalar::from(u64::from(tree.node(c).index));
                    stack.push((c, eval_poly(&coeffs, x)));
                }
            }
        }
    }
    Ok(LeafShareMap { shares })
}

fn eval_poly(coeffs: &[Scalar], x: Scalar) -> Scalar {
    coeffs.iter().rev().fold(Scalar::zero(), |acc, c| acc * x + c)
}

/// Lagrange basis `Delta_{i,S}(0) = prod_{j in S, j != i} (0 - j) / (i - j)`.
pub fn lagrange_coeff(i: Scalar, points: &[Scalar]) -> Result<Scalar> {
    let distinct: BTreeSet<_> = points.iter().collect();
    if distinct.len() != points.len() || points.iter().any(Zero::is_zero) {
        return Err(Error::DegenerateSet);
    }
    if !distinct.contains(&i) {
        return Err(Error::PointNotInSet);
    }
    let mut num = Scalar::one();
    let mut den = Scalar::one();
    for &j in points.iter().filter(|&&j| j != i) {
        num *= -j;
        den *= i - j;
    }
    Ok(num * den.inverse().expect("points are distinct"))
}

/// For every gate on the chosen frontier, exactly `k_x` satisfied children.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Selection {
    chosen: BTreeMap<NodeId, Vec<NodeId>>,
    leaves: Vec<NodeId>,
}

impl Selection {
    pub fn children_of(&self, gate: NodeId) -> Option<&[NodeId]> {
        self.chosen.get(&gate).map(Vec::as_slice)
    }

    /// Chosen leaves, left to right.
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn gates(&self) -> impl Iterator<Item = (NodeId, &[NodeId])> {
        self.chosen.iter().map(|(k, v)| (*k, v.as_slice()))
    }
}

/// Deterministic satisfying frontier: at each gate, the lowest-indexed
/// satisfied children are taken.
pub fn min_satisfying_selection(tree: &AccessTree, attrs: &AttributeSet) -> Result<Selection> {
    if !tree.satisfies(attrs) {
        return Err(Error::NotSatisfied);
    }
    let mut sel = Selection::default();
    select_into(tree, tree.root, attrs, &mut sel);
    Ok(sel)
}

fn select_into(tree: &AccessTree, id: NodeId, attrs: &AttributeSet, sel: &mut Selection) {
    match &tree.node(id).kind {
        NodeKind::Leaf { .. } => sel.leaves.push(id),
        NodeKind::Gate { threshold, children } => {
            let picked: Vec<NodeId> = children
                .iter()
                .copied()
                .filter(|&c| tree.satisfied_at(c, attrs))
                .take(*threshold)
                .collect();
            for &c in &picked {
                select_into(tree, c, attrs, sel);
            }
            sel.chosen.insert(id, picked);
        }
    }
}

/// Collapses the selection into one interpolation coefficient per chosen
/// leaf: the product of the Lagrange coefficients along its root path.
pub fn leaf_coefficients(tree: &AccessTree, sel: &Selection) -> Result<Vec<(NodeId, Scalar)>> {
    let mut out = Vec::with_capacity(sel.leaves.len());
    let mut stack = vec![(tree.root, Scalar::one())];
    while let Some((id, coeff)) = stack.pop() {
        match &tree.node(id).kind {
            NodeKind::Leaf { .. } => out.push((id, coeff)),
            NodeKind::Gate { .. } => {
                let picked = sel
                    .children_of(id)
                    .ok_or_else(|| Error::MalformedCiphertext("selection misses a gate".into()))?;
                let xs: Vec<Scalar> = picked
                    .iter()
                    .map(|&c| Scalar::from(u64::from(tree.node(c).index)))
                    .collect();
                for (&c, &x) in picked.iter().zip(&xs).rev() {
                    let delta = if xs.len() == 1 {
                        Scalar::one()
                    } else {
                        lagrange_coeff(x, &xs)?
                    };
                    stack.push((c, coeff * delta));
                }
            }
        }
    }
    Ok(out)
}
