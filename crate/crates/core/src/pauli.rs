//! n-qubit Pauli strings and their real/complex linear combinations.
//!
//! Strings are kept symbolic so that products and brackets are exact: the
//! phase of a product is a power of `i`, and every nonzero bracket is
//! `±2i` times a single string. The leftmost letter of a word acts on the
//! most significant bit of the computational-basis index.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{DenseOperator, C64, HERMITIAN_TOL, ZERO};

/// Coefficients with |c| at or below this are dropped.
pub const PRUNE_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// a·b = i^k · c, returned as (k mod 4, c).
    fn mul(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (a, b) if a == b => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
            _ => unreachable!(),
        }
    }

    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }
}

fn i_power(k: u8) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Tensor product of single-qubit Paulis, e.g. `XIZ`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    word: Vec<Pauli>,
}

impl PauliString {
    pub fn new(word: Vec<Pauli>) -> Self {
        assert!(!word.is_empty(), "Pauli string needs at least one qubit");
        Self { word }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(vec![Pauli::I; n])
    }

    /// String with `p` on qubit `q` and identity elsewhere.
    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        let mut word = vec![Pauli::I; n];
        word[q] = p;
        Self::new(word)
    }

    pub fn n_qubits(&self) -> usize {
        self.word.len()
    }

    pub fn word(&self) -> &[Pauli] {
        &self.word
    }

    pub fn is_identity(&self) -> bool {
        self.word.iter().all(|&p| p == Pauli::I)
    }

    /// Diagonal in the computational basis (only I and Z letters).
    pub fn is_diagonal(&self) -> bool {
        self.word.iter().all(|&p| matches!(p, Pauli::I | Pauli::Z))
    }

    fn flip_mask(&self) -> usize {
        let n = self.n_qubits();
        self.word
            .iter()
            .enumerate()
            .filter(|(_, p)| p.flips())
            .fold(0, |m, (q, _)| m | 1 << (n - 1 - q))
    }

    /// Phase picked up by basis state |k⟩: P|k⟩ = phase · |k ⊕ mask⟩.
    fn column_phase(&self, k: usize) -> C64 {
        let n = self.n_qubits();
        let mut power = 0u8;
        for (q, p) in self.word.iter().enumerate() {
            let bit = (k >> (n - 1 - q)) & 1;
            power += match (p, bit) {
                (Pauli::Y, 0) => 1,
                (Pauli::Y, _) => 3,
                (Pauli::Z, 1) => 2,
                _ => 0,
            };
        }
        i_power(power)
    }

    pub fn to_dense(&self) -> DenseOperator {
        let dim = 1usize << self.n_qubits();
        let mask = self.flip_mask();
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for k in 0..dim {
            m[(k ^ mask, k)] = self.column_phase(k);
        }
        DenseOperator::new(m)
    }

    /// Tr(P·A) without forming P densely.
    fn trace_against(&self, a: &DenseOperator) -> C64 {
        let dim = a.dim();
        let mask = self.flip_mask();
        (0..dim)
            .map(|k| self.column_phase(k) * a.get(k, k ^ mask))
            .sum()
    }

    fn check_size(&self, other: &PauliString) -> Result<()> {
        if self.n_qubits() != other.n_qubits() {
            return Err(Error::QubitMismatch {
                left: self.n_qubits(),
                right: other.n_qubits(),
            });
        }
        Ok(())
    }

    pub fn commutes_with(&self, other: &PauliString) -> Result<bool> {
        self.check_size(other)?;
        let anti = self
            .word
            .iter()
            .zip(&other.word)
            .filter(|(a, b)| **a != Pauli::I && **b != Pauli::I && a != b)
            .count();
        Ok(anti % 2 == 0)
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let word: Option<Vec<Pauli>> = s.trim().chars().map(Pauli::from_char).collect();
        match word {
            Some(w) if !w.is_empty() => Ok(Self::new(w)),
            _ => Err(Error::InvalidPauliWord(s.to_string())),
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.word {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

/// P·Q = phase · R with phase ∈ {±1, ±i}.
pub fn pauli_product(p: &PauliString, q: &PauliString) -> Result<(C64, PauliString)> {
    p.check_size(q)?;
    let mut power = 0u8;
    let word = p
        .word
        .iter()
        .zip(&q.word)
        .map(|(a, b)| {
            let (k, c) = a.mul(*b);
            power += k;
            c
        })
        .collect();
    Ok((i_power(power), PauliString::new(word)))
}

/// [P, Q] as a Pauli sum; empty when the strings commute.
pub fn lie_bracket(p: &PauliString, q: &PauliString) -> Result<PauliSum> {
    let mut out = PauliSum::zero(p.n_qubits());
    if let Some((coeff, r)) = bracket_term(p, q)? {
        out.add_term(r, coeff);
    }
    Ok(out)
}

/// Single-term form of the bracket: `Some((±2i, R))` or `None` if commuting.
pub fn bracket_term(p: &PauliString, q: &PauliString) -> Result<Option<(C64, PauliString)>> {
    if p.commutes_with(q)? {
        return Ok(None);
    }
    let (phase, r) = pauli_product(p, q)?;
    Ok(Some((phase * 2.0, r)))
}

/// Linear combination of n-qubit Pauli strings in canonical form.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: BTreeMap<PauliString, C64>,
}

impl PauliSum {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, C64)>,
    {
        let mut sum = Self::zero(n);
        for (p, c) in terms {
            if p.n_qubits() != n {
                return Err(Error::QubitMismatch {
                    left: n,
                    right: p.n_qubits(),
                });
            }
            sum.add_term(p, c);
        }
        Ok(sum)
    }

    /// Parses whitespace-separated `coefficient WORD` pairs, e.g. `+0.5 IZ -0.5 ZZ`.
    pub fn parse_real(n: usize, text: &str) -> Result<Self> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() % 2 != 0 {
            return Err(Error::InvalidPauliWord(text.to_string()));
        }
        let mut terms = Vec::new();
        for pair in tokens.chunks(2) {
            let c: f64 = pair[0]
                .parse()
                .map_err(|_| Error::InvalidPauliWord(pair[0].to_string()))?;
            terms.push((pair[1].parse::<PauliString>()?, C64::new(c, 0.0)));
        }
        Self::from_terms(n, terms)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of terms other than the identity string.
    pub fn non_identity_len(&self) -> usize {
        self.terms.keys().filter(|p| !p.is_identity()).count()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &C64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, p: &PauliString) -> C64 {
        self.terms.get(p).copied().unwrap_or(ZERO)
    }

    pub fn add_term(&mut self, p: PauliString, c: C64) {
        let entry = self.terms.entry(p).or_insert(ZERO);
        *entry += c;
        self.prune();
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() > PRUNE_TOL);
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut out = Self {
            n: self.n,
            terms: self.terms.iter().map(|(p, c)| (p.clone(), c * factor)).collect(),
        };
        out.prune();
        out
    }

    pub fn add(&self, other: &PauliSum) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::QubitMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let mut out = self.clone();
        for (p, c) in &other.terms {
            *out.terms.entry(p.clone()).or_insert(ZERO) += c;
        }
        out.prune();
        Ok(out)
    }

    /// Largest |Im c| over all coefficients.
    pub fn max_imag(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    /// Drops the identity-string component.
    pub fn without_identity(&self) -> Self {
        let mut out = self.clone();
        out.terms.retain(|p, _| !p.is_identity());
        out
    }

    pub fn strings(&self) -> impl Iterator<Item = &PauliString> {
        self.terms.keys()
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (p, c) in &self.terms {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if c.im.abs() <= PRUNE_TOL {
                write!(f, "{:+} {}", c.re, p)?;
            } else {
                write!(f, "({:+}{:+}i) {}", c.re, c.im, p)?;
            }
        }
        Ok(())
    }
}

/// Σ c_P · P as a dense matrix; tagged Hermitian iff every c_P is real.
pub fn to_dense(sum: &PauliSum) -> DenseOperator {
    let dim = 1usize << sum.n;
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    for (p, c) in &sum.terms {
        let mask = p.flip_mask();
        for k in 0..dim {
            m[(k ^ mask, k)] += c * p.column_phase(k);
        }
    }
    let op = DenseOperator::new(m);
    if sum.is_real(HERMITIAN_TOL) {
        op.tag_hermitian().expect("real Pauli sum is Hermitian")
    } else {
        op
    }
}

/// Number of qubits n with 2ⁿ = dim.
pub fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Coefficients c_P = Tr(P·A)/2ⁿ over all 4ⁿ strings.
pub fn decompose(a: &DenseOperator, n: usize) -> Result<PauliSum> {
    let expected = qubits_for_dim(a.dim())?;
    if expected != n {
        return Err(Error::QubitMismatch {
            left: n,
            right: expected,
        });
    }
    let norm = 1.0 / a.dim() as f64;
    let mut sum = PauliSum::zero(n);
    for p in all_strings(n) {
        let c = p.trace_against(a) * norm;
        if c.norm() > PRUNE_TOL {
            sum.terms.insert(p, c);
        }
    }
    Ok(sum)
}

/// Coefficients on a chosen set of strings only.
pub fn project_onto(a: &DenseOperator, basis: &[PauliString]) -> Vec<C64> {
    let norm = 1.0 / a.dim() as f64;
    basis.iter().map(|p| p.trace_against(a) * norm).collect()
}

/// All 4ⁿ strings in lexicographic order (I < X < Y < Z).
pub fn all_strings(n: usize) -> impl Iterator<Item = PauliString> {
    const LETTERS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    (0..(1usize << (2 * n))).map(move |code| {
        let word = (0..n)
            .map(|q| LETTERS[(code >> (2 * (n - 1 - q))) & 3])
            .collect();
        PauliString::new(word)
    })
}

/// Ordered set of strings closed under the Lie bracket.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliBasis {
    n: usize,
    strings: Vec<PauliString>,
}

/// Nonzero structure constant: [O_i, O_j] = coefficient · O_k.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureConstant {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub coefficient: C64,
}

impl PauliBasis {
    /// Saturates `generators` (identity dropped) under the bracket.
    pub fn closure<'a, I>(n: usize, generators: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a PauliString>,
    {
        let mut set: BTreeSet<PauliString> = BTreeSet::new();
        let mut queue: VecDeque<PauliString> = VecDeque::new();
        for g in generators {
            if g.n_qubits() != n {
                return Err(Error::QubitMismatch {
                    left: n,
                    right: g.n_qubits(),
                });
            }
            if !g.is_identity() && set.insert(g.clone()) {
                queue.push_back(g.clone());
            }
        }
        while let Some(p) = queue.pop_front() {
            let current: Vec<PauliString> = set.iter().cloned().collect();
            for q in current {
                if let Some((_, r)) = bracket_term(&p, &q)? {
                    if set.insert(r.clone()) {
                        queue.push_back(r);
                    }
                }
            }
        }
        Ok(Self {
            n,
            strings: set.into_iter().collect(),
        })
    }

    /// Uses `strings` as given after verifying closure.
    pub fn new(n: usize, strings: Vec<PauliString>) -> Result<Self> {
        let index: BTreeSet<&PauliString> = strings.iter().collect();
        for p in &strings {
            if p.n_qubits() != n {
                return Err(Error::QubitMismatch {
                    left: n,
                    right: p.n_qubits(),
                });
            }
            for q in &strings {
                if let Some((_, r)) = bracket_term(p, q)? {
                    if !index.contains(&r) {
                        return Err(Error::BasisNotClosed {
                            left: p.to_string(),
                            right: q.to_string(),
                            missing: r.to_string(),
                        });
                    }
                }
            }
        }
        Ok(Self { n, strings })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn strings(&self) -> &[PauliString] {
        &self.strings
    }

    pub fn position(&self, p: &PauliString) -> Option<usize> {
        self.strings.binary_search(p).ok().or_else(|| self.strings.iter().position(|q| q == p))
    }

    /// All nonzero C^k_{ij}.
    pub fn structure_constants(&self) -> Vec<StructureConstant> {
        let mut out = Vec::new();
        for (i, p) in self.strings.iter().enumerate() {
            for (j, q) in self.strings.iter().enumerate() {
                if let Some((coefficient, r)) = bracket_term(p, q).expect("same size") {
                    let k = self.position(&r).expect("basis is closed");
                    out.push(StructureConstant { i, j, k, coefficient });
                }
            }
        }
        out
    }
}
