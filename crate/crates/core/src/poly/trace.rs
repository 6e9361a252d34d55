use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use super::symbols::{SymbolId, SymbolKind, SymbolTable};
use crate::error::{Error, Result};
use crate::matrix::{Grading, OperatorMatrix};
use crate::scalar::Scalar;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub(crate) fn letters_grading(letters: &[SymbolId], symbols: &SymbolTable) -> Grading {
    letters
        .iter()
        .fold(Grading::Even, |g, &l| g.compose(symbols.grading(l)))
}

/// Sign of `Tr(P X) = ± Tr(X P)` where `P` is the first `k` letters.
pub(crate) fn rotation_sign(letters: &[SymbolId], k: usize, symbols: &SymbolTable) -> f64 {
    let head = letters_grading(&letters[..k], symbols);
    let tail = letters_grading(&letters[k..], symbols);
    head.koszul(tail)
}

/// One `c · Tr(l₁ l₂ … lₙ)` term.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceWord {
    pub coefficient: Complex64,
    pub letters: Vec<SymbolId>,
}

impl TraceWord {
    pub fn new(coefficient: Complex64, letters: Vec<SymbolId>) -> Self {
        TraceWord {
            coefficient,
            letters,
        }
    }

    /// Least cyclic rotation with its graded sign folded into the coefficient.
    /// `None` when the word vanishes identically: either a zero coefficient, or a
    /// periodic word whose equal rotations carry opposite signs (e.g. `Tr(f f)`
    /// for odd `f`).
    pub fn canonical(&self, symbols: &SymbolTable) -> Option<TraceWord> {
        if self.coefficient == ZERO {
            return None;
        }
        let n = self.letters.len();
        if n == 0 {
            return Some(self.clone());
        }
        let rotated = |k: usize| self.letters[k..].iter().chain(&self.letters[..k]);
        let mut best = 0;
        for k in 1..n {
            if rotated(k).cmp(rotated(best)) == core::cmp::Ordering::Less {
                best = k;
            }
        }
        let sign = rotation_sign(&self.letters, best, symbols);
        for k in 0..n {
            if k != best
                && rotated(k).eq(rotated(best))
                && rotation_sign(&self.letters, k, symbols) != sign
            {
                return None;
            }
        }
        Some(TraceWord {
            coefficient: self.coefficient * sign,
            letters: rotated(best).copied().collect(),
        })
    }

    pub fn degree(&self) -> usize {
        self.letters.len()
    }
}

/// Scalar-weighted sum of trace words over a shared symbol table.
#[derive(Clone, Debug)]
pub struct TracePolynomial {
    symbols: Arc<SymbolTable>,
    words: Vec<TraceWord>,
}

impl PartialEq for TracePolynomial {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words && *self.symbols == *other.symbols
    }
}

impl TracePolynomial {
    pub fn zero(symbols: Arc<SymbolTable>) -> Self {
        TracePolynomial {
            symbols,
            words: Vec::new(),
        }
    }

    /// Canonicalizing constructor.
    pub fn from_words(symbols: Arc<SymbolTable>, words: Vec<TraceWord>) -> Self {
        TracePolynomial::from_raw_words(symbols, words).canonicalize()
    }

    /// Keeps the words exactly as given (no rotation, no merging).
    pub fn from_raw_words(symbols: Arc<SymbolTable>, words: Vec<TraceWord>) -> Self {
        TracePolynomial { symbols, words }
    }

    pub fn parse(text: &str, symbols: Arc<SymbolTable>) -> Result<Self> {
        super::parse::parse(text, symbols)
    }

    pub fn canonicalize(&self) -> Self {
        let mut merged: BTreeMap<Vec<SymbolId>, Complex64> = BTreeMap::new();
        for w in &self.words {
            if let Some(c) = w.canonical(&self.symbols) {
                *merged.entry(c.letters).or_default() += c.coefficient;
            }
        }
        let words = merged
            .into_iter()
            .filter(|(_, c)| *c != ZERO)
            .map(|(letters, coefficient)| TraceWord {
                coefficient,
                letters,
            })
            .collect();
        TracePolynomial {
            symbols: self.symbols.clone(),
            words,
        }
    }

    pub fn words(&self) -> &[TraceWord] {
        &self.words
    }

    pub fn symbols(&self) -> &Arc<SymbolTable> {
        &self.symbols
    }

    pub fn is_zero(&self) -> bool {
        self.words.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.words.iter().map(TraceWord::degree).max().unwrap_or(0)
    }

    pub fn contains(&self, symbol: SymbolId) -> bool {
        self.words.iter().any(|w| w.letters.contains(&symbol))
    }

    fn check_table(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.symbols, &other.symbols) || *self.symbols == *other.symbols {
            Ok(())
        } else {
            Err(Error::Symbol("polynomials use different symbol tables".into()))
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_table(other)?;
        let mut words = self.words.clone();
        words.extend(other.words.iter().cloned());
        Ok(TracePolynomial::from_words(self.symbols.clone(), words))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let words = self
            .words
            .iter()
            .map(|w| TraceWord::new(w.coefficient * c, w.letters.clone()))
            .collect();
        TracePolynomial::from_words(self.symbols.clone(), words)
    }

    /// `α·self + β·other`.
    pub fn linear_combination(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Result<Self> {
        self.scale(alpha).checked_add(&other.scale(beta))
    }

    /// Numeric trace value for the given matrix binding.
    pub fn evaluate<S: Scalar>(&self, binding: &Binding<'_, S>) -> Result<S> {
        let mut acc = S::zero(binding.generators);
        for w in &self.words {
            let value = binding.trace_word(&w.letters, &self.symbols)?;
            acc = acc.plus(&value.scale(w.coefficient));
        }
        Ok(acc)
    }

    /// Subset of words whose letters satisfy `keep`.
    pub fn filter_words<F: Fn(&TraceWord) -> bool>(&self, keep: F) -> Self {
        TracePolynomial {
            symbols: self.symbols.clone(),
            words: self.words.iter().filter(|w| keep(w)).cloned().collect(),
        }
    }
}

fn write_coefficient(f: &mut fmt::Formatter<'_>, c: Complex64) -> fmt::Result {
    if c.im == 0.0 {
        write!(f, "({})", c.re)
    } else if c.re == 0.0 {
        write!(f, "({}i)", c.im)
    } else if c.im < 0.0 {
        write!(f, "({}-{}i)", c.re, -c.im)
    } else {
        write!(f, "({}+{}i)", c.re, c.im)
    }
}

fn write_letters(f: &mut fmt::Formatter<'_>, letters: &[SymbolId], symbols: &SymbolTable) -> fmt::Result {
    for (k, &l) in letters.iter().enumerate() {
        if k > 0 {
            write!(f, "*")?;
        }
        write!(f, "{}", symbols.name(l))?;
    }
    Ok(())
}

/// Renders in the input grammar, so the output parses back to the same polynomial.
impl fmt::Display for TracePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.words.is_empty() {
            return write!(f, "0");
        }
        for (k, w) in self.words.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write_coefficient(f, w.coefficient)?;
            write!(f, "*Tr(")?;
            write_letters(f, &w.letters, &self.symbols)?;
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// One `c · l₁ l₂ … lₙ` matrix-valued term. An empty letter list is the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorTerm {
    pub coefficient: Complex64,
    pub letters: Vec<SymbolId>,
}

/// Untraced, matrix-valued polynomial such as a cyclic gradient.
#[derive(Clone, Debug)]
pub struct OperatorPolynomial {
    symbols: Arc<SymbolTable>,
    grading: Grading,
    terms: Vec<OperatorTerm>,
}

impl PartialEq for OperatorPolynomial {
    fn eq(&self, other: &Self) -> bool {
        self.grading == other.grading && self.terms == other.terms && *self.symbols == *other.symbols
    }
}

impl OperatorPolynomial {
    pub fn zero(symbols: Arc<SymbolTable>, grading: Grading) -> Self {
        OperatorPolynomial {
            symbols,
            grading,
            terms: Vec::new(),
        }
    }

    pub fn letter(symbols: Arc<SymbolTable>, id: SymbolId) -> Self {
        let grading = symbols.grading(id);
        OperatorPolynomial {
            symbols,
            grading,
            terms: alloc::vec![OperatorTerm {
                coefficient: Complex64::new(1.0, 0.0),
                letters: alloc::vec![id],
            }],
        }
    }

    pub fn from_terms(symbols: Arc<SymbolTable>, grading: Grading, terms: Vec<OperatorTerm>) -> Self {
        OperatorPolynomial {
            symbols,
            grading,
            terms,
        }
        .simplified()
    }

    /// Merges identical letter sequences (no cyclic moves: this is not under a trace).
    pub fn simplified(&self) -> Self {
        let mut merged: BTreeMap<Vec<SymbolId>, Complex64> = BTreeMap::new();
        for t in &self.terms {
            *merged.entry(t.letters.clone()).or_default() += t.coefficient;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != ZERO)
            .map(|(letters, coefficient)| OperatorTerm {
                coefficient,
                letters,
            })
            .collect();
        OperatorPolynomial {
            symbols: self.symbols.clone(),
            grading: self.grading,
            terms,
        }
    }

    pub fn terms(&self) -> &[OperatorTerm] {
        &self.terms
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn symbols(&self) -> &Arc<SymbolTable> {
        &self.symbols
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.terms.iter().map(|t| t.letters.len()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        OperatorPolynomial::from_terms(self.symbols.clone(), self.grading, terms)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| OperatorTerm {
                coefficient: t.coefficient * c,
                letters: t.letters.clone(),
            })
            .collect();
        OperatorPolynomial::from_terms(self.symbols.clone(), self.grading, terms)
    }

    /// Operator product (letter concatenation).
    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut letters = a.letters.clone();
                letters.extend_from_slice(&b.letters);
                terms.push(OperatorTerm {
                    coefficient: a.coefficient * b.coefficient,
                    letters,
                });
            }
        }
        OperatorPolynomial::from_terms(
            self.symbols.clone(),
            self.grading.compose(other.grading),
            terms,
        )
    }

    pub fn trace(&self) -> TracePolynomial {
        TracePolynomial::from_words(
            self.symbols.clone(),
            self.terms
                .iter()
                .map(|t| TraceWord::new(t.coefficient, t.letters.clone()))
                .collect(),
        )
    }

    /// Sum over every occurrence of `from`, replacing that single occurrence by `to`.
    /// Along a flow with `d(from)/dt = to` this is the time derivative.
    pub fn substitute_each(&self, from: SymbolId, to: SymbolId) -> Self {
        let mut terms = Vec::new();
        for t in &self.terms {
            for (k, &l) in t.letters.iter().enumerate() {
                if l == from {
                    let mut letters = t.letters.clone();
                    letters[k] = to;
                    terms.push(OperatorTerm {
                        coefficient: t.coefficient,
                        letters,
                    });
                }
            }
        }
        OperatorPolynomial::from_terms(self.symbols.clone(), self.grading, terms)
    }

    pub fn evaluate<S: Scalar>(&self, binding: &Binding<'_, S>) -> Result<OperatorMatrix<S>> {
        let dim = binding.dim.ok_or_else(|| Error::Config("empty binding".into()))?;
        let g = binding.generators;
        let mut acc = OperatorMatrix::zeros(dim, g, self.grading);
        for t in &self.terms {
            if letters_grading(&t.letters, &self.symbols) != self.grading {
                return Err(Error::Grading(format!(
                    "term of operator polynomial has the wrong grading (expected {:?})",
                    self.grading
                )));
            }
            let mut prod = match t.letters.split_first() {
                None => OperatorMatrix::identity(dim, g),
                Some((&first, rest)) => {
                    let mut m = binding.matrix(first, &self.symbols)?.clone();
                    for &l in rest {
                        m = m.mul_unchecked(binding.matrix(l, &self.symbols)?);
                    }
                    m
                }
            };
            prod = prod.scale(t.coefficient);
            acc = acc.plus(&prod);
        }
        Ok(acc)
    }
}

impl fmt::Display for OperatorPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write_coefficient(f, t.coefficient)?;
            if t.letters.is_empty() {
                write!(f, "*1")?;
            } else {
                write!(f, "*")?;
                write_letters(f, &t.letters, &self.symbols)?;
            }
        }
        Ok(())
    }
}

/// Cyclic gradient `δ𝐋/δs`: each occurrence of `s` is rotated to the end of its word
/// (with the graded rotation sign) and removed, so that `δ𝐋 = Tr(δ𝐋/δs · δs)`.
pub fn cyclic_derivative(poly: &TracePolynomial, symbol: SymbolId) -> OperatorPolynomial {
    let symbols = poly.symbols();
    let mut terms = Vec::new();
    for w in poly.words() {
        let n = w.letters.len();
        for k in 0..n {
            if w.letters[k] != symbol {
                continue;
            }
            let sign = rotation_sign(&w.letters, k + 1, symbols);
            let mut letters = Vec::with_capacity(n - 1);
            letters.extend_from_slice(&w.letters[k + 1..]);
            letters.extend_from_slice(&w.letters[..k]);
            terms.push(OperatorTerm {
                coefficient: w.coefficient * sign,
                letters,
            });
        }
    }
    OperatorPolynomial::from_terms(symbols.clone(), symbols.grading(symbol), terms)
}

/// Matrices assigned to symbols for evaluation. Holds references, so building one
/// per integrator stage is cheap.
#[derive(Clone, Debug)]
pub struct Binding<'a, S: Scalar> {
    slots: Vec<Option<&'a OperatorMatrix<S>>>,
    gradings: Vec<Grading>,
    dim: Option<usize>,
    generators: u8,
}

impl<'a, S: Scalar> Binding<'a, S> {
    pub fn new(symbols: &SymbolTable) -> Self {
        Binding {
            slots: alloc::vec![None; symbols.len()],
            gradings: symbols.iter().map(|(_, s)| s.grading).collect(),
            dim: None,
            generators: 0,
        }
    }

    pub fn bind(&mut self, id: SymbolId, matrix: &'a OperatorMatrix<S>) -> Result<&mut Self> {
        if id >= self.slots.len() {
            return Err(Error::Symbol(format!("symbol id {id} out of range")));
        }
        if matrix.grading() != self.gradings[id] {
            return Err(Error::Grading(format!(
                "symbol {id} declared {:?} but bound to a {:?} matrix",
                self.gradings[id],
                matrix.grading()
            )));
        }
        match self.dim {
            None => {
                self.dim = Some(matrix.dim());
                self.generators = matrix.generators();
            }
            Some(d) if d != matrix.dim() => {
                return Err(Error::Shape {
                    left: d,
                    right: matrix.dim(),
                })
            }
            Some(_) if self.generators != matrix.generators() => {
                return Err(Error::GeneratorMismatch {
                    left: self.generators,
                    right: matrix.generators(),
                })
            }
            Some(_) => {}
        }
        self.slots[id] = Some(matrix);
        Ok(self)
    }

    pub fn bind_name(
        &mut self,
        symbols: &SymbolTable,
        name: &str,
        matrix: &'a OperatorMatrix<S>,
    ) -> Result<&mut Self> {
        let id = symbols
            .lookup(name)
            .ok_or_else(|| Error::Symbol(format!("unknown symbol `{name}`")))?;
        self.bind(id, matrix)
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn get(&self, id: SymbolId) -> Option<&'a OperatorMatrix<S>> {
        self.slots.get(id).copied().flatten()
    }

    fn matrix(&self, id: SymbolId, symbols: &SymbolTable) -> Result<&'a OperatorMatrix<S>> {
        self.get(id)
            .ok_or_else(|| Error::UnboundSymbol(symbols.name(id).into()))
    }

    fn trace_word(&self, letters: &[SymbolId], symbols: &SymbolTable) -> Result<S> {
        let dim = self.dim.ok_or_else(|| match letters.first() {
            Some(&l) => Error::UnboundSymbol(symbols.name(l).into()),
            None => Error::Config("empty binding".into()),
        })?;
        match letters.len() {
            0 => Ok(S::from_complex(Complex64::new(dim as f64, 0.0), self.generators)),
            1 => Ok(self.matrix(letters[0], symbols)?.trace()),
            n => {
                let mut prod = self.matrix(letters[0], symbols)?.clone();
                for &l in &letters[1..n - 1] {
                    prod = prod.mul_unchecked(self.matrix(l, symbols)?);
                }
                Ok(prod.trace_of_product(self.matrix(letters[n - 1], symbols)?))
            }
        }
    }
}

/// True when no word mixes coordinates with momenta, i.e. `𝐇 = T(p) + V(q)`.
pub fn is_separable(poly: &TracePolynomial) -> bool {
    let symbols = poly.symbols();
    poly.words().iter().all(|w| {
        let has_q = w
            .letters
            .iter()
            .any(|&l| symbols.get(l).kind == SymbolKind::Coordinate);
        let has_p = w
            .letters
            .iter()
            .any(|&l| symbols.get(l).kind == SymbolKind::Momentum);
        !(has_q && has_p)
    })
}
