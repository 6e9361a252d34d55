//! Trace polynomials in noncommuting graded symbols: parsing, graded-cyclic
//! canonicalization, evaluation against matrix bindings and cyclic derivatives.

mod invariance;
mod parse;
mod symbols;
mod trace;

pub use invariance::{check_unitary_invariance, InvarianceReport};
pub use parse::{parse, parse_raw, ParseError, ParseErrorKind};
pub use symbols::{Symbol, SymbolId, SymbolKind, SymbolTable};
pub use trace::{
    cyclic_derivative, is_separable, Binding, OperatorPolynomial, OperatorTerm, TracePolynomial,
    TraceWord,
};
