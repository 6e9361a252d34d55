use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Grading;

pub type SymbolId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolKind {
    /// Generalized coordinate `q_r`.
    Coordinate,
    /// Canonical momentum `p_r`.
    Momentum,
    /// Velocity `q̇_r`, only meaningful in Lagrangians.
    Velocity,
    /// Fixed external matrix; never varied, never conjugated by the unitary check.
    Constant,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub kind: SymbolKind,
    /// Degree-of-freedom index `r`; ignored for constants.
    pub dof: usize,
    pub grading: Grading,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolTable {
    symbols: Vec<Symbol>,
    by_name: BTreeMap<String, SymbolId>,
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && name != "Tr" && name != "i"
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// `q1..qR`, `p1..pR`, all bosonic.
    pub fn bosonic(dofs: usize) -> Self {
        let mut t = Self::new();
        for r in 1..=dofs {
            t.declare(&format!("q{r}"), SymbolKind::Coordinate, r, Grading::Even)
                .expect("fresh names");
        }
        for r in 1..=dofs {
            t.declare(&format!("p{r}"), SymbolKind::Momentum, r, Grading::Even)
                .expect("fresh names");
        }
        t
    }

    /// `q1..qR`, `v1..vR` (velocities), all bosonic: the table of a trace Lagrangian.
    pub fn lagrangian(dofs: usize) -> Self {
        let mut t = Self::new();
        for r in 1..=dofs {
            t.declare(&format!("q{r}"), SymbolKind::Coordinate, r, Grading::Even)
                .expect("fresh names");
        }
        for r in 1..=dofs {
            t.declare(&format!("v{r}"), SymbolKind::Velocity, r, Grading::Even)
                .expect("fresh names");
        }
        t
    }

    pub fn declare(
        &mut self,
        name: &str,
        kind: SymbolKind,
        dof: usize,
        grading: Grading,
    ) -> Result<SymbolId> {
        if !valid_name(name) {
            return Err(Error::Symbol(format!("`{name}` is not a valid symbol name")));
        }
        if self.by_name.contains_key(name) {
            return Err(Error::Symbol(format!("symbol `{name}` declared twice")));
        }
        if kind != SymbolKind::Constant && self.find(kind, dof).is_some() {
            return Err(Error::Symbol(format!("{kind:?} for dof {dof} declared twice")));
        }
        let id = self.symbols.len();
        self.symbols.push(Symbol {
            name: name.to_string(),
            kind,
            dof,
            grading,
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    /// Declares a constant (external) matrix symbol.
    pub fn declare_constant(&mut self, name: &str) -> Result<SymbolId> {
        self.declare(name, SymbolKind::Constant, 0, Grading::Even)
    }

    pub fn lookup(&self, name: &str) -> Option<SymbolId> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, id: SymbolId) -> &Symbol {
        &self.symbols[id]
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.symbols[id].name
    }

    pub fn grading(&self, id: SymbolId) -> Grading {
        self.symbols[id].grading
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SymbolId, &Symbol)> {
        self.symbols.iter().enumerate()
    }

    pub fn find(&self, kind: SymbolKind, dof: usize) -> Option<SymbolId> {
        self.symbols
            .iter()
            .position(|s| s.kind == kind && s.dof == dof)
    }

    pub fn coordinate(&self, dof: usize) -> Option<SymbolId> {
        self.find(SymbolKind::Coordinate, dof)
    }

    pub fn momentum(&self, dof: usize) -> Option<SymbolId> {
        self.find(SymbolKind::Momentum, dof)
    }

    pub fn velocity(&self, dof: usize) -> Option<SymbolId> {
        self.find(SymbolKind::Velocity, dof)
    }

    /// Degree-of-freedom indices in ascending order.
    pub fn dofs(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .symbols
            .iter()
            .filter(|s| s.kind == SymbolKind::Coordinate)
            .map(|s| s.dof)
            .collect();
        out.sort_unstable();
        out
    }

    pub fn constants(&self) -> impl Iterator<Item = SymbolId> + '_ {
        self.iter()
            .filter(|(_, s)| s.kind == SymbolKind::Constant)
            .map(|(id, _)| id)
    }

    pub fn is_fermionic(&self, dof: usize) -> bool {
        self.coordinate(dof)
            .map(|id| self.grading(id).is_odd())
            .unwrap_or(false)
    }

    pub fn has_fermions(&self) -> bool {
        self.symbols
            .iter()
            .any(|s| s.kind != SymbolKind::Constant && s.grading.is_odd())
    }

    /// Every coordinate has a momentum or velocity partner of the same grading, and
    /// every momentum or velocity has a coordinate. Constants must be even.
    pub fn validate(&self) -> Result<()> {
        for s in &self.symbols {
            match s.kind {
                SymbolKind::Coordinate => {
                    let partner = self.momentum(s.dof).or_else(|| self.velocity(s.dof));
                    match partner {
                        None => {
                            return Err(Error::Symbol(format!(
                                "coordinate `{}` has no matching momentum",
                                s.name
                            )))
                        }
                        Some(p) if self.grading(p) != s.grading => {
                            return Err(Error::Symbol(format!(
                                "`{}` and `{}` have different gradings",
                                s.name,
                                self.name(p)
                            )))
                        }
                        Some(_) => {}
                    }
                }
                SymbolKind::Momentum | SymbolKind::Velocity => {
                    if self.coordinate(s.dof).is_none() {
                        return Err(Error::Symbol(format!(
                            "`{}` has no matching coordinate",
                            s.name
                        )));
                    }
                }
                SymbolKind::Constant => {
                    if s.grading.is_odd() {
                        return Err(Error::Symbol(format!(
                            "constant `{}` must be Grassmann even",
                            s.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Copy of the table with every velocity replaced by a momentum in the same slot,
    /// so symbol ids stay valid across a Legendre transform.
    pub(crate) fn velocities_to_momenta(&self) -> Result<SymbolTable> {
        let mut out = SymbolTable::new();
        for s in &self.symbols {
            match s.kind {
                SymbolKind::Velocity => {
                    let mut name = format!("p{}", s.dof);
                    while self.by_name.contains_key(&name) || out.by_name.contains_key(&name) {
                        name.push('_');
                    }
                    out.declare(&name, SymbolKind::Momentum, s.dof, s.grading)?;
                }
                _ => {
                    out.declare(&s.name, s.kind, s.dof, s.grading)?;
                }
            }
        }
        Ok(out)
    }
}
