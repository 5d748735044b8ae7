//! Stratification indices: formal expressions over `max`, `+1`, ordinal
//! fixpoints, and indexed variables, kept in a canonical "max of shifted
//! atoms" normal form.
//!
//! Since `+1` distributes over `max` under every reading (ordinal value,
//! fixpoint set, variable set, substitution), each index is faithfully a
//! maximum of chains `atom + k`, and two chains over the same atom collapse
//! to the larger shift. The normal form makes the equalities between
//! substituted indices that the calculus relies on plain structural
//! equality.

use alloc::collections::BTreeSet;
use alloc::string::String;
use core::cmp::Ordering;
use core::fmt;

use crate::ordinal::{compare, finite, natural_sum, OrdTerm};

/// Variable names shared across indices and formulas.
pub type Name = String;

/// An atom at the base of a chain: the ordinal `0`, a fixpoint of the
/// `Ω`-hierarchy, or an index variable annotated with such a fixpoint.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndexAtom {
    Zero,
    Fix(OrdTerm),
    Var { name: Name, fix: OrdTerm },
}

/// A stratification index in normal form: a nonempty maximum of chains
/// `atom + shift`, at most one chain per atom.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Index {
    chains: BTreeSet<(IndexAtom, u32)>,
}

/// Constructor failures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexError {
    /// Atoms must be annotated with `Ω`-fixpoints (or `0` for plain atoms).
    NotAFixpoint(OrdTerm),
}

impl fmt::Display for IndexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexError::NotAFixpoint(t) => write!(f, "{t} is not a fixpoint of the Ω-hierarchy"),
        }
    }
}

impl Index {
    /// The index `0`.
    pub fn zero() -> Index {
        Index::from_chain(IndexAtom::Zero, 0)
    }

    /// A fixpoint constant; `0` is accepted and lands on the plain atom.
    pub fn fix(f: OrdTerm) -> Result<Index, IndexError> {
        if f.is_zero() {
            Ok(Index::zero())
        } else if f.is_omega_fixpoint() {
            Ok(Index::from_chain(IndexAtom::Fix(f), 0))
        } else {
            Err(IndexError::NotAFixpoint(f))
        }
    }

    /// An index variable annotated with its fixpoint.
    pub fn var(name: impl Into<Name>, fix: OrdTerm) -> Result<Index, IndexError> {
        if fix.is_omega_fixpoint() {
            Ok(Index::from_chain(
                IndexAtom::Var {
                    name: name.into(),
                    fix,
                },
                0,
            ))
        } else {
            Err(IndexError::NotAFixpoint(fix))
        }
    }

    fn from_chain(atom: IndexAtom, shift: u32) -> Index {
        let mut chains = BTreeSet::new();
        chains.insert((atom, shift));
        Index { chains }
    }

    /// `self + 1`: bumps every chain.
    pub fn succ(&self) -> Index {
        Index {
            chains: self
                .chains
                .iter()
                .map(|(a, k)| (a.clone(), k + 1))
                .collect(),
        }
    }

    /// `self + n`.
    pub fn shifted(&self, n: u32) -> Index {
        Index {
            chains: self
                .chains
                .iter()
                .map(|(a, k)| (a.clone(), k + n))
                .collect(),
        }
    }

    /// The maximum of the two indices, absorbing dominated chains over the
    /// same atom.
    pub fn join(&self, other: &Index) -> Index {
        let mut merged: BTreeSet<(IndexAtom, u32)> = BTreeSet::new();
        for (atom, shift) in self.chains.iter().chain(other.chains.iter()) {
            let existing = merged
                .iter()
                .find(|(a, _)| a == atom)
                .map(|(a, k)| (a.clone(), *k));
            match existing {
                Some((_, k)) if k >= *shift => {}
                Some(pair) => {
                    merged.remove(&pair);
                    merged.insert((atom.clone(), *shift));
                }
                None => {
                    merged.insert((atom.clone(), *shift));
                }
            }
        }
        Index { chains: merged }
    }

    /// The ordinal value, reading every variable as its fixpoint annotation;
    /// capped at `I`.
    pub fn od(&self) -> OrdTerm {
        let mut best = OrdTerm::Zero;
        for (atom, shift) in &self.chains {
            let base = match atom {
                IndexAtom::Zero => OrdTerm::Zero,
                IndexAtom::Fix(f) | IndexAtom::Var { fix: f, .. } => f.clone(),
            };
            // A fixpoint below I plus a finite shift stays below I; at I the
            // shift is swallowed by the cap.
            let value = if base == OrdTerm::Inaccessible {
                OrdTerm::Inaccessible
            } else {
                natural_sum(base, finite(u64::from(*shift)))
            };
            if compare(&value, &best) == Ordering::Greater {
                best = value;
            }
        }
        best
    }

    /// The fixpoints occurring at the base of the chains (`0` included, per
    /// the plain atom).
    pub fn fixpoints(&self) -> BTreeSet<OrdTerm> {
        self.chains
            .iter()
            .map(|(atom, _)| match atom {
                IndexAtom::Zero => OrdTerm::Zero,
                IndexAtom::Fix(f) | IndexAtom::Var { fix: f, .. } => f.clone(),
            })
            .collect()
    }

    /// The variable names occurring in the index.
    pub fn vars(&self) -> BTreeSet<Name> {
        self.chains
            .iter()
            .filter_map(|(atom, _)| match atom {
                IndexAtom::Var { name, .. } => Some(name.clone()),
                _ => None,
            })
            .collect()
    }

    /// Whether no variables occur.
    pub fn is_closed(&self) -> bool {
        self.chains
            .iter()
            .all(|(atom, _)| !matches!(atom, IndexAtom::Var { .. }))
    }

    /// Replaces every chain over the named variable with the replacement
    /// index, shifted by the chain's own offset.
    pub fn subst(&self, name: &str, replacement: &Index) -> Index {
        let mut result: Option<Index> = None;
        for (atom, shift) in &self.chains {
            let part = match atom {
                IndexAtom::Var { name: n, .. } if n == name => replacement.shifted(*shift),
                _ => Index::from_chain(atom.clone(), *shift),
            };
            result = Some(match result {
                None => part,
                Some(acc) => acc.join(&part),
            });
        }
        result.expect("indices are nonempty")
    }

    /// Replaces the named variable with an ordinal fixpoint (or `0`).
    pub fn subst_ord(&self, name: &str, value: &OrdTerm) -> Result<Index, IndexError> {
        Ok(self.subst(name, &Index::fix(value.clone())?))
    }

    /// Like [`Self::subst`], but only chains whose variable carries the given
    /// fixpoint annotation are replaced: the variable symbol is the pair of
    /// name and annotation, so a same-named variable over another fixpoint is
    /// a different symbol.
    pub fn subst_var(&self, name: &str, fix: &OrdTerm, replacement: &Index) -> Index {
        let mut result: Option<Index> = None;
        for (atom, shift) in &self.chains {
            let part = match atom {
                IndexAtom::Var { name: n, fix: f } if n == name && f == fix => {
                    replacement.shifted(*shift)
                }
                _ => Index::from_chain(atom.clone(), *shift),
            };
            result = Some(match result {
                None => part,
                Some(acc) => acc.join(&part),
            });
        }
        result.expect("indices are nonempty")
    }

    /// Renames a variable wherever it occurs, keeping each occurrence's
    /// fixpoint annotation and shift.
    pub fn rename_var(&self, old: &str, new: &str) -> Index {
        let mut result: Option<Index> = None;
        for (atom, shift) in &self.chains {
            let atom = match atom {
                IndexAtom::Var { name, fix } if name == old => IndexAtom::Var {
                    name: Name::from(new),
                    fix: fix.clone(),
                },
                other => other.clone(),
            };
            let part = Index::from_chain(atom, *shift);
            result = Some(match result {
                None => part,
                Some(acc) => acc.join(&part),
            });
        }
        result.expect("indices are nonempty")
    }

    /// The chains, for serialization.
    pub fn chains(&self) -> impl Iterator<Item = (&IndexAtom, u32)> {
        self.chains.iter().map(|(a, k)| (a, *k))
    }
}

/// The three measures of an index: ordinal value, base fixpoints, variables.
pub fn index_measures(s: &Index) -> (OrdTerm, BTreeSet<OrdTerm>, BTreeSet<Name>) {
    (s.od(), s.fixpoints(), s.vars())
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (atom, shift)) in self.chains.iter().enumerate() {
            if i > 0 {
                write!(f, " max ")?;
            }
            match atom {
                IndexAtom::Zero => write!(f, "0")?,
                IndexAtom::Fix(t) => write!(f, "{t}")?,
                IndexAtom::Var { name, fix } => write!(f, "{name}^{fix}")?,
            }
            if *shift > 0 {
                write!(f, "+{shift}")?;
            }
        }
        Ok(())
    }
}
