//! Second-order formulas in negation normal form, the stratified decoration
//! that attaches ordinal indices to variables and quantifiers, and the
//! measures the proof calculus reads off a formula: classification into the
//! Π¹₂/Σ¹₂ classes, the two grade counters, and stratification levels.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::index::{Index, Name};
use crate::ordinal::{self, finite, natural_sum, omega_pow, one, OrdTerm};

/// A first-order term. Bound variables are de Bruijn references counting
/// enclosing first-order binders (quantifiers, or the hole of an
/// [`Abstract`]); terms themselves never bind.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FoTerm {
    /// An individual constant.
    Const(String),
    /// A free individual variable.
    FreeVar(String),
    /// A reference to the `k`-th enclosing first-order binder.
    Bound(u32),
    /// A function symbol applied to arguments.
    App(String, Vec<FoTerm>),
}

impl FoTerm {
    /// The canonical constant `c` the language is assumed to contain.
    pub fn c() -> FoTerm {
        FoTerm::Const(String::from("c"))
    }

    /// Bumps every bound reference; used when a term moves under binders.
    fn shift(&self, by: u32) -> FoTerm {
        match self {
            FoTerm::Bound(k) => FoTerm::Bound(k + by),
            FoTerm::App(f, args) => {
                FoTerm::App(f.clone(), args.iter().map(|a| a.shift(by)).collect())
            }
            other => other.clone(),
        }
    }

    /// Replaces references to the binder at `level` by `t` (already shifted
    /// by the caller) and closes the gap left behind.
    fn open(&self, level: u32, t: &FoTerm) -> FoTerm {
        match self {
            FoTerm::Bound(k) if *k == level => t.clone(),
            FoTerm::Bound(k) if *k > level => FoTerm::Bound(k - 1),
            FoTerm::App(f, args) => {
                FoTerm::App(f.clone(), args.iter().map(|a| a.open(level, t)).collect())
            }
            other => other.clone(),
        }
    }

    /// Free individual variables occurring in the term.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        match self {
            FoTerm::FreeVar(v) => {
                out.insert(v.clone());
            }
            FoTerm::App(_, args) => {
                for a in args {
                    a.collect_free(out);
                }
            }
            _ => {}
        }
    }

    fn check_bound(&self, depth: u32) -> Result<(), FormulaError> {
        match self {
            FoTerm::Bound(k) if *k >= depth => Err(FormulaError::UnboundReference),
            FoTerm::App(_, args) => args.iter().try_for_each(|a| a.check_bound(depth)),
            _ => Ok(()),
        }
    }

    /// Replaces every occurrence of the free variable `name` by `t`. The
    /// caller is responsible for shifting `t` past any enclosing binders.
    pub fn subst_free(&self, name: &str, t: &FoTerm) -> FoTerm {
        match self {
            FoTerm::FreeVar(v) if v == name => t.clone(),
            FoTerm::App(f, args) => FoTerm::App(
                f.clone(),
                args.iter().map(|a| a.subst_free(name, t)).collect(),
            ),
            other => other.clone(),
        }
    }
}

/// The predicate position of a literal: a relation constant (carrying the
/// index `0` once decorated), a free second-order variable with an optional
/// stratification index, or a reference to an enclosing second-order binder.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pred {
    RelConst(String),
    FreeSo { name: Name, index: Option<Index> },
    BoundSo(u32),
}

impl Pred {
    /// The canonical relation constant `R`, used when a quantifier body is
    /// measured with its binder filled by a constant.
    pub fn canonical_rel() -> Pred {
        Pred::RelConst(String::from("R"))
    }

    /// A free variable without an index (a plain-language occurrence).
    pub fn so(name: impl Into<Name>) -> Pred {
        Pred::FreeSo {
            name: name.into(),
            index: None,
        }
    }

    /// A free variable carrying a stratification index.
    pub fn so_indexed(name: impl Into<Name>, index: Index) -> Pred {
        Pred::FreeSo {
            name: name.into(),
            index: Some(index),
        }
    }
}

/// A literal: a predicate applied to a term, possibly negated. Negations
/// live only here; the connectives above are negation-free.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub positive: bool,
    pub pred: Pred,
    pub arg: FoTerm,
}

/// Quantifier kind, shared by both orders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quant {
    All,
    Ex,
}

impl Quant {
    pub fn dual(self) -> Quant {
        match self {
            Quant::All => Quant::Ex,
            Quant::Ex => Quant::All,
        }
    }
}

/// A formula in negation normal form. Both quantifiers bind namelessly:
/// first-order and second-order references count their own kind of binder
/// separately. A second-order quantifier optionally carries an ordinal index,
/// which must be a fixpoint of the `Ω`-hierarchy.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Lit(Literal),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    FoQuant(Quant, Box<Formula>),
    SoQuant(Quant, Option<OrdTerm>, Box<Formula>),
}

/// A formula with a first-order hole: the body references the hole as its
/// outermost first-order binder. Substituting a predicate applies the
/// abstract to the literal's argument.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Abstract {
    pub body: Formula,
}

/// The two second-order classes a formula can be measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SoClass {
    Pi,
    Sigma,
}

impl SoClass {
    pub fn dual(self) -> SoClass {
        match self {
            SoClass::Pi => SoClass::Sigma,
            SoClass::Sigma => SoClass::Pi,
        }
    }
}

/// Position of a subformula: child indices from the root (`0`/`1` under a
/// connective, `0` under a quantifier).
pub type Addr = Vec<usize>;

/// What [`Formula::classify`] reports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    /// Member of the Π¹₂ class.
    pub pi: bool,
    /// Member of the Σ¹₂ class.
    pub sigma: bool,
    /// Free second-order variables occurring inside the scope of some
    /// second-order quantifier.
    pub tied: BTreeSet<Name>,
    /// Addresses of the distinguished quantifier occurrences: those whose
    /// own subformula is in the matching class and whose variable stays out
    /// of every deeper second-order scope.
    pub distinguished: BTreeSet<Addr>,
}

impl Classification {
    pub fn in_class(&self, class: SoClass) -> bool {
        match class {
            SoClass::Pi => self.pi,
            SoClass::Sigma => self.sigma,
        }
    }

    pub fn isolated(&self) -> bool {
        self.pi && self.sigma
    }
}

/// The two grade counters of a decorated formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grades {
    /// Connective nesting counted only while a quantifier indexed at `I`
    /// occurs underneath: `0` when none does, capped at `1` by an unindexed
    /// second-order quantifier, floored at `2` by an `I`-indexed one.
    pub over_inaccessible: u32,
    /// Unfolding depth: every connective counts, unindexed second-order
    /// quantifiers are opaque, indexed ones count one step.
    pub unfolding: u32,
}

impl Grades {
    /// The degree, a value below `ω·2` that height bounds are measured
    /// against: the plain unfolding depth while no `I`-indexed quantifier
    /// occurs, and `ω + (n-1)` once the other counter reaches `n`.
    pub fn degree(&self) -> OrdTerm {
        if self.over_inaccessible == 0 {
            finite(u64::from(self.unfolding))
        } else {
            natural_sum(
                omega_pow(one()),
                finite(u64::from(self.over_inaccessible - 1)),
            )
        }
    }
}

/// Index assignments for decorating a plain formula: one index for all
/// undistinguished quantifiers and one per free second-order variable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Decoration {
    pub quantifier_index: Option<OrdTerm>,
    pub variable_indices: BTreeMap<Name, Index>,
}

impl Decoration {
    /// Decoration sending every free variable in `names` to the index `0`
    /// and undistinguished quantifiers to `eta`.
    pub fn zeros(eta: OrdTerm, names: impl IntoIterator<Item = Name>) -> Decoration {
        Decoration {
            quantifier_index: Some(eta),
            variable_indices: names
                .into_iter()
                .map(|n| (n, Index::zero()))
                .collect(),
        }
    }
}

/// What fills the references to a second-order binder when its body is
/// opened.
#[derive(Clone, Copy, Debug)]
pub enum SoFill<'a> {
    /// A predicate: a relation constant, a free variable (indexed or not),
    /// or a reference to an outer binder.
    Pred(&'a Pred),
    /// A comprehension abstract; negative occurrences receive its negation.
    Abs(&'a Abstract),
}

/// Failures raised by formula operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FormulaError {
    /// Quantifier indices must be fixpoints of the `Ω`-hierarchy.
    BadQuantifierIndex(OrdTerm),
    /// Stratification levels exist only for formulas of the requested class.
    NotInClass(SoClass),
    /// The level recursion hit a free variable without an index.
    MissingIndex(Name),
    /// The decoration scheme lacks an entry for this variable.
    MissingSchemeEntry(Name),
    /// Decorating a formula that already carries indices.
    AlreadyDecorated,
    /// A de Bruijn reference without a matching binder.
    UnboundReference,
}

impl fmt::Display for FormulaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormulaError::BadQuantifierIndex(t) => {
                write!(f, "quantifier index {t} is not an Ω-fixpoint")
            }
            FormulaError::NotInClass(SoClass::Pi) => {
                write!(f, "formula is not in the Π class")
            }
            FormulaError::NotInClass(SoClass::Sigma) => {
                write!(f, "formula is not in the Σ class")
            }
            FormulaError::MissingIndex(n) => {
                write!(f, "free variable {n} carries no index")
            }
            FormulaError::MissingSchemeEntry(n) => {
                write!(f, "no index assigned for free variable {n}")
            }
            FormulaError::AlreadyDecorated => {
                write!(f, "formula already carries indices")
            }
            FormulaError::UnboundReference => {
                write!(f, "bound reference without a matching binder")
            }
        }
    }
}

/// Everything the classification recursion tracks for one subformula.
/// Levels are de Bruijn indices of the subformula's own free second-order
/// references; a reference (name or level) is *tied* when some occurrence of
/// it sits inside a second-order quantifier of this subformula.
struct ClassScan {
    pi: bool,
    sigma: bool,
    free_names: BTreeSet<Name>,
    tied_names: BTreeSet<Name>,
    free_levels: BTreeSet<u32>,
    tied_levels: BTreeSet<u32>,
    distinguished: Vec<Addr>,
}

impl ClassScan {
    fn leaf(pred: &Pred) -> ClassScan {
        let mut scan = ClassScan {
            pi: true,
            sigma: true,
            free_names: BTreeSet::new(),
            tied_names: BTreeSet::new(),
            free_levels: BTreeSet::new(),
            tied_levels: BTreeSet::new(),
            distinguished: Vec::new(),
        };
        match pred {
            Pred::FreeSo { name, .. } => {
                scan.free_names.insert(name.clone());
            }
            Pred::BoundSo(k) => {
                scan.free_levels.insert(*k);
            }
            Pred::RelConst(_) => {}
        }
        scan
    }

    fn merge(left: ClassScan, right: ClassScan) -> ClassScan {
        let mut distinguished: Vec<Addr> = Vec::new();
        for mut addr in left.distinguished {
            addr.insert(0, 0);
            distinguished.push(addr);
        }
        for mut addr in right.distinguished {
            addr.insert(0, 1);
            distinguished.push(addr);
        }
        ClassScan {
            pi: left.pi && right.pi,
            sigma: left.sigma && right.sigma,
            free_names: &left.free_names | &right.free_names,
            tied_names: &left.tied_names | &right.tied_names,
            free_levels: &left.free_levels | &right.free_levels,
            tied_levels: &left.tied_levels | &right.tied_levels,
            distinguished,
        }
    }

    fn under_body(mut self) -> ClassScan {
        for addr in &mut self.distinguished {
            addr.insert(0, 0);
        }
        self
    }
}

fn class_scan(formula: &Formula) -> ClassScan {
    match formula {
        Formula::Lit(l) => ClassScan::leaf(&l.pred),
        Formula::And(a, b) | Formula::Or(a, b) => ClassScan::merge(class_scan(a), class_scan(b)),
        Formula::FoQuant(_, body) => class_scan(body).under_body(),
        Formula::SoQuant(kind, _, body) => {
            let scan = class_scan(body);
            let untied = !scan.tied_levels.contains(&0);
            let (pi, sigma) = match kind {
                Quant::All => (scan.pi, scan.pi && scan.sigma && untied),
                Quant::Ex => (scan.pi && scan.sigma && untied, scan.sigma),
            };
            let here = match kind {
                Quant::All => scan.pi && untied,
                Quant::Ex => scan.sigma && untied,
            };
            let mut out = scan.under_body();
            if here {
                out.distinguished.push(Vec::new());
            }
            out.pi = pi;
            out.sigma = sigma;
            // The quantifier's scope is the whole body: every reference free
            // in it is tied from here on. Level 0 is bound here; the rest
            // shift down past the binder.
            out.tied_names = out.free_names.clone();
            out.tied_levels = out
                .free_levels
                .union(&out.tied_levels)
                .filter(|k| **k > 0)
                .map(|k| k - 1)
                .collect();
            out.free_levels = out
                .free_levels
                .iter()
                .filter(|k| **k > 0)
                .map(|k| k - 1)
                .collect();
            out
        }
    }
}

impl Formula {
    pub fn lit(positive: bool, pred: Pred, arg: FoTerm) -> Formula {
        Formula::Lit(Literal {
            positive,
            pred,
            arg,
        })
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn fo(kind: Quant, body: Formula) -> Formula {
        Formula::FoQuant(kind, Box::new(body))
    }

    pub fn so(kind: Quant, body: Formula) -> Formula {
        Formula::SoQuant(kind, None, Box::new(body))
    }

    /// A second-order quantifier carrying an index; the index must be a
    /// fixpoint of the `Ω`-hierarchy.
    pub fn so_indexed(kind: Quant, eta: OrdTerm, body: Formula) -> Result<Formula, FormulaError> {
        if eta.is_omega_fixpoint() {
            Ok(Formula::SoQuant(kind, Some(eta), Box::new(body)))
        } else {
            Err(FormulaError::BadQuantifierIndex(eta))
        }
    }

    /// Structural sanity: no dangling de Bruijn references and every
    /// quantifier index a canonical `Ω`-fixpoint.
    pub fn validate(&self) -> Result<(), FormulaError> {
        self.validate_at(0, 0)
    }

    fn validate_at(&self, fo_depth: u32, so_depth: u32) -> Result<(), FormulaError> {
        match self {
            Formula::Lit(l) => {
                l.arg.check_bound(fo_depth)?;
                match &l.pred {
                    Pred::BoundSo(k) if *k >= so_depth => Err(FormulaError::UnboundReference),
                    _ => Ok(()),
                }
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.validate_at(fo_depth, so_depth)?;
                b.validate_at(fo_depth, so_depth)
            }
            Formula::FoQuant(_, body) => body.validate_at(fo_depth + 1, so_depth),
            Formula::SoQuant(_, index, body) => {
                if let Some(eta) = index {
                    ordinal::validate(eta)
                        .map_err(|_| FormulaError::BadQuantifierIndex(eta.clone()))?;
                    if !eta.is_omega_fixpoint() {
                        return Err(FormulaError::BadQuantifierIndex(eta.clone()));
                    }
                }
                body.validate_at(fo_depth, so_depth + 1)
            }
        }
    }

    /// Negation: flips literals and dualizes connectives and quantifiers,
    /// keeping quantifier indices in place. An involution.
    pub fn negated(&self) -> Formula {
        match self {
            Formula::Lit(l) => Formula::Lit(Literal {
                positive: !l.positive,
                pred: l.pred.clone(),
                arg: l.arg.clone(),
            }),
            Formula::And(a, b) => Formula::or(a.negated(), b.negated()),
            Formula::Or(a, b) => Formula::and(a.negated(), b.negated()),
            Formula::FoQuant(q, body) => Formula::FoQuant(q.dual(), Box::new(body.negated())),
            Formula::SoQuant(q, index, body) => {
                Formula::SoQuant(q.dual(), index.clone(), Box::new(body.negated()))
            }
        }
    }

    /// Classification of the formula together with its tied variables and
    /// the addresses of distinguished quantifiers.
    pub fn classify(&self) -> Classification {
        let scan = class_scan(self);
        Classification {
            pi: scan.pi,
            sigma: scan.sigma,
            tied: scan.tied_names,
            distinguished: scan.distinguished.into_iter().collect(),
        }
    }

    /// Whether a quantifier indexed at `I` of the given kind occurs.
    pub fn has_inaccessible_quant(&self, kind: Quant) -> bool {
        match self {
            Formula::Lit(_) => false,
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.has_inaccessible_quant(kind) || b.has_inaccessible_quant(kind)
            }
            Formula::FoQuant(_, body) => body.has_inaccessible_quant(kind),
            Formula::SoQuant(q, index, body) => {
                (*q == kind && *index == Some(OrdTerm::Inaccessible))
                    || body.has_inaccessible_quant(kind)
            }
        }
    }

    fn has_any_inaccessible_quant(&self) -> bool {
        self.has_inaccessible_quant(Quant::All) || self.has_inaccessible_quant(Quant::Ex)
    }

    /// Both grade counters.
    pub fn grade(&self) -> Grades {
        Grades {
            over_inaccessible: self.grade_over_inaccessible(),
            unfolding: self.grade_unfolding(),
        }
    }

    fn grade_over_inaccessible(&self) -> u32 {
        if !self.has_any_inaccessible_quant() {
            return 0;
        }
        match self {
            Formula::Lit(_) => unreachable!("literals hold no quantifier"),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.grade_over_inaccessible().max(b.grade_over_inaccessible()) + 1
            }
            Formula::FoQuant(_, body) => body.grade_over_inaccessible() + 1,
            Formula::SoQuant(_, None, _) => 1,
            Formula::SoQuant(_, Some(OrdTerm::Inaccessible), body) => {
                (body.grade_over_inaccessible() + 1).max(2)
            }
            // An index below I is itself harmless; only the body counts.
            Formula::SoQuant(_, Some(_), body) => body.grade_over_inaccessible() + 1,
        }
    }

    fn grade_unfolding(&self) -> u32 {
        match self {
            Formula::Lit(_) => 0,
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.grade_unfolding().max(b.grade_unfolding()) + 1
            }
            Formula::FoQuant(_, body) => body.grade_unfolding() + 1,
            Formula::SoQuant(_, None, _) => 0,
            Formula::SoQuant(_, Some(_), body) => body.grade_unfolding() + 1,
        }
    }

    /// The stratification level of the formula in the given class. Errors
    /// when the formula is not in that class.
    pub fn strat_level(&self, class: SoClass) -> Result<Index, FormulaError> {
        if !self.classify().in_class(class) {
            return Err(FormulaError::NotInClass(class));
        }
        self.strat_level_at(class, None)
    }

    /// The stratification level with the chains contributed by quantifiers
    /// indexed at `I` replaced by the variable atom `marker^I`; substituting
    /// `I` back for the marker recovers [`Self::strat_level`]. This is the
    /// index a strong rule hands to its eigenvariable.
    pub fn strat_level_marked(
        &self,
        class: SoClass,
        marker: &str,
    ) -> Result<Index, FormulaError> {
        if !self.classify().in_class(class) {
            return Err(FormulaError::NotInClass(class));
        }
        self.strat_level_at(class, Some(marker))
    }

    fn strat_level_at(
        &self,
        class: SoClass,
        marker: Option<&str>,
    ) -> Result<Index, FormulaError> {
        let quant_chain = |eta: &OrdTerm| -> Result<Index, FormulaError> {
            match marker {
                Some(name) if *eta == OrdTerm::Inaccessible => {
                    Index::var(Name::from(name), OrdTerm::Inaccessible)
                        .map_err(|_| FormulaError::BadQuantifierIndex(eta.clone()))
                }
                _ => Index::fix(eta.clone())
                    .map_err(|_| FormulaError::BadQuantifierIndex(eta.clone())),
            }
        };
        self.strat_level_unchecked(class, &quant_chain)
    }

    fn strat_level_unchecked(
        &self,
        class: SoClass,
        quant_chain: &impl Fn(&OrdTerm) -> Result<Index, FormulaError>,
    ) -> Result<Index, FormulaError> {
        match self {
            Formula::Lit(l) => match &l.pred {
                Pred::RelConst(_) | Pred::BoundSo(_) => Ok(Index::zero()),
                Pred::FreeSo {
                    index: Some(s), ..
                } => Ok(s.clone()),
                Pred::FreeSo { name, index: None } => {
                    Err(FormulaError::MissingIndex(name.clone()))
                }
            },
            Formula::And(a, b) | Formula::Or(a, b) => Ok(a
                .strat_level_unchecked(class, quant_chain)?
                .join(&b.strat_level_unchecked(class, quant_chain)?)),
            Formula::FoQuant(_, body) => body.strat_level_unchecked(class, quant_chain),
            Formula::SoQuant(Quant::All, None, body) => match class {
                SoClass::Pi => body.strat_level_unchecked(SoClass::Pi, quant_chain),
                SoClass::Sigma => {
                    Ok(body.strat_level_unchecked(SoClass::Pi, quant_chain)?.succ())
                }
            },
            Formula::SoQuant(Quant::Ex, None, body) => match class {
                SoClass::Sigma => body.strat_level_unchecked(SoClass::Sigma, quant_chain),
                SoClass::Pi => {
                    Ok(body.strat_level_unchecked(SoClass::Sigma, quant_chain)?.succ())
                }
            },
            Formula::SoQuant(Quant::All, Some(eta), body) => match class {
                SoClass::Pi => Ok(quant_chain(eta)?
                    .join(&body.strat_level_unchecked(SoClass::Pi, quant_chain)?)),
                // An indexed universal quantifier is undistinguished, and an
                // undistinguished universal never heads a Σ formula.
                SoClass::Sigma => Err(FormulaError::NotInClass(SoClass::Sigma)),
            },
            Formula::SoQuant(Quant::Ex, Some(eta), body) => match class {
                SoClass::Sigma => Ok(quant_chain(eta)?
                    .join(&body.strat_level_unchecked(SoClass::Sigma, quant_chain)?)),
                SoClass::Pi => Err(FormulaError::NotInClass(SoClass::Pi)),
            },
        }
    }

    /// Whether every index of a free variable occurring at a predicate
    /// position is variable-free and of ordinal value below `I`.
    pub fn is_stratified(&self) -> bool {
        match self {
            Formula::Lit(l) => match &l.pred {
                Pred::FreeSo { index: Some(s), .. } => {
                    s.is_closed() && s.od() != OrdTerm::Inaccessible
                }
                _ => true,
            },
            Formula::And(a, b) | Formula::Or(a, b) => a.is_stratified() && b.is_stratified(),
            Formula::FoQuant(_, body) | Formula::SoQuant(_, _, body) => body.is_stratified(),
        }
    }

    /// Whether no universal quantifier indexed at `I` occurs.
    pub fn is_sigma_i(&self) -> bool {
        !self.has_inaccessible_quant(Quant::All)
    }

    /// Union of the fixpoint sets of every index occurring in the formula:
    /// relation constants contribute `0`, indexed variables the base
    /// fixpoints of their index, indexed quantifiers their index.
    pub fn index_fixpoints(&self) -> BTreeSet<OrdTerm> {
        let mut out = BTreeSet::new();
        self.collect_fixpoints(&mut out);
        out
    }

    fn collect_fixpoints(&self, out: &mut BTreeSet<OrdTerm>) {
        match self {
            Formula::Lit(l) => match &l.pred {
                Pred::RelConst(_) => {
                    out.insert(OrdTerm::Zero);
                }
                Pred::FreeSo { index: Some(s), .. } => {
                    out.extend(s.fixpoints());
                }
                _ => {}
            },
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_fixpoints(out);
                b.collect_fixpoints(out);
            }
            Formula::FoQuant(_, body) => body.collect_fixpoints(out),
            Formula::SoQuant(_, index, body) => {
                if let Some(eta) = index {
                    out.insert(eta.clone());
                }
                body.collect_fixpoints(out);
            }
        }
    }

    /// Variables occurring inside some index of the formula.
    pub fn index_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit_indices(&mut |s| out.extend(s.vars()));
        out
    }

    fn visit_indices(&self, visit: &mut impl FnMut(&Index)) {
        match self {
            Formula::Lit(l) => {
                if let Pred::FreeSo { index: Some(s), .. } = &l.pred {
                    visit(s);
                }
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.visit_indices(visit);
                b.visit_indices(visit);
            }
            Formula::FoQuant(_, body) | Formula::SoQuant(_, _, body) => body.visit_indices(visit),
        }
    }

    /// Free second-order variables at predicate positions.
    pub fn so_part_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_part_names(&mut out);
        out
    }

    fn collect_part_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Formula::Lit(l) => {
                if let Pred::FreeSo { name, .. } = &l.pred {
                    out.insert(name.clone());
                }
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_part_names(out);
                b.collect_part_names(out);
            }
            Formula::FoQuant(_, body) | Formula::SoQuant(_, _, body) => {
                body.collect_part_names(out)
            }
        }
    }

    /// Whether the named variable occurs at all, at a predicate position or
    /// inside an index.
    pub fn mentions_so(&self, name: &str) -> bool {
        self.so_part_names().contains(name) || self.index_vars().contains(name)
    }

    /// Free individual variables occurring in the formula.
    pub fn free_fo_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_fo_vars(&mut out);
        out
    }

    fn collect_fo_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Lit(l) => l.arg.collect_free(out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_fo_vars(out);
                b.collect_fo_vars(out);
            }
            Formula::FoQuant(_, body) | Formula::SoQuant(_, _, body) => body.collect_fo_vars(out),
        }
    }

    /// Whether every free second-order variable at a predicate position
    /// carries an index, as the indexed language requires of its formulas.
    pub fn free_so_indexed(&self) -> bool {
        match self {
            Formula::Lit(l) => !matches!(&l.pred, Pred::FreeSo { index: None, .. }),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.free_so_indexed() && b.free_so_indexed()
            }
            Formula::FoQuant(_, body) | Formula::SoQuant(_, _, body) => body.free_so_indexed(),
        }
    }

    /// Whether no second-order quantifier occurs. Free second-order
    /// variables are allowed.
    pub fn is_first_order(&self) -> bool {
        match self {
            Formula::Lit(_) => true,
            Formula::And(a, b) | Formula::Or(a, b) => a.is_first_order() && b.is_first_order(),
            Formula::FoQuant(_, body) => body.is_first_order(),
            Formula::SoQuant(..) => false,
        }
    }

    /// Whether the formula carries no index anywhere.
    pub fn is_plain(&self) -> bool {
        match self {
            Formula::Lit(l) => !matches!(&l.pred, Pred::FreeSo { index: Some(_), .. }),
            Formula::And(a, b) | Formula::Or(a, b) => a.is_plain() && b.is_plain(),
            Formula::FoQuant(_, body) => body.is_plain(),
            Formula::SoQuant(_, index, body) => index.is_none() && body.is_plain(),
        }
    }

    /// Whether the formula is fully decorated: every free variable carries
    /// an index and a quantifier carries one exactly when undistinguished.
    pub fn is_decorated(&self) -> bool {
        self.decoration_matches(&self.classify().distinguished, &mut Vec::new())
    }

    fn decoration_matches(&self, distinguished: &BTreeSet<Addr>, at: &mut Addr) -> bool {
        match self {
            Formula::Lit(l) => !matches!(&l.pred, Pred::FreeSo { index: None, .. }),
            Formula::And(a, b) | Formula::Or(a, b) => {
                at.push(0);
                let left = a.decoration_matches(distinguished, at);
                at.pop();
                at.push(1);
                let right = b.decoration_matches(distinguished, at);
                at.pop();
                left && right
            }
            Formula::FoQuant(_, body) => {
                at.push(0);
                let ok = body.decoration_matches(distinguished, at);
                at.pop();
                ok
            }
            Formula::SoQuant(_, index, body) => {
                let here = index.is_some() != distinguished.contains(at);
                at.push(0);
                let ok = body.decoration_matches(distinguished, at);
                at.pop();
                here && ok
            }
        }
    }

    /// Decorates a plain formula: relation constants implicitly receive `0`,
    /// free variables their assigned index, undistinguished quantifiers the
    /// scheme's quantifier index, distinguished ones none. Erasing the
    /// result gives back the input.
    pub fn decorate(&self, scheme: &Decoration) -> Result<Formula, FormulaError> {
        if !self.is_plain() {
            return Err(FormulaError::AlreadyDecorated);
        }
        let distinguished = self.classify().distinguished;
        self.decorate_at(scheme, &distinguished, &mut Vec::new())
    }

    fn decorate_at(
        &self,
        scheme: &Decoration,
        distinguished: &BTreeSet<Addr>,
        at: &mut Addr,
    ) -> Result<Formula, FormulaError> {
        match self {
            Formula::Lit(l) => {
                let pred = match &l.pred {
                    Pred::FreeSo { name, index: None } => {
                        let index = scheme
                            .variable_indices
                            .get(name)
                            .ok_or_else(|| FormulaError::MissingSchemeEntry(name.clone()))?;
                        Pred::FreeSo {
                            name: name.clone(),
                            index: Some(index.clone()),
                        }
                    }
                    other => other.clone(),
                };
                Ok(Formula::Lit(Literal {
                    positive: l.positive,
                    pred,
                    arg: l.arg.clone(),
                }))
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                at.push(0);
                let left = a.decorate_at(scheme, distinguished, at)?;
                at.pop();
                at.push(1);
                let right = b.decorate_at(scheme, distinguished, at)?;
                at.pop();
                Ok(match self {
                    Formula::And(..) => Formula::and(left, right),
                    _ => Formula::or(left, right),
                })
            }
            Formula::FoQuant(q, body) => {
                at.push(0);
                let inner = body.decorate_at(scheme, distinguished, at)?;
                at.pop();
                Ok(Formula::FoQuant(*q, Box::new(inner)))
            }
            Formula::SoQuant(q, _, body) => {
                let index = if distinguished.contains(at) {
                    None
                } else {
                    let eta = scheme
                        .quantifier_index
                        .clone()
                        .ok_or(FormulaError::AlreadyDecorated)?;
                    if !eta.is_omega_fixpoint() {
                        return Err(FormulaError::BadQuantifierIndex(eta));
                    }
                    Some(eta)
                };
                at.push(0);
                let inner = body.decorate_at(scheme, distinguished, at)?;
                at.pop();
                Ok(Formula::SoQuant(*q, index, Box::new(inner)))
            }
        }
    }

    /// Strips every index, giving back a plain formula.
    pub fn erased(&self) -> Formula {
        match self {
            Formula::Lit(l) => {
                let pred = match &l.pred {
                    Pred::FreeSo { name, .. } => Pred::FreeSo {
                        name: name.clone(),
                        index: None,
                    },
                    other => other.clone(),
                };
                Formula::Lit(Literal {
                    positive: l.positive,
                    pred,
                    arg: l.arg.clone(),
                })
            }
            Formula::And(a, b) => Formula::and(a.erased(), b.erased()),
            Formula::Or(a, b) => Formula::or(a.erased(), b.erased()),
            Formula::FoQuant(q, body) => Formula::FoQuant(*q, Box::new(body.erased())),
            Formula::SoQuant(q, _, body) => Formula::SoQuant(*q, None, Box::new(body.erased())),
        }
    }

    /// Replaces the variable symbol (`name` annotated with `fix`) inside
    /// every index by `s`; predicate-position occurrences of the name stay.
    pub fn index_subst(&self, name: &str, fix: &OrdTerm, s: &Index) -> Formula {
        self.map_indices(&mut |idx| idx.subst_var(name, fix, s))
    }

    fn map_indices(&self, map: &mut impl FnMut(&Index) -> Index) -> Formula {
        match self {
            Formula::Lit(l) => {
                let pred = match &l.pred {
                    Pred::FreeSo {
                        name,
                        index: Some(s),
                    } => Pred::FreeSo {
                        name: name.clone(),
                        index: Some(map(s)),
                    },
                    other => other.clone(),
                };
                Formula::Lit(Literal {
                    positive: l.positive,
                    pred,
                    arg: l.arg.clone(),
                })
            }
            Formula::And(a, b) => Formula::and(a.map_indices(map), b.map_indices(map)),
            Formula::Or(a, b) => Formula::or(a.map_indices(map), b.map_indices(map)),
            Formula::FoQuant(q, body) => Formula::FoQuant(*q, Box::new(body.map_indices(map))),
            Formula::SoQuant(q, index, body) => {
                Formula::SoQuant(*q, index.clone(), Box::new(body.map_indices(map)))
            }
        }
    }

    /// Replaces every quantifier of the given kind indexed at `I` by the
    /// same quantifier indexed at `eta`, throughout the formula.
    pub fn relabel(&self, kind: Quant, eta: &OrdTerm) -> Result<Formula, FormulaError> {
        if !eta.is_omega_fixpoint() {
            return Err(FormulaError::BadQuantifierIndex(eta.clone()));
        }
        Ok(self.relabel_unchecked(kind, eta))
    }

    fn relabel_unchecked(&self, kind: Quant, eta: &OrdTerm) -> Formula {
        match self {
            Formula::Lit(_) => self.clone(),
            Formula::And(a, b) => Formula::and(
                a.relabel_unchecked(kind, eta),
                b.relabel_unchecked(kind, eta),
            ),
            Formula::Or(a, b) => Formula::or(
                a.relabel_unchecked(kind, eta),
                b.relabel_unchecked(kind, eta),
            ),
            Formula::FoQuant(q, body) => {
                Formula::FoQuant(*q, Box::new(body.relabel_unchecked(kind, eta)))
            }
            Formula::SoQuant(q, index, body) => {
                let index = match index {
                    Some(OrdTerm::Inaccessible) if q == &kind => Some(eta.clone()),
                    other => other.clone(),
                };
                Formula::SoQuant(*q, index, Box::new(body.relabel_unchecked(kind, eta)))
            }
        }
    }

    /// Renames predicate-position occurrences of a free variable, keeping
    /// each occurrence's index; index-occurrences of the old name stay.
    pub fn rename_part(&self, old: &str, new: &str) -> Formula {
        match self {
            Formula::Lit(l) => {
                let pred = match &l.pred {
                    Pred::FreeSo { name, index } if name == old => Pred::FreeSo {
                        name: Name::from(new),
                        index: index.clone(),
                    },
                    other => other.clone(),
                };
                Formula::Lit(Literal {
                    positive: l.positive,
                    pred,
                    arg: l.arg.clone(),
                })
            }
            Formula::And(a, b) => Formula::and(a.rename_part(old, new), b.rename_part(old, new)),
            Formula::Or(a, b) => Formula::or(a.rename_part(old, new), b.rename_part(old, new)),
            Formula::FoQuant(q, body) => {
                Formula::FoQuant(*q, Box::new(body.rename_part(old, new)))
            }
            Formula::SoQuant(q, index, body) => {
                Formula::SoQuant(*q, index.clone(), Box::new(body.rename_part(old, new)))
            }
        }
    }

    /// Completely renames a free second-order variable: predicate-position
    /// occurrences and index occurrences alike, keeping every annotation.
    pub fn rename_so(&self, old: &str, new: &str) -> Formula {
        self.map_indices(&mut |idx| idx.rename_var(old, new))
            .rename_part(old, new)
    }

    /// Interprets the formula as the body of a second-order quantifier and
    /// fills references to that binder. Negative literal occurrences of an
    /// abstract receive its negation; the literal's argument lands in the
    /// abstract's hole.
    pub fn open_so(&self, fill: SoFill<'_>) -> Formula {
        self.open_so_at(0, fill)
    }

    fn open_so_at(&self, depth: u32, fill: SoFill<'_>) -> Formula {
        match self {
            Formula::Lit(l) => match &l.pred {
                Pred::BoundSo(k) if *k == depth => match fill {
                    SoFill::Pred(p) => {
                        let pred = match p {
                            Pred::BoundSo(j) => Pred::BoundSo(j + depth),
                            other => other.clone(),
                        };
                        Formula::Lit(Literal {
                            positive: l.positive,
                            pred,
                            arg: l.arg.clone(),
                        })
                    }
                    SoFill::Abs(a) => {
                        let applied = a.apply(&l.arg);
                        if l.positive {
                            applied
                        } else {
                            applied.negated()
                        }
                    }
                },
                Pred::BoundSo(k) if *k > depth => Formula::Lit(Literal {
                    positive: l.positive,
                    pred: Pred::BoundSo(k - 1),
                    arg: l.arg.clone(),
                }),
                _ => self.clone(),
            },
            Formula::And(a, b) => {
                Formula::and(a.open_so_at(depth, fill), b.open_so_at(depth, fill))
            }
            Formula::Or(a, b) => Formula::or(a.open_so_at(depth, fill), b.open_so_at(depth, fill)),
            Formula::FoQuant(q, body) => {
                Formula::FoQuant(*q, Box::new(body.open_so_at(depth, fill)))
            }
            Formula::SoQuant(q, index, body) => Formula::SoQuant(
                *q,
                index.clone(),
                Box::new(body.open_so_at(depth + 1, fill)),
            ),
        }
    }

    /// Interprets the formula as the body of a first-order quantifier and
    /// fills references to that binder with the term.
    pub fn open_fo(&self, t: &FoTerm) -> Formula {
        self.open_fo_at(0, t)
    }

    fn open_fo_at(&self, depth: u32, t: &FoTerm) -> Formula {
        match self {
            Formula::Lit(l) => Formula::Lit(Literal {
                positive: l.positive,
                pred: l.pred.clone(),
                arg: l.arg.open(depth, &t.shift(depth)),
            }),
            Formula::And(a, b) => Formula::and(a.open_fo_at(depth, t), b.open_fo_at(depth, t)),
            Formula::Or(a, b) => Formula::or(a.open_fo_at(depth, t), b.open_fo_at(depth, t)),
            Formula::FoQuant(q, body) => {
                Formula::FoQuant(*q, Box::new(body.open_fo_at(depth + 1, t)))
            }
            Formula::SoQuant(q, index, body) => {
                Formula::SoQuant(*q, index.clone(), Box::new(body.open_fo_at(depth, t)))
            }
        }
    }

    /// Replaces predicate-position occurrences of a free variable by a
    /// fill, as [`Self::open_so`] does for binder references.
    pub fn subst_so_free(&self, name: &str, fill: SoFill<'_>) -> Formula {
        self.subst_so_where(&|n, _| n == name, fill)
    }

    /// Like [`Self::subst_so_free`], but touches only the occurrences that
    /// carry exactly the given index; same-named occurrences under another
    /// index stay.
    pub fn subst_so_indexed(&self, name: &str, index: &Index, fill: SoFill<'_>) -> Formula {
        self.subst_so_where(&|n, i| n == name && i == Some(index), fill)
    }

    /// Replaces every occurrence of a free individual variable by a term,
    /// shifting the term's binder references past quantifiers on the way in.
    pub fn subst_fo_free(&self, name: &str, t: &FoTerm) -> Formula {
        self.subst_fo_at(name, t, 0)
    }

    fn subst_fo_at(&self, name: &str, t: &FoTerm, depth: u32) -> Formula {
        match self {
            Formula::Lit(l) => Formula::Lit(Literal {
                positive: l.positive,
                pred: l.pred.clone(),
                arg: l.arg.subst_free(name, &t.shift(depth)),
            }),
            Formula::And(a, b) => Formula::and(
                a.subst_fo_at(name, t, depth),
                b.subst_fo_at(name, t, depth),
            ),
            Formula::Or(a, b) => Formula::or(
                a.subst_fo_at(name, t, depth),
                b.subst_fo_at(name, t, depth),
            ),
            Formula::FoQuant(q, body) => {
                Formula::FoQuant(*q, Box::new(body.subst_fo_at(name, t, depth + 1)))
            }
            Formula::SoQuant(q, index, body) => Formula::SoQuant(
                *q,
                index.clone(),
                Box::new(body.subst_fo_at(name, t, depth)),
            ),
        }
    }

    fn subst_so_where(
        &self,
        hit: &impl Fn(&str, Option<&Index>) -> bool,
        fill: SoFill<'_>,
    ) -> Formula {
        match self {
            Formula::Lit(l) => match &l.pred {
                Pred::FreeSo { name: n, index } if hit(n, index.as_ref()) => match fill {
                    SoFill::Pred(p) => Formula::Lit(Literal {
                        positive: l.positive,
                        pred: p.clone(),
                        arg: l.arg.clone(),
                    }),
                    SoFill::Abs(a) => {
                        let applied = a.apply(&l.arg);
                        if l.positive {
                            applied
                        } else {
                            applied.negated()
                        }
                    }
                },
                _ => self.clone(),
            },
            Formula::And(a, b) => Formula::and(
                a.subst_so_where(hit, fill),
                b.subst_so_where(hit, fill),
            ),
            Formula::Or(a, b) => Formula::or(
                a.subst_so_where(hit, fill),
                b.subst_so_where(hit, fill),
            ),
            Formula::FoQuant(q, body) => {
                Formula::FoQuant(*q, Box::new(body.subst_so_where(hit, fill)))
            }
            Formula::SoQuant(q, index, body) => Formula::SoQuant(
                *q,
                index.clone(),
                Box::new(body.subst_so_where(hit, fill)),
            ),
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, fo_depth: u32, so_depth: u32) -> fmt::Result {
        match self {
            Formula::Lit(l) => {
                if !l.positive {
                    write!(f, "~")?;
                }
                match &l.pred {
                    Pred::RelConst(r) => write!(f, "{r}")?,
                    Pred::FreeSo { name, index: None } => write!(f, "{name}")?,
                    Pred::FreeSo {
                        name,
                        index: Some(s),
                    } => write!(f, "{name}^({s})")?,
                    Pred::BoundSo(k) => write!(f, "X{}", so_depth - 1 - k)?,
                }
                write!(f, "(")?;
                fmt_fo_term(&l.arg, f, fo_depth)?;
                write!(f, ")")
            }
            Formula::And(a, b) => {
                write!(f, "(")?;
                a.fmt_at(f, fo_depth, so_depth)?;
                write!(f, " & ")?;
                b.fmt_at(f, fo_depth, so_depth)?;
                write!(f, ")")
            }
            Formula::Or(a, b) => {
                write!(f, "(")?;
                a.fmt_at(f, fo_depth, so_depth)?;
                write!(f, " | ")?;
                b.fmt_at(f, fo_depth, so_depth)?;
                write!(f, ")")
            }
            Formula::FoQuant(q, body) => {
                let tag = match q {
                    Quant::All => "all",
                    Quant::Ex => "ex",
                };
                write!(f, "{tag} x{fo_depth}.")?;
                body.fmt_at(f, fo_depth + 1, so_depth)
            }
            Formula::SoQuant(q, index, body) => {
                let tag = match q {
                    Quant::All => "All",
                    Quant::Ex => "Ex",
                };
                write!(f, "{tag} X{so_depth}")?;
                if let Some(eta) = index {
                    write!(f, "^({eta})")?;
                }
                write!(f, ".")?;
                body.fmt_at(f, fo_depth, so_depth + 1)
            }
        }
    }
}

fn fmt_fo_term(t: &FoTerm, f: &mut fmt::Formatter<'_>, depth: u32) -> fmt::Result {
    match t {
        FoTerm::Const(c) => write!(f, "{c}"),
        FoTerm::FreeVar(v) => write!(f, "{v}"),
        FoTerm::Bound(k) => {
            if *k < depth {
                write!(f, "x{}", depth - 1 - k)
            } else {
                write!(f, "_{k}")
            }
        }
        FoTerm::App(g, args) => {
            write!(f, "{g}(")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                fmt_fo_term(a, f, depth)?;
            }
            write!(f, ")")
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0, 0)
    }
}

impl fmt::Display for FoTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_fo_term(self, f, 0)
    }
}

impl Abstract {
    /// Wraps a body whose outermost first-order binder is the hole.
    pub fn new(body: Formula) -> Abstract {
        Abstract { body }
    }

    /// Fills the hole with a term.
    pub fn apply(&self, t: &FoTerm) -> Formula {
        self.body.open_fo(t)
    }

    /// An abstract must be closed apart from its hole.
    pub fn validate(&self) -> Result<(), FormulaError> {
        self.body.validate_at(1, 0)
    }
}
