//! Proof trees for the plain and the stratified second-order calculi.
//!
//! A [`Preproof`] is a finite tree of sequents, each node labelled with the
//! rule whose lower sequent it is. [`check_sbl`] and [`check_preproof`]
//! verify the per-rule schemas and side conditions of the two calculi;
//! [`heights`] and [`assign_ordinals`] compute the sequent heights and the
//! ordinal bookkeeping driven by a [`StackAssignment`]; [`structure`]
//! performs the descendant analysis (explicit part, bar sequents,
//! end-pieces, boundary rules, suitable triangles); and [`check_proof`]
//! combines everything into the global conditions a tree must satisfy
//! before cut elimination may operate on it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::formula::{Abstract, FoTerm, Formula, Grades, Pred, Quant, SoClass, SoFill};
use crate::index::{Index, Name};
use crate::ordinal::{
    compare, in_hull, natural_sum, omega_index, omega_pow, omega_tower, one, psi, succ, OrdTerm,
    Regular,
};

/// A one-sided sequent: a finite set of formulas, comma as union, with
/// contraction silent.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Sequent {
    formulas: BTreeSet<Formula>,
}

impl Sequent {
    pub fn new() -> Sequent {
        Sequent::default()
    }

    pub fn of(formulas: impl IntoIterator<Item = Formula>) -> Sequent {
        Sequent {
            formulas: formulas.into_iter().collect(),
        }
    }

    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.formulas.iter()
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn contains(&self, f: &Formula) -> bool {
        self.formulas.contains(f)
    }

    /// The sequent extended by one formula (a no-op when already present).
    pub fn with(&self, f: Formula) -> Sequent {
        let mut out = self.clone();
        out.formulas.insert(f);
        out
    }

    /// The sequent with one formula removed.
    pub fn without(&self, f: &Formula) -> Sequent {
        let mut out = self.clone();
        out.formulas.remove(f);
        out
    }

    pub fn union(&self, other: &Sequent) -> Sequent {
        Sequent {
            formulas: self.formulas.union(&other.formulas).cloned().collect(),
        }
    }

    pub fn is_subset(&self, other: &Sequent) -> bool {
        self.formulas.is_subset(&other.formulas)
    }

    /// Image of the sequent under a formula transformation; collisions
    /// collapse as contraction.
    pub fn map(&self, f: impl FnMut(&Formula) -> Formula) -> Sequent {
        Sequent {
            formulas: self.formulas.iter().map(f).collect(),
        }
    }

    /// Whether the named second-order variable occurs in any member, at a
    /// predicate position or inside an index.
    pub fn mentions_so(&self, name: &str) -> bool {
        self.formulas.iter().any(|f| f.mentions_so(name))
    }

    /// All second-order variable names occurring in members.
    pub fn so_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for f in &self.formulas {
            out.extend(f.so_part_names());
            out.extend(f.index_vars());
        }
        out
    }

    /// All free individual variable names occurring in members.
    pub fn fo_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for f in &self.formulas {
            out.extend(f.free_fo_vars());
        }
        out
    }
}

impl FromIterator<Formula> for Sequent {
    fn from_iter<T: IntoIterator<Item = Formula>>(iter: T) -> Sequent {
        Sequent::of(iter)
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.formulas.is_empty() {
            return write!(f, "(empty)");
        }
        for (i, a) in self.formulas.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// `A ⊂ B` spelled out: `∀x(¬A(x) ∨ B(x))`.
pub fn subset(a: &Abstract, b: &Abstract) -> Formula {
    let x = FoTerm::Bound(0);
    Formula::fo(Quant::All, Formula::or(a.apply(&x).negated(), b.apply(&x)))
}

/// `∃X(A ⊂ X ⊂ B)`: some class squeezed between the two abstracts.
pub fn separation(a: &Abstract, b: &Abstract) -> Formula {
    let x = FoTerm::Bound(0);
    let lower = Formula::fo(
        Quant::All,
        Formula::or(
            a.apply(&x).negated(),
            Formula::lit(true, Pred::BoundSo(0), x.clone()),
        ),
    );
    let upper = Formula::fo(
        Quant::All,
        Formula::or(Formula::lit(false, Pred::BoundSo(0), x.clone()), b.apply(&x)),
    );
    Formula::so(Quant::Ex, Formula::and(lower, upper))
}

/// Which namespace an eigenvariable lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum VarSort {
    Individual,
    Predicate,
}

/// A rule label together with the parameters that pin down its instance.
///
/// Two-premise rules order their premises left-to-right; a cut keeps the
/// `¬C` premise at index 0 and the `C` premise at index 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    /// Leaf sequent containing the designated formula and its negation.
    Ax { formula: Formula },
    /// Disjunction introduction from the component picked by `side`.
    OrIntro { main: Formula, side: usize },
    /// Conjunction introduction from both components.
    AndIntro { main: Formula },
    /// First-order existential introduction with a witnessing term.
    ExFo { main: Formula, witness: FoTerm },
    /// First-order universal introduction with an eigenvariable.
    AllFo { main: Formula, eigen: String },
    /// Cut on a formula; premises hold its negation and the formula itself.
    Cut { formula: Formula },
    /// Plain second-order existential introduction with a predicate witness.
    ExSo { main: Formula, witness: Pred },
    /// Plain second-order universal introduction.
    AllSo { main: Formula, eigen: Name },
    /// Comprehension-style introduction justified by the main formula's
    /// class.
    Bi1 { main: Formula, class: Abstract },
    /// Comprehension-style introduction justified by the abstract's class.
    Bi2 { main: Formula, class: Abstract },
    /// Separation: the main formula `∃X(A ⊂ X ⊂ B)` follows from `A ⊂ B`.
    Sep { left: Abstract, right: Abstract },
    /// Thinning: the premise is a subset of the conclusion.
    Thin,
    /// Critical rule: an indexed existential consumes an indexed witness.
    Critical { main: Formula, witness: Pred },
    /// Separation for graded formulas, premise `A ⊂ B`.
    DistSep { left: Abstract, right: Abstract },
    /// Graded unindexed existential with a predicate witness.
    DistEx { main: Formula, witness: Pred },
    /// Grade-zero existential introduced from an abstract instance.
    Bi { main: Formula, class: Abstract },
    /// Strong universal rule on an unindexed quantifier; the eigenvariable
    /// carries the marked stratification level.
    StrongAll { main: Formula, eigen: Name },
    /// Strong universal rule on an indexed quantifier; the eigenvariable is
    /// indexed by itself over the quantifier's fixpoint.
    StrongIndexed { main: Formula, eigen: Name },
    /// Weak universal rule; the eigenvariable carries the plain level.
    WeakAll { main: Formula, eigen: Name },
    /// Substitution: the conclusion is the premise with every `U^s`
    /// replaced by the abstract.
    Sub {
        level: Index,
        eigen: Name,
        replacement: Abstract,
    },
    /// Relabels universal quantifiers indexed at the inaccessible down to
    /// `eta` in the designated premise formulas.
    AllRed {
        eta: OrdTerm,
        relabeled: BTreeSet<Formula>,
    },
    /// Relabels existential quantifiers indexed at the inaccessible down to
    /// `eta` in the designated premise formulas.
    ExRed {
        eta: OrdTerm,
        relabeled: BTreeSet<Formula>,
    },
}

impl Rule {
    /// Display tag, also used in diagnostics and traces.
    pub fn label(&self) -> &'static str {
        match self {
            Rule::Ax { .. } => "(Ax)",
            Rule::OrIntro { .. } => "(or)",
            Rule::AndIntro { .. } => "(and)",
            Rule::ExFo { .. } => "(ex1)",
            Rule::AllFo { .. } => "(all1)",
            Rule::Cut { .. } => "(cut)",
            Rule::ExSo { .. } => "(ex2)",
            Rule::AllSo { .. } => "(all2)",
            Rule::Bi1 { .. } => "(BI1)",
            Rule::Bi2 { .. } => "(BI2)",
            Rule::Sep { .. } => "(Sep)",
            Rule::Thin => "(th)",
            Rule::Critical { .. } => "(c)",
            Rule::DistSep { .. } => "(d1)",
            Rule::DistEx { .. } => "(d2)",
            Rule::Bi { .. } => "(BI)",
            Rule::StrongAll { .. } => "(s1)",
            Rule::StrongIndexed { .. } => "(s2)",
            Rule::WeakAll { .. } => "(w)",
            Rule::Sub { .. } => "(sub)",
            Rule::AllRed { .. } => "(all-red)",
            Rule::ExRed { .. } => "(ex-red)",
        }
    }

    /// How many premises the schema demands.
    pub fn premise_count(&self) -> usize {
        match self {
            Rule::Ax { .. } => 0,
            Rule::AndIntro { .. } | Rule::Cut { .. } => 2,
            _ => 1,
        }
    }

    /// The main formula, for rules that have one. Axioms, cuts, thinning,
    /// substitutions and reductions do not.
    pub fn main_formula(&self) -> Option<Formula> {
        match self {
            Rule::OrIntro { main, .. }
            | Rule::AndIntro { main }
            | Rule::ExFo { main, .. }
            | Rule::AllFo { main, .. }
            | Rule::ExSo { main, .. }
            | Rule::AllSo { main, .. }
            | Rule::Bi1 { main, .. }
            | Rule::Bi2 { main, .. }
            | Rule::Critical { main, .. }
            | Rule::DistEx { main, .. }
            | Rule::Bi { main, .. }
            | Rule::StrongAll { main, .. }
            | Rule::StrongIndexed { main, .. }
            | Rule::WeakAll { main, .. } => Some(main.clone()),
            Rule::Sep { left, right } | Rule::DistSep { left, right } => {
                Some(separation(left, right))
            }
            Rule::Ax { .. }
            | Rule::Cut { .. }
            | Rule::Thin
            | Rule::Sub { .. }
            | Rule::AllRed { .. }
            | Rule::ExRed { .. } => None,
        }
    }

    /// The rule's eigenvariable, if it binds one.
    pub fn eigenvariable(&self) -> Option<(VarSort, &str)> {
        match self {
            Rule::AllFo { eigen, .. } => Some((VarSort::Individual, eigen)),
            Rule::AllSo { eigen, .. }
            | Rule::StrongAll { eigen, .. }
            | Rule::StrongIndexed { eigen, .. }
            | Rule::WeakAll { eigen, .. }
            | Rule::Sub { eigen, .. } => Some((VarSort::Predicate, eigen)),
            _ => None,
        }
    }

    fn is_reduction(&self) -> bool {
        matches!(self, Rule::AllRed { .. } | Rule::ExRed { .. })
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Root-to-node address: the empty path is the end-sequent.
pub type NodePath = Vec<usize>;

fn path_text(path: &[usize]) -> String {
    if path.is_empty() {
        return String::from("root");
    }
    let mut out = String::new();
    for (i, step) in path.iter().enumerate() {
        if i > 0 {
            out.push('.');
        }
        out.push_str(&format!("{step}"));
    }
    out
}

/// A finite tree of sequents; each subtree is itself a preproof whose root
/// sequent is the lower sequent of its rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Preproof {
    pub sequent: Sequent,
    pub rule: Rule,
    pub premises: Vec<Preproof>,
}

impl Preproof {
    pub fn new(sequent: Sequent, rule: Rule, premises: Vec<Preproof>) -> Preproof {
        Preproof {
            sequent,
            rule,
            premises,
        }
    }

    pub fn leaf(sequent: Sequent, rule: Rule) -> Preproof {
        Preproof::new(sequent, rule, Vec::new())
    }

    /// The sequent the whole tree derives.
    pub fn end_sequent(&self) -> &Sequent {
        &self.sequent
    }

    /// The subtree at a root-to-node path.
    pub fn node_at(&self, path: &[usize]) -> Option<&Preproof> {
        path.iter().try_fold(self, |n, &i| n.premises.get(i))
    }

    /// Every node with its path, in preorder.
    pub fn nodes(&self) -> Vec<(NodePath, &Preproof)> {
        let mut out = Vec::new();
        self.collect_nodes(&mut Vec::new(), &mut out);
        out
    }

    fn collect_nodes<'a>(&'a self, path: &mut NodePath, out: &mut Vec<(NodePath, &'a Preproof)>) {
        out.push((path.clone(), self));
        for (i, child) in self.premises.iter().enumerate() {
            path.push(i);
            child.collect_nodes(path, out);
            path.pop();
        }
    }

    /// Paths of all nodes whose rule satisfies the predicate.
    pub fn rule_paths(&self, mut pred: impl FnMut(&Rule) -> bool) -> Vec<NodePath> {
        self.nodes()
            .into_iter()
            .filter(|(_, n)| pred(&n.rule))
            .map(|(p, _)| p)
            .collect()
    }
}

/// A rule instance that fails its schema or a side condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaError {
    pub at: NodePath,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {}: {}", path_text(&self.at), self.message)
    }
}

fn schema_fail<T>(at: &[usize], message: String) -> Result<T, SchemaError> {
    Err(SchemaError {
        at: at.to_vec(),
        message,
    })
}

fn require(cond: bool, at: &[usize], message: impl Fn() -> String) -> Result<(), SchemaError> {
    if cond {
        Ok(())
    } else {
        schema_fail(at, message())
    }
}

/// Checks that the tree is a derivation in the plain calculus: every node
/// instantiates one of its schemas over index-free formulas, with the local
/// eigenvariable conditions.
pub fn check_sbl(p: &Preproof) -> Result<(), SchemaError> {
    for (path, node) in p.nodes() {
        check_arity(&path, node)?;
        for f in node.sequent.formulas() {
            if let Err(e) = f.validate() {
                return schema_fail(&path, format!("ill-formed formula {f}: {e}"));
            }
            require(f.is_plain(), &path, || {
                format!("indexed formula {f} in a plain derivation")
            })?;
        }
        check_plain_rule(&path, node)?;
    }
    Ok(())
}

/// Checks that the tree is a preproof in the stratified calculus: schemas
/// and side conditions over indexed formulas, plus the pure variable
/// condition.
pub fn check_preproof(p: &Preproof) -> Result<(), SchemaError> {
    for (path, node) in p.nodes() {
        check_arity(&path, node)?;
        for f in node.sequent.formulas() {
            if let Err(e) = f.validate() {
                return schema_fail(&path, format!("ill-formed formula {f}: {e}"));
            }
            require(f.free_so_indexed(), &path, || {
                format!("free variable without an index in {f}")
            })?;
        }
        check_stratified_rule(&path, node)?;
    }
    check_purity(p)
}

fn check_arity(path: &[usize], node: &Preproof) -> Result<(), SchemaError> {
    let want = node.rule.premise_count();
    require(node.premises.len() == want, path, || {
        format!(
            "{} expects {} premise(s), found {}",
            node.rule.label(),
            want,
            node.premises.len()
        )
    })
}

/// `upper == lower ∪ {minor}`, the shape of every one-premise logical rule.
fn extends_by(lower: &Sequent, upper: &Sequent, minor: &Formula) -> bool {
    *upper == lower.with(minor.clone())
}

fn check_minor_premise(
    path: &[usize],
    node: &Preproof,
    minor: &Formula,
) -> Result<(), SchemaError> {
    require(
        extends_by(&node.sequent, &node.premises[0].sequent, minor),
        path,
        || {
            format!(
                "premise of {} must extend the conclusion by {minor}",
                node.rule.label()
            )
        },
    )
}

fn check_main_present(path: &[usize], node: &Preproof, main: &Formula) -> Result<(), SchemaError> {
    require(node.sequent.contains(main), path, || {
        format!("main formula {main} missing from the conclusion")
    })
}

/// Schema and local conditions shared by both calculi for the common rules;
/// `stratified` toggles the axiom condition between prime formulas and
/// grade zero.
fn check_common_rule(
    path: &[usize],
    node: &Preproof,
    stratified: bool,
) -> Result<bool, SchemaError> {
    match &node.rule {
        Rule::Ax { formula } => {
            check_main_present(path, node, formula)?;
            require(node.sequent.contains(&formula.negated()), path, || {
                format!("axiom lacks the negation of {formula}")
            })?;
            if stratified {
                require(formula.grade().over_inaccessible == 0, path, || {
                    format!("axiom formula {formula} has nonzero grade")
                })?;
            } else {
                require(matches!(formula, Formula::Lit(_)), path, || {
                    format!("axiom formula {formula} is not prime")
                })?;
            }
        }
        Rule::OrIntro { main, side } => {
            check_main_present(path, node, main)?;
            let (a, b) = match main {
                Formula::Or(a, b) => (a, b),
                _ => return schema_fail(path, format!("main formula {main} is not a disjunction")),
            };
            let minor = match side {
                0 => a.as_ref(),
                1 => b.as_ref(),
                _ => return schema_fail(path, format!("disjunction side {side} out of range")),
            };
            check_minor_premise(path, node, minor)?;
        }
        Rule::AndIntro { main } => {
            check_main_present(path, node, main)?;
            let (a, b) = match main {
                Formula::And(a, b) => (a, b),
                _ => return schema_fail(path, format!("main formula {main} is not a conjunction")),
            };
            for (i, minor) in [a, b].into_iter().enumerate() {
                require(
                    extends_by(&node.sequent, &node.premises[i].sequent, minor),
                    path,
                    || format!("premise {i} must extend the conclusion by {minor}"),
                )?;
            }
        }
        Rule::ExFo { main, witness } => {
            check_main_present(path, node, main)?;
            let body = match main {
                Formula::FoQuant(Quant::Ex, body) => body,
                _ => {
                    return schema_fail(
                        path,
                        format!("main formula {main} is not a first-order existential"),
                    )
                }
            };
            check_minor_premise(path, node, &body.open_fo(witness))?;
        }
        Rule::AllFo { main, eigen } => {
            check_main_present(path, node, main)?;
            let body = match main {
                Formula::FoQuant(Quant::All, body) => body,
                _ => {
                    return schema_fail(
                        path,
                        format!("main formula {main} is not a first-order universal"),
                    )
                }
            };
            check_minor_premise(path, node, &body.open_fo(&FoTerm::FreeVar(eigen.clone())))?;
            require(!node.sequent.fo_names().contains(eigen), path, || {
                format!("eigenvariable {eigen} occurs in the lower sequent")
            })?;
        }
        Rule::Cut { formula } => {
            let negated = formula.negated();
            let left = &node.premises[0].sequent;
            let right = &node.premises[1].sequent;
            require(left.contains(&negated), path, || {
                format!("left premise lacks the cut formula's negation {negated}")
            })?;
            require(right.contains(formula), path, || {
                format!("right premise lacks the cut formula {formula}")
            })?;
            let gammas = [left.without(&negated), left.clone()];
            let deltas = [right.without(formula), right.clone()];
            let matched = gammas
                .iter()
                .any(|g| deltas.iter().any(|d| g.union(d) == node.sequent));
            require(matched, path, || {
                String::from("conclusion is not the union of the premise contexts")
            })?;
        }
        _ => return Ok(false),
    }
    Ok(true)
}

fn check_plain_rule(path: &[usize], node: &Preproof) -> Result<(), SchemaError> {
    if check_common_rule(path, node, false)? {
        return Ok(());
    }
    match &node.rule {
        Rule::ExSo { main, witness } => {
            check_main_present(path, node, main)?;
            let body = match main {
                Formula::SoQuant(Quant::Ex, None, body) => body,
                _ => {
                    return schema_fail(
                        path,
                        format!("main formula {main} is not an unindexed existential"),
                    )
                }
            };
            match witness {
                Pred::RelConst(_) | Pred::FreeSo { index: None, .. } => {}
                _ => {
                    return schema_fail(
                        path,
                        String::from("witness must be a plain predicate or free variable"),
                    )
                }
            }
            check_minor_premise(path, node, &body.open_so(SoFill::Pred(witness)))?;
        }
        Rule::AllSo { main, eigen } => {
            check_main_present(path, node, main)?;
            let body = match main {
                Formula::SoQuant(Quant::All, None, body) => body,
                _ => {
                    return schema_fail(
                        path,
                        format!("main formula {main} is not an unindexed universal"),
                    )
                }
            };
            check_minor_premise(path, node, &body.open_so(SoFill::Pred(&Pred::so(eigen.clone()))))?;
            require(!node.sequent.mentions_so(eigen), path, || {
                format!("eigenvariable {eigen} occurs in the lower sequent")
            })?;
        }
        Rule::Bi1 { main, class } | Rule::Bi2 { main, class } => {
            check_main_present(path, node, main)?;
            let body = match main {
                Formula::SoQuant(Quant::Ex, None, body) => body,
                _ => {
                    return schema_fail(
                        path,
                        format!("main formula {main} is not an unindexed existential"),
                    )
                }
            };
            if let Err(e) = class.validate() {
                return schema_fail(path, format!("ill-formed abstract: {e}"));
            }
            match &node.rule {
                Rule::Bi1 { .. } => require(main.classify().isolated(), path, || {
                    format!("main formula {main} is not isolated")
                })?,
                _ => require(class.body.classify().isolated(), path, || {
                    String::from("abstract is not isolated")
                })?,
            }
            check_minor_premise(path, node, &body.open_so(SoFill::Abs(class)))?;
        }
        Rule::Sep { left, right } => {
            let main = separation(left, right);
            check_main_present(path, node, &main)?;
            require(left.body.classify().pi, path, || {
                String::from("left abstract must be Pi")
            })?;
            require(right.body.classify().sigma, path, || {
                String::from("right abstract must be Sigma")
            })?;
            check_minor_premise(path, node, &subset(left, right))?;
        }
        _ => {
            return schema_fail(
                path,
                format!("{} is not a plain-calculus rule", node.rule.label()),
            )
        }
    }
    Ok(())
}

fn check_stratified_rule(path: &[usize], node: &Preproof) -> Result<(), SchemaError> {
    if check_common_rule(path, node, true)? {
        return Ok(());
    }
    match &node.rule {
        Rule::Thin => {
            require(
                node.premises[0].sequent.is_subset(&node.sequent),
                path,
                || String::from("thinning premise is not a subset of the conclusion"),
            )?;
        }
        Rule::Critical { main, witness } => {
            check_main_present(path, node, main)?;
            let (eta, body) = match main {
                Formula::SoQuant(Quant::Ex, Some(eta), body) => (eta, body),
                _ => {
                    return schema_fail(
                        path,
                        format!("main formula {main} is not an indexed existential"),
                    )
                }
            };
            let index = witness_index(path, witness)?;
            if *eta != OrdTerm::Inaccessible {
                require(index.is_closed(), path, || {
                    format!("witness index {index} contains variables")
                })?;
                require(compare(&index.od(), eta) == Ordering::Less, path, || {
                    format!("witness index value {} not below the type {eta}", index.od())
                })?;
            }
            check_minor_premise(path, node, &body.open_so(SoFill::Pred(witness)))?;
        }
        Rule::DistSep { left, right } => {
            let main = separation(left, right);
            check_main_present(path, node, &main)?;
            require(main.grade().over_inaccessible != 0, path, || {
                format!("main formula {main} has grade zero")
            })?;
            check_minor_premise(path, node, &subset(left, right))?;
        }
        Rule::DistEx { main, witness } => {
            check_main_present(path, node, main)?;
            let body = match main {
                Formula::SoQuant(Quant::Ex, None, body) => body,
                _ => {
                    return schema_fail(
                        path,
                        format!("main formula {main} is not an unindexed existential"),
                    )
                }
            };
            require(main.grade().over_inaccessible != 0, path, || {
                format!("main formula {main} has grade zero")
            })?;
            witness_index(path, witness)?;
            check_minor_premise(path, node, &body.open_so(SoFill::Pred(witness)))?;
        }
        Rule::Bi { main, class } => {
            check_main_present(path, node, main)?;
            let body = match main {
                Formula::SoQuant(Quant::Ex, None, body) => body,
                _ => {
                    return schema_fail(
                        path,
                        format!("main formula {main} is not an unindexed existential"),
                    )
                }
            };
            require(main.grade().over_inaccessible == 0, path, || {
                format!("main formula {main} has nonzero grade")
            })?;
            if !main.classify().pi {
                require(main.is_stratified(), path, || {
                    format!("main formula {main} outside Pi must be stratified")
                })?;
            }
            if let Err(e) = class.validate() {
                return schema_fail(path, format!("ill-formed abstract: {e}"));
            }
            check_minor_premise(path, node, &body.open_so(SoFill::Abs(class)))?;
        }
        Rule::StrongAll { main, eigen } => {
            check_main_present(path, node, main)?;
            let body = match main {
                Formula::SoQuant(Quant::All, None, body) => body,
                _ => {
                    return schema_fail(
                        path,
                        format!("main formula {main} is not an unindexed universal"),
                    )
                }
            };
            require(main.grade().over_inaccessible != 0, path, || {
                format!("main formula {main} has grade zero")
            })?;
            let marked = match main.strat_level_marked(SoClass::Pi, eigen) {
                Ok(s) => s,
                Err(e) => return schema_fail(path, format!("no level for {main}: {e}")),
            };
            let plain = match main.strat_level(SoClass::Pi) {
                Ok(s) => s,
                Err(e) => return schema_fail(path, format!("no level for {main}: {e}")),
            };
            match marked.subst_ord(eigen, &OrdTerm::Inaccessible) {
                Ok(recovered) => require(recovered == plain, path, || {
                    format!("marked level {marked} does not project onto {plain}")
                })?,
                Err(_) => {
                    return schema_fail(path, format!("marked level {marked} cannot be projected"))
                }
            }
            let witness = Pred::so_indexed(eigen.clone(), marked);
            check_minor_premise(path, node, &body.open_so(SoFill::Pred(&witness)))?;
            require(!node.sequent.mentions_so(eigen), path, || {
                format!("eigenvariable {eigen} occurs in the lower sequent")
            })?;
        }
        Rule::StrongIndexed { main, eigen } => {
            check_main_present(path, node, main)?;
            let (eta, body) = match main {
                Formula::SoQuant(Quant::All, Some(eta), body) => (eta, body),
                _ => {
                    return schema_fail(
                        path,
                        format!("main formula {main} is not an indexed universal"),
                    )
                }
            };
            let index = match Index::var(eigen.clone(), eta.clone()) {
                Ok(s) => s,
                Err(e) => return schema_fail(path, format!("bad self-index: {e}")),
            };
            let witness = Pred::so_indexed(eigen.clone(), index);
            check_minor_premise(path, node, &body.open_so(SoFill::Pred(&witness)))?;
            require(!node.sequent.mentions_so(eigen), path, || {
                format!("eigenvariable {eigen} occurs in the lower sequent")
            })?;
        }
        Rule::WeakAll { main, eigen } => {
            check_main_present(path, node, main)?;
            let body = match main {
                Formula::SoQuant(Quant::All, None, body) => body,
                _ => {
                    return schema_fail(
                        path,
                        format!("main formula {main} is not an unindexed universal"),
                    )
                }
            };
            require(main.grade().over_inaccessible == 0, path, || {
                format!("main formula {main} has nonzero grade")
            })?;
            if !main.classify().sigma {
                require(main.is_stratified(), path, || {
                    format!("main formula {main} outside Sigma must be stratified")
                })?;
            }
            let level = match main.strat_level(SoClass::Pi) {
                Ok(s) => s,
                Err(e) => return schema_fail(path, format!("no level for {main}: {e}")),
            };
            let witness = Pred::so_indexed(eigen.clone(), level);
            check_minor_premise(path, node, &body.open_so(SoFill::Pred(&witness)))?;
            require(!node.sequent.mentions_so(eigen), path, || {
                format!("eigenvariable {eigen} occurs in the lower sequent")
            })?;
        }
        Rule::Sub {
            level,
            eigen,
            replacement,
        } => {
            require(level.is_closed(), path, || {
                format!("substitution level {level} contains variables")
            })?;
            require(
                compare(&level.od(), &OrdTerm::Inaccessible) == Ordering::Less,
                path,
                || format!("substitution level {level} reaches the inaccessible"),
            )?;
            if let Err(e) = replacement.validate() {
                return schema_fail(path, format!("ill-formed abstract: {e}"));
            }
            require(replacement.body.is_stratified(), path, || {
                String::from("replacement abstract is not stratified")
            })?;
            let premise = &node.premises[0].sequent;
            let expected = premise.map(|b| {
                b.subst_so_indexed(eigen, level, SoFill::Abs(replacement))
            });
            require(expected == node.sequent, path, || {
                String::from("conclusion is not the substituted premise")
            })?;
            require(!node.sequent.mentions_so(eigen), path, || {
                format!("eigenvariable {eigen} survives in the conclusion")
            })?;
            for b in premise.formulas() {
                require(b.is_stratified(), path, || {
                    format!("premise formula {b} is not stratified")
                })?;
                let st = match b.strat_level(SoClass::Pi) {
                    Ok(s) => s,
                    Err(e) => {
                        return schema_fail(path, format!("premise formula {b} is not Pi: {e}"))
                    }
                };
                require(
                    compare(&st.od(), &level.od()) != Ordering::Greater,
                    path,
                    || format!("premise level {} exceeds the substitution level", st.od()),
                )?;
                require(!b.classify().tied.contains(eigen), path, || {
                    format!("eigenvariable {eigen} is tied in {b}")
                })?;
            }
            for b in node.sequent.formulas() {
                if let Err(e) = b.validate() {
                    return schema_fail(path, format!("substitution result {b} ill-formed: {e}"));
                }
                require(b.free_so_indexed(), path, || {
                    format!("substitution result {b} lost an index")
                })?;
            }
        }
        Rule::AllRed { eta, relabeled } | Rule::ExRed { eta, relabeled } => {
            let kind = match &node.rule {
                Rule::AllRed { .. } => Quant::All,
                _ => Quant::Ex,
            };
            require(eta.is_omega_fixpoint(), path, || {
                format!("reduction type {eta} is not a fixpoint")
            })?;
            require(
                compare(eta, &OrdTerm::Inaccessible) == Ordering::Less,
                path,
                || String::from("reduction type must lie below the inaccessible"),
            )?;
            let premise = &node.premises[0].sequent;
            for f in relabeled {
                require(premise.contains(f), path, || {
                    format!("designated formula {f} missing from the premise")
                })?;
            }
            for f in premise.formulas() {
                let small = f.is_sigma_i();
                let ok = match kind {
                    Quant::All => small || f.negated().is_sigma_i(),
                    Quant::Ex => small,
                };
                require(ok, path, || {
                    format!("premise formula {f} violates the smallness condition")
                })?;
            }
            let mut expected = Sequent::new();
            for f in premise.formulas() {
                let image = if relabeled.contains(f) {
                    match f.relabel(kind, eta) {
                        Ok(g) => g,
                        Err(e) => return schema_fail(path, format!("cannot relabel {f}: {e}")),
                    }
                } else {
                    f.clone()
                };
                expected = expected.with(image);
            }
            require(expected == node.sequent, path, || {
                String::from("conclusion is not the relabeled premise")
            })?;
        }
        _ => {
            return schema_fail(
                path,
                format!("{} is not a stratified-calculus rule", node.rule.label()),
            )
        }
    }
    Ok(())
}

/// The index a witness contributes: a predicate constant counts as zero, a
/// free variable must carry its index.
fn witness_index(path: &[usize], witness: &Pred) -> Result<Index, SchemaError> {
    match witness {
        Pred::RelConst(_) => Ok(Index::zero()),
        Pred::FreeSo {
            index: Some(s), ..
        } => Ok(s.clone()),
        Pred::FreeSo { name, index: None } => schema_fail(
            path,
            format!("witness variable {name} carries no index"),
        ),
        Pred::BoundSo(_) => schema_fail(path, String::from("witness cannot be a bound variable")),
    }
}

/// The pure variable condition: eigenvariables are pairwise distinct, never
/// occur in the end-sequent, and a variable disappearing downward across a
/// rule is that rule's eigenvariable.
pub fn check_purity(p: &Preproof) -> Result<(), SchemaError> {
    let mut seen: BTreeSet<(VarSort, String)> = BTreeSet::new();
    for (path, node) in p.nodes() {
        if let Some((sort, name)) = node.rule.eigenvariable() {
            require(seen.insert((sort, String::from(name))), &path, || {
                format!("eigenvariable {name} is reused")
            })?;
            let in_end = match sort {
                VarSort::Individual => p.sequent.fo_names().contains(name),
                VarSort::Predicate => p.sequent.mentions_so(name),
            };
            require(!in_end, &path, || {
                format!("eigenvariable {name} occurs in the end-sequent")
            })?;
        }
        let lower_fo = node.sequent.fo_names();
        let lower_so = node.sequent.so_names();
        for (i, child) in node.premises.iter().enumerate() {
            let mut at = path.clone();
            at.push(i);
            for v in child.sequent.fo_names().difference(&lower_fo) {
                require(
                    node.rule.eigenvariable() == Some((VarSort::Individual, v.as_str())),
                    &at,
                    || format!("variable {v} disappears without being the eigenvariable"),
                )?;
            }
            for v in child.sequent.so_names().difference(&lower_so) {
                require(
                    node.rule.eigenvariable() == Some((VarSort::Predicate, v.as_str())),
                    &at,
                    || format!("variable {v} disappears without being the eigenvariable"),
                )?;
            }
        }
    }
    Ok(())
}

/// Sequent height: a value in `ω·2`, either finite or `ω + k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Height {
    Fin(u32),
    /// `ω + k`.
    Omega(u32),
}

impl Height {
    pub fn is_finite(self) -> bool {
        matches!(self, Height::Fin(_))
    }

    /// The height a formula degree contributes at a cut or comprehension.
    pub fn of_degree(g: &Grades) -> Height {
        if g.over_inaccessible == 0 {
            Height::Fin(g.unfolding)
        } else {
            Height::Omega(g.over_inaccessible - 1)
        }
    }

    /// The finite distance `upper − lower` when the tower clause applies,
    /// `None` when the drop clause does (`lower < ω ≤ upper`), and an error
    /// when the height would increase downward.
    pub(crate) fn descent(upper: Height, lower: Height) -> Result<Option<u32>, ()> {
        match (upper, lower) {
            (Height::Fin(u), Height::Fin(l)) if u >= l => Ok(Some(u - l)),
            (Height::Omega(u), Height::Omega(l)) if u >= l => Ok(Some(u - l)),
            (Height::Omega(_), Height::Fin(_)) => Ok(None),
            _ => Err(()),
        }
    }
}

impl fmt::Display for Height {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Height::Fin(n) => write!(f, "{n}"),
            Height::Omega(0) => write!(f, "w"),
            Height::Omega(k) => write!(f, "w+{k}"),
        }
    }
}

/// Heights of every sequent in the tree: zero at the end-sequent and above
/// substitutions, `ω` above reductions, bumped by the degree of the cut or
/// comprehension formula, inherited otherwise.
pub fn heights(p: &Preproof) -> BTreeMap<NodePath, Height> {
    let mut out = BTreeMap::new();
    collect_heights(p, &mut Vec::new(), Height::Fin(0), &mut out);
    out
}

fn collect_heights(
    node: &Preproof,
    path: &mut NodePath,
    h: Height,
    out: &mut BTreeMap<NodePath, Height>,
) {
    out.insert(path.clone(), h);
    let upper = match &node.rule {
        Rule::Sub { .. } => Height::Fin(0),
        Rule::AllRed { .. } | Rule::ExRed { .. } => Height::Omega(0),
        Rule::Cut { formula } => h.max(Height::of_degree(&formula.grade())),
        Rule::Bi { class, .. } | Rule::Bi1 { class, .. } | Rule::Bi2 { class, .. } => {
            h.max(Height::of_degree(&class.body.grade()))
        }
        _ => h,
    };
    for (i, child) in node.premises.iter().enumerate() {
        path.push(i);
        collect_heights(child, path, upper, out);
        path.pop();
    }
}

/// Stacked ordinals for the substitution and existential-reduction rules,
/// keyed by node path. The domain must be exactly those rule occurrences.
pub type StackAssignment = BTreeMap<NodePath, OrdTerm>;

/// The computed ordinal bookkeeping of a tree under a stack assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrdinalAnnotation {
    /// `h(Δ)` per sequent.
    pub heights: BTreeMap<NodePath, Height>,
    /// `o(Δ)` per sequent.
    pub sequents: BTreeMap<NodePath, OrdTerm>,
    /// `o(J)` per rule, keyed by the rule's lower-sequent path. Leaves have
    /// no entry.
    pub rules: BTreeMap<NodePath, OrdTerm>,
}

impl OrdinalAnnotation {
    /// `o(P)`: the ordinal of the end-sequent.
    pub fn proof_ordinal(&self) -> &OrdTerm {
        &self.sequents[&NodePath::new()]
    }
}

/// A failure to carry out the ordinal assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignError {
    pub at: NodePath,
    pub message: String,
}

impl fmt::Display for AssignError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {}: {}", path_text(&self.at), self.message)
    }
}

fn assign_fail<T>(at: &[usize], message: String) -> Result<T, AssignError> {
    Err(AssignError {
        at: at.to_vec(),
        message,
    })
}

/// Computes `o(Δ)` and `o(J)` for every sequent and rule, following the
/// recursive clauses: axioms get 1, one-premise logical rules step the
/// premise ordinal, conjunctions and cuts take natural sums, comprehension
/// adds the cardinal of its level, substitutions and existential reductions
/// collapse their stacked ordinal, and height descents wrap the result in
/// `ω`-towers (or drop to zero across the `ω` boundary).
pub fn assign_ordinals(
    p: &Preproof,
    stacks: &StackAssignment,
) -> Result<OrdinalAnnotation, AssignError> {
    let mut stacked: BTreeSet<NodePath> = p
        .rule_paths(|r| matches!(r, Rule::Sub { .. } | Rule::ExRed { .. }))
        .into_iter()
        .collect();
    for key in stacks.keys() {
        if !stacked.remove(key) {
            return assign_fail(
                key,
                String::from("stack entry does not sit on a substitution or reduction"),
            );
        }
    }
    if let Some(missing) = stacked.into_iter().next() {
        return assign_fail(&missing, String::from("missing stack entry"));
    }

    let heights = heights(p);
    let mut annotation = OrdinalAnnotation {
        heights,
        sequents: BTreeMap::new(),
        rules: BTreeMap::new(),
    };
    assign_node(p, &mut Vec::new(), stacks, &mut annotation)?;
    Ok(annotation)
}

fn assign_node(
    node: &Preproof,
    path: &mut NodePath,
    stacks: &StackAssignment,
    out: &mut OrdinalAnnotation,
) -> Result<OrdTerm, AssignError> {
    let mut premise_ords = Vec::new();
    for (i, child) in node.premises.iter().enumerate() {
        path.push(i);
        premise_ords.push(assign_node(child, path, stacks, out)?);
        path.pop();
    }

    let rule_ord = match &node.rule {
        Rule::Ax { .. } => None,
        Rule::Thin | Rule::Sub { .. } | Rule::AllRed { .. } | Rule::ExRed { .. } => {
            Some(premise_ords[0].clone())
        }
        Rule::OrIntro { .. }
        | Rule::ExFo { .. }
        | Rule::AllFo { .. }
        | Rule::Critical { .. }
        | Rule::DistSep { .. }
        | Rule::DistEx { .. }
        | Rule::StrongAll { .. }
        | Rule::StrongIndexed { .. }
        | Rule::WeakAll { .. } => Some(succ(premise_ords[0].clone())),
        Rule::AndIntro { .. } | Rule::Cut { .. } => Some(natural_sum(
            premise_ords[0].clone(),
            premise_ords[1].clone(),
        )),
        Rule::Bi { main, .. } => {
            let base = match main.strat_level(SoClass::Sigma) {
                Ok(level) if main.is_stratified() => omega_index(succ(level.od()))
                    .map_err(|e| AssignError {
                        at: path.clone(),
                        message: format!("no cardinal above the comprehension level: {e}"),
                    })?,
                _ => OrdTerm::Inaccessible,
            };
            Some(natural_sum(base, premise_ords[0].clone()))
        }
        Rule::ExSo { .. } | Rule::AllSo { .. } | Rule::Bi1 { .. } | Rule::Bi2 { .. }
        | Rule::Sep { .. } => {
            return assign_fail(
                path,
                String::from("plain-calculus rules carry no ordinal assignment"),
            )
        }
    };

    let sequent_ord = match &node.rule {
        Rule::Ax { .. } => one(),
        Rule::Sub { level, .. } => {
            let gamma = &stacks[path.as_slice()];
            let sigma = Regular::omega_succ(level.od()).map_err(|e| AssignError {
                at: path.clone(),
                message: format!("no cardinal above the substitution level: {e}"),
            })?;
            let alpha = rule_ord.clone().expect("substitutions have a premise");
            psi(sigma, natural_sum(gamma.clone(), omega_pow(alpha))).map_err(|e| AssignError {
                at: path.clone(),
                message: format!("stacked collapse is invalid: {e}"),
            })?
        }
        Rule::ExRed { .. } => {
            let gamma = &stacks[path.as_slice()];
            let alpha = rule_ord.clone().expect("reductions have a premise");
            psi(
                Regular::Inaccessible,
                natural_sum(gamma.clone(), omega_pow(alpha)),
            )
            .map_err(|e| AssignError {
                at: path.clone(),
                message: format!("stacked collapse is invalid: {e}"),
            })?
        }
        _ => {
            let upper = {
                let mut up = path.clone();
                up.push(0);
                out.heights[&up]
            };
            let lower = out.heights[path.as_slice()];
            match Height::descent(upper, lower) {
                Ok(Some(m)) => omega_tower(m, rule_ord.clone().expect("non-leaf rule")),
                Ok(None) => OrdTerm::Zero,
                Err(()) => {
                    return assign_fail(
                        path,
                        format!("height increases downward ({upper} above {lower})"),
                    )
                }
            }
        }
    };

    if let Some(o) = rule_ord {
        out.rules.insert(path.clone(), o);
    }
    out.sequents.insert(path.clone(), sequent_ord.clone());
    Ok(sequent_ord)
}

/// A suitable triangle: two boundary rules whose main formulas meet, as
/// descendants, in the two premises of one cut.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triangle {
    /// Boundary rule whose main formula descends to the cut's negated side.
    pub left: NodePath,
    /// Boundary rule whose main formula descends to the cut formula itself.
    pub right: NodePath,
    pub cut: NodePath,
    pub cut_formula: Formula,
}

/// The descendant-based decomposition of a tree.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Structure {
    /// Formula occurrences that descend into a cut formula.
    pub implicit: BTreeSet<(NodePath, Formula)>,
    /// Sequents reachable from below through explicit rules and thinning.
    pub explicit_part: BTreeSet<NodePath>,
    /// Sequents sitting just outside the explicit part.
    pub bar_sequents: BTreeSet<NodePath>,
    /// For each bar sequent, the sequents of its end-piece.
    pub end_pieces: BTreeMap<NodePath, BTreeSet<NodePath>>,
    /// Implicit rules whose lower sequent lies in an end-piece.
    pub boundary_rules: BTreeSet<NodePath>,
    pub suitable_triangles: Vec<Triangle>,
}

/// How a formula of an upper sequent continues in the lower sequent:
/// substitutions and reductions transform it, everything else keeps it.
pub(crate) fn context_image(rule: &Rule, phi: &Formula) -> Formula {
    match rule {
        Rule::Sub {
            level,
            eigen,
            replacement,
        } => phi.subst_so_indexed(eigen, level, SoFill::Abs(replacement)),
        Rule::AllRed { eta, relabeled } if relabeled.contains(phi) => phi
            .relabel(Quant::All, eta)
            .unwrap_or_else(|_| phi.clone()),
        Rule::ExRed { eta, relabeled } if relabeled.contains(phi) => phi
            .relabel(Quant::Ex, eta)
            .unwrap_or_else(|_| phi.clone()),
        _ => phi.clone(),
    }
}

/// The minor formula a rule adds to the given premise, with its main
/// formula, when the rule has one.
pub(crate) fn minor_formula(node: &Preproof, premise: usize) -> Option<(Formula, Formula)> {
    let minor = match &node.rule {
        Rule::OrIntro {
            main: Formula::Or(a, b),
            side,
        } => Some(if *side == 0 {
            a.as_ref().clone()
        } else {
            b.as_ref().clone()
        }),
        Rule::AndIntro {
            main: Formula::And(a, b),
        } => Some(if premise == 0 {
            a.as_ref().clone()
        } else {
            b.as_ref().clone()
        }),
        Rule::ExFo {
            main: Formula::FoQuant(Quant::Ex, body),
            witness,
        } => Some(body.open_fo(witness)),
        Rule::AllFo {
            main: Formula::FoQuant(Quant::All, body),
            eigen,
        } => Some(body.open_fo(&FoTerm::FreeVar(eigen.clone()))),
        Rule::ExSo { main, witness }
        | Rule::Critical { main, witness }
        | Rule::DistEx { main, witness } => match main {
            Formula::SoQuant(Quant::Ex, _, body) => Some(body.open_so(SoFill::Pred(witness))),
            _ => None,
        },
        Rule::AllSo {
            main: Formula::SoQuant(Quant::All, None, body),
            eigen,
        } => Some(body.open_so(SoFill::Pred(&Pred::so(eigen.clone())))),
        Rule::Bi1 { main, class } | Rule::Bi2 { main, class } | Rule::Bi { main, class } => {
            match main {
                Formula::SoQuant(Quant::Ex, None, body) => {
                    Some(body.open_so(SoFill::Abs(class)))
                }
                _ => None,
            }
        }
        Rule::Sep { left, right } | Rule::DistSep { left, right } => Some(subset(left, right)),
        Rule::StrongAll { main, eigen } => match main {
            Formula::SoQuant(Quant::All, None, body) => {
                let s = main.strat_level_marked(SoClass::Pi, eigen).ok()?;
                Some(body.open_so(SoFill::Pred(&Pred::so_indexed(eigen.clone(), s))))
            }
            _ => None,
        },
        Rule::StrongIndexed {
            main: Formula::SoQuant(Quant::All, Some(eta), body),
            eigen,
        } => {
            let s = Index::var(eigen.clone(), eta.clone()).ok()?;
            Some(body.open_so(SoFill::Pred(&Pred::so_indexed(eigen.clone(), s))))
        }
        Rule::WeakAll { main, eigen } => match main {
            Formula::SoQuant(Quant::All, None, body) => {
                let s = main.strat_level(SoClass::Pi).ok()?;
                Some(body.open_so(SoFill::Pred(&Pred::so_indexed(eigen.clone(), s))))
            }
            _ => None,
        },
        _ => None,
    };
    minor.zip(node.rule.main_formula())
}

/// Immediate descendants in the node's own sequent of a formula sitting in
/// the given premise: the (possibly transformed) context copy if it
/// survives, and the main formula if the formula is the rule's minor.
fn immediate_descendants(node: &Preproof, premise: usize, phi: &Formula) -> Vec<Formula> {
    let mut out = Vec::new();
    let image = context_image(&node.rule, phi);
    if node.sequent.contains(&image) {
        out.push(image);
    }
    if let Some((minor, main)) = minor_formula(node, premise) {
        if minor == *phi && !out.contains(&main) {
            out.push(main);
        }
    }
    out
}

/// Whether the formula occurrence in the given premise is a designated cut
/// formula.
fn is_cut_occurrence(node: &Preproof, premise: usize, phi: &Formula) -> bool {
    match &node.rule {
        Rule::Cut { formula } => {
            (premise == 0 && *phi == formula.negated()) || (premise == 1 && *phi == *formula)
        }
        _ => false,
    }
}

/// All occurrences a formula occurrence turns into further down, itself
/// included, keyed by sequent path.
pub fn descendants(
    p: &Preproof,
    at: &[usize],
    phi: &Formula,
) -> BTreeMap<NodePath, BTreeSet<Formula>> {
    let mut out = BTreeMap::new();
    let mut current: BTreeSet<Formula> = BTreeSet::new();
    current.insert(phi.clone());
    out.insert(at.to_vec(), current.clone());
    for cut in (1..=at.len()).rev() {
        let parent_path = &at[..cut - 1];
        let premise = at[cut - 1];
        let parent = match p.node_at(parent_path) {
            Some(n) => n,
            None => break,
        };
        let mut next = BTreeSet::new();
        for f in &current {
            next.extend(immediate_descendants(parent, premise, f));
        }
        if next.is_empty() {
            break;
        }
        out.insert(parent_path.to_vec(), next.clone());
        current = next;
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RuleRole {
    Explicit,
    Implicit,
    /// No main formula: axioms, cuts, thinning, substitutions, reductions.
    Neutral,
}

/// Performs the full descendant analysis of the tree.
pub fn structure(p: &Preproof) -> Structure {
    let mut st = Structure::default();

    // Implicit occurrences, walking away from the root: an occurrence is
    // implicit when it is a cut formula or some immediate descendant is.
    let mut stack: Vec<(NodePath, &Preproof, BTreeSet<Formula>)> =
        alloc::vec![(NodePath::new(), p, BTreeSet::new())];
    while let Some((path, node, implicit_here)) = stack.pop() {
        for (i, child) in node.premises.iter().enumerate() {
            let mut child_path = path.clone();
            child_path.push(i);
            let mut implicit_child = BTreeSet::new();
            for phi in child.sequent.formulas() {
                let implicit = is_cut_occurrence(node, i, phi)
                    || immediate_descendants(node, i, phi)
                        .iter()
                        .any(|psi| implicit_here.contains(psi));
                if implicit {
                    implicit_child.insert(phi.clone());
                    st.implicit.insert((child_path.clone(), phi.clone()));
                }
            }
            stack.push((child_path, child, implicit_child));
        }
    }

    let nodes = p.nodes();
    let role = |path: &NodePath, node: &Preproof| -> RuleRole {
        match node.rule.main_formula() {
            None => RuleRole::Neutral,
            Some(main) => {
                if st.implicit.contains(&(path.clone(), main)) {
                    RuleRole::Implicit
                } else {
                    RuleRole::Explicit
                }
            }
        }
    };
    let roles: BTreeMap<NodePath, RuleRole> = nodes
        .iter()
        .map(|(path, node)| (path.clone(), role(path, node)))
        .collect();
    let passes = |path: &NodePath| -> bool {
        roles[path] == RuleRole::Explicit
            || matches!(p.node_at(path).expect("listed node").rule, Rule::Thin)
    };

    // Explicit part: every rule strictly below passes, and the node itself
    // is an axiom leaf or the lower sequent of a passing rule.
    for (path, node) in &nodes {
        let below_ok = (0..path.len()).all(|k| passes(&path[..k].to_vec()));
        let here_ok = matches!(node.rule, Rule::Ax { .. }) || passes(path);
        if below_ok && here_ok {
            st.explicit_part.insert(path.clone());
        }
    }

    // Bar sequents: outside the explicit part, either the end-sequent or
    // directly above it.
    for (path, _) in &nodes {
        if st.explicit_part.contains(path) {
            continue;
        }
        let is_bar = if path.is_empty() {
            true
        } else {
            let parent = path[..path.len() - 1].to_vec();
            st.explicit_part.contains(&parent)
        };
        if is_bar {
            st.bar_sequents.insert(path.clone());
        }
    }

    // End-pieces grow upward through everything but implicit rules.
    for bar in &st.bar_sequents {
        let mut members = BTreeSet::new();
        let mut queue = alloc::vec![bar.clone()];
        while let Some(path) = queue.pop() {
            if !members.insert(path.clone()) {
                continue;
            }
            let node = p.node_at(&path).expect("listed node");
            if roles[&path] != RuleRole::Implicit {
                for i in 0..node.premises.len() {
                    let mut up = path.clone();
                    up.push(i);
                    queue.push(up);
                }
            }
        }
        st.end_pieces.insert(bar.clone(), members);
    }

    let in_end_piece = |path: &NodePath| st.end_pieces.values().any(|m| m.contains(path));

    for (path, _) in &nodes {
        if roles[path] == RuleRole::Implicit && in_end_piece(path) {
            st.boundary_rules.insert(path.clone());
        }
    }

    // Suitable triangles: boundary mains meeting in one cut's premises.
    for (cut_path, node) in &nodes {
        let cut_formula = match &node.rule {
            Rule::Cut { formula } => formula.clone(),
            _ => continue,
        };
        let negated = cut_formula.negated();
        if node.sequent.contains(&cut_formula) || node.sequent.contains(&negated) {
            continue;
        }
        let mut left_path = cut_path.clone();
        left_path.push(0);
        let mut right_path = cut_path.clone();
        right_path.push(1);
        let reaches = |boundary: &NodePath, target_path: &NodePath, target: &Formula| -> bool {
            if boundary.len() < target_path.len() || boundary[..target_path.len()] != *target_path
            {
                return false;
            }
            let main = p
                .node_at(boundary)
                .and_then(|n| n.rule.main_formula())
                .expect("boundary rules have main formulas");
            descendants(p, boundary, &main)
                .get(target_path)
                .is_some_and(|set| set.contains(target))
        };
        for left in &st.boundary_rules {
            if !reaches(left, &left_path, &negated) {
                continue;
            }
            for right in &st.boundary_rules {
                if !reaches(right, &right_path, &cut_formula) {
                    continue;
                }
                st.suitable_triangles.push(Triangle {
                    left: left.clone(),
                    right: right.clone(),
                    cut: cut_path.clone(),
                    cut_formula: cut_formula.clone(),
                });
            }
        }
    }

    st
}

/// A violated proof condition, numbered as in the global definition;
/// condition 0 covers schema, assignment, and derived-invariant failures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofError {
    pub at: NodePath,
    pub condition: u32,
    pub message: String,
}

impl fmt::Display for ProofError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "condition {} at {}: {}",
            self.condition,
            path_text(&self.at),
            self.message
        )
    }
}

fn proof_fail<T>(at: &[usize], condition: u32, message: String) -> Result<T, ProofError> {
    Err(ProofError {
        at: at.to_vec(),
        condition,
        message,
    })
}

/// The collapse term used as a hull cutoff; validity is what the hull
/// checks decide, so the constructor stays ungated.
fn raw_psi(sigma: Regular, arg: OrdTerm) -> OrdTerm {
    OrdTerm::Psi(sigma, alloc::boxed::Box::new(arg))
}

fn is_vacuous_ex_red(node: &Preproof) -> bool {
    match &node.rule {
        Rule::ExRed { relabeled, .. } => {
            relabeled.is_empty()
                && node
                    .premises
                    .first()
                    .is_some_and(|up| up.sequent == node.sequent)
        }
        _ => false,
    }
}

fn is_vacuous_level_zero_sub(node: &Preproof) -> bool {
    match &node.rule {
        Rule::Sub { level, eigen, .. } => {
            level.od().is_zero()
                && !node.sequent.mentions_so(eigen)
                && node
                    .premises
                    .first()
                    .is_some_and(|up| up.sequent == node.sequent)
        }
        _ => false,
    }
}

/// Verifies the global proof conditions for the tree under the given stack
/// assignment and returns the ordinal annotation on success.
pub fn check_proof(
    p: &Preproof,
    stacks: &StackAssignment,
) -> Result<OrdinalAnnotation, ProofError> {
    if let Err(e) = check_preproof(p) {
        return proof_fail(&e.at, 0, e.message);
    }
    let annotation = match assign_ordinals(p, stacks) {
        Ok(a) => a,
        Err(e) => return proof_fail(&e.at, 0, e.message),
    };
    let st = structure(p);
    let nodes = p.nodes();

    // Condition 1: a first-order, stratified, level-zero end-sequent.
    for a in p.sequent.formulas() {
        if !a.is_first_order() {
            return proof_fail(&[], 1, format!("end-sequent formula {a} is not first-order"));
        }
        if !a.is_stratified() {
            return proof_fail(&[], 1, format!("end-sequent formula {a} is not stratified"));
        }
        match a.strat_level(SoClass::Pi) {
            Ok(level) if level.od().is_zero() => {}
            Ok(level) => {
                return proof_fail(
                    &[],
                    1,
                    format!("end-sequent formula {a} has level {}", level.od()),
                )
            }
            Err(e) => return proof_fail(&[], 1, format!("end-sequent formula {a}: {e}")),
        }
    }

    // Condition 2: height crossings happen only at vacuous existential
    // reductions, and reductions come in unbroken series, universals above
    // existentials.
    for (path, node) in &nodes {
        if node.premises.is_empty() {
            continue;
        }
        let mut up = path.clone();
        up.push(0);
        let crossing =
            !annotation.heights[&up].is_finite() && annotation.heights[path].is_finite();
        if crossing && !is_vacuous_ex_red(node) {
            return proof_fail(
                path,
                2,
                format!(
                    "{} crosses the height boundary but is not a vacuous existential reduction",
                    node.rule.label()
                ),
            );
        }
    }
    let red_paths: BTreeSet<NodePath> = p
        .rule_paths(Rule::is_reduction)
        .into_iter()
        .collect();
    for upper in &red_paths {
        for lower in &red_paths {
            if lower.len() >= upper.len() || upper[..lower.len()] != lower[..] {
                continue;
            }
            for k in lower.len() + 1..upper.len() {
                let between = upper[..k].to_vec();
                if !red_paths.contains(&between) {
                    return proof_fail(
                        &between,
                        2,
                        String::from("a non-reduction rule interrupts a reduction series"),
                    );
                }
            }
        }
    }
    for path in &red_paths {
        // Only inspect each maximal series once, from its bottom rule.
        if !path.is_empty() && red_paths.contains(&path[..path.len() - 1]) {
            continue;
        }
        let mut current = path.clone();
        let mut seen_universal_above = false;
        let mut series = Vec::new();
        loop {
            let node = p.node_at(&current).expect("listed node");
            series.push((current.clone(), matches!(node.rule, Rule::AllRed { .. })));
            current.push(0);
            if !red_paths.contains(&current) {
                break;
            }
        }
        // `series` runs bottom-to-top; universals must sit above
        // existentials, so after the first universal no existential may
        // follow.
        for (at, is_universal) in series {
            if seen_universal_above && !is_universal {
                return proof_fail(
                    &at,
                    2,
                    String::from("an existential reduction sits above a universal one"),
                );
            }
            seen_universal_above |= is_universal;
        }
    }

    // Conditions 3 and 4: hull closure of everything above a collapse, and
    // the reduction type dominating its collapse value.
    for (path, node) in &nodes {
        let (gamma, sigma) = match &node.rule {
            Rule::Sub { level, .. } => {
                let sigma = Regular::omega_succ(level.od()).map_err(|e| ProofError {
                    at: path.clone(),
                    condition: 3,
                    message: format!("no cardinal above the substitution level: {e}"),
                })?;
                (&stacks[path.as_slice()], sigma)
            }
            Rule::ExRed { .. } => (&stacks[path.as_slice()], Regular::Inaccessible),
            _ => continue,
        };
        let cutoff = raw_psi(sigma, gamma.clone());
        let mut up = path.clone();
        up.push(0);
        let alpha = &annotation.sequents[&up];
        for (which, value) in [("stack", gamma), ("premise ordinal", alpha)] {
            if !in_hull(value, gamma, &cutoff) {
                return proof_fail(
                    path,
                    3,
                    format!("{which} {value} escapes the hull below the stack"),
                );
            }
        }
        let upper_node = p.node_at(&up).expect("premise exists");
        for (rel_path, above) in upper_node.nodes() {
            let mut abs_path = up.clone();
            abs_path.extend(rel_path);
            let mut indices: BTreeSet<OrdTerm> = BTreeSet::new();
            for f in above.sequent.formulas() {
                indices.extend(f.index_fixpoints());
            }
            if let Rule::ExRed { eta, .. } = &above.rule {
                indices.insert(eta.clone());
                indices.insert(annotation.sequents[&abs_path].clone());
            }
            for s in indices {
                if !in_hull(&s, gamma, &cutoff) {
                    return proof_fail(
                        path,
                        3,
                        format!(
                            "index {s} above the rule (at {}) escapes the hull",
                            path_text(&abs_path)
                        ),
                    );
                }
            }
        }
        if let Rule::ExRed { eta, .. } = &node.rule {
            let value = &annotation.sequents[path.as_slice()];
            if compare(eta, value) == Ordering::Less {
                return proof_fail(
                    path,
                    4,
                    format!("reduction type {eta} lies below its collapse value {value}"),
                );
            }
        }
    }

    // Condition 5: substitutions live in end-pieces.
    for path in p.rule_paths(|r| matches!(r, Rule::Sub { .. })) {
        let inside = st.end_pieces.values().any(|m| m.contains(&path));
        if !inside {
            return proof_fail(&path, 5, String::from("substitution outside every end-piece"));
        }
    }

    // Condition 6: the substitution eigenvariable avoids explicit premise
    // formulas.
    for (path, node) in &nodes {
        if let Rule::Sub { eigen, .. } = &node.rule {
            let mut up = path.clone();
            up.push(0);
            for phi in node.premises[0].sequent.formulas() {
                let implicit = st.implicit.contains(&(up.clone(), phi.clone()));
                if !implicit && phi.mentions_so(eigen) {
                    return proof_fail(
                        path,
                        6,
                        format!("eigenvariable {eigen} occurs in the explicit formula {phi}"),
                    );
                }
            }
        }
    }

    // Condition 7: every bar sequent concludes a vacuous level-zero
    // substitution.
    for bar in &st.bar_sequents {
        let node = p.node_at(bar).expect("listed node");
        if !is_vacuous_level_zero_sub(node) {
            return proof_fail(
                bar,
                7,
                format!(
                    "bar sequent concludes {} instead of a vacuous level-zero substitution",
                    node.rule.label()
                ),
            );
        }
    }

    // Derived invariants, reported as condition 0: finite height forces
    // grade zero, and the ordinal above a substitution is a variable-free
    // value below the inaccessible.
    for (path, node) in &nodes {
        if annotation.heights[path].is_finite() {
            for a in node.sequent.formulas() {
                if a.grade().over_inaccessible != 0 {
                    return proof_fail(
                        path,
                        0,
                        format!("formula {a} of infinite degree at finite height"),
                    );
                }
            }
        }
        if matches!(node.rule, Rule::Sub { .. }) {
            let mut up = path.clone();
            up.push(0);
            let alpha = &annotation.sequents[&up];
            if compare(alpha, &OrdTerm::Inaccessible) != Ordering::Less {
                return proof_fail(
                    path,
                    0,
                    format!("ordinal {alpha} above a substitution reaches the inaccessible"),
                );
            }
        }
    }

    Ok(annotation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordinal::finite;

    fn rel(t: FoTerm) -> Formula {
        Formula::lit(true, Pred::canonical_rel(), t)
    }

    fn not_rel(t: FoTerm) -> Formula {
        Formula::lit(false, Pred::canonical_rel(), t)
    }

    fn prime_pair() -> Sequent {
        Sequent::of([rel(FoTerm::c()), not_rel(FoTerm::c())])
    }

    fn psi_i(arg: OrdTerm) -> OrdTerm {
        psi(Regular::Inaccessible, arg).expect("collapse at I")
    }

    fn cut_of_axioms() -> Preproof {
        let axiom = Preproof::leaf(
            prime_pair(),
            Rule::Ax {
                formula: rel(FoTerm::c()),
            },
        );
        Preproof::new(
            prime_pair(),
            Rule::Cut {
                formula: rel(FoTerm::c()),
            },
            alloc::vec![axiom.clone(), axiom],
        )
    }

    /// Wraps a tree in a vacuous level-zero substitution, the shape the
    /// global conditions demand at a bar sequent.
    fn under_vacuous_sub(tree: Preproof, eigen: &str) -> Preproof {
        let sequent = tree.sequent.clone();
        Preproof::new(
            sequent,
            Rule::Sub {
                level: Index::zero(),
                eigen: Name::from(eigen),
                replacement: Abstract::new(rel(FoTerm::Bound(0))),
            },
            alloc::vec![tree],
        )
    }

    #[test]
    fn cut_of_axioms_matches_the_plain_schema() {
        let p = cut_of_axioms();
        assert_eq!(check_sbl(&p), Ok(()));
        // The same tree is also a stratified preproof: its formulas are
        // first-order and the axiom grade is zero.
        assert_eq!(check_preproof(&p), Ok(()));
    }

    #[test]
    fn eigenvariable_in_the_lower_sequent_rejects() {
        let main = Formula::fo(Quant::All, rel(FoTerm::Bound(0)));
        let lower = Sequent::of([main.clone(), rel(FoTerm::FreeVar(String::from("a")))]);
        let upper = lower.with(rel(FoTerm::FreeVar(String::from("a"))));
        let p = Preproof::new(
            lower,
            Rule::AllFo {
                main,
                eigen: String::from("a"),
            },
            alloc::vec![Preproof::leaf(
                upper,
                Rule::Ax {
                    formula: rel(FoTerm::FreeVar(String::from("a"))),
                },
            )],
        );
        let err = check_sbl(&p).unwrap_err();
        assert!(err.message.contains("eigenvariable"), "{err}");
    }

    #[test]
    fn stratified_axiom_requires_grade_zero() {
        let big = Formula::so_indexed(
            Quant::All,
            OrdTerm::Inaccessible,
            Formula::lit(true, Pred::BoundSo(0), FoTerm::c()),
        )
        .unwrap();
        let seq = Sequent::of([big.clone(), big.negated()]);
        let p = Preproof::leaf(seq, Rule::Ax { formula: big });
        let err = check_preproof(&p).unwrap_err();
        assert!(err.message.contains("grade"), "{err}");
    }

    #[test]
    fn critical_rule_bounds_the_witness_index() {
        let eta = psi_i(OrdTerm::Zero);
        let body = Formula::lit(true, Pred::BoundSo(0), FoTerm::c());
        let main = Formula::so_indexed(Quant::Ex, eta.clone(), body.clone()).unwrap();
        let big = psi_i(one());
        let build = |index: Index| {
            let witness = Pred::so_indexed("T", index);
            let minor = body.open_so(SoFill::Pred(&witness));
            let lower = Sequent::of([
                main.clone(),
                Formula::lit(true, Pred::so_indexed("T", Index::zero()), FoTerm::c()),
            ]);
            // Keep the witness variable visible below so that purity holds.
            let upper = lower.with(minor);
            Preproof::new(
                lower,
                Rule::Critical {
                    main: main.clone(),
                    witness,
                },
                alloc::vec![Preproof::leaf(
                    upper,
                    Rule::Ax {
                        formula: rel(FoTerm::c()),
                    },
                )],
            )
        };
        // A witness below the type is fine once the axiom leaf holds its
        // prime pair; here the leaf lacks it, so only the index condition
        // is probed via the error message.
        let err = check_preproof(&build(Index::fix(big).unwrap())).unwrap_err();
        assert!(err.message.contains("not below the type"), "{err}");
    }

    #[test]
    fn weak_rule_recomputes_the_level() {
        // all X (Xc | U^0 c): grade zero, in Sigma, level 0.
        let body = Formula::or(
            Formula::lit(true, Pred::BoundSo(0), FoTerm::c()),
            Formula::lit(true, Pred::so_indexed("U", Index::zero()), FoTerm::c()),
        );
        let main = Formula::so(Quant::All, body.clone());
        let level = main.strat_level(SoClass::Pi).unwrap();
        let build = |index: Index| {
            let minor = body.open_so(SoFill::Pred(&Pred::so_indexed("V", index)));
            let lower = prime_pair()
                .with(main.clone())
                .with(Formula::lit(
                    true,
                    Pred::so_indexed("U", Index::zero()),
                    FoTerm::c(),
                ));
            let upper = lower.with(minor);
            Preproof::new(
                lower,
                Rule::WeakAll {
                    main: main.clone(),
                    eigen: Name::from("V"),
                },
                alloc::vec![Preproof::leaf(
                    upper,
                    Rule::Ax {
                        formula: rel(FoTerm::c()),
                    },
                )],
            )
        };
        assert_eq!(check_preproof(&build(level.clone())), Ok(()));
        let err = check_preproof(&build(level.succ())).unwrap_err();
        assert!(err.message.contains("must extend"), "{err}");
    }

    #[test]
    fn strong_rule_hands_out_the_marked_level() {
        // all X all Y^I (Yc | Xc): grade over the inaccessible, Pi.
        let inner = Formula::SoQuant(
            Quant::All,
            Some(OrdTerm::Inaccessible),
            alloc::boxed::Box::new(Formula::or(
                Formula::lit(true, Pred::BoundSo(0), FoTerm::c()),
                Formula::lit(true, Pred::BoundSo(1), FoTerm::c()),
            )),
        );
        let main = Formula::so(Quant::All, inner.clone());
        assert_ne!(main.grade().over_inaccessible, 0);
        let marked = main.strat_level_marked(SoClass::Pi, "U").unwrap();
        let minor = inner.open_so(SoFill::Pred(&Pred::so_indexed("U", marked)));
        let lower = Sequent::of([main.clone()]);
        let upper = lower.with(minor.clone());
        let good = Preproof::new(
            lower.clone(),
            Rule::StrongAll {
                main: main.clone(),
                eigen: Name::from("U"),
            },
            alloc::vec![Preproof::leaf(upper, Rule::Ax { formula: minor })],
        );
        // The axiom leaf's formula has nonzero grade, so full checking
        // still fails there; the strong rule itself is what we inspect.
        assert_eq!(check_stratified_rule(&[], &good), Ok(()));

        let plain = main.strat_level(SoClass::Pi).unwrap();
        let wrong_minor = inner.open_so(SoFill::Pred(&Pred::so_indexed("U", plain)));
        let bad = Preproof::new(
            lower.clone(),
            Rule::StrongAll {
                main: main.clone(),
                eigen: Name::from("U"),
            },
            alloc::vec![Preproof::leaf(
                lower.with(wrong_minor.clone()),
                Rule::Ax {
                    formula: wrong_minor,
                },
            )],
        );
        let err = check_stratified_rule(&[], &bad).unwrap_err();
        assert!(err.message.contains("must extend"), "{err}");
    }

    #[test]
    fn substitution_transforms_the_context() {
        // Premise holds U^0 c | Rc; the conclusion replaces U^0 by the
        // abstract {x : Rx}.
        let u_lit = Formula::lit(true, Pred::so_indexed("U", Index::zero()), FoTerm::c());
        let b = Formula::or(u_lit, rel(FoTerm::c()));
        let replacement = Abstract::new(rel(FoTerm::Bound(0)));
        let lower = Sequent::of([Formula::or(rel(FoTerm::c()), rel(FoTerm::c()))]);
        let upper = Sequent::of([b.clone()]);
        let p = Preproof::new(
            lower,
            Rule::Sub {
                level: Index::zero(),
                eigen: Name::from("U"),
                replacement: replacement.clone(),
            },
            alloc::vec![Preproof::leaf(
                upper.clone(),
                Rule::Ax {
                    formula: rel(FoTerm::c()),
                },
            )],
        );
        // Schema passes; the axiom leaf is missing its pair but that is a
        // different node's complaint.
        assert_eq!(check_stratified_rule(&[], &p), Ok(()));

        // A premise whose level exceeds the substitution level rejects;
        // the offending variable is a bystander, not the eigenvariable.
        let tall = Formula::lit(
            true,
            Pred::so_indexed("W", Index::fix(psi_i(OrdTerm::Zero)).unwrap()),
            FoTerm::c(),
        );
        let p = Preproof::new(
            Sequent::of([tall.clone()]),
            Rule::Sub {
                level: Index::zero(),
                eigen: Name::from("U"),
                replacement,
            },
            alloc::vec![Preproof::leaf(
                Sequent::of([tall]),
                Rule::Ax {
                    formula: rel(FoTerm::c()),
                },
            )],
        );
        let err = check_stratified_rule(&[], &p).unwrap_err();
        assert!(err.message.contains("exceeds the substitution level"), "{err}");
    }

    #[test]
    fn reductions_relabel_designated_formulas() {
        let eta = psi_i(OrdTerm::Zero);
        let body = Formula::lit(true, Pred::BoundSo(0), FoTerm::c());
        let big_all = Formula::so_indexed(Quant::All, OrdTerm::Inaccessible, body.clone()).unwrap();
        let relabeled = big_all.relabel(Quant::All, &eta).unwrap();
        let upper = Sequent::of([big_all.clone(), rel(FoTerm::c())]);
        let lower = Sequent::of([relabeled, rel(FoTerm::c())]);
        let p = Preproof::new(
            lower,
            Rule::AllRed {
                eta: eta.clone(),
                relabeled: [big_all.clone()].into_iter().collect(),
            },
            alloc::vec![Preproof::leaf(
                upper.clone(),
                Rule::Ax {
                    formula: rel(FoTerm::c()),
                },
            )],
        );
        // ¬(all X^I Xc) = ex X^I ¬Xc is small, so the smallness condition
        // holds for the universal reduction.
        assert_eq!(check_stratified_rule(&[], &p), Ok(()));

        // The existential reduction wants every premise formula small;
        // a universal over the inaccessible is not.
        let p = Preproof::new(
            upper.clone(),
            Rule::ExRed {
                eta,
                relabeled: BTreeSet::new(),
            },
            alloc::vec![Preproof::leaf(
                upper,
                Rule::Ax {
                    formula: rel(FoTerm::c()),
                },
            )],
        );
        let err = check_stratified_rule(&[], &p).unwrap_err();
        assert!(err.message.contains("smallness"), "{err}");
    }

    #[test]
    fn purity_rejects_reuse_and_end_sequent_leaks() {
        let body = Formula::or(
            Formula::lit(true, Pred::BoundSo(0), FoTerm::c()),
            rel(FoTerm::c()),
        );
        let main = Formula::so(Quant::All, body.clone());
        let level = main.strat_level(SoClass::Pi).unwrap();
        let minor = |name: &str| body.open_so(SoFill::Pred(&Pred::so_indexed(name, level.clone())));
        let lower = Sequent::of([main.clone()]);
        let step = |name: &str, tree: Preproof| {
            Preproof::new(
                tree.sequent.clone(),
                Rule::WeakAll {
                    main: main.clone(),
                    eigen: Name::from(name),
                },
                alloc::vec![tree],
            )
        };
        let leaf = |name: &str| {
            Preproof::leaf(
                lower.with(minor(name)),
                Rule::Ax {
                    formula: rel(FoTerm::c()),
                },
            )
        };
        // Two weak rules with the same eigenvariable stacked: distinctness
        // fails. (Each rule's own schema is fine.)
        let reused = Preproof::new(
            lower.clone(),
            Rule::WeakAll {
                main: main.clone(),
                eigen: Name::from("V"),
            },
            alloc::vec![step("V", leaf("V"))],
        );
        let err = check_purity(&reused).unwrap_err();
        assert!(err.message.contains("reused"), "{err}");

        // An eigenvariable visible in the end-sequent fails.
        let leaky = Preproof::new(
            lower.with(Formula::lit(
                true,
                Pred::so_indexed("V", Index::zero()),
                FoTerm::c(),
            )),
            Rule::WeakAll {
                main: main.clone(),
                eigen: Name::from("V"),
            },
            alloc::vec![leaf("V")],
        );
        let err = check_purity(&leaky).unwrap_err();
        assert!(err.message.contains("end-sequent"), "{err}");
    }

    #[test]
    fn heights_follow_the_five_clauses() {
        // A cut on a degree-3 formula: three first-order quantifiers.
        let mut deep = rel(FoTerm::c());
        for _ in 0..3 {
            deep = Formula::fo(Quant::Ex, deep);
        }
        assert_eq!(Height::of_degree(&deep.grade()), Height::Fin(3));
        let leaf = |seq: Sequent| {
            Preproof::leaf(
                seq,
                Rule::Ax {
                    formula: rel(FoTerm::c()),
                },
            )
        };
        let cut = Preproof::new(
            prime_pair(),
            Rule::Cut {
                formula: deep.clone(),
            },
            alloc::vec![
                leaf(prime_pair().with(deep.negated())),
                leaf(prime_pair().with(deep)),
            ],
        );
        let p = under_vacuous_sub(cut, "U0");
        let h = heights(&p);
        assert_eq!(h[&alloc::vec![]], Height::Fin(0));
        assert_eq!(h[&alloc::vec![0]], Height::Fin(0), "upper sequent of a substitution");
        assert_eq!(h[&alloc::vec![0, 0]], Height::Fin(3), "cut bumps by the degree");
        assert_eq!(h[&alloc::vec![0, 1]], Height::Fin(3));
    }

    #[test]
    fn ordinal_assignment_walks_the_clauses() {
        let p = under_vacuous_sub(cut_of_axioms(), "U0");
        let stacks: StackAssignment = [(alloc::vec![], OrdTerm::Zero)].into_iter().collect();
        let a = assign_ordinals(&p, &stacks).unwrap();
        // Axioms get 1, the cut sums to 2 with no height drop, and the
        // vacuous substitution collapses 0 # w^2 at the first cardinal.
        assert_eq!(a.sequents[&alloc::vec![0, 0]], one());
        assert_eq!(a.sequents[&alloc::vec![0]], finite(2));
        let expected = psi(
            Regular::omega_succ(OrdTerm::Zero).unwrap(),
            omega_pow(finite(2)),
        )
        .unwrap();
        assert_eq!(*a.proof_ordinal(), expected);
        assert_eq!(
            compare(a.proof_ordinal(), &omega_index(one()).unwrap()),
            Ordering::Less,
            "proof ordinals stay below the first cardinal"
        );
    }

    #[test]
    fn missing_or_stray_stack_entries_are_rejected() {
        let p = under_vacuous_sub(cut_of_axioms(), "U0");
        let err = assign_ordinals(&p, &StackAssignment::new()).unwrap_err();
        assert!(err.message.contains("missing"), "{err}");
        let stray: StackAssignment = [
            (alloc::vec![], OrdTerm::Zero),
            (alloc::vec![0], OrdTerm::Zero),
        ]
        .into_iter()
        .collect();
        let err = assign_ordinals(&p, &stray).unwrap_err();
        assert!(err.message.contains("does not sit"), "{err}");
    }

    #[test]
    fn crossing_the_height_boundary_drops_to_zero() {
        // A vacuous universal reduction: its upper sequent has height w,
        // the lower 0, so the tower clause gives way to the drop.
        let eta = psi_i(OrdTerm::Zero);
        let seq = prime_pair();
        let p = Preproof::new(
            seq.clone(),
            Rule::AllRed {
                eta,
                relabeled: BTreeSet::new(),
            },
            alloc::vec![Preproof::leaf(
                seq,
                Rule::Ax {
                    formula: rel(FoTerm::c()),
                },
            )],
        );
        assert_eq!(check_preproof(&p), Ok(()));
        let a = assign_ordinals(&p, &StackAssignment::new()).unwrap();
        assert_eq!(*a.proof_ordinal(), OrdTerm::Zero);
        // But the global conditions reject it: the crossing rule is not a
        // vacuous existential reduction.
        let err = check_proof(&p, &StackAssignment::new()).unwrap_err();
        assert_eq!(err.condition, 2);
    }

    #[test]
    fn explicit_trees_have_no_bar_sequents() {
        // Rc | ~Rc introduced from an axiom: one explicit rule.
        let main = Formula::or(rel(FoTerm::c()), not_rel(FoTerm::c()));
        let lower = Sequent::of([main.clone(), not_rel(FoTerm::c())]);
        let p = Preproof::new(
            lower.clone(),
            Rule::OrIntro {
                main: main.clone(),
                side: 0,
            },
            alloc::vec![Preproof::leaf(
                lower.with(rel(FoTerm::c())),
                Rule::Ax {
                    formula: rel(FoTerm::c()),
                },
            )],
        );
        assert_eq!(check_sbl(&p), Ok(()));
        let st = structure(&p);
        assert!(st.bar_sequents.is_empty());
        assert!(st.implicit.is_empty());
        assert_eq!(st.explicit_part.len(), 2);
    }

    #[test]
    fn cut_formulas_are_implicit_and_contexts_survive() {
        let p = under_vacuous_sub(cut_of_axioms(), "U0");
        let st = structure(&p);
        // The axioms' cut-formula sides are implicit; the surviving context
        // copies in the cut's conclusion are explicit.
        assert!(st
            .implicit
            .contains(&(alloc::vec![0, 0], not_rel(FoTerm::c()))));
        assert!(st
            .implicit
            .contains(&(alloc::vec![0, 1], rel(FoTerm::c()))));
        assert!(!st.implicit.contains(&(alloc::vec![0], rel(FoTerm::c()))));
        // The root is a bar sequent (its rule is a substitution) and its
        // end-piece swallows the whole tree.
        assert_eq!(st.bar_sequents.len(), 1);
        assert!(st.bar_sequents.contains(&alloc::vec![]));
        assert_eq!(st.end_pieces[&alloc::vec![]].len(), 4);
    }

    #[test]
    fn descendants_track_through_substitution() {
        let p = under_vacuous_sub(cut_of_axioms(), "U0");
        let d = descendants(&p, &[0, 0], &rel(FoTerm::c()));
        // The context copy of Rc survives into the cut's conclusion and
        // through the vacuous substitution into the root. (The cut formula
        // ¬Rc also survives here, because the context happens to hold a
        // second copy; set-sequents contract the two occurrences.)
        assert!(d[&alloc::vec![0]].contains(&rel(FoTerm::c())));
        assert!(d[&alloc::vec![]].contains(&rel(FoTerm::c())));
    }

    #[test]
    fn descendants_die_at_a_cut() {
        // A cut on Rc | Rc, whose sides appear nowhere else: the designated
        // occurrences have no descendants below the cut.
        let big = Formula::or(rel(FoTerm::c()), rel(FoTerm::c()));
        let left = Sequent::of([big.negated(), rel(FoTerm::c())]);
        let right = Sequent::of([big.clone(), not_rel(FoTerm::c())]);
        let p = Preproof::new(
            prime_pair(),
            Rule::Cut {
                formula: big.clone(),
            },
            alloc::vec![
                Preproof::leaf(
                    left,
                    Rule::Ax {
                        formula: rel(FoTerm::c()),
                    },
                ),
                Preproof::leaf(
                    right,
                    Rule::Ax {
                        formula: rel(FoTerm::c()),
                    },
                ),
            ],
        );
        let d = descendants(&p, &[0], &big.negated());
        assert!(!d.contains_key(&alloc::vec![]));
        let st = structure(&p);
        assert!(st.implicit.contains(&(alloc::vec![0], big.negated())));
        assert!(st.implicit.contains(&(alloc::vec![1], big)));
    }

    #[test]
    fn a_minimal_proof_passes_all_conditions() {
        let p = under_vacuous_sub(cut_of_axioms(), "U0");
        let stacks: StackAssignment = [(alloc::vec![], OrdTerm::Zero)].into_iter().collect();
        let a = check_proof(&p, &stacks).unwrap();
        assert_eq!(
            *a.proof_ordinal(),
            psi(
                Regular::omega_succ(OrdTerm::Zero).unwrap(),
                omega_pow(finite(2))
            )
            .unwrap()
        );
    }

    #[test]
    fn a_bare_cut_misses_the_bar_condition() {
        let p = cut_of_axioms();
        let err = check_proof(&p, &StackAssignment::new()).unwrap_err();
        assert_eq!(err.condition, 7);
    }

    #[test]
    fn an_existential_reduction_proof_obeys_the_hull_conditions() {
        // Axioms, a vacuous existential reduction of type psi_I(w), then
        // the vacuous substitution: the smallest tree crossing the height
        // boundary legally.
        let eta = psi_i(omega_tower(1, one()));
        let red = Preproof::new(
            prime_pair(),
            Rule::ExRed {
                eta: eta.clone(),
                relabeled: BTreeSet::new(),
            },
            alloc::vec![Preproof::leaf(
                prime_pair(),
                Rule::Ax {
                    formula: rel(FoTerm::c()),
                },
            )],
        );
        let p = under_vacuous_sub(red, "U0");
        let gamma_root = omega_tower(1, finite(2));
        let stacks: StackAssignment = [
            (alloc::vec![], gamma_root),
            (alloc::vec![0], OrdTerm::Zero),
        ]
        .into_iter()
        .collect();
        let a = check_proof(&p, &stacks).unwrap();
        // The reduction collapses 0 # w^1 to psi_I(w), which equals its
        // type, and the substitution collapses on top of that.
        assert_eq!(a.sequents[&alloc::vec![0]], eta);

        // A type strictly below the collapse value violates the type bound.
        let small = psi_i(one());
        let red = Preproof::new(
            prime_pair(),
            Rule::ExRed {
                eta: small,
                relabeled: BTreeSet::new(),
            },
            alloc::vec![Preproof::leaf(
                prime_pair(),
                Rule::Ax {
                    formula: rel(FoTerm::c()),
                },
            )],
        );
        let p = under_vacuous_sub(red, "U0");
        let stacks: StackAssignment = [
            (alloc::vec![], omega_tower(1, finite(2))),
            (alloc::vec![0], OrdTerm::Zero),
        ]
        .into_iter()
        .collect();
        let err = check_proof(&p, &stacks).unwrap_err();
        assert_eq!(err.condition, 4);
    }

    #[test]
    fn a_small_stack_lets_indices_escape_the_hull() {
        // Same shape as above, but the substitution's stack is too small
        // for the reduction type sitting above it.
        let eta = psi_i(omega_tower(1, one()));
        let red = Preproof::new(
            prime_pair(),
            Rule::ExRed {
                eta,
                relabeled: BTreeSet::new(),
            },
            alloc::vec![Preproof::leaf(
                prime_pair(),
                Rule::Ax {
                    formula: rel(FoTerm::c()),
                },
            )],
        );
        let p = under_vacuous_sub(red, "U0");
        let stacks: StackAssignment = [
            (alloc::vec![], OrdTerm::Zero),
            (alloc::vec![0], OrdTerm::Zero),
        ]
        .into_iter()
        .collect();
        let err = check_proof(&p, &stacks).unwrap_err();
        assert_eq!(err.condition, 3);
    }

    #[test]
    fn stacked_substitutions_check_the_premise_ordinal() {
        let inner = under_vacuous_sub(cut_of_axioms(), "V0");
        let p = under_vacuous_sub(inner, "U0");
        // The outer stack must keep the inner collapse in its hull: w^3
        // does, zero does not.
        let good: StackAssignment = [
            (alloc::vec![], omega_tower(1, finite(3))),
            (alloc::vec![0], OrdTerm::Zero),
        ]
        .into_iter()
        .collect();
        assert!(check_proof(&p, &good).is_ok());
        let bad: StackAssignment = [
            (alloc::vec![], OrdTerm::Zero),
            (alloc::vec![0], OrdTerm::Zero),
        ]
        .into_iter()
        .collect();
        let err = check_proof(&p, &bad).unwrap_err();
        assert_eq!(err.condition, 3);
    }
}
