//! Embedding of basic-calculus derivations into the indexed calculus, and
//! extraction of plain first-order derivations at the far end.
//!
//! [`embed_sbl`] takes a derivation that passes [`check_sbl`] and produces a
//! fully annotated indexed derivation: second-order rules are replaced by
//! their stratified counterparts, comprehension and isolated separations are
//! rewritten into biconditional introductions, reductions are inserted where
//! a branch first crosses the `ω`-height boundary, and a vacuous substitution
//! is placed on every bar of the end-piece so that the whole tree satisfies
//! the proof conditions.  The inverse direction, [`extract_lk`], reads a
//! substitution-free derivation back as an ordinary first-order object with
//! its own independent checker.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::calculus::{
    assign_ordinals, check_proof, check_purity, check_sbl, separation, structure, subset,
    NodePath, OrdinalAnnotation, Preproof, ProofError, Rule, SchemaError, Sequent,
    StackAssignment, VarSort,
};
use crate::formula::{Abstract, Decoration, FoTerm, Formula, FormulaError, Pred, Quant, SoClass, SoFill};
use crate::index::{Index, Name};
use crate::ordinal::{omega_tower, psi, succ, OrdTerm, Regular};

/// How far the tower of exponents over `I + 1` is allowed to grow while
/// searching for a stack value that satisfies the hull conditions.
const TOWER_LIMIT: u32 = 8;

/// Failure modes of the embedding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EmbedError {
    /// The input is not a well-formed basic derivation.
    NotPlain(SchemaError),
    /// The eigenvariable discipline could not be repaired by renaming.
    Impure(SchemaError),
    /// A formula refused its quantifier indices.
    Decoration { at: NodePath, error: FormulaError },
    /// A rule survived to a stage that should already have rewritten it away.
    Unmapped { at: NodePath, label: &'static str },
    /// Every candidate stack assignment failed the proof conditions.
    Rejected(ProofError),
}

impl fmt::Display for EmbedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbedError::NotPlain(e) => write!(f, "not a basic derivation: {e}"),
            EmbedError::Impure(e) => write!(f, "eigenvariable discipline beyond repair: {e}"),
            EmbedError::Decoration { at, error } => {
                write!(f, "cannot decorate at {at:?}: {error}")
            }
            EmbedError::Unmapped { at, label } => {
                write!(f, "rule {label} at {at:?} has no stratified counterpart")
            }
            EmbedError::Rejected(e) => write!(f, "no stack assignment accepted: {e}"),
        }
    }
}

/// Source of names guaranteed fresh for a given derivation.
pub(crate) struct NameGen {
    taken: BTreeSet<String>,
    next: u64,
}

impl NameGen {
    pub(crate) fn seeded(taken: BTreeSet<String>) -> NameGen {
        NameGen { taken, next: 0 }
    }

    pub(crate) fn over(p: &Preproof) -> NameGen {
        let (fo, so) = collect_names(p);
        let mut taken = fo;
        taken.extend(so);
        NameGen::seeded(taken)
    }

    fn fresh(&mut self, prefix: &str) -> String {
        loop {
            let candidate = format!("{}{}", prefix, self.next);
            self.next += 1;
            if self.taken.insert(candidate.clone()) {
                return candidate;
            }
        }
    }

    pub(crate) fn fresh_fo(&mut self) -> String {
        self.fresh("z")
    }

    pub(crate) fn fresh_so(&mut self) -> Name {
        self.fresh("U")
    }
}

fn formula_names(f: &Formula, fo: &mut BTreeSet<String>, so: &mut BTreeSet<Name>) {
    fo.extend(f.free_fo_vars());
    so.extend(f.so_part_names());
    so.extend(f.index_vars());
}

fn pred_names(p: &Pred, so: &mut BTreeSet<Name>) {
    if let Pred::FreeSo { name, index } = p {
        so.insert(name.clone());
        if let Some(ix) = index {
            so.extend(ix.vars());
        }
    }
}

/// Every first-order and second-order variable name mentioned anywhere in the
/// derivation: sequents, rule formulas, witnesses, eigenvariables, indices.
pub(crate) fn collect_names(p: &Preproof) -> (BTreeSet<String>, BTreeSet<Name>) {
    let mut fo = BTreeSet::new();
    let mut so = BTreeSet::new();
    for (_, node) in p.nodes() {
        for f in node.sequent.formulas() {
            formula_names(f, &mut fo, &mut so);
        }
        match &node.rule {
            Rule::Ax { formula } | Rule::Cut { formula } => {
                formula_names(formula, &mut fo, &mut so);
            }
            Rule::OrIntro { main, .. } | Rule::AndIntro { main } => {
                formula_names(main, &mut fo, &mut so);
            }
            Rule::ExFo { main, witness } => {
                formula_names(main, &mut fo, &mut so);
                fo.extend(witness.free_vars());
            }
            Rule::AllFo { main, eigen } => {
                formula_names(main, &mut fo, &mut so);
                fo.insert(eigen.clone());
            }
            Rule::ExSo { main, witness }
            | Rule::Critical { main, witness }
            | Rule::DistEx { main, witness } => {
                formula_names(main, &mut fo, &mut so);
                pred_names(witness, &mut so);
            }
            Rule::AllSo { main, eigen }
            | Rule::StrongAll { main, eigen }
            | Rule::StrongIndexed { main, eigen }
            | Rule::WeakAll { main, eigen } => {
                formula_names(main, &mut fo, &mut so);
                so.insert(eigen.clone());
            }
            Rule::Bi { main, class } | Rule::Bi1 { main, class } | Rule::Bi2 { main, class } => {
                formula_names(main, &mut fo, &mut so);
                formula_names(&class.body, &mut fo, &mut so);
            }
            Rule::Sep { left, right } | Rule::DistSep { left, right } => {
                formula_names(&left.body, &mut fo, &mut so);
                formula_names(&right.body, &mut fo, &mut so);
            }
            Rule::Thin => {}
            Rule::Sub {
                level,
                eigen,
                replacement,
            } => {
                so.extend(level.vars());
                so.insert(eigen.clone());
                formula_names(&replacement.body, &mut fo, &mut so);
            }
            Rule::AllRed { relabeled, .. } | Rule::ExRed { relabeled, .. } => {
                for f in relabeled {
                    formula_names(f, &mut fo, &mut so);
                }
            }
        }
    }
    (fo, so)
}

/// Rebuild a rule with every formula, witness term, witness predicate and
/// eigenvariable passed through the given maps.
pub(crate) fn map_rule(
    rule: &Rule,
    f: &mut dyn FnMut(&Formula) -> Formula,
    g: &mut dyn FnMut(&FoTerm) -> FoTerm,
    h: &mut dyn FnMut(&Pred) -> Pred,
    e: &mut dyn FnMut(VarSort, &str) -> String,
) -> Rule {
    let abs = |f: &mut dyn FnMut(&Formula) -> Formula, a: &Abstract| Abstract::new(f(&a.body));
    match rule {
        Rule::Ax { formula } => Rule::Ax { formula: f(formula) },
        Rule::OrIntro { main, side } => Rule::OrIntro {
            main: f(main),
            side: *side,
        },
        Rule::AndIntro { main } => Rule::AndIntro { main: f(main) },
        Rule::ExFo { main, witness } => Rule::ExFo {
            main: f(main),
            witness: g(witness),
        },
        Rule::AllFo { main, eigen } => Rule::AllFo {
            main: f(main),
            eigen: e(VarSort::Individual, eigen),
        },
        Rule::Cut { formula } => Rule::Cut { formula: f(formula) },
        Rule::ExSo { main, witness } => Rule::ExSo {
            main: f(main),
            witness: h(witness),
        },
        Rule::AllSo { main, eigen } => Rule::AllSo {
            main: f(main),
            eigen: e(VarSort::Predicate, eigen),
        },
        Rule::Bi1 { main, class } => Rule::Bi1 {
            main: f(main),
            class: abs(f, class),
        },
        Rule::Bi2 { main, class } => Rule::Bi2 {
            main: f(main),
            class: abs(f, class),
        },
        Rule::Sep { left, right } => Rule::Sep {
            left: abs(f, left),
            right: abs(f, right),
        },
        Rule::Thin => Rule::Thin,
        Rule::Critical { main, witness } => Rule::Critical {
            main: f(main),
            witness: h(witness),
        },
        Rule::DistEx { main, witness } => Rule::DistEx {
            main: f(main),
            witness: h(witness),
        },
        Rule::DistSep { left, right } => Rule::DistSep {
            left: abs(f, left),
            right: abs(f, right),
        },
        Rule::Bi { main, class } => Rule::Bi {
            main: f(main),
            class: abs(f, class),
        },
        Rule::StrongAll { main, eigen } => Rule::StrongAll {
            main: f(main),
            eigen: e(VarSort::Predicate, eigen),
        },
        Rule::StrongIndexed { main, eigen } => Rule::StrongIndexed {
            main: f(main),
            eigen: e(VarSort::Predicate, eigen),
        },
        Rule::WeakAll { main, eigen } => Rule::WeakAll {
            main: f(main),
            eigen: e(VarSort::Predicate, eigen),
        },
        Rule::Sub {
            level,
            eigen,
            replacement,
        } => Rule::Sub {
            level: level.clone(),
            eigen: e(VarSort::Predicate, eigen),
            replacement: abs(f, replacement),
        },
        Rule::AllRed { eta, relabeled } => Rule::AllRed {
            eta: eta.clone(),
            relabeled: relabeled.iter().map(&mut *f).collect(),
        },
        Rule::ExRed { eta, relabeled } => Rule::ExRed {
            eta: eta.clone(),
            relabeled: relabeled.iter().map(f).collect(),
        },
    }
}

pub(crate) fn map_tree(
    node: &Preproof,
    f: &mut dyn FnMut(&Formula) -> Formula,
    g: &mut dyn FnMut(&FoTerm) -> FoTerm,
    h: &mut dyn FnMut(&Pred) -> Pred,
    e: &mut dyn FnMut(VarSort, &str) -> String,
) -> Preproof {
    Preproof::new(
        node.sequent.map(|x| f(x)),
        map_rule(&node.rule, f, g, h, e),
        node.premises
            .iter()
            .map(|p| map_tree(p, f, g, h, e))
            .collect(),
    )
}

/// Replace a free first-order variable throughout a derivation.  A binder for
/// the same name is renamed along when the replacement is itself a variable.
pub(crate) fn subst_fo_tree(node: &Preproof, name: &str, t: &FoTerm) -> Preproof {
    map_tree(
        node,
        &mut |f| f.subst_fo_free(name, t),
        &mut |u| u.subst_free(name, t),
        &mut |p| p.clone(),
        &mut |sort, eigen| {
            if sort == VarSort::Individual && eigen == name {
                if let FoTerm::FreeVar(n) = t {
                    return n.clone();
                }
            }
            eigen.to_string()
        },
    )
}

/// Replace a free unindexed second-order variable throughout a derivation.
fn subst_so_tree(node: &Preproof, name: &str, to: &Pred) -> Preproof {
    map_tree(
        node,
        &mut |f| f.subst_so_free(name, SoFill::Pred(to)),
        &mut |u| u.clone(),
        &mut |p| match p {
            Pred::FreeSo { name: n, index: None } if n == name => to.clone(),
            other => other.clone(),
        },
        &mut |sort, eigen| {
            if sort == VarSort::Predicate && eigen == name {
                if let Pred::FreeSo { name: m, index: None } = to {
                    return m.clone();
                }
            }
            eigen.to_string()
        },
    )
}

/// Add a side formula to every sequent of a derivation.  The extra formula
/// must not mention any of the derivation's eigenvariables.
fn weaken(node: &Preproof, extra: &Formula) -> Preproof {
    Preproof::new(
        node.sequent.with(extra.clone()),
        node.rule.clone(),
        node.premises.iter().map(|p| weaken(p, extra)).collect(),
    )
}

/// Derivation of `target, ¬b, b` by structural induction on `b`.
fn excluded_middle(target: &Sequent, b: &Formula, gen: &mut NameGen) -> Preproof {
    let root = target.with(b.negated()).with(b.clone());
    match b {
        Formula::Lit(_) => Preproof::leaf(root, Rule::Ax { formula: b.clone() }),
        Formula::And(x, y) => {
            let legs = [x.as_ref(), y.as_ref()]
                .into_iter()
                .enumerate()
                .map(|(side, part)| {
                    let below = root.with(part.clone());
                    Preproof::new(
                        below.clone(),
                        Rule::OrIntro {
                            main: b.negated(),
                            side,
                        },
                        vec![excluded_middle(&below, part, gen)],
                    )
                })
                .collect();
            Preproof::new(root, Rule::AndIntro { main: b.clone() }, legs)
        }
        Formula::Or(x, y) => {
            let legs = [x.as_ref(), y.as_ref()]
                .into_iter()
                .enumerate()
                .map(|(side, part)| {
                    let below = root.with(part.negated());
                    Preproof::new(
                        below.clone(),
                        Rule::OrIntro {
                            main: b.clone(),
                            side,
                        },
                        vec![excluded_middle(&below, part, gen)],
                    )
                })
                .collect();
            Preproof::new(root, Rule::AndIntro { main: b.negated() }, legs)
        }
        Formula::FoQuant(kind, body) => {
            let z = gen.fresh_fo();
            let opened = body.open_fo(&FoTerm::FreeVar(z.clone()));
            // Over `∀`, the eigen step comes first and the witness sits above
            // it; over `∃`, the negation supplies the universal.
            let (all_main, minor) = match kind {
                Quant::All => (b.clone(), opened.clone()),
                Quant::Ex => (b.negated(), opened.negated()),
            };
            let s1 = root.with(minor);
            let ex_main = match kind {
                Quant::All => b.negated(),
                Quant::Ex => b.clone(),
            };
            let core = excluded_middle(&s1, &opened, gen);
            let ex = Preproof::new(
                s1.clone(),
                Rule::ExFo {
                    main: ex_main,
                    witness: FoTerm::FreeVar(z.clone()),
                },
                vec![core],
            );
            Preproof::new(
                root,
                Rule::AllFo {
                    main: all_main,
                    eigen: z,
                },
                vec![ex],
            )
        }
        Formula::SoQuant(kind, None, body) => {
            let v = gen.fresh_so();
            let witness = Pred::so(v.clone());
            let opened = body.open_so(SoFill::Pred(&witness));
            let (all_main, minor) = match kind {
                Quant::All => (b.clone(), opened.clone()),
                Quant::Ex => (b.negated(), opened.negated()),
            };
            let s1 = root.with(minor);
            let ex_main = match kind {
                Quant::All => b.negated(),
                Quant::Ex => b.clone(),
            };
            let core = excluded_middle(&s1, &opened, gen);
            let ex = Preproof::new(
                s1.clone(),
                Rule::ExSo {
                    main: ex_main,
                    witness,
                },
                vec![core],
            );
            Preproof::new(
                root,
                Rule::AllSo {
                    main: all_main,
                    eigen: v,
                },
                vec![ex],
            )
        }
        Formula::SoQuant(_, Some(_), _) => {
            unreachable!("excluded middle is only built over plain formulas")
        }
    }
}

/// Derivation of `target` where `target` contains `¬φ ∨ φ`: introduce both
/// disjuncts and close with the excluded middle.
fn derive_or_em(target: &Sequent, phi: &Formula, gen: &mut NameGen) -> Preproof {
    let disj = Formula::or(phi.negated(), phi.clone());
    let mid = target.with(phi.negated());
    Preproof::new(
        target.clone(),
        Rule::OrIntro {
            main: disj.clone(),
            side: 0,
        },
        vec![Preproof::new(
            mid,
            Rule::OrIntro { main: disj, side: 1 },
            vec![excluded_middle(target, phi, gen)],
        )],
    )
}

/// Derivation of `target` where `target` contains `A ⊂ A`.
pub(crate) fn derive_subset_refl(target: &Sequent, class: &Abstract, gen: &mut NameGen) -> Preproof {
    let z = gen.fresh_fo();
    let az = class.apply(&FoTerm::FreeVar(z.clone()));
    let disj = Formula::or(az.negated(), az.clone());
    let above = target.with(disj);
    Preproof::new(
        target.clone(),
        Rule::AllFo {
            main: subset(class, class),
            eigen: z,
        },
        vec![derive_or_em(&above, &az, gen)],
    )
}

pub(crate) fn set_eigen(rule: &mut Rule, fresh: String) {
    match rule {
        Rule::AllFo { eigen, .. }
        | Rule::AllSo { eigen, .. }
        | Rule::StrongAll { eigen, .. }
        | Rule::StrongIndexed { eigen, .. }
        | Rule::WeakAll { eigen, .. }
        | Rule::Sub { eigen, .. } => *eigen = fresh,
        _ => {}
    }
}

/// Give every eigenvariable in the derivation a globally fresh name.
fn freshen_eigens(node: &Preproof, gen: &mut NameGen) -> Preproof {
    let mut rule = node.rule.clone();
    let mut premises = node.premises.clone();
    if let Some((sort, old)) = rule.eigenvariable() {
        let old = old.to_string();
        let (fresh, renamed): (String, Vec<Preproof>) = match sort {
            VarSort::Individual => {
                let fresh = gen.fresh_fo();
                let t = FoTerm::FreeVar(fresh.clone());
                (
                    fresh,
                    premises.iter().map(|p| subst_fo_tree(p, &old, &t)).collect(),
                )
            }
            VarSort::Predicate => {
                let fresh = gen.fresh_so();
                let to = Pred::so(fresh.clone());
                (
                    fresh,
                    premises
                        .iter()
                        .map(|p| subst_so_tree(p, &old, &to))
                        .collect(),
                )
            }
        };
        set_eigen(&mut rule, fresh);
        premises = renamed;
    }
    let premises = premises.iter().map(|p| freshen_eigens(p, gen)).collect();
    Preproof::new(node.sequent.clone(), rule, premises)
}

/// Rename eigenvariables apart and ground every remaining free variable that
/// is neither an eigenvariable nor mentioned in the end-sequent.
fn ensure_pure(p: &Preproof, gen: &mut NameGen) -> Result<Preproof, EmbedError> {
    let mut tree = freshen_eigens(p, gen);

    let mut eigen_fo = BTreeSet::new();
    let mut eigen_so = BTreeSet::new();
    for (_, node) in tree.nodes() {
        match node.rule.eigenvariable() {
            Some((VarSort::Individual, name)) => {
                eigen_fo.insert(name.to_string());
            }
            Some((VarSort::Predicate, name)) => {
                eigen_so.insert(name.to_string());
            }
            None => {}
        }
    }
    let root_fo = tree.end_sequent().fo_names();
    let root_so = tree.end_sequent().so_names();

    let (fo, so) = collect_names(&tree);
    for name in fo {
        if !eigen_fo.contains(&name) && !root_fo.contains(&name) {
            tree = subst_fo_tree(&tree, &name, &FoTerm::c());
        }
    }
    for name in so {
        if !eigen_so.contains(&name) && !root_so.contains(&name) {
            tree = subst_so_tree(&tree, &name, &Pred::canonical_rel());
        }
    }

    check_purity(&tree).map_err(EmbedError::Impure)?;
    Ok(tree)
}

/// Derivation of `target` establishing that substituting the class for the
/// plain variable in `g` is interchangeable with substituting `u`, given the
/// pointwise equivalence `d_u` between the class and `u`.
///
/// Invariant: `target` contains `¬g[class]`, `g[u]` and `d_u`.
#[allow(clippy::too_many_arguments)]
fn congruence(
    target: &Sequent,
    g: &Formula,
    hole: &str,
    class: &Abstract,
    u: &Pred,
    d_u: &Formula,
    gen: &mut NameGen,
) -> Preproof {
    let at_class = |f: &Formula| f.subst_so_free(hole, SoFill::Abs(class));
    let at_u = |f: &Formula| f.subst_so_free(hole, SoFill::Pred(u));
    match g {
        Formula::Lit(l) if matches!(&l.pred, Pred::FreeSo { name, .. } if name == hole) => {
            let t = l.arg.clone();
            let a_t = class.apply(&t);
            let u_t = Formula::lit(true, u.clone(), t.clone());
            // `d_u` opens to the symmetric difference at `t`; pick the side
            // matching the polarity of the hole occurrence.
            let diff = match d_u {
                Formula::FoQuant(Quant::Ex, body) => body.open_fo(&t),
                _ => unreachable!("pointwise difference is existential"),
            };
            let (side, conj, first, second) = if l.positive {
                let conj = Formula::and(a_t.clone(), u_t.negated());
                (1, conj, a_t.clone(), u_t.negated())
            } else {
                let conj = Formula::and(u_t.clone(), a_t.negated());
                (0, conj, u_t.clone(), a_t.negated())
            };
            let s1 = target.with(diff.clone());
            let s2 = s1.with(conj.clone());
            let legs = vec![
                excluded_middle(&s2, &first, gen),
                excluded_middle(&s2, &second, gen),
            ];
            Preproof::new(
                target.clone(),
                Rule::ExFo {
                    main: d_u.clone(),
                    witness: t,
                },
                vec![Preproof::new(
                    s1,
                    Rule::OrIntro { main: diff, side },
                    vec![Preproof::new(s2, Rule::AndIntro { main: conj }, legs)],
                )],
            )
        }
        Formula::Lit(_) => excluded_middle(target, g, gen),
        Formula::And(x, y) => {
            let legs = [x.as_ref(), y.as_ref()]
                .into_iter()
                .enumerate()
                .map(|(side, part)| {
                    let below = target.with(at_u(part));
                    let above = below.with(at_class(part).negated());
                    Preproof::new(
                        below,
                        Rule::OrIntro {
                            main: at_class(g).negated(),
                            side,
                        },
                        vec![congruence(&above, part, hole, class, u, d_u, gen)],
                    )
                })
                .collect();
            Preproof::new(target.clone(), Rule::AndIntro { main: at_u(g) }, legs)
        }
        Formula::Or(x, y) => {
            let legs = [x.as_ref(), y.as_ref()]
                .into_iter()
                .enumerate()
                .map(|(side, part)| {
                    let below = target.with(at_class(part).negated());
                    let above = below.with(at_u(part));
                    Preproof::new(
                        below,
                        Rule::OrIntro {
                            main: at_u(g),
                            side,
                        },
                        vec![congruence(&above, part, hole, class, u, d_u, gen)],
                    )
                })
                .collect();
            Preproof::new(
                target.clone(),
                Rule::AndIntro {
                    main: at_class(g).negated(),
                },
                legs,
            )
        }
        Formula::FoQuant(kind, body) => {
            let z = gen.fresh_fo();
            let opened = body.open_fo(&FoTerm::FreeVar(z.clone()));
            let (all_main, minor, ex_main, ex_minor) = match kind {
                Quant::All => (at_u(g), at_u(&opened), at_class(g).negated(), at_class(&opened).negated()),
                Quant::Ex => (at_class(g).negated(), at_class(&opened).negated(), at_u(g), at_u(&opened)),
            };
            let s1 = target.with(minor);
            let s2 = s1.with(ex_minor);
            Preproof::new(
                target.clone(),
                Rule::AllFo {
                    main: all_main,
                    eigen: z.clone(),
                },
                vec![Preproof::new(
                    s1,
                    Rule::ExFo {
                        main: ex_main,
                        witness: FoTerm::FreeVar(z),
                    },
                    vec![congruence(&s2, &opened, hole, class, u, d_u, gen)],
                )],
            )
        }
        Formula::SoQuant(kind, None, body) => {
            let v = gen.fresh_so();
            let witness = Pred::so(v.clone());
            let opened = body.open_so(SoFill::Pred(&witness));
            let (all_main, minor, ex_main, ex_minor) = match kind {
                Quant::All => (at_u(g), at_u(&opened), at_class(g).negated(), at_class(&opened).negated()),
                Quant::Ex => (at_class(g).negated(), at_class(&opened).negated(), at_u(g), at_u(&opened)),
            };
            let s1 = target.with(minor);
            let s2 = s1.with(ex_minor);
            Preproof::new(
                target.clone(),
                Rule::AllSo {
                    main: all_main,
                    eigen: v,
                },
                vec![Preproof::new(
                    s1,
                    Rule::ExSo {
                        main: ex_main,
                        witness,
                    },
                    vec![congruence(&s2, &opened, hole, class, u, d_u, gen)],
                )],
            )
        }
        Formula::SoQuant(_, Some(_), _) => {
            unreachable!("congruence is only built over plain formulas")
        }
    }
}

/// Replace one comprehension inference by a cut on the statement that some
/// class is pointwise equivalent to the abstract.
fn replace_comprehension(
    lower: &Sequent,
    main: &Formula,
    class: &Abstract,
    q: Preproof,
    gen: &mut NameGen,
) -> Preproof {
    let fbody = match main {
        Formula::SoQuant(Quant::Ex, None, body) => body.as_ref().clone(),
        _ => unreachable!("comprehension main is an unindexed existential"),
    };
    let minor = fbody.open_so(SoFill::Abs(class));

    // `∃X ∀y ((¬Xy ∨ Ay) ∧ (¬Ay ∨ Xy))`: some class agrees with the abstract.
    let y = FoTerm::Bound(0);
    let x_y = Formula::lit(true, Pred::BoundSo(0), y.clone());
    let a_y = class.apply(&y);
    let agree = Formula::so(
        Quant::Ex,
        Formula::fo(
            Quant::All,
            Formula::and(
                Formula::or(x_y.negated(), a_y.clone()),
                Formula::or(a_y.negated(), x_y),
            ),
        ),
    );
    let disagree = agree.negated();

    let u = gen.fresh_so();
    let pu = Pred::so(u.clone());
    let f_u = fbody.open_so(SoFill::Pred(&pu));
    let d_u = match &disagree {
        Formula::SoQuant(Quant::All, None, body) => body.open_so(SoFill::Pred(&pu)),
        _ => unreachable!("negated existential is universal"),
    };

    // Right: the agreement statement holds of the abstract itself.
    let r1 = lower.with(agree.clone());
    let agree_minor = match &agree {
        Formula::SoQuant(Quant::Ex, None, body) => body.open_so(SoFill::Abs(class)),
        _ => unreachable!(),
    };
    let r2 = r1.with(agree_minor.clone());
    let z = gen.fresh_fo();
    let az = class.apply(&FoTerm::FreeVar(z.clone()));
    let disj = Formula::or(az.negated(), az.clone());
    let conj = Formula::and(disj.clone(), disj.clone());
    let r3 = r2.with(conj.clone());
    let above = r3.with(disj);
    let right = Preproof::new(
        r1,
        Rule::Bi1 {
            main: agree.clone(),
            class: class.clone(),
        },
        vec![Preproof::new(
            r2,
            Rule::AllFo {
                main: agree_minor,
                eigen: z,
            },
            vec![Preproof::new(
                r3,
                Rule::AndIntro { main: conj },
                vec![
                    derive_or_em(&above, &az, gen),
                    derive_or_em(&above, &az, gen),
                ],
            )],
        )],
    );

    // Left: any disagreeing witness lets the original premise go through.
    let w = gen.fresh_so();
    let g0 = fbody.open_so(SoFill::Pred(&Pred::so(w.clone())));
    let l1 = lower.with(disagree.clone());
    let l2 = l1.with(d_u.clone());
    let l3 = l2.with(f_u.clone());
    let cong_target = l3.with(minor.negated());
    let cong = congruence(&cong_target, &g0, &w, class, &pu, &d_u, gen);
    let positive = weaken(&weaken(&weaken(&q, &disagree), &d_u), &f_u);
    let left = Preproof::new(
        l1,
        Rule::AllSo {
            main: disagree,
            eigen: u,
        },
        vec![Preproof::new(
            l2,
            Rule::ExSo {
                main: main.clone(),
                witness: pu,
            },
            vec![Preproof::new(
                l3,
                Rule::Cut { formula: minor },
                vec![cong, positive],
            )],
        )],
    );

    Preproof::new(lower.clone(), Rule::Cut { formula: agree }, vec![left, right])
}

/// Rewrite every comprehension inference into a cut on a class-agreement
/// statement, bottom-up.
fn eliminate_comprehension(node: &Preproof, gen: &mut NameGen) -> Preproof {
    let premises: Vec<Preproof> = node
        .premises
        .iter()
        .map(|p| eliminate_comprehension(p, gen))
        .collect();
    if let Rule::Bi2 { main, class } = &node.rule {
        let q = premises
            .into_iter()
            .next()
            .expect("comprehension has a premise");
        replace_comprehension(&node.sequent, main, class, q, gen)
    } else {
        Preproof::new(node.sequent.clone(), node.rule.clone(), premises)
    }
}

/// Rewrite separation inferences whose statement is isolated into
/// biconditional introductions; graded separations are left for the
/// distinguished rule.
fn normalize_separations(node: &Preproof, gen: &mut NameGen) -> Preproof {
    let premises: Vec<Preproof> = node
        .premises
        .iter()
        .map(|p| normalize_separations(p, gen))
        .collect();
    if let Rule::Sep { left, right } = &node.rule {
        let main = separation(left, right);
        if main.classify().isolated() {
            let q = premises.into_iter().next().expect("separation has a premise");
            let minor = match &main {
                Formula::SoQuant(Quant::Ex, None, body) => body.open_so(SoFill::Abs(left)),
                _ => unreachable!("separation statement is an unindexed existential"),
            };
            let refl = subset(left, left);
            let p1 = node.sequent.with(minor.clone());
            let leg0 = derive_subset_refl(&p1.with(refl), left, gen);
            let leg1 = weaken(&q, &minor);
            return Preproof::new(
                node.sequent.clone(),
                Rule::Bi1 {
                    main,
                    class: left.clone(),
                },
                vec![Preproof::new(
                    p1,
                    Rule::AndIntro { main: minor },
                    vec![leg0, leg1],
                )],
            );
        }
    }
    Preproof::new(node.sequent.clone(), node.rule.clone(), premises)
}

fn dec_formula(
    f: &Formula,
    scheme: &Decoration,
    at: &NodePath,
) -> Result<Formula, EmbedError> {
    f.decorate(scheme).map_err(|error| EmbedError::Decoration {
        at: at.clone(),
        error,
    })
}

fn dec_pred(p: &Pred, scheme: &Decoration) -> Pred {
    match p {
        Pred::FreeSo { name, index: None } => Pred::FreeSo {
            name: name.clone(),
            index: Some(
                scheme
                    .variable_indices
                    .get(name)
                    .cloned()
                    .unwrap_or_else(Index::zero),
            ),
        },
        other => other.clone(),
    }
}

fn dec_abs(a: &Abstract, scheme: &Decoration, at: &NodePath) -> Result<Abstract, EmbedError> {
    Ok(Abstract::new(dec_formula(&a.body, scheme, at)?))
}

fn decoration_err(at: &NodePath) -> impl FnOnce(FormulaError) -> EmbedError + '_ {
    move |error| EmbedError::Decoration {
        at: at.clone(),
        error,
    }
}

/// Decorate every formula of the derivation and replace each second-order
/// rule by its stratified counterpart, extending the index scheme at each
/// universal eigenvariable.
fn decorate_tree(
    node: &Preproof,
    scheme: &Decoration,
    path: &mut NodePath,
) -> Result<Preproof, EmbedError> {
    let at = path.clone();
    let sequent = node
        .sequent
        .formulas()
        .map(|f| dec_formula(f, scheme, &at))
        .collect::<Result<Sequent, EmbedError>>()?;

    let mut child_scheme: Option<Decoration> = None;
    let mut extend = |entry: Index, eigen: &Name| {
        let mut s = scheme.clone();
        s.variable_indices.insert(eigen.clone(), entry);
        child_scheme = Some(s);
    };

    let rule = match &node.rule {
        Rule::Ax { formula } => Rule::Ax {
            formula: dec_formula(formula, scheme, &at)?,
        },
        Rule::OrIntro { main, side } => Rule::OrIntro {
            main: dec_formula(main, scheme, &at)?,
            side: *side,
        },
        Rule::AndIntro { main } => Rule::AndIntro {
            main: dec_formula(main, scheme, &at)?,
        },
        Rule::ExFo { main, witness } => Rule::ExFo {
            main: dec_formula(main, scheme, &at)?,
            witness: witness.clone(),
        },
        Rule::AllFo { main, eigen } => Rule::AllFo {
            main: dec_formula(main, scheme, &at)?,
            eigen: eigen.clone(),
        },
        Rule::Cut { formula } => Rule::Cut {
            formula: dec_formula(formula, scheme, &at)?,
        },
        Rule::Thin => Rule::Thin,
        Rule::ExSo { main, witness } => {
            let m = dec_formula(main, scheme, &at)?;
            match &m {
                Formula::SoQuant(Quant::Ex, Some(_), _) => Rule::Critical {
                    main: m.clone(),
                    witness: dec_pred(witness, scheme),
                },
                Formula::SoQuant(Quant::Ex, None, _) => {
                    if m.grade().over_inaccessible != 0 {
                        Rule::DistEx {
                            main: m.clone(),
                            witness: dec_pred(witness, scheme),
                        }
                    } else {
                        let w = dec_pred(witness, scheme);
                        Rule::Bi {
                            main: m.clone(),
                            class: Abstract::new(Formula::lit(true, w, FoTerm::Bound(0))),
                        }
                    }
                }
                _ => {
                    return Err(EmbedError::Unmapped {
                        at,
                        label: node.rule.label(),
                    })
                }
            }
        }
        Rule::AllSo { main, eigen } => {
            let m = dec_formula(main, scheme, &at)?;
            match &m {
                Formula::SoQuant(Quant::All, Some(eta), _) => {
                    let entry = Index::var(eigen.clone(), eta.clone())
                        .map_err(|_| EmbedError::Decoration {
                            at: at.clone(),
                            error: FormulaError::BadQuantifierIndex(eta.clone()),
                        })?;
                    extend(entry, eigen);
                    Rule::StrongIndexed {
                        main: m.clone(),
                        eigen: eigen.clone(),
                    }
                }
                Formula::SoQuant(Quant::All, None, _) => {
                    if m.grade().over_inaccessible != 0 {
                        let entry = m
                            .strat_level_marked(SoClass::Pi, eigen)
                            .map_err(decoration_err(&at))?;
                        extend(entry, eigen);
                        Rule::StrongAll {
                            main: m.clone(),
                            eigen: eigen.clone(),
                        }
                    } else {
                        let entry = m.strat_level(SoClass::Pi).map_err(decoration_err(&at))?;
                        extend(entry, eigen);
                        Rule::WeakAll {
                            main: m.clone(),
                            eigen: eigen.clone(),
                        }
                    }
                }
                _ => {
                    return Err(EmbedError::Unmapped {
                        at,
                        label: node.rule.label(),
                    })
                }
            }
        }
        Rule::Bi1 { main, class } => Rule::Bi {
            main: dec_formula(main, scheme, &at)?,
            class: dec_abs(class, scheme, &at)?,
        },
        Rule::Sep { left, right } => Rule::DistSep {
            left: dec_abs(left, scheme, &at)?,
            right: dec_abs(right, scheme, &at)?,
        },
        other => {
            return Err(EmbedError::Unmapped {
                at,
                label: other.label(),
            })
        }
    };

    let scheme_below = child_scheme.as_ref().unwrap_or(scheme);
    let mut premises = Vec::with_capacity(node.premises.len());
    for (i, child) in node.premises.iter().enumerate() {
        path.push(i);
        premises.push(decorate_tree(child, scheme_below, path)?);
        path.pop();
    }
    Ok(Preproof::new(sequent, rule, premises))
}

/// Whether the rule forces the height of everything above it across the `ω`
/// boundary.
fn crosses_omega(rule: &Rule) -> bool {
    match rule {
        Rule::Cut { formula } => formula.grade().over_inaccessible != 0,
        Rule::Bi { class, .. } | Rule::Bi1 { class, .. } | Rule::Bi2 { class, .. } => {
            class.body.grade().over_inaccessible != 0
        }
        _ => false,
    }
}

/// Insert an existential reduction directly below the first rule on each
/// branch whose grade pushes the height across the `ω` boundary.  The
/// reduction types are placeholders until the ordinals are known.
fn insert_reductions(node: &Preproof, covered: bool) -> Preproof {
    let bump = crosses_omega(&node.rule);
    let rebuilt = Preproof::new(
        node.sequent.clone(),
        node.rule.clone(),
        node.premises
            .iter()
            .map(|p| insert_reductions(p, covered || bump))
            .collect(),
    );
    if bump && !covered {
        let eta = psi(Regular::Inaccessible, OrdTerm::Zero).expect("collapse of zero");
        Preproof::new(
            node.sequent.clone(),
            Rule::ExRed {
                eta,
                relabeled: BTreeSet::new(),
            },
            vec![rebuilt],
        )
    } else {
        rebuilt
    }
}

fn wrap_at(node: &Preproof, path: &[usize], rule: Rule) -> Preproof {
    match path.split_first() {
        None => Preproof::new(node.sequent.clone(), rule, vec![node.clone()]),
        Some((&i, rest)) => {
            let premises = node
                .premises
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    if j == i {
                        wrap_at(p, rest, rule.clone())
                    } else {
                        p.clone()
                    }
                })
                .collect();
            Preproof::new(node.sequent.clone(), node.rule.clone(), premises)
        }
    }
}

/// Place a vacuous level-zero substitution on every bar of the end-piece.
fn insert_bar_subs(mut tree: Preproof, gen: &mut NameGen) -> Preproof {
    let bars = structure(&tree).bar_sequents;
    for path in bars {
        let rule = Rule::Sub {
            level: Index::zero(),
            eigen: gen.fresh_so(),
            replacement: Abstract::new(Formula::lit(
                true,
                Pred::canonical_rel(),
                FoTerm::Bound(0),
            )),
        };
        tree = wrap_at(&tree, &path, rule);
    }
    tree
}

/// Rewrite each reduction's type to the collapse value its own sequent
/// receives, which is the value the proof conditions compare it against.
fn set_reduction_types(node: &Preproof, ann: &OrdinalAnnotation, path: &mut NodePath) -> Preproof {
    let mut rule = node.rule.clone();
    match &mut rule {
        Rule::AllRed { eta, .. } | Rule::ExRed { eta, .. } => {
            if let Some(o) = ann.sequents.get(path) {
                *eta = o.clone();
            }
        }
        _ => {}
    }
    let mut premises = Vec::with_capacity(node.premises.len());
    for (i, child) in node.premises.iter().enumerate() {
        path.push(i);
        premises.push(set_reduction_types(child, ann, path));
        path.pop();
    }
    Preproof::new(node.sequent.clone(), rule, premises)
}

/// A fully annotated indexed derivation produced by [`embed_sbl`].
#[derive(Clone, Debug)]
pub struct Embedding {
    pub proof: Preproof,
    pub stacks: StackAssignment,
    pub annotation: OrdinalAnnotation,
}

impl Embedding {
    /// The ordinal assigned to the end-sequent.
    pub fn proof_ordinal(&self) -> &OrdTerm {
        self.annotation.proof_ordinal()
    }
}

fn attempt(tree: &Preproof, n: u32) -> Result<(Preproof, StackAssignment, OrdinalAnnotation), ProofError> {
    let gamma = omega_tower(n, succ(OrdTerm::Inaccessible));
    let mut stacks = StackAssignment::new();
    for path in tree.rule_paths(|r| matches!(r, Rule::Sub { .. })) {
        stacks.insert(path, gamma.clone());
    }
    for path in tree.rule_paths(|r| matches!(r, Rule::ExRed { .. })) {
        stacks.insert(path, OrdTerm::Zero);
    }
    let first = assign_ordinals(tree, &stacks).map_err(|e| ProofError {
        at: e.at,
        condition: 0,
        message: e.message,
    })?;
    let tuned = set_reduction_types(tree, &first, &mut Vec::new());
    let annotation = check_proof(&tuned, &stacks)?;
    Ok((tuned, stacks, annotation))
}

/// Embed a basic derivation into the indexed calculus.
///
/// The result satisfies [`check_proof`] with the returned stack assignment;
/// in particular its end-sequent ordinal collapses below the first uncountable
/// index.
pub fn embed_sbl(p: &Preproof) -> Result<Embedding, EmbedError> {
    check_sbl(p).map_err(EmbedError::NotPlain)?;
    let mut gen = NameGen::over(p);
    let pure = ensure_pure(p, &mut gen)?;
    let no_comprehension = eliminate_comprehension(&pure, &mut gen);
    let no_separation = normalize_separations(&no_comprehension, &mut gen);
    debug_assert!(check_sbl(&no_separation).is_ok());

    let scheme = Decoration::zeros(
        OrdTerm::Inaccessible,
        no_separation.end_sequent().so_names(),
    );
    let decorated = decorate_tree(&no_separation, &scheme, &mut Vec::new())?;
    let with_reductions = insert_reductions(&decorated, false);
    let scaffolded = insert_bar_subs(with_reductions, &mut gen);

    let mut last: Option<ProofError> = None;
    for n in 0..=TOWER_LIMIT {
        match attempt(&scaffolded, n) {
            Ok((proof, stacks, annotation)) => {
                return Ok(Embedding {
                    proof,
                    stacks,
                    annotation,
                })
            }
            Err(e) => last = Some(e),
        }
    }
    Err(EmbedError::Rejected(last.expect("the sweep ran at least once")))
}

/// Rules of the plain first-order sequent calculus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LkRule {
    Axiom { formula: Formula },
    OrIntro { main: Formula, side: usize },
    AndIntro { main: Formula },
    ExIntro { main: Formula, witness: FoTerm },
    AllIntro { main: Formula, eigen: String },
    Thin,
}

impl LkRule {
    pub fn label(&self) -> &'static str {
        match self {
            LkRule::Axiom { .. } => "(Ax)",
            LkRule::OrIntro { .. } => "(or)",
            LkRule::AndIntro { .. } => "(and)",
            LkRule::ExIntro { .. } => "(ex1)",
            LkRule::AllIntro { .. } => "(all1)",
            LkRule::Thin => "(th)",
        }
    }

    fn premise_count(&self) -> usize {
        match self {
            LkRule::Axiom { .. } => 0,
            LkRule::AndIntro { .. } => 2,
            _ => 1,
        }
    }
}

/// A derivation in the plain first-order calculus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LkDerivation {
    pub sequent: Sequent,
    pub rule: LkRule,
    pub premises: Vec<LkDerivation>,
}

/// Why a derivation could not be read back as first-order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtractError {
    /// The end-piece still has a bar; more reduction steps are needed.
    BarRemains(NodePath),
    /// The derivation fails the proof conditions.
    Rejected(ProofError),
    /// A rule with no first-order counterpart survives.
    ForeignRule { at: NodePath, label: &'static str },
}

impl fmt::Display for ExtractError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractError::BarRemains(at) => write!(f, "end-piece bar remains at {at:?}"),
            ExtractError::Rejected(e) => write!(f, "not a correct derivation: {e}"),
            ExtractError::ForeignRule { at, label } => {
                write!(f, "rule {label} at {at:?} is not first-order")
            }
        }
    }
}

fn to_lk(node: &Preproof, path: &mut NodePath) -> Result<LkDerivation, ExtractError> {
    let rule = match &node.rule {
        Rule::Ax { formula } => LkRule::Axiom {
            formula: formula.erased(),
        },
        Rule::OrIntro { main, side } => LkRule::OrIntro {
            main: main.erased(),
            side: *side,
        },
        Rule::AndIntro { main } => LkRule::AndIntro {
            main: main.erased(),
        },
        Rule::ExFo { main, witness } => LkRule::ExIntro {
            main: main.erased(),
            witness: witness.clone(),
        },
        Rule::AllFo { main, eigen } => LkRule::AllIntro {
            main: main.erased(),
            eigen: eigen.clone(),
        },
        Rule::Thin => LkRule::Thin,
        other => {
            return Err(ExtractError::ForeignRule {
                at: path.clone(),
                label: other.label(),
            })
        }
    };
    let mut premises = Vec::with_capacity(node.premises.len());
    for (i, child) in node.premises.iter().enumerate() {
        path.push(i);
        premises.push(to_lk(child, path)?);
        path.pop();
    }
    Ok(LkDerivation {
        sequent: node.sequent.map(|f| f.erased()),
        rule,
        premises,
    })
}

/// Read a bar-free derivation back as a plain first-order derivation.
pub fn extract_lk(p: &Preproof) -> Result<LkDerivation, ExtractError> {
    let shape = structure(p);
    if let Some(bar) = shape.bar_sequents.iter().next() {
        return Err(ExtractError::BarRemains(bar.clone()));
    }
    check_proof(p, &StackAssignment::new()).map_err(ExtractError::Rejected)?;
    to_lk(p, &mut Vec::new())
}

/// Violation of the first-order calculus discipline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LkError {
    pub at: NodePath,
    pub message: String,
}

impl fmt::Display for LkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {:?}: {}", self.at, self.message)
    }
}

fn lk_fail(at: &NodePath, message: impl fmt::Display) -> LkError {
    LkError {
        at: at.clone(),
        message: message.to_string(),
    }
}

fn check_lk_node(d: &LkDerivation, path: &mut NodePath) -> Result<(), LkError> {
    if d.premises.len() != d.rule.premise_count() {
        return Err(lk_fail(
            path,
            format!(
                "{} expects {} premises, got {}",
                d.rule.label(),
                d.rule.premise_count(),
                d.premises.len()
            ),
        ));
    }
    for f in d.sequent.formulas() {
        if f.validate().is_err() || !f.is_plain() || !f.is_first_order() {
            return Err(lk_fail(path, "sequents must hold plain first-order formulas"));
        }
    }
    let premise = |i: usize| &d.premises[i].sequent;
    let require = |ok: bool, message: &str| -> Result<(), LkError> {
        if ok {
            Ok(())
        } else {
            Err(lk_fail(path, message))
        }
    };
    match &d.rule {
        LkRule::Axiom { formula } => {
            require(
                matches!(formula, Formula::Lit(_)),
                "axioms close on literals",
            )?;
            require(
                d.sequent.contains(formula) && d.sequent.contains(&formula.negated()),
                "axiom needs the literal and its negation",
            )?;
        }
        LkRule::OrIntro { main, side } => {
            require(d.sequent.contains(main), "main formula absent")?;
            let minor = match (main, side) {
                (Formula::Or(x, _), 0) => x.as_ref().clone(),
                (Formula::Or(_, y), 1) => y.as_ref().clone(),
                _ => return Err(lk_fail(path, "main formula is not the stated disjunction")),
            };
            require(
                premise(0) == &d.sequent.with(minor),
                "premise must extend the conclusion by the chosen disjunct",
            )?;
        }
        LkRule::AndIntro { main } => {
            require(d.sequent.contains(main), "main formula absent")?;
            let (x, y) = match main {
                Formula::And(x, y) => (x.as_ref().clone(), y.as_ref().clone()),
                _ => return Err(lk_fail(path, "main formula is not a conjunction")),
            };
            require(
                premise(0) == &d.sequent.with(x) && premise(1) == &d.sequent.with(y),
                "premises must extend the conclusion by the two conjuncts",
            )?;
        }
        LkRule::ExIntro { main, witness } => {
            require(d.sequent.contains(main), "main formula absent")?;
            let body = match main {
                Formula::FoQuant(Quant::Ex, body) => body,
                _ => return Err(lk_fail(path, "main formula is not existential")),
            };
            require(
                premise(0) == &d.sequent.with(body.open_fo(witness)),
                "premise must extend the conclusion by the instance",
            )?;
        }
        LkRule::AllIntro { main, eigen } => {
            require(d.sequent.contains(main), "main formula absent")?;
            let body = match main {
                Formula::FoQuant(Quant::All, body) => body,
                _ => return Err(lk_fail(path, "main formula is not universal")),
            };
            let instance = body.open_fo(&FoTerm::FreeVar(eigen.clone()));
            require(
                premise(0) == &d.sequent.with(instance),
                "premise must extend the conclusion by the eigen instance",
            )?;
            require(
                !d.sequent.fo_names().contains(eigen),
                "eigenvariable occurs in the conclusion",
            )?;
        }
        LkRule::Thin => {
            require(
                premise(0).is_subset(&d.sequent),
                "thinning premise must be a subset",
            )?;
        }
    }
    for (i, child) in d.premises.iter().enumerate() {
        path.push(i);
        check_lk_node(child, path)?;
        path.pop();
    }
    Ok(())
}

/// Verify a first-order derivation from scratch.
pub fn check_lk(d: &LkDerivation) -> Result<(), LkError> {
    check_lk_node(d, &mut Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordinal::{compare, finite, natural_sum, omega_index, omega_pow, one};
    use core::cmp::Ordering;

    fn rc() -> Formula {
        Formula::lit(true, Pred::canonical_rel(), FoTerm::c())
    }

    fn sc() -> Formula {
        Formula::lit(true, Pred::RelConst("S".into()), FoTerm::c())
    }

    fn base() -> Sequent {
        Sequent::of([rc(), rc().negated()])
    }

    fn ax_rc(seq: &Sequent) -> Preproof {
        Preproof::leaf(seq.clone(), Rule::Ax { formula: rc() })
    }

    fn gen_for(p: &Preproof) -> NameGen {
        NameGen::over(p)
    }

    fn omega_one() -> OrdTerm {
        omega_index(one()).unwrap()
    }

    fn omega_one_reg() -> Regular {
        Regular::omega_succ(OrdTerm::Zero).unwrap()
    }

    fn count(p: &Preproof, pred: impl FnMut(&Rule) -> bool) -> usize {
        p.rule_paths(pred).len()
    }

    #[test]
    fn excluded_middle_covers_every_connective() {
        let so_all = Formula::so(Quant::All, Formula::lit(true, Pred::BoundSo(0), FoTerm::c()));
        let fo_all = Formula::fo(
            Quant::All,
            Formula::lit(true, Pred::canonical_rel(), FoTerm::Bound(0)),
        );
        let shapes = [
            rc(),
            Formula::and(rc(), sc()),
            Formula::or(rc(), sc()),
            fo_all.clone(),
            Formula::fo(
                Quant::Ex,
                Formula::and(
                    Formula::lit(true, Pred::canonical_rel(), FoTerm::Bound(0)),
                    sc(),
                ),
            ),
            so_all.clone(),
            Formula::so(Quant::Ex, Formula::or(
                Formula::lit(false, Pred::BoundSo(0), FoTerm::c()),
                fo_all,
            )),
        ];
        for b in shapes {
            let mut gen = NameGen::seeded(BTreeSet::new());
            let t = excluded_middle(&Sequent::new(), &b, &mut gen);
            assert_eq!(t.end_sequent(), &Sequent::of([b.negated(), b.clone()]));
            check_sbl(&t).unwrap_or_else(|e| panic!("{b:?}: {e}"));
            check_purity(&t).unwrap();
        }
    }

    #[test]
    fn weakening_preserves_the_schema() {
        let mut gen = NameGen::seeded(BTreeSet::new());
        let b = Formula::fo(
            Quant::All,
            Formula::or(
                Formula::lit(false, Pred::canonical_rel(), FoTerm::Bound(0)),
                Formula::lit(true, Pred::canonical_rel(), FoTerm::Bound(0)),
            ),
        );
        let t = weaken(&excluded_middle(&Sequent::new(), &b, &mut gen), &sc());
        check_sbl(&t).unwrap();
        for (_, node) in t.nodes() {
            assert!(node.sequent.contains(&sc()));
        }
    }

    #[test]
    fn purity_repair_renames_duplicate_eigenvariables() {
        let f = Formula::fo(
            Quant::All,
            Formula::or(
                Formula::lit(false, Pred::canonical_rel(), FoTerm::Bound(0)),
                Formula::lit(true, Pred::canonical_rel(), FoTerm::Bound(0)),
            ),
        );
        let inst = |v: &str| {
            Formula::or(
                Formula::lit(false, Pred::canonical_rel(), FoTerm::FreeVar(v.into())),
                Formula::lit(true, Pred::canonical_rel(), FoTerm::FreeVar(v.into())),
            )
        };
        let root = Sequent::of([Formula::and(f.clone(), f.clone())]);
        let rz = |positive: bool| {
            Formula::lit(positive, Pred::canonical_rel(), FoTerm::FreeVar("z".into()))
        };
        let leg = || {
            let below = root.with(f.clone());
            let above = below.with(inst("z"));
            let pos = above.with(rz(true));
            Preproof::new(
                below.clone(),
                Rule::AllFo {
                    main: f.clone(),
                    eigen: "z".into(),
                },
                vec![Preproof::new(
                    above.clone(),
                    Rule::OrIntro {
                        main: inst("z"),
                        side: 1,
                    },
                    vec![Preproof::new(
                        pos.clone(),
                        Rule::OrIntro {
                            main: inst("z"),
                            side: 0,
                        },
                        vec![Preproof::leaf(
                            pos.with(rz(false)),
                            Rule::Ax { formula: rz(true) },
                        )],
                    )],
                )],
            )
        };
        let legs = vec![leg(), leg()];
        let t = Preproof::new(
            root,
            Rule::AndIntro {
                main: Formula::and(f.clone(), f.clone()),
            },
            legs,
        );
        check_sbl(&t).unwrap();
        assert!(check_purity(&t).is_err());
        let mut gen = gen_for(&t);
        let fixed = ensure_pure(&t, &mut gen).unwrap();
        check_sbl(&fixed).unwrap();
        let eigens: BTreeSet<String> = fixed
            .nodes()
            .iter()
            .filter_map(|(_, n)| n.rule.eigenvariable().map(|(_, e)| e.to_string()))
            .collect();
        assert_eq!(eigens.len(), 2);
    }

    #[test]
    fn purity_repair_grounds_stray_witnesses() {
        let main = Formula::fo(
            Quant::Ex,
            Formula::lit(true, Pred::canonical_rel(), FoTerm::Bound(0)),
        );
        let ry = Formula::lit(true, Pred::canonical_rel(), FoTerm::FreeVar("y".into()));
        let root = Sequent::of([main.clone(), ry.negated()]);
        let t = Preproof::new(
            root,
            Rule::ExFo {
                main: main.clone(),
                witness: FoTerm::FreeVar("y".into()),
            },
            vec![Preproof::leaf(
                Sequent::of([main, ry.negated(), ry.clone()]),
                Rule::Ax { formula: ry },
            )],
        );
        // `y` occurs in the end-sequent, so it stays; a variant with a fresh
        // end-sequent gets grounded.
        let mut gen = gen_for(&t);
        let kept = ensure_pure(&t, &mut gen).unwrap();
        let (fo, _) = collect_names(&kept);
        assert!(fo.contains("y"));

        let main2 = Formula::fo(
            Quant::Ex,
            Formula::or(
                Formula::lit(false, Pred::canonical_rel(), FoTerm::Bound(0)),
                Formula::lit(true, Pred::canonical_rel(), FoTerm::Bound(0)),
            ),
        );
        let disj = |t: &FoTerm| {
            Formula::or(
                Formula::lit(false, Pred::canonical_rel(), t.clone()),
                Formula::lit(true, Pred::canonical_rel(), t.clone()),
            )
        };
        let y = FoTerm::FreeVar("y".into());
        let ry2 = Formula::lit(true, Pred::canonical_rel(), y.clone());
        let root2 = Sequent::of([main2.clone()]);
        let s1 = root2.with(disj(&y));
        let s2 = s1.with(ry2.clone());
        let s3 = s2.with(ry2.negated());
        let t2 = Preproof::new(
            root2,
            Rule::ExFo {
                main: main2.clone(),
                witness: y,
            },
            vec![Preproof::new(
                s1,
                Rule::OrIntro {
                    main: disj(&FoTerm::FreeVar("y".into())),
                    side: 1,
                },
                vec![Preproof::new(
                    s2,
                    Rule::OrIntro {
                        main: disj(&FoTerm::FreeVar("y".into())),
                        side: 0,
                    },
                    vec![Preproof::leaf(s3, Rule::Ax { formula: ry2 })],
                )],
            )],
        );
        check_sbl(&t2).unwrap();
        let mut gen2 = gen_for(&t2);
        let grounded = ensure_pure(&t2, &mut gen2).unwrap();
        let (fo2, _) = collect_names(&grounded);
        assert!(!fo2.contains("y"));
        check_sbl(&grounded).unwrap();
    }

    #[test]
    fn eigenvariables_shadowing_end_sequent_names_are_renamed() {
        // the left branch of the cut proves `∀x(¬Rx ∨ Rx)` with eigenvariable
        // `z`, while the end-sequent mentions its own `z`; the name never
        // reaches the rule's lower sequent, so the schema accepts it, but the
        // clash is impure until the binder is renamed.
        let rz = Formula::lit(true, Pred::canonical_rel(), FoTerm::FreeVar("z".into()));
        let not_c = Formula::fo(
            Quant::All,
            Formula::or(
                Formula::lit(false, Pred::canonical_rel(), FoTerm::Bound(0)),
                Formula::lit(true, Pred::canonical_rel(), FoTerm::Bound(0)),
            ),
        );
        let c = not_c.negated();
        let root = Sequent::of([rz.clone(), rz.negated()]);

        let l1 = Sequent::of([not_c.clone()]);
        let inst = Formula::or(rz.negated(), rz.clone());
        let l2 = l1.with(inst.clone());
        let l3 = l2.with(rz.negated());
        let l4 = l3.with(rz.clone());
        let left = Preproof::new(
            l1,
            Rule::AllFo {
                main: not_c,
                eigen: "z".into(),
            },
            vec![Preproof::new(
                l2,
                Rule::OrIntro {
                    main: inst.clone(),
                    side: 0,
                },
                vec![Preproof::new(
                    l3,
                    Rule::OrIntro { main: inst, side: 1 },
                    vec![Preproof::leaf(l4, Rule::Ax { formula: rz.clone() })],
                )],
            )],
        );
        let right = Preproof::leaf(
            Sequent::of([c.clone(), rz.clone(), rz.negated()]),
            Rule::Ax { formula: rz },
        );
        let t = Preproof::new(root, Rule::Cut { formula: c }, vec![left, right]);
        check_sbl(&t).unwrap();
        assert!(check_purity(&t).is_err());

        let mut gen = gen_for(&t);
        let fixed = ensure_pure(&t, &mut gen).unwrap();
        check_sbl(&fixed).unwrap();
        assert!(fixed.end_sequent().fo_names().contains("z"));
        let eigen = fixed
            .nodes()
            .iter()
            .find_map(|(_, n)| n.rule.eigenvariable().map(|(_, e)| e.to_string()))
            .unwrap();
        assert_ne!(eigen, "z");
    }

    fn comprehension_input() -> Preproof {
        // `∃X ∀Y (¬Yc ∨ Xc)` introduced from the class `{x : Rx}`.
        let m = Formula::so(
            Quant::Ex,
            Formula::so(
                Quant::All,
                Formula::or(
                    Formula::lit(false, Pred::BoundSo(0), FoTerm::c()),
                    Formula::lit(true, Pred::BoundSo(1), FoTerm::c()),
                ),
            ),
        );
        let class = Abstract::new(Formula::lit(true, Pred::canonical_rel(), FoTerm::Bound(0)));
        let minor = match &m {
            Formula::SoQuant(Quant::Ex, None, body) => body.open_so(SoFill::Abs(&class)),
            _ => unreachable!(),
        };
        let e = base();
        let left = ax_rc(&e.with(m.negated()));
        let s_main = e.with(m.clone());
        let s_minor = s_main.with(minor.clone());
        let inner = match &minor {
            Formula::SoQuant(Quant::All, None, body) => {
                body.open_so(SoFill::Pred(&Pred::so("V".to_string())))
            }
            _ => unreachable!(),
        };
        let s_inner = s_minor.with(inner.clone());
        let ax = ax_rc(&s_inner.with(rc()));
        let right = Preproof::new(
            s_main.clone(),
            Rule::Bi2 {
                main: m.clone(),
                class,
            },
            vec![Preproof::new(
                s_minor,
                Rule::AllSo {
                    main: minor,
                    eigen: "V".to_string(),
                },
                vec![Preproof::new(
                    s_inner,
                    Rule::OrIntro {
                        main: inner,
                        side: 1,
                    },
                    vec![ax],
                )],
            )],
        );
        Preproof::new(e, Rule::Cut { formula: m }, vec![left, right])
    }

    #[test]
    fn comprehension_is_rewritten_into_plain_rules() {
        let input = comprehension_input();
        check_sbl(&input).unwrap();
        let mut gen = gen_for(&input);
        let pure = ensure_pure(&input, &mut gen).unwrap();
        let out = eliminate_comprehension(&pure, &mut gen);
        assert_eq!(count(&out, |r| matches!(r, Rule::Bi2 { .. })), 0);
        assert_eq!(out.end_sequent(), input.end_sequent());
        check_sbl(&out).unwrap();
        check_purity(&out).unwrap();
    }

    #[test]
    fn isolated_separation_becomes_biconditional() {
        let a = Abstract::new(Formula::lit(true, Pred::canonical_rel(), FoTerm::Bound(0)));
        let b = Abstract::new(Formula::lit(
            true,
            Pred::RelConst("S".into()),
            FoTerm::Bound(0),
        ));
        let main = separation(&a, &b);
        let e = base();
        let left = ax_rc(&e.with(main.negated()));
        let s_main = e.with(main.clone());
        let right = Preproof::new(
            s_main.clone(),
            Rule::Sep {
                left: a.clone(),
                right: b.clone(),
            },
            vec![ax_rc(&s_main.with(subset(&a, &b)))],
        );
        let input = Preproof::new(e, Rule::Cut { formula: main }, vec![left, right]);
        check_sbl(&input).unwrap();
        let mut gen = gen_for(&input);
        let out = normalize_separations(&input, &mut gen);
        assert_eq!(count(&out, |r| matches!(r, Rule::Sep { .. })), 0);
        assert_eq!(count(&out, |r| matches!(r, Rule::Bi1 { .. })), 1);
        check_sbl(&out).unwrap();

        let embedding = embed_sbl(&input).unwrap();
        assert_eq!(
            count(&embedding.proof, |r| matches!(r, Rule::ExRed { .. })),
            0
        );
        assert_eq!(count(&embedding.proof, |r| matches!(r, Rule::Bi { .. })), 1);
        // right branch: reflexivity leg closes at 4, the weakened premise at
        // 1, so the introduction lands at `Ω₁ + 5` and the cut at `Ω₁ + 6`.
        let expected = psi(
            omega_one_reg(),
            natural_sum(
                succ(OrdTerm::Inaccessible),
                omega_pow(natural_sum(omega_one(), finite(6))),
            ),
        )
        .unwrap();
        assert_eq!(embedding.proof_ordinal(), &expected);
    }

    #[test]
    fn decoration_indexes_exactly_the_tied_quantifiers() {
        // `∀X ∃Y (¬Xc ∨ Yc)`: the existential ties `X`, so only `X` gets the
        // inaccessible index.
        let c = Formula::so(
            Quant::All,
            Formula::so(
                Quant::Ex,
                Formula::or(
                    Formula::lit(false, Pred::BoundSo(1), FoTerm::c()),
                    Formula::lit(true, Pred::BoundSo(0), FoTerm::c()),
                ),
            ),
        );
        let scheme = Decoration::zeros(OrdTerm::Inaccessible, BTreeSet::new());
        let decorated = c.decorate(&scheme).unwrap();
        let expected = Formula::so_indexed(
            Quant::All,
            OrdTerm::Inaccessible,
            Formula::so(
                Quant::Ex,
                Formula::or(
                    Formula::lit(false, Pred::BoundSo(1), FoTerm::c()),
                    Formula::lit(true, Pred::BoundSo(0), FoTerm::c()),
                ),
            ),
        )
        .unwrap();
        assert_eq!(decorated, expected);
        assert_eq!(
            c.negated().decorate(&scheme).unwrap(),
            decorated.negated()
        );
    }

    #[test]
    fn prime_cut_embeds_with_one_substitution() {
        let s = Formula::lit(true, Pred::RelConst("S".into()), FoTerm::c());
        let e = base();
        let input = Preproof::new(
            e.clone(),
            Rule::Cut { formula: s.clone() },
            vec![ax_rc(&e.with(s.negated())), ax_rc(&e.with(s))],
        );
        let embedding = embed_sbl(&input).unwrap();
        assert_eq!(count(&embedding.proof, |r| matches!(r, Rule::Sub { .. })), 1);
        assert_eq!(
            count(&embedding.proof, |r| matches!(
                r,
                Rule::ExRed { .. } | Rule::AllRed { .. }
            )),
            0
        );
        assert_eq!(
            embedding.stacks.values().collect::<Vec<_>>(),
            vec![&succ(OrdTerm::Inaccessible)]
        );
        let expected = psi(
            omega_one_reg(),
            natural_sum(succ(OrdTerm::Inaccessible), omega_pow(finite(2))),
        )
        .unwrap();
        assert_eq!(embedding.proof_ordinal(), &expected);
        assert_eq!(
            compare(embedding.proof_ordinal(), &omega_one()),
            Ordering::Less
        );
    }

    #[test]
    fn ungraded_universal_cut_uses_the_weak_rule() {
        // cut on `∀X (¬Xc ∨ Xc)`, whose quantifier stays bare.
        let body = Formula::or(
            Formula::lit(false, Pred::BoundSo(0), FoTerm::c()),
            Formula::lit(true, Pred::BoundSo(0), FoTerm::c()),
        );
        let c = Formula::so(Quant::All, body);
        let e = base();

        let not_c = c.negated();
        let l1 = e.with(not_c.clone());
        let witness = Pred::canonical_rel();
        let instance = match &not_c {
            Formula::SoQuant(Quant::Ex, None, b) => b.open_so(SoFill::Pred(&witness)),
            _ => unreachable!(),
        };
        let l2 = l1.with(instance.clone());
        let (first, second) = match &instance {
            Formula::And(x, y) => (x.as_ref().clone(), y.as_ref().clone()),
            _ => unreachable!(),
        };
        let left = Preproof::new(
            l1,
            Rule::ExSo {
                main: not_c.clone(),
                witness,
            },
            vec![Preproof::new(
                l2.clone(),
                Rule::AndIntro {
                    main: instance.clone(),
                },
                vec![
                    Preproof::leaf(l2.with(first.clone()), Rule::Ax { formula: first }),
                    Preproof::leaf(l2.with(second.clone()), Rule::Ax { formula: rc() }),
                ],
            )],
        );

        let r1 = e.with(c.clone());
        let opened = match &c {
            Formula::SoQuant(Quant::All, None, b) => {
                b.open_so(SoFill::Pred(&Pred::so("V".to_string())))
            }
            _ => unreachable!(),
        };
        let r2 = r1.with(opened.clone());
        let (neg_part, pos_part) = match &opened {
            Formula::Or(x, y) => (x.as_ref().clone(), y.as_ref().clone()),
            _ => unreachable!(),
        };
        let r3 = r2.with(pos_part.clone());
        let r4 = r3.with(neg_part.clone());
        let right = Preproof::new(
            r1,
            Rule::AllSo {
                main: c.clone(),
                eigen: "V".to_string(),
            },
            vec![Preproof::new(
                r2,
                Rule::OrIntro {
                    main: opened.clone(),
                    side: 1,
                },
                vec![Preproof::new(
                    r3,
                    Rule::OrIntro {
                        main: opened,
                        side: 0,
                    },
                    vec![Preproof::leaf(r4, Rule::Ax { formula: pos_part })],
                )],
            )],
        );

        let input = Preproof::new(e, Rule::Cut { formula: c }, vec![left, right]);
        check_sbl(&input).unwrap();
        let embedding = embed_sbl(&input).unwrap();
        assert!(count(&embedding.proof, |r| matches!(r, Rule::WeakAll { .. })) == 1);
        assert_eq!(
            count(&embedding.proof, |r| matches!(
                r,
                Rule::ExRed { .. } | Rule::AllRed { .. }
            )),
            0
        );
        // left branch tops out at `Ω₁ + 6` after the biconditional carries
        // base `Ω₁`; the bare universal side closes at 4.
        let expected = psi(
            omega_one_reg(),
            natural_sum(
                succ(OrdTerm::Inaccessible),
                omega_pow(natural_sum(omega_one(), finite(6))),
            ),
        )
        .unwrap();
        assert_eq!(embedding.proof_ordinal(), &expected);
    }

    #[test]
    fn graded_cut_gets_a_reduction_and_a_taller_stack() {
        // cut on `∀X ∃Y (¬Xc ∨ Yc)`; the existential ties `X`, so the
        // decorated cut formula is graded and a reduction is inserted.
        let c = Formula::so(
            Quant::All,
            Formula::so(
                Quant::Ex,
                Formula::or(
                    Formula::lit(false, Pred::BoundSo(1), FoTerm::c()),
                    Formula::lit(true, Pred::BoundSo(0), FoTerm::c()),
                ),
            ),
        );
        let e = base();
        let left = ax_rc(&e.with(c.negated()));

        let r1 = e.with(c.clone());
        let m_v = match &c {
            Formula::SoQuant(Quant::All, None, b) => {
                b.open_so(SoFill::Pred(&Pred::so("V".to_string())))
            }
            _ => unreachable!(),
        };
        let r2 = r1.with(m_v.clone());
        let inner = match &m_v {
            Formula::SoQuant(Quant::Ex, None, b) => {
                b.open_so(SoFill::Pred(&Pred::so("V".to_string())))
            }
            _ => unreachable!(),
        };
        let r3 = r2.with(inner.clone());
        let (neg_part, pos_part) = match &inner {
            Formula::Or(x, y) => (x.as_ref().clone(), y.as_ref().clone()),
            _ => unreachable!(),
        };
        let r4 = r3.with(pos_part.clone());
        let r5 = r4.with(neg_part.clone());
        let right = Preproof::new(
            r1,
            Rule::AllSo {
                main: c.clone(),
                eigen: "V".to_string(),
            },
            vec![Preproof::new(
                r2,
                Rule::ExSo {
                    main: m_v,
                    witness: Pred::so("V".to_string()),
                },
                vec![Preproof::new(
                    r3,
                    Rule::OrIntro {
                        main: inner.clone(),
                        side: 1,
                    },
                    vec![Preproof::new(
                        r4,
                        Rule::OrIntro { main: inner, side: 0 },
                        vec![Preproof::leaf(r5, Rule::Ax { formula: pos_part })],
                    )],
                )],
            )],
        );
        let input = Preproof::new(e, Rule::Cut { formula: c }, vec![left, right]);
        check_sbl(&input).unwrap();

        let embedding = embed_sbl(&input).unwrap();
        assert_eq!(
            count(&embedding.proof, |r| matches!(r, Rule::StrongIndexed { .. })),
            1
        );
        assert_eq!(count(&embedding.proof, |r| matches!(r, Rule::Bi { .. })), 1);
        assert_eq!(count(&embedding.proof, |r| matches!(r, Rule::ExRed { .. })), 1);
        assert_eq!(count(&embedding.proof, |r| matches!(r, Rule::Sub { .. })), 1);

        // the right branch climbs to `I + 4`, the cut lands one `ω`-power up
        // at `ω^(I+5)`, the reduction collapses it, and the stack must rise
        // to the third tower level before the hull accepts the argument.
        let cut_o = omega_pow(natural_sum(OrdTerm::Inaccessible, finite(5)));
        let red_o = psi(Regular::Inaccessible, omega_pow(cut_o)).unwrap();
        let gamma = omega_tower(3, succ(OrdTerm::Inaccessible));
        assert_eq!(
            embedding.stacks.values().collect::<Vec<_>>(),
            vec![&gamma, &OrdTerm::Zero]
        );
        match embedding
            .proof
            .node_at(&[0])
            .map(|n| &n.rule)
        {
            Some(Rule::ExRed { eta, .. }) => assert_eq!(eta, &red_o),
            other => panic!("expected a reduction right above the root, got {other:?}"),
        }
        let expected = psi(omega_one_reg(), natural_sum(gamma, red_o)).unwrap();
        assert_eq!(embedding.proof_ordinal(), &expected);
    }

    #[test]
    fn vacuous_witness_cut_stays_finite_below_the_collapse() {
        // cut on `∃X Rc`: the bound variable does not occur, so the witness
        // contributes nothing and the branch never leaves finite heights.
        let d = Formula::so(Quant::Ex, rc());
        let e = base();
        let left = ax_rc(&e.with(d.negated()));
        let r1 = e.with(d.clone());
        let right = Preproof::new(
            r1.clone(),
            Rule::ExSo {
                main: d.clone(),
                witness: Pred::canonical_rel(),
            },
            vec![ax_rc(&r1)],
        );
        let input = Preproof::new(e, Rule::Cut { formula: d }, vec![left, right]);
        check_sbl(&input).unwrap();
        let embedding = embed_sbl(&input).unwrap();
        let expected = psi(
            omega_one_reg(),
            natural_sum(
                succ(OrdTerm::Inaccessible),
                omega_pow(natural_sum(omega_one(), finite(2))),
            ),
        )
        .unwrap();
        assert_eq!(embedding.proof_ordinal(), &expected);
    }

    #[test]
    fn cut_free_derivations_go_straight_through_to_lk() {
        let disj = Formula::or(rc().negated(), rc());
        let root = Sequent::of([disj.clone()]);
        let mid = root.with(rc().negated());
        let input = Preproof::new(
            root.clone(),
            Rule::OrIntro {
                main: disj.clone(),
                side: 0,
            },
            vec![Preproof::new(
                mid.clone(),
                Rule::OrIntro { main: disj, side: 1 },
                vec![ax_rc(&mid.with(rc()))],
            )],
        );
        let embedding = embed_sbl(&input).unwrap();
        assert_eq!(count(&embedding.proof, |r| matches!(r, Rule::Sub { .. })), 0);
        assert!(embedding.stacks.is_empty());
        assert_eq!(embedding.proof_ordinal(), &finite(3));

        let lk = extract_lk(&embedding.proof).unwrap();
        check_lk(&lk).unwrap();
        assert_eq!(lk.sequent, root);
    }

    #[test]
    fn extraction_refuses_derivations_with_bars() {
        let s = Formula::lit(true, Pred::RelConst("S".into()), FoTerm::c());
        let e = base();
        let input = Preproof::new(
            e.clone(),
            Rule::Cut { formula: s.clone() },
            vec![ax_rc(&e.with(s.negated())), ax_rc(&e.with(s))],
        );
        let embedding = embed_sbl(&input).unwrap();
        assert_eq!(
            extract_lk(&embedding.proof),
            Err(ExtractError::BarRemains(Vec::new()))
        );
    }

    #[test]
    fn the_lk_checker_rejects_unbalanced_axioms() {
        let d = LkDerivation {
            sequent: Sequent::of([rc()]),
            rule: LkRule::Axiom { formula: rc() },
            premises: Vec::new(),
        };
        assert!(check_lk(&d).is_err());
    }

    #[test]
    fn ungraded_separations_embed_without_reductions_and_graded_ones_with() {
        // `{x : ∀Y ∃Z (¬Yx ∨ Zx)}` is not isolated: the universal is tied.
        let body = Formula::so(
            Quant::All,
            Formula::so(
                Quant::Ex,
                Formula::or(
                    Formula::lit(false, Pred::BoundSo(1), FoTerm::Bound(0)),
                    Formula::lit(true, Pred::BoundSo(0), FoTerm::Bound(0)),
                ),
            ),
        );
        let a = Abstract::new(body);
        let b = Abstract::new(Formula::lit(true, Pred::canonical_rel(), FoTerm::Bound(0)));
        let main = separation(&a, &b);
        assert!(!main.classify().isolated());

        let e = base();
        let left = ax_rc(&e.with(main.negated()));
        let s_main = e.with(main.clone());
        let right = Preproof::new(
            s_main.clone(),
            Rule::Sep {
                left: a.clone(),
                right: b.clone(),
            },
            vec![ax_rc(&s_main.with(subset(&a, &b)))],
        );
        let input = Preproof::new(e, Rule::Cut { formula: main }, vec![left, right]);
        check_sbl(&input).unwrap();

        let embedding = embed_sbl(&input).unwrap();
        assert_eq!(
            count(&embedding.proof, |r| matches!(r, Rule::DistSep { .. })),
            1
        );
        assert_eq!(count(&embedding.proof, |r| matches!(r, Rule::ExRed { .. })), 1);
        let red_o = psi(Regular::Inaccessible, omega_pow(finite(3))).unwrap();
        let expected = psi(
            omega_one_reg(),
            natural_sum(succ(OrdTerm::Inaccessible), red_o),
        )
        .unwrap();
        assert_eq!(embedding.proof_ordinal(), &expected);
    }

    #[test]
    fn comprehension_embeds_end_to_end() {
        let input = comprehension_input();
        let embedding = embed_sbl(&input).unwrap();
        for (_, node) in embedding.proof.nodes() {
            assert!(
                !matches!(
                    node.rule,
                    Rule::Bi2 { .. }
                        | Rule::Bi1 { .. }
                        | Rule::Sep { .. }
                        | Rule::ExSo { .. }
                        | Rule::AllSo { .. }
                ),
                "plain second-order rule left in the embedded proof"
            );
        }
        assert!(count(&embedding.proof, |r| matches!(r, Rule::Critical { .. })) >= 1);
        assert!(count(&embedding.proof, |r| matches!(r, Rule::Bi { .. })) >= 1);
        assert_eq!(count(&embedding.proof, |r| matches!(r, Rule::ExRed { .. })), 1);
        assert_eq!(count(&embedding.proof, |r| matches!(r, Rule::Sub { .. })), 1);
        assert_eq!(
            compare(embedding.proof_ordinal(), &omega_one()),
            Ordering::Less
        );
        assert_eq!(embedding.proof.end_sequent(), input.end_sequent());
    }
}
