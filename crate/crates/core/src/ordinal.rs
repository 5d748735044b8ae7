//! Terms of the ordinal notation system and the operations that keep them
//! canonical: natural sum, `ω`-powers, the `Ω`-hierarchy, and the collapsing
//! functions `ψ_σ` guarded by hull membership.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// A term of the ordinal notation system, kept in canonical form.
///
/// Canonical form means:
/// * `Sum` holds at least two additively principal components, weakly
///   decreasing under [`compare`];
/// * `OmegaPow` exponents never denote epsilon numbers (those powers collapse
///   onto the exponent, see [`omega_pow`]);
/// * `OmegaIndex` subscripts are nonzero, below `I`, and not fixpoints of the
///   `Ω`-hierarchy (see [`omega_index`]);
/// * `Psi` terms satisfy the hull conditions checked by [`psi_valid`].
///
/// The derived `Ord`/`PartialOrd` are *structural* and exist so terms can key
/// sets and maps; the ordinal order is [`compare`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OrdTerm {
    /// The ordinal `0`.
    Zero,
    /// A natural sum of additively principal components, largest first.
    Sum(Vec<OrdTerm>),
    /// `ω^e` for an exponent `e` that is not an epsilon number.
    OmegaPow(Box<OrdTerm>),
    /// `Ω_i`, the `i`-th uncountable cardinal, for `0 < i < I` with `i` not
    /// itself a fixpoint of the hierarchy.
    OmegaIndex(Box<OrdTerm>),
    /// `ψ_σ(a)`, the collapse of `a` below the regular `σ`.
    Psi(Regular, Box<OrdTerm>),
    /// `I`, the first weakly inaccessible cardinal.
    Inaccessible,
}

/// A regular cardinal usable as a collapsing subscript: `I` itself or a
/// successor cardinal `Ω_{μ+1}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Regular {
    /// The inaccessible `I`.
    Inaccessible,
    /// `Ω_{μ+1}`; the box stores `μ`.
    OmegaSucc(Box<OrdTerm>),
}

/// Failures of the checked term constructors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrdError {
    /// An `Ω` subscript at or above `I` (other than the fixpoints that
    /// absorb) has no meaning in this system.
    IndexAboveInaccessible,
    /// `ψ_σ(a)` where `σ` or `a` cannot be rebuilt inside the hull the term
    /// itself determines.
    PsiOutsideHull,
    /// A structural canonical-form violation, found when validating raw
    /// input.
    Malformed(&'static str),
}

impl fmt::Display for OrdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrdError::IndexAboveInaccessible => {
                write!(f, "cardinal subscript at or above the inaccessible")
            }
            OrdError::PsiOutsideHull => {
                write!(f, "collapse argument escapes its own hull")
            }
            OrdError::Malformed(why) => write!(f, "not in canonical form: {why}"),
        }
    }
}

impl OrdTerm {
    pub fn is_zero(&self) -> bool {
        *self == OrdTerm::Zero
    }

    /// Additively principal: not `0` and not a proper sum.
    pub fn is_principal(&self) -> bool {
        matches!(
            self,
            OrdTerm::OmegaPow(_)
                | OrdTerm::OmegaIndex(_)
                | OrdTerm::Psi(..)
                | OrdTerm::Inaccessible
        )
    }

    /// Denotes an epsilon number, i.e. absorbs an `ω^·` around itself.
    /// Uncountable cardinals and every collapse value are epsilon numbers;
    /// canonical `OmegaPow` and `Sum` terms never are.
    pub fn is_epsilon(&self) -> bool {
        matches!(
            self,
            OrdTerm::OmegaIndex(_) | OrdTerm::Psi(..) | OrdTerm::Inaccessible
        )
    }

    /// Fixpoint of the `Ω`-hierarchy: exactly the `ψ_I` values and `I`.
    pub fn is_omega_fixpoint(&self) -> bool {
        matches!(
            self,
            OrdTerm::Psi(Regular::Inaccessible, _) | OrdTerm::Inaccessible
        )
    }

    /// The additively principal components, most significant first.
    pub fn components(&self) -> &[OrdTerm] {
        match self {
            OrdTerm::Zero => &[],
            OrdTerm::Sum(xs) => xs,
            other => core::slice::from_ref(other),
        }
    }

    /// Like [`Self::components`], but consuming.
    pub fn into_components(self) -> Vec<OrdTerm> {
        match self {
            OrdTerm::Zero => Vec::new(),
            OrdTerm::Sum(xs) => xs,
            other => vec![other],
        }
    }

    fn from_components(mut xs: Vec<OrdTerm>) -> OrdTerm {
        match xs.len() {
            0 => OrdTerm::Zero,
            1 => xs.pop().expect("len checked"),
            _ => OrdTerm::Sum(xs),
        }
    }
}

impl Regular {
    /// Builds `Ω_{μ+1}`; `μ` must lie below `I`.
    pub fn omega_succ(mu: OrdTerm) -> Result<Regular, OrdError> {
        if compare(&mu, &OrdTerm::Inaccessible) == Ordering::Less {
            Ok(Regular::OmegaSucc(Box::new(mu)))
        } else {
            Err(OrdError::IndexAboveInaccessible)
        }
    }

    /// The ordinal the regular denotes.
    ///
    /// Panics if the regular was assembled by hand with `μ ≥ I`; the checked
    /// constructor rules that out.
    pub fn to_ord(&self) -> OrdTerm {
        match self {
            Regular::Inaccessible => OrdTerm::Inaccessible,
            Regular::OmegaSucc(mu) => omega_index(succ((**mu).clone()))
                .expect("successor subscripts below I never absorb or overflow"),
        }
    }

    /// Reads a regular back off its ordinal form, if it has one.
    pub fn from_ord(t: &OrdTerm) -> Option<Regular> {
        match t {
            OrdTerm::Inaccessible => Some(Regular::Inaccessible),
            OrdTerm::OmegaIndex(i) => pred(i).map(|mu| Regular::OmegaSucc(Box::new(mu))),
            _ => None,
        }
    }
}

/// The ordinal `1 = ω^0`.
pub fn one() -> OrdTerm {
    OrdTerm::OmegaPow(Box::new(OrdTerm::Zero))
}

/// The finite ordinal `n`.
pub fn finite(n: u64) -> OrdTerm {
    match n {
        0 => OrdTerm::Zero,
        1 => one(),
        _ => OrdTerm::Sum(vec![one(); n as usize]),
    }
}

/// `t + 1`.
pub fn succ(t: OrdTerm) -> OrdTerm {
    natural_sum(t, one())
}

/// `Some(μ)` when `t = μ + 1`.
pub fn pred(t: &OrdTerm) -> Option<OrdTerm> {
    let xs = t.components();
    match xs.last() {
        Some(last) if *last == one() => {
            let rest = xs[..xs.len() - 1].to_vec();
            Some(OrdTerm::from_components(rest))
        }
        _ => None,
    }
}

/// The natural (Hessenberg) sum: merges the component lists in decreasing
/// order. Associative, commutative, strictly monotone in both arguments.
pub fn natural_sum(a: OrdTerm, b: OrdTerm) -> OrdTerm {
    let mut xi = a.into_components().into_iter().peekable();
    let mut yi = b.into_components().into_iter().peekable();
    let mut merged = Vec::new();
    loop {
        let take_right = match (xi.peek(), yi.peek()) {
            (Some(x), Some(y)) => compare(x, y) == Ordering::Less,
            (Some(_), None) => false,
            (None, Some(_)) => true,
            (None, None) => break,
        };
        let next = if take_right { yi.next() } else { xi.next() };
        merged.push(next.expect("peeked"));
    }
    OrdTerm::from_components(merged)
}

/// `ω^e`. Epsilon numbers absorb the power, so the result is canonical for
/// every canonical `e`.
pub fn omega_pow(e: OrdTerm) -> OrdTerm {
    if e.is_epsilon() {
        e
    } else {
        OrdTerm::OmegaPow(Box::new(e))
    }
}

/// An iterated power `ω^{ω^{…^base}}` of the given height.
pub fn omega_tower(height: u32, base: OrdTerm) -> OrdTerm {
    (0..height).fold(base, |t, _| omega_pow(t))
}

/// `Ω_i`. `Ω_0 = 0`; fixpoints of the hierarchy absorb the wrapper;
/// subscripts beyond `I` are rejected.
pub fn omega_index(i: OrdTerm) -> Result<OrdTerm, OrdError> {
    if i.is_zero() {
        Ok(OrdTerm::Zero)
    } else if i.is_omega_fixpoint() {
        Ok(i)
    } else if compare(&i, &OrdTerm::Inaccessible) == Ordering::Less {
        Ok(OrdTerm::OmegaIndex(Box::new(i)))
    } else {
        Err(OrdError::IndexAboveInaccessible)
    }
}

/// `ψ_σ(a)`, provided the hull conditions hold.
pub fn psi(sigma: Regular, arg: OrdTerm) -> Result<OrdTerm, OrdError> {
    if psi_valid(&sigma, &arg) {
        Ok(OrdTerm::Psi(sigma, Box::new(arg)))
    } else {
        Err(OrdError::PsiOutsideHull)
    }
}

/// Whether `ψ_σ(a)` names an ordinal: both `σ` and `a` must be rebuildable
/// inside the hull that treats the candidate value itself as the cutoff and
/// `a` as the bound on collapse arguments.
pub fn psi_valid(sigma: &Regular, arg: &OrdTerm) -> bool {
    let candidate = OrdTerm::Psi(sigma.clone(), Box::new(arg.clone()));
    in_hull(&sigma.to_ord(), arg, &candidate) && in_hull(arg, arg, &candidate)
}

/// Collapse arguments that survive in `term` when every `ψ`-subterm with
/// value below `cutoff` is treated as atomic.
///
/// `term` lies in the hull with bound `α` and cutoff `β` exactly when all of
/// `hull_coefficients(term, β)` are below `α`; see [`in_hull`].
pub fn hull_coefficients(term: &OrdTerm, cutoff: &OrdTerm) -> BTreeSet<OrdTerm> {
    let mut out = BTreeSet::new();
    collect_hull_coefficients(term, cutoff, &mut out);
    out
}

fn collect_hull_coefficients(term: &OrdTerm, cutoff: &OrdTerm, out: &mut BTreeSet<OrdTerm>) {
    match term {
        OrdTerm::Zero | OrdTerm::Inaccessible => {}
        OrdTerm::Sum(xs) => {
            for x in xs {
                collect_hull_coefficients(x, cutoff, out);
            }
        }
        OrdTerm::OmegaPow(e) => collect_hull_coefficients(e, cutoff, out),
        OrdTerm::OmegaIndex(i) => collect_hull_coefficients(i, cutoff, out),
        OrdTerm::Psi(sigma, arg) => {
            if compare(term, cutoff) == Ordering::Less {
                return;
            }
            if let Regular::OmegaSucc(mu) = sigma {
                collect_hull_coefficients(mu, cutoff, out);
            }
            collect_hull_coefficients(arg, cutoff, out);
            out.insert((**arg).clone());
        }
    }
}

/// Membership in the hull `H_bound(cutoff)`: every collapse argument that
/// survives above the cutoff must stay below the bound.
pub fn in_hull(term: &OrdTerm, bound: &OrdTerm, cutoff: &OrdTerm) -> bool {
    hull_coefficients(term, cutoff)
        .iter()
        .all(|c| compare(c, bound) == Ordering::Less)
}

/// Total order on canonical terms. `Equal` coincides with structural
/// equality.
pub fn compare(a: &OrdTerm, b: &OrdTerm) -> Ordering {
    if a == b {
        return Ordering::Equal;
    }
    match (a.is_zero(), b.is_zero()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => compare_components(a.components(), b.components()),
    }
}

fn compare_components(xs: &[OrdTerm], ys: &[OrdTerm]) -> Ordering {
    for (x, y) in xs.iter().zip(ys) {
        match compare_principal(x, y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    // One side is a prefix of the other; extra components only add.
    xs.len().cmp(&ys.len())
}

/// Order on additively principal terms. Every such term is a power of `ω`,
/// so comparing the (implicit) exponents decides: `ω^e` carries exponent `e`,
/// while an epsilon number is its own exponent.
fn compare_principal(p: &OrdTerm, q: &OrdTerm) -> Ordering {
    match (p, q) {
        (OrdTerm::OmegaPow(e), OrdTerm::OmegaPow(f)) => compare(e, f),
        (OrdTerm::OmegaPow(e), _) => compare(e, q),
        (_, OrdTerm::OmegaPow(f)) => compare(p, f),
        _ => compare_epsilon(p, q),
    }
}

/// Order on the epsilon-number forms: `I`, `Ω_i`, and collapses.
///
/// The case split leans on three facts about where collapses land:
/// * `ψ_{Ω_{μ+1}}` values sit strictly between `Ω_μ` and `Ω_{μ+1}`;
/// * `ψ_I` values are fixpoints of the `Ω`-hierarchy, so `Ω_{ψ_I a} = ψ_I a`;
/// * both collapsing families are strictly monotone in their argument.
fn compare_epsilon(e: &OrdTerm, f: &OrdTerm) -> Ordering {
    match (e, f) {
        (OrdTerm::Inaccessible, OrdTerm::Inaccessible) => Ordering::Equal,
        (OrdTerm::Inaccessible, _) => Ordering::Greater,
        (_, OrdTerm::Inaccessible) => Ordering::Less,

        (OrdTerm::OmegaIndex(i), OrdTerm::OmegaIndex(j)) => compare(i, j),

        // Ω_i against a fixpoint ψ_I c = Ω_{ψ_I c}: compare the subscripts.
        (OrdTerm::OmegaIndex(i), OrdTerm::Psi(Regular::Inaccessible, _)) => compare(i, f),
        (OrdTerm::Psi(Regular::Inaccessible, _), OrdTerm::OmegaIndex(j)) => compare(j, e).reverse(),

        // Ω_i against Ω_μ < ψ_{Ω_{μ+1}} b < Ω_{μ+1}: below iff i ≤ μ.
        (OrdTerm::OmegaIndex(i), OrdTerm::Psi(Regular::OmegaSucc(mu), _)) => {
            if compare(i, mu) == Ordering::Greater {
                Ordering::Greater
            } else {
                Ordering::Less
            }
        }
        (OrdTerm::Psi(Regular::OmegaSucc(mu), _), OrdTerm::OmegaIndex(j)) => {
            if compare(j, mu) == Ordering::Greater {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        }

        (OrdTerm::Psi(Regular::Inaccessible, a), OrdTerm::Psi(Regular::Inaccessible, b)) => {
            compare(a, b)
        }
        (OrdTerm::Psi(Regular::OmegaSucc(mu), a), OrdTerm::Psi(Regular::OmegaSucc(nu), b)) => {
            match compare(mu, nu) {
                Ordering::Equal => compare(a, b),
                other => other,
            }
        }

        // ψ_{Ω_{μ+1}} b against a fixpoint ψ_I c: the collapse stays inside
        // (Ω_μ, Ω_{μ+1}), so it is below exactly when μ < ψ_I c.
        (OrdTerm::Psi(Regular::OmegaSucc(mu), _), OrdTerm::Psi(Regular::Inaccessible, _)) => {
            if compare(mu, f) == Ordering::Less {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        }
        (OrdTerm::Psi(Regular::Inaccessible, _), OrdTerm::Psi(Regular::OmegaSucc(nu), _)) => {
            if compare(nu, e) == Ordering::Less {
                Ordering::Greater
            } else {
                Ordering::Less
            }
        }

        _ => unreachable!("compare_epsilon only sees epsilon-number forms"),
    }
}

/// Checks that a raw term (e.g. freshly parsed) is in canonical form.
pub fn validate(t: &OrdTerm) -> Result<(), OrdError> {
    match t {
        OrdTerm::Zero | OrdTerm::Inaccessible => Ok(()),
        OrdTerm::Sum(xs) => {
            if xs.len() < 2 {
                return Err(OrdError::Malformed("sum with fewer than two components"));
            }
            for x in xs {
                if !x.is_principal() {
                    return Err(OrdError::Malformed("sum component not additively principal"));
                }
                validate(x)?;
            }
            if xs
                .windows(2)
                .any(|w| compare(&w[0], &w[1]) == Ordering::Less)
            {
                return Err(OrdError::Malformed("sum components out of order"));
            }
            Ok(())
        }
        OrdTerm::OmegaPow(e) => {
            if e.is_epsilon() {
                return Err(OrdError::Malformed(
                    "power of an epsilon number collapses onto the exponent",
                ));
            }
            validate(e)
        }
        OrdTerm::OmegaIndex(i) => {
            validate(i)?;
            if i.is_zero() {
                return Err(OrdError::Malformed("Ω_0 collapses to 0"));
            }
            if i.is_omega_fixpoint() {
                return Err(OrdError::Malformed(
                    "Ω at one of its fixpoints collapses onto the subscript",
                ));
            }
            if compare(i, &OrdTerm::Inaccessible) != Ordering::Less {
                return Err(OrdError::IndexAboveInaccessible);
            }
            Ok(())
        }
        OrdTerm::Psi(sigma, arg) => {
            if let Regular::OmegaSucc(mu) = sigma {
                validate(mu)?;
                if compare(mu, &OrdTerm::Inaccessible) != Ordering::Less {
                    return Err(OrdError::IndexAboveInaccessible);
                }
            }
            validate(arg)?;
            if !psi_valid(sigma, arg) {
                return Err(OrdError::PsiOutsideHull);
            }
            Ok(())
        }
    }
}

/// Every canonical term of constructor depth at most `depth`.
///
/// Depth is the minimal nesting of operations needed to build the term from
/// `0` and `I`: binary natural sum, `ω^·`, `Ω_·`, and `ψ_σ(·)` each cost one
/// level, and a subscript `σ = Ω_{μ+1}` costs whatever its cardinal term
/// costs. Canonicalization can only shrink a term, so applying each
/// operation to the depth-`< h` pool finds everything at depth `h`.
pub fn enumerate_to_depth(depth: u32) -> BTreeSet<OrdTerm> {
    let mut pool: BTreeSet<OrdTerm> = BTreeSet::new();
    pool.insert(OrdTerm::Zero);
    pool.insert(OrdTerm::Inaccessible);
    for _ in 1..=depth {
        let prev: Vec<OrdTerm> = pool.iter().cloned().collect();
        let mut fresh: Vec<OrdTerm> = Vec::new();
        for a in &prev {
            fresh.push(omega_pow(a.clone()));
            if let Ok(t) = omega_index(a.clone()) {
                fresh.push(t);
            }
            for b in &prev {
                fresh.push(natural_sum(a.clone(), b.clone()));
            }
            if let Some(sigma) = Regular::from_ord(a) {
                for b in &prev {
                    if let Ok(t) = psi(sigma.clone(), b.clone()) {
                        fresh.push(t);
                    }
                }
            }
        }
        pool.extend(fresh);
    }
    pool
}

impl fmt::Display for OrdTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrdTerm::Zero => write!(f, "0"),
            OrdTerm::Inaccessible => write!(f, "I"),
            OrdTerm::Sum(xs) => {
                for (k, x) in xs.iter().enumerate() {
                    if k > 0 {
                        write!(f, "+")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
            OrdTerm::OmegaPow(e) => {
                if e.is_zero() {
                    write!(f, "1")
                } else if **e == one() {
                    write!(f, "w")
                } else {
                    write!(f, "w^({e})")
                }
            }
            OrdTerm::OmegaIndex(i) => write!(f, "W_({i})"),
            OrdTerm::Psi(sigma, a) => write!(f, "psi[{sigma}]({a})"),
        }
    }
}

impl fmt::Display for Regular {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regular::Inaccessible => write!(f, "I"),
            Regular::OmegaSucc(mu) => write!(f, "W_({mu}+1)"),
        }
    }
}
