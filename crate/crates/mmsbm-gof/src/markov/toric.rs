//! A small toric-ideal engine: binomial Buchberger reduction plus variable
//! saturation, used as an independent correctness oracle for the structural
//! Markov basis on desk-scale instances (at most twelve table cells).
//!
//! Toric ideals are generated by pure differences of monomials, and pure
//! differences are closed under S-pairs and reduction, so the whole engine
//! works on exponent-vector pairs. Generators are obtained by the standard
//! recipe: start from the lattice-basis binomials of ker_Z A and saturate
//! with respect to every variable, one at a time, under a graded reverse
//! lexicographic order that makes the saturating variable cheapest.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::markov::hnf::kernel_lattice_basis;

pub const MAX_TORIC_VARS: usize = 12;

/// A pure difference of monomials p^plus - p^minus over the dyad variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Binomial {
    pub plus: Vec<u32>,
    pub minus: Vec<u32>,
}

impl Binomial {
    /// Positive / negative parts of an integer lattice vector. Returns
    /// `None` for the zero vector.
    pub fn from_lattice_vector(v: &[i64]) -> Option<Binomial> {
        if v.iter().all(|&x| x == 0) {
            return None;
        }
        let plus = v.iter().map(|&x| x.max(0) as u32).collect();
        let minus = v.iter().map(|&x| (-x).max(0) as u32).collect();
        Some(Binomial { plus, minus })
    }

    pub fn is_zero(&self) -> bool {
        self.plus == self.minus
    }

    /// Divide both monomials by their common variable content, i.e. send
    /// p^w (p^u - p^v) to p^u - p^v. Valid inside a saturated ideal.
    pub fn primitive_part(&self) -> Binomial {
        let mut plus = self.plus.clone();
        let mut minus = self.minus.clone();
        for i in 0..plus.len() {
            let c = plus[i].min(minus[i]);
            plus[i] -= c;
            minus[i] -= c;
        }
        Binomial { plus, minus }
    }

    /// Exponent-pair line, e.g. "1:1 3:2 | 2:1 4:2", for diffing against
    /// external toric software.
    pub fn to_exponent_line(&self) -> String {
        let side = |m: &[u32]| {
            let parts: Vec<String> = m
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| format!("{i}:{e}"))
                .collect();
            if parts.is_empty() {
                "1".to_string()
            } else {
                parts.join(" ")
            }
        };
        format!("{} | {}", side(&self.plus), side(&self.minus))
    }
}

impl fmt::Display for Binomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |m: &[u32]| {
            let parts: Vec<String> = m
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        format!("p{}", i + 1)
                    } else {
                        format!("p{}^{}", i + 1, e)
                    }
                })
                .collect();
            if parts.is_empty() {
                "1".to_string()
            } else {
                parts.join("*")
            }
        };
        write!(f, "{} - {}", side(&self.plus), side(&self.minus))
    }
}

/// Graded reverse lexicographic order with an explicit variable priority
/// (first entry most significant). Saturation by variable i uses a priority
/// that places i last.
#[derive(Debug, Clone)]
pub struct TermOrder {
    priority: Vec<usize>,
}

impl TermOrder {
    pub fn grevlex(nvars: usize) -> Self {
        TermOrder {
            priority: (0..nvars).collect(),
        }
    }

    /// Grevlex with `cheapest` moved to the least significant position.
    pub fn grevlex_with_last(nvars: usize, cheapest: usize) -> Self {
        let mut priority: Vec<usize> = (0..nvars).filter(|&v| v != cheapest).collect();
        priority.push(cheapest);
        TermOrder { priority }
    }

    fn cmp_monomials(&self, a: &[u32], b: &[u32]) -> Ordering {
        let da: u64 = a.iter().map(|&e| e as u64).sum();
        let db: u64 = b.iter().map(|&e| e as u64).sum();
        if da != db {
            return da.cmp(&db);
        }
        for &v in self.priority.iter().rev() {
            if a[v] != b[v] {
                // Smaller exponent on the least significant variable wins.
                return b[v].cmp(&a[v]);
            }
        }
        Ordering::Equal
    }

    /// Put the leading monomial in `plus`. Returns `None` for the zero
    /// binomial.
    fn normalize(&self, mut f: Binomial) -> Option<Binomial> {
        match self.cmp_monomials(&f.plus, &f.minus) {
            Ordering::Equal => None,
            Ordering::Less => {
                std::mem::swap(&mut f.plus, &mut f.minus);
                Some(f)
            }
            Ordering::Greater => Some(f),
        }
    }
}

fn divides(d: &[u32], m: &[u32]) -> bool {
    d.iter().zip(m).all(|(&de, &me)| de <= me)
}

fn coprime(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(&x, &y)| x == 0 || y == 0)
}

/// m / lead(g) * tail(g): replace one monomial via the rewrite rule of g.
fn rewrite(m: &[u32], g: &Binomial) -> Vec<u32> {
    m.iter()
        .zip(&g.plus)
        .zip(&g.minus)
        .map(|((&me, &pe), &te)| me - pe + te)
        .collect()
}

/// Resource guards for the Buchberger closure.
#[derive(Debug, Clone, Copy)]
pub struct EngineLimits {
    pub max_basis: usize,
    pub max_pairs: usize,
    pub max_degree: u64,
}

impl Default for EngineLimits {
    fn default() -> Self {
        EngineLimits {
            max_basis: 4_000,
            max_pairs: 200_000,
            max_degree: 120,
        }
    }
}

fn degree(m: &[u32]) -> u64 {
    m.iter().map(|&e| e as u64).sum()
}

/// Fully reduce `f` against `basis`; `None` means it reduced to zero.
pub fn normal_form(f: &Binomial, basis: &[Binomial], order: &TermOrder) -> Option<Binomial> {
    let mut cur = order.normalize(f.clone())?;
    'outer: loop {
        for g in basis {
            if divides(&g.plus, &cur.plus) {
                cur.plus = rewrite(&cur.plus, g);
                match order.normalize(cur) {
                    Some(next) => {
                        cur = next;
                        continue 'outer;
                    }
                    None => return None,
                }
            }
        }
        // Leading monomial irreducible; try the trailing one.
        for g in basis {
            if divides(&g.plus, &cur.minus) {
                cur.minus = rewrite(&cur.minus, g);
                match order.normalize(cur) {
                    Some(next) => {
                        cur = next;
                        continue 'outer;
                    }
                    None => return None,
                }
            }
        }
        return Some(cur);
    }
}

/// True iff `f` lies in the ideal generated by the Groebner basis `basis`.
pub fn reduces_to_zero(f: &Binomial, basis: &[Binomial], order: &TermOrder) -> bool {
    normal_form(f, basis, order).is_none()
}

/// Buchberger closure of a set of binomials under the given order.
pub fn buchberger(
    gens: &[Binomial],
    order: &TermOrder,
    limits: &EngineLimits,
) -> Result<Vec<Binomial>> {
    let mut basis: Vec<Binomial> = Vec::new();
    let mut seen: BTreeSet<Binomial> = BTreeSet::new();
    for g in gens {
        if let Some(n) = order.normalize(g.clone()) {
            if seen.insert(n.clone()) {
                basis.push(n);
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (0..basis.len())
        .flat_map(|i| (0..i).map(move |j| (j, i)))
        .collect();
    let mut processed = 0usize;

    while let Some((i, j)) = pairs.pop() {
        processed += 1;
        if processed > limits.max_pairs {
            return Err(Error::Capacity(format!(
                "buchberger exceeded {} s-pairs",
                limits.max_pairs
            )));
        }
        let (fi, fj) = (&basis[i], &basis[j]);
        if coprime(&fi.plus, &fj.plus) {
            continue;
        }
        let lcm: Vec<u32> = fi
            .plus
            .iter()
            .zip(&fj.plus)
            .map(|(&a, &b)| a.max(b))
            .collect();
        if degree(&lcm) > limits.max_degree {
            return Err(Error::Capacity(format!(
                "buchberger exceeded degree bound {}",
                limits.max_degree
            )));
        }
        let s = Binomial {
            plus: rewrite(&lcm, fi),
            minus: rewrite(&lcm, fj),
        };
        if let Some(nf) = normal_form(&s, &basis, order) {
            if seen.insert(nf.clone()) {
                basis.push(nf);
                if basis.len() > limits.max_basis {
                    return Err(Error::Capacity(format!(
                        "buchberger exceeded basis size {}",
                        limits.max_basis
                    )));
                }
                let new = basis.len() - 1;
                pairs.extend((0..new).map(|k| (k, new)));
            }
        }
    }

    // Interreduce: drop generators whose lead is divisible by another lead,
    // then fully reduce tails.
    let mut keep: Vec<Binomial> = Vec::new();
    for (i, g) in basis.iter().enumerate() {
        let redundant = basis
            .iter()
            .enumerate()
            .any(|(k, h)| k != i && divides(&h.plus, &g.plus) && (h.plus != g.plus || k < i));
        if !redundant {
            keep.push(g.clone());
        }
    }
    let mut reduced: Vec<Binomial> = Vec::new();
    for i in 0..keep.len() {
        let others: Vec<Binomial> = keep
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, h)| h.clone())
            .collect();
        if let Some(nf) = normal_form(&keep[i], &others, order) {
            reduced.push(nf);
        }
    }
    reduced.sort();
    Ok(reduced)
}

/// Saturate the binomial ideal with respect to every variable:
/// ((J : p_1^inf) : ... : p_r^inf), computed per variable with a grevlex
/// order that makes that variable cheapest. The input ideal must be
/// homogeneous, which holds whenever the all-ones vector lies in the row
/// span of the design matrix.
fn saturate_all(mut gens: Vec<Binomial>, nvars: usize, limits: &EngineLimits) -> Result<Vec<Binomial>> {
    for var in 0..nvars {
        if gens.is_empty() {
            break;
        }
        let order = TermOrder::grevlex_with_last(nvars, var);
        let gb = buchberger(&gens, &order, limits)?;
        gens = gb
            .into_iter()
            .filter_map(|mut g| {
                let c = g.plus[var].min(g.minus[var]);
                g.plus[var] -= c;
                g.minus[var] -= c;
                if g.is_zero() {
                    None
                } else {
                    Some(g)
                }
            })
            .collect();
    }
    Ok(gens)
}

/// Generators of the toric ideal I_A of a dense design matrix with at most
/// [`MAX_TORIC_VARS`] columns: lattice-basis binomials saturated by every
/// variable, returned as an interreduced Groebner basis under plain grevlex.
pub fn toric_generators(a: &[Vec<i64>]) -> Result<Vec<Binomial>> {
    toric_generators_with_limits(a, &EngineLimits::default())
}

pub fn toric_generators_with_limits(
    a: &[Vec<i64>],
    limits: &EngineLimits,
) -> Result<Vec<Binomial>> {
    let nvars = if a.is_empty() { 0 } else { a[0].len() };
    if nvars > MAX_TORIC_VARS {
        return Err(Error::Capacity(format!(
            "toric engine supports at most {MAX_TORIC_VARS} variables, got {nvars}"
        )));
    }
    let lattice = kernel_lattice_basis(a)?;
    let gens: Vec<Binomial> = lattice
        .iter()
        .filter_map(|v| Binomial::from_lattice_vector(v))
        .collect();
    if gens.is_empty() {
        return Ok(Vec::new());
    }
    let saturated = saturate_all(gens, nvars, limits)?;
    let final_gb = buchberger(&saturated, &TermOrder::grevlex(nvars), limits)?;
    Ok(final_gb.into_iter().map(|g| g.primitive_part()).collect())
}

/// Do two binomial sets generate the same ideal? Decided by mutual normal
/// form reduction against each other's Groebner bases.
pub fn same_ideal(lhs: &[Binomial], rhs: &[Binomial], nvars: usize) -> Result<bool> {
    let order = TermOrder::grevlex(nvars);
    let limits = EngineLimits::default();
    let gb_l = buchberger(lhs, &order, &limits)?;
    let gb_r = buchberger(rhs, &order, &limits)?;
    let l_in_r = lhs.iter().all(|f| reduces_to_zero(f, &gb_r, &order));
    let r_in_l = rhs.iter().all(|f| reduces_to_zero(f, &gb_l, &order));
    Ok(l_in_r && r_in_l)
}
