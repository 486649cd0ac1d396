//! Markov bases for MMSBM design matrices, plus exact-enumeration oracles.
//!
//! The production construction is structural. Dyads sharing a class have
//! identical design-matrix columns, so swapping mass between them is a move
//! (a "star" of differences per class). What remains after identifying each
//! class with a representative is the independence model on the bipartite
//! graph of nonempty classes (sender blocks on one side, receiver blocks on
//! the other), whose toric ideal is generated by the binomials of its
//! chordless cycles; each chordless cycle contributes one alternating move
//! on representative dyads. When every class quadruple (k1,l1), (k1,l2),
//! (k2,l1), (k2,l2) is nonempty these are exactly the 2x2 exchange moves;
//! sparser class patterns require the longer cycles.
//!
//! The saturation engine in [`toric`] certifies the construction on small
//! instances: both generator sets must present the same ideal, which by the
//! fundamental correspondence between toric-ideal generating sets and
//! Markov bases certifies connectivity of every fiber.

pub mod hnf;
pub mod toric;

pub use hnf::kernel_lattice_basis;
pub use toric::{toric_generators, Binomial};

use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::design::{sufficient_statistic, DesignMatrix};
use crate::error::{Error, Result};

/// One integer move: a sparse vector over dyads with A . move = 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Move {
    /// (dyad index, coefficient), sorted by dyad index.
    terms: Vec<(usize, i32)>,
}

impl Move {
    fn new(mut terms: Vec<(usize, i32)>) -> Self {
        terms.sort_by_key(|&(d, _)| d);
        debug_assert!(terms.iter().all(|&(_, c)| c != 0));
        Move { terms }
    }

    pub fn terms(&self) -> &[(usize, i32)] {
        &self.terms
    }

    /// Apply `sign * move` to the table if the result stays nonnegative
    /// (and below `cap`, when given). Returns false and leaves the table
    /// untouched otherwise.
    pub fn apply(&self, table: &mut [u32], sign: i32, cap: Option<u32>) -> bool {
        for &(d, c) in &self.terms {
            let delta = c * sign;
            let cur = table[d] as i64 + delta as i64;
            if cur < 0 {
                return false;
            }
            if let Some(hi) = cap {
                if cur > hi as i64 {
                    return false;
                }
            }
        }
        for &(d, c) in &self.terms {
            let delta = (c * sign) as i64;
            table[d] = (table[d] as i64 + delta) as u32;
        }
        true
    }

    /// The move as a lattice vector of the given length.
    pub fn to_vector(&self, len: usize) -> Vec<i64> {
        let mut v = vec![0i64; len];
        for &(d, c) in &self.terms {
            v[d] = c as i64;
        }
        v
    }

    /// The move written as a binomial p^(m+) - p^(m-).
    pub fn to_binomial(&self, len: usize) -> Binomial {
        Binomial::from_lattice_vector(&self.to_vector(len))
            .expect("moves are nonzero by construction")
    }
}

impl fmt::Display for Move {
    /// Line format "+1*d3 -1*d7 ...", dyads 0-based.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|&(d, c)| format!("{}{}*d{}", if c >= 0 { "+" } else { "-" }, c.abs(), d))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// A finite set of moves spanning the fibers of one design matrix.
#[derive(Debug, Clone)]
pub struct MarkovBasis {
    moves: Vec<Move>,
    table_len: usize,
}

impl MarkovBasis {
    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn table_len(&self) -> usize {
        self.table_len
    }

    /// Debug emission, one move per line.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for m in &self.moves {
            out.push_str(&m.to_string());
            out.push('\n');
        }
        out
    }

    pub fn to_binomials(&self) -> Vec<Binomial> {
        self.moves
            .iter()
            .map(|m| m.to_binomial(self.table_len))
            .collect()
    }
}

/// Enumerate the chordless cycles of the bipartite class graph. Vertices
/// 0..k are sender blocks, k..2k receiver blocks; `adj` is symmetric.
/// Returns each cycle once as its vertex sequence.
fn chordless_cycles(adj: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut cycles = Vec::new();
    let mut path: Vec<usize> = Vec::new();
    let mut in_path = vec![false; n];

    fn dfs(
        v: usize,
        start: usize,
        adj: &[Vec<bool>],
        path: &mut Vec<usize>,
        in_path: &mut [bool],
        cycles: &mut Vec<Vec<usize>>,
    ) {
        for w in (start + 1)..adj.len() {
            if !adj[v][w] || in_path[w] {
                continue;
            }
            // Chordless prune: w may touch only its predecessor v and,
            // when closing, the start vertex.
            let internal = if path.len() >= 2 {
                &path[1..path.len() - 1]
            } else {
                &[][..]
            };
            if internal.iter().any(|&u| adj[w][u]) {
                continue;
            }
            if path.len() == 1 {
                // w is the second vertex; its edge back to start is the
                // tree edge, not a chord.
                path.push(w);
                in_path[w] = true;
                dfs(w, start, adj, path, in_path, cycles);
                in_path[w] = false;
                path.pop();
            } else if adj[w][start] {
                // Closing edge. Any longer cycle through w would carry the
                // chord (w, start), so record and stop here.
                if path.len() >= 3 && path[1] < w {
                    let mut cycle = path.clone();
                    cycle.push(w);
                    cycles.push(cycle);
                }
            } else {
                path.push(w);
                in_path[w] = true;
                dfs(w, start, adj, path, in_path, cycles);
                in_path[w] = false;
                path.pop();
            }
        }
    }

    for start in 0..n {
        path.clear();
        path.push(start);
        in_path[start] = true;
        dfs(start, start, adj, &mut path, &mut in_path, &mut cycles);
        in_path[start] = false;
    }
    cycles
}

/// The structural Markov basis: within-class stars plus one alternating
/// move per chordless cycle of the nonempty-class graph.
pub fn structural_basis(a: &DesignMatrix) -> MarkovBasis {
    let k = a.block_count();
    let mut moves = Vec::new();

    // Stars: every dyad of a class exchanges with the class's first dyad.
    for (s, r) in a.nonempty_classes() {
        let members = a.class_members(s, r);
        let center = members[0];
        for &d in &members[1..] {
            moves.push(Move::new(vec![(d, 1), (center, -1)]));
        }
    }

    // Cycle moves on class representatives.
    let mut adj = vec![vec![false; 2 * k]; 2 * k];
    let mut rep = HashMap::new();
    for (s, r) in a.nonempty_classes() {
        adj[s][k + r] = true;
        adj[k + r][s] = true;
        rep.insert((s, r), a.class_members(s, r)[0]);
    }
    for cycle in chordless_cycles(&adj) {
        let mut terms = Vec::with_capacity(cycle.len());
        for (e, (&u, &v)) in cycle
            .iter()
            .zip(cycle.iter().cycle().skip(1))
            .enumerate()
            .take(cycle.len())
        {
            let (s, r) = if u < k { (u, v - k) } else { (v, u - k) };
            let sign = if e % 2 == 0 { 1 } else { -1 };
            terms.push((rep[&(s, r)], sign));
        }
        moves.push(Move::new(terms));
    }

    MarkovBasis {
        moves,
        table_len: a.table_len(),
    }
}

fn ln_choose(n: f64, k: f64) -> f64 {
    if k <= 0.0 || n <= 0.0 {
        return 0.0;
    }
    // Rough Stirling bound is enough for a capacity estimate.
    let lf = |x: f64| {
        if x < 1.0 {
            0.0
        } else {
            x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        }
    };
    lf(n) - lf(k) - lf(n - k)
}

const FIBER_GUARD: f64 = 1_000_000.0;

/// Cheap upper bound on the fiber size: compositions of each sender margin
/// over its dyads, and likewise for receivers; the true fiber satisfies
/// both.
fn fiber_size_bound(a: &DesignMatrix, stat: &crate::design::SuffStat) -> f64 {
    let k = a.block_count();
    let mut send_count = vec![0usize; k];
    let mut recv_count = vec![0usize; k];
    for &(s, r) in a.class_of() {
        send_count[s] += 1;
        recv_count[r] += 1;
    }
    let bound = |margins: &[u64], counts: &[usize]| -> f64 {
        let mut ln_total = 0.0;
        for (m, &c) in margins.iter().zip(counts) {
            if c == 0 {
                continue;
            }
            ln_total += ln_choose((*m + c as u64 - 1) as f64, (c as u64 - 1) as f64);
        }
        ln_total
    };
    let ln_min = bound(&stat.sender, &send_count).min(bound(&stat.receiver, &recv_count));
    ln_min.exp()
}

/// Exhaustively enumerate the fiber of `u`: all nonnegative integer tables
/// with the same sender and receiver margins. Depth-first search with
/// margin pruning; guarded so only desk-scale fibers are attempted.
pub fn enumerate_fiber(a: &DesignMatrix, u: &[u32]) -> Result<Vec<Vec<u32>>> {
    let stat = sufficient_statistic(a, u)?;
    if fiber_size_bound(a, &stat) > FIBER_GUARD {
        return Err(Error::Capacity(format!(
            "fiber size estimate exceeds {FIBER_GUARD}"
        )));
    }

    let r = a.table_len();
    // Visit dyads class by class so margin constraints bind early.
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by_key(|&d| a.class(d));
    let mut last_sender = vec![usize::MAX; a.block_count()];
    let mut last_recv = vec![usize::MAX; a.block_count()];
    for (pos, &d) in order.iter().enumerate() {
        let (s, rv) = a.class(d);
        last_sender[s] = pos;
        last_recv[rv] = pos;
    }

    let mut rem_send: Vec<u64> = stat.sender.clone();
    let mut rem_recv: Vec<u64> = stat.receiver.clone();
    let mut current = vec![0u32; r];
    let mut out: Vec<Vec<u32>> = Vec::new();

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        pos: usize,
        a: &DesignMatrix,
        order: &[usize],
        last_sender: &[usize],
        last_recv: &[usize],
        rem_send: &mut [u64],
        rem_recv: &mut [u64],
        current: &mut [u32],
        out: &mut Vec<Vec<u32>>,
    ) -> Result<()> {
        if pos == order.len() {
            debug_assert!(rem_send.iter().all(|&m| m == 0));
            debug_assert!(rem_recv.iter().all(|&m| m == 0));
            out.push(current.to_vec());
            if out.len() as f64 > FIBER_GUARD {
                return Err(Error::Capacity("fiber enumeration overflow".into()));
            }
            return Ok(());
        }
        let d = order[pos];
        let (s, rv) = a.class(d);
        let hi = rem_send[s].min(rem_recv[rv]);
        let must_s = last_sender[s] == pos;
        let must_r = last_recv[rv] == pos;
        let (lo, hi) = match (must_s, must_r) {
            (true, true) => {
                if rem_send[s] != rem_recv[rv] {
                    return Ok(());
                }
                (rem_send[s], rem_send[s])
            }
            (true, false) => {
                if rem_send[s] > hi {
                    return Ok(());
                }
                (rem_send[s], rem_send[s])
            }
            (false, true) => {
                if rem_recv[rv] > hi {
                    return Ok(());
                }
                (rem_recv[rv], rem_recv[rv])
            }
            (false, false) => (0, hi),
        };
        let mut v = lo;
        while v <= hi {
            rem_send[s] -= v;
            rem_recv[rv] -= v;
            current[d] = v as u32;
            dfs(
                pos + 1, a, order, last_sender, last_recv, rem_send, rem_recv, current, out,
            )?;
            current[d] = 0;
            rem_send[s] += v;
            rem_recv[rv] += v;
            v += 1;
        }
        Ok(())
    }

    dfs(
        0,
        a,
        &order,
        &last_sender,
        &last_recv,
        &mut rem_send,
        &mut rem_recv,
        &mut current,
        &mut out,
    )?;
    Ok(out)
}

/// Is the graph on the fiber of `u`, with edges u <-> u +- move, connected?
pub fn verify_connectivity(basis: &MarkovBasis, a: &DesignMatrix, u: &[u32]) -> Result<bool> {
    let fiber = enumerate_fiber(a, u)?;
    if fiber.len() <= 1 {
        return Ok(true);
    }
    let index: HashMap<&[u32], usize> = fiber
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_slice(), i))
        .collect();
    let mut seen = vec![false; fiber.len()];
    let mut queue = VecDeque::new();
    let start = *index
        .get(u)
        .ok_or_else(|| Error::Value("table not in its own fiber".into()))?;
    seen[start] = true;
    queue.push_back(start);
    let mut reached = 1usize;
    while let Some(i) = queue.pop_front() {
        for mv in basis.moves() {
            for sign in [1, -1] {
                let mut next = fiber[i].clone();
                if mv.apply(&mut next, sign, None) {
                    let j = index[next.as_slice()];
                    if !seen[j] {
                        seen[j] = true;
                        reached += 1;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    Ok(reached == fiber.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::build_design;
    use crate::mmsbm::MembershipRealization;
    use crate::numeric::derive_stream;

    fn design(d: usize, k: usize, classes: &[(usize, usize)]) -> DesignMatrix {
        let real = MembershipRealization::from_classes(d, k, classes).unwrap();
        build_design(&real, k).unwrap()
    }

    #[test]
    fn worked_example_has_empty_basis_and_singleton_fiber() {
        // Classes (1,1) and (1,2), one dyad each: trivial kernel.
        let a = design(2, 2, &[(0, 0), (0, 1)]);
        let basis = structural_basis(&a);
        assert!(basis.is_empty());
        assert_eq!(kernel_lattice_basis(&a.to_dense()).unwrap().len(), 0);
        let fiber = enumerate_fiber(&a, &[1, 1]).unwrap();
        assert_eq!(fiber, vec![vec![1, 1]]);
        assert!(verify_connectivity(&basis, &a, &[1, 1]).unwrap());
    }

    #[test]
    fn single_class_star_moves() {
        // K=1, D=3: six dyads in one class -> five star moves.
        let a = design(3, 1, &[(0, 0); 6]);
        let basis = structural_basis(&a);
        assert_eq!(basis.len(), 5);
        for mv in basis.moves() {
            assert_eq!(mv.terms().len(), 2);
            let stat0 = sufficient_statistic(&a, &[1; 6]).unwrap();
            let mut t = vec![1u32; 6];
            assert!(mv.apply(&mut t, 1, None));
            assert_eq!(sufficient_statistic(&a, &t).unwrap(), stat0);
        }
    }

    #[test]
    fn two_point_fiber() {
        // K=1, D=2: one class, two dyads, mass 1.
        let a = design(2, 1, &[(0, 0), (0, 0)]);
        let fiber = enumerate_fiber(&a, &[1, 0]).unwrap();
        assert_eq!(fiber.len(), 2);
        assert!(fiber.contains(&vec![1, 0]) && fiber.contains(&vec![0, 1]));
        let basis = structural_basis(&a);
        assert_eq!(basis.len(), 1);
        assert!(verify_connectivity(&basis, &a, &[1, 0]).unwrap());

        let kern = kernel_lattice_basis(&a.to_dense()).unwrap();
        assert_eq!(kern.len(), 1);
        assert_eq!(kern[0][0] + kern[0][1], 0);
        assert_eq!(kern[0][0].abs(), 1);
    }

    #[test]
    fn inter_class_moves_connect() {
        // D=3, K=2 with all four classes nonempty.
        let classes = [(0, 0), (0, 1), (1, 0), (1, 1), (0, 0), (1, 1)];
        let a = design(3, 2, &classes);
        let basis = structural_basis(&a);
        // At least one 2x2 exchange move (support 4).
        assert!(basis.moves().iter().any(|m| m.terms().len() == 4));
        let u = [1, 0, 1, 0, 0, 1];
        assert!(verify_connectivity(&basis, &a, &u).unwrap());
    }

    #[test]
    fn six_cycle_class_pattern_is_connected() {
        // Classes form a chordless 6-cycle in the bipartite class graph:
        // (0,0), (0,1), (1,1), (1,2), (2,2), (2,0). A basis of 2x2 moves
        // alone cannot connect these fibers.
        let classes = [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 0)];
        let a = design(3, 3, &classes);
        let basis = structural_basis(&a);
        assert!(
            basis.moves().iter().any(|m| m.terms().len() == 6),
            "expected a 6-cycle move, got:\n{}",
            basis.to_lines()
        );
        // Diagonal table vs the alternating one: only the 6-cycle connects.
        let u = [1, 0, 1, 0, 1, 0];
        let fiber = enumerate_fiber(&a, &u).unwrap();
        assert_eq!(fiber.len(), 2);
        assert!(verify_connectivity(&basis, &a, &u).unwrap());
    }

    #[test]
    fn moves_lie_in_kernel() {
        let mut rng = derive_stream(21, 0);
        for _ in 0..30 {
            let d = 2 + rng.uniform_usize(3);
            let k = 1 + rng.uniform_usize(3);
            let real = MembershipRealization::random(d, k, &mut rng);
            let a = build_design(&real, k).unwrap();
            let dense = a.to_dense();
            for mv in structural_basis(&a).moves() {
                let v = mv.to_vector(a.table_len());
                for row in &dense {
                    let dot: i64 = row.iter().zip(&v).map(|(&x, &y)| x * y).sum();
                    assert_eq!(dot, 0, "move {mv} not in kernel");
                }
            }
        }
    }

    #[test]
    fn fiber_matches_counting_oracle() {
        // Independent count: sum over class-total tables of the product of
        // per-class compositions, recursing over classes instead of dyads.
        fn count_oracle(a: &DesignMatrix, u: &[u32]) -> u64 {
            let stat = sufficient_statistic(a, u).unwrap();
            let classes = a.nonempty_classes();
            let sizes: Vec<u64> = classes
                .iter()
                .map(|&(s, r)| a.class_members(s, r).len() as u64)
                .collect();
            fn compositions(mass: u64, cells: u64) -> u64 {
                // C(mass + cells - 1, cells - 1)
                let mut num = 1u64;
                for i in 0..cells - 1 {
                    num = num * (mass + i + 1) / (i + 1);
                }
                num
            }
            fn rec(
                idx: usize,
                classes: &[(usize, usize)],
                sizes: &[u64],
                rem_s: &mut [u64],
                rem_r: &mut [u64],
            ) -> u64 {
                if idx == classes.len() {
                    let done =
                        rem_s.iter().all(|&x| x == 0) && rem_r.iter().all(|&x| x == 0);
                    return done as u64;
                }
                let (s, r) = classes[idx];
                let later_s: u64 = classes[idx + 1..]
                    .iter()
                    .filter(|&&(cs, _)| cs == s)
                    .count() as u64;
                let later_r: u64 = classes[idx + 1..]
                    .iter()
                    .filter(|&&(_, cr)| cr == r)
                    .count() as u64;
                let hi = rem_s[s].min(rem_r[r]);
                let lo_s = if later_s == 0 { rem_s[s] } else { 0 };
                let lo_r = if later_r == 0 { rem_r[r] } else { 0 };
                let lo = lo_s.max(lo_r);
                let mut total = 0;
                let mut w = lo;
                while w <= hi {
                    rem_s[s] -= w;
                    rem_r[r] -= w;
                    total += compositions(w, sizes[idx])
                        * rec(idx + 1, classes, sizes, rem_s, rem_r);
                    rem_s[s] += w;
                    rem_r[r] += w;
                    w += 1;
                }
                total
            }
            let mut rem_s = stat.sender.clone();
            let mut rem_r = stat.receiver.clone();
            rec(0, &classes, &sizes, &mut rem_s, &mut rem_r)
        }

        let mut rng = derive_stream(22, 0);
        for _ in 0..25 {
            let d = 2 + rng.uniform_usize(3); // up to 4 nodes
            let k = 1 + rng.uniform_usize(2);
            let real = MembershipRealization::random(d, k, &mut rng);
            let a = build_design(&real, k).unwrap();
            let u: Vec<u32> = (0..a.table_len())
                .map(|_| (rng.next_f64() < 0.4) as u32)
                .collect();
            let fiber = enumerate_fiber(&a, &u).unwrap();
            assert_eq!(fiber.len() as u64, count_oracle(&a, &u));
            // Every member shares the margins.
            let stat = sufficient_statistic(&a, &u).unwrap();
            for t in &fiber {
                assert_eq!(sufficient_statistic(&a, t).unwrap(), stat);
            }
        }
    }

    #[test]
    fn structural_equals_toric_on_small_instances() {
        let mut rng = derive_stream(23, 0);
        let mut nontrivial = 0;
        for _ in 0..20 {
            let d = 2 + rng.uniform_usize(2); // 2 or 3 nodes => r <= 6
            let k = 1 + rng.uniform_usize(3);
            let real = MembershipRealization::random(d, k, &mut rng);
            let a = build_design(&real, k).unwrap();
            let struct_bins = structural_basis(&a).to_binomials();
            let toric_bins = toric_generators(&a.to_dense()).unwrap();
            assert!(
                toric::same_ideal(&struct_bins, &toric_bins, a.table_len()).unwrap(),
                "ideal mismatch for classes {:?}",
                a.class_of()
            );
            if !toric_bins.is_empty() {
                nontrivial += 1;
            }
        }
        assert!(nontrivial > 5);
    }

    #[test]
    fn toric_binomials_vanish_under_monomial_map() {
        // Substitute a distinct prime per design-matrix row; every
        // generator must evaluate to zero exactly.
        use num_bigint::BigUint;
        let primes = [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
        let mut rng = derive_stream(24, 0);
        for _ in 0..10 {
            let d = 2 + rng.uniform_usize(2);
            let k = 1 + rng.uniform_usize(2);
            let real = MembershipRealization::random(d, k, &mut rng);
            let a = build_design(&real, k).unwrap();
            let dense = a.to_dense();
            // Variable value: product of row primes with the column's row
            // incidence as exponent.
            let var_vals: Vec<BigUint> = (0..a.table_len())
                .map(|d| {
                    let mut v = BigUint::from(1u32);
                    for (row, rvals) in dense.iter().enumerate() {
                        for _ in 0..rvals[d] {
                            v *= BigUint::from(primes[row]);
                        }
                    }
                    v
                })
                .collect();
            let eval = |m: &[u32]| {
                let mut v = BigUint::from(1u32);
                for (i, &e) in m.iter().enumerate() {
                    for _ in 0..e {
                        v *= var_vals[i].clone();
                    }
                }
                v
            };
            for g in toric_generators(&dense).unwrap() {
                assert_eq!(eval(&g.plus), eval(&g.minus), "{g} does not vanish");
            }
        }
    }

    #[test]
    fn capacity_guard_trips_on_huge_fibers() {
        // One class, 30 dyads, mass 15: far beyond the enumeration guard.
        let a = design(6, 1, &[(0, 0); 30]);
        let u: Vec<u32> = (0..30).map(|i| (i % 2) as u32).collect();
        assert!(matches!(
            enumerate_fiber(&a, &u),
            Err(Error::Capacity(_))
        ));
    }
}
