//! Metropolis-Hastings sampling on the fiber of a table.
//!
//! Each step draws a move uniformly from the signed basis and applies it
//! unless a coordinate would go negative, in which case the chain stays
//! put. With no acceptance ratio the proposal is symmetric and the
//! stationary law is uniform on the fiber. The `Multinomial` law adds the
//! classic acceptance ratio for the conditional distribution of a vector of
//! independent counts given its margins, P(v) proportional to 1/prod(v_d!),
//! which weights tables the way binary network data actually behaves and is
//! what the table-reproduction experiments use.

use serde::{Deserialize, Serialize};

use crate::markov::MarkovBasis;
use crate::numeric::RngStream;

/// Stationary law targeted by the walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FiberLaw {
    /// Uniform over the fiber; reject-at-boundary only.
    #[default]
    Uniform,
    /// P(v) proportional to 1/prod(v_d!), the conditional law of
    /// independent counts given the margins (uniform cell weights).
    Multinomial,
}

/// Walk schedule and options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Number of tables to return (M).
    pub samples: usize,
    /// Steps discarded before retention begins.
    pub burn_in: usize,
    /// Steps between retained tables.
    pub thin: usize,
    /// Restrict fiber entries to {0, 1}. Off by default: binary-restricted
    /// fibers are not guaranteed connected under this basis, so the mode is
    /// excluded from the exactness claims.
    pub bounded01: bool,
    pub law: FiberLaw,
    /// Retain the starting table itself as the first sample (the chain as
    /// classically written outputs its initial state).
    pub include_initial: bool,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            samples: 100,
            burn_in: 1000,
            thin: 10,
            bounded01: false,
            law: FiberLaw::Uniform,
            include_initial: false,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.samples == 0 {
            return Err(crate::Error::Config("walk needs at least one sample".into()));
        }
        if self.thin == 0 {
            return Err(crate::Error::Config("thinning interval must be >= 1".into()));
        }
        Ok(())
    }
}

/// One in-place chain step. Returns true when the proposal was accepted.
pub fn mh_step_in_place(
    table: &mut [u32],
    basis: &MarkovBasis,
    law: FiberLaw,
    bounded01: bool,
    rng: &mut RngStream,
) -> bool {
    if basis.is_empty() {
        return false;
    }
    let pick = rng.uniform_usize(2 * basis.len());
    let mv = &basis.moves()[pick >> 1];
    let sign = if pick & 1 == 0 { 1 } else { -1 };
    let cap = if bounded01 { Some(1) } else { None };

    match law {
        FiberLaw::Uniform => mv.apply(table, sign, cap),
        FiberLaw::Multinomial => {
            // Acceptance ratio prod u_d! / prod (u_d + delta_d)!, evaluated
            // cell by cell: +1 cells contribute 1/(u_d+1), -1 cells u_d.
            let mut log_ratio = 0.0f64;
            for &(d, c) in mv.terms() {
                let delta = c * sign;
                let cur = table[d] as i64;
                let next = cur + delta as i64;
                if next < 0 {
                    return false;
                }
                if let Some(hi) = cap {
                    if next > hi as i64 {
                        return false;
                    }
                }
                // Moves have coefficients +-1 in this family.
                if delta > 0 {
                    log_ratio -= (cur as f64 + 1.0).ln();
                } else {
                    log_ratio += (cur as f64).ln();
                }
            }
            if log_ratio >= 0.0 || rng.next_f64() < log_ratio.exp() {
                mv.apply(table, sign, cap)
            } else {
                false
            }
        }
    }
}

/// The single-step operation on an owned table.
pub fn mh_step(
    table: &[u32],
    basis: &MarkovBasis,
    law: FiberLaw,
    bounded01: bool,
    rng: &mut RngStream,
) -> Vec<u32> {
    let mut next = table.to_vec();
    mh_step_in_place(&mut next, basis, law, bounded01, rng);
    next
}

/// Run the walk from `u0`: discard `burn_in` steps, then retain every
/// `thin`-th state until `samples` tables are collected.
pub fn sample_fiber(
    u0: &[u32],
    basis: &MarkovBasis,
    cfg: &WalkConfig,
    rng: &mut RngStream,
) -> crate::Result<Vec<Vec<u32>>> {
    cfg.validate()?;
    let mut state = u0.to_vec();
    let mut out = Vec::with_capacity(cfg.samples);
    if cfg.include_initial {
        out.push(state.clone());
    }
    for _ in 0..cfg.burn_in {
        mh_step_in_place(&mut state, basis, cfg.law, cfg.bounded01, rng);
    }
    while out.len() < cfg.samples {
        for _ in 0..cfg.thin {
            mh_step_in_place(&mut state, basis, cfg.law, cfg.bounded01, rng);
        }
        out.push(state.clone());
    }
    out.truncate(cfg.samples);
    Ok(out)
}

/// Visit the walk's retained states without materializing them, feeding
/// each retained table to `visit`. Used by the test pipeline to score
/// statistics on the fly.
pub fn walk_fiber<F: FnMut(&[u32])>(
    u0: &[u32],
    basis: &MarkovBasis,
    cfg: &WalkConfig,
    rng: &mut RngStream,
    mut visit: F,
) -> crate::Result<()> {
    cfg.validate()?;
    let mut state = u0.to_vec();
    let mut emitted = 0usize;
    if cfg.include_initial {
        visit(&state);
        emitted += 1;
    }
    for _ in 0..cfg.burn_in {
        mh_step_in_place(&mut state, basis, cfg.law, cfg.bounded01, rng);
    }
    while emitted < cfg.samples {
        for _ in 0..cfg.thin {
            mh_step_in_place(&mut state, basis, cfg.law, cfg.bounded01, rng);
        }
        visit(&state);
        emitted += 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_design, sufficient_statistic, DesignMatrix};
    use crate::markov::{enumerate_fiber, structural_basis};
    use crate::mmsbm::MembershipRealization;
    use crate::numeric::derive_stream;
    use std::collections::HashMap;

    fn design(d: usize, k: usize, classes: &[(usize, usize)]) -> DesignMatrix {
        let real = MembershipRealization::from_classes(d, k, classes).unwrap();
        build_design(&real, k).unwrap()
    }

    #[test]
    fn empty_basis_freezes_the_chain() {
        let a = design(2, 2, &[(0, 0), (0, 1)]);
        let basis = structural_basis(&a);
        assert!(basis.is_empty());
        let mut rng = derive_stream(31, 0);
        let u = vec![1u32, 1];
        assert_eq!(mh_step(&u, &basis, FiberLaw::Uniform, false, &mut rng), u);
        let cfg = WalkConfig {
            samples: 7,
            burn_in: 3,
            thin: 2,
            ..WalkConfig::default()
        };
        let samples = sample_fiber(&u, &basis, &cfg, &mut rng).unwrap();
        assert_eq!(samples, vec![u; 7]);
    }

    #[test]
    fn boundary_rejection_on_two_point_fiber() {
        let a = design(2, 1, &[(0, 0), (0, 0)]);
        let basis = structural_basis(&a);
        assert_eq!(basis.len(), 1);
        let mv = &basis.moves()[0];
        // The move is e_1 - e_0; from (1,0) only one direction stays
        // nonnegative.
        let mut up = vec![1u32, 0];
        assert!(mv.apply(&mut up, 1, None));
        assert_eq!(up, vec![0, 1]);
        let mut down = vec![1u32, 0];
        assert!(!mv.apply(&mut down, -1, None));
        assert_eq!(down, vec![1, 0]);
    }

    #[test]
    fn accepted_steps_preserve_margins() {
        let mut rng = derive_stream(32, 0);
        for _ in 0..10 {
            let d = 2 + rng.uniform_usize(3);
            let k = 1 + rng.uniform_usize(3);
            let real = MembershipRealization::random(d, k, &mut rng);
            let a = build_design(&real, k).unwrap();
            let basis = structural_basis(&a);
            let mut u: Vec<u32> = (0..a.table_len())
                .map(|_| (rng.next_f64() < 0.5) as u32)
                .collect();
            let stat = sufficient_statistic(&a, &u).unwrap();
            for _ in 0..200 {
                mh_step_in_place(&mut u, &basis, FiberLaw::Uniform, false, &mut rng);
                assert_eq!(sufficient_statistic(&a, &u).unwrap(), stat);
            }
        }
    }

    #[test]
    fn two_point_fiber_is_half_half() {
        let a = design(2, 1, &[(0, 0), (0, 0)]);
        let basis = structural_basis(&a);
        let cfg = WalkConfig {
            samples: 10_000,
            burn_in: 100,
            thin: 1,
            ..WalkConfig::default()
        };
        let mut rng = derive_stream(33, 0);
        let samples = sample_fiber(&[1, 0], &basis, &cfg, &mut rng).unwrap();
        let ones = samples.iter().filter(|t| t[0] == 1).count() as f64 / 10_000.0;
        assert!((ones - 0.5).abs() < 0.02, "frequency {ones}");
    }

    fn empirical_tv(
        a: &DesignMatrix,
        u0: &[u32],
        cfg: &WalkConfig,
        seed: u64,
    ) -> (f64, usize) {
        let basis = structural_basis(a);
        let fiber = enumerate_fiber(a, u0).unwrap();
        let index: HashMap<Vec<u32>, usize> =
            fiber.iter().cloned().zip(0..).collect();
        let mut counts = vec![0u64; fiber.len()];
        let mut rng = derive_stream(seed, 0);
        walk_fiber(u0, &basis, cfg, &mut rng, |t| {
            counts[index[t]] += 1;
        })
        .unwrap();
        let m = cfg.samples as f64;
        let weights: Vec<f64> = match cfg.law {
            FiberLaw::Uniform => vec![1.0; fiber.len()],
            FiberLaw::Multinomial => fiber
                .iter()
                .map(|t| {
                    let mut lw = 0.0;
                    for &v in t {
                        for i in 1..=v {
                            lw -= (i as f64).ln();
                        }
                    }
                    lw.exp()
                })
                .collect(),
        };
        let z: f64 = weights.iter().sum();
        let tv = 0.5
            * counts
                .iter()
                .zip(&weights)
                .map(|(&c, &w)| (c as f64 / m - w / z).abs())
                .sum::<f64>();
        (tv, fiber.len())
    }

    #[test]
    fn uniform_walk_matches_enumerated_fiber() {
        // Random 4-node, 2-block instance with a sparse binary table. The
        // fiber must stay in the low hundreds for an M-sample TV estimate
        // to resolve 0.05; sparse tables keep it there.
        let mut rng = derive_stream(34, 0);
        let real = MembershipRealization::random(4, 2, &mut rng);
        let a = build_design(&real, 2).unwrap();
        let u0: Vec<u32> = (0..a.table_len())
            .map(|_| (rng.next_f64() < 0.3) as u32)
            .collect();
        let cfg = WalkConfig {
            samples: 50_000,
            burn_in: 1000,
            thin: 8,
            ..WalkConfig::default()
        };
        let (tv, fiber_size) = empirical_tv(&a, &u0, &cfg, 35);
        assert!(fiber_size > 1 && fiber_size < 500, "fiber {fiber_size}");
        assert!(tv <= 0.05, "TV {tv} over {fiber_size} tables");
    }

    #[test]
    fn multinomial_walk_matches_weighted_law() {
        let mut rng = derive_stream(36, 0);
        let real = MembershipRealization::random(4, 2, &mut rng);
        let a = build_design(&real, 2).unwrap();
        let u0: Vec<u32> = (0..a.table_len())
            .map(|_| (rng.next_f64() < 0.3) as u32)
            .collect();
        let cfg = WalkConfig {
            samples: 50_000,
            burn_in: 1000,
            thin: 8,
            law: FiberLaw::Multinomial,
            ..WalkConfig::default()
        };
        let (tv, fiber_size) = empirical_tv(&a, &u0, &cfg, 37);
        assert!(fiber_size > 1, "fiber {fiber_size}");
        assert!(tv <= 0.05, "TV {tv} over {fiber_size} tables");
    }

    #[test]
    fn bounded_mode_never_exceeds_one() {
        let a = design(3, 1, &[(0, 0); 6]);
        let basis = structural_basis(&a);
        let mut rng = derive_stream(38, 0);
        let mut u = vec![1u32, 1, 0, 0, 1, 0];
        for _ in 0..2000 {
            mh_step_in_place(&mut u, &basis, FiberLaw::Uniform, true, &mut rng);
            assert!(u.iter().all(|&v| v <= 1));
        }
    }

    #[test]
    fn walk_is_deterministic() {
        let a = design(3, 2, &[(0, 0), (0, 1), (1, 0), (1, 1), (0, 0), (1, 1)]);
        let basis = structural_basis(&a);
        let cfg = WalkConfig {
            samples: 50,
            burn_in: 20,
            thin: 3,
            ..WalkConfig::default()
        };
        let run = || {
            let mut rng = derive_stream(39, 4);
            sample_fiber(&[1, 0, 1, 0, 0, 1], &basis, &cfg, &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }
}
