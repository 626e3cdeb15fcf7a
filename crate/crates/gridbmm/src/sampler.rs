//! Oblivious-sampler families.
//!
//! A family of subsets of a ground set is an `(eps, delta)`-oblivious sampler
//! if, for every function `f` into `[0, 1]`, all but a `delta`-fraction of the
//! member sets estimate the global average of `f` within `eps` by their plain
//! set average. Two backends:
//!
//! * `Exhaustive` — the single full ground set. Estimates are exact
//!   (`eps = delta = 0`), which makes every downstream identity that is stated
//!   "up to sampler error" hold with exact rational equality. All acceptance
//!   tests run on this backend.
//! * `MedianHash` — member sets are unions of pairwise-independently selected
//!   index groups (a linear hash over a Mersenne prime picks the indices; the
//!   group count grows like `log2(1/delta)`, playing the role a median of
//!   group averages plays in the classical construction). Its quality is
//!   certified empirically by [`validate_sampler`], not proven.
//!
//! Construction is deterministic given the seed; the seed stands in for the
//! internal coin tosses the abstract sampler is allowed.

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitmatrix::IndexSet;
use crate::rational::{ratio_u, Rat};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Exhaustive,
    MedianHash,
}

/// A finite family of subsets of `{0, ..., ground_size - 1}` with declared
/// `(epsilon, delta)` sampling quality.
#[derive(Debug, Clone)]
pub struct SamplerFamily {
    ground_size: usize,
    epsilon: Rat,
    delta: Rat,
    kind: SamplerKind,
    sets: Vec<IndexSet>,
}

impl SamplerFamily {
    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn epsilon(&self) -> &Rat {
        &self.epsilon
    }

    pub fn delta(&self) -> &Rat {
        &self.delta
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    pub fn sets(&self) -> &[IndexSet] {
        &self.sets
    }

    pub fn is_exhaustive(&self) -> bool {
        self.kind == SamplerKind::Exhaustive
    }

    /// Average of `f` over one member set.
    pub fn member_average(&self, member: usize, f: &[Rat]) -> Rat {
        let set = &self.sets[member];
        let sum: Rat = set.members().iter().map(|&i| f[i as usize].clone()).sum();
        sum / Rat::from_integer((set.len() as u64).into())
    }
}

/// The exact backend: one set containing the whole ground set.
pub fn exhaustive_family(ground_size: usize) -> Result<SamplerFamily> {
    if ground_size == 0 {
        return Err(Error::InvalidParameter(
            "sampler ground set must be nonempty".into(),
        ));
    }
    Ok(SamplerFamily {
        ground_size,
        epsilon: Rat::zero(),
        delta: Rat::zero(),
        kind: SamplerKind::Exhaustive,
        sets: vec![IndexSet::full(ground_size)],
    })
}

const MERSENNE_61: u128 = (1 << 61) - 1;

fn hash_index(a: u128, b: u128, i: u128, ground: usize) -> u32 {
    (((a * i + b) % MERSENNE_61) % ground as u128) as u32
}

fn ceil_to_u64(x: &Rat) -> u64 {
    x.ceil().numer().to_u64().unwrap_or(u64::MAX)
}

/// Builds a `MedianHash` family. Member sets have size about
/// `ceil(2 / eps^2) * (2 ceil(log2(1/delta)) + 1)` (capped at the ground size)
/// and the family has `max(16, ceil(8 / delta))` members (capped at 4096),
/// both polynomial in `1/eps` and `1/delta`. Deterministic given `seed`.
pub fn build_sampler(
    ground_size: usize,
    epsilon: &Rat,
    delta: &Rat,
    seed: u64,
) -> Result<SamplerFamily> {
    if ground_size == 0 {
        return Err(Error::InvalidParameter(
            "sampler ground set must be nonempty".into(),
        ));
    }
    let one = Rat::one();
    if !epsilon.is_positive() || *epsilon >= one || !delta.is_positive() || *delta >= one {
        return Err(Error::InvalidParameter(
            "sampler parameters must lie in (0, 1)".into(),
        ));
    }

    let group_size = ceil_to_u64(&(ratio_u(2, 1) / (epsilon * epsilon))).max(1);
    let groups = {
        let mut bound = delta.clone();
        let mut log = 0u64;
        while bound < one {
            bound *= ratio_u(2, 1);
            log += 1;
        }
        2 * log + 1
    };
    let target = group_size.saturating_mul(groups).min(ground_size as u64) as usize;
    let members = ceil_to_u64(&(ratio_u(8, 1) / delta)).clamp(16, 4096) as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x0b5e55);
    let mut sets = Vec::with_capacity(members);
    for _ in 0..members {
        let a = rng.gen_range(1..MERSENNE_61);
        let b = rng.gen_range(0..MERSENNE_61);
        let mut picked = Vec::with_capacity(target);
        // pairwise-independent probes; dedup until the target size is reached
        let mut i: u128 = 0;
        while picked.len() < target && i < 4 * target as u128 + 16 {
            picked.push(hash_index(a, b, i, ground_size));
            picked.sort_unstable();
            picked.dedup();
            i += 1;
        }
        if picked.is_empty() {
            picked.push(hash_index(a, b, 0, ground_size));
        }
        sets.push(IndexSet::new(ground_size, picked)?);
    }

    Ok(SamplerFamily {
        ground_size,
        epsilon: epsilon.clone(),
        delta: delta.clone(),
        kind: SamplerKind::MedianHash,
        sets,
    })
}

/// Empirical certificate for the sampling property.
#[derive(Debug, Clone)]
pub struct SamplerReport {
    /// Worst fraction of member sets, over the trial functions, whose estimate
    /// missed the true average by more than `epsilon`.
    pub max_err_fraction: Rat,
    /// Largest absolute estimation error seen across all members and trials.
    pub worst_abs_err: Rat,
}

/// Evaluates the sampling property empirically over the supplied trial
/// functions (each a `[0, 1]`-valued vector of length `ground_size`).
pub fn validate_sampler(family: &SamplerFamily, trials: &[Vec<Rat>]) -> Result<SamplerReport> {
    let n = family.ground_size;
    let mut max_err_fraction = Rat::zero();
    let mut worst_abs_err = Rat::zero();
    for f in trials {
        if f.len() != n {
            return Err(Error::InvalidParameter(format!(
                "trial function has {} values for ground size {n}",
                f.len()
            )));
        }
        let truth: Rat = f.iter().sum::<Rat>() / Rat::from_integer((n as u64).into());
        let mut failures = 0u64;
        for member in 0..family.sets.len() {
            let est = family.member_average(member, f);
            let err = (est - &truth).abs();
            if err > family.epsilon {
                failures += 1;
            }
            if err > worst_abs_err {
                worst_abs_err = err;
            }
        }
        let frac = ratio_u(failures, family.sets.len() as u64);
        if frac > max_err_fraction {
            max_err_fraction = frac;
        }
    }
    Ok(SamplerReport {
        max_err_fraction,
        worst_abs_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boolean_trials(ground: usize, count: usize, seed: u64) -> Vec<Vec<Rat>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                (0..ground)
                    .map(|_| if rng.gen::<bool>() { Rat::one() } else { Rat::zero() })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn exhaustive_is_exact() {
        let fam = exhaustive_family(5).unwrap();
        assert_eq!(fam.sets().len(), 1);
        assert_eq!(fam.sets()[0].members(), &[0, 1, 2, 3, 4]);

        // indicator of the even positions
        let f: Vec<Rat> = (0..5)
            .map(|i| if i % 2 == 0 { Rat::one() } else { Rat::zero() })
            .collect();
        let report = validate_sampler(&fam, &[f]).unwrap();
        assert!(report.max_err_fraction.is_zero());
        assert!(report.worst_abs_err.is_zero());

        let trials = boolean_trials(5, 100, 1);
        let report = validate_sampler(&fam, &trials).unwrap();
        assert!(report.max_err_fraction.is_zero());

        assert!(exhaustive_family(0).is_err());
    }

    #[test]
    fn built_family_respects_declared_bounds() {
        let eps = ratio_u(1, 2);
        let delta = ratio_u(1, 2);
        let fam = build_sampler(16, &eps, &delta, 7).unwrap();
        assert!(!fam.sets().is_empty());
        assert!(fam.sets().len() <= 4096);
        for s in fam.sets() {
            assert!(!s.is_empty());
            assert!(s.len() <= 16);
        }
    }

    #[test]
    fn constant_functions_are_estimated_exactly() {
        let fam = build_sampler(64, &ratio_u(1, 4), &ratio_u(1, 4), 3).unwrap();
        let c = ratio_u(3, 7);
        let f = vec![c.clone(); 64];
        for member in 0..fam.sets().len() {
            assert_eq!(fam.member_average(member, &f), c);
        }
    }

    #[test]
    fn estimates_stay_in_unit_interval() {
        let fam = build_sampler(40, &ratio_u(1, 4), &ratio_u(1, 4), 11).unwrap();
        for f in boolean_trials(40, 20, 5) {
            for member in 0..fam.sets().len() {
                let est = fam.member_average(member, &f);
                assert!(!est.is_negative() && est <= Rat::one());
            }
        }
    }

    #[test]
    fn random_boolean_failure_fraction_within_delta() {
        let eps = ratio_u(1, 4);
        let delta = ratio_u(1, 4);
        let fam = build_sampler(256, &eps, &delta, 17).unwrap();
        let trials = boolean_trials(256, 1000, 23);
        let report = validate_sampler(&fam, &trials).unwrap();
        assert!(
            report.max_err_fraction <= delta,
            "failure fraction {} above delta",
            report.max_err_fraction
        );
    }

    #[test]
    fn construction_is_deterministic() {
        let eps = ratio_u(1, 3);
        let delta = ratio_u(1, 5);
        let a = build_sampler(128, &eps, &delta, 99).unwrap();
        let b = build_sampler(128, &eps, &delta, 99).unwrap();
        assert_eq!(a.sets().len(), b.sets().len());
        for (s, t) in a.sets().iter().zip(b.sets()) {
            assert_eq!(s, t);
        }
        let c = build_sampler(128, &eps, &delta, 100).unwrap();
        assert!(a.sets().iter().zip(c.sets()).any(|(s, t)| s != t));
    }
}
