//! Grid norms, regularity, and product uniformity.
//!
//! The `(k, l)`-grid norm of a 0/1 matrix is the `k*l`-th root of the
//! normalized count of `(k, l)`-bicliques occurring as (not necessarily
//! induced) subgraphs, tuples with repeated nodes included. It ranges from the
//! density `E[A]` up to 1 and measures pseudo-randomness: `A` is
//! `(eps, k, l)`-regular when `||A||_{U(k,l)} <= (1 + eps) E[A]`.
//!
//! All decisions happen in the power domain — we compare `||A||^{k*l}`, an
//! exact rational, against `((1 + eps) E[A])^{k*l}` — so no roots are ever
//! taken on a decision path. Roots appear only in display helpers, computed by
//! binary search to a fixed precision.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

use crate::bitmatrix::{BoolMatrix, IndexSet};
use crate::rational::{nth_root_approx, pow, ratio_u, to_f64, two_pow, Rat};
use crate::sampler::SamplerFamily;
use crate::{Error, Result};

/// Default cap on the number of elementary products an exact grid-norm
/// computation may take before it refuses and demands sampled mode.
pub const DEFAULT_EXACT_COST_CAP: u128 = 100_000_000;

/// The parameter tuple `(epsilon, k, l, d)` governing regularity, min-degree
/// and sparsity thresholds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularityParams {
    pub epsilon: Rat,
    pub k: u32,
    pub ell: u32,
    pub d: u32,
}

impl RegularityParams {
    pub fn new(epsilon: Rat, k: u32, ell: u32, d: u32) -> Result<Self> {
        if !epsilon.is_positive() || epsilon >= Rat::one() {
            return Err(Error::InvalidParameter(format!(
                "epsilon {epsilon} outside (0, 1)"
            )));
        }
        if k == 0 || ell == 0 || d == 0 {
            return Err(Error::InvalidParameter("k, l, d must be >= 1".into()));
        }
        Ok(RegularityParams { epsilon, k, ell, d })
    }
}

/// How norm computations are evaluated.
#[derive(Clone, Copy)]
pub enum EvalMode<'a> {
    /// Exact rational arithmetic (internally: exhaustive samplers).
    Exact,
    /// Estimate through the given oblivious-sampler families over the rows
    /// and columns.
    Sampled {
        rows: &'a SamplerFamily,
        cols: &'a SamplerFamily,
    },
}

/// A grid norm carried in the power domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridNormValue {
    /// `||A||_{U(k,l)}^{k*l}`, exact (for estimates: the exact average of the
    /// member powers).
    pub power: Rat,
    pub k: u32,
    pub ell: u32,
}

impl GridNormValue {
    /// Real-valued norm for display, via a binary-search root to 2^-40.
    pub fn value(&self) -> f64 {
        to_f64(&nth_root_approx(
            &self.power,
            self.k as u64 * self.ell as u64,
            40,
        ))
    }
}

trait PowerAcc {
    fn add_pow(&mut self, m: u64, exponent: u32);
    fn finish(self) -> BigUint;
}

struct SmallAcc(u128);

impl PowerAcc for SmallAcc {
    #[inline]
    fn add_pow(&mut self, m: u64, exponent: u32) {
        self.0 += (m as u128).pow(exponent);
    }
    fn finish(self) -> BigUint {
        let hi = (self.0 >> 64) as u64;
        let lo = self.0 as u64;
        (BigUint::from(hi) << 64) | BigUint::from(lo)
    }
}

struct BigAcc(BigUint);

impl PowerAcc for BigAcc {
    fn add_pow(&mut self, m: u64, exponent: u32) {
        self.0 += BigUint::from(m).pow(exponent);
    }
    fn finish(self) -> BigUint {
        self.0
    }
}

fn full_mask(cols: usize) -> Vec<u64> {
    let words = cols.div_ceil(64);
    let mut mask = vec![!0u64; words];
    if cols % 64 != 0 {
        if let Some(last) = mask.last_mut() {
            *last = (1u64 << (cols % 64)) - 1;
        }
    }
    if cols == 0 {
        mask.clear();
    }
    mask
}

fn walk<A: PowerAcc>(t: &BoolMatrix, remaining: u32, exponent: u32, stack: &mut [Vec<u64>], acc: &mut A) {
    if remaining == 0 {
        let m: u64 = stack[0].iter().map(|w| w.count_ones() as u64).sum();
        acc.add_pow(m, exponent);
        return;
    }
    let (cur, rest) = stack.split_at_mut(1);
    for r in 0..t.rows() {
        let row = t.row_words(r);
        let mut any = 0u64;
        for (o, (a, b)) in rest[0].iter_mut().zip(cur[0].iter().zip(row)) {
            *o = a & b;
            any |= *o;
        }
        // an all-zero intersection contributes 0 to every deeper tuple
        if any == 0 {
            continue;
        }
        walk(t, remaining - 1, exponent, rest, acc);
    }
}

/// Sum over all ordered `tuple_len`-tuples of rows of `t` of
/// `popcount(AND of the rows)^exponent`.
fn tuple_power_sum(t: &BoolMatrix, tuple_len: u32, exponent: u32) -> BigUint {
    assert!(tuple_len >= 1 && exponent >= 1);
    if t.rows() == 0 || t.cols() == 0 {
        return BigUint::zero();
    }
    let mut stack: Vec<Vec<u64>> = Vec::with_capacity(tuple_len as usize + 1);
    stack.push(full_mask(t.cols()));
    for _ in 0..tuple_len {
        stack.push(vec![0u64; t.cols().div_ceil(64)]);
    }
    let terms = (t.rows() as u128).checked_pow(tuple_len);
    let max_term = (t.cols() as u128).checked_pow(exponent);
    let fits_u128 = matches!(
        (terms, max_term),
        (Some(t), Some(m)) if t.checked_mul(m).is_some()
    );
    if fits_u128 {
        let mut acc = SmallAcc(0);
        walk(t, tuple_len, exponent, &mut stack, &mut acc);
        acc.finish()
    } else {
        let mut acc = BigAcc(BigUint::zero());
        walk(t, tuple_len, exponent, &mut stack, &mut acc);
        acc.finish()
    }
}

fn loop_cost(tuple_side: usize, tuple_len: u32, other_side: usize) -> u128 {
    (tuple_side as u128)
        .checked_pow(tuple_len)
        .and_then(|t| t.checked_mul(other_side as u128))
        .unwrap_or(u128::MAX)
}

fn power_denominator(rows: usize, cols: usize, k: u32, ell: u32) -> BigUint {
    BigUint::from(rows as u64).pow(k) * BigUint::from(cols as u64).pow(ell)
}

/// Exact `||A||_{U(k,l)}^{k*l}` with a configurable cost cap.
///
/// Evaluates the factored form of the norm in whichever orientation is
/// cheaper: enumerate column tuples (`|Y|^l * |X|` elementary products) or row
/// tuples (`|X|^k * |Y|`). Refuses with [`Error::Infeasible`] when the cheaper
/// loop exceeds `cap`.
pub fn grid_norm_power_exact_with_cap(
    a: &BoolMatrix,
    k: u32,
    ell: u32,
    cap: u128,
) -> Result<Rat> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    if k == 0 || ell == 0 {
        return Err(Error::InvalidParameter("k and l must be >= 1".into()));
    }
    let ones = a.count_ones();
    if ones == 0 {
        return Ok(Rat::zero());
    }
    if ones == (a.rows() * a.cols()) as u64 {
        return Ok(Rat::one());
    }
    let col_cost = loop_cost(a.cols(), ell, a.rows());
    let row_cost = loop_cost(a.rows(), k, a.cols());
    let cost = col_cost.min(row_cost);
    if cost > cap {
        return Err(Error::Infeasible { cost, cap });
    }
    let numerator = if col_cost <= row_cost {
        tuple_power_sum(&a.transpose(), ell, k)
    } else {
        tuple_power_sum(a, k, ell)
    };
    Ok(Rat::new(
        BigInt::from(numerator),
        BigInt::from(power_denominator(a.rows(), a.cols(), k, ell)),
    ))
}

/// Exact grid norm with the default cost cap.
pub fn grid_norm_exact(a: &BoolMatrix, k: u32, ell: u32) -> Result<GridNormValue> {
    Ok(GridNormValue {
        power: grid_norm_power_exact_with_cap(a, k, ell, DEFAULT_EXACT_COST_CAP)?,
        k,
        ell,
    })
}

/// Sampler-based estimate of the norm power:
/// the average over sampler pairs `(S, T)` of `||A[S, T]||_{U(k,l)}^{k*l}`.
///
/// With exhaustive samplers this equals the exact power; otherwise it is
/// within additive `2*eps*k + 2*eps*l + 2*delta` of it for true
/// `(eps, delta)`-samplers.
pub fn grid_norm_power_estimate(
    a: &BoolMatrix,
    k: u32,
    ell: u32,
    rows: &SamplerFamily,
    cols: &SamplerFamily,
) -> Result<Rat> {
    if rows.ground_size() != a.rows() || cols.ground_size() != a.cols() {
        return Err(Error::InvalidParameter(format!(
            "sampler grounds {}x{} do not match matrix {}x{}",
            rows.ground_size(),
            cols.ground_size(),
            a.rows(),
            a.cols()
        )));
    }
    let mut sum = Rat::zero();
    for s in rows.sets() {
        for t in cols.sets() {
            let sub = a.submatrix(s, t)?;
            sum += grid_norm_power_exact_with_cap(&sub, k, ell, DEFAULT_EXACT_COST_CAP)?;
        }
    }
    let pairs = (rows.sets().len() * cols.sets().len()) as u64;
    Ok(sum / Rat::from_integer(pairs.into()))
}

pub fn grid_norm_estimate(
    a: &BoolMatrix,
    k: u32,
    ell: u32,
    rows: &SamplerFamily,
    cols: &SamplerFamily,
) -> Result<GridNormValue> {
    Ok(GridNormValue {
        power: grid_norm_power_estimate(a, k, ell, rows, cols)?,
        k,
        ell,
    })
}

/// Per-row norm approximation `v_x ~ ||A_x||_{U(k,l)}`, where
/// `A_x = A[X, Y_x]` restricts the columns to the neighbors of `x`.
#[derive(Debug, Clone)]
pub struct RowLinkedNorm {
    /// `v_x^{k*l}`, exact under exhaustive samplers.
    pub power: Rat,
    k: u32,
    ell: u32,
}

impl RowLinkedNorm {
    pub fn value(&self) -> f64 {
        to_f64(&nth_root_approx(&self.power, self.k as u64 * self.ell as u64, 40))
    }
}

/// Computes, for every row `x`, an approximation `v_x` of
/// `||A_x||_{U(k,l)}` with additive error `alpha / deg_A(x)^(1/k)` under
/// exact-quality samplers. Rows of degree 0 map to 0.
///
/// The two-stage scheme: first the per-tuple weights
/// `u_{T, y_1..y_l}` (averages over the row-samplers of the biclique
/// indicator), then `u_x` by re-weighting the tuples incident to `x`, and
/// finally `v_x = u_x / deg_A(x)^(1/k)` — all carried in the power domain.
/// With exhaustive samplers the result is exactly `||A_x||^{k*l}`.
pub fn rowlinked_norms(
    a: &BoolMatrix,
    k: u32,
    ell: u32,
    alpha: &Rat,
    rows: &SamplerFamily,
    cols: &SamplerFamily,
) -> Result<Vec<RowLinkedNorm>> {
    if !alpha.is_positive() {
        return Err(Error::InvalidParameter("alpha must be positive".into()));
    }
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    if rows.ground_size() != a.rows() || cols.ground_size() != a.cols() {
        return Err(Error::InvalidParameter(
            "sampler grounds do not match the matrix".into(),
        ));
    }
    if k == 0 || ell == 0 {
        return Err(Error::InvalidParameter("k and l must be >= 1".into()));
    }

    let n = a.rows();
    let powers = if rows.is_exhaustive() && cols.is_exhaustive() {
        if k == 1 {
            // closed form: ||A_x||_{U(1,l)}^l = sum_{x'} |row(x') & row(x)|^l
            //                                   / (|X| * |Y_x|^l)
            exhaustive_k1_powers(a, ell)
        } else {
            let full = IndexSet::full(n);
            let mut out = Vec::with_capacity(n);
            for x in 0..n {
                let deg = a.row_count_ones(x);
                if deg == 0 {
                    out.push(Rat::zero());
                    continue;
                }
                let yx = IndexSet::new(
                    a.cols(),
                    a.iter_row_ones(x).map(|c| c as u32).collect(),
                )?;
                let ax = a.submatrix(&full, &yx)?;
                out.push(grid_norm_power_exact_with_cap(
                    &ax,
                    k,
                    ell,
                    DEFAULT_EXACT_COST_CAP,
                )?);
            }
            out
        }
    } else {
        sampled_rowlinked_powers(a, k, ell, rows, cols)?
    };

    Ok(powers
        .into_iter()
        .map(|power| RowLinkedNorm { power, k, ell })
        .collect())
}

fn exhaustive_k1_powers(a: &BoolMatrix, ell: u32) -> Vec<Rat> {
    let n = a.rows();
    let fits_u128 = (a.cols() as u128)
        .checked_pow(ell)
        .and_then(|m| m.checked_mul(n as u128))
        .is_some();
    let mut out = Vec::with_capacity(n);
    for x in 0..n {
        let deg = a.row_count_ones(x);
        if deg == 0 {
            out.push(Rat::zero());
            continue;
        }
        let sum: BigUint = if fits_u128 {
            let mut s: u128 = 0;
            for x2 in 0..n {
                s += (a.and_popcount(x, x2) as u128).pow(ell);
            }
            (BigUint::from((s >> 64) as u64) << 64) | BigUint::from(s as u64)
        } else {
            let mut s = BigUint::zero();
            for x2 in 0..n {
                s += BigUint::from(a.and_popcount(x, x2)).pow(ell);
            }
            s
        };
        let den = BigUint::from(n as u64) * BigUint::from(deg).pow(ell);
        out.push(Rat::new(BigInt::from(sum), BigInt::from(den)));
    }
    out
}

fn sampled_rowlinked_powers(
    a: &BoolMatrix,
    k: u32,
    ell: u32,
    rows: &SamplerFamily,
    cols: &SamplerFamily,
) -> Result<Vec<Rat>> {
    let n = a.rows();
    let at = a.transpose();
    let words = a.rows().div_ceil(64);

    // membership masks over X for every row-sampler set
    let s_masks: Vec<Vec<u64>> = rows
        .sets()
        .iter()
        .map(|s| {
            let mut m = vec![0u64; words];
            for &i in s.members() {
                m[i as usize / 64] |= 1 << (i as usize % 64);
            }
            m
        })
        .collect();
    let s_sizes: Vec<u64> = rows.sets().iter().map(|s| s.len() as u64).collect();

    let mut acc = vec![Rat::zero(); n];
    let t_count = cols.sets().len() as u64;

    for t_set in cols.sets() {
        let t_members = t_set.members();
        let t_size = t_members.len() as u64;
        let tuple_weight =
            Rat::one() / (Rat::from_integer(t_count.into()) * pow(&ratio_u(t_size, 1), ell as u64));

        // ordered tuples y_1..y_l from this T, with the AND mask over X
        let mut stack: Vec<Vec<u64>> = vec![full_mask(a.rows())];
        for _ in 0..ell {
            stack.push(vec![0u64; words]);
        }
        tuple_walk(&at, t_members, ell, &mut stack, &mut |mask| {
            // u_{T, y-tuple} = E_S (|mask & S| / |S|)^k
            let mut u = Rat::zero();
            for (sm, &ssz) in s_masks.iter().zip(&s_sizes) {
                let hits: u64 = mask
                    .iter()
                    .zip(sm)
                    .map(|(m, s)| (m & s).count_ones() as u64)
                    .sum();
                u += pow(&ratio_u(hits, ssz), k as u64);
            }
            u /= Rat::from_integer((s_masks.len() as u64).into());
            if u.is_zero() {
                return;
            }
            let w = &u * &tuple_weight;
            for (wi, word) in mask.iter().enumerate() {
                let mut bits = *word;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    acc[wi * 64 + b] += &w;
                }
            }
        });
    }

    // v_x^{k*l} = u_x^{k*l} / deg^l, with deg = |Y_x| / |Y|
    let mut out = Vec::with_capacity(n);
    for (x, u_power) in acc.into_iter().enumerate() {
        let deg = a.row_count_ones(x);
        if deg == 0 {
            out.push(Rat::zero());
        } else {
            let scale = pow(&ratio_u(a.cols() as u64, deg), ell as u64);
            out.push(u_power * scale);
        }
    }
    Ok(out)
}

fn tuple_walk(
    at: &BoolMatrix,
    members: &[u32],
    remaining: u32,
    stack: &mut [Vec<u64>],
    visit: &mut impl FnMut(&[u64]),
) {
    if remaining == 0 {
        visit(&stack[0]);
        return;
    }
    let (cur, rest) = stack.split_at_mut(1);
    for &y in members {
        let row = at.row_words(y as usize);
        let mut any = 0u64;
        for (o, (a, b)) in rest[0].iter_mut().zip(cur[0].iter().zip(row)) {
            *o = a & b;
            any |= *o;
        }
        if any == 0 {
            continue;
        }
        tuple_walk(at, members, remaining - 1, rest, visit);
    }
}

/// `(eps, k, l)`-regularity: `||A||^{k*l} <= ((1 + eps) E[A])^{k*l}`,
/// compared in the power domain.
pub fn is_regular(a: &BoolMatrix, params: &RegularityParams, mode: EvalMode<'_>) -> Result<bool> {
    let density = a.density()?;
    let power = match mode {
        EvalMode::Exact => {
            grid_norm_power_exact_with_cap(a, params.k, params.ell, DEFAULT_EXACT_COST_CAP)?
        }
        EvalMode::Sampled { rows, cols } => {
            grid_norm_power_estimate(a, params.k, params.ell, rows, cols)?
        }
    };
    let threshold = pow(
        &((Rat::one() + &params.epsilon) * density),
        params.k as u64 * params.ell as u64,
    );
    Ok(power <= threshold)
}

/// `eps`-min-degree: every row has relative degree at least `(1 - eps) E[A]`.
pub fn is_min_degree(a: &BoolMatrix, epsilon: &Rat) -> Result<bool> {
    let density = a.density()?;
    let bound = (Rat::one() - epsilon) * density;
    for x in 0..a.rows() {
        if ratio_u(a.row_count_ones(x), a.cols() as u64) < bound {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Measured uniformity certificate for a scaled product `A ∘ B`.
#[derive(Debug, Clone)]
pub struct UniformityCert {
    /// Center of the band: `E[A] * E[B]`.
    pub alpha: Rat,
    /// Half-width factor of the band: `80 * eps`.
    pub eps_band: Rat,
    /// Theorem's tolerated outside fraction `2^(-eps*d/2)`, rounded up to
    /// 40 fractional bits.
    pub delta_frac: Rat,
    /// Fraction of entries of `A ∘ B` outside
    /// `[(1 - eps_band) alpha, (1 + eps_band) alpha]`, exact.
    pub outside_fraction: Rat,
}

impl UniformityCert {
    /// Does the measurement satisfy the claimed uniformity bound?
    pub fn within_bound(&self) -> bool {
        self.outside_fraction <= self.delta_frac
    }
}

/// Upper bound on `2^(-e)` for a nonnegative rational `e`, to 40 bits.
fn two_pow_neg_upper(e: &Rat) -> Rat {
    debug_assert!(!e.is_negative());
    let p: i64 = e.numer().clone().try_into().unwrap_or(i64::MAX);
    if e.is_integer() {
        return two_pow(-p);
    }
    let q: u64 = e.denom().clone().try_into().unwrap_or(u64::MAX);
    let lower = nth_root_approx(&two_pow(-p), q, 40);
    (lower + two_pow(-40)).min(Rat::one())
}

/// Measures how uniform `A ∘ B` is: the exact fraction of `(x, z)` entries
/// outside `(1 ± 80 eps) E[A] E[B]`, via integer 2-path counts. This is a pure
/// measurement — nothing is assumed about the inputs.
pub fn check_uniform_product(
    a: &BoolMatrix,
    b: &BoolMatrix,
    params: &RegularityParams,
) -> Result<UniformityCert> {
    if a.rows() == 0 || b.cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    let counts = a.count_product(b)?;
    let alpha = a.density()? * b.density()?;
    let eps_band = ratio_u(80, 1) * &params.epsilon;
    let lo = (Rat::one() - &eps_band) * &alpha;
    let hi = (Rat::one() + &eps_band) * &alpha;
    let ny = a.cols() as u64;
    let mut outside = 0u64;
    for x in 0..counts.rows() {
        for z in 0..counts.cols() {
            let v = ratio_u(counts.get(x, z), ny);
            if v < lo || v > hi {
                outside += 1;
            }
        }
    }
    let total = (counts.rows() * counts.cols()) as u64;
    let exponent = &params.epsilon * ratio_u(params.d as u64, 2);
    Ok(UniformityCert {
        alpha,
        eps_band,
        delta_frac: two_pow_neg_upper(&exponent),
        outside_fraction: ratio_u(outside, total),
    })
}
