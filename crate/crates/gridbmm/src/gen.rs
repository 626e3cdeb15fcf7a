//! Seeded, reproducible instance generators.
//!
//! All randomness flows through ChaCha8 keyed by a caller-supplied 64-bit seed
//! plus a fixed stream id per artifact, so generating the same instance twice
//! yields byte-identical results. Bernoulli draws use exact rational
//! probabilities (`gen_range(0..den) < num`), never floats.

use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitmatrix::{BoolMatrix, TripartiteGraph};
use crate::rational::Rat;
use crate::{Error, Result};

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn bernoulli_parts(p: &Rat) -> Result<(u64, u64)> {
    if p.is_negative() || *p > Rat::from_integer(1.into()) {
        return Err(Error::InvalidParameter(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    let num = p.numer().to_u64();
    let den = p.denom().to_u64();
    match (num, den) {
        (Some(n), Some(d)) if d > 0 => Ok((n, d)),
        _ => Err(Error::InvalidParameter(
            "probability denominator too large for the generator".into(),
        )),
    }
}

/// Random matrix with each entry 1 independently with probability `p`.
pub fn rand_matrix(rows: usize, cols: usize, p: &Rat, seed: u64) -> Result<BoolMatrix> {
    let (num, den) = bernoulli_parts(p)?;
    let mut rng = rng_for(seed, 0);
    Ok(BoolMatrix::from_fn(rows, cols, |_, _| {
        if num == den {
            true
        } else if num == 0 {
            false
        } else {
            rng.gen_range(0..den) < num
        }
    }))
}

/// Random tripartite graph with edge probability `p` in all three parts.
pub fn rand_graph(nx: usize, ny: usize, nz: usize, p: &Rat, seed: u64) -> Result<TripartiteGraph> {
    let (num, den) = bernoulli_parts(p)?;
    let fill = |rows: usize, cols: usize, stream: u64| {
        let mut rng = rng_for(seed, stream);
        BoolMatrix::from_fn(rows, cols, |_, _| {
            if num == den {
                true
            } else if num == 0 {
                false
            } else {
                rng.gen_range(0..den) < num
            }
        })
    };
    TripartiteGraph::new(fill(nx, ny, 1), fill(ny, nz, 2), fill(nx, nz, 3))
}

/// Square matrix made of `blocks` all-ones diagonal blocks of near-equal size.
/// With two equal blocks the density is exactly 1/2.
pub fn block_diagonal(n: usize, blocks: usize) -> Result<BoolMatrix> {
    if blocks == 0 || blocks > n.max(1) {
        return Err(Error::InvalidParameter(format!(
            "block count {blocks} invalid for size {n}"
        )));
    }
    let mut m = BoolMatrix::zeros(n, n);
    let base = n / blocks;
    let extra = n % blocks;
    let mut start = 0;
    for b in 0..blocks {
        let size = base + usize::from(b < extra);
        for r in start..start + size {
            for c in start..start + size {
                m.set(r, c, true);
            }
        }
        start += size;
    }
    Ok(m)
}

/// Random graph with at least one planted triangle.
pub fn planted_triangle_graph(
    nx: usize,
    ny: usize,
    nz: usize,
    p: &Rat,
    seed: u64,
) -> Result<TripartiteGraph> {
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::InvalidParameter("empty part".into()));
    }
    let mut g = rand_graph(nx, ny, nz, p, seed)?;
    let mut rng = rng_for(seed, 4);
    let x = rng.gen_range(0..nx);
    let y = rng.gen_range(0..ny);
    let z = rng.gen_range(0..nz);
    g.a.set(x, y, true);
    g.b.set(y, z, true);
    g.c.set(x, z, true);
    Ok(g)
}

/// `n` integers drawn uniformly from `[-range, range]`.
pub fn rand_threesum(n: usize, range: i64, seed: u64) -> Result<Vec<i64>> {
    if range <= 0 {
        return Err(Error::InvalidParameter("range must be positive".into()));
    }
    let mut rng = rng_for(seed, 5);
    Ok((0..n).map(|_| rng.gen_range(-range..=range)).collect())
}

/// Like [`rand_threesum`] but with a planted solution `a + b + c = 0`
/// written over three distinct positions (requires `n >= 3`).
pub fn planted_threesum(n: usize, range: i64, seed: u64) -> Result<Vec<i64>> {
    if n < 3 {
        return Err(Error::InvalidParameter(
            "planted instance needs at least 3 values".into(),
        ));
    }
    let mut values = rand_threesum(n, range, seed)?;
    let mut rng = rng_for(seed, 6);
    let (a, b) = loop {
        let a: i64 = rng.gen_range(-range..=range);
        let b: i64 = rng.gen_range(-range..=range);
        if (-(a + b)).abs() <= range {
            break (a, b);
        }
    };
    let mut idx = [0usize; 3];
    idx[0] = rng.gen_range(0..n);
    idx[1] = loop {
        let i = rng.gen_range(0..n);
        if i != idx[0] {
            break i;
        }
    };
    idx[2] = loop {
        let i = rng.gen_range(0..n);
        if i != idx[0] && i != idx[1] {
            break i;
        }
    };
    values[idx[0]] = a;
    values[idx[1]] = b;
    values[idx[2]] = -(a + b);
    Ok(values)
}

/// Uniform integer in `[0, bound)` from a dedicated stream; used by phase-1
/// pair sampling in the 3-SUM solver and by the bench harness.
pub fn indices(seed: u64, stream: u64, bound: usize, count: usize) -> Vec<usize> {
    let mut rng = rng_for(seed, stream);
    (0..count).map(|_| rng.gen_range(0..bound)).collect()
}
