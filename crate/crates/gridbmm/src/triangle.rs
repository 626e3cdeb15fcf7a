//! Triangle detection, listing, and constant-delay enumeration.
//!
//! The detector decomposes the edge pair `(A, B)` with
//! [`ab_decomposition`] and handles each piece by the win-win split: a piece
//! sparse on any side is searched by enumerating the sparsest side's edges
//! word-parallel; a regular-pair piece that is dense on all sides must
//! contain a triangle by the structural product-uniformity theorem, which the
//! detector may use as a certificate when the theorem's premise
//! (`eps < 1/80`, `d >= 2/eps`) holds and no witness was requested. In every
//! other situation the piece is searched outright, so the decision always
//! equals brute-force truth.
//!
//! The listing path adds the Four-Russians group/table technique and the
//! degree-bucketed case analysis over the `C`-side; the enumerator wraps
//! listing into a preprocess-then-`next()` interface whose per-call work
//! beyond emitting one stored triangle is bounded by an instrumented step
//! budget.

use std::collections::HashMap;

use num_traits::{One, Signed, ToPrimitive};

use crate::bitmatrix::{BoolMatrix, IndexSet, NodeId, TripartiteGraph};
use crate::decompose::{ab_decomposition, ABCert, ABDecompPiece};
use crate::gen;
use crate::rational::{le_two_pow, ratio_u, two_pow, Rat};
use crate::{Error, Result};

/// A triangle `(x, y, z)`: `A(x,y) = B(y,z) = C(x,z) = 1` in the graph it
/// annotates. Ordering is lexicographic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triangle {
    pub x: NodeId,
    pub y: NodeId,
    pub z: NodeId,
}

impl Triangle {
    pub fn new(x: u32, y: u32, z: u32) -> Self {
        Triangle {
            x: NodeId(x),
            y: NodeId(y),
            z: NodeId(z),
        }
    }
}

/// Exact, lexicographically sorted list of all triangles; the independent
/// oracle every other algorithm is tested against. Uses nothing beyond raw
/// row words: for each edge `(x, y)` of `A`, the candidate `z` set is the
/// word-parallel AND of `B`'s row `y` with `C`'s row `x`.
pub fn brute_force_triangles(g: &TripartiteGraph) -> Vec<Triangle> {
    let mut out = Vec::new();
    for x in 0..g.nx() {
        let c_row = g.c.row_words(x);
        for y in g.a.iter_row_ones(x) {
            let b_row = g.b.row_words(y);
            for (wi, (bw, cw)) in b_row.iter().zip(c_row).enumerate() {
                let mut bits = bw & cw;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    out.push(Triangle::new(x as u32, y as u32, (wi * 64 + b) as u32));
                }
            }
        }
    }
    // the loop order makes the list lexicographically sorted already
    debug_assert!(out.windows(2).all(|w| w[0] < w[1]));
    out
}

/// Exact triangle count: 2-path counts of `A B` summed over the 1-entries
/// of `C`.
pub fn count_triangles_exact(g: &TripartiteGraph) -> u64 {
    let cp = match g.a.count_product(&g.b) {
        Ok(cp) => cp,
        Err(_) => return 0,
    };
    let mut total = 0u64;
    for x in 0..g.nx() {
        for z in g.c.iter_row_ones(x) {
            total += cp.get(x, z);
        }
    }
    total
}

/// Detection outcome; the witness is populated on request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DetectOutcome {
    No,
    Yes(Option<Triangle>),
}

impl DetectOutcome {
    pub fn found(&self) -> bool {
        matches!(self, DetectOutcome::Yes(_))
    }
}

fn sparsest_side_search(g: &TripartiteGraph, collect: &mut Vec<Triangle>, stop_early: bool) {
    let nnz_a = g.a.count_ones();
    let nnz_b = g.b.count_ones();
    let nnz_c = g.c.count_ones();
    if nnz_a == 0 || nnz_b == 0 || nnz_c == 0 {
        return;
    }
    if nnz_c <= nnz_a && nnz_c <= nnz_b {
        let bt = g.b.transpose();
        for x in 0..g.nx() {
            for z in g.c.iter_row_ones(x) {
                for y in and_ones(g.a.row_words(x), bt.row_words(z)) {
                    collect.push(Triangle::new(x as u32, y as u32, z as u32));
                    if stop_early {
                        return;
                    }
                }
            }
        }
    } else if nnz_a <= nnz_b {
        for x in 0..g.nx() {
            for y in g.a.iter_row_ones(x) {
                for z in and_ones(g.b.row_words(y), g.c.row_words(x)) {
                    collect.push(Triangle::new(x as u32, y as u32, z as u32));
                    if stop_early {
                        return;
                    }
                }
            }
        }
    } else {
        let at = g.a.transpose();
        let ct = g.c.transpose();
        for y in 0..g.ny() {
            for z in g.b.iter_row_ones(y) {
                for x in and_ones(at.row_words(y), ct.row_words(z)) {
                    collect.push(Triangle::new(x as u32, y as u32, z as u32));
                    if stop_early {
                        return;
                    }
                }
            }
        }
    }
}

fn and_ones<'a>(a: &'a [u64], b: &'a [u64]) -> impl Iterator<Item = usize> + 'a {
    a.iter().zip(b).enumerate().flat_map(|(wi, (x, y))| {
        let mut w = x & y;
        std::iter::from_fn(move || {
            if w == 0 {
                None
            } else {
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + bit)
            }
        })
    })
}

struct PieceGraph {
    graph: TripartiteGraph,
    xs: IndexSet,
    ys: IndexSet,
    zs: IndexSet,
}

fn piece_graph(piece: &ABDecompPiece, c: &BoolMatrix) -> Result<PieceGraph> {
    let ck = c.submatrix(&piece.xs, &piece.zs)?;
    Ok(PieceGraph {
        graph: TripartiteGraph::new(piece.a_part.clone(), piece.b_part.clone(), ck)?,
        xs: piece.xs.clone(),
        ys: piece.ys.clone(),
        zs: piece.zs.clone(),
    })
}

fn lift(t: Triangle, xs: &IndexSet, ys: &IndexSet, zs: &IndexSet) -> Triangle {
    Triangle {
        x: NodeId(xs.members()[t.x.index()]),
        y: NodeId(ys.members()[t.y.index()]),
        z: NodeId(zs.members()[t.z.index()]),
    }
}

/// `x <= 2^(-num/den)` for density-vs-dyadic-threshold comparisons, with the
/// exponent given by a rational `eps * d / divisor`.
fn le_eps_d_threshold(x: &Rat, epsilon: &Rat, d: u32, divisor: u64) -> Result<bool> {
    let p = epsilon
        .numer()
        .to_u64()
        .and_then(|p| p.checked_mul(d as u64))
        .ok_or_else(|| Error::InvalidParameter("epsilon numerator too large".into()))?;
    let q = epsilon
        .denom()
        .to_u64()
        .and_then(|q| q.checked_mul(divisor))
        .ok_or_else(|| Error::InvalidParameter("epsilon denominator too large".into()))?;
    let p: i64 = p
        .try_into()
        .map_err(|_| Error::InvalidParameter("epsilon * d overflows".into()))?;
    Ok(le_two_pow(x, -p, q))
}

/// Triangle detection through the product decomposition. The decision always
/// equals brute-force truth; `witness: true` additionally extracts a triangle
/// on Yes (at the cost of searching dense pieces instead of certifying them).
pub fn detect_triangle(
    g: &TripartiteGraph,
    epsilon: &Rat,
    d: u32,
    witness: bool,
) -> Result<DetectOutcome> {
    if g.nx() == 0 || g.ny() == 0 || g.nz() == 0 {
        return Ok(DetectOutcome::No);
    }
    let pieces = ab_decomposition(&g.a, &g.b, epsilon, d)?;
    let sparse_bound = two_pow(-(d as i64));
    // the structural theorem's premise: eps in (0, 1/80) and d >= 2/eps
    let premise = *epsilon < ratio_u(1, 80) && epsilon * ratio_u(d as u64, 1) >= ratio_u(2, 1);

    for piece in &pieces {
        if piece.xs.is_empty() || piece.ys.is_empty() || piece.zs.is_empty() {
            continue;
        }
        let pg = piece_graph(piece, &g.c)?;
        if pg.graph.c.count_ones() == 0 {
            continue;
        }
        let ea = piece.a_part.density()?;
        let eb = piece.b_part.density()?;
        let ec = pg.graph.c.density()?;
        let c_sparse = le_eps_d_threshold(&ec, epsilon, d, 2)?;
        let any_sparse = ea <= sparse_bound || eb <= sparse_bound || c_sparse;

        if !any_sparse && piece.cert == ABCert::RegularPair && premise && !witness {
            // all three sides dense and both edge parts regular + min-degree:
            // the product is near-uniform, so it must share a nonzero with C
            return Ok(DetectOutcome::Yes(None));
        }
        let mut found = Vec::new();
        sparsest_side_search(&pg.graph, &mut found, true);
        if let Some(t) = found.first() {
            return Ok(DetectOutcome::Yes(Some(lift(*t, &pg.xs, &pg.ys, &pg.zs))));
        }
    }
    Ok(DetectOutcome::No)
}

/// Boolean matrix multiplication by repeated witness detection.
///
/// The parts are cut into blocks of side `block` (default `ceil(n^(1/3))`).
/// For each block cell the detector runs on the subgraph whose `C`-side holds
/// the still-unknown output bits; every witness sets one output bit and
/// leaves the cell's residual, and a No retires the cell. The result is
/// bit-exact equal to [`BoolMatrix::bool_product`].
pub fn bmm_via_triangle(
    a: &BoolMatrix,
    b: &BoolMatrix,
    epsilon: &Rat,
    d: u32,
    block: Option<usize>,
) -> Result<BoolMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch {
            left: (a.rows(), a.cols()),
            right: (b.rows(), b.cols()),
        });
    }
    let mut out = BoolMatrix::zeros(a.rows(), b.cols());
    if a.rows() == 0 || a.cols() == 0 || b.cols() == 0 {
        return Ok(out);
    }
    let n = a.rows().max(a.cols()).max(b.cols());
    let block = block
        .unwrap_or_else(|| (n as f64).cbrt().ceil() as usize)
        .max(1);

    let ranges = |len: usize| -> Vec<(usize, usize)> {
        (0..len.div_ceil(block))
            .map(|i| (i * block, ((i + 1) * block).min(len) - i * block))
            .collect()
    };
    let contiguous = |start: usize, len: usize, part: usize| -> Result<IndexSet> {
        IndexSet::new(part, (start as u32..(start + len) as u32).collect())
    };

    for &(x0, xl) in &ranges(a.rows()) {
        let xset = contiguous(x0, xl, a.rows())?;
        for &(z0, zl) in &ranges(b.cols()) {
            let zset = contiguous(z0, zl, b.cols())?;
            for &(y0, yl) in &ranges(a.cols()) {
                let yset = contiguous(y0, yl, a.cols())?;
                let ablock = a.submatrix(&xset, &yset)?;
                let bblock = b.submatrix(&yset, &zset)?;
                loop {
                    // C-part: block cells whose output bit is still unknown
                    let ctest = BoolMatrix::from_fn(xl, zl, |i, j| !out.get(x0 + i, z0 + j));
                    if ctest.count_ones() == 0 {
                        break;
                    }
                    let sub =
                        TripartiteGraph::new(ablock.clone(), bblock.clone(), ctest)?;
                    match detect_triangle(&sub, epsilon, d, true)? {
                        DetectOutcome::Yes(Some(t)) => {
                            out.set(x0 + t.x.index(), z0 + t.z.index(), true);
                        }
                        DetectOutcome::Yes(None) => {
                            return Err(Error::PostconditionViolated(
                                "witness detection returned no witness".into(),
                            ));
                        }
                        DetectOutcome::No => break,
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Group/subset sizes for the Four-Russians table scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FourRussiansParams {
    pub s: usize,
    pub r: usize,
}

impl FourRussiansParams {
    pub fn new(s: usize, r: usize) -> Result<Self> {
        if r == 0 || s < r {
            return Err(Error::InvalidParameter(
                "four-russians needs s >= r >= 1".into(),
            ));
        }
        if s > 128 {
            return Err(Error::InvalidParameter(
                "group size above 128 exceeds the packed-subset key width".into(),
            ));
        }
        Ok(FourRussiansParams { s, r })
    }

    /// Desk-scale defaults: `s = min(64, max part size)`, `r = min(8, s)`.
    pub fn for_graph(g: &TripartiteGraph) -> Self {
        let s = g.nx().max(g.ny()).max(g.nz()).clamp(1, 64);
        FourRussiansParams { s, r: s.min(8) }
    }
}

/// Extracts `len <= 128` bits starting at `start` from a packed row.
fn extract_window(words: &[u64], start: usize, len: usize) -> u128 {
    let mut out: u128 = 0;
    let mut got = 0;
    let mut idx = start / 64;
    let mut off = start % 64;
    while got < len {
        let w = words.get(idx).copied().unwrap_or(0) >> off;
        let take = (64 - off).min(len - got);
        let mask = if take == 64 { !0u64 } else { (1u64 << take) - 1 };
        out |= ((w & mask) as u128) << got;
        got += take;
        idx += 1;
        off = 0;
    }
    out
}

type EdgeTable = HashMap<(u32, u32, u128, u128), Vec<(u16, u16)>>;

fn four_russians_run(
    g: &TripartiteGraph,
    params: &FourRussiansParams,
    stop_early: bool,
) -> Result<Vec<Triangle>> {
    FourRussiansParams::new(params.s, params.r)?;
    let mut out = Vec::new();
    if g.nx() == 0 || g.ny() == 0 || g.nz() == 0 || g.c.count_ones() == 0 {
        return Ok(out);
    }
    let s = params.s;
    let r = params.r;
    let at = g.a.transpose();

    // group blocks of C with no edges at all can never produce a triangle;
    // marking them once lets the join phase skip their lookups outright
    let j_groups = g.nz().div_ceil(s);
    let mut block_nonempty = vec![false; g.nx().div_ceil(s) * j_groups];
    for x in 0..g.nx() {
        for z in g.c.iter_row_ones(x) {
            block_nonempty[(x / s) * j_groups + z / s] = true;
        }
    }

    // per-(i,j,S,T) edge lists of C[S, T], materialized on first query and
    // keyed by the packed (group, group, subset-mask, subset-mask) encoding
    let mut table: EdgeTable = HashMap::new();

    let mut x_chunks: Vec<(u32, u128, Vec<u16>)> = Vec::new();
    let mut z_chunks: Vec<(u32, u128, Vec<u16>)> = Vec::new();
    for y in 0..g.ny() {
        chunk_neighbors(at.iter_row_ones(y), s, r, &mut x_chunks);
        chunk_neighbors(g.b.iter_row_ones(y), s, r, &mut z_chunks);
        for (i, s_mask, s_elems) in &x_chunks {
            for (j, t_mask, _t_elems) in &z_chunks {
                if !block_nonempty[*i as usize * j_groups + *j as usize] {
                    continue;
                }
                let key = (*i, *j, *s_mask, *t_mask);
                let list = table.entry(key).or_insert_with(|| {
                    let mut edges = Vec::new();
                    let z_base = *j as usize * s;
                    for &dx in s_elems {
                        let x = *i as usize * s + dx as usize;
                        let window =
                            extract_window(g.c.row_words(x), z_base, s.min(g.nz() - z_base));
                        let mut hits = window & t_mask;
                        while hits != 0 {
                            let dz = hits.trailing_zeros() as u16;
                            hits &= hits - 1;
                            edges.push((dx, dz));
                        }
                    }
                    edges
                });
                for &(dx, dz) in list.iter() {
                    out.push(Triangle::new(
                        (*i as usize * s + dx as usize) as u32,
                        y as u32,
                        (*j as usize * s + dz as usize) as u32,
                    ));
                    if stop_early {
                        return Ok(out);
                    }
                }
            }
        }
    }
    out.sort_unstable();
    debug_assert!(out.windows(2).all(|w| w[0] < w[1]));
    Ok(out)
}

/// Splits an ascending neighbor stream into per-group subsets of at most `r`
/// elements; each chunk carries its group index, its bitmask within the
/// group, and its member offsets.
fn chunk_neighbors(
    neighbors: impl Iterator<Item = usize>,
    s: usize,
    r: usize,
    chunks: &mut Vec<(u32, u128, Vec<u16>)>,
) {
    chunks.clear();
    let mut cur_group = u32::MAX;
    for n in neighbors {
        let group = (n / s) as u32;
        let offset = (n % s) as u16;
        let start_new = match chunks.last() {
            Some((g, _, elems)) => *g != group || elems.len() == r,
            None => true,
        } || group != cur_group && chunks.last().map_or(true, |(g, _, _)| *g != group);
        if start_new {
            chunks.push((group, 0, Vec::with_capacity(r)));
        }
        cur_group = group;
        let last = chunks.last_mut().unwrap();
        last.1 |= 1u128 << offset;
        last.2.push(offset);
    }
}

/// Exact triangle listing by the Four-Russians group/table scheme.
pub fn four_russians_list(
    g: &TripartiteGraph,
    params: &FourRussiansParams,
) -> Result<Vec<Triangle>> {
    four_russians_run(g, params, false)
}

/// Early-exit variant: stops at the first triangle found.
pub fn four_russians_detect(
    g: &TripartiteGraph,
    params: &FourRussiansParams,
) -> Result<Option<Triangle>> {
    Ok(four_russians_run(g, params, true)?.into_iter().next())
}

/// Parameters of the decomposition-based listing algorithm.
#[derive(Debug, Clone)]
pub struct ListingParams {
    pub epsilon: Rat,
    pub gamma: Rat,
    pub delta: Rat,
    pub d: u32,
    /// Recursion depth at which remaining instances are solved brute-force.
    pub max_depth: u32,
}

impl ListingParams {
    pub fn new(epsilon: Rat, gamma: Rat, delta: Rat, d: u32, max_depth: u32) -> Result<Self> {
        if !epsilon.is_positive() || epsilon >= Rat::one() {
            return Err(Error::InvalidParameter("epsilon outside (0, 1)".into()));
        }
        if !gamma.is_positive() || gamma >= Rat::one() {
            return Err(Error::InvalidParameter("gamma outside (0, 1)".into()));
        }
        if !delta.is_positive() {
            return Err(Error::InvalidParameter("delta must be positive".into()));
        }
        if d == 0 {
            return Err(Error::InvalidParameter("d must be >= 1".into()));
        }
        Ok(ListingParams {
            epsilon,
            gamma,
            delta,
            d,
            max_depth,
        })
    }

    /// Number of degree buckets: `L = ceil(eps * d / 2)`, at least 1.
    pub fn bucket_count(&self) -> u32 {
        let l = (&self.epsilon * ratio_u(self.d as u64, 2)).ceil();
        l.numer().to_u32().unwrap_or(1).max(1)
    }

    /// Desk-scale defaults: `eps = 1/160`, `d = 3`, depth 2, `delta = 1/4`,
    /// and `gamma = 1 / (8 L (d+2)^2)` from the bucket formula.
    pub fn desk() -> Self {
        let epsilon = ratio_u(1, 160);
        let d = 3u32;
        let l = 1u64; // ceil(eps * d / 2) for these values
        let gamma = ratio_u(1, 8 * l * (d as u64 + 2) * (d as u64 + 2));
        ListingParams {
            epsilon,
            gamma,
            delta: ratio_u(1, 4),
            d,
            max_depth: 2,
        }
    }
}

/// Exact triangle listing through the product decomposition
/// (sorted, duplicate-free).
pub fn list_triangles(g: &TripartiteGraph, params: &ListingParams) -> Result<Vec<Triangle>> {
    let mut out = list_rec(g, params, 0)?;
    out.sort_unstable();
    debug_assert!(out.windows(2).all(|w| w[0] < w[1]));
    Ok(out)
}

fn list_rec(g: &TripartiteGraph, params: &ListingParams, depth: u32) -> Result<Vec<Triangle>> {
    let mut out = Vec::new();
    if g.nx() == 0 || g.ny() == 0 || g.nz() == 0 {
        return Ok(out);
    }
    if depth >= params.max_depth {
        return Ok(brute_force_triangles(g));
    }
    let pieces = ab_decomposition(&g.a, &g.b, &params.epsilon, params.d)?;
    for piece in &pieces {
        if piece.xs.is_empty() || piece.ys.is_empty() || piece.zs.is_empty() {
            continue;
        }
        let pg = piece_graph(piece, &g.c)?;
        let ea = piece.a_part.density()?;
        let eb = piece.b_part.density()?;

        let local = if le_eps_d_threshold(&ea, &params.epsilon, params.d, 4)?
            || le_eps_d_threshold(&eb, &params.epsilon, params.d, 4)?
        {
            // case 1: one side is 2^(-eps d/4)-sparse
            let mut v = Vec::new();
            sparsest_side_search(&pg.graph, &mut v, false);
            v
        } else if ea <= params.delta && eb <= params.delta {
            // case 2: both sides moderately sparse, straight Four-Russians
            four_russians_list(&pg.graph, &FourRussiansParams::for_graph(&pg.graph))?
        } else if eb >= params.delta {
            // case 3: bucket the C-degrees of X
            case3_buckets(&pg.graph, params, depth)?
        } else {
            // case 4: mirror of case 3 on the transposed piece
            let gt = TripartiteGraph::new(
                pg.graph.b.transpose(),
                pg.graph.a.transpose(),
                pg.graph.c.transpose(),
            )?;
            case3_buckets(&gt, params, depth)?
                .into_iter()
                .map(|t| Triangle { x: t.z, y: t.y, z: t.x })
                .collect()
        };
        out.extend(local.into_iter().map(|t| lift(t, &pg.xs, &pg.ys, &pg.zs)));
    }
    Ok(out)
}

fn case3_buckets(g: &TripartiteGraph, params: &ListingParams, depth: u32) -> Result<Vec<Triangle>> {
    let mut out = Vec::new();
    let big_l = params.bucket_count();
    let nz = g.nz() as u64;
    let top_bucket_bound = two_pow(1 - big_l as i64);

    for level in 1..=big_l {
        // X_{k,l}: rows with C-degree in (2^-l, 2^-l+1], the last bucket
        // catching everything at or below 2^(-L+1)
        let members: Vec<u32> = (0..g.nx() as u32)
            .filter(|&x| {
                let c = g.c.row_count_ones(x as usize);
                if level == big_l {
                    // deg <= 2^(-L+1)  <=>  c * 2^(L-1) <= nz
                    (c as u128) << (big_l - 1) <= nz as u128
                } else {
                    // 2^-l < deg <= 2^-l+1
                    ((c as u128) << level) > nz as u128
                        && ((c as u128) << (level - 1)) <= nz as u128
                }
            })
            .collect();
        if members.is_empty() {
            continue;
        }
        let bucket = IndexSet::new(g.nx(), members)?;

        // C_{k,l}: C with all rows outside the bucket zeroed
        let c_masked = {
            let mut m = BoolMatrix::zeros(g.nx(), g.nz());
            for &x in bucket.members() {
                for z in g.c.iter_row_ones(x as usize) {
                    m.set(x as usize, z, true);
                }
            }
            m
        };
        let ec = c_masked.density()?;

        if ec <= top_bucket_bound {
            // case 3.1: the masked C is sparse
            let gl = TripartiteGraph::new(g.a.clone(), g.b.clone(), c_masked)?;
            sparsest_side_search(&gl, &mut out, false);
        } else if ratio_u(bucket.len() as u64, 1) < &params.gamma * ratio_u(g.nx() as u64, 1) {
            // case 3.2: small bucket, recurse on the induced instance
            let full_y = IndexSet::full(g.ny());
            let full_z = IndexSet::full(g.nz());
            let sub = TripartiteGraph::new(
                g.a.submatrix(&bucket, &full_y)?,
                g.b.clone(),
                g.c.submatrix(&bucket, &full_z)?,
            )?;
            for t in list_rec(&sub, params, depth + 1)? {
                out.push(Triangle {
                    x: NodeId(bucket.members()[t.x.index()]),
                    ..t
                });
            }
        } else {
            // case 3.3: dense masked C; list the rotated graph with
            // Four-Russians. The rotation minimizes E[A^T ∘ C_{k,l}].
            let floor_density = &params.gamma * two_pow(-(level as i64));
            if ec < floor_density {
                return Err(Error::PostconditionViolated(format!(
                    "case 3.3 entered with E[C_l] = {ec} below gamma * 2^-{level}"
                )));
            }
            let rotated = TripartiteGraph::new(g.a.transpose(), c_masked, g.b.clone())?;
            for t in four_russians_list(&rotated, &FourRussiansParams::for_graph(&rotated))? {
                out.push(Triangle {
                    x: t.y,
                    y: t.x,
                    z: t.z,
                });
            }
        }
    }
    Ok(out)
}

/// Counting backend for the enumerator's light/heavy classification.
#[derive(Debug, Clone)]
pub enum CountingBackend {
    /// Exact per-piece counts (replaces the approximate-counting black box).
    Exact,
    /// Seeded uniform triple sampling; misclassification degrades the delay
    /// guarantee but never the output set.
    Sampled { samples: u64, seed: u64 },
}

/// Enumerator tuning knobs.
#[derive(Debug, Clone)]
pub struct EnumConfig {
    /// Pieces with at most this many triangles are fully listed up front;
    /// `None` picks `ceil(n^1.5 / ceil(log2 n)^2)`.
    pub light_threshold: Option<u64>,
    /// Elementary steps the interleaved lister may take per `next()` call.
    pub step_budget: u64,
    pub counting: CountingBackend,
}

impl Default for EnumConfig {
    fn default() -> Self {
        EnumConfig {
            light_threshold: None,
            step_budget: 64,
            counting: CountingBackend::Exact,
        }
    }
}

struct HeavyPiece {
    graph: TripartiteGraph,
    x0: u32,
    y0: u32,
    z0: u32,
    count: u64,
}

/// Incremental exact lister over one piece: each step processes one `(x, z)`
/// cell (and is charged one extra step per triangle it emits).
struct SteppedLister {
    x: usize,
    z: usize,
    done: bool,
    found: Vec<Triangle>,
}

impl SteppedLister {
    fn new() -> Self {
        SteppedLister {
            x: 0,
            z: 0,
            done: false,
            found: Vec::new(),
        }
    }

    /// Runs at most `budget` steps against `piece`; returns steps spent.
    fn step(&mut self, piece: &HeavyPiece, bt: &BoolMatrix, budget: u64) -> u64 {
        if self.done {
            return 0;
        }
        let g = &piece.graph;
        let mut spent = 0u64;
        while spent < budget {
            if self.x >= g.nx() {
                self.done = true;
                break;
            }
            spent += 1;
            if g.c.get(self.x, self.z) {
                for y in and_ones(g.a.row_words(self.x), bt.row_words(self.z)) {
                    self.found.push(Triangle::new(
                        (piece.x0 as usize + self.x) as u32,
                        (piece.y0 as usize + y) as u32,
                        (piece.z0 as usize + self.z) as u32,
                    ));
                    spent += 1;
                }
            }
            self.z += 1;
            if self.z >= g.nz() {
                self.z = 0;
                self.x += 1;
            }
        }
        if self.x >= g.nx() {
            self.done = true;
        }
        spent
    }
}

/// Constant-delay triangle enumerator.
///
/// Preprocessing partitions each part into `ceil(sqrt(n))` contiguous groups,
/// counts triangles per subgraph triple, fully lists every light piece with
/// the decomposition lister, sorts the heavy pieces by descending count, and
/// lists the first heavy piece outright. Each `next()` then emits one stored
/// triangle while advancing an incremental lister for the upcoming heavy
/// piece by at most `step_budget` instrumented steps.
pub struct Enumerator {
    light: Vec<Triangle>,
    light_pos: usize,
    heavy: Vec<HeavyPiece>,
    heavy_bt: Vec<BoolMatrix>,
    active_idx: usize,
    active: Vec<Triangle>,
    active_pos: usize,
    next_lister: Option<SteppedLister>,
    step_budget: u64,
    max_steps_per_call: u64,
    budget_violations: u64,
}

/// Builds an [`Enumerator`]; see the type docs for the phases.
pub fn enum_preprocess(
    g: &TripartiteGraph,
    listing: &ListingParams,
    config: &EnumConfig,
) -> Result<Enumerator> {
    let n = g.nx().max(g.ny()).max(g.nz());
    let threshold = config.light_threshold.unwrap_or_else(|| {
        let log = (usize::BITS - n.max(2).next_power_of_two().leading_zeros()) as f64;
        ((n as f64).powf(1.5) / (log * log)).ceil() as u64
    });

    let group = (n as f64).sqrt().ceil().max(1.0) as usize;
    let split = |len: usize| -> Vec<(usize, usize)> {
        if len == 0 {
            return vec![(0, 0)];
        }
        (0..len.div_ceil(group))
            .map(|i| (i * group, ((i + 1) * group).min(len) - i * group))
            .collect()
    };

    let mut light = Vec::new();
    let mut heavy = Vec::new();
    let full_like = |start: usize, len: usize, part: usize| -> Result<IndexSet> {
        IndexSet::new(part, (start as u32..(start + len) as u32).collect())
    };

    for &(x0, xl) in &split(g.nx()) {
        let xset = full_like(x0, xl, g.nx())?;
        for &(y0, yl) in &split(g.ny()) {
            let yset = full_like(y0, yl, g.ny())?;
            let a_sub = g.a.submatrix(&xset, &yset)?;
            for &(z0, zl) in &split(g.nz()) {
                let zset = full_like(z0, zl, g.nz())?;
                let sub = TripartiteGraph::new(
                    a_sub.clone(),
                    g.b.submatrix(&yset, &zset)?,
                    g.c.submatrix(&xset, &zset)?,
                )?;
                let count = match &config.counting {
                    CountingBackend::Exact => count_triangles_exact(&sub),
                    CountingBackend::Sampled { samples, seed } => {
                        estimate_triangles(&sub, *samples, *seed ^ ((x0 ^ y0 ^ z0) as u64))
                    }
                };
                if count == 0 {
                    continue;
                }
                if count <= threshold {
                    for t in list_triangles(&sub, listing)? {
                        light.push(Triangle::new(
                            (x0 + t.x.index()) as u32,
                            (y0 + t.y.index()) as u32,
                            (z0 + t.z.index()) as u32,
                        ));
                    }
                } else {
                    heavy.push(HeavyPiece {
                        graph: sub,
                        x0: x0 as u32,
                        y0: y0 as u32,
                        z0: z0 as u32,
                        count,
                    });
                }
            }
        }
    }

    // heaviest first; ties resolved by position for determinism
    heavy.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then(a.x0.cmp(&b.x0))
            .then(a.y0.cmp(&b.y0))
            .then(a.z0.cmp(&b.z0))
    });
    let heavy_bt: Vec<BoolMatrix> = heavy.iter().map(|p| p.graph.b.transpose()).collect();

    // list the first heavy piece during preprocessing
    let active = match heavy.first() {
        Some(p) => {
            let mut l = SteppedLister::new();
            while !l.done {
                l.step(p, &heavy_bt[0], u64::MAX);
            }
            l.found
        }
        None => Vec::new(),
    };

    let next_lister = if heavy.len() > 1 {
        Some(SteppedLister::new())
    } else {
        None
    };
    Ok(Enumerator {
        light,
        light_pos: 0,
        heavy,
        heavy_bt,
        active_idx: 0,
        active,
        active_pos: 0,
        next_lister,
        step_budget: config.step_budget,
        max_steps_per_call: 0,
        budget_violations: 0,
    })
}

fn estimate_triangles(g: &TripartiteGraph, samples: u64, seed: u64) -> u64 {
    let cells = (g.nx() as u128) * (g.ny() as u128) * (g.nz() as u128);
    if cells == 0 {
        return 0;
    }
    let samples = samples.max(1);
    let xs = gen::indices(seed, 10, g.nx(), samples as usize);
    let ys = gen::indices(seed, 11, g.ny(), samples as usize);
    let zs = gen::indices(seed, 12, g.nz(), samples as usize);
    let hits = xs
        .iter()
        .zip(&ys)
        .zip(&zs)
        .filter(|((&x, &y), &z)| g.a.get(x, y) && g.b.get(y, z) && g.c.get(x, z))
        .count() as u128;
    (hits * cells / samples as u128) as u64
}

impl Enumerator {
    /// Largest instrumented step count any single `next()` call spent on the
    /// interleaved lister.
    pub fn max_step_count(&self) -> u64 {
        self.max_steps_per_call
    }

    /// Number of calls that had to exceed the budget to keep the stream
    /// gap-free (0 when the interleaving invariant held throughout).
    pub fn budget_violations(&self) -> u64 {
        self.budget_violations
    }

    pub fn step_budget(&self) -> u64 {
        self.step_budget
    }

    fn advance_prefetch(&mut self, budget: u64) -> u64 {
        let next = self.active_idx + 1;
        if next >= self.heavy.len() {
            return 0;
        }
        match &mut self.next_lister {
            Some(l) if !l.done => l.step(&self.heavy[next], &self.heavy_bt[next], budget),
            _ => 0,
        }
    }
}

impl Iterator for Enumerator {
    type Item = Triangle;

    fn next(&mut self) -> Option<Triangle> {
        let mut spent = 0u64;
        // light pieces first; the first heavy list is already prepared
        if self.light_pos < self.light.len() {
            self.light_pos += 1;
            return Some(self.light[self.light_pos - 1]);
        }
        loop {
            if self.active_idx >= self.heavy.len() {
                self.max_steps_per_call = self.max_steps_per_call.max(spent);
                return None;
            }
            if self.active_pos < self.active.len() {
                spent += self.advance_prefetch(self.step_budget.saturating_sub(spent));
                self.max_steps_per_call = self.max_steps_per_call.max(spent);
                self.active_pos += 1;
                return Some(self.active[self.active_pos - 1]);
            }
            // rotate to the next heavy piece; its lister must have finished
            // within the interleaved budget, otherwise finish it now and
            // record the violation
            if let Some(l) = &mut self.next_lister {
                if !l.done {
                    let next = self.active_idx + 1;
                    while !l.done {
                        spent += l.step(&self.heavy[next], &self.heavy_bt[next], u64::MAX);
                    }
                    self.budget_violations += 1;
                }
            }
            let finished = self.next_lister.take();
            self.active = finished.map(|l| l.found).unwrap_or_default();
            self.active_pos = 0;
            self.active_idx += 1;
            if self.active_idx + 1 < self.heavy.len() {
                self.next_lister = Some(SteppedLister::new());
            }
        }
    }
}
