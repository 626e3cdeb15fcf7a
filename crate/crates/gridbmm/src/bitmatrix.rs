//! Bit-packed binary matrices identified with bipartite graphs.
//!
//! A `BoolMatrix` over node parts `X` (rows) and `Y` (columns) is the bipartite
//! graph with an edge `(x, y)` whenever the entry is 1. Densities and degrees
//! are exact rationals; all bulk operations work word-parallel on packed rows
//! with the padding bits beyond the last column kept at zero, so popcounts over
//! whole words are always safe.

use std::fmt;

use crate::rational::{ratio_u, Rat};
use crate::{Error, Result};

const WORD_BITS: usize = 64;

/// Position of a node within a named part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A strictly increasing set of node positions inside a part of known size.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    part_size: usize,
    members: Vec<u32>,
}

impl IndexSet {
    /// Validates that `members` is strictly increasing and within `part_size`.
    pub fn new(part_size: usize, members: Vec<u32>) -> Result<Self> {
        for (i, &m) in members.iter().enumerate() {
            if m as usize >= part_size {
                return Err(Error::IndexOutOfRange {
                    index: m as usize,
                    size: part_size,
                });
            }
            if i > 0 && members[i - 1] >= m {
                return Err(Error::InvalidIndexSet(format!(
                    "members not strictly increasing at position {i}"
                )));
            }
        }
        Ok(IndexSet { part_size, members })
    }

    /// Collects arbitrary indices: sorts and deduplicates them first.
    pub fn from_unsorted(part_size: usize, mut members: Vec<u32>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        IndexSet::new(part_size, members)
    }

    /// The whole part `{0, ..., n-1}`.
    pub fn full(part_size: usize) -> Self {
        IndexSet {
            part_size,
            members: (0..part_size as u32).collect(),
        }
    }

    pub fn empty(part_size: usize) -> Self {
        IndexSet {
            part_size,
            members: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() == self.part_size
    }

    pub fn part_size(&self) -> usize {
        self.part_size
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn contains(&self, index: u32) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    /// Members of the ambient part not in this set.
    pub fn complement(&self) -> IndexSet {
        let mut members = Vec::with_capacity(self.part_size - self.members.len());
        let mut it = self.members.iter().copied().peekable();
        for i in 0..self.part_size as u32 {
            if it.peek() == Some(&i) {
                it.next();
            } else {
                members.push(i);
            }
        }
        IndexSet {
            part_size: self.part_size,
            members,
        }
    }

    /// Reinterprets `self` (positions within `parent`) as a set of `parent`'s
    /// own members, so chained restrictions always name nodes of the original
    /// part.
    pub fn compose(&self, parent: &IndexSet) -> Result<IndexSet> {
        if self.part_size != parent.len() {
            return Err(Error::InvalidIndexSet(format!(
                "cannot compose set over part of size {} through a parent with {} members",
                self.part_size,
                parent.len()
            )));
        }
        let members = self
            .members
            .iter()
            .map(|&i| parent.members[i as usize])
            .collect();
        Ok(IndexSet {
            part_size: parent.part_size,
            members,
        })
    }
}

/// Row-major bit-packed 0/1 matrix.
///
/// `row_labels` / `col_labels`, when present, name each row/column as a node of
/// an ambient part; `submatrix` composes them so that restricted matrices keep
/// naming nodes of the original parts. Equality compares dimensions and entries
/// only — labels are bookkeeping metadata.
#[derive(Clone)]
pub struct BoolMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    bits: Vec<u64>,
    row_labels: Option<IndexSet>,
    col_labels: Option<IndexSet>,
}

impl PartialEq for BoolMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.bits == other.bits
    }
}

impl Eq for BoolMatrix {}

impl fmt::Debug for BoolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BoolMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                write!(f, "{}", u8::from(self.get(r, c)))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl BoolMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(WORD_BITS);
        BoolMatrix {
            rows,
            cols,
            words_per_row,
            bits: vec![0; rows * words_per_row],
            row_labels: None,
            col_labels: None,
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        let mut m = BoolMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, true);
            }
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BoolMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = BoolMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if f(r, c) {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    pub fn from_entries(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut m = BoolMatrix::zeros(rows, cols);
        for (r, c) in entries {
            if r >= rows {
                return Err(Error::IndexOutOfRange { index: r, size: rows });
            }
            if c >= cols {
                return Err(Error::IndexOutOfRange { index: c, size: cols });
            }
            m.set(r, c, true);
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_labels(&self) -> Option<&IndexSet> {
        self.row_labels.as_ref()
    }

    pub fn col_labels(&self) -> Option<&IndexSet> {
        self.col_labels.as_ref()
    }

    pub fn with_labels(mut self, rows: Option<IndexSet>, cols: Option<IndexSet>) -> Result<Self> {
        if let Some(r) = &rows {
            if r.len() != self.rows {
                return Err(Error::InvalidIndexSet(format!(
                    "row label set has {} members for {} rows",
                    r.len(),
                    self.rows
                )));
            }
        }
        if let Some(c) = &cols {
            if c.len() != self.cols {
                return Err(Error::InvalidIndexSet(format!(
                    "column label set has {} members for {} columns",
                    c.len(),
                    self.cols
                )));
            }
        }
        self.row_labels = rows;
        self.col_labels = cols;
        Ok(self)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.rows && col < self.cols);
        let w = self.bits[row * self.words_per_row + col / WORD_BITS];
        (w >> (col % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        assert!(row < self.rows && col < self.cols);
        let w = &mut self.bits[row * self.words_per_row + col / WORD_BITS];
        let mask = 1u64 << (col % WORD_BITS);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn row_words(&self, row: usize) -> &[u64] {
        &self.bits[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    /// Number of 1-entries in the whole matrix.
    pub fn count_ones(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Number of 1-entries in one row.
    pub fn row_count_ones(&self, row: usize) -> u64 {
        self.row_words(row).iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Popcount of the AND of two rows: the number of common neighbors.
    pub fn and_popcount(&self, r1: usize, r2: usize) -> u64 {
        self.row_words(r1)
            .iter()
            .zip(self.row_words(r2))
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    /// Column indices of the 1-entries of a row, ascending.
    pub fn iter_row_ones(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        let base = row * self.words_per_row;
        let words = &self.bits[base..base + self.words_per_row];
        words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD_BITS + b)
                }
            })
        })
    }

    /// Exact density `E[A]`: ones over `rows * cols`.
    pub fn density(&self) -> Result<Rat> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        Ok(ratio_u(self.count_ones(), (self.rows * self.cols) as u64))
    }

    /// Relative degree of row node `x`: its ones over the number of columns.
    pub fn row_degree(&self, x: NodeId) -> Result<Rat> {
        if x.index() >= self.rows {
            return Err(Error::IndexOutOfRange {
                index: x.index(),
                size: self.rows,
            });
        }
        if self.cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        Ok(ratio_u(self.row_count_ones(x.index()), self.cols as u64))
    }

    /// Relative degree of column node `y`.
    pub fn col_degree(&self, y: NodeId) -> Result<Rat> {
        if y.index() >= self.cols {
            return Err(Error::IndexOutOfRange {
                index: y.index(),
                size: self.cols,
            });
        }
        if self.rows == 0 {
            return Err(Error::EmptyMatrix);
        }
        let count = (0..self.rows).filter(|&r| self.get(r, y.index())).count();
        Ok(ratio_u(count as u64, self.rows as u64))
    }

    /// `B(y, x) = A(x, y)`; labels swap sides.
    pub fn transpose(&self) -> BoolMatrix {
        let mut t = BoolMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.iter_row_ones(r) {
                t.set(c, r, true);
            }
        }
        t.row_labels = self.col_labels.clone();
        t.col_labels = self.row_labels.clone();
        t
    }

    fn check_sets(&self, rows: &IndexSet, cols: &IndexSet) -> Result<()> {
        if rows.part_size() != self.rows {
            return Err(Error::InvalidIndexSet(format!(
                "row set is over a part of size {}, matrix has {} rows",
                rows.part_size(),
                self.rows
            )));
        }
        if cols.part_size() != self.cols {
            return Err(Error::InvalidIndexSet(format!(
                "column set is over a part of size {}, matrix has {} columns",
                cols.part_size(),
                self.cols
            )));
        }
        Ok(())
    }

    /// Materializes `A[rows, cols]`. Labels are composed through `A`'s own
    /// labels, so the result still names nodes of the original parts.
    pub fn submatrix(&self, rows: &IndexSet, cols: &IndexSet) -> Result<BoolMatrix> {
        self.check_sets(rows, cols)?;
        let mut m = BoolMatrix::zeros(rows.len(), cols.len());
        if cols.is_full() {
            // row selection only: whole packed rows copy over
            for (i, &r) in rows.members().iter().enumerate() {
                let src = self.row_words(r as usize);
                m.bits[i * m.words_per_row..(i + 1) * m.words_per_row].copy_from_slice(src);
            }
        } else {
            let positions: Vec<(usize, u32)> = cols
                .members()
                .iter()
                .map(|&c| (c as usize / WORD_BITS, (c as usize % WORD_BITS) as u32))
                .collect();
            for (i, &r) in rows.members().iter().enumerate() {
                let src = self.row_words(r as usize);
                let dst = &mut m.bits[i * m.words_per_row..(i + 1) * m.words_per_row];
                for (j, &(wi, sh)) in positions.iter().enumerate() {
                    dst[j / WORD_BITS] |= ((src[wi] >> sh) & 1) << (j % WORD_BITS);
                }
            }
        }
        m.row_labels = Some(match &self.row_labels {
            Some(parent) => rows.compose(parent)?,
            None => rows.clone(),
        });
        m.col_labels = Some(match &self.col_labels {
            Some(parent) => cols.compose(parent)?,
            None => cols.clone(),
        });
        Ok(m)
    }

    /// Copy of `A` with all entries in the rectangle `rows x cols` set to 0.
    pub fn zero_rectangle(&self, rows: &IndexSet, cols: &IndexSet) -> Result<BoolMatrix> {
        self.check_sets(rows, cols)?;
        let mut m = self.clone();
        for &r in rows.members() {
            for &c in cols.members() {
                m.set(r as usize, c as usize, false);
            }
        }
        Ok(m)
    }

    /// Boolean product over the (OR, AND) semiring, word-parallel over packed
    /// rows.
    pub fn bool_product(&self, other: &BoolMatrix) -> Result<BoolMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let mut out = BoolMatrix::zeros(self.rows, other.cols);
        for x in 0..self.rows {
            let (head, tail) = out.bits.split_at_mut(x * out.words_per_row);
            let _ = head;
            let out_row = &mut tail[..out.words_per_row];
            for y in self.iter_row_ones(x) {
                for (o, w) in out_row.iter_mut().zip(other.row_words(y)) {
                    *o |= *w;
                }
            }
        }
        out.row_labels = self.row_labels.clone();
        out.col_labels = other.col_labels.clone();
        Ok(out)
    }

    /// Integer 2-path counts: `entries(x, z) = |{y : A(x,y) = B(y,z) = 1}|`.
    /// The paper's scaled product `A ∘ B` is these counts divided by the inner
    /// dimension.
    pub fn count_product(&self, other: &BoolMatrix) -> Result<CountMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let bt = other.transpose();
        let mut entries = vec![0u64; self.rows * other.cols];
        for x in 0..self.rows {
            let ax = self.row_words(x);
            for z in 0..other.cols {
                let count: u64 = ax
                    .iter()
                    .zip(bt.row_words(z))
                    .map(|(a, b)| (a & b).count_ones() as u64)
                    .sum();
                entries[x * other.cols + z] = count;
            }
        }
        Ok(CountMatrix {
            rows: self.rows,
            cols: other.cols,
            inner: self.cols,
            entries,
        })
    }
}

/// Matrix of nonnegative integer counts, the unscaled form of `A ∘ B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    rows: usize,
    cols: usize,
    inner: usize,
    entries: Vec<u64>,
}

impl CountMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CountMatrix {
            rows,
            cols,
            inner: 0,
            entries: vec![0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Shared inner dimension of the product that produced these counts
    /// (0 for an accumulator built with `zeros`).
    pub fn inner(&self) -> usize {
        self.inner
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.entries[row * self.cols + col]
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, amount: u64) {
        self.entries[row * self.cols + col] += amount;
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().sum()
    }
}

/// Tripartite graph with node parts `X, Y, Z` and edge parts
/// `A: X x Y`, `B: Y x Z`, `C: X x Z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripartiteGraph {
    pub a: BoolMatrix,
    pub b: BoolMatrix,
    pub c: BoolMatrix,
}

impl TripartiteGraph {
    pub fn new(a: BoolMatrix, b: BoolMatrix, c: BoolMatrix) -> Result<Self> {
        if a.cols() != b.rows() {
            return Err(Error::DimensionMismatch {
                left: (a.rows(), a.cols()),
                right: (b.rows(), b.cols()),
            });
        }
        if c.rows() != a.rows() || c.cols() != b.cols() {
            return Err(Error::DimensionMismatch {
                left: (a.rows(), b.cols()),
                right: (c.rows(), c.cols()),
            });
        }
        Ok(TripartiteGraph { a, b, c })
    }

    pub fn nx(&self) -> usize {
        self.a.rows()
    }

    pub fn ny(&self) -> usize {
        self.a.cols()
    }

    pub fn nz(&self) -> usize {
        self.b.cols()
    }

    /// Complete tripartite graph: every pair of nodes in distinct parts is an
    /// edge.
    pub fn complete(nx: usize, ny: usize, nz: usize) -> Self {
        TripartiteGraph {
            a: BoolMatrix::ones(nx, ny),
            b: BoolMatrix::ones(ny, nz),
            c: BoolMatrix::ones(nx, nz),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn seeded(rows: usize, cols: usize, seed: u64) -> BoolMatrix {
        // tiny deterministic generator for unit tests (xorshift)
        let mut s = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
        BoolMatrix::from_fn(rows, cols, |_, _| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            s & 1 == 1
        })
    }

    #[test]
    fn density_identity_and_ones() {
        assert_eq!(BoolMatrix::identity(2).density().unwrap(), ratio(1, 2));
        assert_eq!(BoolMatrix::ones(3, 5).density().unwrap(), ratio(1, 1));
        assert!(matches!(
            BoolMatrix::zeros(0, 4).density(),
            Err(Error::EmptyMatrix)
        ));
    }

    #[test]
    fn density_matches_scalar_popcount_oracle() {
        let m = seeded(16, 16, 7);
        let mut ones = 0u64;
        for r in 0..16 {
            for c in 0..16 {
                ones += u64::from(m.get(r, c));
            }
        }
        assert_eq!(m.density().unwrap(), ratio_u(ones, 256));
    }

    #[test]
    fn degrees_match_scalar_loops() {
        let m = seeded(32, 32, 3);
        for x in 0..32 {
            let count = (0..32).filter(|&c| m.get(x, c)).count() as u64;
            assert_eq!(m.row_degree(NodeId(x as u32)).unwrap(), ratio_u(count, 32));
        }
        for y in 0..32 {
            let count = (0..32).filter(|&r| m.get(r, y)).count() as u64;
            assert_eq!(m.col_degree(NodeId(y as u32)).unwrap(), ratio_u(count, 32));
        }
        assert_eq!(
            BoolMatrix::identity(2).row_degree(NodeId(0)).unwrap(),
            ratio(1, 2)
        );
        assert_eq!(
            BoolMatrix::zeros(4, 4).row_degree(NodeId(1)).unwrap(),
            ratio(0, 1)
        );
        assert!(m.row_degree(NodeId(99)).is_err());
    }

    #[test]
    fn transpose_small_and_involution() {
        let id = BoolMatrix::identity(3);
        assert_eq!(id.transpose(), id);

        let row = BoolMatrix::from_entries(1, 3, [(0, 0), (0, 2)]).unwrap();
        let col = row.transpose();
        assert_eq!(col.rows(), 3);
        assert_eq!(col.cols(), 1);
        assert!(col.get(0, 0) && !col.get(1, 0) && col.get(2, 0));

        let m = seeded(64, 64, 11);
        assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn submatrix_matches_scalar_gather() {
        let m = seeded(24, 17, 5);
        let rows = IndexSet::new(24, vec![0, 3, 5, 20]).unwrap();
        let cols = IndexSet::new(17, vec![1, 2, 16]).unwrap();
        let s = m.submatrix(&rows, &cols).unwrap();
        for (i, &r) in rows.members().iter().enumerate() {
            for (j, &c) in cols.members().iter().enumerate() {
                assert_eq!(s.get(i, j), m.get(r as usize, c as usize));
            }
        }
        // full sets give a copy, empty row set a 0 x cols matrix
        assert_eq!(
            m.submatrix(&IndexSet::full(24), &IndexSet::full(17)).unwrap(),
            m
        );
        let empty = m.submatrix(&IndexSet::empty(24), &IndexSet::full(17)).unwrap();
        assert_eq!(empty.rows(), 0);
        assert_eq!(empty.cols(), 17);
    }

    #[test]
    fn submatrix_composes_labels_to_original_part() {
        let m = seeded(10, 10, 9);
        let outer_rows = IndexSet::new(10, vec![1, 4, 6, 9]).unwrap();
        let outer_cols = IndexSet::full(10);
        let s = m.submatrix(&outer_rows, &outer_cols).unwrap();
        let inner_rows = IndexSet::new(4, vec![0, 2]).unwrap();
        let ss = s.submatrix(&inner_rows, &IndexSet::full(10)).unwrap();
        assert_eq!(ss.row_labels().unwrap().members(), &[1, 6]);
        assert_eq!(ss.row_labels().unwrap().part_size(), 10);
    }

    #[test]
    fn zero_rectangle_cases() {
        let m = seeded(12, 12, 2);
        let full = IndexSet::full(12);
        assert_eq!(
            m.zero_rectangle(&full, &full).unwrap(),
            BoolMatrix::zeros(12, 12)
        );
        assert_eq!(m.zero_rectangle(&IndexSet::empty(12), &full).unwrap(), m);

        let rows = IndexSet::new(12, vec![2, 7]).unwrap();
        let cols = IndexSet::new(12, vec![0, 3, 11]).unwrap();
        let z = m.zero_rectangle(&rows, &cols).unwrap();
        for r in 0..12 {
            for c in 0..12 {
                let expect = if rows.contains(r as u32) && cols.contains(c as u32) {
                    false
                } else {
                    m.get(r, c)
                };
                assert_eq!(z.get(r, c), expect);
            }
        }
    }

    #[test]
    fn zero_rectangle_plus_submatrix_partitions_edges() {
        let m = seeded(20, 20, 13);
        let rows = IndexSet::new(20, (0..20).filter(|r| r % 3 == 0).collect()).unwrap();
        let cols = IndexSet::new(20, (0..20).filter(|c| c % 2 == 1).collect()).unwrap();
        let z = m.zero_rectangle(&rows, &cols).unwrap();
        let s = m.submatrix(&rows, &cols).unwrap();
        assert_eq!(z.count_ones() + s.count_ones(), m.count_ones());
    }

    #[test]
    fn bool_product_against_triple_loop() {
        let a = seeded(48, 48, 21);
        let b = seeded(48, 48, 22);
        let p = a.bool_product(&b).unwrap();
        for x in 0..48 {
            for z in 0..48 {
                let expect = (0..48).any(|y| a.get(x, y) && b.get(y, z));
                assert_eq!(p.get(x, z), expect, "entry ({x},{z})");
            }
        }
        let id = BoolMatrix::identity(48);
        assert_eq!(id.bool_product(&a).unwrap(), a);
        let zero = BoolMatrix::zeros(48, 48);
        assert_eq!(a.bool_product(&zero).unwrap(), zero);
        assert!(a.bool_product(&seeded(13, 5, 1)).is_err());
    }

    #[test]
    fn count_product_against_triple_loop() {
        let a = seeded(20, 30, 31);
        let b = seeded(30, 25, 32);
        let p = a.count_product(&b).unwrap();
        for x in 0..20 {
            for z in 0..25 {
                let expect = (0..30).filter(|&y| a.get(x, y) && b.get(y, z)).count() as u64;
                assert_eq!(p.get(x, z), expect);
            }
        }
        let id = BoolMatrix::identity(2);
        let pid = id.count_product(&id).unwrap();
        assert_eq!((pid.get(0, 0), pid.get(0, 1)), (1, 0));
        let ones = BoolMatrix::ones(4, 6);
        let pones = BoolMatrix::ones(3, 4).count_product(&ones).unwrap();
        for x in 0..3 {
            for z in 0..6 {
                assert_eq!(pones.get(x, z), 4);
            }
        }
    }

    #[test]
    fn bool_product_iff_count_positive() {
        let a = seeded(17, 19, 41);
        let b = seeded(19, 23, 42);
        let bp = a.bool_product(&b).unwrap();
        let cp = a.count_product(&b).unwrap();
        for x in 0..17 {
            for z in 0..23 {
                assert_eq!(bp.get(x, z), cp.get(x, z) >= 1);
            }
        }
    }

    #[test]
    fn density_is_mean_of_degrees() {
        let m = seeded(15, 27, 55);
        let d = m.density().unwrap();
        let row_sum: Rat = (0..15)
            .map(|x| m.row_degree(NodeId(x)).unwrap())
            .sum();
        let col_sum: Rat = (0..27)
            .map(|y| m.col_degree(NodeId(y)).unwrap())
            .sum();
        assert_eq!(&row_sum / ratio(15, 1), d);
        assert_eq!(&col_sum / ratio(27, 1), d);
    }

    #[test]
    fn index_set_validation_and_complement() {
        assert!(IndexSet::new(4, vec![0, 0]).is_err());
        assert!(IndexSet::new(4, vec![2, 1]).is_err());
        assert!(IndexSet::new(4, vec![4]).is_err());
        let s = IndexSet::new(6, vec![1, 3, 4]).unwrap();
        assert_eq!(s.complement().members(), &[0, 2, 5]);
    }
}
