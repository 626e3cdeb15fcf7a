//! Text formats shared with the command-line tool.
//!
//! Matrices travel in two ASCII forms, both newline-terminated:
//!
//! * dense — `rows cols` on the first line, then `rows` lines of `cols`
//!   characters from `{0, 1}`;
//! * sparse — `rows cols nnz` on the first line, then `nnz` lines `r c`
//!   (0-based row and column of each 1-entry, row-major order when written).
//!
//! Decomposition dumps start with `PIECES k eps_num/eps_den d`; each piece
//! contributes a `PIECE cert |xs| |ys|` (A-decompositions) or
//! `PIECE cert |xs| |ys| |zs|` (AB-decompositions) line, the index lines, and
//! the piece matrix or matrices in the sparse form. Triangles print as one
//! `x y z` line each, 0-based. 3-SUM instances are one integer per line.

use num_traits::Signed;

use crate::bitmatrix::{BoolMatrix, IndexSet, TripartiteGraph};
use crate::decompose::{ABCert, ABDecompPiece, ACert, ADecompPiece};
use crate::rational::{format_ratio, parse_ratio, Rat};
use crate::threesum::ThreeSumInstance;
use crate::triangle::Triangle;
use crate::{Error, Result};

/// Renders the dense form.
pub fn write_matrix_dense(m: &BoolMatrix) -> String {
    let mut out = String::with_capacity((m.rows() + 1) * (m.cols() + 1) + 16);
    out.push_str(&format!("{} {}\n", m.rows(), m.cols()));
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            out.push(if m.get(r, c) { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

/// Renders the sparse form (entries in row-major order).
pub fn write_matrix_sparse(m: &BoolMatrix) -> String {
    let mut out = String::new();
    out.push_str(&format!("{} {} {}\n", m.rows(), m.cols(), m.count_ones()));
    for r in 0..m.rows() {
        for c in m.iter_row_ones(r) {
            out.push_str(&format!("{r} {c}\n"));
        }
    }
    out
}

fn parse_usize(tok: &str, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::Parse(format!("invalid {what}: {tok:?}")))
}

/// Parses either matrix form, keyed on the header's token count.
pub fn read_matrix(text: &str) -> Result<BoolMatrix> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix text".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    match tokens.len() {
        2 => {
            let rows = parse_usize(tokens[0], "row count")?;
            let cols = parse_usize(tokens[1], "column count")?;
            let mut m = BoolMatrix::zeros(rows, cols);
            for r in 0..rows {
                let line = lines
                    .next()
                    .ok_or_else(|| Error::Parse(format!("missing row {r}")))?;
                let line = line.trim_end();
                if line.len() != cols {
                    return Err(Error::Parse(format!(
                        "row {r} has {} characters, expected {cols}",
                        line.len()
                    )));
                }
                for (c, ch) in line.chars().enumerate() {
                    match ch {
                        '1' => m.set(r, c, true),
                        '0' => {}
                        _ => {
                            return Err(Error::Parse(format!(
                                "row {r} contains {ch:?}, expected 0 or 1"
                            )))
                        }
                    }
                }
            }
            Ok(m)
        }
        3 => {
            let rows = parse_usize(tokens[0], "row count")?;
            let cols = parse_usize(tokens[1], "column count")?;
            let nnz = parse_usize(tokens[2], "entry count")?;
            let mut m = BoolMatrix::zeros(rows, cols);
            for i in 0..nnz {
                let line = lines
                    .next()
                    .ok_or_else(|| Error::Parse(format!("missing entry {i}")))?;
                let mut it = line.split_whitespace();
                let r = parse_usize(
                    it.next().ok_or_else(|| Error::Parse(format!("entry {i} empty")))?,
                    "entry row",
                )?;
                let c = parse_usize(
                    it.next()
                        .ok_or_else(|| Error::Parse(format!("entry {i} lacks a column")))?,
                    "entry column",
                )?;
                if r >= rows || c >= cols {
                    return Err(Error::Parse(format!("entry {i} at ({r}, {c}) out of range")));
                }
                m.set(r, c, true);
            }
            Ok(m)
        }
        _ => Err(Error::Parse(format!(
            "matrix header must have 2 or 3 tokens, got {}",
            tokens.len()
        ))),
    }
}

/// One `x y z` line per triangle; with `count_only`, a single integer.
pub fn write_triangles(triangles: &[Triangle], count_only: bool) -> String {
    if count_only {
        return format!("{}\n", triangles.len());
    }
    let mut out = String::new();
    for t in triangles {
        out.push_str(&format!("{} {} {}\n", t.x, t.y, t.z));
    }
    out
}

/// One integer per line.
pub fn write_threesum(values: &[i64]) -> String {
    let mut out = String::new();
    for v in values {
        out.push_str(&format!("{v}\n"));
    }
    out
}

pub fn read_threesum(text: &str) -> Result<ThreeSumInstance> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        values.push(
            line.parse::<i64>()
                .map_err(|_| Error::Parse(format!("line {i}: invalid integer {line:?}")))?,
        );
    }
    ThreeSumInstance::with_auto_range(values)
}

fn write_index_line(out: &mut String, set: &IndexSet) {
    let mut first = true;
    for &i in set.members() {
        if !first {
            out.push(' ');
        }
        out.push_str(&i.to_string());
        first = false;
    }
    out.push('\n');
}

fn read_index_line(line: &str, part_size: usize) -> Result<IndexSet> {
    let members = line
        .split_whitespace()
        .map(|t| {
            t.parse::<u32>()
                .map_err(|_| Error::Parse(format!("invalid index {t:?}")))
        })
        .collect::<Result<Vec<u32>>>()?;
    IndexSet::new(part_size, members)
}

/// Serializes an A-decomposition dump.
pub fn write_a_decomposition(pieces: &[ADecompPiece], epsilon: &Rat, d: u32) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "PIECES {} {} {}\n",
        pieces.len(),
        format_ratio(epsilon),
        d
    ));
    for p in pieces {
        let cert = match p.cert {
            ACert::Sparse => "sparse",
            ACert::RegularMinDeg => "regular-min-deg",
        };
        out.push_str(&format!("PIECE {cert} {} {}\n", p.rows.len(), p.cols.len()));
        write_index_line(&mut out, &p.rows);
        write_index_line(&mut out, &p.cols);
        out.push_str(&write_matrix_sparse(&p.matrix));
    }
    out
}

/// Serializes an AB-decomposition dump.
pub fn write_ab_decomposition(pieces: &[ABDecompPiece], epsilon: &Rat, d: u32) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "PIECES {} {} {}\n",
        pieces.len(),
        format_ratio(epsilon),
        d
    ));
    for p in pieces {
        out.push_str(&format!(
            "PIECE {} {} {} {}\n",
            p.cert.token(),
            p.xs.len(),
            p.ys.len(),
            p.zs.len()
        ));
        write_index_line(&mut out, &p.xs);
        write_index_line(&mut out, &p.ys);
        write_index_line(&mut out, &p.zs);
        out.push_str(&write_matrix_sparse(&p.a_part));
        out.push_str(&write_matrix_sparse(&p.b_part));
    }
    out
}

/// Parsed dump header.
pub struct DumpHeader {
    pub pieces: usize,
    pub epsilon: Rat,
    pub d: u32,
}

struct LineReader<'a> {
    lines: std::str::Lines<'a>,
    at: usize,
}

impl<'a> LineReader<'a> {
    fn new(text: &'a str) -> Self {
        LineReader {
            lines: text.lines(),
            at: 0,
        }
    }

    fn next(&mut self) -> Result<&'a str> {
        self.at += 1;
        self.lines
            .next()
            .ok_or_else(|| Error::Parse(format!("unexpected end of dump at line {}", self.at)))
    }

    fn matrix(&mut self) -> Result<BoolMatrix> {
        let header = self.next()?;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(Error::Parse(format!(
                "line {}: expected a sparse matrix header",
                self.at
            )));
        }
        let nnz = parse_usize(tokens[2], "entry count")?;
        let mut text = String::from(header);
        text.push('\n');
        for _ in 0..nnz {
            text.push_str(self.next()?);
            text.push('\n');
        }
        read_matrix(&text)
    }
}

fn parse_dump_header(line: &str) -> Result<DumpHeader> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != 4 || tokens[0] != "PIECES" {
        return Err(Error::Parse("dump must start with a PIECES header".into()));
    }
    let epsilon = parse_ratio(tokens[2])?;
    if !epsilon.is_positive() {
        return Err(Error::Parse("dump epsilon must be positive".into()));
    }
    Ok(DumpHeader {
        pieces: parse_usize(tokens[1], "piece count")?,
        epsilon,
        d: tokens[3]
            .parse::<u32>()
            .map_err(|_| Error::Parse(format!("invalid d: {:?}", tokens[3])))?,
    })
}

/// Parses an A-decomposition dump against the original part sizes.
pub fn read_a_decomposition(
    text: &str,
    rows: usize,
    cols: usize,
) -> Result<(DumpHeader, Vec<ADecompPiece>)> {
    let mut reader = LineReader::new(text);
    let header = parse_dump_header(reader.next()?)?;
    let mut pieces = Vec::with_capacity(header.pieces);
    for _ in 0..header.pieces {
        let line = reader.next()?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 4 || tokens[0] != "PIECE" {
            return Err(Error::Parse(format!(
                "expected `PIECE cert |xs| |ys|`, got {line:?}"
            )));
        }
        let cert = match tokens[1] {
            "sparse" => ACert::Sparse,
            "regular-min-deg" => ACert::RegularMinDeg,
            other => return Err(Error::Parse(format!("unknown A-piece cert {other:?}"))),
        };
        let nr = parse_usize(tokens[2], "piece row count")?;
        let nc = parse_usize(tokens[3], "piece column count")?;
        let rows_set = read_index_line(reader.next()?, rows)?;
        let cols_set = read_index_line(reader.next()?, cols)?;
        if rows_set.len() != nr || cols_set.len() != nc {
            return Err(Error::Parse("piece index sets disagree with sizes".into()));
        }
        let matrix = reader.matrix()?;
        if matrix.rows() != nr || matrix.cols() != nc {
            return Err(Error::Parse("piece matrix disagrees with sizes".into()));
        }
        pieces.push(ADecompPiece {
            rows: rows_set,
            cols: cols_set,
            matrix,
            cert,
        });
    }
    Ok((header, pieces))
}

/// Parses an AB-decomposition dump against the original part sizes.
pub fn read_ab_decomposition(
    text: &str,
    nx: usize,
    ny: usize,
    nz: usize,
) -> Result<(DumpHeader, Vec<ABDecompPiece>)> {
    let mut reader = LineReader::new(text);
    let header = parse_dump_header(reader.next()?)?;
    let mut pieces = Vec::with_capacity(header.pieces);
    for _ in 0..header.pieces {
        let line = reader.next()?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 5 || tokens[0] != "PIECE" {
            return Err(Error::Parse(format!(
                "expected `PIECE cert |xs| |ys| |zs|`, got {line:?}"
            )));
        }
        let cert = match tokens[1] {
            "sparse-a" => ABCert::SparseA,
            "sparse-b" => ABCert::SparseB,
            "regular-pair" => ABCert::RegularPair,
            other => return Err(Error::Parse(format!("unknown AB-piece cert {other:?}"))),
        };
        let sizes: Vec<usize> = tokens[2..5]
            .iter()
            .map(|t| parse_usize(t, "piece size"))
            .collect::<Result<_>>()?;
        let xs = read_index_line(reader.next()?, nx)?;
        let ys = read_index_line(reader.next()?, ny)?;
        let zs = read_index_line(reader.next()?, nz)?;
        if xs.len() != sizes[0] || ys.len() != sizes[1] || zs.len() != sizes[2] {
            return Err(Error::Parse("piece index sets disagree with sizes".into()));
        }
        let a_part = reader.matrix()?;
        let b_part = reader.matrix()?;
        if a_part.rows() != sizes[0]
            || a_part.cols() != sizes[1]
            || b_part.rows() != sizes[1]
            || b_part.cols() != sizes[2]
        {
            return Err(Error::Parse("piece matrices disagree with sizes".into()));
        }
        pieces.push(ABDecompPiece {
            xs,
            ys,
            zs,
            a_part,
            b_part,
            cert,
        });
    }
    Ok((header, pieces))
}

/// Reads the three matrices of a tripartite graph.
pub fn graph_from_texts(a: &str, b: &str, c: &str) -> Result<TripartiteGraph> {
    TripartiteGraph::new(read_matrix(a)?, read_matrix(b)?, read_matrix(c)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{a_decomposition, ab_decomposition};
    use crate::gen::rand_matrix;
    use crate::rational::ratio;
    use crate::sift::SiftMode;

    #[test]
    fn dense_round_trip() {
        let m = rand_matrix(9, 13, &ratio(1, 3), 5).unwrap();
        let text = write_matrix_dense(&m);
        assert_eq!(read_matrix(&text).unwrap(), m);
        // first line carries the sizes
        assert!(text.starts_with("9 13\n"));
    }

    #[test]
    fn sparse_round_trip() {
        let m = rand_matrix(7, 21, &ratio(1, 4), 9).unwrap();
        let text = write_matrix_sparse(&m);
        assert_eq!(read_matrix(&text).unwrap(), m);
        assert!(text.starts_with(&format!("7 21 {}\n", m.count_ones())));
    }

    #[test]
    fn malformed_matrices_are_rejected() {
        assert!(read_matrix("").is_err());
        assert!(read_matrix("2 2\n01\n0").is_err());
        assert!(read_matrix("2 2\n01\n0x\n").is_err());
        assert!(read_matrix("1 1 1\n3 0\n").is_err());
        assert!(read_matrix("1 2 3 4\n").is_err());
    }

    #[test]
    fn a_dump_round_trip() {
        let a = rand_matrix(24, 24, &ratio(1, 2), 31).unwrap();
        let eps = ratio(1, 5);
        let pieces = a_decomposition(&a, &eps, 3, &SiftMode::Exact).unwrap();
        let dump = write_a_decomposition(&pieces, &eps, 3);
        let (header, parsed) = read_a_decomposition(&dump, 24, 24).unwrap();
        assert_eq!(header.pieces, pieces.len());
        assert_eq!(header.epsilon, eps);
        assert_eq!(header.d, 3);
        for (p, q) in pieces.iter().zip(&parsed) {
            assert_eq!(p.rows, q.rows);
            assert_eq!(p.cols, q.cols);
            assert_eq!(p.matrix, q.matrix);
            assert_eq!(p.cert, q.cert);
        }
    }

    #[test]
    fn ab_dump_round_trip() {
        let a = rand_matrix(12, 12, &ratio(1, 2), 3).unwrap();
        let b = rand_matrix(12, 12, &ratio(1, 2), 4).unwrap();
        let eps = ratio(1, 160);
        let pieces = ab_decomposition(&a, &b, &eps, 2).unwrap();
        let dump = write_ab_decomposition(&pieces, &eps, 2);
        let (header, parsed) = read_ab_decomposition(&dump, 12, 12, 12).unwrap();
        assert_eq!(header.pieces, pieces.len());
        for (p, q) in pieces.iter().zip(&parsed) {
            assert_eq!(p.xs, q.xs);
            assert_eq!(p.a_part, q.a_part);
            assert_eq!(p.b_part, q.b_part);
            assert_eq!(p.cert, q.cert);
        }
        // corrupted cert token fails to parse
        let bad = dump.replace("PIECE sparse-b", "PIECE bogus");
        if bad != dump {
            assert!(read_ab_decomposition(&bad, 12, 12, 12).is_err());
        }
    }

    #[test]
    fn threesum_round_trip() {
        let text = "5\n-3\n\n-2\n";
        let inst = read_threesum(text).unwrap();
        assert_eq!(inst.values(), &[5, -3, -2]);
        assert_eq!(write_threesum(inst.values()), "5\n-3\n-2\n");
        assert!(read_threesum("5\nx\n").is_err());
    }

    #[test]
    fn triangle_output_formats() {
        let ts = vec![Triangle::new(0, 1, 2), Triangle::new(3, 4, 5)];
        assert_eq!(write_triangles(&ts, false), "0 1 2\n3 4 5\n");
        assert_eq!(write_triangles(&ts, true), "2\n");
    }
}
