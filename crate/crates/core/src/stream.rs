//! Sources of coarse observations and their line-oriented text format.
//!
//! Format, one cell per record:
//!
//! ```text
//! I lo hi
//! B d lo_1 .. lo_d hi_1 .. hi_d
//! H d k            (followed by k lines: a_1 .. a_d b)
//! S d x_1 .. x_d
//! W d
//! ```
//!
//! Numbers are written with 17 significant digits so doubles round-trip.

use crate::error::{check_dim, Error, Result};
use crate::geometry::{ConvexSet, Partition};
use crate::rng::SeededRng;
use crate::sampling::sample_gaussian;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

#[allow(clippy::large_enum_variant)]
enum Source {
    Synthetic {
        partition: Partition,
        mu_star: Vec<f64>,
        rng: SeededRng,
        limit: Option<usize>,
        splits: u64,
    },
    Replay {
        cells: Vec<ConvexSet>,
        pos: usize,
    },
}

/// An ordered supply of i.i.d. coarse observations.
pub struct CoarseStream {
    dim: usize,
    source: Source,
    consumed: usize,
}

impl CoarseStream {
    /// Cells `locate(x)` for fresh `x ~ 𝒩(mu_star, I)`.
    pub fn synthetic(partition: Partition, mu_star: Vec<f64>, seed: u64) -> Result<Self> {
        check_dim(partition.dim(), mu_star.len())?;
        Ok(Self {
            dim: partition.dim(),
            source: Source::Synthetic {
                partition,
                mu_star,
                rng: SeededRng::new(seed),
                limit: None,
                splits: 0,
            },
            consumed: 0,
        })
    }

    /// Replays `cells` in order. `dim` is needed when `cells` is empty.
    pub fn replay(dim: usize, cells: Vec<ConvexSet>) -> Result<Self> {
        for c in &cells {
            check_dim(dim, c.dim())?;
        }
        Ok(Self {
            dim,
            source: Source::Replay { cells, pos: 0 },
            consumed: 0,
        })
    }

    /// Replays a file written by [`write_cells`]. An empty file yields an
    /// empty stream of dimension `dim`.
    pub fn from_file(path: impl AsRef<Path>, dim: usize) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let cells = read_cells(std::io::BufReader::new(file))?;
        Self::replay(dim, cells)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells handed out so far, including those moved into substreams.
    pub fn consumed(&self) -> usize {
        self.consumed
    }

    /// Cells left, or `None` for an unlimited synthetic source.
    pub fn remaining(&self) -> Option<usize> {
        match &self.source {
            Source::Synthetic { limit, .. } => limit.map(|l| l - self.consumed),
            Source::Replay { cells, pos } => Some(cells.len() - pos),
        }
    }

    pub fn next_cell(&mut self) -> Result<ConvexSet> {
        let exhausted = Error::StreamExhausted {
            consumed: self.consumed,
        };
        let cell = match &mut self.source {
            Source::Synthetic {
                partition,
                mu_star,
                rng,
                limit,
                ..
            } => {
                if limit.is_some_and(|l| self.consumed >= l) {
                    return Err(exhausted);
                }
                let x = sample_gaussian(mu_star, rng);
                partition.locate_unchecked(&x)
            }
            Source::Replay { cells, pos } => {
                let Some(c) = cells.get(*pos) else {
                    return Err(exhausted);
                };
                *pos += 1;
                c.clone()
            }
        };
        self.consumed += 1;
        Ok(cell)
    }

    /// Moves the next `n` cells into an independent stream.
    ///
    /// Synthetic substreams draw from a forked generator keyed by the split
    /// index, so the cells a substream sees do not depend on how many cells
    /// other substreams end up using.
    pub fn take(&mut self, n: usize) -> Result<CoarseStream> {
        if let Some(rem) = self.remaining() {
            if rem < n {
                return Err(Error::StreamExhausted {
                    consumed: self.consumed + rem,
                });
            }
        }
        let dim = self.dim;
        let child = match &mut self.source {
            Source::Synthetic {
                partition,
                mu_star,
                rng,
                splits,
                ..
            } => {
                let child_rng = rng.fork(*splits);
                *splits += 1;
                Source::Synthetic {
                    partition: partition.clone(),
                    mu_star: mu_star.clone(),
                    rng: child_rng,
                    limit: Some(n),
                    splits: 0,
                }
            }
            Source::Replay { cells, pos } => {
                let part = cells[*pos..*pos + n].to_vec();
                *pos += n;
                Source::Replay {
                    cells: part,
                    pos: 0,
                }
            }
        };
        self.consumed += n;
        Ok(CoarseStream {
            dim,
            source: child,
            consumed: 0,
        })
    }

    /// Draws `n` cells into memory.
    pub fn collect_cells(&mut self, n: usize) -> Result<Vec<ConvexSet>> {
        (0..n).map(|_| self.next_cell()).collect()
    }
}

fn fmt_num(out: &mut String, x: f64) {
    if x == f64::INFINITY {
        out.push_str(" inf");
    } else if x == f64::NEG_INFINITY {
        out.push_str(" -inf");
    } else {
        write!(out, " {x:.16e}").expect("writing to a String");
    }
}

/// Appends the text form of `cell` (with trailing newline) to `out`.
pub fn format_cell(out: &mut String, cell: &ConvexSet) {
    match cell {
        ConvexSet::Interval { lo, hi } => {
            out.push('I');
            fmt_num(out, *lo);
            fmt_num(out, *hi);
        }
        ConvexSet::AxisBox { lo, hi } => {
            write!(out, "B {}", lo.len()).expect("writing to a String");
            lo.iter().chain(hi).for_each(|v| fmt_num(out, *v));
        }
        ConvexSet::HPolytope(p) => {
            write!(out, "H {} {}", p.dim(), p.n_rows()).expect("writing to a String");
            for (a, b) in p.rows() {
                out.push('\n');
                let start = out.len();
                a.iter().for_each(|v| fmt_num(out, *v));
                fmt_num(out, b);
                // rows carry no tag, so drop the leading separator
                out.remove(start);
            }
        }
        ConvexSet::Singleton(x) => {
            write!(out, "S {}", x.len()).expect("writing to a String");
            x.iter().for_each(|v| fmt_num(out, *v));
        }
        ConvexSet::WholeSpace(d) => {
            write!(out, "W {d}").expect("writing to a String");
        }
    }
    out.push('\n');
}

pub fn write_cells<W: Write>(mut w: W, cells: &[ConvexSet]) -> Result<()> {
    let mut buf = String::new();
    for c in cells {
        buf.clear();
        format_cell(&mut buf, c);
        w.write_all(buf.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Draws `n` cells from `stream` and writes them to `path`.
pub fn record(stream: &mut CoarseStream, n: usize, path: impl AsRef<Path>) -> Result<()> {
    let cells = stream.collect_cells(n)?;
    let file = std::fs::File::create(path)?;
    write_cells(std::io::BufWriter::new(file), &cells)
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<Option<String>> {
        loop {
            match self.inner.next() {
                None => return Ok(None),
                Some(l) => {
                    self.line += 1;
                    let l = l?;
                    if !l.trim().is_empty() {
                        return Ok(Some(l));
                    }
                }
            }
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }
}

fn parse_nums<R: BufRead>(lines: &Lines<R>, toks: &[&str], expected: usize) -> Result<Vec<f64>> {
    if toks.len() != expected {
        return Err(lines.err(format!("expected {expected} numbers, found {}", toks.len())));
    }
    toks.iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| lines.err(format!("invalid number '{t}'")))
        })
        .collect()
}

fn parse_count<R: BufRead>(lines: &Lines<R>, tok: Option<&&str>, what: &str) -> Result<usize> {
    tok.and_then(|t| t.parse::<usize>().ok())
        .filter(|&v| v > 0)
        .ok_or_else(|| lines.err(format!("missing or invalid {what}")))
}

/// Parses the text format; errors carry 1-based line numbers.
pub fn read_cells<R: BufRead>(reader: R) -> Result<Vec<ConvexSet>> {
    let mut lines = Lines {
        inner: reader.lines(),
        line: 0,
    };
    let mut cells = Vec::new();
    while let Some(l) = lines.next()? {
        let toks: Vec<&str> = l.split_whitespace().collect();
        let invalid = |lines: &Lines<R>, e: Error| lines.err(e.to_string());
        let cell = match toks[0] {
            "I" => {
                let v = parse_nums(&lines, &toks[1..], 2)?;
                ConvexSet::interval(v[0], v[1]).map_err(|e| invalid(&lines, e))?
            }
            "B" => {
                let d = parse_count(&lines, toks.get(1), "dimension")?;
                let v = parse_nums(&lines, &toks[2..], 2 * d)?;
                ConvexSet::axis_box(v[..d].to_vec(), v[d..].to_vec())
                    .map_err(|e| invalid(&lines, e))?
            }
            "S" => {
                let d = parse_count(&lines, toks.get(1), "dimension")?;
                ConvexSet::Singleton(parse_nums(&lines, &toks[2..], d)?)
            }
            "W" => {
                let d = parse_count(&lines, toks.get(1), "dimension")?;
                if toks.len() != 2 {
                    return Err(lines.err("trailing tokens after whole-space record"));
                }
                ConvexSet::WholeSpace(d)
            }
            "H" => {
                let d = parse_count(&lines, toks.get(1), "dimension")?;
                let k = parse_count(&lines, toks.get(2), "row count")?;
                if toks.len() != 3 {
                    return Err(lines.err("trailing tokens after polytope header"));
                }
                let mut normals = Vec::with_capacity(k * d);
                let mut offsets = Vec::with_capacity(k);
                for _ in 0..k {
                    let Some(row) = lines.next()? else {
                        return Err(lines.err(format!("polytope truncated: expected {k} rows")));
                    };
                    let rt: Vec<&str> = row.split_whitespace().collect();
                    let v = parse_nums(&lines, &rt, d + 1)?;
                    normals.extend_from_slice(&v[..d]);
                    offsets.push(v[d]);
                }
                ConvexSet::polytope(d, normals, offsets).map_err(|e| invalid(&lines, e))?
            }
            other => return Err(lines.err(format!("unknown cell tag '{other}'"))),
        };
        cells.push(cell);
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn serialize(cells: &[ConvexSet]) -> Vec<u8> {
        let mut v = Vec::new();
        write_cells(&mut v, cells).unwrap();
        v
    }

    #[test]
    fn grid_round_trip_is_byte_identical() {
        let mut s =
            CoarseStream::synthetic(Partition::grid(2, 0.3).unwrap(), vec![0.1, -2.0], 4).unwrap();
        let cells = s.collect_cells(1000).unwrap();
        let a = serialize(&cells);
        let back = read_cells(&a[..]).unwrap();
        assert_eq!(back, cells);
        assert_eq!(serialize(&back), a);
    }

    #[test]
    fn every_variant_round_trips() {
        let cells = vec![
            ConvexSet::interval(f64::NEG_INFINITY, 0.1).unwrap(),
            ConvexSet::axis_box(vec![0.0, -1.0 / 3.0], vec![1.0, f64::INFINITY]).unwrap(),
            ConvexSet::polytope(2, vec![1.0, 2.0, -1.0, 0.5], vec![1e-300, 7.0]).unwrap(),
            ConvexSet::Singleton(vec![std::f64::consts::PI]),
            ConvexSet::WholeSpace(3),
        ];
        assert_eq!(read_cells(&serialize(&cells)[..]).unwrap(), cells);
    }

    #[test]
    fn truncated_file_reports_line() {
        let text = "I 0 1\nH 2 2\n1 0 1\n";
        match read_cells(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match read_cells("I 0 1\nI 0 x\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_stream_is_exhausted() {
        let mut s = CoarseStream::replay(1, read_cells("".as_bytes()).unwrap()).unwrap();
        assert!(matches!(
            s.next_cell(),
            Err(Error::StreamExhausted { consumed: 0 })
        ));
    }

    #[test]
    fn substreams_are_independent_of_usage() {
        let p = Partition::grid(1, 1.0).unwrap();
        let mut a = CoarseStream::synthetic(p.clone(), vec![0.0], 9).unwrap();
        let mut b = CoarseStream::synthetic(p, vec![0.0], 9).unwrap();
        let mut a0 = a.take(10).unwrap();
        let b0 = b.take(10).unwrap();
        a0.collect_cells(3).unwrap();
        let _ = b0;
        let mut a1 = a.take(5).unwrap();
        let mut b1 = b.take(5).unwrap();
        assert_eq!(a1.collect_cells(5).unwrap(), b1.collect_cells(5).unwrap());
        assert!(a1.next_cell().is_err());
        assert_eq!(a.consumed(), 15);
    }
}
