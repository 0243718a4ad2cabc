//! Parsers for partition, truth-vector and friction specifications.

use coarse::friction::FrictionFunction;
use coarse::geometry::Partition;
use coarse::rng::SeededRng;
use coarse::sampling::sample_gaussian;
use rand::Rng;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Comma- or whitespace-separated decimals.
pub fn parse_vector(s: &str) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| format!("'{t}' is not a number"))
        })
        .collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err("empty vector".into());
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(format!("vector '{s}' has non-finite entries"));
    }
    Ok(v)
}

fn data_lines(path: &Path) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

pub fn read_vector_file(path: &Path) -> Result<Vec<f64>, String> {
    parse_vector(&data_lines(path)?.join(" ")).map_err(|e| format!("{}: {e}", path.display()))
}

/// One site per line.
pub fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>, String> {
    data_lines(path)?
        .iter()
        .enumerate()
        .map(|(i, l)| {
            parse_vector(l).map_err(|e| format!("{} line {}: {e}", path.display(), i + 1))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum PartitionSpec {
    Grid(f64),
    Slabs(Vec<f64>, f64),
    Breakpoints(PathBuf),
    Voronoi(PathBuf),
    Whole,
    Singletons,
}

impl FromStr for PartitionSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| format!("partition '{s}': '{t}' is not a number"))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["grid", h] => Ok(Self::Grid(num(h)?)),
            ["slabs", v, h] => Ok(Self::Slabs(parse_vector(v)?, num(h)?)),
            ["breakpoints", f] => Ok(Self::Breakpoints(PathBuf::from(f))),
            ["voronoi", f] => Ok(Self::Voronoi(PathBuf::from(f))),
            ["whole"] => Ok(Self::Whole),
            ["singletons"] => Ok(Self::Singletons),
            _ => Err(format!(
                "unknown partition '{s}'; expected grid:h, slabs:v1,v2,...:h, breakpoints:file, voronoi:file, whole or singletons"
            )),
        }
    }
}

impl PartitionSpec {
    /// Dimension fixed by the spec itself, if any.
    pub fn intrinsic_dim(&self) -> Result<Option<usize>, String> {
        Ok(match self {
            Self::Slabs(v, _) => Some(v.len()),
            Self::Breakpoints(_) => Some(1),
            Self::Voronoi(f) => read_rows(f)?.first().map(Vec::len),
            _ => None,
        })
    }

    pub fn build(&self, d: usize) -> Result<Partition, String> {
        let p = match self {
            Self::Grid(h) => Partition::grid(d, *h),
            Self::Slabs(v, h) => Partition::slabs(v.clone(), *h),
            Self::Breakpoints(f) => Partition::breakpoints(read_vector_file(f)?),
            Self::Voronoi(f) => Partition::voronoi(read_rows(f)?),
            Self::Whole => Partition::whole_space(d),
            Self::Singletons => Partition::singletons(d),
        }
        .map_err(|e| e.to_string())?;
        if p.dim() != d {
            return Err(format!("partition has dimension {}, but d = {d}", p.dim()));
        }
        Ok(p)
    }
}

/// Ground truth: a fixed vector, or one drawn per repeat.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    Fixed(Vec<f64>),
    /// Uniform direction with this exact norm.
    Sphere(f64),
    /// Uniform in the ball of this radius.
    Ball(f64),
}

impl Truth {
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Fixed(v) => Some(v.len()),
            _ => None,
        }
    }

    pub fn draw(&self, d: usize, rng: &mut SeededRng) -> Vec<f64> {
        match self {
            Self::Fixed(v) => v.clone(),
            Self::Sphere(r) | Self::Ball(r) => {
                let g = sample_gaussian(&vec![0.0; d], rng);
                let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                let scale = match self {
                    Self::Ball(_) => r * rng.random::<f64>().powf(1.0 / d as f64),
                    _ => *r,
                };
                g.into_iter().map(|x| x * scale / n).collect()
            }
        }
    }

    pub fn resolve(
        value: Option<&str>,
        file: Option<&Path>,
        random: Option<f64>,
        ball: bool,
    ) -> Result<Option<Self>, String> {
        Ok(match (value, file, random) {
            (Some(v), None, None) => Some(Self::Fixed(parse_vector(v)?)),
            (None, Some(f), None) => Some(Self::Fixed(read_vector_file(f)?)),
            (None, None, Some(r)) => {
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(format!("random truth radius must be nonnegative, got {r}"));
                }
                Some(if ball { Self::Ball(r) } else { Self::Sphere(r) })
            }
            (None, None, None) => None,
            _ => return Err("give the truth at most one way".into()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrictionSpec {
    Floor(f64),
    Ladder(PathBuf),
    Identity,
}

impl FromStr for FrictionSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            Some(("floor", h)) => h
                .parse()
                .map(Self::Floor)
                .map_err(|_| format!("floor step '{h}' is not a number")),
            Some(("ladder", f)) => Ok(Self::Ladder(PathBuf::from(f))),
            None if s == "identity" => Ok(Self::Identity),
            _ => Err(format!(
                "unknown friction '{s}'; expected floor:h, ladder:file or identity"
            )),
        }
    }
}

impl FrictionSpec {
    /// Ladder files hold lines `start value`: the value reported on
    /// `[start, next start)`. The first start must be `-inf`.
    pub fn build(&self) -> Result<FrictionFunction, String> {
        match self {
            Self::Floor(h) => FrictionFunction::floor(*h).map_err(|e| e.to_string()),
            Self::Identity => Ok(FrictionFunction::Identity),
            Self::Ladder(f) => {
                let mut starts = Vec::new();
                let mut values = Vec::new();
                for (i, line) in data_lines(f)?.iter().enumerate() {
                    let toks: Vec<&str> = line.split_whitespace().collect();
                    let parse = |t: &str| {
                        t.parse::<f64>().map_err(|_| {
                            format!("{} line {}: '{t}' is not a number", f.display(), i + 1)
                        })
                    };
                    let [b, v] = toks.as_slice() else {
                        return Err(format!(
                            "{} line {}: expected 'breakpoint value'",
                            f.display(),
                            i + 1
                        ));
                    };
                    starts.push(parse(b)?);
                    values.push(parse(v)?);
                }
                FrictionFunction::ladder_from_starts(starts, values)
                    .map_err(|e| format!("{}: {e}", f.display()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_specs() {
        assert_eq!(
            "grid:0.5".parse::<PartitionSpec>().unwrap(),
            PartitionSpec::Grid(0.5)
        );
        assert_eq!(
            "slabs:1,0:2".parse::<PartitionSpec>().unwrap(),
            PartitionSpec::Slabs(vec![1.0, 0.0], 2.0)
        );
        assert_eq!(
            "whole".parse::<PartitionSpec>().unwrap(),
            PartitionSpec::Whole
        );
        assert!("grid".parse::<PartitionSpec>().is_err());
        assert!("cubes:1".parse::<PartitionSpec>().is_err());
        assert!(PartitionSpec::Slabs(vec![1.0, 0.0], 1.0).build(3).is_err());
    }

    #[test]
    fn vectors_and_truth() {
        assert_eq!(parse_vector("1, -2 3").unwrap(), vec![1.0, -2.0, 3.0]);
        assert!(parse_vector("1,x").is_err());
        assert!(parse_vector("").is_err());
        let mut rng = SeededRng::new(1);
        let v = Truth::Sphere(2.0).draw(5, &mut rng);
        assert!((v.iter().map(|x| x * x).sum::<f64>().sqrt() - 2.0).abs() < 1e-12);
        assert!(Truth::resolve(Some("1"), None, Some(1.0), false).is_err());
    }

    #[test]
    fn ladder_file() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("ladder.txt");
        std::fs::write(&f, "-inf -1\n0 0\n# comment\n1.5 2\n").unwrap();
        let c = FrictionSpec::Ladder(f.clone()).build().unwrap();
        assert_eq!(c.apply(-3.0), -1.0);
        assert_eq!(c.apply(1.0), 0.0);
        assert_eq!(c.apply(1.5), 2.0);
        std::fs::write(&f, "0 1\n").unwrap();
        assert!(FrictionSpec::Ladder(f).build().is_err());
        assert_eq!(
            "identity".parse::<FrictionSpec>().unwrap(),
            FrictionSpec::Identity
        );
        assert!("floor:x".parse::<FrictionSpec>().is_err());
    }
}
