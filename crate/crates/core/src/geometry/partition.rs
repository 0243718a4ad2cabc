use super::convex::{dot, ConvexSet};
use crate::error::{check_dim, Error, Result};
use std::fmt;
use std::sync::Arc;

pub type LocateFn = dyn Fn(&[f64]) -> ConvexSet + Send + Sync;

/// Built-in partition families.
#[derive(Clone)]
pub enum PartitionFamily {
    /// Axis-aligned cubes of side `width`, half-open `[k·w, (k+1)·w)`.
    Grid {
        width: f64,
    },
    /// Slabs `{k·w ≤ vᵀx < (k+1)·w}` for a unit normal `v`.
    ParallelSlabs {
        normal: Vec<f64>,
        width: f64,
    },
    /// Intervals between sorted breakpoints on the line, unbounded at both ends.
    Breakpoints1D(Vec<f64>),
    /// Nearest-site cells; ties go to the lowest index.
    Voronoi(Vec<Vec<f64>>),
    /// The trivial partition `{ℝᵈ}`.
    WholeSpace,
    /// Every point is its own cell: the fine, uncensored observation model.
    Singletons,
    Custom(Arc<LocateFn>),
}

impl fmt::Debug for PartitionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionFamily::Grid { width } => write!(f, "Grid({width})"),
            PartitionFamily::ParallelSlabs { normal, width } => {
                write!(f, "ParallelSlabs({normal:?}, {width})")
            }
            PartitionFamily::Breakpoints1D(b) => write!(f, "Breakpoints1D({} points)", b.len()),
            PartitionFamily::Voronoi(s) => write!(f, "Voronoi({} sites)", s.len()),
            PartitionFamily::WholeSpace => write!(f, "WholeSpace"),
            PartitionFamily::Singletons => write!(f, "Singletons"),
            PartitionFamily::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// A partition of ℝᵈ, queried as an oracle mapping each point to its cell.
#[derive(Clone, Debug)]
pub struct Partition {
    dim: usize,
    family: PartitionFamily,
}

impl Partition {
    pub fn grid(dim: usize, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "grid width must be positive, got {width}"
            )));
        }
        Self::new(dim, PartitionFamily::Grid { width })
    }

    pub fn slabs(normal: Vec<f64>, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "slab width must be positive, got {width}"
            )));
        }
        let n = dot(&normal, &normal).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidConfig(
                "slab normal must be a nonzero vector".into(),
            ));
        }
        let dim = normal.len();
        let normal = normal.into_iter().map(|v| v / n).collect();
        Self::new(dim, PartitionFamily::ParallelSlabs { normal, width })
    }

    pub fn breakpoints(points: Vec<f64>) -> Result<Self> {
        if points.iter().any(|v| !v.is_finite()) || points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        Self::new(1, PartitionFamily::Breakpoints1D(points))
    }

    pub fn voronoi(sites: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = sites.first() else {
            return Err(Error::InvalidConfig(
                "voronoi partition needs at least one site".into(),
            ));
        };
        let dim = first.len();
        for s in &sites {
            check_dim(dim, s.len())?;
        }
        for i in 0..sites.len() {
            for j in 0..i {
                if sites[i] == sites[j] {
                    return Err(Error::InvalidConfig(format!("duplicate voronoi site {i}")));
                }
            }
        }
        Self::new(dim, PartitionFamily::Voronoi(sites))
    }

    pub fn whole_space(dim: usize) -> Result<Self> {
        Self::new(dim, PartitionFamily::WholeSpace)
    }

    pub fn singletons(dim: usize) -> Result<Self> {
        Self::new(dim, PartitionFamily::Singletons)
    }

    /// `locate` must be pure and return a cell containing its argument.
    pub fn custom<F>(dim: usize, locate: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> ConvexSet + Send + Sync + 'static,
    {
        Self::new(dim, PartitionFamily::Custom(Arc::new(locate)))
    }

    fn new(dim: usize, family: PartitionFamily) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig(
                "partition dimension must be positive".into(),
            ));
        }
        Ok(Self { dim, family })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &PartitionFamily {
        &self.family
    }

    /// The unique cell containing `x`.
    pub fn locate(&self, x: &[f64]) -> Result<ConvexSet> {
        check_dim(self.dim, x.len())?;
        Ok(self.locate_unchecked(x))
    }

    pub(crate) fn locate_unchecked(&self, x: &[f64]) -> ConvexSet {
        match &self.family {
            PartitionFamily::Grid { width } => {
                let lo: Vec<f64> = x.iter().map(|v| (v / width).floor() * width).collect();
                let hi: Vec<f64> = x
                    .iter()
                    .map(|v| ((v / width).floor() + 1.0) * width)
                    .collect();
                if self.dim == 1 {
                    ConvexSet::Interval {
                        lo: lo[0],
                        hi: hi[0],
                    }
                } else {
                    ConvexSet::AxisBox { lo, hi }
                }
            }
            PartitionFamily::ParallelSlabs { normal, width } => {
                let k = (dot(normal, x) / width).floor();
                let mut normals = normal.clone();
                normals.extend(normal.iter().map(|v| -v));
                ConvexSet::polytope(self.dim, normals, vec![(k + 1.0) * width, -k * width])
                    .expect("unit slab normal is nonzero")
            }
            PartitionFamily::Breakpoints1D(b) => {
                let idx = b.partition_point(|&p| p <= x[0]);
                let lo = if idx == 0 {
                    f64::NEG_INFINITY
                } else {
                    b[idx - 1]
                };
                let hi = if idx == b.len() {
                    f64::INFINITY
                } else {
                    b[idx]
                };
                ConvexSet::Interval { lo, hi }
            }
            PartitionFamily::Voronoi(sites) => {
                let nearest = nearest_site(sites, x);
                voronoi_cell(sites, nearest)
            }
            PartitionFamily::WholeSpace => ConvexSet::WholeSpace(self.dim),
            PartitionFamily::Singletons => ConvexSet::Singleton(x.to_vec()),
            PartitionFamily::Custom(f) => f(x),
        }
    }
}

fn nearest_site(sites: &[Vec<f64>], x: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, s) in sites.iter().enumerate() {
        let d2: f64 = s.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    best.0
}

/// Cell of site `i`: `2(sⱼ − sᵢ)ᵀx ≤ ‖sⱼ‖² − ‖sᵢ‖²` for all `j ≠ i`.
fn voronoi_cell(sites: &[Vec<f64>], i: usize) -> ConvexSet {
    let d = sites[i].len();
    if sites.len() == 1 {
        return ConvexSet::WholeSpace(d);
    }
    let si = &sites[i];
    let ni = dot(si, si);
    let mut normals = Vec::with_capacity((sites.len() - 1) * d);
    let mut offsets = Vec::with_capacity(sites.len() - 1);
    for (j, sj) in sites.iter().enumerate() {
        if j != i {
            normals.extend(sj.iter().zip(si).map(|(a, b)| 2.0 * (a - b)));
            offsets.push(dot(sj, sj) - ni);
        }
    }
    ConvexSet::polytope(d, normals, offsets).expect("distinct sites give nonzero normals")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn families() -> Vec<Partition> {
        vec![
            Partition::grid(1, 1.0).unwrap(),
            Partition::grid(3, 0.5).unwrap(),
            Partition::slabs(vec![1.0, 2.0], 0.7).unwrap(),
            Partition::breakpoints(vec![-1.0, 0.0, 2.5]).unwrap(),
            Partition::voronoi(vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 2.0],
                vec![-1.5, -1.0],
            ])
            .unwrap(),
            Partition::whole_space(2).unwrap(),
            Partition::singletons(2).unwrap(),
        ]
    }

    #[test]
    fn locate_returns_containing_cell() {
        let mut rng = SeededRng::new(1);
        for p in families() {
            for _ in 0..10_000 {
                let x: Vec<f64> = (0..p.dim())
                    .map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let cell = p.locate(&x).unwrap();
                assert!(
                    cell.contains(&x).unwrap(),
                    "{:?} {x:?} {cell:?}",
                    p.family()
                );
            }
        }
    }

    #[test]
    fn distinct_cells_do_not_share_probes() {
        let mut rng = SeededRng::new(2);
        for p in families() {
            if matches!(
                p.family(),
                PartitionFamily::WholeSpace | PartitionFamily::Singletons
            ) {
                continue;
            }
            for _ in 0..500 {
                let draw = |rng: &mut SeededRng| -> Vec<f64> {
                    (0..p.dim())
                        .map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                };
                let (x, y) = (draw(&mut rng), draw(&mut rng));
                let (cx, cy) = (p.locate(&x).unwrap(), p.locate(&y).unwrap());
                if cx == cy {
                    continue;
                }
                for _ in 0..20 {
                    let z = draw(&mut rng);
                    assert!(!(cx.contains(&z).unwrap() && cy.contains(&z).unwrap()));
                }
            }
        }
    }

    #[test]
    fn grid_is_half_open() {
        let p = Partition::grid(1, 1.0).unwrap();
        assert_eq!(
            p.locate(&[1.0]).unwrap(),
            ConvexSet::Interval { lo: 1.0, hi: 2.0 }
        );
        assert_eq!(
            p.locate(&[-0.5]).unwrap(),
            ConvexSet::Interval { lo: -1.0, hi: 0.0 }
        );
    }

    #[test]
    fn breakpoint_cells() {
        let p = Partition::breakpoints(vec![-1.0, 1.0]).unwrap();
        assert_eq!(
            p.locate(&[-3.0]).unwrap(),
            ConvexSet::Interval {
                lo: f64::NEG_INFINITY,
                hi: -1.0
            }
        );
        assert_eq!(
            p.locate(&[-1.0]).unwrap(),
            ConvexSet::Interval { lo: -1.0, hi: 1.0 }
        );
        assert!(Partition::breakpoints(vec![1.0, 1.0]).is_err());
    }
}
