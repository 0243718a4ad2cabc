use super::lp::{maximize, LpOutcome};
use crate::error::{check_dim, Error, Result};
use nalgebra::DMatrix;

/// Relative slack allowed in halfspace membership. Chords computed by ratio
/// tests land on facets up to round-off, and those points must still count
/// as inside a closed cell.
const MEMBERSHIP_SLACK: f64 = 1e-12;

/// Polytope `{x : aᵢᵀx ≤ bᵢ}`; rows are stored back to back.
#[derive(Debug, Clone, PartialEq)]
pub struct HPolytope {
    dim: usize,
    normals: Vec<f64>,
    offsets: Vec<f64>,
}

impl HPolytope {
    pub fn new(dim: usize, normals: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSet(
                "polytope dimension must be positive".into(),
            ));
        }
        if offsets.is_empty() {
            return Err(Error::InvalidSet(
                "polytope needs at least one constraint".into(),
            ));
        }
        check_dim(offsets.len() * dim, normals.len())?;
        if normals.iter().chain(&offsets).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSet("polytope entries must be finite".into()));
        }
        let p = Self {
            dim,
            normals,
            offsets,
        };
        if p.rows().any(|(a, _)| a.iter().all(|&v| v == 0.0)) {
            return Err(Error::InvalidSet("polytope has a zero normal row".into()));
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.offsets.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.normals[i * self.dim..(i + 1) * self.dim]
    }

    pub fn offset(&self, i: usize) -> f64 {
        self.offsets[i]
    }

    pub fn normals(&self) -> &[f64] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.normals
            .chunks_exact(self.dim)
            .zip(self.offsets.iter().copied())
    }

    fn contains_unchecked(&self, x: &[f64]) -> bool {
        self.rows().all(|(a, b)| {
            let ax = dot(a, x);
            let scale =
                1.0 + b.abs() + a.iter().zip(x).map(|(ai, xi)| (ai * xi).abs()).sum::<f64>();
            ax <= b + MEMBERSHIP_SLACK * scale
        })
    }

    /// When every normal is parallel to one unit vector `u`, the polytope is
    /// a slab `{lo ≤ uᵀx ≤ hi}`; returns `(u, lo, hi)`.
    pub fn as_slab(&self) -> Option<(Vec<f64>, f64, f64)> {
        let first = self.row(0);
        let norm = dot(first, first).sqrt();
        let u: Vec<f64> = first.iter().map(|v| v / norm).collect();
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (a, b) in self.rows() {
            let an = dot(a, a).sqrt();
            let c = dot(a, &u);
            if (c.abs() - an).abs() > 1e-12 * an {
                return None;
            }
            if c > 0.0 {
                hi = hi.min(b / c);
            } else {
                lo = lo.max(b / c);
            }
        }
        Some((u, lo, hi))
    }

    /// When every normal is a multiple of a coordinate axis, returns the
    /// equivalent axis box bounds.
    pub fn as_axis_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut lo = vec![f64::NEG_INFINITY; self.dim];
        let mut hi = vec![f64::INFINITY; self.dim];
        for (a, b) in self.rows() {
            let mut nz = a.iter().enumerate().filter(|(_, v)| **v != 0.0);
            let (i, &c) = nz.next()?;
            if nz.next().is_some() {
                return None;
            }
            if c > 0.0 {
                hi[i] = hi[i].min(b / c);
            } else {
                lo[i] = lo[i].max(b / c);
            }
        }
        Some((lo, hi))
    }

    fn feasible(&self) -> bool {
        !matches!(
            maximize(&vec![0.0; self.dim], &self.normals, &self.offsets),
            LpOutcome::Infeasible
        )
    }

    fn is_bounded(&self) -> bool {
        let mut c = vec![0.0; self.dim];
        for i in 0..self.dim {
            for s in [1.0, -1.0] {
                c.iter_mut().for_each(|v| *v = 0.0);
                c[i] = s;
                if maximize(&c, &self.normals, &self.offsets) == LpOutcome::Unbounded {
                    return false;
                }
            }
        }
        true
    }

    /// Chebyshev center via LP; assumes the polytope is bounded.
    pub(crate) fn chebyshev_center(&self) -> Result<(Vec<f64>, f64)> {
        let d = self.dim;
        let mut rows = Vec::with_capacity((self.n_rows() + 1) * (d + 1));
        let mut rhs = Vec::with_capacity(self.n_rows() + 1);
        for (a, b) in self.rows() {
            rows.extend_from_slice(a);
            rows.push(dot(a, a).sqrt());
            rhs.push(b);
        }
        rows.extend(std::iter::repeat_n(0.0, d));
        rows.push(-1.0);
        rhs.push(0.0);
        let mut c = vec![0.0; d + 1];
        c[d] = 1.0;
        match maximize(&c, &rows, &rhs) {
            LpOutcome::Optimal { mut x, .. } => {
                let r = x.pop().unwrap_or(0.0).max(0.0);
                if r <= 1e-12 {
                    Err(Error::NoInterior)
                } else {
                    Ok((x, r))
                }
            }
            LpOutcome::Infeasible => Err(Error::EmptySet),
            LpOutcome::Unbounded => Err(Error::Unbounded),
        }
    }

    /// Point of the polytope with the smallest ∞-norm.
    fn min_inf_norm_point(&self) -> Result<Vec<f64>> {
        let d = self.dim;
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (a, b) in self.rows() {
            rows.extend_from_slice(a);
            rows.push(0.0);
            rhs.push(b);
        }
        for i in 0..d {
            for s in [1.0, -1.0] {
                let mut r = vec![0.0; d + 1];
                r[i] = s;
                r[d] = -1.0;
                rows.extend(r);
                rhs.push(0.0);
            }
        }
        let mut c = vec![0.0; d + 1];
        c[d] = -1.0;
        match maximize(&c, &rows, &rhs) {
            LpOutcome::Optimal { mut x, .. } => {
                x.pop();
                Ok(x)
            }
            LpOutcome::Infeasible => Err(Error::EmptySet),
            LpOutcome::Unbounded => Err(Error::Lp("min-norm LP unbounded".into())),
        }
    }
}

/// A closed convex observation cell.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    /// `[lo, hi]` on the real line; either end may be infinite.
    Interval {
        lo: f64,
        hi: f64,
    },
    /// Product of intervals; coordinates may be unbounded.
    AxisBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    HPolytope(HPolytope),
    Singleton(Vec<f64>),
    WholeSpace(usize),
}

impl ConvexSet {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(ConvexSet::Interval { lo, hi })
    }

    pub fn axis_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(Error::InvalidSet("box dimension must be positive".into()));
        }
        for (&l, &h) in lo.iter().zip(&hi) {
            if l.is_nan() || h.is_nan() || l > h || l == f64::INFINITY || h == f64::NEG_INFINITY {
                return Err(Error::InvalidInterval { lo: l, hi: h });
            }
        }
        Ok(ConvexSet::AxisBox { lo, hi })
    }

    pub fn polytope(dim: usize, normals: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        HPolytope::new(dim, normals, offsets).map(ConvexSet::HPolytope)
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Interval { .. } => 1,
            ConvexSet::AxisBox { lo, .. } => lo.len(),
            ConvexSet::HPolytope(p) => p.dim(),
            ConvexSet::Singleton(x) => x.len(),
            ConvexSet::WholeSpace(d) => *d,
        }
    }

    /// Closed-set membership.
    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        check_dim(self.dim(), point.len())?;
        Ok(match self {
            ConvexSet::Interval { lo, hi } => *lo <= point[0] && point[0] <= *hi,
            ConvexSet::AxisBox { lo, hi } => point
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (l, h))| l <= x && x <= h),
            ConvexSet::HPolytope(p) => p.contains_unchecked(point),
            ConvexSet::Singleton(s) => s.as_slice() == point,
            ConvexSet::WholeSpace(_) => true,
        })
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            ConvexSet::Interval { lo, hi } => lo.is_finite() && hi.is_finite(),
            ConvexSet::AxisBox { lo, hi } => lo.iter().chain(hi).all(|v| v.is_finite()),
            ConvexSet::HPolytope(p) => p.is_bounded(),
            ConvexSet::Singleton(_) => true,
            ConvexSet::WholeSpace(_) => false,
        }
    }

    /// Intersection with the ∞-norm ball of radius `radius` centered at the
    /// origin. `Ok(None)` signals an empty intersection.
    pub fn clip_to_box(&self, radius: f64) -> Result<Option<ConvexSet>> {
        if !(radius > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "clip radius must be positive, got {radius}"
            )));
        }
        Ok(match self {
            ConvexSet::Interval { lo, hi } => {
                let (l, h) = (lo.max(-radius), hi.min(radius));
                if l > h {
                    None
                } else if l == h {
                    Some(ConvexSet::Singleton(vec![l]))
                } else {
                    Some(ConvexSet::Interval { lo: l, hi: h })
                }
            }
            ConvexSet::AxisBox { lo, hi } => clip_box(lo, hi, radius),
            ConvexSet::HPolytope(p) => {
                let d = p.dim();
                let mut normals = p.normals.clone();
                let mut offsets = p.offsets.clone();
                for i in 0..d {
                    for s in [1.0, -1.0] {
                        let mut r = vec![0.0; d];
                        r[i] = s;
                        normals.extend(r);
                        offsets.push(radius);
                    }
                }
                let clipped = HPolytope {
                    dim: d,
                    normals,
                    offsets,
                };
                if let Some((lo, hi)) = clipped.as_axis_box() {
                    clip_box(&lo, &hi, radius)
                } else if clipped.feasible() {
                    Some(ConvexSet::HPolytope(clipped))
                } else {
                    None
                }
            }
            ConvexSet::Singleton(x) => {
                if x.iter().all(|v| v.abs() <= radius) {
                    Some(self.clone())
                } else {
                    None
                }
            }
            ConvexSet::WholeSpace(d) => {
                if *d == 1 {
                    Some(ConvexSet::Interval {
                        lo: -radius,
                        hi: radius,
                    })
                } else {
                    Some(ConvexSet::AxisBox {
                        lo: vec![-radius; *d],
                        hi: vec![radius; *d],
                    })
                }
            }
        })
    }

    /// A center and radius of a Euclidean ball inside the set.
    pub fn interior_point(&self) -> Result<(Vec<f64>, f64)> {
        match self {
            ConvexSet::Interval { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite()) {
                    return Err(Error::Unbounded);
                }
                if lo == hi {
                    return Err(Error::NoInterior);
                }
                Ok((vec![0.5 * (lo + hi)], 0.5 * (hi - lo)))
            }
            ConvexSet::AxisBox { lo, hi } => {
                if !self.is_bounded() {
                    return Err(Error::Unbounded);
                }
                let center = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
                let r = lo
                    .iter()
                    .zip(hi)
                    .map(|(l, h)| 0.5 * (h - l))
                    .fold(f64::INFINITY, f64::min);
                if r <= 0.0 {
                    return Err(Error::NoInterior);
                }
                Ok((center, r))
            }
            ConvexSet::HPolytope(p) => {
                if !p.feasible() {
                    return Err(Error::EmptySet);
                }
                if !p.is_bounded() {
                    return Err(Error::Unbounded);
                }
                p.chebyshev_center()
            }
            ConvexSet::Singleton(_) => Err(Error::NoInterior),
            ConvexSet::WholeSpace(_) => Err(Error::Unbounded),
        }
    }

    /// Deterministic point of the set closest to the origin: Euclidean for
    /// intervals and boxes (coordinate clamping), ∞-norm (via LP) for
    /// polytopes.
    pub fn min_norm_point(&self) -> Result<Vec<f64>> {
        match self {
            ConvexSet::Interval { lo, hi } => Ok(vec![0.0_f64.clamp(*lo, *hi)]),
            ConvexSet::AxisBox { lo, hi } => Ok(lo
                .iter()
                .zip(hi)
                .map(|(l, h)| 0.0_f64.clamp(*l, *h))
                .collect()),
            ConvexSet::HPolytope(p) => p.min_inf_norm_point(),
            ConvexSet::Singleton(x) => Ok(x.clone()),
            ConvexSet::WholeSpace(d) => Ok(vec![0.0; *d]),
        }
    }

    /// Constraint normals (unit length) describing the set's facets. Used by
    /// the recession-direction test; `None` for a singleton, which has no
    /// translation invariance at all.
    fn unit_normals(&self) -> Option<Vec<Vec<f64>>> {
        let mut out = Vec::new();
        match self {
            ConvexSet::Interval { lo, hi } => {
                if lo.is_finite() {
                    out.push(vec![-1.0]);
                }
                if hi.is_finite() {
                    out.push(vec![1.0]);
                }
            }
            ConvexSet::AxisBox { lo, hi } => {
                let d = lo.len();
                for i in 0..d {
                    if lo[i].is_finite() || hi[i].is_finite() {
                        let mut e = vec![0.0; d];
                        e[i] = 1.0;
                        out.push(e);
                    }
                }
            }
            ConvexSet::HPolytope(p) => {
                for (a, _) in p.rows() {
                    let n = dot(a, a).sqrt();
                    out.push(a.iter().map(|v| v / n).collect());
                }
            }
            ConvexSet::Singleton(_) => return None,
            ConvexSet::WholeSpace(_) => {}
        }
        Some(out)
    }
}

fn clip_box(lo: &[f64], hi: &[f64], radius: f64) -> Option<ConvexSet> {
    let l: Vec<f64> = lo.iter().map(|v| v.max(-radius)).collect();
    let h: Vec<f64> = hi.iter().map(|v| v.min(radius)).collect();
    if l.iter().zip(&h).any(|(a, b)| a > b) {
        return None;
    }
    if l == h {
        return Some(ConvexSet::Singleton(l));
    }
    if l.len() == 1 {
        return Some(ConvexSet::Interval { lo: l[0], hi: h[0] });
    }
    Some(ConvexSet::AxisBox { lo: l, hi: h })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Stacked unit normals of every set plus the common dimension. `Ok(None)`
/// when some set is a singleton.
fn stacked_normals(sets: &[ConvexSet]) -> Result<Option<(usize, Vec<Vec<f64>>)>> {
    let Some(first) = sets.first() else {
        return Err(Error::InvalidSet("need at least one set".into()));
    };
    let d = first.dim();
    let mut rows = Vec::new();
    for s in sets {
        check_dim(d, s.dim())?;
        match s.unit_normals() {
            Some(n) => rows.extend(n),
            None => return Ok(None),
        }
    }
    Ok(Some((d, rows)))
}

/// Singular values (descending) and right singular vectors of the stacked
/// normal matrix, padded so every direction of ℝᵈ gets a singular value.
fn normal_svd(d: usize, rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = rows.len().max(d);
    let mut mat = DMatrix::<f64>::zeros(m, d);
    for (i, r) in rows.iter().enumerate() {
        for j in 0..d {
            mat[(i, j)] = r[j];
        }
    }
    let svd = mat.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..d)
        .map(|k| (svd.singular_values[k], v_t.row(k).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs.into_iter().unzip()
}

/// Canonical representative of a subspace spanned by orthonormal `basis`:
/// the normalized projection of the coordinate axis it captures best, with
/// its largest-magnitude entry made positive.
fn canonical_direction(d: usize, basis: &[Vec<f64>]) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for j in 0..d {
        let mut p = vec![0.0; d];
        for b in basis {
            let c = b[j];
            for k in 0..d {
                p[k] += c * b[k];
            }
        }
        let n = dot(&p, &p).sqrt();
        if best.as_ref().is_none_or(|(bn, _)| n > bn + 1e-12) {
            best = Some((n, p.iter().map(|v| v / n).collect()));
        }
    }
    let mut v = best.map(|(_, v)| v).unwrap_or_else(|| unit(d, 0));
    let lead = v.iter().copied().fold(
        0.0_f64,
        |acc, x| if x.abs() > acc.abs() + 1e-12 { x } else { acc },
    );
    if lead < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

pub(crate) fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

/// Unit vector along which every set is translation invariant, if any.
///
/// Singular values below 1e-9 of the largest count as zero. With no
/// constraints at all every direction works and `e₁` is returned.
pub fn common_recession_direction(sets: &[ConvexSet]) -> Result<Option<Vec<f64>>> {
    let Some((d, rows)) = stacked_normals(sets)? else {
        return Ok(None);
    };
    if rows.is_empty() {
        return Ok(Some(unit(d, 0)));
    }
    let (sv, vecs) = normal_svd(d, &rows);
    let cutoff = 1e-9 * sv[0];
    let null: Vec<Vec<f64>> = sv
        .iter()
        .zip(vecs)
        .filter(|(s, _)| **s <= cutoff)
        .map(|(_, v)| v)
        .collect();
    if null.is_empty() {
        Ok(None)
    } else {
        Ok(Some(canonical_direction(d, &null)))
    }
}

/// Right singular vector of the stacked normals with the smallest singular
/// value: the direction the observed cells constrain least.
pub fn least_constrained_direction(sets: &[ConvexSet]) -> Result<Option<Vec<f64>>> {
    let Some((d, rows)) = stacked_normals(sets)? else {
        return Ok(None);
    };
    if rows.is_empty() {
        return Ok(Some(unit(d, 0)));
    }
    let (_, vecs) = normal_svd(d, &rows);
    Ok(vecs
        .last()
        .map(|v| canonical_direction(d, std::slice::from_ref(v))))
}
