//! Empirical identifiability test: a convex partition hides the mean along
//! `v` exactly when its cells are slabs in direction `v`, and then the
//! likelihood is flat along `v`.
//!
//! The structural check runs on the observed cells only; cells of zero
//! total mass cannot be observed, so the verdict covers the sample.

use crate::error::{check_dim, Error, Result};
use crate::geometry::{
    common_recession_direction, least_constrained_direction, unit, ConvexSet, Partition,
};
use crate::likelihood::{curvature_from_cells, CurvatureEstimate, HESSIAN_INNER_DRAWS};
use crate::rng::SeededRng;
use crate::sampling::{sample_gaussian, SamplerPolicy};

#[derive(Debug, Clone, PartialEq)]
pub enum Structural {
    Identifiable,
    /// Every observed cell is invariant under translation along this unit vector.
    NonIdentifiable(Vec<f64>),
    /// All cells are points or all are the whole space.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatnessScore {
    pub direction: Vec<f64>,
    pub curvature: CurvatureEstimate,
}

impl FlatnessScore {
    /// `|score| ≤ max(3·SE, 10⁻³)`.
    pub fn is_flat(&self) -> bool {
        self.curvature.estimate.abs() <= (3.0 * self.curvature.se).max(1e-3)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiabilityVerdict {
    pub structural: Structural,
    pub flatness_scores: Vec<FlatnessScore>,
    pub cells_inspected: usize,
    pub distinct_cells: usize,
}

fn push_unique(dirs: &mut Vec<Vec<f64>>, v: Vec<f64>) {
    let dup = dirs.iter().any(|u| {
        let c: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        (c.abs() - 1.0).abs() < 1e-9
    });
    if !dup {
        dirs.push(v);
    }
}

/// Draws `n_cells` cells at `mu_star`, tests them for a common slab
/// direction, and scores likelihood curvature on the same cells with
/// [`HESSIAN_INNER_DRAWS`] truncated draws each.
///
/// Directions scored: the slab direction, when found, then the canonical
/// axes, then the least constrained direction of the observed normals.
pub fn assess(
    partition: &Partition,
    mu_star: &[f64],
    n_cells: usize,
    rng: &mut SeededRng,
    policy: &SamplerPolicy,
) -> Result<IdentifiabilityVerdict> {
    let d = partition.dim();
    check_dim(d, mu_star.len())?;
    if n_cells < 10 {
        return Err(Error::InvalidConfig(format!(
            "identifiability needs at least 10 cells, got {n_cells}"
        )));
    }
    let cells: Vec<ConvexSet> = (0..n_cells)
        .map(|_| partition.locate_unchecked(&sample_gaussian(mu_star, rng)))
        .collect();
    let mut distinct: Vec<ConvexSet> = Vec::new();
    for c in &cells {
        if !distinct.contains(c) {
            distinct.push(c.clone());
        }
    }
    let all_points = distinct
        .iter()
        .all(|c| matches!(c, ConvexSet::Singleton(_)));
    let all_space = distinct
        .iter()
        .all(|c| matches!(c, ConvexSet::WholeSpace(_)));
    let mut dirs = Vec::new();
    let structural = if all_points || all_space {
        Structural::Inconclusive
    } else {
        match common_recession_direction(&distinct)? {
            Some(v) => {
                dirs.push(v.clone());
                Structural::NonIdentifiable(v)
            }
            None => Structural::Identifiable,
        }
    };
    for i in 0..d {
        push_unique(&mut dirs, unit(d, i));
    }
    if structural == Structural::Identifiable {
        if let Some(v) = least_constrained_direction(&distinct)? {
            push_unique(&mut dirs, v);
        }
    }
    let scores = curvature_from_cells(&cells, mu_star, &dirs, HESSIAN_INNER_DRAWS, rng, policy)?;
    Ok(IdentifiabilityVerdict {
        structural,
        flatness_scores: dirs
            .into_iter()
            .zip(scores)
            .map(|(direction, curvature)| FlatnessScore {
                direction,
                curvature,
            })
            .collect(),
        cells_inspected: n_cells,
        distinct_cells: distinct.len(),
    })
}
