//! Translation-only point-to-plane ICP.
//!
//! Used when ray indices do not identify the same surface point across
//! frames, which is the case once the scan head moves between frames.

use nalgebra::{Matrix3, SymmetricEigen};

use super::{PointCloud, SlamError};
use crate::geom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Neighbours used for each normal estimate.
    pub neighbours: usize,
    /// Correspondences farther apart than this are dropped, m.
    pub max_correspondence: f64,
    /// Final point-to-plane residual gate, m. The gate starts at
    /// `max_correspondence` and halves every iteration down to this value.
    pub max_residual: f64,
    /// Smallest `|n_a · n_b|` for a correspondence.
    pub min_normal_agreement: f64,
    /// Largest `λ_min / Σλ` accepted as a planar neighbourhood.
    pub planarity: f64,
    /// Stop when the update is shorter than this, m.
    pub tolerance: f64,
    /// Pull toward zero motion, in units of unit-normal correspondences.
    /// Keeps weakly observed directions from drifting.
    pub regularization: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            neighbours: 8,
            max_correspondence: 0.5,
            max_residual: 0.03,
            min_normal_agreement: 0.95,
            planarity: 0.01,
            tolerance: 1e-7,
            regularization: 2.0,
        }
    }
}

fn k_nearest(points: &[Vec3], q: &Vec3, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| ((p - q).norm_squared(), i))
        .collect();
    let k = k.min(d.len());
    if k == 0 {
        return Vec::new();
    }
    d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.truncate(k);
    d.into_iter().map(|(_, i)| i).collect()
}

fn nearest(points: &[Vec3], q: &Vec3) -> Option<(usize, f64)> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, (p - q).norm_squared()))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
}

/// Surface normal from the local covariance, or `None` where the
/// neighbourhood is not planar.
pub fn estimate_normals(points: &[Vec3], neighbours: usize, planarity: f64) -> Vec<Option<Vec3>> {
    points
        .iter()
        .map(|p| {
            let idx = k_nearest(points, p, neighbours);
            if idx.len() < 3 {
                return None;
            }
            let mean = idx.iter().map(|&i| points[i]).sum::<Vec3>() / idx.len() as f64;
            let cov = idx.iter().fold(Matrix3::zeros(), |acc, &i| {
                let d = points[i] - mean;
                acc + d * d.transpose()
            });
            let eig = SymmetricEigen::new(cov);
            let total = eig.eigenvalues.sum();
            let (imin, lmin) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))?;
            if !(total > 0.0) || lmin / total > planarity {
                return None;
            }
            Some(eig.eigenvectors.column(imin).into_owned().normalize())
        })
        .collect()
}

/// Translation `t` with `b ≈ a + t`, found by iterating nearest-neighbour
/// point-to-plane correspondences from `t = 0`.
pub fn icp_translation(
    a: &PointCloud,
    b: &PointCloud,
    params: &IcpParams,
) -> Result<Vec3, SlamError> {
    let normals_a = estimate_normals(&a.points, params.neighbours, params.planarity);
    let normals_b = estimate_normals(&b.points, params.neighbours, params.planarity);
    let gate = params.max_correspondence * params.max_correspondence;
    let mut residual_gate = params.max_correspondence;
    let mut t = Vec3::zeros();
    for _ in 0..params.max_iterations {
        residual_gate = (0.5 * residual_gate).max(params.max_residual);
        let mut h = Matrix3::zeros();
        let mut g = Vec3::zeros();
        let mut used = 0usize;
        for (pb, nb) in b.points.iter().zip(&normals_b) {
            let Some(nb) = nb else { continue };
            let q = pb - t;
            let Some((i, d2)) = nearest(&a.points, &q) else {
                continue;
            };
            let Some(n) = normals_a[i] else { continue };
            let along = n.dot(&(pb - a.points[i]));
            if d2 > gate
                || n.dot(nb).abs() < params.min_normal_agreement
                || (along - n.dot(&t)).abs() > residual_gate
            {
                continue;
            }
            h += n * n.transpose();
            g += n * along;
            used += 1;
        }
        if used < 3 {
            return Err(SlamError::InsufficientOverlap(used));
        }
        let next = (h + Matrix3::identity() * params.regularization)
            .lu()
            .solve(&g)
            .unwrap_or(t);
        let step = (next - t).norm();
        t = next;
        if step < params.tolerance && residual_gate <= params.max_residual {
            break;
        }
    }
    Ok(t)
}
