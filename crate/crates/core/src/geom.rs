//! Rotation algebra, spherical/Cartesian conversion of mirror controls, and
//! scan-pattern construction.
//!
//! Conventions used throughout the crate:
//! - `alpha` is elevation (positive towards +z), `beta` is azimuth (positive
//!   from +x towards +y). The principal axis of the scanner is local +x.
//! - Quaternions are stored and reported in (w, x, y, z) order.
//! - All angles are radians.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Quaternion, Vector4};
use thiserror::Error;

/// Cartesian vector, meters or unitless for directions.
pub type Vec3 = nalgebra::Vector3<f64>;
/// An element of SO(3) mapping local coordinates to the parent frame.
pub type Rotation = nalgebra::Rotation3<f64>;
/// Unit quaternion; use [`quat_wxyz`] to read it in (w, x, y, z) order.
pub type UnitQuaternion = nalgebra::UnitQuaternion<f64>;

/// Norm below which a quaternion sum is considered cancelled.
pub const MEAN_DEGENERACY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("degenerate direction: zero-length vector has no spherical angles")]
    DegenerateDirection,
    #[error("degenerate quaternion mean: summed norm {0:e} is below {MEAN_DEGENERACY_EPS:e}")]
    DegenerateMean(f64),
    #[error("quaternion window is empty")]
    EmptyWindow,
    #[error("invalid scan pattern: {0}")]
    InvalidPattern(String),
}

/// A mirror command: elevation `alpha`, azimuth `beta`, range `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalControl {
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
}

impl SphericalControl {
    pub fn new(alpha: f64, beta: f64, r: f64) -> Self {
        Self { alpha, beta, r }
    }

    /// Pure direction (r = 1).
    pub fn direction(alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            r: 1.0,
        }
    }

    pub fn to_cartesian(&self) -> Vec3 {
        sph_to_cart(self)
    }
}

/// Spherical control to Cartesian: `(r cosα cosβ, r cosα sinβ, r sinα)`.
pub fn sph_to_cart(p: &SphericalControl) -> Vec3 {
    let (sa, ca) = p.alpha.sin_cos();
    let (sb, cb) = p.beta.sin_cos();
    Vec3::new(p.r * ca * cb, p.r * ca * sb, p.r * sa)
}

/// Cartesian to spherical control. On the z axis the azimuth is reported as 0.
pub fn cart_to_sph(v: &Vec3) -> Result<SphericalControl, GeomError> {
    let r = v.norm();
    if !(r > 0.0) || !r.is_finite() {
        return Err(GeomError::DegenerateDirection);
    }
    let rho = v.x.hypot(v.y);
    let alpha = v.z.atan2(rho);
    let beta = if rho == 0.0 { 0.0 } else { v.y.atan2(v.x) };
    Ok(SphericalControl { alpha, beta, r })
}

/// Two-axis rotation `Rz(beta) * Ry(-alpha)`.
///
/// Maps the principal axis `e_x` onto `sph_to_cart(alpha, beta, 1)` exactly;
/// the matrix is assembled directly so its first column is bitwise identical
/// to the spherical conversion.
pub fn rot_from_control_angles(alpha: f64, beta: f64) -> Rotation {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    #[rustfmt::skip]
    let m = Matrix3::new(
        ca * cb, -sb, -cb * sa,
        ca * sb,  cb, -sb * sa,
        sa,      0.0,  ca,
    );
    Rotation::from_matrix_unchecked(m)
}

/// Largest deviation of `RᵀR` from identity and of `det R` from one.
pub fn rotation_defect(r: &Rotation) -> f64 {
    let m = r.matrix();
    let ortho = (m.transpose() * m - Matrix3::identity()).abs().max();
    ortho.max((m.determinant() - 1.0).abs())
}

/// Components of `q` in (w, x, y, z) order.
pub fn quat_wxyz(q: &UnitQuaternion) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

/// Representative of `q` with `w >= 0`.
pub fn canonical_quat(q: &UnitQuaternion) -> UnitQuaternion {
    if q.w < 0.0 {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        *q
    }
}

fn wxyz(q: &UnitQuaternion) -> Vector4<f64> {
    Vector4::new(q.w, q.i, q.j, q.k)
}

fn lexicographic(a: &Vector4<f64>, b: &Vector4<f64>) -> Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Quaternion L2 mean: hemisphere-align, sum as 4-vectors and normalize.
///
/// Every entry is flipped onto the hemisphere of the first. The aligned set is
/// then given a global sign so its provisional sum has `w >= 0`, and is summed
/// in lexicographic order. This makes the result bitwise independent of input
/// order and of the sign of any input, as long as the window does not straddle
/// the hemisphere boundary.
pub fn quat_l2_mean(window: &[UnitQuaternion]) -> Result<UnitQuaternion, GeomError> {
    let first = window.first().ok_or(GeomError::EmptyWindow)?;
    let reference = wxyz(first);
    let mut aligned: Vec<Vector4<f64>> = window
        .iter()
        .map(|q| {
            let v = wxyz(q);
            if v.dot(&reference) < 0.0 {
                -v
            } else {
                v
            }
        })
        .collect();

    let provisional: Vector4<f64> = aligned.iter().sum();
    if provisional[0] < 0.0 {
        aligned.iter_mut().for_each(|v| *v = -*v);
    }
    aligned.sort_by(lexicographic);
    let sum = aligned
        .iter()
        .fold(Vector4::zeros(), |acc: Vector4<f64>, v| acc + v);
    let norm = sum.norm();
    if !(norm >= MEAN_DEGENERACY_EPS) {
        return Err(GeomError::DegenerateMean(norm));
    }
    let mean = sum / norm;
    let q = UnitQuaternion::new_unchecked(Quaternion::new(mean[0], mean[1], mean[2], mean[3]));
    Ok(canonical_quat(&q))
}

/// An ordered set of mirror controls, row-major with elevation as the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPattern {
    pub points: Vec<SphericalControl>,
    pub rows: usize,
    pub cols: usize,
    /// Elevation bounds `(min, max)` covered by the pattern.
    pub alpha_bounds: (f64, f64),
    /// Azimuth bounds `(min, max)` covered by the pattern.
    pub beta_bounds: (f64, f64),
}

impl ScanPattern {
    /// Wraps an arbitrary list of controls, deriving bounds from its contents.
    pub fn from_points(points: Vec<SphericalControl>, rows: usize, cols: usize) -> Self {
        let bound = |f: fn(&SphericalControl) -> f64| {
            points
                .iter()
                .map(f)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                })
        };
        let alpha_bounds = bound(|p| p.alpha);
        let beta_bounds = bound(|p| p.beta);
        Self {
            points,
            rows,
            cols,
            alpha_bounds,
            beta_bounds,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Grid coordinates of a ray index.
    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.cols.max(1), index % self.cols.max(1))
    }
}

fn spaced(n: usize, span: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            0.0
        } else {
            -span / 2.0 + span * i as f64 / (n - 1) as f64
        }
    })
}

/// Uniform raster centered on the principal axis, endpoints on the span bounds.
pub fn make_scan_grid(
    rows: usize,
    cols: usize,
    el_span: f64,
    az_span: f64,
) -> Result<ScanPattern, GeomError> {
    if rows == 0 || cols == 0 {
        return Err(GeomError::InvalidPattern(format!(
            "grid must have at least one row and column, got {rows}x{cols}"
        )));
    }
    if !(el_span >= 0.0) || !(az_span >= 0.0) {
        return Err(GeomError::InvalidPattern(
            "spans must be finite and non-negative".into(),
        ));
    }
    if el_span / 2.0 >= FRAC_PI_2 {
        return Err(GeomError::InvalidPattern(format!(
            "elevation span {el_span} reaches the poles"
        )));
    }
    if az_span / 2.0 >= PI {
        return Err(GeomError::InvalidPattern(format!(
            "azimuth span {az_span} wraps around; use make_ring_pattern"
        )));
    }
    let points = spaced(rows, el_span)
        .flat_map(|alpha| {
            spaced(cols, az_span).map(move |beta| SphericalControl::direction(alpha, beta))
        })
        .collect();
    Ok(ScanPattern {
        points,
        rows,
        cols,
        alpha_bounds: (-el_span / 2.0, el_span / 2.0),
        beta_bounds: (-az_span / 2.0, az_span / 2.0),
    })
}

/// Multi-channel spinning-LiDAR pattern: `channels` elevation rings over
/// `el_span`, each sampled at `columns` azimuths covering (−π, π].
pub fn make_ring_pattern(
    channels: usize,
    columns: usize,
    el_span: f64,
) -> Result<ScanPattern, GeomError> {
    if channels == 0 || columns == 0 {
        return Err(GeomError::InvalidPattern(
            "ring pattern needs channels and columns".into(),
        ));
    }
    if !(el_span >= 0.0) || el_span / 2.0 >= FRAC_PI_2 {
        return Err(GeomError::InvalidPattern(format!(
            "elevation span {el_span} out of range"
        )));
    }
    let step = 2.0 * PI / columns as f64;
    let points = spaced(channels, el_span)
        .flat_map(|alpha| {
            (0..columns)
                .map(move |c| SphericalControl::direction(alpha, -PI + step * (c + 1) as f64))
        })
        .collect();
    Ok(ScanPattern {
        points,
        rows: channels,
        cols: columns,
        alpha_bounds: (-el_span / 2.0, el_span / 2.0),
        beta_bounds: (-PI + step, PI),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    fn rz(a: f64) -> UnitQuaternion {
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), a)
    }

    #[test]
    fn sph_to_cart_examples() {
        assert_eq!(
            sph_to_cart(&SphericalControl::new(0.0, 0.0, 1.0)),
            Vec3::new(1.0, 0.0, 0.0)
        );
        let pole = sph_to_cart(&SphericalControl::new(FRAC_PI_2, 0.0, 2.0));
        assert_abs_diff_eq!(pole, Vec3::new(0.0, 0.0, 2.0), epsilon = 1e-15);
        // 2 cos30 cos45 = 2 * 0.8660254 * 0.7071068
        let v = sph_to_cart(&SphericalControl::new(deg(30.0), deg(45.0), 2.0));
        assert_abs_diff_eq!(
            v,
            Vec3::new(1.224744871391589, 1.224744871391589, 1.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn cart_to_sph_examples() {
        let p = cart_to_sph(&Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!((p.alpha, p.beta, p.r), (0.0, 0.0, 1.0));
        let p = cart_to_sph(&Vec3::new(0.0, 1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(p.alpha, deg(45.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p.beta, deg(90.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p.r, 2f64.sqrt(), epsilon = 1e-15);
        let p = cart_to_sph(&Vec3::new(0.0, 0.0, 3.0)).unwrap();
        assert_eq!((p.alpha, p.beta, p.r), (FRAC_PI_2, 0.0, 3.0));
    }

    #[test]
    fn zero_vector_is_degenerate() {
        assert_eq!(
            cart_to_sph(&Vec3::zeros()),
            Err(GeomError::DegenerateDirection)
        );
    }

    #[test]
    fn control_angle_rotation_examples() {
        assert_eq!(rot_from_control_angles(0.0, 0.0), Rotation::identity());
        let ex = Vec3::x();
        assert_abs_diff_eq!(
            rot_from_control_angles(0.0, deg(90.0)) * ex,
            Vec3::y(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            rot_from_control_angles(deg(90.0), 0.0) * ex,
            Vec3::z(),
            epsilon = 1e-15
        );
        assert!(rotation_defect(&rot_from_control_angles(0.3, -1.2)) < 1e-15);
    }

    #[test]
    fn quat_mean_examples() {
        let q = UnitQuaternion::from_euler_angles(0.1, -0.2, 0.3);
        let m = quat_l2_mean(&[q, q, q]).unwrap();
        assert!(m.angle_to(&q) < 1e-15);

        let m = quat_l2_mean(&[UnitQuaternion::identity(), rz(deg(90.0))]).unwrap();
        let [w, x, y, z] = quat_wxyz(&m);
        assert_abs_diff_eq!(w, 0.9238795325112867, epsilon = 1e-12);
        assert_abs_diff_eq!(x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z, 0.3826834323650898, epsilon = 1e-12);
    }

    #[test]
    fn antipodal_pair_collapses_only_without_alignment() {
        // q and -q align onto each other, so the mean is q itself.
        let q = rz(0.4);
        let neg = UnitQuaternion::new_unchecked(-q.into_inner());
        assert!(quat_l2_mean(&[q, neg]).unwrap().angle_to(&q) < 1e-15);
        assert_eq!(quat_l2_mean(&[]), Err(GeomError::EmptyWindow));
    }

    #[test]
    fn cancelled_sum_is_degenerate() {
        let zero = UnitQuaternion::new_unchecked(Quaternion::new(0.0, 0.0, 0.0, 0.0));
        assert!(matches!(
            quat_l2_mean(&[zero, zero]),
            Err(GeomError::DegenerateMean(_))
        ));
    }

    #[test]
    fn grid_examples() {
        let g = make_scan_grid(1, 1, 0.3, 0.7).unwrap();
        assert_eq!(g.points, vec![SphericalControl::direction(0.0, 0.0)]);

        let g = make_scan_grid(20, 20, deg(7.0), deg(7.0)).unwrap();
        assert_eq!(g.len(), 400);
        assert_abs_diff_eq!(g.points[0].alpha, deg(-3.5), epsilon = 1e-15);
        assert_abs_diff_eq!(g.points[399].beta, deg(3.5), epsilon = 1e-15);
        // Row-major, elevation outer.
        assert_eq!(g.points[1].alpha, g.points[0].alpha);
        assert!(g.points[20].alpha > g.points[0].alpha);

        let g = make_scan_grid(2, 2, deg(2.0), deg(2.0)).unwrap();
        let got: Vec<(f64, f64)> = g
            .points
            .iter()
            .map(|p| (p.alpha.to_degrees(), p.beta.to_degrees()))
            .collect();
        let want = [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)];
        for (g, w) in got.iter().zip(want) {
            assert_abs_diff_eq!(g.0, w.0, epsilon = 1e-12);
            assert_abs_diff_eq!(g.1, w.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn grid_rejects_pole_span() {
        assert!(matches!(
            make_scan_grid(3, 3, PI, 0.1),
            Err(GeomError::InvalidPattern(_))
        ));
        assert!(matches!(
            make_scan_grid(0, 3, 0.1, 0.1),
            Err(GeomError::InvalidPattern(_))
        ));
    }

    #[test]
    fn ring_pattern_covers_full_circle() {
        let p = make_ring_pattern(16, 360, deg(30.0)).unwrap();
        assert_eq!(p.len(), 16 * 360);
        assert!(p.points.iter().all(|c| c.beta > -PI && c.beta <= PI));
        assert_abs_diff_eq!(p.points[359].beta, PI, epsilon = 1e-12);
    }
}
