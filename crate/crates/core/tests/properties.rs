use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use rotcomp::compensate::{compensate_pattern, control_rotation};
use rotcomp::geom::{
    cart_to_sph, make_scan_grid, quat_l2_mean, rot_from_control_angles, sph_to_cart, Rotation,
    SphericalControl, UnitQuaternion, Vec3,
};
use rotcomp::memsctl::DiscreteFilterState;
use rotcomp::slamlite::{
    ate, estimate_translation, rotate_stage, transform, PairSet, PointCloud, TrajectoryPair,
};

fn rotation() -> impl Strategy<Value = Rotation> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
        .prop_map(|(a, b, c)| Rotation::new(Vec3::new(a, b, c)))
}

fn vec3(scale: f64) -> impl Strategy<Value = Vec3> {
    (-scale..scale, -scale..scale, -scale..scale).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn cloud(n: usize) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec(vec3(5.0), n).prop_map(|pts| {
        let mut c = PointCloud::default();
        for (k, p) in pts.into_iter().enumerate() {
            c.push(p, k as f64 * 1e-3, k);
        }
        c
    })
}

proptest! {
    #[test]
    fn spherical_round_trip(alpha in -1.5..1.5f64, beta in -3.1..3.1f64, r in 0.01..100.0f64) {
        let back = cart_to_sph(&sph_to_cart(&SphericalControl::new(alpha, beta, r))).unwrap();
        prop_assert!((back.alpha - alpha).abs() < 1e-12);
        prop_assert!((back.beta - beta).abs() < 1e-12);
        prop_assert!((back.r - r).abs() < 1e-12 * r.max(1.0));
    }

    #[test]
    fn control_angles_align_principal_axis(alpha in -1.5..1.5f64, beta in -3.1..3.1f64) {
        let r = rot_from_control_angles(alpha, beta);
        let d = sph_to_cart(&SphericalControl::direction(alpha, beta));
        prop_assert!((r * Vec3::x() - d).norm() < 1e-12);
        prop_assert!((r.matrix().transpose() * r.matrix() - nalgebra::Matrix3::identity()).norm() < 1e-12);
        prop_assert!((r.matrix().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compensated_rays_follow_desired_frame(robot in rotation(), desired in rotation()) {
        let pattern = make_scan_grid(4, 4, 0.1, 0.1).unwrap();
        let cmd = compensate_pattern(&pattern, &control_rotation(&robot, &desired));
        for (p, c) in pattern.points.iter().zip(&cmd.controls) {
            let world = robot * c.to_cartesian();
            prop_assert!((world - desired * p.to_cartesian()).norm() < 1e-9);
        }
    }

    #[test]
    fn quaternion_mean_ignores_order_and_sign(
        rots in prop::collection::vec((-0.6..0.6f64, -0.6..0.6f64, -0.6..0.6f64), 1..12),
        flips in prop::collection::vec(any::<bool>(), 12),
        shift in 0usize..12,
    ) {
        let qs: Vec<UnitQuaternion> = rots
            .iter()
            .map(|&(a, b, c)| UnitQuaternion::from_scaled_axis(Vec3::new(a, b, c)))
            .collect();
        let mut other: Vec<UnitQuaternion> = qs
            .iter()
            .zip(&flips)
            .map(|(q, &f)| if f { UnitQuaternion::new_unchecked(-q.into_inner()) } else { *q })
            .collect();
        other.rotate_left(shift % qs.len());
        let a = quat_l2_mean(&qs).unwrap().to_rotation_matrix();
        let b = quat_l2_mean(&other).unwrap().to_rotation_matrix();
        prop_assert!((a.matrix() - b.matrix()).norm() < 1e-9);
    }

    #[test]
    fn rotate_stage_is_rigid(c in cloud(8), alpha in -1.0..1.0f64, beta in -1.0..1.0f64) {
        let r = rotate_stage(&c, alpha, beta);
        prop_assert_eq!(r.len(), c.len());
        prop_assert_eq!(&r.timestamps, &c.timestamps);
        prop_assert_eq!(&r.ray_indices, &c.ray_indices);
        for i in 0..c.len() {
            for j in 0..c.len() {
                let d0 = (c.points[i] - c.points[j]).norm();
                let d1 = (r.points[i] - r.points[j]).norm();
                prop_assert!((d0 - d1).abs() < 1e-12 * d0.max(1.0));
            }
        }
    }

    #[test]
    fn translation_estimate_is_equivariant(a in cloud(10), b in cloud(10), d in vec3(3.0)) {
        let t = estimate_translation(&a, &b).unwrap();
        let shifted = b.transformed(&Rotation::identity(), &d);
        let ts = estimate_translation(&a, &shifted).unwrap();
        prop_assert!((ts - t - d).norm() < 1e-12);
    }

    #[test]
    fn ate_invariant_under_right_composition(
        truth in prop::collection::vec((rotation(), vec3(10.0)), 2..8),
        noise in prop::collection::vec((rotation(), vec3(0.5)), 8),
        g in (rotation(), vec3(10.0)),
        all in any::<bool>(),
    ) {
        let set = if all { PairSet::All } else { PairSet::Consecutive };
        let truth: Vec<_> = truth.iter().enumerate().map(|(i, (r, t))| (i as f64, transform(r, t))).collect();
        let est: Vec<_> = truth
            .iter()
            .zip(&noise)
            .map(|((s, p), (r, t))| (*s, transform(r, t) * p))
            .collect();
        let g = transform(&g.0, &g.1);
        let moved: Vec<_> = est.iter().map(|(s, p)| (*s, p * g)).collect();
        let base = ate(&TrajectoryPair::new(est, truth.clone(), set)).unwrap();
        let after = ate(&TrajectoryPair::new(moved, truth, set)).unwrap();
        prop_assert!(base.e_trans >= 0.0);
        prop_assert!((base.e_trans - after.e_trans).abs() < 1e-12 * base.e_trans.max(1.0));
    }

    #[test]
    fn compensator_is_linear(
        x in prop::collection::vec(-1.0..1.0f64, 64),
        y in prop::collection::vec(-1.0..1.0f64, 64),
        a in -2.0..2.0f64,
        b in -2.0..2.0f64,
    ) {
        let run = |u: &[f64]| DiscreteFilterState::nominal().filter(u);
        let mixed: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (fx, fy, fm) = (run(&x), run(&y), run(&mixed));
        for k in 0..x.len() {
            prop_assert!((fm[k] - (a * fx[k] + b * fy[k])).abs() <= 1e-12);
        }
    }
}

#[test]
fn ate_of_identical_trajectories_is_zero() {
    let truth: Vec<_> = (0..5)
        .map(|i| {
            (
                i as f64,
                transform(
                    &Rotation::new(Vec3::new(0.1 * i as f64, 0.0, 0.2)),
                    &Vec3::new(i as f64, 0.5, 0.0),
                ),
            )
        })
        .collect();
    let r = ate(&TrajectoryPair::new(truth.clone(), truth, PairSet::All)).unwrap();
    assert_abs_diff_eq!(r.e_trans, 0.0, epsilon = 1e-15);
}
