//! Static scenes built from boxes, spheres and planes.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{LidarSpec, SimError};
use crate::geom::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Axis-aligned box. A ray starting inside reports the exit distance.
    Box {
        min: Vec3,
        max: Vec3,
    },
    Sphere {
        center: Vec3,
        radius: f64,
    },
    /// Points `p` with `normal · p = offset`.
    Plane {
        normal: Vec3,
        offset: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub id: u32,
    pub shape: Shape,
}

impl Primitive {
    pub fn new(id: u32, shape: Shape) -> Self {
        Self { id, shape }
    }

    /// Smallest positive hit distance along a unit ray.
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        const EPS: f64 = 1e-12;
        match &self.shape {
            Shape::Box { min, max } => {
                let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
                for k in 0..3 {
                    if dir[k].abs() < EPS {
                        if origin[k] < min[k] || origin[k] > max[k] {
                            return None;
                        }
                        continue;
                    }
                    let a = (min[k] - origin[k]) / dir[k];
                    let b = (max[k] - origin[k]) / dir[k];
                    t0 = t0.max(a.min(b));
                    t1 = t1.min(a.max(b));
                }
                if t0 > t1 {
                    None
                } else if t0 > EPS {
                    Some(t0)
                } else if t1 > EPS {
                    Some(t1)
                } else {
                    None
                }
            }
            Shape::Sphere { center, radius } => {
                let oc = origin - center;
                let b = oc.dot(dir);
                let c = oc.norm_squared() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                [-b - sq, -b + sq].into_iter().find(|t| *t > EPS)
            }
            Shape::Plane { normal, offset } => {
                let denom = normal.dot(dir);
                if denom.abs() < EPS {
                    return None;
                }
                let t = (offset - normal.dot(origin)) / denom;
                (t > EPS).then_some(t)
            }
        }
    }

    fn is_finite(&self) -> bool {
        match &self.shape {
            Shape::Box { min, max } => {
                min.iter().chain(max.iter()).all(|v| v.is_finite())
                    && (0..3).all(|k| min[k] <= max[k])
            }
            Shape::Sphere { center, radius } => {
                center.iter().all(|v| v.is_finite()) && radius.is_finite() && *radius > 0.0
            }
            Shape::Plane { normal, offset } => {
                normal.iter().all(|v| v.is_finite()) && offset.is_finite() && normal.norm() > 0.0
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    primitives: Vec<Primitive>,
}

impl Scene {
    pub fn new(primitives: Vec<Primitive>) -> Result<Self, SimError> {
        let mut ids: Vec<u32> = primitives.iter().map(|p| p.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(SimError::InvalidConfig(format!(
                "scene: duplicate primitive id {}",
                w[0]
            )));
        }
        if let Some(p) = primitives.iter().find(|p| !p.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "scene: primitive {} is not finite",
                p.id
            )));
        }
        // Plane normals are stored unit length so offsets are distances.
        let primitives = primitives
            .into_iter()
            .map(|mut p| {
                if let Shape::Plane { normal, offset } = &mut p.shape {
                    let n = normal.norm();
                    *normal /= n;
                    *offset /= n;
                }
                p
            })
            .collect();
        Ok(Self { primitives })
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    /// Nearest hit as `(distance, primitive id)`, without noise or range limits.
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, u32)> {
        self.primitives
            .iter()
            .filter_map(|p| p.intersect(origin, dir).map(|t| (t, p.id)))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }

    /// A "+" shaped target of two thin boxes facing the origin at `distance`
    /// along +x, in front of a far back wall.
    pub fn plus_target(distance: f64) -> Self {
        let (arm, half_w, depth) = (0.12, 0.02, 0.01);
        let x0 = distance;
        Self::new(vec![
            Primitive::new(
                PLUS_TARGET_ID,
                Shape::Box {
                    min: Vec3::new(x0, -arm, -half_w),
                    max: Vec3::new(x0 + depth, arm, half_w),
                },
            ),
            Primitive::new(
                PLUS_TARGET_ID + 1,
                Shape::Box {
                    min: Vec3::new(x0, -half_w, -arm),
                    max: Vec3::new(x0 + depth, half_w, arm),
                },
            ),
            Primitive::new(
                100,
                Shape::Plane {
                    normal: Vec3::x(),
                    offset: distance + 1.0,
                },
            ),
        ])
        .expect("valid target scene")
    }

    /// A closed room with boxes, pillars, a sphere and bevelled far corners,
    /// for odometry runs.
    pub fn room() -> Self {
        Self::new(vec![
            Primitive::new(
                1,
                Shape::Box {
                    min: Vec3::new(-4.0, -2.5, -1.5),
                    max: Vec3::new(7.0, 2.5, 2.5),
                },
            ),
            Primitive::new(
                2,
                Shape::Box {
                    min: Vec3::new(3.0, 0.8, -1.5),
                    max: Vec3::new(3.8, 1.6, 0.2),
                },
            ),
            Primitive::new(
                3,
                Shape::Box {
                    min: Vec3::new(4.5, -2.2, -1.5),
                    max: Vec3::new(5.5, -1.0, 1.0),
                },
            ),
            Primitive::new(
                4,
                Shape::Sphere {
                    center: Vec3::new(5.0, 0.3, 0.8),
                    radius: 0.5,
                },
            ),
            Primitive::new(
                5,
                Shape::Box {
                    min: Vec3::new(6.0, -0.5, -0.5),
                    max: Vec3::new(7.0, 0.5, 0.5),
                },
            ),
            // Bevelled far corners.
            Primitive::new(
                6,
                Shape::Plane {
                    normal: Vec3::new(1.0, 1.0, 0.0),
                    offset: 7.5,
                },
            ),
            Primitive::new(
                7,
                Shape::Plane {
                    normal: Vec3::new(1.0, -1.0, 0.0),
                    offset: 7.5,
                },
            ),
            Primitive::new(
                8,
                Shape::Box {
                    min: Vec3::new(4.0, -0.4, -1.5),
                    max: Vec3::new(4.3, -0.1, 2.5),
                },
            ),
            Primitive::new(
                9,
                Shape::Box {
                    min: Vec3::new(5.8, 1.0, -1.5),
                    max: Vec3::new(6.1, 1.3, 2.5),
                },
            ),
        ])
        .expect("valid room scene")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "plus_target" => Some(Self::plus_target(2.4)),
            "room" => Some(Self::room()),
            "empty" => Some(Self::default()),
            _ => None,
        }
    }
}

/// Id of the horizontal bar of [`Scene::plus_target`]; the vertical bar is `+1`.
pub const PLUS_TARGET_ID: u32 = 10;

/// Noisy range measurement along a unit ray. Returns `None` for no return.
pub fn raycast<R: Rng + ?Sized>(
    scene: &Scene,
    origin: &Vec3,
    dir: &Vec3,
    spec: &LidarSpec,
    rng: &mut R,
) -> Option<f64> {
    raycast_hit(scene, origin, dir, spec, rng).map(|(r, _)| r)
}

/// As [`raycast`], also reporting which primitive was hit.
pub fn raycast_hit<R: Rng + ?Sized>(
    scene: &Scene,
    origin: &Vec3,
    dir: &Vec3,
    spec: &LidarSpec,
    rng: &mut R,
) -> Option<(f64, u32)> {
    let (t, id) = scene.intersect(origin, dir)?;
    if t < spec.min_range || t > spec.max_range {
        return None;
    }
    let r = if spec.range_noise_sigma > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        (t + spec.range_noise_sigma * z).clamp(spec.min_range, spec.max_range)
    } else {
        t
    };
    Some((r, id))
}
