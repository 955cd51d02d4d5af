//! Capsule-based collision checks against the ground plane, the cabin
//! clearance cylinder and non-adjacent links.

use nalgebra::Vector3;

use super::kinematics::ChainFrames;
use crate::model::{JointVector, MachineModel, NUM_JOINTS};

/// Links closer than this in the chain never count as colliding with each other.
const MIN_LINK_SEPARATION: usize = 3;
/// The boom (index 1) is mounted on the cabin; links from the dipper on are
/// checked against the clearance cylinder.
const FIRST_CABIN_CHECKED_LINK: usize = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CollisionFlags {
    pub self_collision: bool,
    pub ground_collision: bool,
}

impl CollisionFlags {
    pub fn any(&self) -> bool {
        self.self_collision || self.ground_collision
    }
}

/// World-space capsule of link `link`.
#[derive(Clone, Copy, Debug)]
pub struct WorldCapsule {
    pub link: usize,
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub radius: f64,
}

pub fn world_capsules(model: &MachineModel, frames: &ChainFrames) -> Vec<WorldCapsule> {
    model
        .joints()
        .iter()
        .enumerate()
        .filter_map(|(i, j)| {
            j.link.capsule.as_ref().map(|c| WorldCapsule {
                link: i,
                a: frames.to_world(i, &c.a),
                b: frames.to_world(i, &c.b),
                radius: c.radius,
            })
        })
        .collect()
}

pub fn check_collision(model: &MachineModel, q: &JointVector) -> CollisionFlags {
    let frames = ChainFrames::new(model, q);
    let capsules = world_capsules(model, &frames);
    let gripper = frames.to_world(NUM_JOINTS - 1, &model.gripper_center);

    let ground_collision = gripper.z < 0.0 || capsules.iter().any(|c| c.a.z.min(c.b.z) - c.radius < 0.0);

    let cabin_hit = capsules
        .iter()
        .any(|c| c.link >= FIRST_CABIN_CHECKED_LINK && segment_cylinder_distance(&c.a, &c.b, model) < c.radius);
    let link_hit = capsules.iter().enumerate().any(|(k, c1)| {
        capsules[k + 1..].iter().any(|c2| {
            c2.link - c1.link >= MIN_LINK_SEPARATION
                && segment_segment_distance(&c1.a, &c1.b, &c2.a, &c2.b) < c1.radius + c2.radius
        })
    });

    CollisionFlags {
        self_collision: cabin_hit || link_hit,
        ground_collision,
    }
}

/// Distance from a point to the solid cabin cylinder (zero inside).
pub fn point_cylinder_distance(p: &Vector3<f64>, model: &MachineModel) -> f64 {
    let radial = (p.x.hypot(p.y) - model.cabin.radius).max(0.0);
    let vertical = (p.z - model.cabin.height).max(-p.z).max(0.0);
    radial.hypot(vertical)
}

/// Minimum distance between a segment and the solid cabin cylinder.
///
/// The distance to a convex set is convex along the segment, so a
/// golden-section search finds the global minimum.
pub fn segment_cylinder_distance(a: &Vector3<f64>, b: &Vector3<f64>, model: &MachineModel) -> f64 {
    let f = |t: f64| point_cylinder_distance(&(a + (b - a) * t), model);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.min(f2).min(f(0.0)).min(f(1.0))
}

/// Minimum distance between segments `p1-q1` and `p2-q2`.
pub fn segment_segment_distance(p1: &Vector3<f64>, q1: &Vector3<f64>, p2: &Vector3<f64>, q2: &Vector3<f64>) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let eps = 1e-14;

    let (s, t) = if a <= eps && e <= eps {
        (0.0, 0.0)
    } else if a <= eps {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s = if denom > eps { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    ((p1 + d1 * s) - (p2 + d2 * t)).norm()
}
