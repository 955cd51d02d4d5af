//! Kinematic and inertial description of the six-joint machine.
//!
//! The chain is fixed: cabin turn (yaw), boom and dipper (pitch), telescope
//! (prismatic), then the two unactuated gripper joints (pitch, roll).

use std::path::Path;

use nalgebra::{Matrix3, SVector, Unit, Vector3};
use serde::Deserialize;

use crate::error::{Error, Result};

pub const NUM_JOINTS: usize = 6;
pub const NUM_ACTUATED: usize = 4;
pub const NUM_PASSIVE: usize = 2;

pub type JointVector = SVector<f64, NUM_JOINTS>;

const NOMINAL_MODEL: &str = include_str!("../../../configs/machine_nominal.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Capsule {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub mass: f64,
    /// Center of mass in the joint frame.
    pub com: Vector3<f64>,
    /// Rotational inertia about the center of mass, joint-frame axes.
    pub inertia: Matrix3<f64>,
    pub capsule: Option<Capsule>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    pub axis: Unit<Vector3<f64>>,
    /// Joint origin in the parent joint frame at zero displacement.
    pub origin: Vector3<f64>,
    pub lower: f64,
    pub upper: f64,
    pub velocity_limit: f64,
    pub passive: bool,
    pub link: Link,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CabinCylinder {
    pub radius: f64,
    pub height: f64,
}

/// Immutable machine description. Construct with [`MachineModel::from_toml_str`],
/// [`MachineModel::load`] or [`MachineModel::nominal`].
#[derive(Clone, Debug, PartialEq)]
pub struct MachineModel {
    joints: Vec<Joint>,
    pub base_height: f64,
    pub gravity: f64,
    pub gripper_center: Vector3<f64>,
    pub cabin: CabinCylinder,
    static_reach: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    base_height: f64,
    #[serde(default = "default_gravity")]
    gravity: f64,
    gripper_center: [f64; 3],
    cabin: RawCabin,
    joints: Vec<RawJoint>,
}

fn default_gravity() -> f64 {
    9.81
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCabin {
    radius: f64,
    height: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJoint {
    name: String,
    kind: JointKind,
    axis: [f64; 3],
    origin: [f64; 3],
    lower: f64,
    upper: f64,
    velocity_limit: f64,
    passive: bool,
    link: RawLink,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    mass: f64,
    com: [f64; 3],
    inertia: [f64; 3],
    capsule: Option<RawCapsule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCapsule {
    a: [f64; 3],
    b: [f64; 3],
    radius: f64,
}

fn v3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

impl MachineModel {
    /// The shipped nominal machine (static reach 7.5 m).
    pub fn nominal() -> Self {
        Self::from_toml_str(NOMINAL_MODEL).expect("nominal model is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse { reason, .. } => Error::Parse {
                path: path.to_path_buf(),
                reason,
            },
            other => other,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawModel = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<model>".into(),
            reason: e.to_string(),
        })?;
        let joints = raw
            .joints
            .into_iter()
            .map(|j| {
                let axis = v3(j.axis);
                if axis.norm() < 1e-12 {
                    return Err(Error::InvalidModel(format!("joint {} has a zero axis", j.name)));
                }
                let [ixx, iyy, izz] = j.link.inertia;
                Ok(Joint {
                    name: j.name,
                    kind: j.kind,
                    axis: Unit::new_normalize(axis),
                    origin: v3(j.origin),
                    lower: j.lower,
                    upper: j.upper,
                    velocity_limit: j.velocity_limit,
                    passive: j.passive,
                    link: Link {
                        mass: j.link.mass,
                        com: v3(j.link.com),
                        inertia: Matrix3::from_diagonal(&Vector3::new(ixx, iyy, izz)),
                        capsule: j.link.capsule.map(|c| Capsule {
                            a: v3(c.a),
                            b: v3(c.b),
                            radius: c.radius,
                        }),
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            joints,
            raw.base_height,
            raw.gravity,
            v3(raw.gripper_center),
            CabinCylinder {
                radius: raw.cabin.radius,
                height: raw.cabin.height,
            },
        )
    }

    pub fn new(
        joints: Vec<Joint>,
        base_height: f64,
        gravity: f64,
        gripper_center: Vector3<f64>,
        cabin: CabinCylinder,
    ) -> Result<Self> {
        let mut model = MachineModel {
            joints,
            base_height,
            gravity,
            gripper_center,
            cabin,
            static_reach: 0.0,
        };
        model.validate()?;
        model.static_reach = model.compute_static_reach();
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if self.joints.len() != NUM_JOINTS {
            return bad(format!("expected {NUM_JOINTS} joints, found {}", self.joints.len()));
        }
        for (i, j) in self.joints.iter().enumerate() {
            if j.passive != (i >= NUM_ACTUATED) {
                return bad(format!(
                    "joint {} ({}) must be {}",
                    i + 1,
                    j.name,
                    if i >= NUM_ACTUATED { "passive" } else { "actuated" }
                ));
            }
            if !(j.lower < j.upper) {
                return bad(format!("joint {}: lower limit must be below upper limit", j.name));
            }
            if !(j.velocity_limit > 0.0) {
                return bad(format!("joint {}: velocity limit must be positive", j.name));
            }
            let l = &j.link;
            if !(l.mass > 0.0) || l.inertia.diagonal().iter().any(|&v| !(v > 0.0)) {
                return bad(format!("link of joint {}: mass and inertia must be positive", j.name));
            }
            if let Some(c) = &l.capsule {
                if !(c.radius > 0.0) {
                    return bad(format!("capsule of joint {}: radius must be positive", j.name));
                }
            }
            let finite = j.origin.iter().chain(l.com.iter()).all(|v| v.is_finite());
            if !finite {
                return bad(format!("joint {}: non-finite geometry", j.name));
            }
        }
        for (i, kind) in [
            JointKind::Revolute,
            JointKind::Revolute,
            JointKind::Revolute,
            JointKind::Prismatic,
            JointKind::Revolute,
            JointKind::Revolute,
        ]
        .iter()
        .enumerate()
        {
            if self.joints[i].kind != *kind {
                return bad(format!("joint {} must be {:?}", i + 1, kind));
            }
        }
        if !(self.base_height > 0.0) || !(self.gravity >= 0.0) {
            return bad("base height must be positive and gravity non-negative".into());
        }
        if !(self.cabin.radius > 0.0) || !(self.cabin.height > 0.0) {
            return bad("cabin cylinder dimensions must be positive".into());
        }
        Ok(())
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn joint(&self, i: usize) -> &Joint {
        &self.joints[i]
    }

    /// Maximum horizontal distance of the gripper center from the cabin turn
    /// axis over all configurations within limits.
    pub fn static_reach(&self) -> f64 {
        self.static_reach
    }

    pub fn lower_limits(&self) -> JointVector {
        JointVector::from_fn(|i, _| self.joints[i].lower)
    }

    pub fn upper_limits(&self) -> JointVector {
        JointVector::from_fn(|i, _| self.joints[i].upper)
    }

    pub fn velocity_limits(&self) -> JointVector {
        JointVector::from_fn(|i, _| self.joints[i].velocity_limit)
    }

    pub fn gravity_vector(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, -self.gravity)
    }

    pub fn with_gravity(&self, gravity: f64) -> Self {
        let mut m = self.clone();
        m.gravity = gravity;
        m
    }

    /// Returns a copy with a point mass rigidly attached at the gripper center.
    pub fn with_held_payload(&self, mass: f64) -> Self {
        if mass <= 0.0 {
            return self.clone();
        }
        let mut m = self.clone();
        let link = &mut m.joints[NUM_JOINTS - 1].link;
        let total = link.mass + mass;
        let com = (link.com * link.mass + self.gripper_center * mass) / total;
        let shift = |mass: f64, r: Vector3<f64>| mass * (r.norm_squared() * Matrix3::identity() - r * r.transpose());
        link.inertia = link.inertia + shift(link.mass, link.com - com) + shift(mass, self.gripper_center - com);
        link.mass = total;
        link.com = com;
        m
    }

    /// Clamp a configuration into the joint limits.
    pub fn clamp_to_limits(&self, q: &JointVector) -> JointVector {
        JointVector::from_fn(|i, _| q[i].clamp(self.joints[i].lower, self.joints[i].upper))
    }

    fn compute_static_reach(&self) -> f64 {
        // Yaw about the vertical axis does not change the horizontal radius.
        let dims: Vec<usize> = (1..NUM_JOINTS).collect();
        let radius = |q: &JointVector| {
            let p = crate::dynamics::forward_kinematics(self, q).position;
            p.x.hypot(p.y)
        };
        let zero = self.clamp_to_limits(&JointVector::zeros());
        let mut best = radius(&zero);

        // Coarse grid seeds the pattern search.
        const GRID: usize = 7;
        let total = GRID.pow(dims.len() as u32);
        let mut seeds: Vec<(f64, JointVector)> = Vec::new();
        for idx in 0..total {
            let mut q = JointVector::zeros();
            let mut rem = idx;
            for &d in &dims {
                let k = rem % GRID;
                rem /= GRID;
                let j = &self.joints[d];
                q[d] = j.lower + (j.upper - j.lower) * k as f64 / (GRID - 1) as f64;
            }
            seeds.push((radius(&q), q));
        }
        seeds.sort_by(|a, b| b.0.total_cmp(&a.0));
        seeds.truncate(8);
        seeds.push((best, zero));

        for (_, start) in seeds {
            best = best.max(self.pattern_search(start, &dims, &radius));
        }
        best
    }

    fn pattern_search(
        &self,
        mut q: JointVector,
        dims: &[usize],
        f: &dyn Fn(&JointVector) -> f64,
    ) -> f64 {
        let mut val = f(&q);
        let mut steps: Vec<f64> = dims
            .iter()
            .map(|&d| (self.joints[d].upper - self.joints[d].lower) / 8.0)
            .collect();
        while steps.iter().any(|&s| s > 1e-11) {
            let mut improved = false;
            for (k, &d) in dims.iter().enumerate() {
                for dir in [1.0, -1.0] {
                    let mut cand = q;
                    cand[d] = (cand[d] + dir * steps[k]).clamp(self.joints[d].lower, self.joints[d].upper);
                    let v = f(&cand);
                    if v > val {
                        val = v;
                        q = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                steps.iter_mut().for_each(|s| *s *= 0.5);
            }
        }
        val
    }
}
