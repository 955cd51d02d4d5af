use nalgebra::{Matrix3, Matrix3x6, Rotation3, Vector3};

use crate::model::{JointKind, JointVector, MachineModel, NUM_JOINTS};

/// World-frame placement of every joint frame for one configuration.
#[derive(Clone, Debug)]
pub struct ChainFrames {
    /// Orientation of joint frame `i` after its own joint motion.
    pub rotation: [Matrix3<f64>; NUM_JOINTS],
    /// Origin of joint frame `i` (on the joint axis for revolute joints).
    pub origin: [Vector3<f64>; NUM_JOINTS],
    /// Unit joint axis in world coordinates.
    pub axis: [Vector3<f64>; NUM_JOINTS],
    pub kind: [JointKind; NUM_JOINTS],
}

impl ChainFrames {
    pub fn new(model: &MachineModel, q: &JointVector) -> Self {
        let mut rotation = [Matrix3::identity(); NUM_JOINTS];
        let mut origin = [Vector3::zeros(); NUM_JOINTS];
        let mut axis = [Vector3::zeros(); NUM_JOINTS];
        let mut kind = [JointKind::Revolute; NUM_JOINTS];

        let mut r_parent = Matrix3::identity();
        let mut p_parent = Vector3::new(0.0, 0.0, model.base_height);
        for (i, joint) in model.joints().iter().enumerate() {
            let z = r_parent * joint.axis.into_inner();
            let (r, p) = match joint.kind {
                JointKind::Revolute => {
                    let rot = Rotation3::from_axis_angle(&joint.axis, q[i]);
                    (r_parent * rot.matrix(), p_parent + r_parent * joint.origin)
                }
                JointKind::Prismatic => (r_parent, p_parent + r_parent * joint.origin + z * q[i]),
            };
            rotation[i] = r;
            origin[i] = p;
            axis[i] = z;
            kind[i] = joint.kind;
            r_parent = r;
            p_parent = p;
        }
        ChainFrames {
            rotation,
            origin,
            axis,
            kind,
        }
    }

    /// Transform a point given in joint frame `i` into the world frame.
    pub fn to_world(&self, i: usize, local: &Vector3<f64>) -> Vector3<f64> {
        self.origin[i] + self.rotation[i] * local
    }

    /// Linear-velocity Jacobian of a world point rigidly attached to link `link`.
    pub fn point_jacobian(&self, link: usize, point: &Vector3<f64>) -> Matrix3x6<f64> {
        let mut jac = Matrix3x6::zeros();
        for j in 0..=link {
            let col = match self.kind[j] {
                JointKind::Revolute => self.axis[j].cross(&(point - self.origin[j])),
                JointKind::Prismatic => self.axis[j],
            };
            jac.set_column(j, &col);
        }
        jac
    }
}

/// Gripper-center pose in the base frame (z measured from the ground plane).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GripperPose {
    pub position: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl GripperPose {
    /// Direction from the last joint towards the gripper center, in the world.
    pub fn tool_axis(&self, model: &MachineModel) -> Vector3<f64> {
        (self.rotation * model.gripper_center).normalize()
    }
}

pub fn forward_kinematics(model: &MachineModel, q: &JointVector) -> GripperPose {
    let frames = ChainFrames::new(model, q);
    let last = NUM_JOINTS - 1;
    GripperPose {
        position: frames.to_world(last, &model.gripper_center),
        rotation: frames.rotation[last],
    }
}

pub fn gripper_jacobian(model: &MachineModel, q: &JointVector) -> Matrix3x6<f64> {
    let frames = ChainFrames::new(model, q);
    let last = NUM_JOINTS - 1;
    let p = frames.to_world(last, &model.gripper_center);
    frames.point_jacobian(last, &p)
}

pub fn gripper_velocity(model: &MachineModel, q: &JointVector, dq: &JointVector) -> Vector3<f64> {
    gripper_jacobian(model, q) * dq
}
