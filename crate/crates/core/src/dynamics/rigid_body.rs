//! Rigid-body dynamics of the serial chain.
//!
//! Inverse dynamics uses the recursive Newton-Euler algorithm, the
//! joint-space inertia comes from the composite-rigid-body algorithm, and the
//! mixed actuated/passive problem is solved by partitioning the joint space.
//! Everything is evaluated in world coordinates; at six joints the extra
//! rotations cost less than carrying spatial transforms around.

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, Vector2, Vector3, Vector4};

use super::kinematics::ChainFrames;
use crate::error::{Error, Result};
use crate::model::{JointKind, JointVector, MachineModel, NUM_ACTUATED, NUM_JOINTS};

pub type MassMatrix = SMatrix<f64, NUM_JOINTS, NUM_JOINTS>;

fn parallel_axis(mass: f64, r: &Vector3<f64>) -> Matrix3<f64> {
    mass * (r.norm_squared() * Matrix3::identity() - r * r.transpose())
}

/// Recursive Newton-Euler pass on precomputed frames with an arbitrary
/// gravity vector.
pub(crate) fn rnea(
    model: &MachineModel,
    frames: &ChainFrames,
    dq: &JointVector,
    ddq: &JointVector,
    gravity: &Vector3<f64>,
) -> JointVector {
    let mut force = [Vector3::zeros(); NUM_JOINTS];
    let mut moment = [Vector3::zeros(); NUM_JOINTS];
    let mut com_arm = [Vector3::zeros(); NUM_JOINTS];

    let mut w = Vector3::zeros();
    let mut dw = Vector3::zeros();
    // Base acceleration set to -g folds gravity into the inertial forces.
    let mut acc = -gravity;
    let mut prev = Vector3::new(0.0, 0.0, model.base_height);

    for (i, joint) in model.joints().iter().enumerate() {
        let z = frames.axis[i];
        let d = frames.origin[i] - prev;
        let mut a = acc + dw.cross(&d) + w.cross(&w.cross(&d));
        match joint.kind {
            JointKind::Revolute => {
                let w_new = w + z * dq[i];
                dw += z * ddq[i] + w.cross(&z) * dq[i];
                w = w_new;
            }
            JointKind::Prismatic => {
                a += 2.0 * w.cross(&z) * dq[i] + z * ddq[i];
            }
        }
        let link = &joint.link;
        let rot = frames.rotation[i];
        let rc = rot * link.com;
        let ac = a + dw.cross(&rc) + w.cross(&w.cross(&rc));
        let inertia = rot * link.inertia * rot.transpose();
        force[i] = link.mass * ac;
        moment[i] = inertia * dw + w.cross(&(inertia * w));
        com_arm[i] = rc;
        acc = a;
        prev = frames.origin[i];
    }

    let mut tau = JointVector::zeros();
    let mut f_child = Vector3::zeros();
    let mut n_child = Vector3::zeros();
    for i in (0..NUM_JOINTS).rev() {
        let f = force[i] + f_child;
        let mut n = moment[i] + com_arm[i].cross(&force[i]) + n_child;
        if i + 1 < NUM_JOINTS {
            n += (frames.origin[i + 1] - frames.origin[i]).cross(&f_child);
        }
        tau[i] = match frames.kind[i] {
            JointKind::Revolute => frames.axis[i].dot(&n),
            JointKind::Prismatic => frames.axis[i].dot(&f),
        };
        f_child = f;
        n_child = n;
    }
    tau
}

/// Composite-rigid-body algorithm on precomputed frames.
pub(crate) fn crba(model: &MachineModel, frames: &ChainFrames) -> MassMatrix {
    let mut m = MassMatrix::zeros();
    let mut mass = 0.0;
    let mut com = Vector3::zeros();
    let mut inertia = Matrix3::zeros();

    for i in (0..NUM_JOINTS).rev() {
        let link = &model.joint(i).link;
        let rot = frames.rotation[i];
        let link_com = frames.to_world(i, &link.com);
        let link_inertia = rot * link.inertia * rot.transpose();

        let total = mass + link.mass;
        let new_com = (com * mass + link_com * link.mass) / total;
        inertia = inertia
            + parallel_axis(mass, &(com - new_com))
            + link_inertia
            + parallel_axis(link.mass, &(link_com - new_com));
        mass = total;
        com = new_com;

        // Force and moment (about the composite CoM) needed for a unit
        // acceleration of joint i acting on the subtree rooted at link i.
        let z = frames.axis[i];
        let (f, n_com) = match frames.kind[i] {
            JointKind::Revolute => (mass * z.cross(&(com - frames.origin[i])), inertia * z),
            JointKind::Prismatic => (mass * z, Vector3::zeros()),
        };
        for j in 0..=i {
            let zj = frames.axis[j];
            let entry = match frames.kind[j] {
                JointKind::Revolute => zj.dot(&(n_com + (com - frames.origin[j]).cross(&f))),
                JointKind::Prismatic => zj.dot(&f),
            };
            m[(j, i)] = entry;
            m[(i, j)] = entry;
        }
    }
    m
}

pub fn mass_matrix(model: &MachineModel, q: &JointVector) -> MassMatrix {
    crba(model, &ChainFrames::new(model, q))
}

pub fn inverse_dynamics(model: &MachineModel, q: &JointVector, dq: &JointVector, ddq: &JointVector) -> JointVector {
    let frames = ChainFrames::new(model, q);
    rnea(model, &frames, dq, ddq, &model.gravity_vector())
}

/// Generalized forces that hold the machine still in configuration `q`.
pub fn gravity_torques(model: &MachineModel, q: &JointVector) -> JointVector {
    let z = JointVector::zeros();
    inverse_dynamics(model, q, &z, &z)
}

pub fn forward_dynamics(model: &MachineModel, q: &JointVector, dq: &JointVector, tau: &JointVector) -> Result<JointVector> {
    DynamicsTerms::new(model, q, dq).forward(tau)
}

/// Result of the actuated/passive split.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HybridSolution {
    pub tau_actuated: Vector4<f64>,
    pub ddq_passive: Vector2<f64>,
}

/// Torques on joints 1-4 that realize `ddq_actuated`, and the resulting
/// accelerations of joints 5-6 under the generalized forces `tau_passive`.
pub fn hybrid_dynamics(
    model: &MachineModel,
    q: &JointVector,
    dq: &JointVector,
    ddq_actuated: &Vector4<f64>,
    tau_passive: &Vector2<f64>,
) -> Result<HybridSolution> {
    DynamicsTerms::new(model, q, dq).hybrid(ddq_actuated, tau_passive)
}

/// Mass matrix and bias forces (Coriolis, centrifugal, gravity) for one
/// state, shared by the solvers that need both.
#[derive(Clone, Debug)]
pub struct DynamicsTerms {
    pub mass: MassMatrix,
    pub bias: JointVector,
}

impl DynamicsTerms {
    pub fn new(model: &MachineModel, q: &JointVector, dq: &JointVector) -> Self {
        let frames = ChainFrames::new(model, q);
        DynamicsTerms {
            mass: crba(model, &frames),
            bias: rnea(model, &frames, dq, &JointVector::zeros(), &model.gravity_vector()),
        }
    }

    pub fn inverse(&self, ddq: &JointVector) -> JointVector {
        self.mass * ddq + self.bias
    }

    pub fn forward(&self, tau: &JointVector) -> Result<JointVector> {
        let chol = self.mass.cholesky().ok_or(Error::SingularInertia)?;
        Ok(chol.solve(&(tau - self.bias)))
    }

    pub fn hybrid(&self, ddq_actuated: &Vector4<f64>, tau_passive: &Vector2<f64>) -> Result<HybridSolution> {
        let mut known = JointVector::zeros();
        known.fixed_rows_mut::<NUM_ACTUATED>(0).copy_from(ddq_actuated);
        known.fixed_rows_mut::<2>(NUM_ACTUATED).copy_from(tau_passive);
        let mut passive = [false; NUM_JOINTS];
        passive[NUM_ACTUATED..].iter_mut().for_each(|p| *p = true);
        let (tau, ddq) = self.partitioned(&known, &passive)?;
        Ok(HybridSolution {
            tau_actuated: tau.fixed_rows::<NUM_ACTUATED>(0).into_owned(),
            ddq_passive: ddq.fixed_rows::<2>(NUM_ACTUATED).into_owned(),
        })
    }

    /// General partitioned solve. For every joint, `known` holds the
    /// acceleration when the joint is prescribed (`passive[i] == false`) and
    /// the generalized force otherwise. Returns full `(tau, ddq)` vectors.
    pub fn partitioned(&self, known: &JointVector, passive: &[bool; NUM_JOINTS]) -> Result<(JointVector, JointVector)> {
        let pidx: Vec<usize> = (0..NUM_JOINTS).filter(|&i| passive[i]).collect();
        let aidx: Vec<usize> = (0..NUM_JOINTS).filter(|&i| !passive[i]).collect();

        let mut ddq = JointVector::zeros();
        for &a in &aidx {
            ddq[a] = known[a];
        }
        if !pidx.is_empty() {
            let np = pidx.len();
            let mpp = DMatrix::from_fn(np, np, |r, c| self.mass[(pidx[r], pidx[c])]);
            let rhs = DVector::from_fn(np, |r, _| {
                let p = pidx[r];
                let coupling: f64 = aidx.iter().map(|&a| self.mass[(p, a)] * known[a]).sum();
                known[p] - self.bias[p] - coupling
            });
            let chol = mpp.cholesky().ok_or(Error::SingularInertia)?;
            let sol = chol.solve(&rhs);
            for (r, &p) in pidx.iter().enumerate() {
                ddq[p] = sol[r];
            }
        }
        let mut tau = self.inverse(&ddq);
        for &p in &pidx {
            tau[p] = known[p];
        }
        Ok((tau, ddq))
    }
}

/// Potential energy of all links relative to the ground plane.
pub fn potential_energy(model: &MachineModel, q: &JointVector) -> f64 {
    let frames = ChainFrames::new(model, q);
    model
        .joints()
        .iter()
        .enumerate()
        .map(|(i, j)| j.link.mass * model.gravity * frames.to_world(i, &j.link.com).z)
        .sum()
}

pub fn kinetic_energy(model: &MachineModel, q: &JointVector, dq: &JointVector) -> f64 {
    0.5 * dq.dot(&(mass_matrix(model, q) * dq))
}

pub fn mechanical_energy(model: &MachineModel, q: &JointVector, dq: &JointVector) -> f64 {
    kinetic_energy(model, q, dq) + potential_energy(model, q)
}
