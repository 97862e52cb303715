use std::sync::Arc;

use rand::seq::SliceRandom;

use super::{
    interpolate_path, placed_aabb, plan_place, transfer_trajectory, DemogenError, Env, Observation, PathParams,
    PlaceGeometry, APPROACH_OFFSET,
};
use crate::geometry::{Pose, Vec3};
use crate::grasping::{grasp_collision_free, CollisionWorld, Grasp, GripperModel, OPENING_CLEARANCE};

/// Absolute end-effector target and gripper command (1 open, 0 closed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action {
    pub ee_pose: Pose,
    pub gripper: f64,
}

/// Anything that maps observations to actions.
pub trait Controller {
    fn name(&self) -> &str;
    /// Called right after the env is reset for an episode.
    fn reset(&mut self, env: &Env, seed: u64) -> Result<(), DemogenError>;
    fn act(&mut self, env: &Env, obs: &Observation) -> Result<Action, DemogenError>;
}

/// Holds the current pose with the gripper open until the step limit.
#[derive(Debug, Clone, Default)]
pub struct NoopController;

impl Controller for NoopController {
    fn name(&self) -> &str {
        "noop"
    }

    fn reset(&mut self, _env: &Env, _seed: u64) -> Result<(), DemogenError> {
        Ok(())
    }

    fn act(&mut self, _env: &Env, obs: &Observation) -> Result<Action, DemogenError> {
        Ok(Action {
            ee_pose: obs.ee_pose,
            gripper: 1.0,
        })
    }
}

/// Privileged planner: reads object poses and grasps from the env, picks a
/// collision-free grasp at random and replays an interpolated plan.
#[derive(Debug, Clone, Default)]
pub struct ScriptedExpert {
    pub params: PathParams,
    actions: Vec<Action>,
    cursor: usize,
    /// Index of the first action after the gripper closes.
    after_close: usize,
    primary: usize,
}

impl ScriptedExpert {
    pub fn new(params: PathParams) -> Self {
        Self {
            params,
            ..Self::default()
        }
    }

    /// Planned actions for the current episode.
    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    fn plan_with(&self, env: &Env, grasp: &Grasp, gripper: &GripperModel) -> Result<Vec<Action>, DemogenError> {
        let scene = env.scene();
        let poses = env.object_poses();
        let p = env.primary_index();
        let table = env.config().table_height;
        let mesh_of = |k: usize| env.pool().require(&scene.objects[k].mesh_id).map(|e| e.mesh.clone());
        let mut approach_world = CollisionWorld {
            meshes: Vec::new(),
            floor_z: Some(table),
            grasped: Some(p),
        };
        for k in 0..poses.len() {
            approach_world.meshes.push((mesh_of(k)?, poses[k]));
        }
        let mut carry_world = approach_world.clone();
        carry_world.meshes.remove(p);
        carry_world.grasped = None;

        let g = grasp.pose;
        let pregrasp = Pose::new(g.position + Vec3::new(0.0, 0.0, APPROACH_OFFSET), g.orientation);
        let carry_waypoints = match scene.secondary() {
            Some(sec) => {
                let k = scene.objects.iter().position(|o| std::ptr::eq(o, sec)).expect("secondary");
                let sec_mesh = mesh_of(k)?;
                let geometry = PlaceGeometry {
                    primary_pose: poses[p],
                    primary_min_z: mesh_of(p)?.aabb().min.z,
                    secondary_center: poses[k].transform_point(&sec_mesh.centroid()),
                    secondary_top: placed_aabb(&sec_mesh, &poses[k]).max.z,
                    table_height: table,
                    bottleneck_height: env.task().bottleneck_height,
                };
                plan_place(&geometry, &g)[1..].to_vec()
            }
            None => {
                let track = env
                    .track()
                    .ok_or_else(|| DemogenError::InvalidTask("single-object task without a track".into()))?;
                transfer_trajectory(&track.anchored(&poses[p]), &g)
            }
        };
        let open = grasp.width + OPENING_CLEARANCE;
        let approach = interpolate_path(&[env.config().home, pregrasp, g], &self.params, |_, pose| {
            !approach_world.collides(&gripper.boxes(pose, open))
        })?;
        let carry = interpolate_path(&carry_waypoints, &self.params, |_, pose| {
            !carry_world.collides(&gripper.boxes(pose, grasp.width))
        })?;
        let mut actions: Vec<Action> = approach[1..]
            .iter()
            .map(|&ee_pose| Action { ee_pose, gripper: 1.0 })
            .collect();
        actions.push(Action {
            ee_pose: g,
            gripper: 0.0,
        });
        actions.extend(carry[1..].iter().map(|&ee_pose| Action { ee_pose, gripper: 0.0 }));
        let last = *carry.last().expect("non-empty path");
        actions.push(Action {
            ee_pose: last,
            gripper: 1.0,
        });
        Ok(actions)
    }
}

impl Controller for ScriptedExpert {
    fn name(&self) -> &str {
        "scripted"
    }

    /// Tries the collision-free grasps in a seeded random order and keeps
    /// the first one whose whole plan is collision-free.
    fn reset(&mut self, env: &Env, seed: u64) -> Result<(), DemogenError> {
        self.actions.clear();
        self.cursor = 0;
        let scene = env.scene();
        let p = env.primary_index();
        self.primary = p;
        let entry = env.pool().require(&scene.primary().mesh_id)?;
        let set = entry.grasps.as_ref().ok_or(DemogenError::NoFeasibleGrasp)?;
        let gripper = env.config().gripper;
        let world = CollisionWorld {
            meshes: scene
                .objects
                .iter()
                .zip(env.object_poses())
                .map(|(o, pose)| env.pool().require(&o.mesh_id).map(|e| (Arc::clone(&e.mesh), *pose)))
                .collect::<Result<_, _>>()?,
            floor_z: Some(env.config().table_height),
            grasped: Some(p),
        };
        let primary_pose = env.object_poses()[p];
        let mut feasible: Vec<Grasp> = set
            .grasps
            .iter()
            .map(|g| g.transformed(&primary_pose))
            .filter(|g| grasp_collision_free(g, &world, &gripper))
            .collect();
        if feasible.is_empty() {
            return Err(DemogenError::NoFeasibleGrasp);
        }
        let mut rng = crate::rng::stream(seed, super::GRASP_STREAM);
        feasible.shuffle(&mut rng);
        let mut first_err = None;
        for g in &feasible {
            match self.plan_with(env, g, &gripper) {
                Ok(actions) => {
                    self.after_close = actions.iter().position(|a| a.gripper < 0.5).expect("close action") + 1;
                    self.actions = actions;
                    return Ok(());
                }
                Err(e @ DemogenError::PathCollision { .. }) => {
                    first_err.get_or_insert(e);
                }
                Err(e) => return Err(e),
            }
        }
        Err(first_err.expect("at least one grasp tried"))
    }

    fn act(&mut self, env: &Env, _obs: &Observation) -> Result<Action, DemogenError> {
        if self.actions.is_empty() {
            return Err(DemogenError::Protocol("expert was not reset".into()));
        }
        if self.cursor == self.after_close && env.attached() != Some(self.primary) {
            return Err(DemogenError::GraspFailure);
        }
        let a = self.actions[self.cursor.min(self.actions.len() - 1)];
        self.cursor += 1;
        Ok(a)
    }
}
