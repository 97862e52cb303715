use std::sync::Arc;

use nalgebra::UnitQuaternion;
use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    evaluate_success, sample_scene, DemogenError, MeshPool, Role, Scene, SuccessCriteria, TaskSpec,
    TrajectoryTrack,
};
use crate::geometry::{
    depth_to_points, look_at, primitives, render_depth, Bvh, InstancedScene, OrientedBox, PinholeCamera, Pose,
    RayScene, Vec3,
};
use crate::grasping::GripperModel;

/// External camera plus a wrist camera whose pose is given in the gripper
/// frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    pub external: PinholeCamera,
    pub wrist: PinholeCamera,
}

impl Default for CameraRig {
    fn default() -> Self {
        // 1 m from the workspace center, pitched down 45°
        let target = Vec3::new(0.55, 0.0, 0.0);
        let eye = target + Vec3::new(45f64.to_radians().cos(), 0.0, 45f64.to_radians().sin());
        let external = PinholeCamera::from_vertical_fov(64, 48, 45.0, look_at(&eye, &target, &Vec3::z()))
            .expect("valid camera");
        // behind the palm, looking past the fingertips
        let wrist_pose = look_at(&Vec3::new(0.0, 0.06, -0.10), &Vec3::new(0.0, 0.0, 0.05), &Vec3::y());
        let wrist = PinholeCamera::from_vertical_fov(64, 48, 70.0, wrist_pose).expect("valid camera");
        Self { external, wrist }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub table_height: f64,
    pub cloud_size: usize,
    pub max_steps: usize,
    /// End-effector pose at reset.
    pub home: Pose,
    pub cameras: CameraRig,
    pub gripper: GripperModel,
    /// Render observations; without it clouds are empty.
    pub render: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            table_height: 0.0,
            cloud_size: 4096,
            max_steps: 150,
            home: Pose::new(
                Vec3::new(0.35, 0.0, 0.35),
                UnitQuaternion::from_axis_angle(&Vec3::x_axis(), std::f64::consts::PI),
            ),
            cameras: CameraRig::default(),
            gripper: GripperModel::default(),
            render: true,
        }
    }
}

/// Which thresholds decide success.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuccessMode {
    Generation,
    Evaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// World-frame points, exactly `cloud_size` when rendering.
    pub cloud: Vec<[f32; 3]>,
    pub ee_pose: Pose,
    /// 1 open, 0 closed.
    pub gripper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub obs: Observation,
    pub done: bool,
    pub success: bool,
}

#[derive(Debug, Clone)]
struct EnvState {
    scene: Scene,
    poses: Vec<Pose>,
    bvhs: Vec<Arc<Bvh>>,
    ee: Pose,
    gripper: f64,
    attached: Option<(usize, Pose)>,
    steps: usize,
    done: bool,
    success: bool,
    expected: Pose,
    cloud_rng: ChaCha8Rng,
}

/// Kinematic tabletop world with a floating parallel-jaw gripper.
///
/// Objects never move on their own. Closing the gripper attaches an object
/// that spans both halves of the closing corridor; opening it drops the
/// object straight down to rest and ends the episode.
#[derive(Debug, Clone)]
pub struct Env {
    task: TaskSpec,
    pool: Arc<MeshPool>,
    config: EnvConfig,
    track: Option<TrajectoryTrack>,
    mode: SuccessMode,
    table: Arc<Bvh>,
    state: Option<EnvState>,
}

fn is_closed(g: f64) -> bool {
    g < 0.5
}

impl Env {
    pub fn new(
        task: TaskSpec,
        pool: Arc<MeshPool>,
        config: EnvConfig,
        track: Option<TrajectoryTrack>,
        mode: SuccessMode,
    ) -> Result<Self, DemogenError> {
        task.validate()?;
        for id in task.primary_mesh_ids.iter().chain(&task.secondary_mesh_ids) {
            pool.require(id)?;
        }
        if !task.has_secondary && track.is_none() {
            return Err(DemogenError::InvalidTask(format!("task {} needs its trajectory", task.name)));
        }
        if config.cloud_size == 0 || config.max_steps == 0 {
            return Err(DemogenError::InvalidArgument("cloud_size and max_steps must be positive".into()));
        }
        config.gripper.validate().map_err(|e| DemogenError::InvalidArgument(e.to_string()))?;
        let table = primitives::quad("table", 2.0, 2.0).map_vertices(|v| v + Vec3::new(0.5, 0.0, config.table_height));
        Ok(Self {
            task,
            pool,
            config,
            track,
            mode,
            table: Arc::new(Bvh::build(table)),
            state: None,
        })
    }

    pub fn task(&self) -> &TaskSpec {
        &self.task
    }

    pub fn pool(&self) -> &MeshPool {
        &self.pool
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn track(&self) -> Option<&TrajectoryTrack> {
        self.track.as_ref()
    }

    pub fn criteria(&self) -> &SuccessCriteria {
        match self.mode {
            SuccessMode::Generation => &self.task.generation_success,
            SuccessMode::Evaluation => &self.task.evaluation_success,
        }
    }

    fn state(&self) -> &EnvState {
        self.state.as_ref().expect("env was reset")
    }

    /// The scene as sampled at reset.
    pub fn scene(&self) -> &Scene {
        &self.state().scene
    }

    /// Current object poses, in scene order.
    pub fn object_poses(&self) -> &[Pose] {
        &self.state().poses
    }

    pub fn primary_index(&self) -> usize {
        self.scene().objects.iter().position(|o| o.role == Role::Primary).expect("primary")
    }

    pub fn attached(&self) -> Option<usize> {
        self.state.as_ref().and_then(|s| s.attached.map(|(i, _)| i))
    }

    /// Relative pose of the attached object in the gripper frame.
    pub fn attachment(&self) -> Option<Pose> {
        self.state.as_ref().and_then(|s| s.attached.map(|(_, p)| p))
    }

    pub fn ee_pose(&self) -> Pose {
        self.state().ee
    }

    pub fn is_done(&self) -> bool {
        self.state.as_ref().is_some_and(|s| s.done)
    }

    pub fn expected_pose(&self) -> Pose {
        self.state().expected
    }

    pub fn primary_pose(&self) -> Pose {
        self.state().poses[self.primary_index()]
    }

    pub fn object_bvh(&self, i: usize) -> &Arc<Bvh> {
        &self.state().bvhs[i]
    }

    pub fn reset(&mut self, seed: u64) -> Result<Observation, DemogenError> {
        let scene = sample_scene(&self.task, &self.pool, self.config.table_height, seed)?;
        let bvhs: Vec<Arc<Bvh>> = scene
            .objects
            .iter()
            .map(|o| self.pool.require(&o.mesh_id).map(|e| e.bvh.clone()))
            .collect::<Result<_, _>>()?;
        let poses: Vec<Pose> = scene.objects.iter().map(|o| o.pose).collect();
        let mut state = EnvState {
            scene,
            poses,
            bvhs,
            ee: self.config.home,
            gripper: 1.0,
            attached: None,
            steps: 0,
            done: false,
            success: false,
            expected: Pose::identity(),
            cloud_rng: crate::rng::stream(seed, super::CLOUD_STREAM),
        };
        state.expected = self.expected_for(&state);
        self.state = Some(state);
        Ok(self.observe())
    }

    /// Resting pose the primary should reach: centered on the secondary, or
    /// carried along the whole trajectory, then dropped to rest.
    fn expected_for(&self, s: &EnvState) -> Pose {
        let p = s.scene.objects.iter().position(|o| o.role == Role::Primary).expect("primary");
        let initial = s.poses[p];
        let target = match s.scene.objects.iter().position(|o| o.role == Role::Secondary) {
            Some(k) => {
                let sec = s.bvhs[k].mesh();
                let c = s.poses[k].transform_point(&sec.centroid());
                let top = super::placed_aabb(sec, &s.poses[k]).max.z;
                Pose::new(Vec3::new(c.x, c.y, top + 1.0), initial.orientation)
            }
            None => {
                let track = self.track.as_ref().expect("single-object task has a track");
                let last = *track.anchored(&initial).last().expect("non-empty track");
                last.compose(&initial)
            }
        };
        self.settle(s, p, target)
    }

    /// Drops object `i` from `pose` straight down onto the table or the
    /// other objects.
    fn settle(&self, s: &EnvState, i: usize, pose: Pose) -> Pose {
        const EPS: f64 = 1e-6;
        let mesh = s.bvhs[i].mesh();
        let down = -Vec3::z();
        let mut drop = super::placed_aabb(mesh, &pose).min.z - self.config.table_height;
        let others = InstancedScene::new(
            (0..s.poses.len())
                .filter(|&k| k != i)
                .map(|k| (s.bvhs[k].clone(), s.poses[k]))
                .collect(),
        );
        for v in mesh.vertices() {
            let w = pose.transform_point(v);
            if let Some(h) = others.cast(&(w + Vec3::z() * EPS), &down) {
                drop = drop.min((h.distance - EPS).max(0.0));
            }
        }
        let me = InstancedScene::new(vec![(s.bvhs[i].clone(), pose)]);
        for (bvh, p) in &others.instances {
            for v in bvh.mesh().vertices() {
                let w = p.transform_point(v);
                if let Some(h) = me.cast(&(w - Vec3::z() * EPS), &Vec3::z()) {
                    drop = drop.min((h.distance - EPS).max(0.0));
                }
            }
        }
        Pose::new(pose.position + down * drop, pose.orientation)
    }

    /// True when object `i` spans both halves of the fully open closing
    /// corridor at `ee`.
    fn spans_corridor(&self, s: &EnvState, i: usize, ee: &Pose) -> bool {
        let g = &self.config.gripper;
        let boxes = g.boxes(ee, g.max_width);
        let c = boxes.corridor;
        let quarter = c.half.x / 2.0;
        let half_box = |sign: f64| {
            OrientedBox::new(
                c.pose.compose(&Pose::from_translation(Vec3::new(sign * quarter, 0.0, 0.0))),
                Vec3::new(quarter, c.half.y, c.half.z),
            )
        };
        let inv = s.poses[i].inverse();
        let mesh = s.bvhs[i].mesh();
        [half_box(-1.0), half_box(1.0)].iter().all(|b| {
            let local = OrientedBox::new(inv.compose(&b.pose), b.half);
            (0..mesh.triangles().len()).any(|t| local.intersects_triangle(&mesh.triangle(t)))
        })
    }

    pub fn step(&mut self, ee_pose: &Pose, gripper: f64) -> Result<StepResult, DemogenError> {
        let Some(state) = self.state.as_ref() else {
            return Err(DemogenError::Protocol("step before reset".into()));
        };
        if state.done {
            return Err(DemogenError::Protocol("step after the episode finished".into()));
        }
        if !ee_pose.is_finite() || !gripper.is_finite() {
            return Err(DemogenError::Protocol("non-finite action".into()));
        }
        let mut s = self.state.take().expect("checked above");
        let gripper = gripper.clamp(0.0, 1.0);
        let was_closed = is_closed(s.gripper);
        s.ee = *ee_pose;
        s.gripper = gripper;
        if let Some((i, rel)) = s.attached {
            s.poses[i] = s.ee.compose(&rel);
        }
        if !was_closed && is_closed(gripper) && s.attached.is_none() {
            let candidates = (0..s.poses.len()).filter(|&k| s.scene.objects[k].role == Role::Primary);
            let candidates: Vec<usize> = candidates
                .chain((0..s.poses.len()).filter(|&k| s.scene.objects[k].role != Role::Primary))
                .collect();
            if let Some(k) = candidates.into_iter().find(|&k| self.spans_corridor(&s, k, &s.ee)) {
                s.attached = Some((k, s.ee.inverse().compose(&s.poses[k])));
            }
        }
        if was_closed && !is_closed(gripper) {
            if let Some((i, _)) = s.attached.take() {
                s.poses[i] = self.settle(&s, i, s.poses[i]);
                s.done = true;
            }
        }
        s.steps += 1;
        if s.steps >= self.config.max_steps {
            s.done = true;
        }
        if s.done {
            let p = s.scene.objects.iter().position(|o| o.role == Role::Primary).expect("primary");
            s.success = evaluate_success(&s.poses[p], &s.expected, self.criteria());
        }
        let (done, success) = (s.done, s.success);
        self.state = Some(s);
        Ok(StepResult {
            obs: self.observe(),
            done,
            success,
        })
    }

    fn observe(&mut self) -> Observation {
        let cfg = self.config;
        let table = self.table.clone();
        let s = self.state.as_mut().expect("env was reset");
        let mut cloud = Vec::new();
        if cfg.render {
            let mut instances: Vec<(Arc<Bvh>, Pose)> =
                s.bvhs.iter().cloned().zip(s.poses.iter().copied()).collect();
            instances.push((table, Pose::identity()));
            let scene = InstancedScene::new(instances);
            let wrist = cfg.cameras.wrist.with_pose(s.ee.compose(&cfg.cameras.wrist.pose));
            let mut points = depth_to_points(&cfg.cameras.external, &render_depth(&scene, &cfg.cameras.external));
            points.extend(depth_to_points(&wrist, &render_depth(&scene, &wrist)));
            cloud = resample(&points, cfg.cloud_size, &mut s.cloud_rng);
        }
        Observation {
            cloud,
            ee_pose: s.ee,
            gripper: s.gripper,
        }
    }
}

/// Random subset without replacement, or every point plus random repeats
/// when there are too few. An empty input gives points at the origin.
fn resample(points: &[Vec3], size: usize, rng: &mut ChaCha8Rng) -> Vec<[f32; 3]> {
    let f = |p: &Vec3| [p.x as f32, p.y as f32, p.z as f32];
    if points.is_empty() {
        return vec![[0.0; 3]; size];
    }
    if points.len() >= size {
        let mut idx = index::sample(rng, points.len(), size).into_vec();
        idx.sort_unstable();
        return idx.iter().map(|&i| f(&points[i])).collect();
    }
    let mut out: Vec<[f32; 3]> = points.iter().map(f).collect();
    while out.len() < size {
        out.push(f(&points[rng.random_range(0..points.len())]));
    }
    out
}
