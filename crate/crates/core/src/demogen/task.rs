use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::DemogenError;
use crate::geometry::Pose;

/// How rotation error between two object poses is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationMetric {
    /// Angle between the object +z axes mapped to world.
    #[default]
    UpAxis,
    /// Full geodesic angle between the orientations.
    Geodesic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessCriteria {
    /// Meters.
    pub position_threshold: Option<f64>,
    /// Degrees.
    pub rotation_threshold: Option<f64>,
    #[serde(default)]
    pub rotation_metric: RotationMetric,
}

impl SuccessCriteria {
    pub fn position(meters: f64) -> Self {
        Self {
            position_threshold: Some(meters),
            rotation_threshold: None,
            rotation_metric: RotationMetric::UpAxis,
        }
    }

    pub fn rotation(degrees: f64) -> Self {
        Self {
            position_threshold: None,
            rotation_threshold: Some(degrees),
            rotation_metric: RotationMetric::UpAxis,
        }
    }

    pub fn validate(&self) -> Result<(), DemogenError> {
        if self.position_threshold.is_none() && self.rotation_threshold.is_none() {
            return Err(DemogenError::InvalidTask("success criteria need at least one threshold".into()));
        }
        for t in [self.position_threshold, self.rotation_threshold].into_iter().flatten() {
            if !(t.is_finite() && t > 0.0) {
                return Err(DemogenError::InvalidTask(format!("threshold {t} must be positive")));
            }
        }
        Ok(())
    }
}

/// Tabletop rectangle in which object positions are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Workspace {
    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        (self.x[0]..=self.x[1]).contains(&x) && (self.y[0]..=self.y[1]).contains(&y)
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x[0] + self.x[1]) / 2.0, (self.y[0] + self.y[1]) / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub has_secondary: bool,
    pub primary_mesh_ids: Vec<String>,
    #[serde(default)]
    pub secondary_mesh_ids: Vec<String>,
    /// Object trajectory replayed by single-object tasks.
    #[serde(default)]
    pub trajectory_path: Option<PathBuf>,
    pub generation_success: SuccessCriteria,
    pub evaluation_success: SuccessCriteria,
    pub workspace: Workspace,
    /// Height of the bottleneck pose above the table, meters.
    pub bottleneck_height: f64,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), DemogenError> {
        if self.primary_mesh_ids.is_empty() {
            return Err(DemogenError::InvalidTask(format!("task {}: no primary meshes", self.name)));
        }
        if self.has_secondary && self.secondary_mesh_ids.is_empty() {
            return Err(DemogenError::InvalidTask(format!("task {}: no secondary meshes", self.name)));
        }
        if !self.has_secondary && self.trajectory_path.is_none() {
            return Err(DemogenError::InvalidTask(format!(
                "task {}: single-object tasks need a trajectory",
                self.name
            )));
        }
        let w = &self.workspace;
        if !(w.x[0] < w.x[1] && w.y[0] < w.y[1]) || !w.x.iter().chain(&w.y).all(|v| v.is_finite()) {
            return Err(DemogenError::InvalidTask(format!("task {}: degenerate workspace", self.name)));
        }
        if !(self.bottleneck_height.is_finite() && self.bottleneck_height > 0.0) {
            return Err(DemogenError::InvalidTask("bottleneck height must be positive".into()));
        }
        self.generation_success.validate()?;
        self.evaluation_success.validate()
    }

    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self, DemogenError> {
        let task: TaskSpec = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| DemogenError::InvalidTask(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| DemogenError::InvalidTask(e.to_string()))?
        };
        task.validate()?;
        Ok(task)
    }

    /// Loads a task file; a relative trajectory path resolves against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, DemogenError> {
        let text = std::fs::read_to_string(path).map_err(|e| DemogenError::io(path, e))?;
        let mut task = Self::parse(&text)?;
        if let (Some(t), Some(dir)) = (&task.trajectory_path, path.parent()) {
            if t.is_relative() {
                task.trajectory_path = Some(dir.join(t));
            }
        }
        Ok(task)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("task serializes")
    }
}

/// Frame in which a track's relative poses act.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackFrame {
    /// World-aligned axes through the object's initial position.
    #[default]
    World,
    /// The object's own initial frame.
    Object,
}

/// Object-centric trajectory: the primary object's pose at each step
/// relative to its pose at step 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTrack {
    relative_poses: Vec<Pose>,
    timestamps: Vec<f64>,
    frame: TrackFrame,
}

#[derive(Serialize, Deserialize)]
struct TrackFile {
    #[serde(default)]
    frame: TrackFrame,
    timestamps: Vec<f64>,
    /// `[x, y, z, qw, qx, qy, qz]` per step.
    poses: Vec<[f64; 7]>,
}

impl TrajectoryTrack {
    pub fn new(relative_poses: Vec<Pose>, timestamps: Vec<f64>, frame: TrackFrame) -> Result<Self, DemogenError> {
        if relative_poses.is_empty() {
            return Err(DemogenError::InvalidTask("trajectory track is empty".into()));
        }
        if timestamps.len() != relative_poses.len() {
            return Err(DemogenError::InvalidTask("one timestamp per track pose required".into()));
        }
        let first = &relative_poses[0];
        if first.position.norm() > 1e-9 || first.orientation.angle() > 1e-9 {
            return Err(DemogenError::InvalidTask("track must start at the identity".into()));
        }
        if !relative_poses.iter().all(Pose::is_finite) {
            return Err(DemogenError::InvalidTask("track poses must be finite".into()));
        }
        Ok(Self {
            relative_poses,
            timestamps,
            frame,
        })
    }

    pub fn relative_poses(&self) -> &[Pose] {
        &self.relative_poses
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn frame(&self) -> TrackFrame {
        self.frame
    }

    /// The relative poses as world-frame transforms for an object starting
    /// at `initial`, so that the object's pose at step t is
    /// `result[t] ∘ initial`.
    pub fn anchored(&self, initial: &Pose) -> Vec<Pose> {
        let anchor = match self.frame {
            TrackFrame::World => Pose::from_translation(initial.position),
            TrackFrame::Object => *initial,
        };
        let inv = anchor.inverse();
        self.relative_poses.iter().map(|r| anchor.compose(r).compose(&inv)).collect()
    }

    pub fn from_json(text: &str) -> Result<Self, DemogenError> {
        let f: TrackFile = serde_json::from_str(text).map_err(|e| DemogenError::InvalidTask(e.to_string()))?;
        let poses = f
            .poses
            .iter()
            .map(|a| Pose::from_array(a).ok_or_else(|| DemogenError::InvalidTask("invalid track pose".into())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(poses, f.timestamps, f.frame)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TrackFile {
            frame: self.frame,
            timestamps: self.timestamps.clone(),
            poses: self.relative_poses.iter().map(Pose::to_array).collect(),
        })
        .expect("track serializes")
    }

    pub fn load(path: &Path) -> Result<Self, DemogenError> {
        let text = std::fs::read_to_string(path).map_err(|e| DemogenError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), DemogenError> {
        std::fs::write(path, self.to_json()).map_err(|e| DemogenError::io(path, e))
    }
}
