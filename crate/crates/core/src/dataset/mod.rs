//! On-disk demonstration episodes.
//!
//! An episode is a directory holding `frames.bin` and `meta.json`. The
//! binary file is little-endian:
//!
//! ```text
//! "R2GEPIS"  u32 version  u32 frame_count  u32 points_per_cloud
//! per frame: f32[points_per_cloud * 3]  f32[7] ee pose (x y z qw qx qy qz)  f32 gripper
//! ```
//!
//! The action at step t is the proprioceptive state of frame t+1.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::demogen::SuccessCriteria;

pub const ARCHIVE_MAGIC: &[u8; 7] = b"R2GEPIS";
pub const ARCHIVE_VERSION: u32 = 1;
pub const FRAMES_FILE: &str = "frames.bin";
pub const META_FILE: &str = "meta.json";
/// Pose (7) plus gripper.
pub const ACTION_DIM: usize = 8;
pub const DEFAULT_DENSITY: f64 = 1000.0;

const HEADER_LEN: usize = 7 + 4 + 4 + 4;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("malformed archive at byte {offset}: {reason}")]
    MalformedArchive { offset: usize, reason: String },
    #[error("unsupported archive version {0}")]
    UnsupportedVersion(u32),
    #[error("episode {} already exists", .0.display())]
    EpisodeExists(PathBuf),
    #[error("refusing to store a failed episode")]
    FailedEpisode,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl DatasetError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// One control step: observation cloud and proprioceptive state.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub cloud: Vec<[f32; 3]>,
    /// x y z qw qx qy qz
    pub ee_pose: [f32; 7],
    /// 1 open, 0 closed.
    pub gripper: f32,
}

impl Frame {
    pub fn state(&self) -> [f32; ACTION_DIM] {
        let mut a = [0.0; ACTION_DIM];
        a[..7].copy_from_slice(&self.ee_pose);
        a[7] = self.gripper;
        a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub format_version: u32,
    pub task: String,
    pub seed: u64,
    /// Primary first, then the secondary if any.
    pub mesh_ids: Vec<String>,
    pub success: bool,
    pub success_criteria: SuccessCriteria,
    /// x y z qw qx qy qz
    pub expected_final_pose: [f64; 7],
    pub achieved_final_pose: [f64; 7],
    pub density_kg_m3: f64,
    pub frame_count: usize,
    pub points_per_cloud: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub meta: EpisodeMeta,
    pub frames: Vec<Frame>,
}

impl Episode {
    /// Fills in the frame counts and version from `frames`.
    pub fn new(mut meta: EpisodeMeta, frames: Vec<Frame>) -> Self {
        meta.format_version = ARCHIVE_VERSION;
        meta.frame_count = frames.len();
        meta.points_per_cloud = frames.first().map_or(0, |f| f.cloud.len());
        Self { meta, frames }
    }
}

pub fn encode_frames(frames: &[Frame]) -> Result<Vec<u8>, DatasetError> {
    let n = frames.first().map_or(0, |f| f.cloud.len());
    if frames.iter().any(|f| f.cloud.len() != n) {
        return Err(DatasetError::InvalidArgument("all clouds must have the same size".into()));
    }
    let count = u32::try_from(frames.len()).map_err(|_| DatasetError::InvalidArgument("too many frames".into()))?;
    let points = u32::try_from(n).map_err(|_| DatasetError::InvalidArgument("cloud too large".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + frames.len() * (n * 12 + 32));
    out.extend_from_slice(ARCHIVE_MAGIC);
    out.extend_from_slice(&ARCHIVE_VERSION.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&points.to_le_bytes());
    for f in frames {
        for v in f.cloud.iter().flatten().chain(&f.ee_pose).chain([&f.gripper]) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], DatasetError> {
        if self.bytes.len() - self.at < n {
            return Err(DatasetError::MalformedArchive {
                offset: self.at,
                reason: format!("expected {n} more bytes, found {}", self.bytes.len() - self.at),
            });
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, DatasetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32(&mut self) -> Result<f32, DatasetError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn decode_frames(bytes: &[u8]) -> Result<Vec<Frame>, DatasetError> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(ARCHIVE_MAGIC.len())? != ARCHIVE_MAGIC {
        return Err(DatasetError::MalformedArchive {
            offset: 0,
            reason: "bad magic".into(),
        });
    }
    let version = r.u32()?;
    if version != ARCHIVE_VERSION {
        return Err(DatasetError::UnsupportedVersion(version));
    }
    let count = r.u32()? as usize;
    let points = r.u32()? as usize;
    let frame_len = points.checked_mul(12).and_then(|b| b.checked_add(32));
    let expected = frame_len.and_then(|l| l.checked_mul(count)).and_then(|l| l.checked_add(HEADER_LEN));
    if expected != Some(bytes.len()) {
        return Err(DatasetError::MalformedArchive {
            offset: bytes.len().min(expected.unwrap_or(usize::MAX)),
            reason: format!("{count} frames of {points} points do not match {} bytes", bytes.len()),
        });
    }
    let mut frames = Vec::with_capacity(count);
    for _ in 0..count {
        let mut cloud = Vec::with_capacity(points);
        for _ in 0..points {
            cloud.push([r.f32()?, r.f32()?, r.f32()?]);
        }
        let mut ee_pose = [0.0; 7];
        for v in &mut ee_pose {
            *v = r.f32()?;
        }
        frames.push(Frame {
            cloud,
            ee_pose,
            gripper: r.f32()?,
        });
    }
    Ok(frames)
}

/// Writes `root/id` atomically. Existing ids and failed episodes are
/// refused.
pub fn write_episode(root: &Path, id: &str, episode: &Episode) -> Result<PathBuf, DatasetError> {
    if !episode.meta.success {
        return Err(DatasetError::FailedEpisode);
    }
    if id.is_empty() || id.starts_with('.') || id.contains(['/', '\\']) {
        return Err(DatasetError::InvalidArgument(format!("bad episode id {id:?}")));
    }
    let dir = root.join(id);
    if dir.exists() {
        return Err(DatasetError::EpisodeExists(dir));
    }
    std::fs::create_dir_all(root).map_err(|e| DatasetError::io(root, e))?;
    let tmp = root.join(format!(".{id}.partial"));
    if tmp.exists() {
        std::fs::remove_dir_all(&tmp).map_err(|e| DatasetError::io(&tmp, e))?;
    }
    std::fs::create_dir(&tmp).map_err(|e| DatasetError::io(&tmp, e))?;
    let mut meta = episode.meta.clone();
    meta.format_version = ARCHIVE_VERSION;
    meta.frame_count = episode.frames.len();
    meta.points_per_cloud = episode.frames.first().map_or(0, |f| f.cloud.len());
    let bin = encode_frames(&episode.frames)?;
    let json = serde_json::to_string_pretty(&meta).map_err(|e| DatasetError::Format(e.to_string()))?;
    let frames_path = tmp.join(FRAMES_FILE);
    std::fs::write(&frames_path, bin).map_err(|e| DatasetError::io(&frames_path, e))?;
    let meta_path = tmp.join(META_FILE);
    std::fs::write(&meta_path, json).map_err(|e| DatasetError::io(&meta_path, e))?;
    std::fs::rename(&tmp, &dir).map_err(|e| DatasetError::io(&dir, e))?;
    Ok(dir)
}

pub fn read_episode(dir: &Path) -> Result<Episode, DatasetError> {
    let meta_path = dir.join(META_FILE);
    let text = std::fs::read_to_string(&meta_path).map_err(|e| DatasetError::io(&meta_path, e))?;
    let meta: EpisodeMeta = serde_json::from_str(&text).map_err(|e| DatasetError::Format(e.to_string()))?;
    if meta.format_version != ARCHIVE_VERSION {
        return Err(DatasetError::UnsupportedVersion(meta.format_version));
    }
    let frames_path = dir.join(FRAMES_FILE);
    let bytes = std::fs::read(&frames_path).map_err(|e| DatasetError::io(&frames_path, e))?;
    let frames = decode_frames(&bytes)?;
    let points = frames.first().map_or(0, |f| f.cloud.len());
    if frames.len() != meta.frame_count || (!frames.is_empty() && points != meta.points_per_cloud) {
        return Err(DatasetError::Format(format!(
            "{}: meta.json disagrees with {FRAMES_FILE}",
            dir.display()
        )));
    }
    Ok(Episode { meta, frames })
}

/// Episode directories under `root`, sorted by name.
pub fn list_episodes(root: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(root).map_err(|e| DatasetError::io(root, e))? {
        let entry = entry.map_err(|e| DatasetError::io(root, e))?;
        let path = entry.path();
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if !hidden && path.join(META_FILE).is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Actions for steps t+1..=t+horizon, repeating the last frame past the end.
pub fn action_chunk(frames: &[Frame], t: usize, horizon: usize) -> Result<Vec<[f32; ACTION_DIM]>, DatasetError> {
    if t >= frames.len() {
        return Err(DatasetError::InvalidArgument(format!("step {t} beyond {} frames", frames.len())));
    }
    let last = frames.len() - 1;
    Ok((1..=horizon).map(|k| frames[(t + k).min(last)].state()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub episodes: usize,
    pub frames: usize,
    pub points_per_cloud: Option<usize>,
    pub min_frames: Option<usize>,
    pub max_frames: Option<usize>,
    pub mean_frames: Option<f64>,
    pub episodes_per_task: BTreeMap<String, usize>,
    pub episodes_per_mesh: BTreeMap<String, usize>,
}

/// Summary over every episode under `root`. Iteration order is by name so
/// the result is reproducible.
pub fn dataset_stats(root: &Path) -> Result<DatasetStats, DatasetError> {
    let mut stats = DatasetStats {
        episodes: 0,
        frames: 0,
        points_per_cloud: None,
        min_frames: None,
        max_frames: None,
        mean_frames: None,
        episodes_per_task: BTreeMap::new(),
        episodes_per_mesh: BTreeMap::new(),
    };
    for dir in list_episodes(root)? {
        let ep = read_episode(&dir)?;
        let n = ep.frames.len();
        stats.episodes += 1;
        stats.frames += n;
        stats.min_frames = Some(stats.min_frames.map_or(n, |m| m.min(n)));
        stats.max_frames = Some(stats.max_frames.map_or(n, |m| m.max(n)));
        match stats.points_per_cloud {
            None => stats.points_per_cloud = Some(ep.meta.points_per_cloud),
            Some(p) if p != ep.meta.points_per_cloud => {
                return Err(DatasetError::Format(format!(
                    "{}: {} points per cloud, others have {p}",
                    dir.display(),
                    ep.meta.points_per_cloud
                )))
            }
            _ => {}
        }
        *stats.episodes_per_task.entry(ep.meta.task.clone()).or_default() += 1;
        for id in &ep.meta.mesh_ids {
            *stats.episodes_per_mesh.entry(id.clone()).or_default() += 1;
        }
    }
    if stats.episodes > 0 {
        stats.mean_frames = Some(stats.frames as f64 / stats.episodes as f64);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame(k: usize, points: usize) -> Frame {
        Frame {
            cloud: (0..points).map(|i| [i as f32, k as f32 * 0.5, -1.25]).collect(),
            ee_pose: [0.1 * k as f32, 0.2, 0.3, 1.0, 0.0, 0.0, 0.0],
            gripper: if k % 2 == 0 { 1.0 } else { 0.0 },
        }
    }

    fn meta() -> EpisodeMeta {
        EpisodeMeta {
            format_version: ARCHIVE_VERSION,
            task: "box_on_tray".into(),
            seed: 7,
            mesh_ids: vec!["box_a".into(), "tray".into()],
            success: true,
            success_criteria: SuccessCriteria::position(0.15),
            expected_final_pose: [0.5, 0.1, 0.005, 1.0, 0.0, 0.0, 0.0],
            achieved_final_pose: [0.51, 0.1, 0.005, 0.9999999999, 0.0, 0.0, 1.4142135623e-5],
            density_kg_m3: DEFAULT_DENSITY,
            frame_count: 0,
            points_per_cloud: 0,
        }
    }

    #[test]
    fn two_frames_of_four_points_is_179_bytes() {
        let bytes = encode_frames(&[frame(0, 4), frame(1, 4)]).unwrap();
        assert_eq!(bytes.len(), 179);
        assert_eq!(&bytes[..7], b"R2GEPIS");
        assert_eq!(&bytes[7..11], &1u32.to_le_bytes());
    }

    #[test]
    fn episode_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let ep = Episode::new(meta(), (0..5).map(|k| frame(k, 16)).collect());
        let path = write_episode(dir.path(), "episode_000000", &ep).unwrap();
        let back = read_episode(&path).unwrap();
        assert_eq!(back, ep);
        let bytes = std::fs::read(path.join(FRAMES_FILE)).unwrap();
        assert_eq!(bytes, encode_frames(&ep.frames).unwrap());
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path.join(META_FILE)).unwrap()).unwrap();
        assert_eq!(json["density_kg_m3"], 1000.0);
        assert!(json.get("timestamps").is_none());
    }

    #[test]
    fn existing_ids_and_failures_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let ep = Episode::new(meta(), vec![frame(0, 2)]);
        write_episode(dir.path(), "a", &ep).unwrap();
        assert!(matches!(write_episode(dir.path(), "a", &ep), Err(DatasetError::EpisodeExists(_))));
        let mut failed = ep.clone();
        failed.meta.success = false;
        assert!(matches!(write_episode(dir.path(), "b", &failed), Err(DatasetError::FailedEpisode)));
        assert!(!dir.path().join("b").exists());
        assert_eq!(list_episodes(dir.path()).unwrap().len(), 1);
    }

    #[test]
    fn truncation_reports_an_offset() {
        let bytes = encode_frames(&[frame(0, 4), frame(1, 4)]).unwrap();
        for cut in [3, 12, 100, 178] {
            match decode_frames(&bytes[..cut]) {
                Err(DatasetError::MalformedArchive { offset, .. }) => assert!(offset <= cut),
                other => panic!("cut {cut}: {other:?}"),
            }
        }
        let mut bad = bytes.clone();
        bad[7] = 2;
        assert!(matches!(decode_frames(&bad), Err(DatasetError::UnsupportedVersion(2))));
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(matches!(decode_frames(&bad), Err(DatasetError::MalformedArchive { offset: 0, .. })));
    }

    #[test]
    fn action_chunks_pad_with_the_last_frame() {
        let frames: Vec<Frame> = (0..4).map(|k| frame(k, 1)).collect();
        let c = action_chunk(&frames, 1, 5).unwrap();
        assert_eq!(c.len(), 5);
        assert_eq!(c[0], frames[2].state());
        assert_eq!(c[1], frames[3].state());
        assert!(c[2..].iter().all(|a| *a == frames[3].state()));
        assert!(action_chunk(&frames, 4, 2).is_err());
    }

    #[test]
    fn stats_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        for (i, n) in [3, 5, 4].into_iter().enumerate() {
            let ep = Episode::new(meta(), (0..n).map(|k| frame(k, 8)).collect());
            write_episode(dir.path(), &format!("episode_{i:06}"), &ep).unwrap();
        }
        let s = dataset_stats(dir.path()).unwrap();
        assert_eq!((s.episodes, s.frames, s.min_frames, s.max_frames), (3, 12, Some(3), Some(5)));
        assert_eq!(s.episodes_per_mesh["tray"], 3);
        let a = serde_json::to_string(&s).unwrap();
        assert_eq!(a, serde_json::to_string(&dataset_stats(dir.path()).unwrap()).unwrap());
    }

    proptest! {
        #[test]
        fn frames_roundtrip_bitwise(
            points in 0usize..6,
            raw in proptest::collection::vec(proptest::num::f32::ANY, 0..200),
            frames in 0usize..4,
        ) {
            let mut it = raw.iter().copied().cycle();
            let mut next = || it.next().unwrap_or(0.0);
            let fs: Vec<Frame> = (0..frames)
                .map(|_| Frame {
                    cloud: (0..points).map(|_| [next(), next(), next()]).collect(),
                    ee_pose: std::array::from_fn(|_| next()),
                    gripper: next(),
                })
                .collect();
            let bytes = encode_frames(&fs).unwrap();
            let back = decode_frames(&bytes).unwrap();
            prop_assert_eq!(bytes, encode_frames(&back).unwrap());
        }
    }
}
