use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Controller, DemogenError, Env, EnvConfig, MeshPool, Observation, SuccessMode, TaskSpec, TrajectoryTrack};
use crate::dataset::{write_episode, Episode, EpisodeMeta, Frame, ARCHIVE_VERSION, DEFAULT_DENSITY};
use crate::geometry::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    SceneSamplingFailed,
    NoFeasibleGrasp,
    GraspFailure,
    PathCollision,
    SuccessCheckFailed,
}

impl FailureMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailureMode::SceneSamplingFailed => "scene_sampling_failed",
            FailureMode::NoFeasibleGrasp => "no_feasible_grasp",
            FailureMode::GraspFailure => "grasp_failure",
            FailureMode::PathCollision => "path_collision",
            FailureMode::SuccessCheckFailed => "success_check_failed",
        }
    }

    fn from_error(e: &DemogenError) -> Option<Self> {
        match e {
            DemogenError::SceneSamplingFailed(_) => Some(FailureMode::SceneSamplingFailed),
            DemogenError::NoFeasibleGrasp => Some(FailureMode::NoFeasibleGrasp),
            DemogenError::GraspFailure => Some(FailureMode::GraspFailure),
            DemogenError::PathCollision { .. } => Some(FailureMode::PathCollision),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub seed: u64,
    pub success: bool,
    pub failure: Option<FailureMode>,
    /// Observation and proprioception per step, including the final state.
    pub frames: Vec<Frame>,
    pub mesh_ids: Vec<String>,
    pub expected: Option<Pose>,
    pub achieved: Option<Pose>,
    pub steps: usize,
}

impl EpisodeOutcome {
    fn failed(seed: u64, mode: FailureMode, mesh_ids: Vec<String>) -> Self {
        Self {
            seed,
            success: false,
            failure: Some(mode),
            frames: Vec::new(),
            mesh_ids,
            expected: None,
            achieved: None,
            steps: 0,
        }
    }

    /// Archive form of a successful episode.
    pub fn to_episode(&self, env: &Env) -> Episode {
        Episode::new(
            EpisodeMeta {
                format_version: ARCHIVE_VERSION,
                task: env.task().name.clone(),
                seed: self.seed,
                mesh_ids: self.mesh_ids.clone(),
                success: self.success,
                success_criteria: *env.criteria(),
                expected_final_pose: self.expected.unwrap_or_else(Pose::identity).to_array(),
                achieved_final_pose: self.achieved.unwrap_or_else(Pose::identity).to_array(),
                density_kg_m3: DEFAULT_DENSITY,
                frame_count: 0,
                points_per_cloud: 0,
            },
            self.frames.clone(),
        )
    }
}

fn frame(obs: &Observation) -> Frame {
    Frame {
        cloud: obs.cloud.clone(),
        ee_pose: obs.ee_pose.to_array_f32(),
        gripper: obs.gripper as f32,
    }
}

/// Resets `env` with `seed` and runs `controller` until the episode ends.
/// Planning and grasping failures become outcomes; anything else is an error.
pub fn run_episode(
    env: &mut Env,
    controller: &mut dyn Controller,
    seed: u64,
    record: bool,
) -> Result<EpisodeOutcome, DemogenError> {
    let mut obs = match env.reset(seed) {
        Ok(o) => o,
        Err(e) => match FailureMode::from_error(&e) {
            Some(mode) => return Ok(EpisodeOutcome::failed(seed, mode, Vec::new())),
            None => return Err(e),
        },
    };
    let mesh_ids: Vec<String> = env.scene().objects.iter().map(|o| o.mesh_id.clone()).collect();
    if let Err(e) = controller.reset(env, seed) {
        return match FailureMode::from_error(&e) {
            Some(mode) => Ok(EpisodeOutcome::failed(seed, mode, mesh_ids)),
            None => Err(e),
        };
    }
    let mut frames = Vec::new();
    let mut steps = 0;
    loop {
        if record {
            frames.push(frame(&obs));
        }
        let action = match controller.act(env, &obs) {
            Ok(a) => a,
            Err(e) => match FailureMode::from_error(&e) {
                Some(mode) => {
                    let mut out = EpisodeOutcome::failed(seed, mode, mesh_ids);
                    out.steps = steps;
                    return Ok(out);
                }
                None => return Err(e),
            },
        };
        let r = env.step(&action.ee_pose, action.gripper)?;
        steps += 1;
        obs = r.obs;
        if r.done {
            if record {
                frames.push(frame(&obs));
            }
            return Ok(EpisodeOutcome {
                seed,
                success: r.success,
                failure: (!r.success).then_some(FailureMode::SuccessCheckFailed),
                frames,
                mesh_ids,
                expected: Some(env.expected_pose()),
                achieved: Some(env.primary_pose()),
                steps,
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub demos: usize,
    pub base_seed: u64,
    /// Stop with an error when the success fraction is below this...
    pub min_success_fraction: f64,
    /// ...after this many attempts.
    pub stall_after: usize,
    pub env: EnvConfig,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            demos: 800,
            base_seed: 0,
            min_success_fraction: 0.01,
            stall_after: 1000,
            env: EnvConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub task: String,
    pub attempts: usize,
    pub successes: usize,
    pub success_fraction: f64,
    pub failures: BTreeMap<String, usize>,
    pub first_seed: u64,
    pub last_seed: Option<u64>,
}

/// Runs the expert on seeds `base_seed, base_seed + 1, …` until `demos`
/// successes are stored under `out` as `episode_000000`, … Seeds are run in
/// parallel batches but consumed in order, so the output does not depend on
/// the thread count.
pub fn generate_dataset(
    task: &TaskSpec,
    pool: Arc<MeshPool>,
    track: Option<TrajectoryTrack>,
    config: &GenerationConfig,
    make_expert: &(dyn Fn() -> Box<dyn Controller> + Sync),
    out: &Path,
) -> Result<GenerationStats, DemogenError> {
    if !(0.0..=1.0).contains(&config.min_success_fraction) {
        return Err(DemogenError::InvalidArgument("min_success_fraction must lie in [0, 1]".into()));
    }
    let template = Env::new(task.clone(), pool, config.env, track, SuccessMode::Generation)?;
    let mut stats = GenerationStats {
        task: task.name.clone(),
        attempts: 0,
        successes: 0,
        success_fraction: 0.0,
        failures: BTreeMap::new(),
        first_seed: config.base_seed,
        last_seed: None,
    };
    let batch = (rayon::current_num_threads() * 4).max(4) as u64;
    let mut next = config.base_seed;
    while stats.successes < config.demos {
        let seeds: Vec<u64> = (0..batch).map(|k| next.wrapping_add(k)).collect();
        next = next.wrapping_add(batch);
        let outcomes: Vec<Result<(EpisodeOutcome, Env), DemogenError>> = seeds
            .par_iter()
            .map(|&seed| {
                let mut env = template.clone();
                let mut expert = make_expert();
                run_episode(&mut env, expert.as_mut(), seed, true).map(|o| (o, env))
            })
            .collect();
        for r in outcomes {
            if stats.successes >= config.demos {
                break;
            }
            let (outcome, env) = r?;
            stats.attempts += 1;
            stats.last_seed = Some(outcome.seed);
            if outcome.success {
                let id = format!("episode_{:06}", stats.successes);
                write_episode(out, &id, &outcome.to_episode(&env))?;
                stats.successes += 1;
                if stats.successes % 50 == 0 {
                    log::info!("{}: {} / {} demos", task.name, stats.successes, config.demos);
                }
            } else if let Some(mode) = outcome.failure {
                *stats.failures.entry(mode.as_str().to_string()).or_default() += 1;
            }
            let fraction = stats.successes as f64 / stats.attempts as f64;
            if stats.attempts >= config.stall_after && fraction < config.min_success_fraction {
                return Err(DemogenError::GenerationStalled {
                    attempts: stats.attempts,
                    successes: stats.successes,
                });
            }
        }
    }
    stats.success_fraction = if stats.attempts == 0 {
        0.0
    } else {
        stats.successes as f64 / stats.attempts as f64
    };
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub failures: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub controller: String,
    pub episodes_per_seed: usize,
    pub per_seed: Vec<SeedResult>,
    pub mean_success_rate: f64,
    /// Population standard deviation across seeds.
    pub std_success_rate: f64,
}

/// Runs `episodes` episodes per evaluation seed under the evaluation
/// thresholds. Episode i of seed s uses the scene seed `derive(s, i)`.
pub fn evaluate_policy(
    task: &TaskSpec,
    pool: Arc<MeshPool>,
    track: Option<TrajectoryTrack>,
    env_config: &EnvConfig,
    make_controller: &(dyn Fn() -> Box<dyn Controller> + Sync),
    seeds: &[u64],
    episodes: usize,
) -> Result<EvalReport, DemogenError> {
    if seeds.is_empty() || episodes == 0 {
        return Err(DemogenError::InvalidArgument("need at least one seed and one episode".into()));
    }
    let template = Env::new(task.clone(), pool, *env_config, track, SuccessMode::Evaluation)?;
    let controller = make_controller().name().to_string();
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let outcomes: Vec<EpisodeOutcome> = (0..episodes as u64)
            .into_par_iter()
            .map(|i| {
                let mut env = template.clone();
                let mut c = make_controller();
                run_episode(&mut env, c.as_mut(), crate::rng::derive(seed, i), false)
            })
            .collect::<Result<_, _>>()?;
        let successes = outcomes.iter().filter(|o| o.success).count();
        let mut failures = BTreeMap::new();
        for mode in outcomes.iter().filter_map(|o| o.failure) {
            *failures.entry(mode.as_str().to_string()).or_default() += 1;
        }
        per_seed.push(SeedResult {
            seed,
            episodes,
            successes,
            success_rate: successes as f64 / episodes as f64,
            failures,
        });
    }
    let n = per_seed.len() as f64;
    let mean = per_seed.iter().map(|s| s.success_rate).sum::<f64>() / n;
    let var = per_seed.iter().map(|s| (s.success_rate - mean).powi(2)).sum::<f64>() / n;
    Ok(EvalReport {
        task: task.name.clone(),
        controller,
        episodes_per_seed: episodes,
        per_seed,
        mean_success_rate: mean,
        std_success_rate: var.sqrt(),
    })
}
