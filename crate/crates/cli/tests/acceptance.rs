//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails. Tolerances are fixed here.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

use r2g_core::alignment::{ransac_umeyama, umeyama, Correspondence, CorrespondenceSet, RansacParams};
use r2g_core::demogen::{bundled, evaluate_success, RotationMetric, SuccessCriteria};
use r2g_core::geometry::{canonical_quaternion, primitives, raycast_brute_force};
use r2g_core::grasping::{precompute_grasps, GraspConfig};
use r2g_core::{Bvh, Pose, SimilarityTransform, TriMesh, Vec3};

const UMEYAMA_EXACT_TOL: f64 = 1e-7;
const UMEYAMA_NOISE_SIGMA: f64 = 1e-3;
const UMEYAMA_NOISY_TRANSLATION_M: f64 = 5e-3;
const UMEYAMA_NOISY_ROTATION_DEG: f64 = 0.5;
const UMEYAMA_NOISY_SCALE_REL: f64 = 0.01;
const UMEYAMA_BUDGET: Duration = Duration::from_secs(5);
const RANSAC_TRIALS: u64 = 50;
const RANSAC_RECOVERY_M: f64 = 1e-3;
const RANSAC_BUDGET: Duration = Duration::from_secs(30);
const BVH_RAYS: usize = 500;
const BVH_DISTANCE_TOL: f64 = 1e-9;
const SELF_ALIGN_SCALE_REL: f64 = 0.01;
const SELF_ALIGN_ROTATION_DEG: f64 = 2.0;
const GENERATION_DEMOS: usize = 800;
const GENERATION_MIN_SUCCESS: f64 = 0.8;
const GENERATION_BUDGET: Duration = Duration::from_secs(600);
const EVAL_SEEDS: &str = "0,1,2";
const EVAL_EPISODES: usize = 100;

struct Verdicts(Vec<(String, bool)>);

impl Verdicts {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.0.push((name.to_string(), pass));
    }
}

fn r2g(args: &[&str]) -> (bool, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_r2g")).args(args).output().expect("binary runs");
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.success(), text)
}

fn random_rotation(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
    let n = Normal::new(0.0, 1.0).unwrap();
    UnitQuaternion::from_quaternion(Quaternion::new(n.sample(rng), n.sample(rng), n.sample(rng), n.sample(rng)))
}

fn random_similarity(rng: &mut ChaCha8Rng) -> SimilarityTransform {
    SimilarityTransform::new(
        rng.random_range(0.5..2.0),
        random_rotation(rng),
        Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
    )
    .unwrap()
}

fn cube_point(rng: &mut ChaCha8Rng, half: f64) -> Vec3 {
    Vec3::new(rng.random_range(-half..half), rng.random_range(-half..half), rng.random_range(-half..half))
}

fn component_error(a: &SimilarityTransform, b: &SimilarityTransform) -> f64 {
    let (qa, qb) = (canonical_quaternion(&a.rotation), canonical_quaternion(&b.rotation));
    let q = (qa.coords - qb.coords).amax();
    let t = (a.translation - b.translation).amax();
    q.max(t).max((a.scale() - b.scale()).abs())
}

fn umeyama_oracle(v: &mut Verdicts) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let noise = Normal::new(0.0, UMEYAMA_NOISE_SIGMA).unwrap();
    let (mut worst_exact, mut worst_t, mut worst_r, mut worst_s) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let truth = random_similarity(&mut rng);
        let src: Vec<Vec3> = (0..50).map(|_| cube_point(&mut rng, 1.0)).collect();
        let dst = truth.apply_all(&src);
        let est = umeyama(&src, &dst).unwrap();
        worst_exact = worst_exact.max(component_error(&est, &truth));
        let noisy: Vec<Vec3> = dst
            .iter()
            .map(|p| p + Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng)))
            .collect();
        let est = umeyama(&src, &noisy).unwrap();
        worst_t = worst_t.max((est.translation - truth.translation).norm());
        worst_r = worst_r.max(est.rotation.angle_to(&truth.rotation).to_degrees());
        worst_s = worst_s.max((est.scale() - truth.scale()).abs() / truth.scale());
    }
    let elapsed = start.elapsed();
    let pass = worst_exact <= UMEYAMA_EXACT_TOL
        && worst_t <= UMEYAMA_NOISY_TRANSLATION_M
        && worst_r <= UMEYAMA_NOISY_ROTATION_DEG
        && worst_s <= UMEYAMA_NOISY_SCALE_REL
        && elapsed < UMEYAMA_BUDGET;
    v.record(
        "umeyama oracle",
        pass,
        format!(
            "100 instances, exact worst {worst_exact:.1e}; noisy worst {worst_t:.1e} m / {worst_r:.3} deg / {:.3}% scale; {elapsed:.2?}",
            100.0 * worst_s
        ),
    );
}

fn planted_set(seed: u64) -> (CorrespondenceSet, SimilarityTransform, Vec<Vec3>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = random_similarity(&mut rng);
    let mut pairs = Vec::new();
    let mut inlier_sources = Vec::new();
    for i in 0..40 {
        let s = cube_point(&mut rng, 0.25);
        let t = if i % 2 == 0 {
            inlier_sources.push(s);
            truth.apply(&s)
        } else {
            truth.translation + cube_point(&mut rng, 0.25)
        };
        pairs.push(Correspondence {
            source: s,
            target: t,
            similarity: rng.random_range(0.5..1.0),
        });
    }
    (CorrespondenceSet::new(pairs).unwrap(), truth, inlier_sources)
}

fn ransac_robustness(v: &mut Verdicts) {
    let start = Instant::now();
    let params = RansacParams {
        inlier_threshold: 0.005,
        ..RansacParams::default()
    };
    let mut recovered = 0;
    let mut deterministic = true;
    let mut worst = 0.0f64;
    for trial in 0..RANSAC_TRIALS {
        let (set, truth, inliers) = planted_set(trial);
        let p = RansacParams { seed: trial, ..params };
        match (ransac_umeyama(&set, &p), ransac_umeyama(&set, &p)) {
            (Ok(a), Ok(b)) => {
                let err = inliers.iter().map(|s| (a.transform.apply(s) - truth.apply(s)).norm()).fold(0.0, f64::max);
                worst = worst.max(err);
                recovered += (err <= RANSAC_RECOVERY_M) as usize;
                let bits = |e: &r2g_core::alignment::RansacEstimate| {
                    let q = e.transform.rotation.coords;
                    let t = e.transform.translation;
                    [e.transform.scale(), q[0], q[1], q[2], q[3], t.x, t.y, t.z, e.mean_residual].map(f64::to_bits)
                };
                deterministic &= bits(&a) == bits(&b) && a.inliers == b.inliers;
            }
            _ => deterministic = false,
        }
    }
    let elapsed = start.elapsed();
    let pass = recovered == RANSAC_TRIALS as usize && deterministic && elapsed < RANSAC_BUDGET;
    v.record(
        "ransac robustness",
        pass,
        format!("{recovered}/{RANSAC_TRIALS} recovered at 50% outliers (worst {worst:.1e} m), bitwise deterministic: {deterministic}; {elapsed:.2?}"),
    );
}

fn bvh_equivalence(v: &mut Verdicts) {
    let meshes = [
        primitives::icosphere("sphere", 0.5, 3),
        primitives::cylinder("can", 0.3, 1.0, 48),
        bundled::tray_mesh(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut hits, mut mismatches, mut worst) = (0usize, 0usize, 0.0f64);
    for mesh in &meshes {
        let bvh = Bvh::build(mesh.clone());
        let b = mesh.aabb();
        let c = b.center();
        let r = mesh.bounding_radius(&c);
        for _ in 0..BVH_RAYS {
            let origin = c + cube_point(&mut rng, 1.0).normalize() * 2.0 * r;
            let target = Vec3::new(
                rng.random_range(b.min.x..b.max.x),
                rng.random_range(b.min.y..b.max.y),
                rng.random_range(b.min.z..b.max.z),
            );
            let dir = (target - origin).normalize();
            match (bvh.raycast(&origin, &dir), raycast_brute_force(mesh, &origin, &dir)) {
                (None, None) => {}
                (Some(a), Some(e)) => {
                    hits += 1;
                    let d = (a.distance - e.distance).abs();
                    worst = worst.max(d);
                    mismatches += (a.triangle_id != e.triangle_id || d > BVH_DISTANCE_TOL) as usize;
                }
                _ => mismatches += 1,
            }
        }
    }
    v.record(
        "bvh equals brute force",
        mismatches == 0,
        format!("{} rays x 3 meshes, {hits} hits, {mismatches} mismatches, worst distance gap {worst:.1e}", BVH_RAYS),
    );
}

fn self_alignment(v: &mut Verdicts, dir: &Path) {
    let d = |p: &str| dir.join(p).to_str().unwrap().to_string();
    let (ok, log) = r2g(&["align", "fixture", "--out", &d(""), "--seed", "0"]);
    if !ok {
        v.record("self-alignment fixture", false, format!("fixture failed: {log}"));
        return;
    }
    let mut details = Vec::new();
    let mut pass = true;
    for id in ["block", "can", "mallet"] {
        let out = d("aligned");
        let (ok, log) = r2g(&[
            "align",
            "run",
            "--mesh",
            &d(&format!("meshes/{id}.obj")),
            "--views-root",
            &d("views"),
            "--reference",
            &d(&format!("reference/{id}/reference.json")),
            "--out",
            &out,
        ]);
        if !ok {
            pass = false;
            details.push(format!("{id}: align failed: {log}"));
            continue;
        }
        let read = |p: String| -> serde_json::Value { serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap() };
        let truth: SimilarityTransform = serde_json::from_value(read(d(&format!("truth/{id}.json")))).unwrap();
        let report = read(format!("{out}/{id}.alignment.json"));
        let scale = report["scale"].as_f64().unwrap();
        let q: Vec<f64> = report["quaternion_wxyz"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        let rot = UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]));
        let scale_err = (scale - truth.scale()).abs() / truth.scale();
        let rot_err = rot.angle_to(&truth.rotation).to_degrees();
        pass &= scale_err < SELF_ALIGN_SCALE_REL && rot_err < SELF_ALIGN_ROTATION_DEG;
        details.push(format!("{id} scale {:.3}% rot {rot_err:.2} deg", 100.0 * scale_err));
    }
    v.record("self-alignment fixture", pass, details.join(", "));
}

fn antipodal_audit(v: &mut Verdicts) {
    let cfg = GraspConfig::default();
    let mu = cfg.friction_coefficient;
    let cube = primitives::cuboid_between("cube4", Vec3::new(-0.02, -0.02, 0.0), Vec3::new(0.02, 0.02, 0.04));
    let can = primitives::cylinder("can", 0.025, 0.08, 32);
    let meshes: Vec<TriMesh> = bundled::box_meshes().into_iter().chain([cube.clone(), can]).collect();
    let (mut total, mut bad) = (0usize, 0usize);
    for m in &meshes {
        let set = precompute_grasps(m, &cfg).unwrap();
        total += set.grasps.len();
        bad += set.grasps.iter().filter(|g| !g.is_antipodal(mu, set.gripper.max_width)).count();
    }
    let set = precompute_grasps(&cube, &cfg).unwrap();
    let mut axes = [false; 3];
    for g in &set.grasps {
        let d = (g.contact_b.point - g.contact_a.point).abs();
        axes[d.imax()] = true;
    }
    let distinct = axes.iter().filter(|&&a| a).count();
    v.record(
        "antipodal audit",
        bad == 0 && distinct >= 3,
        format!("{} meshes, {total} grasps, {bad} violate friction cone or width; cube axes {distinct}", meshes.len()),
    );
}

fn archive_digest(root: &Path) -> String {
    let mut h = Sha256::new();
    for dir in r2g_core::dataset::list_episodes(root).unwrap() {
        h.update(dir.file_name().unwrap().to_string_lossy().as_bytes());
        for f in ["frames.bin", "meta.json"] {
            h.update(std::fs::read(dir.join(f)).unwrap());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn generation(v: &mut Verdicts, dir: &Path) {
    let demos = GENERATION_DEMOS.to_string();
    let mut runs = Vec::new();
    for name in ["run_a", "run_b"] {
        let out = dir.join(name);
        let start = Instant::now();
        let (ok, log) = r2g(&["generate", "--task", "box_on_tray", "--out", out.to_str().unwrap(), "--demos", &demos, "--seed", "0"]);
        let elapsed = start.elapsed();
        if !ok {
            v.record("end-to-end generation", false, format!("{name} failed: {log}"));
            return;
        }
        let stats: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("generation_stats.json")).unwrap()).unwrap();
        let episodes = r2g_core::dataset::dataset_stats(&out).unwrap().episodes;
        runs.push((archive_digest(&out), stats, elapsed, episodes));
        std::fs::remove_dir_all(&out).unwrap();
    }
    let (da, sa, ta, na) = &runs[0];
    let (db, _, tb, _) = &runs[1];
    let fraction = sa["success_fraction"].as_f64().unwrap();
    let pass = *na == GENERATION_DEMOS
        && fraction >= GENERATION_MIN_SUCCESS
        && da == db
        && (*ta).max(*tb) < GENERATION_BUDGET;
    v.record(
        "end-to-end generation",
        pass,
        format!(
            "{na} demos from {} attempts ({:.1}% success), identical archives: {}, runs {ta:.0?} / {tb:.0?}",
            sa["attempts"],
            100.0 * fraction,
            da == db
        ),
    );
}

fn evaluation(v: &mut Verdicts, dir: &Path) {
    let mut csvs = Vec::new();
    for name in ["eval_a.csv", "eval_b.csv"] {
        let p = dir.join(name);
        let episodes = EVAL_EPISODES.to_string();
        let (ok, log) = r2g(&["eval", "--task", "box_on_tray", "--seeds", EVAL_SEEDS, "--episodes", &episodes, "--csv", p.to_str().unwrap()]);
        if !ok {
            v.record("evaluation harness", false, format!("eval failed: {log}"));
            return;
        }
        csvs.push(std::fs::read_to_string(p).unwrap());
    }
    let rows: Vec<Vec<String>> = csvs[0].lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect();
    let agg = rows.last().unwrap();
    let pass = csvs[0] == csvs[1] && rows.len() == 4 && agg[2] == "aggregate";
    let mean: f64 = agg[4].parse().unwrap();
    let std: f64 = agg[5].parse().unwrap();
    let per_seed: Vec<&str> = rows[..3].iter().map(|r| r[4].as_str()).collect();
    v.record(
        "evaluation harness",
        pass,
        format!(
            "3 seeds x {EVAL_EPISODES}: per-seed {per_seed:?}, {:.1} ± {:.1} %, re-run identical: {}",
            100.0 * mean,
            100.0 * std,
            csvs[0] == csvs[1]
        ),
    );
}

fn success_boundaries(v: &mut Verdicts) {
    let origin = Pose::identity();
    let at = |x: f64| Pose::from_translation(Vec3::new(x, 0.0, 0.0));
    let tilt = |deg: f64| Pose::from_rotation(UnitQuaternion::from_axis_angle(&Vec3::x_axis(), deg.to_radians()));
    let pos = SuccessCriteria::position(0.15);
    let rot = SuccessCriteria::rotation(10.0);
    let geo = SuccessCriteria {
        rotation_metric: RotationMetric::Geodesic,
        ..rot
    };
    let cases = [
        (evaluate_success(&at(0.16), &origin, &pos), false),
        (evaluate_success(&at(0.15), &origin, &pos), true),
        (evaluate_success(&at(0.14), &origin, &pos), true),
        (evaluate_success(&tilt(11.0), &origin, &rot), false),
        (evaluate_success(&tilt(9.0), &origin, &rot), true),
        (evaluate_success(&tilt(11.0), &origin, &geo), false),
        (evaluate_success(&tilt(9.0), &origin, &geo), true),
    ];
    let right = cases.iter().filter(|(got, want)| got == want).count();
    v.record(
        "success-criteria boundaries",
        right == cases.len(),
        format!("{right}/{} boundary cases (16/15/14 cm vs 15 cm, 11/9 deg vs 10 deg)", cases.len()),
    );
}

#[test]
fn primary_acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = Verdicts(Vec::new());
    umeyama_oracle(&mut v);
    ransac_robustness(&mut v);
    bvh_equivalence(&mut v);
    self_alignment(&mut v, &dir.path().join("align"));
    antipodal_audit(&mut v);
    generation(&mut v, dir.path());
    evaluation(&mut v, dir.path());
    success_boundaries(&mut v);
    let failed: Vec<&str> = v.0.iter().filter(|(_, p)| !p).map(|(n, _)| n.as_str()).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
