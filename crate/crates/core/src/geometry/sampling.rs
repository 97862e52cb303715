use super::{GeometryError, Vec3};

/// Golden-angle spiral over the upper hemisphere.
///
/// Point `i` has height `(i + 0.5) / n` and azimuth `i·π(3 − √5)`, so every
/// direction has `0 < z < 1` and the set is fully determined by `n`.
pub fn fibonacci_hemisphere(n: usize) -> Result<Vec<Vec3>, GeometryError> {
    if n == 0 {
        return Err(GeometryError::InvalidArgument(
            "fibonacci_hemisphere needs at least one direction".into(),
        ));
    }
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    Ok((0..n)
        .map(|i| {
            let z = (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = i as f64 * golden_angle;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect())
}

/// Smallest angle between any two directions, radians.
pub fn min_pairwise_angle(dirs: &[Vec3]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..dirs.len() {
        for j in i + 1..dirs.len() {
            let c = dirs[i].dot(&dirs[j]).clamp(-1.0, 1.0);
            best = best.min(c.acos());
        }
    }
    best
}
