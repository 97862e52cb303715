use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::AlignmentError;

/// Keypoints with one descriptor row each, as produced by an external feature
/// extractor.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    keypoints: Vec<(f64, f64)>,
    /// Row-major `n × dim`.
    descriptors: Vec<f32>,
    dim: usize,
}

impl DescriptorSet {
    pub fn new(
        keypoints: Vec<(f64, f64)>,
        descriptors: Vec<f32>,
        dim: usize,
    ) -> Result<Self, AlignmentError> {
        if dim == 0 {
            return Err(AlignmentError::InvalidArgument(
                "descriptor dimension must be positive".into(),
            ));
        }
        if descriptors.len() != keypoints.len() * dim {
            return Err(AlignmentError::InvalidArgument(format!(
                "{} keypoints need {} descriptor values of dim {dim}, got {}",
                keypoints.len(),
                keypoints.len() * dim,
                descriptors.len()
            )));
        }
        for (i, row) in descriptors.chunks_exact(dim).enumerate() {
            let n: f64 = row.iter().map(|&v| (v as f64) * (v as f64)).sum();
            if !(n.is_finite() && n > 0.0) {
                return Err(AlignmentError::InvalidArgument(format!(
                    "descriptor row {i} has zero or non-finite norm"
                )));
            }
        }
        if keypoints.iter().any(|(u, v)| !(u.is_finite() && v.is_finite())) {
            return Err(AlignmentError::InvalidArgument(
                "keypoint coordinates must be finite".into(),
            ));
        }
        Ok(Self {
            keypoints,
            descriptors,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn keypoints(&self) -> &[(f64, f64)] {
        &self.keypoints
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.descriptors[i * self.dim..(i + 1) * self.dim]
    }

    /// Rows scaled to unit L2 norm, in f64.
    pub fn normalized_rows(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| {
                let row: Vec<f64> = self.row(i).iter().map(|&v| v as f64).collect();
                let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                row.into_iter().map(|v| v / n).collect()
            })
            .collect()
    }

    /// Keeps the rows whose index satisfies `keep`.
    pub fn filtered(&self, keep: impl Fn(usize) -> bool) -> DescriptorSet {
        let mut keypoints = Vec::new();
        let mut descriptors = Vec::new();
        for i in (0..self.len()).filter(|&i| keep(i)) {
            keypoints.push(self.keypoints[i]);
            descriptors.extend_from_slice(self.row(i));
        }
        DescriptorSet {
            keypoints,
            descriptors,
            dim: self.dim,
        }
    }

    pub fn to_json(&self) -> String {
        let bytes: Vec<u8> = self
            .descriptors
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        let file = DescriptorFile {
            dim: self.dim,
            keypoints: self.keypoints.iter().map(|&(u, v)| [u, v]).collect(),
            descriptors_b64: B64.encode(bytes),
        };
        serde_json::to_string(&file).expect("descriptor file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, AlignmentError> {
        let file: DescriptorFile =
            serde_json::from_str(text).map_err(|e| AlignmentError::Format(e.to_string()))?;
        let bytes = B64
            .decode(file.descriptors_b64.as_bytes())
            .map_err(|e| AlignmentError::Format(format!("descriptors_b64: {e}")))?;
        if bytes.len() % 4 != 0 {
            return Err(AlignmentError::Format(
                "descriptor payload is not a whole number of float32 values".into(),
            ));
        }
        let values = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(
            file.keypoints.into_iter().map(|[u, v]| (u, v)).collect(),
            values,
            file.dim,
        )
    }

    pub fn load(path: &Path) -> Result<Self, AlignmentError> {
        let text = std::fs::read_to_string(path).map_err(|e| AlignmentError::io(path, e))?;
        Self::from_json(&text).map_err(|e| AlignmentError::Format(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), AlignmentError> {
        std::fs::write(path, self.to_json()).map_err(|e| AlignmentError::io(path, e))
    }
}

#[derive(Serialize, Deserialize)]
struct DescriptorFile {
    dim: usize,
    keypoints: Vec<[f64; 2]>,
    descriptors_b64: String,
}

/// Cosine similarity of two unit-normalized rows.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_shape_and_norm() {
        assert!(DescriptorSet::new(vec![(1.0, 2.0)], vec![1.0, 0.0], 2).is_ok());
        assert!(DescriptorSet::new(vec![(1.0, 2.0)], vec![1.0], 2).is_err());
        assert!(DescriptorSet::new(vec![(1.0, 2.0)], vec![0.0, 0.0], 2).is_err());
        assert!(DescriptorSet::new(vec![], vec![], 0).is_err());
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let d = DescriptorSet::new(
            vec![(3.5, 4.25), (10.0, 0.5)],
            vec![0.1, -0.2, 0.3, 1e-7, 5.0, -6.5],
            3,
        )
        .unwrap();
        let text = d.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["dim"], 3);
        assert!(v["descriptors_b64"].is_string());
        assert_eq!(DescriptorSet::from_json(&text).unwrap(), d);
    }
}
