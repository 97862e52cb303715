use std::io::{Read, Write};
use std::path::Path;

use super::GeometryError;

/// Magic bytes of the depth interchange format.
pub const DEPTH_MAGIC: &[u8; 8] = b"R2GDEPTH";

/// Row-major depth in meters; NaN where nothing was hit.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl DepthImage {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![f32::NAN; width as usize * height as usize],
        }
    }

    pub fn from_data(width: u32, height: u32, data: Vec<f32>) -> Result<Self, GeometryError> {
        if data.len() != width as usize * height as usize {
            return Err(GeometryError::InvalidArgument(format!(
                "depth buffer has {} values, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(i) = data.iter().position(|v| v.is_finite() && *v <= 0.0) {
            return Err(GeometryError::InvalidArgument(format!(
                "depth value at index {i} is not positive"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Finite depth at pixel `(i, j)`.
    pub fn get(&self, i: u32, j: u32) -> Option<f32> {
        if i >= self.width || j >= self.height {
            return None;
        }
        let v = self.data[j as usize * self.width as usize + i as usize];
        v.is_finite().then_some(v)
    }

    /// Depth of the pixel containing the continuous coordinate `(u, v)`.
    pub fn sample(&self, u: f64, v: f64) -> Option<f32> {
        if !(u >= 0.0 && v >= 0.0) {
            return None;
        }
        self.get(u.floor() as u32, v.floor() as u32)
    }

    /// Non-positive values are stored as misses.
    pub fn set(&mut self, i: u32, j: u32, z: f32) {
        let idx = j as usize * self.width as usize + i as usize;
        self.data[idx] = if z > 0.0 { z } else { f32::NAN };
    }

    pub fn finite_count(&self) -> usize {
        self.data.iter().filter(|v| v.is_finite()).count()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.data.len());
        out.extend_from_slice(DEPTH_MAGIC);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GeometryError> {
        let malformed = |msg: String| GeometryError::MalformedDepth(msg);
        if bytes.len() < 16 || &bytes[..8] != DEPTH_MAGIC {
            return Err(malformed("missing R2GDEPTH header".into()));
        }
        let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        let height = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
        let n = width as usize * height as usize;
        let body = &bytes[16..];
        if body.len() != 4 * n {
            return Err(malformed(format!(
                "expected {} payload bytes for {width}x{height}, found {}",
                4 * n,
                body.len()
            )));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        DepthImage::from_data(width, height, data)
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&self.to_bytes())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, GeometryError> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)
            .map_err(|e| GeometryError::MalformedDepth(e.to_string()))?;
        Self::from_bytes(&buf)
    }

    pub fn save(&self, path: &Path) -> Result<(), GeometryError> {
        std::fs::write(path, self.to_bytes()).map_err(|e| GeometryError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, GeometryError> {
        let bytes = std::fs::read(path).map_err(|e| GeometryError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bytes_roundtrip_and_layout() {
        let mut d = DepthImage::empty(3, 2);
        d.set(0, 0, 1.25);
        d.set(2, 1, 0.5);
        let bytes = d.to_bytes();
        assert_eq!(bytes.len(), 16 + 4 * 6);
        assert_eq!(&bytes[..8], b"R2GDEPTH");
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(&bytes[16..20], &1.25f32.to_le_bytes());
        let back = DepthImage::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.get(2, 1), Some(0.5));
        assert_eq!(back.get(1, 1), None);
    }

    #[test]
    fn rejects_truncated_and_bad_values() {
        let d = DepthImage::empty(4, 4);
        let bytes = d.to_bytes();
        assert!(DepthImage::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(DepthImage::from_bytes(b"NOTDEPTH00000000").is_err());
        assert!(DepthImage::from_data(1, 1, vec![-1.0]).is_err());
    }
}
