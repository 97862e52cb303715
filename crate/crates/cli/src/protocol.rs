//! Newline-delimited JSON stepping protocol.
//!
//! ```text
//! {"cmd":"reset","seed":7}                        -> {"obs":{...}}
//! {"cmd":"step","ee_pose":[x,y,z,qw,qx,qy,qz],"gripper":1.0}
//!                                                 -> {"obs":{...},"done":false,"success":false}
//! {"cmd":"close"}                                 -> {"closed":true}
//! ```
//!
//! `obs` is `{"cloud_b64": base64 of little-endian f32 xyz triples,
//! "ee_pose": [7], "gripper": f}`. Bad requests get `{"error": "...",
//! "episode": n}` and the session continues.

use std::io::{self, BufRead, Write};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use r2g_core::demogen::{Env, Observation};
use r2g_core::Pose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case")]
pub enum Request {
    Reset { seed: u64 },
    Step { ee_pose: [f64; 7], gripper: f64 },
    Close,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireObservation {
    pub cloud_b64: String,
    pub ee_pose: [f64; 7],
    pub gripper: f64,
}

impl WireObservation {
    pub fn new(obs: &Observation) -> Self {
        Self {
            cloud_b64: encode_cloud(&obs.cloud),
            ee_pose: obs.ee_pose.to_array(),
            gripper: obs.gripper,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Response {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs: Option<WireObservation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub done: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Episode the error belongs to, counted from 0 by resets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode: Option<usize>,
}

pub fn encode_cloud(cloud: &[[f32; 3]]) -> String {
    let bytes: Vec<u8> = cloud.iter().flatten().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

pub fn decode_cloud(text: &str) -> Result<Vec<[f32; 3]>, String> {
    let bytes = STANDARD.decode(text).map_err(|e| e.to_string())?;
    if bytes.len() % 12 != 0 {
        return Err(format!("{} bytes is not a whole number of points", bytes.len()));
    }
    Ok(bytes
        .chunks_exact(12)
        .map(|c| std::array::from_fn(|k| f32::from_le_bytes(c[4 * k..4 * k + 4].try_into().expect("4 bytes"))))
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SessionSummary {
    pub episodes: usize,
    pub steps: usize,
    pub errors: usize,
}

/// Answers requests until `close` or end of input.
pub fn serve(env: &mut Env, input: impl BufRead, mut output: impl Write) -> io::Result<SessionSummary> {
    let mut summary = SessionSummary::default();
    let mut episode: Option<usize> = None;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fail = |msg: String, episode: Option<usize>| Response {
            error: Some(msg),
            episode,
            ..Response::default()
        };
        let response = match serde_json::from_str::<Request>(&line) {
            Err(e) => fail(format!("bad request: {e}"), episode),
            Ok(Request::Close) => {
                write_line(&mut output, &Response { closed: Some(true), ..Response::default() })?;
                return Ok(summary);
            }
            Ok(Request::Reset { seed }) => {
                let next = episode.map_or(0, |e| e + 1);
                episode = Some(next);
                summary.episodes += 1;
                match env.reset(seed) {
                    Ok(obs) => Response {
                        obs: Some(WireObservation::new(&obs)),
                        ..Response::default()
                    },
                    Err(e) => fail(e.to_string(), Some(next)),
                }
            }
            Ok(Request::Step { ee_pose, gripper }) => match Pose::from_array(&ee_pose) {
                None => fail("ee_pose must be finite with a nonzero quaternion".into(), episode),
                Some(pose) => match env.step(&pose, gripper) {
                    Ok(r) => {
                        summary.steps += 1;
                        Response {
                            obs: Some(WireObservation::new(&r.obs)),
                            done: Some(r.done),
                            success: Some(r.success),
                            ..Response::default()
                        }
                    }
                    Err(e) => fail(e.to_string(), episode),
                },
            },
        };
        if response.error.is_some() {
            summary.errors += 1;
        }
        write_line(&mut output, &response)?;
    }
    Ok(summary)
}

fn write_line(out: &mut impl Write, r: &Response) -> io::Result<()> {
    serde_json::to_writer(&mut *out, r)?;
    out.write_all(b"\n")?;
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cloud_roundtrip() {
        let c = vec![[1.0f32, -2.5, 3.25], [f32::MIN_POSITIVE, 0.0, -0.0]];
        let back = decode_cloud(&encode_cloud(&c)).unwrap();
        assert_eq!(
            back.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>(),
            c.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert!(decode_cloud("AAAA").is_err());
    }

    #[test]
    fn requests_parse() {
        let r: Request = serde_json::from_str(r#"{"cmd":"reset","seed":3}"#).unwrap();
        assert_eq!(r, Request::Reset { seed: 3 });
        let r: Request = serde_json::from_str(r#"{"cmd":"step","ee_pose":[0,0,0,1,0,0,0],"gripper":1}"#).unwrap();
        assert!(matches!(r, Request::Step { gripper, .. } if gripper == 1.0));
        assert!(serde_json::from_str::<Request>(r#"{"cmd":"jump"}"#).is_err());
    }
}
