//! Sources of 2-D detections: replay files and a remote inference endpoint.
//!
//! Records are JSON objects, one per line:
//!
//! ```text
//! {"frame":3,"label":"chair","score":0.91,"bbox":[100,120,60,140]}
//! ```
//!
//! `bbox` is `[x, y, w, h]` in RGB pixels. A remote endpoint receives the RGB
//! frame as a PNG request body with an `X-Frame-Index` header and answers
//! with records in the same format.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use image::ImageEncoder;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::DetectorError;
use crate::fusion::{BBox, Detection2D};
use crate::geometry::RgbFrame;

pub const FRAME_HEADER: &str = "X-Frame-Index";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub frame: u64,
    pub label: String,
    pub score: f64,
    pub bbox: [i64; 4],
}

impl DetectionRecord {
    pub fn from_detection(d: &Detection2D) -> Self {
        Self {
            frame: d.frame_index,
            label: d.label.clone(),
            score: d.score,
            bbox: [d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h],
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serialization cannot fail")
    }

    fn into_detection(self) -> Detection2D {
        let [x, y, w, h] = self.bbox;
        Detection2D {
            label: self.label,
            score: self.score,
            bbox: BBox { x, y, w, h },
            frame_index: self.frame,
        }
    }
}

pub type DetectionMap = BTreeMap<u64, Vec<Detection2D>>;

#[derive(Debug, Clone, PartialEq)]
pub enum DetectionSource {
    Replay(PathBuf),
    Remote {
        endpoint: String,
        timeout_ms: u64,
        retries: u32,
    },
}

impl DetectionSource {
    pub fn validate(&self) -> Result<(), DetectorError> {
        match self {
            Self::Replay(_) => Ok(()),
            Self::Remote { timeout_ms, .. } if *timeout_ms == 0 => {
                Err(DetectorError::InvalidSource("timeout must be > 0".into()))
            }
            Self::Remote { endpoint, .. } if endpoint.is_empty() => {
                Err(DetectorError::InvalidSource("empty endpoint".into()))
            }
            Self::Remote { .. } => Ok(()),
        }
    }
}

/// Parses detection records, grouping them by frame. Scores are clamped to
/// `[0, 1]` and boxes clipped to the `width`×`height` RGB frame; boxes left
/// empty by clipping are dropped.
pub fn parse_detections(
    reader: impl BufRead,
    width: usize,
    height: usize,
) -> Result<DetectionMap, DetectorError> {
    let mut map = DetectionMap::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| DetectorError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut rec: DetectionRecord =
            serde_json::from_str(trimmed).map_err(|e| DetectorError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        if !rec.score.is_finite() || rec.bbox[2] < 0 || rec.bbox[3] < 0 {
            return Err(DetectorError::Malformed {
                line: line_no,
                message: "score must be finite and bbox extents non-negative".into(),
            });
        }
        rec.score = rec.score.clamp(0.0, 1.0);
        let mut det = rec.into_detection();
        match det.bbox.clip(width, height) {
            Some(b) if b == det.bbox => {}
            Some(b) => {
                warn!("line {line_no}: bbox {:?} clipped to {:?}", det.bbox, b);
                det.bbox = b;
            }
            None => {
                warn!("line {line_no}: bbox {:?} lies outside the frame, dropped", det.bbox);
                continue;
            }
        }
        map.entry(det.frame_index).or_default().push(det);
    }
    Ok(map)
}

pub fn load_detections(path: &Path, width: usize, height: usize) -> Result<DetectionMap, DetectorError> {
    let file = std::fs::File::open(path).map_err(|source| DetectorError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_detections(BufReader::new(file), width, height)
}

/// Strict parse of a detector reply: any out-of-range score or frame
/// mismatch rejects the whole reply.
pub fn parse_response(body: &str, frame_index: u64) -> Result<Vec<Detection2D>, DetectorError> {
    let mut out = Vec::new();
    for line in body.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let rec: DetectionRecord =
            serde_json::from_str(line).map_err(|e| DetectorError::MalformedResponse(e.to_string()))?;
        if !(0.0..=1.0).contains(&rec.score) {
            return Err(DetectorError::MalformedResponse(format!(
                "score {} outside [0, 1]",
                rec.score
            )));
        }
        if rec.frame != frame_index {
            return Err(DetectorError::MalformedResponse(format!(
                "reply tagged frame {} for request {}",
                rec.frame, frame_index
            )));
        }
        if rec.bbox[2] < 0 || rec.bbox[3] < 0 {
            return Err(DetectorError::MalformedResponse("negative bbox extent".into()));
        }
        out.push(rec.into_detection());
    }
    Ok(out)
}

pub fn encode_png(rgb: &RgbFrame) -> Result<Vec<u8>, DetectorError> {
    let mut buf = Vec::new();
    image::codecs::png::PngEncoder::new(&mut buf)
        .write_image(
            &rgb.data,
            rgb.width as u32,
            rgb.height as u32,
            image::ExtendedColorType::Rgb8,
        )
        .map_err(|e| DetectorError::Encode(e.to_string()))?;
    Ok(buf)
}


/// One request per attempt; timeouts and transport failures are retried up
/// to `retries` times, malformed replies are not.
#[cfg(feature = "remote")]
pub fn query_remote_detector(
    rgb: &RgbFrame,
    source: &DetectionSource,
) -> Result<Vec<Detection2D>, DetectorError> {
    use std::time::Duration;

    source.validate()?;
    let DetectionSource::Remote {
        endpoint,
        timeout_ms,
        retries,
    } = source
    else {
        return Err(DetectorError::NotRemote);
    };
    let body = encode_png(rgb)?;
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_millis(*timeout_ms)))
        .http_status_as_error(false)
        .build()
        .into();

    let attempts = retries + 1;
    let mut last = DetectorError::Transport("no attempt made".into());
    for attempt in 1..=attempts {
        let sent = agent
            .post(endpoint.as_str())
            .header(FRAME_HEADER, rgb.frame_index.to_string())
            .content_type("image/png")
            .send(&body[..]);
        let text = sent.and_then(|resp| {
            let status = resp.status().as_u16();
            if status != 200 {
                return Err(ureq::Error::StatusCode(status));
            }
            resp.into_body().read_to_string()
        });
        match text {
            Ok(text) => return parse_response(&text, rgb.frame_index),
            Err(e) => {
                last = classify(e, attempt);
                warn!("detector attempt {attempt}/{attempts} failed: {last}");
            }
        }
    }
    Err(last)
}

#[cfg(feature = "remote")]
fn classify(e: ureq::Error, attempts: u32) -> DetectorError {
    use std::io::ErrorKind;
    match e {
        ureq::Error::Timeout(_) => DetectorError::Timeout { attempts },
        ureq::Error::Io(io) if matches!(io.kind(), ErrorKind::TimedOut | ErrorKind::WouldBlock) => {
            DetectorError::Timeout { attempts }
        }
        other => DetectorError::Transport(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_one_record() {
        let text = r#"{"frame":3,"label":"chair","score":0.91,"bbox":[100,120,60,140]}"#;
        let map = parse_detections(text.as_bytes(), 640, 480).unwrap();
        assert_eq!(map.len(), 1);
        let d = &map[&3][0];
        assert_eq!(d.label, "chair");
        assert_eq!(d.score, 0.91);
        assert_eq!(d.bbox, BBox { x: 100, y: 120, w: 60, h: 140 });
    }

    #[test]
    fn empty_input_is_empty_map() {
        assert!(parse_detections("".as_bytes(), 640, 480).unwrap().is_empty());
        assert!(parse_detections("\n\n".as_bytes(), 640, 480).unwrap().is_empty());
    }

    #[test]
    fn clips_and_clamps() {
        let text = r#"{"frame":0,"label":"door","score":1.3,"bbox":[600,400,100,100]}"#;
        let map = parse_detections(text.as_bytes(), 640, 480).unwrap();
        let d = &map[&0][0];
        assert_eq!(d.bbox, BBox { x: 600, y: 400, w: 40, h: 80 });
        assert_eq!(d.score, 1.0);
    }

    #[test]
    fn malformed_line_reports_number() {
        let text = "{\"frame\":0,\"label\":\"a\",\"score\":0.5,\"bbox\":[0,0,1,1]}\nnot json\n";
        match parse_detections(text.as_bytes(), 640, 480) {
            Err(DetectorError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn record_line_format() {
        let r = DetectionRecord {
            frame: 3,
            label: "chair".into(),
            score: 0.91,
            bbox: [100, 120, 60, 140],
        };
        assert_eq!(
            r.to_line(),
            r#"{"frame":3,"label":"chair","score":0.91,"bbox":[100,120,60,140]}"#
        );
    }

    #[test]
    fn response_validation() {
        let ok = r#"{"frame":4,"label":"person","score":0.8,"bbox":[1,2,3,4]}"#;
        assert_eq!(parse_response(ok, 4).unwrap()[0].frame_index, 4);
        let bad = r#"{"frame":4,"label":"person","score":1.7,"bbox":[1,2,3,4]}"#;
        assert!(matches!(parse_response(bad, 4), Err(DetectorError::MalformedResponse(_))));
        assert!(matches!(parse_response(ok, 5), Err(DetectorError::MalformedResponse(_))));
    }

    #[test]
    fn source_validation() {
        let s = DetectionSource::Remote {
            endpoint: "http://127.0.0.1:1/".into(),
            timeout_ms: 0,
            retries: 0,
        };
        assert!(s.validate().is_err());
    }
}
