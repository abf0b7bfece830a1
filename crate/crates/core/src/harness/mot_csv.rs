//! MOT-Challenge CSV interchange: `frame,id,x,y,w,h,conf,class,visibility`
//! with 1-based frames and `id = -1` for detections.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotKind {
    Gt,
    Det,
    Result,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotRecord {
    /// 1-based frame number.
    pub frame: usize,
    pub id: i64,
    pub bbox: BBox,
    pub confidence: f64,
    pub class_id: i64,
    pub visibility: f64,
}

const MIN_FIELDS: usize = 6;

pub fn parse_mot_csv(path: &Path, kind: MotKind) -> Result<Vec<MotRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mot_str(&text, kind, path)
}

/// Parse MOT text; `origin` is only used in error messages.
pub fn parse_mot_str(text: &str, kind: MotKind, origin: &Path) -> Result<Vec<MotRecord>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < MIN_FIELDS {
            return Err(err(format!(
                "expected at least {MIN_FIELDS} fields, found {}",
                fields.len()
            )));
        }
        let num = |idx: usize| -> Result<f64> {
            let v: f64 = fields[idx]
                .parse()
                .map_err(|_| err(format!("field {} is not numeric: {:?}", idx + 1, fields[idx])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(format!("field {} is not finite", idx + 1)))
            }
        };
        let opt = |idx: usize, default: f64| if idx < fields.len() { num(idx) } else { Ok(default) };
        let integer = |v: f64, what: &str| {
            if v.fract() == 0.0 {
                Ok(v as i64)
            } else {
                Err(err(format!("{what} must be an integer, found {v}")))
            }
        };

        let frame = integer(num(0)?, "frame")?;
        if frame < 1 {
            return Err(err(format!("frame numbers are 1-based, found {frame}")));
        }
        let id = integer(num(1)?, "id")?;
        if kind != MotKind::Det && id < 0 {
            return Err(err(format!("track id must be non-negative, found {id}")));
        }
        let bbox = BBox::new(num(2)?, num(3)?, num(4)?, num(5)?);
        if !(bbox.w > 0.0 && bbox.h > 0.0) {
            return Err(err("box width and height must be positive".into()));
        }
        out.push(MotRecord {
            frame: frame as usize,
            id,
            bbox,
            confidence: opt(6, 1.0)?,
            class_id: integer(opt(7, -1.0)?, "class")?,
            visibility: opt(8, -1.0)?,
        });
    }
    Ok(out)
}

pub fn format_mot_csv(records: &[MotRecord]) -> String {
    let mut s = String::new();
    for r in records {
        let b = r.bbox;
        let _ = writeln!(
            s,
            "{},{},{:.2},{:.2},{:.2},{:.2},{},{},{}",
            r.frame, r.id, b.x, b.y, b.w, b.h, r.confidence, r.class_id, r.visibility
        );
    }
    s
}

pub fn write_mot_csv(path: &Path, records: &[MotRecord]) -> Result<()> {
    std::fs::write(path, format_mot_csv(records)).map_err(|e| Error::io(path, e))
}
