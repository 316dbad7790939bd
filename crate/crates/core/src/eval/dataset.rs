//! Loader for whitespace-separated `frame_id ped_id x y` files.
//!
//! Frame ids are mapped onto a uniform index grid: the step is the greatest
//! common divisor of the gaps between distinct frame ids, so a file sampled
//! every 10 raw frames yields consecutive indices.

use std::collections::BTreeMap;
use std::path::Path;

use crate::geom::Vec2;

use super::EvalError;

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u32,
    /// `(frame index, position)`, strictly increasing in frame.
    pub samples: Vec<(i64, Vec2)>,
}

impl Track {
    pub fn position_at(&self, frame: i64) -> Option<Vec2> {
        self.samples
            .binary_search_by_key(&frame, |s| s.0)
            .ok()
            .map(|k| self.samples[k].1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// Raw frame id of index 0 and raw ids per index step.
    pub first_frame: i64,
    pub frame_step: i64,
    /// Ordered by pedestrian id.
    pub tracks: Vec<Track>,
}

pub fn load_dataset(path: &Path) -> Result<Dataset, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let name = path
        .file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    parse_dataset(&name, &text)
}

fn integral(token: &str, what: &str, line: usize) -> Result<i64, EvalError> {
    let v: f64 = token.parse().map_err(|_| EvalError::Parse {
        line,
        message: format!("{what} is not a number: {token:?}"),
    })?;
    if !v.is_finite() || v.fract() != 0.0 || v.abs() > 1e15 {
        return Err(EvalError::Parse {
            line,
            message: format!("{what} is not an integer: {token:?}"),
        });
    }
    Ok(v as i64)
}

fn coordinate(token: &str, line: usize) -> Result<f64, EvalError> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| EvalError::Parse {
            line,
            message: format!("coordinate is not a finite number: {token:?}"),
        })
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Parses dataset text. Blank lines and lines starting with `#` are skipped.
pub fn parse_dataset(name: &str, text: &str) -> Result<Dataset, EvalError> {
    let mut rows: BTreeMap<(u32, i64), (Vec2, usize)> = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(EvalError::Parse {
                line,
                message: format!("expected 4 fields (frame_id ped_id x y), found {}", fields.len()),
            });
        }
        let frame = integral(fields[0], "frame id", line)?;
        let ped = integral(fields[1], "pedestrian id", line)?;
        let ped = u32::try_from(ped).map_err(|_| EvalError::Parse {
            line,
            message: format!("pedestrian id out of range: {ped}"),
        })?;
        let p = Vec2::new(coordinate(fields[2], line)?, coordinate(fields[3], line)?);
        if let Some((_, first)) = rows.insert((ped, frame), (p, line)) {
            return Err(EvalError::Duplicate {
                line,
                first,
                frame,
                pedestrian: ped,
            });
        }
    }
    if rows.is_empty() {
        return Err(EvalError::EmptyDataset(name.to_string()));
    }

    let mut frames: Vec<i64> = rows.keys().map(|&(_, f)| f).collect();
    frames.sort_unstable();
    frames.dedup();
    let first_frame = frames[0];
    let frame_step = frames.windows(2).fold(0, |g, w| gcd(g, w[1] - w[0])).max(1);

    let mut tracks: Vec<Track> = Vec::new();
    for (&(ped, frame), &(p, _)) in &rows {
        let index = (frame - first_frame) / frame_step;
        match tracks.last_mut() {
            Some(t) if t.id == ped => t.samples.push((index, p)),
            _ => tracks.push(Track {
                id: ped,
                samples: vec![(index, p)],
            }),
        }
    }
    Ok(Dataset {
        name: name.to_string(),
        first_frame,
        frame_step,
        tracks,
    })
}
