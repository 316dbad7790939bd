//! Trajectory prediction evaluation on recorded pedestrian datasets.
//!
//! Every run of `t_obs + t_pred` contiguous frames of a pedestrian is one
//! window: the predictor sees the first `t_obs` positions plus everyone
//! else observed over those frames, and its next `t_pred` positions are
//! scored by ADE and FDE.

mod dataset;
mod metrics;
mod predict;

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::geom::Vec2;
use crate::groups::{infer_groups, LinearClassifier, MotionHistory};
use crate::world::AgentId;

pub use dataset::{load_dataset, parse_dataset, Dataset, Track};
pub use metrics::{ade, fde, linear_baseline, linear_fit};
pub use predict::{FlowPredictor, LinearPredictor, Predictor, Scene};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: pedestrian {pedestrian} already has frame {frame} (line {first})")]
    Duplicate {
        line: usize,
        first: usize,
        frame: i64,
        pedestrian: u32,
    },
    #[error("dataset {0} has no rows")]
    EmptyDataset(String),
    #[error("prediction has {pred} points, ground truth {truth}")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("nothing to score")]
    EmptyPrediction,
    #[error("invalid evaluation settings: {0}")]
    Config(String),
    #[error("no track in {0} spans t_obs + t_pred contiguous frames")]
    NoWindows(String),
    #[error("unknown predictor {0:?} (expected linear or flow)")]
    UnknownPredictor(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub t_obs: usize,
    pub t_pred: usize,
    /// Seconds between consecutive frame indices.
    pub frame_period: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            t_obs: 8,
            t_pred: 8,
            frame_period: 0.4,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.t_obs < 2 {
            return Err(EvalError::Config(format!(
                "t_obs must be at least 2, got {}",
                self.t_obs
            )));
        }
        if self.t_pred < 1 {
            return Err(EvalError::Config("t_pred must be at least 1".into()));
        }
        if !(self.frame_period.is_finite() && self.frame_period > 0.0) {
            return Err(EvalError::Config(format!(
                "frame period must be positive, got {}",
                self.frame_period
            )));
        }
        Ok(())
    }
}

pub fn predictor_by_name(name: &str) -> Result<Box<dyn Predictor>, EvalError> {
    match name {
        "linear" => Ok(Box::new(LinearPredictor)),
        "flow" => Ok(Box::new(FlowPredictor::default())),
        other => Err(EvalError::UnknownPredictor(other.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowError {
    pub source: String,
    pub pedestrian: u32,
    /// Raw frame id of the first observed frame.
    pub start_frame: i64,
    pub ade: f64,
    pub fde: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub predictor: String,
    pub t_obs: usize,
    pub t_pred: usize,
    pub windows: usize,
    pub ade: f64,
    pub fde: f64,
    pub pedestrians: usize,
    /// Share of pedestrians judged to walk in a group of two or more.
    pub group_percentage: f64,
    pub per_window: Vec<WindowError>,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dataset: {}", self.dataset);
        let _ = writeln!(out, "predictor: {}", self.predictor);
        let _ = writeln!(out, "t_obs: {}", self.t_obs);
        let _ = writeln!(out, "t_pred: {}", self.t_pred);
        let _ = writeln!(out, "windows: {}", self.windows);
        let _ = writeln!(out, "ade: {:.4}", self.ade);
        let _ = writeln!(out, "fde: {:.4}", self.fde);
        let _ = writeln!(out, "pedestrians: {}", self.pedestrians);
        let _ = writeln!(out, "group_percentage: {:.4}", self.group_percentage);
        out
    }

    pub fn windows_csv(&self) -> String {
        let mut out = String::from("source,pedestrian,start_frame,ade,fde\n");
        for w in &self.per_window {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                w.source, w.pedestrian, w.start_frame, w.ade, w.fde
            );
        }
        out
    }
}

struct Window<'a> {
    data: &'a Dataset,
    track: &'a Track,
    start: usize,
}

fn sorted_tracks(data: &Dataset) -> Vec<&Track> {
    let mut tracks: Vec<&Track> = data.tracks.iter().collect();
    tracks.sort_by_key(|t| t.id);
    tracks
}

fn history_in(track: &Track, first: i64, last: i64, frame_period: f64) -> Option<MotionHistory> {
    let points: Vec<(i64, Vec2)> = track
        .samples
        .iter()
        .copied()
        .filter(|&(f, _)| (first..=last).contains(&f))
        .collect();
    (!points.is_empty()).then(|| MotionHistory::from_positions(AgentId(track.id), &points, frame_period))
}

fn score_window(w: &Window<'_>, predictor: &dyn Predictor, cfg: &EvalConfig) -> WindowError {
    let samples = &w.track.samples[w.start..w.start + cfg.t_obs + cfg.t_pred];
    let observed: Vec<Vec2> = samples[..cfg.t_obs].iter().map(|s| s.1).collect();
    let truth: Vec<Vec2> = samples[cfg.t_obs..].iter().map(|s| s.1).collect();
    let first = samples[0].0;
    let last = samples[cfg.t_obs - 1].0;
    let neighbors: Vec<MotionHistory> = sorted_tracks(w.data)
        .into_iter()
        .filter(|t| t.id != w.track.id)
        .filter_map(|t| history_in(t, first, last, cfg.frame_period))
        .collect();
    let scene = Scene {
        target: AgentId(w.track.id),
        observed: &observed,
        neighbors: &neighbors,
        last_frame: last,
        frame_period: cfg.frame_period,
    };
    let mut pred = predictor.predict(&scene, cfg.t_pred);
    pred.resize(cfg.t_pred, observed[cfg.t_obs - 1]);
    WindowError {
        source: w.data.name.clone(),
        pedestrian: w.track.id,
        start_frame: w.data.first_frame + first * w.data.frame_step,
        ade: ade(&pred, &truth).expect("equal lengths"),
        fde: fde(&pred, &truth).expect("equal lengths"),
    }
}

/// Per pedestrian, the number of observation blocks in which they were
/// grouped and in which they were classified at all.
fn group_votes(data: &Dataset, cfg: &EvalConfig, classifier: &LinearClassifier) -> Vec<(u32, usize, usize)> {
    let tracks = sorted_tracks(data);
    let last = tracks
        .iter()
        .filter_map(|t| t.samples.last())
        .map(|s| s.0)
        .max()
        .unwrap_or(0);
    let block = cfg.t_obs as i64;
    let blocks: Vec<i64> = (0..=last / block).collect();
    let per_block: Vec<(Vec<AgentId>, Vec<AgentId>)> = blocks
        .par_iter()
        .map(|&b| {
            let (first, end) = (b * block, b * block + block - 1);
            let histories: Vec<MotionHistory> = tracks
                .iter()
                .filter_map(|t| history_in(t, first, end, cfg.frame_period))
                .filter(|h| h.samples.len() >= 2)
                .collect();
            let seen = histories.iter().map(|h| h.id).collect();
            let grouped = infer_groups(&histories, classifier, cfg.t_obs)
                .grouped_agents()
                .collect();
            (seen, grouped)
        })
        .collect();
    let mut votes: std::collections::BTreeMap<u32, (usize, usize)> = Default::default();
    for (seen, grouped) in &per_block {
        for id in seen {
            votes.entry(id.0).or_default().1 += 1;
        }
        for id in grouped {
            votes.entry(id.0).or_default().0 += 1;
        }
    }
    votes.into_iter().map(|(id, (g, n))| (id, g, n)).collect()
}

/// Scores one dataset.
pub fn evaluate(
    data: &Dataset,
    predictor: &dyn Predictor,
    cfg: &EvalConfig,
    classifier: &LinearClassifier,
) -> Result<EvalReport, EvalError> {
    evaluate_pooled(&data.name, std::slice::from_ref(data), predictor, cfg, classifier)
}

/// Scores the windows of several files as one dataset. The group share
/// counts each file's pedestrians separately.
pub fn evaluate_pooled(
    name: &str,
    files: &[Dataset],
    predictor: &dyn Predictor,
    cfg: &EvalConfig,
    classifier: &LinearClassifier,
) -> Result<EvalReport, EvalError> {
    cfg.validate()?;
    let span = cfg.t_obs + cfg.t_pred;
    let mut windows: Vec<Window<'_>> = Vec::new();
    for data in files {
        for track in sorted_tracks(data) {
            for start in 0..(track.samples.len() + 1).saturating_sub(span) {
                let s = &track.samples;
                if s[start + span - 1].0 - s[start].0 == span as i64 - 1 {
                    windows.push(Window { data, track, start });
                }
            }
        }
    }
    if windows.is_empty() {
        return Err(EvalError::NoWindows(name.to_string()));
    }
    let per_window: Vec<WindowError> = windows.par_iter().map(|w| score_window(w, predictor, cfg)).collect();
    let n = per_window.len() as f64;
    let ade = per_window.iter().map(|w| w.ade).sum::<f64>() / n;
    let fde = per_window.iter().map(|w| w.fde).sum::<f64>() / n;

    let (mut grouped, mut pedestrians) = (0, 0);
    for data in files {
        for (_, g, seen) in group_votes(data, cfg, classifier) {
            pedestrians += 1;
            if 2 * g > seen {
                grouped += 1;
            }
        }
    }
    Ok(EvalReport {
        dataset: name.to_string(),
        predictor: predictor.name().to_string(),
        t_obs: cfg.t_obs,
        t_pred: cfg.t_pred,
        windows: per_window.len(),
        ade,
        fde,
        pedestrians,
        group_percentage: if pedestrians == 0 {
            0.0
        } else {
            grouped as f64 / pedestrians as f64
        },
        per_window,
    })
}
