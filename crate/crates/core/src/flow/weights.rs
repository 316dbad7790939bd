//! Text weight files for the encoder and an optional linear decoder.
//!
//! Layout: a header line `D K`, then whitespace-separated reals in
//! row-major order:
//!
//! 1. encoder recurrent matrix, D×D
//! 2. encoder input matrix, D×2
//! 3. decoder matrix, 2×(2D+K), mapping the embedding to a waypoint offset
//!    in meters (x row first)
//!
//! Any whitespace (including newlines) may separate the numbers.

use std::fmt::Write as _;

use super::encoder::HistoryEncoder;
use super::pooling::PooledEmbedding;
use super::PlannerError;
use crate::geom::Vec2;

/// Linear map from the concatenated embedding to a waypoint offset.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDecoder {
    input_len: usize,
    /// 2×input_len, row-major.
    weights: Vec<f64>,
}

impl LinearDecoder {
    pub fn new(input_len: usize, weights: Vec<f64>) -> Result<Self, PlannerError> {
        if weights.len() != 2 * input_len {
            return Err(PlannerError::WeightCount {
                expected: 2 * input_len,
                found: weights.len(),
            });
        }
        Ok(Self { input_len, weights })
    }

    pub fn zeros(input_len: usize) -> Self {
        Self {
            input_len,
            weights: vec![0.0; 2 * input_len],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn decode(&self, e: &PooledEmbedding) -> Result<Vec2, PlannerError> {
        if e.concatenated.len() != self.input_len {
            return Err(PlannerError::EmbeddingLength {
                expected: self.input_len,
                found: e.concatenated.len(),
            });
        }
        let (rx, ry) = self.weights.split_at(self.input_len);
        let dot = |row: &[f64]| row.iter().zip(&e.concatenated).map(|(w, x)| w * x).sum::<f64>();
        Ok(Vec2::new(dot(rx), dot(ry)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerWeights {
    pub encoder: HistoryEncoder,
    pub decoder: LinearDecoder,
    pub noise_dim: usize,
}

impl PlannerWeights {
    pub fn parse(text: &str, history_len: usize) -> Result<Self, PlannerError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| PlannerError::WeightFormat("empty file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| PlannerError::WeightFormat(format!("bad header field {t:?}")))
            })
            .collect::<Result<_, _>>()?;
        let [d, k] = dims[..] else {
            return Err(PlannerError::WeightFormat(format!(
                "header must be \"D K\", got {header:?}"
            )));
        };
        if d == 0 {
            return Err(PlannerError::ZeroDimension);
        }
        let values: Vec<f64> = lines
            .flat_map(str::split_whitespace)
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| PlannerError::WeightFormat(format!("not a finite number: {t:?}")))
            })
            .collect::<Result<_, _>>()?;
        let input_len = 2 * d + k;
        let expected = d * d + 2 * d + 2 * input_len;
        if values.len() != expected {
            return Err(PlannerError::WeightCount {
                expected,
                found: values.len(),
            });
        }
        let (rec, rest) = values.split_at(d * d);
        let (inp, dec) = rest.split_at(2 * d);
        Ok(Self {
            encoder: HistoryEncoder::from_weights(d, history_len, rec.to_vec(), inp.to_vec())?,
            decoder: LinearDecoder::new(input_len, dec.to_vec())?,
            noise_dim: k,
        })
    }

    pub fn to_text(&self) -> String {
        let d = self.encoder.dim();
        let mut out = format!("{d} {}\n", self.noise_dim);
        let write_rows = |out: &mut String, values: &[f64], cols: usize| {
            for row in values.chunks(cols) {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        };
        write_rows(&mut out, self.encoder.recurrent_weights(), d);
        write_rows(&mut out, self.encoder.input_weights(), 2);
        write_rows(&mut out, self.decoder.weights(), 2 * d + self.noise_dim);
        out
    }
}
