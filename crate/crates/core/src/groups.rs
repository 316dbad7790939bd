//! Social group inference from coherent motion.
//!
//! Pairs of tracks are compared on three indicators (speed difference,
//! heading difference, distance), scored by a linear classifier, and the
//! positive pairs are closed transitively into groups.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geom::{angle_diff_abs, heading_of, Vec2};
use crate::world::{AgentId, AgentState, HEADING_SPEED_EPS};

/// Default number of frames the motion indicators are averaged over.
pub const DEFAULT_FEATURE_WINDOW: usize = 8;
/// Default majority-vote window for [`smooth_assignment`].
pub const DEFAULT_SMOOTHING_WINDOW: usize = 5;
/// Normalization of (speed difference, heading difference, distance).
pub const FEATURE_SCALES: [f64; 3] = [0.5, FRAC_PI_4, 2.0];

#[derive(Debug, Error, PartialEq)]
pub enum GroupError {
    #[error("tracks {0} and {1} share no timestamps")]
    NoCommonFrames(AgentId, AgentId),
    #[error("training set needs both classes (positives: {positives}, negatives: {negatives})")]
    SingleClass { positives: usize, negatives: usize },
    #[error("malformed classifier record: {0}")]
    BadRecord(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionSample {
    pub frame: i64,
    pub position: Vec2,
    pub velocity: Vec2,
    pub heading: f64,
}

/// Recent observations of one agent, ordered by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionHistory {
    pub id: AgentId,
    pub samples: Vec<MotionSample>,
}

impl MotionHistory {
    pub fn new(id: AgentId) -> Self {
        Self {
            id,
            samples: Vec::new(),
        }
    }

    /// Appends a snapshot; frames must be strictly increasing.
    pub fn push_state(&mut self, frame: i64, state: &AgentState) {
        debug_assert!(self.samples.last().is_none_or(|s| s.frame < frame));
        self.samples.push(MotionSample {
            frame,
            position: state.position,
            velocity: state.velocity,
            heading: state.heading,
        });
    }

    /// Builds a history from positions alone, estimating velocity by finite
    /// differences (backward, forward for the first sample).
    pub fn from_positions(id: AgentId, points: &[(i64, Vec2)], frame_period: f64) -> Self {
        let mut samples: Vec<MotionSample> = Vec::with_capacity(points.len());
        for (k, &(frame, position)) in points.iter().enumerate() {
            let velocity = match (k.checked_sub(1).map(|p| points[p]), points.get(k + 1)) {
                (Some((f0, p0)), _) => (position - p0) / ((frame - f0) as f64 * frame_period),
                (None, Some(&(f1, p1))) => (p1 - position) / ((f1 - frame) as f64 * frame_period),
                (None, None) => Vec2::ZERO,
            };
            let heading = if velocity.norm() > HEADING_SPEED_EPS {
                heading_of(velocity)
            } else {
                samples.last().map_or(0.0, |s| s.heading)
            };
            samples.push(MotionSample {
                frame,
                position,
                velocity,
                heading,
            });
        }
        Self { id, samples }
    }

    /// Keeps only the most recent `len` samples.
    pub fn truncate_front(&mut self, len: usize) {
        if self.samples.len() > len {
            self.samples.drain(..self.samples.len() - len);
        }
    }
}

/// Coherent-motion indicators for one pair of agents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairFeatures {
    pub d_speed: f64,
    pub d_heading: f64,
    pub distance: f64,
}

impl PairFeatures {
    pub fn new(d_speed: f64, d_heading: f64, distance: f64) -> Self {
        Self {
            d_speed,
            d_heading,
            distance,
        }
    }

    pub fn normalized(&self) -> [f64; 3] {
        [
            self.d_speed / FEATURE_SCALES[0],
            self.d_heading / FEATURE_SCALES[1],
            self.distance / FEATURE_SCALES[2],
        ]
    }
}

fn circular_mean(angles: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = angles.fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    heading_of(Vec2::new(c, s))
}

/// Compares two histories over their last `window` common frames.
pub fn pair_features(a: &MotionHistory, b: &MotionHistory, window: usize) -> Result<PairFeatures, GroupError> {
    let mut common: Vec<(&MotionSample, &MotionSample)> = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.samples.len() && j < b.samples.len() {
        let (fa, fb) = (a.samples[i].frame, b.samples[j].frame);
        if fa == fb {
            common.push((&a.samples[i], &b.samples[j]));
            i += 1;
            j += 1;
        } else if fa < fb {
            i += 1;
        } else {
            j += 1;
        }
    }
    let Some(&(last_a, last_b)) = common.last() else {
        return Err(GroupError::NoCommonFrames(a.id, b.id));
    };
    let recent = &common[common.len().saturating_sub(window.max(1))..];
    let n = recent.len() as f64;
    let speed_a = recent.iter().map(|(s, _)| s.velocity.norm()).sum::<f64>() / n;
    let speed_b = recent.iter().map(|(_, s)| s.velocity.norm()).sum::<f64>() / n;
    let heading_a = circular_mean(recent.iter().map(|(s, _)| s.heading));
    let heading_b = circular_mean(recent.iter().map(|(_, s)| s.heading));
    Ok(PairFeatures {
        d_speed: (speed_a - speed_b).abs(),
        d_heading: angle_diff_abs(heading_a, heading_b),
        distance: last_a.position.distance(last_b.position),
    })
}

/// Linear decision rule over normalized pair features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearClassifier {
    pub weights: [f64; 3],
    pub bias: f64,
}

impl Default for LinearClassifier {
    /// Jointly accepts roughly |Δv| ≤ 0.5 m/s, |Δθ| ≤ 45°, d ≤ 2 m.
    fn default() -> Self {
        Self {
            weights: [-1.0, -1.0, -1.0],
            bias: 2.0,
        }
    }
}

impl LinearClassifier {
    pub fn score(&self, f: &PairFeatures) -> f64 {
        let x = f.normalized();
        self.weights[0] * x[0] + self.weights[1] * x[1] + self.weights[2] * x[2] + self.bias
    }
}

/// Whitespace-separated `w1 w2 w3 bias`.
impl fmt::Display for LinearClassifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.weights;
        write!(f, "{a} {b} {c} {}", self.bias)
    }
}

impl FromStr for LinearClassifier {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let values = s
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| GroupError::BadRecord(format!("not a finite number: {t:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        match values.as_slice() {
            &[a, b, c, bias] => Ok(Self {
                weights: [a, b, c],
                bias,
            }),
            v => Err(GroupError::BadRecord(format!("expected 4 numbers, found {}", v.len()))),
        }
    }
}

/// Same-group decision and its score; exactly zero counts as different groups.
pub fn same_group(f: &PairFeatures, c: &LinearClassifier) -> (bool, f64) {
    let score = c.score(f);
    (score > 0.0, score)
}

/// Partition of agents into social groups.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroupAssignment {
    pub labels: BTreeMap<AgentId, usize>,
    pub groups: Vec<Vec<AgentId>>,
}

impl GroupAssignment {
    /// Canonicalizes arbitrary disjoint member sets: members sorted, groups
    /// numbered by their smallest member id.
    pub fn from_groups(mut groups: Vec<Vec<AgentId>>) -> Self {
        for g in &mut groups {
            g.sort_unstable();
            g.dedup();
        }
        groups.retain(|g| !g.is_empty());
        groups.sort_unstable_by_key(|g| g[0]);
        let labels = groups
            .iter()
            .enumerate()
            .flat_map(|(gid, g)| g.iter().map(move |&id| (id, gid)))
            .collect();
        Self { labels, groups }
    }

    pub fn label(&self, id: AgentId) -> Option<usize> {
        self.labels.get(&id).copied()
    }

    pub fn together(&self, a: AgentId, b: AgentId) -> bool {
        matches!((self.label(a), self.label(b)), (Some(x), Some(y)) if x == y)
    }

    pub fn members(&self, group: usize) -> &[AgentId] {
        self.groups.get(group).map_or(&[], |g| g.as_slice())
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Agents that share a group with at least one other agent.
    pub fn grouped_agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.groups.iter().filter(|g| g.len() > 1).flatten().copied()
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller index becomes root so the result is order independent.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Connected components of the same-group graph. Links mentioning unknown
/// agents are ignored.
pub fn cluster_groups(agents: &[AgentId], links: &[(AgentId, AgentId)]) -> GroupAssignment {
    let ids: Vec<AgentId> = agents.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let index = |id: AgentId| ids.binary_search(&id).ok();
    let mut dsu = DisjointSet::new(ids.len());
    for &(a, b) in links {
        if let (Some(i), Some(j)) = (index(a), index(b)) {
            dsu.union(i, j);
        }
    }
    let mut components: BTreeMap<usize, Vec<AgentId>> = BTreeMap::new();
    for (k, &id) in ids.iter().enumerate() {
        let root = dsu.find(k);
        components.entry(root).or_default().push(id);
    }
    GroupAssignment::from_groups(components.into_values().collect())
}

/// Classifies every unordered pair once and clusters the positives.
pub fn infer_groups(histories: &[MotionHistory], classifier: &LinearClassifier, window: usize) -> GroupAssignment {
    let mut sorted: Vec<&MotionHistory> = histories.iter().collect();
    sorted.sort_by_key(|h| h.id);
    let mut links = Vec::new();
    for (k, a) in sorted.iter().enumerate() {
        for b in &sorted[k + 1..] {
            if let Ok(f) = pair_features(a, b, window) {
                if same_group(&f, classifier).0 {
                    links.push((a.id, b.id));
                }
            }
        }
    }
    let ids: Vec<AgentId> = sorted.iter().map(|h| h.id).collect();
    cluster_groups(&ids, &links)
}

/// Majority vote over the last `window` assignments: a pair stays linked
/// only if it was together in more than half of those frames. The agent set
/// is that of the most recent assignment.
pub fn smooth_assignment(history: &[GroupAssignment], window: usize) -> GroupAssignment {
    let Some(latest) = history.last() else {
        return GroupAssignment::default();
    };
    let frames = &history[history.len().saturating_sub(window.max(1))..];
    let agents: Vec<AgentId> = latest.labels.keys().copied().collect();
    let mut links = Vec::new();
    for (k, &a) in agents.iter().enumerate() {
        for &b in &agents[k + 1..] {
            let votes = frames.iter().filter(|f| f.together(a, b)).count();
            if 2 * votes > frames.len() {
                links.push((a, b));
            }
        }
    }
    cluster_groups(&agents, &links)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// L2 penalty on the weights (the bias is not penalized).
    pub lambda: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            lambda: 1e-3,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

/// Regularized hinge loss of `c` on the labelled set.
pub fn hinge_objective(c: &LinearClassifier, examples: &[(PairFeatures, bool)], lambda: f64) -> f64 {
    let loss: f64 = examples
        .iter()
        .map(|(f, y)| {
            let y = if *y { 1.0 } else { -1.0 };
            (1.0 - y * c.score(f)).max(0.0)
        })
        .sum::<f64>()
        / examples.len() as f64;
    let w2: f64 = c.weights.iter().map(|w| w * w).sum();
    loss + 0.5 * lambda * w2
}

/// Stochastic subgradient descent on the L2-regularized hinge loss.
///
/// Visits examples in a seeded shuffled order each epoch and returns the
/// epoch-end iterate with the lowest objective.
pub fn train_classifier(examples: &[(PairFeatures, bool)], cfg: &TrainConfig) -> Result<LinearClassifier, GroupError> {
    let positives = examples.iter().filter(|(_, y)| *y).count();
    let negatives = examples.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(GroupError::SingleClass { positives, negatives });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut c = LinearClassifier {
        weights: [0.0; 3],
        bias: 0.0,
    };
    let mut best = (hinge_objective(&c, examples, cfg.lambda), c);
    let mut t = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &k in &order {
            let (f, label) = &examples[k];
            let y = if *label { 1.0 } else { -1.0 };
            let eta = cfg.learning_rate / (1.0 + cfg.learning_rate * cfg.lambda * t as f64);
            let x = f.normalized();
            let margin = y * c.score(f);
            for (w, xi) in c.weights.iter_mut().zip(x) {
                *w *= 1.0 - eta * cfg.lambda;
                if margin < 1.0 {
                    *w += eta * y * xi;
                }
            }
            if margin < 1.0 {
                c.bias += eta * y;
            }
            t += 1;
        }
        let obj = hinge_objective(&c, examples, cfg.lambda);
        if obj < best.0 {
            best = (obj, c);
        }
    }
    Ok(best.1)
}
