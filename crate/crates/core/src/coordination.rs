//! Following relations, coordination intervals and following networks.
//!
//! Similarity between two heading series is the mean circular agreement
//! `1 - mean(dist_dir) / 180` over their overlap. A follower lags its leader:
//! `follower[t + delay] ~ leader[t]` for the best nonnegative delay.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirmath::{dist_dir, DirectionDeg};
use crate::error::{Error, Result};
use crate::trajectory::TrajectorySet;

/// Similarities closer than this count as tied when picking the delay.
pub const SIM_TIE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FollowResult {
    pub similarity: f64,
    pub delay: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FollowRelation {
    None,
    Follows,
    StrictlyFollows,
}

/// Mean circular similarity of `leader[t]` against `follower[t + shift]`.
fn shifted_similarity(leader: &[DirectionDeg], follower: &[DirectionDeg], shift: usize) -> f64 {
    let n = leader.len() - shift;
    let total: f64 = leader[..n]
        .iter()
        .zip(&follower[shift..])
        .map(|(a, b)| dist_dir(*a, *b))
        .sum();
    1.0 - total / (n as f64 * 180.0)
}

/// Best shifted similarity of `follower` against `leader` over shifts
/// `0..=max_shift`, with the smallest maximizing shift as the delay.
pub fn sim_foll(leader: &[DirectionDeg], follower: &[DirectionDeg], max_shift: usize) -> Result<FollowResult> {
    if leader.len() != follower.len() {
        return Err(Error::InvalidParam(format!(
            "series lengths differ ({} vs {})",
            leader.len(),
            follower.len()
        )));
    }
    if max_shift == 0 || leader.len() <= max_shift {
        return Err(Error::TooShort(format!(
            "length {} must exceed max shift {max_shift} >= 1",
            leader.len()
        )));
    }
    let sims: Vec<f64> = (0..=max_shift)
        .map(|s| shifted_similarity(leader, follower, s))
        .collect();
    let best = sims.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let delay = sims
        .iter()
        .position(|&s| s >= best - SIM_TIE_TOL)
        .expect("at least one shift");
    Ok(FollowResult {
        similarity: best,
        delay,
    })
}

/// How `follower` relates to `leader` at threshold `sigma`.
pub fn following_relation(
    leader: &[DirectionDeg],
    follower: &[DirectionDeg],
    sigma: f64,
    max_shift: usize,
) -> Result<FollowRelation> {
    let r = sim_foll(leader, follower, max_shift)?;
    Ok(classify(r, sigma))
}

fn classify(r: FollowResult, sigma: f64) -> FollowRelation {
    if r.similarity < sigma {
        FollowRelation::None
    } else if r.delay > 0 {
        FollowRelation::StrictlyFollows
    } else {
        FollowRelation::Follows
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinationInterval {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub sigma: f64,
}

impl CoordinationInterval {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub sigma: f64,
    /// Largest delay considered between two series.
    pub omega: usize,
    /// Event window length.
    pub window: usize,
    /// Percentile (0-100) of per-window pair densities used as the
    /// candidate-window threshold.
    pub density_percentile: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            sigma: 0.9,
            omega: 60,
            window: 240,
            density_percentile: 50.0,
        }
    }
}

/// Window starts covering `0..len` with the given stride; a final window is
/// aligned to the end when the stride leaves a tail uncovered.
pub(crate) fn window_starts(len: usize, window: usize, stride: usize) -> Vec<usize> {
    if window > len {
        return Vec::new();
    }
    let stride = stride.max(1);
    let mut starts: Vec<usize> = (0..=len - window).step_by(stride).collect();
    if *starts.last().unwrap() + window < len {
        starts.push(len - window);
    }
    starts
}

/// Either member of the pair follows the other over `range`.
fn pair_coordinated(
    series: &[Vec<DirectionDeg>],
    i: usize,
    j: usize,
    range: std::ops::Range<usize>,
    sigma: f64,
    max_shift: usize,
) -> bool {
    let a = &series[i][range.clone()];
    let b = &series[j][range];
    let fwd = sim_foll(a, b, max_shift).expect("validated lengths");
    if fwd.similarity >= sigma {
        return true;
    }
    sim_foll(b, a, max_shift).expect("validated lengths").similarity >= sigma
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Every unordered pair is in a following relation over `range`.
pub fn interval_is_coordinated(
    series: &[Vec<DirectionDeg>],
    range: std::ops::Range<usize>,
    sigma: f64,
    omega: usize,
) -> bool {
    let shift = omega.min(range.len().saturating_sub(1));
    if shift == 0 {
        return false;
    }
    all_pairs(series.len())
        .par_iter()
        .all(|&(i, j)| pair_coordinated(series, i, j, range.clone(), sigma, shift))
}

/// Linear-interpolated percentile of `values` (0-100).
pub(crate) fn percentile(values: &[f64], pct: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = (pct.clamp(0.0, 100.0) / 100.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

fn check_series(series: &[Vec<DirectionDeg>], min_len: usize) -> Result<usize> {
    let len = series.first().map_or(0, Vec::len);
    if series.iter().any(|s| s.len() != len) {
        return Err(Error::InvalidParam("heading series of unequal length".into()));
    }
    if len < min_len {
        return Err(Error::TooShort(format!("{len} steps, need at least {min_len}")));
    }
    Ok(len)
}

/// Detects coordination intervals.
///
/// Windows of `cfg.window` steps slide with half-window stride. A window is a
/// candidate when its fraction of coordinated pairs is positive and at least
/// the configured percentile of all window densities. Runs of overlapping
/// candidates are merged, and an interval is emitted only when every pair of
/// agents is in a following relation across the whole interval; runs that fail
/// as a whole are split greedily into the longest passing pieces. Interval
/// starts are then refined by bisection.
pub fn detect_coordination_intervals(
    series: &[Vec<DirectionDeg>],
    cfg: &DetectConfig,
) -> Result<Vec<CoordinationInterval>> {
    if series.len() < 2 {
        return Err(Error::InvalidParam("need at least two agents".into()));
    }
    if cfg.omega == 0 || cfg.window <= cfg.omega {
        return Err(Error::InvalidParam(format!(
            "window ({}) must exceed omega ({}) >= 1",
            cfg.window, cfg.omega
        )));
    }
    let len = check_series(series, cfg.window)?;
    let starts = window_starts(len, cfg.window, cfg.window / 2);
    let pairs = all_pairs(series.len());
    let densities: Vec<f64> = starts
        .par_iter()
        .map(|&s| {
            let hits = pairs
                .iter()
                .filter(|&&(i, j)| pair_coordinated(series, i, j, s..s + cfg.window, cfg.sigma, cfg.omega))
                .count();
            hits as f64 / pairs.len() as f64
        })
        .collect();
    let threshold = percentile(&densities, cfg.density_percentile);

    let mut runs: Vec<Vec<usize>> = Vec::new();
    for (k, &s) in starts.iter().enumerate() {
        if densities[k] <= 0.0 || densities[k] < threshold {
            continue;
        }
        match runs.last_mut() {
            Some(run) if starts[*run.last().unwrap()] + cfg.window >= s => run.push(k),
            _ => runs.push(vec![k]),
        }
    }

    let verify = |start: usize, end: usize| interval_is_coordinated(series, start..end + 1, cfg.sigma, cfg.omega);
    let mut out = Vec::new();
    for run in runs {
        let mut current: Option<(usize, usize)> = None;
        for k in run {
            let (ws, we) = (starts[k], starts[k] + cfg.window - 1);
            current = match current {
                Some((cs, _)) if verify(cs, we) => Some((cs, we)),
                Some(done) => {
                    out.push(done);
                    let ws = ws.max(done.1 + 1);
                    (we > ws && verify(ws, we)).then_some((ws, we))
                }
                None => verify(ws, we).then_some((ws, we)),
            };
        }
        out.extend(current);
    }
    // Window starts lie on a coarse grid; pull each start back toward the
    // previous interval while the whole span still verifies.
    let mut floor = 0;
    for iv in out.iter_mut() {
        let (mut lo, mut hi) = (floor, iv.0);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if verify(mid, iv.1) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        iv.0 = hi;
        floor = iv.1 + 1;
    }
    Ok(out
        .into_iter()
        .map(|(start, end)| CoordinationInterval {
            start,
            end,
            sigma: cfg.sigma,
        })
        .collect())
}

/// Agents strictly followed by every other agent within `interval`.
pub fn find_initiators(
    series: &[Vec<DirectionDeg>],
    interval: &CoordinationInterval,
    sigma: f64,
    omega: usize,
) -> BTreeSet<usize> {
    let range = interval.start..interval.end + 1;
    let shift = omega.min(range.len().saturating_sub(1));
    if shift == 0 || series.iter().any(|s| s.len() <= interval.end) {
        return BTreeSet::new();
    }
    (0..series.len())
        .filter(|&l| {
            (0..series.len()).filter(|&i| i != l).all(|i| {
                sim_foll(&series[l][range.clone()], &series[i][range.clone()], shift)
                    .map(|r| classify(r, sigma) == FollowRelation::StrictlyFollows)
                    .unwrap_or(false)
            })
        })
        .collect()
}

/// Directed follow edges `follower -> followed` observed in one window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FollowWindow {
    pub event: usize,
    pub start: usize,
    pub len: usize,
    /// `(follower, followed, similarity)`.
    pub edges: Vec<(usize, usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicFollowNetwork {
    pub n_agents: usize,
    pub windows: Vec<FollowWindow>,
}

/// Settings for mining following networks from training events.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinerConfig {
    pub sigma: f64,
    /// Window length; delays up to half of it are considered.
    pub omega: usize,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig { sigma: 0.9, omega: 60 }
    }
}

impl MinerConfig {
    pub fn max_delay(&self) -> usize {
        (self.omega / 2).max(1)
    }
}

/// Builds the dynamic following network of a set of heading series.
///
/// Each window of `cfg.omega` steps (stride `omega / 2`) gets an edge
/// `i -> j` whenever `i` strictly follows `j` there, weighted by similarity.
pub fn build_dynamic_following_network(
    series: &[Vec<DirectionDeg>],
    cfg: &MinerConfig,
) -> Result<DynamicFollowNetwork> {
    build_network_over(std::iter::once(series), series.len(), cfg)
}

/// As [`build_dynamic_following_network`], with windows taken inside each
/// event so none straddles an event boundary.
pub fn build_network_for_events(events: &[TrajectorySet], cfg: &MinerConfig) -> Result<DynamicFollowNetwork> {
    let n = events
        .first()
        .map(TrajectorySet::n_agents)
        .ok_or_else(|| Error::InvalidParam("no events".into()))?;
    build_network_over(events.iter().map(|e| e.directions()), n, cfg)
}

fn build_network_over<'a, I>(events: I, n_agents: usize, cfg: &MinerConfig) -> Result<DynamicFollowNetwork>
where
    I: Iterator<Item = &'a [Vec<DirectionDeg>]>,
{
    if cfg.omega < 2 {
        return Err(Error::InvalidParam("omega must be at least 2".into()));
    }
    let mut jobs = Vec::new();
    let mut series_by_event = Vec::new();
    for (ev, series) in events.enumerate() {
        if series.len() != n_agents {
            return Err(Error::InconsistentAgents(format!(
                "event {ev} has {} agents, expected {n_agents}",
                series.len()
            )));
        }
        let len = check_series(series, 2 * cfg.omega)?;
        for s in window_starts(len, cfg.omega, cfg.omega / 2) {
            jobs.push((ev, s));
        }
        series_by_event.push(series);
    }
    let lag = cfg.max_delay();
    let windows = jobs
        .par_iter()
        .map(|&(ev, start)| {
            let series = series_by_event[ev];
            let range = start..start + cfg.omega;
            let mut edges = Vec::new();
            for follower in 0..n_agents {
                for leader in 0..n_agents {
                    if follower == leader {
                        continue;
                    }
                    let r = sim_foll(&series[leader][range.clone()], &series[follower][range.clone()], lag)
                        .expect("window longer than lag");
                    if classify(r, cfg.sigma) == FollowRelation::StrictlyFollows {
                        edges.push((follower, leader, r.similarity));
                    }
                }
            }
            FollowWindow {
                event: ev,
                start,
                len: cfg.omega,
                edges,
            }
        })
        .collect();
    Ok(DynamicFollowNetwork { n_agents, windows })
}

/// Agents ordered by descending total incoming follow weight, ties by index.
pub fn leadership_ranking(net: &DynamicFollowNetwork) -> Vec<usize> {
    let mut score = vec![0.0; net.n_agents];
    for w in &net.windows {
        for &(_, followed, weight) in &w.edges {
            score[followed] += weight;
        }
    }
    let mut order: Vec<usize> = (0..net.n_agents).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    order
}

/// Probabilistic following network: a DAG whose edge `(i, j, p)` means agent
/// `i` follows agent `j` with probability `p` at each step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork")]
pub struct ProbFollowNetwork {
    n_agents: usize,
    edges: Vec<(usize, usize, f64)>,
    #[serde(skip)]
    out: Vec<Vec<(usize, f64)>>,
}

#[derive(Deserialize)]
struct RawNetwork {
    n_agents: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl TryFrom<RawNetwork> for ProbFollowNetwork {
    type Error = Error;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        ProbFollowNetwork::new(raw.n_agents, raw.edges)
    }
}

impl ProbFollowNetwork {
    /// Validates edge endpoints and probabilities in (0, 1]. Acyclicity is not
    /// enforced here; see [`ProbFollowNetwork::is_acyclic`].
    pub fn new(n_agents: usize, mut edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, p) in &edges {
            if i >= n_agents || j >= n_agents || i == j {
                return Err(Error::InvalidParam(format!("bad edge {i} -> {j}")));
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidParam(format!(
                    "edge {i} -> {j} probability {p} outside (0, 1]"
                )));
            }
        }
        edges.sort_by_key(|e| (e.0, e.1));
        edges.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        let mut out = vec![Vec::new(); n_agents];
        for &(i, j, p) in &edges {
            out[i].push((j, p));
        }
        Ok(ProbFollowNetwork { n_agents, edges, out })
    }

    /// Every agent other than `root` follows `root` with probability `p`.
    /// `p == 0` gives the empty network.
    pub fn star(n_agents: usize, root: usize, p: f64) -> Result<Self> {
        if p == 0.0 {
            return ProbFollowNetwork::new(n_agents, Vec::new());
        }
        Self::new(
            n_agents,
            (0..n_agents).filter(|&i| i != root).map(|i| (i, root, p)).collect(),
        )
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn out_edges(&self, i: usize) -> &[(usize, f64)] {
        &self.out[i]
    }

    pub fn edge(&self, i: usize, j: usize) -> Option<f64> {
        self.out[i].iter().find(|e| e.0 == j).map(|e| e.1)
    }

    /// Kahn's algorithm over follower -> followed edges.
    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg = vec![0usize; self.n_agents];
        for &(_, j, _) in &self.edges {
            indeg[j] += 1;
        }
        let mut ready: Vec<usize> = (0..self.n_agents).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(self.n_agents);
        while let Some(i) = ready.pop() {
            order.push(i);
            for &(j, _) in &self.out[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.push(j);
                }
            }
        }
        (order.len() == self.n_agents).then_some(order)
    }

    /// Every agent has a directed path to `root`.
    pub fn all_reach(&self, root: usize) -> bool {
        let mut reach = vec![false; self.n_agents];
        reach[root] = true;
        // Reverse BFS from the root.
        let mut incoming = vec![Vec::new(); self.n_agents];
        for &(i, j, _) in &self.edges {
            incoming[j].push(i);
        }
        let mut stack = vec![root];
        while let Some(j) = stack.pop() {
            for &i in &incoming[j] {
                if !reach[i] {
                    reach[i] = true;
                    stack.push(i);
                }
            }
        }
        reach.into_iter().all(|r| r)
    }
}

/// Collapses a dynamic network into a DAG using a leadership ranking.
///
/// `p(i, j)` is the fraction of windows containing `i -> j`. Edges from a
/// higher-ranked agent to a lower-ranked one are dropped. A non-top agent left
/// without outgoing edges gets an edge to the top agent with probability
/// `1 / windows`.
pub fn aggregate_to_dag(net: &DynamicFollowNetwork, ranking: &[usize]) -> Result<ProbFollowNetwork> {
    let n = net.n_agents;
    if ranking.len() != n || ranking.iter().collect::<BTreeSet<_>>().len() != n {
        return Err(Error::InvalidParam("ranking must be a permutation of agents".into()));
    }
    let mut rank = vec![0usize; n];
    for (r, &a) in ranking.iter().enumerate() {
        rank[a] = r;
    }
    let n_windows = net.windows.len().max(1) as f64;
    let mut counts = vec![vec![0usize; n]; n];
    for w in &net.windows {
        for &(i, j, _) in &w.edges {
            counts[i][j] += 1;
        }
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if counts[i][j] > 0 && rank[j] < rank[i] {
                edges.push((i, j, counts[i][j] as f64 / n_windows));
            }
        }
    }
    let top = ranking[0];
    for i in 0..n {
        if i != top && !edges.iter().any(|e| e.0 == i) {
            edges.push((i, top, 1.0 / n_windows));
        }
    }
    ProbFollowNetwork::new(n, edges)
}

/// Mines the probabilistic following network of a set of training events.
pub fn infer_network(events: &[TrajectorySet], cfg: &MinerConfig) -> Result<ProbFollowNetwork> {
    let dynamic = build_network_for_events(events, cfg)?;
    let ranking = leadership_ranking(&dynamic);
    aggregate_to_dag(&dynamic, &ranking)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d(x: f64) -> DirectionDeg {
        DirectionDeg::new(x)
    }

    fn series(v: &[f64]) -> Vec<DirectionDeg> {
        v.iter().map(|&x| d(x)).collect()
    }

    /// Smooth leader path and a follower copying it `lag` steps late.
    fn lagged_pair(len: usize, lag: usize) -> (Vec<DirectionDeg>, Vec<DirectionDeg>) {
        let path = |t: usize| 60.0 * ((t as f64) / 7.0).sin();
        let leader = (0..len).map(|t| d(path(t))).collect();
        let follower = (0..len).map(|t| d(path(t.saturating_sub(lag)))).collect();
        (leader, follower)
    }

    #[test]
    fn similarity_examples() {
        let a = series(&[10.0, 20.0, 30.0, 40.0]);
        let r = sim_foll(&a, &a, 2).unwrap();
        assert_eq!((r.similarity, r.delay), (1.0, 0));
        let anti: Vec<_> = a.iter().map(|x| x.rotated(180.0)).collect();
        let flat = series(&[10.0; 4]);
        let flat_anti = series(&[-170.0; 4]);
        assert_eq!(sim_foll(&flat, &flat_anti, 1).unwrap().similarity, 0.0);
        let (l, f) = lagged_pair(80, 3);
        let r = sim_foll(&l, &f, 10).unwrap();
        assert_eq!(r.delay, 3);
        assert!((r.similarity - 1.0).abs() < 1e-12);
        assert_eq!(
            following_relation(&l, &f, 0.9, 10).unwrap(),
            FollowRelation::StrictlyFollows
        );
        assert_eq!(following_relation(&l, &l, 0.9, 10).unwrap(), FollowRelation::Follows);
        assert_eq!(following_relation(&a, &anti, 0.9, 1).unwrap(), FollowRelation::None);
        assert!(matches!(sim_foll(&a, &a, 4), Err(Error::TooShort(_))));
        assert!(matches!(sim_foll(&a, &a[..3], 1), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn similarity_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let len = rng.gen_range(5..40);
            let a: Vec<_> = (0..len).map(|_| d(rng.gen_range(-180.0..180.0))).collect();
            let b: Vec<_> = (0..len).map(|_| d(rng.gen_range(-180.0..180.0))).collect();
            let m = rng.gen_range(1..len);
            let mut best = (f64::NEG_INFINITY, 0);
            for s in 0..=m {
                let mut tot = 0.0;
                for t in 0..len - s {
                    let mut x = (a[t].degrees() - b[t + s].degrees()).abs();
                    if x > 180.0 {
                        x = 360.0 - x;
                    }
                    tot += x;
                }
                let sim = 1.0 - tot / ((len - s) as f64 * 180.0);
                if sim > best.0 + 1e-9 {
                    best = (sim, s);
                }
            }
            let r = sim_foll(&a, &b, m).unwrap();
            assert!((r.similarity - best.0).abs() < 1e-12);
            assert_eq!(r.delay, best.1);
        }
    }

    #[test]
    fn windows_and_percentile() {
        assert_eq!(window_starts(10, 4, 2), vec![0, 2, 4, 6]);
        assert_eq!(window_starts(11, 4, 2), vec![0, 2, 4, 6, 7]);
        assert!(window_starts(3, 4, 2).is_empty());
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 4.0);
        assert!((percentile(&v, 50.0) - 2.5).abs() < 1e-12);
        assert!((percentile(&v, 25.0) - 1.75).abs() < 1e-12);
    }

    #[test]
    fn constant_group_is_one_interval() {
        let s: Vec<Vec<DirectionDeg>> = (0..4).map(|_| vec![d(30.0); 300]).collect();
        let cfg = DetectConfig::default();
        let found = detect_coordination_intervals(&s, &cfg).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!((found[0].start, found[0].end), (0, 299));
        assert!(find_initiators(&s, &found[0], 0.9, 60).is_empty());
    }

    #[test]
    fn detect_rejects_bad_config() {
        let s: Vec<Vec<DirectionDeg>> = (0..3).map(|_| vec![d(0.0); 50]).collect();
        let short = DetectConfig::default();
        assert!(matches!(
            detect_coordination_intervals(&s, &short),
            Err(Error::TooShort(_))
        ));
        let bad = DetectConfig {
            window: 10,
            omega: 10,
            ..DetectConfig::default()
        };
        assert!(detect_coordination_intervals(&s, &bad).is_err());
        assert!(detect_coordination_intervals(
            &s[..1],
            &DetectConfig {
                window: 20,
                omega: 5,
                ..bad
            }
        )
        .is_err());
    }

    #[test]
    fn initiator_of_lagged_followers() {
        let (leader, f1) = lagged_pair(120, 2);
        let (_, f2) = lagged_pair(120, 4);
        let s = vec![f1, leader, f2];
        let iv = CoordinationInterval {
            start: 0,
            end: 119,
            sigma: 0.9,
        };
        assert!(interval_is_coordinated(&s, 0..120, 0.9, 10));
        assert_eq!(find_initiators(&s, &iv, 0.9, 10), BTreeSet::from([1]));
    }

    #[test]
    fn dynamic_network_finds_lagged_leader() {
        let (leader, f1) = lagged_pair(200, 3);
        let (_, f2) = lagged_pair(200, 5);
        let s = vec![leader, f1, f2];
        let cfg = MinerConfig { sigma: 0.9, omega: 40 };
        let dn = build_dynamic_following_network(&s, &cfg).unwrap();
        assert!(dn.windows.iter().all(|w| w.edges.iter().any(|e| e.0 == 1 && e.1 == 0)));
        let ranking = leadership_ranking(&dn);
        assert_eq!(ranking[0], 0);
        let g = aggregate_to_dag(&dn, &ranking).unwrap();
        assert!(g.is_acyclic() && g.all_reach(0));
        assert_eq!(g.edge(1, 0), Some(1.0));
        assert_eq!(g.edge(0, 1), None);
    }

    #[test]
    fn ranking_ties_by_index() {
        let dn = DynamicFollowNetwork {
            n_agents: 3,
            windows: vec![],
        };
        assert_eq!(leadership_ranking(&dn), vec![0, 1, 2]);
        let g = aggregate_to_dag(&dn, &[0, 1, 2]).unwrap();
        assert!(g.all_reach(0));
        assert!(aggregate_to_dag(&dn, &[0, 0, 2]).is_err());
    }

    #[test]
    fn network_validation_and_order() {
        assert!(ProbFollowNetwork::new(3, vec![(0, 3, 0.5)]).is_err());
        assert!(ProbFollowNetwork::new(3, vec![(0, 1, 0.0)]).is_err());
        assert!(ProbFollowNetwork::new(3, vec![(1, 1, 0.5)]).is_err());
        let cyc = ProbFollowNetwork::new(3, vec![(0, 1, 0.5), (1, 2, 0.5), (2, 0, 0.5)]).unwrap();
        assert!(!cyc.is_acyclic());
        let star = ProbFollowNetwork::star(4, 0, 0.25).unwrap();
        let order = star.topological_order().unwrap();
        assert_eq!(*order.last().unwrap(), 0);
        assert!(star.all_reach(0));
        assert!(ProbFollowNetwork::star(4, 0, 0.0).unwrap().edges().is_empty());
        let json = serde_json::to_string(&star).unwrap();
        let back: ProbFollowNetwork = serde_json::from_str(&json).unwrap();
        assert_eq!(back, star);
        assert_eq!(back.out_edges(2), &[(0, 0.25)]);
    }
}
