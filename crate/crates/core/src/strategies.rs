//! Candidate strategy functions.
//!
//! Every predictor maps a [`StrategyContext`] (the state of the group just
//! before step `t`) and an agent index to a predicted heading for step `t`.
//! Averages are circular means on the unit-vector embedding.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use spade::{DelaunayTriangulation, Point2, Triangulation};

use crate::coordination::ProbFollowNetwork;
use crate::dirmath::{weighted_mean, DirectionDeg, Point};
use crate::error::{Error, Result};
use crate::fit::SupportVector;

/// Default autoregressive lag.
pub const DEFAULT_AR_LAG: usize = 5;

const DUPLICATE_JITTER: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StrategyKind {
    Hm,
    Lra,
    Ar,
    Informed,
    Mix,
}

/// Delaunay adjacency of one time step, shared by all agents.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighborhoods {
    /// Sorted neighbor lists; each agent is its own neighbor.
    lists: Vec<Vec<usize>>,
}

impl Neighborhoods {
    /// Triangulates `positions`. Two agents or an all-collinear layout fall
    /// back to the complete graph; exact duplicates are nudged apart first.
    pub fn delaunay(positions: &[Point]) -> Result<Self> {
        let n = positions.len();
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinitePosition { agent: i, t: 0 });
        }
        if n < 2 {
            return Err(Error::InvalidParam("need at least two agents".into()));
        }
        let complete = || Neighborhoods {
            lists: (0..n).map(|_| (0..n).collect()).collect(),
        };
        if n == 2 {
            return Ok(complete());
        }
        let pts = dejitter(positions);
        let mut tri: DelaunayTriangulation<Point2<f64>> = DelaunayTriangulation::new();
        let mut agent_of = vec![usize::MAX; n];
        for (i, p) in pts.iter().enumerate() {
            let h = tri
                .insert(Point2::new(p.x, p.y))
                .map_err(|e| Error::InvalidParam(format!("triangulation failed: {e:?}")))?;
            agent_of[h.index()] = i;
        }
        if tri.num_inner_faces() == 0 {
            return Ok(complete());
        }
        let mut sets: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
        for face in tri.inner_faces() {
            let vs = face.vertices().map(|v| agent_of[v.fix().index()]);
            for &a in &vs {
                for &b in &vs {
                    sets[a].insert(b);
                }
            }
        }
        Ok(Neighborhoods {
            lists: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    pub fn of(&self, i: usize) -> &[usize] {
        &self.lists[i]
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }
}

/// Moves later copies of a repeated point by a deterministic multiple of
/// `DUPLICATE_JITTER` along the diagonal.
fn dejitter(positions: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(positions.len());
    for p in positions {
        let mut q = *p;
        let mut k = 1.0;
        while out.iter().any(|o| o.x == q.x && o.y == q.y) {
            q = Point::new(p.x + k * DUPLICATE_JITTER, p.y + k * DUPLICATE_JITTER);
            k += 1.0;
        }
        out.push(q);
    }
    out
}

/// Neighbor set of agent `i` (including `i`) in the Delaunay triangulation.
pub fn delaunay_neighbors(positions: &[Point], i: usize) -> Result<Vec<usize>> {
    Ok(Neighborhoods::delaunay(positions)?.of(i).to_vec())
}

/// The group state seen by a predictor for step `t`.
#[derive(Clone, Copy, Debug)]
pub struct StrategyContext<'a> {
    pub t: usize,
    /// Agent-major heading series. Entries before `t` are history; entry `t`
    /// is read only by the informed-individual strategy.
    pub directions: &'a [Vec<DirectionDeg>],
    /// All agents' positions at step `t`.
    pub positions: &'a [Point],
    pub network: Option<&'a ProbFollowNetwork>,
    /// Agents that always hold the target heading.
    pub informed: &'a [usize],
    pub target_dir: Option<DirectionDeg>,
    /// Precomputed triangulation of `positions`.
    pub neighborhoods: Option<&'a Neighborhoods>,
}

impl StrategyContext<'_> {
    pub fn prev(&self, i: usize) -> DirectionDeg {
        self.directions[i][self.t - 1]
    }

    fn is_informed(&self, i: usize) -> bool {
        self.informed.contains(&i)
    }

    fn target(&self, i: usize) -> DirectionDeg {
        self.target_dir.unwrap_or_else(|| self.prev(i))
    }

    fn equal_mean(&self, agents: &[usize], i: usize) -> DirectionDeg {
        weighted_mean(agents.iter().map(|&j| (self.prev(j), 1.0))).unwrap_or_else(|_| self.prev(i))
    }
}

/// Simulation-side hierarchical update over a realized edge set.
///
/// `realized` holds `(follower, followed)` pairs drawn for this step; agent
/// `i` averages itself with every agent it follows.
pub fn predict_hm_sim(ctx: &StrategyContext, i: usize, realized: &[(usize, usize)]) -> DirectionDeg {
    if ctx.is_informed(i) {
        return ctx.target(i);
    }
    let mut hood = vec![i];
    hood.extend(realized.iter().filter(|e| e.0 == i).map(|e| e.1));
    ctx.equal_mean(&hood, i)
}

/// Draws each edge of `net` independently with its probability.
pub fn realize_network<R: Rng + ?Sized>(net: &ProbFollowNetwork, rng: &mut R) -> Vec<(usize, usize)> {
    net.edges()
        .iter()
        .filter(|&&(_, _, p)| rng.gen::<f64>() < p)
        .map(|&(i, j, _)| (i, j))
        .collect()
}

/// Fitting-side hierarchical prediction: own heading with weight 1 plus each
/// followed agent's heading weighted by its edge probability.
pub fn predict_hm_fit(ctx: &StrategyContext, i: usize) -> DirectionDeg {
    let edges = ctx.network.map(|n| n.out_edges(i)).unwrap_or(&[]);
    weighted_mean(std::iter::once((ctx.prev(i), 1.0)).chain(edges.iter().map(|&(k, p)| (ctx.prev(k), p))))
        .unwrap_or_else(|_| ctx.prev(i))
}

/// Local agreement over Delaunay neighbors at the current positions.
pub fn predict_lra(ctx: &StrategyContext, i: usize) -> Result<DirectionDeg> {
    if ctx.is_informed(i) {
        return Ok(ctx.target(i));
    }
    match ctx.neighborhoods {
        Some(h) => Ok(ctx.equal_mean(h.of(i), i)),
        None => {
            let h = Neighborhoods::delaunay(ctx.positions)?;
            Ok(ctx.equal_mean(h.of(i), i))
        }
    }
}

/// Mean of the agent's last `lag` headings (fewer when history is short).
pub fn predict_ar(ctx: &StrategyContext, i: usize, lag: usize) -> DirectionDeg {
    let from = ctx.t.saturating_sub(lag.max(1));
    let hist = &ctx.directions[i][from..ctx.t];
    weighted_mean(hist.iter().map(|&d| (d, 1.0))).unwrap_or_else(|_| ctx.prev(i))
}

/// Mean current heading of the informed agents; informed agents keep their
/// own current heading.
pub fn predict_informed(ctx: &StrategyContext, i: usize) -> Result<DirectionDeg> {
    if ctx.informed.is_empty() {
        return Err(Error::EmptyInformedSet);
    }
    if ctx.is_informed(i) {
        return Ok(ctx.directions[i][ctx.t]);
    }
    Ok(weighted_mean(ctx.informed.iter().map(|&j| (ctx.directions[j][ctx.t], 1.0))).unwrap_or_else(|_| ctx.prev(i)))
}

/// The three pure predictions feeding a mixed strategy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PurePredictions {
    pub hm: DirectionDeg,
    pub lra: DirectionDeg,
    pub ar: DirectionDeg,
}

pub fn pure_predictions(ctx: &StrategyContext, i: usize, lag: usize) -> Result<PurePredictions> {
    Ok(PurePredictions {
        hm: predict_hm_fit(ctx, i),
        lra: predict_lra(ctx, i)?,
        ar: predict_ar(ctx, i, lag),
    })
}

/// Combines pure predictions with support weights on the unit-vector
/// embedding.
pub fn mix_predictions(p: &PurePredictions, w: &SupportVector) -> Result<DirectionDeg> {
    weighted_mean([(p.hm, w.hm), (p.lra, w.lra), (p.ar, w.ar)])
}

/// Mixed-strategy prediction. A zero resultant falls back to the agent's
/// previous heading.
pub fn predict_mix(ctx: &StrategyContext, i: usize, w: &SupportVector, lag: usize) -> Result<DirectionDeg> {
    let p = pure_predictions(ctx, i, lag)?;
    Ok(mix_predictions(&p, w).unwrap_or_else(|_| {
        log::debug!("mixed prediction for agent {i} at step {} has zero resultant", ctx.t);
        ctx.prev(i)
    }))
}
