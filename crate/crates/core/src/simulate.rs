//! Seeded generators for coordination events.
//!
//! Agent index 0 (id 1) is informed: it draws a uniform random heading and
//! keeps it. Every other agent starts with a uniform random heading and
//! updates it each step according to the regime. Positions start uniform in
//! the arena square and advance by `speed` along the chosen heading. Stored
//! headings are re-derived from the positions, and those stored headings are
//! what the next step reads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coordination::ProbFollowNetwork;
use crate::dirmath::{dist_dir, DirectionDeg, Point};
use crate::error::{Error, Result};
use crate::strategies::{predict_hm_sim, predict_lra, realize_network, Neighborhoods, StrategyContext};
use crate::trajectory::{Provenance, TrajectorySet};

/// Highest id using the hierarchical rule in the split regime.
const SPLIT_LAST_HM_ID: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    Hm,
    Lra,
    HmAndLra,
    Mixed,
    Random,
}

impl Regime {
    pub const ALL: [Regime; 5] = [Regime::Hm, Regime::Lra, Regime::HmAndLra, Regime::Mixed, Regime::Random];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Hm => "HM",
            Regime::Lra => "LRA",
            Regime::HmAndLra => "HM_AND_LRA",
            Regime::Mixed => "MIXED",
            Regime::Random => "RANDOM",
        }
    }

    pub fn parse(s: &str) -> Option<Regime> {
        let norm = s.trim().to_ascii_uppercase().replace(['-', '&'], "_");
        match norm.as_str() {
            "HM" => Some(Regime::Hm),
            "LRA" => Some(Regime::Lra),
            "HM_AND_LRA" | "HM_LRA" | "HMLRA" => Some(Regime::HmAndLra),
            "MIXED" | "MIX" => Some(Regime::Mixed),
            "RANDOM" => Some(Regime::Random),
            _ => None,
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub model: Regime,
    pub n_agents: usize,
    pub n_steps: usize,
    /// Follow probability of the star network. Used by `Hm`; the hierarchical
    /// steps of `Mixed` and the hierarchical agents of `HmAndLra` always use 1.
    pub rho: f64,
    /// Probability an uninformed `Mixed` agent takes a hierarchical step.
    pub mix_prob: f64,
    pub seed: u64,
    pub arena: f64,
    pub speed: f64,
}

impl SimSpec {
    pub fn new(model: Regime, seed: u64) -> Self {
        SimSpec {
            model,
            n_agents: 20,
            n_steps: 400,
            rho: 1.0,
            mix_prob: 0.5,
            seed,
            arena: 100.0,
            speed: 1.0,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.n_agents < 2 {
            return bad(format!("n_agents = {} (need >= 2)", self.n_agents));
        }
        if self.n_steps < 2 {
            return bad(format!("n_steps = {} (need >= 2)", self.n_steps));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho = {} outside [0, 1]", self.rho));
        }
        if !(0.0..=1.0).contains(&self.mix_prob) {
            return bad(format!("mix_prob = {} outside [0, 1]", self.mix_prob));
        }
        if !(self.arena > 0.0 && self.arena.is_finite()) || !(self.speed > 0.0 && self.speed.is_finite()) {
            return bad("arena and speed must be positive and finite".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Rule {
    Informed,
    Hm,
    Lra,
    CoinHmLra,
    Random,
}

fn rule_for(spec: &SimSpec, i: usize) -> Rule {
    if i == 0 && spec.model != Regime::Random {
        return Rule::Informed;
    }
    match spec.model {
        Regime::Hm => Rule::Hm,
        Regime::Lra => Rule::Lra,
        Regime::HmAndLra if i < SPLIT_LAST_HM_ID => Rule::Hm,
        Regime::HmAndLra => Rule::Lra,
        Regime::Mixed => Rule::CoinHmLra,
        Regime::Random => Rule::Random,
    }
}

fn uniform_dir<R: Rng>(rng: &mut R) -> DirectionDeg {
    DirectionDeg::new(rng.gen_range(-180.0..180.0))
}

/// Generates one coordination event. Deterministic per `spec`.
pub fn simulate(spec: &SimSpec) -> Result<TrajectorySet> {
    spec.validate()?;
    let n = spec.n_agents;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let rules: Vec<Rule> = (0..n).map(|i| rule_for(spec, i)).collect();
    let hm_rho = if spec.model == Regime::Hm { spec.rho } else { 1.0 };
    let star = ProbFollowNetwork::star(n, 0, hm_rho)?;

    let mut positions: Vec<Vec<Point>> = (0..n)
        .map(|_| {
            let mut v = Vec::with_capacity(spec.n_steps + 1);
            v.push(Point::new(
                rng.gen_range(0.0..spec.arena),
                rng.gen_range(0.0..spec.arena),
            ));
            v
        })
        .collect();
    let target = uniform_dir(&mut rng);
    let initial: Vec<DirectionDeg> = (0..n)
        .map(|i| match rules[i] {
            Rule::Informed => target,
            _ => uniform_dir(&mut rng),
        })
        .collect();
    let mut directions: Vec<Vec<DirectionDeg>> = vec![Vec::with_capacity(spec.n_steps); n];
    advance(&mut positions, &mut directions, &initial, spec.speed);

    // Agent 1 is reported as informed in every regime, including RANDOM where
    // it holds no target.
    let informed = vec![0];
    let informed_rule: Vec<usize> = (0..n).filter(|&i| matches!(rules[i], Rule::Informed)).collect();
    let mut chosen = vec![DirectionDeg::new(0.0); n];
    for t in 1..spec.n_steps {
        let pos_t: Vec<Point> = positions.iter().map(|s| s[t]).collect();
        let needs_hood = rules.iter().any(|r| matches!(r, Rule::Lra | Rule::CoinHmLra));
        let hood = if needs_hood {
            Some(Neighborhoods::delaunay(&pos_t)?)
        } else {
            None
        };
        let needs_edges = rules.iter().any(|r| matches!(r, Rule::Hm | Rule::CoinHmLra));
        let realized = if needs_edges {
            realize_network(&star, &mut rng)
        } else {
            Vec::new()
        };
        let ctx = StrategyContext {
            t,
            directions: &directions,
            positions: &pos_t,
            network: None,
            informed: &informed_rule,
            target_dir: Some(target),
            neighborhoods: hood.as_ref(),
        };
        for i in 0..n {
            chosen[i] = match rules[i] {
                Rule::Informed => target,
                Rule::Hm => predict_hm_sim(&ctx, i, &realized),
                Rule::Lra => predict_lra(&ctx, i)?,
                Rule::CoinHmLra => {
                    if rng.gen::<f64>() < spec.mix_prob {
                        predict_hm_sim(&ctx, i, &realized)
                    } else {
                        predict_lra(&ctx, i)?
                    }
                }
                Rule::Random => uniform_dir(&mut rng),
            };
        }
        advance(&mut positions, &mut directions, &chosen, spec.speed);
    }
    TrajectorySet::from_positions(
        (1..=n as u32).collect(),
        positions,
        informed,
        Provenance::Simulated(spec.clone()),
    )
}

/// Moves every agent one step and records the heading realized by the move.
fn advance(positions: &mut [Vec<Point>], directions: &mut [Vec<DirectionDeg>], chosen: &[DirectionDeg], speed: f64) {
    for (i, &h) in chosen.iter().enumerate() {
        let from = *positions[i].last().unwrap();
        let to = from.step(h, speed);
        positions[i].push(to);
        let realized = DirectionDeg::from_vector(to.x - from.x, to.y - from.y).unwrap_or(h);
        directions[i].push(realized);
    }
}

/// Generates `events` datasets with seeds derived from `master_seed`.
pub fn simulate_events(base: &SimSpec, events: usize, master_seed: u64) -> Result<Vec<TrajectorySet>> {
    use rayon::prelude::*;
    (0..events)
        .into_par_iter()
        .map(|k| {
            let mut spec = base.clone();
            spec.seed = event_seed(master_seed, k as u64);
            simulate(&spec)
        })
        .collect()
}

/// SplitMix64 of the master seed and event index.
pub fn event_seed(master: u64, k: u64) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(k.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub epsilon: f64,
    /// First step from which every agent stays within `epsilon` of the
    /// informed agent.
    pub converged_at: Option<usize>,
    /// Expected-time upper bound, for hierarchical simulations.
    pub bound: Option<f64>,
}

/// Finds the step after which all agents stay within `epsilon` degrees of the
/// first informed agent's heading.
pub fn check_convergence(ts: &TrajectorySet, epsilon: f64) -> Result<ConvergenceReport> {
    let &w = ts.informed().first().ok_or(Error::NoInformedAgent)?;
    let dirs = ts.directions();
    let steps = ts.n_steps();
    let last_bad = (0..steps)
        .rev()
        .find(|&t| dirs.iter().any(|s| dist_dir(s[t], dirs[w][t]) > epsilon));
    let converged_at = match last_bad {
        None => Some(0),
        Some(t) if t + 1 < steps => Some(t + 1),
        Some(_) => None,
    };
    let bound = match &ts.provenance {
        Provenance::Simulated(spec) if spec.model == Regime::Hm && spec.rho > 0.0 => {
            let initial: Vec<DirectionDeg> = dirs.iter().map(|s| s[0]).collect();
            Some(compute_hm_bound(
                &initial,
                dirs[w][0],
                epsilon,
                spec.rho,
                ts.n_agents(),
            )?)
        }
        _ => None,
    };
    Ok(ConvergenceReport {
        epsilon,
        converged_at,
        bound,
    })
}

/// Expected convergence-time bound of the hierarchical model:
/// `n * max_i max(0, log2(gap_i / epsilon)) / p_star`.
pub fn compute_hm_bound(
    initial: &[DirectionDeg],
    target: DirectionDeg,
    epsilon: f64,
    p_star: f64,
    n: usize,
) -> Result<f64> {
    if p_star.is_nan() || p_star <= 0.0 {
        return Err(Error::InvalidParam(format!("p_star = {p_star} must be positive")));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidParam(format!("epsilon = {epsilon} must be positive")));
    }
    let worst = initial
        .iter()
        .map(|&d| {
            let gap = dist_dir(d, target);
            if gap <= 0.0 {
                0.0
            } else {
                (gap / epsilon).log2().max(0.0)
            }
        })
        .fold(0.0, f64::max);
    Ok(n as f64 * worst / p_star)
}
