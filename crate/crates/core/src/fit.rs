//! Per-agent model fitting: prediction matrices, the simplex-constrained
//! least-squares solve, model selection and strategy labels.

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coordination::{infer_network, MinerConfig, ProbFollowNetwork};
use crate::dirmath::DirectionDeg;
use crate::error::{Error, Result};
use crate::strategies::{pure_predictions, Neighborhoods, PurePredictions, StrategyContext, StrategyKind};
use crate::trajectory::{check_consistent_agents, TrajectorySet};

pub const SIMPLEX_TOL: f64 = 1e-9;
pub const DEFAULT_MIX_THRESHOLD: f64 = 0.35;
/// Top two weights closer than this are treated as a tie.
pub const LABEL_TIE_MARGIN: f64 = 0.05;

/// Weights of the hierarchical, local-agreement and autoregressive
/// strategies. Serialized as `[hm, lra, ar]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportVector {
    pub hm: f64,
    pub lra: f64,
    pub ar: f64,
}

impl SupportVector {
    pub const UNIFORM: SupportVector = SupportVector {
        hm: 1.0 / 3.0,
        lra: 1.0 / 3.0,
        ar: 1.0 / 3.0,
    };

    pub fn new(hm: f64, lra: f64, ar: f64) -> Result<Self> {
        let w = [hm, lra, ar];
        let ok = w.iter().all(|x| (-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(x))
            && (w.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL;
        if !ok {
            return Err(Error::InvalidParam(format!("{w:?} is not on the simplex")));
        }
        Ok(SupportVector { hm, lra, ar })
    }

    pub fn pure(kind: StrategyKind) -> Self {
        let mut w = [0.0; 3];
        match kind {
            StrategyKind::Hm => w[0] = 1.0,
            StrategyKind::Lra => w[1] = 1.0,
            StrategyKind::Ar => w[2] = 1.0,
            StrategyKind::Informed | StrategyKind::Mix => return SupportVector::UNIFORM,
        }
        SupportVector::from_array(w)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.hm, self.lra, self.ar]
    }

    fn from_array(w: [f64; 3]) -> Self {
        SupportVector {
            hm: w[0],
            lra: w[1],
            ar: w[2],
        }
    }
}

impl Serialize for SupportVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SupportVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [a, b, c] = <[f64; 3]>::deserialize(d)?;
        SupportVector::new(a, b, c).map_err(serde::de::Error::custom)
    }
}

/// Lower bounds on the support weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdVector {
    pub hm: f64,
    pub lra: f64,
    pub ar: f64,
}

impl ThresholdVector {
    pub const ZERO: ThresholdVector = ThresholdVector {
        hm: 0.0,
        lra: 0.0,
        ar: 0.0,
    };

    pub fn new(hm: f64, lra: f64, ar: f64) -> Result<Self> {
        let k = [hm, lra, ar];
        if k.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InfeasibleKappa { sum: k.iter().sum() });
        }
        let sum: f64 = k.iter().sum();
        if sum > 1.0 + SIMPLEX_TOL {
            return Err(Error::InfeasibleKappa { sum });
        }
        Ok(ThresholdVector { hm, lra, ar })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.hm, self.lra, self.ar]
    }

    fn check(&self) -> Result<()> {
        ThresholdVector::new(self.hm, self.lra, self.ar).map(|_| ())
    }
}

impl Serialize for ThresholdVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ThresholdVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [a, b, c] = <[f64; 3]>::deserialize(d)?;
        ThresholdVector::new(a, b, c).map_err(serde::de::Error::custom)
    }
}

/// One unbiased threshold plus one biased toward each pure strategy.
pub fn default_kappa_grid() -> Vec<ThresholdVector> {
    vec![
        ThresholdVector::ZERO,
        ThresholdVector::new(0.5, 0.0, 0.0).unwrap(),
        ThresholdVector::new(0.0, 0.5, 0.0).unwrap(),
        ThresholdVector::new(0.0, 0.0, 0.5).unwrap(),
    ]
}

/// Teacher-forced pure-strategy predictions of one agent.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionMatrix {
    pub agent: usize,
    /// `(event, t)` of every row.
    pub steps: Vec<(usize, usize)>,
    pub predictions: Vec<PurePredictions>,
    pub targets: Vec<DirectionDeg>,
}

impl PredictionMatrix {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Unit-vector embedding of row `r`: the three prediction columns and the
    /// target.
    pub fn embedded_row(&self, r: usize) -> ([[f64; 2]; 3], [f64; 2]) {
        let p = &self.predictions[r];
        (
            [
                p.hm.to_unit().as_array(),
                p.lra.to_unit().as_array(),
                p.ar.to_unit().as_array(),
            ],
            self.targets[r].to_unit().as_array(),
        )
    }

    /// The rows with `t >= min_t`.
    pub fn rows_from(&self, min_t: usize) -> PredictionMatrix {
        let keep: Vec<usize> = (0..self.len()).filter(|&r| self.steps[r].1 >= min_t).collect();
        PredictionMatrix {
            agent: self.agent,
            steps: keep.iter().map(|&r| self.steps[r]).collect(),
            predictions: keep.iter().map(|&r| self.predictions[r]).collect(),
            targets: keep.iter().map(|&r| self.targets[r]).collect(),
        }
    }

    pub fn gram(&self) -> GramSystem {
        let mut g = GramSystem::default();
        for r in 0..self.len() {
            let (u, y) = self.embedded_row(r);
            g.add_row(&u, &y);
        }
        g
    }
}

/// Builds the prediction matrices of every agent, rows `t` in `p_ar..T` of
/// each event.
pub fn build_prediction_matrices(
    events: &[TrajectorySet],
    net: &ProbFollowNetwork,
    p_ar: usize,
) -> Result<Vec<PredictionMatrix>> {
    collect_rows(events, net, p_ar.max(1), p_ar)
}

/// Builds the prediction matrix of agent `i`.
pub fn build_prediction_matrix(
    events: &[TrajectorySet],
    net: &ProbFollowNetwork,
    i: usize,
    p_ar: usize,
) -> Result<PredictionMatrix> {
    let n = events.first().map(TrajectorySet::n_agents).unwrap_or(0);
    if i >= n {
        return Err(Error::InvalidParam(format!("agent index {i} out of range")));
    }
    Ok(build_prediction_matrices(events, net, p_ar)?.swap_remove(i))
}

/// Pure predictions of every agent for `t` in `t_start..T` of each event.
pub(crate) fn collect_rows(
    events: &[TrajectorySet],
    net: &ProbFollowNetwork,
    t_start: usize,
    lag: usize,
) -> Result<Vec<PredictionMatrix>> {
    if events.is_empty() {
        return Err(Error::InvalidParam("no events".into()));
    }
    check_consistent_agents(events)?;
    let n = events[0].n_agents();
    if net.n_agents() != n {
        return Err(Error::InvalidParam(format!(
            "network covers {} agents, data has {n}",
            net.n_agents()
        )));
    }
    if lag == 0 {
        return Err(Error::InvalidParam("autoregressive lag must be positive".into()));
    }
    for (k, ev) in events.iter().enumerate() {
        if ev.n_steps() < t_start + 2 {
            return Err(Error::TooShort(format!(
                "event {k} has {} steps, need at least {}",
                ev.n_steps(),
                t_start + 2
            )));
        }
    }
    let jobs: Vec<(usize, usize)> = events
        .iter()
        .enumerate()
        .flat_map(|(k, ev)| (t_start..ev.n_steps()).map(move |t| (k, t)))
        .collect();
    let per_step: Vec<Vec<PurePredictions>> = jobs
        .par_iter()
        .map(|&(k, t)| {
            let ev = &events[k];
            let pos = ev.positions_at(t);
            let hood = Neighborhoods::delaunay(&pos)?;
            let ctx = StrategyContext {
                t,
                directions: ev.directions(),
                positions: &pos,
                network: Some(net),
                informed: ev.informed(),
                target_dir: None,
                neighborhoods: Some(&hood),
            };
            (0..n).map(|i| pure_predictions(&ctx, i, lag)).collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..n)
        .map(|i| PredictionMatrix {
            agent: i,
            steps: jobs.clone(),
            predictions: per_step.iter().map(|row| row[i]).collect(),
            targets: jobs.iter().map(|&(k, t)| events[k].directions()[i][t]).collect(),
        })
        .collect())
}

/// Normal equations of the embedded least-squares objective
/// `sum_t |sum_k w_k u_k(t) - y(t)|^2 = w'Gw - 2b'w + c`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GramSystem {
    pub g: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub c: f64,
    pub rows: usize,
}

impl GramSystem {
    /// Builds the system from arbitrary (not necessarily unit) row vectors.
    pub fn from_rows(cols: &[[[f64; 2]; 3]], targets: &[[f64; 2]]) -> Self {
        let mut g = GramSystem::default();
        for (u, y) in cols.iter().zip(targets) {
            g.add_row(u, y);
        }
        g
    }

    pub fn add_row(&mut self, u: &[[f64; 2]; 3], y: &[f64; 2]) {
        let dot = |a: &[f64; 2], b: &[f64; 2]| a[0] * b[0] + a[1] * b[1];
        for k in 0..3 {
            for l in 0..3 {
                self.g[k][l] += dot(&u[k], &u[l]);
            }
            self.b[k] += dot(&u[k], y);
        }
        self.c += dot(y, y);
        self.rows += 1;
    }

    pub fn objective(&self, w: &[f64; 3]) -> f64 {
        let mut q = 0.0;
        for k in 0..3 {
            for l in 0..3 {
                q += w[k] * self.g[k][l] * w[l];
            }
        }
        let lin: f64 = (0..3).map(|k| self.b[k] * w[k]).sum();
        (q - 2.0 * lin + self.c).max(0.0)
    }

    /// Objective divided by the row count.
    pub fn mean_objective(&self, w: &[f64; 3]) -> f64 {
        if self.rows == 0 {
            0.0
        } else {
            self.objective(w) / self.rows as f64
        }
    }

    fn scale(&self) -> f64 {
        (self.g[0][0] + self.g[1][1] + self.g[2][2] + self.c).max(f64::MIN_POSITIVE)
    }
}

/// Exact minimizer of the embedded objective on `{w : sum w = 1, w >= kappa}`.
pub fn solve_support_qp(m: &PredictionMatrix, kappa: &ThresholdVector) -> Result<SupportVector> {
    solve_gram(&m.gram(), kappa)
}

/// Enumerates the seven faces of the shifted simplex, solves the
/// equality-constrained problem on each, and keeps the best feasible point.
/// Ties go to the point nearest the uniform vector.
pub fn solve_gram(sys: &GramSystem, kappa: &ThresholdVector) -> Result<SupportVector> {
    kappa.check()?;
    let k = kappa.as_array();
    let slack = (1.0 - k.iter().sum::<f64>()).max(0.0);
    let scale = sys.scale();
    let tie_tol = 1e-12 * scale;

    // In v = w - kappa the objective is v'Gv - 2q'v + const.
    let q: [f64; 3] = std::array::from_fn(|a| sys.b[a] - (0..3).map(|l| sys.g[a][l] * k[l]).sum::<f64>());

    let mut best: Option<([f64; 3], f64, f64)> = None;
    for mask in 1u8..8 {
        let free: Vec<usize> = (0..3).filter(|&a| mask & (1 << a) != 0).collect();
        let Some(v) = solve_face(&sys.g, &q, &free, slack, scale) else {
            continue;
        };
        let w = [k[0] + v[0], k[1] + v[1], k[2] + v[2]];
        let obj = sys.objective(&w);
        let dist: f64 = w.iter().map(|x| (x - 1.0 / 3.0).powi(2)).sum();
        let better = match best {
            None => true,
            Some((_, bo, bd)) => obj < bo - tie_tol || (obj <= bo + tie_tol && dist < bd),
        };
        if better {
            best = Some((w, obj, dist));
        }
    }
    let (w, _, _) = best.expect("the vertex faces are always feasible");
    Ok(SupportVector::from_array(w))
}

fn orthonormal_null(m: usize) -> Vec<Vec<f64>> {
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let r6 = 1.0 / 6f64.sqrt();
    match m {
        2 => vec![vec![r2, -r2]],
        3 => vec![vec![r2, -r2, 0.0], vec![r6, r6, -2.0 * r6]],
        _ => Vec::new(),
    }
}

/// Minimizes on the face where only `free` coordinates of `v` may be nonzero
/// and they sum to `slack`. Among minimizers the one nearest the face centroid
/// is returned. `None` when the face minimizer leaves the face.
fn solve_face(g: &[[f64; 3]; 3], q: &[f64; 3], free: &[usize], slack: f64, scale: f64) -> Option<[f64; 3]> {
    let m = free.len();
    let centre = slack / m as f64;
    let mut vf = vec![centre; m];
    let basis = orthonormal_null(m);
    if !basis.is_empty() {
        let gf = |a: usize, b: usize| g[free[a]][free[b]];
        // Reduced gradient at the centroid and reduced Hessian.
        let resid: Vec<f64> = (0..m)
            .map(|a| q[free[a]] - (0..m).map(|b| gf(a, b) * vf[b]).sum::<f64>())
            .collect();
        let d = basis.len();
        let mut h = [[0.0; 2]; 2];
        let mut r = [0.0; 2];
        for s in 0..d {
            r[s] = (0..m).map(|a| basis[s][a] * resid[a]).sum();
            for u in 0..d {
                h[s][u] = (0..m)
                    .map(|a| (0..m).map(|b| basis[s][a] * gf(a, b) * basis[u][b]).sum::<f64>())
                    .sum();
            }
        }
        let z = pinv_solve(&h, &r, d, scale);
        for a in 0..m {
            vf[a] += (0..d).map(|s| basis[s][a] * z[s]).sum::<f64>();
        }
    }
    let tol = 1e-10 * slack.max(1e-300);
    if vf.iter().any(|&x| x < -tol) {
        return None;
    }
    let mut v = [0.0; 3];
    for (a, &i) in free.iter().enumerate() {
        v[i] = vf[a].max(0.0);
    }
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x *= slack / total);
    }
    Some(v)
}

/// Minimal-norm solution of the symmetric system `h z = r` of size `d <= 2`.
fn pinv_solve(h: &[[f64; 2]; 2], r: &[f64; 2], d: usize, scale: f64) -> [f64; 2] {
    let cut = 1e-12 * scale;
    if d == 1 {
        return if h[0][0].abs() > cut {
            [r[0] / h[0][0], 0.0]
        } else {
            [0.0, 0.0]
        };
    }
    let (a, b, c) = (h[0][0], 0.5 * (h[0][1] + h[1][0]), h[1][1]);
    let mean = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let eig = [mean + rad, mean - rad];
    let vec0 = if b.abs() > 0.0 || a != c {
        let (x, y) = if (a - eig[1]).abs() >= (c - eig[1]).abs() {
            (a - eig[1], b)
        } else {
            (b, c - eig[1])
        };
        let n = x.hypot(y);
        if n > 0.0 {
            [x / n, y / n]
        } else {
            [1.0, 0.0]
        }
    } else {
        [1.0, 0.0]
    };
    let vecs = [vec0, [-vec0[1], vec0[0]]];
    let mut z = [0.0; 2];
    for (lam, v) in eig.iter().zip(vecs) {
        if lam.abs() > cut {
            let coef = (v[0] * r[0] + v[1] * r[1]) / lam;
            z[0] += coef * v[0];
            z[1] += coef * v[1];
        }
    }
    z
}

/// A support vector fitted under one threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub agent: usize,
    pub w: SupportVector,
    pub kappa: ThresholdVector,
    /// Mean squared embedded loss on the training rows.
    pub train_risk: f64,
}

/// Everything learned from one training set.
#[derive(Clone, Debug)]
pub struct AgentFits {
    pub network: ProbFollowNetwork,
    /// `models[i]` has one entry per threshold, in grid order.
    pub models: Vec<Vec<FittedModel>>,
}

pub fn fit_agent_models(train: &[TrajectorySet], kappa_grid: &[ThresholdVector], p_ar: usize) -> Result<AgentFits> {
    fit_agent_models_with(train, kappa_grid, p_ar, &MinerConfig::default())
}

pub fn fit_agent_models_with(
    train: &[TrajectorySet],
    kappa_grid: &[ThresholdVector],
    p_ar: usize,
    miner: &MinerConfig,
) -> Result<AgentFits> {
    if kappa_grid.is_empty() {
        return Err(Error::InvalidParam("threshold grid is empty".into()));
    }
    for k in kappa_grid {
        k.check()?;
    }
    check_consistent_agents(train)?;
    let network = infer_network(train, miner)?;
    let matrices = build_prediction_matrices(train, &network, p_ar)?;
    let models = matrices
        .par_iter()
        .map(|m| fit_matrix(m, kappa_grid))
        .collect::<Result<_>>()?;
    Ok(AgentFits { network, models })
}

/// Solves every threshold of the grid on one matrix.
pub fn fit_matrix(m: &PredictionMatrix, kappa_grid: &[ThresholdVector]) -> Result<Vec<FittedModel>> {
    let sys = m.gram();
    kappa_grid
        .iter()
        .map(|kappa| {
            let w = solve_gram(&sys, kappa)?;
            Ok(FittedModel {
                agent: m.agent,
                w,
                kappa: *kappa,
                train_risk: sys.mean_objective(&w.as_array()),
            })
        })
        .collect()
}

/// Picks the candidate with the lowest embedded risk on validation rows.
/// Ties go to the earliest candidate. Returns the index and its risk.
pub fn select_agent_model(models: &[FittedModel], val: &PredictionMatrix) -> Result<(usize, f64)> {
    if models.is_empty() {
        return Err(Error::InvalidParam("no candidate models".into()));
    }
    let sys = val.gram();
    let mut best = (0, f64::INFINITY);
    for (k, m) in models.iter().enumerate() {
        let risk = sys.mean_objective(&m.w.as_array());
        if risk < best.1 {
            best = (k, risk);
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StrategyLabel {
    Hm,
    Lra,
    Ar,
    Mixed,
}

impl StrategyLabel {
    pub fn name(self) -> &'static str {
        match self {
            StrategyLabel::Hm => "HM",
            StrategyLabel::Lra => "LRA",
            StrategyLabel::Ar => "AR",
            StrategyLabel::Mixed => "MIXED",
        }
    }
}

impl std::fmt::Display for StrategyLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `Mixed` when the runner-up weight reaches `mix_threshold` or is within
/// [`LABEL_TIE_MARGIN`] of the largest; otherwise the largest weight's label.
pub fn label_strategy(w: &SupportVector, mix_threshold: f64) -> StrategyLabel {
    let arr = w.as_array();
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| arr[b].total_cmp(&arr[a]).then(a.cmp(&b)));
    let (first, second) = (arr[idx[0]], arr[idx[1]]);
    if second >= mix_threshold || first - second < LABEL_TIE_MARGIN {
        return StrategyLabel::Mixed;
    }
    [StrategyLabel::Hm, StrategyLabel::Lra, StrategyLabel::Ar][idx[0]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirmath::dist_dir;
    use crate::dirmath::Point;
    use crate::simulate::{simulate, Regime, SimSpec};
    use crate::trajectory::Provenance;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(deg: f64) -> [f64; 2] {
        DirectionDeg::new(deg).to_unit().as_array()
    }

    fn random_system(rng: &mut ChaCha8Rng, rows: usize) -> GramSystem {
        let base: [f64; 3] = [
            rng.gen_range(-180.0..180.0),
            rng.gen_range(-180.0..180.0),
            rng.gen_range(-180.0..180.0),
        ];
        let spread = rng.gen_range(1.0..120.0);
        let mut cols = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..rows {
            let u = [
                unit(base[0] + rng.gen_range(-spread..spread)),
                unit(base[1] + rng.gen_range(-spread..spread)),
                unit(base[2] + rng.gen_range(-spread..spread)),
            ];
            cols.push(u);
            ys.push(unit(rng.gen_range(-180.0..180.0)));
        }
        GramSystem::from_rows(&cols, &ys)
    }

    /// Objective minimum over the constrained simplex grid of step `1/steps`.
    fn grid_min(sys: &GramSystem, k: &ThresholdVector, steps: usize) -> f64 {
        let k = k.as_array();
        let mut best = f64::INFINITY;
        for a in 0..=steps {
            for b in 0..=steps - a {
                let w = [
                    a as f64 / steps as f64,
                    b as f64 / steps as f64,
                    (steps - a - b) as f64 / steps as f64,
                ];
                if (0..3).all(|i| w[i] >= k[i] - 1e-12) {
                    best = best.min(sys.objective(&w));
                }
            }
        }
        best
    }

    /// Repeatedly refines a grid around the incumbent; converges to the
    /// constrained minimum of the convex objective.
    fn zoom_min(sys: &GramSystem, k: &ThresholdVector) -> f64 {
        let k = k.as_array();
        let feasible = |w: &[f64; 3]| (0..3).all(|i| w[i] >= k[i] - 1e-15);
        let mut centre = [1.0 / 3.0; 3];
        let mut best = f64::INFINITY;
        let mut step = 0.05;
        // Start from the best coarse-grid point.
        for a in 0..=20 {
            for b in 0..=20 - a {
                let w = [a as f64 * step, b as f64 * step, 1.0 - (a + b) as f64 * step];
                if feasible(&w) && sys.objective(&w) < best {
                    best = sys.objective(&w);
                    centre = w;
                }
            }
        }
        if !best.is_finite() {
            centre = [k[0], k[1], 1.0 - k[0] - k[1]];
            best = sys.objective(&centre);
        }
        for _ in 0..60 {
            let c = centre;
            for da in -10i32..=10 {
                for db in -10i32..=10 {
                    let w = [c[0] + da as f64 * step / 10.0, c[1] + db as f64 * step / 10.0, 0.0];
                    let w = [w[0], w[1], 1.0 - w[0] - w[1]];
                    if feasible(&w) {
                        let o = sys.objective(&w);
                        if o < best {
                            best = o;
                            centre = w;
                        }
                    }
                }
            }
            step *= 0.5;
        }
        best
    }

    #[test]
    fn vertex_when_target_is_a_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cols = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..50 {
            let h = rng.gen_range(-180.0..180.0);
            cols.push([
                unit(h),
                unit(rng.gen_range(-180.0..180.0)),
                unit(rng.gen_range(-180.0..180.0)),
            ]);
            ys.push(unit(h));
        }
        let w = solve_gram(&GramSystem::from_rows(&cols, &ys), &ThresholdVector::ZERO).unwrap();
        assert!(
            (w.hm - 1.0).abs() < 1e-9 && w.lra.abs() < 1e-9 && w.ar.abs() < 1e-9,
            "{w:?}"
        );
    }

    #[test]
    fn identical_columns_pick_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut cols = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..30 {
            let h = unit(rng.gen_range(-180.0..180.0));
            cols.push([h, h, h]);
            ys.push(unit(rng.gen_range(-180.0..180.0)));
        }
        let w = solve_gram(&GramSystem::from_rows(&cols, &ys), &ThresholdVector::ZERO).unwrap();
        for x in w.as_array() {
            assert!((x - 1.0 / 3.0).abs() < 1e-9, "{w:?}");
        }
    }

    #[test]
    fn infeasible_kappa() {
        assert!(matches!(
            ThresholdVector::new(0.6, 0.6, 0.0),
            Err(Error::InfeasibleKappa { .. })
        ));
        let bad = ThresholdVector {
            hm: 0.6,
            lra: 0.6,
            ar: 0.0,
        };
        assert!(matches!(
            solve_gram(&GramSystem::default(), &bad),
            Err(Error::InfeasibleKappa { .. })
        ));
        let full = ThresholdVector::new(0.2, 0.3, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = solve_gram(&random_system(&mut rng, 10), &full).unwrap();
        assert!((w.hm - 0.2).abs() < 1e-12 && (w.lra - 0.3).abs() < 1e-12);
    }

    #[test]
    fn beats_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let kappas = [
            ThresholdVector::ZERO,
            ThresholdVector::new(0.5, 0.0, 0.0).unwrap(),
            ThresholdVector::new(0.1, 0.2, 0.3).unwrap(),
        ];
        for n in 0..50 {
            let sys = random_system(&mut rng, 5 + n);
            for k in &kappas {
                let w = solve_gram(&sys, k).unwrap();
                let wa = w.as_array();
                assert!((wa.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                for (x, lo) in wa.iter().zip(k.as_array()) {
                    assert!(*x >= lo - 1e-12);
                }
                let obj = sys.objective(&wa);
                assert!(obj <= grid_min(&sys, k, 200) + 1e-6);
                assert!((obj - zoom_min(&sys, k)).abs() <= 1e-6, "instance {n}");
            }
        }
    }

    #[test]
    fn labels() {
        let sv = |a, b, c| SupportVector::new(a, b, c).unwrap();
        assert_eq!(label_strategy(&sv(0.85, 0.12, 0.03), 0.35), StrategyLabel::Hm);
        assert_eq!(label_strategy(&sv(0.48, 0.48, 0.04), 0.35), StrategyLabel::Mixed);
        assert_eq!(label_strategy(&sv(0.34, 0.33, 0.33), 0.35), StrategyLabel::Mixed);
        assert_eq!(label_strategy(&sv(0.1, 0.8, 0.1), 0.35), StrategyLabel::Lra);
        assert_eq!(label_strategy(&sv(0.0, 0.3, 0.7), 0.35), StrategyLabel::Ar);
        assert_eq!(label_strategy(&sv(0.5, 0.5, 0.0), 0.35), StrategyLabel::Mixed);
    }

    #[test]
    fn support_vector_validation_and_serde() {
        assert!(SupportVector::new(0.5, 0.6, 0.0).is_err());
        assert!(SupportVector::new(-0.1, 0.6, 0.5).is_err());
        let w = SupportVector::new(0.25, 0.5, 0.25).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, "[0.25,0.5,0.25]");
        assert_eq!(serde_json::from_str::<SupportVector>(&s).unwrap(), w);
        assert!(serde_json::from_str::<SupportVector>("[1,1,1]").is_err());
    }

    fn constant_set(n: usize, steps: usize, heading: f64) -> TrajectorySet {
        let positions = (0..n)
            .map(|i| {
                let mut p = Point::new(i as f64 * 3.0, (i * i) as f64 % 7.0);
                let mut v = vec![p];
                for _ in 0..steps {
                    p = p.step(DirectionDeg::new(heading), 1.0);
                    v.push(p);
                }
                v
            })
            .collect();
        TrajectorySet::from_positions(
            (1..=n as u32).collect(),
            positions,
            vec![0],
            Provenance::Ingested { source: "c".into() },
        )
        .unwrap()
    }

    #[test]
    fn constant_dataset_matrix() {
        let ts = constant_set(5, 30, 40.0);
        let net = ProbFollowNetwork::star(5, 0, 1.0).unwrap();
        let m = build_prediction_matrix(std::slice::from_ref(&ts), &net, 2, 5).unwrap();
        assert_eq!(m.len(), 30 - 5);
        for (p, y) in m.predictions.iter().zip(&m.targets) {
            for d in [p.hm, p.lra, p.ar, *y] {
                assert!(dist_dir(d, DirectionDeg::new(40.0)) < 1e-9);
            }
        }
        let short = constant_set(5, 6, 40.0);
        assert!(matches!(
            build_prediction_matrix(&[short], &net, 1, 5),
            Err(Error::TooShort(_))
        ));
    }

    #[test]
    fn hm_column_beats_lra_on_hm_data() {
        let ts = simulate(&SimSpec::new(Regime::Hm, 21)).unwrap();
        let net = ProbFollowNetwork::star(20, 0, 1.0).unwrap();
        let m = build_prediction_matrix(std::slice::from_ref(&ts), &net, 1, 5).unwrap();
        let err = |f: fn(&PurePredictions) -> DirectionDeg| -> f64 {
            m.predictions
                .iter()
                .zip(&m.targets)
                .map(|(p, y)| dist_dir(f(p), *y))
                .sum::<f64>()
                / m.len() as f64
        };
        assert!(err(|p| p.hm) < err(|p| p.lra));
    }

    #[test]
    fn selection_prefers_lra_on_lra_data() {
        let events: Vec<_> = (0..2)
            .map(|s| simulate(&SimSpec::new(Regime::Lra, 100 + s)).unwrap())
            .collect();
        let net = infer_network(&events, &MinerConfig::default()).unwrap();
        let m = build_prediction_matrix(&events, &net, 3, 5).unwrap();
        let cand = |w: SupportVector| FittedModel {
            agent: 3,
            w,
            kappa: ThresholdVector::ZERO,
            train_risk: 0.0,
        };
        let models = [
            cand(SupportVector::pure(StrategyKind::Hm)),
            cand(SupportVector::pure(StrategyKind::Lra)),
        ];
        assert_eq!(select_agent_model(&models, &m).unwrap().0, 1);
        assert_eq!(select_agent_model(&models[..1], &m).unwrap().0, 0);
    }

    #[test]
    fn fitted_models_respect_thresholds() {
        let events = vec![simulate(&SimSpec::new(Regime::Hm, 5)).unwrap()];
        let grid = default_kappa_grid();
        let fits = fit_agent_models(&events, &grid, 5).unwrap();
        assert_eq!(fits.models.len(), 20);
        for phi in &fits.models {
            assert_eq!(phi.len(), grid.len());
            for m in phi {
                let w = m.w.as_array();
                assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                for (x, k) in w.iter().zip(m.kappa.as_array()) {
                    assert!(*x >= k - 1e-12);
                }
            }
        }
        let single = fit_agent_models(&events, &[ThresholdVector::ZERO], 5).unwrap();
        assert!(single.models.iter().all(|phi| phi.len() == 1));
        assert!(single.models[1][0].w.hm >= 0.8, "{:?}", single.models[1][0].w);
    }

    proptest! {
        #[test]
        fn raising_hm_threshold_never_helps(seed in 0u64..10_000, k1 in 0.0f64..0.9, dk in 0.0f64..0.1) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sys = random_system(&mut rng, 12);
            let lo = ThresholdVector::new(k1, 0.0, 0.0).unwrap();
            let hi = ThresholdVector::new(k1 + dk, 0.0, 0.0).unwrap();
            let a = sys.objective(&solve_gram(&sys, &lo).unwrap().as_array());
            let b = sys.objective(&solve_gram(&sys, &hi).unwrap().as_array());
            prop_assert!(b >= a - 1e-9 * sys.scale());
        }

        #[test]
        fn argmin_is_scale_invariant(seed in 0u64..10_000, factor in 0.01f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows = 15;
            let mut cols = Vec::new();
            let mut ys = Vec::new();
            for _ in 0..rows {
                cols.push([unit(rng.gen_range(-90.0..90.0)), unit(rng.gen_range(-90.0..90.0)), unit(rng.gen_range(-90.0..90.0))]);
                ys.push(unit(rng.gen_range(-90.0..90.0)));
            }
            let s = |v: [f64; 2]| [v[0] * factor, v[1] * factor];
            let cols2: Vec<_> = cols.iter().map(|u| [s(u[0]), s(u[1]), s(u[2])]).collect();
            let ys2: Vec<_> = ys.iter().map(|&y| s(y)).collect();
            let a = solve_gram(&GramSystem::from_rows(&cols, &ys), &ThresholdVector::ZERO).unwrap();
            let b = solve_gram(&GramSystem::from_rows(&cols2, &ys2), &ThresholdVector::ZERO).unwrap();
            for (x, y) in a.as_array().iter().zip(b.as_array()) {
                prop_assert!((x - y).abs() < 1e-7);
            }
        }
    }
}
