//! Degree-space risks, cross-validation and dataset classification.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coordination::{infer_network, MinerConfig, ProbFollowNetwork};
use crate::dirmath::{dist_dir, weighted_mean, DirectionDeg};
use crate::error::{Error, Result};
use crate::fit::{
    collect_rows, fit_matrix, label_strategy, select_agent_model, PredictionMatrix, StrategyLabel, SupportVector,
    ThresholdVector, DEFAULT_MIX_THRESHOLD,
};
use crate::forest::{ForestConfig, RandomForest};
use crate::simulate::Regime;
use crate::strategies::{mix_predictions, StrategyContext, DEFAULT_AR_LAG};
use crate::trajectory::{check_consistent_agents, Provenance, TrajectorySet};

/// Mean one-step error, in degrees, of `predictor` on agent `i` over
/// `t = 1..T`, teacher-forced.
pub fn risk_dir<F>(ts: &TrajectorySet, net: Option<&ProbFollowNetwork>, i: usize, mut predictor: F) -> Result<f64>
where
    F: FnMut(&StrategyContext, usize) -> Result<DirectionDeg>,
{
    let steps = ts.n_steps();
    if steps < 2 {
        return Err(Error::TooShort(format!("{steps} steps")));
    }
    let mut total = 0.0;
    for t in 1..steps {
        let pos = ts.positions_at(t);
        let ctx = StrategyContext {
            t,
            directions: ts.directions(),
            positions: &pos,
            network: net,
            informed: ts.informed(),
            target_dir: None,
            neighborhoods: None,
        };
        total += dist_dir(ts.directions()[i][t], predictor(&ctx, i)?);
    }
    Ok(total / (steps - 1) as f64)
}

/// Per-strategy mean errors in degrees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StrategyRisks {
    pub opt: f64,
    pub hm: f64,
    pub lra: f64,
    pub ar: f64,
    pub informed: f64,
}

impl StrategyRisks {
    fn as_array(&self) -> [f64; 5] {
        [self.opt, self.hm, self.lra, self.ar, self.informed]
    }

    fn from_array(a: [f64; 5]) -> Self {
        StrategyRisks {
            opt: a[0],
            hm: a[1],
            lra: a[2],
            ar: a[3],
            informed: a[4],
        }
    }

    fn mean<'a, I: IntoIterator<Item = &'a StrategyRisks>>(items: I) -> StrategyRisks {
        let mut sum = [0.0; 5];
        let mut n = 0usize;
        for r in items {
            for (s, x) in sum.iter_mut().zip(r.as_array()) {
                *s += x;
            }
            n += 1;
        }
        StrategyRisks::from_array(sum.map(|s| if n == 0 { 0.0 } else { s / n as f64 }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BestFit {
    Opt,
    Hm,
    Lra,
    Ar,
}

/// One teacher-forced prediction step of one agent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepError {
    pub fold: usize,
    /// Index of the dataset in the input list.
    pub dataset: usize,
    pub t: usize,
    pub agent_id: u32,
    pub errors: StrategyRisks,
}

/// Errors of every strategy on every row of a matrix built from `t = 1`.
fn row_errors(m: &PredictionMatrix, w: &SupportVector, informed: &[Option<DirectionDeg>]) -> Vec<StrategyRisks> {
    (0..m.len())
        .map(|r| {
            let p = &m.predictions[r];
            let y = m.targets[r];
            let opt = mix_predictions(p, w).unwrap_or(p.ar);
            StrategyRisks {
                opt: dist_dir(opt, y),
                hm: dist_dir(p.hm, y),
                lra: dist_dir(p.lra, y),
                ar: dist_dir(p.ar, y),
                informed: informed[r].map(|d| dist_dir(d, y)).unwrap_or(0.0),
            }
        })
        .collect()
}

/// Prediction of the informed-individual strategy for every row of `m`.
fn informed_column(events: &[TrajectorySet], m: &PredictionMatrix) -> Result<Vec<Option<DirectionDeg>>> {
    m.steps
        .iter()
        .map(|&(k, t)| {
            let ev = &events[k];
            if ev.informed().is_empty() {
                return Err(Error::EmptyInformedSet);
            }
            if ev.informed().contains(&m.agent) {
                return Ok(Some(ev.directions()[m.agent][t]));
            }
            Ok(Some(
                weighted_mean(ev.informed().iter().map(|&j| (ev.directions()[j][t], 1.0)))
                    .unwrap_or(ev.directions()[m.agent][t - 1]),
            ))
        })
        .collect()
}

/// Risks of the fitted mixture and each pure strategy for agent `i`, plus the
/// argmin (ties in the order OPT, HM, LRA, AR).
pub fn best_fit_strategy(
    test: &[TrajectorySet],
    i: usize,
    fitted: &SupportVector,
    net: &ProbFollowNetwork,
) -> Result<(BestFit, StrategyRisks)> {
    let m = collect_rows(test, net, 1, DEFAULT_AR_LAG)?.swap_remove(i);
    let informed = informed_column(test, &m)?;
    let risks = StrategyRisks::mean(&row_errors(&m, fitted, &informed));
    Ok((argmin_fit(&risks), risks))
}

/// Risks closer than this, in degrees, count as tied.
pub const RISK_TIE_TOL: f64 = 1e-9;

fn argmin_fit(r: &StrategyRisks) -> BestFit {
    let cands = [
        (BestFit::Opt, r.opt),
        (BestFit::Hm, r.hm),
        (BestFit::Lra, r.lra),
        (BestFit::Ar, r.ar),
    ];
    let mut best = cands[0];
    for c in &cands[1..] {
        if c.1 < best.1 - RISK_TIE_TOL {
            best = *c;
        }
    }
    best.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub kappa_grid: Vec<ThresholdVector>,
    pub p_ar: usize,
    pub seed: u64,
    pub miner: MinerConfig,
    pub mix_threshold: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            kappa_grid: crate::fit::default_kappa_grid(),
            p_ar: DEFAULT_AR_LAG,
            seed: 0,
            miner: MinerConfig::default(),
            mix_threshold: DEFAULT_MIX_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentReport {
    pub agent_id: u32,
    pub informed: bool,
    /// Mean of the selected support vectors across folds.
    pub w: SupportVector,
    pub label: StrategyLabel,
    /// Fold-averaged test risks.
    pub risks: StrategyRisks,
    /// Standard deviation of the per-step test errors.
    pub risk_std: StrategyRisks,
    /// Fold-averaged risks on the training events.
    pub train_risks: StrategyRisks,
    pub best_fit: BestFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub network: ProbFollowNetwork,
    pub selected: Vec<SupportVector>,
    /// Index into the threshold grid of each agent's selected model.
    pub selected_kappa: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub config: CvConfig,
    pub agents: Vec<AgentReport>,
    /// Mean over uninformed agents.
    pub summary: StrategyRisks,
    /// Componentwise median of the agents' mean support vectors.
    pub median_w: [f64; 3],
    pub folds: Vec<FoldReport>,
    pub datasets: Vec<Provenance>,
    #[serde(skip)]
    pub step_errors: Vec<StepError>,
}

/// Splits shuffled dataset indices into `(train, validation, test)` per fold.
pub fn fold_splits(n: usize, folds: usize, seed: u64) -> Vec<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (0..folds)
        .map(|k| {
            let (lo, hi) = (k * n / folds, (k + 1) * n / folds);
            let test = idx[lo..hi].to_vec();
            let rest: Vec<usize> = idx[..lo].iter().chain(&idx[hi..]).copied().collect();
            let cut = rest.len().div_ceil(2);
            let train = rest[..cut].to_vec();
            let val = if rest.len() > cut {
                rest[cut..].to_vec()
            } else {
                train.clone()
            };
            (train, val, test)
        })
        .collect()
}

struct FoldOutcome {
    report: FoldReport,
    test: Vec<Vec<StrategyRisks>>,
    train: Vec<StrategyRisks>,
    steps: Vec<StepError>,
}

/// Fits on training events, selects on validation events and evaluates on
/// test events for every fold.
pub fn cross_validate(datasets: &[TrajectorySet], cfg: &CvConfig) -> Result<RiskReport> {
    if cfg.folds < 2 {
        return Err(Error::InvalidParam("need at least 2 folds".into()));
    }
    if datasets.len() < cfg.folds {
        return Err(Error::InvalidParam(format!(
            "{} datasets for {} folds",
            datasets.len(),
            cfg.folds
        )));
    }
    if cfg.kappa_grid.is_empty() {
        return Err(Error::InvalidParam("threshold grid is empty".into()));
    }
    check_consistent_agents(datasets)?;
    let n = datasets[0].n_agents();
    let pick = |ix: &[usize]| ix.iter().map(|&k| datasets[k].clone()).collect::<Vec<_>>();

    let outcomes: Vec<FoldOutcome> = fold_splits(datasets.len(), cfg.folds, cfg.seed)
        .into_iter()
        .enumerate()
        .map(|(fold, (tr, va, te))| {
            let (train, val, test) = (pick(&tr), pick(&va), pick(&te));
            let network = infer_network(&train, &cfg.miner)?;
            let train_rows = collect_rows(&train, &network, 1, cfg.p_ar)?;
            let val_rows = collect_rows(&val, &network, cfg.p_ar, cfg.p_ar)?;
            let test_rows = collect_rows(&test, &network, 1, cfg.p_ar)?;
            let per_agent: Vec<(SupportVector, usize, Vec<StrategyRisks>, StrategyRisks)> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let phi = fit_matrix(&train_rows[i].rows_from(cfg.p_ar), &cfg.kappa_grid)?;
                    let (k, _) = select_agent_model(&phi, &val_rows[i])?;
                    let w = phi[k].w;
                    let inf = informed_column(&test, &test_rows[i])?;
                    let test_err = row_errors(&test_rows[i], &w, &inf);
                    let inf_tr = informed_column(&train, &train_rows[i])?;
                    let train_err = StrategyRisks::mean(&row_errors(&train_rows[i], &w, &inf_tr));
                    Ok((w, k, test_err, train_err))
                })
                .collect::<Result<_>>()?;
            let mut steps = Vec::new();
            for (i, (_, _, errs, _)) in per_agent.iter().enumerate() {
                for (r, e) in errs.iter().enumerate() {
                    let (ev, t) = test_rows[i].steps[r];
                    steps.push(StepError {
                        fold,
                        dataset: te[ev],
                        t,
                        agent_id: datasets[0].agent_ids()[i],
                        errors: *e,
                    });
                }
            }
            Ok(FoldOutcome {
                report: FoldReport {
                    fold,
                    train: tr,
                    validation: va,
                    test: te,
                    network,
                    selected: per_agent.iter().map(|a| a.0).collect(),
                    selected_kappa: per_agent.iter().map(|a| a.1).collect(),
                },
                test: per_agent.iter().map(|a| a.2.clone()).collect(),
                train: per_agent.iter().map(|a| a.3).collect(),
                steps,
            })
        })
        .collect::<Result<_>>()?;

    let informed: Vec<usize> = datasets[0].informed().to_vec();
    let agents: Vec<AgentReport> = (0..n)
        .map(|i| {
            let fold_means: Vec<StrategyRisks> = outcomes.iter().map(|o| StrategyRisks::mean(&o.test[i])).collect();
            let risks = StrategyRisks::mean(&fold_means);
            let all: Vec<&StrategyRisks> = outcomes.iter().flat_map(|o| o.test[i].iter()).collect();
            let pooled = StrategyRisks::mean(all.iter().copied());
            let var = StrategyRisks::mean(
                all.iter()
                    .map(|e| {
                        let a = e.as_array();
                        let m = pooled.as_array();
                        StrategyRisks::from_array([0, 1, 2, 3, 4].map(|k| (a[k] - m[k]).powi(2)))
                    })
                    .collect::<Vec<_>>()
                    .iter(),
            );
            let risk_std = StrategyRisks::from_array(var.as_array().map(f64::sqrt));
            let train_risks = StrategyRisks::mean(outcomes.iter().map(|o| &o.train[i]));
            let w = mean_support(outcomes.iter().map(|o| o.report.selected[i]));
            AgentReport {
                agent_id: datasets[0].agent_ids()[i],
                informed: informed.contains(&i),
                w,
                label: label_strategy(&w, cfg.mix_threshold),
                risks,
                risk_std,
                train_risks,
                best_fit: argmin_fit(&risks),
            }
        })
        .collect();
    let summary = StrategyRisks::mean(agents.iter().filter(|a| !a.informed).map(|a| &a.risks));
    let median_w = median_support(agents.iter().map(|a| a.w));
    let mut folds = Vec::new();
    let mut step_errors = Vec::new();
    for o in outcomes {
        folds.push(o.report);
        step_errors.extend(o.steps);
    }
    Ok(RiskReport {
        config: cfg.clone(),
        agents,
        summary,
        median_w,
        folds,
        datasets: datasets.iter().map(|d| d.provenance.clone()).collect(),
        step_errors,
    })
}

fn mean_support<I: IntoIterator<Item = SupportVector>>(items: I) -> SupportVector {
    let mut sum = [0.0; 3];
    let mut n = 0usize;
    for w in items {
        for (s, x) in sum.iter_mut().zip(w.as_array()) {
            *s += x;
        }
        n += 1;
    }
    let total: f64 = sum.iter().sum();
    if n == 0 || total <= 0.0 {
        return SupportVector::UNIFORM;
    }
    SupportVector {
        hm: sum[0] / total,
        lra: sum[1] / total,
        ar: sum[2] / total,
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn median_support<I: IntoIterator<Item = SupportVector>>(items: I) -> [f64; 3] {
    let ws: Vec<[f64; 3]> = items.into_iter().map(|w| w.as_array()).collect();
    [0, 1, 2].map(|k| median(ws.iter().map(|w| w[k]).collect()))
}

/// Componentwise median of per-agent support vectors fitted on one dataset
/// with zero thresholds. The components need not sum to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub median_w: [f64; 3],
}

pub fn dataset_features(ts: &TrajectorySet, miner: &MinerConfig, p_ar: usize) -> Result<FeatureVector> {
    let events = std::slice::from_ref(ts);
    let network = infer_network(events, miner)?;
    let rows = collect_rows(events, &network, p_ar, p_ar)?;
    let ws = rows
        .iter()
        .map(|m| fit_matrix(m, &[ThresholdVector::ZERO]).map(|phi| phi[0].w))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureVector {
        median_w: median_support(ws),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: Regime,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classes: Vec<Regime>,
    /// `confusion[true][predicted]`, indexed like `classes`.
    pub confusion: Vec<Vec<usize>>,
    pub metrics: Vec<ClassMetrics>,
    pub folds: usize,
    pub seed: u64,
    pub forest: ForestConfig,
    pub features: Vec<FeatureVector>,
}

impl ClassificationReport {
    pub fn metric(&self, class: Regime) -> Option<&ClassMetrics> {
        self.metrics.iter().find(|m| m.class == class)
    }
}

/// Precision, recall and F1 per class from a confusion matrix.
pub fn class_metrics(classes: &[Regime], confusion: &[Vec<usize>]) -> Vec<ClassMetrics> {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    classes
        .iter()
        .enumerate()
        .map(|(c, &class)| {
            let tp = confusion[c][c];
            let support: usize = confusion[c].iter().sum();
            let predicted: usize = confusion.iter().map(|row| row[c]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                class,
                support,
                precision,
                recall,
                f1,
            }
        })
        .collect()
}

/// Classifies datasets by regime with a seeded forest under k-fold cross
/// validation.
pub fn classify_datasets(
    labeled: &[(TrajectorySet, Regime)],
    folds: usize,
    seed: u64,
    forest: &ForestConfig,
) -> Result<ClassificationReport> {
    let features = labeled
        .par_iter()
        .map(|(ts, _)| dataset_features(ts, &MinerConfig::default(), DEFAULT_AR_LAG))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<Regime> = labeled.iter().map(|l| l.1).collect();
    classify_features(&features, &labels, folds, seed, forest)
}

/// Cross-validated classification of precomputed features.
pub fn classify_features(
    features: &[FeatureVector],
    labels: &[Regime],
    folds: usize,
    seed: u64,
    forest: &ForestConfig,
) -> Result<ClassificationReport> {
    let mut classes: Vec<Regime> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass(classes.len()));
    }
    let n = features.len();
    if folds < 2 || folds > n {
        return Err(Error::InvalidParam(format!("{folds} folds for {n} datasets")));
    }
    let y: Vec<usize> = labels.iter().map(|l| classes.binary_search(l).unwrap()).collect();
    let x: Vec<Vec<f64>> = features.iter().map(|f| f.median_w.to_vec()).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut confusion = vec![vec![0usize; classes.len()]; classes.len()];
    for k in 0..folds {
        let (lo, hi) = (k * n / folds, (k + 1) * n / folds);
        let test = &idx[lo..hi];
        let train: Vec<usize> = idx[..lo].iter().chain(&idx[hi..]).copied().collect();
        let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let ty: Vec<usize> = train.iter().map(|&i| y[i]).collect();
        let cfg = ForestConfig {
            seed: forest.seed.wrapping_add(k as u64),
            ..*forest
        };
        let model = RandomForest::fit(&tx, &ty, classes.len(), &cfg)?;
        for &i in test {
            confusion[y[i]][model.predict(&x[i])] += 1;
        }
    }
    Ok(ClassificationReport {
        metrics: class_metrics(&classes, &confusion),
        classes,
        confusion,
        folds,
        seed,
        forest: *forest,
        features: features.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirmath::Point;
    use crate::simulate::{simulate, SimSpec};
    use crate::strategies::predict_ar;

    fn constant_set(n: usize, steps: usize) -> TrajectorySet {
        let positions = (0..n)
            .map(|i| {
                let mut p = Point::new(i as f64 * 5.0, (i % 3) as f64 * 4.0);
                let mut v = vec![p];
                for _ in 0..steps {
                    p = p.step(DirectionDeg::new(40.0), 1.0);
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
    fn risk_extremes() {
        let ts = simulate(&SimSpec::new(Regime::Lra, 2)).unwrap();
        let perfect = risk_dir(&ts, None, 4, |c, i| Ok(c.directions[i][c.t])).unwrap();
        assert_eq!(perfect, 0.0);
        let anti = risk_dir(&ts, None, 4, |c, i| Ok(c.directions[i][c.t].rotated(180.0))).unwrap();
        assert!((anti - 180.0).abs() < 1e-9);
    }

    #[test]
    fn ar_on_random_is_ninety() {
        let ts = simulate(&SimSpec::new(Regime::Random, 8)).unwrap();
        let mean: f64 = (0..20)
            .map(|i| risk_dir(&ts, None, i, |c, i| Ok(predict_ar(c, i, 5))).unwrap())
            .sum::<f64>()
            / 20.0;
        assert!((85.0..=95.0).contains(&mean), "{mean}");
    }

    #[test]
    fn constant_dataset_all_zero() {
        let ts = constant_set(6, 150);
        let net = ProbFollowNetwork::star(6, 0, 1.0).unwrap();
        let (label, r) = best_fit_strategy(std::slice::from_ref(&ts), 3, &SupportVector::UNIFORM, &net).unwrap();
        assert_eq!(label, BestFit::Opt);
        for x in r.as_array() {
            assert!(x < 1e-9);
        }
    }

    #[test]
    fn fold_splits_partition() {
        for (n, k) in [(10, 10), (40, 10), (7, 3), (2, 2)] {
            let splits = fold_splits(n, k, 4);
            let mut tests: Vec<usize> = splits.iter().flat_map(|s| s.2.clone()).collect();
            tests.sort();
            assert_eq!(tests, (0..n).collect::<Vec<_>>());
            for (tr, va, te) in &splits {
                assert!(!tr.is_empty() && !va.is_empty());
                assert!(te.iter().all(|x| !tr.contains(x) && !va.contains(x)));
            }
        }
    }

    #[test]
    fn identical_datasets_train_equals_test() {
        let ts = simulate(&SimSpec::new(Regime::Hm, 31)).unwrap();
        let cfg = CvConfig {
            folds: 2,
            ..CvConfig::default()
        };
        let report = cross_validate(&[ts.clone(), ts], &cfg).unwrap();
        for a in &report.agents {
            for (x, y) in a.risks.as_array().iter().zip(a.train_risks.as_array()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn inconsistent_agents_rejected() {
        let a = simulate(&SimSpec::new(Regime::Hm, 1)).unwrap();
        let mut spec = SimSpec::new(Regime::Hm, 2);
        spec.n_agents = 19;
        let b = simulate(&spec).unwrap();
        let cfg = CvConfig {
            folds: 2,
            ..CvConfig::default()
        };
        assert!(matches!(
            cross_validate(&[a, b], &cfg),
            Err(Error::InconsistentAgents(_))
        ));
    }

    #[test]
    fn separable_features_classify_perfectly() {
        let centres = [[0.9, 0.05, 0.05], [0.05, 0.9, 0.05], [0.5, 0.45, 0.05]];
        let classes = [Regime::Hm, Regime::Lra, Regime::Mixed];
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        for (c, r) in centres.iter().zip(classes) {
            for _ in 0..10 {
                feats.push(FeatureVector { median_w: *c });
                labels.push(r);
            }
        }
        let rep = classify_features(&feats, &labels, 5, 3, &ForestConfig::default()).unwrap();
        for m in &rep.metrics {
            assert_eq!(m.f1, 1.0);
        }
        for (c, row) in rep.confusion.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), rep.metrics[c].support);
        }
        assert!(matches!(
            classify_features(&feats[..10], &labels[..10], 5, 3, &ForestConfig::default()),
            Err(Error::SingleClass(1))
        ));
    }

    #[test]
    fn metric_identities() {
        let classes = [Regime::Hm, Regime::Lra, Regime::Random];
        let conf = vec![vec![5, 1, 0], vec![2, 3, 1], vec![0, 0, 4]];
        let m = class_metrics(&classes, &conf);
        assert!((m[0].precision - 5.0 / 7.0).abs() < 1e-12);
        assert!((m[1].recall - 0.5).abs() < 1e-12);
        let f = 2.0 * (3.0 / 4.0) * 0.5 / (3.0 / 4.0 + 0.5);
        assert!((m[1].f1 - f).abs() < 1e-12);
        assert_eq!(m[2].support, 4);
    }
}
