//! A small seeded random forest of Gini decision trees.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Features tried per split; 0 means `round(sqrt(d))`.
    pub max_features: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 50,
            max_depth: 4,
            min_samples_split: 2,
            max_features: 0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn predict(&self, x: &[f64]) -> usize {
        match self {
            Node::Leaf(c) => *c,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomForest {
    trees: Vec<Node>,
    n_classes: usize,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    cfg: &'a ForestConfig,
    mtry: usize,
}

impl Builder<'_> {
    fn grow<R: Rng>(&self, rows: &[usize], depth: usize, rng: &mut R) -> Node {
        let mut counts = vec![0usize; self.n_classes];
        for &r in rows {
            counts[self.y[r]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.cfg.max_depth || rows.len() < self.cfg.min_samples_split {
            return Node::Leaf(majority(&counts));
        }
        let d = self.x[0].len();
        let parent = gini(&counts, rows.len());
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in sample(rng, d, self.mtry).into_iter() {
            let mut sorted: Vec<usize> = rows.to_vec();
            sorted.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
            let mut left = vec![0usize; self.n_classes];
            let mut right = counts.clone();
            for k in 0..sorted.len() - 1 {
                let c = self.y[sorted[k]];
                left[c] += 1;
                right[c] -= 1;
                let (a, b) = (self.x[sorted[k]][feature], self.x[sorted[k + 1]][feature]);
                if a == b {
                    continue;
                }
                let nl = k + 1;
                let nr = sorted.len() - nl;
                let impurity = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / sorted.len() as f64;
                if best.is_none_or(|(bi, _, _)| impurity < bi) {
                    best = Some((impurity, feature, 0.5 * (a + b)));
                }
            }
        }
        match best {
            Some((impurity, feature, threshold)) if impurity < parent => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x[i][feature] <= threshold);
                Node::Split {
                    feature,
                    threshold,
                    left: Box::new(self.grow(&l, depth + 1, rng)),
                    right: Box::new(self.grow(&r, depth + 1, rng)),
                }
            }
            _ => Node::Leaf(majority(&counts)),
        }
    }
}

impl RandomForest {
    /// Trains on rows `x` with labels `y` in `0..n_classes`.
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, cfg: &ForestConfig) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InvalidParam(
                "forest needs matching, non-empty rows and labels".into(),
            ));
        }
        let d = x[0].len();
        if d == 0 || x.iter().any(|r| r.len() != d) || y.iter().any(|&c| c >= n_classes) {
            return Err(Error::InvalidParam("malformed forest training data".into()));
        }
        if cfg.n_trees == 0 {
            return Err(Error::InvalidParam("forest needs at least one tree".into()));
        }
        let mtry = match cfg.max_features {
            0 => ((d as f64).sqrt().round() as usize).clamp(1, d),
            m => m.min(d),
        };
        let builder = Builder {
            x,
            y,
            n_classes,
            cfg,
            mtry,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let trees = (0..cfg.n_trees)
            .map(|_| {
                let rows: Vec<usize> = (0..x.len()).map(|_| rng.gen_range(0..x.len())).collect();
                builder.grow(&rows, 0, &mut rng)
            })
            .collect();
        Ok(RandomForest { trees, n_classes })
    }

    /// Majority vote; ties go to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        majority(&votes)
    }
}
