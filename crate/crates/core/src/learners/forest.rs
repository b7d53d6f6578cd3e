//! Random forest of weighted CART trees with bootstrap resampling and
//! `ceil(sqrt(p))` candidate features per split.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::codec::{TextReader, TextWriter};
use crate::error::{Error, Result};
use crate::learners::Criterion;
use crate::matrix::Matrix;
use crate::seed::{derive_seed, rng};

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Leaf {
        /// Weighted positive fraction of the training rows reaching the leaf.
        positive: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    fn leaf_positive(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { positive } => return positive,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Leaf majority vote; an even split votes negative.
    pub fn vote(&self, row: &[f64]) -> u8 {
        u8::from(self.leaf_positive(row) > 0.5)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
    /// Mean impurity decrease per feature, summing to one unless no split was made.
    pub importances: Vec<f64>,
}

fn impurity(criterion: Criterion, w0: f64, w1: f64) -> f64 {
    let t = w0 + w1;
    if t <= 0.0 {
        return 0.0;
    }
    let (p0, p1) = (w0 / t, w1 / t);
    match criterion {
        Criterion::Gini => 1.0 - p0 * p0 - p1 * p1,
        Criterion::Entropy => {
            let h = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
            h(p0) + h(p1)
        }
    }
}

struct Grower<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    w: Vec<f64>,
    criterion: Criterion,
    max_depth: Option<usize>,
    max_features: usize,
    nodes: Vec<TreeNode>,
    importance: Vec<f64>,
}

impl Grower<'_> {
    fn totals(&self, idx: &[usize]) -> (f64, f64) {
        idx.iter().fold((0.0, 0.0), |(a, b), &i| {
            if self.y[i] == 1 {
                (a, b + self.w[i])
            } else {
                (a + self.w[i], b)
            }
        })
    }

    fn grow<R: Rng>(&mut self, idx: &mut [usize], depth: usize, rng: &mut R) -> usize {
        let (w0, w1) = self.totals(idx);
        let node_imp = impurity(self.criterion, w0, w1);
        let at_depth = self.max_depth.is_some_and(|d| depth >= d);
        let id = self.nodes.len();
        let leaf = TreeNode::Leaf {
            positive: w1 / (w0 + w1),
        };
        if at_depth || idx.len() < 2 || node_imp <= 1e-12 {
            self.nodes.push(leaf);
            return id;
        }
        let Some((feature, threshold, gain)) = self.best_split(idx, w0, w1, rng) else {
            self.nodes.push(leaf);
            return id;
        };
        self.importance[feature] += gain;
        self.nodes.push(leaf);
        let mid = partition(idx, |&i| self.x.get(i, feature) <= threshold);
        let (l, r) = idx.split_at_mut(mid);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    /// Visits features in random order until `max_features` non-constant ones
    /// have been scored; returns (feature, threshold, weighted impurity decrease).
    fn best_split<R: Rng>(&self, idx: &[usize], w0: f64, w1: f64, rng: &mut R) -> Option<(usize, f64, f64)> {
        let p = self.x.ncols();
        let mut order: Vec<usize> = (0..p).collect();
        order.shuffle(rng);
        let total = w0 + w1;
        let parent = total * impurity(self.criterion, w0, w1);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut visited = 0;
        let mut vals: Vec<(f64, usize)> = Vec::with_capacity(idx.len());
        for &f in &order {
            if visited >= self.max_features {
                break;
            }
            vals.clear();
            vals.extend(idx.iter().map(|&i| (self.x.get(i, f), i)));
            vals.sort_by(|a, b| a.0.total_cmp(&b.0));
            if vals[0].0 == vals[vals.len() - 1].0 {
                continue;
            }
            visited += 1;
            let (mut l0, mut l1) = (0.0, 0.0);
            for k in 0..vals.len() - 1 {
                let i = vals[k].1;
                if self.y[i] == 1 {
                    l1 += self.w[i];
                } else {
                    l0 += self.w[i];
                }
                if vals[k].0 == vals[k + 1].0 {
                    continue;
                }
                let (r0, r1) = (w0 - l0, w1 - l1);
                let child = (l0 + l1) * impurity(self.criterion, l0, l1)
                    + (r0 + r1) * impurity(self.criterion, r0.max(0.0), r1.max(0.0));
                let gain = parent - child;
                if best.is_none_or(|b| gain > b.2) {
                    let mut t = 0.5 * (vals[k].0 + vals[k + 1].0);
                    if t >= vals[k + 1].0 {
                        t = vals[k].0;
                    }
                    best = Some((f, t, gain));
                }
            }
        }
        best.map(|(f, t, g)| (f, t, g.max(0.0)))
    }
}

fn partition<F: Fn(&usize) -> bool>(idx: &mut [usize], pred: F) -> usize {
    let mut left: Vec<usize> = idx.iter().copied().filter(|i| pred(i)).collect();
    let right: Vec<usize> = idx.iter().copied().filter(|i| !pred(i)).collect();
    let mid = left.len();
    left.extend(right);
    idx.copy_from_slice(&left);
    mid
}

impl ForestModel {
    /// `weights` are per-row class/sample weights; bootstrap counts multiply them.
    pub fn fit(
        x: &Matrix,
        y: &[u8],
        weights: &[f64],
        n_estimators: usize,
        criterion: Criterion,
        max_depth: Option<usize>,
        seed: u64,
    ) -> ForestModel {
        let n = x.nrows();
        let p = x.ncols();
        let max_features = ((p as f64).sqrt().ceil() as usize).clamp(1, p);
        let mut trees = Vec::with_capacity(n_estimators);
        let mut importances = vec![0.0; p];
        for t in 0..n_estimators {
            let mut r = rng(derive_seed(seed, &[t as u64]));
            let mut counts = vec![0usize; n];
            for _ in 0..n {
                counts[r.gen_range(0..n)] += 1;
            }
            let w: Vec<f64> = counts.iter().zip(weights).map(|(&c, &w)| c as f64 * w).collect();
            let mut idx: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
            let mut g = Grower {
                x,
                y,
                w,
                criterion,
                max_depth,
                max_features,
                nodes: Vec::new(),
                importance: vec![0.0; p],
            };
            if idx.is_empty() {
                g.nodes.push(TreeNode::Leaf { positive: 0.0 });
            } else {
                g.grow(&mut idx, 0, &mut r);
            }
            let s: f64 = g.importance.iter().sum();
            if s > 0.0 {
                for (acc, v) in importances.iter_mut().zip(&g.importance) {
                    *acc += v / s;
                }
            }
            trees.push(DecisionTree { nodes: g.nodes });
        }
        let s: f64 = importances.iter().sum();
        if s > 0.0 {
            importances.iter_mut().for_each(|v| *v /= s);
        }
        ForestModel {
            trees,
            n_features: p,
            importances,
        }
    }

    /// Fraction of trees voting positive.
    pub fn scores(&self, x: &Matrix) -> Vec<f64> {
        let t = self.trees.len() as f64;
        x.rows_iter()
            .map(|row| self.trees.iter().map(|tr| f64::from(tr.vote(row))).sum::<f64>() / t)
            .collect()
    }

    pub(crate) fn write(&self, w: &mut TextWriter) {
        w.line("forest", [self.trees.len(), self.n_features]);
        w.line("importances", &self.importances);
        for tree in &self.trees {
            w.value("tree", tree.nodes.len());
            for node in &tree.nodes {
                match node {
                    TreeNode::Leaf { positive } => w.value("leaf", positive),
                    TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => w.line(
                        "split",
                        [feature.to_string(), threshold.to_string(), left.to_string(), right.to_string()],
                    ),
                }
            }
        }
    }

    pub(crate) fn read(r: &mut TextReader<'_>) -> Result<Self> {
        let head: Vec<usize> = r.parsed("forest")?;
        let [n_trees, n_features] = head[..] else {
            return Err(Error::ModelFormat("`forest` needs two values".into()));
        };
        let importances: Vec<f64> = r.parsed("importances")?;
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let n_nodes: usize = r.one("tree")?;
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                if r.peek_key() == Some("leaf") {
                    nodes.push(TreeNode::Leaf { positive: r.one("leaf")? });
                } else {
                    let f = r.fields("split")?;
                    let bad = || Error::ModelFormat("malformed split".into());
                    let [a, b, c, d] = f[..] else { return Err(bad()) };
                    let feature: usize = a.parse().map_err(|_| bad())?;
                    let left: usize = c.parse().map_err(|_| bad())?;
                    let right: usize = d.parse().map_err(|_| bad())?;
                    if feature >= n_features || left >= n_nodes || right >= n_nodes {
                        return Err(bad());
                    }
                    nodes.push(TreeNode::Split {
                        feature,
                        threshold: b.parse().map_err(|_| bad())?,
                        left,
                        right,
                    });
                }
            }
            trees.push(DecisionTree { nodes });
        }
        if importances.len() != n_features || trees.is_empty() {
            return Err(Error::ModelFormat("inconsistent forest".into()));
        }
        Ok(ForestModel {
            trees,
            n_features,
            importances,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor(n_side: usize) -> (Matrix, Vec<u8>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n_side {
            for j in 0..n_side {
                let a = (i as f64 + 0.5) / n_side as f64 * 2.0 - 1.0;
                let b = (j as f64 + 0.5) / n_side as f64 * 2.0 - 1.0;
                rows.push(vec![a, b]);
                y.push(u8::from((a > 0.0) != (b > 0.0)));
            }
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn learns_xor() {
        let (x, y) = xor(12);
        let w = vec![1.0; y.len()];
        for criterion in [Criterion::Gini, Criterion::Entropy] {
            let m = ForestModel::fit(&x, &y, &w, 100, criterion, None, 4);
            let (tx, ty) = xor(8);
            let pred: Vec<u8> = m.scores(&tx).iter().map(|&s| u8::from(s > 0.5)).collect();
            let acc = pred.iter().zip(&ty).filter(|(a, b)| a == b).count() as f64 / ty.len() as f64;
            assert!(acc > 0.9, "{criterion}: {acc}");
        }
    }

    #[test]
    fn impurity_values() {
        assert!((impurity(Criterion::Gini, 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((impurity(Criterion::Entropy, 1.0, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(impurity(Criterion::Gini, 3.0, 0.0), 0.0);
    }

    #[test]
    fn depth_limit_respected() {
        let (x, y) = xor(10);
        let m = ForestModel::fit(&x, &y, &vec![1.0; y.len()], 5, Criterion::Gini, Some(1), 2);
        for t in &m.trees {
            assert!(t.nodes.len() <= 3);
        }
    }

    #[test]
    fn unanimous_positive_scores_one() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![5.0], vec![6.0]]).unwrap();
        let m = ForestModel::fit(&x, &[0, 0, 1, 1], &[1.0; 4], 30, Criterion::Gini, None, 0);
        let s = m.scores(&Matrix::from_rows(&[vec![100.0], vec![-100.0]]).unwrap());
        // a bootstrap sample may miss every positive row; most trees see both
        assert!(s[0] > 0.5 && s[1] < 0.5);
        let pure = ForestModel {
            trees: vec![DecisionTree { nodes: vec![TreeNode::Leaf { positive: 1.0 }] }; 3],
            n_features: 1,
            importances: vec![0.0],
        };
        assert_eq!(pure.scores(&Matrix::from_rows(&[vec![2.0]]).unwrap()), vec![1.0]);
    }
}
