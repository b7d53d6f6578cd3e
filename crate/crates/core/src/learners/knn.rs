//! k-nearest neighbours with Euclidean distance.

use crate::codec::{TextReader, TextWriter};
use crate::error::{Error, Result};
use crate::learners::KnnWeights;
use crate::matrix::Matrix;

/// Offset that keeps inverse-distance weights finite at zero distance.
const DISTANCE_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct KnnModel {
    pub k: usize,
    pub weights: KnnWeights,
    train: Matrix,
    labels: Vec<u8>,
}

impl KnnModel {
    /// `k` larger than the training set is clamped to its size.
    pub fn fit(x: &Matrix, y: &[u8], k: usize, weights: KnnWeights) -> KnnModel {
        KnnModel {
            k: k.min(x.nrows()),
            weights,
            train: x.clone(),
            labels: y.to_vec(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.train.ncols()
    }

    /// Weighted fraction of positive neighbours.
    pub fn scores(&self, x: &Matrix) -> Vec<f64> {
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(self.train.nrows());
        x.rows_iter()
            .map(|q| {
                dist.clear();
                dist.extend(self.train.rows_iter().enumerate().map(|(i, r)| {
                    let d2: f64 = r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d2, i)
                }));
                // ties broken by training order
                dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut pos = 0.0;
                let mut total = 0.0;
                for &(d2, i) in &dist[..self.k] {
                    let w = match self.weights {
                        KnnWeights::Uniform => 1.0,
                        KnnWeights::Distance => 1.0 / (d2.sqrt() + DISTANCE_EPS),
                    };
                    total += w;
                    if self.labels[i] == 1 {
                        pos += w;
                    }
                }
                pos / total
            })
            .collect()
    }

    pub(crate) fn write(&self, w: &mut TextWriter) {
        w.line("knn", [self.k, self.train.nrows(), self.train.ncols()]);
        w.value("weights", self.weights);
        w.line("labels", &self.labels);
        for r in self.train.rows_iter() {
            w.line("row", r);
        }
    }

    pub(crate) fn read(r: &mut TextReader<'_>) -> Result<Self> {
        let head: Vec<usize> = r.parsed("knn")?;
        let [k, n, p] = head[..] else {
            return Err(Error::ModelFormat("`knn` needs three values".into()));
        };
        let weights = r.word("weights")?.parse()?;
        let labels: Vec<u8> = r.parsed("labels")?;
        let mut train = Matrix::zeros(0, p);
        for _ in 0..n {
            let row: Vec<f64> = r.parsed("row")?;
            train.push_row(&row)?;
        }
        if labels.len() != n || k > n {
            return Err(Error::ModelFormat("inconsistent k-NN model".into()));
        }
        Ok(KnnModel { k, weights, train, labels })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> (Matrix, Vec<u8>) {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![10.0], vec![11.0]]).unwrap();
        (x, vec![0, 0, 0, 1, 1])
    }

    #[test]
    fn uniform_vote_fraction() {
        let (x, y) = line();
        let m = KnnModel::fit(&x, &y, 3, KnnWeights::Uniform);
        let q = Matrix::from_rows(&[vec![9.0], vec![1.0]]).unwrap();
        let s = m.scores(&q);
        assert!((s[0] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s[1], 0.0);
    }

    #[test]
    fn distance_weighting_prefers_close_points() {
        let (x, y) = line();
        let m = KnnModel::fit(&x, &y, 5, KnnWeights::Distance);
        let q = Matrix::from_rows(&[vec![10.0]]).unwrap();
        assert!(m.scores(&q)[0] > 0.99);
        let u = KnnModel::fit(&x, &y, 5, KnnWeights::Uniform);
        assert!((u.scores(&q)[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn k_clamped_to_training_size() {
        let (x, y) = line();
        assert_eq!(KnnModel::fit(&x, &y, 11, KnnWeights::Uniform).k, 5);
    }
}
