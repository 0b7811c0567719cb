//! Incremental Naïve Bayes over mixed binary/continuous feature vectors.
//!
//! Binary slots use Bernoulli likelihoods with additive (Laplace) smoothing;
//! continuous slots use a Gaussian with a variance floor. Class priors are
//! smoothed with the same constant. Scores are accumulated in log space.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::FeatureKind;

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum NbError {
    #[error("feature vector has dimension {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model has no classes")]
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ClassStats {
    label: usize,
    count: usize,
    /// Per binary slot: how many instances had the slot set.
    ones: Vec<usize>,
    /// Per continuous slot: running sum and sum of squares.
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    alpha: f64,
    kinds: Vec<FeatureKind>,
    classes: Vec<ClassStats>,
    total: usize,
}

impl NaiveBayes {
    pub fn new(kinds: Vec<FeatureKind>, alpha: f64) -> Self {
        assert!(alpha > 0.0, "smoothing constant must be positive");
        Self {
            alpha,
            kinds,
            classes: Vec::new(),
            total: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.kinds.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Class labels in first-seen order.
    pub fn classes(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.label).collect()
    }

    pub fn class_count(&self, label: usize) -> usize {
        self.classes
            .iter()
            .find(|c| c.label == label)
            .map_or(0, |c| c.count)
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Registers a class with no instances so it takes part in predictions.
    pub fn add_class(&mut self, label: usize) {
        if !self.classes.iter().any(|c| c.label == label) {
            let (bin, cont) = self.split_dims();
            self.classes.push(ClassStats {
                label,
                count: 0,
                ones: vec![0; bin],
                sum: vec![0.0; cont],
                sum_sq: vec![0.0; cont],
            });
        }
    }

    fn split_dims(&self) -> (usize, usize) {
        let bin = self.kinds.iter().filter(|k| **k == FeatureKind::Binary).count();
        (bin, self.kinds.len() - bin)
    }

    pub fn update(&mut self, x: &[f64], label: usize) -> Result<(), NbError> {
        if x.len() != self.kinds.len() {
            return Err(NbError::DimensionMismatch {
                expected: self.kinds.len(),
                got: x.len(),
            });
        }
        self.add_class(label);
        let class = self
            .classes
            .iter_mut()
            .find(|c| c.label == label)
            .expect("class registered");
        class.count += 1;
        let (mut b, mut c) = (0, 0);
        for (v, kind) in x.iter().zip(&self.kinds) {
            match kind {
                FeatureKind::Binary => {
                    if *v >= 0.5 {
                        class.ones[b] += 1;
                    }
                    b += 1;
                }
                FeatureKind::Continuous => {
                    class.sum[c] += v;
                    class.sum_sq[c] += v * v;
                    c += 1;
                }
            }
        }
        self.total += 1;
        Ok(())
    }

    /// Unnormalized log posterior of every class, in class order.
    pub fn log_scores(&self, x: &[f64]) -> Result<Vec<(usize, f64)>, NbError> {
        if self.classes.is_empty() {
            return Err(NbError::Empty);
        }
        if x.len() != self.kinds.len() {
            return Err(NbError::DimensionMismatch {
                expected: self.kinds.len(),
                got: x.len(),
            });
        }
        let k = self.classes.len() as f64;
        let scores = self
            .classes
            .iter()
            .map(|class| {
                let n = class.count as f64;
                let mut score = ((n + self.alpha) / (self.total as f64 + k * self.alpha)).ln();
                let (mut b, mut c) = (0, 0);
                for (v, kind) in x.iter().zip(&self.kinds) {
                    match kind {
                        FeatureKind::Binary => {
                            let p1 = (class.ones[b] as f64 + self.alpha) / (n + 2.0 * self.alpha);
                            score += if *v >= 0.5 { p1.ln() } else { (1.0 - p1).ln() };
                            b += 1;
                        }
                        FeatureKind::Continuous => {
                            let (mean, var) = if class.count == 0 {
                                (0.0, 1.0)
                            } else {
                                let mean = class.sum[c] / n;
                                (mean, (class.sum_sq[c] / n - mean * mean).max(VARIANCE_FLOOR))
                            };
                            let d = v - mean;
                            score += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - d * d / (2.0 * var);
                            c += 1;
                        }
                    }
                }
                (class.label, score)
            })
            .collect();
        Ok(scores)
    }

    /// Posterior distribution over classes, in class order.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<(usize, f64)>, NbError> {
        let scores = self.log_scores(x)?;
        let max = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = scores.iter().map(|s| (s.1 - max).exp()).sum();
        Ok(scores
            .into_iter()
            .map(|(label, s)| (label, (s - max).exp() / z))
            .collect())
    }

    /// Maximum a posteriori class; ties go to the first-seen class.
    pub fn predict_map(&self, x: &[f64]) -> Result<usize, NbError> {
        let scores = self.log_scores(x)?;
        let mut best = scores[0];
        for s in &scores[1..] {
            if s.1 > best.1 {
                best = *s;
            }
        }
        Ok(best.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bin(n: usize) -> Vec<FeatureKind> {
        vec![FeatureKind::Binary; n]
    }

    #[test]
    fn single_class() {
        let mut nb = NaiveBayes::new(bin(2), 1.0);
        nb.update(&[1.0, 0.0], 7).unwrap();
        assert_eq!(nb.predict_map(&[0.0, 1.0]).unwrap(), 7);
        let p = nb.predict(&[0.0, 1.0]).unwrap();
        assert_eq!(p, vec![(7, 1.0)]);
    }

    #[test]
    fn balanced_identical_classes() {
        let mut nb = NaiveBayes::new(bin(1), 1.0);
        nb.update(&[1.0], 0).unwrap();
        nb.update(&[1.0], 1).unwrap();
        let p = nb.predict(&[1.0]).unwrap();
        assert!((p[0].1 - 0.5).abs() < 1e-15 && (p[1].1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let nb = NaiveBayes::new(bin(2), 1.0);
        assert_eq!(nb.predict(&[0.0, 0.0]), Err(NbError::Empty));
        let mut nb = nb;
        assert!(matches!(nb.update(&[0.0], 0), Err(NbError::DimensionMismatch { .. })));
    }

    /// 20 instances over 3 binary features and 2 classes; posteriors are
    /// compared with direct smoothed-frequency products for every input.
    #[test]
    fn matches_counting_oracle() {
        let data: Vec<([u8; 3], usize)> = (0..20)
            .map(|i| {
                let f = [(i % 2) as u8, ((i / 2) % 2) as u8, ((i * 7 / 3) % 2) as u8];
                (f, usize::from(i % 3 == 0 || f[0] == 1 && f[1] == 1))
            })
            .collect();
        let alpha = 1.0;
        let mut nb = NaiveBayes::new(bin(3), alpha);
        for (f, y) in &data {
            let x: Vec<f64> = f.iter().map(|&v| v as f64).collect();
            nb.update(&x, *y).unwrap();
        }
        let labels = nb.classes();
        for code in 0..8u8 {
            let q = [code & 1, (code >> 1) & 1, (code >> 2) & 1];
            let mut joint = Vec::new();
            for &y in &labels {
                let n_y = data.iter().filter(|(_, c)| *c == y).count() as f64;
                let mut p = (n_y + alpha) / (data.len() as f64 + 2.0 * alpha);
                for k in 0..3 {
                    let match_k = data.iter().filter(|(f, c)| *c == y && f[k] == q[k]).count() as f64;
                    p *= (match_k + alpha) / (n_y + 2.0 * alpha);
                }
                joint.push(p);
            }
            let z: f64 = joint.iter().sum();
            let x: Vec<f64> = q.iter().map(|&v| v as f64).collect();
            let got = nb.predict(&x).unwrap();
            for (i, (_, p)) in got.iter().enumerate() {
                assert!((p - joint[i] / z).abs() < 1e-12);
            }
        }
    }

    /// Branch frequencies 11:1:5 with smoothing give (0.6, 0.1, 0.3) when the
    /// only feature carries no information.
    #[test]
    fn reproduces_branch_distribution() {
        let mut nb = NaiveBayes::new(vec![FeatureKind::Continuous], 1.0);
        for (label, n) in [(3, 11), (4, 1), (5, 5)] {
            for _ in 0..n {
                nb.update(&[0.25], label).unwrap();
            }
        }
        let p = nb.predict(&[0.25]).unwrap();
        let expected = [(3, 0.6), (4, 0.1), (5, 0.3)];
        for ((l, got), (el, e)) in p.iter().zip(expected) {
            assert_eq!(*l, el);
            assert!((got - e).abs() < 1e-12, "{got} vs {e}");
        }
    }

    #[test]
    fn gaussian_slot_prefers_nearby_class() {
        let mut nb = NaiveBayes::new(vec![FeatureKind::Continuous], 1.0);
        for v in [0.0, 0.1, 0.2] {
            nb.update(&[v], 0).unwrap();
        }
        for v in [0.8, 0.9, 1.0] {
            nb.update(&[v], 1).unwrap();
        }
        assert_eq!(nb.predict_map(&[0.15]).unwrap(), 0);
        assert_eq!(nb.predict_map(&[0.95]).unwrap(), 1);
    }

    #[test]
    fn long_vectors_do_not_underflow() {
        let mut nb = NaiveBayes::new(bin(5000), 1.0);
        nb.update(&vec![1.0; 5000], 0).unwrap();
        nb.update(&vec![0.0; 5000], 1).unwrap();
        let p = nb.predict(&vec![1.0; 5000]).unwrap();
        assert!(p.iter().all(|(_, v)| v.is_finite()));
        assert!((p.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(nb.predict_map(&vec![1.0; 5000]).unwrap(), 0);
    }

    fn instances() -> impl Strategy<Value = Vec<(Vec<u8>, f64, usize)>> {
        proptest::collection::vec((proptest::collection::vec(0u8..2, 3), -4i32..4, 0usize..3), 1..30)
            .prop_map(|v| v.into_iter().map(|(b, c, y)| (b, c as f64 * 0.5, y)).collect())
    }

    fn kinds() -> Vec<FeatureKind> {
        vec![
            FeatureKind::Binary,
            FeatureKind::Binary,
            FeatureKind::Binary,
            FeatureKind::Continuous,
        ]
    }

    fn fit(data: &[(Vec<u8>, f64, usize)]) -> NaiveBayes {
        let mut nb = NaiveBayes::new(kinds(), 1.0);
        for y in 0..3 {
            nb.add_class(y);
        }
        for (b, c, y) in data {
            let mut x: Vec<f64> = b.iter().map(|&v| v as f64).collect();
            x.push(*c);
            nb.update(&x, *y).unwrap();
        }
        nb
    }

    proptest! {
        #[test]
        fn posterior_sums_to_one(data in instances(), q in proptest::collection::vec(0u8..2, 3), c in -3.0f64..3.0) {
            let nb = fit(&data);
            let mut x: Vec<f64> = q.iter().map(|&v| v as f64).collect();
            x.push(c);
            let p = nb.predict(&x).unwrap();
            prop_assert!((p.iter().map(|v| v.1).sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|v| v.1 >= 0.0));
        }

        #[test]
        fn permutation_invariant(data in instances(), seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = data.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(fit(&data), fit(&shuffled));
        }

        #[test]
        fn constant_features_give_prior(counts in proptest::collection::vec(0usize..6, 3)) {
            let mut nb = NaiveBayes::new(vec![FeatureKind::Continuous, FeatureKind::Continuous], 1.0);
            for (y, n) in counts.iter().enumerate() {
                nb.add_class(y);
                for _ in 0..*n {
                    nb.update(&[0.5, 2.0], y).unwrap();
                }
            }
            let total: usize = counts.iter().sum();
            let p = nb.predict(&[0.5, 2.0]).unwrap();
            for (y, n) in counts.iter().enumerate() {
                if *n == 0 || counts.iter().all(|c| *c > 0) {
                    // classes without data use a unit-variance prior likelihood
                    if counts.iter().all(|c| *c > 0) {
                        let prior = (*n as f64 + 1.0) / (total as f64 + 3.0);
                        prop_assert!((p[y].1 - prior).abs() < 1e-9);
                    }
                }
            }
        }

        #[test]
        fn argmax_invariant_under_shift(data in instances(), shift in -50.0f64..50.0) {
            let nb = fit(&data);
            let x = [1.0, 0.0, 1.0, 0.5];
            let scores = nb.log_scores(&x).unwrap();
            let shifted: Vec<f64> = scores.iter().map(|s| (s.1 + shift) * 2.0).collect();
            let best = shifted.iter().enumerate().fold(0, |b, (i, v)| if *v > shifted[b] { i } else { b });
            prop_assert_eq!(scores[best].0, nb.predict_map(&x).unwrap());
        }
    }
}
