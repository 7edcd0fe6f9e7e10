//! Synthetic two-view dataset.
//!
//! Each class gets a unit-norm Gaussian direction as its image centroid and a
//! peaked word distribution (softmax of `2·z`, `z ~ N(0, 1)`) as its text
//! topic. A point of class `k` has image features `centroid_k + noise · N(0, I)`
//! and a bag-of-words count vector of [`WORDS_PER_DOCUMENT`] draws from
//! `topic_k`. Point `i` belongs to class `i mod classes`.
//!
//! Sub-streams of the seed: 0 for centroids, 1 for topics, 2 for points.

use crate::data::MultiModalDataset;
use crate::error::{Error, Result};
use crate::math::{DenseMatrix, Rng, Scalar};

pub const WORDS_PER_DOCUMENT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub classes: usize,
    pub per_class: usize,
    pub image_dim: usize,
    pub text_dim: usize,
    pub noise: f64,
    pub seed: u64,
    pub words_per_document: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            classes: 2,
            per_class: 100,
            image_dim: 32,
            text_dim: 64,
            noise: 0.1,
            seed: 0,
            words_per_document: WORDS_PER_DOCUMENT,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::invalid("classes must be at least 2"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid(format!("noise must be >= 0, got {}", self.noise)));
        }
        if self.image_dim == 0 || self.text_dim == 0 {
            return Err(Error::invalid("feature dimensions must be at least 1"));
        }
        Ok(())
    }

    pub fn generate<T: Scalar>(&self) -> Result<MultiModalDataset<T>> {
        self.validate()?;
        let root = Rng::seed_from(self.seed);

        let mut rng = root.fork(0);
        let centroids: Vec<Vec<f64>> = (0..self.classes)
            .map(|_| {
                let mut v: Vec<f64> = (0..self.image_dim).map(|_| rng.normal()).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                v.iter_mut().for_each(|x| *x /= norm);
                v
            })
            .collect();

        let mut rng = root.fork(1);
        let topics: Vec<Vec<f64>> = (0..self.classes)
            .map(|_| {
                let w: Vec<f64> = (0..self.text_dim).map(|_| (2.0 * rng.normal()).exp()).collect();
                let total: f64 = w.iter().sum();
                let mut acc = 0.0;
                // cumulative distribution for inverse-CDF sampling
                w.iter()
                    .map(|x| {
                        acc += x / total;
                        acc
                    })
                    .collect()
            })
            .collect();

        let n = self.classes * self.per_class;
        let mut rng = root.fork(2);
        let mut image = DenseMatrix::zeros(self.image_dim, n);
        let mut text = DenseMatrix::zeros(self.text_dim, n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let class = i % self.classes;
            for (r, &c) in centroids[class].iter().enumerate() {
                let v = if self.noise > 0.0 { c + self.noise * rng.normal() } else { c };
                image[(r, i)] = T::from_f64_lossy(v);
            }
            let cdf = &topics[class];
            for _ in 0..self.words_per_document {
                let u = rng.uniform();
                let word = cdf.partition_point(|&p| p <= u).min(self.text_dim - 1);
                text[(word, i)] = text[(word, i)] + T::one();
            }
            labels.push(vec![class as u32]);
        }
        let names = (0..self.classes).map(|k| format!("class{k}")).collect();
        MultiModalDataset::new(image, text, labels, names)
    }
}

/// Synthetic dataset with [`WORDS_PER_DOCUMENT`] words per text.
pub fn synth_dataset<T: Scalar>(
    classes: usize,
    per_class: usize,
    image_dim: usize,
    text_dim: usize,
    noise: f64,
    seed: u64,
) -> Result<MultiModalDataset<T>> {
    SynthConfig {
        classes,
        per_class,
        image_dim,
        text_dim,
        noise,
        seed,
        words_per_document: WORDS_PER_DOCUMENT,
    }
    .generate()
}

/// Accuracy of assigning each point's image features to the nearest class
/// mean (means taken over the dataset, first label per point).
pub fn nearest_centroid_accuracy<T: Scalar>(ds: &MultiModalDataset<T>) -> f64 {
    let classes = ds.label_names().len();
    let d = ds.image_dim();
    let mut means = vec![vec![0.0f64; d]; classes];
    let mut counts = vec![0usize; classes];
    for (i, labels) in ds.labels().iter().enumerate() {
        if let Some(&l) = labels.first() {
            counts[l as usize] += 1;
            for (r, m) in means[l as usize].iter_mut().enumerate() {
                *m += ds.image()[(r, i)].to_f64_lossy();
            }
        }
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= c.max(1) as f64);
    }
    let (mut hits, mut total) = (0usize, 0usize);
    for (i, labels) in ds.labels().iter().enumerate() {
        let Some(&truth) = labels.first() else { continue };
        let best = (0..classes)
            .filter(|&k| counts[k] > 0)
            .min_by(|&a, &b| {
                let dist = |k: usize| -> f64 {
                    (0..d)
                        .map(|r| (ds.image()[(r, i)].to_f64_lossy() - means[k][r]).powi(2))
                        .sum()
                };
                dist(a).total_cmp(&dist(b))
            });
        total += 1;
        if best == Some(truth as usize) {
            hits += 1;
        }
    }
    hits as f64 / total.max(1) as f64
}
