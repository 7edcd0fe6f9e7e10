//! Alternating optimization: an image-network pass, a text-network pass and a
//! closed-form code update per outer iteration.
//!
//! `F` and `G` hold the latest network output for every training point.
//! A mini-batch step refreshes only its own columns, while the likelihood and
//! balance sums in the gradient run over the whole (partly stale) cache.

use std::io::Write;
use std::time::{Duration, Instant};

use crate::data::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::math::{sign_matrix, CodeMatrix, DenseMatrix, Rng, Scalar};
use crate::model::objective::{
    grad_f_columns, grad_g_columns, objective_terms, update_b, Hyperparams, ObjectiveTerms,
};
use crate::net::{Activation, FeedForwardNet};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState<T> {
    pub net_x: FeedForwardNet<T>,
    pub net_y: FeedForwardNet<T>,
    /// Cached image-network outputs, `c × n`.
    pub f: DenseMatrix<T>,
    /// Cached text-network outputs, `c × n`.
    pub g: DenseMatrix<T>,
    pub b: CodeMatrix,
    pub hyper: Hyperparams<T>,
    pub rng: Rng,
    /// Completed outer iterations.
    pub iteration: usize,
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord<T> {
    pub iteration: usize,
    pub terms: ObjectiveTerms<T>,
    pub elapsed: Duration,
}

impl<T: Scalar> TrainState<T> {
    /// Validates shapes, fills `F` and `G` with one full forward pass each and
    /// sets `B = sign(F + G)`.
    pub fn new(
        net_x: FeedForwardNet<T>,
        net_y: FeedForwardNet<T>,
        x: &DenseMatrix<T>,
        y: &DenseMatrix<T>,
        hyper: Hyperparams<T>,
        rng: Rng,
    ) -> Result<Self> {
        hyper.validate()?;
        let n = x.cols();
        if y.cols() != n {
            return Err(Error::invalid(format!(
                "image set has {n} points but text set has {}",
                y.cols()
            )));
        }
        if n == 0 {
            return Err(Error::invalid("training set is empty"));
        }
        for (name, net) in [("image", &net_x), ("text", &net_y)] {
            if net.output_dim() != hyper.code_length {
                return Err(Error::invalid(format!(
                    "{name} network outputs {} units, code length is {}",
                    net.output_dim(),
                    hyper.code_length
                )));
            }
            if net.output_activation() != Activation::Identity {
                return Err(Error::invalid(format!(
                    "{name} network must end in an identity layer"
                )));
            }
        }
        let f = net_x.predict(x)?;
        let g = net_y.predict(y)?;
        let b = sign_matrix(&f.zip_map(&g, |a, b| a + b)?);
        Ok(Self {
            net_x,
            net_y,
            f,
            g,
            b,
            hyper,
            rng,
            iteration: 0,
        })
    }

    pub fn points(&self) -> usize {
        self.f.cols()
    }

    fn check_similarity(&self, s: &SimilarityMatrix) -> Result<()> {
        let n = self.points();
        if s.shape() != (n, n) {
            return Err(Error::invalid(format!(
                "training needs a paired {n}x{n} similarity matrix, got {}x{}",
                s.rows(),
                s.cols()
            )));
        }
        Ok(())
    }

    pub fn objective_terms(&self, s: &SimilarityMatrix) -> Result<ObjectiveTerms<T>> {
        objective_terms(&self.f, &self.g, &self.b, s, &self.hyper)
    }

    fn batches(&mut self) -> Vec<Vec<usize>> {
        let perm = self.rng.permutation(self.points());
        perm.chunks(self.hyper.batch_size).map(<[usize]>::to_vec).collect()
    }

    /// One pass over the image network: `⌈n / batch_size⌉` SGD steps.
    pub fn image_pass(&mut self, x: &DenseMatrix<T>, s: &SimilarityMatrix) -> Result<()> {
        self.check_similarity(s)?;
        for batch in self.batches() {
            let inputs = x.select_columns(&batch)?;
            let (out, trace) = self.net_x.forward(&inputs)?;
            for (k, &i) in batch.iter().enumerate() {
                self.f.set_column(i, &out.column(k))?;
            }
            let scale: T = self.hyper.grad_scale.factor(batch.len(), self.points());
            let dj_df = grad_f_columns(&batch, &self.f, &self.g, &self.b, s, &self.hyper)?
                .map(|v| v * scale);
            let grads = self.net_x.backward(&trace, &dj_df)?;
            self.net_x.sgd_step(&grads, self.hyper.lr)?;
        }
        Ok(())
    }

    /// One pass over the text network, mirroring [`Self::image_pass`].
    pub fn text_pass(&mut self, y: &DenseMatrix<T>, s: &SimilarityMatrix) -> Result<()> {
        self.check_similarity(s)?;
        for batch in self.batches() {
            let inputs = y.select_columns(&batch)?;
            let (out, trace) = self.net_y.forward(&inputs)?;
            for (k, &j) in batch.iter().enumerate() {
                self.g.set_column(j, &out.column(k))?;
            }
            let scale: T = self.hyper.grad_scale.factor(batch.len(), self.points());
            let dj_dg = grad_g_columns(&batch, &self.f, &self.g, &self.b, s, &self.hyper)?
                .map(|v| v * scale);
            let grads = self.net_y.backward(&trace, &dj_dg)?;
            self.net_y.sgd_step(&grads, self.hyper.lr)?;
        }
        Ok(())
    }

    pub fn update_codes(&mut self) -> Result<()> {
        self.b = update_b(&self.f, &self.g, &self.hyper)?;
        Ok(())
    }

    /// Runs one outer iteration and reports the objective on the updated caches.
    pub fn step(
        &mut self,
        x: &DenseMatrix<T>,
        y: &DenseMatrix<T>,
        s: &SimilarityMatrix,
    ) -> Result<IterRecord<T>> {
        let started = Instant::now();
        let iteration = self.iteration + 1;
        let diverged = |e: Error| match e {
            Error::Numeric(detail) => Error::Diverged { iteration, detail },
            other => other,
        };
        self.image_pass(x, s).map_err(diverged)?;
        self.text_pass(y, s).map_err(diverged)?;
        self.update_codes()?;
        let terms = self.objective_terms(s).map_err(diverged)?;
        self.iteration = iteration;
        Ok(IterRecord {
            iteration,
            terms,
            elapsed: started.elapsed(),
        })
    }
}

/// Trains both networks for `hyper.outer_iters` outer iterations.
///
/// `x` is `d_x × n`, `y` is `d_y × n` and `s` is the `n × n` similarity of
/// the paired training points. `on_iteration` sees every log record as soon
/// as it is produced, so a caller can persist progress before a failure.
#[allow(clippy::too_many_arguments)]
pub fn train<T: Scalar>(
    x: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    s: &SimilarityMatrix,
    net_x: FeedForwardNet<T>,
    net_y: FeedForwardNet<T>,
    hyper: Hyperparams<T>,
    rng: Rng,
    mut on_iteration: impl FnMut(&IterRecord<T>),
) -> Result<TrainState<T>> {
    let mut state = TrainState::new(net_x, net_y, x, y, hyper, rng)?;
    state.check_similarity(s)?;
    state.objective_terms(s).map_err(|e| match e {
        Error::Numeric(detail) => Error::Diverged {
            iteration: 0,
            detail,
        },
        other => other,
    })?;
    for _ in 0..state.hyper.outer_iters {
        let record = state.step(x, y, s)?;
        on_iteration(&record);
    }
    Ok(state)
}

pub const LOG_HEADER: &str = "iteration,objective,likelihood,quantization,balance,wall_seconds";

/// CSV training log, one row per outer iteration, flushed after every row.
pub struct TrainLogWriter<W: Write> {
    out: W,
}

impl<W: Write> TrainLogWriter<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "{LOG_HEADER}")?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn write<T: Scalar>(&mut self, record: &IterRecord<T>) -> std::io::Result<()> {
        let t = &record.terms;
        writeln!(
            self.out,
            "{},{:?},{:?},{:?},{:?},{:.6}",
            record.iteration,
            t.total(),
            t.likelihood,
            t.quantization,
            t.balance,
            record.elapsed.as_secs_f64()
        )?;
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
