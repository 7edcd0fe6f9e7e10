//! The reduced DCMH objective
//!
//! ```text
//! J = Σ_ij [log(1 + e^Θ_ij) − S_ij Θ_ij]        Θ = ½ Fᵀ G
//!   + γ (‖B − F‖² + ‖B − G‖²)
//!   + η (‖F·1‖² + ‖G·1‖²)
//! ```
//!
//! together with its per-column gradients and the closed-form code update.
//! `F` and `G` are `c × n` (one column per training point) and `B ∈ {±1}^{c×n}`.

use serde::{Deserialize, Serialize};

use crate::data::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::math::{sigmoid, sign_matrix, softplus, CodeMatrix, DenseMatrix, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Hyperparams<T> {
    /// Weight of the quantization term.
    pub gamma: T,
    /// Weight of the bit-balance term.
    pub eta: T,
    pub code_length: usize,
    pub batch_size: usize,
    pub outer_iters: usize,
    pub lr: T,
    /// Scaling of the mini-batch gradient handed to back-propagation.
    #[serde(default)]
    pub grad_scale: GradScale,
}

/// How a mini-batch's `∂J/∂F` columns are scaled before back-propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradScale {
    /// Raw column gradients: a step follows the summed objective directly.
    Sum,
    /// Columns divided by `batch_len · n`, the mean over the batch × training
    /// pairs the batch's likelihood terms cover.
    #[default]
    PairMean,
}

impl GradScale {
    pub fn factor<T: Scalar>(self, batch_len: usize, n: usize) -> T {
        match self {
            GradScale::Sum => T::one(),
            GradScale::PairMean => T::one() / T::from_usize(batch_len * n).expect("count fits"),
        }
    }
}

impl<T: Scalar> Default for Hyperparams<T> {
    fn default() -> Self {
        Self {
            gamma: T::one(),
            eta: T::one(),
            code_length: 16,
            batch_size: 128,
            outer_iters: 500,
            lr: T::from_f64_lossy(0.01),
            grad_scale: GradScale::PairMean,
        }
    }
}

impl<T: Scalar> Hyperparams<T> {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: T| {
            if v >= T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        nonneg("gamma", self.gamma)?;
        nonneg("eta", self.eta)?;
        if !(self.lr > T::zero() && self.lr.is_finite()) {
            return Err(Error::invalid(format!("lr must be positive, got {}", self.lr)));
        }
        for (name, v) in [
            ("code_length", self.code_length),
            ("batch_size", self.batch_size),
            ("outer_iters", self.outer_iters),
        ] {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

/// The three parts of `J`, reported separately in training logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ObjectiveTerms<T> {
    /// Negative log likelihood of the similarities.
    pub likelihood: T,
    /// `γ (‖B − F‖² + ‖B − G‖²)`.
    pub quantization: T,
    /// `η (‖F·1‖² + ‖G·1‖²)`.
    pub balance: T,
}

impl<T: Scalar> ObjectiveTerms<T> {
    pub fn total(&self) -> T {
        self.likelihood + self.quantization + self.balance
    }

    pub fn is_finite(&self) -> bool {
        self.likelihood.is_finite() && self.quantization.is_finite() && self.balance.is_finite()
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `Θ = ½ Fᵀ G`, shaped `n_x × n_y`.
pub fn theta<T: Scalar>(f: &DenseMatrix<T>, g: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if f.rows() != g.rows() {
        return Err(Error::invalid(format!(
            "code lengths differ: F has {} rows, G has {}",
            f.rows(),
            g.rows()
        )));
    }
    Ok(f.transpose_matmul(g)?.map(|v| v * T::half()))
}

fn check_shapes<T: Scalar>(
    f: &DenseMatrix<T>,
    g: &DenseMatrix<T>,
    b: &CodeMatrix,
    s: &SimilarityMatrix,
) -> Result<()> {
    let (c, n) = f.shape();
    if g.shape() != (c, n) {
        return Err(Error::invalid(format!(
            "F is {c}x{n} but G is {}x{}",
            g.rows(),
            g.cols()
        )));
    }
    if (b.bits(), b.points()) != (c, n) {
        return Err(Error::invalid(format!(
            "B is {}x{}, expected {c}x{n}",
            b.bits(),
            b.points()
        )));
    }
    if s.shape() != (n, n) {
        return Err(Error::invalid(format!(
            "S is {}x{}, expected {n}x{n}",
            s.rows(),
            s.cols()
        )));
    }
    Ok(())
}

fn distance_to_codes<T: Scalar>(m: &DenseMatrix<T>, b: &CodeMatrix) -> T {
    let mut acc = T::zero();
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let code = if b.get(r, c) > 0 { T::one() } else { -T::one() };
            let d = code - m[(r, c)];
            acc = acc + d * d;
        }
    }
    acc
}

fn squared_norm<T: Scalar>(v: &[T]) -> T {
    dot(v, v)
}

pub fn objective_terms<T: Scalar>(
    f: &DenseMatrix<T>,
    g: &DenseMatrix<T>,
    b: &CodeMatrix,
    s: &SimilarityMatrix,
    hyper: &Hyperparams<T>,
) -> Result<ObjectiveTerms<T>> {
    check_shapes(f, g, b, s)?;
    let th = theta(f, g)?;
    let mut likelihood = T::zero();
    for i in 0..th.rows() {
        for (j, &t) in th.row(i).iter().enumerate() {
            let term = if s.get(i, j) { softplus(t) - t } else { softplus(t) };
            likelihood = likelihood + term;
        }
    }
    let quantization = hyper.gamma * (distance_to_codes(f, b) + distance_to_codes(g, b));
    let balance = hyper.eta * (squared_norm(&f.row_sums()) + squared_norm(&g.row_sums()));
    let terms = ObjectiveTerms {
        likelihood,
        quantization,
        balance,
    };
    if !terms.is_finite() {
        return Err(Error::Numeric(format!("objective is not finite: {terms:?}")));
    }
    Ok(terms)
}

pub fn objective<T: Scalar>(
    f: &DenseMatrix<T>,
    g: &DenseMatrix<T>,
    b: &CodeMatrix,
    s: &SimilarityMatrix,
    hyper: &Hyperparams<T>,
) -> Result<T> {
    objective_terms(f, g, b, s, hyper).map(|t| t.total())
}

/// Which side of `Θ` a gradient is taken for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Image,
    Text,
}

/// Gradient columns for the points in `indices`, shared by both modalities.
///
/// For the image side, column `k` is
/// `½ Σ_j (σ(Θ_ij) − S_ij) G_*j + 2γ (F_*i − B_*i) + 2η F·1` with `i = indices[k]`;
/// the text side swaps the roles of `F` and `G` and transposes `S`.
fn grad_columns<T: Scalar>(
    side: Side,
    indices: &[usize],
    f: &DenseMatrix<T>,
    g: &DenseMatrix<T>,
    b: &CodeMatrix,
    s: &SimilarityMatrix,
    hyper: &Hyperparams<T>,
) -> Result<DenseMatrix<T>> {
    check_shapes(f, g, b, s)?;
    let (own, other) = match side {
        Side::Image => (f, g),
        Side::Text => (g, f),
    };
    let (c, n) = own.shape();
    if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
        return Err(Error::invalid(format!("point index {bad} out of range for n = {n}")));
    }
    let other_cols = other.transpose();
    let own_cols = own.transpose();
    let balance: Vec<T> = own.row_sums();
    let two = T::two();
    let mut out = DenseMatrix::zeros(c, indices.len());
    let mut acc = vec![T::zero(); c];
    for (k, &i) in indices.iter().enumerate() {
        let own_i = own_cols.row(i);
        acc.iter_mut().for_each(|a| *a = T::zero());
        for j in 0..n {
            let other_j = other_cols.row(j);
            let t = dot(own_i, other_j) * T::half();
            let similar = match side {
                Side::Image => s.get(i, j),
                Side::Text => s.get(j, i),
            };
            let target = if similar { T::one() } else { T::zero() };
            let coef = sigmoid(t) - target;
            for (a, &v) in acc.iter_mut().zip(other_j) {
                *a = *a + coef * v;
            }
        }
        for r in 0..c {
            let code = if b.get(r, i) > 0 { T::one() } else { -T::one() };
            out[(r, k)] = T::half() * acc[r]
                + two * hyper.gamma * (own_i[r] - code)
                + two * hyper.eta * balance[r];
        }
    }
    out.ensure_finite("objective gradient")?;
    Ok(out)
}

/// `∂J/∂F_*i`.
pub fn grad_f<T: Scalar>(
    i: usize,
    f: &DenseMatrix<T>,
    g: &DenseMatrix<T>,
    b: &CodeMatrix,
    s: &SimilarityMatrix,
    hyper: &Hyperparams<T>,
) -> Result<Vec<T>> {
    grad_columns(Side::Image, &[i], f, g, b, s, hyper).map(|m| m.column(0))
}

/// `∂J/∂G_*j`.
pub fn grad_g<T: Scalar>(
    j: usize,
    f: &DenseMatrix<T>,
    g: &DenseMatrix<T>,
    b: &CodeMatrix,
    s: &SimilarityMatrix,
    hyper: &Hyperparams<T>,
) -> Result<Vec<T>> {
    grad_columns(Side::Text, &[j], f, g, b, s, hyper).map(|m| m.column(0))
}

/// `∂J/∂F_*i` for every `i` in `indices`, as a `c × |indices|` matrix.
pub fn grad_f_columns<T: Scalar>(
    indices: &[usize],
    f: &DenseMatrix<T>,
    g: &DenseMatrix<T>,
    b: &CodeMatrix,
    s: &SimilarityMatrix,
    hyper: &Hyperparams<T>,
) -> Result<DenseMatrix<T>> {
    grad_columns(Side::Image, indices, f, g, b, s, hyper)
}

/// `∂J/∂G_*j` for every `j` in `indices`, as a `c × |indices|` matrix.
pub fn grad_g_columns<T: Scalar>(
    indices: &[usize],
    f: &DenseMatrix<T>,
    g: &DenseMatrix<T>,
    b: &CodeMatrix,
    s: &SimilarityMatrix,
    hyper: &Hyperparams<T>,
) -> Result<DenseMatrix<T>> {
    grad_columns(Side::Text, indices, f, g, b, s, hyper)
}

/// Gradient of the balance term alone with respect to any column of `m`: `2η m·1`.
pub fn balance_grad<T: Scalar>(m: &DenseMatrix<T>, eta: T) -> Vec<T> {
    m.row_sums().into_iter().map(|v| T::two() * eta * v).collect()
}

/// `B = sign(γ (F + G))`, the maximizer of `tr(Bᵀ V)` over `{±1}^{c×n}`. Zero maps to `+1`.
pub fn update_b<T: Scalar>(
    f: &DenseMatrix<T>,
    g: &DenseMatrix<T>,
    hyper: &Hyperparams<T>,
) -> Result<CodeMatrix> {
    let v = f.zip_map(g, |a, b| hyper.gamma * (a + b))?;
    Ok(sign_matrix(&v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Rng;

    fn hyper(gamma: f64, eta: f64) -> Hyperparams<f64> {
        Hyperparams {
            gamma,
            eta,
            code_length: 1,
            ..Hyperparams::default()
        }
    }

    fn random(c: usize, n: usize, rng: &mut Rng) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(c, n, |_, _| rng.uniform_in(-1.5, 1.5))
    }

    #[test]
    fn defaults_match_reported_settings() {
        let h = Hyperparams::<f64>::default();
        assert_eq!((h.gamma, h.eta), (1.0, 1.0));
        assert_eq!((h.code_length, h.batch_size, h.outer_iters), (16, 128, 500));
        assert_eq!(h.lr, 0.01);
        h.validate().unwrap();
        assert!(Hyperparams { batch_size: 0, ..h }.validate().is_err());
        assert!(Hyperparams { lr: 0.0, ..h }.validate().is_err());
        assert!(Hyperparams { gamma: -1.0, ..h }.validate().is_err());
    }

    #[test]
    fn theta_small_cases() {
        let z = DenseMatrix::<f64>::zeros(3, 2);
        assert!(theta(&z, &z).unwrap().as_slice().iter().all(|&v| v == 0.0));
        let f = DenseMatrix::from_vec(1, 1, vec![2.0]).unwrap();
        let g = DenseMatrix::from_vec(1, 1, vec![3.0]).unwrap();
        assert_eq!(theta(&f, &g).unwrap().as_slice(), &[3.0]);
        assert!(theta(&DenseMatrix::<f64>::zeros(2, 1), &DenseMatrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn theta_matches_dot_loops_and_transposes() {
        let mut rng = Rng::seed_from(4);
        let f = random(4, 5, &mut rng);
        let g = random(4, 7, &mut rng);
        let th = theta(&f, &g).unwrap();
        assert_eq!(th.shape(), (5, 7));
        for i in 0..5 {
            for j in 0..7 {
                let mut d = 0.0;
                for r in 0..4 {
                    d += f[(r, i)] * g[(r, j)];
                }
                assert!((th[(i, j)] - 0.5 * d).abs() < 1e-12);
            }
        }
        assert_eq!(theta(&g, &f).unwrap(), th.transpose());
    }

    #[test]
    fn objective_by_hand() {
        // c = 1, n = 2, F = G = 0, B = +1, S = 0, γ = η = 1:
        // 4 log 2 from the likelihood, 2 + 2 from quantization, 0 balance.
        let z = DenseMatrix::<f64>::zeros(1, 2);
        let b = CodeMatrix::ones(1, 2);
        let s = SimilarityMatrix::zeros(2, 2);
        let t = objective_terms(&z, &z, &b, &s, &hyper(1.0, 1.0)).unwrap();
        assert!((t.likelihood - 4.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(t.quantization, 4.0);
        assert_eq!(t.balance, 0.0);
    }

    #[test]
    fn objective_vanishes_for_confident_dissimilar_pairs() {
        // F = 10, G = −10 → Θ = −50 everywhere, S = 0
        let f = DenseMatrix::from_vec(1, 2, vec![10.0, 10.0]).unwrap();
        let g = f.map(|v| -v);
        let b = CodeMatrix::ones(1, 2);
        let j = objective(&f, &g, &b, &SimilarityMatrix::zeros(2, 2), &hyper(0.0, 0.0)).unwrap();
        assert!(j > 0.0 && j < 1e-20);
    }

    #[test]
    fn zero_features_give_zero_likelihood_gradient() {
        let z = DenseMatrix::<f64>::zeros(3, 1);
        let b = CodeMatrix::ones(3, 1);
        let s = SimilarityMatrix::from_binary(1, 1, &[1]).unwrap();
        assert_eq!(grad_f(0, &z, &z, &b, &s, &hyper(0.0, 0.0)).unwrap(), vec![0.0; 3]);
        assert_eq!(grad_g(0, &z, &z, &b, &s, &hyper(0.0, 0.0)).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn balance_term_in_isolation() {
        // G = 0 zeroes the likelihood sum, γ = 0 drops quantization
        let mut rng = Rng::seed_from(10);
        let f = random(3, 4, &mut rng);
        let g = DenseMatrix::zeros(3, 4);
        let b = CodeMatrix::ones(3, 4);
        let s = SimilarityMatrix::zeros(4, 4);
        let eta = 0.7;
        let r = f.row_sums();
        for i in 0..4 {
            let grad = grad_f(i, &f, &g, &b, &s, &hyper(0.0, eta)).unwrap();
            for k in 0..3 {
                assert!((grad[k] - 2.0 * eta * r[k]).abs() < 1e-12);
            }
        }
        assert_eq!(balance_grad(&f, eta), r.iter().map(|v| 2.0 * eta * v).collect::<Vec<_>>());
    }

    #[test]
    fn text_gradient_mirrors_image_gradient() {
        let mut rng = Rng::seed_from(13);
        let (c, n) = (3, 5);
        let f = random(c, n, &mut rng);
        let g = random(c, n, &mut rng);
        let b = update_b(&f, &g, &hyper(1.0, 1.0)).unwrap();
        let s = SimilarityMatrix::from_fn(n, n, |_, _| rng.below(2) == 1);
        let h = hyper(0.8, 0.3);
        for j in 0..n {
            let text = grad_g(j, &f, &g, &b, &s, &h).unwrap();
            let mirrored = grad_f(j, &g, &f, &b, &s.transpose(), &h).unwrap();
            assert_eq!(text, mirrored);
        }
        let batch = grad_g_columns(&[4, 0, 4], &f, &g, &b, &s, &h).unwrap();
        assert_eq!(batch.column(0), grad_g(4, &f, &g, &b, &s, &h).unwrap());
        assert_eq!(batch.column(1), grad_g(0, &f, &g, &b, &s, &h).unwrap());
    }

    #[test]
    fn gradient_index_out_of_range() {
        let z = DenseMatrix::<f64>::zeros(2, 2);
        let b = CodeMatrix::ones(2, 2);
        let s = SimilarityMatrix::zeros(2, 2);
        assert!(matches!(grad_f(2, &z, &z, &b, &s, &hyper(1.0, 1.0)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let z = DenseMatrix::<f64>::zeros(2, 2);
        let b = CodeMatrix::ones(2, 2);
        let s = SimilarityMatrix::zeros(3, 3);
        assert!(objective(&z, &z, &b, &s, &hyper(1.0, 1.0)).is_err());
        assert!(objective(&z, &z, &CodeMatrix::ones(2, 1), &SimilarityMatrix::zeros(2, 2), &hyper(1.0, 1.0)).is_err());
    }

    #[test]
    fn code_update_tie_and_positive_cases() {
        let mut rng = Rng::seed_from(2);
        let f = random(3, 4, &mut rng);
        let g = f.map(|v| -v);
        assert_eq!(update_b(&f, &g, &hyper(1.0, 1.0)).unwrap(), CodeMatrix::ones(3, 4));
        let pos = DenseMatrix::from_fn(3, 4, |_, _| rng.uniform_in(0.1, 1.0));
        assert_eq!(update_b(&pos, &pos, &hyper(1.0, 1.0)).unwrap(), CodeMatrix::ones(3, 4));
    }

    #[test]
    fn large_theta_stays_finite() {
        // Θ = ½ · 200 · 100 = ±10⁴
        let f = DenseMatrix::from_vec(1, 2, vec![200.0, -200.0]).unwrap();
        let g = DenseMatrix::from_vec(1, 2, vec![100.0, 100.0]).unwrap();
        let b = CodeMatrix::ones(1, 2);
        let s = SimilarityMatrix::from_binary(2, 2, &[0, 1, 1, 0]).unwrap();
        let h = hyper(1.0, 1.0);
        assert!(objective(&f, &g, &b, &s, &h).unwrap().is_finite());
        assert!(grad_f(0, &f, &g, &b, &s, &h).unwrap().iter().all(|v| v.is_finite()));
        assert!(grad_g(1, &f, &g, &b, &s, &h).unwrap().iter().all(|v| v.is_finite()));
    }
}
