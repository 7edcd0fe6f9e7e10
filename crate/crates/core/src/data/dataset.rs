use crate::data::{build_similarity, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::math::{DenseMatrix, Scalar};

/// Paired image and text features with per-point label sets.
///
/// Features are column-per-point: `image` is `d_x × n`, `text` is `d_y × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiModalDataset<T> {
    image: DenseMatrix<T>,
    text: DenseMatrix<T>,
    labels: Vec<Vec<u32>>,
    label_names: Vec<String>,
}

impl<T: Scalar> MultiModalDataset<T> {
    pub fn new(
        image: DenseMatrix<T>,
        text: DenseMatrix<T>,
        labels: Vec<Vec<u32>>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        let n = image.cols();
        if text.cols() != n || labels.len() != n {
            return Err(Error::invalid(format!(
                "point counts disagree: image {n}, text {}, labels {}",
                text.cols(),
                labels.len()
            )));
        }
        if !image.is_finite() || !text.is_finite() {
            return Err(Error::Numeric("non-finite feature value".into()));
        }
        if text.as_slice().iter().any(|&v| v < T::zero()) {
            return Err(Error::invalid("text features must be nonnegative"));
        }
        let vocab = label_names.len() as u32;
        if let Some(bad) = labels.iter().flatten().find(|&&l| l >= vocab) {
            return Err(Error::invalid(format!(
                "label id {bad} outside vocabulary of {vocab}"
            )));
        }
        Ok(Self {
            image,
            text,
            labels,
            label_names,
        })
    }

    pub fn len(&self) -> usize {
        self.image.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn image_dim(&self) -> usize {
        self.image.rows()
    }

    pub fn text_dim(&self) -> usize {
        self.text.rows()
    }

    pub fn image(&self) -> &DenseMatrix<T> {
        &self.image
    }

    pub fn text(&self) -> &DenseMatrix<T> {
        &self.text
    }

    pub fn labels(&self) -> &[Vec<u32>] {
        &self.labels
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    /// Points at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Ok(Self {
            image: self.image.select_columns(indices)?,
            text: self.text.select_columns(indices)?,
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
            label_names: self.label_names.clone(),
        })
    }

    /// Paired square similarity of this dataset with itself.
    pub fn similarity(&self) -> SimilarityMatrix {
        build_similarity(&self.labels, &self.labels)
    }
}
