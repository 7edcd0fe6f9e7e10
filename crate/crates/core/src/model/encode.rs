use crate::error::{Error, Result};
use crate::math::{sign_matrix, CodeMatrix, DenseMatrix, Scalar};
use crate::net::FeedForwardNet;

/// Codes `sign(net(x))` for every column of `inputs`.
pub fn encode<T: Scalar>(net: &FeedForwardNet<T>, inputs: &DenseMatrix<T>) -> Result<CodeMatrix> {
    Ok(sign_matrix(&net.predict(inputs)?))
}

fn encode_one<T: Scalar>(net: &FeedForwardNet<T>, features: &[T]) -> Result<Vec<i8>> {
    if features.len() != net.input_dim() {
        return Err(Error::invalid(format!(
            "feature vector has {} entries, network expects {}",
            features.len(),
            net.input_dim()
        )));
    }
    let x = DenseMatrix::from_vec(features.len(), 1, features.to_vec())?;
    Ok(encode(net, &x)?.column(0).to_vec())
}

/// Hash code of a single image feature vector under the image network.
pub fn encode_image<T: Scalar>(net_x: &FeedForwardNet<T>, x: &[T]) -> Result<Vec<i8>> {
    encode_one(net_x, x)
}

/// Hash code of a single text feature vector under the text network.
pub fn encode_text<T: Scalar>(net_y: &FeedForwardNet<T>, y: &[T]) -> Result<Vec<i8>> {
    encode_one(net_y, y)
}
