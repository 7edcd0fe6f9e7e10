use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub query_count: usize,
    /// Size of the training subset drawn from the database (retrieval) side.
    pub train_count: usize,
    pub seed: u64,
}

/// Point indices of a query/database partition plus a training subset of the database.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub query: Vec<usize>,
    pub database: Vec<usize>,
    pub train: Vec<usize>,
}

impl SplitSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.query_count + 1 > n {
            return Err(Error::invalid(format!(
                "query_count {} leaves no database points out of {n}",
                self.query_count
            )));
        }
        if self.train_count > n - self.query_count {
            return Err(Error::invalid(format!(
                "train_count {} exceeds the {} database points",
                self.train_count,
                n - self.query_count
            )));
        }
        Ok(())
    }

    /// Splits `0..n`. Query and database lists are sorted; the train list is
    /// in sampled order.
    pub fn apply(&self, n: usize) -> Result<Split> {
        self.validate(n)?;
        let mut rng = Rng::seed_from(self.seed);
        let perm = rng.permutation(n);
        let mut query = perm[..self.query_count].to_vec();
        let mut database = perm[self.query_count..].to_vec();
        let mut train = database.clone();
        rng.shuffle(&mut train);
        train.truncate(self.train_count);
        query.sort_unstable();
        database.sort_unstable();
        Ok(Split {
            query,
            database,
            train,
        })
    }
}
