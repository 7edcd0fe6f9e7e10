//! Hamming-space retrieval evaluation.
//!
//! Two protocols: Hamming ranking, scored by mean average precision over the
//! full ranking, and hash lookup, scored by precision, recall and F-measure
//! of everything within a Hamming radius. Sweeping the radius from 0 to `c`
//! gives the precision-recall curve.

mod codefile;
mod report;

use crate::data::{build_similarity, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::math::CodeMatrix;

pub use codefile::{load_codes, read_codes, save_codes, write_codes, ids_path, CODE_MAGIC, CODE_VERSION};
pub use report::{write_map_csv, write_pr_csv, Task, MAP_HEADER, PR_HEADER};

/// Coded points with their identifiers; column `k` of `codes` belongs to `ids[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeDatabase {
    pub codes: CodeMatrix,
    pub ids: Vec<u64>,
}

impl CodeDatabase {
    pub fn new(codes: CodeMatrix, ids: Vec<u64>) -> Result<Self> {
        if ids.len() != codes.points() {
            return Err(Error::invalid(format!(
                "{} ids for {} codes",
                ids.len(),
                codes.points()
            )));
        }
        Ok(Self { codes, ids })
    }

    /// Ids `0..m` in storage order.
    pub fn sequential(codes: CodeMatrix) -> Self {
        let ids = (0..codes.points() as u64).collect();
        Self { codes, ids }
    }

    pub fn len(&self) -> usize {
        self.codes.points()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bits(&self) -> usize {
        self.codes.bits()
    }

    pub fn code(&self, k: usize) -> &[i8] {
        self.codes.column(k)
    }
}

/// Query × database relevance flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    relevance: SimilarityMatrix,
}

impl GroundTruth {
    pub fn new(relevance: SimilarityMatrix) -> Self {
        Self { relevance }
    }

    /// Relevant iff the two points share at least one label.
    pub fn from_labels<L: AsRef<[u32]>>(query_labels: &[L], db_labels: &[L]) -> Self {
        Self::new(build_similarity(query_labels, db_labels))
    }

    #[inline]
    pub fn is_relevant(&self, query: usize, item: usize) -> bool {
        self.relevance.get(query, item)
    }

    pub fn relevant_count(&self, query: usize) -> usize {
        (0..self.relevance.cols()).filter(|&k| self.relevance.get(query, k)).count()
    }

    fn check(&self, queries: usize, items: usize) -> Result<()> {
        if self.relevance.shape() != (queries, items) {
            return Err(Error::invalid(format!(
                "ground truth is {}x{}, evaluation needs {queries}x{items}",
                self.relevance.rows(),
                self.relevance.cols()
            )));
        }
        Ok(())
    }
}

/// Number of positions where `a` and `b` differ.
pub fn hamming_distance(a: &[i8], b: &[i8]) -> Result<u32> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "code lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count() as u32)
}

fn check_bits(query: &[i8], db: &CodeDatabase) -> Result<()> {
    if query.len() != db.bits() {
        return Err(Error::invalid(format!(
            "query code has {} bits, database codes have {}",
            query.len(),
            db.bits()
        )));
    }
    Ok(())
}

fn distances(query: &[i8], db: &CodeDatabase) -> Result<Vec<u32>> {
    check_bits(query, db)?;
    (0..db.len()).map(|k| hamming_distance(query, db.code(k))).collect()
}

/// Database positions ordered by increasing Hamming distance; ties keep storage order.
pub fn rank_database(query: &[i8], db: &CodeDatabase) -> Result<Vec<usize>> {
    let dist = distances(query, db)?;
    // counting sort over distances 0..=c is stable by construction
    let mut buckets = vec![Vec::new(); db.bits() + 1];
    for (k, &d) in dist.iter().enumerate() {
        buckets[d as usize].push(k);
    }
    Ok(buckets.into_iter().flatten().collect())
}

/// [`rank_database`] mapped to point ids.
pub fn rank_ids(query: &[i8], db: &CodeDatabase) -> Result<Vec<u64>> {
    Ok(rank_database(query, db)?.into_iter().map(|k| db.ids[k]).collect())
}

/// Average precision of a full ranking: `(1/R) Σ_{k relevant} precision@k`.
///
/// Errors with [`Error::NoRelevant`] when nothing in the ranking is relevant.
pub fn average_precision(ranking: &[usize], relevant: impl Fn(usize) -> bool) -> Result<f64> {
    average_precision_at(ranking, relevant, None)
}

/// Average precision over the first `top_k` ranks (all when `None`).
///
/// With a cutoff the sum is divided by the relevant count inside the cutoff,
/// and a query whose relevant points all fall past the cutoff scores 0.
pub fn average_precision_at(
    ranking: &[usize],
    relevant: impl Fn(usize) -> bool,
    top_k: Option<usize>,
) -> Result<f64> {
    let total_relevant = ranking.iter().filter(|&&k| relevant(k)).count();
    if total_relevant == 0 {
        return Err(Error::NoRelevant);
    }
    let cutoff = top_k.unwrap_or(ranking.len()).min(ranking.len());
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &k) in ranking[..cutoff].iter().enumerate() {
        if relevant(k) {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    if hits == 0 {
        return Ok(0.0);
    }
    Ok(sum / hits as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapReport {
    pub map: f64,
    /// Queries that had at least one relevant database point.
    pub evaluated: usize,
    /// Queries without any relevant database point, left out of the mean.
    pub skipped: usize,
}

pub fn mean_average_precision(
    queries: &CodeDatabase,
    db: &CodeDatabase,
    truth: &GroundTruth,
) -> Result<MapReport> {
    mean_average_precision_at(queries, db, truth, None)
}

pub fn mean_average_precision_at(
    queries: &CodeDatabase,
    db: &CodeDatabase,
    truth: &GroundTruth,
    top_k: Option<usize>,
) -> Result<MapReport> {
    truth.check(queries.len(), db.len())?;
    let (mut sum, mut evaluated, mut skipped) = (0.0, 0usize, 0usize);
    for q in 0..queries.len() {
        let ranking = rank_database(queries.code(q), db)?;
        match average_precision_at(&ranking, |k| truth.is_relevant(q, k), top_k) {
            Ok(ap) => {
                sum += ap;
                evaluated += 1;
            }
            Err(Error::NoRelevant) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if evaluated == 0 {
        return Err(Error::invalid("no query has a relevant database point"));
    }
    Ok(MapReport {
        map: sum / evaluated as f64,
        evaluated,
        skipped,
    })
}

/// Database positions within Hamming distance `radius` of the query, in storage order.
pub fn hash_lookup(query: &[i8], db: &CodeDatabase, radius: usize) -> Result<Vec<usize>> {
    if radius > db.bits() {
        return Err(Error::invalid(format!(
            "radius {radius} exceeds code length {}",
            db.bits()
        )));
    }
    let dist = distances(query, db)?;
    Ok(dist
        .iter()
        .enumerate()
        .filter(|(_, &d)| d as usize <= radius)
        .map(|(k, _)| k)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PRPoint {
    pub radius: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

fn f_measure(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// How per-query lookup results are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Averaging {
    /// Pool retrieved / relevant counts over all queries, then divide.
    #[default]
    Micro,
    /// Average per-query precision and recall over queries with a relevant point.
    Macro,
}

/// Precision, recall and F-measure of hash lookup at every radius `0..=c`.
///
/// Precision is 0 when nothing is retrieved.
pub fn pr_curve(
    queries: &CodeDatabase,
    db: &CodeDatabase,
    truth: &GroundTruth,
    averaging: Averaging,
) -> Result<Vec<PRPoint>> {
    truth.check(queries.len(), db.len())?;
    let c = db.bits();
    // per query: histogram of retrieved and relevant counts by distance
    let mut retrieved = vec![vec![0usize; c + 1]; queries.len()];
    let mut hits = vec![vec![0usize; c + 1]; queries.len()];
    let mut relevant = vec![0usize; queries.len()];
    for q in 0..queries.len() {
        let dist = distances(queries.code(q), db)?;
        for (k, &d) in dist.iter().enumerate() {
            retrieved[q][d as usize] += 1;
            if truth.is_relevant(q, k) {
                hits[q][d as usize] += 1;
                relevant[q] += 1;
            }
        }
        for r in 1..=c {
            retrieved[q][r] += retrieved[q][r - 1];
            hits[q][r] += hits[q][r - 1];
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let curve = (0..=c)
        .map(|r| {
            let (precision, recall) = match averaging {
                Averaging::Micro => {
                    let got: usize = retrieved.iter().map(|v| v[r]).sum();
                    let good: usize = hits.iter().map(|v| v[r]).sum();
                    let all: usize = relevant.iter().sum();
                    (ratio(good, got), ratio(good, all))
                }
                Averaging::Macro => {
                    let counted: Vec<usize> = (0..queries.len()).filter(|&q| relevant[q] > 0).collect();
                    let m = counted.len().max(1) as f64;
                    let p: f64 = counted.iter().map(|&q| ratio(hits[q][r], retrieved[q][r])).sum();
                    let rc: f64 = counted.iter().map(|&q| ratio(hits[q][r], relevant[q])).sum();
                    (p / m, rc / m)
                }
            };
            PRPoint {
                radius: r,
                precision,
                recall,
                f_measure: f_measure(precision, recall),
            }
        })
        .collect();
    Ok(curve)
}
