#![allow(dead_code)]

use dcmh::data::{SimilarityMatrix, SplitSpec, SynthConfig};
use dcmh::math::derive_seed;
use dcmh::model::{
    encode, grad_f_columns, grad_g_columns, objective, train, update_b, Hyperparams, IterRecord, ObjectiveTerms,
};
use dcmh::net::{FeedForwardNet, LayerSpec};
use dcmh::retrieval::{CodeDatabase, GroundTruth};
use dcmh::{CodeMatrix, Matrix, Rng};

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-10)
}

pub fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| scale * rng.normal())
}

pub fn random_codes(bits: usize, points: usize, rng: &mut Rng) -> CodeMatrix {
    let signs = (0..bits * points).map(|_| if rng.below(2) == 1 { 1 } else { -1 }).collect();
    CodeMatrix::from_columns_flat(bits, points, signs).unwrap()
}

pub fn random_similarity(rows: usize, cols: usize, rng: &mut Rng) -> SimilarityMatrix {
    SimilarityMatrix::from_fn(rows, cols, |_, _| rng.below(2) == 1)
}

pub struct Instance {
    pub f: Matrix,
    pub g: Matrix,
    pub b: CodeMatrix,
    pub s: SimilarityMatrix,
    pub hyper: Hyperparams<f64>,
}

pub fn random_instance(c: usize, n: usize, rng: &mut Rng) -> Instance {
    let hyper = Hyperparams {
        gamma: rng.uniform_in(0.0, 2.0),
        eta: rng.uniform_in(0.0, 2.0),
        code_length: c,
        ..Hyperparams::default()
    };
    Instance {
        f: random_matrix(c, n, 1.5, rng),
        g: random_matrix(c, n, 1.5, rng),
        b: random_codes(c, n, rng),
        s: random_similarity(n, n, rng),
        hyper,
    }
}

/// Central finite-difference gradient of `j` at `x`.
pub fn numeric_grad(x: &[f64], h: f64, mut j: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + h;
            let up = j(&probe);
            probe[k] = x[k] - h;
            let down = j(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error of the analytic `∂J/∂F` and `∂J/∂G` of one random instance,
/// each against central differences.
pub fn objective_gradient_errors(c: usize, n: usize, rng: &mut Rng) -> (f64, f64) {
    let inst = random_instance(c, n, rng);
    let all: Vec<usize> = (0..n).collect();
    let h = 1e-6;

    let analytic_f = grad_f_columns(&all, &inst.f, &inst.g, &inst.b, &inst.s, &inst.hyper).unwrap();
    let numeric_f = numeric_grad(inst.f.as_slice(), h, |v| {
        let f = Matrix::from_vec(c, n, v.to_vec()).unwrap();
        objective(&f, &inst.g, &inst.b, &inst.s, &inst.hyper).unwrap()
    });
    let analytic_g = grad_g_columns(&all, &inst.f, &inst.g, &inst.b, &inst.s, &inst.hyper).unwrap();
    let numeric_g = numeric_grad(inst.g.as_slice(), h, |v| {
        let g = Matrix::from_vec(c, n, v.to_vec()).unwrap();
        objective(&inst.f, &g, &inst.b, &inst.s, &inst.hyper).unwrap()
    });
    (
        rel_err(analytic_f.as_slice(), &numeric_f),
        rel_err(analytic_g.as_slice(), &numeric_g),
    )
}

fn randomized_net(specs: &[LayerSpec], rng: &mut Rng) -> FeedForwardNet<f64> {
    let mut net = FeedForwardNet::init(specs, rng).unwrap();
    let params: Vec<f64> = net.to_flat().iter().map(|_| 0.7 * rng.normal()).collect();
    net.set_flat(&params).unwrap();
    net
}

/// Relative error of `∂J/∂θ` assembled by backpropagation through a
/// two-layer network (once on the image side, once on the text side)
/// against finite differences of `J` in the parameters.
pub fn network_gradient_errors(rng: &mut Rng) -> (f64, f64) {
    let c = 1 + rng.below(4) as usize;
    let n = 2 + rng.below(5) as usize;
    let d = 2 + rng.below(4) as usize;
    let hidden = 3 + rng.below(4) as usize;
    let specs = LayerSpec::chain(d, &[hidden], c);
    let inst = random_instance(c, n, rng);
    let inputs = random_matrix(d, n, 1.0, rng);
    let all: Vec<usize> = (0..n).collect();
    let h = 1e-6;

    let net = randomized_net(&specs, rng);
    let (f, trace) = net.forward(&inputs).unwrap();
    let grad_out = grad_f_columns(&all, &f, &inst.g, &inst.b, &inst.s, &inst.hyper).unwrap();
    let analytic_x = net.backward(&trace, &grad_out).unwrap().to_flat();
    let mut probe = net.clone();
    let numeric_x = numeric_grad(&net.to_flat(), h, |theta| {
        probe.set_flat(theta).unwrap();
        let f = probe.predict(&inputs).unwrap();
        objective(&f, &inst.g, &inst.b, &inst.s, &inst.hyper).unwrap()
    });

    let net = randomized_net(&specs, rng);
    let (g, trace) = net.forward(&inputs).unwrap();
    let grad_out = grad_g_columns(&all, &inst.f, &g, &inst.b, &inst.s, &inst.hyper).unwrap();
    let analytic_y = net.backward(&trace, &grad_out).unwrap().to_flat();
    let mut probe = net.clone();
    let numeric_y = numeric_grad(&net.to_flat(), h, |theta| {
        probe.set_flat(theta).unwrap();
        let g = probe.predict(&inputs).unwrap();
        objective(&inst.f, &g, &inst.b, &inst.s, &inst.hyper).unwrap()
    });

    (rel_err(&analytic_x, &numeric_x), rel_err(&analytic_y, &numeric_y))
}

/// `(tr(update_b(F, G)ᵀ V), max over every code matrix of tr(Bᵀ V))` with
/// `V = γ (F + G)`. Some entries are forced to `F = −G` so that ties occur.
pub fn code_update_vs_exhaustive(c: usize, n: usize, rng: &mut Rng) -> (f64, f64) {
    let mut inst = random_instance(c, n, rng);
    inst.hyper.gamma = rng.uniform_in(0.1, 2.0);
    for r in 0..c {
        for j in 0..n {
            if rng.below(5) == 0 {
                inst.g[(r, j)] = -inst.f[(r, j)];
            }
        }
    }
    let gamma = inst.hyper.gamma;
    let v = inst.f.zip_map(&inst.g, |a, b| gamma * (a + b)).unwrap();
    let chosen = update_b(&inst.f, &inst.g, &inst.hyper).unwrap().trace_product(&v).unwrap();
    let entries = c * n;
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << entries) {
        let signs = (0..entries).map(|k| if mask >> k & 1 == 1 { 1 } else { -1 }).collect();
        let candidate = CodeMatrix::from_columns_flat(c, n, signs).unwrap();
        best = best.max(candidate.trace_product(&v).unwrap());
    }
    (chosen, best)
}

/// `(J with a random previous B, J after the code update)` with F, G fixed.
pub fn code_update_objectives(c: usize, n: usize, rng: &mut Rng) -> (f64, f64) {
    let inst = random_instance(c, n, rng);
    let new_b = update_b(&inst.f, &inst.g, &inst.hyper).unwrap();
    let before = objective(&inst.f, &inst.g, &inst.b, &inst.s, &inst.hyper).unwrap();
    let after = objective(&inst.f, &inst.g, &new_b, &inst.s, &inst.hyper).unwrap();
    (before, after)
}

/// Positions sorted by `(distance, position)`.
pub fn oracle_ranking(query: &[i8], db: &CodeDatabase) -> Vec<usize> {
    let mut order: Vec<(usize, usize)> = (0..db.len())
        .map(|k| {
            let d = query.iter().zip(db.code(k)).filter(|(a, b)| a != b).count();
            (d, k)
        })
        .collect();
    order.sort();
    order.into_iter().map(|(_, k)| k).collect()
}

/// `(map, evaluated, skipped)`, or `None` when no query has a relevant point.
pub fn oracle_map(
    queries: &CodeDatabase,
    db: &CodeDatabase,
    truth: &GroundTruth,
    top_k: Option<usize>,
) -> Option<(f64, usize, usize)> {
    let (mut sum, mut evaluated, mut skipped) = (0.0, 0, 0);
    for q in 0..queries.len() {
        let ranking = oracle_ranking(queries.code(q), db);
        if !ranking.iter().any(|&k| truth.is_relevant(q, k)) {
            skipped += 1;
            continue;
        }
        let cutoff = top_k.unwrap_or(db.len()).min(db.len());
        let mut hits = 0;
        let mut ap = 0.0;
        for (pos, &k) in ranking.iter().take(cutoff).enumerate() {
            if truth.is_relevant(q, k) {
                hits += 1;
                ap += hits as f64 / (pos + 1) as f64;
            }
        }
        sum += if hits == 0 { 0.0 } else { ap / hits as f64 };
        evaluated += 1;
    }
    (evaluated > 0).then(|| (sum / evaluated as f64, evaluated, skipped))
}

/// `(precision, recall, f)` at `radius` by direct enumeration of lookups.
pub fn oracle_pr(
    queries: &CodeDatabase,
    db: &CodeDatabase,
    truth: &GroundTruth,
    radius: usize,
    macro_average: bool,
) -> (f64, f64, f64) {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut per_query = Vec::new();
    for q in 0..queries.len() {
        let within: Vec<usize> = (0..db.len())
            .filter(|&k| {
                queries.code(q).iter().zip(db.code(k)).filter(|(a, b)| a != b).count() <= radius
            })
            .collect();
        let hits = within.iter().filter(|&&k| truth.is_relevant(q, k)).count();
        let relevant = (0..db.len()).filter(|&k| truth.is_relevant(q, k)).count();
        per_query.push((hits, within.len(), relevant));
    }
    let (p, r) = if macro_average {
        let counted: Vec<_> = per_query.iter().filter(|t| t.2 > 0).collect();
        let m = counted.len().max(1) as f64;
        let p: f64 = counted.iter().map(|t| ratio(t.0, t.1)).sum();
        let r: f64 = counted.iter().map(|t| ratio(t.0, t.2)).sum();
        (p / m, r / m)
    } else {
        let hits: usize = per_query.iter().map(|t| t.0).sum();
        let got: usize = per_query.iter().map(|t| t.1).sum();
        let rel: usize = per_query.iter().map(|t| t.2).sum();
        (ratio(hits, got), ratio(hits, rel))
    };
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f)
}

pub fn random_labels(points: usize, classes: u32, rng: &mut Rng) -> Vec<Vec<u32>> {
    (0..points)
        .map(|_| (0..classes).filter(|_| rng.below(3) == 0).collect())
        .collect()
}

/// The small synthetic problem used for the training checks.
pub struct ToyRun {
    pub log: Vec<ObjectiveTerms<f64>>,
    pub map_image_to_text: f64,
    pub map_text_to_image: f64,
    pub random_baseline: f64,
}

pub const TOY_HIDDEN: usize = 128;

/// Two classes of 100 points (`d_x = 32`, `d_y = 64`, noise 0.1, data seed 7),
/// 40 queries, training on the 160 database points, `c = 8`, `γ = η = 1`,
/// `lr = 0.01`, 100 outer iterations. Seeds fan out from `seed` the same way
/// the `train` subcommand does.
pub fn toy_run(seed: u64) -> ToyRun {
    let ds = SynthConfig {
        seed: 7,
        ..SynthConfig::default()
    }
    .generate::<f64>()
    .unwrap();
    let split = SplitSpec {
        query_count: 40,
        train_count: 160,
        seed: derive_seed(seed, 0),
    }
    .apply(ds.len())
    .unwrap();
    let c = 8;
    let tr = ds.subset(&split.train).unwrap();
    let net_x = FeedForwardNet::init(
        &LayerSpec::chain(32, &[TOY_HIDDEN], c),
        &mut Rng::seed_from(derive_seed(seed, 1)),
    )
    .unwrap();
    let net_y = FeedForwardNet::init(
        &LayerSpec::chain(64, &[TOY_HIDDEN], c),
        &mut Rng::seed_from(derive_seed(seed, 2)),
    )
    .unwrap();
    let hyper = Hyperparams {
        gamma: 1.0,
        eta: 1.0,
        code_length: c,
        outer_iters: 100,
        lr: 0.01,
        ..Hyperparams::default()
    };
    let mut log = Vec::new();
    let state = train(
        tr.image(),
        tr.text(),
        &tr.similarity(),
        net_x,
        net_y,
        hyper,
        Rng::seed_from(derive_seed(seed, 3)),
        |r: &IterRecord<f64>| log.push(r.terms),
    )
    .unwrap();

    let q = ds.subset(&split.query).unwrap();
    let d = ds.subset(&split.database).unwrap();
    let truth = GroundTruth::from_labels(q.labels(), d.labels());
    let db = |codes| CodeDatabase::sequential(codes);
    let map = |queries: &CodeDatabase, items: &CodeDatabase| {
        dcmh::retrieval::mean_average_precision(queries, items, &truth).unwrap().map
    };
    let qi = db(encode(&state.net_x, q.image()).unwrap());
    let qt = db(encode(&state.net_y, q.text()).unwrap());
    let di = db(encode(&state.net_x, d.image()).unwrap());
    let dt = db(encode(&state.net_y, d.text()).unwrap());
    let mut rng = Rng::seed_from(derive_seed(seed, 99));
    let rq = db(random_codes(c, q.len(), &mut rng));
    let rd = db(random_codes(c, d.len(), &mut rng));
    ToyRun {
        log,
        map_image_to_text: map(&qi, &dt),
        map_text_to_image: map(&qt, &di),
        random_baseline: map(&rq, &rd),
    }
}

/// Criterion for the loss trend: the likelihood at iteration `i + 10` is
/// below the likelihood at `i` for every `i`, so the mean change over every
/// 10-iteration window is negative. Returns the offending window starts.
pub fn likelihood_window_violations(log: &[ObjectiveTerms<f64>]) -> Vec<usize> {
    (0..log.len().saturating_sub(10))
        .filter(|&i| log[i + 10].likelihood >= log[i].likelihood)
        .map(|i| i + 1)
        .collect()
}
