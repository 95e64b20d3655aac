//! Reconstruction metrics, similarity baselines and experiment drivers.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::attack::{hete_gmi, homo_gmi, AttackConfig, HeteAttack, HomoAttack, NoiseSpec, Variant};
use crate::gnn::{accuracy, GraphRef, TrainedModel};
use crate::graph::{metapath_adjacency, HeteroGraph, HomoGraph, MetaPath};
use crate::linalg::{cosine_similarity, cross_cosine};
use crate::{Error, Matrix, Result};

/// What a report scores.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Homo,
    PerEdgeType(String),
    MetaPathSubgraph(String),
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Homo => f.write_str("homo"),
            Mode::PerEdgeType(e) => write!(f, "per-edge-type:{e}"),
            Mode::MetaPathSubgraph(m) => write!(f, "meta-path-subgraph:{m}"),
        }
    }
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "homo" {
            return Ok(Mode::Homo);
        }
        if let Some(e) = s.strip_prefix("per-edge-type:") {
            return Ok(Mode::PerEdgeType(e.to_string()));
        }
        if let Some(m) = s.strip_prefix("meta-path-subgraph:") {
            return Ok(Mode::MetaPathSubgraph(m.to_string()));
        }
        Err(Error::input(format!("unknown evaluation mode {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auc: f64,
    pub ap: f64,
    pub edges: usize,
    pub nonedges: usize,
    pub seed: u64,
    pub mode: Mode,
}

fn check_scored(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::shape(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("NaN score".into()));
    }
    Ok(())
}

/// Mann–Whitney AUC: the probability that a random positive outscores a
/// random negative, counting ties as one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_scored(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric(format!(
            "AUC needs both classes ({pos} positives, {neg} negatives)"
        )));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Doubled counts keep the tie halves integral.
    let mut wins2: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut k = 0;
    while k < idx.len() {
        let mut end = k;
        while end < idx.len() && scores[idx[end]] == scores[idx[k]] {
            end += 1;
        }
        let p = idx[k..end].iter().filter(|&&i| labels[i]).count() as u128;
        let n = (end - k) as u128 - p;
        wins2 += 2 * p * neg_below + p * n;
        neg_below += n;
        k = end;
    }
    Ok(wins2 as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Average precision over the ranking by descending score; equal scores keep
/// their input order.
pub fn ap(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_scored(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 {
        return Err(Error::Metric("AP needs at least one positive".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut tp = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in idx.iter().enumerate() {
        if labels[i] {
            tp += 1;
            sum += tp as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / pos as f64)
}

/// Uniform sample without replacement of `count` pairs `i < j` with
/// `A_ij = 0`, returned in row-major order.
pub fn sample_non_edges(a_true: &Matrix, count: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    let n = a_true.nrows();
    if a_true.ncols() != n {
        return Err(Error::shape(format!("adjacency is {n}x{}", a_true.ncols())));
    }
    let candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .filter(|&(i, j)| a_true[[i, j]] == 0.0)
        .collect();
    draw(candidates, count, seed)
}

/// Like [`sample_non_edges`] for a rectangular relation: any `(i, j)` with
/// `A_ij = 0`.
pub fn sample_non_edges_rect(
    a_true: &Matrix,
    count: usize,
    seed: u64,
) -> Result<Vec<(usize, usize)>> {
    let candidates: Vec<(usize, usize)> = a_true
        .indexed_iter()
        .filter(|(_, v)| **v == 0.0)
        .map(|(ij, _)| ij)
        .collect();
    draw(candidates, count, seed)
}

fn draw(candidates: Vec<(usize, usize)>, count: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if count > candidates.len() {
        return Err(Error::input(format!(
            "cannot sample {count} non-edges from {} candidates",
            candidates.len()
        )));
    }
    let mut rng = crate::seeded(seed, crate::Stream::Sampling);
    let mut picked = rand::seq::index::sample(&mut rng, candidates.len(), count).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|k| candidates[k]).collect())
}

fn score_pairs(
    scores: &Matrix,
    positives: Vec<(usize, usize)>,
    negatives: Vec<(usize, usize)>,
    seed: u64,
    mode: Mode,
) -> Result<EvalReport> {
    let (edges, nonedges) = (positives.len(), negatives.len());
    let mut pairs: Vec<((usize, usize), bool)> = positives
        .into_iter()
        .map(|p| (p, true))
        .chain(negatives.into_iter().map(|p| (p, false)))
        .collect();
    pairs.sort_unstable_by_key(|(p, _)| *p);
    let s: Vec<f64> = pairs.iter().map(|((i, j), _)| scores[[*i, *j]]).collect();
    let l: Vec<bool> = pairs.iter().map(|(_, y)| *y).collect();
    Ok(EvalReport {
        auc: auc(&s, &l)?,
        ap: ap(&s, &l)?,
        edges,
        nonedges,
        seed,
        mode,
    })
}

/// Scores every true edge `i < j` and as many sampled non-edges by the
/// entries of `scores`.
pub fn evaluate_reconstruction(
    scores: &Matrix,
    a_true: &Matrix,
    seed: u64,
    mode: Mode,
) -> Result<EvalReport> {
    if scores.dim() != a_true.dim() {
        return Err(Error::shape(format!(
            "scores {:?} vs adjacency {:?}",
            scores.dim(),
            a_true.dim()
        )));
    }
    let n = a_true.nrows();
    let positives: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .filter(|&(i, j)| a_true[[i, j]] != 0.0)
        .collect();
    let negatives = sample_non_edges(a_true, positives.len(), seed)?;
    score_pairs(scores, positives, negatives, seed, mode)
}

/// Rectangular counterpart of [`evaluate_reconstruction`] over all entries.
pub fn evaluate_relation(
    scores: &Matrix,
    a_true: &Matrix,
    seed: u64,
    mode: Mode,
) -> Result<EvalReport> {
    if scores.dim() != a_true.dim() {
        return Err(Error::shape(format!(
            "scores {:?} vs relation {:?}",
            scores.dim(),
            a_true.dim()
        )));
    }
    let positives: Vec<(usize, usize)> = a_true
        .indexed_iter()
        .filter(|(_, v)| **v != 0.0)
        .map(|(ij, _)| ij)
        .collect();
    let negatives = sample_non_edges_rect(a_true, positives.len(), seed)?;
    score_pairs(scores, positives, negatives, seed, mode)
}

/// Cosine similarity of node attributes; zero rows score 0.
pub fn sim_attr_scores(x: &Matrix) -> Matrix {
    cosine_similarity(&x.view())
}

/// Cosine similarity of the victim's penultimate embeddings.
pub fn sim_emb_scores(trained: &TrainedModel, graph: GraphRef<'_>) -> Result<Matrix> {
    Ok(sim_attr_scores(&trained.penultimate_embeddings(graph)?))
}

/// Binary meta-path subgraph `W^m > 0` without self-loops.
pub fn metapath_subgraph(graph: &HeteroGraph, path: &MetaPath) -> Result<Matrix> {
    let w = metapath_adjacency(graph.schema(), graph.relations(), path)?;
    let mut b = w.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
    for i in 0..b.nrows() {
        b[[i, i]] = 0.0;
    }
    Ok(b)
}

/// Per-edge-type reports, then one report per meta-path subgraph scored by
/// the relaxed `W^m` built from `relaxed`.
pub fn hetero_eval(
    relaxed: &[Matrix],
    graph: &HeteroGraph,
    paths: &[MetaPath],
    seed: u64,
) -> Result<Vec<EvalReport>> {
    let schema = graph.schema();
    schema.check_relations(relaxed)?;
    let mut reports = Vec::new();
    for (k, e) in schema.edge_types().iter().enumerate() {
        let truth = &graph.relations()[k];
        let mode = Mode::PerEdgeType(e.name.clone());
        reports.push(if e.src == e.dst {
            evaluate_reconstruction(&relaxed[k], truth, seed, mode)?
        } else {
            evaluate_relation(&relaxed[k], truth, seed, mode)?
        });
    }
    for p in paths {
        if !p.is_symmetric() {
            return Err(Error::MetaPath(format!("{} is not symmetric", p.name())));
        }
        let truth = metapath_subgraph(graph, p)?;
        let scores = metapath_adjacency(schema, relaxed, p)?;
        reports.push(evaluate_reconstruction(
            &scores,
            &truth,
            seed,
            Mode::MetaPathSubgraph(p.name().to_string()),
        )?);
    }
    Ok(reports)
}

/// Relation blocks rebuilt from the victim's layer-1 embeddings. Entry
/// `(i, j)` of an edge type is `(1 + cos(h_i, h_j)) / 2` over the embeddings
/// of its source and destination node types.
pub fn sim_emb_relations(trained: &TrainedModel, graph: &HeteroGraph) -> Result<Vec<Matrix>> {
    let embeddings = trained.hetero_embeddings(graph)?;
    Ok(graph
        .schema()
        .edge_types()
        .iter()
        .map(|e| {
            cross_cosine(&embeddings[e.src].view(), &embeddings[e.dst].view())
                .mapv(|c| (1.0 + c) / 2.0)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeteroBaselines {
    /// Sim-Attr on each anchor meta-path subgraph, in meta-path order.
    pub attr: Vec<EvalReport>,
    /// [`hetero_eval`] of the Sim-Emb relation blocks.
    pub emb: Vec<EvalReport>,
}

impl HeteroBaselines {
    /// Best baseline AUC comparable with the attack's report for `edge`:
    /// Sim-Emb on that edge type and Sim-Attr on every meta-path through it.
    pub fn best_for_edge_type(&self, graph: &HeteroGraph, paths: &[MetaPath], edge: usize) -> f64 {
        let name = &graph.schema().edge_types()[edge].name;
        let emb = self
            .emb
            .iter()
            .filter(|r| matches!(&r.mode, Mode::PerEdgeType(n) if n == name))
            .map(|r| r.auc);
        let attr = paths
            .iter()
            .zip(&self.attr)
            .filter(|(p, _)| p.hops().iter().any(|h| h.edge == edge))
            .map(|(_, r)| r.auc);
        emb.chain(attr).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Sim-Attr scores the anchor type's features directly. Sim-Emb rebuilds
/// every relation first and is evaluated like an attack output.
pub fn hetero_baselines(
    trained: &TrainedModel,
    graph: &HeteroGraph,
    paths: &[MetaPath],
    seed: u64,
) -> Result<HeteroBaselines> {
    let attr = paths
        .iter()
        .map(|p| {
            let truth = metapath_subgraph(graph, p)?;
            let mode = Mode::MetaPathSubgraph(p.name().to_string());
            evaluate_reconstruction(
                &sim_attr_scores(&graph.features()[p.start_type()]),
                &truth,
                seed,
                mode,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let emb = hetero_eval(&sim_emb_relations(trained, graph)?, graph, paths, seed)?;
    Ok(HeteroBaselines { attr, emb })
}

/// Mean AUC of the per-edge-type reports.
pub fn mean_edge_type_auc(reports: &[EvalReport]) -> f64 {
    let aucs: Vec<f64> = reports
        .iter()
        .filter(|r| matches!(r.mode, Mode::PerEdgeType(_)))
        .map(|r| r.auc)
        .collect();
    aucs.iter().sum::<f64>() / aucs.len().max(1) as f64
}

/// The attack configuration of an ablation variant.
pub fn ablation_config(base: &AttackConfig, variant: Variant) -> AttackConfig {
    AttackConfig {
        terms: variant.mask(),
        ..base.clone()
    }
}

/// Homogeneous attack with one term removed, evaluated against the truth.
pub fn ablation_run_homo(
    graph: &HomoGraph,
    victim: &TrainedModel,
    base: &AttackConfig,
    variant: Variant,
    eval_seed: u64,
) -> Result<(EvalReport, HomoAttack)> {
    let attack = homo_gmi(
        victim,
        graph.features(),
        graph.labels(),
        &ablation_config(base, variant),
    )?;
    let report =
        evaluate_reconstruction(&attack.relaxed, graph.adjacency(), eval_seed, Mode::Homo)?;
    Ok((report, attack))
}

/// Heterogeneous counterpart of [`ablation_run_homo`].
pub fn ablation_run_hete(
    graph: &HeteroGraph,
    victim: &TrainedModel,
    base: &AttackConfig,
    variant: Variant,
    eval_seed: u64,
) -> Result<(Vec<EvalReport>, HeteAttack)> {
    let cfg = ablation_config(base, variant);
    let attack = hete_gmi(
        victim,
        graph.schema(),
        graph.features(),
        graph.labels(),
        &cfg,
    )?;
    let paths = cfg
        .metapaths
        .iter()
        .map(|m| MetaPath::parse(graph.schema(), m))
        .collect::<Result<Vec<_>>>()?;
    let reports = hetero_eval(&attack.relaxed, graph, &paths, eval_seed)?;
    Ok((reports, attack))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePoint {
    pub sigma: f64,
    /// Test accuracy of the victim's noisy logits.
    pub accuracy: f64,
    pub report: EvalReport,
}

/// For each `σ`, measures victim test accuracy under `N(μ, σ²)` logit noise
/// and runs the homogeneous attack against the noisy oracle.
pub fn noise_sweep(
    graph: &HomoGraph,
    victim: &TrainedModel,
    base: &AttackConfig,
    mu: f64,
    sigmas: &[f64],
    eval_seed: u64,
) -> Result<Vec<NoisePoint>> {
    sigmas
        .iter()
        .map(|&sigma| {
            let logits = victim.noisy_logits(GraphRef::Homo(graph), mu, sigma, base.seed)?;
            let acc = accuracy(&logits, graph.labels(), &victim.meta.split.test);
            let cfg = AttackConfig {
                noise: Some(NoiseSpec { mu, sigma }),
                ..base.clone()
            };
            let attack = homo_gmi(victim, graph.features(), graph.labels(), &cfg)?;
            let report =
                evaluate_reconstruction(&attack.relaxed, graph.adjacency(), eval_seed, Mode::Homo)?;
            Ok(NoisePoint {
                sigma,
                accuracy: acc,
                report,
            })
        })
        .collect()
}
