//! Model inversion by projected gradient descent over a relaxed adjacency.
//!
//! The homogeneous attack optimizes the strict upper triangle `b′` of a
//! symmetric adjacency; the heterogeneous attack optimizes one relaxed matrix
//! per edge type. Both minimize
//!
//! ```text
//! L = L_tar + α · [tr(Xᵀ L′ X) + β · tr(Xᵀ H′ X)] + γ · ‖A′‖₂
//! ```
//!
//! and clip every entry back into `[0, 1]` after each step.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diffmat::{Tape, Var};
use crate::gnn::{gaussian_noise, GraphInput, TrainedModel};
use crate::graph::{upper_tri_len, upper_tri_unflatten, MetaPath, Schema};
use crate::{Error, Matrix, Result};

/// Which loss terms take part in an attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermMask {
    pub tar: bool,
    pub first: bool,
    pub second: bool,
    pub norm: bool,
}

impl Default for TermMask {
    fn default() -> Self {
        Self {
            tar: true,
            first: true,
            second: true,
            norm: true,
        }
    }
}

/// Ablation variants, each removing at most one term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Full,
    NoTar,
    NoFirst,
    NoSecond,
    NoNorm,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Full,
        Variant::NoTar,
        Variant::NoFirst,
        Variant::NoSecond,
        Variant::NoNorm,
    ];

    pub fn mask(self) -> TermMask {
        let full = TermMask::default();
        match self {
            Variant::Full => full,
            Variant::NoTar => TermMask { tar: false, ..full },
            Variant::NoFirst => TermMask {
                first: false,
                ..full
            },
            Variant::NoSecond => TermMask {
                second: false,
                ..full
            },
            Variant::NoNorm => TermMask {
                norm: false,
                ..full
            },
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoTar => "-tar",
            Variant::NoFirst => "-1st",
            Variant::NoSecond => "-2nd",
            Variant::NoNorm => "-norm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s || format!("{v:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::input(format!("unknown ablation variant {s:?}")))
    }
}

/// Additive Gaussian noise on every logits query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Relaxed entries start i.i.d. uniform on `[0, init_scale]`.
    pub init_scale: f64,
    pub terms: TermMask,
    pub noise: Option<NoiseSpec>,
    /// Meta-paths for the heterogeneous proximity term, e.g. `"PAP"`.
    pub metapaths: Vec<String>,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            beta: 1.0,
            gamma: 0.01,
            epsilon: 0.1,
            iterations: 300,
            seed: 0,
            init_scale: 1e-3,
            terms: TermMask::default(),
            noise: None,
            metapaths: Vec::new(),
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::input(format!(
                    "{name} must be finite and >= 0, got {v}"
                )))
            }
        };
        nonneg("alpha", self.alpha)?;
        nonneg("beta", self.beta)?;
        nonneg("gamma", self.gamma)?;
        nonneg("epsilon", self.epsilon)?;
        nonneg("init_scale", self.init_scale)?;
        if self.iterations == 0 {
            return Err(Error::input("iterations must be >= 1"));
        }
        if let Some(n) = self.noise {
            if !n.mu.is_finite() {
                return Err(Error::input("noise mu must be finite"));
            }
            nonneg("noise sigma", n.sigma)?;
        }
        Ok(())
    }
}

/// Loss values at one iterate, before its update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub iteration: usize,
    pub tar: f64,
    /// `α`-weighted proximity term.
    pub pro: f64,
    /// `γ`-weighted norm term.
    pub norm: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomoAttack {
    /// Final relaxed upper triangle.
    pub params: Vec<f64>,
    /// `params` as a symmetric zero-diagonal matrix.
    pub relaxed: Matrix,
    pub trajectory: Vec<TrajectoryRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeteAttack {
    /// One relaxed matrix per edge type.
    pub relaxed: Vec<Matrix>,
    pub trajectory: Vec<TrajectoryRecord>,
}

/// Mean cross-entropy of `logits` against `labels` over `rows`.
pub fn loss_tar(tape: &mut Tape, logits: Var, labels: &[usize], rows: &[usize]) -> Result<Var> {
    tape.cross_entropy(logits, labels, rows)
}

/// Node features with their Gram matrix `X Xᵀ`, which turns the Laplacian
/// term into an inner product: `tr(Xᵀ L X) = ⟨L, X Xᵀ⟩`.
#[derive(Debug, Clone)]
pub struct Proximity {
    x: Matrix,
    gram: Matrix,
}

impl Proximity {
    pub fn new(x: &Matrix) -> Self {
        let gram = crate::linalg::matmul(&x.view(), &x.t());
        Self { x: x.clone(), gram }
    }

    pub fn features(&self) -> &Matrix {
        &self.x
    }

    /// `(tr(Xᵀ L′ X), tr(Xᵀ H′ X))` for a relaxed `w` on the tape, where
    /// `L′ = D′ − w` and `H′ = (I − w)ᵀ(I − w)`. Either part is `None` when
    /// masked out.
    pub fn terms(
        &self,
        tape: &mut Tape,
        w: Var,
        first: bool,
        second: bool,
    ) -> Result<(Option<Var>, Option<Var>)> {
        let n = self.x.nrows();
        if w.shape() != (n, n) {
            return Err(Error::shape(format!(
                "proximity: relaxed matrix {:?} vs {n} feature rows",
                w.shape()
            )));
        }
        let t1 = if first {
            let lap = tape.laplacian(w)?;
            let g = tape.constant(self.gram.clone());
            let prod = tape.hadamard(lap, g)?;
            Some(tape.sum(prod))
        } else {
            None
        };
        let t2 = if second {
            let x = tape.constant(self.x.clone());
            let wx = tape.matmul(w, x)?;
            let diff = tape.sub(x, wx)?;
            Some(tape.squared_norm(diff))
        } else {
            None
        };
        Ok((t1, t2))
    }
}

/// `tr(Xᵀ(L′ + β H′)X)` for a relaxed symmetric adjacency on the tape.
pub fn loss_pro_homo(tape: &mut Tape, a: Var, x: &Matrix, beta: f64) -> Result<Var> {
    let prox = Proximity::new(x);
    let (t1, t2) = prox.terms(tape, a, true, beta != 0.0)?;
    combine_pro(tape, t1, t2, beta)
}

fn combine_pro(tape: &mut Tape, t1: Option<Var>, t2: Option<Var>, beta: f64) -> Result<Var> {
    let t2 = t2.map(|v| tape.scale(v, beta));
    match (t1, t2) {
        (Some(a), Some(b)) => tape.add(a, b),
        (Some(a), None) | (None, Some(a)) => Ok(a),
        (None, None) => Ok(tape.constant(Array2::zeros((1, 1)))),
    }
}

/// Projection onto `[0, 1]`.
pub fn project(z: f64) -> f64 {
    z.clamp(0.0, 1.0)
}

/// `P(z − ε g)` elementwise, in place.
pub fn pgd_step(z: &mut [f64], grad: &[f64], epsilon: f64) -> Result<()> {
    if z.len() != grad.len() {
        return Err(Error::shape(format!(
            "pgd step: {} parameters, {} gradient entries",
            z.len(),
            grad.len()
        )));
    }
    for (v, g) in z.iter_mut().zip(grad) {
        *v = project(*v - epsilon * g);
    }
    Ok(())
}

/// Loss terms recorded for one iterate.
struct Terms {
    tar: Option<Var>,
    pro: Option<Var>,
    norm: Option<Var>,
}

impl Terms {
    fn total(&self, tape: &mut Tape) -> Result<(Var, TrajectoryRecord)> {
        let mut total: Option<Var> = None;
        for v in [self.tar, self.pro, self.norm].into_iter().flatten() {
            total = Some(match total {
                None => v,
                Some(t) => tape.add(t, v)?,
            });
        }
        let total = total.unwrap_or_else(|| tape.constant(Array2::zeros((1, 1))));
        let val = |v: Option<Var>, tape: &Tape| v.map_or(0.0, |v| tape.scalar(v));
        let rec = TrajectoryRecord {
            iteration: 0,
            tar: val(self.tar, tape),
            pro: val(self.pro, tape),
            norm: val(self.norm, tape),
            total: tape.scalar(total),
        };
        Ok((total, rec))
    }
}

fn noise_rng(seed: u64) -> ChaCha8Rng {
    crate::seeded(seed, crate::Stream::Noise)
}

fn noisy(
    tape: &mut Tape,
    logits: Var,
    noise: Option<NoiseSpec>,
    rng: &mut ChaCha8Rng,
) -> Result<Var> {
    match noise {
        None => Ok(logits),
        Some(n) => {
            let draw = gaussian_noise(logits.shape(), n.mu, n.sigma, rng)?;
            let c = tape.constant(draw);
            tape.add(logits, c)
        }
    }
}

/// Records the full homogeneous loss for upper triangle `b` (a `1 × m` leaf)
/// and returns the scalar total plus its parts.
#[allow(clippy::too_many_arguments)]
fn homo_loss(
    tape: &mut Tape,
    b: Var,
    n: usize,
    victim: &TrainedModel,
    prox: &Proximity,
    labels: &[usize],
    rows: &[usize],
    config: &AttackConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Var, TrajectoryRecord)> {
    let a = tape.unflatten_sym(b, n)?;
    let mask = config.terms;
    let tar = if mask.tar {
        let x = tape.constant(prox.features().clone());
        let out = victim.logits_on_tape(
            tape,
            GraphInput::Homo {
                adjacency: a,
                features: x,
            },
        )?;
        let logits = noisy(tape, out.logits, config.noise, rng)?;
        Some(loss_tar(tape, logits, labels, rows)?)
    } else {
        None
    };
    let pro = if mask.first || mask.second {
        let (t1, t2) = prox.terms(tape, a, mask.first, mask.second)?;
        let p = combine_pro(tape, t1, t2, config.beta)?;
        Some(tape.scale(p, config.alpha))
    } else {
        None
    };
    let norm = if mask.norm {
        let l2 = tape.l2_norm(b)?;
        Some(tape.scale(l2, config.gamma))
    } else {
        None
    };
    Terms { tar, pro, norm }.total(tape)
}

/// Total homogeneous loss at upper triangle `b`, with its gradient.
pub fn loss_homo_total(
    b: &[f64],
    x: &Matrix,
    labels: &[usize],
    victim: &TrainedModel,
    config: &AttackConfig,
) -> Result<(TrajectoryRecord, Vec<f64>)> {
    let n = x.nrows();
    check_homo_inputs(b.len(), n, labels)?;
    let prox = Proximity::new(x);
    let rows: Vec<usize> = (0..n).collect();
    let mut rng = noise_rng(config.seed);
    let mut tape = Tape::new();
    let bv = tape.leaf(Array2::from_shape_vec((1, b.len()), b.to_vec()).expect("row vector"));
    let (total, rec) = homo_loss(
        &mut tape, bv, n, victim, &prox, labels, &rows, config, &mut rng,
    )?;
    let grad = gradient_of(&tape, total, bv)?;
    Ok((rec, grad))
}

fn gradient_of(tape: &Tape, total: Var, leaf: Var) -> Result<Vec<f64>> {
    let grads = tape.backward(total)?;
    Ok(match grads.wrt(leaf) {
        Some(g) => g.iter().copied().collect(),
        None => vec![0.0; leaf.shape().0 * leaf.shape().1],
    })
}

fn check_homo_inputs(m: usize, n: usize, labels: &[usize]) -> Result<()> {
    if m != upper_tri_len(n) {
        return Err(Error::shape(format!(
            "{m} relaxed entries for {n} nodes (expected {})",
            upper_tri_len(n)
        )));
    }
    if labels.len() != n {
        return Err(Error::shape(format!(
            "{} labels for {n} nodes",
            labels.len()
        )));
    }
    Ok(())
}

fn uniform_init(len: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| rng.random::<f64>() * scale).collect()
}

/// Homogeneous inversion: recovers a relaxed adjacency from a frozen victim,
/// the node features `x` and labels of all nodes.
pub fn homo_gmi(
    victim: &TrainedModel,
    x: &Matrix,
    labels: &[usize],
    config: &AttackConfig,
) -> Result<HomoAttack> {
    config.validate()?;
    if victim.arch().is_hetero() {
        return Err(Error::schema(
            "homogeneous attack needs a GCN or GraphSAGE victim",
        ));
    }
    let n = x.nrows();
    let m = upper_tri_len(n);
    check_homo_inputs(m, n, labels)?;
    let prox = Proximity::new(x);
    let rows: Vec<usize> = (0..n).collect();
    let mut init_rng = crate::seeded(config.seed, crate::Stream::Init);
    let mut rng = noise_rng(config.seed);
    let mut b = uniform_init(m, config.init_scale, &mut init_rng);
    let mut trajectory = Vec::with_capacity(config.iterations);
    for it in 0..config.iterations {
        let mut tape = Tape::new();
        let bv = tape.leaf(Array2::from_shape_vec((1, m), b.clone()).expect("row vector"));
        let (total, mut rec) = homo_loss(
            &mut tape, bv, n, victim, &prox, labels, &rows, config, &mut rng,
        )?;
        rec.iteration = it;
        trajectory.push(rec);
        let grad = gradient_of(&tape, total, bv)?;
        pgd_step(&mut b, &grad, config.epsilon)?;
        log::debug!("homo iteration {it}: total {:.6}", rec.total);
    }
    let relaxed = upper_tri_unflatten(&b, n)?;
    Ok(HomoAttack {
        params: b,
        relaxed,
        trajectory,
    })
}

/// Resolves and validates meta-paths for the heterogeneous proximity term:
/// every path must be symmetric and all must share one anchor node type.
pub fn resolve_metapaths(
    schema: &Schema,
    names: &[String],
) -> Result<(Vec<MetaPath>, Option<usize>)> {
    let paths = names
        .iter()
        .map(|s| MetaPath::parse(schema, s))
        .collect::<Result<Vec<_>>>()?;
    check_metapaths(&paths)?;
    let anchor = paths.first().map(|p| p.start_type());
    Ok((paths, anchor))
}

fn check_metapaths(paths: &[MetaPath]) -> Result<()> {
    for p in paths {
        if !p.is_symmetric() {
            return Err(Error::MetaPath(format!("{} is not symmetric", p.name())));
        }
    }
    if let Some(first) = paths.first() {
        if let Some(p) = paths.iter().find(|p| p.start_type() != first.start_type()) {
            return Err(Error::MetaPath(format!(
                "{} and {} have different anchor types",
                first.name(),
                p.name()
            )));
        }
    }
    Ok(())
}

/// Differentiable `W′ = Σ_m Π_hops A′`, with transposes for reversed hops.
pub fn fused_metapath_adjacency(
    tape: &mut Tape,
    relations: &[Var],
    paths: &[MetaPath],
) -> Result<Var> {
    check_metapaths(paths)?;
    let mut fused: Option<Var> = None;
    for p in paths {
        let mut acc: Option<Var> = None;
        for hop in p.hops() {
            let r = *relations.get(hop.edge).ok_or_else(|| {
                Error::MetaPath(format!("{} references a missing relation", p.name()))
            })?;
            let step = if hop.reversed { tape.transpose(r) } else { r };
            acc = Some(match acc {
                None => step,
                Some(a) => tape.matmul(a, step)?,
            });
        }
        let w = acc.ok_or_else(|| Error::MetaPath(format!("{} has no hops", p.name())))?;
        fused = Some(match fused {
            None => w,
            Some(f) => tape.add(f, w)?,
        });
    }
    fused.ok_or_else(|| Error::MetaPath("no meta-paths given".to_string()))
}

/// `tr(Xᵀ(L′ + β H′)X)` over the fused meta-path adjacency of the relaxed
/// relations, with `x` the anchor type's features.
pub fn loss_pro_hete(
    tape: &mut Tape,
    relations: &[Var],
    x: &Matrix,
    paths: &[MetaPath],
    beta: f64,
) -> Result<Var> {
    let w = fused_metapath_adjacency(tape, relations, paths)?;
    let prox = Proximity::new(x);
    let (t1, t2) = prox.terms(tape, w, true, true)?;
    combine_pro(tape, t1, t2, beta)
}

/// Relaxed parameters of one edge type: a strict upper triangle when both
/// ends have the same node type, otherwise the full block.
#[derive(Debug, Clone)]
struct RelParam {
    square: Option<usize>,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl RelParam {
    fn new(schema: &Schema, edge: usize) -> Self {
        let (rows, cols) = schema.relation_shape(edge);
        let e = &schema.edge_types()[edge];
        let square = (e.src == e.dst).then_some(rows);
        let len = square.map_or(rows * cols, upper_tri_len);
        Self {
            square,
            rows,
            cols,
            values: vec![0.0; len],
        }
    }

    fn leaf(&self, tape: &mut Tape) -> Result<(Var, Var)> {
        let shape = match self.square {
            Some(n) => (1, upper_tri_len(n)),
            None => (self.rows, self.cols),
        };
        let leaf = tape.leaf(Array2::from_shape_vec(shape, self.values.clone()).expect("shape"));
        let rel = match self.square {
            Some(n) => tape.unflatten_sym(leaf, n)?,
            None => leaf,
        };
        Ok((leaf, rel))
    }

    fn matrix(&self) -> Result<Matrix> {
        match self.square {
            Some(n) => upper_tri_unflatten(&self.values, n),
            None => Ok(
                Array2::from_shape_vec((self.rows, self.cols), self.values.clone()).expect("shape"),
            ),
        }
    }
}

/// Heterogeneous inversion against an RGCN victim. `features` holds one
/// matrix per node type; `labels` covers the labeled node type.
pub fn hete_gmi(
    victim: &TrainedModel,
    schema: &Schema,
    features: &[Matrix],
    labels: &[usize],
    config: &AttackConfig,
) -> Result<HeteAttack> {
    config.validate()?;
    let crate::gnn::Model::Rgcn(rgcn) = &victim.model else {
        return Err(Error::schema("heterogeneous attack needs an RGCN victim"));
    };
    if &rgcn.schema != schema {
        return Err(Error::schema("victim was trained on a different schema"));
    }
    if features.len() != schema.node_types().len() {
        return Err(Error::schema(format!(
            "{} feature matrices for {} node types",
            features.len(),
            schema.node_types().len()
        )));
    }
    let (paths, anchor) = resolve_metapaths(schema, &config.metapaths)?;
    let mask = config.terms;
    let use_pro = (mask.first || mask.second) && !paths.is_empty();
    let prox = match anchor {
        Some(t) if use_pro => Some(Proximity::new(&features[t])),
        _ => None,
    };
    let rows: Vec<usize> = (0..labels.len()).collect();

    let mut init_rng = crate::seeded(config.seed, crate::Stream::Init);
    let mut rng = noise_rng(config.seed);
    let mut params: Vec<RelParam> = (0..schema.edge_types().len())
        .map(|k| RelParam::new(schema, k))
        .collect();
    for p in &mut params {
        p.values = uniform_init(p.values.len(), config.init_scale, &mut init_rng);
    }

    let mut trajectory = Vec::with_capacity(config.iterations);
    for it in 0..config.iterations {
        let mut tape = Tape::new();
        let mut leaves = Vec::with_capacity(params.len());
        let mut rels = Vec::with_capacity(params.len());
        for p in &params {
            let (l, r) = p.leaf(&mut tape)?;
            leaves.push(l);
            rels.push(r);
        }
        let tar = if mask.tar {
            let feats: Vec<Var> = features.iter().map(|f| tape.constant(f.clone())).collect();
            let out = victim.logits_on_tape(
                &mut tape,
                GraphInput::Hetero {
                    relations: &rels,
                    features: &feats,
                },
            )?;
            let logits = noisy(&mut tape, out.logits, config.noise, &mut rng)?;
            Some(loss_tar(&mut tape, logits, labels, &rows)?)
        } else {
            None
        };
        let pro = match &prox {
            Some(prox) => {
                let w = fused_metapath_adjacency(&mut tape, &rels, &paths)?;
                let (t1, t2) = prox.terms(&mut tape, w, mask.first, mask.second)?;
                let p = combine_pro(&mut tape, t1, t2, config.beta)?;
                Some(tape.scale(p, config.alpha))
            }
            None => None,
        };
        let norm = if mask.norm {
            let mut flat: Option<Var> = None;
            for &l in &leaves {
                let f = tape.flatten(l);
                flat = Some(match flat {
                    None => f,
                    Some(acc) => tape.concat_cols(acc, f)?,
                });
            }
            let flat = flat.expect("schema has edge types");
            let l2 = tape.l2_norm(flat)?;
            Some(tape.scale(l2, config.gamma))
        } else {
            None
        };
        let (total, mut rec) = Terms { tar, pro, norm }.total(&mut tape)?;
        rec.iteration = it;
        trajectory.push(rec);
        let grads = tape.backward(total)?;
        for (p, l) in params.iter_mut().zip(&leaves) {
            let g: Vec<f64> = match grads.wrt(*l) {
                Some(g) => g.iter().copied().collect(),
                None => vec![0.0; p.values.len()],
            };
            pgd_step(&mut p.values, &g, config.epsilon)?;
        }
        log::debug!("hete iteration {it}: total {:.6}", rec.total);
    }
    let relaxed = params
        .iter()
        .map(RelParam::matrix)
        .collect::<Result<Vec<_>>>()?;
    Ok(HeteAttack {
        relaxed,
        trajectory,
    })
}

/// Indices of the `k` largest scores; ties go to the lower index.
pub fn top_k(scores: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > scores.len() {
        return Err(Error::input(format!(
            "cannot keep {k} of {} candidate entries",
            scores.len()
        )));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    Ok(idx)
}

/// Keeps the `k` largest strict-upper-triangle entries of a relaxed symmetric
/// matrix as edges.
pub fn binarize_by_density(relaxed: &Matrix, k: usize) -> Result<Matrix> {
    let b = crate::graph::upper_tri_flatten(relaxed)?;
    let keep = top_k(&b, k)?;
    let mut flat = vec![0.0; b.len()];
    for i in keep {
        flat[i] = 1.0;
    }
    upper_tri_unflatten(&flat, relaxed.nrows())
}

/// Keeps the `k` largest entries of a rectangular relaxed relation.
pub fn binarize_relation(relaxed: &Matrix, k: usize) -> Result<Matrix> {
    let flat: Vec<f64> = relaxed.iter().copied().collect();
    let keep = top_k(&flat, k)?;
    let mut out = Array1::zeros(flat.len());
    for i in keep {
        out[i] = 1.0;
    }
    Ok(out
        .into_shape_with_order(relaxed.dim())
        .expect("same element count"))
}
