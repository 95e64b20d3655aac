//! Victim models: two-layer GCN, mean-aggregator GraphSAGE and RGCN.
//!
//! Forward passes are recorded on a [`Tape`] so the same code serves
//! training (weights are leaves) and attacks (weights are constants and the
//! adjacency is the leaf).

use ndarray::{Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::diffmat::{softmax_rows, Tape, Var};
use crate::graph::{HeteroGraph, HomoGraph, Schema};
use crate::{Error, Matrix, Result};

/// Denominator floor for mean aggregation over relaxed adjacencies.
pub const AGG_DELTA: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Gcn,
    Sage,
    Rgcn,
}

impl Arch {
    pub fn as_str(self) -> &'static str {
        match self {
            Arch::Gcn => "gcn",
            Arch::Sage => "sage",
            Arch::Rgcn => "rgcn",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(Arch::Gcn),
            "sage" | "graphsage" => Ok(Arch::Sage),
            "rgcn" => Ok(Arch::Rgcn),
            other => Err(Error::input(format!("unknown architecture {other:?}"))),
        }
    }

    pub fn is_hetero(self) -> bool {
        matches!(self, Arch::Rgcn)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    pub w1: Matrix,
    pub w2: Matrix,
}

/// Weights act on `[self ‖ neighbor mean]`, so `w1` is `2d × h` and `w2` is
/// `2h × F`.
#[derive(Debug, Clone, PartialEq)]
pub struct SageModel {
    pub w1: Matrix,
    pub w2: Matrix,
}

/// A message channel of the RGCN: nodes of type `target` aggregate from
/// nodes of type `source` through edge type `edge` (or its transpose).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub edge: usize,
    pub reversed: bool,
    pub target: usize,
    pub source: usize,
}

/// Every declared edge type in both directions.
pub fn relations_of(schema: &Schema) -> Vec<Relation> {
    schema
        .edge_types()
        .iter()
        .enumerate()
        .flat_map(|(k, e)| {
            [
                Relation {
                    edge: k,
                    reversed: false,
                    target: e.src,
                    source: e.dst,
                },
                Relation {
                    edge: k,
                    reversed: true,
                    target: e.dst,
                    source: e.src,
                },
            ]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgcnModel {
    pub schema: Schema,
    pub labeled_type: usize,
    pub relations: Vec<Relation>,
    /// Layer-1 self weights, one per node type (`d_t × h`).
    pub self1: Vec<Matrix>,
    /// Layer-1 relation weights (`d_source × h`).
    pub rel1: Vec<Matrix>,
    /// Layer-2 self weight for the labeled type (`h × F`).
    pub self2: Matrix,
    /// Layer-2 relation weights (`h × F`).
    pub rel2: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Gcn(GcnModel),
    Sage(SageModel),
    Rgcn(RgcnModel),
}

/// Inputs to a forward pass, already recorded on the tape.
#[derive(Debug, Clone, Copy)]
pub enum GraphInput<'a> {
    /// Raw (unnormalized, possibly relaxed) adjacency and features.
    Homo { adjacency: Var, features: Var },
    /// One relation matrix per edge type and one feature matrix per node type.
    Hetero {
        relations: &'a [Var],
        features: &'a [Var],
    },
}

#[derive(Debug, Clone, Copy)]
pub struct Forward {
    /// Output of the last hidden layer (labeled node type for RGCN).
    pub hidden: Var,
    pub logits: Var,
}

fn uniform_init(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let bound = 1.0 / (rows.max(1) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..=bound))
}

impl Model {
    pub fn arch(&self) -> Arch {
        match self {
            Model::Gcn(_) => Arch::Gcn,
            Model::Sage(_) => Arch::Sage,
            Model::Rgcn(_) => Arch::Rgcn,
        }
    }

    pub fn init_gcn(in_dim: usize, hidden: usize, classes: usize, rng: &mut impl Rng) -> Self {
        Model::Gcn(GcnModel {
            w1: uniform_init(in_dim, hidden, rng),
            w2: uniform_init(hidden, classes, rng),
        })
    }

    pub fn init_sage(in_dim: usize, hidden: usize, classes: usize, rng: &mut impl Rng) -> Self {
        Model::Sage(SageModel {
            w1: uniform_init(2 * in_dim, hidden, rng),
            w2: uniform_init(2 * hidden, classes, rng),
        })
    }

    pub fn init_rgcn(
        schema: &Schema,
        feature_dims: &[usize],
        labeled_type: usize,
        hidden: usize,
        classes: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let relations = relations_of(schema);
        let self1 = feature_dims
            .iter()
            .map(|&d| uniform_init(d, hidden, rng))
            .collect();
        let rel1 = relations
            .iter()
            .map(|r| uniform_init(feature_dims[r.source], hidden, rng))
            .collect();
        let self2 = uniform_init(hidden, classes, rng);
        let rel2 = relations
            .iter()
            .map(|_| uniform_init(hidden, classes, rng))
            .collect();
        Model::Rgcn(RgcnModel {
            schema: schema.clone(),
            labeled_type,
            relations,
            self1,
            rel1,
            self2,
            rel2,
        })
    }

    /// All weight matrices in canonical order.
    pub fn params(&self) -> Vec<&Matrix> {
        match self {
            Model::Gcn(m) => vec![&m.w1, &m.w2],
            Model::Sage(m) => vec![&m.w1, &m.w2],
            Model::Rgcn(m) => m
                .self1
                .iter()
                .chain(&m.rel1)
                .chain(std::iter::once(&m.self2))
                .chain(&m.rel2)
                .collect(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        match self {
            Model::Gcn(m) => vec![&mut m.w1, &mut m.w2],
            Model::Sage(m) => vec![&mut m.w1, &mut m.w2],
            Model::Rgcn(m) => m
                .self1
                .iter_mut()
                .chain(m.rel1.iter_mut())
                .chain(std::iter::once(&mut m.self2))
                .chain(m.rel2.iter_mut())
                .collect(),
        }
    }

    /// Records the weights on `tape`: as leaves when `trainable`, otherwise as
    /// constants.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Vec<Var> {
        self.params()
            .into_iter()
            .map(|w| {
                if trainable {
                    tape.leaf(w.clone())
                } else {
                    tape.constant(w.clone())
                }
            })
            .collect()
    }

    pub fn num_classes(&self) -> usize {
        match self {
            Model::Gcn(m) => m.w2.ncols(),
            Model::Sage(m) => m.w2.ncols(),
            Model::Rgcn(m) => m.self2.ncols(),
        }
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        weights: &[Var],
        input: GraphInput<'_>,
    ) -> Result<Forward> {
        match (self, input) {
            (
                Model::Gcn(_),
                GraphInput::Homo {
                    adjacency,
                    features,
                },
            ) => {
                let a_hat = normalize_on_tape(tape, adjacency)?;
                gcn_forward(tape, a_hat, features, weights[0], weights[1])
            }
            (
                Model::Sage(_),
                GraphInput::Homo {
                    adjacency,
                    features,
                },
            ) => sage_forward(tape, adjacency, features, weights[0], weights[1]),
            (
                Model::Rgcn(m),
                GraphInput::Hetero {
                    relations,
                    features,
                },
            ) => rgcn_forward(tape, m, weights, relations, features),
            (m, _) => Err(Error::schema(format!(
                "{} model fed the wrong kind of graph",
                m.arch().as_str()
            ))),
        }
    }
}

/// GCN renormalization of a raw adjacency recorded on the tape.
pub fn normalize_on_tape(tape: &mut Tape, adjacency: Var) -> Result<Var> {
    let (n, m) = adjacency.shape();
    if n != m {
        return Err(Error::shape(format!("adjacency is {n}x{m}")));
    }
    let eye = tape.constant(Array2::eye(n));
    let with_loops = tape.add(adjacency, eye)?;
    tape.sym_normalize(with_loops, AGG_DELTA)
}

/// `logits = Â · relu(Â · X · W₁) · W₂` on a pre-normalized `Â`.
pub fn gcn_forward(tape: &mut Tape, a_hat: Var, x: Var, w1: Var, w2: Var) -> Result<Forward> {
    let xw = tape.matmul(x, w1)?;
    let h = tape.matmul(a_hat, xw)?;
    let hidden = tape.relu(h);
    let hw = tape.matmul(hidden, w2)?;
    let logits = tape.matmul(a_hat, hw)?;
    Ok(Forward { hidden, logits })
}

/// Two mean-aggregator layers; isolated nodes see a zero neighbor mean.
pub fn sage_forward(tape: &mut Tape, adjacency: Var, x: Var, w1: Var, w2: Var) -> Result<Forward> {
    let mean1 = tape.row_mean_aggregate(adjacency, x, AGG_DELTA)?;
    let cat1 = tape.concat_cols(x, mean1)?;
    let h = tape.matmul(cat1, w1)?;
    let hidden = tape.relu(h);
    let mean2 = tape.row_mean_aggregate(adjacency, hidden, AGG_DELTA)?;
    let cat2 = tape.concat_cols(hidden, mean2)?;
    let logits = tape.matmul(cat2, w2)?;
    Ok(Forward { hidden, logits })
}

/// Layer-1 hidden states of every node type.
pub fn rgcn_hidden(
    tape: &mut Tape,
    model: &RgcnModel,
    weights: &[Var],
    relations: &[Var],
    features: &[Var],
) -> Result<Vec<Var>> {
    let nt = model.schema.node_types().len();
    let nr = model.relations.len();
    if relations.len() != model.schema.edge_types().len() {
        return Err(Error::schema(format!(
            "model expects {} edge types, got {}",
            model.schema.edge_types().len(),
            relations.len()
        )));
    }
    if features.len() != nt {
        return Err(Error::schema(format!(
            "model expects {nt} node types, got {}",
            features.len()
        )));
    }
    for (k, r) in relations.iter().enumerate() {
        if r.shape() != model.schema.relation_shape(k) {
            return Err(Error::schema(format!(
                "relation {} has shape {:?}, expected {:?}",
                model.schema.edge_types()[k].name,
                r.shape(),
                model.schema.relation_shape(k)
            )));
        }
    }
    let (self1, rest) = weights.split_at(nt);
    let rel1 = &rest[..nr];

    let mut transposed: Vec<Option<Var>> = vec![None; relations.len()];
    let mut hidden = Vec::with_capacity(nt);
    for t in 0..nt {
        let mut acc = tape.matmul(features[t], self1[t])?;
        for (ri, rel) in model.relations.iter().enumerate() {
            if rel.target != t {
                continue;
            }
            let adj = channel(tape, rel, relations, &mut transposed);
            let msg = tape.matmul(features[rel.source], rel1[ri])?;
            let agg = tape.row_mean_aggregate(adj, msg, AGG_DELTA)?;
            acc = tape.add(acc, agg)?;
        }
        hidden.push(tape.relu(acc));
    }
    Ok(hidden)
}

fn channel(tape: &mut Tape, rel: &Relation, relations: &[Var], cache: &mut [Option<Var>]) -> Var {
    if !rel.reversed {
        return relations[rel.edge];
    }
    *cache[rel.edge].get_or_insert_with(|| tape.transpose(relations[rel.edge]))
}

/// `h'_i = relu(W₀ h_i + Σ_r mean_{j∈N_r(i)} W_r h_j)` for two layers; logits
/// are produced for the labeled node type only.
pub fn rgcn_forward(
    tape: &mut Tape,
    model: &RgcnModel,
    weights: &[Var],
    relations: &[Var],
    features: &[Var],
) -> Result<Forward> {
    let nt = model.schema.node_types().len();
    let nr = model.relations.len();
    let hidden = rgcn_hidden(tape, model, weights, relations, features)?;
    let self2 = weights[nt + nr];
    let rel2 = &weights[nt + nr + 1..];
    let lt = model.labeled_type;
    let mut transposed: Vec<Option<Var>> = vec![None; relations.len()];
    let mut logits = tape.matmul(hidden[lt], self2)?;
    for (ri, rel) in model.relations.iter().enumerate() {
        if rel.target != lt {
            continue;
        }
        let adj = channel(tape, rel, relations, &mut transposed);
        let msg = tape.matmul(hidden[rel.source], rel2[ri])?;
        let agg = tape.row_mean_aggregate(adj, msg, AGG_DELTA)?;
        logits = tape.add(logits, agg)?;
    }
    Ok(Forward {
        hidden: hidden[lt],
        logits,
    })
}

/// Borrowed view of a training graph.
#[derive(Debug, Clone, Copy)]
pub enum GraphRef<'a> {
    Homo(&'a HomoGraph),
    Hetero(&'a HeteroGraph),
}

impl<'a> GraphRef<'a> {
    pub fn labels(&self) -> &'a [usize] {
        match self {
            GraphRef::Homo(g) => g.labels(),
            GraphRef::Hetero(g) => g.labels(),
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            GraphRef::Homo(g) => g.num_classes(),
            GraphRef::Hetero(g) => g.num_classes(),
        }
    }

    /// Records the true graph on `tape` as constants and returns the matching
    /// [`GraphInput`] parts.
    fn record(&self, tape: &mut Tape) -> RecordedGraph {
        match self {
            GraphRef::Homo(g) => RecordedGraph::Homo {
                adjacency: tape.constant(g.adjacency().clone()),
                features: tape.constant(g.features().clone()),
            },
            GraphRef::Hetero(g) => RecordedGraph::Hetero {
                relations: g
                    .relations()
                    .iter()
                    .map(|r| tape.constant(r.clone()))
                    .collect(),
                features: g
                    .features()
                    .iter()
                    .map(|f| tape.constant(f.clone()))
                    .collect(),
            },
        }
    }
}

enum RecordedGraph {
    Homo {
        adjacency: Var,
        features: Var,
    },
    Hetero {
        relations: Vec<Var>,
        features: Vec<Var>,
    },
}

impl RecordedGraph {
    fn input(&self) -> GraphInput<'_> {
        match self {
            RecordedGraph::Homo {
                adjacency,
                features,
            } => GraphInput::Homo {
                adjacency: *adjacency,
                features: *features,
            },
            RecordedGraph::Hetero {
                relations,
                features,
            } => GraphInput::Hetero {
                relations,
                features,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// `per_class` random nodes of every class for training, the rest for
    /// testing. Classes smaller than `per_class` contribute all but one node.
    pub fn stratified(labels: &[usize], per_class: usize, seed: u64) -> Self {
        let mut rng = crate::seeded(seed, crate::Stream::Split);
        let classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut train = Vec::new();
        for c in 0..classes {
            let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
            let take = if members.len() > per_class {
                per_class
            } else {
                members.len().saturating_sub(1).max(members.len().min(1))
            };
            rand::seq::SliceRandom::shuffle(members.as_mut_slice(), &mut rng);
            train.extend_from_slice(&members[..take]);
        }
        train.sort_unstable();
        let test = (0..labels.len())
            .filter(|i| train.binary_search(i).is_err())
            .collect();
        Self { train, test }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// Defaults for `arch`: 16 hidden units for GCN/RGCN, 64 for GraphSAGE,
    /// Adam at 0.01 for 200 epochs.
    pub fn for_arch(arch: Arch) -> Self {
        Self {
            hidden: if arch == Arch::Sage { 64 } else { 16 },
            epochs: 200,
            lr: 0.01,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub arch: Arch,
    pub config: TrainConfig,
    pub split: Split,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: Model,
    pub meta: TrainMeta,
}

struct Adam {
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(params: &[&Matrix]) -> Self {
        Self {
            m: params.iter().map(|p| Array2::zeros(p.dim())).collect(),
            v: params.iter().map(|p| Array2::zeros(p.dim())).collect(),
            t: 0,
        }
    }

    fn step(&mut self, params: Vec<&mut Matrix>, grads: &[Matrix], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for (k, p) in params.into_iter().enumerate() {
            let g = &grads[k];
            ndarray::Zip::from(p)
                .and(&mut self.m[k])
                .and(&mut self.v[k])
                .and(g)
                .for_each(|w, m, v, &gi| {
                    *m = Self::B1 * *m + (1.0 - Self::B1) * gi;
                    *v = Self::B2 * *v + (1.0 - Self::B2) * gi * gi;
                    *w -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
                });
        }
    }
}

/// Fraction of `rows` whose argmax logit equals the label.
pub fn accuracy(logits: &Matrix, labels: &[usize], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let hits = rows
        .iter()
        .filter(|&&r| argmax(logits.row(r).iter().copied()) == labels[r])
        .count();
    hits as f64 / rows.len() as f64
}

fn argmax(it: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in it.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Full-batch Adam on the mean training cross-entropy. Deterministic in
/// `config.seed`.
pub fn train(
    arch: Arch,
    graph: GraphRef<'_>,
    split: &Split,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    if split.train.is_empty() {
        return Err(Error::input("empty training split"));
    }
    let labels = graph.labels();
    let classes = graph.num_classes();
    let mut rng = crate::seeded(config.seed, crate::Stream::Weights);
    let mut model = match (arch, graph) {
        (Arch::Gcn, GraphRef::Homo(g)) => {
            Model::init_gcn(g.features().ncols(), config.hidden, classes, &mut rng)
        }
        (Arch::Sage, GraphRef::Homo(g)) => {
            Model::init_sage(g.features().ncols(), config.hidden, classes, &mut rng)
        }
        (Arch::Rgcn, GraphRef::Hetero(g)) => {
            let dims: Vec<usize> = g.features().iter().map(|f| f.ncols()).collect();
            Model::init_rgcn(
                g.schema(),
                &dims,
                g.labeled_type(),
                config.hidden,
                classes,
                &mut rng,
            )
        }
        (a, _) => {
            return Err(Error::schema(format!(
                "{} cannot be trained on this graph kind",
                a.as_str()
            )))
        }
    };

    let mut adam = Adam::new(&model.params());
    let mut initial_loss = f64::NAN;
    for epoch in 0..config.epochs {
        let mut tape = Tape::new();
        let recorded = graph.record(&mut tape);
        let weights = model.bind(&mut tape, true);
        let out = model.forward(&mut tape, &weights, recorded.input())?;
        let loss = tape.cross_entropy(out.logits, labels, &split.train)?;
        if epoch == 0 {
            initial_loss = tape.scalar(loss);
        }
        let mut grads = tape.backward(loss)?;
        let mut gs: Vec<Matrix> = weights
            .iter()
            .map(|w| grads.take(*w).expect("weights are leaves"))
            .collect();
        if config.weight_decay > 0.0 {
            for (g, p) in gs.iter_mut().zip(model.params()) {
                g.scaled_add(config.weight_decay, p);
            }
        }
        adam.step(model.params_mut(), &gs, config.lr);
    }

    let logits = logits_for(&model, graph)?;
    let final_ce = mean_ce(&logits, labels, &split.train);
    if config.epochs == 0 {
        initial_loss = final_ce;
    }
    let meta = TrainMeta {
        arch,
        config: config.clone(),
        split: split.clone(),
        initial_loss,
        final_loss: final_ce,
        train_accuracy: accuracy(&logits, labels, &split.train),
        test_accuracy: accuracy(&logits, labels, &split.test),
    };
    Ok(TrainedModel { model, meta })
}

/// Mean cross-entropy of `logits` over `rows`.
pub fn mean_ce(logits: &Matrix, labels: &[usize], rows: &[usize]) -> f64 {
    let p = softmax_rows(logits);
    rows.iter().map(|&r| -p[[r, labels[r]]].ln()).sum::<f64>() / rows.len().max(1) as f64
}

fn logits_for(model: &Model, graph: GraphRef<'_>) -> Result<Matrix> {
    let mut tape = Tape::new();
    let recorded = graph.record(&mut tape);
    let weights = model.bind(&mut tape, false);
    let out = model.forward(&mut tape, &weights, recorded.input())?;
    Ok(tape.value(out.logits).clone())
}

impl TrainedModel {
    pub fn arch(&self) -> Arch {
        self.model.arch()
    }

    /// Logits for an arbitrary input recorded on `tape`, with frozen weights.
    /// Gradients can flow only into the input graph.
    pub fn logits_on_tape(&self, tape: &mut Tape, input: GraphInput<'_>) -> Result<Forward> {
        let weights = self.model.bind(tape, false);
        self.model.forward(tape, &weights, input)
    }

    /// Logits on the true graph.
    pub fn predict_logits(&self, graph: GraphRef<'_>) -> Result<Matrix> {
        self.check_graph(graph)?;
        logits_for(&self.model, graph)
    }

    /// Hidden representation fed to the classification layer.
    pub fn penultimate_embeddings(&self, graph: GraphRef<'_>) -> Result<Matrix> {
        self.check_graph(graph)?;
        let mut tape = Tape::new();
        let recorded = graph.record(&mut tape);
        let out = self.logits_on_tape(&mut tape, recorded.input())?;
        Ok(tape.value(out.hidden).clone())
    }

    /// Layer-1 embeddings of every node type of a heterogeneous graph.
    pub fn hetero_embeddings(&self, graph: &HeteroGraph) -> Result<Vec<Matrix>> {
        let Model::Rgcn(m) = &self.model else {
            return Err(Error::schema("hetero embeddings need an RGCN"));
        };
        let mut tape = Tape::new();
        let recorded = GraphRef::Hetero(graph).record(&mut tape);
        let RecordedGraph::Hetero {
            relations,
            features,
        } = &recorded
        else {
            unreachable!()
        };
        let weights = self.model.bind(&mut tape, false);
        let hidden = rgcn_hidden(&mut tape, m, &weights, relations, features)?;
        Ok(hidden.into_iter().map(|h| tape.value(h).clone()).collect())
    }

    /// Logits on the true graph plus i.i.d. `N(μ, σ²)` noise.
    pub fn noisy_logits(
        &self,
        graph: GraphRef<'_>,
        mu: f64,
        sigma: f64,
        seed: u64,
    ) -> Result<Matrix> {
        let clean = self.predict_logits(graph)?;
        let mut rng = crate::seeded(seed, crate::Stream::Noise);
        let noise = gaussian_noise(clean.dim(), mu, sigma, &mut rng)?;
        Ok(clean + &noise)
    }

    fn check_graph(&self, graph: GraphRef<'_>) -> Result<()> {
        match (&self.model, graph) {
            (Model::Gcn(m), GraphRef::Homo(g)) if m.w1.nrows() == g.features().ncols() => Ok(()),
            (Model::Sage(m), GraphRef::Homo(g)) if m.w1.nrows() == 2 * g.features().ncols() => {
                Ok(())
            }
            (Model::Rgcn(m), GraphRef::Hetero(g)) if &m.schema == g.schema() => Ok(()),
            _ => Err(Error::schema(format!(
                "{} model does not match the supplied graph",
                self.arch().as_str()
            ))),
        }
    }
}

/// Matrix of i.i.d. `N(μ, σ²)` draws.
pub fn gaussian_noise(
    dim: (usize, usize),
    mu: f64,
    sigma: f64,
    rng: &mut impl Rng,
) -> Result<Matrix> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::input(format!(
            "noise sigma must be >= 0, got {sigma}"
        )));
    }
    let normal = Normal::new(mu, sigma).map_err(|e| Error::input(e.to_string()))?;
    Ok(Array2::from_shape_fn(dim, |_| normal.sample(rng)))
}

/// Row sums of a softmax, for sanity checks.
pub fn softmax_row_sums(logits: &Matrix) -> Vec<f64> {
    softmax_rows(logits).sum_axis(Axis(1)).to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_adjacency, gcn_normalize, HomoGraph};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
        Array2::from_shape_fn((rows, cols), |_| rng.random::<f64>() * 2.0 - 1.0)
    }

    fn relu(m: Matrix) -> Matrix {
        m.mapv(|v| v.max(0.0))
    }

    fn random_graph(n: usize, d: usize, seed: u64) -> HomoGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < 0.4 {
                    edges.push((i, j));
                }
            }
        }
        let a = build_adjacency(&edges, n).unwrap();
        let x = rand_mat(n, d, &mut rng);
        let y = (0..n).map(|i| i % 2).collect();
        HomoGraph::new(a, x, y).unwrap()
    }

    /// Straight-line dense GCN.
    fn gcn_oracle(a_hat: &Matrix, x: &Matrix, w1: &Matrix, w2: &Matrix) -> Matrix {
        let mut ax = Array2::zeros((x.nrows(), x.ncols()));
        for i in 0..a_hat.nrows() {
            for k in 0..a_hat.ncols() {
                for j in 0..x.ncols() {
                    ax[[i, j]] += a_hat[[i, k]] * x[[k, j]];
                }
            }
        }
        let h = relu(ax.dot(w1));
        a_hat.dot(&h).dot(w2)
    }

    fn mean_neighbors(a: &Matrix, h: &Matrix) -> Matrix {
        let mut out = Array2::zeros((a.nrows(), h.ncols()));
        for i in 0..a.nrows() {
            let deg: f64 = a.row(i).sum();
            if deg == 0.0 {
                continue;
            }
            for j in 0..a.ncols() {
                if a[[i, j]] != 0.0 {
                    for c in 0..h.ncols() {
                        out[[i, c]] += a[[i, j]] * h[[j, c]] / deg;
                    }
                }
            }
        }
        out
    }

    fn sage_oracle(a: &Matrix, x: &Matrix, w1: &Matrix, w2: &Matrix) -> Matrix {
        let cat1 = ndarray::concatenate(Axis(1), &[x.view(), mean_neighbors(a, x).view()]).unwrap();
        let h = relu(cat1.dot(w1));
        let cat2 =
            ndarray::concatenate(Axis(1), &[h.view(), mean_neighbors(a, &h).view()]).unwrap();
        cat2.dot(w2)
    }

    #[test]
    fn gcn_identity_stack() {
        let x = array![[1.0, 0.0], [0.5, 2.0], [0.0, 3.0]];
        let mut t = Tape::new();
        let a = t.constant(Array2::eye(3));
        let xv = t.constant(x.clone());
        let w1 = t.constant(Array2::eye(2));
        let w2 = t.constant(Array2::eye(2));
        let out = gcn_forward(&mut t, a, xv, w1, w2).unwrap();
        assert_eq!(t.value(out.logits), &x);
        assert_eq!(t.value(out.hidden), &x);
    }

    #[test]
    fn zero_weights_give_uniform_ce() {
        let g = random_graph(5, 3, 1);
        let model = Model::Gcn(GcnModel {
            w1: Array2::zeros((3, 4)),
            w2: Array2::zeros((4, 3)),
        });
        let mut t = Tape::new();
        let w = model.bind(&mut t, false);
        let a = t.constant(g.adjacency().clone());
        let x = t.constant(g.features().clone());
        let out = model
            .forward(
                &mut t,
                &w,
                GraphInput::Homo {
                    adjacency: a,
                    features: x,
                },
            )
            .unwrap();
        assert!(t.value(out.logits).iter().all(|v| *v == 0.0));
        let ce = t
            .cross_entropy(out.logits, &[0, 1, 2, 0, 1], &[0, 1, 2, 3, 4])
            .unwrap();
        assert!((t.scalar(ce) - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn gcn_matches_oracle() {
        let g = random_graph(6, 4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (w1, w2) = (rand_mat(4, 5, &mut rng), rand_mat(5, 3, &mut rng));
        let a_hat = gcn_normalize(g.adjacency()).unwrap();
        let model = Model::Gcn(GcnModel {
            w1: w1.clone(),
            w2: w2.clone(),
        });
        let mut t = Tape::new();
        let w = model.bind(&mut t, false);
        let a = t.constant(g.adjacency().clone());
        let x = t.constant(g.features().clone());
        let out = model
            .forward(
                &mut t,
                &w,
                GraphInput::Homo {
                    adjacency: a,
                    features: x,
                },
            )
            .unwrap();
        let expect = gcn_oracle(&a_hat, g.features(), &w1, &w2);
        assert!((t.value(out.logits) - &expect)
            .iter()
            .all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn sage_matches_oracle_and_handles_isolated_nodes() {
        let g = random_graph(6, 3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (w1, w2) = (rand_mat(6, 4, &mut rng), rand_mat(8, 2, &mut rng));
        let mut t = Tape::new();
        let a = t.constant(g.adjacency().clone());
        let x = t.constant(g.features().clone());
        let (w1v, w2v) = (t.constant(w1.clone()), t.constant(w2.clone()));
        let out = sage_forward(&mut t, a, x, w1v, w2v).unwrap();
        let expect = sage_oracle(g.adjacency(), g.features(), &w1, &w2);
        assert!((t.value(out.logits) - &expect)
            .iter()
            .all(|d| d.abs() < 1e-12));

        // Single isolated node: neighbor half of the input is zero.
        let mut t = Tape::new();
        let x1 = array![[0.5, -1.0]];
        let a = t.constant(Array2::zeros((1, 1)));
        let xv = t.constant(x1.clone());
        let w1v = t.constant(Array2::ones((4, 2)));
        let w2v = t.constant(Array2::ones((4, 1)));
        let out = sage_forward(&mut t, a, xv, w1v, w2v).unwrap();
        let h = relu(
            ndarray::concatenate(Axis(1), &[x1.view(), Array2::zeros((1, 2)).view()])
                .unwrap()
                .dot(&Array2::ones((4, 2))),
        );
        let cat = ndarray::concatenate(Axis(1), &[h.view(), Array2::zeros((1, 2)).view()]).unwrap();
        assert_eq!(t.value(out.logits), &cat.dot(&Array2::<f64>::ones((4, 1))));
    }

    #[test]
    fn sage_symmetric_pair_gives_identical_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut t = Tape::new();
        let a = t.constant(array![[0.0, 1.0], [1.0, 0.0]]);
        let x = t.constant(array![[0.3, 0.7], [0.3, 0.7]]);
        let w1 = t.constant(rand_mat(4, 3, &mut rng));
        let w2 = t.constant(rand_mat(6, 2, &mut rng));
        let out = sage_forward(&mut t, a, x, w1, w2).unwrap();
        let z = t.value(out.logits);
        assert_eq!(z.row(0), z.row(1));
    }

    fn toy_hetero(seed: u64) -> HeteroGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let schema = Schema::from_names(
            &[("P", 4), ("A", 3), ("S", 2)],
            &[("PA", "P", "A"), ("PS", "P", "S")],
        )
        .unwrap();
        let bin = |r: usize, c: usize, rng: &mut ChaCha8Rng| {
            Array2::from_shape_fn(
                (r, c),
                |_| if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 },
            )
        };
        let rels = vec![bin(4, 3, &mut rng), bin(4, 2, &mut rng)];
        let feats = vec![rand_mat(4, 3, &mut rng), Array2::eye(3), Array2::eye(2)];
        HeteroGraph::new(schema, rels, feats, 0, vec![0, 1, 0, 1]).unwrap()
    }

    fn rgcn_oracle(m: &RgcnModel, g: &HeteroGraph) -> Matrix {
        let adj_of = |r: &Relation| -> Matrix {
            let a = &g.relations()[r.edge];
            if r.reversed {
                a.t().to_owned()
            } else {
                a.clone()
            }
        };
        let mut hidden = Vec::new();
        for t in 0..3 {
            let mut acc = g.features()[t].dot(&m.self1[t]);
            for (ri, r) in m.relations.iter().enumerate() {
                if r.target == t {
                    acc =
                        acc + mean_neighbors(&adj_of(r), &g.features()[r.source].dot(&m.rel1[ri]));
                }
            }
            hidden.push(relu(acc));
        }
        let mut z = hidden[0].dot(&m.self2);
        for (ri, r) in m.relations.iter().enumerate() {
            if r.target == 0 {
                z = z + mean_neighbors(&adj_of(r), &hidden[r.source].dot(&m.rel2[ri]));
            }
        }
        z
    }

    #[test]
    fn rgcn_matches_oracle_and_reduces_without_edges() {
        let g = toy_hetero(7);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = Model::init_rgcn(g.schema(), &[3, 3, 2], 0, 4, 2, &mut rng);
        let Model::Rgcn(m) = &model else {
            unreachable!()
        };
        let trained = TrainedModel {
            model: model.clone(),
            meta: dummy_meta(Arch::Rgcn),
        };
        let z = trained.predict_logits(GraphRef::Hetero(&g)).unwrap();
        assert!((&z - &rgcn_oracle(m, &g)).iter().all(|d| d.abs() < 1e-12));

        let empty = HeteroGraph::new(
            g.schema().clone(),
            vec![Array2::zeros((4, 3)), Array2::zeros((4, 2))],
            g.features().to_vec(),
            0,
            g.labels().to_vec(),
        )
        .unwrap();
        let z = trained.predict_logits(GraphRef::Hetero(&empty)).unwrap();
        let mlp = relu(g.features()[0].dot(&m.self1[0])).dot(&m.self2);
        assert!((&z - &mlp).iter().all(|d| d.abs() < 1e-12));
    }

    fn dummy_meta(arch: Arch) -> TrainMeta {
        TrainMeta {
            arch,
            config: TrainConfig::for_arch(arch),
            split: Split {
                train: vec![0],
                test: vec![],
            },
            initial_loss: 0.0,
            final_loss: 0.0,
            train_accuracy: 0.0,
            test_accuracy: 0.0,
        }
    }

    #[test]
    fn rgcn_rejects_unknown_edge_types() {
        let g = toy_hetero(9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = Model::init_rgcn(g.schema(), &[3, 3, 2], 0, 4, 2, &mut rng);
        let mut t = Tape::new();
        let w = model.bind(&mut t, false);
        let r = [t.constant(g.relations()[0].clone())];
        let f: Vec<Var> = g.features().iter().map(|f| t.constant(f.clone())).collect();
        let res = model.forward(
            &mut t,
            &w,
            GraphInput::Hetero {
                relations: &r,
                features: &f,
            },
        );
        assert!(matches!(res, Err(Error::Schema(_))));
    }

    fn separable_graph() -> HomoGraph {
        let n = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let x = Array2::from_shape_fn((n, 3), |(i, j)| {
            let sign = if y[i] == 0 { -1.0 } else { 1.0 };
            if j == 0 {
                sign * (1.0 + rng.random::<f64>())
            } else {
                rng.random::<f64>() - 0.5
            }
        });
        HomoGraph::new(Array2::zeros((n, n)), x, y).unwrap()
    }

    #[test]
    fn separable_features_train_to_perfect_accuracy() {
        let g = separable_graph();
        let split = Split::stratified(g.labels(), 10, 1);
        let cfg = TrainConfig {
            seed: 3,
            ..TrainConfig::for_arch(Arch::Gcn)
        };
        let m = train(Arch::Gcn, GraphRef::Homo(&g), &split, &cfg).unwrap();
        assert_eq!(m.meta.test_accuracy, 1.0);
        assert!(m.meta.final_loss < m.meta.initial_loss);
    }

    #[test]
    fn zero_epochs_return_initial_weights() {
        let g = separable_graph();
        let split = Split::stratified(g.labels(), 10, 1);
        let cfg = TrainConfig {
            epochs: 0,
            seed: 3,
            ..TrainConfig::for_arch(Arch::Gcn)
        };
        let m = train(Arch::Gcn, GraphRef::Homo(&g), &split, &cfg).unwrap();
        let mut rng = crate::seeded(3, crate::Stream::Weights);
        let init = Model::init_gcn(3, 16, 2, &mut rng);
        assert_eq!(m.model, init);
        assert_eq!(m.meta.initial_loss, m.meta.final_loss);
    }

    #[test]
    fn empty_split_is_rejected() {
        let g = separable_graph();
        let split = Split {
            train: vec![],
            test: (0..40).collect(),
        };
        let cfg = TrainConfig::for_arch(Arch::Gcn);
        assert!(matches!(
            train(Arch::Gcn, GraphRef::Homo(&g), &split, &cfg),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn stratified_split_is_balanced_and_disjoint() {
        let labels: Vec<usize> = (0..50).map(|i| i % 3).collect();
        let s = Split::stratified(&labels, 5, 9);
        assert_eq!(s.train.len(), 15);
        for c in 0..3 {
            assert_eq!(s.train.iter().filter(|&&i| labels[i] == c).count(), 5);
        }
        assert_eq!(s.train.len() + s.test.len(), 50);
        assert!(s.test.iter().all(|i| !s.train.contains(i)));
        assert_eq!(s, Split::stratified(&labels, 5, 9));
    }

    #[test]
    fn predict_is_pure_and_gradient_reaches_only_adjacency() {
        let g = random_graph(6, 3, 11);
        let split = Split::stratified(g.labels(), 2, 0);
        let cfg = TrainConfig {
            epochs: 20,
            ..TrainConfig::for_arch(Arch::Gcn)
        };
        let m = train(Arch::Gcn, GraphRef::Homo(&g), &split, &cfg).unwrap();
        let z1 = m.predict_logits(GraphRef::Homo(&g)).unwrap();
        let z2 = m.predict_logits(GraphRef::Homo(&g)).unwrap();
        assert_eq!(z1, z2);
        for s in softmax_row_sums(&z1) {
            assert!((s - 1.0).abs() < 1e-12);
        }

        let mut t = Tape::new();
        let a = t.leaf(g.adjacency().clone());
        let x = t.constant(g.features().clone());
        let weights = m.model.bind(&mut t, false);
        let out = m
            .model
            .forward(
                &mut t,
                &weights,
                GraphInput::Homo {
                    adjacency: a,
                    features: x,
                },
            )
            .unwrap();
        let ce = t
            .cross_entropy(out.logits, g.labels(), &[0, 1, 2, 3, 4, 5])
            .unwrap();
        let grads = t.backward(ce).unwrap();
        assert_eq!(grads.len(), 1);
        assert!(grads.wrt(a).unwrap().iter().any(|v| *v != 0.0));
        assert!(weights.iter().all(|w| grads.wrt(*w).is_none()));
    }

    #[test]
    fn gcn_is_permutation_equivariant() {
        let g = random_graph(7, 3, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let model = Model::init_gcn(3, 5, 2, &mut rng);
        let perm = [3usize, 0, 6, 1, 5, 2, 4];
        let n = 7;
        let pa = Array2::from_shape_fn((n, n), |(i, j)| g.adjacency()[[perm[i], perm[j]]]);
        let px = Array2::from_shape_fn((n, 3), |(i, j)| g.features()[[perm[i], j]]);
        let py: Vec<usize> = perm.iter().map(|&p| g.labels()[p]).collect();
        let pg = HomoGraph::new(pa, px, py).unwrap();
        let tm = TrainedModel {
            model,
            meta: dummy_meta(Arch::Gcn),
        };
        let z = tm.predict_logits(GraphRef::Homo(&g)).unwrap();
        let pz = tm.predict_logits(GraphRef::Homo(&pg)).unwrap();
        let e = tm.penultimate_embeddings(GraphRef::Homo(&g)).unwrap();
        let pe = tm.penultimate_embeddings(GraphRef::Homo(&pg)).unwrap();
        for i in 0..n {
            for j in 0..2 {
                assert!((pz[[i, j]] - z[[perm[i], j]]).abs() < 1e-10);
            }
            for j in 0..5 {
                assert!((pe[[i, j]] - e[[perm[i], j]]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn noise_is_seeded_and_shift_invariant_at_zero_sigma() {
        let g = random_graph(6, 3, 14);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let tm = TrainedModel {
            model: Model::init_gcn(3, 4, 2, &mut rng),
            meta: dummy_meta(Arch::Gcn),
        };
        let clean = tm.predict_logits(GraphRef::Homo(&g)).unwrap();
        let shifted = tm.noisy_logits(GraphRef::Homo(&g), 1.0, 0.0, 1).unwrap();
        assert!((&shifted - &clean).iter().all(|d| (d - 1.0).abs() < 1e-12));
        let all: Vec<usize> = (0..6).collect();
        assert_eq!(
            accuracy(&clean, g.labels(), &all),
            accuracy(&shifted, g.labels(), &all)
        );
        let a = tm.noisy_logits(GraphRef::Homo(&g), 1.0, 2.0, 5).unwrap();
        let b = tm.noisy_logits(GraphRef::Homo(&g), 1.0, 2.0, 5).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            tm.noisy_logits(GraphRef::Homo(&g), 1.0, -1.0, 5),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn wrong_graph_kind_is_a_schema_error() {
        let h = toy_hetero(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tm = TrainedModel {
            model: Model::init_gcn(3, 4, 2, &mut rng),
            meta: dummy_meta(Arch::Gcn),
        };
        assert!(matches!(
            tm.predict_logits(GraphRef::Hetero(&h)),
            Err(Error::Schema(_))
        ));
    }
}
