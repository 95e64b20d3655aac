//! Batch driver for the training, attack and evaluation pipeline.
//!
//! Every command reads one experiment file, applies flag overrides on top
//! (flag > file > default), validates the result and only then writes
//! anything. Outputs land in one directory together with a
//! `<command>.manifest.json` listing the config hash, the seed and every file
//! the command wrote.

use std::fs;
use std::path::{Path, PathBuf};

use graphinv::attack::{hete_gmi, homo_gmi, resolve_metapaths, AttackConfig, Variant};
use graphinv::data::{
    load_dataset, load_model, load_reconstruction, save_hetero_graph, save_homo_graph, save_model,
    save_reconstruction, write_csv, write_report_csv, write_trajectory_csv, Dataset,
    ExperimentConfig, ReconBlock, ReportRow,
};
use graphinv::eval::{
    ablation_config, evaluate_reconstruction, hetero_baselines, hetero_eval, noise_sweep,
    sim_attr_scores, sim_emb_scores, EvalReport, Mode,
};
use graphinv::gnn::{train, Split, TrainedModel};
use graphinv::graph::{edge_count, HeteroGraph, HomoGraph, MetaPath};
use graphinv::Matrix;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Replaces the configured output directory when set.
pub const OUTPUT_ROOT_ENV: &str = "GMI_OUTPUT_ROOT";

pub const MODEL_FILE: &str = "model.gmic";
pub const RECON_FILE: &str = "reconstruction.gmir";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GenData,
    Train,
    AttackHomo,
    AttackHete,
    Baseline,
    Eval,
    Ablate,
    NoiseSweep,
    Sweep,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::GenData,
        Command::Train,
        Command::AttackHomo,
        Command::AttackHete,
        Command::Baseline,
        Command::Eval,
        Command::Ablate,
        Command::NoiseSweep,
        Command::Sweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::GenData => "gen-data",
            Command::Train => "train",
            Command::AttackHomo => "attack-homo",
            Command::AttackHete => "attack-hete",
            Command::Baseline => "baseline",
            Command::Eval => "eval",
            Command::Ablate => "ablate",
            Command::NoiseSweep => "noise-sweep",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Runtime {
        stage: &'static str,
        #[source]
        source: graphinv::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime { .. } => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

trait Stage<T> {
    fn stage(self, stage: &'static str) -> CliResult<T>;
}

impl<T> Stage<T> for graphinv::Result<T> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|source| CliError::Runtime { stage, source })
    }
}

/// Per-invocation settings that take precedence over the experiment file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Seed for data generation, the split, training and the attack.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; wins over the file and the environment.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Checkpoint to read instead of `<output>/model.gmic`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Comma-separated meta-paths, e.g. `PAP,PSP`.
    #[arg(long, value_delimiter = ',')]
    pub metapaths: Option<Vec<String>>,
    /// Comma-separated evaluation seeds.
    #[arg(long, value_delimiter = ',')]
    pub eval_seeds: Option<Vec<u64>>,
    /// Comma-separated noise levels for `noise-sweep`.
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,
    /// Worker threads for `sweep`.
    #[arg(long)]
    pub workers: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
            cfg.attack.seed = s;
        }
        let attack = &mut cfg.attack;
        for (slot, value) in [
            (&mut attack.alpha, self.alpha),
            (&mut attack.beta, self.beta),
            (&mut attack.gamma, self.gamma),
            (&mut attack.epsilon, self.epsilon),
        ] {
            if let Some(v) = value {
                *slot = v;
            }
        }
        if let Some(t) = self.iterations {
            attack.iterations = t;
        }
        if let Some(m) = &self.metapaths {
            attack.metapaths = m.clone();
        }
        if let Some(e) = self.epochs {
            cfg.victim.epochs = e;
        }
        if let Some(s) = &self.eval_seeds {
            cfg.eval_seeds = s.clone();
        }
        if let Some(s) = &self.sigmas {
            cfg.noise.sigmas = s.clone();
        }
        if let Some(w) = self.workers {
            cfg.sweep.workers = w;
        }
    }
}

/// Loads `path`, applies `overrides` and validates the result.
pub fn resolve_config(path: &Path, overrides: &Overrides) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path).map_err(|e| CliError::Config(e.to_string()))?;
    overrides.apply(&mut cfg);
    cfg.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

/// Output directory by precedence: flag, then [`OUTPUT_ROOT_ENV`], then the
/// file.
pub fn output_dir(cfg: &ExperimentConfig, overrides: &Overrides) -> PathBuf {
    if let Some(o) = &overrides.output {
        return o.clone();
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root),
        _ => cfg.output_dir.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    /// Paths relative to the output directory, in write order.
    pub files: Vec<String>,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// What a successful command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub rows: Vec<ReportRow>,
}

struct Context {
    cfg: ExperimentConfig,
    dir: PathBuf,
    model_path: PathBuf,
    written: Vec<String>,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn record(&mut self, path: &Path) {
        let rel = path.strip_prefix(&self.dir).unwrap_or(path);
        self.written.push(rel.to_string_lossy().replace('\\', "/"));
    }

    fn dataset(&self) -> CliResult<Dataset> {
        load_dataset(&self.cfg.dataset, self.cfg.seed).stage("data")
    }

    fn victim(&self) -> CliResult<TrainedModel> {
        if !self.model_path.exists() {
            return Err(CliError::Runtime {
                stage: "gnn",
                source: graphinv::Error::Input(format!(
                    "no checkpoint at {}; run `train` first",
                    self.model_path.display()
                )),
            });
        }
        let m = load_model(&self.model_path).stage("data")?;
        if m.arch() != self.cfg.victim.arch {
            return Err(CliError::Config(format!(
                "checkpoint holds a {} model, config asks for {}",
                m.arch().as_str(),
                self.cfg.victim.arch.as_str()
            )));
        }
        Ok(m)
    }

    fn metapaths(&self, graph: &HeteroGraph) -> CliResult<Vec<MetaPath>> {
        resolve_metapaths(graph.schema(), &self.cfg.attack.metapaths)
            .map(|(paths, _)| paths)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    fn row(&self, r: &EvalReport, variant: &str, sigma: Option<f64>) -> ReportRow {
        ReportRow::from_report(
            r,
            self.cfg.victim.arch.as_str(),
            &self.cfg.name,
            variant,
            sigma,
        )
    }

    fn write_rows(&mut self, name: &str, rows: &[ReportRow]) -> CliResult<()> {
        let path = self.path(name);
        write_report_csv(&path, rows).stage("data")?;
        self.record(&path);
        Ok(())
    }
}

fn homo(ds: Dataset, cmd: Command) -> CliResult<HomoGraph> {
    match ds {
        Dataset::Homo(g) => Ok(g),
        Dataset::Hetero(_) => Err(CliError::Config(format!(
            "{} needs a homogeneous dataset",
            cmd.as_str()
        ))),
    }
}

fn hetero(ds: Dataset, cmd: Command) -> CliResult<HeteroGraph> {
    match ds {
        Dataset::Hetero(g) => Ok(g),
        Dataset::Homo(_) => Err(CliError::Config(format!(
            "{} needs a heterogeneous dataset",
            cmd.as_str()
        ))),
    }
}

/// Runs one command against the experiment file at `config`.
pub fn run(command: Command, config: &Path, overrides: &Overrides) -> CliResult<Outcome> {
    let cfg = resolve_config(config, overrides)?;
    let dir = output_dir(&cfg, overrides);
    if command == Command::NoiseSweep && cfg.dataset.is_hetero() {
        return Err(CliError::Config(
            "noise-sweep needs a homogeneous dataset".to_string(),
        ));
    }
    let model_path = overrides
        .model
        .clone()
        .unwrap_or_else(|| dir.join(MODEL_FILE));
    fs::create_dir_all(&dir).map_err(|e| CliError::Runtime {
        stage: "io",
        source: e.into(),
    })?;
    let mut ctx = Context {
        cfg,
        dir,
        model_path,
        written: Vec::new(),
    };
    log::info!("{} -> {}", command.as_str(), ctx.dir.display());
    let rows = match command {
        Command::GenData => gen_data(&mut ctx)?,
        Command::Train => train_victim(&mut ctx)?,
        Command::AttackHomo => attack_homo(&mut ctx)?,
        Command::AttackHete => attack_hete(&mut ctx)?,
        Command::Baseline => baseline(&mut ctx)?,
        Command::Eval => evaluate(&mut ctx)?,
        Command::Ablate => ablate(&mut ctx)?,
        Command::NoiseSweep => noise(&mut ctx)?,
        Command::Sweep => sweep_command(&mut ctx)?,
    };
    let manifest = Manifest {
        command: command.as_str().to_string(),
        config_sha256: config_hash(&ctx.cfg),
        seed: ctx.cfg.seed,
        files: ctx.written.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(
        ctx.path(&format!("{}.manifest.json", command.as_str())),
        text + "\n",
    )
    .map_err(|e| CliError::Runtime {
        stage: "io",
        source: e.into(),
    })?;
    Ok(Outcome {
        dir: ctx.dir,
        manifest,
        rows,
    })
}

fn gen_data(ctx: &mut Context) -> CliResult<Vec<ReportRow>> {
    let data_dir = ctx.path("data");
    fs::create_dir_all(&data_dir).map_err(|e| CliError::Runtime {
        stage: "io",
        source: e.into(),
    })?;
    match ctx.dataset()? {
        Dataset::Homo(g) => {
            let (content, cites) = (data_dir.join("graph.content"), data_dir.join("graph.cites"));
            save_homo_graph(&g, &content, &cites).stage("data")?;
            ctx.record(&content);
            ctx.record(&cites);
        }
        Dataset::Hetero(g) => {
            for p in save_hetero_graph(&g, &data_dir).stage("data")? {
                ctx.record(&p);
            }
        }
    }
    Ok(Vec::new())
}

fn train_victim(ctx: &mut Context) -> CliResult<Vec<ReportRow>> {
    let ds = ctx.dataset()?;
    let graph = ds.as_ref();
    let split = Split::stratified(graph.labels(), ctx.cfg.victim.train_per_class, ctx.cfg.seed);
    let tc = ctx.cfg.victim.train_config(ctx.cfg.seed);
    let model = train(ctx.cfg.victim.arch, graph, &split, &tc).stage("gnn")?;
    log::info!(
        "trained {}: train acc {:.4}, test acc {:.4}",
        model.arch().as_str(),
        model.meta.train_accuracy,
        model.meta.test_accuracy
    );
    let path = ctx.model_path.clone();
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::Runtime {
            stage: "io",
            source: e.into(),
        })?;
    }
    save_model(&path, &model).stage("data")?;
    ctx.record(&path);
    Ok(Vec::new())
}

fn attack_homo(ctx: &mut Context) -> CliResult<Vec<ReportRow>> {
    let g = homo(ctx.dataset()?, Command::AttackHomo)?;
    let victim = ctx.victim()?;
    let out = homo_gmi(&victim, g.features(), g.labels(), &ctx.cfg.attack).stage("attack")?;
    let block = ReconBlock::symmetric("homo", &out.relaxed, g.num_edges()).stage("attack")?;
    let path = ctx.path(RECON_FILE);
    save_reconstruction(&path, &[block]).stage("data")?;
    ctx.record(&path);
    let traj = ctx.path("trajectory.csv");
    write_trajectory_csv(&traj, &out.trajectory).stage("data")?;
    ctx.record(&traj);
    Ok(Vec::new())
}

fn attack_hete(ctx: &mut Context) -> CliResult<Vec<ReportRow>> {
    let g = hetero(ctx.dataset()?, Command::AttackHete)?;
    ctx.metapaths(&g)?;
    let victim = ctx.victim()?;
    let out = hete_gmi(
        &victim,
        g.schema(),
        g.features(),
        g.labels(),
        &ctx.cfg.attack,
    )
    .stage("attack")?;
    let blocks = hetero_blocks(&g, &out.relaxed)?;
    let path = ctx.path(RECON_FILE);
    save_reconstruction(&path, &blocks).stage("data")?;
    ctx.record(&path);
    let traj = ctx.path("trajectory.csv");
    write_trajectory_csv(&traj, &out.trajectory).stage("data")?;
    ctx.record(&traj);
    Ok(Vec::new())
}

/// One block per edge type, binarized to the true edge count.
fn hetero_blocks(g: &HeteroGraph, relaxed: &[Matrix]) -> CliResult<Vec<ReconBlock>> {
    let schema = g.schema();
    schema
        .edge_types()
        .iter()
        .zip(relaxed)
        .zip(g.relations())
        .map(|((e, r), truth)| {
            if e.src == e.dst {
                ReconBlock::symmetric(&e.name, r, edge_count(truth))
            } else {
                let k = truth.iter().filter(|v| **v != 0.0).count();
                ReconBlock::dense(&e.name, r, k)
            }
        })
        .collect::<graphinv::Result<Vec<_>>>()
        .stage("attack")
}

fn baseline(ctx: &mut Context) -> CliResult<Vec<ReportRow>> {
    let victim = ctx.victim()?;
    let mut rows = Vec::new();
    match ctx.dataset()? {
        Dataset::Homo(g) => {
            let attr = sim_attr_scores(g.features());
            let emb = sim_emb_scores(&victim, graphinv::gnn::GraphRef::Homo(&g)).stage("eval")?;
            for seed in ctx.cfg.eval_seeds() {
                for (name, scores) in [("sim-attr", &attr), ("sim-emb", &emb)] {
                    let r = evaluate_reconstruction(scores, g.adjacency(), seed, Mode::Homo)
                        .stage("eval")?;
                    rows.push(ctx.row(&r, name, None));
                }
            }
        }
        Dataset::Hetero(g) => {
            let paths = ctx.metapaths(&g)?;
            for seed in ctx.cfg.eval_seeds() {
                let b = hetero_baselines(&victim, &g, &paths, seed).stage("eval")?;
                rows.extend(b.attr.iter().map(|r| ctx.row(r, "sim-attr", None)));
                rows.extend(b.emb.iter().map(|r| ctx.row(r, "sim-emb", None)));
            }
        }
    }
    ctx.write_rows("baseline.csv", &rows)?;
    Ok(rows)
}

fn evaluate(ctx: &mut Context) -> CliResult<Vec<ReportRow>> {
    let path = ctx.path(RECON_FILE);
    let blocks = load_reconstruction(&path).stage("data")?;
    let relaxed = blocks
        .iter()
        .map(ReconBlock::matrix)
        .collect::<graphinv::Result<Vec<_>>>()
        .stage("data")?;
    let mut rows = Vec::new();
    match ctx.dataset()? {
        Dataset::Homo(g) => {
            let [a] = relaxed.as_slice() else {
                return Err(CliError::Runtime {
                    stage: "eval",
                    source: graphinv::Error::Format(format!(
                        "{}: expected one block",
                        path.display()
                    )),
                });
            };
            for seed in ctx.cfg.eval_seeds() {
                let r =
                    evaluate_reconstruction(a, g.adjacency(), seed, Mode::Homo).stage("eval")?;
                rows.push(ctx.row(&r, Variant::Full.as_str(), None));
            }
        }
        Dataset::Hetero(g) => {
            let paths = ctx.metapaths(&g)?;
            for seed in ctx.cfg.eval_seeds() {
                for r in hetero_eval(&relaxed, &g, &paths, seed).stage("eval")? {
                    rows.push(ctx.row(&r, Variant::Full.as_str(), None));
                }
            }
        }
    }
    ctx.write_rows("report.csv", &rows)?;
    Ok(rows)
}

/// Attack with `config` and evaluate under every seed.
fn attack_reports(
    ds: &Dataset,
    victim: &TrainedModel,
    config: &AttackConfig,
    seeds: &[u64],
) -> graphinv::Result<Vec<EvalReport>> {
    match ds {
        Dataset::Homo(g) => {
            let out = homo_gmi(victim, g.features(), g.labels(), config)?;
            seeds
                .iter()
                .map(|&s| evaluate_reconstruction(&out.relaxed, g.adjacency(), s, Mode::Homo))
                .collect()
        }
        Dataset::Hetero(g) => {
            let (paths, _) = resolve_metapaths(g.schema(), &config.metapaths)?;
            let out = hete_gmi(victim, g.schema(), g.features(), g.labels(), config)?;
            let mut reports = Vec::new();
            for &s in seeds {
                reports.extend(hetero_eval(&out.relaxed, g, &paths, s)?);
            }
            Ok(reports)
        }
    }
}

fn ablate(ctx: &mut Context) -> CliResult<Vec<ReportRow>> {
    let ds = ctx.dataset()?;
    if let Dataset::Hetero(g) = &ds {
        ctx.metapaths(g)?;
    }
    let victim = ctx.victim()?;
    let seeds = ctx.cfg.eval_seeds();
    let mut rows = Vec::new();
    for v in Variant::ALL {
        let cfg = ablation_config(&ctx.cfg.attack, v);
        for r in attack_reports(&ds, &victim, &cfg, &seeds).stage("attack")? {
            rows.push(ctx.row(&r, v.as_str(), None));
        }
    }
    ctx.write_rows("ablation.csv", &rows)?;
    Ok(rows)
}

#[derive(Debug, Serialize)]
struct AccuracyRow {
    sigma: f64,
    accuracy: f64,
}

fn noise(ctx: &mut Context) -> CliResult<Vec<ReportRow>> {
    let g = homo(ctx.dataset()?, Command::NoiseSweep)?;
    let victim = ctx.victim()?;
    let seeds = ctx.cfg.eval_seeds();
    let points = noise_sweep(
        &g,
        &victim,
        &ctx.cfg.attack,
        ctx.cfg.noise.mu,
        &ctx.cfg.noise.sigmas,
        seeds[0],
    )
    .stage("eval")?;
    let mut rows = Vec::new();
    let mut acc = Vec::new();
    for p in &points {
        rows.push(ctx.row(&p.report, Variant::Full.as_str(), Some(p.sigma)));
        acc.push(AccuracyRow {
            sigma: p.sigma,
            accuracy: p.accuracy,
        });
    }
    ctx.write_rows("noise_sweep.csv", &rows)?;
    let path = ctx.path("noise_accuracy.csv");
    write_csv(&path, &acc, "sigma,accuracy").stage("data")?;
    ctx.record(&path);
    Ok(rows)
}

/// One point of a hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl GridPoint {
    pub fn label(&self) -> String {
        format!(
            "alpha={};beta={};gamma={};epsilon={}",
            self.alpha, self.beta, self.gamma, self.epsilon
        )
    }

    pub fn apply(&self, base: &AttackConfig, index: usize) -> AttackConfig {
        AttackConfig {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            epsilon: self.epsilon,
            seed: base.seed + index as u64,
            ..base.clone()
        }
    }
}

/// Multiples of the base `alpha`, `beta` and `gamma` swept when the config
/// names no axis at all.
pub const DEFAULT_GRID_FACTORS: [f64; 3] = [0.5, 1.0, 2.0];

/// Cartesian product in `alpha`, `beta`, `gamma`, `epsilon` order with the
/// last axis varying fastest. Empty axes hold the base value; with every
/// axis empty the grid scales `alpha`, `beta` and `gamma` by
/// [`DEFAULT_GRID_FACTORS`].
pub fn grid(base: &AttackConfig, sweep: &graphinv::data::SweepConfig) -> Vec<GridPoint> {
    let all_empty = [&sweep.alpha, &sweep.beta, &sweep.gamma, &sweep.epsilon]
        .iter()
        .all(|a| a.is_empty());
    let axis = |values: &[f64], default: f64, scaled: bool| {
        if !values.is_empty() {
            values.to_vec()
        } else if all_empty && scaled {
            DEFAULT_GRID_FACTORS.iter().map(|f| f * default).collect()
        } else {
            vec![default]
        }
    };
    let alphas = axis(&sweep.alpha, base.alpha, true);
    let betas = axis(&sweep.beta, base.beta, true);
    let gammas = axis(&sweep.gamma, base.gamma, true);
    let epsilons = axis(&sweep.epsilon, base.epsilon, false);
    let mut out = Vec::new();
    for &alpha in &alphas {
        for &beta in &betas {
            for &gamma in &gammas {
                for &epsilon in &epsilons {
                    out.push(GridPoint {
                        alpha,
                        beta,
                        gamma,
                        epsilon,
                    });
                }
            }
        }
    }
    out
}

/// Runs every grid point of `points` on a pool of `cfg.sweep.workers`
/// threads (0 picks the available parallelism) and returns rows in grid
/// order. Point `i` attacks with seed `cfg.attack.seed + i`. A failing point
/// yields one row with NaN metrics and a `;failed` variant.
pub fn sweep(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    victim: &TrainedModel,
    points: &[GridPoint],
) -> Vec<ReportRow> {
    let seeds = cfg.eval_seeds();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.sweep.workers)
        .build()
        .expect("thread pool");
    let results: Vec<_> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let attack = p.apply(&cfg.attack, i);
                attack
                    .validate()
                    .and_then(|_| attack_reports(ds, victim, &attack, &seeds))
            })
            .collect()
    });
    let target = cfg.victim.arch.as_str();
    let mut rows = Vec::new();
    for (p, result) in points.iter().zip(results) {
        match result {
            Ok(reports) => rows.extend(
                reports
                    .iter()
                    .map(|r| ReportRow::from_report(r, target, &cfg.name, &p.label(), None)),
            ),
            Err(e) => {
                log::warn!("grid point {} failed: {e}", p.label());
                let mode = match ds {
                    Dataset::Homo(_) => Mode::Homo,
                    Dataset::Hetero(g) => {
                        Mode::PerEdgeType(g.schema().edge_types()[0].name.clone())
                    }
                };
                rows.push(ReportRow {
                    mode: mode.to_string(),
                    target: target.to_string(),
                    dataset: cfg.name.clone(),
                    variant: format!("{};failed", p.label()),
                    sigma: None,
                    seed: seeds[0],
                    auc: f64::NAN,
                    ap: f64::NAN,
                    edges: 0,
                    nonedges: 0,
                });
            }
        }
    }
    rows
}

fn sweep_command(ctx: &mut Context) -> CliResult<Vec<ReportRow>> {
    let ds = ctx.dataset()?;
    if let Dataset::Hetero(g) = &ds {
        ctx.metapaths(g)?;
    }
    let victim = ctx.victim()?;
    let points = grid(&ctx.cfg.attack, &ctx.cfg.sweep);
    let rows = sweep(&ctx.cfg, &ds, &victim, &points);
    ctx.write_rows("sweep.csv", &rows)?;
    Ok(rows)
}
