//! Loaders, synthetic generators, persistence and experiment configuration.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::attack::AttackConfig;
use crate::gnn::{Arch, GcnModel, Model, RgcnModel, SageModel, TrainMeta, TrainedModel};
use crate::graph::{build_adjacency, HeteroGraph, HomoGraph, MetaPath, Schema};
use crate::{Error, Matrix, Result};

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let f = fs::File::open(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    Ok(BufReader::new(f)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l)))
}

/// A citation dataset after loading.
#[derive(Debug, Clone)]
pub struct CitationData {
    pub graph: HomoGraph,
    /// Original node ids, indexed by node.
    pub node_ids: Vec<String>,
    /// Label strings, indexed by class id (sorted).
    pub label_names: Vec<String>,
    /// Citations naming an id absent from the content file.
    pub dropped_edges: usize,
}

/// Loads the `content`/`cites` citation format. Content lines are
/// `id f_1 … f_d label`; cites lines are `cited citing`. Tabs or spaces.
pub fn load_homo_graph(content: &Path, cites: &Path) -> Result<CitationData> {
    let mut node_ids = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels = Vec::new();
    let mut dim: Option<usize> = None;
    for (ln, line) in open_lines(content)? {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 3 {
            return Err(parse_err(content, ln, "expected id, features and label"));
        }
        let d = fields.len() - 2;
        match dim {
            None => dim = Some(d),
            Some(e) if e != d => {
                return Err(parse_err(
                    content,
                    ln,
                    format!("{d} features, expected {e}"),
                ))
            }
            _ => {}
        }
        let feats = fields[1..=d]
            .iter()
            .enumerate()
            .map(|(k, s)| {
                s.parse::<f64>().map_err(|_| {
                    parse_err(content, ln, format!("field {}: bad number {s:?}", k + 2))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let id = fields[0].to_string();
        if index.insert(id.clone(), node_ids.len()).is_some() {
            return Err(parse_err(content, ln, format!("duplicate node id {id:?}")));
        }
        node_ids.push(id);
        rows.push(feats);
        raw_labels.push(fields[d + 1].to_string());
    }
    let n = node_ids.len();
    if n == 0 {
        return Err(Error::Input(format!("{} has no nodes", content.display())));
    }
    let label_names: Vec<String> = raw_labels
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let labels: Vec<usize> = raw_labels
        .iter()
        .map(|l| label_names.binary_search(l).expect("label collected"))
        .collect();
    let d = dim.unwrap_or(0);
    let x = Array2::from_shape_vec((n, d), rows.into_iter().flatten().collect())
        .expect("rows have d entries");

    let mut edges = BTreeSet::new();
    let mut dropped = 0;
    for (ln, line) in open_lines(cites)? {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 2 {
            return Err(parse_err(cites, ln, "expected two node ids"));
        }
        match (index.get(fields[0]), index.get(fields[1])) {
            (Some(&a), Some(&b)) if a != b => {
                edges.insert((a.min(b), a.max(b)));
            }
            (Some(_), Some(_)) => {}
            _ => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} citations with unknown node ids");
    }
    let edges: Vec<(usize, usize)> = edges.into_iter().collect();
    let a = build_adjacency(&edges, n)?;
    Ok(CitationData {
        graph: HomoGraph::new(a, x, labels)?,
        node_ids,
        label_names,
        dropped_edges: dropped,
    })
}

/// Writes a graph in the citation format with ids `0..n` and labels
/// `c<k>` (zero-padded so lexical order equals class order).
pub fn save_homo_graph(graph: &HomoGraph, content: &Path, cites: &Path) -> Result<()> {
    let width = graph.num_classes().saturating_sub(1).to_string().len();
    let mut out = std::io::BufWriter::new(fs::File::create(content)?);
    for (i, row) in graph.features().rows().into_iter().enumerate() {
        write!(out, "{i}")?;
        for v in row {
            write!(out, "\t{v}")?;
        }
        writeln!(out, "\tc{:0width$}", graph.labels()[i])?;
    }
    out.flush()?;
    let mut out = std::io::BufWriter::new(fs::File::create(cites)?);
    for (i, j) in graph.edges() {
        writeln!(out, "{i}\t{j}")?;
    }
    out.flush()?;
    Ok(())
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::input(format!("{name} must be in [0, 1], got {p}")))
    }
}

fn check_noise(noise: f64) -> Result<()> {
    if noise.is_finite() && noise >= 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!(
            "feature noise must be >= 0, got {noise}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub feature_noise: f64,
}

impl SbmParams {
    /// Two blocks of 30 nodes.
    pub fn two_block() -> Self {
        Self {
            block_sizes: vec![30, 30],
            p_in: 0.3,
            p_out: 0.02,
            feature_dim: 4,
            feature_noise: 0.1,
        }
    }

    /// Four blocks of 30 nodes with denser cross-block edges.
    pub fn four_block() -> Self {
        Self {
            block_sizes: vec![30; 4],
            p_in: 0.3,
            p_out: 0.05,
            feature_dim: 8,
            feature_noise: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_prob("p_in", self.p_in)?;
        check_prob("p_out", self.p_out)?;
        check_noise(self.feature_noise)?;
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return Err(Error::input("block sizes must be non-empty and positive"));
        }
        if self.feature_dim < self.block_sizes.len() {
            return Err(Error::input(format!(
                "feature_dim {} cannot one-hot encode {} blocks",
                self.feature_dim,
                self.block_sizes.len()
            )));
        }
        Ok(())
    }
}

/// Planted-partition graph. Features are the one-hot block indicator plus
/// i.i.d. `N(0, feature_noise²)` on every coordinate; labels are block ids.
pub fn gen_sbm(params: &SbmParams, seed: u64) -> Result<HomoGraph> {
    params.validate()?;
    let mut rng = crate::seeded(seed, crate::Stream::Data);
    let labels: Vec<usize> = params
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let n = labels.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] {
                params.p_in
            } else {
                params.p_out
            };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let a = build_adjacency(&edges, n)?;
    let x = signal_features(&labels, params.feature_dim, params.feature_noise, &mut rng)?;
    HomoGraph::new(a, x, labels)
}

fn signal_features(
    labels: &[usize],
    dim: usize,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Matrix> {
    let normal = Normal::new(0.0, noise).map_err(|e| Error::input(e.to_string()))?;
    Ok(Array2::from_shape_fn((labels.len(), dim), |(i, j)| {
        let signal = if labels[i] == j { 1.0 } else { 0.0 };
        signal + normal.sample(rng)
    }))
}

/// Edge probabilities of one relation of the ACM-like generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Density {
    /// Same community.
    pub intra: f64,
    /// Different class.
    pub inter: f64,
    /// Same class, different community; defaults to `intra`.
    #[serde(default)]
    pub class: Option<f64>,
}

impl Density {
    fn validate(&self, name: &str) -> Result<()> {
        check_prob(&format!("{name}.intra"), self.intra)?;
        check_prob(&format!("{name}.inter"), self.inter)?;
        if let Some(c) = self.class {
            check_prob(&format!("{name}.class"), c)?;
        }
        Ok(())
    }

    fn prob(&self, same_class: bool, same_group: bool) -> f64 {
        match (same_class, same_group) {
            (false, _) => self.inter,
            (true, true) => self.intra,
            (true, false) => self.class.unwrap_or(self.intra),
        }
    }
}

/// ACM-like graph: papers (labeled), authors and subjects, with `PA` and
/// `PS` edge types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroParams {
    pub papers: usize,
    pub authors: usize,
    pub subjects: usize,
    pub classes: usize,
    /// Communities per class. Nodes are dealt round-robin over
    /// `classes × groups` communities.
    #[serde(default = "one")]
    pub groups: usize,
    pub pa: Density,
    pub ps: Density,
    pub feature_dim: usize,
    pub feature_noise: f64,
    /// Multiplies every paper feature after noise is added.
    #[serde(default = "unit")]
    pub feature_scale: f64,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl HeteroParams {
    /// 150 papers in 3 classes of 2 communities each, 60 authors and 9
    /// subjects. Paper features are small so the proximity terms stay in
    /// the stable range of the default step size.
    pub fn acm_like() -> Self {
        Self {
            papers: 150,
            authors: 60,
            subjects: 9,
            classes: 3,
            groups: 2,
            pa: Density {
                intra: 0.25,
                inter: 0.01,
                class: Some(0.05),
            },
            ps: Density {
                intra: 0.5,
                inter: 0.05,
                class: None,
            },
            feature_dim: 12,
            feature_noise: 0.5,
            feature_scale: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.papers == 0 || self.authors == 0 || self.subjects == 0 {
            return Err(Error::input("every node type needs at least one node"));
        }
        if self.classes < 2 || self.groups == 0 {
            return Err(Error::input("need at least two classes and one group"));
        }
        if self.papers < self.classes * self.groups {
            return Err(Error::input("fewer papers than communities"));
        }
        if self.feature_dim < self.classes * self.groups {
            return Err(Error::input(
                "feature_dim cannot one-hot encode the communities",
            ));
        }
        if !(self.feature_scale.is_finite() && self.feature_scale > 0.0) {
            return Err(Error::input("feature_scale must be positive"));
        }
        self.pa.validate("pa")?;
        self.ps.validate("ps")?;
        check_noise(self.feature_noise)
    }
}

/// Generated heterogeneous graph plus a class-coherence statistic of the
/// `PAP` meta-path.
#[derive(Debug, Clone)]
pub struct GeneratedHetero {
    pub graph: HeteroGraph,
    /// Mean `W^{PAP}` entry over distinct same-class paper pairs.
    pub pap_within: f64,
    /// Mean `W^{PAP}` entry over different-class paper pairs.
    pub pap_across: f64,
}

pub fn acm_schema(params: &HeteroParams) -> Result<Schema> {
    Schema::from_names(
        &[
            ("P", params.papers),
            ("A", params.authors),
            ("S", params.subjects),
        ],
        &[("PA", "P", "A"), ("PS", "P", "S")],
    )
}

pub fn gen_hetero(params: &HeteroParams, seed: u64) -> Result<GeneratedHetero> {
    params.validate()?;
    let mut rng = crate::seeded(seed, crate::Stream::Data);
    let communities = params.classes * params.groups;
    let community = |i: usize| i % communities;
    let class_of = |c: usize| c % params.classes;
    let paper_comm: Vec<usize> = (0..params.papers).map(community).collect();
    let labels: Vec<usize> = paper_comm.iter().map(|&c| class_of(c)).collect();

    let relation = |count: usize, density: &Density, rng: &mut ChaCha8Rng| {
        Array2::from_shape_fn((params.papers, count), |(i, j)| {
            let (pc, oc) = (paper_comm[i], community(j));
            let p = density.prob(class_of(pc) == class_of(oc), pc == oc);
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        })
    };
    let pa = relation(params.authors, &params.pa, &mut rng);
    let ps = relation(params.subjects, &params.ps, &mut rng);
    let x = signal_features(
        &paper_comm,
        params.feature_dim,
        params.feature_noise,
        &mut rng,
    )?
    .mapv(|v| v * params.feature_scale);
    let schema = acm_schema(params)?;
    let features = vec![x, Array2::eye(params.authors), Array2::eye(params.subjects)];
    let graph = HeteroGraph::new(schema.clone(), vec![pa, ps], features, 0, labels)?;

    let pap = crate::graph::metapath_adjacency(
        &schema,
        graph.relations(),
        &MetaPath::parse(&schema, "PAP")?,
    )?;
    let (mut within, mut nw, mut across, mut na) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..params.papers {
        for j in 0..params.papers {
            if i == j {
                continue;
            }
            if graph.labels()[i] == graph.labels()[j] {
                within += pap[[i, j]];
                nw += 1;
            } else {
                across += pap[[i, j]];
                na += 1;
            }
        }
    }
    Ok(GeneratedHetero {
        graph,
        pap_within: within / nw.max(1) as f64,
        pap_across: across / na.max(1) as f64,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SchemaFile {
    labeled_type: String,
    labels: String,
    node_types: Vec<NodeTypeEntry>,
    edge_types: Vec<EdgeTypeEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NodeTypeEntry {
    name: String,
    count: usize,
    /// Whitespace-separated feature rows; identity features when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EdgeTypeEntry {
    name: String,
    src: String,
    dst: String,
    /// Lines of `src_index dst_index` (0-based within each type).
    edges: String,
}

fn read_matrix(path: &Path, rows: usize) -> Result<Matrix> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut n = 0;
    for (ln, line) in open_lines(path)? {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| parse_err(path, ln, format!("bad number {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        match cols {
            None => cols = Some(vals.len()),
            Some(c) if c != vals.len() => {
                return Err(parse_err(
                    path,
                    ln,
                    format!("{} columns, expected {c}", vals.len()),
                ))
            }
            _ => {}
        }
        data.extend(vals);
        n += 1;
    }
    if n != rows {
        return Err(Error::Input(format!(
            "{} has {n} rows, expected {rows}",
            path.display()
        )));
    }
    Ok(Array2::from_shape_vec((rows, cols.unwrap_or(0)), data).expect("row lengths checked"))
}

fn read_edge_list(path: &Path, rows: usize, cols: usize) -> Result<Matrix> {
    let mut a = Array2::zeros((rows, cols));
    for (ln, line) in open_lines(path)? {
        let line = line?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        if f.len() != 2 {
            return Err(parse_err(path, ln, "expected two indices"));
        }
        let idx = |s: &str, bound: usize| -> Result<usize> {
            let v: usize = s
                .parse()
                .map_err(|_| parse_err(path, ln, format!("bad index {s:?}")))?;
            if v >= bound {
                return Err(parse_err(
                    path,
                    ln,
                    format!("index {v} out of range {bound}"),
                ));
            }
            Ok(v)
        };
        a[[idx(f[0], rows)?, idx(f[1], cols)?]] = 1.0;
    }
    Ok(a)
}

/// Loads a heterogeneous dataset from a TOML schema file whose relative
/// paths resolve against the file's directory.
pub fn load_hetero_graph(schema_path: &Path) -> Result<HeteroGraph> {
    let text = fs::read_to_string(schema_path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", schema_path.display())))?;
    let file: SchemaFile = toml::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", schema_path.display())))?;
    let base = schema_path.parent().unwrap_or(Path::new("."));
    let names: Vec<(&str, usize)> = file
        .node_types
        .iter()
        .map(|t| (t.name.as_str(), t.count))
        .collect();
    let edges: Vec<(&str, &str, &str)> = file
        .edge_types
        .iter()
        .map(|e| (e.name.as_str(), e.src.as_str(), e.dst.as_str()))
        .collect();
    let schema = Schema::from_names(&names, &edges)?;
    let relations = file
        .edge_types
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let (r, c) = schema.relation_shape(k);
            read_edge_list(&base.join(&e.edges), r, c)
        })
        .collect::<Result<Vec<_>>>()?;
    let features = file
        .node_types
        .iter()
        .map(|t| match &t.features {
            Some(p) => read_matrix(&base.join(p), t.count),
            None => Ok(Array2::eye(t.count)),
        })
        .collect::<Result<Vec<_>>>()?;
    let labeled = schema
        .node_type_index(&file.labeled_type)
        .ok_or_else(|| Error::schema(format!("unknown labeled type {}", file.labeled_type)))?;
    let label_path = base.join(&file.labels);
    let mut labels = Vec::new();
    for (ln, line) in open_lines(&label_path)? {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        labels.push(
            t.parse::<usize>()
                .map_err(|_| parse_err(&label_path, ln, format!("bad label {t:?}")))?,
        );
    }
    HeteroGraph::new(schema, relations, features, labeled, labels)
}

fn is_identity(m: &Matrix) -> bool {
    m.is_square()
        && m.indexed_iter()
            .all(|((i, j), v)| *v == if i == j { 1.0 } else { 0.0 })
}

/// Writes `graph` as a schema file plus one file per relation, feature
/// matrix (identity features are omitted) and the labels, all in `dir`.
/// Returns every path written.
pub fn save_hetero_graph(graph: &HeteroGraph, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let schema = graph.schema();
    let mut written = Vec::new();
    let mut node_types = Vec::new();
    for (t, nt) in schema.node_types().iter().enumerate() {
        let f = &graph.features()[t];
        let features = if is_identity(f) {
            None
        } else {
            let name = format!("{}.features", nt.name);
            let mut out = std::io::BufWriter::new(fs::File::create(dir.join(&name))?);
            for row in f.rows() {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{}", cells.join(" "))?;
            }
            out.flush()?;
            written.push(dir.join(&name));
            Some(name)
        };
        node_types.push(NodeTypeEntry {
            name: nt.name.clone(),
            count: nt.count,
            features,
        });
    }
    let mut edge_types = Vec::new();
    for (k, e) in schema.edge_types().iter().enumerate() {
        let name = format!("{}.edges", e.name);
        let mut out = std::io::BufWriter::new(fs::File::create(dir.join(&name))?);
        for ((i, j), v) in graph.relations()[k].indexed_iter() {
            if *v != 0.0 {
                writeln!(out, "{i} {j}")?;
            }
        }
        out.flush()?;
        written.push(dir.join(&name));
        edge_types.push(EdgeTypeEntry {
            name: e.name.clone(),
            src: schema.node_types()[e.src].name.clone(),
            dst: schema.node_types()[e.dst].name.clone(),
            edges: name,
        });
    }
    let labels_name = "labels.txt".to_string();
    let body: String = graph.labels().iter().map(|l| format!("{l}\n")).collect();
    fs::write(dir.join(&labels_name), body)?;
    written.push(dir.join(&labels_name));
    let file = SchemaFile {
        labeled_type: schema.node_types()[graph.labeled_type()].name.clone(),
        labels: labels_name,
        node_types,
        edge_types,
    };
    let text = toml::to_string(&file).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join("schema.toml"), text)?;
    written.push(dir.join("schema.toml"));
    Ok(written)
}

const MODEL_MAGIC: &[u8; 4] = b"GMIC";
const RECON_MAGIC: &[u8; 4] = b"GMIR";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    arch: Arch,
    shapes: Vec<(usize, usize)>,
    meta: TrainMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rgcn: Option<RgcnHeader>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RgcnHeader {
    schema: Schema,
    labeled_type: usize,
    relations: Vec<crate::gnn::Relation>,
}

fn write_container(
    path: &Path,
    magic: &[u8; 4],
    header: &impl Serialize,
    payload: &[&[f64]],
) -> Result<()> {
    let json = serde_json::to_vec(header).map_err(|e| Error::Format(e.to_string()))?;
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    out.write_all(magic)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    for block in payload {
        for v in *block {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_container(path: &Path, magic: &[u8; 4]) -> Result<(Vec<u8>, Vec<f64>)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |msg: &str| Error::Format(format!("{}: {msg}", path.display()));
    if bytes.len() < 16 || &bytes[..4] != magic {
        return Err(bad("not a recognized container"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(bad(&format!(
            "format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = &bytes[16..];
    if body.len() < hlen || !(body.len() - hlen).is_multiple_of(8) {
        return Err(bad("truncated container"));
    }
    let header = body[..hlen].to_vec();
    let payload = body[hlen..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((header, payload))
}

/// Binary checkpoint: magic, format version, JSON header (architecture,
/// weight shapes, training metadata) and little-endian `f64` weights in
/// row-major order.
pub fn save_model(path: &Path, model: &TrainedModel) -> Result<()> {
    let params = model.model.params();
    let shapes = params.iter().map(|p| p.dim()).collect();
    let rgcn = match &model.model {
        Model::Rgcn(m) => Some(RgcnHeader {
            schema: m.schema.clone(),
            labeled_type: m.labeled_type,
            relations: m.relations.clone(),
        }),
        _ => None,
    };
    let header = ModelHeader {
        arch: model.arch(),
        shapes,
        meta: model.meta.clone(),
        rgcn,
    };
    let owned: Vec<Vec<f64>> = params.iter().map(|p| p.iter().copied().collect()).collect();
    let blocks: Vec<&[f64]> = owned.iter().map(|v| v.as_slice()).collect();
    write_container(path, MODEL_MAGIC, &header, &blocks)
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let (hbytes, payload) = read_container(path, MODEL_MAGIC)?;
    let header: ModelHeader = serde_json::from_slice(&hbytes)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let total: usize = header.shapes.iter().map(|(r, c)| r * c).sum();
    if total != payload.len() {
        return Err(Error::Format(format!(
            "{}: header declares {total} weights, payload has {}",
            path.display(),
            payload.len()
        )));
    }
    let mut mats = Vec::with_capacity(header.shapes.len());
    let mut at = 0;
    for &(r, c) in &header.shapes {
        mats.push(Array2::from_shape_vec((r, c), payload[at..at + r * c].to_vec()).expect("sized"));
        at += r * c;
    }
    let wrong = || {
        Error::Format(format!(
            "{}: weight count does not match architecture",
            path.display()
        ))
    };
    let model = match header.arch {
        Arch::Gcn | Arch::Sage => {
            if mats.len() != 2 {
                return Err(wrong());
            }
            let w2 = mats.pop().expect("two");
            let w1 = mats.pop().expect("two");
            if header.arch == Arch::Gcn {
                Model::Gcn(GcnModel { w1, w2 })
            } else {
                Model::Sage(SageModel { w1, w2 })
            }
        }
        Arch::Rgcn => {
            let h = header.rgcn.ok_or_else(wrong)?;
            let nt = h.schema.node_types().len();
            let nr = h.relations.len();
            if mats.len() != nt + 2 * nr + 1 {
                return Err(wrong());
            }
            let rel2 = mats.split_off(nt + nr + 1);
            let self2 = mats.pop().expect("sized");
            let rel1 = mats.split_off(nt);
            Model::Rgcn(RgcnModel {
                schema: h.schema,
                labeled_type: h.labeled_type,
                relations: h.relations,
                self1: mats,
                rel1,
                self2,
                rel2,
            })
        }
    };
    Ok(TrainedModel {
        model,
        meta: header.meta,
    })
}

/// Layout of a relaxed block in a reconstruction file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockLayout {
    /// Strict upper triangle of a symmetric `n × n` matrix.
    UpperTri {
        n: usize,
    },
    Dense {
        rows: usize,
        cols: usize,
    },
}

impl BlockLayout {
    fn len(&self) -> usize {
        match *self {
            BlockLayout::UpperTri { n } => crate::graph::upper_tri_len(n),
            BlockLayout::Dense { rows, cols } => rows * cols,
        }
    }
}

/// A relaxed reconstruction block with its binarized edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconBlock {
    pub name: String,
    pub layout: BlockLayout,
    pub relaxed: Vec<f64>,
    pub edges: Vec<(usize, usize)>,
}

impl ReconBlock {
    /// Block for a symmetric relaxed adjacency binarized to `k` edges.
    pub fn symmetric(name: &str, relaxed: &Matrix, k: usize) -> Result<Self> {
        let bin = crate::attack::binarize_by_density(relaxed, k)?;
        let edges = crate::graph::HomoGraph::new(
            bin,
            Array2::zeros((relaxed.nrows(), 0)),
            vec![0; relaxed.nrows()],
        )?
        .edges();
        Ok(Self {
            name: name.to_string(),
            layout: BlockLayout::UpperTri { n: relaxed.nrows() },
            relaxed: crate::graph::upper_tri_flatten(relaxed)?,
            edges,
        })
    }

    /// Block for a rectangular relaxed relation binarized to `k` entries.
    pub fn dense(name: &str, relaxed: &Matrix, k: usize) -> Result<Self> {
        let bin = crate::attack::binarize_relation(relaxed, k)?;
        let edges = bin
            .indexed_iter()
            .filter(|(_, v)| **v != 0.0)
            .map(|(ij, _)| ij)
            .collect();
        Ok(Self {
            name: name.to_string(),
            layout: BlockLayout::Dense {
                rows: relaxed.nrows(),
                cols: relaxed.ncols(),
            },
            relaxed: relaxed.iter().copied().collect(),
            edges,
        })
    }

    pub fn matrix(&self) -> Result<Matrix> {
        match self.layout {
            BlockLayout::UpperTri { n } => crate::graph::upper_tri_unflatten(&self.relaxed, n),
            BlockLayout::Dense { rows, cols } => {
                Ok(Array2::from_shape_vec((rows, cols), self.relaxed.clone())
                    .map_err(|e| Error::Format(e.to_string()))?)
            }
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ReconHeaderBlock {
    name: String,
    layout: BlockLayout,
    edges: Vec<(usize, usize)>,
}

pub fn save_reconstruction(path: &Path, blocks: &[ReconBlock]) -> Result<()> {
    for b in blocks {
        if b.relaxed.len() != b.layout.len() {
            return Err(Error::shape(format!(
                "block {} has {} values for layout {:?}",
                b.name,
                b.relaxed.len(),
                b.layout
            )));
        }
    }
    let header: Vec<ReconHeaderBlock> = blocks
        .iter()
        .map(|b| ReconHeaderBlock {
            name: b.name.clone(),
            layout: b.layout.clone(),
            edges: b.edges.clone(),
        })
        .collect();
    let payload: Vec<&[f64]> = blocks.iter().map(|b| b.relaxed.as_slice()).collect();
    write_container(path, RECON_MAGIC, &header, &payload)
}

pub fn load_reconstruction(path: &Path) -> Result<Vec<ReconBlock>> {
    let (hbytes, payload) = read_container(path, RECON_MAGIC)?;
    let header: Vec<ReconHeaderBlock> = serde_json::from_slice(&hbytes)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let total: usize = header.iter().map(|b| b.layout.len()).sum();
    if total != payload.len() {
        return Err(Error::Format(format!(
            "{}: header declares {total} values, payload has {}",
            path.display(),
            payload.len()
        )));
    }
    let mut at = 0;
    Ok(header
        .into_iter()
        .map(|h| {
            let len = h.layout.len();
            let block = ReconBlock {
                name: h.name,
                layout: h.layout,
                relaxed: payload[at..at + len].to_vec(),
                edges: h.edges,
            };
            at += len;
            block
        })
        .collect())
}

/// One line of a report CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub mode: String,
    pub target: String,
    pub dataset: String,
    pub variant: String,
    pub sigma: Option<f64>,
    pub seed: u64,
    pub auc: f64,
    pub ap: f64,
    pub edges: usize,
    pub nonedges: usize,
}

pub const REPORT_HEADER: &str = "mode,target,dataset,variant,sigma,seed,auc,ap,edges,nonedges";

impl ReportRow {
    pub fn from_report(
        r: &crate::eval::EvalReport,
        target: &str,
        dataset: &str,
        variant: &str,
        sigma: Option<f64>,
    ) -> Self {
        Self {
            mode: r.mode.to_string(),
            target: target.to_string(),
            dataset: dataset.to_string(),
            variant: variant.to_string(),
            sigma,
            seed: r.seed,
            auc: r.auc,
            ap: r.ap,
            edges: r.edges,
            nonedges: r.nonedges,
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &str) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(header.split(',')).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    write_csv(path, rows, REPORT_HEADER)
}

pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(String::from)
        .collect();
    if header.join(",") != REPORT_HEADER {
        return Err(Error::Format(format!(
            "{}: unexpected header",
            path.display()
        )));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub const TRAJECTORY_HEADER: &str = "iteration,tar,pro,norm,total";

pub fn write_trajectory_csv(
    path: &Path,
    records: &[crate::attack::TrajectoryRecord],
) -> Result<()> {
    write_csv(path, records, TRAJECTORY_HEADER)
}

/// Where the graph of an experiment comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetSpec {
    Citation { content: PathBuf, cites: PathBuf },
    Sbm(SbmParams),
    Hetero { schema: PathBuf },
    AcmSynthetic(HeteroParams),
}

impl DatasetSpec {
    pub fn is_hetero(&self) -> bool {
        matches!(
            self,
            DatasetSpec::Hetero { .. } | DatasetSpec::AcmSynthetic(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VictimConfig {
    pub arch: Arch,
    pub hidden: Option<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub train_per_class: usize,
}

impl Default for VictimConfig {
    fn default() -> Self {
        Self {
            arch: Arch::Gcn,
            hidden: None,
            epochs: 200,
            lr: 0.01,
            weight_decay: 0.0,
            train_per_class: 20,
        }
    }
}

impl VictimConfig {
    pub fn train_config(&self, seed: u64) -> crate::gnn::TrainConfig {
        let base = crate::gnn::TrainConfig::for_arch(self.arch);
        crate::gnn::TrainConfig {
            hidden: self.hidden.unwrap_or(base.hidden),
            epochs: self.epochs,
            lr: self.lr,
            weight_decay: self.weight_decay,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub mu: f64,
    pub sigmas: Vec<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            mu: 1.0,
            sigmas: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5],
        }
    }
}

/// Hyperparameter grid; empty axes keep the base attack value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub epsilon: Vec<f64>,
    /// Worker threads; 0 picks the available parallelism.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Name used in report rows.
    #[serde(default = "default_name")]
    pub name: String,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub victim: VictimConfig,
    #[serde(default)]
    pub attack: AttackConfig,
    #[serde(default)]
    pub eval_seeds: Vec<u64>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn default_name() -> String {
    "experiment".to_string()
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Parses `path`, resolves relative dataset paths against its directory
    /// and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut cfg.dataset {
            DatasetSpec::Citation { content, cites } => {
                resolve(content);
                resolve(cites);
            }
            DatasetSpec::Hetero { schema } => resolve(schema),
            _ => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.dataset {
            DatasetSpec::Citation { content, cites } => {
                for p in [content, cites] {
                    if !p.exists() {
                        return Err(Error::Input(format!("{} does not exist", p.display())));
                    }
                }
            }
            DatasetSpec::Hetero { schema } => {
                if !schema.exists() {
                    return Err(Error::Input(format!("{} does not exist", schema.display())));
                }
            }
            DatasetSpec::Sbm(p) => p.validate()?,
            DatasetSpec::AcmSynthetic(p) => p.validate()?,
        }
        if self.victim.arch.is_hetero() != self.dataset.is_hetero() {
            return Err(Error::input(format!(
                "{} victim does not fit this dataset kind",
                self.victim.arch.as_str()
            )));
        }
        if !(self.victim.lr.is_finite() && self.victim.lr > 0.0) {
            return Err(Error::input("victim lr must be > 0"));
        }
        if self.victim.train_per_class == 0 {
            return Err(Error::input("train_per_class must be >= 1"));
        }
        self.attack.validate()?;
        if self
            .noise
            .sigmas
            .iter()
            .any(|s| !(s.is_finite() && *s >= 0.0))
            || !self.noise.mu.is_finite()
        {
            return Err(Error::input("noise sigmas must be >= 0 and mu finite"));
        }
        for (name, axis) in [
            ("alpha", &self.sweep.alpha),
            ("beta", &self.sweep.beta),
            ("gamma", &self.sweep.gamma),
            ("epsilon", &self.sweep.epsilon),
        ] {
            if axis.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::input(format!(
                    "sweep {name} values must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }

    /// Evaluation seeds, defaulting to the experiment seed.
    pub fn eval_seeds(&self) -> Vec<u64> {
        if self.eval_seeds.is_empty() {
            vec![self.seed]
        } else {
            self.eval_seeds.clone()
        }
    }
}

/// A loaded or generated dataset.
#[derive(Debug, Clone)]
pub enum Dataset {
    Homo(HomoGraph),
    Hetero(HeteroGraph),
}

impl Dataset {
    pub fn as_ref(&self) -> crate::gnn::GraphRef<'_> {
        match self {
            Dataset::Homo(g) => crate::gnn::GraphRef::Homo(g),
            Dataset::Hetero(g) => crate::gnn::GraphRef::Hetero(g),
        }
    }
}

/// Materializes the dataset of `spec`; generators use `seed`.
pub fn load_dataset(spec: &DatasetSpec, seed: u64) -> Result<Dataset> {
    Ok(match spec {
        DatasetSpec::Citation { content, cites } => {
            Dataset::Homo(load_homo_graph(content, cites)?.graph)
        }
        DatasetSpec::Sbm(p) => Dataset::Homo(gen_sbm(p, seed)?),
        DatasetSpec::Hetero { schema } => Dataset::Hetero(load_hetero_graph(schema)?),
        DatasetSpec::AcmSynthetic(p) => Dataset::Hetero(gen_hetero(p, seed)?.graph),
    })
}

/// Counts of each label, for summaries.
pub fn label_histogram(labels: &[usize]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for &l in labels {
        *h.entry(l).or_insert(0) += 1;
    }
    h
}
