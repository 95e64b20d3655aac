//! Graph types and adjacency algebra.
//!
//! Everything here is a pure function over dense matrices. The differentiable
//! counterparts used during attacks live in [`crate::diffmat`] and
//! [`crate::attack`]; these versions are the reference forms used for
//! evaluation, data preparation and as test oracles.

use ndarray::{s, Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::linalg::matmul;
use crate::{Error, Matrix, Result};

/// Undirected, unweighted graph with node features and class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct HomoGraph {
    adjacency: Matrix,
    features: Matrix,
    labels: Vec<usize>,
    num_classes: usize,
}

impl HomoGraph {
    /// Validates that `adjacency` is symmetric, binary and zero-diagonal, and
    /// that features and labels cover every node.
    pub fn new(adjacency: Matrix, features: Matrix, labels: Vec<usize>) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n {
            return Err(Error::shape(format!(
                "adjacency must be square, got {}x{}",
                n,
                adjacency.ncols()
            )));
        }
        for i in 0..n {
            if adjacency[[i, i]] != 0.0 {
                return Err(Error::input(format!("self-loop at node {i}")));
            }
            for j in (i + 1)..n {
                let v = adjacency[[i, j]];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::input(format!("non-binary entry {v} at ({i},{j})")));
                }
                if v != adjacency[[j, i]] {
                    return Err(Error::input(format!("asymmetric entry at ({i},{j})")));
                }
            }
        }
        if features.nrows() != n {
            return Err(Error::shape(format!(
                "feature rows {} != node count {n}",
                features.nrows()
            )));
        }
        if labels.len() != n {
            return Err(Error::shape(format!(
                "label count {} != node count {n}",
                labels.len()
            )));
        }
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        Ok(Self {
            adjacency,
            features,
            labels,
            num_classes,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn num_edges(&self) -> usize {
        edge_count(&self.adjacency)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Undirected edges as `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.num_nodes();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.adjacency[[i, j]] != 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Number of nonzero upper-triangular entries of a symmetric matrix.
pub fn edge_count(a: &Matrix) -> usize {
    let n = a.nrows();
    (0..n)
        .map(|i| ((i + 1)..n).filter(|&j| a[[i, j]] != 0.0).count())
        .sum()
}

/// Symmetric binary adjacency from an undirected edge list. Duplicate pairs
/// collapse to a single edge.
pub fn build_adjacency(edges: &[(usize, usize)], n: usize) -> Result<Matrix> {
    let mut a = Array2::zeros((n, n));
    for &(i, j) in edges {
        if i >= n || j >= n {
            return Err(Error::input(format!(
                "edge ({i},{j}) out of range for {n} nodes"
            )));
        }
        if i == j {
            return Err(Error::input(format!("self-loop edge ({i},{i})")));
        }
        a[[i, j]] = 1.0;
        a[[j, i]] = 1.0;
    }
    Ok(a)
}

fn require_square(a: &Matrix, what: &str) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::shape(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// Degree vector and combinatorial Laplacian `L = D - A`.
pub fn laplacian(a: &Matrix) -> Result<(Array1<f64>, Matrix)> {
    require_square(a, "laplacian input")?;
    let degrees = a.sum_axis(Axis(1));
    let mut l = -a.clone();
    for (i, d) in degrees.iter().enumerate() {
        l[[i, i]] += d;
    }
    Ok((degrees, l))
}

/// Renormalized GCN propagation matrix `D̃^{-1/2} (A + I) D̃^{-1/2}` where `D̃`
/// holds the degrees of `A + I`.
pub fn gcn_normalize(a: &Matrix) -> Result<Matrix> {
    let n = require_square(a, "gcn_normalize input")?;
    let mut s = a.clone();
    for i in 0..n {
        s[[i, i]] += 1.0;
    }
    let inv_sqrt: Vec<f64> = s
        .sum_axis(Axis(1))
        .iter()
        .map(|d| if *d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    for i in 0..n {
        for j in 0..n {
            s[[i, j]] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    Ok(s)
}

/// Length of the strict upper triangle of an `n × n` matrix.
pub fn upper_tri_len(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Strict upper triangle, row-major: `(0,1), (0,2), …, (1,2), …`.
pub fn upper_tri_flatten(a: &Matrix) -> Result<Vec<f64>> {
    let n = require_square(a, "upper_tri_flatten input")?;
    let mut out = Vec::with_capacity(upper_tri_len(n));
    for i in 0..n {
        out.extend(a.slice(s![i, (i + 1)..]).iter().copied());
    }
    Ok(out)
}

/// Inverse of [`upper_tri_flatten`]; the result is symmetric with a zero
/// diagonal.
pub fn upper_tri_unflatten(b: &[f64], n: usize) -> Result<Matrix> {
    if b.len() != upper_tri_len(n) {
        return Err(Error::shape(format!(
            "flattened length {} does not match n={n} (expected {})",
            b.len(),
            upper_tri_len(n)
        )));
    }
    let mut a = Array2::zeros((n, n));
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            a[[i, j]] = b[k];
            a[[j, i]] = b[k];
            k += 1;
        }
    }
    Ok(a)
}

/// Row-major position of `(i, j)`, `i < j`, in the flattened upper triangle.
pub fn upper_tri_index(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeType {
    pub name: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeType {
    pub name: String,
    pub src: usize,
    pub dst: usize,
}

/// Node and edge type declarations of a heterogeneous graph. Node ids in the
/// combined adjacency are laid out type by type in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    node_types: Vec<NodeType>,
    edge_types: Vec<EdgeType>,
}

impl Schema {
    pub fn new(node_types: Vec<NodeType>, edge_types: Vec<EdgeType>) -> Result<Self> {
        if node_types.len() + edge_types.len() <= 2 {
            return Err(Error::schema(format!(
                "{} node types + {} edge types is not heterogeneous",
                node_types.len(),
                edge_types.len()
            )));
        }
        for (i, t) in node_types.iter().enumerate() {
            if node_types[..i].iter().any(|o| o.name == t.name) {
                return Err(Error::schema(format!("duplicate node type {}", t.name)));
            }
        }
        for (i, e) in edge_types.iter().enumerate() {
            if e.src >= node_types.len() || e.dst >= node_types.len() {
                return Err(Error::schema(format!(
                    "edge type {} references an undeclared node type",
                    e.name
                )));
            }
            if edge_types[..i].iter().any(|o| o.name == e.name) {
                return Err(Error::schema(format!("duplicate edge type {}", e.name)));
            }
        }
        Ok(Self {
            node_types,
            edge_types,
        })
    }

    /// Builds a schema from `(name, count)` node types and
    /// `(name, src name, dst name)` edge types.
    pub fn from_names(nodes: &[(&str, usize)], edges: &[(&str, &str, &str)]) -> Result<Self> {
        let node_types: Vec<NodeType> = nodes
            .iter()
            .map(|(n, c)| NodeType {
                name: (*n).to_string(),
                count: *c,
            })
            .collect();
        let find = |name: &str| {
            node_types
                .iter()
                .position(|t| t.name == name)
                .ok_or_else(|| Error::schema(format!("unknown node type {name}")))
        };
        let mut edge_types = Vec::with_capacity(edges.len());
        for (name, src, dst) in edges {
            edge_types.push(EdgeType {
                name: (*name).to_string(),
                src: find(src)?,
                dst: find(dst)?,
            });
        }
        Self::new(node_types, edge_types)
    }

    pub fn node_types(&self) -> &[NodeType] {
        &self.node_types
    }

    pub fn edge_types(&self) -> &[EdgeType] {
        &self.edge_types
    }

    pub fn node_type_index(&self, name: &str) -> Option<usize> {
        self.node_types.iter().position(|t| t.name == name)
    }

    pub fn edge_type_index(&self, name: &str) -> Option<usize> {
        self.edge_types.iter().position(|e| e.name == name)
    }

    pub fn total_nodes(&self) -> usize {
        self.node_types.iter().map(|t| t.count).sum()
    }

    /// First global id of each node type.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.node_types
            .iter()
            .map(|t| {
                let o = acc;
                acc += t.count;
                o
            })
            .collect()
    }

    /// Expected `(rows, cols)` of the edge-type specified matrix for `edge`.
    pub fn relation_shape(&self, edge: usize) -> (usize, usize) {
        let e = &self.edge_types[edge];
        (self.node_types[e.src].count, self.node_types[e.dst].count)
    }

    /// Checks that `relations` holds one correctly shaped matrix per edge type.
    pub fn check_relations(&self, relations: &[Matrix]) -> Result<()> {
        if relations.len() != self.edge_types.len() {
            return Err(Error::schema(format!(
                "expected {} relation matrices, got {}",
                self.edge_types.len(),
                relations.len()
            )));
        }
        for (k, r) in relations.iter().enumerate() {
            let shape = self.relation_shape(k);
            if r.dim() != shape {
                return Err(Error::schema(format!(
                    "relation {} has shape {:?}, schema expects {:?}",
                    self.edge_types[k].name,
                    r.dim(),
                    shape
                )));
            }
        }
        Ok(())
    }
}

/// Heterogeneous graph: one edge-type specified matrix per edge type, one
/// feature matrix per node type, labels for a single designated node type.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroGraph {
    schema: Schema,
    relations: Vec<Matrix>,
    features: Vec<Matrix>,
    labeled_type: usize,
    labels: Vec<usize>,
    num_classes: usize,
}

impl HeteroGraph {
    pub fn new(
        schema: Schema,
        relations: Vec<Matrix>,
        features: Vec<Matrix>,
        labeled_type: usize,
        labels: Vec<usize>,
    ) -> Result<Self> {
        schema.check_relations(&relations)?;
        for (r, e) in relations.iter().zip(schema.edge_types()) {
            if r.iter().any(|v| *v != 0.0 && *v != 1.0) {
                return Err(Error::input(format!("relation {} is not binary", e.name)));
            }
        }
        if features.len() != schema.node_types().len() {
            return Err(Error::schema(format!(
                "expected {} feature matrices, got {}",
                schema.node_types().len(),
                features.len()
            )));
        }
        for (f, t) in features.iter().zip(schema.node_types()) {
            if f.nrows() != t.count {
                return Err(Error::shape(format!(
                    "features of {} have {} rows, expected {}",
                    t.name,
                    f.nrows(),
                    t.count
                )));
            }
        }
        if labeled_type >= schema.node_types().len() {
            return Err(Error::schema("labeled node type out of range"));
        }
        if labels.len() != schema.node_types()[labeled_type].count {
            return Err(Error::shape(format!(
                "{} labels for {} labeled nodes",
                labels.len(),
                schema.node_types()[labeled_type].count
            )));
        }
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        Ok(Self {
            schema,
            relations,
            features,
            labeled_type,
            labels,
            num_classes,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn relations(&self) -> &[Matrix] {
        &self.relations
    }

    pub fn features(&self) -> &[Matrix] {
        &self.features
    }

    pub fn labeled_type(&self) -> usize {
        self.labeled_type
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Symmetric block adjacency over all node types.
    pub fn full_adjacency(&self) -> Result<Matrix> {
        combine_edge_types(&self.schema, &self.relations)
    }
}

/// One step along a meta-path: an edge type traversed forward (`src → dst`)
/// or against its declared direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub edge: usize,
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaPath {
    name: String,
    node_types: Vec<usize>,
    hops: Vec<Hop>,
}

impl MetaPath {
    /// Parses `"P-A-P"` or, when every node type name is a single character,
    /// the compact form `"PAP"`. Each consecutive pair must be joined by
    /// exactly one declared edge type (in either direction).
    pub fn parse(schema: &Schema, text: &str) -> Result<Self> {
        let names: Vec<String> = if text.contains('-') {
            text.split('-').map(|s| s.trim().to_string()).collect()
        } else {
            text.chars().map(|c| c.to_string()).collect()
        };
        if names.len() < 2 {
            return Err(Error::MetaPath(format!(
                "meta-path {text:?} needs at least two node types"
            )));
        }
        let mut node_types = Vec::with_capacity(names.len());
        for n in &names {
            node_types.push(schema.node_type_index(n).ok_or_else(|| {
                Error::MetaPath(format!("unknown node type {n:?} in meta-path {text:?}"))
            })?);
        }
        let mut hops = Vec::with_capacity(node_types.len() - 1);
        for w in node_types.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut found = Vec::new();
            for (k, e) in schema.edge_types().iter().enumerate() {
                if e.src == a && e.dst == b {
                    found.push(Hop {
                        edge: k,
                        reversed: false,
                    });
                } else if e.src == b && e.dst == a {
                    found.push(Hop {
                        edge: k,
                        reversed: true,
                    });
                }
            }
            match found.len() {
                0 => {
                    return Err(Error::MetaPath(format!(
                        "no edge type joins {} and {} in {text:?}",
                        schema.node_types()[a].name,
                        schema.node_types()[b].name
                    )))
                }
                1 => hops.push(found[0]),
                _ => {
                    return Err(Error::MetaPath(format!(
                        "ambiguous edge type between {} and {} in {text:?}",
                        schema.node_types()[a].name,
                        schema.node_types()[b].name
                    )))
                }
            }
        }
        let name = names.concat();
        Ok(Self {
            name,
            node_types,
            hops,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn node_types(&self) -> &[usize] {
        &self.node_types
    }

    pub fn hops(&self) -> &[Hop] {
        &self.hops
    }

    /// True iff the node type sequence is a palindrome.
    pub fn is_symmetric(&self) -> bool {
        self.node_types.iter().eq(self.node_types.iter().rev())
    }

    pub fn start_type(&self) -> usize {
        self.node_types[0]
    }

    /// Verifies that the path is consistent with `schema`.
    pub fn check(&self, schema: &Schema) -> Result<()> {
        if self.hops.len() + 1 != self.node_types.len() {
            return Err(Error::MetaPath(format!("{} is malformed", self.name)));
        }
        for (k, hop) in self.hops.iter().enumerate() {
            let e = schema.edge_types().get(hop.edge).ok_or_else(|| {
                Error::MetaPath(format!("{} references an unknown edge type", self.name))
            })?;
            let (from, to) = if hop.reversed {
                (e.dst, e.src)
            } else {
                (e.src, e.dst)
            };
            if from != self.node_types[k] || to != self.node_types[k + 1] {
                return Err(Error::MetaPath(format!(
                    "hop {k} of {} does not follow edge type {}",
                    self.name, e.name
                )));
            }
        }
        Ok(())
    }
}

/// Meta-path augmented adjacency `W^m = A^{c1} · A^{c2} ⋯ A^{cK}`, using the
/// transpose for hops taken against an edge type's direction. Entries count
/// path instances.
pub fn metapath_adjacency(
    schema: &Schema,
    relations: &[Matrix],
    path: &MetaPath,
) -> Result<Matrix> {
    schema.check_relations(relations)?;
    path.check(schema)?;
    let mut acc: Option<Matrix> = None;
    for hop in path.hops() {
        let r = &relations[hop.edge];
        let step = if hop.reversed { r.t() } else { r.view() };
        acc = Some(match acc {
            None => step.to_owned(),
            Some(m) => matmul(&m.view(), &step),
        });
    }
    acc.ok_or_else(|| Error::MetaPath(format!("{} has no hops", path.name())))
}

/// Assembles the symmetric block adjacency from per-edge-type matrices.
/// Block `(src, dst)` receives `A^c` and block `(dst, src)` its transpose.
/// Same-type edge types must already be symmetric.
pub fn combine_edge_types(schema: &Schema, relations: &[Matrix]) -> Result<Matrix> {
    schema.check_relations(relations)?;
    let nt = schema.node_types().len();
    let offsets = schema.offsets();
    let total = schema.total_nodes();
    let mut filled = vec![false; nt * nt];
    let mut full = Array2::zeros((total, total));
    for (k, e) in schema.edge_types().iter().enumerate() {
        let r = &relations[k];
        let blocks: &[(usize, usize)] = if e.src == e.dst {
            &[(e.src, e.dst)]
        } else {
            &[(e.src, e.dst), (e.dst, e.src)]
        };
        for &(bs, bd) in blocks {
            if filled[bs * nt + bd] {
                return Err(Error::schema(format!(
                    "edge type {} overlaps an already assigned block",
                    e.name
                )));
            }
            filled[bs * nt + bd] = true;
        }
        if e.src == e.dst && r.iter().zip(r.t().iter()).any(|(a, b)| a != b) {
            return Err(Error::schema(format!(
                "same-type edge type {} must be symmetric",
                e.name
            )));
        }
        let (ro, co) = (offsets[e.src], offsets[e.dst]);
        let (rn, cn) = r.dim();
        full.slice_mut(s![ro..ro + rn, co..co + cn]).assign(r);
        full.slice_mut(s![co..co + cn, ro..ro + rn]).assign(&r.t());
    }
    Ok(full)
}

/// Recovers the per-edge-type blocks from a combined adjacency.
pub fn extract_blocks(schema: &Schema, full: &Matrix) -> Result<Vec<Matrix>> {
    let total = schema.total_nodes();
    if full.dim() != (total, total) {
        return Err(Error::shape(format!(
            "full adjacency is {:?}, schema has {total} nodes",
            full.dim()
        )));
    }
    let offsets = schema.offsets();
    Ok(schema
        .edge_types()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let (rn, cn) = schema.relation_shape(k);
            let (ro, co) = (offsets[e.src], offsets[e.dst]);
            full.slice(s![ro..ro + rn, co..co + cn]).to_owned()
        })
        .collect())
}
