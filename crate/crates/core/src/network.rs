//! Layered network graphs: filter nodes, aggregation blocks and output atoms.
//!
//! Layer `m` (1-based) holds filter nodes, each convolving the value of one
//! block of layer `m − 1` (layer 0 is the input itself), and blocks that merge
//! some of those nodes. A block may also take the value of a block from an
//! earlier layer directly; [`normalize_delta`] rewrites such skip inputs into
//! δ filter nodes so every block only reads its own layer.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::filters::{BumpTerm, Filter, FilterError, FilterSpec, DEFAULT_BUMP_OFFSET};
use crate::signal::{Grid, SampledSignal, SignalError, Spectrum};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{location}: unknown reference '{name}'")]
    UnknownReference { location: String, name: String },
    #[error("filter '{name}': {source}")]
    Filter { name: String, source: FilterError },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
    #[error("network failed validation:\n{}", format_violations(.0))]
    Validation(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity {
    Modulus,
    ModulusSquare,
    /// Radial saturation `R·tanh(|y|/R)`.
    ScaledTanh { radius: f64 },
    /// Pass-through, used by the pass blocks that normalization inserts.
    Identity,
}

impl Nonlinearity {
    pub fn apply(&self, z: Complex64) -> Complex64 {
        match *self {
            Nonlinearity::Modulus => Complex64::new(z.norm(), 0.0),
            Nonlinearity::ModulusSquare => Complex64::new(z.norm_sqr(), 0.0),
            Nonlinearity::ScaledTanh { radius } => {
                Complex64::new(radius * (z.norm() / radius).tanh(), 0.0)
            }
            Nonlinearity::Identity => z,
        }
    }

    /// Global Lipschitz constant; `None` for `|·|²`, which is only Lipschitz
    /// on bounded sets.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Nonlinearity::ModulusSquare => None,
            _ => Some(1.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Nonlinearity::Modulus => "modulus",
            Nonlinearity::ModulusSquare => "modulus_square",
            Nonlinearity::ScaledTanh { .. } => "scaled_tanh",
            Nonlinearity::Identity => "identity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockKind {
    Nonlin(Nonlinearity),
    /// Pointwise `(Σ|yₗ|^p)^{1/p}`; `p = ∞` is the pointwise max.
    PNorm { p: f64 },
    /// Pointwise product of the branches after `σ`.
    Multiply(Nonlinearity),
}

impl BlockKind {
    pub fn name(&self) -> &'static str {
        match self {
            BlockKind::Nonlin(_) => "nonlin",
            BlockKind::PNorm { .. } => "pnorm",
            BlockKind::Multiply(_) => "multiply",
        }
    }

    pub fn nonlinearity(&self) -> Option<Nonlinearity> {
        match *self {
            BlockKind::Nonlin(s) | BlockKind::Multiply(s) => Some(s),
            BlockKind::PNorm { .. } => None,
        }
    }
}

/// Coordinates of a block; layer 0 block 0 is the network input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockRef {
    pub layer: usize,
    pub block: usize,
}

impl BlockRef {
    pub const ROOT: BlockRef = BlockRef { layer: 0, block: 0 };
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterNode {
    pub id: String,
    pub filter: String,
    /// Block of the previous layer whose value this node convolves.
    pub source: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockInput {
    /// Filter node of the block's own layer.
    Node(usize),
    /// Value of a block from an earlier layer, unfiltered.
    Skip(BlockRef),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub id: String,
    pub kind: BlockKind,
    pub inputs: Vec<BlockInput>,
    /// Whether the block's value is convolved with the next atom and emitted.
    pub emits_output: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Layer {
    pub nodes: Vec<FilterNode>,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    pub grid: Grid,
    /// Declared L∞ radius of admissible inputs.
    pub radius: f64,
    pub filters: BTreeMap<String, Arc<Filter>>,
    pub layers: Vec<Layer>,
    /// `φ_1 .. φ_{M+1}` by filter name.
    pub output_atoms: Vec<String>,
}

impl NetworkGraph {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn filter(&self, name: &str) -> Option<&Arc<Filter>> {
        self.filters.get(name)
    }

    /// Atom `φ_m`, 1-based.
    pub fn atom(&self, m: usize) -> Option<&Arc<Filter>> {
        self.output_atoms
            .get(m.checked_sub(1)?)
            .and_then(|n| self.filters.get(n))
    }

    pub fn block(&self, r: BlockRef) -> Option<&Block> {
        if r.layer == 0 {
            return None;
        }
        self.layers.get(r.layer - 1)?.blocks.get(r.block)
    }

    pub fn block_label(&self, r: BlockRef) -> String {
        if r == BlockRef::ROOT {
            "root".into()
        } else {
            self.block(r)
                .map(|b| b.id.clone())
                .unwrap_or_else(|| format!("L{}B{}", r.layer, r.block))
        }
    }

    /// Number of blocks in layer `m`, counting the input as layer 0's one.
    pub fn block_count(&self, m: usize) -> usize {
        if m == 0 {
            1
        } else {
            self.layers.get(m - 1).map_or(0, |l| l.blocks.len())
        }
    }

    /// Whether any block needs inputs inside the L∞ ball (`|·|²` or a
    /// product), so the declared radius becomes a hard precondition.
    pub fn requires_ball(&self) -> bool {
        self.layers.iter().flat_map(|l| &l.blocks).any(|b| {
            matches!(b.kind, BlockKind::Multiply(_))
                || b.kind.nonlinearity() == Some(Nonlinearity::ModulusSquare)
        })
    }

    pub fn uses_modulus_square(&self) -> bool {
        self.layers
            .iter()
            .flat_map(|l| &l.blocks)
            .any(|b| b.kind.nonlinearity() == Some(Nonlinearity::ModulusSquare))
    }

    pub fn has_skips(&self) -> bool {
        self.layers
            .iter()
            .flat_map(|l| &l.blocks)
            .flat_map(|b| &b.inputs)
            .any(|i| matches!(i, BlockInput::Skip(_)))
    }

    /// Every emitting block, root first, in layer then block order.
    pub fn output_sites(&self) -> Vec<BlockRef> {
        let mut out = vec![BlockRef::ROOT];
        for (li, layer) in self.layers.iter().enumerate() {
            for (bi, b) in layer.blocks.iter().enumerate() {
                if b.emits_output {
                    out.push(BlockRef {
                        layer: li + 1,
                        block: bi,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rule {
    /// Each filter node feeds exactly one block of its layer.
    DisjointInSets,
    DanglingNode,
    MultiplyInDegree,
    NonlinInDegree,
    EmptyBlock,
    PNormExponent,
    NonlinLipschitz,
    UnknownSource,
    SkipDirection,
    UnknownFilter,
    AtomCount,
    DuplicateId,
    GridMismatch,
    /// `‖g‖₁ ≤ min{1, 2√R}/(2R)` for networks using `|·|²`.
    ModulusSquareFilterNorm,
    /// `‖g‖₁ ≤ 1` for filters feeding a product.
    MultiplyFilterNorm,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::DisjointInSets => "disjoint-in-sets",
            Rule::DanglingNode => "dangling-node",
            Rule::MultiplyInDegree => "multiply-in-degree",
            Rule::NonlinInDegree => "nonlin-in-degree",
            Rule::EmptyBlock => "empty-block",
            Rule::PNormExponent => "pnorm-exponent",
            Rule::NonlinLipschitz => "nonlin-lipschitz",
            Rule::UnknownSource => "unknown-source",
            Rule::SkipDirection => "skip-direction",
            Rule::UnknownFilter => "unknown-filter",
            Rule::AtomCount => "atom-count",
            Rule::DuplicateId => "duplicate-id",
            Rule::GridMismatch => "grid-mismatch",
            Rule::ModulusSquareFilterNorm => "modulus-square-filter-norm",
            Rule::MultiplyFilterNorm => "multiply-filter-norm",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub severity: Severity,
    pub location: String,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev} [{}] {}: {}", self.rule, self.location, self.message)
    }
}

/// Largest admissible `‖g‖₁` for `|·|²` networks on the radius-`R` ball.
pub fn modulus_square_norm_limit(radius: f64) -> f64 {
    (2.0 * radius.sqrt()).min(1.0) / (2.0 * radius)
}

pub fn validate_network(g: &NetworkGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |severity, location: String, rule, message: String| {
        out.push(Violation {
            severity,
            location,
            rule,
            message,
        })
    };
    use Severity::{Error as E, Warning as W};

    if !(g.radius > 0.0) || !g.radius.is_finite() {
        push(E, "network".into(), Rule::NonlinLipschitz, format!("radius must be positive, got {}", g.radius));
    }
    for (name, f) in &g.filters {
        if !f.grid().same_as(&g.grid) {
            push(E, format!("filter {name}"), Rule::GridMismatch, format!("filter grid {} differs from network grid {}", f.grid(), g.grid));
        }
    }
    if g.output_atoms.len() != g.depth() + 1 {
        push(E, "output_atoms".into(), Rule::AtomCount, format!("{} atoms for depth {}; need {}", g.output_atoms.len(), g.depth(), g.depth() + 1));
    }
    for (i, a) in g.output_atoms.iter().enumerate() {
        if !g.filters.contains_key(a) {
            push(E, format!("output_atoms[{i}]"), Rule::UnknownFilter, format!("no filter named '{a}'"));
        }
    }

    let mut block_ids = BTreeSet::new();
    let mut ms_limit_checked = BTreeSet::new();
    for (li, layer) in g.layers.iter().enumerate() {
        let m = li + 1;
        let mut node_ids = BTreeSet::new();
        for node in &layer.nodes {
            let loc = format!("layer {m} node {}", node.id);
            if !node_ids.insert(node.id.as_str()) {
                push(E, loc.clone(), Rule::DuplicateId, "node id used twice in the layer".into());
            }
            if !g.filters.contains_key(&node.filter) {
                push(E, loc.clone(), Rule::UnknownFilter, format!("no filter named '{}'", node.filter));
            }
            if node.source >= g.block_count(m - 1) {
                push(E, loc, Rule::UnknownSource, format!("source block {} does not exist in layer {}", node.source, m - 1));
            }
        }
        let mut owner: Vec<Option<&str>> = vec![None; layer.nodes.len()];
        for (bi, b) in layer.blocks.iter().enumerate() {
            let loc = format!("layer {m} block {}", b.id);
            if !block_ids.insert(b.id.as_str()) || b.id == "root" {
                push(E, loc.clone(), Rule::DuplicateId, "block id is not unique".into());
            }
            if b.inputs.is_empty() {
                push(E, loc.clone(), Rule::EmptyBlock, "block has no inputs".into());
            }
            for inp in &b.inputs {
                match *inp {
                    BlockInput::Node(k) => match owner.get_mut(k) {
                        None => push(E, loc.clone(), Rule::UnknownSource, format!("node index {k} out of range")),
                        Some(Some(prev)) => push(E, loc.clone(), Rule::DisjointInSets, format!("node {} already feeds block {prev}", layer.nodes[k].id)),
                        Some(slot) => *slot = Some(&g.layers[li].blocks[bi].id),
                    },
                    BlockInput::Skip(r) => {
                        if r.layer >= m {
                            push(E, loc.clone(), Rule::SkipDirection, format!("skip input from layer {} must come from an earlier layer", r.layer));
                        } else if r.block >= g.block_count(r.layer) {
                            push(E, loc.clone(), Rule::UnknownSource, format!("skip source block {} missing in layer {}", r.block, r.layer));
                        }
                    }
                }
            }
            let deg = b.inputs.len();
            match b.kind {
                BlockKind::Multiply(_) if !(1..=2).contains(&deg) => {
                    push(E, loc.clone(), Rule::MultiplyInDegree, format!("multiply block has in-degree {deg}; must be 1 or 2"));
                }
                BlockKind::Nonlin(_) if deg > 1 => {
                    push(E, loc.clone(), Rule::NonlinInDegree, format!("nonlinearity block has in-degree {deg}; use pnorm or multiply to merge branches"));
                }
                BlockKind::PNorm { p } if !(p >= 1.0) => {
                    push(E, loc.clone(), Rule::PNormExponent, format!("p = {p} is below 1"));
                }
                _ => {}
            }
            if let Some(Nonlinearity::ScaledTanh { radius }) = b.kind.nonlinearity() {
                if !(radius > 0.0) {
                    push(E, loc.clone(), Rule::NonlinLipschitz, format!("scaled_tanh radius must be positive, got {radius}"));
                }
            }
            if matches!(b.kind, BlockKind::Multiply(_)) {
                for inp in &b.inputs {
                    if let BlockInput::Node(k) = *inp {
                        let Some(node) = layer.nodes.get(k) else { continue };
                        if let Some(f) = g.filters.get(&node.filter) {
                            if f.l1 > 1.0 + 1e-9 {
                                push(W, format!("layer {m} node {}", node.id), Rule::MultiplyFilterNorm, format!("filter {} feeds a product with ‖g‖₁ = {:.6} > 1", f.name, f.l1));
                            }
                        }
                    }
                }
            }
        }
        for (k, o) in owner.iter().enumerate() {
            if o.is_none() {
                push(E, format!("layer {m} node {}", layer.nodes[k].id), Rule::DanglingNode, "node feeds no block".into());
            }
        }
    }

    if g.uses_modulus_square() {
        let limit = modulus_square_norm_limit(g.radius);
        for (li, layer) in g.layers.iter().enumerate() {
            for node in &layer.nodes {
                let Some(f) = g.filters.get(&node.filter) else { continue };
                if !f.is_delta() && f.l1 > limit + 1e-12 && ms_limit_checked.insert(f.name.clone()) {
                    push(W, format!("layer {} node {}", li + 1, node.id), Rule::ModulusSquareFilterNorm, format!("‖{}‖₁ = {:.6} exceeds min{{1, 2√R}}/(2R) = {limit:.6} for R = {}", f.name, f.l1, g.radius));
                }
            }
        }
    }
    out
}

pub fn has_errors(v: &[Violation]) -> bool {
    v.iter().any(|v| v.severity == Severity::Error)
}

/// A path of filter nodes `(layer, node index)` through consecutive layers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Path {
    pub entries: Vec<(usize, usize)>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// All paths including the empty one, ordered by length then indices. Skip
/// inputs are resolved through their δ-normalized form.
pub fn enumerate_paths(g: &NetworkGraph) -> Vec<Path> {
    let owned;
    let g = if g.has_skips() {
        owned = normalize_delta(g);
        &owned
    } else {
        g
    };
    let mut all = vec![Path { entries: vec![] }];
    // paths ending at each node of the previous layer
    let mut prev: Vec<Vec<Vec<(usize, usize)>>> = Vec::new();
    for (li, layer) in g.layers.iter().enumerate() {
        let m = li + 1;
        let mut cur = Vec::with_capacity(layer.nodes.len());
        for (ni, node) in layer.nodes.iter().enumerate() {
            let mut ends = Vec::new();
            if m == 1 {
                ends.push(vec![(1, ni)]);
            } else if let Some(b) = g.layers[li - 1].blocks.get(node.source) {
                for inp in &b.inputs {
                    if let BlockInput::Node(k) = *inp {
                        for p in &prev[k] {
                            let mut q = p.clone();
                            q.push((m, ni));
                            ends.push(q);
                        }
                    }
                }
            }
            cur.push(ends);
        }
        all.extend(cur.iter().flatten().map(|e| Path { entries: e.clone() }));
        prev = cur;
    }
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.entries.cmp(&b.entries)));
    all
}

fn unique_node_id(layer: &Layer, base: String) -> String {
    let mut id = base.clone();
    let mut k = 1;
    while layer.nodes.iter().any(|n| n.id == id) {
        k += 1;
        id = format!("{base}#{k}");
    }
    id
}

fn delta_filter_name(g: &NetworkGraph) -> String {
    let mut name = "delta".to_string();
    while let Some(f) = g.filters.get(&name) {
        if f.is_delta() {
            break;
        }
        name.push('_');
    }
    name
}

/// Rewrites every skip input into a δ filter node of the block's own layer,
/// bridging longer skips with non-emitting identity blocks. Propagation is
/// unchanged because δ convolution is the identity; a graph without skips is
/// returned as is.
pub fn normalize_delta(g: &NetworkGraph) -> NetworkGraph {
    if !g.has_skips() {
        return g.clone();
    }
    let mut out = g.clone();
    let dname = delta_filter_name(g);
    if !out.filters.contains_key(&dname) {
        let d = Filter::new(dname.clone(), FilterSpec::Delta, g.grid)
            .expect("network grid was validated to contain the origin");
        out.filters.insert(dname.clone(), Arc::new(d));
    }
    // (source, target layer) -> block index in the layer before target that
    // carries the source value
    let mut carriers: HashMap<(BlockRef, usize), usize> = HashMap::new();

    fn carrier(
        out: &mut NetworkGraph,
        carriers: &mut HashMap<(BlockRef, usize), usize>,
        dname: &str,
        src: BlockRef,
        target: usize,
    ) -> usize {
        // the block index in layer target-1 whose value equals src's value
        if src.layer + 1 == target {
            return src.block;
        }
        if let Some(&b) = carriers.get(&(src, target)) {
            return b;
        }
        let below = carrier(out, carriers, dname, src, target - 1);
        let label = out.block_label(src);
        let layer = &mut out.layers[target - 2];
        let node = layer.nodes.len();
        let id = unique_node_id(layer, format!("delta~{label}"));
        layer.nodes.push(FilterNode {
            id,
            filter: dname.to_string(),
            source: below,
        });
        let b = layer.blocks.len();
        layer.blocks.push(Block {
            id: format!("pass~{label}~{}", target - 1),
            kind: BlockKind::Nonlin(Nonlinearity::Identity),
            inputs: vec![BlockInput::Node(node)],
            emits_output: false,
        });
        carriers.insert((src, target), b);
        b
    }

    for li in 0..out.layers.len() {
        let m = li + 1;
        for bi in 0..out.layers[li].blocks.len() {
            for ii in 0..out.layers[li].blocks[bi].inputs.len() {
                let BlockInput::Skip(src) = out.layers[li].blocks[bi].inputs[ii] else {
                    continue;
                };
                let source = carrier(&mut out, &mut carriers, &dname, src, m);
                let label = out.block_label(src);
                let layer = &mut out.layers[li];
                let node = layer.nodes.len();
                let id = unique_node_id(layer, format!("delta~{label}"));
                layer.nodes.push(FilterNode {
                    id,
                    filter: dname.clone(),
                    source,
                });
                layer.blocks[bi].inputs[ii] = BlockInput::Node(node);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// JSON document format

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    grid: Option<RawGrid>,
    radius: Option<f64>,
    #[serde(default)]
    filters: BTreeMap<String, RawFilter>,
    #[serde(default)]
    layers: Vec<RawLayer>,
    output_atoms: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    x_min: f64,
    x_max: f64,
    step: f64,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawFilter {
    HaarPhi {
        #[serde(default)]
        j: i32,
    },
    HaarPsi {
        #[serde(default)]
        j: i32,
    },
    Bump {
        terms: Option<Vec<RawTerm>>,
        band: Option<[f64; 2]>,
        lowpass: Option<f64>,
        sample_offset: Option<f64>,
    },
    Delta {},
    Samples {
        re: Vec<f64>,
        im: Option<Vec<f64>>,
    },
    Spectrum {
        re: Vec<f64>,
        im: Option<Vec<f64>>,
    },
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawTerm {
    Rise(f64),
    Fall(f64),
    Plateau([f64; 2]),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayer {
    #[serde(default)]
    filters: Vec<RawNode>,
    #[serde(default)]
    blocks: Vec<RawBlock>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawNode {
    Name(String),
    Full {
        id: Option<String>,
        filter: String,
        from: Option<String>,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawP {
    Num(f64),
    Word(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlock {
    id: Option<String>,
    kind: String,
    p: Option<RawP>,
    nonlin: Option<String>,
    inputs: Vec<String>,
    radius: Option<f64>,
    output: Option<bool>,
}

fn complex_vec(re: Vec<f64>, im: Option<Vec<f64>>, what: &str) -> Result<Vec<Complex64>, String> {
    match im {
        None => Ok(re.into_iter().map(|r| Complex64::new(r, 0.0)).collect()),
        Some(im) if im.len() == re.len() => Ok(re
            .into_iter()
            .zip(im)
            .map(|(r, i)| Complex64::new(r, i))
            .collect()),
        Some(im) => Err(format!("{what}: re has {} values, im has {}", re.len(), im.len())),
    }
}

fn build_spec(name: &str, raw: RawFilter, grid: Grid) -> Result<FilterSpec, NetworkError> {
    let invalid = |message: String| NetworkError::Invalid {
        location: format!("filter {name}"),
        message,
    };
    Ok(match raw {
        RawFilter::HaarPhi { j } => FilterSpec::HaarPhi { j },
        RawFilter::HaarPsi { j } => FilterSpec::HaarPsi { j },
        RawFilter::Delta {} => FilterSpec::Delta,
        RawFilter::Bump {
            terms,
            band,
            lowpass,
            sample_offset,
        } => {
            let given = terms.is_some() as u8 + band.is_some() as u8 + lowpass.is_some() as u8;
            if given != 1 {
                return Err(invalid("bump needs exactly one of 'terms', 'band', 'lowpass'".into()));
            }
            let terms = if let Some(t) = terms {
                t.into_iter()
                    .map(|t| match t {
                        RawTerm::Rise(at) => BumpTerm::Rise { at },
                        RawTerm::Fall(at) => BumpTerm::Fall { at },
                        RawTerm::Plateau([a, b]) => BumpTerm::Plateau { a, b },
                    })
                    .collect()
            } else if let Some([a, b]) = band {
                BumpTerm::bandpass(a, b)
            } else {
                BumpTerm::lowpass(lowpass.unwrap())
            };
            FilterSpec::Bump {
                terms,
                sample_offset: sample_offset.unwrap_or(DEFAULT_BUMP_OFFSET),
            }
        }
        RawFilter::Samples { re, im } => {
            let v = complex_vec(re, im, name).map_err(invalid)?;
            FilterSpec::Samples(SampledSignal::new(grid, v)?)
        }
        RawFilter::Spectrum { re, im } => {
            let v = complex_vec(re, im, name).map_err(invalid)?;
            if v.len() != grid.n {
                return Err(SignalError::LengthMismatch {
                    expected: grid.n,
                    got: v.len(),
                }
                .into());
            }
            FilterSpec::Spectrum(Spectrum {
                freq_grid: grid.conjugate(),
                time_grid: grid,
                values: v,
            })
        }
    })
}

fn build_nonlin(
    word: Option<&str>,
    radius: Option<f64>,
    default_radius: f64,
    location: &str,
) -> Result<Nonlinearity, NetworkError> {
    Ok(match word.unwrap_or("modulus") {
        "modulus" => Nonlinearity::Modulus,
        "modulus_square" => Nonlinearity::ModulusSquare,
        "scaled_tanh" => Nonlinearity::ScaledTanh {
            radius: radius.unwrap_or(default_radius),
        },
        "identity" => Nonlinearity::Identity,
        other => {
            return Err(NetworkError::Invalid {
                location: location.into(),
                message: format!("unknown nonlinearity '{other}'"),
            })
        }
    })
}

/// Parses and validates a network document. Warnings do not fail parsing;
/// call [`validate_network`] to list them.
pub fn parse_network(text: &str) -> Result<NetworkGraph, NetworkError> {
    let raw: RawNetwork = serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        // serde appends the position, which we report separately
        let message = match full.rsplit_once(" at line ") {
            Some((head, _)) => head.to_string(),
            None => full,
        };
        NetworkError::Syntax {
            line: e.line(),
            column: e.column(),
            message,
        }
    })?;
    let grid = match raw.grid {
        Some(g) => Grid::from_range(g.x_min, g.x_max, g.step)?,
        None => Grid::default(),
    };
    let mut filters = BTreeMap::new();
    for (name, spec) in raw.filters {
        let spec = build_spec(&name, spec, grid)?;
        let f = Filter::new(name.clone(), spec, grid).map_err(|source| NetworkError::Filter {
            name: name.clone(),
            source,
        })?;
        filters.insert(name, Arc::new(f));
    }
    let radius = raw.radius.unwrap_or(1.0);

    // block id -> coordinates, filled layer by layer so references only
    // resolve backwards
    let mut block_index: HashMap<String, BlockRef> = HashMap::new();
    block_index.insert("root".into(), BlockRef::ROOT);
    let mut layers = Vec::with_capacity(raw.layers.len());
    for (li, rl) in raw.layers.into_iter().enumerate() {
        let m = li + 1;
        let mut layer = Layer::default();
        let prev_blocks = if m == 1 { 1 } else { layers_len_blocks(&layers, m - 1) };
        for rn in rl.filters {
            let (id, filter, from) = match rn {
                RawNode::Name(n) => (n.clone(), n, None),
                RawNode::Full { id, filter, from } => (id.unwrap_or_else(|| filter.clone()), filter, from),
            };
            let location = format!("layer {m} node {id}");
            if !filters.contains_key(&filter) {
                return Err(NetworkError::UnknownReference { location, name: filter });
            }
            let source = match from {
                Some(b) => match block_index.get(&b) {
                    Some(r) if r.layer + 1 == m => r.block,
                    Some(_) => {
                        return Err(NetworkError::Invalid {
                            location,
                            message: format!("'from' must name a block of layer {}, got '{b}'", m - 1),
                        })
                    }
                    None => return Err(NetworkError::UnknownReference { location, name: b }),
                },
                None if prev_blocks == 1 => 0,
                None => {
                    return Err(NetworkError::Invalid {
                        location,
                        message: format!("layer {} has {prev_blocks} blocks; give the node a 'from'", m - 1),
                    })
                }
            };
            layer.nodes.push(FilterNode { id, filter, source });
        }
        for (bi, rb) in rl.blocks.into_iter().enumerate() {
            let id = rb.id.unwrap_or_else(|| format!("K{m}_{}", bi + 1));
            let location = format!("layer {m} block {id}");
            let kind = match rb.kind.as_str() {
                "nonlin" => BlockKind::Nonlin(build_nonlin(rb.nonlin.as_deref(), rb.radius, radius, &location)?),
                "multiply" => BlockKind::Multiply(build_nonlin(rb.nonlin.as_deref(), rb.radius, radius, &location)?),
                "pnorm" => {
                    let p = match rb.p {
                        Some(RawP::Num(p)) => p,
                        Some(RawP::Word(w)) if w == "inf" => f64::INFINITY,
                        Some(RawP::Word(w)) => {
                            return Err(NetworkError::Invalid {
                                location,
                                message: format!("p must be a number or \"inf\", got \"{w}\""),
                            })
                        }
                        None => {
                            return Err(NetworkError::Invalid {
                                location,
                                message: "pnorm block needs 'p'".into(),
                            })
                        }
                    };
                    BlockKind::PNorm { p }
                }
                other => {
                    return Err(NetworkError::Invalid {
                        location,
                        message: format!("unknown block kind '{other}'"),
                    })
                }
            };
            let mut inputs = Vec::with_capacity(rb.inputs.len());
            for name in rb.inputs {
                if let Some(k) = layer.nodes.iter().position(|n| n.id == name) {
                    inputs.push(BlockInput::Node(k));
                } else if let Some(&r) = block_index.get(&name) {
                    inputs.push(BlockInput::Skip(r));
                } else {
                    return Err(NetworkError::UnknownReference {
                        location: location.clone(),
                        name,
                    });
                }
            }
            block_index.insert(id.clone(), BlockRef { layer: m, block: bi });
            layer.blocks.push(Block {
                id,
                kind,
                inputs,
                emits_output: rb.output.unwrap_or(true),
            });
        }
        layers.push(layer);
    }
    for (i, a) in raw.output_atoms.iter().enumerate() {
        if !filters.contains_key(a) {
            return Err(NetworkError::UnknownReference {
                location: format!("output_atoms[{i}]"),
                name: a.clone(),
            });
        }
    }
    let g = NetworkGraph {
        grid,
        radius,
        filters,
        layers,
        output_atoms: raw.output_atoms,
    };
    let v = validate_network(&g);
    if has_errors(&v) {
        return Err(NetworkError::Validation(
            v.into_iter().filter(|v| v.severity == Severity::Error).collect(),
        ));
    }
    Ok(g)
}

fn layers_len_blocks(layers: &[Layer], m: usize) -> usize {
    layers.get(m - 1).map_or(0, |l| l.blocks.len())
}

fn spec_json(spec: &FilterSpec) -> Value {
    let split = |v: &[Complex64]| -> (Vec<f64>, Vec<f64>) { v.iter().map(|z| (z.re, z.im)).unzip() };
    match spec {
        FilterSpec::HaarPhi { j } => json!({"kind": "haar_phi", "j": j}),
        FilterSpec::HaarPsi { j } => json!({"kind": "haar_psi", "j": j}),
        FilterSpec::Delta => json!({"kind": "delta"}),
        FilterSpec::Bump {
            terms,
            sample_offset,
        } => {
            let terms: Vec<Value> = terms
                .iter()
                .map(|t| match *t {
                    BumpTerm::Rise { at } => json!({"rise": at}),
                    BumpTerm::Fall { at } => json!({"fall": at}),
                    BumpTerm::Plateau { a, b } => json!({"plateau": [a, b]}),
                })
                .collect();
            json!({"kind": "bump", "terms": terms, "sample_offset": sample_offset})
        }
        FilterSpec::Samples(s) => {
            let (re, im) = split(&s.samples);
            json!({"kind": "samples", "re": re, "im": im})
        }
        FilterSpec::Spectrum(s) => {
            let (re, im) = split(&s.values);
            json!({"kind": "spectrum", "re": re, "im": im})
        }
    }
}

/// Serializes a graph in the document format accepted by [`parse_network`].
pub fn network_to_json(g: &NetworkGraph) -> Value {
    let filters: serde_json::Map<String, Value> = g
        .filters
        .iter()
        .map(|(n, f)| (n.clone(), spec_json(&f.spec)))
        .collect();
    let layers: Vec<Value> = g
        .layers
        .iter()
        .enumerate()
        .map(|(li, layer)| {
            let m = li + 1;
            let nodes: Vec<Value> = layer
                .nodes
                .iter()
                .map(|n| {
                    json!({
                        "id": n.id,
                        "filter": n.filter,
                        "from": g.block_label(BlockRef { layer: m - 1, block: n.source }),
                    })
                })
                .collect();
            let blocks: Vec<Value> = layer
                .blocks
                .iter()
                .map(|b| {
                    let inputs: Vec<String> = b
                        .inputs
                        .iter()
                        .map(|i| match *i {
                            BlockInput::Node(k) => layer.nodes[k].id.clone(),
                            BlockInput::Skip(r) => g.block_label(r),
                        })
                        .collect();
                    let mut v = json!({
                        "id": b.id,
                        "kind": b.kind.name(),
                        "inputs": inputs,
                        "output": b.emits_output,
                    });
                    match b.kind {
                        BlockKind::PNorm { p } => {
                            v["p"] = if p.is_infinite() { json!("inf") } else { json!(p) };
                        }
                        BlockKind::Nonlin(s) | BlockKind::Multiply(s) => {
                            v["nonlin"] = json!(s.name());
                            if let Nonlinearity::ScaledTanh { radius } = s {
                                v["radius"] = json!(radius);
                            }
                        }
                    }
                    v
                })
                .collect();
            json!({"filters": nodes, "blocks": blocks})
        })
        .collect();
    json!({
        "grid": {"x_min": g.grid.x_min, "x_max": g.grid.x_max(), "step": g.grid.step},
        "radius": g.radius,
        "filters": filters,
        "layers": layers,
        "output_atoms": g.output_atoms,
    })
}
