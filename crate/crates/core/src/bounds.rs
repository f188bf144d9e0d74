//! Lipschitz-bound estimators: per-layer Bessel product, backpropagated L¹
//! product, Monte-Carlo witnessed ratio, plus the deformation probe.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::filters::{bessel_bound_refined, Filter, FilterError};
use crate::network::{
    modulus_square_norm_limit, normalize_delta, BlockInput, BlockKind, BlockRef, NetworkGraph,
    Nonlinearity,
};
use crate::propagate::{feature_norm, PropagateError, Propagator};
use crate::signal::{deform, fourier_transform, Deformation, Grid, Interpolation, SampledSignal, SignalError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error(transparent)]
    Propagate(#[from] PropagateError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("all {0} sampled pairs were identical; no ratio observed")]
    AllDegenerate(u64),
    #[error("network has no output atom φ_{0}")]
    MissingAtom(usize),
    #[error("signal is not band-limited to [-{radius}, {radius}]: {fraction:.3e} of its spectral energy lies outside (limit 1e-6)")]
    NotBandLimited { radius: f64, fraction: f64 },
    #[error("deformation too steep: s·‖Dτ‖∞ = {0:.4} exceeds 1/2")]
    DeformationTooSteep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BesselProduct,
    BackpropL1,
    MonteCarloLower,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::BesselProduct => "bessel_product",
            Method::BackpropL1 => "backprop_l1",
            Method::MonteCarloLower => "monte_carlo_lower",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerBesselEntry {
    pub m: usize,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "B_tilde")]
    pub b_tilde: f64,
    /// Block of layer `m − 1` attaining the maximum.
    pub argmax: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assumption {
    pub condition: String,
    pub satisfied: bool,
    /// A failed hard assumption invalidates the bound.
    pub hard: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteCoefficient {
    pub site: String,
    pub layer: usize,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub iteration: u64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub method: Method,
    pub value: f64,
    pub valid: bool,
    pub per_layer: Vec<LayerBesselEntry>,
    pub assumptions: Vec<Assumption>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sites: Vec<SiteCoefficient>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub config: Value,
}

impl BoundReport {
    fn new(method: Method, value: f64, assumptions: Vec<Assumption>, config: Value) -> Self {
        let valid = assumptions.iter().all(|a| a.satisfied || !a.hard);
        BoundReport {
            method,
            value,
            valid,
            per_layer: vec![],
            assumptions,
            sites: vec![],
            witness: None,
            config,
        }
    }
}

fn block_value_label(g: &NetworkGraph, r: BlockRef) -> String {
    g.block_label(r)
}

/// Bessel weight of a filter feeding a block of the given kind and in-degree.
pub fn branch_weight(kind: BlockKind, in_degree: usize) -> f64 {
    match kind {
        BlockKind::Nonlin(_) => 1.0,
        BlockKind::PNorm { p } => (in_degree as f64).powf(2.0 / p - 1.0).max(1.0),
        BlockKind::Multiply(_) => in_degree as f64,
    }
}

/// Worst-case `‖·‖∞` of every block value for inputs in the radius ball,
/// indexed `[m][λ]` with the input as layer 0. Expects a skip-free graph.
pub fn linf_envelope(g: &NetworkGraph) -> Vec<Vec<f64>> {
    let mut r = vec![vec![g.radius]];
    for (li, layer) in g.layers.iter().enumerate() {
        let node_r: Vec<f64> = layer
            .nodes
            .iter()
            .map(|n| r[li][n.source] * g.filters.get(&n.filter).map_or(f64::INFINITY, |f| f.l1))
            .collect();
        let vals = layer
            .blocks
            .iter()
            .map(|b| {
                let ins: Vec<f64> = b
                    .inputs
                    .iter()
                    .map(|i| match *i {
                        BlockInput::Node(k) => node_r[k],
                        BlockInput::Skip(s) => r[s.layer][s.block],
                    })
                    .collect();
                match b.kind {
                    BlockKind::Nonlin(s) => sigma_bound(s, ins[0]),
                    BlockKind::PNorm { p } if p.is_infinite() => ins.iter().copied().fold(0.0, f64::max),
                    BlockKind::PNorm { p } => ins.iter().map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p),
                    BlockKind::Multiply(s) => ins.iter().map(|&x| sigma_bound(s, x)).product(),
                }
            })
            .collect();
        r.push(vals);
    }
    r
}

fn sigma_bound(s: Nonlinearity, r: f64) -> f64 {
    match s {
        Nonlinearity::ModulusSquare => r * r,
        Nonlinearity::ScaledTanh { radius } => r.min(radius),
        _ => r,
    }
}

fn common_assumptions(g: &NetworkGraph) -> Vec<Assumption> {
    let mut out = vec![Assumption {
        condition: "every nonlinearity other than |·|² is 1-Lipschitz".into(),
        satisfied: true,
        hard: true,
        detail: "modulus, scaled_tanh and identity are 1-Lipschitz by construction".into(),
    }];
    if g.uses_modulus_square() {
        let limit = modulus_square_norm_limit(g.radius);
        let bad: Vec<String> = g
            .layers
            .iter()
            .flat_map(|l| &l.nodes)
            .filter_map(|n| g.filters.get(&n.filter))
            .filter(|f| !f.is_delta() && f.l1 > limit + 1e-12)
            .map(|f| format!("{} ({:.4})", f.name, f.l1))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        out.push(Assumption {
            condition: format!("‖g‖₁ ≤ min{{1, 2√R}}/(2R) = {limit:.6} for every filter (|·|² present)"),
            satisfied: bad.is_empty(),
            hard: true,
            detail: if bad.is_empty() { "all filters comply".into() } else { format!("violated by {}", bad.join(", ")) },
        });
    }
    let has_mult = g.layers.iter().flat_map(|l| &l.blocks).any(|b| matches!(b.kind, BlockKind::Multiply(_)));
    if has_mult {
        let mut bad = Vec::new();
        for layer in &g.layers {
            for b in layer.blocks.iter().filter(|b| matches!(b.kind, BlockKind::Multiply(_))) {
                for i in &b.inputs {
                    if let BlockInput::Node(k) = *i {
                        let node = &layer.nodes[k];
                        if let Some(f) = g.filters.get(&node.filter) {
                            if f.l1 > 1.0 + 1e-9 {
                                bad.push(format!("{} ({:.4})", f.name, f.l1));
                            }
                        }
                    }
                }
            }
        }
        out.push(Assumption {
            condition: "‖g‖₁ ≤ 1 for every filter feeding a multiplication block".into(),
            satisfied: bad.is_empty(),
            hard: true,
            detail: if bad.is_empty() { "all product branches comply".into() } else { format!("violated by {}", bad.join(", ")) },
        });
        let env = linf_envelope(g);
        let mut worst: f64 = 0.0;
        for (li, layer) in g.layers.iter().enumerate() {
            for b in layer.blocks.iter() {
                if let BlockKind::Multiply(s) = b.kind {
                    for i in &b.inputs {
                        let r = match *i {
                            BlockInput::Node(k) => {
                                let n = &layer.nodes[k];
                                env[li][n.source] * g.filters.get(&n.filter).map_or(f64::INFINITY, |f| f.l1)
                            }
                            BlockInput::Skip(s) => env[s.layer][s.block],
                        };
                        worst = worst.max(sigma_bound(s, r));
                    }
                }
            }
        }
        out.push(Assumption {
            condition: "product branches stay inside the unit ball (worst-case L∞ propagation)".into(),
            satisfied: worst <= 1.0 + 1e-12,
            hard: false,
            detail: format!("worst-case branch bound {worst:.4}; the product step uses factor 1 per branch"),
        });
    }
    out.push(Assumption {
        condition: format!("inputs satisfy ‖f‖∞ ≤ R = {}", g.radius),
        satisfied: true,
        hard: false,
        detail: if g.requires_ball() {
            "required by |·|² or multiplication; enforced at propagation".into()
        } else {
            "not required by this network".into()
        },
    });
    out
}

/// Square root of `Π B̃_m`, with per-layer bounds taken over the blocks of
/// the previous layer. `refine > 1` adds a denser frequency pass.
pub fn lipschitz_bessel_product(g: &NetworkGraph, refine: usize) -> Result<BoundReport, BoundsError> {
    let n = normalize_delta(g);
    let depth = n.depth();
    let mut per_layer = Vec::with_capacity(depth + 1);
    for m in 1..=depth + 1 {
        let atom = n.atom(m).ok_or(BoundsError::MissingAtom(m))?;
        let mut best = (0.0f64, String::from("-"));
        for src in 0..n.block_count(m - 1) {
            let sref = BlockRef { layer: m - 1, block: src };
            let emits = m == 1 || n.block(sref).is_some_and(|b| b.emits_output);
            let mut fs: Vec<&Filter> = vec![];
            let mut ws = vec![];
            if m <= depth {
                let layer = &n.layers[m - 1];
                for (k, node) in layer.nodes.iter().enumerate().filter(|(_, x)| x.source == src) {
                    let consumer = layer
                        .blocks
                        .iter()
                        .find(|b| b.inputs.contains(&BlockInput::Node(k)));
                    let Some(b) = consumer else { continue };
                    fs.push(&n.filters[&node.filter]);
                    ws.push(branch_weight(b.kind, b.inputs.len()));
                }
            }
            if fs.is_empty() && !emits {
                continue;
            }
            let v = bessel_bound_refined(&fs, emits.then_some(atom.as_ref()), &ws, refine)?;
            if v > best.0 || best.1 == "-" {
                best = (v, block_value_label(&n, sref));
            }
        }
        let b_tilde = if m == 1 { best.0 } else { best.0.max(1.0) };
        per_layer.push(LayerBesselEntry {
            m,
            b: best.0,
            b_tilde,
            argmax: best.1,
        });
    }
    let value = per_layer.iter().map(|e| e.b_tilde).product::<f64>().sqrt();
    let mut r = BoundReport::new(
        Method::BesselProduct,
        value,
        common_assumptions(&n),
        json!({"refine": refine, "normalized": g.has_skips()}),
    );
    r.per_layer = per_layer;
    Ok(r)
}

/// Per-site products of filter L¹ norms along all contributing paths, summed
/// additively through aggregation and product blocks.
pub fn lipschitz_backprop_l1(g: &NetworkGraph) -> Result<BoundReport, BoundsError> {
    let n = normalize_delta(g);
    let env = linf_envelope(&n);
    let l1 = |name: &str| n.filters.get(name).map_or(f64::INFINITY, |f| f.l1);
    let mut coef: Vec<Vec<f64>> = vec![vec![1.0]];
    for (li, layer) in n.layers.iter().enumerate() {
        let node_c: Vec<f64> = layer.nodes.iter().map(|x| coef[li][x.source] * l1(&x.filter)).collect();
        let node_r: Vec<f64> = layer.nodes.iter().map(|x| env[li][x.source] * l1(&x.filter)).collect();
        let vals = layer
            .blocks
            .iter()
            .map(|b| {
                let idx = b.inputs.iter().map(|i| match *i {
                    BlockInput::Node(k) => k,
                    BlockInput::Skip(_) => unreachable!("normalized graph has no skips"),
                });
                let factor = |s: Nonlinearity, r: f64| if s == Nonlinearity::ModulusSquare { 2.0 * r } else { 1.0 };
                match b.kind {
                    BlockKind::Nonlin(s) | BlockKind::Multiply(s) => {
                        idx.map(|k| node_c[k] * factor(s, node_r[k])).sum::<f64>()
                    }
                    BlockKind::PNorm { .. } => idx.map(|k| node_c[k]).sum(),
                }
            })
            .collect();
        coef.push(vals);
    }
    let mut sites = Vec::new();
    for site in n.output_sites() {
        let atom = n.atom(site.layer + 1).ok_or(BoundsError::MissingAtom(site.layer + 1))?;
        sites.push(SiteCoefficient {
            site: n.block_label(site),
            layer: site.layer,
            coefficient: coef[site.layer][site.block] * atom.l1,
        });
    }
    let value = sites.iter().map(|s| s.coefficient.powi(2)).sum::<f64>().sqrt();
    let mut r = BoundReport::new(
        Method::BackpropL1,
        value,
        common_assumptions(&n),
        json!({"squared_constant": value * value}),
    );
    r.sites = sites;
    Ok(r)
}

/// `‖φ̂₁‖∞`: the supremum of the root-output ratio alone.
pub fn exact_output_lower_bound(g: &NetworkGraph) -> Result<f64, BoundsError> {
    Ok(g.atom(1).ok_or(BoundsError::MissingAtom(1))?.spectrum.linf_norm())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McConfig {
    pub iterations: u64,
    pub seed: u64,
    /// Spacing of the random coarse samples; a multiple of the grid step.
    pub coarse_step: f64,
    /// Coarse samples are uniform on `[−amplitude, amplitude]`.
    pub amplitude: f64,
    pub upsample: Interpolation,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            iterations: 100_000,
            seed: 0,
            coarse_step: 1.0,
            amplitude: 1.0,
            upsample: Interpolation::Sinc,
        }
    }
}

/// Linear map from coarse random samples to the fine grid.
#[derive(Debug, Clone)]
pub struct Upsampler {
    grid: Grid,
    coarse: usize,
    /// Row-major `grid.n × coarse`.
    matrix: Vec<f64>,
}

impl Upsampler {
    pub fn new(grid: Grid, coarse_step: f64, mode: Interpolation) -> Result<Self, BoundsError> {
        let ratio = coarse_step / grid.step;
        if !(ratio >= 1.0) || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(BoundsError::InvalidConfig(format!(
                "coarse step {coarse_step} is not a positive integer multiple of the grid step {}",
                grid.step
            )));
        }
        let r = ratio.round() as usize;
        let origin = grid.origin_index().ok_or(SignalError::NotOriginAligned(grid))?;
        let first = origin % r;
        let pos: Vec<usize> = (first..grid.n).step_by(r).collect();
        let kernel = |t: f64| -> f64 {
            match mode {
                Interpolation::Sinc => {
                    if t == 0.0 {
                        1.0
                    } else {
                        (PI * t).sin() / (PI * t)
                    }
                }
                Interpolation::Linear => (1.0 - t.abs()).max(0.0),
                Interpolation::Hold => {
                    if (0.0..1.0).contains(&(t + 1e-9)) {
                        1.0
                    } else {
                        0.0
                    }
                }
            }
        };
        let mut matrix = Vec::with_capacity(grid.n * pos.len());
        for i in 0..grid.n {
            for &p in &pos {
                matrix.push(kernel((i as f64 - p as f64) / r as f64));
            }
        }
        Ok(Upsampler {
            grid,
            coarse: pos.len(),
            matrix,
        })
    }

    pub fn coarse_len(&self) -> usize {
        self.coarse
    }

    pub fn apply(&self, c: &[f64]) -> SampledSignal {
        let samples = self
            .matrix
            .chunks_exact(self.coarse)
            .map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>().into())
            .collect();
        SampledSignal {
            grid: self.grid,
            samples,
        }
    }
}

/// Independent random stream for one iteration.
fn iteration_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

/// Largest observed `|||Φ(f) − Φ(h)||| / ‖f − h‖₂` over random pairs.
pub fn lipschitz_monte_carlo(g: &NetworkGraph, cfg: &McConfig) -> Result<BoundReport, BoundsError> {
    if cfg.iterations == 0 {
        return Err(BoundsError::InvalidConfig("iterations must be at least 1".into()));
    }
    if !(cfg.amplitude > 0.0) {
        return Err(BoundsError::InvalidConfig(format!("amplitude must be positive, got {}", cfg.amplitude)));
    }
    let up = Upsampler::new(g.grid, cfg.coarse_step, cfg.upsample)?;
    let prop = Propagator::new(g)?;
    let clip = g.requires_ball().then_some(g.radius);
    let draw = |rng: &mut ChaCha8Rng| -> SampledSignal {
        let c: Vec<f64> = (0..up.coarse_len()).map(|_| rng.gen_range(-cfg.amplitude..=cfg.amplitude)).collect();
        let mut s = up.apply(&c);
        if let Some(r) = clip {
            for z in &mut s.samples {
                z.re = z.re.clamp(-r, r);
            }
        }
        s
    };
    let trial = |i: u64| -> Result<Option<(f64, u64)>, BoundsError> {
        let mut rng = iteration_rng(cfg.seed, i);
        let f = draw(&mut rng);
        let h = draw(&mut rng);
        let d = f.sub(&h)?.l2_norm();
        if d == 0.0 {
            return Ok(None);
        }
        Ok(Some((prop.feature_distance(&f, &h)? / d, i)))
    };
    let pick = |a: Option<(f64, u64)>, b: Option<(f64, u64)>| match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x }),
    };
    let best = (0..cfg.iterations)
        .into_par_iter()
        .map(trial)
        .try_reduce(|| None, |a, b| Ok(pick(a, b)))?;
    let (ratio, iteration) = best.ok_or(BoundsError::AllDegenerate(cfg.iterations))?;
    let assumptions = vec![Assumption {
        condition: "sampled inputs lie in the ball required by the network".into(),
        satisfied: true,
        hard: false,
        detail: match clip {
            Some(r) => format!("samples clipped to [-{r}, {r}]"),
            None => "no clipping needed".into(),
        },
    }];
    let mut r = BoundReport::new(
        Method::MonteCarloLower,
        ratio,
        assumptions,
        serde_json::to_value(cfg).expect("config serializes"),
    );
    r.witness = Some(Witness { iteration, ratio });
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    /// Declared band limit `R` of the probe signal.
    pub band_limit: f64,
    /// Deformation at scale 1; scales multiply both fields.
    pub base: Deformation,
    pub interpolation: Interpolation,
}

impl ProbeConfig {
    /// Smooth periodic warp with `‖Dτ‖∞ = 1/2` and a matching modulation.
    pub fn smooth(grid: Grid, band_limit: f64) -> Self {
        let period = 10.0;
        let amp = period / (4.0 * PI);
        let tau = SampledSignal::from_real_fn(grid, |x| amp * (2.0 * PI * x / period).sin());
        let omega = SampledSignal::from_real_fn(grid, |x| 0.25 * (2.0 * PI * x / period).cos());
        ProbeConfig {
            band_limit,
            base: Deformation { tau, omega },
            interpolation: Interpolation::Sinc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRow {
    pub scale: f64,
    /// `R·‖sτ‖∞ + ‖sω‖∞`.
    pub size: f64,
    pub ratio: f64,
}

/// Fraction of spectral energy outside `[−R, R]`.
pub fn energy_outside_band(f: &SampledSignal, radius: f64) -> f64 {
    let s = fourier_transform(f);
    let (mut inside, mut outside) = (0.0, 0.0);
    for (w, v) in s.frequencies().zip(&s.values) {
        if w.abs() <= radius {
            inside += v.norm_sqr();
        } else {
            outside += v.norm_sqr();
        }
    }
    let total = inside + outside;
    if total == 0.0 {
        0.0
    } else {
        outside / total
    }
}

/// `|||Φ(f) − Φ(F_{sτ,sω} f)||| / ‖f‖₂` for each scale `s`.
pub fn deformation_probe(
    g: &NetworkGraph,
    f: &SampledSignal,
    scales: &[f64],
    cfg: &ProbeConfig,
) -> Result<Vec<ProbeRow>, BoundsError> {
    let fraction = energy_outside_band(f, cfg.band_limit);
    if fraction > 1e-6 {
        return Err(BoundsError::NotBandLimited {
            radius: cfg.band_limit,
            fraction,
        });
    }
    let tau = &cfg.base.tau;
    let step = tau.grid.step;
    let slope = tau
        .samples
        .windows(2)
        .map(|w| ((w[1].re - w[0].re) / step).abs())
        .fold(0.0, f64::max);
    let max_scale = scales.iter().map(|s| s.abs()).fold(0.0, f64::max);
    if max_scale * slope > 0.5 + 1e-9 {
        return Err(BoundsError::DeformationTooSteep(max_scale * slope));
    }
    let norm = f.l2_norm();
    if norm == 0.0 {
        return Err(BoundsError::InvalidConfig("probe signal is zero".into()));
    }
    let prop = Propagator::new(g)?;
    let base = prop.run(f, false)?.features;
    let mut rows = Vec::with_capacity(scales.len());
    for &s in scales {
        let d = cfg.base.scaled(s);
        let moved = deform(f, &d, cfg.interpolation)?;
        let feats = prop.run(&moved, false)?.features;
        rows.push(ProbeRow {
            scale: s,
            size: cfg.band_limit * d.tau.linf_norm() + d.omega.linf_norm(),
            ratio: feature_norm(&base, Some(&feats))? / norm,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{bump_network, haar_network};
    use crate::filters::FilterSpec;
    use crate::network::parse_network;
    use num_complex::Complex64;

    #[test]
    fn weights_follow_block_kind() {
        assert_eq!(branch_weight(BlockKind::Nonlin(Nonlinearity::Modulus), 1), 1.0);
        assert_eq!(branch_weight(BlockKind::PNorm { p: 2.0 }, 3), 1.0);
        assert!((branch_weight(BlockKind::PNorm { p: 1.0 }, 3) - 3.0).abs() < 1e-15);
        assert_eq!(branch_weight(BlockKind::PNorm { p: f64::INFINITY }, 5), 1.0);
        assert_eq!(branch_weight(BlockKind::Multiply(Nonlinearity::Modulus), 2), 2.0);
    }

    #[test]
    fn haar_bessel_product_is_one() {
        let g = haar_network(Grid::default()).unwrap();
        let r = lipschitz_bessel_product(&g, 4).unwrap();
        assert!((r.value - 1.0).abs() < 1e-3, "{}", r.value);
        assert_eq!(r.per_layer.len(), 4);
        assert!(r.valid);
    }

    #[test]
    fn bump_ledger() {
        let g = bump_network(Grid::default()).unwrap();
        let r = lipschitz_bessel_product(&g, 4).unwrap();
        let bt: Vec<f64> = r.per_layer.iter().map(|e| e.b_tilde).collect();
        for (got, want) in bt.iter().zip([1.0, 1.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-9, "{bt:?}");
        }
        assert!(r.valid);
        // the worst-case envelope exceeds the unit ball: recorded, not fatal
        assert!(r.assumptions.iter().any(|a| !a.hard && !a.satisfied));
    }

    #[test]
    fn unit_norm_bump_topology_gives_76() {
        let mut g = bump_network(Grid::default()).unwrap();
        for f in g.filters.values_mut() {
            let mut x = (**f).clone();
            x.l1 = 1.0;
            *f = std::sync::Arc::new(x);
        }
        let r = lipschitz_backprop_l1(&g).unwrap();
        assert!((r.value.powi(2) - 76.0).abs() < 1e-9, "{}", r.value);
        let c: Vec<f64> = r.sites.iter().map(|s| s.coefficient).collect();
        assert_eq!(c, [1.0, 1.0, 3.0, 1.0, 8.0]);
    }

    #[test]
    fn trivial_single_layer_bessel_is_one() {
        let text = r#"{"grid": {"x_min": -2, "x_max": 2, "step": 0.25},
            "filters": {"d": {"kind": "delta"}, "z": {"kind": "spectrum", "re": [0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]}},
            "layers": [{"filters": ["d"], "blocks": [{"kind": "nonlin", "inputs": ["d"]}]}],
            "output_atoms": ["z", "z"]}"#;
        let g = parse_network(text).unwrap();
        assert!(matches!(g.filters["z"].spec, FilterSpec::Spectrum(_)));
        let r = lipschitz_bessel_product(&g, 1).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert_eq!(exact_output_lower_bound(&g).unwrap(), 0.0);
    }

    #[test]
    fn upsampler_interpolates_coarse_samples() {
        let g = Grid::default();
        for mode in [Interpolation::Sinc, Interpolation::Linear] {
            let up = Upsampler::new(g, 1.0, mode).unwrap();
            assert_eq!(up.coarse_len(), 41);
            let c: Vec<f64> = (0..41).map(|k| (k as f64 * 0.7).sin()).collect();
            let s = up.apply(&c);
            for (k, v) in c.iter().enumerate() {
                assert!((s.samples[k * 40].re - v).abs() < 1e-12);
            }
        }
        assert!(Upsampler::new(g, 0.03, Interpolation::Sinc).is_err());
    }

    #[test]
    fn monte_carlo_is_deterministic_and_below_bound() {
        let g = haar_network(Grid::default()).unwrap();
        let cfg = McConfig { iterations: 20, seed: 7, ..McConfig::default() };
        let a = lipschitz_monte_carlo(&g, &cfg).unwrap();
        let b = lipschitz_monte_carlo(&g, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.value > 0.5 && a.value <= 1.0 + 1e-3, "{}", a.value);
        assert!(lipschitz_monte_carlo(&g, &McConfig { iterations: 0, ..cfg }).is_err());
    }

    #[test]
    fn probe_rejects_wideband_signal_and_zero_scale_is_zero() {
        let g = haar_network(Grid::default()).unwrap();
        let cfg = ProbeConfig::smooth(g.grid, 1.0);
        let boxy = SampledSignal::from_real_fn(g.grid, |x| if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 });
        assert!(matches!(
            deformation_probe(&g, &boxy, &[0.1], &cfg),
            Err(BoundsError::NotBandLimited { .. })
        ));
        let f = SampledSignal::from_fn(g.grid, |x| Complex64::new((-x * x / 8.0).exp(), 0.0));
        let rows = deformation_probe(&g, &f, &[0.0], &cfg).unwrap();
        assert_eq!(rows[0].ratio, 0.0);
        assert!(matches!(
            deformation_probe(&g, &f, &[2.0], &cfg),
            Err(BoundsError::DeformationTooSteep(_))
        ));
    }
}
