//! Runs a network on an input signal and measures feature distances.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use thiserror::Error;

use crate::network::{BlockInput, BlockKind, BlockRef, NetworkGraph, Nonlinearity};
use crate::signal::{Convolver, Kernel, SampledSignal, SignalError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagateError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("input has ‖f‖∞ = {linf} but the network requires inputs in the ball of radius {radius}")]
    RadiusViolated { linf: f64, radius: f64 },
    #[error("feature sets have different output sites")]
    KeyMismatch,
    #[error("network refers to missing filter '{0}'")]
    MissingFilter(String),
}

/// Output site: the root or an emitting block.
pub type OutputKey = BlockRef;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub entries: BTreeMap<OutputKey, SampledSignal>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries
            .values()
            .map(|s| s.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// `|||a|||`, or `|||a − b|||` when `b` is given.
pub fn feature_norm(a: &FeatureSet, b: Option<&FeatureSet>) -> Result<f64, PropagateError> {
    let Some(b) = b else {
        return Ok(a.norm());
    };
    if a.entries.len() != b.entries.len() || a.entries.keys().zip(b.entries.keys()).any(|(x, y)| x != y) {
        return Err(PropagateError::KeyMismatch);
    }
    let mut acc = 0.0;
    for (x, y) in a.entries.values().zip(b.entries.values()) {
        acc += x.sub(y)?.l2_norm().powi(2);
    }
    Ok(acc.sqrt())
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub features: FeatureSet,
    /// Value of every block, keyed by coordinates; the root is the input.
    pub intermediates: Option<BTreeMap<BlockRef, SampledSignal>>,
}

pub fn apply_nonlin(sigma: Nonlinearity, y: &SampledSignal) -> SampledSignal {
    y.map(|z| sigma.apply(z))
}

/// Pointwise `(Σₗ|yₗ|^p)^{1/p}`, or `maxₗ|yₗ|` for `p = ∞`.
pub fn pnorm_block(p: f64, inputs: &[&SampledSignal]) -> SampledSignal {
    let grid = inputs[0].grid;
    let n = grid.n;
    let mut out = Vec::with_capacity(n);
    let mut mags = vec![0.0; inputs.len()];
    for k in 0..n {
        for (m, y) in mags.iter_mut().zip(inputs) {
            *m = y.samples[k].norm();
        }
        let top = mags.iter().copied().fold(0.0, f64::max);
        let v = if top == 0.0 || p.is_infinite() {
            top
        } else if p == 2.0 {
            top * mags.iter().map(|m| (m / top).powi(2)).sum::<f64>().sqrt()
        } else if p == 1.0 {
            mags.iter().sum()
        } else {
            top * mags.iter().map(|m| (m / top).powf(p)).sum::<f64>().powf(1.0 / p)
        };
        out.push(Complex64::new(v, 0.0));
    }
    SampledSignal { grid, samples: out }
}

/// Pointwise product of `σ(yₗ)`.
pub fn multiply_block(sigma: Nonlinearity, inputs: &[&SampledSignal]) -> SampledSignal {
    let grid = inputs[0].grid;
    let samples = (0..grid.n)
        .map(|k| {
            inputs
                .iter()
                .fold(Complex64::new(1.0, 0.0), |acc, y| acc * sigma.apply(y.samples[k]))
        })
        .collect();
    SampledSignal { grid, samples }
}

pub fn apply_block(kind: BlockKind, inputs: &[&SampledSignal]) -> SampledSignal {
    match kind {
        BlockKind::Nonlin(s) => apply_nonlin(s, inputs[0]),
        BlockKind::PNorm { p } => pnorm_block(p, inputs),
        BlockKind::Multiply(s) => multiply_block(s, inputs),
    }
}

/// Network evaluator with cached FFT plans and filter transforms.
pub struct Propagator<'g> {
    graph: &'g NetworkGraph,
    conv: Convolver,
    kernels: HashMap<String, Kernel>,
    real_kernels: bool,
}

impl<'g> Propagator<'g> {
    pub fn new(graph: &'g NetworkGraph) -> Result<Self, PropagateError> {
        let mut names: Vec<&String> = graph
            .layers
            .iter()
            .flat_map(|l| &l.nodes)
            .map(|n| &n.filter)
            .chain(&graph.output_atoms)
            .collect();
        names.sort();
        names.dedup();
        let mut used = Vec::new();
        for name in names {
            let f = graph
                .filters
                .get(name)
                .ok_or_else(|| PropagateError::MissingFilter(name.clone()))?;
            f.grid().check_same(&graph.grid)?;
            if !f.is_delta() {
                used.push(f);
            }
        }
        let (lo, hi) = used
            .iter()
            .filter_map(|f| Convolver::support(&f.time))
            .fold((usize::MAX, 0), |(a, b), (l, h)| (a.min(l), b.max(h)));
        let conv = if lo == usize::MAX {
            Convolver::new(graph.grid)?
        } else {
            Convolver::with_support(graph.grid, lo, hi)?
        };
        let real_kernels = used.iter().all(|f| f.time.max_imag() <= 1e-12 * f.time.linf_norm());
        let kernels = used
            .iter()
            .map(|f| {
                let mut t = f.time.clone();
                if real_kernels {
                    // drop inverse-transform round-off so packed pairs separate exactly
                    t.samples.iter_mut().for_each(|z| z.im = 0.0);
                }
                (f.name.clone(), conv.kernel(&t))
            })
            .collect();
        Ok(Propagator {
            graph,
            conv,
            kernels,
            real_kernels,
        })
    }

    pub fn graph(&self) -> &NetworkGraph {
        self.graph
    }

    fn filtered(&self, name: &str, value: &SampledSignal, fft: &mut Option<Vec<Complex64>>) -> SampledSignal {
        match self.kernels.get(name) {
            None => value.clone(),
            Some(k) => {
                let t = fft.get_or_insert_with(|| self.conv.transform(&value.samples));
                self.conv.apply_transformed(t, k)
            }
        }
    }

    pub fn run(&self, f: &SampledSignal, keep_intermediates: bool) -> Result<Propagation, PropagateError> {
        let g = self.graph;
        f.grid.check_same(&g.grid)?;
        if g.requires_ball() {
            let linf = f.linf_norm();
            if linf > g.radius * (1.0 + 1e-12) {
                return Err(PropagateError::RadiusViolated {
                    linf,
                    radius: g.radius,
                });
            }
        }
        let mut features = BTreeMap::new();
        // values[m][λ], with the input as layer 0
        let mut values: Vec<Vec<SampledSignal>> = vec![vec![f.clone()]];
        let mut ffts: Vec<Vec<Option<Vec<Complex64>>>> = vec![vec![None]];

        let emit = |m: usize, v: &SampledSignal, fft: &mut Option<Vec<Complex64>>| -> SampledSignal {
            self.filtered(&g.output_atoms[m], v, fft)
        };
        features.insert(BlockRef::ROOT, emit(0, f, &mut ffts[0][0]));

        for (li, layer) in g.layers.iter().enumerate() {
            let m = li + 1;
            let mut node_out = Vec::with_capacity(layer.nodes.len());
            for node in &layer.nodes {
                let y = self.filtered(&node.filter, &values[m - 1][node.source], &mut ffts[m - 1][node.source]);
                node_out.push(y);
            }
            let mut vals = Vec::with_capacity(layer.blocks.len());
            for b in &layer.blocks {
                let ins: Vec<&SampledSignal> = b
                    .inputs
                    .iter()
                    .map(|i| match *i {
                        BlockInput::Node(k) => &node_out[k],
                        BlockInput::Skip(r) => &values[r.layer][r.block],
                    })
                    .collect();
                vals.push(apply_block(b.kind, &ins));
            }
            let mut fs: Vec<Option<Vec<Complex64>>> = vec![None; vals.len()];
            for (bi, b) in layer.blocks.iter().enumerate() {
                if b.emits_output {
                    let out = emit(m, &vals[bi], &mut fs[bi]);
                    features.insert(BlockRef { layer: m, block: bi }, out);
                }
            }
            values.push(vals);
            ffts.push(fs);
        }
        let intermediates = keep_intermediates.then(|| {
            values
                .into_iter()
                .enumerate()
                .flat_map(|(m, vs)| {
                    vs.into_iter()
                        .enumerate()
                        .map(move |(b, v)| (BlockRef { layer: m, block: b }, v))
                })
                .collect()
        });
        Ok(Propagation {
            features: FeatureSet { entries: features },
            intermediates,
        })
    }
}

impl Propagator<'_> {
    /// `|||Φ(f) − Φ(h)|||`. For real inputs and real filters both signals
    /// travel through one complex transform as `f + ih`.
    pub fn feature_distance(&self, f: &SampledSignal, h: &SampledSignal) -> Result<f64, PropagateError> {
        let real = self.real_kernels && f.max_imag() == 0.0 && h.max_imag() == 0.0;
        if !real {
            let a = self.run(f, false)?.features;
            let b = self.run(h, false)?.features;
            return feature_norm(&a, Some(&b));
        }
        let g = self.graph;
        f.grid.check_same(&g.grid)?;
        h.grid.check_same(&g.grid)?;
        if g.requires_ball() {
            let linf = f.linf_norm().max(h.linf_norm());
            if linf > g.radius * (1.0 + 1e-12) {
                return Err(PropagateError::RadiusViolated { linf, radius: g.radius });
            }
        }
        let pack = |a: &SampledSignal, b: &SampledSignal| -> Vec<Complex64> {
            a.samples.iter().zip(&b.samples).map(|(x, y)| Complex64::new(x.re, y.re)).collect()
        };
        let split = |z: &SampledSignal| -> (SampledSignal, SampledSignal) {
            (z.map(|v| Complex64::new(v.re, 0.0)), z.map(|v| Complex64::new(v.im, 0.0)))
        };
        let step = g.grid.step;
        let mut acc = 0.0;
        let mut emit = |m: usize, z: &SampledSignal, fft: &mut Option<Vec<Complex64>>| {
            let y = self.filtered(&g.output_atoms[m], z, fft);
            acc += step * y.samples.iter().map(|v| (v.re - v.im).powi(2)).sum::<f64>();
        };
        let root = SampledSignal { grid: g.grid, samples: pack(f, h) };
        let mut values: Vec<Vec<SampledSignal>> = vec![vec![root]];
        let mut ffts: Vec<Vec<Option<Vec<Complex64>>>> = vec![vec![None]];
        emit(0, &values[0][0], &mut ffts[0][0]);
        for (li, layer) in g.layers.iter().enumerate() {
            let m = li + 1;
            let mut node_out = Vec::with_capacity(layer.nodes.len());
            for node in &layer.nodes {
                node_out.push(split(&self.filtered(
                    &node.filter,
                    &values[m - 1][node.source],
                    &mut ffts[m - 1][node.source],
                )));
            }
            let mut vals = Vec::with_capacity(layer.blocks.len());
            for b in &layer.blocks {
                let mut fa = Vec::with_capacity(b.inputs.len());
                let mut ha = Vec::with_capacity(b.inputs.len());
                let skipped: Vec<(SampledSignal, SampledSignal)> = b
                    .inputs
                    .iter()
                    .filter_map(|i| match *i {
                        BlockInput::Skip(r) => Some(split(&values[r.layer][r.block])),
                        BlockInput::Node(_) => None,
                    })
                    .collect();
                let mut sk = skipped.iter();
                for i in &b.inputs {
                    let (x, y) = match *i {
                        BlockInput::Node(k) => &node_out[k],
                        BlockInput::Skip(_) => sk.next().expect("one split per skip"),
                    };
                    fa.push(x);
                    ha.push(y);
                }
                let (u, v) = (apply_block(b.kind, &fa), apply_block(b.kind, &ha));
                vals.push(SampledSignal { grid: g.grid, samples: pack(&u, &v) });
            }
            let mut fs: Vec<Option<Vec<Complex64>>> = vec![None; vals.len()];
            for (bi, b) in layer.blocks.iter().enumerate() {
                if b.emits_output {
                    emit(m, &vals[bi], &mut fs[bi]);
                }
            }
            values.push(vals);
            ffts.push(fs);
        }
        Ok(acc.sqrt())
    }
}

/// One-shot propagation that keeps intermediates.
pub fn propagate(g: &NetworkGraph, f: &SampledSignal) -> Result<Propagation, PropagateError> {
    Propagator::new(g)?.run(f, true)
}
