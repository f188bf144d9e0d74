//! The two reference networks, built in code so their definitions cannot
//! drift from the published ones, plus the published reference values.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::filters::{make_bump_filterbank, make_haar_filterbank, Filter, FilterError};
use crate::network::{Block, BlockInput, BlockKind, BlockRef, FilterNode, Layer, NetworkGraph, Nonlinearity};
use crate::signal::Grid;

pub const NAMES: [&str; 2] = ["haar", "bump"];

/// Published reference numbers for both examples.
pub mod published {
    /// Outputs of the three-level Haar tree: 1 + 3 + 9 + 27.
    pub const HAAR_OUTPUTS: usize = 40;
    pub const HAAR_BESSEL: f64 = 1.0;
    pub const HAAR_EXACT: f64 = 1.0;
    /// Square root of the number of unit-norm outputs.
    pub fn haar_backprop() -> f64 {
        (HAAR_OUTPUTS as f64).sqrt()
    }

    pub const BUMP_L1: [(&str, f64); 12] = [
        ("phi1", 1.8265),
        ("g1_1", 2.0781),
        ("g1_2", 2.0808),
        ("g1_3", 2.0518),
        ("g1_4", 2.0720),
        ("phi2", 2.0572),
        ("g2_1", 2.0784),
        ("g2_2", 2.0734),
        ("g2_3", 2.0889),
        ("g2_4", 2.2390),
        ("g2_5", 2.3175),
        ("phi3", 2.6378),
    ];
    /// The squared backprop constant as printed.
    pub const BUMP_BACKPROP_SQUARED: f64 = 966.26;
    pub const BUMP_GAMMA1: f64 = 98.3;
    pub const BUMP_GAMMA3: f64 = 1.1937;
    pub const BUMP_B_TILDE: [f64; 4] = [1.0, 1.0, 2.0, 1.0];
    pub fn bump_gamma2() -> f64 {
        2f64.sqrt()
    }
}

pub fn builtin(name: &str, grid: Grid) -> Option<Result<NetworkGraph, FilterError>> {
    match name {
        "haar" => Some(haar_network(grid)),
        "bump" => Some(bump_network(grid)),
        _ => None,
    }
}

fn modulus_block(id: String, node: usize) -> Block {
    Block {
        id,
        kind: BlockKind::Nonlin(Nonlinearity::Modulus),
        inputs: vec![BlockInput::Node(node)],
        emits_output: true,
    }
}

/// Three-level scattering tree with wavelets `ψ_{2^j}`, `j ∈ {0, −1, −2}`,
/// modulus nonlinearities and the atom `φ_{2^{−3}}` on every layer.
pub fn haar_network(grid: Grid) -> Result<NetworkGraph, FilterError> {
    let js = [0, -1, -2];
    let (wavelets, atom) = make_haar_filterbank(grid, 3, &js)?;
    let mut filters: BTreeMap<String, Arc<Filter>> = BTreeMap::new();
    let names: Vec<String> = wavelets.iter().map(|f| f.name.clone()).collect();
    for f in wavelets {
        filters.insert(f.name.clone(), Arc::new(f));
    }
    let atom_name = atom.name.clone();
    filters.insert(atom_name.clone(), Arc::new(atom));

    let mut layers = Vec::new();
    // path label of each block in the previous layer
    let mut parents: Vec<Vec<i32>> = vec![vec![]];
    for _ in 0..3 {
        let mut layer = Layer::default();
        let mut next = Vec::new();
        for (src, path) in parents.iter().enumerate() {
            for (name, &j) in names.iter().zip(&js) {
                let mut q = path.clone();
                q.push(j);
                let label = q.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(",");
                let node = layer.nodes.len();
                layer.nodes.push(FilterNode {
                    id: format!("{name}[{label}]"),
                    filter: name.clone(),
                    source: src,
                });
                layer.blocks.push(modulus_block(format!("U[{label}]"), node));
                next.push(q);
            }
        }
        layers.push(layer);
        parents = next;
    }
    Ok(NetworkGraph {
        grid,
        radius: 1.0,
        filters,
        layers,
        output_atoms: vec![atom_name; 4],
    })
}

/// The three-layer aggregation network with smoothed-indicator filters: a
/// 2-norm merge in each of the first two layers and a product of two
/// second-layer branches in the third.
pub fn bump_network(grid: Grid) -> Result<NetworkGraph, FilterError> {
    let filters: BTreeMap<String, Arc<Filter>> = make_bump_filterbank(grid)?
        .into_iter()
        .map(|f| (f.name.clone(), Arc::new(f)))
        .collect();
    let node = |f: &str, source: usize| FilterNode {
        id: f.to_string(),
        filter: f.to_string(),
        source,
    };
    let pnorm = |id: &str, inputs: Vec<usize>, emits: bool| Block {
        id: id.into(),
        kind: BlockKind::PNorm { p: 2.0 },
        inputs: inputs.into_iter().map(BlockInput::Node).collect(),
        emits_output: emits,
    };
    let layer1 = Layer {
        nodes: vec![node("g1_1", 0), node("g1_2", 0), node("g1_3", 0), node("g1_4", 0)],
        blocks: vec![modulus_block("K1_1".into(), 0), pnorm("K1_2", vec![1, 2, 3], true)],
    };
    let layer2 = Layer {
        nodes: vec![
            node("g2_1", 0),
            node("g2_2", 0),
            node("g2_3", 0),
            node("g2_4", 1),
            node("g2_5", 1),
        ],
        blocks: vec![
            modulus_block("K2_1".into(), 0),
            pnorm("K2_2", vec![1, 2, 3], false),
            Block {
                id: "K2_3".into(),
                kind: BlockKind::Nonlin(Nonlinearity::Modulus),
                inputs: vec![BlockInput::Node(4)],
                emits_output: false,
            },
        ],
    };
    let layer3 = Layer {
        nodes: vec![],
        blocks: vec![Block {
            id: "J3_1".into(),
            kind: BlockKind::Multiply(Nonlinearity::Modulus),
            inputs: vec![
                BlockInput::Skip(BlockRef { layer: 2, block: 1 }),
                BlockInput::Skip(BlockRef { layer: 2, block: 2 }),
            ],
            emits_output: true,
        }],
    };
    Ok(NetworkGraph {
        grid,
        radius: 1.0,
        filters,
        layers: vec![layer1, layer2, layer3],
        output_atoms: ["phi1", "phi2", "phi3", "phi3"].map(String::from).to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{enumerate_paths, network_to_json, normalize_delta, parse_network, validate_network};

    #[test]
    fn both_networks_validate_cleanly_except_known_warnings() {
        let h = haar_network(Grid::default()).unwrap();
        assert!(validate_network(&h).is_empty());
        let b = bump_network(Grid::default()).unwrap();
        assert!(validate_network(&b).is_empty());
        assert!(validate_network(&normalize_delta(&b)).is_empty());
    }

    #[test]
    fn haar_tree_has_forty_paths_and_outputs() {
        let h = haar_network(Grid::default()).unwrap();
        assert_eq!(enumerate_paths(&h).len(), 40);
        assert_eq!(h.output_sites().len(), 40);
    }

    #[test]
    fn bump_topology() {
        let b = bump_network(Grid::default()).unwrap();
        assert_eq!(b.depth(), 3);
        let nodes: usize = b.layers.iter().map(|l| l.nodes.len()).sum();
        assert_eq!(nodes, 9);
        assert_eq!(b.output_atoms.len(), 4);
        let labels: Vec<String> = b.output_sites().into_iter().map(|r| b.block_label(r)).collect();
        assert_eq!(labels, ["root", "K1_1", "K1_2", "K2_1", "J3_1"]);
        let pnorm_degrees: Vec<usize> = b
            .layers
            .iter()
            .flat_map(|l| &l.blocks)
            .filter(|bl| matches!(bl.kind, BlockKind::PNorm { .. }))
            .map(|bl| bl.inputs.len())
            .collect();
        assert_eq!(pnorm_degrees, [3, 3]);
        // normalization inserts one δ per multiplied branch
        let n = normalize_delta(&b);
        assert_eq!(n.layers[2].nodes.len(), 2);
        assert!(n.layers[2].nodes.iter().all(|x| x.filter == "delta"));
    }

    #[test]
    fn builtins_survive_json_round_trip() {
        for name in NAMES {
            let g = builtin(name, Grid::default()).unwrap().unwrap();
            let back = parse_network(&network_to_json(&g).to_string()).unwrap();
            assert_eq!(back, g, "{name}");
        }
        assert!(builtin("nope", Grid::default()).is_none());
    }
}
