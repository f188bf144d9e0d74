mod common;

use common::{random_signal, rng};
use proptest::prelude::*;
use scatlip::bounds::{lipschitz_monte_carlo, McConfig};
use scatlip::builtin::{bump_network, haar_network};
use scatlip::network::{BlockInput, BlockRef, NetworkGraph};
use scatlip::propagate::{feature_norm, Propagator};
use scatlip::signal::Grid;

/// Reorders the nodes and blocks of the first layer and rewires consumers.
fn permute_first_layer(g: &NetworkGraph, node_perm: &[usize], block_perm: &[usize]) -> NetworkGraph {
    let mut out = g.clone();
    let inv = |p: &[usize]| {
        let mut v = vec![0; p.len()];
        for (new, &old) in p.iter().enumerate() {
            v[old] = new;
        }
        v
    };
    let (inv_n, inv_b) = (inv(node_perm), inv(block_perm));
    let old = &g.layers[0];
    out.layers[0].nodes = node_perm.iter().map(|&k| old.nodes[k].clone()).collect();
    out.layers[0].blocks = block_perm
        .iter()
        .map(|&k| {
            let mut b = old.blocks[k].clone();
            for i in &mut b.inputs {
                if let BlockInput::Node(n) = i {
                    *n = inv_n[*n];
                }
            }
            b
        })
        .collect();
    if out.layers.len() > 1 {
        for n in &mut out.layers[1].nodes {
            n.source = inv_b[n.source];
        }
    }
    for layer in &mut out.layers {
        for b in &mut layer.blocks {
            for i in &mut b.inputs {
                if let BlockInput::Skip(r) = i {
                    if r.layer == 1 {
                        *r = BlockRef { layer: 1, block: inv_b[r.block] };
                    }
                }
            }
        }
    }
    out
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(&mut rng(seed));
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn permuting_a_layer_keeps_feature_norms(seed in any::<u64>(), which in 0usize..2) {
        let g = if which == 0 { haar_network(Grid::default()) } else { bump_network(Grid::default()) }.unwrap();
        let (nn, nb) = (g.layers[0].nodes.len(), g.layers[0].blocks.len());
        let p = permute_first_layer(&g, &shuffled(nn, seed), &shuffled(nb, seed ^ 1));
        let mut r = rng(seed);
        let f = random_signal(&mut r, g.grid, 1.0);
        let h = random_signal(&mut r, g.grid, 1.0);
        let (a, b) = (Propagator::new(&g).unwrap(), Propagator::new(&p).unwrap());
        let fa = a.run(&f, false).unwrap().features;
        let fb = b.run(&f, false).unwrap().features;
        prop_assert_eq!(fa.len(), fb.len());
        prop_assert!((fa.norm() - fb.norm()).abs() <= 1e-12 * fa.norm());
        let (da, db) = (a.feature_distance(&f, &h).unwrap(), b.feature_distance(&f, &h).unwrap());
        prop_assert!((da - db).abs() <= 1e-12 * da.max(1e-300));
        let ha = a.run(&h, false).unwrap().features;
        prop_assert!((feature_norm(&fa, Some(&ha)).unwrap() - da).abs() <= 1e-9 * da);
    }

    #[test]
    fn monte_carlo_depends_only_on_seed(seed in any::<u64>()) {
        let g = bump_network(Grid::default()).unwrap();
        let cfg = McConfig { iterations: 8, seed, ..McConfig::default() };
        let a = lipschitz_monte_carlo(&g, &cfg).unwrap();
        let b = lipschitz_monte_carlo(&g, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        // a longer run only adds iterations, so it never lowers the maximum
        let c = lipschitz_monte_carlo(&g, &McConfig { iterations: 16, ..cfg }).unwrap();
        prop_assert!(c.value >= a.value);
    }
}
