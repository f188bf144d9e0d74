use std::sync::Arc;

use scatlip::bounds::*;
use scatlip::builtin::{bump_network, haar_network, published};
use scatlip::signal::Grid;

#[test]
fn haar_estimators_match_published_values() {
    let g = haar_network(Grid::default()).unwrap();
    let bessel = lipschitz_bessel_product(&g, 4).unwrap();
    assert!((bessel.value - published::HAAR_BESSEL).abs() < 1e-3, "{}", bessel.value);
    for e in &bessel.per_layer {
        assert!((e.b_tilde - 1.0).abs() < 1e-3, "{e:?}");
    }
    let bp = lipschitz_backprop_l1(&g).unwrap();
    assert!((bp.value - published::haar_backprop()).abs() < 1e-3, "{}", bp.value);
    assert_eq!(bp.sites.len(), published::HAAR_OUTPUTS);
    let exact = exact_output_lower_bound(&g).unwrap();
    assert!((exact - published::HAAR_EXACT).abs() < 1e-3, "{exact}");
}

#[test]
fn haar_monte_carlo_short_run_is_a_valid_witness() {
    let g = haar_network(Grid::default()).unwrap();
    let r = lipschitz_monte_carlo(&g, &McConfig { iterations: 300, seed: 1, ..McConfig::default() }).unwrap();
    assert!(r.value > 0.5 && r.value <= 1.0 + 1e-3, "{}", r.value);
}

#[test]
fn bump_bessel_ledger_and_value() {
    let g = bump_network(Grid::default()).unwrap();
    let r = lipschitz_bessel_product(&g, 4).unwrap();
    assert!((r.value - published::bump_gamma2()).abs() < 1e-3, "{}", r.value);
    for (e, want) in r.per_layer.iter().zip(published::BUMP_B_TILDE) {
        assert!((e.b_tilde - want).abs() < 1e-3, "{e:?}");
    }
    let exact = exact_output_lower_bound(&g).unwrap();
    assert!((exact - 1.0).abs() < 1e-3, "{exact}");
}

#[test]
fn bump_backprop_gamma_within_two_percent() {
    let g = bump_network(Grid::default()).unwrap();
    let r = lipschitz_backprop_l1(&g).unwrap();
    let rel = (r.value - published::BUMP_GAMMA1).abs() / published::BUMP_GAMMA1;
    assert!(rel < 0.02, "{} ({rel})", r.value);
}

/// Substitutes the printed L¹ table into the network and compares against
/// the per-site products written out by hand.
#[test]
fn bump_backprop_with_printed_norms_matches_hand_expansion() {
    let mut g = bump_network(Grid::default()).unwrap();
    for (name, l1) in published::BUMP_L1 {
        let mut f = (*g.filters[name]).clone();
        f.l1 = l1;
        g.filters.insert(name.to_string(), Arc::new(f));
    }
    let n = |s: &str| published::BUMP_L1.iter().find(|x| x.0 == s).unwrap().1;
    let s1 = n("g1_2") + n("g1_3") + n("g1_4");
    let want = [
        n("phi1"),
        n("g1_1") * n("phi2"),
        s1 * n("phi2"),
        n("g1_1") * n("g2_1") * n("phi3"),
        (n("g1_1") * (n("g2_2") + n("g2_3")) + s1 * (n("g2_4") + n("g2_5"))) * n("phi3"),
    ];
    let r = lipschitz_backprop_l1(&g).unwrap();
    for (site, w) in r.sites.iter().zip(want) {
        assert!((site.coefficient - w).abs() < 1e-9 * w, "{site:?} vs {w}");
    }
    let sq: f64 = want.iter().map(|c| c * c).sum();
    assert!((r.value.powi(2) - sq).abs() < 1e-9 * sq);
    // the printed norms reproduce the printed Γ₁ to within 1%
    assert!((sq.sqrt() - published::BUMP_GAMMA1).abs() / published::BUMP_GAMMA1 < 0.01, "{}", sq.sqrt());
}
