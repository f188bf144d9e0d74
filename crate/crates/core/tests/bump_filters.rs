use scatlip::builtin::published::BUMP_L1;
use scatlip::filters::{make_bump_filterbank, Filter, FilterSpec, BumpTerm};
use scatlip::signal::Grid;

#[test]
fn l1_norms_match_published_table() {
    let bank = make_bump_filterbank(Grid::default()).unwrap();
    for (name, want) in BUMP_L1 {
        let f = bank.iter().find(|f| f.name == name).unwrap();
        let rel = (f.l1 - want) / want;
        println!("{name}: {:.4} vs {want} ({:+.3}%)", f.l1, 100.0 * rel);
        assert!(rel.abs() < 0.01, "{name}: {} vs {want}", f.l1);
    }
}

#[test]
fn lowpass_one_realized_by_inverse_transform() {
    let f = Filter::new("phi1", FilterSpec::bump(BumpTerm::lowpass(1.0)), Grid::default()).unwrap();
    assert!((f.l1 - 1.8265).abs() / 1.8265 < 0.01);
    let g = Filter::new("g2_5", FilterSpec::bump(BumpTerm::bandpass(6.0, 8.0)), Grid::default()).unwrap();
    assert!((g.l1 - 2.3175).abs() / 2.3175 < 0.01);
}
