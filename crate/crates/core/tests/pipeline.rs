use opa_lab::dynamics::{
    export_cobweb, iterate_orbit, Branch, BranchPolicy, OrbitStatus, PhiPsiParams,
};
use opa_lab::records::{extremal_csv, from_json, to_json};
use opa_lab::{
    remove_root_opa, solve_linear_opa, solve_opa, solve_tdp_chain, ExtremalConfig, ExtremalRecord,
    PNorm, RealPoly, SolverConfig, TauRecord,
};

fn pn(p: f64) -> PNorm {
    PNorm::new(p).unwrap()
}

#[test]
fn table_row_deflation() {
    // d = 2, p = 4 row: its linear approximant has its zero at 1/t
    let f = RealPoly::from_slice(&[1.0, 3.64836, 1.92310]).unwrap();
    let cfg = SolverConfig::default();
    let lin = solve_linear_opa(&f, pn(4.0), &cfg).unwrap();
    let z0 = lin.zero.unwrap();
    assert!((z0 - 1.09638).abs() < 1e-4);
    let q = solve_opa(&f, pn(4.0), 1, &cfg).unwrap().q;
    let g = remove_root_opa(&f, pn(4.0), 1, z0, &cfg).unwrap();
    assert_eq!(g.q.degree(), 0);
    let back = g.q.times_linear(z0);
    for (a, b) in back.coeffs().iter().zip(q.coeffs()) {
        assert!((a - b).abs() <= 1e-8 * q.coeffs()[0].abs());
    }
}

#[test]
fn solver_records_round_trip() {
    let chain = solve_tdp_chain(pn(6.0), 5, &ExtremalConfig::double()).unwrap();
    let recs: Vec<ExtremalRecord> = chain.iter().map(ExtremalRecord::from).collect();
    for r in &recs {
        let s = to_json(r).unwrap();
        let back: ExtremalRecord = from_json(&s).unwrap();
        assert_eq!(&back, r);
        assert_eq!(to_json(&back).unwrap(), s);
    }
    let csv = extremal_csv(&recs).unwrap();
    assert_eq!(csv.lines().count(), recs.len() + 1);
    let tau = TauRecord::from(&opa_lab::solve_tau(pn(6.0)).unwrap());
    let back: TauRecord = from_json(&to_json(&tau).unwrap()).unwrap();
    assert_eq!(back.tau.to_bits(), tau.tau.to_bits());
}

#[test]
fn extremal_orbit_cobweb() {
    let chain = solve_tdp_chain(pn(4.0), 4, &ExtremalConfig::double()).unwrap();
    let s = &chain[2];
    let params = PhiPsiParams::new(pn(4.0), s.t).unwrap();
    let tr = iterate_orbit(&params, 4.0 * s.t, &BranchPolicy::Fixed(Branch::Left), 10).unwrap();
    assert_eq!(tr.status, OrbitStatus::TerminatedAtExit);
    assert_eq!(tr.steps(), 4);
    let cw = export_cobweb(Some(&tr), &params);
    let segs = cw.segments_csv().unwrap();
    assert!(segs.starts_with("x0,y0,x1,y1,kind\n"));
    assert_eq!(segs.lines().count(), 1 + cw.segments.len());
    // the exhaustive search finds the same orbit
    let ex = iterate_orbit(&params, 4.0 * s.t, &BranchPolicy::Exhaustive, 10).unwrap();
    assert_eq!(ex.status, OrbitStatus::TerminatedAtExit);
    assert!(ex.branches().iter().all(|&b| b == Branch::Left));
}
