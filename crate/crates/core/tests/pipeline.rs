use vpa_core::{
    fixtures, rabier_value, solve_front, tangency_membership, trace_tangency, Config, Problem, ReferencePoint,
};

#[test]
fn archive_points_are_feasible_and_stationary() {
    let cfg = Config::default();
    for prob in [fixtures::motzkin(), fixtures::linear_segment()] {
        let archive = solve_front(&prob, &ReferencePoint::unbounded(2), 5, 4, 3, &cfg).unwrap();
        assert!(!archive.is_empty());
        for e in &archive.entries {
            let rep = prob.check_feasible(&e.x, cfg.tolerances.feasibility, cfg.tolerances.activity).unwrap();
            assert!(rep.feasible, "{:?}", e);
            assert!(rabier_value(&prob, &e.x, &cfg).unwrap().value <= cfg.tolerances.stationarity);
        }
    }
}

#[test]
fn single_objective_archive_is_one_minimizer() {
    let cfg = Config::default();
    let prob = Problem::parse(2, &["(x1 - 1)^2 + (x2 + 2)^2 + 3"], &[], &[]).unwrap();
    let archive = solve_front(&prob, &ReferencePoint::unbounded(1), 5, 4, 0, &cfg).unwrap();
    assert_eq!(archive.len(), 1);
    let e = &archive.entries[0];
    assert!((e.x[0] - 1.0).abs() < 1e-6 && (e.x[1] + 2.0).abs() < 1e-6);
    assert!((e.f[0] - 3.0).abs() < 1e-9);
}

#[test]
fn sphere_slice_points_lie_in_tangency_variety() {
    let cfg = Config::default();
    let radii: Vec<f64> = (0..6).map(|k| 10.0 * 4f64.powi(k)).collect();
    let cases = [
        (fixtures::non_closed_section(), ReferencePoint::new(vec![-1.0, 2.0]).unwrap()),
        (fixtures::motzkin(), ReferencePoint::unbounded(2)),
        (fixtures::degenerate_line(), ReferencePoint::unbounded(2)),
    ];
    for (prob, ybar) in cases {
        let traces = trace_tangency(&prob, &ybar, &radii, 11, &cfg).unwrap();
        let mut count = 0;
        for rec in traces.iter().flat_map(|t| &t.records) {
            let t = tangency_membership(&prob, &rec.point, &cfg).unwrap();
            assert!(t.member, "radius {} residual {:e} threshold {:e}", rec.radius, t.residual, t.threshold);
            assert_eq!(rec.in_tangency, t.member);
            count += 1;
        }
        assert!(count > 0);
    }
}
