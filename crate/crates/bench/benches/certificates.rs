use criterion::{black_box, criterion_group, criterion_main, Criterion};
use vpa_core::{fixtures, nondominated_filter, rabier_value, tangency_membership, Config, DominanceMode, Polynomial};

fn pointwise(c: &mut Criterion) {
    let cfg = Config::default();
    let line = fixtures::degenerate_line();
    let x = [0.0, 0.0, 100.0];
    c.bench_function("rabier_degenerate_line", |b| b.iter(|| rabier_value(&line, black_box(&x), &cfg).unwrap()));
    c.bench_function("tangency_degenerate_line", |b| {
        b.iter(|| tangency_membership(&line, black_box(&x), &cfg).unwrap())
    });
    let sec = fixtures::non_closed_section();
    let y = [1e3, 1e-3, -1.0];
    c.bench_function("rabier_non_closed_section", |b| b.iter(|| rabier_value(&sec, black_box(&y), &cfg).unwrap()));
}

fn polynomials(c: &mut Criterion) {
    let p = Polynomial::parse("(x1 + x2 - x3)^6 + x1*x2*x3", 3).unwrap();
    c.bench_function("gradient_degree6", |b| b.iter(|| black_box(&p).gradient()));
    let pt = [0.3, -1.2, 2.0];
    c.bench_function("evaluate_degree6", |b| b.iter(|| p.evaluate(black_box(&pt)).unwrap()));
}

fn filtering(c: &mut Criterion) {
    let values: Vec<Vec<f64>> = (0..500)
        .map(|i| {
            let t = i as f64 / 500.0;
            vec![t, (1.0 - t) * (1.0 - t), (7.0 * t).sin()]
        })
        .collect();
    c.bench_function("filter_500x3", |b| b.iter(|| nondominated_filter(black_box(&values), DominanceMode::Pareto)));
}

criterion_group!(benches, pointwise, polynomials, filtering);
criterion_main!(benches);
