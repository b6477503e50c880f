use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hodge_vhs::cone::{self, PhiNorm};
use hodge_vhs::grid::GridSpec;
use hodge_vhs::locus;
use hodge_vhs::par;
use hodge_vhs::torus::{self, SubtorusModel, TorusFamily, TorusSpec};

fn stability(c: &mut Criterion) {
    let tm = torus::build_torus_model(&TorusSpec::square(2, 2)).unwrap();
    let phi = TorusFamily::full(2).to_beltrami(4).unwrap();
    let grid = GridSpec::real(0.4, 5, vec![]);
    let scan = || cone::stability_radii(tm.fm(), tm.ab(), &phi, &grid, PhiNorm::TorusMatrix(2)).unwrap();
    let mut g = c.benchmark_group("stability_radii");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("parallel", 625), |b| b.iter(scan));
    g.bench_function(BenchmarkId::new("sequential", 625), |b| b.iter(|| par::sequential(scan)));
    g.finish();
}

fn vhc(c: &mut Criterion) {
    let tm = torus::build_torus_model(&TorusSpec::square(3, 2)).unwrap();
    let fam = TorusFamily::full(3);
    let pts = GridSpec::real(0.2, 2, vec![]).points(9).unwrap();
    let z = SubtorusModel { coords: vec![0] };
    let scan = || locus::vhc_check(&tm, &z, &fam, &pts, locus::TOL_LHS, locus::TOL_RHS).unwrap();
    let mut g = c.benchmark_group("vhc_check");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("parallel", pts.len()), |b| b.iter(scan));
    g.bench_function(BenchmarkId::new("sequential", pts.len()), |b| b.iter(|| par::sequential(scan)));
    g.finish();
}

criterion_group!(benches, stability, vhc);
criterion_main!(benches);
