use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use sucp_bench::{band_points, mild_config, paper_config};
use sucp_core::dirac::{dirac_residual, opnorm2};
use sucp_core::{ExtReal, FdStencil, Sign, SpinorField};

fn extrange_ops(c: &mut Criterion) {
    let xs: Vec<ExtReal> = (0..256)
        .map(|i| ExtReal::new(if i % 3 == 0 { Sign::Neg } else { Sign::Pos }, -3.0 + i as f64 * 0.02))
        .collect();
    c.bench_function("extrange/add_chain_256", |b| {
        b.iter(|| {
            let mut acc = ExtReal::ZERO;
            for &x in &xs {
                acc = acc + black_box(x);
            }
            acc
        })
    });
    c.bench_function("extrange/mul_chain_256", |b| {
        b.iter(|| {
            let mut acc = ExtReal::ONE;
            for &x in &xs {
                acc = acc * black_box(x);
            }
            acc
        })
    });
}

fn cutoff_eval(c: &mut Criterion) {
    let cfg = paper_config();
    let cut = *cfg.cutoff();
    c.bench_function("cutoff/chi_plateau", |b| b.iter(|| cut.chi(black_box(0.5))));
    let window = cut.plateau(); // inside the lower mollification window
    c.bench_function("cutoff/chi_window", |b| b.iter(|| cut.chi(black_box(window))));
}

fn field_eval(c: &mut Criterion) {
    let cfg = paper_config();
    let pts = band_points(&cfg, 8);
    c.bench_function("field/u_paper_annulus", |b| {
        b.iter(|| {
            for p in &pts {
                black_box(cfg.eval(p));
            }
        })
    });
    c.bench_function("field/opnorm_paper_annulus", |b| {
        b.iter(|| {
            for p in &pts {
                black_box(opnorm2(&cfg.potential(p).unwrap()));
            }
        })
    });
}

fn residuals(c: &mut Criterion) {
    let paper = paper_config();
    let mild = mild_config();
    let st = FdStencil::default();
    let pp = band_points(&paper, 2);
    let mp = band_points(&mild, 2);
    c.bench_function("residual/paper_anchored", |b| {
        b.iter_batched(
            || pp.clone(),
            |pts| {
                for p in &pts {
                    black_box(dirac_residual(&paper, p, st).unwrap());
                }
            },
            BatchSize::SmallInput,
        )
    });
    c.bench_function("residual/mild_direct", |b| {
        b.iter_batched(
            || mp.clone(),
            |pts| {
                for p in &pts {
                    black_box(dirac_residual(&mild, p, st).unwrap());
                }
            },
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, extrange_ops, cutoff_eval, field_eval, residuals);
criterion_main!(benches);
