use criterion::{black_box, criterion_group, criterion_main, Criterion};
use ncsim_bench::linear_matrix;
use ncsim_core::bounds::expected_stopping_bound;
use ncsim_core::coding::{InformationPacket, SubspaceBuffer};
use ncsim_core::engine::{run_trial_baseline, run_trial_nc, Protocol, SimConfig};
use ncsim_core::galois::FieldContext;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn buffer_fill(c: &mut Criterion) {
    let ctx = FieldContext::new(8).unwrap();
    let n = 30;
    let mut rng = StdRng::seed_from_u64(2);
    // a full-rank source emitting random combinations
    let packets: Vec<_> = (0..n)
        .map(|u| InformationPacket::new(u, (0..4).map(|_| ctx.sample(&mut rng)).collect()).unwrap())
        .collect();
    let mut source = SubspaceBuffer::new(&packets[0], n).unwrap();
    for p in &packets[1..] {
        let mut coefficients = vec![Default::default(); n];
        coefficients[p.origin] = ncsim_core::galois::FieldElement::ONE;
        source
            .insert(
                &ctx,
                &ncsim_core::coding::CodedMessage {
                    coefficients,
                    payload: p.symbols.clone(),
                },
            )
            .unwrap();
    }
    let messages: Vec<_> = (0..2 * n).map(|_| source.encode(&ctx, &mut rng).unwrap()).collect();
    c.bench_function("buffer_fill_n30", |b| {
        b.iter(|| {
            let mut buffer = SubspaceBuffer::empty(n, 4).unwrap();
            for msg in &messages {
                black_box(buffer.insert(&ctx, black_box(msg)).unwrap());
            }
            buffer.dim()
        })
    });
    c.bench_function("encode_n30", |b| {
        b.iter(|| black_box(source.encode(&ctx, &mut rng).unwrap()))
    });
}

fn trials(c: &mut Criterion) {
    let matrix = linear_matrix(30);
    let config = SimConfig {
        trials: 1,
        seed: 3,
        ..SimConfig::default()
    };
    c.bench_function("nc_trial_linear_n30", |b| {
        let mut trial = 0u64;
        b.iter(|| {
            trial += 1;
            black_box(run_trial_nc(&matrix, &config, trial).unwrap())
        })
    });
    let baseline = SimConfig {
        protocol: Protocol::RandomSelection,
        ..config.clone()
    };
    c.bench_function("baseline_trial_linear_n30", |b| {
        let mut trial = 0u64;
        b.iter(|| {
            trial += 1;
            black_box(run_trial_baseline(&matrix, &baseline, trial).unwrap())
        })
    });
    c.bench_function("stopping_bound_n30", |b| {
        b.iter(|| black_box(expected_stopping_bound(&matrix).unwrap()))
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = buffer_fill, trials
}
criterion_main!(benches);
