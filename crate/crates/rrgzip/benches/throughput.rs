//! Criterion benches: sequential vs rayon build, flat vs compressed
//! neighbor expansion, and raw codec throughput.
//!
//! Run with `cargo bench -p rrgzip`. The build group compares the
//! data-parallel encode phase against the sequential fallback on the same
//! inputs; the expand group measures the decode cost the router pays per
//! neighbor sweep.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use rrgzip::archgen::{generate_rrg, ArchParams};
use rrgzip::codec;
use rrgzip::graphstore::{self, BuildOptions};
use rrgzip::router::{AdjacencyProvider, CompressedProvider, FlatProvider};

fn bench_build(c: &mut Criterion) {
    let opts = BuildOptions::default();
    let fabrics = [
        ArchParams::default(),
        // Larger fabric: enough per-node encode work for the rayon fan-out
        // to pay for itself even on few cores.
        ArchParams {
            grid_w: 32,
            grid_h: 32,
            ..Default::default()
        },
    ];

    let mut group = c.benchmark_group("build");
    group.sample_size(10);
    for params in fabrics {
        let raw = generate_rrg(&params).expect("fabric");
        group.throughput(Throughput::Elements(raw.num_edges()));
        group.bench_function(BenchmarkId::new("sequential", raw.num_edges()), |b| {
            b.iter(|| graphstore::build(&raw, &opts).unwrap())
        });
        #[cfg(feature = "parallel")]
        group.bench_function(BenchmarkId::new("parallel", raw.num_edges()), |b| {
            b.iter(|| graphstore::par_build(&raw, &opts).unwrap())
        });
    }
    group.finish();
}

fn bench_expand(c: &mut Criterion) {
    let raw = generate_rrg(&ArchParams::default()).expect("default fabric");
    let compressed = graphstore::build(&raw, &BuildOptions::default()).unwrap();
    let flat = FlatProvider::new(&raw);
    let packed = CompressedProvider::new(&compressed);

    let mut group = c.benchmark_group("expand_all_nodes");
    group.sample_size(20);
    group.throughput(Throughput::Elements(raw.num_edges()));
    let mut edges = Vec::new();
    let mut switches = Vec::new();
    group.bench_function("flat", |b| {
        b.iter(|| {
            let mut total = 0usize;
            for node in 0..raw.num_nodes() as u32 {
                flat.expand(node, &mut edges, &mut switches);
                total += edges.len();
            }
            total
        })
    });
    group.bench_function("compressed", |b| {
        b.iter(|| {
            let mut total = 0usize;
            for node in 0..raw.num_nodes() as u32 {
                packed.expand(node, &mut edges, &mut switches);
                total += edges.len();
            }
            total
        })
    });
    group.finish();
}

fn bench_codec(c: &mut Criterion) {
    // A locality-shaped list: clustered targets with a few long jumps.
    let ids: Vec<u64> = (0..64u64)
        .map(|i| 10_000 + i * 3 + (i / 16) * 900)
        .collect();
    let switches = vec![3u16; ids.len()];
    let entry = codec::encode_adjacency(&ids, &switches).unwrap();

    let mut group = c.benchmark_group("codec");
    group.throughput(Throughput::Elements(ids.len() as u64));
    group.bench_function("encode_adjacency", |b| {
        b.iter(|| codec::encode_adjacency(&ids, &switches).unwrap())
    });
    let mut out_ids = Vec::new();
    let mut out_switches = Vec::new();
    group.bench_function("decode_adjacency", |b| {
        b.iter(|| {
            codec::decode_adjacency(&entry, &mut out_ids, &mut out_switches).unwrap();
            out_ids.len()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_build, bench_expand, bench_codec);
criterion_main!(benches);
