use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use difflog::datalog::{Database, RelationKind, Schema, SymbolTable, Tuple};
use difflog::rulegen::{generate, GenConfig};
use difflog::viterbi::{GroundProgram, WeightVector};
use difflog::Exec;

/// A random graph with `n` nodes and `3n` edges, and every candidate rule
/// over `edge`/`path` up to body length 2 with one edit.
fn workload(n: usize) -> (difflog::datalog::RuleSet, Database) {
    let mut schema = Schema::new();
    let edge = schema.declare("edge", 2, RelationKind::Input).unwrap();
    schema.declare("path", 2, RelationKind::Output).unwrap();
    let mut symbols = SymbolTable::new();
    let nodes: Vec<_> = (0..n).map(|i| symbols.intern(&format!("n{i}"))).collect();
    let mut db = Database::new();
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    for _ in 0..3 * n {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let a = (state >> 33) as usize % n;
        let b = (state >> 17) as usize % n;
        db.insert(Tuple::new(edge, vec![nodes[a], nodes[b]]));
    }
    let config = GenConfig {
        max_body_len: 2,
        k: 1,
        ..GenConfig::default()
    };
    (generate(&schema, &config).unwrap(), db)
}

fn bench_evaluate(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate");
    group.sample_size(10);
    for n in [20, 40] {
        let (rules, input) = workload(n);
        let program = Arc::new(GroundProgram::build(&rules, &input, Exec::Parallel));
        let w = WeightVector::uniform(rules.len(), 0.5);
        for (name, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| black_box(program.evaluate(&w, exec)))
            });
        }
    }
    group.finish();
}

fn bench_ground(c: &mut Criterion) {
    let mut group = c.benchmark_group("ground");
    group.sample_size(10);
    let (rules, input) = workload(40);
    for (name, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
        group.bench_function(name, |b| {
            b.iter(|| black_box(GroundProgram::build(&rules, &input, exec)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_evaluate, bench_ground);
criterion_main!(benches);
