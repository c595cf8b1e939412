use criterion::{black_box, criterion_group, criterion_main, Criterion};

use grouprho::asymptotics::QuotientSequence;
use grouprho::cayley::{build_ball, free_radial_counts, walk_counts};
use grouprho::presentation::check_small_cancellation;
use grouprho::zdgreen::theta;
use grouprho::{BigRational, Presentation, Ratio, WordProblemStrategy};

fn surface() -> Presentation {
    Presentation::from_strs("a, b, c, d", &["abABcdCD"]).unwrap()
}

fn dehn(c: &mut Criterion) {
    let p = surface();
    let s = WordProblemStrategy::for_presentation(&p).unwrap();
    let w = p.alphabet().parse_word("abABcdCDabcdDCBAcdCDabAB").unwrap();
    c.bench_function("dehn_is_trivial_24", |b| b.iter(|| s.is_trivial(black_box(&w)).unwrap()));
    c.bench_function("small_cancellation_check", |b| {
        b.iter(|| check_small_cancellation(black_box(&p), Ratio::new(1, 6)))
    });
}

fn walks(c: &mut Criterion) {
    let s = WordProblemStrategy::for_presentation(&surface()).unwrap();
    c.bench_function("ball_genus2_r4", |b| b.iter(|| build_ball(&s, black_box(4)).unwrap()));
    let ball = build_ball(&s, 4).unwrap();
    c.bench_function("walk_counts_genus2_r4", |b| b.iter(|| walk_counts(black_box(&ball), 6)));
    c.bench_function("free_radial_1000", |b| b.iter(|| free_radial_counts(2, black_box(1000)).unwrap()));
}

fn sequences(c: &mut Criterion) {
    let p = Presentation::free(2);
    c.bench_function("quotient_sequence_f2", |b| {
        b.iter(|| {
            let mut q = QuotientSequence::new(&p, 3).unwrap();
            q.advance(500);
            q.growth_bound()
        })
    });
}

fn green(c: &mut Criterion) {
    let width = BigRational::new(1.into(), 10_000.into());
    let mut g = c.benchmark_group("green");
    g.sample_size(10);
    g.bench_function("theta_z5_1e-4", |b| b.iter(|| theta(5, black_box(&width)).unwrap()));
    g.finish();
}

criterion_group!(benches, dehn, walks, sequences, green);
criterion_main!(benches);
