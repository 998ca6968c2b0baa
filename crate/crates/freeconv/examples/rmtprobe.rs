use freeconv::measure::JacobiMeasure;
use freeconv::oracles::rmt_sample;
use std::time::Instant;

fn main() {
    let sc = JacobiMeasure::semicircle(1.0).unwrap();
    let t0 = Instant::now();
    let s = rmt_sample(&sc, &sc, 500, 5, 42).unwrap();
    println!("n=500 x 5 samples: {:.2?} ({} eigenvalues)", t0.elapsed(), s.eigenvalues().len());
}
