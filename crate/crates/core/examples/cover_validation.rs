// Empirical separability of random points against Cover's count
// `C(N, d) / 2^N`.

use manifold_capacity::capacity::{cover_probability, ProjectionBasis};
use manifold_capacity::synth::generate_point_classes;
use manifold_capacity::Result;

pub fn run() -> Result<()> {
    println!(" N  d   f_hat   cover");
    for n in [3usize, 4, 5, 8, 12] {
        let basis = ProjectionBasis::new(&generate_point_classes(n, 200, n as u64)?);
        for d in 1..=n.min(6) {
            let e = basis.estimate_f(d, 1000, 0)?;
            println!(
                "{n:>2} {d:>2}  {:.4}  {:.4}",
                e.f_hat,
                cover_probability(n as u64, d as u64)
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
