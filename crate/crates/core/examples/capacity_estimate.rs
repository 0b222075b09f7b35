// Critical dimension and capacity for point classes and for Gaussian
// manifolds of growing radius.

use manifold_capacity::capacity::{manifold_capacity, CapacityConfig};
use manifold_capacity::synth::{generate_gaussian_manifolds, generate_point_classes, SynthSpec};
use manifold_capacity::Result;

pub fn run() -> Result<()> {
    let config = CapacityConfig::default();

    // Single points: the transition sits at half the number of classes.
    let est = manifold_capacity(&generate_point_classes(40, 120, 1)?, &config)?;
    println!(
        "40 point classes: D* = {:.2}, alpha = {:.3}",
        est.d_star, est.alpha
    );
    for e in &est.curve.entries {
        println!(
            "  d = {:>3}  F = {:.3} ± {:.3}",
            e.d_proj,
            e.f_hat,
            e.std_error()
        );
    }

    // Larger manifolds need more dimensions, so capacity falls.
    println!("\nradius  D*      alpha   status");
    for radius in [0.1, 0.5, 1.0, 2.0] {
        let spec = SynthSpec {
            n_classes: 10,
            points_per_class: 20,
            ambient_dim: 100,
            intrinsic_dim: 3,
            radius_scale: radius,
            centroid_scale: 1.0,
            seed: 2,
            ..SynthSpec::default()
        };
        let est = manifold_capacity(&generate_gaussian_manifolds(&spec)?.set, &config)?;
        println!(
            "{radius:>6}  {:>6.2}  {:>6.3}  {}",
            est.d_star,
            est.alpha,
            est.status.as_str()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
