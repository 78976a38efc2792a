//! The walkthrough from the repository README: run a warped impulse
//! response and summarize the dispersion curve along the mesh axis.

use warpmesh::analysis::warped_dispersion_curve;
use warpmesh::lattice::build_square_lattice;
use warpmesh::sim::{run_impulse_response, Scheme};
use warpmesh::warp::AllpassSpec;

fn main() -> Result<(), warpmesh::Error> {
    let lattice = build_square_lattice(24)?;
    let center = lattice.center();
    let probe =
        run_impulse_response(&lattice, Scheme::Wtwm, Some(-0.45), 4096, center, center)?;
    let peak = probe.samples.iter().fold(0.0f64, |m, &s| m.max(s.abs()));
    println!("recorded {} samples, peak {peak:.3}", probe.samples.len());

    let spec = AllpassSpec::new(-0.45)?;
    let curve = warped_dispersion_curve(spec, 0.0, 512)?;
    let within = curve
        .points
        .iter()
        .take_while(|&&(_, ratio)| (ratio - 1.0).abs() <= 0.02)
        .count();
    let fraction = 100.0 * within as f64 / curve.points.len() as f64;
    println!("speed within 2% of dc up to {fraction:.1}% of the band along +x");
    Ok(())
}
