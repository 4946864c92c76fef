//! Dirichlet Laplacian eigenbasis: eigenvalues, heat semigroup, Galerkin
//! projection and the sine collocation grid.
//!
//! ```bash
//! cargo run --example spectral_basis
//! ```

use std::sync::Arc;

use slowfast::spectral::{SineGrid, SpectralField, SpectrumSpec};

fn main() -> slowfast::Result<()> {
    let spectrum = Arc::new(SpectrumSpec::dirichlet_laplacian_1d(8)?);
    println!("lambda_k = pi^2 k^2: {:?}", &spectrum.eigenvalues()[..3]);

    let f = SpectralField::new(spectrum.clone(), (1..=8).map(|k| 1.0 / k as f64).collect())?;
    for t in [0.0, 0.01, 0.1] {
        let g = f.semigroup_apply(t)?;
        println!("t = {t:<5} |e^(tA) f| = {:.6}  |.|_1 = {:.6}", g.norm(), g.hs_norm(1.0));
    }
    for m in [1, 2, 4, 8] {
        let err = f.sub(&f.project(m)?.embed(spectrum.clone())?)?.norm();
        println!("projection onto {m} modes leaves {err:.6}");
    }

    let grid = SineGrid::for_modes(8)?;
    let values = grid.to_grid(&f)?;
    let back = grid.from_grid(&values, spectrum)?;
    let round_trip = f.sub(&back)?.norm();
    println!("{} collocation points, round-trip error {round_trip:.2e}", grid.n_points());
    Ok(())
}
