//! Loading a configuration with overrides and running the static checks:
//! dissipativity, the moment restriction 1 <= p < alpha and the noise decay
//! series.
//!
//! ```bash
//! cargo run --example config_validation
//! ```

use slowfast::cli::load_config;

fn main() -> slowfast::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.toml");
    for overrides in [vec![], vec!["problem.b=12"], vec!["rate.p=1.6"], vec!["noise.fast_rho=0"]] {
        let set: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        let cfg = load_config(Some(&path), &set)?;
        let failed: Vec<String> = cfg
            .checks()
            .into_iter()
            .filter(|c| !c.ok)
            .map(|c| format!("{}: {}", c.field, c.detail))
            .collect();
        println!("{overrides:?} -> {:?}", failed);
    }
    Ok(())
}
