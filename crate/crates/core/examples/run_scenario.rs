//! Build a scenario in code, run it into a temporary directory and list the manifest.

use ekfluid::config::{parse_config, ScenarioConfig, ScenarioKind};
use ekfluid::runner::run;

fn main() -> ekfluid::Result<()> {
    let mut cfg = ScenarioConfig::new(ScenarioKind::LowMach);
    cfg.seed = 1;
    println!("{}", cfg.resolved().to_toml()?);
    let root = std::env::temp_dir().join("ekfluid-example");
    let outcome = run(&cfg, Some(&root))?;
    println!("{}", outcome.summary);
    for f in &outcome.manifest.files {
        println!("{:<20} {:>8} {}", f.path, f.bytes, &f.sha256[..16]);
    }
    assert_eq!(parse_config(&outcome.manifest.config)?, cfg.resolved());
    Ok(())
}
