//! Write the built-in four-approach intersection scenario to a directory
//! so the CLI can be tried without hand-writing input files:
//!
//! ```text
//! cargo run --example cross_scenario -- /tmp/scn
//! vanetsim run --scenario /tmp/scn/cross.cfg.xml --out /tmp/out --trace
//! ```

use vanetsim::fixtures::{write_cross_scenario, CrossScenario};

fn main() {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "cross-scenario".to_string());
    let dir = std::path::PathBuf::from(dir);
    std::fs::create_dir_all(&dir).expect("create output directory");
    let cfg = write_cross_scenario(
        &dir,
        &CrossScenario {
            end: 600.0,
            ew_rate: 600.0,
            ns_rate: 120.0,
            radio: true,
            ..Default::default()
        },
    )
    .expect("write scenario files");
    println!("{}", cfg.display());
}
