//! A run through the command-line layer: TOML config, overrides, output records and snapshots.

use loopsoup::cli_io::main_with_args;
use loopsoup::cli_io::snapshot::SnapshotFile;
use std::fs;
use std::io::BufReader;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("loopsoup-example-run");
    let config = dir.join("run.toml");
    fs::create_dir_all(&dir)?;
    fs::write(
        &config,
        r#"
[model]
beta = 1.0
[model.potential]
family = "gaussian"
amplitude = 1.0
sigma = 1.0
[domain]
side = 2.0
[mcmc]
steps = 20000
burn_in = 2000
thinning = 100
[output]
snapshots = true
"#,
    )?;
    let out = dir.join("mcmc");
    let args = ["loopsoup", "mcmc", "--kernel", "exc", "--config", config.to_str().unwrap(), "--seed", "9", "--set", "measure.j_max=32", "--out", out.to_str().unwrap()];
    let code = main_with_args(args);
    println!("exit code {code}");

    let records = fs::read_to_string(out.join("observables.jsonl"))?;
    println!("{} observable records; first two lines:", records.lines().count() - 1);
    for line in records.lines().skip(1).take(2) {
        println!("  {line}");
    }
    let snap = SnapshotFile::read(BufReader::new(fs::File::open(out.join("replica-000.snapshot.v1"))?))?;
    println!("snapshot: {} loops in d = {}", snap.config.len(), snap.header.dim);
    Ok(())
}
