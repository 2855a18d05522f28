//! Runs an experiment config the way the `dml` binary does.
//!
//! `cargo run --example run_config -- configs/verify_z2.json verify`

use dml::runner::{run, ExperimentConfig, ExperimentKind};

fn main() -> dml::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "configs/verify_z2.json".into());
    let kind: ExperimentKind = args.next().unwrap_or_else(|| "verify".into()).parse()?;
    let cfg = ExperimentConfig::from_path(path.as_ref())?;
    let out = std::env::temp_dir().join("dml-example");
    let report = run(kind, &cfg, Some(2), Some(&out))?;
    if let Some(t) = &report.table {
        print!("{t}");
    }
    println!("files: {:?}\nfailures: {:?}", report.files, report.failures);
    Ok(())
}
