//! Reference values used by the test suite.

use dml::oracle::{oracle, OracleKind, OracleParams};

fn main() -> dml::Result<()> {
    let cases = [
        (OracleKind::BesselZd, OracleParams { d: 1, t: 1.0, ..Default::default() }),
        (OracleKind::KestenTree, OracleParams { d: 4, ..Default::default() }),
        (OracleKind::HarperBloch, OracleParams { flux: (1, 3), grid: 64, ..Default::default() }),
        (OracleKind::GreenLogdet, OracleParams { d: 2, ..Default::default() }),
    ];
    for (kind, params) in cases {
        println!("{kind:?}: {:.10}", oracle(kind, &params)?);
    }
    Ok(())
}
