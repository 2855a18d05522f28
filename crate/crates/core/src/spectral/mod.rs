//! Von Neumann traces on Cayley graphs and the spectral invariants built from them.

mod decay;
mod density;
mod theta;

pub use decay::{decay_checks, long_time_decay_check, DecayChecks, DecayOutcome, DecayReport};
pub use density::{
    logdet_from_density, resolvent_riemann_sum, DensityEstimate, DensityMethod, LogdetEstimate, RiemannSum, TraceSites,
};
pub use theta::{
    ball_theta, geometric_grid, harper_bloch, harper_theta, lattice_theta, line_theta, ns_estimate, theta, tree_theta,
    window_theta, BlochBands, NsEstimate, ThetaMethod, ThetaSample, ThetaSeries,
};

use serde::Serialize;
use serde_json::{json, Value};

use crate::sparse::SparseHermitian;

/// `(A δ_root, δ_root)`, the trace per fundamental-domain vertex.
pub fn vn_trace(a: &SparseHermitian) -> f64 {
    a.entry(a.root(), a.root()).re
}

/// Uniform JSON record for an estimate.
pub fn record(operation: &str, spec: impl Serialize, sigma: impl Serialize, params: Value, samples: Value, certified_errors: Value, fit: Value) -> Value {
    json!({
        "operation": operation,
        "spec": spec,
        "sigma": sigma,
        "params": params,
        "samples": samples,
        "certified_errors": certified_errors,
        "fit": fit,
    })
}

impl ThetaSeries {
    pub fn to_record(&self, fit: Option<&NsEstimate>) -> Value {
        record(
            "theta",
            self.spec,
            self.flux,
            json!({ "shift": self.shift, "method": self.method }),
            json!(self.samples.iter().map(|s| [s.t, s.value]).collect::<Vec<_>>()),
            json!(self.samples.iter().map(|s| s.certified_error).collect::<Vec<_>>()),
            json!(fit),
        )
    }

    /// CSV with columns `t,theta,certified_error`.
    pub fn write_csv(&self, out: impl std::io::Write) -> crate::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "theta", "certified_error"])?;
        for s in &self.samples {
            w.write_record([s.t.to_string(), s.value.to_string(), s.certified_error.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
