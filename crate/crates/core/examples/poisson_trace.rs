//! Heterogeneous Poisson contact trace: draw gamma pair rates, generate
//! meetings, and recover the rate statistics from the events.
//!
//! `cargo run --release --example poisson_trace [-- OUT_DIR]`

use edgecache::mctrace::{generate_poisson_trace, sample_rate_matrix, trace_stats, GeneratorSpec, PoissonSpec, TraceSidecar};

fn main() -> edgecache::Result<()> {
    let spec = PoissonSpec { n_mn: 80, n_sc: 6, mu_lambda: 0.02, cv_lambda: 1.5, horizon: 5_000.0 };
    let rates = sample_rate_matrix(spec.n_mn, spec.n_sc, spec.mu_lambda, spec.cv_lambda, 1)?;
    let trace = generate_poisson_trace(&rates, spec.horizon, 2)?;
    let stats = trace_stats(&trace);
    println!("{} contacts over {} s between {} MNs and {} SCs", trace.events.len(), trace.horizon, trace.n_mn, trace.n_sc);
    println!("target mean rate {:.4}, cv {:.2}", spec.mu_lambda, spec.cv_lambda);
    println!("measured mean rate {:.4}, cv {:.2} (MN-MN {:.4}, MN-SC {:.4})", stats.mu_hat, stats.cv_hat, stats.mm_mu_hat, stats.ms_mu_hat);

    if let Some(dir) = std::env::args().nth(1) {
        let sidecar =
            TraceSidecar { n_mn: spec.n_mn, n_sc: spec.n_sc, horizon: spec.horizon, seed: 1, generator: GeneratorSpec::Poisson(spec) };
        trace.save(&dir, &sidecar)?;
        println!("wrote {dir}/trace.csv and {dir}/trace.json");
    }
    Ok(())
}
