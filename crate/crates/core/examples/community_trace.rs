//! Community random-waypoint mobility with small cells on a grid. Prints the
//! contact statistics for a few seeds.
//!
//! `cargo run --release --example community_trace`

use edgecache::mctrace::{generate_community_trace, trace_stats, CommunityParams};

fn main() -> edgecache::Result<()> {
    let params = CommunityParams::reference(100, 20_000.0);
    println!(
        "{} MNs in a {} m square, {} communities, {} SCs with {} m range, D2D range {} m",
        params.n_mn, params.area_m, params.communities, params.sc_grid, params.sc_range_m, params.d2d_range_m
    );
    for seed in 0..3 {
        let trace = generate_community_trace(&params, seed)?;
        let s = trace_stats(&trace);
        println!(
            "seed {seed}: {:>6} contacts, mean pair rate {:.2e}/s (MN-MN {:.2e}, MN-SC {:.2e}), rate cv {:.2}",
            trace.events.len(),
            s.mu_hat,
            s.mm_mu_hat,
            s.ms_mu_hat,
            s.cv_hat
        );
    }
    Ok(())
}
