//! Single-content cost as a function of the number of SC holders, predicted
//! and simulated, written as a CSV ready for `edgecache report`.
//!
//! `cargo run --release --example cost_vs_holders [-- OUT.csv]`

use std::fmt::Write as _;

use edgecache::analytics::content_cost;
use edgecache::mctrace::{ContactTrace, PoissonSpec};
use edgecache::model::{ContentClass, ContentPlacement, CostParams, ScenarioConfig};
use edgecache::sim::{run_replications, TraceSource};

fn main() -> edgecache::Result<()> {
    let gamma = 0.5;
    let costs = CostParams::new(50.0, 1.0, 1.0, 1.0, 50.0);
    let cfg = ScenarioConfig { n_bs: 1, n_sc: 40, n_mn: 100, cache_per_sc: 1, p_c: 0.0, lambda_d: 0.0, mu_lambda: 1.0, cv_lambda: 0.0 };
    let content = ContentClass::new("x", 100, gamma);
    let spec = PoissonSpec { n_mn: 100, n_sc: 40, mu_lambda: 1.0, cv_lambda: 0.0, horizon: gamma };
    let pool: Vec<ContactTrace> = (0..500).map(|s| spec.generate(s)).collect::<edgecache::Result<_>>()?;

    let mut csv = String::from("h0,predicted,simulated_mean,simulated_lo,simulated_hi\n");
    let mut best = (0, f64::INFINITY);
    for h0 in 1..=40u32 {
        let pl = ContentPlacement::sc(h0 as f64);
        let predicted = content_cost(&content, pl, &cfg, &costs);
        let sim = run_replications(&TraceSource::Pool(&pool), &cfg, &content, pl, &costs, 500, 1, &[gamma])?.cost;
        writeln!(csv, "{h0},{predicted},{},{},{}", sim.mean, sim.lo, sim.hi).unwrap();
        if predicted < best.1 {
            best = (h0, predicted);
        }
    }
    println!("cheapest at H0 = {} with cost {:.1}; no offloading costs {:.1}", best.0, best.1, costs.c_bs_ttl * 100.0);
    match std::env::args().nth(1) {
        Some(path) => std::fs::write(&path, csv).map_err(|e| edgecache::Error::Io { path, source: e })?,
        None => print!("{csv}"),
    }
    Ok(())
}
