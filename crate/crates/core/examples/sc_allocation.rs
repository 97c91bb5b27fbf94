//! Cost-optimal SC caching without MN cooperation: per-content allocation,
//! the capacity multiplier, and the density-based multiplier for a large
//! catalog.
//!
//! `cargo run --release --example sc_allocation`

use edgecache::analytics::no_offload_cost;
use edgecache::model::{ContentClass, CostParams, ScenarioConfig};
use edgecache::optimizer::{lambda0_from_density, optimal_sc_allocation, total_cost, SCAllocationParams};
use edgecache::workload::{sample_popularity, PopularityModel};

fn main() -> edgecache::Result<()> {
    let costs = CostParams::new(0.8, 1.0, 0.2, 0.1, 2.0);
    let cfg = ScenarioConfig { n_bs: 1, n_sc: 4, n_mn: 2000, cache_per_sc: 3, p_c: 0.0, lambda_d: 0.0, mu_lambda: 3.3e-5, cv_lambda: 1.0 };
    let ttl = 3600.0;
    let model = PopularityModel::new(10, 1000, 0.5)?;
    let contents: Vec<ContentClass> =
        sample_popularity(&model, 8, 5).into_iter().enumerate().map(|(i, r)| ContentClass::new(format!("c{i}"), r, ttl)).collect();

    let (placement, lambda0) = optimal_sc_allocation(&contents, &costs, &cfg)?;
    let params = SCAllocationParams::new(cfg.mu_lambda * ttl, &costs, &cfg, lambda0)?;
    println!("cache budget {} copies, lambda0 = {lambda0:.4}", cfg.total_cache());
    println!("popularity thresholds: nothing below {:.1}, every SC above {:.1}", params.lower(), params.upper());
    for (c, h) in contents.iter().zip(&placement.h_sc0) {
        println!("  {:>4} r0={:>4}  H_SC={h:.3}", c.id, c.r0_total);
    }
    let c = total_cost(&contents, &placement, &cfg, &costs);
    let base = no_offload_cost(&contents, &costs);
    println!("total cost {c:.1} vs {base:.1} without offloading");

    let big = ScenarioConfig { cache_per_sc: 200, ..cfg };
    let params = SCAllocationParams::new(cfg.mu_lambda * ttl, &costs, &big, 0.0)?;
    let (l, status) = lambda0_from_density(&model, 10_000, &params)?;
    println!("10k-content catalog, 800 copies: lambda0 from the popularity density = {l:.4} ({status:?})");
    Ok(())
}
