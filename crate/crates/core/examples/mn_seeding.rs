//! Cost-optimal number of MN seeds per content as cooperation varies.
//!
//! `cargo run --example mn_seeding`

use edgecache::analytics::content_cost;
use edgecache::model::{ContentClass, ContentPlacement, CostParams, ScenarioConfig};
use edgecache::optimizer::{optimal_mn_allocation, MNAllocationParams};

fn main() -> edgecache::Result<()> {
    let costs = CostParams::new(0.8, 1.0, 0.2, 0.1, 2.0);
    let content = ContentClass::new("clip", 300, 600.0);
    let mu = 1e-4;
    println!("{:>5} {:>10} {:>10} {:>10}", "p_c", "H_MN(0)", "cost", "no seeds");
    for p_c in [0.05, 0.1, 0.25, 0.5, 0.75, 1.0] {
        let cfg = ScenarioConfig { n_bs: 1, n_sc: 0, n_mn: 1000, cache_per_sc: 0, p_c, lambda_d: 0.0, mu_lambda: mu, cv_lambda: 1.0 };
        let seeds = optimal_mn_allocation(std::slice::from_ref(&content), &costs, &cfg)?.h_mn0[0];
        let params = MNAllocationParams::new(mu * content.ttl, &costs, p_c)?;
        debug_assert!(params.stationary_point(300.0).is_some_and(|x| x >= 0.0));
        println!(
            "{p_c:>5.2} {seeds:>10.2} {:>10.1} {:>10.1}",
            content_cost(&content, ContentPlacement::mn(seeds), &cfg, &costs),
            content_cost(&content, ContentPlacement::default(), &cfg, &costs)
        );
    }
    Ok(())
}
