//! A day of content creations shaped by an hourly demand profile, with the
//! optimized offloading cost per hour.
//!
//! `cargo run --release --example diurnal_workload`

use edgecache::analytics::no_offload_cost;
use edgecache::model::{ContentClass, CostParams, ScenarioConfig};
use edgecache::optimizer::{optimal_sc_allocation, total_cost};
use edgecache::workload::{build_diurnal_scenario, concurrency_at, IntensityProfile, PopularityModel, DAY_S};

const PROFILE: &str = "time_s,intensity\n0,0.3\n21600,0.2\n32400,0.7\n46800,0.8\n64800,1.0\n79200,0.6\n";

fn main() -> edgecache::Result<()> {
    let profile = IntensityProfile::from_csv_reader(PROFILE.as_bytes())?;
    let model = PopularityModel::new(10, 1000, 1.0)?;
    let ttl = 1500.0;
    let contents = build_diurnal_scenario(&profile, 60, ttl, &model, 3)?;
    println!("{} contents created over the day (TTL {ttl} s)", contents.len());

    let costs = CostParams::new(0.8, 1.0, 0.2, 0.1, 2.0);
    let cfg = ScenarioConfig { n_bs: 1, n_sc: 4, n_mn: 2000, cache_per_sc: 20, p_c: 0.0, lambda_d: 0.0, mu_lambda: 3.3e-5, cv_lambda: 1.0 };
    println!("{:>4} {:>9} {:>7} {:>10} {:>10}", "hour", "intensity", "active", "cost", "baseline");
    for hour in (0..24).step_by(3) {
        let t = hour as f64 * 3600.0;
        let live: Vec<ContentClass> = contents.iter().filter(|c| c.creation_time <= t && t < c.creation_time + c.ttl).cloned().collect();
        let cost = if live.is_empty() {
            0.0
        } else {
            let (p, _) = optimal_sc_allocation(&live, &costs, &cfg)?;
            total_cost(&live, &p, &cfg, &costs)
        };
        println!(
            "{hour:>4} {:>9.2} {:>7} {cost:>10.1} {:>10.1}",
            profile.at(t),
            concurrency_at(&contents, t),
            no_offload_cost(&live, &costs)
        );
    }
    debug_assert!(contents.iter().all(|c| c.creation_time < DAY_S));
    Ok(())
}
