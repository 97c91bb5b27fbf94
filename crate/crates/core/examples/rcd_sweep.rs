//! Relative cost decrease of a 100-content catalog as the delay tolerance and
//! the cooperation probability grow, for two popularity skews.
//!
//! `cargo run --release --example rcd_sweep`

use edgecache::analytics::{no_offload_cost, relative_cost_decrease};
use edgecache::model::{ContentClass, CostParams, Placement, ScenarioConfig};
use edgecache::optimizer::{solve_problem1_numeric, total_cost, SolveMode, SolverOptions};
use edgecache::workload::{sample_popularity, PopularityModel};

fn rcd(rs: &[u64], ttl: f64, p_c: f64, warm: &mut Option<Placement>) -> edgecache::Result<f64> {
    let costs = CostParams::new(0.8, 1.0, 0.2, 0.1, 2.0);
    let cfg = ScenarioConfig { n_bs: 1, n_sc: 4, n_mn: 2000, cache_per_sc: 100, p_c, lambda_d: 0.0, mu_lambda: 3.3e-5, cv_lambda: 1.0 };
    let contents: Vec<ContentClass> = rs.iter().enumerate().map(|(i, &r)| ContentClass::new(format!("c{i}"), r, ttl)).collect();
    let opts = SolverOptions { warm_starts: warm.iter().cloned().collect(), ..SolverOptions::default() };
    let sol = solve_problem1_numeric(&contents, &costs, &cfg, SolveMode::Joint, &opts)?;
    let c = total_cost(&contents, &sol.placement, &cfg, &costs);
    *warm = Some(sol.placement);
    relative_cost_decrease(no_offload_cost(&contents, &costs), c)
}

fn main() -> edgecache::Result<()> {
    for alpha in [0.5, 1.0] {
        let rs = sample_popularity(&PopularityModel::new(10, 1000, alpha)?, 100, 0);
        let mut warm = None;
        let by_ttl: Vec<String> = [1.0, 5.0, 15.0, 30.0, 60.0, 120.0]
            .iter()
            .map(|m| rcd(&rs, m * 60.0, 0.1, &mut warm).map(|v| format!("{m}min:{v:.3}")))
            .collect::<edgecache::Result<_>>()?;
        let mut warm = None;
        let by_pc: Vec<String> = [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&p| rcd(&rs, 300.0, p, &mut warm).map(|v| format!("{p}:{v:.3}")))
            .collect::<edgecache::Result<_>>()?;
        println!("alpha {alpha}: RCD vs TTL (p_c=0.1)  {}", by_ttl.join("  "));
        println!("alpha {alpha}: RCD vs p_c (TTL=5min) {}", by_pc.join("  "));
    }
    Ok(())
}
