//! Joint SC and MN placement by the numeric solver, checked against the
//! exhaustive integer grid on a small instance.
//!
//! `cargo run --release --example joint_placement`

use edgecache::model::{ContentClass, CostParams, ScenarioConfig};
use edgecache::optimizer::{grid_search_oracle, round_placement, solve_problem1_numeric, total_cost, SolveMode, SolverOptions};

fn main() -> edgecache::Result<()> {
    let costs = CostParams::new(0.8, 1.0, 0.2, 0.1, 2.0);
    let cfg = ScenarioConfig { n_bs: 1, n_sc: 3, n_mn: 500, cache_per_sc: 1, p_c: 0.3, lambda_d: 0.0, mu_lambda: 0.002, cv_lambda: 1.0 };
    let contents: Vec<ContentClass> =
        [20u64, 45, 90, 150].iter().enumerate().map(|(i, &r)| ContentClass::new(format!("c{i}"), r, 30.0)).collect();

    for mode in [SolveMode::ScOnly, SolveMode::MnOnly, SolveMode::Joint] {
        let sol = solve_problem1_numeric(&contents, &costs, &cfg, mode, &SolverOptions::default())?;
        let int = round_placement(&contents, &sol.placement, &cfg, &costs);
        println!(
            "{mode:?}: cost {:.3} (rounded {:.3}) after {} sweeps from {} starts",
            sol.total_cost,
            total_cost(&contents, &int, &cfg, &costs),
            sol.sweeps,
            sol.starts
        );
        println!("   H_SC {:?}\n   H_MN {:?}", int.h_sc0, int.h_mn0);
    }
    let grid = grid_search_oracle(&contents, &costs, &cfg, SolveMode::Joint, 1)?;
    println!("integer grid optimum: cost {:.3} ({} SC assignments enumerated)", grid.total_cost, grid.evaluated);
    Ok(())
}
