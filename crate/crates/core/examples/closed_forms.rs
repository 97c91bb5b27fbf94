//! Mean-field holders, requesters, delivery probability, delay and cost of
//! one content, printed on a coarse time grid.
//!
//! `cargo run --example closed_forms`

use edgecache::analytics::{
    content_cost_breakdown, delivery_probability, expected_delay, holders_requesters_at, sc_delivery_fraction, uniform_grid,
};
use edgecache::model::{ContentClass, ContentPlacement, CostParams, EffectiveState, ScenarioConfig};

fn main() {
    let cfg = ScenarioConfig { n_bs: 1, n_sc: 10, n_mn: 500, cache_per_sc: 5, p_c: 0.3, lambda_d: 0.0, mu_lambda: 1e-4, cv_lambda: 1.0 };
    let costs = CostParams::new(0.8, 1.0, 0.2, 0.1, 2.0);
    let content = ContentClass::new("clip", 200, 600.0);
    let placement = ContentPlacement { h_sc0: 4.0, h_mn0: 5.0 };
    let es = EffectiveState::derive(cfg.p_c, &content, placement);
    println!("effective start: h0 = {:.2}, r0 = {:.0}", es.h0, es.r0);

    println!("{:>8} {:>10} {:>10} {:>8}", "t", "holders", "requesters", "P");
    for t in uniform_grid(content.ttl, 7) {
        let (h, r) = holders_requesters_at(t, es, cfg.p_c, cfg.mu_lambda);
        let p = delivery_probability(t, es, cfg.p_c, cfg.mu_lambda);
        println!("{t:>8.0} {h:>10.2} {r:>10.2} {p:>8.4}");
    }

    let d = expected_delay(content.ttl, es, cfg.p_c, cfg.mu_lambda);
    let q = sc_delivery_fraction(content.ttl, placement.h_sc0, es, cfg.p_c, cfg.mu_lambda);
    let cost = content_cost_breakdown(&content, placement, &cfg, &costs);
    println!("expected delay {d:.1} s, SC share of opportunistic deliveries {q:.3}");
    println!(
        "cost: placement {:.1} + opportunistic {:.1} + delayed {:.1} = {:.1} (no offloading: {:.1})",
        cost.placement,
        cost.opportunistic,
        cost.delayed,
        cost.total(),
        costs.c_bs_ttl * content.r0_total as f64
    );
}
