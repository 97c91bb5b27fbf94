//! Exact delivery probability of the small holder/requester chain against
//! Monte Carlo dissemination and the mean-field curve.
//!
//! `cargo run --release --example ctmc_oracle`

use edgecache::analytics::delivery_probability;
use edgecache::mctrace::PoissonSpec;
use edgecache::model::{ContentClass, ContentPlacement, CostParams, EffectiveState, ScenarioConfig};
use edgecache::sim::{exact_ctmc_delivery, run_replications, TraceSource};

fn main() -> edgecache::Result<()> {
    let (r0, h0, p_c) = (5usize, 2usize, 0.5);
    let times = [0.1, 0.25, 0.5, 1.0, 2.0];
    let cfg =
        ScenarioConfig { n_bs: 1, n_sc: h0 as u64, n_mn: r0 as u64, cache_per_sc: 1, p_c, lambda_d: 0.0, mu_lambda: 1.0, cv_lambda: 0.0 };
    let content = ContentClass::new("x", r0 as u64, 2.0);
    let spec = PoissonSpec { n_mn: r0, n_sc: h0, mu_lambda: 1.0, cv_lambda: 0.0, horizon: 2.0 };
    let gen = move |s: u64| spec.generate(s);
    let placement = ContentPlacement::sc(h0 as f64);
    let costs = CostParams::new(1.0, 1.0, 0.2, 0.1, 2.0);
    let mc = run_replications(&TraceSource::Generator(&gen), &cfg, &content, placement, &costs, 50_000, 1, &times)?;
    let es = EffectiveState::derive(p_c, &content, placement);

    println!("{:>5} {:>9} {:>19} {:>10}", "t", "exact", "monte carlo (95%)", "mean field");
    for (i, &t) in times.iter().enumerate() {
        let exact = exact_ctmc_delivery(r0, h0, p_c, 1.0, t)?;
        let p = mc.p[i];
        println!(
            "{t:>5.2} {:>9.5} {:>7.5} ± {:<9.5} {:>10.5}",
            exact.p_delivered,
            p.mean,
            p.half_width(),
            delivery_probability(t, es, p_c, 1.0)
        );
    }
    Ok(())
}
