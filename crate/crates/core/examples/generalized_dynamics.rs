//! Holder dynamics with content drops and bulk requester arrivals, next to
//! the plain closed form.
//!
//! `cargo run --example generalized_dynamics`

use edgecache::analytics::{integrate_generalized, uniform_grid, ArrivalSchedule, Trajectory};
use edgecache::model::EffectiveState;

fn main() -> edgecache::Result<()> {
    let es = EffectiveState::new(5.0, 120.0);
    let (p_c, mu, h_sc0) = (0.6, 0.01, 2.0);
    let grid = uniform_grid(10.0, 11);
    let base = Trajectory::closed_form(es, p_c, mu, &grid);

    let drops = integrate_generalized(es, p_c, mu, 0.4, h_sc0, &ArrivalSchedule::default(), &grid)?;
    let arrivals = ArrivalSchedule::parse("3:40,6:-10")?;
    let both = integrate_generalized(es, p_c, mu, 0.4, h_sc0, &arrivals, &grid)?;

    println!("{:>5} | {:>8} {:>8} | {:>8} {:>8} | {:>8} {:>8}", "t", "h", "r", "h drop", "r drop", "h both", "r both");
    for i in 0..grid.len() {
        println!(
            "{:>5.1} | {:>8.2} {:>8.2} | {:>8.2} {:>8.2} | {:>8.2} {:>8.2}",
            grid[i], base.h_values[i], base.r_values[i], drops.h_values[i], drops.r_values[i], both.h_values[i], both.r_values[i]
        );
    }

    match integrate_generalized(es, p_c, mu, 0.0, h_sc0, &ArrivalSchedule::parse("1:-500")?, &grid) {
        Err(e) => println!("over-large departure rejected: {e}"),
        Ok(_) => println!("unexpected success"),
    }
    Ok(())
}
