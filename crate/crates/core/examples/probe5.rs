use mipt_core::*;
use std::time::Instant;

fn main() {
    let settings = DescentSettings { threshold: 1e-10, ..Default::default() };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for ratio in [0.90, 0.93, 0.96, 0.99] {
        let t0 = Instant::now();
        let p = ModelParams::dimensionless(ratio * GAMMA_C, 1).unwrap();
        let grid = sweep_grid_for(p.gamma(), &TimeGrid::new(0.25, 1200).unwrap()).unwrap();
        let k_grid = kc_scan_grid(&p, &grid, &settings, 1e-3).unwrap();
        let scan = critical_fraction(&p, &grid, &settings, &k_grid).unwrap();
        println!(
            "ratio {ratio}: kc = {:.5} +- {:.4}, i* = {:.4e}, grid [{:.4}..{:.4}] ({} pts), {:.0}s",
            scan.k_c, scan.k_err, scan.i_star,
            k_grid[0], k_grid[k_grid.len()-1], k_grid.len(), t0.elapsed().as_secs_f64()
        );
        xs.push(GAMMA_C - p.gamma());
        ys.push(scan.k_c - 0.5);
    }
    let fit = fit_power_law(&xs, &ys).unwrap();
    println!("mu = {:.4} +- {:.4} (r2 = {:.5})", fit.exponent, fit.stderr, fit.r_squared);
}
