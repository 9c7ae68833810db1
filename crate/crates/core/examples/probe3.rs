use mipt_core::*;
use std::time::Instant;

fn main() {
    let settings = DescentSettings { threshold: 1e-10, ..Default::default() };
    for ratio in [0.95, 0.97] {
        let p = ModelParams::dimensionless(ratio * GAMMA_C, 1).unwrap();
        let th = delta_param(&p).unwrap();
        let i_pred = instanton_action_near_critical(&th);
        let kc_pred = 0.5 + i_pred * 3f64.sqrt() * th.alpha / th.delta.sqrt();
        let grid = sweep_grid_for(p.gamma(), &TimeGrid::new(0.25, 1200).unwrap()).unwrap();
        // window around the prediction
        let lo = ((kc_pred - 0.5) * 0.6 + 0.5).max(0.5001);
        let hi = (kc_pred - 0.5) * 1.6 + 0.5;
        let n = ((hi - lo) / 1e-3).ceil() as usize;
        let k_grid: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let t0 = Instant::now();
        match critical_fraction(&p, &grid, &settings, &k_grid) {
            Ok(scan) => println!(
                "ratio {ratio}: kc = {:.5} +- {:.4} (pred {:.5}), i* = {:.4e}, rows {}, {:.1}s",
                scan.k_c, scan.k_err, kc_pred, scan.i_star, scan.rows.len(),
                t0.elapsed().as_secs_f64()
            ),
            Err(e) => println!("ratio {ratio}: {e} (window [{lo:.4},{hi:.4}], pred {kc_pred:.5}) {:.1}s", t0.elapsed().as_secs_f64()),
        }
    }
}
