use mipt_core::*;

fn main() {
    let base = TimeGrid::new(0.1, 3000).unwrap();
    let settings = DescentSettings { threshold: 1e-10, ..Default::default() };
    println!("ratio  i_star        leading       mech          i*/lead  i*/mech");
    for r in [0.75, 0.8, 0.85, 0.9, 0.95, 0.97, 0.99] {
        let p = ModelParams::dimensionless(r * GAMMA_C, 1).unwrap();
        let grid = sweep_grid_for(p.gamma(), &base).unwrap();
        let res = instanton_action(&p, &grid, &settings).unwrap();
        let lead = instanton_action_near_critical(&delta_param(&p).unwrap());
        let mech = instanton_action_mechanical(&p).unwrap();
        println!(
            "{r:.2}  {:.6e}  {:.6e}  {:.6e}  {:.4}  {:.4}  (T={:.0}, conv={})",
            res.i_star, lead, mech, res.i_star / lead, res.i_star / mech,
            grid.total_time(), res.converged
        );
    }
}
