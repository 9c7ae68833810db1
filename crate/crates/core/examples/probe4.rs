use mipt_core::*;
use std::time::Instant;

fn main() {
    let settings = DescentSettings { threshold: 1e-10, ..Default::default() };
    let ratio = 0.97;
    let p = ModelParams::dimensionless(ratio * GAMMA_C, 1).unwrap();
    let th = delta_param(&p).unwrap();
    let grid = sweep_grid_for(p.gamma(), &TimeGrid::new(0.25, 1200).unwrap()).unwrap();
    let (plus, _) = broken_saddles(&p).unwrap();
    let seed_zero = FieldConfig::constant(grid, plus.bx, plus.bz);
    let seed_one = instanton_seed(&th, 0.5 * grid.total_time(), grid).unwrap();
    println!("T = {}, i*_pred = {:.4e}", grid.total_time(), instanton_action_near_critical(&th));
    for k in [0.54, 0.555, 0.565, 0.575, 0.585] {
        let t0 = Instant::now();
        let spec = BoundarySpec::Subsystem(k);
        let zero = descend_ascend(&seed_zero, spec, &p, &settings).unwrap();
        let one = descend_ascend(&seed_one, spec, &p, &settings).unwrap();
        let diff = one.action.total - zero.action.total;
        // does the "one" optimum still hold a kink? count sign changes
        let sc_one = one.config.bx_sign_changes(0.1 * plus.bx);
        let sc_zero = zero.config.bx_sign_changes(0.1 * plus.bx);
        println!(
            "k={k:.4}: diff={diff:+.6e} iters=({}, {}) conv=({}, {}) signchg=({}, {}) {:.0}s",
            zero.iterations, one.iterations, zero.converged, one.converged,
            sc_zero, sc_one, t0.elapsed().as_secs_f64()
        );
    }
}
