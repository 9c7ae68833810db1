use mipt_core::*;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map(|s| s.as_str()).unwrap_or("above");
    match mode {
        "above" => {
            let p = ModelParams::dimensionless(1.2 * GAMMA_C, 6).unwrap();
            let s = trivial_saddle(&p);
            let grid = TimeGrid::new(0.05, 6000).unwrap();
            let seed = FieldConfig::constant(grid, s.bx, s.bz);
            let settings = DescentSettings { threshold: 1e-9, ..Default::default() };
            for (name, spec) in [("P2", BoundarySpec::P2), ("Z2", BoundarySpec::Z2)] {
                let out = descend_ascend(&seed, spec, &p, &settings).unwrap();
                let n = grid.steps();
                println!(
                    "{name}: total={:.12} iters={} conv={} delta={:.3e} gnorm={:.3e}",
                    out.action.total, out.iterations, out.converged, out.final_delta, out.grad_sup_norm
                );
                println!(
                    "  bx[0]={:.6} bx[n/4]={:.6e} bx[mid]={:.6e} bx[3n/4]={:.6e} bx[end]={:.6}",
                    out.config.bx()[0], out.config.bx()[n/4], out.config.bx()[n/2], out.config.bx()[3*n/4], out.config.bx()[n-1]
                );
            }
        }
        "near" => {
            for (dt, tfac, thr) in [(0.1, 1.0, 1e-9), (0.1, 1.0, 1e-11), (0.05, 1.0, 1e-9), (0.1, 2.0, 1e-9)] {
                let p = ModelParams::dimensionless(0.9 * GAMMA_C, 6).unwrap();
                let th = delta_param(&p).unwrap();
                let t_needed = tfac * 20.0 / th.delta.sqrt();
                let grid = TimeGrid::with_duration(dt, t_needed.max(300.0)).unwrap();
                let settings = DescentSettings { threshold: thr, ..Default::default() };
                let res = instanton_action(&p, &grid, &settings).unwrap();
                // kink width from max slope
                let bx = res.config_z2.bx();
                let mut steep = 0.0f64;
                for w in bx.windows(2) { steep = steep.max((w[1]-w[0]).abs()/dt); }
                let amp = bx.iter().fold(0.0f64, |m,&v| m.max(v.abs()));
                println!(
                    "dt={dt} T={:.0} thr={thr:.0e}: i*={:.6e} raw={:.3e} conv={} it=({},{}) gnorm={:.2e} width={:.1} (pred {:.1}) amp={:.5} (saddle {:.5})",
                    grid.total_time(), res.i_star, res.i_star_raw, res.converged,
                    res.iterations_p2, res.iterations_z2, res.residual_grad_norm,
                    2.0*amp/steep, 2.0/th.delta.sqrt(), amp, broken_saddles(&p).unwrap().0.bx
                );
                println!("  oracle={:.6e}", instanton_action_near_critical(&th));
            }
        }
        _ => {}
    }
}
