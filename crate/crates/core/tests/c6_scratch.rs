//! Scratch end-to-end check of the sweep pins (folded into the
//! acceptance suite later).

use hlab_core::grid::build_grid;
use hlab_core::model::{preset, parse_scenario, PrecondKind};
use hlab_core::solver::epsilon_sweep_values;

#[test]
fn criterion6_scratch() {
    let eps = [0.1, 0.03, 0.01];

    let free = parse_scenario(
        "[scenario]\n\
         dimension = 2\n\
         lambda = 1\n\
         epsilon = 0.1\n\
         [fields]\n\
         n_inf = \"1\"\n\
         f_re = \"0.15915494309189535 * exp(-r^2/2)\"\n\
         [solver]\n\
         half_width = 16\n\
         points = 257\n\
         collar_strength = 1.25\n",
    )
    .unwrap();
    let grid = build_grid(2, 16.0, 257).unwrap();
    let (rep, _) =
        epsilon_sweep_values(grid, &free, &eps, 1e-8, 4000, PrecondKind::Csl, 50, true).unwrap();
    println!("free rho = {:?}", rep.rho);
    println!("free gaps = {:?}", rep.cauchy_gaps);
    println!(
        "free iters = {:?}",
        rep.stats.iter().map(|s| s.iterations).collect::<Vec<_>>()
    );
    let pins = [0.451678, 0.537185, 0.579220];
    for (r, p) in rep.rho.iter().zip(pins) {
        assert!((r - p).abs() / p < 1e-3, "free rho {r} vs pin {p}");
    }
    assert!((0.059636 - rep.cauchy_gaps[0]).abs() < 1e-4);
    assert!((0.021185 - rep.cauchy_gaps[1]).abs() < 1e-4);

    let rc = preset("saito").unwrap();
    let grid = build_grid(2, rc.solver.half_width, rc.solver.points).unwrap();
    let (rep, _) = epsilon_sweep_values(grid, &rc.scenario, &eps, 1e-8, 4000, PrecondKind::Csl, 50, true)
        .unwrap();
    println!("saito rho = {:?}", rep.rho);
    println!("saito gaps = {:?}", rep.cauchy_gaps);
    let pins = [0.359142, 0.400487, 0.418422];
    for (r, p) in rep.rho.iter().zip(pins) {
        assert!((r - p).abs() / p < 1e-3, "saito rho {r} vs pin {p}");
    }
    assert!((0.025602 - rep.cauchy_gaps[0]).abs() < 1e-4);
    assert!((0.008681 - rep.cauchy_gaps[1]).abs() < 1e-4);
}
