//! Constant-kernel Smoluchowski equation from f0 = exp(-n), checked against
//! the exact solution (1+t)^-2 exp(-n/(1+t)).

use smoluchowski::model::DiffusionCoefficient;
use smoluchowski::pde::{
    exact_constant_kernel, exponential_initial, mass_weighted_l1, run, CoagulationOperator, MassGrid, PivotKernel,
    SpatialMesh,
};

fn main() -> smoluchowski::Result<()> {
    let grid = MassGrid::geometric(1e-2, 50.0, 400)?;
    let op = CoagulationOperator::new(&grid, &PivotKernel::constant(&grid, 1.0))?;
    let f0 = exponential_initial(grid, SpatialMesh::homogeneous(3, 1.0));
    let mass0 = f0.mass();
    let traj = run(f0, &op, &DiffusionCoefficient::constant(0.0), 1e-3, 5.0, 1000, 2.0)?;
    println!("{:>5} {:>12} {:>12} {:>12}", "t", "L1 error", "M0 error", "mass drift");
    for (frame, row) in traj.frames.iter().zip(&traj.moments) {
        let l1 = mass_weighted_l1(frame, |n| exact_constant_kernel(n, frame.time, 1.0));
        let m0 = row.number - 1.0 / (1.0 + row.time);
        let drift = (row.mass + row.flux_mass - mass0) / mass0;
        println!("{:>5} {l1:>12.3e} {m0:>12.3e} {drift:>12.3e}", row.time);
    }
    Ok(())
}
