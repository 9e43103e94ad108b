use std::sync::Arc;
use std::time::Instant;
use wentzell::mesh::build_rectangle_mesh;
use wentzell::pencil::{assemble_pencil, ProblemParams};
use wentzell::spectral::{solve_eigs_with, weyl_fit, EigMethod, EigOptions};

fn main() {
    for nx in [96usize, 160, 240] {
        let t0 = Instant::now();
        let mesh = Arc::new(build_rectangle_mesh(1.0, 1.0, nx, nx).unwrap());
        let p = assemble_pencil(&mesh, &ProblemParams::new(1.0, 0.0, 1.0), None).unwrap();
        let t1 = Instant::now();
        let opts = EigOptions { method: EigMethod::Lanczos, ..Default::default() };
        let spec = solve_eigs_with(&p, 150, &opts).unwrap();
        let dt = t1.elapsed().as_secs_f64();
        let fit = weyl_fit(&spec, 2, (30, 120)).unwrap();
        let max_res = spec.residuals.iter().fold(0.0f64, |a, &b| a.max(b));
        println!(
            "nx={nx}: assemble {:.2}s solve {dt:.2}s  lam1={:.6} lam149={:.3} slope={:.6} resid={:.4} max_eig_res={max_res:.2e}",
            (t1 - t0).as_secs_f64(),
            spec.eigenvalues[1],
            spec.eigenvalues[149],
            fit.fitted_slope,
            fit.residual
        );
    }
}
