//! Steady-state correlations by closed form and by Lyapunov iteration, on a
//! symmetric and on an asymmetric combination matrix.

use std::time::Instant;

use difftomo::correlation::{
    default_max_iters, lyapunov_residual, r0_closed_form_symmetric, r0_lyapunov, DEFAULT_LYAPUNOV_TOL,
};
use difftomo::verify::flagship_p;
use difftomo::{generate, GraphKind, GraphModel, Policy};

fn main() -> difftomo::Result<()> {
    let mu = 0.1;
    let iters = default_max_iters(mu, DEFAULT_LYAPUNOV_TOL);
    for n in [50usize, 100, 200] {
        let g = generate(&GraphModel::new(GraphKind::ErdosRenyiSymmetric, n, flagship_p(n), n as u64)?)?;
        let a = Policy::Metropolis.apply(&g, mu)?;
        let t = Instant::now();
        let closed = r0_closed_form_symmetric(a.matrix(), mu)?;
        let t_closed = t.elapsed();
        let t = Instant::now();
        let lyap = r0_lyapunov(a.matrix(), mu, DEFAULT_LYAPUNOV_TOL, iters)?;
        let t_lyap = t.elapsed();
        println!(
            "N={n:<4} gap={:.2e} residual={:.2e} closed={t_closed:?} lyapunov={t_lyap:?}",
            (&closed - &lyap).amax(),
            lyapunov_residual(a.matrix(), &lyap, mu)
        );
    }

    let g = generate(&GraphModel::new(GraphKind::BinomialDirected, 100, flagship_p(100), 4)?)?;
    let a = Policy::UniformAveraging.apply(&g, mu)?;
    let r0 = r0_lyapunov(a.matrix(), mu, DEFAULT_LYAPUNOV_TOL, iters)?;
    println!(
        "\ndirected uniform averaging: asymmetry={:.3} residual={:.2e}",
        a.max_asymmetry(),
        lyapunov_residual(a.matrix(), &r0, mu)
    );
    match r0_closed_form_symmetric(a.matrix(), mu) {
        Err(e) => println!("closed form refused: {e}"),
        Ok(_) => println!("closed form unexpectedly accepted an asymmetric matrix"),
    }
    Ok(())
}
