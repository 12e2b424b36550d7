//! Runs the diffusion recursion on a Metropolis network and watches the
//! sample correlations approach their steady-state values.

use difftomo::correlation::{default_burn_in, empirical_correlations};
use difftomo::verify::flagship_p;
use difftomo::{exact_correlations, generate, simulate, GraphKind, GraphModel, InputKind, Policy};

fn main() -> difftomo::Result<()> {
    let (n, mu) = (20, 0.1);
    let graph = generate(&GraphModel::new(GraphKind::ErdosRenyiSymmetric, n, flagship_p(n).max(0.2), 2)?)?;
    let a = Policy::Metropolis.apply(&graph, mu)?;
    let exact = exact_correlations(&a)?;
    let burn_in = default_burn_in(mu);
    let scale = exact.r0.amax();

    println!("{:>8} {:>14} {:>14}", "samples", "rel_err_R0", "rel_err_R1");
    for samples in [1_000usize, 4_000, 16_000, 64_000] {
        let trace = simulate(&a, samples + burn_in, InputKind::StandardNormal, 9)?;
        let est = empirical_correlations(trace.outputs(), burn_in)?;
        println!(
            "{samples:>8} {:>14.5} {:>14.5}",
            (&est.r0 - &exact.r0).amax() / scale,
            (&est.r1 - &exact.r1).amax() / scale
        );
    }
    Ok(())
}
