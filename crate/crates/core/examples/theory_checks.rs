//! Evaluates the finite-size bounds: the conditional maximal-degree tail,
//! the inverse binomial moment, and the error-variance approximation.

use difftomo::theory::{approx_error_variance, lemma1_tail, lemma2_moment, VarianceConfig};
use difftomo::verify::flagship_p;
use difftomo::{GraphKind, GraphModel, Policy};

fn main() -> difftomo::Result<()> {
    println!("maximal degree tail (2000 conditional draws):");
    for n in [100usize, 200, 400] {
        let model = GraphModel::new(GraphKind::ErdosRenyiSymmetric, n, flagship_p(n), 0)?;
        let r = lemma1_tail(&model, 2000, 1)?;
        println!("  N={n:<4} empirical={:.4} bound={:.4}", r.empirical, r.bound);
    }

    println!("\ninverse binomial moments E[(1+beta)^-m] vs m/(np)^m:");
    for n in [10usize, 50, 200] {
        for m in [1, 2] {
            let r = lemma2_moment(n, 0.1, m)?;
            println!("  n={n:<4} p=0.1 m={m} exact={:.3e} bound={:.3e}", r.exact, r.bound);
        }
    }

    println!("\nerror variance, Monte Carlo vs independence approximation (300 graphs):");
    for policy in [Policy::Laplacian { lambda: 0.5 }, Policy::Metropolis] {
        for n in [50usize, 100] {
            let r = approx_error_variance(&VarianceConfig {
                n_agents: n,
                p: flagship_p(n),
                policy,
                mu: 0.1,
                xi: 0.2,
                runs: 300,
                seed: 4,
            })?;
            println!(
                "  {policy:<22} N={n:<4} mc={:.3e} approx={:.3e} bound={:.3e} ratio={:.3}",
                r.mc_variance, r.approx_variance, r.upper_bound, r.ratio
            );
        }
    }
    Ok(())
}
