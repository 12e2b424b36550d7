//! Builds the combination matrices of every policy on one graph and checks
//! the bounded-weight and renumbering-equivariance properties.

use difftomo::permutation::Permutation;
use difftomo::policies::{check_class_tau, check_p1, check_p2};
use difftomo::rng::rng_from_seed;
use difftomo::verify::{counterexample_graph, counterexample_swap, flagship_p};
use difftomo::{generate, GraphKind, GraphModel, Policy};

fn main() -> difftomo::Result<()> {
    let mu = 0.1;
    let n = 100;
    let model = GraphModel::new(GraphKind::ErdosRenyiSymmetric, n, flagship_p(n), 11)?;
    let graph = generate(&model)?;
    let perm = Permutation::random(n, &mut rng_from_seed(5));

    println!("{:<28} {:>9} {:>9} {:>6} {:>6}", "policy", "max_asym", "kappa", "P1", "P2");
    for policy in [Policy::Laplacian { lambda: 0.5 }, Policy::Metropolis, Policy::UniformAveraging] {
        let a = policy.apply(&graph, mu)?;
        let p1 = check_p1(&a, &graph)?;
        let p2 = check_p2(policy, mu, &graph, &perm)?;
        println!(
            "{:<28} {:>9.1e} {:>9.4} {:>6} {:>6}",
            policy.to_string(),
            a.max_asymmetry(),
            p1.kappa_min,
            p1.holds,
            p2
        );
    }

    println!("\nfraction of scaled edge weights above tau (100 graphs):");
    for policy in [Policy::Laplacian { lambda: 0.5 }, Policy::Metropolis] {
        let tau = policy.class_tau(mu).expect("symmetric policies have a level");
        let r = check_class_tau(policy, mu, &model, tau, 100, 3)?;
        println!("  {policy}: tau={:.4} freq={:.4}", r.tau, r.freq_tau);
    }

    let g = counterexample_graph();
    let policy = Policy::Counterexample { epsilon: 0.05 };
    println!("\ncounterexample weights on the 3-agent chain:\n{}", policy.apply(&g, 0.5)?.matrix());
    println!(
        "equivariant under swapping agents 1 and 2: {}",
        check_p2(policy, 0.5, &g, &counterexample_swap())?
    );
    Ok(())
}
