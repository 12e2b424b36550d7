//! Draws Erdős–Rényi interaction graphs along `p = (ln N + c) / N` and
//! compares the connection frequency with the limit `exp(−e^{−c})`.

use difftomo::graphgen::connectivity_probability;
use difftomo::rng::{derive_seed, stream};
use difftomo::{generate, GraphKind, GraphModel};

fn main() -> difftomo::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let n = 200usize;
    println!("   c      p   connected  predicted  mean_degree");
    for c in [0.0, 1.0, 2.0, (n as f64).ln()] {
        let p = connectivity_probability(n as f64, c)?;
        let trials = 200;
        let mut connected = 0;
        let mut degree = 0.0;
        for t in 0..trials {
            let model = GraphModel::new(GraphKind::ErdosRenyiSymmetric, n, p, derive_seed(seed, stream::GRAPH, t))?;
            let g = generate(&model)?;
            connected += usize::from(g.is_connected());
            degree += g.degrees().iter().sum::<usize>() as f64 / n as f64;
        }
        println!(
            "{c:5.2} {p:6.4} {:10.3} {:10.3} {:12.2}",
            connected as f64 / trials as f64,
            (-(-c).exp()).exp(),
            degree / trials as f64
        );
    }

    let model = GraphModel::new(GraphKind::BinomialDirected, 8, 0.3, seed)?;
    let g = generate(&model)?;
    println!("\ndirected 8-agent draw (row i lists the agents i listens to):\n{}", g.adjacency());
    Ok(())
}
