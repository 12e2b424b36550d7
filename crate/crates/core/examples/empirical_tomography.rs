//! Tomography from simulated output streams instead of exact correlations,
//! for growing sample sizes.

use difftomo::{run_experiment, ExperimentConfig, InputKind, Mode, Policy};

fn main() -> difftomo::Result<()> {
    println!("{:>8} {:>14} {:>10} {:>10}", "samples", "mean_err_rate", "perfect", "F0(eps)");
    for n_samples in [2_000usize, 5_000, 20_000] {
        let cfg = ExperimentConfig {
            trials: 10,
            policy: Policy::Metropolis,
            mode: Mode::Empirical {
                n_samples,
                burn_in: None,
                ridge: 0.0,
                input: InputKind::StandardNormal,
            },
            ..Default::default()
        };
        let s = run_experiment(&cfg)?;
        println!(
            "{n_samples:>8} {:>14.5} {:>7}/{:<2} {:>10.4}",
            s.mean_error_rate,
            s.perfect_trials,
            s.trials.len(),
            s.mean_f0_at_eps
        );
    }
    Ok(())
}
