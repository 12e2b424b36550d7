//! Sweeps the step-size, the observed fraction, and the network size, and
//! prints the sweep tables. Pass a directory to keep the per-trial files.

use std::path::PathBuf;

use difftomo::experiment::write_sweep_csv;
use difftomo::{run_sweep, ExperimentConfig, Policy, SweepAxis};

fn main() -> difftomo::Result<()> {
    let outputs: Option<PathBuf> = std::env::args().nth(1).map(PathBuf::from);
    let base = ExperimentConfig {
        trials: 10,
        policy: Policy::Metropolis,
        ..Default::default()
    };
    let sweeps = [
        (SweepAxis::Mu, vec![0.1, 0.3, 0.5]),
        (SweepAxis::Xi, vec![0.1, 0.2, 0.4]),
        (SweepAxis::NAgents, vec![100.0, 200.0, 400.0]),
    ];
    for (axis, values) in sweeps {
        let cfg = ExperimentConfig {
            outputs: outputs.as_ref().map(|d| d.join(format!("{axis:?}").to_lowercase())),
            ..base.clone()
        };
        println!("# {axis:?}");
        let rows = run_sweep(&cfg, axis, &values)?;
        write_sweep_csv(&rows, std::io::stdout().lock())?;
    }
    Ok(())
}
