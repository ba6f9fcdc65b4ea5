use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use m4::dataset::{build_dataset, ScenarioSpace};
use m4::metrics::{compare_report, load_compare_set, render_jsonl, render_text, RowStatus};
use m4::runner::run_prepared;
use m4::scenario::{Backend, Scenario};
use m4::weights_io::{load_bundle, load_weights, save_weights, ProbeFile, PROBE_TOLERANCE};
use m4_core::engine::ProbeInput;
use m4_core::netmodel::NetworkConfig;
use m4_core::nn::{ModelDims, ModelWeights};

#[derive(Parser)]
#[command(name = "m4", version, about = "Flow-level data-center network simulation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one scenario and write a run directory.
    Run {
        scenario: PathBuf,
        /// fluid, packet or learned; defaults to the scenario's backend.
        #[arg(long)]
        backend: Option<Backend>,
        /// Weight bundle for the learned backend.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare estimate runs against reference runs.
    Compare {
        /// Reference run directory or directory of per-scenario runs.
        #[arg(long)]
        truth: PathBuf,
        /// Estimate run directories (same shape as `--truth`).
        #[arg(long = "est", required = true)]
        est: Vec<PathBuf>,
        /// Also write `report.txt` and `report.jsonl` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build supervised episodes from packet-level runs.
    GenDataset {
        /// Scenario-space file.
        space: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Load a weight bundle, check it against the model, and optionally
    /// against a probe file.
    ValidateWeights {
        bundle: PathBuf,
        #[arg(long)]
        probe: Option<PathBuf>,
        #[arg(long, default_value_t = PROBE_TOLERANCE)]
        tol: f64,
    },
    /// Write a randomly initialized bundle and a matching probe file.
    InitWeights {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        probe_out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `hidden,gnn,mlp_hidden`; defaults to the full model.
        #[arg(long, value_parser = parse_dims)]
        dims: Option<ModelDims>,
    },
}

fn parse_dims(s: &str) -> Result<ModelDims, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [h, g, m] if *h > 0 && *g > 0 && *m > 0 => Ok(ModelDims::small(*h, *g, *m)),
        _ => Err("expected three positive integers: hidden,gnn,mlp_hidden".into()),
    }
}

fn default_probe_input() -> ProbeInput {
    ProbeInput {
        config: NetworkConfig::default(),
        link_capacities_bps: vec![10e9; 4],
        max_capacity_bps: 10e9,
        size: 20_000,
        dt_s: 1e-4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// `Ok(false)` means the command ran but did not fully succeed.
fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.cmd {
        Cmd::Run {
            scenario,
            backend,
            weights,
            out,
        } => {
            let sc = Scenario::load(&scenario)?;
            let backend = backend.or(sc.backend).context("no backend given on the command line or in the scenario")?;
            let w = weights.as_deref().map(load_weights).transpose()?;
            let prep = sc.prepare()?;
            let rec = run_prepared(&prep, backend, w.as_ref())?;
            rec.write_dir(&out)?;
            println!(
                "{}: {} {} flows, {} events, {:.3} s",
                rec.meta.scenario, backend, rec.meta.n_flows, rec.meta.n_events, rec.meta.wall_s
            );
            if let Some(t) = rec.meta.throughput {
                println!("throughput {:.3} flows/s over {:.6} s", t.throughput, t.makespan);
            }
            Ok(true)
        }
        Cmd::Compare { truth, est, out } => {
            if !truth.is_dir() {
                bail!("{} is not a directory", truth.display());
            }
            let rows = compare_report(&load_compare_set(&truth, &est)?);
            let text = render_text(&rows);
            print!("{text}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("report.txt"), &text)?;
                std::fs::write(dir.join("report.jsonl"), render_jsonl(&rows))?;
            }
            Ok(!rows.is_empty() && rows.iter().all(|r| r.status == RowStatus::Ok))
        }
        Cmd::GenDataset {
            space,
            out,
            count,
            seed,
        } => {
            let sp = ScenarioSpace::load(&space)?;
            let m = build_dataset(&sp, count, seed, &out)?;
            println!(
                "{} train, {} validation, {} skipped",
                m.train.len(),
                m.validation.len(),
                m.skipped.len()
            );
            Ok(m.skipped.is_empty())
        }
        Cmd::ValidateWeights { bundle, probe, tol } => {
            let b = load_bundle(&bundle)?;
            let w = ModelWeights::from_bundle(&b)?;
            let d = w.dims;
            println!(
                "{}: {} tensors, {} values, dims hidden={} gnn={} mlp={} layers={}",
                bundle.display(),
                b.params().len(),
                b.n_values(),
                d.hidden,
                d.gnn,
                d.mlp_hidden,
                d.gnn_layers
            );
            if let Some(p) = probe {
                let pf = ProbeFile::load(&p)?;
                let got = pf.check(&w, tol)?;
                println!("probe ok: slowdown {:.6}, remaining {:.3}", got.slowdown, got.remaining);
            }
            Ok(true)
        }
        Cmd::InitWeights {
            out,
            probe_out,
            seed,
            dims,
        } => {
            let w = ModelWeights::random(dims.unwrap_or_default(), seed, 1.0);
            save_weights(&out, &w)?;
            println!("{}: {} parameters", out.display(), w.n_params());
            if let Some(p) = probe_out {
                ProbeFile::generate(&w, default_probe_input())?.save(&p)?;
            }
            Ok(true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_argument() {
        assert_eq!(parse_dims("8, 6,5").unwrap(), ModelDims::small(8, 6, 5));
        assert!(parse_dims("8,6").is_err());
        assert!(parse_dims("0,6,5").is_err());
    }

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let c = Cli::try_parse_from(["m4", "run", "s.json", "--backend", "fluid", "--out", "o"]).unwrap();
        assert!(matches!(c.cmd, Cmd::Run { backend: Some(Backend::Fluid), .. }));
        assert!(Cli::try_parse_from(["m4", "run", "s.json", "--backend", "ns3", "--out", "o"]).is_err());
    }
}
