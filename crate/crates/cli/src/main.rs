use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use neurolink::data::{
    dataset_from_events, dataset_from_iq, gen_resonance_task, list_files, Dataset, EventConversion,
    IqConversion, SyntheticConfig,
};
use neurolink::harness::{
    self, evaluate_point, long_run, prepare, quantize_and_calibrate, sweep, train_model,
    write_outputs, ExperimentConfig, Preset, RunRecord, SweepAxis, Trained, METRICS_FILE,
    SUMMARY_FILE,
};
use neurolink::link::{Equalizer, PilotMode};
use neurolink::train::{QuantConfig, QuantScope, TrainReport};
use neurolink::{Checkpoint, Error, NeuronKind, Result};

const CHECKPOINT_FILE: &str = "model.json";

#[derive(Parser)]
#[command(
    name = "neurolink",
    version,
    about = "Spiking split-computing co-simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train centrally, evaluate centralized and split, save a checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint under the configured link.
    Eval(EvalArgs),
    /// Retrain over regularization strengths.
    SweepAlpha(SweepArgs),
    /// Re-evaluate one trained model over Tx-Rx distances.
    SweepDistance(SweepArgs),
    /// Re-evaluate one trained model over channel SNRs.
    SweepSnr(SweepArgs),
    /// Re-evaluate one trained model over weight bit-widths.
    SweepBits(SweepArgs),
    /// Quantize and calibrate a checkpoint.
    Quantize(QuantizeArgs),
    /// Convert a directory of event or IQ files into a dataset JSON.
    Convert(ConvertArgs),
    /// Write the synthetic resonance task as a dataset JSON.
    GenSynthetic(GenArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment TOML; built-in defaults when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    architecture: Option<String>,
    #[arg(long)]
    neuron: Option<NeuronKind>,
    /// Dataset JSON (sets `data.source = "file"`).
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    link: LinkArgs,
}

#[derive(Args, Clone, Default)]
struct LinkArgs {
    #[arg(long)]
    distance_m: Option<f64>,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    n_pilots: Option<usize>,
    /// `comb` (pilots interleaved with data) or `block` (a pilot symbol per slot).
    #[arg(long)]
    pilot_mode: Option<PilotMode>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    noise_w: Option<f64>,
    /// OFDM symbol duration in microseconds.
    #[arg(long)]
    symbol_us: Option<f64>,
    #[arg(long)]
    equalizer: Option<Equalizer>,
    /// Fixed transmit power per subcarrier instead of targeting `--snr-db`.
    #[arg(long)]
    tx_power_w: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Full-size protocol on a converted dataset (`shd` or `its`); requires `--data`.
    #[arg(long, value_name = "PRESET")]
    long_run: Option<Preset>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated axis values (overrides the config's list).
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    /// Comma-separated training seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
}

#[derive(Args)]
struct QuantizeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value_t = 4)]
    bits: u32,
    /// `full`, `transmitter_only` or `receiver_only`.
    #[arg(long, default_value = "full")]
    scope: QuantScope,
    #[arg(long)]
    calibration_fraction: Option<f64>,
    #[arg(long)]
    calibration_iters: Option<usize>,
    /// Quantized checkpoint path (default `<out>/model-q<bits>.json`).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum InputKind {
    Events,
    Iq,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long, value_enum)]
    kind: InputKind,
    /// Directory of `.evt` or `.iq` files.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    name: Option<String>,
    /// Class count (default: largest label + 1).
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long, default_value_t = 4.0)]
    bin_ms: f64,
    #[arg(long, default_value_t = 250)]
    steps: usize,
    #[arg(long, default_value_t = 220)]
    window: usize,
    /// AWGN added to IQ records.
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 100)]
    samples_per_class: usize,
    #[arg(long, default_value_t = 250)]
    steps: usize,
    #[arg(long, default_value_t = 0.3)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    apply_overrides(&mut cfg, c);
    cfg.validate()?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut ExperimentConfig, c: &Common) {
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(e) = c.epochs {
        cfg.train.epochs = e;
    }
    if let Some(a) = c.alpha {
        cfg.train.alpha = a;
    }
    if let Some(a) = &c.architecture {
        cfg.architecture = a.clone();
    }
    if let Some(n) = c.neuron {
        cfg.neuron = n;
    }
    if let Some(d) = &c.data {
        cfg.data.source = harness::DataSource::File;
        cfg.data.path = Some(d.clone());
    }
    let l = &c.link;
    let link = &mut cfg.link;
    if let Some(v) = l.distance_m {
        link.distance_m = v;
    }
    if let Some(v) = l.snr_db {
        link.snr_db = v;
    }
    if let Some(v) = l.n_pilots {
        link.n_pilots = v;
    }
    if let Some(v) = l.pilot_mode {
        link.pilot_mode = v;
    }
    if let Some(v) = l.n_paths {
        link.n_paths = v;
    }
    if let Some(v) = l.noise_w {
        link.noise_w = v;
    }
    if let Some(v) = l.symbol_us {
        link.symbol_duration = v * 1e-6;
    }
    if let Some(v) = l.equalizer {
        link.equalizer = v;
    }
    if l.tx_power_w.is_some() {
        link.tx_power_w = l.tx_power_w;
    }
}

fn print_record(r: &RunRecord) {
    if let Some(e) = &r.error {
        println!("run {}: FAILED: {e}", r.run);
        return;
    }
    let point = match (r.axis, r.value) {
        (Some(a), Some(v)) => format!(" {a}={v}"),
        _ => String::new(),
    };
    println!(
        "run {}{point} seed={}: acc central={:.4} split={:.4} | spikes/inf {:.1} | compute {:.3} nJ, tx {:.3} nJ{}",
        r.run,
        r.seed,
        r.test_accuracy,
        r.split_accuracy,
        r.summary.total_spikes() as f64 / r.summary.samples.max(1) as f64,
        r.energy.compute_j * 1e9,
        r.energy.tx_j * 1e9,
        r.quant
            .as_ref()
            .map(|q| format!(
                " | q{} acc {:.4} -> calibrated {:.4}",
                q.bits, q.accuracy_uncalibrated, q.accuracy_calibrated
            ))
            .unwrap_or_default()
    );
}

fn finish(cfg: &ExperimentConfig, records: &[RunRecord]) -> Result<()> {
    for r in records {
        print_record(r);
    }
    write_outputs(&cfg.output_dir, cfg, records)?;
    println!(
        "wrote {} and {} to {}",
        METRICS_FILE,
        SUMMARY_FILE,
        cfg.output_dir.display()
    );
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    if let Some(preset) = a.long_run {
        let data = a
            .common
            .data
            .clone()
            .ok_or_else(|| Error::Config("--long-run needs --data <dataset.json>".into()))?;
        let mut cfg = preset.config(data);
        if let Some(p) = &a.common.config {
            cfg = ExperimentConfig::load(p)?;
        }
        apply_overrides(&mut cfg, &a.common);
        cfg.validate()?;
        let rep = long_run(&cfg, preset)?;
        for r in &rep.records {
            print_record(r);
        }
        write_outputs(&cfg.output_dir, &cfg, &rep.records)?;
        let reference = rep.reference;
        println!(
            "long-run {:?} (best effort, not an acceptance gate):",
            preset
        );
        println!(
            "  accuracy {:.4} vs reference {:.4} (±0.02): {}",
            rep.best_accuracy,
            reference.accuracy,
            if rep.accuracy_within_tol {
                "within"
            } else {
                "outside"
            }
        );
        println!(
            "  compute energy {:.3} µJ vs reference {:.3} µJ (±25%): {}",
            rep.compute_energy_j * 1e6,
            reference.compute_energy_j * 1e6,
            if rep.energy_within_tol {
                "within"
            } else {
                "outside"
            }
        );
        std::fs::write(cfg.output_dir.join("long_run.json"), rep.to_json()?)?;
        return Ok(());
    }
    let cfg = load_config(&a.common)?;
    let prep = prepare(&cfg)?;
    let records = match train_model(&cfg, &prep, cfg.seed) {
        Ok(t) => {
            let r = evaluate_point(&cfg, &prep, &t, None)
                .unwrap_or_else(|e| RunRecord::failed(&cfg, cfg.seed, None, &e));
            std::fs::create_dir_all(&cfg.output_dir)?;
            let ck = Checkpoint::new(t.net).with_config(cfg.hash(), cfg.architecture.clone());
            ck.save(cfg.output_dir.join(CHECKPOINT_FILE))?;
            vec![r]
        }
        Err(e) => vec![RunRecord::failed(&cfg, cfg.seed, None, &e)],
    };
    finish(&cfg, &records)
}

fn load_checkpoint(path: &Path, cfg: &ExperimentConfig) -> Result<Checkpoint> {
    let ck = Checkpoint::load(path)?;
    if let Some(h) = &ck.config_hash {
        if *h != cfg.hash() {
            eprintln!("note: checkpoint was trained under a different config (hash {h})");
        }
    }
    Ok(ck)
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let ck = load_checkpoint(&a.checkpoint, &cfg)?;
    let prep = prepare(&cfg)?;
    let trained = Trained {
        seed: cfg.seed,
        net: ck.network,
        report: TrainReport { epochs: Vec::new() },
        seconds: 0.0,
    };
    let r = evaluate_point(&cfg, &prep, &trained, None)?;
    finish(&cfg, &[r])
}

fn cmd_sweep(a: &SweepArgs, axis: SweepAxis) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    if !a.values.is_empty() {
        match axis {
            SweepAxis::Alpha => cfg.sweep.alpha = a.values.clone(),
            SweepAxis::Distance => cfg.sweep.distance_m = a.values.clone(),
            SweepAxis::Snr => cfg.sweep.snr_db = a.values.clone(),
            SweepAxis::Bits => cfg.sweep.bits = a.values.iter().map(|&b| b as u32).collect(),
        }
    }
    if !a.seeds.is_empty() {
        cfg.sweep.seeds = a.seeds.clone();
    }
    let records = sweep(&cfg, axis)?;
    finish(&cfg, &records)
}

fn cmd_quantize(a: &QuantizeArgs) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let ck = load_checkpoint(&a.checkpoint, &cfg)?;
    let mut q = QuantConfig {
        bits: a.bits,
        scope: a.scope,
        ..cfg.quant.unwrap_or_default()
    };
    if let Some(f) = a.calibration_fraction {
        q.calibration_fraction = f;
    }
    if let Some(n) = a.calibration_iters {
        q.calibration_iters = n;
    }
    let prep = prepare(&cfg)?;
    let fp = neurolink::train::accuracy(&ck.network, &prep.test.samples, Default::default())?;
    let (net, outcome) = quantize_and_calibrate(&ck.network, &q, &prep, cfg.eval_seed)?;
    println!(
        "{}-bit {:?}: full precision {:.4}, quantized {:.4}, calibrated {:.4} (spike loss {:.5} -> {:.5}, {} samples)",
        q.bits,
        q.scope,
        fp,
        outcome.accuracy_uncalibrated,
        outcome.accuracy_calibrated,
        outcome.calibration_initial_loss,
        outcome.calibration_best_loss,
        outcome.calibration_samples
    );
    let out = a
        .output
        .clone()
        .unwrap_or_else(|| cfg.output_dir.join(format!("model-q{}.json", q.bits)));
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut qc = Checkpoint::new(net).with_quant(outcome.info);
    qc.config_hash = ck.config_hash;
    qc.architecture = ck.architecture;
    qc.save(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_convert(a: &ConvertArgs) -> Result<()> {
    let name = a.name.clone().unwrap_or_else(|| {
        a.input
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });
    let ds: Dataset = match a.kind {
        InputKind::Events => {
            let files = list_files(&a.input, "evt")?;
            let conv = EventConversion {
                bin_width: a.bin_ms * 1e-3,
                steps: a.steps,
            };
            dataset_from_events(&name, &files, &conv, a.classes)?
        }
        InputKind::Iq => {
            let files = list_files(&a.input, "iq")?;
            let conv = IqConversion {
                window: a.window,
                snr_db: a.snr_db,
                seed: a.seed,
            };
            dataset_from_iq(&name, &files, &conv, a.classes)?
        }
    };
    if ds.is_empty() {
        return Err(Error::Config(format!(
            "no input files found in {}",
            a.input.display()
        )));
    }
    ds.save(&a.output)?;
    println!(
        "wrote {} samples, {} classes, {} steps x {} channels to {}",
        ds.len(),
        ds.classes,
        ds.steps(),
        ds.input_dim(),
        a.output.display()
    );
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let cfg = SyntheticConfig {
        classes: a.classes,
        samples_per_class: a.samples_per_class,
        steps: a.steps,
        noise_sigma: a.noise_sigma,
        seed: a.seed,
        ..SyntheticConfig::default()
    };
    let ds = gen_resonance_task(&cfg)?;
    ds.save(&a.output)?;
    println!("wrote {} samples to {}", ds.len(), a.output.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Train(a) => cmd_train(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::SweepAlpha(a) => cmd_sweep(a, SweepAxis::Alpha),
        Cmd::SweepDistance(a) => cmd_sweep(a, SweepAxis::Distance),
        Cmd::SweepSnr(a) => cmd_sweep(a, SweepAxis::Snr),
        Cmd::SweepBits(a) => cmd_sweep(a, SweepAxis::Bits),
        Cmd::Quantize(a) => cmd_quantize(a),
        Cmd::Convert(a) => cmd_convert(a),
        Cmd::GenSynthetic(a) => cmd_gen(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
