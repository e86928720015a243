use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::complexity;
use super::config::{DetectorConfig, ExperimentConfig};
use crate::detector::{AppDetector, UniformDetector};
use crate::error::{Error, Result};
use crate::gibbs::GibbsDetector;
use crate::rates::{draw_blocks, estimate_sic, write_rates_csv, RateReport};
use crate::rnneq::{load_model, save_model, RnnDetector};
use crate::sicframe::SicPlan;
use crate::signalchain::dump::write_block;
use crate::signalchain::DiscreteChannel;
use crate::trainer::train_stage;
use crate::trellis::{AuxChannel, FbaDetector, DEFAULT_TABLE_BUDGET};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Train,
    Evaluate,
    Sweep,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Train => "train",
            Command::Evaluate => "evaluate",
            Command::Sweep => "sweep",
            Command::Report => "report",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub code_version: String,
    pub seeds: BTreeMap<String, u64>,
    pub wall_clock_ms: f64,
    pub status: String,
    pub artifacts: Vec<String>,
    pub notes: Vec<String>,
}

/// Content hash of the crate name and version.
pub fn code_version() -> String {
    let text = format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

/// File-stem tag of one sweep point, free of dots: 2.5 dB is `ptx2p50`,
/// -3 dB is `ptxm3p00`.
pub fn power_tag(tx_power_db: f64) -> String {
    format!("ptx{tx_power_db:.2}").replace('.', "p").replace('-', "m")
}

pub fn checkpoint_stem(run_dir: &Path, stage: usize, tx_power_db: f64) -> PathBuf {
    run_dir.join("models").join(format!("stage{stage}_{}", power_tag(tx_power_db)))
}

struct Ctx {
    dir: PathBuf,
    artifacts: Vec<String>,
    notes: Vec<String>,
}

impl Ctx {
    fn record(&mut self, path: &Path) {
        let rel = path.strip_prefix(&self.dir).unwrap_or(path);
        self.artifacts.push(rel.to_string_lossy().replace('\\', "/"));
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.record(&path);
        Ok(())
    }
}

/// Runs `cmd` and writes `manifest.json`, also when the command fails.
/// `report` only reads and leaves the manifest alone.
pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let dir = cfg.run_dir()?;
    if cmd == Command::Report {
        println!("{}", render_report(&dir)?);
        return read_manifest(&dir);
    }
    fs::create_dir_all(&dir)?;
    let start = Instant::now();
    let mut ctx = Ctx {
        dir: dir.clone(),
        artifacts: Vec::new(),
        notes: Vec::new(),
    };
    ctx.write("config.toml", &cfg.to_toml()?)?;
    let result = match cmd {
        Command::Simulate => simulate(&mut ctx, cfg),
        Command::Train => train(&mut ctx, cfg),
        Command::Evaluate => evaluate(&mut ctx, cfg),
        Command::Sweep => sweep(&mut ctx, cfg),
        Command::Report => unreachable!(),
    };
    let mut seeds = BTreeMap::new();
    seeds.insert("base".to_string(), cfg.seed);
    seeds.insert("eval".to_string(), cfg.eval_config().seed);
    for (i, _) in cfg.sweep.tx_power_db.iter().enumerate() {
        for s in 1..=cfg.sic.stages {
            if let Some(tc) = cfg.train_config(s, i)? {
                seeds.insert(format!("train_stage{s}_point{i}"), tc.seed);
            }
        }
    }
    ctx.artifacts.sort();
    ctx.artifacts.dedup();
    let manifest = RunManifest {
        command: cmd.name().into(),
        config_hash: cfg.hash()?,
        code_version: code_version(),
        seeds,
        wall_clock_ms: start.elapsed().as_secs_f64() * 1e3,
        status: match &result {
            Ok(()) => "ok".into(),
            Err(e) => format!("error: {e}"),
        },
        artifacts: ctx.artifacts,
        notes: ctx.notes,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    result.map(|()| manifest)
}

pub fn read_manifest(run_dir: &Path) -> Result<RunManifest> {
    let path = run_dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|_| Error::Missing(path.display().to_string()))?;
    Ok(serde_json::from_str(&text)?)
}

fn simulate(ctx: &mut Ctx, cfg: &ExperimentConfig) -> Result<()> {
    let blocks_dir = ctx.dir.join("blocks");
    fs::create_dir_all(&blocks_dir)?;
    let eval = cfg.eval_config();
    for &p in &cfg.sweep.tx_power_db {
        let chan = cfg.channel_at(p)?;
        for (b, blk) in draw_blocks(&chan, &eval)?.iter().enumerate() {
            let stem = blocks_dir.join(format!("{}_b{b:04}", power_tag(p)));
            let (bin, json) = write_block(&stem, blk, chan.config())?;
            ctx.record(&bin);
            ctx.record(&json);
        }
    }
    Ok(())
}

fn train(ctx: &mut Ctx, cfg: &ExperimentConfig) -> Result<()> {
    let DetectorConfig::Rnn(section) = &cfg.detector else {
        return Err(Error::Config("`train` needs detector.kind = \"rnn\"".into()));
    };
    fs::create_dir_all(ctx.dir.join("models"))?;
    let powers = &cfg.sweep.tx_power_db;
    for (i, &p) in powers.iter().enumerate() {
        let chan = cfg.channel_at(p)?;
        for s in 1..=cfg.sic.stages {
            let shape = cfg.rnn_shape(s)?.expect("rnn");
            let mut tc = cfg.train_config(s, i)?.expect("rnn");
            if cfg.sweep.warm_start && i > 0 {
                tc.warm_start = Some(checkpoint_stem(&ctx.dir, s, powers[i - 1]));
            }
            let (mut model, log) = train_stage(&chan, &shape, &tc)?;
            if let Some(seg) = section.segment {
                model.segment = seg;
            }
            let note = match &log.warm_start {
                Some(from) => format!("stage {s} at {p:.2} dB warm-started from {}", from.display()),
                None => format!("stage {s} at {p:.2} dB initialized randomly"),
            };
            log::info!("{note}");
            ctx.notes.push(note);
            let stem = checkpoint_stem(&ctx.dir, s, p);
            let provenance = serde_json::json!({
                "tx_power_db": p,
                "stage": s,
                "stages": cfg.sic.stages,
                "seed": tc.seed,
                "n_iter": tc.n_iter,
                "warm_start": log.warm_start,
                "final_loss_bits": log.tail_loss(100.min(log.rows.len())),
                "clamps": log.clamps,
                "config_hash": cfg.hash()?,
            });
            let (bin, json) = save_model(&model, &stem, provenance)?;
            ctx.record(&bin);
            ctx.record(&json);
            let csv = stem.with_file_name(format!("stage{s}_{}_train.csv", power_tag(p)));
            log.write_csv(&csv)?;
            ctx.record(&csv);
        }
    }
    Ok(())
}

fn table_budget(cfg: &ExperimentConfig) -> usize {
    cfg.eval.table_budget.unwrap_or(DEFAULT_TABLE_BUDGET)
}

fn build_detector(cfg: &ExperimentConfig, run_dir: &Path, chan: &DiscreteChannel, p: f64) -> Result<Box<dyn AppDetector>> {
    Ok(match &cfg.detector {
        DetectorConfig::Uniform => Box::new(UniformDetector {
            size: chan.alphabet().size(),
        }),
        DetectorConfig::Fba { memory } => Box::new(FbaDetector {
            aux: AuxChannel::build(chan, *memory, table_budget(cfg))?,
        }),
        DetectorConfig::Gibbs { .. } => Box::new(GibbsDetector {
            channel: chan.clone(),
            config: cfg.gibbs_config().expect("gibbs"),
        }),
        DetectorConfig::Rnn(_) => {
            let models = (1..=cfg.sic.stages)
                .map(|s| load_model(&checkpoint_stem(run_dir, s, p)).map(|(m, _)| m))
                .collect::<Result<Vec<_>>>()?;
            Box::new(RnnDetector { models })
        }
    })
}

fn evaluate(ctx: &mut Ctx, cfg: &ExperimentConfig) -> Result<()> {
    let eval = cfg.eval_config();
    let plan = SicPlan::new(cfg.sic.stages, eval.block_len)?;
    let hash = cfg.hash()?;
    let mut reports: Vec<RateReport> = Vec::new();
    for &p in &cfg.sweep.tx_power_db {
        let chan = cfg.channel_at(p)?;
        let detector = build_detector(cfg, &ctx.dir, &chan, p)?;
        let ub = cfg
            .eval
            .upper_bound_memory
            .map(|m| AuxChannel::build(&chan, m, table_budget(cfg)))
            .transpose()?;
        let mut report = estimate_sic(detector.as_ref(), &chan, &plan, &eval, ub.as_ref())?;
        report.config_hash = hash.clone();
        if report.flagged {
            ctx.notes.push(format!("{p:.2} dB: {} clamped probabilities", report.clamps));
        }
        reports.push(report);
    }
    let rates = ctx.dir.join("rates.csv");
    write_rates_csv(&rates, &reports)?;
    ctx.record(&rates);
    let summary = serde_json::json!({
        "config_hash": hash,
        "stages": cfg.sic.stages,
        "blocks": eval.blocks,
        "block_len": eval.block_len,
        "reports": reports,
    });
    ctx.write("summary.json", &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    let mut rows = complexity::run_rows(cfg)?;
    rows.extend(complexity::reference_rows()?);
    ctx.write("complexity.csv", &complexity::to_csv(&rows))?;
    Ok(())
}

fn sweep(ctx: &mut Ctx, cfg: &ExperimentConfig) -> Result<()> {
    if matches!(cfg.detector, DetectorConfig::Rnn(_)) {
        train(ctx, cfg)?;
    }
    evaluate(ctx, cfg)
}

/// Human-readable view of `rates.csv` and `complexity.csv` in a run directory.
pub fn render_report(run_dir: &Path) -> Result<String> {
    let read = |name: &str| {
        let path = run_dir.join(name);
        fs::read_to_string(&path).map_err(|_| Error::Missing(path.display().to_string()))
    };
    let rates = read("rates.csv")?;
    let mut out = format!("run {}\n\n", run_dir.display());
    out.push_str(&format!(
        "{:>10} {:>6} {:>12} {:>10} {:>10} {:>10}\n",
        "P_tx[dB]", "stage", "detector", "rate", "stderr", "UB"
    ));
    for line in rates.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Serde(format!("malformed rates.csv row `{line}`")));
        }
        out.push_str(&format!(
            "{:>10} {:>6} {:>12} {:>10} {:>10} {:>10}\n",
            f[0],
            f[1],
            f[2],
            f[3],
            f[4],
            if f[5].is_empty() { "-" } else { f[5] }
        ));
    }
    if let Ok(cx) = read("complexity.csv") {
        out.push_str("\nmultiplications per APP\n");
        for line in cx.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() == 6 {
                out.push_str(&format!("{:>9} {:>10} stage {}/{} {:>12}  {}\n", f[0], f[1], f[4], f[3], f[5], f[2]));
            }
        }
    }
    Ok(out)
}
