use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use mlcm_noma::complexity::{all_levels, flops_bicm, flops_mlcm, ratio_curve_csv};
use mlcm_noma::link_design::{db_to_linear, design_rates, estimate_bit_level_capacities, estimate_mutual_information};
use mlcm_noma::modem::LevelMapper;
use mlcm_noma::oracle::{ml_decode_bruteforce, successive_map_oracle, two_user_stage_llrs};
use mlcm_noma::polar::{design_frozen_set, sc_decode, scl_decode, DesignChannelParam, LlrVector, PolarCodeSpec};
use mlcm_noma::scma::{
    complex_normal, mpa_detect_stage, ChannelRealization, DetectorConfig, ReceiverMode, ScmaGraph, StageContext,
};
use mlcm_noma::sim::{run_fer, SimConfig};
use mlcm_noma::{BitBlock, Error};

#[derive(Parser)]
#[command(name = "mlcm-noma", version, about = "Multi-level polar coded modulation over a sparse NOMA uplink")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Frame-error-rate sweep of a scenario.
    RunFer(RunFerArgs),
    /// Capacity-rule rate profile for a target spectral efficiency.
    DesignRates(DesignArgs),
    /// Bit-level capacities and full-label mutual information.
    EstimateCapacity(CapacityArgs),
    /// Function-node term counts.
    Complexity(ComplexityArgs),
    /// Constellation points and labels as CSV.
    DumpConstellation {
        #[arg(long = "L", default_value_t = 4)]
        levels: usize,
    },
    /// Runs the oracle-equivalence checks.
    Selftest {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
}

#[derive(Args)]
struct RunFerArgs {
    /// Scenario file (TOML, or JSON by extension); defaults to the bundled one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the receiver mode: standard, genie or crc_iterated.
    #[arg(long)]
    mode: Option<String>,
    /// Overrides the SNR grid (dB, comma separated).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    snr_db: Option<Vec<f64>>,
    #[arg(long)]
    max_frames: Option<u64>,
    #[arg(long)]
    min_frame_errors: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    list_size: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Directory for `fer_<mode>.csv` and `.json`.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long = "L", default_value_t = 4)]
    levels: usize,
    /// Target spectral efficiency in bits per symbol.
    #[arg(long)]
    target: f64,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20")]
    snr_db: Vec<f64>,
    #[arg(long, default_value_t = 256)]
    block_length: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    crc_degree: usize,
}

#[derive(Args)]
struct CapacityArgs {
    #[arg(long = "L", default_value_t = 4)]
    levels: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    snr_db: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ComplexityArgs {
    #[arg(long = "L")]
    levels: u32,
    #[arg(long = "U")]
    users: u32,
    /// Active levels of the multi-level receiver; all levels when omitted.
    #[arg(long = "levels", value_delimiter = ',')]
    active: Option<Vec<u32>>,
    /// Also print the symbol-level count for this many MPA iterations.
    #[arg(long)]
    bicm_iterations: Option<u32>,
    /// Print the ratio curve CSV for L ∈ {2,4}, I ∈ {1,2,4}, U = 1..6 instead.
    #[arg(long)]
    curve: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) | Error::InvalidConfig(_) | Error::UnsupportedConfiguration(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::FAILURE,
            }
        }
    }
}

/// `Ok(false)`: the command ran but a check failed.
fn run(cmd: Command) -> mlcm_noma::Result<bool> {
    match cmd {
        Command::RunFer(a) => run_fer_cmd(a).map(|_| true),
        Command::DesignRates(a) => {
            let mapper = LevelMapper::new(a.levels)?;
            let d = design_rates(&mapper, a.target, &a.snr_db, a.block_length, a.samples, a.seed, a.crc_degree)?;
            println!("{}", serde_json::to_string_pretty(&d)?);
            Ok(true)
        }
        Command::EstimateCapacity(a) => {
            let mapper = LevelMapper::new(a.levels)?;
            let cols: Vec<String> = (0..a.levels).map(|l| format!("c{l}")).collect();
            println!("snr_db,{},total,total_se,mi,mi_se", cols.join(","));
            for &db in &a.snr_db {
                let c = estimate_bit_level_capacities(&mapper, db_to_linear(db), a.samples, a.seed)?;
                let mi = estimate_mutual_information(&mapper, db_to_linear(db), a.samples, a.seed)?;
                let per: Vec<String> = c.per_level.iter().map(|v| format!("{v:.6}")).collect();
                println!(
                    "{db},{},{:.6},{:.2e},{:.6},{:.2e}",
                    per.join(","),
                    c.total,
                    c.total_std_error,
                    mi.value,
                    mi.std_error
                );
            }
            Ok(true)
        }
        Command::Complexity(a) => {
            if a.curve {
                print!("{}", ratio_curve_csv(&[2, 4], &[1, 2, 4], &[1, 2, 3, 4, 5, 6])?);
                return Ok(true);
            }
            let active = a.active.unwrap_or_else(|| all_levels(a.levels));
            println!("{}", flops_mlcm(a.levels, a.users, &active)?);
            if let Some(i) = a.bicm_iterations {
                println!("{}", flops_bicm(a.levels, a.users, i)?);
            }
            Ok(true)
        }
        Command::DumpConstellation { levels } => {
            let m = LevelMapper::new(levels)?;
            println!("label,bits,re,im");
            for label in 0..m.order() {
                let bits: String = m.label_bits(label).iter().map(|b| char::from(b'0' + b)).collect();
                let p = m.point(label);
                println!("{label},{bits},{:.12},{:.12}", p.re, p.im);
            }
            Ok(true)
        }
        Command::Selftest { trials } => selftest(trials),
    }
}

fn run_fer_cmd(a: RunFerArgs) -> mlcm_noma::Result<()> {
    let mut cfg = match &a.config {
        Some(p) => SimConfig::load(p)?,
        None => SimConfig::bundled(),
    };
    if let Some(m) = &a.mode {
        cfg.receiver.mode = m.parse::<ReceiverMode>()?;
    }
    if let Some(s) = a.snr_db {
        cfg.snr_db = s;
    }
    if let Some(v) = a.max_frames {
        cfg.max_frames = v;
    }
    if let Some(v) = a.min_frame_errors {
        cfg.min_frame_errors = v;
    }
    if let Some(v) = a.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = a.list_size {
        cfg.receiver.list_size = v;
    }
    let scenario = cfg.build()?;
    let sweep = cfg.sweep()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let result = pool.install(|| run_fer(&scenario, &sweep))?;
    let csv = result.to_csv();
    write_results(&a.out, &format!("fer_{}", result.mode.as_str()), &csv, &result.to_json()?)?;
    print!("{csv}");
    Ok(())
}

fn write_results(dir: &Path, stem: &str, csv: &str, json: &str) -> mlcm_noma::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{stem}.csv")), csv)?;
    fs::write(dir.join(format!("{stem}.json")), json)?;
    Ok(())
}

fn report(name: &str, ok: bool, detail: String) -> bool {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn selftest(trials: usize) -> mlcm_noma::Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    let normal = Normal::new(0.0, 2.0).expect("valid normal");
    let mut all = true;

    let frozen = design_frozen_set(8, 4, DesignChannelParam::Bec { erasure: 0.5 })?;
    let spec = PolarCodeSpec::new(8, frozen, None)?;
    let (mut sc_ok, mut ml_ok) = (0, 0);
    for _ in 0..trials {
        let llr = LlrVector::new((0..8).map(|_| normal.sample(&mut rng)).collect());
        sc_ok += usize::from(sc_decode(&llr, &spec)? == successive_map_oracle(&llr, &spec)?);
        ml_ok += usize::from(scl_decode(&llr, &spec, 16)?.bits == ml_decode_bruteforce(&llr, &spec)?);
    }
    all &= report("sc_vs_successive_map", sc_ok == trials, format!("{sc_ok}/{trials}"));
    all &= report("scl16_vs_ml", ml_ok == trials, format!("{ml_ok}/{trials}"));

    let mapper = LevelMapper::new(2)?;
    let graph = ScmaGraph::new(vec![vec![1, 1]])?;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let h = [complex_normal(&mut rng, 1.0), complex_normal(&mut rng, 1.0)];
        let nv = 0.05 + 2.0 * rand::Rng::random::<f64>(&mut rng);
        let y = complex_normal(&mut rng, 3.0);
        let ch = ChannelRealization { h: vec![h.to_vec()], noise_variance: nv };
        for stage in 0..2 {
            let known: Vec<Vec<BitBlock>> =
                (0..2).map(|_| (0..stage).map(|_| BitBlock::random(1, &mut rng)).collect()).collect();
            let ctx = StageContext::new(stage, known.clone());
            let got = mpa_detect_stage(&[vec![y]], &ch, &graph, &mapper, &ctx, 1, &DetectorConfig::default(), None)?;
            let pre: Vec<Vec<u8>> = known.iter().map(|k| k.iter().map(|c| c[0]).collect()).collect();
            let want = two_user_stage_llrs(y, h, stage, [&pre[0], &pre[1]], &mapper, nv)?;
            for u in 0..2 {
                worst = worst.max((got[u].as_slice()[0] - want[u]).abs());
            }
        }
    }
    all &= report("mpa_vs_exhaustive", worst <= 1e-9, format!("max |ΔLLR| = {worst:.2e}"));

    let mlcm = flops_mlcm(4, 3, &[1, 2, 3])?;
    let bicm = flops_bicm(4, 3, 2)?;
    all &= report("complexity", mlcm == 584 && bicm == 8192, format!("{mlcm} / {bicm}"));

    Ok(all)
}
