use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use zakpol::ambiguity::{crystallization_check, self_ambiguity_support, FastAmbiguity};
use zakpol::channel::SceneSpec;
use zakpol::harness::{
    four_target_scene, heatmap_scenario, roc_curve, rmse_curves, run_monte_carlo, self_test, write_heatmaps,
    write_run_outputs, RunConfig,
};
use zakpol::waveform::{fmcw_frame, phase_coded_frame, pulsone, spread_carrier, zadoff_chu};
use zakpol::{ComplexFrame, Error, GdaftParams, Result, SupportBox, ZakParams};

#[derive(Parser)]
#[command(name = "zakpol", version, about = "Delay-Doppler polarimetry simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a transmit frame as CSV (n, re, im).
    Waveform {
        #[command(flatten)]
        wave: WaveArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the cross-ambiguity of two frames over delays 0..M and the N
    /// centred Doppler bins as CSV (k, l, re, im).
    Ambiguity {
        #[command(flatten)]
        wave: WaveArgs,
        /// Reference waveform; defaults to --kind (self-ambiguity).
        #[arg(long, value_enum)]
        against: Option<Kind>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check whether a delay-Doppler box crystallizes against a waveform's
    /// self-ambiguity support.
    Crystallize {
        #[command(flatten)]
        wave: WaveArgs,
        /// Box as k_min,k_max,l_min,l_max.
        #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true, default_value = "0,7,-4,4")]
        bounds: Vec<i64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// One noisy frame of a scene through every system; writes energy
    /// heatmaps and the detected peaks.
    Heatmap {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scene JSON; defaults to the four-target scene.
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
        snr_db: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo detection and estimation run; writes records, ROC, AUC
    /// and RMSE CSVs.
    Montecarlo {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the oracle equivalence checks.
    Selftest,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Pulsone,
    Spread,
    ZadoffChu,
    PhaseCoded,
    FmcwUp,
    FmcwDown,
}

#[derive(Args)]
struct WaveArgs {
    #[arg(long, value_enum, default_value_t = Kind::Pulsone)]
    kind: Kind,
    #[arg(long, default_value_t = 31)]
    m: usize,
    #[arg(long, default_value_t = 37)]
    n: usize,
    /// Doppler period in Hz; the delay period is its reciprocal.
    #[arg(long, default_value_t = 30e3)]
    doppler_period: f64,
    #[arg(long, default_value_t = 0)]
    k0: usize,
    #[arg(long, default_value_t = 0)]
    l0: usize,
    /// GDAFT coefficients A,B,C.
    #[arg(long, value_delimiter = ',', default_value = "1,1,3")]
    gdaft: Vec<i64>,
    #[arg(long, default_value_t = 101)]
    root: i64,
    #[arg(long, default_value_t = 2)]
    oversample: usize,
}

impl WaveArgs {
    fn params(&self) -> Result<ZakParams> {
        ZakParams::new(self.m, self.n, 1.0 / self.doppler_period, self.doppler_period)
    }

    fn frame(&self, kind: Kind) -> Result<ComplexFrame> {
        let p = self.params()?;
        match kind {
            Kind::Pulsone => pulsone(&p, self.k0, self.l0),
            Kind::Spread => {
                if self.gdaft.len() != 3 {
                    return Err(Error::Config(format!("--gdaft takes 3 values, got {}", self.gdaft.len())));
                }
                let g = GdaftParams::new(self.gdaft[0], self.gdaft[1], self.gdaft[2], p.frame_len())?;
                spread_carrier(&p, &g, self.k0, self.l0)
            }
            Kind::ZadoffChu => {
                let mut z = zadoff_chu(p.frame_len(), self.root)?;
                z.sample_rate = p.bandwidth();
                Ok(z)
            }
            Kind::PhaseCoded => phase_coded_frame(&p, &zadoff_chu(p.frame_len(), self.root)?, self.oversample),
            Kind::FmcwUp => Ok(fmcw_frame(&p, self.oversample)?.0),
            Kind::FmcwDown => Ok(fmcw_frame(&p, self.oversample)?.1),
        }
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_json_file(p),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Waveform { wave, out } => {
            let frame = wave.frame(wave.kind)?;
            let mut w = sink(&out)?;
            writeln!(w, "n,re,im")?;
            for (n, v) in frame.samples.iter().enumerate() {
                writeln!(w, "{n},{},{}", v.re, v.im)?;
            }
            w.flush()?;
        }
        Command::Ambiguity { wave, against, out } => {
            let p = wave.params()?;
            let y = wave.frame(wave.kind)?;
            let x = wave.frame(against.unwrap_or(wave.kind))?;
            let s = FastAmbiguity::new(y.len()).fundamental(&p, &y, &x)?;
            let mut w = sink(&out)?;
            writeln!(w, "k,l,re,im")?;
            for (k, l, v) in s.cells() {
                writeln!(w, "{k},{l},{},{}", v.re, v.im)?;
            }
            w.flush()?;
        }
        Command::Crystallize { wave, bounds, tol } => {
            if bounds.len() != 4 {
                return Err(Error::Config(format!("--box takes 4 values, got {}", bounds.len())));
            }
            let support_box = SupportBox::new(bounds[0], bounds[1], bounds[2], bounds[3])?;
            let support = self_ambiguity_support(&wave.frame(wave.kind)?, tol)?;
            let c = crystallization_check(&support, &support_box);
            println!("support points: {}", support.len());
            match c.violation {
                None => println!("crystallization holds"),
                Some((a, b)) => println!("crystallization fails: boxes at {a:?} and {b:?} overlap"),
            }
            return Ok(c.holds);
        }
        Command::Heatmap { config, scene, snr_db, seed, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let scene = match scene {
                Some(path) => serde_json::from_str::<SceneSpec>(&std::fs::read_to_string(path)?)?,
                None => four_target_scene(&cfg.params),
            };
            let maps = heatmap_scenario(&cfg, &scene, snr_db)?;
            let dir = out.unwrap_or(cfg.output_dir);
            write_heatmaps(&dir, &maps)?;
            for m in &maps {
                let t = m.tally;
                println!(
                    "{}: {}/{} targets found, {} true peaks, {} false peaks, {} missed",
                    m.system.label(),
                    t.targets_found,
                    t.targets,
                    t.true_peaks,
                    t.false_peaks,
                    t.missed
                );
            }
        }
        Command::Montecarlo { config, seed, trials, out, threads } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if threads.is_some() {
                cfg.threads = threads;
            }
            cfg.validate()?;
            let records = run_monte_carlo(&cfg)?;
            write_run_outputs(&cfg.output_dir, &records, &cfg.params)?;
            println!(
                "{}/{}: {} records, pooled AUC {:.4}",
                cfg.system.label(),
                cfg.polarization.label(),
                records.len(),
                roc_curve(&records)?.auc
            );
            for r in rmse_curves(&records, &cfg.params) {
                let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3}"));
                println!(
                    "  {} dB: delay RMSE {}, Doppler RMSE {}, miss rate {:.3}",
                    r.snr_db,
                    fmt(r.delay_rmse),
                    fmt(r.doppler_rmse),
                    r.miss_rate
                );
            }
        }
        Command::Selftest => {
            let checks = self_test()?;
            for c in &checks {
                println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Trial { source, .. } = &e {
                eprintln!("  caused by: {source}");
            }
            ExitCode::from(2)
        }
    }
}
