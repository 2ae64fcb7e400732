use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Arg, ArgAction, ArgMatches, Command};
use serde_json::json;

use degraded_polar::config::{flag_value, key_info, Kind, OutputFormat, RunConfig, KEYS};
use degraded_polar::experiments::{
    end_to_end_run, estimate_bler, estimate_erasure_prob, rate_sweep, tradeoff_ratio, Budget,
};
use degraded_polar::polar::PolarCode;
use degraded_polar::report::{bler_csv, end_to_end_csv, erasure_csv, g6, rate_sweep_csv, tradeoff_csv};
use degraded_polar::Error;

const OUTPUT_KEYS: &[&str] = &["output.path", "output.format"];
const RUN_KEYS: &[&str] = &["experiment.seed", "experiment.workers"];
const INNER_KEYS: &[&str] = &[
    "inner.constraint_length",
    "inner.polynomials",
    "inner.crc_polynomial",
    "inner.crc_init",
    "inner.interleaver_rows",
    "inner.interleaver_cols",
];
const CHANNEL_KEYS: &[&str] = &["channel.carrier_hz", "channel.symbol_rate", "channel.snr_db"];

struct Subcommand {
    name: &'static str,
    about: &'static str,
    keys: &'static [&'static [&'static str]],
}

const SUBCOMMANDS: &[Subcommand] = &[
    Subcommand {
        name: "construct",
        about: "Build a polar code for a BEC and print its information set",
        keys: &[&["polar.n", "polar.k", "polar.epsilon"], RUN_KEYS, OUTPUT_KEYS],
    },
    Subcommand {
        name: "bler",
        about: "Estimate the block error rate of one polar code",
        keys: &[
            &["polar.n", "polar.k", "polar.epsilon", "polar.exact", "experiment.trials"],
            RUN_KEYS,
            OUTPUT_KEYS,
        ],
    },
    Subcommand {
        name: "rate-sweep",
        about: "Largest polar rate meeting each target BLER over a grid of N and epsilon",
        keys: &[
            &["polar.n_list", "polar.epsilon_grid", "experiment.targets", "experiment.trials"],
            RUN_KEYS,
            OUTPUT_KEYS,
        ],
    },
    Subcommand {
        name: "erasure",
        about: "Erasure probability of the fading link behind the inner code",
        keys: &[
            &["inner.rates", "channel.speeds_kmh", "experiment.blocks"],
            INNER_KEYS,
            CHANNEL_KEYS,
            RUN_KEYS,
            OUTPUT_KEYS,
        ],
    },
    Subcommand {
        name: "tradeoff",
        about: "Inner-rate gain per unit of polar-rate loss between operating points",
        keys: &[&["tradeoff.points"], RUN_KEYS, OUTPUT_KEYS],
    },
    Subcommand {
        name: "end-to-end",
        about: "Erasure probability, polar rate and trade-off for every inner rate",
        keys: &[
            &[
                "channel.speed_kmh",
                "polar.n",
                "experiment.target_bler",
                "experiment.trials",
                "experiment.blocks",
                "experiment.epsilon_source",
                "experiment.epsilons",
            ],
            INNER_KEYS,
            CHANNEL_KEYS,
            RUN_KEYS,
            OUTPUT_KEYS,
        ],
    },
];

fn command() -> Command {
    let mut cmd = Command::new("degraded-polar")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Polar codes over erasure channels degraded from a Rayleigh fading link")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_name("FILE")
                .help("JSON config file; command-line flags override it"),
        );
    for sub in SUBCOMMANDS {
        let mut sc = Command::new(sub.name).about(sub.about);
        for key in sub.keys.iter().flat_map(|g| g.iter()) {
            let info = key_info(key).expect("known key");
            let help = format!("{} [{}] [default: {}]", info.help, info.key, RunConfig::display_default(key));
            let arg = Arg::new(info.key).long(info.flag).help(help);
            sc = sc.arg(match info.kind {
                Kind::Bool => arg.action(ArgAction::SetTrue),
                _ => arg.value_name("VALUE").allow_hyphen_values(true),
            });
        }
        cmd = cmd.subcommand(sc);
    }
    cmd
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Run(e) if e.is_capacity() => 3,
            Failure::Run(e) => match root(e) {
                Error::InvalidProbability { .. }
                | Error::InvalidParameter(_)
                | Error::LengthMismatch { .. }
                | Error::Sizing(_) => 2,
                _ => 1,
            },
            Failure::Io(_) => 1,
        }
    }
}

fn root(e: &Error) -> &Error {
    match e {
        Error::Stage { source, .. } => root(source),
        other => other,
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Io(m) => f.write_str(m),
            Failure::Run(e) => write!(f, "{e}"),
        }
    }
}

fn resolve(matches: &ArgMatches, sub: &ArgMatches) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    let config_path = sub
        .get_one::<String>("config")
        .or_else(|| matches.get_one::<String>("config"));
    if let Some(path) = config_path {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
        cfg.apply_json_text(&text)?;
    }
    for info in KEYS {
        let present = sub.try_contains_id(info.key).unwrap_or(false);
        if !present {
            continue;
        }
        let value = match info.kind {
            Kind::Bool => {
                if !sub.get_flag(info.key) {
                    continue;
                }
                json!(true)
            }
            _ => match sub.get_one::<String>(info.key) {
                Some(text) => flag_value(info, text)?,
                None => continue,
            },
        };
        cfg.apply(info.key, &value)?;
    }
    Ok(cfg)
}

fn seed(cfg: &RunConfig) -> u64 {
    cfg.seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn pretty(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn construct(cfg: &RunConfig) -> Result<String, Failure> {
    let code = PolarCode::new(cfg.n, cfg.epsilon, cfg.resolved_k())?;
    if cfg.format == OutputFormat::Json {
        let mut doc = serde_json::to_value(code.to_document()).expect("serializable");
        doc["union_bound_bler"] = json!(code.union_bound_bler());
        return Ok(pretty(&doc));
    }
    let one_based = |v: Vec<usize>| v.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" ");
    let frozen: Vec<usize> = (0..code.len()).filter(|&i| !code.is_info(i)).collect();
    let z: Vec<String> = code.bhattacharyya().iter().map(|&z| g6(z)).collect();
    Ok(format!(
        "n = {}, N = {}, K = {}, rate = {}, epsilon = {}\n\
         information set: {}\n\
         frozen set: {}\n\
         bhattacharyya: {}\n\
         union bound on BLER: {}\n",
        code.exponent(),
        code.len(),
        code.dimension(),
        g6(code.rate()),
        g6(cfg.epsilon),
        one_based(code.info_set().to_vec()),
        one_based(frozen),
        z.join(" "),
        g6(code.union_bound_bler()),
    ))
}

fn bler(cfg: &RunConfig) -> Result<String, Failure> {
    let k = cfg.resolved_k();
    let code = PolarCode::new(cfg.n, cfg.epsilon, k)?;
    // Fail on the enumeration limit before spending time on simulation.
    let exact = if cfg.exact { Some(code.exact_bler_bec(cfg.epsilon)?) } else { None };
    let seed = seed(cfg);
    let est = estimate_bler(cfg.n, k, cfg.epsilon, cfg.trials, seed)?;
    Ok(match cfg.format {
        OutputFormat::Csv => bler_csv(cfg.n, k, cfg.epsilon, &est, exact, seed),
        OutputFormat::Json => pretty(&json!({
            "n": cfg.n,
            "N": code.len(),
            "K": k,
            "epsilon": cfg.epsilon,
            "estimate": est,
            "exact_bler": exact,
            "union_bound_bler": code.union_bound_bler(),
            "seed": seed,
        })),
    })
}

fn sweep(cfg: &RunConfig) -> Result<String, Failure> {
    let seed = seed(cfg);
    let rows = rate_sweep(&cfg.n_list, &cfg.epsilon_grid, &cfg.targets, cfg.trials, seed)?;
    Ok(match cfg.format {
        OutputFormat::Csv => rate_sweep_csv(&rows),
        OutputFormat::Json => pretty(&rows),
    })
}

fn erasure(cfg: &RunConfig) -> Result<String, Failure> {
    let seed = seed(cfg);
    let mut rows = Vec::new();
    for &speed in &cfg.speeds_kmh {
        for &rate in &cfg.inner_rates {
            let channel = degraded_polar::channel::FadingChannelSpec { speed_kmh: speed, ..cfg.channel };
            rows.push(estimate_erasure_prob(&cfg.inner.with_rate(rate), &channel, cfg.blocks, seed)?);
        }
    }
    Ok(match cfg.format {
        OutputFormat::Csv => erasure_csv(&rows),
        OutputFormat::Json => pretty(&rows),
    })
}

fn tradeoff(cfg: &RunConfig) -> Result<String, Failure> {
    let rows = tradeoff_ratio(&cfg.tradeoff_points)?;
    Ok(match cfg.format {
        OutputFormat::Csv => tradeoff_csv(&rows),
        OutputFormat::Json => pretty(&rows),
    })
}

fn end_to_end(cfg: &RunConfig) -> Result<String, Failure> {
    let source = cfg.epsilon_source()?;
    let seed = seed(cfg);
    let budget = Budget { trials: cfg.trials, blocks: cfg.blocks };
    let report = end_to_end_run(&cfg.inner, &cfg.channel, cfg.n, cfg.target_bler, budget, &source, seed)?;
    Ok(match cfg.format {
        OutputFormat::Csv => end_to_end_csv(&report),
        OutputFormat::Json => pretty(&report),
    })
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), Failure> {
    if cfg.output_path == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| Failure::Io(format!("stdout: {e}")))
    } else {
        std::fs::write(&cfg.output_path, text).map_err(|e| Failure::Io(format!("{}: {e}", cfg.output_path)))?;
        eprintln!("wrote {}", cfg.output_path);
        Ok(())
    }
}

fn run() -> Result<(), Failure> {
    let matches = command().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let cfg = resolve(&matches, sub)?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Failure::Io(format!("thread pool: {e}")))?;
    let text = pool.install(|| match name {
        "construct" => construct(&cfg),
        "bler" => bler(&cfg),
        "rate-sweep" => sweep(&cfg),
        "erasure" => erasure(&cfg),
        "tradeoff" => tradeoff(&cfg),
        "end-to-end" => end_to_end(&cfg),
        other => unreachable!("unknown subcommand {other}"),
    })?;
    emit(&cfg, &text)?;
    eprintln!("elapsed: {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
