mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use mbrd::envs::{make_env, Domain, EnvConfig};
use mbrd::funcapprox::{NetSpec, PolicyNet};
use mbrd::harness::{
    aggregate, eval_seeds, evaluate, final_table, final_table_csv, parse_kv, read_params, run, run_pool, seeded,
    summary_csv, sweep_beta, sweep_episode_length, Curve, Method, RunConfig, RunRecord, Scale,
};

#[derive(Parser, Debug)]
#[command(name = "mbrd", version, about = "Motivation-based reward design experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one configuration.
    Train {
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Every method on every grid-world domain over several seeds.
    Grid {
        #[command(flatten)]
        opts: RunOpts,
        /// Comma-separated domains.
        #[arg(long, default_value = "foraging,hungry-thirsty,fight-monster")]
        domains: String,
        /// Comma-separated methods.
        #[arg(long, default_value = "mbrd,ppo,cb,pbrs")]
        methods: String,
        #[command(flatten)]
        pool: PoolOpts,
    },
    /// MBRD over a list of regularizer strengths.
    SweepBeta {
        #[command(flatten)]
        opts: RunOpts,
        /// Comma-separated beta values.
        #[arg(long, default_value = "0.01,0.0001,0")]
        betas: String,
        #[command(flatten)]
        pool: PoolOpts,
    },
    /// Several methods over maximum episode lengths on delayed Foraging.
    SweepEplen {
        #[command(flatten)]
        opts: RunOpts,
        /// Comma-separated episode lengths.
        #[arg(long, default_value = "50,100,200")]
        lengths: String,
        /// Comma-separated methods.
        #[arg(long, default_value = "mbrd,ppo,cb,pbrs")]
        methods: String,
        #[command(flatten)]
        pool: PoolOpts,
    },
    /// Greedy evaluation of a saved run directory.
    Eval {
        /// Directory holding config.txt and policy.txt.
        run_dir: PathBuf,
        #[arg(long, default_value_t = 20)]
        episodes: usize,
        /// Seed for the evaluation layouts; defaults to the run seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render eval.csv and updates.csv files below a directory to SVG.
    Plot {
        dir: PathBuf,
        /// Output directory; defaults to <dir>/plots.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List domains with their observation size, actions and event channels.
    ListEnvs,
}

#[derive(Args, Debug)]
struct RunOpts {
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Seed count (`5`) or explicit list (`0,3,7`).
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// z-norm or weight-anchor.
    #[arg(long)]
    reg_mode: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    max_ep_len: Option<usize>,
    /// paper or desk (total steps divided by 4).
    #[arg(long, default_value = "paper")]
    scale: String,
    /// Output root.
    #[arg(long, env = "MBRD_OUT", default_value = "out")]
    out: PathBuf,
    /// Flat key=value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra key=value override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Debug)]
struct PoolOpts {
    /// Concurrent runs; defaults to the number of CPUs.
    #[arg(long)]
    workers: Option<usize>,
}

impl PoolOpts {
    fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

type CliResult<T> = Result<T, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn split_list<T: std::str::FromStr>(what: &str, s: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|_| format!("bad {what} `{x}`")))
        .collect()
}

fn parse_methods(s: &str) -> CliResult<Vec<Method>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<Method>().map_err(err))
        .collect()
}

fn parse_domains(s: &str) -> CliResult<Vec<Domain>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<Domain>().map_err(err))
        .collect()
}

impl RunOpts {
    /// Defaults for (domain, method), then the config file, then the scale,
    /// then flags.
    fn config(&self) -> CliResult<RunConfig> {
        self.config_for(None, None)
    }

    /// Like `config`, with domain and method forced.
    fn config_for(&self, domain: Option<Domain>, method: Option<Method>) -> CliResult<RunConfig> {
        let mut pairs = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                parse_kv(&text).map_err(err)?
            }
            None => Vec::new(),
        };
        let mut flags: Vec<(String, String)> = Vec::new();
        let mut flag = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                flags.push((k.to_string(), v));
            }
        };
        flag("domain", self.domain.clone());
        flag("method", self.method.clone());
        flag("seed", self.seed.map(|x| x.to_string()));
        flag("total_steps", self.steps.map(|x| x.to_string()));
        flag("beta", self.beta.map(|x| x.to_string()));
        flag("reg_mode", self.reg_mode.clone());
        flag("gamma", self.gamma.map(|x| x.to_string()));
        flag("max_episode_len", self.max_ep_len.map(|x| x.to_string()));
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got `{s}`"))?;
            flags.push((k.trim().to_string(), v.trim().to_string()));
        }
        if let Some(d) = domain {
            flags.push(("domain".into(), d.to_string()));
        }
        if let Some(m) = method {
            flags.push(("method".into(), m.to_string()));
        }

        let last = |k: &str| {
            pairs
                .iter()
                .chain(flags.iter())
                .rev()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.clone())
        };
        let domain: Domain = last("domain").map_or(Ok(Domain::Foraging), |v| v.parse()).map_err(err)?;
        let method: Method = last("method").map_or(Ok(Method::Mbrd), |v| v.parse()).map_err(err)?;
        let scale: Scale = self.scale.parse().map_err(err)?;

        let mut cfg = RunConfig::new(domain, method);
        for (k, v) in pairs.drain(..) {
            cfg.set(&k, &v).map_err(err)?;
        }
        cfg = cfg.with_scale(scale);
        for (k, v) in &flags {
            cfg.set(k, v).map_err(err)?;
        }
        cfg.out_dir = Some(self.out.clone());
        cfg.validate().map_err(err)?;
        Ok(cfg)
    }

    fn seed_list(&self, base: &RunConfig) -> CliResult<Vec<u64>> {
        match &self.seeds {
            None => Ok((0..5).collect()),
            Some(s) if !s.contains(',') => {
                let n: u64 = s.trim().parse().map_err(|_| format!("bad --seeds `{s}`"))?;
                if n == 0 {
                    return Err("--seeds must be positive".into());
                }
                Ok((base.seed..base.seed + n).collect())
            }
            Some(s) => split_list("seed", s),
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
    }
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn report(record: &RunRecord) {
    let c = &record.config;
    print!("{}/{}/seed {}: final return {:.4}", c.domain, c.method, c.seed, record.final_return());
    if let Some(w) = record.final_weights() {
        let parts: Vec<String> = record
            .event_names
            .iter()
            .zip(w)
            .map(|(n, x)| format!("{n}={x:.4}"))
            .collect();
        print!(", w [{}]", parts.join(" "));
    }
    if let Some(msg) = &record.aborted {
        print!(", aborted: {msg}");
    }
    println!();
}

/// Prints every record and fails if any run aborted.
fn finish_records(records: &[RunRecord]) -> CliResult<()> {
    records.iter().for_each(report);
    let aborted = records.iter().filter(|r| r.aborted.is_some()).count();
    if aborted > 0 {
        return Err(format!("{aborted} run(s) aborted"));
    }
    Ok(())
}

fn train(opts: &RunOpts) -> CliResult<()> {
    let cfg = opts.config()?;
    info!("writing to {}", cfg.run_dir().expect("out dir").display());
    let record = run(&cfg).map_err(err)?;
    finish_records(std::slice::from_ref(&record))
}

fn grid(opts: &RunOpts, domains: &str, methods: &str, workers: usize) -> CliResult<()> {
    let base = opts.config()?;
    let seeds = opts.seed_list(&base)?;
    let domains = parse_domains(domains)?;
    let methods = parse_methods(methods)?;
    if domains.is_empty() || methods.is_empty() {
        return Err("grid needs at least one domain and one method".into());
    }
    let mut configs = Vec::new();
    for &d in &domains {
        for &m in &methods {
            configs.extend(seeded(&opts.config_for(Some(d), Some(m))?, &seeds));
        }
    }
    let records = run_pool(&configs, workers)
        .map_err(err)?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let curves: Vec<Curve> = records.iter().map(Curve::from).collect();
    write_file(&opts.out.join("summary.csv"), &summary_csv(&aggregate(&curves)))?;
    let table = final_table(&records, |c| c.domain.to_string());
    write_file(&opts.out.join("final.csv"), &final_table_csv("domain", &table))?;
    print!("{}", final_table_csv("domain", &table));
    finish_records(&records)
}

fn sweep_beta_cmd(opts: &RunOpts, betas: &str, workers: usize) -> CliResult<()> {
    let mut base = opts.config()?;
    base.method = Method::Mbrd;
    let seeds = opts.seed_list(&base)?;
    let betas: Vec<f64> = split_list("beta", betas)?;
    let sweep = sweep_beta(&base, &betas, &seeds, workers).map_err(err)?;
    let csv = final_table_csv("beta", &sweep.table);
    write_file(&opts.out.join("sweep-beta.csv"), &csv)?;
    print!("{csv}");
    finish_records(&sweep.records)
}

fn sweep_eplen_cmd(opts: &RunOpts, lengths: &str, methods: &str, workers: usize) -> CliResult<()> {
    let base = opts.config()?;
    let seeds = opts.seed_list(&base)?;
    let lengths: Vec<usize> = split_list("length", lengths)?;
    let methods = parse_methods(methods)?;
    let sweep = sweep_episode_length(&base, &lengths, &methods, &seeds, workers).map_err(err)?;
    let csv = final_table_csv("max_episode_len", &sweep.table);
    write_file(&opts.out.join("sweep-eplen.csv"), &csv)?;
    print!("{csv}");
    finish_records(&sweep.records)
}

fn eval_cmd(dir: &Path, episodes: usize, seed: Option<u64>) -> CliResult<()> {
    if episodes == 0 {
        return Err("--episodes must be positive".into());
    }
    let cfg_path = dir.join("config.txt");
    let text = fs::read_to_string(&cfg_path).map_err(|e| format!("{}: {e}", cfg_path.display()))?;
    let cfg = RunConfig::from_kv(&text).map_err(err)?;
    let params = read_params(&dir.join("policy.txt")).map_err(err)?;
    let mut env = make_env(cfg.domain, &cfg.env_config());
    let spec = NetSpec::new(env.obs_dim(), cfg.policy_hidden.clone(), env.num_actions()).map_err(err)?;
    let policy = PolicyNet::new(spec).map_err(err)?;
    let seeds = eval_seeds(seed.unwrap_or(cfg.seed), 0, episodes);
    let (mean, std) = evaluate(env.as_mut(), &policy, &params, &seeds).map_err(err)?;
    println!("{} {} seed {}: mean_return {mean} std_return {std} over {episodes} episodes", cfg.domain, cfg.method, cfg.seed);
    Ok(())
}

fn list_envs() {
    println!("domain,obs_dim,actions,events");
    for d in Domain::ALL {
        let env = make_env(d, &EnvConfig::for_domain(d));
        println!("{d},{},{},{}", env.obs_dim(), env.num_actions(), env.event_names().join(" "));
    }
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Train { opts } => train(&opts),
        Command::Grid {
            opts,
            domains,
            methods,
            pool,
        } => grid(&opts, &domains, &methods, pool.workers()),
        Command::SweepBeta { opts, betas, pool } => sweep_beta_cmd(&opts, &betas, pool.workers()),
        Command::SweepEplen {
            opts,
            lengths,
            methods,
            pool,
        } => sweep_eplen_cmd(&opts, &lengths, &methods, pool.workers()),
        Command::Eval { run_dir, episodes, seed } => eval_cmd(&run_dir, episodes, seed),
        Command::Plot { dir, out } => {
            let out = out.unwrap_or_else(|| dir.join("plots"));
            let files = plot::plot_dir(&dir, &out)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::ListEnvs => {
            list_envs();
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
