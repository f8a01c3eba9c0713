use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mplab::channels::{Axis, ChannelSpec, Convention};
use mplab::decoder::{
    channel_distance, check_bound_sandwich, optimize_fe_svd, AncillaDim, CftCode, NoisyCode, SvdOptions,
};
use mplab::harness::{self, num, opt, ExperimentConfig, Table, Tolerances};
use mplab::ising::{build_hamiltonian, lowest_eigenstates_with, Boundary, IsingModel, Solver};
use mplab::qcore::{set_memory_cap, write_state_file, Pauli, StateRecord, StateVector};
use mplab::renyi::{correlator_curve, renyi_negativity, Method, RenyiEvaluator};
use mplab::shadows::{
    estimate_negativity3, estimate_p3, estimate_purity, estimate_renyi2_translated, read_dataset, sample_snapshots,
    write_dataset, BasisScheme, DatasetFormat, Engine,
};
use mplab::variational::{
    optimize, optimize_warmstart, random_params, AdamOptions, FidelityEngine, GradientMode, LadderCircuit,
};
use mplab::{Error, Result};

#[derive(Parser)]
#[command(name = "mplab", version, about = "Mixed-state phases of the noisy critical Ising chain")]
struct Cli {
    /// Seed for every random stream; overrides config seeds for `run`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Memory cap for dense allocations, e.g. 2G or 512M.
    #[arg(long, global = true, value_parser = parse_bytes)]
    mem_cap: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ising Hamiltonian spectra.
    #[command(subcommand)]
    Ising(IsingCmd),
    /// Exact Rényi correlators and negativities.
    #[command(subcommand)]
    Renyi(RenyiCmd),
    /// Simulated randomized measurements and their estimators.
    #[command(subcommand)]
    Shadow(ShadowCmd),
    /// Entanglement-fidelity decoders.
    #[command(subcommand)]
    Decode(DecodeCmd),
    /// Channel-distance bounds around the SVD-optimal fidelity.
    Bounds(BoundsArgs),
    /// Runs an experiment config and writes its artifacts.
    Run(RunArgs),
    /// Compares an artifact CSV against a reference table.
    Compare(CompareArgs),
}

#[derive(Args, Clone)]
struct ChannelArgs {
    #[arg(long = "L")]
    l: usize,
    #[arg(long, default_value = "z")]
    channel: Axis,
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    #[arg(long, default_value = "half")]
    convention: Convention,
}

impl ChannelArgs {
    fn spec(&self) -> Result<ChannelSpec> {
        ChannelSpec::new(self.channel, self.p, self.convention)
    }
}

#[derive(Subcommand)]
enum IsingCmd {
    /// Lowest eigenpairs; energies to stdout, states to `--out`.
    Spectrum {
        #[arg(long = "L")]
        l: usize,
        #[arg(long, default_value = "periodic")]
        boundary: Boundary,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value = "auto", value_parser = parse_solver)]
        solver: Solver,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RenyiCmd {
    /// Correlator curve `C⁽ⁿ⁾(l)` for `l = 1..L/2` in the noisy ground state.
    Curve {
        #[command(flatten)]
        ch: ChannelArgs,
        #[arg(long, default_value = "xx")]
        obs: String,
        #[arg(long, default_value_t = 2)]
        n: u32,
        /// Correlator at base site 0 only.
        #[arg(long)]
        no_average: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Partial-transpose moments and Rényi negativity for a partition.
    Negativity {
        #[command(flatten)]
        ch: ChannelArgs,
        /// Site indices of the transposed part (default: left half).
        #[arg(long, value_delimiter = ',')]
        part: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ShadowCmd {
    /// Samples `M` snapshots of the noisy ground state.
    Simulate {
        #[command(flatten)]
        ch: ChannelArgs,
        #[arg(long = "M", default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value = "uniform")]
        scheme: BasisScheme,
        /// `.jsonl` for JSON lines, anything else for the packed format.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimates a quantity from a snapshot file.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        quantity: Quantity,
        /// Separations for `renyi2-*` (default: 1..L/2).
        #[arg(long, value_delimiter = ',')]
        l: Vec<usize>,
        /// Transposed sites for `p3` and `negativity3` (default: left half).
        #[arg(long, value_delimiter = ',')]
        part: Vec<usize>,
        /// Report delete-one jackknife errors.
        #[arg(long)]
        jackknife: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Quantity {
    #[value(name = "renyi2-xx")]
    Renyi2Xx,
    #[value(name = "renyi2-zz")]
    Renyi2Zz,
    Purity,
    P3,
    Negativity3,
}

#[derive(Subcommand)]
enum DecodeCmd {
    /// Alternating-SVD optimal decoder.
    Svd {
        #[command(flatten)]
        ch: ChannelArgs,
        #[arg(long = "dA", default_value = "auto")]
        d_a: AncillaDim,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long, default_value_t = 50)]
        iters: usize,
        /// Code dimension.
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ladder-circuit variational decoder.
    Var {
        #[command(flatten)]
        ch: ChannelArgs,
        #[arg(long, default_value_t = 1)]
        layers: usize,
        /// Grow the depth one layer at a time, then scan back down.
        #[arg(long)]
        warmstart: bool,
        #[arg(long, default_value_t = 2000)]
        max_steps: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value = "adjoint", value_parser = parse_gradient)]
        gradient: GradientMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    ch: ChannelArgs,
    /// Checks this `F_e` instead of the SVD optimum.
    #[arg(long)]
    fe: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long = "L", value_delimiter = ',')]
    l: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    channel: Vec<Axis>,
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    artifact: PathBuf,
    reference: PathBuf,
    /// `column=tolerance` or `default=tolerance`; repeatable.
    #[arg(long = "tol")]
    tol: Vec<String>,
}

fn parse_bytes(s: &str) -> std::result::Result<u64, String> {
    let t = s.trim();
    let (digits, mult) = match t.chars().last().map(|c| c.to_ascii_uppercase()) {
        Some('K') => (&t[..t.len() - 1], 1u64 << 10),
        Some('M') => (&t[..t.len() - 1], 1 << 20),
        Some('G') => (&t[..t.len() - 1], 1 << 30),
        _ => (t, 1),
    };
    digits.parse::<u64>().map(|v| v * mult).map_err(|e| format!("bad byte count {s:?}: {e}"))
}

fn parse_solver(s: &str) -> std::result::Result<Solver, String> {
    match s.to_ascii_lowercase().as_str() {
        "auto" => Ok(Solver::Auto),
        "dense" => Ok(Solver::Dense),
        "lanczos" => Ok(Solver::Lanczos),
        o => Err(format!("unknown solver {o:?}")),
    }
}

fn parse_gradient(s: &str) -> std::result::Result<GradientMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "adjoint" => Ok(GradientMode::Adjoint),
        "fd" | "finite-difference" => Ok(GradientMode::FiniteDifference),
        o => Err(format!("unknown gradient mode {o:?}")),
    }
}

fn pauli(c: char) -> Result<Pauli> {
    match c.to_ascii_uppercase() {
        'I' => Ok(Pauli::I),
        'X' => Ok(Pauli::X),
        'Y' => Ok(Pauli::Y),
        'Z' => Ok(Pauli::Z),
        o => Err(Error::Argument(format!("unknown Pauli {o:?}"))),
    }
}

fn emit(t: &Table, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => t.write(p),
        None => {
            std::io::stdout().write_all(t.to_csv_string()?.as_bytes())?;
            Ok(())
        }
    }
}

fn ground_state(l: usize) -> Result<StateVector> {
    Ok(mplab::ising::ising_lowest(l, Boundary::Periodic, 1)?.states.remove(0))
}

fn left_half(part: Vec<usize>, l: usize) -> Vec<usize> {
    if part.is_empty() {
        (0..l / 2).collect()
    } else {
        part
    }
}

fn ising(cmd: IsingCmd) -> Result<bool> {
    let IsingCmd::Spectrum { l, boundary, k, solver, out } = cmd;
    let h = build_hamiltonian(&IsingModel::new(l, boundary)?)?;
    let spec = lowest_eigenstates_with(&h, k, solver)?;
    let mut t = Table::new(["L", "boundary", "k", "energy"]);
    for (i, e) in spec.energies.iter().enumerate() {
        t.push(vec![l.to_string(), boundary.to_string(), i.to_string(), num(*e)]);
    }
    if let Some(p) = out {
        let recs: Vec<StateRecord> = spec.states.iter().map(StateRecord::from).collect();
        write_state_file(&p, &recs)?;
    }
    emit(&t, None)?;
    Ok(true)
}

fn renyi(cmd: RenyiCmd) -> Result<bool> {
    match cmd {
        RenyiCmd::Curve { ch, obs, n, no_average, out } => {
            let letters: Vec<char> = obs.chars().collect();
            let [a, b] = letters[..] else {
                return Err(Error::Argument(format!("observable {obs:?} must name two Paulis")));
            };
            let method = if n <= 2 { Method::Doubled } else { Method::Dense };
            let ev = RenyiEvaluator::new(&ground_state(ch.l)?, &ch.spec()?, n, method)?;
            let curve = correlator_curve(&ev, pauli(a)?, pauli(b)?, !no_average)?;
            let mut t = Table::new(["l", "chord", "value", "method", "L", "axis", "p", "convention", "n", "obs"]);
            for pt in curve {
                t.push(vec![
                    pt.l.to_string(),
                    num(pt.chord),
                    num(pt.value),
                    pt.method.to_string(),
                    ch.l.to_string(),
                    ch.channel.to_string(),
                    num(ch.p),
                    ch.convention.to_string(),
                    n.to_string(),
                    obs.clone(),
                ]);
            }
            emit(&t, out.as_deref())?;
        }
        RenyiCmd::Negativity { ch, part, n, out } => {
            let psi = ground_state(ch.l)?;
            let rho = mplab::channels::apply_channel_density(&psi.to_density()?, &ch.spec()?)?;
            let part = left_half(part, ch.l);
            let labels: Vec<String> = part.iter().map(|&i| psi.register().labels()[i].clone()).collect();
            let res = renyi_negativity(&rho, &labels, n)?;
            let mut t =
                Table::new(["L", "axis", "p", "convention", "part", "n", "moment", "trace_power", "negativity"]);
            for k in 0..n {
                t.push(vec![
                    ch.l.to_string(),
                    ch.channel.to_string(),
                    num(ch.p),
                    ch.convention.to_string(),
                    labels.join(" "),
                    (k + 1).to_string(),
                    num(res.moments[k]),
                    num(res.powers[k]),
                    if k + 1 == n { opt(res.negativity) } else { String::new() },
                ]);
            }
            emit(&t, out.as_deref())?;
        }
    }
    Ok(true)
}

fn shadow(cmd: ShadowCmd, seed: u64) -> Result<bool> {
    match cmd {
        ShadowCmd::Simulate { ch, m, scheme, out } => {
            let ds = sample_snapshots(&ground_state(ch.l)?, &ch.spec()?, m, seed, scheme)?;
            write_dataset(&ds, &out, DatasetFormat::from_path(&out))?;
        }
        ShadowCmd::Estimate { input, quantity, l, part, jackknife, out } => {
            let ds = read_dataset(&input)?;
            let h = &ds.header;
            let mut t =
                Table::new(["L", "axis", "p", "convention", "scheme", "seed", "M", "quantity", "l", "value", "stderr"]);
            let mut row = |q: &str, l: String, value: f64, stderr: Option<f64>| {
                t.push(vec![
                    h.l.to_string(),
                    h.channel.to_string(),
                    num(h.p),
                    h.convention.to_string(),
                    h.scheme.to_string(),
                    h.seed.to_string(),
                    h.m.to_string(),
                    q.to_string(),
                    l,
                    num(value),
                    if jackknife { opt(stderr) } else { String::new() },
                ]);
            };
            match quantity {
                Quantity::Renyi2Xx | Quantity::Renyi2Zz => {
                    let (o, name) = if matches!(quantity, Quantity::Renyi2Xx) {
                        (Pauli::X, "renyi2-xx")
                    } else {
                        (Pauli::Z, "renyi2-zz")
                    };
                    let ls = if l.is_empty() { (1..=ds.l() / 2).collect() } else { l };
                    for sep in ls {
                        let e = estimate_renyi2_translated(&ds, o, o, sep, Engine::Auto)?;
                        row(name, sep.to_string(), e.value, e.jackknife.map(|j| j.stderr));
                    }
                }
                Quantity::Purity => {
                    let j = estimate_purity(&ds, Engine::Auto)?;
                    row("purity", String::new(), j.estimate, Some(j.stderr));
                }
                Quantity::P3 => {
                    let e = estimate_p3(&ds, &left_half(part, ds.l()))?;
                    row("p3", String::new(), e.value, e.jackknife.map(|j| j.stderr));
                }
                Quantity::Negativity3 => {
                    let e = estimate_negativity3(&ds, &left_half(part, ds.l()))?;
                    row("negativity3", String::new(), e.value, e.jackknife.map(|j| j.stderr));
                }
            }
            emit(&t, out.as_deref())?;
        }
    }
    Ok(true)
}

fn decode(cmd: DecodeCmd, seed: u64) -> Result<bool> {
    match cmd {
        DecodeCmd::Svd { ch, d_a, restarts, iters, d, out } => {
            let spec = ch.spec()?;
            let nc = NoisyCode::new(&CftCode::ising(ch.l, Boundary::Periodic, d)?, &spec)?;
            let opts = SvdOptions { d_a, restarts, max_iters: iters, seed, ..SvdOptions::default() };
            let st = optimize_fe_svd(&nc.rho, &nc.target, nc.n_reference, &opts)?;
            let dist = channel_distance(&nc.target, nc.n_reference, &spec)?;
            let rep = check_bound_sandwich(st.fe, dist.d_rho)?;
            let mut t = Table::new([
                "L",
                "axis",
                "p",
                "convention",
                "F_e",
                "d_rho",
                "lower_ok",
                "upper_ok",
                "iters",
                "dA",
                "seed",
            ]);
            t.push(vec![
                ch.l.to_string(),
                ch.channel.to_string(),
                num(ch.p),
                ch.convention.to_string(),
                num(st.fe),
                num(dist.d_rho),
                rep.lower_ok.to_string(),
                rep.upper_ok.to_string(),
                st.iterations().to_string(),
                st.d_a.to_string(),
                seed.to_string(),
            ]);
            emit(&t, out.as_deref())?;
        }
        DecodeCmd::Var { ch, layers, warmstart, max_steps, lr, gradient, out } => {
            let nc = NoisyCode::ising(ch.l, &ch.spec()?)?;
            let hyper = AdamOptions { max_steps, lr, gradient, ..AdamOptions::default() };
            let mut t = Table::new(["L", "axis", "p", "tau", "Fe_best", "steps", "wallclock_s", "convention", "seed"]);
            let mut row = |tau: usize, fe: f64, steps: usize, secs: f64| {
                t.push(vec![
                    ch.l.to_string(),
                    ch.channel.to_string(),
                    num(ch.p),
                    tau.to_string(),
                    num(fe),
                    steps.to_string(),
                    format!("{secs:.3}"),
                    ch.convention.to_string(),
                    seed.to_string(),
                ]);
            };
            if warmstart {
                let engine = FidelityEngine::for_code(&LadderCircuit::ladder(ch.l, 1)?, &nc)?;
                for d in optimize_warmstart(&engine, layers, &hyper, seed)?.depths {
                    row(d.tau, d.fe_best, d.steps, d.wallclock_s);
                }
            } else {
                let circuit = LadderCircuit::ladder(ch.l, layers)?;
                let engine = FidelityEngine::for_code(&circuit, &nc)?;
                let run = optimize(&engine, &random_params(circuit.n_params(), seed), &hyper, seed)?;
                let rec = run.schedule.last().expect("one schedule entry");
                row(layers, run.best_fe, rec.steps, rec.wallclock_s);
            }
            emit(&t, out.as_deref())?;
        }
    }
    Ok(true)
}

fn bounds(a: BoundsArgs, seed: u64) -> Result<bool> {
    let spec = a.ch.spec()?;
    let nc = NoisyCode::ising(a.ch.l, &spec)?;
    let fe = match a.fe {
        Some(fe) => fe,
        None => optimize_fe_svd(&nc.rho, &nc.target, nc.n_reference, &SvdOptions { seed, ..SvdOptions::default() })?.fe,
    };
    let dist = channel_distance(&nc.target, nc.n_reference, &spec)?;
    let rep = check_bound_sandwich(fe, dist.d_rho)?;
    let mut t = Table::new([
        "L",
        "axis",
        "p",
        "convention",
        "F_e",
        "d_rho",
        "half_d_rho",
        "middle",
        "lower_ok",
        "upper_ok",
        "lower_gap",
        "upper_gap",
    ]);
    t.push(vec![
        a.ch.l.to_string(),
        a.ch.channel.to_string(),
        num(a.ch.p),
        a.ch.convention.to_string(),
        num(fe),
        num(dist.d_rho),
        num(dist.d_rho / 2.0),
        num(rep.middle),
        rep.lower_ok.to_string(),
        rep.upper_ok.to_string(),
        num(rep.lower_gap),
        num(rep.upper_gap),
    ]);
    emit(&t, a.out.as_deref())?;
    Ok(rep.holds())
}

fn run(a: RunArgs, seed: Option<u64>) -> Result<bool> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    if a.out_dir.is_some() {
        cfg.output_dir = a.out_dir;
    }
    if !a.l.is_empty() {
        cfg.grid.l = a.l;
    }
    if !a.channel.is_empty() {
        cfg.grid.axes = a.channel;
    }
    if !a.p.is_empty() {
        cfg.grid.p = a.p;
        cfg.grid.scaled.clear();
    }
    cfg.settings.tau = a.tau.or(cfg.settings.tau);
    cfg.settings.shots = a.shots.or(cfg.settings.shots);
    cfg.settings.max_steps = a.max_steps.or(cfg.settings.max_steps);
    let s = harness::run(&cfg)?;
    for p in &s.artifacts {
        println!("{}", p.display());
    }
    for c in s.failed_checks() {
        eprintln!("check failed: {}: {}", c.name, c.detail);
    }
    for e in &s.errors {
        eprintln!("cell failed: L={} axis={} p={} seed={}: {}", e.cell.l, e.cell.axis, e.cell.p, e.cell.seed, e.error);
    }
    Ok(s.success())
}

fn compare(a: CompareArgs) -> Result<bool> {
    let mut tol = Tolerances::default();
    for t in &a.tol {
        tol.set(t)?;
    }
    let rep = harness::compare(&Table::read(&a.artifact)?, &Table::read(&a.reference)?, &tol)?;
    for d in rep.failures() {
        println!("FAIL {d}");
    }
    println!("{}", if rep.pass { "PASS" } else { "FAIL" });
    Ok(rep.pass)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    if let Some(b) = cli.mem_cap {
        set_memory_cap(b);
    }
    let seed = cli.seed.unwrap_or(0);
    let res = match cli.cmd {
        Cmd::Ising(c) => ising(c),
        Cmd::Renyi(c) => renyi(c),
        Cmd::Shadow(c) => shadow(c, seed),
        Cmd::Decode(c) => decode(c, seed),
        Cmd::Bounds(a) => bounds(a, seed),
        Cmd::Run(a) => run(a, cli.seed),
        Cmd::Compare(a) => compare(a),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Argument(_) | Error::Schema(_) | Error::Format(_) => 2,
                Error::Resource(_) => 3,
                _ => 1,
            })
        }
    }
}
