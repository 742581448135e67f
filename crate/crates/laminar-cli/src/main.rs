//! Command-line front door: config ingestion, orchestration of graph builds,
//! spectral analyses, stability evaluations, simulations and region sweeps,
//! with CSV/SVG artifact emission.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure,
//! 3 property-suite failure.

use clap::{Parser, Subcommand};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use laminar::config::{
    self, GraphConfig, HssConfig, SimulateConfig, SingleGraphConfig, StabilityConfig,
    SweepFileConfig,
};
use laminar::fmt_sig12;
use laminar::graph::{analyze_structure, weighted_adjacency, PolarityWeights};
use laminar::interwoven::interweave;
use laminar::kinetics::{
    classify_sign_structure, linearize, solve_hss, HillCrosstalk, Kinetics, SignClass,
};
use laminar::numerics::eig_general;
use laminar::quotient::{
    lift_eigenvector, position_in_sorted, spectrum_csv, LaminarPartition, LiftingMatrix,
    QuotientAdjacency,
};
use laminar::simulate::{
    classify_pattern, integrate, perturb_hss, snapshot_csv, trajectory_csv, PatternKind,
    Tolerances,
};
use laminar::stability::{
    evaluate_point, log_space, sweep_csv, sweep_regions, SweepConfig, SweepSimulation,
};
use laminar::svg::{render_region_map, render_tissue_snapshot};
use laminar::verify::all_suites;

#[derive(Parser)]
#[command(
    name = "laminar",
    about = "Laminar pattern analysis on polarity-weighted bilayer tissues",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed override for perturbations and randomized suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for artifacts (default: current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweep evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Simulation horizon override.
    #[arg(long = "t-max", global = true)]
    t_max: Option<f64>,
    /// Sweep grid override as ROWSxCOLS, e.g. 60x60.
    #[arg(long, global = true)]
    grid: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Build and validate a bilayer graph; emit its edge CSV and structure report.
    Graph,
    /// Ascending adjacency spectrum CSV with the polarity eigenvalue annotated.
    Spectrum,
    /// Quotient reduction: constants, polarity eigenvalue and lifted eigenvector.
    Quotient,
    /// Homogeneous steady state, intracellular spectrum, transfer derivative and sign class.
    Hss,
    /// Evaluate every analytic pattern condition at one weight point.
    Stability,
    /// Integrate one large-scale (or quotient) simulation; emit trajectory CSV and snapshot SVG.
    Simulate,
    /// Sweep the polarity plane into existence/convergence region maps.
    Sweep,
    /// Run the randomized identity suites and print one line per check.
    Verify,
}

enum CliError {
    Config(String),
    Numerical(String),
    Suite(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Suite(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Suite(m) => m,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn numeric_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

fn verbose() -> bool {
    std::env::var("LAMINAR_LOG").map_or(false, |v| !v.is_empty() && v != "0")
}

macro_rules! vlog {
    ($($arg:tt)*) => {
        if verbose() {
            eprintln!("[laminar] {}", format!($($arg)*));
        }
    };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Graph => cmd_graph(cli),
        Command::Spectrum => cmd_spectrum(cli),
        Command::Quotient => cmd_quotient(cli),
        Command::Hss => cmd_hss(cli),
        Command::Stability => cmd_stability(cli),
        Command::Simulate => cmd_simulate(cli),
        Command::Sweep => cmd_sweep(cli),
        Command::Verify => cmd_verify(cli),
    }
}

fn load_config<T: serde::de::DeserializeOwned>(cli: &Cli) -> Result<T> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("this subcommand requires --config <path>".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    config::parse(&text).map_err(config_err)
}

fn load_config_or_default<T: serde::de::DeserializeOwned + Default>(cli: &Cli) -> Result<T> {
    match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            config::parse(&text).map_err(config_err)
        }
        None => Ok(T::default()),
    }
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", path.display())))?;
    vlog!("wrote {}", path.display());
    Ok(path)
}

fn json_number(v: f64) -> String {
    if v.is_finite() {
        fmt_sig12(v)
    } else {
        "null".to_string()
    }
}

fn json_vector(values: &[f64]) -> String {
    let inner: Vec<String> = values.iter().map(|v| json_number(*v)).collect();
    format!("[{}]", inner.join(","))
}

fn json_matrix(m: &laminar::DenseMatrix) -> String {
    let rows: Vec<String> = (0..m.rows()).map(|i| json_vector(m.row(i))).collect();
    format!("[{}]", rows.join(","))
}

fn cmd_graph(cli: &Cli) -> Result<()> {
    let cfg: GraphConfig = load_config(cli)?;
    let graph = cfg.build().map_err(config_err)?;
    let dir = out_dir(cli)?;
    write_artifact(&dir, "edges.csv", &graph.edges_csv())?;
    let report = analyze_structure(&graph);
    let p = report.degree_profile;
    let bipartition = match &report.bipartition {
        Some((a, b)) => format!(
            "{{\"set1\":{:?},\"set2\":{:?}}}",
            a, b
        ),
        None => "null".to_string(),
    };
    let json = format!(
        "{{\"vertices\":{},\"edges\":{},\"connected\":{},\"bipartite\":{},\"semi_regular\":{},\"degree_profile\":{{\"n1_l1\":{},\"n2_l1\":{},\"n1_l2\":{},\"n2_l2\":{}}},\"bipartition\":{}}}",
        graph.vertex_count(),
        graph.edges().len(),
        report.connected,
        report.bipartite,
        report.semi_regular,
        p.n1_l1,
        p.n2_l1,
        p.n1_l2,
        p.n2_l2,
        bipartition
    );
    write_artifact(&dir, "structure.json", &json)?;
    println!("{json}");
    Ok(())
}

fn single_graph_setup(
    cfg: &SingleGraphConfig,
) -> Result<(laminar::graph::WeightedAdjacency, QuotientAdjacency)> {
    let graph = cfg.graph.build().map_err(config_err)?;
    let weights = PolarityWeights::new(cfg.weights.w1, cfg.weights.w2).map_err(config_err)?;
    let wa = weighted_adjacency(&graph, weights).map_err(numeric_err)?;
    let q = QuotientAdjacency::from_profile(graph.profile(), weights);
    Ok((wa, q))
}

fn cmd_spectrum(cli: &Cli) -> Result<()> {
    let cfg: SingleGraphConfig = load_config(cli)?;
    let (wa, q) = single_graph_setup(&cfg)?;
    let values = wa
        .spectrum()
        .map_err(numeric_err)?
        .real_values()
        .ok_or_else(|| CliError::Numerical("complex spectrum from symmetric matrix".into()))?;
    let csv = spectrum_csv(&values, q.lambda2());
    let dir = out_dir(cli)?;
    write_artifact(&dir, "spectrum.csv", &csv)?;
    let pos = position_in_sorted(&values, q.lambda2()).map_err(numeric_err)?;
    println!(
        "{{\"lambda2\":{},\"index\":{},\"is_min\":{},\"is_max\":{},\"n\":{}}}",
        fmt_sig12(q.lambda2()),
        pos.index,
        pos.is_min,
        pos.is_max,
        values.len()
    );
    Ok(())
}

fn cmd_quotient(cli: &Cli) -> Result<()> {
    let cfg: SingleGraphConfig = load_config(cli)?;
    let (wa, q) = single_graph_setup(&cfg)?;
    let partition = LaminarPartition::from_layers(&wa);
    let constants = laminar::quotient::verify_equitable(&wa, &partition).map_err(numeric_err)?;
    let lifting = LiftingMatrix::from_partition(&partition, wa.graph().vertex_count());
    let lifted = lift_eigenvector(&q, &lifting);
    let residual = lifting.intertwining_residual(&wa, &q);
    let json = format!(
        "{{\"a\":{},\"b\":{},\"lambda2\":{},\"constants\":[[{},{}],[{},{}]],\"quotient_matrix\":{},\"intertwining_residual\":{},\"lifted_eigenvector\":{}}}",
        fmt_sig12(q.a),
        fmt_sig12(q.b),
        fmt_sig12(q.lambda2()),
        fmt_sig12(constants.constants[0][0]),
        fmt_sig12(constants.constants[0][1]),
        fmt_sig12(constants.constants[1][0]),
        fmt_sig12(constants.constants[1][1]),
        json_matrix(&q.matrix()),
        fmt_sig12(residual),
        json_vector(&lifted)
    );
    let dir = out_dir(cli)?;
    write_artifact(&dir, "quotient.json", &json)?;
    println!("{json}");
    Ok(())
}

fn cmd_hss(cli: &Cli) -> Result<()> {
    let cfg: HssConfig = load_config_or_default(cli)?;
    let kin = HillCrosstalk::new(cfg.kinetics).map_err(config_err)?;
    let hss = solve_hss(&kin).map_err(numeric_err)?;
    let lin = linearize(&kin, &hss.x, &hss.u).map_err(numeric_err)?;
    let eig_a = eig_general(&lin.a).map_err(numeric_err)?;
    let sign = match classify_sign_structure(&lin.dt) {
        SignClass::S1 => "S1",
        SignClass::S2 => "S2",
        SignClass::Neither => "neither",
    };
    let eigs: Vec<String> = eig_a
        .values
        .iter()
        .map(|c| format!("[{},{}]", fmt_sig12(c.re), fmt_sig12(c.im)))
        .collect();
    let json = format!(
        "{{\"x\":{},\"u\":{},\"eig_a\":[{}],\"max_real_part\":{},\"dt\":{},\"det_a\":{},\"sign_class\":\"{}\"}}",
        json_vector(&hss.x),
        json_vector(&hss.u),
        eigs.join(","),
        fmt_sig12(eig_a.max_real_part()),
        json_matrix(&lin.dt),
        fmt_sig12(lin.det_a),
        sign
    );
    let dir = out_dir(cli)?;
    write_artifact(&dir, "hss.json", &json)?;
    println!("{json}");
    Ok(())
}

fn cmd_stability(cli: &Cli) -> Result<()> {
    let cfg: StabilityConfig = load_config(cli)?;
    let kin = HillCrosstalk::new(cfg.kinetics).map_err(config_err)?;
    let g1 = cfg.graphs[0].build().map_err(config_err)?;
    let g2 = cfg.graphs[1].build().map_err(config_err)?;
    let verdict = evaluate_point(&kin, [&g1, &g2], cfg.w1, cfg.w2).map_err(numeric_err)?;
    let mode_eigs: Vec<String> = verdict
        .mode_eigs
        .iter()
        .map(|mode| {
            let pairs: Vec<String> = mode
                .iter()
                .map(|(re, im)| format!("[{},{}]", fmt_sig12(*re), fmt_sig12(*im)))
                .collect();
            format!("[{}]", pairs.join(","))
        })
        .collect();
    let json = format!(
        "{{\"instability_margin\":{},\"unstable\":{},\"monotone_polarity_ok\":{},\"lambda2\":{},\"lambda2_is_min\":[{},{}],\"type_k_ok\":{},\"type_k_min_row_sum\":{},\"mode_eigs\":[{}]}}",
        fmt_sig12(verdict.instability_margin),
        verdict.unstable,
        verdict.monotone_polarity_ok,
        json_vector(&verdict.lambda2),
        verdict.lambda2_is_min[0],
        verdict.lambda2_is_min[1],
        verdict.type_k_ok,
        fmt_sig12(verdict.type_k_min_row_sum),
        mode_eigs.join(",")
    );
    let dir = out_dir(cli)?;
    write_artifact(&dir, "verdict.json", &json)?;
    println!("{json}");
    Ok(())
}

fn cmd_simulate(cli: &Cli) -> Result<()> {
    let mut cfg: SimulateConfig = load_config(cli)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(t_max) = cli.t_max {
        cfg.t_max = t_max;
    }
    let kin = HillCrosstalk::new(cfg.kinetics.clone()).map_err(config_err)?;
    let hss = solve_hss(&kin).map_err(numeric_err)?;

    let g1 = cfg.graphs[0].build().map_err(config_err)?;
    let g2 = cfg.graphs[1].build().map_err(config_err)?;
    let weights = [
        PolarityWeights::new(cfg.w1[0], cfg.w2[0]).map_err(config_err)?,
        PolarityWeights::new(cfg.w1[1], cfg.w2[1]).map_err(config_err)?,
    ];

    let (p, n_cells, layer1_cells) = if cfg.quotient {
        let q1 = QuotientAdjacency::from_profile(g1.profile(), weights[0]);
        let q2 = QuotientAdjacency::from_profile(g2.profile(), weights[1]);
        let p = interweave(vec![q1.matrix(), q2.matrix()]).map_err(numeric_err)?;
        (p, 2usize, 1usize)
    } else {
        let wa1 = weighted_adjacency(&g1, weights[0]).map_err(numeric_err)?;
        let wa2 = weighted_adjacency(&g2, weights[1]).map_err(numeric_err)?;
        let p = interweave(vec![wa1.matrix().clone(), wa2.matrix().clone()])
            .map_err(numeric_err)?;
        (p, g1.vertex_count(), g1.layer1_size())
    };

    vlog!("integrating {} cells to t_max = {}", n_cells, cfg.t_max);
    let init = perturb_hss(&hss.x, n_cells, cfg.magnitude, cfg.seed).map_err(numeric_err)?;
    let traj = integrate(&kin, &p, &init, cfg.t_max, &Tolerances::default())
        .map_err(numeric_err)?
        .with_seed(cfg.seed);
    let class = classify_pattern(
        traj.final_state(),
        kin.state_dim(),
        layer1_cells,
        &hss.x,
        cfg.component,
    );

    let dir = out_dir(cli)?;
    write_artifact(&dir, "trajectory.csv", &trajectory_csv(&traj, kin.state_dim()))?;
    write_artifact(
        &dir,
        "snapshot.csv",
        &snapshot_csv(traj.final_state(), kin.state_dim(), layer1_cells, cfg.component),
    )?;
    let values: Vec<f64> = (0..n_cells)
        .map(|i| traj.final_state()[i * kin.state_dim() + cfg.component])
        .collect();
    let svg = render_tissue_snapshot(&values, layer1_cells, hss.x[cfg.component])
        .map_err(numeric_err)?;
    write_artifact(&dir, "snapshot.svg", &svg)?;

    let kind = match class.class {
        PatternKind::Homogeneous => "homogeneous",
        PatternKind::Laminar => "laminar",
        PatternKind::Other => "other",
    };
    println!(
        "{{\"converged\":{},\"converged_at\":{},\"class\":\"{}\",\"layer_means\":{},\"separation\":{},\"seed\":{}}}",
        traj.converged,
        traj.converged_at.map_or("null".to_string(), fmt_sig12),
        kind,
        json_vector(&class.layer_means),
        json_number(class.separation),
        cfg.seed
    );
    Ok(())
}

fn parse_grid_override(text: &str) -> Result<(usize, usize)> {
    let (a, b) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| CliError::Config(format!("bad --grid {text}, expected NxM")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|e| CliError::Config(format!("bad --grid {text}: {e}")))
    };
    Ok((parse(a)?, parse(b)?))
}

fn cmd_sweep(cli: &Cli) -> Result<()> {
    let mut cfg: SweepFileConfig = load_config(cli)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(t_max) = cli.t_max {
        cfg.t_max = t_max;
    }
    if let Some(grid) = &cli.grid {
        let (n1, n2) = parse_grid_override(grid)?;
        cfg.grid.n1 = n1;
        cfg.grid.n2 = n2;
    }
    if cfg.grid.n1 < 2 || cfg.grid.n2 < 2 {
        return Err(CliError::Config("sweep grid needs at least 2x2 points".into()));
    }
    let kin = HillCrosstalk::new(cfg.kinetics.clone()).map_err(config_err)?;
    let g1 = cfg.graphs[0].build().map_err(config_err)?;
    let g2 = cfg.graphs[1].build().map_err(config_err)?;
    let sweep_cfg = SweepConfig {
        axis1: log_space(cfg.grid.min, cfg.grid.max, cfg.grid.n1),
        axis2: log_space(cfg.grid.min, cfg.grid.max, cfg.grid.n2),
        w2: cfg.w2,
        simulate: cfg.simulate.then_some(SweepSimulation {
            seed: cfg.seed,
            magnitude: cfg.magnitude,
            t_max: cfg.t_max,
            tolerances: Tolerances::default(),
        }),
        threads: cli.threads.unwrap_or(1),
    };
    vlog!(
        "sweeping {}x{} cells with {} threads",
        sweep_cfg.axis1.len(),
        sweep_cfg.axis2.len(),
        sweep_cfg.threads
    );
    let grid = sweep_regions(&kin, [&g1, &g2], &sweep_cfg).map_err(numeric_err)?;
    let dir = out_dir(cli)?;
    write_artifact(&dir, "sweep.csv", &sweep_csv(&grid))?;
    let svg = render_region_map(&grid).map_err(numeric_err)?;
    write_artifact(&dir, "regions.svg", &svg)?;

    let failed = grid.cells.iter().filter(|c| c.error.is_some()).count();
    let exists = grid.cells.iter().filter(|c| c.exists).count();
    let converges = grid.cells.iter().filter(|c| c.converges).count();
    println!(
        "{{\"cells\":{},\"exists\":{},\"converges\":{},\"failed\":{}}}",
        grid.cells.len(),
        exists,
        converges,
        failed
    );
    Ok(())
}

fn cmd_verify(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(20240817);
    let checks = all_suites(seed);
    let mut all_pass = true;
    let mut summary = String::new();
    for check in &checks {
        let status = if check.pass { "PASS" } else { "FAIL" };
        all_pass &= check.pass;
        let _ = writeln!(summary, "{status} {} ({})", check.name, check.detail);
    }
    print!("{summary}");
    println!(
        "{} of {} identity checks passed (seed {seed})",
        checks.iter().filter(|c| c.pass).count(),
        checks.len()
    );
    if all_pass {
        Ok(())
    } else {
        Err(CliError::Suite("identity suite failure".into()))
    }
}
