use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use outspine::enumeration::{self, load_or_build, Catalog, EnumerationError, GENERATOR_VERSION};
use outspine::flow::{
    check_collapsible, check_flow, check_smallness, flow_frames, write_frames_csv, BoxRegion, Correspondence,
    EmbeddedGraph, SmallnessSpec, TreeSpec,
};
use outspine::linalg::{RankMode, DEFAULT_PRIMES};
use outspine::spine::{self, betti_numbers, BettiReport};
use outspine::{Executor, Workers};

#[derive(Parser, Debug)]
#[command(name = "outspine", version, about = "Spine complexes of graphs, rational homology of Out(F_n)/Aut(F_n), and the tree-collapse flow")]
struct Cli {
    /// Key-value (TOML) file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; falls back to OUTSPINE_WORKERS, then the machine.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate graphs of given rank and leaf count.
    Enumerate {
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long)]
        leaves: Option<usize>,
        /// Catalog output file (JSON lines).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Build the quotient spine complex and report Betti numbers.
    Spine {
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long)]
        leaves: Option<usize>,
        #[arg(long)]
        max_dim: Option<usize>,
        #[arg(long, value_enum)]
        rank_mode: Option<ModeArg>,
        #[arg(long)]
        primes: Option<usize>,
        /// Permit rank 4 with leaves and larger.
        #[arg(long)]
        allow_large: bool,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Directory for the boundary matrices in triplet text format.
        #[arg(long)]
        export: Option<PathBuf>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Run the collapse flow on an embedded graph and write frames.
    Flow {
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Comma-separated tree vertex ids (overrides the graph file).
        #[arg(long)]
        tree_vertices: Option<String>,
        #[arg(long)]
        tree_edges: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        /// Frames CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check (ε,K) or (ε,K,Q) smallness of a sampled correspondence G′ ⇢ G.
    CheckSmallness {
        #[arg(long)]
        g: Option<PathBuf>,
        #[arg(long)]
        gprime: Option<PathBuf>,
        #[arg(long)]
        correspondence: Option<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Box as min coordinates then max coordinates, comma-separated.
        #[arg(long)]
        k: Option<String>,
        #[arg(long)]
        q: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Modular,
    Exact,
    Both,
}

impl From<ModeArg> for RankMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Modular => RankMode::Modular,
            ModeArg::Exact => RankMode::Exact,
            ModeArg::Both => RankMode::Both,
        }
    }
}

/// Config file keys; mirrors the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    workers: Option<usize>,
    rank: Option<usize>,
    leaves: Option<usize>,
    out: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
    max_dim: Option<usize>,
    rank_mode: Option<ModeArg>,
    primes: Option<usize>,
    allow_large: Option<bool>,
    report: Option<PathBuf>,
    export: Option<PathBuf>,
    graph: Option<PathBuf>,
    tree_vertices: Option<String>,
    tree_edges: Option<String>,
    steps: Option<usize>,
    g: Option<PathBuf>,
    gprime: Option<PathBuf>,
    correspondence: Option<PathBuf>,
    epsilon: Option<f64>,
    k: Option<String>,
    q: Option<String>,
}

/// Exit 1: a check failed. Exit 2: bad input.
enum Failure {
    Check(String),
    Input(String),
}

type Outcome = Result<(), Failure>;

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn require<T>(v: Option<T>, name: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Input(format!("missing required option --{}", name.replace('_', "-"))))
}

fn config_hash<T: Serialize>(cfg: &T) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serialization");
    hex::encode(&Sha256::digest(&bytes)[..8])
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let file = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            toml::from_str::<FileConfig>(&text).map_err(|e| Failure::Input(format!("config: {e}")))?
        }
        None => FileConfig::default(),
    };
    let exec = Executor::new(Workers::resolve(cli.workers.or(file.workers)));
    match cli.command {
        Command::Enumerate { rank, leaves, out, cache_dir } => cmd_enumerate(
            require(rank.or(file.rank), "rank")?,
            require(leaves.or(file.leaves), "leaves")?,
            out.or(file.out),
            cache_dir.or(file.cache_dir),
            &exec,
        ),
        Command::Spine { rank, leaves, max_dim, rank_mode, primes, allow_large, report, export, cache_dir } => {
            let opts = SpineOpts {
                n: require(rank.or(file.rank), "rank")?,
                s: require(leaves.or(file.leaves), "leaves")?,
                max_dim: max_dim.or(file.max_dim),
                mode: rank_mode.or(file.rank_mode).unwrap_or(ModeArg::Both),
                primes: primes.or(file.primes).unwrap_or(DEFAULT_PRIMES),
                allow_large: allow_large || file.allow_large.unwrap_or(false),
            };
            cmd_spine(&opts, report.or(file.report), export.or(file.export), cache_dir.or(file.cache_dir), &exec)
        }
        Command::Flow { graph, tree_vertices, tree_edges, steps, out } => cmd_flow(
            &require(graph.or(file.graph), "graph")?,
            tree_vertices.or(file.tree_vertices),
            tree_edges.or(file.tree_edges),
            steps.or(file.steps).unwrap_or(10),
            out.or(file.out),
        ),
        Command::CheckSmallness { g, gprime, correspondence, epsilon, k, q } => cmd_check_smallness(
            &require(g.or(file.g), "g")?,
            &require(gprime.or(file.gprime), "gprime")?,
            correspondence.or(file.correspondence),
            require(epsilon.or(file.epsilon), "epsilon")?,
            &require(k.or(file.k), "k")?,
            q.or(file.q),
        ),
    }
}

fn check_range(n: usize, s: usize) -> Outcome {
    if n > 4 || s > 2 {
        return Err(Failure::Input(format!("rank {n} with {s} leaves is outside the supported range (rank ≤ 4, leaves ≤ 2)")));
    }
    if n == 0 && s < 2 {
        return Err(input(EnumerationError::ExcludedRange { n, s }));
    }
    Ok(())
}

fn catalog(n: usize, s: usize, cache_dir: Option<&Path>, exec: &Executor) -> Result<Catalog, Failure> {
    match cache_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(input)?;
            load_or_build(dir, n, s, exec).map_err(input)
        }
        None => enumeration::enumerate_graphs_with(n, s, exec).map_err(input),
    }
}

fn cmd_enumerate(n: usize, s: usize, out: Option<PathBuf>, cache_dir: Option<PathBuf>, exec: &Executor) -> Outcome {
    check_range(n, s)?;
    let cat = catalog(n, s, cache_dir.as_deref(), exec)?;
    if let Some(path) = out {
        cat.save(&path).map_err(input)?;
    }
    println!("rank {n} leaves {s}: {} {}", cat.len(), if cat.len() == 1 { "class" } else { "classes" });
    println!("internal vertices  classes");
    for (v, c) in &cat.provenance.counts_by_internal_vertices {
        println!("{v:>17}  {c:>7}");
    }
    Ok(())
}

#[derive(Serialize)]
struct SpineOpts {
    n: usize,
    s: usize,
    max_dim: Option<usize>,
    mode: ModeArg,
    primes: usize,
    allow_large: bool,
}

#[derive(Serialize)]
struct Checks {
    boundary_squared_zero: bool,
    euler_matches_betti: bool,
    b0_is_one: bool,
    connected: bool,
    orientation_safe: bool,
    face_identity_cells: Option<usize>,
    stable_range_vanishing: Option<bool>,
}

#[derive(Serialize)]
struct SpineReport<'a> {
    #[serde(flatten)]
    betti: &'a BettiReport,
    checks: &'a Checks,
    config_hash: String,
    generator_version: &'static str,
    version: &'static str,
}

fn is_large(n: usize, s: usize) -> bool {
    n + s >= 5
}

fn chain_estimate(cat: &Catalog) -> u128 {
    cat.graphs
        .iter()
        .map(|g| {
            // chains ending at each forest, counted through strict subsets
            let forests = enumeration::forest_masks(g);
            let mut ending = vec![0u128; forests.len()];
            for (i, f) in forests.iter().enumerate() {
                ending[i] = 1 + (0..i).filter(|&j| forests[j].is_strict_subset(*f)).map(|j| ending[j]).sum::<u128>();
            }
            1 + ending.iter().sum::<u128>()
        })
        .sum()
}

fn cmd_spine(opts: &SpineOpts, report: Option<PathBuf>, export: Option<PathBuf>, cache_dir: Option<PathBuf>, exec: &Executor) -> Outcome {
    let (n, s) = (opts.n, opts.s);
    check_range(n, s)?;
    let cat = catalog(n, s, cache_dir.as_deref(), exec)?;
    if is_large(n, s) && !opts.allow_large {
        return Err(Failure::Input(format!(
            "rank {n} with {s} leaves is large: {} graphs, about {} forest chains before symmetry reduction; pass --allow-large to build it",
            cat.len(),
            chain_estimate(&cat)
        )));
    }
    if cat.is_empty() {
        let empty = spine::SparseIntChainComplex::empty(n, s);
        let r = betti_numbers(&empty, opts.mode.into(), opts.primes, exec);
        println!("rank {n} leaves {s}: empty catalog, empty complex");
        emit_json(&r, report.as_deref())?;
        return Ok(());
    }
    let (plan, cx) = spine::build_spine_complex(&cat, opts.max_dim, exec).map_err(input)?;
    if let Some(dir) = &export {
        cx.write_text(dir).map_err(input)?;
    }
    let r = betti_numbers(&cx, opts.mode.into(), opts.primes, exec);
    let euler_betti: i64 = r.betti.iter().enumerate().map(|(k, &b)| if k % 2 == 0 { b as i64 } else { -(b as i64) }).sum();
    let checks = Checks {
        boundary_squared_zero: cx.check_boundary_squared().is_ok(),
        euler_matches_betti: r.truncated || euler_betti == r.euler,
        b0_is_one: r.betti.first() == Some(&1),
        connected: cx.is_connected(),
        orientation_safe: spine::check_orientation(&plan, &cx),
        face_identity_cells: spine::check_face_identity(&plan, &cx, exec).ok(),
        stable_range_vanishing: (s == 1).then(|| {
            r.betti.iter().enumerate().skip(1).filter(|&(k, _)| n > 2 * k + 1).all(|(_, &b)| b == 0)
        }),
    };
    print!("{}", r.table());
    println!("∂∘∂ = 0: {}", checks.boundary_squared_zero);
    println!("euler = alternating betti sum: {}", checks.euler_matches_betti);
    println!("b0 = 1 and 1-skeleton connected: {}", checks.b0_is_one && checks.connected);
    println!("orientation safe: {}", checks.orientation_safe);
    match checks.face_identity_cells {
        Some(k) => println!("face identity on 2-cells: {k} checked"),
        None => println!("face identity on 2-cells: FAILED"),
    }
    if !r.exact {
        println!("note: some ranks are modular lower bounds only");
    }
    let full = SpineReport {
        betti: &r,
        checks: &checks,
        config_hash: config_hash(opts),
        generator_version: GENERATOR_VERSION,
        version: env!("CARGO_PKG_VERSION"),
    };
    emit_json(&full, report.as_deref())?;
    let ok = checks.boundary_squared_zero
        && checks.euler_matches_betti
        && checks.b0_is_one
        && checks.connected
        && checks.orientation_safe
        && checks.face_identity_cells.is_some()
        && checks.stable_range_vanishing != Some(false)
        && r.consistent;
    if ok {
        Ok(())
    } else {
        Err(Failure::Check("spine invariants".into()))
    }
}

fn emit_json<T: Serialize>(v: &T, path: Option<&Path>) -> Outcome {
    let text = serde_json::to_string(v).map_err(input)?;
    match path {
        Some(p) => fs::write(p, text + "\n").map_err(input),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn parse_ids(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|_| Failure::Input(format!("bad id list '{s}'"))))
        .collect()
}

fn read_graph(path: &Path) -> Result<(EmbeddedGraph, Option<TreeSpec>), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    EmbeddedGraph::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_flow(graph: &Path, tree_vertices: Option<String>, tree_edges: Option<String>, steps: usize, out: Option<PathBuf>) -> Outcome {
    let (g, file_tree) = read_graph(graph)?;
    let mut tree = file_tree.unwrap_or_default();
    if let Some(v) = tree_vertices {
        tree.vertices = parse_ids(&v)?;
    }
    if let Some(e) = tree_edges {
        tree.edges = parse_ids(&e)?;
    }
    let scene = check_collapsible(&g, &tree).map_err(|violations| {
        let list: Vec<String> = violations.iter().map(|v| format!("{}: {}", v.clause, v.detail)).collect();
        Failure::Input(format!("not in collapsible position\n{}", list.join("\n")))
    })?;
    let frames = flow_frames(&scene, steps);
    match &out {
        Some(p) => {
            let f = fs::File::create(p).map_err(input)?;
            write_frames_csv(&frames, BufWriter::new(f)).map_err(input)?;
        }
        None => write_frames_csv(&frames, io::stdout().lock()).map_err(input)?,
    }
    let report = check_flow(&scene, steps);
    let line = serde_json::to_string(&report).map_err(input)?;
    if out.is_some() {
        println!("{} frames", frames.len());
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check("flow invariants".into()))
    }
}

fn parse_box(s: &str, dim: usize) -> Result<BoxRegion, Failure> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Input(format!("bad box '{s}'")))?;
    if v.len() != 2 * dim {
        return Err(Failure::Input(format!("box '{s}' needs {} numbers", 2 * dim)));
    }
    let mut b = BoxRegion { min: [0.0; 3], max: [0.0; 3] };
    b.min[..dim].copy_from_slice(&v[..dim]);
    b.max[..dim].copy_from_slice(&v[dim..]);
    if (0..dim).any(|i| b.min[i] > b.max[i]) {
        return Err(Failure::Input(format!("box '{s}' has min above max")));
    }
    Ok(b)
}

fn cmd_check_smallness(
    g: &Path,
    gprime: &Path,
    correspondence: Option<PathBuf>,
    epsilon: f64,
    k: &str,
    q: Option<String>,
) -> Outcome {
    let (g, _) = read_graph(g)?;
    let (gp, _) = read_graph(gprime)?;
    let corr = match correspondence {
        Some(p) => {
            let text = fs::read_to_string(&p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<Correspondence>(&text)
                .map_err(|e| Failure::Input(format!("malformed correspondence: {e}")))?
        }
        None => Correspondence::default(),
    };
    let dim = g.dim.max(gp.dim);
    let spec = SmallnessSpec {
        epsilon,
        k: parse_box(k, dim)?,
        q: q.map(|q| parse_box(&q, dim)).transpose()?,
        correspondence: corr,
    };
    let verdict = check_smallness(&g, &gp, &spec).map_err(|e| Failure::Input(format!("malformed correspondence: {e}")))?;
    let line = serde_json::to_string(&verdict).map_err(input)?;
    let mut out = io::stdout().lock();
    writeln!(out, "{line}").map_err(input)?;
    if verdict.small {
        Ok(())
    } else {
        Err(Failure::Check(format!("not small: {:?}", verdict.failure)))
    }
}
