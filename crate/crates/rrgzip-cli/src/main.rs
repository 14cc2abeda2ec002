//! The `rrgzip` binary: generate synthetic FPGA routing graphs, compress
//! them,
//! renumber them, route nets through either storage form, and benchmark
//! the whole ablation.
//!
//! Exit codes: 0 success, 1 parameter/input errors, 2 unroutable or
//! illegal routing results.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use rrgzip::archgen::{self, generate_nets, generate_rrg, ArchParams, Netlist};
use rrgzip::graphstore::{self, BuildOptions, CompressedRRG, MemoryStats};
use rrgzip::reorder;
use rrgzip::router::{
    route, route_tree_digest, CompressedProvider, FlatProvider, RouterParams, RoutingResult,
};
use rrgzip::Error;

#[derive(Parser)]
#[command(name = "rrgzip", version, about)]
struct Cli {
    /// Seed for all randomness; falls back to RRGZIP_SEED, then to the
    /// seed in the architecture config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic routing graph and a netlist for it.
    Generate(GenerateArgs),
    /// Rebuild a graph with different compression options.
    Compress(CompressArgs),
    /// Print memory accounting for a graph file.
    Stats(StatsArgs),
    /// Route a netlist through the flat or the compressed adjacency form.
    Route(RouteArgs),
    /// Run the full compression/routing ablation and report it.
    Bench(BenchArgs),
    /// Dump the adjacency sparsity pattern as "row col" text lines.
    DumpMatrix(DumpMatrixArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Architecture parameters as JSON; defaults to the built-in 20x20
    /// fabric when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the built-in heterogeneous column preset.
    #[arg(long)]
    hetero: bool,
    /// Output graph file (uncompressed flat layout; run `compress` next).
    #[arg(long)]
    out: PathBuf,
    /// Output netlist file.
    #[arg(long)]
    nets: PathBuf,
    #[arg(long, default_value_t = 300)]
    n_nets: usize,
    #[arg(long, default_value_t = 4)]
    max_fanout: usize,
}

#[derive(Args)]
struct CompressArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Dedup window capacity in patterns; 0 keeps every pattern.
    #[arg(long, default_value_t = 0)]
    window: usize,
    #[arg(long)]
    no_dedup: bool,
    #[arg(long)]
    no_vbyte: bool,
    /// Renumber nodes with reverse Cuthill-McKee before compressing.
    #[arg(long)]
    rcm: bool,
    /// Modeled non-adjacency bytes per node in the accounting.
    #[arg(long, default_value_t = 24)]
    overhead_bytes: usize,
    /// Netlist whose node ids should follow the renumbering.
    #[arg(long)]
    nets_in: Option<PathBuf>,
    /// Where to write the renumbered netlist.
    #[arg(long)]
    nets_out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RouteArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    nets: PathBuf,
    #[arg(long, value_enum, default_value_t = Provider::Compressed)]
    provider: Provider,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    router: RouterFlags,
}

#[derive(Args)]
struct RouterFlags {
    #[arg(long, default_value_t = 0.5)]
    p_fac_init: f64,
    #[arg(long, default_value_t = 1.8)]
    p_fac_mult: f64,
    #[arg(long, default_value_t = 1.0)]
    h_fac: f64,
    #[arg(long, default_value_t = 50)]
    max_iterations: u32,
    #[arg(long)]
    no_astar: bool,
    #[arg(long, default_value_t = 1.0)]
    astar_weight: f64,
}

impl RouterFlags {
    fn to_params(&self) -> RouterParams {
        RouterParams {
            p_fac_init: self.p_fac_init,
            p_fac_mult: self.p_fac_mult,
            h_fac: self.h_fac,
            max_iterations: self.max_iterations,
            astar_enabled: !self.no_astar,
            astar_weight: self.astar_weight,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Provider {
    Flat,
    Compressed,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the built-in heterogeneous column preset.
    #[arg(long)]
    hetero: bool,
    /// Timing repetitions per provider; medians are reported.
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long)]
    json: bool,
    #[arg(long, default_value_t = 300)]
    n_nets: usize,
    #[arg(long, default_value_t = 3)]
    max_fanout: usize,
}

#[derive(Args)]
struct DumpMatrixArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Unroutable { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Generate(args) => generate(args, cli.seed),
        Command::Compress(args) => compress(args),
        Command::Stats(args) => stats(args),
        Command::Route(args) => route_cmd(args),
        Command::Bench(args) => bench(args, cli.seed),
        Command::DumpMatrix(args) => dump_matrix(args),
    }
}

fn load_params(
    config: &Option<PathBuf>,
    hetero: bool,
    seed_flag: Option<u64>,
) -> Result<ArchParams, Error> {
    let mut params = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| Error::Param {
                reason: format!("bad architecture config {}: {e}", path.display()),
            })?
        }
        None if hetero => ArchParams::hetero_default(),
        None => ArchParams::default(),
    };
    if hetero && config.is_some() && params.hetero_columns.is_empty() {
        let preset = ArchParams::hetero_with_grid(params.grid_w, params.grid_h);
        params.hetero_columns = preset.hetero_columns;
    }
    if let Some(seed) = seed_flag.or_else(env_seed) {
        params.seed = seed;
    }
    Ok(params)
}

fn env_seed() -> Option<u64> {
    std::env::var("RRGZIP_SEED").ok()?.parse().ok()
}

fn generate(args: GenerateArgs, seed: Option<u64>) -> Result<ExitCode, Error> {
    let params = load_params(&args.config, args.hetero, seed)?;
    let raw = generate_rrg(&params)?;
    let nets = generate_nets(&raw, &params, args.n_nets, args.max_fanout)?;
    let graph = build(&raw, &BuildOptions::flat())?;
    graph.dump(&args.out)?;
    nets.save(&args.nets)?;
    eprintln!(
        "generated {} nodes, {} edges, {} nets -> {}, {}",
        graph.num_nodes(),
        graph.num_edges(),
        nets.nets.len(),
        args.out.display(),
        args.nets.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn build(raw: &rrgzip::RawGraph, opts: &BuildOptions) -> Result<CompressedRRG, Error> {
    #[cfg(feature = "parallel")]
    return graphstore::par_build(raw, opts);
    #[cfg(not(feature = "parallel"))]
    graphstore::build(raw, opts)
}

fn compress(args: CompressArgs) -> Result<ExitCode, Error> {
    let input = CompressedRRG::load(&args.input)?;
    let mut raw = input.to_raw_graph();
    if args.rcm {
        let perm = reorder::rcm_order(&raw);
        raw = reorder::apply_permutation(&raw, &perm)?;
        match (&args.nets_in, &args.nets_out) {
            (Some(nets_in), Some(nets_out)) => {
                let nets = Netlist::open(nets_in)?;
                let mapped = Netlist {
                    nets: nets
                        .nets
                        .into_iter()
                        .map(|n| archgen::Net {
                            name: n.name,
                            source: perm.forward(n.source),
                            sinks: n.sinks.iter().map(|&s| perm.forward(s)).collect(),
                        })
                        .collect(),
                };
                mapped.save(nets_out)?;
            }
            (None, None) => {}
            _ => {
                return Err(Error::Param {
                    reason: "--nets-in and --nets-out must be given together".into(),
                })
            }
        }
    } else if args.nets_in.is_some() || args.nets_out.is_some() {
        return Err(Error::Param {
            reason: "--nets-in/--nets-out only apply together with --rcm".into(),
        });
    }
    let opts = BuildOptions {
        enable_vbyte: !args.no_vbyte,
        enable_dedup: !args.no_dedup && !args.no_vbyte,
        window_size: args.window,
        overhead_per_node: args.overhead_bytes,
        ..Default::default()
    };
    let graph = build(&raw, &opts)?;
    graph.dump(&args.out)?;
    let s = graph.stats();
    eprintln!(
        "compressed {} edges: pool {} B, adjacency ratio {:.2}x, total ratio {:.2}x -> {}",
        s.num_edges,
        s.pool_bytes,
        s.adjacency_ratio,
        s.total_ratio,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn stats(args: StatsArgs) -> Result<ExitCode, Error> {
    let graph = CompressedRRG::load(&args.input)?;
    let s = graph.stats();
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&s).expect("stats serialize")
        );
    } else {
        print_stats(&s);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_stats(s: &MemoryStats) {
    println!("nodes                    {:>12}", s.num_nodes);
    println!("edges                    {:>12}", s.num_edges);
    println!(
        "baseline adjacency bytes {:>12}",
        s.baseline_adjacency_bytes
    );
    println!("pool bytes               {:>12}", s.pool_bytes);
    println!("index bytes              {:>12}", s.index_bytes);
    println!("node overhead bytes      {:>12}", s.node_overhead_bytes);
    println!("referenced nodes         {:>12}", s.referenced_node_count);
    println!("adjacency ratio          {:>12.3}", s.adjacency_ratio);
    println!("total ratio              {:>12.3}", s.total_ratio);
}

fn route_cmd(args: RouteArgs) -> Result<ExitCode, Error> {
    let graph = CompressedRRG::load(&args.graph)?;
    let mut nets_file = std::io::BufReader::new(std::fs::File::open(&args.nets)?);
    let nets = Netlist::read_text(&mut nets_file)?;
    let params = args.router.to_params();

    let result = match args.provider {
        Provider::Flat => {
            let raw = graph.to_raw_graph();
            route(&FlatProvider::new(&raw), &nets, &params)?
        }
        Provider::Compressed => route(&CompressedProvider::new(&graph), &nets, &params)?,
    };

    let provider_name = match args.provider {
        Provider::Flat => "flat",
        Provider::Compressed => "compressed",
    };
    if args.json {
        let payload = json!({
            "provider": provider_name,
            "iterations": result.iterations,
            "legal": result.legal,
            "wall_ms": result.wall_ms,
            "nodes_expanded": result.nodes_expanded,
            "route_tree_hash": route_tree_digest(&result),
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&payload).expect("route serialize")
        );
    } else {
        println!(
            "{provider_name}: {} nets, legal={}, iterations={}, {:.1} ms, {} nodes expanded",
            nets.nets.len(),
            result.legal,
            result.iterations,
            result.wall_ms,
            result.nodes_expanded
        );
    }
    Ok(if result.legal {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}

fn bench(args: BenchArgs, seed: Option<u64>) -> Result<ExitCode, Error> {
    if args.repeats < 5 {
        return Err(Error::Param {
            reason: format!(
                "bench needs at least 5 repeats for stable medians, got {}",
                args.repeats
            ),
        });
    }
    let params = load_params(&args.config, args.hetero, seed)?;
    let raw = generate_rrg(&params)?;
    let nets = generate_nets(&raw, &params, args.n_nets, args.max_fanout)?;

    // Memory ablation.
    let perm = reorder::rcm_order(&raw);
    let renumbered = reorder::apply_permutation(&raw, &perm)?;
    let ablation: Vec<(&str, MemoryStats)> = vec![
        ("flat", build(&raw, &BuildOptions::flat())?.stats()),
        ("vbyte", build(&raw, &BuildOptions::vbyte_only())?.stats()),
        (
            "vbyte_dedup",
            build(&raw, &BuildOptions::default())?.stats(),
        ),
        (
            "vbyte_dedup_rcm",
            build(&renumbered, &BuildOptions::default())?.stats(),
        ),
    ];

    // Routing comparison on the fully compressed (non-renumbered) graph.
    let compressed = build(&raw, &BuildOptions::default())?;
    let router_params = RouterParams::default();
    let mut flat_ms = Vec::with_capacity(args.repeats);
    let mut compressed_ms = Vec::with_capacity(args.repeats);
    let mut reference: Option<RoutingResult> = None;
    let mut digest = String::new();
    for _ in 0..args.repeats {
        let f = route(&FlatProvider::new(&raw), &nets, &router_params)?;
        let c = route(&CompressedProvider::new(&compressed), &nets, &router_params)?;
        assert_eq!(
            f.deterministic_parts(),
            c.deterministic_parts(),
            "providers must agree bit for bit"
        );
        digest = route_tree_digest(&f);
        flat_ms.push(f.wall_ms);
        compressed_ms.push(c.wall_ms);
        reference.get_or_insert(f);
    }
    let reference = reference.expect("at least one repeat");
    let flat_median = median(&mut flat_ms);
    let compressed_median = median(&mut compressed_ms);
    let runtime_ratio = compressed_median / flat_median;

    let environment = format!(
        "{}-{}, {} threads, parallel build {}",
        std::env::consts::OS,
        std::env::consts::ARCH,
        std::thread::available_parallelism().map_or(1, |n| n.get()),
        cfg!(feature = "parallel"),
    );

    let report = json!({
        "arch": {
            "grid_w": params.grid_w,
            "grid_h": params.grid_h,
            "channel_width": params.channel_width,
            "seg_len": params.seg_len,
            "hetero_columns": params.hetero_columns.len(),
            "seed": params.seed,
            "n_nets": nets.nets.len(),
            "max_fanout": args.max_fanout,
        },
        "memory": ablation
            .iter()
            .map(|(name, stats)| (name.to_string(), serde_json::to_value(stats).unwrap()))
            .collect::<serde_json::Map<_, _>>(),
        "routing": {
            "repeats": args.repeats,
            "flat_ms": flat_ms,
            "compressed_ms": compressed_ms,
            "flat_median_ms": flat_median,
            "compressed_median_ms": compressed_median,
            "runtime_ratio": runtime_ratio,
            "legal": reference.legal,
            "iterations": reference.iterations,
            "nodes_expanded": reference.nodes_expanded,
            "route_tree_hash": digest,
        },
        "environment": environment,
    });

    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serialize")
        );
    } else {
        println!(
            "arch: {}x{} W={} L={} ({} hetero columns), {} nets",
            params.grid_w,
            params.grid_h,
            params.channel_width,
            params.seg_len,
            params.hetero_columns.len(),
            nets.nets.len()
        );
        for (name, stats) in &ablation {
            println!(
                "  {name:<16} adjacency {:>6.2}x   total {:>5.2}x   pool {:>9} B   refs {}",
                stats.adjacency_ratio,
                stats.total_ratio,
                stats.pool_bytes,
                stats.referenced_node_count
            );
        }
        println!(
            "routing: flat {flat_median:.1} ms vs compressed {compressed_median:.1} ms -> ratio {runtime_ratio:.3} \
             (legal={}, {} iterations, medians of {} repeats)",
            reference.legal, reference.iterations, args.repeats
        );
        println!("environment: {environment}");
    }
    Ok(if reference.legal {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn dump_matrix(args: DumpMatrixArgs) -> Result<ExitCode, Error> {
    use std::io::Write;
    let graph = CompressedRRG::load(&args.input)?;
    let file = std::fs::File::create(&args.out)?;
    let mut w = std::io::BufWriter::new(file);
    let mut result = Ok(());
    graph.for_each_edge(|source, target, _| {
        if result.is_ok() {
            result = writeln!(w, "{source} {target}");
        }
    });
    result?;
    w.flush()?;
    eprintln!(
        "wrote sparsity pattern of {} edges to {}",
        graph.num_edges(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}
