mod csv;

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bridgegirth::bridges::{certify_bridge_free_acyclic, certify_ordered_bridge_free_acyclic, find_bridge_upto, BridgeWitness};
use bridgegirth::constructions::{
    ap_free_set, bipartite_to_path_system, lattice_construction, quad_construction, rs_construction, trim, ApMethod,
};
use bridgegirth::gaps::{
    brute_force_vertex_multicut, build_dsf_instance, build_gs, build_h, build_product, check_long_paths,
    disjoint_path_packing, node_split, partition_paths, GapInstance,
};
use bridgegirth::graph::{count_shortest_paths, WeightedDigraph};
use bridgegirth::reductions::{
    adp_instance, check_independence, check_stretch, dp_hard_instance, greedy_spanner, hopset_adversary,
    make_independent_dp, make_independent_rp, online_game, preserver_size, shortcut_adversary, system_to_digraph,
    Builder, Mode, UGraph,
};
use bridgegirth::search::{beta_table, max_system, SearchParams, DEFAULT_SEARCH_BUDGET};
use bridgegirth::transforms::{
    clean_regularize, clean_source_restricted, l2_report, sample_base_subsystem, strip_two_cycles, subsample,
};
use bridgegirth::{Error, PathSystem, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;

use crate::csv::{emit_csv, Cell};

#[derive(Parser)]
#[command(name = "bridgegirth", version, about = "Build, transform and check path systems of high bridge girth")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, env = "BRIDGEGIRTH_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write machine-readable records here (`-` for stdout).
    #[arg(long, global = true)]
    csv: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct InOut {
    /// Input file, `-` for stdin.
    #[arg(default_value = "-")]
    input: String,
    /// Output file, `-` for stdout.
    #[arg(short, long, default_value = "-")]
    output: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a path system.
    Construct {
        #[command(subcommand)]
        kind: Construct,
    },
    /// Random node then path deletions.
    Trim {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        paths: usize,
    },
    /// Smallest bridge up to a size bound, or a certificate that none exists.
    Girth {
        #[arg(default_value = "-")]
        input: String,
        /// Largest bridge size to look for (default: unbounded).
        #[arg(long)]
        max_k: Option<usize>,
        #[arg(long)]
        ordered: bool,
        /// Use the reachability certificate (acyclic systems, any size).
        #[arg(long)]
        certify: bool,
        #[arg(long, default_value_t = bridgegirth::bridges::DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Exact extremal sizes for tiny parameters.
    Search(SearchArgs),
    /// Regularize degrees and lengths.
    Clean(InOut),
    /// Remove 2-cycles.
    #[command(name = "strip-2cycles")]
    Strip2Cycles(InOut),
    /// Source-restricted cleaning.
    CleanSr {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        lambda: Ratio<u64>,
    },
    /// Keep a random fraction of nodes and of paths.
    Subsample {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        c: Ratio<u64>,
    },
    /// Base-path subsystem.
    SampleBase {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        h: usize,
    },
    /// Sum of squared path lengths against n·L + p^(1/3)·n^(4/3).
    L2Report {
        #[arg(default_value = "-")]
        input: String,
    },
    /// Counts, averages and extremes.
    Stats {
        #[arg(default_value = "-")]
        input: String,
    },
    /// Compile a system (or graph) into a digraph instance.
    Reduce {
        #[command(subcommand)]
        kind: Reduce,
    },
    /// Check a digraph instance.
    Verify {
        #[command(subcommand)]
        kind: Verify,
    },
    /// Pick a demand that survives a set of added edges.
    Adversary {
        #[command(subcommand)]
        kind: Adversary,
    },
    /// Play the online preserver game.
    Game {
        #[command(subcommand)]
        kind: Game,
    },
    /// Integrality-gap instances.
    Gap {
        #[command(subcommand)]
        kind: Gap,
    },
}

#[derive(Subcommand)]
enum Construct {
    Quad {
        #[arg(long)]
        q: u64,
        #[arg(short, long, default_value = "-")]
        output: String,
    },
    Lattice {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        ell: usize,
        #[arg(short, long, default_value = "-")]
        output: String,
    },
    Rs {
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value_t = SetMethod::Greedy)]
        set: SetMethod,
        #[arg(short, long, default_value = "-")]
        output: String,
    },
    /// From a file `bipartite <left>` followed by `right <v> <v> ...` lines.
    FromBipartite {
        #[command(flatten)]
        io: InOut,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SetMethod {
    Greedy,
    Behrend,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct SearchArgs {
    #[command(subcommand)]
    table: Option<SearchTable>,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    p: usize,
    /// Girth bound, an integer or `inf`.
    #[arg(long, default_value = "inf", value_parser = parse_k)]
    k: KArg,
    #[arg(long)]
    ordered: bool,
    #[arg(long)]
    acyclic: bool,
    #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
    budget: u64,
    /// Write the witness system here.
    #[arg(short, long)]
    output: Option<String>,
}

#[derive(Subcommand)]
enum SearchTable {
    /// β and β* over a grid.
    Table {
        #[arg(long)]
        max_n: usize,
        #[arg(long)]
        max_p: usize,
        #[arg(long, value_delimiter = ',', value_parser = parse_k, default_value = "2,3,inf")]
        ks: Vec<KArg>,
        #[arg(long)]
        acyclic: bool,
        #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
        budget: u64,
        /// Directory for one witness file per cell.
        #[arg(long)]
        witness_dir: Option<PathBuf>,
    },
}

/// Girth bound; None is `inf`.
#[derive(Clone, Copy, Debug)]
struct KArg(Option<usize>);

fn parse_k(s: &str) -> std::result::Result<KArg, String> {
    if s == "inf" {
        return Ok(KArg(None));
    }
    s.parse().map(|k| KArg(Some(k))).map_err(|_| format!("`{s}` is neither an integer nor `inf`"))
}

#[derive(Subcommand)]
enum Reduce {
    /// Unit-weight consecutive-pair digraph.
    Rp(InOut),
    /// Weighted hard instance of an ordered system.
    Dp(InOut),
    /// Unit-weight instance of a system with girth > k, with the deletion report.
    Adp {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = bridgegirth::bridges::DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Greedy k-spanner of a graph given in digraph format (edges undirected).
    Spanner {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        k: u64,
    },
    /// Make a distance-preserver instance independent.
    IndepDp(InOut),
    /// Make a reachability-preserver instance independent.
    IndepRp(InOut),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Dp,
    Rp,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Dp => Mode::Distance,
            ModeArg::Rp => Mode::Reachability,
        }
    }
}

#[derive(Subcommand)]
enum Verify {
    Independence {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Dp)]
        mode: ModeArg,
    },
    UniqueShortest {
        #[arg(default_value = "-")]
        input: String,
    },
    PreserverSize {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Dp)]
        mode: ModeArg,
    },
}

#[derive(Subcommand)]
enum Adversary {
    Shortcut {
        #[arg(default_value = "-")]
        input: String,
        /// Added edges, digraph format (weights ignored).
        #[arg(long = "H")]
        h: String,
    },
    Hopset {
        #[arg(default_value = "-")]
        input: String,
        /// Hopset edges with exact distances, digraph format.
        #[arg(long = "H")]
        h: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BuilderArg {
    Lazy,
    GreedyShortest,
}

#[derive(Subcommand)]
enum Game {
    Online {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, value_enum, default_value_t = BuilderArg::GreedyShortest)]
        builder: BuilderArg,
    },
}

#[derive(Subcommand)]
enum Gap {
    /// Product of the typed closure graph and the layered graph.
    Multicut {
        #[arg(long)]
        system: String,
        #[arg(long)]
        d: usize,
        #[arg(short, long, default_value = "-")]
        output: String,
    },
    CheckLongPaths {
        #[arg(default_value = "-")]
        input: String,
    },
    MulticutExact {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, default_value_t = bridgegirth::gaps::DEFAULT_MULTICUT_LIMIT)]
        limit: usize,
    },
    /// Steiner forest instance of the source-restricted cleaning of a system.
    Dsf {
        #[arg(long)]
        system: String,
        #[arg(long)]
        lambda: Ratio<u64>,
    },
    NodeSplit {
        #[command(flatten)]
        io: InOut,
    },
}

fn read_text(path: &str) -> Result<String> {
    let mut s = String::new();
    if path == "-" {
        io::stdin().read_to_string(&mut s).map_err(|e| Error::Input(format!("stdin: {e}")))?;
    } else {
        s = fs::read_to_string(path).map_err(|e| Error::Input(format!("{path}: {e}")))?;
    }
    Ok(s)
}

fn write_text(path: &str, text: &str) -> Result<()> {
    let res = if path == "-" {
        io::stdout().write_all(text.as_bytes())
    } else {
        fs::write(path, text)
    };
    res.map_err(|e| Error::Input(format!("{path}: {e}")))
}

fn read_system(path: &str) -> Result<PathSystem> {
    PathSystem::parse(&read_text(path)?)
}

fn read_digraph(path: &str) -> Result<WeightedDigraph> {
    WeightedDigraph::parse(&read_text(path)?)
}

struct Ctx {
    seed: u64,
    csv: Option<String>,
}

impl Ctx {
    fn header(&self) -> String {
        format!("# seed {}\n", self.seed)
    }

    fn put_system(&self, path: &str, s: &PathSystem, notes: &[String]) -> Result<()> {
        let mut text = self.header();
        for n in notes {
            text.push_str(&format!("# {n}\n"));
        }
        text.push_str(&s.serialize());
        write_text(path, &text)
    }

    fn put_digraph(&self, path: &str, g: &WeightedDigraph) -> Result<()> {
        write_text(path, &(self.header() + &g.serialize()))
    }

    fn records(&self, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
        match &self.csv {
            Some(path) => write_text(path, &emit_csv(header, rows)),
            None => Ok(()),
        }
    }
}

/// Human-readable line for a report that shares stdout with data output.
fn note(output: &str, line: String) {
    if output == "-" {
        eprintln!("{line}");
    } else {
        println!("{line}");
    }
}

fn describe(w: &BridgeWitness) -> String {
    format!("river {} arcs {:?} nodes {:?}", w.river, w.arcs, w.nodes)
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx { seed: cli.seed, csv: cli.csv };
    let seed = cli.seed;
    match cli.cmd {
        Cmd::Construct { kind } => match kind {
            Construct::Quad { q, output } => ctx.put_system(&output, &quad_construction(q)?, &[format!("quad q={q}")]),
            Construct::Lattice { n, ell, output } => {
                ctx.put_system(&output, &lattice_construction(n, ell)?, &[format!("lattice n={n} ell={ell}")])
            }
            Construct::Rs { m, set, output } => {
                let method = match set {
                    SetMethod::Greedy => ApMethod::Greedy,
                    SetMethod::Behrend => ApMethod::Behrend,
                };
                let a = ap_free_set(m as u64, method)?;
                let note = format!("rs m={m} set {a:?}");
                ctx.put_system(&output, &rs_construction(m, &a)?, &[note])
            }
            Construct::FromBipartite { io } => {
                let (left, adj) = parse_bipartite(&read_text(&io.input)?)?;
                ctx.put_system(&io.output, &bipartite_to_path_system(left, &adj)?, &[])
            }
        },
        Cmd::Trim { io, nodes, paths } => {
            let s = read_system(&io.input)?;
            ctx.put_system(&io.output, &trim(&s, nodes, paths, seed)?, &[])
        }
        Cmd::Girth { input, max_k, ordered, certify, budget } => {
            let mut s = read_system(&input)?;
            s.check_valid()?;
            let ordered = ordered || s.ordered;
            s.ordered = ordered;
            if certify {
                let cert = if ordered {
                    certify_ordered_bridge_free_acyclic(&s)?
                } else {
                    certify_bridge_free_acyclic(&s)?
                };
                return match cert.witness() {
                    None => {
                        println!("bridge-free");
                        Ok(())
                    }
                    Some(w) => {
                        println!("bridge {}", describe(w));
                        Err(Error::Violation(format!("{}-bridge found", w.size())))
                    }
                };
            }
            let kmax = max_k.unwrap_or(usize::MAX).min(s.node_count.max(2));
            match find_bridge_upto(&s, kmax, ordered, budget)? {
                None => {
                    match max_k {
                        Some(k) => println!(">{k}"),
                        None => println!(">{kmax} (no bridge at all)"),
                    }
                    ctx.records(&["girth"], &[vec![Cell::from(format!(">{kmax}"))]])
                }
                Some(w) => {
                    println!("girth {}", w.size());
                    println!("bridge {}", describe(&w));
                    ctx.records(&["girth"], &[vec![Cell::from(w.size())]])?;
                    Err(Error::Violation(format!("{}-bridge found", w.size())))
                }
            }
        }
        Cmd::Search(args) => run_search(&ctx, args),
        Cmd::Clean(io) => {
            let s = read_system(&io.input)?;
            let out = clean_regularize(&s);
            note(&io.output, format!("size {} -> {}", s.size(), out.size()));
            ctx.put_system(&io.output, &out, &[])
        }
        Cmd::Strip2Cycles(io) => {
            let s = read_system(&io.input)?;
            let out = strip_two_cycles(&s);
            note(&io.output, format!("size {} -> {}", s.size(), out.size()));
            ctx.put_system(&io.output, &out, &[])
        }
        Cmd::CleanSr { io, lambda } => {
            let s = read_system(&io.input)?;
            let r = clean_source_restricted(&s, lambda, seed)?;
            note(&io.output, format!("size {} -> {}, {} sources", r.size_before, r.size_after, r.sources.len()));
            let sources = format!("sources {}", join(&r.sources));
            ctx.put_system(&io.output, &r.system, &[sources])
        }
        Cmd::Subsample { io, c } => {
            let s = read_system(&io.input)?;
            ctx.put_system(&io.output, &subsample(&s, c, seed)?, &[])
        }
        Cmd::SampleBase { io, h } => {
            let s = read_system(&io.input)?;
            let b = sample_base_subsystem(&s, h, seed)?;
            let dir = if b.forward { "forward" } else { "backward" };
            let line = format!("base {} {dir} crossing {}", b.base, b.crossing);
            note(&io.output, line.clone());
            ctx.put_system(&io.output, &b.system, &[line])
        }
        Cmd::L2Report { input } => {
            let s = read_system(&input)?;
            let r = l2_report(&s);
            println!("l2_norm_sq {}", r.l2_norm_sq);
            println!("max_length {}", r.max_length);
            println!("n_times_max {}", r.n_times_max);
            println!("power_term {:.4}", r.power_term);
            println!("ratio {:.6}", r.ratio);
            ctx.records(
                &["n", "p", "l2_norm_sq", "max_length", "n_times_max", "power_term", "ratio"],
                &[vec![
                    s.node_count.into(),
                    s.paths.len().into(),
                    r.l2_norm_sq.into(),
                    r.max_length.into(),
                    r.n_times_max.into(),
                    r.power_term.into(),
                    r.ratio.into(),
                ]],
            )
        }
        Cmd::Stats { input } => {
            let s = read_system(&input)?;
            let st = s.stats()?;
            println!("nodes {}", st.node_count);
            println!("paths {}", st.path_count);
            println!("size {}", st.size);
            println!("avg_degree {}", st.avg_degree);
            println!("avg_length {}", st.avg_length);
            println!("degree {}..{}", st.min_degree, st.max_degree);
            println!("length {}..{}", st.min_length, st.max_length);
            println!("l2_norm_sq {}", st.l2_norm_sq);
            println!("acyclic {}", st.acyclic);
            ctx.records(
                &["n", "p", "size", "d", "ell", "l2"],
                &[vec![
                    st.node_count.into(),
                    st.path_count.into(),
                    st.size.into(),
                    st.avg_degree.to_string().into(),
                    st.avg_length.to_string().into(),
                    st.l2_norm_sq.into(),
                ]],
            )
        }
        Cmd::Reduce { kind } => run_reduce(&ctx, kind),
        Cmd::Verify { kind } => run_verify(&ctx, kind),
        Cmd::Adversary { kind } => {
            let (input, h) = match &kind {
                Adversary::Shortcut { input, h } | Adversary::Hopset { input, h } => (input, read_digraph(h)?),
            };
            let s = read_system(input)?;
            let pick = match kind {
                Adversary::Shortcut { .. } => {
                    let edges: Vec<(usize, usize)> = h.edges.iter().map(|e| (e.0, e.1)).collect();
                    shortcut_adversary(&s, &edges)?
                }
                Adversary::Hopset { .. } => hopset_adversary(&s, &h.edges)?,
            };
            println!("demand {} pair {} {} hops {}", pick.demand, pick.pair.0, pick.pair.1, pick.hops);
            Ok(())
        }
        Cmd::Game { kind: Game::Online { input, builder } } => {
            let s = read_system(&input)?;
            let b = match builder {
                BuilderArg::Lazy => Builder::Lazy,
                BuilderArg::GreedyShortest => Builder::GreedyShortest,
            };
            let t = online_game(&s, b)?;
            let mut rows = Vec::new();
            for (i, r) in t.rounds.iter().enumerate() {
                println!("round {i} adversary +{} builder +{}", r.adversary_edges.len(), r.builder_edges.len());
                rows.push(vec![i.into(), r.adversary_edges.len().into(), r.builder_edges.len().into()]);
            }
            println!("final {}", t.final_builder_edges);
            ctx.records(&["round", "adversary_edges", "builder_edges"], &rows)
        }
        Cmd::Gap { kind } => run_gap(&ctx, kind),
    }
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn show_k(k: Option<usize>) -> String {
    k.map_or("inf".into(), |k| k.to_string())
}

fn parse_bipartite(text: &str) -> Result<(usize, Vec<Vec<usize>>)> {
    let mut left = None;
    let mut adj = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: &str| Error::Parse { line: i + 1, reason: reason.into() };
        let mut toks = line.split_whitespace();
        let head = toks.next().unwrap();
        let nums: Vec<usize> = toks.map(|t| t.parse().map_err(|_| err("bad integer"))).collect::<Result<_>>()?;
        match (head, left) {
            ("bipartite", None) if nums.len() == 1 => left = Some(nums[0]),
            ("right", Some(_)) => adj.push(nums),
            _ => return Err(err("expected `bipartite <left>` then `right ...` lines")),
        }
    }
    Ok((left.ok_or_else(|| Error::input("missing `bipartite` header"))?, adj))
}

fn run_search(ctx: &Ctx, args: SearchArgs) -> Result<()> {
    match args.table {
        None => {
            let k = args.k.0;
            let params = SearchParams { n: args.n, p: args.p, k, ordered: args.ordered, acyclic_only: args.acyclic };
            let r = max_system(params, args.budget)?;
            let name = if args.ordered { "beta*" } else { "beta" };
            println!("{name}({}, {}, {}) = {}", args.n, args.p, show_k(k), r.value);
            println!("explored {}", r.explored);
            if let Some(out) = &args.output {
                ctx.put_system(out, &r.witness, &[format!("{name} witness value {}", r.value)])?;
            } else {
                print!("{}", r.witness.serialize());
            }
            ctx.records(
                &["n", "p", "k", "ordered", "acyclic", "value", "explored"],
                &[vec![
                    args.n.into(),
                    args.p.into(),
                    show_k(k).into(),
                    (args.ordered as usize).into(),
                    (args.acyclic as usize).into(),
                    r.value.into(),
                    r.explored.into(),
                ]],
            )
        }
        Some(SearchTable::Table { max_n, max_p, ks, acyclic, budget, witness_dir }) => {
            let ks: Vec<Option<usize>> = ks.iter().map(|k| k.0).collect();
            let rows = beta_table(max_n, max_p, &ks, acyclic, budget)?;
            let mut records = Vec::new();
            println!("{:>3} {:>3} {:>4} {:>5} {:>6}", "n", "p", "k", "beta", "beta*");
            for r in &rows {
                let k = show_k(r.k);
                println!("{:>3} {:>3} {:>4} {:>5} {:>6}", r.n, r.p, k, r.beta.value, r.beta_star.value);
                if let Some(dir) = &witness_dir {
                    fs::create_dir_all(dir).map_err(|e| Error::Input(format!("{}: {e}", dir.display())))?;
                    for (tag, res) in [("beta", &r.beta), ("beta_star", &r.beta_star)] {
                        let path = dir.join(format!("{tag}_n{}_p{}_k{k}.ps", r.n, r.p));
                        ctx.put_system(&path.to_string_lossy(), &res.witness, &[format!("value {}", res.value)])?;
                    }
                }
                records.push(vec![
                    r.n.into(),
                    r.p.into(),
                    k.into(),
                    r.beta.value.into(),
                    r.beta_star.value.into(),
                    (r.beta.explored + r.beta_star.explored).into(),
                ]);
            }
            ctx.records(&["n", "p", "k", "beta", "beta_star", "explored"], &records)
        }
    }
}

fn run_reduce(ctx: &Ctx, kind: Reduce) -> Result<()> {
    match kind {
        Reduce::Rp(io) => ctx.put_digraph(&io.output, &system_to_digraph(&read_system(&io.input)?)?),
        Reduce::Dp(io) => ctx.put_digraph(&io.output, &dp_hard_instance(&read_system(&io.input)?)?),
        Reduce::Adp { io, k, budget } => {
            let (g, r) = adp_instance(&read_system(&io.input)?, k, budget)?;
            let min = r.min_hops.map_or("inf".into(), |h| h.to_string());
            note(&io.output, format!("min hops after one deletion {min} (k = {k})"));
            ctx.put_digraph(&io.output, &g)?;
            if !r.holds() {
                return Err(Error::Violation(format!("hop distance {min} below {k}")));
            }
            Ok(())
        }
        Reduce::Spanner { io, k } => {
            let g = read_digraph(&io.input)?;
            let mut ug = UGraph { node_count: g.node_count, edges: Vec::new() };
            for (u, v, w) in &g.edges {
                let w = u64::try_from(w).map_err(|_| Error::input(format!("weight {w} exceeds 64 bits")))?;
                ug.edges.push((*u, *v, w));
            }
            let h = greedy_spanner(&ug, k)?;
            let girth = h.girth().map_or("inf".into(), |c| c.to_string());
            note(&io.output, format!("kept {} of {} edges, girth {girth}", h.edges.len(), ug.edges.len()));
            let mut out = WeightedDigraph::new(h.node_count);
            out.edges = h.edges.iter().map(|&(u, v, w)| (u, v, w.into())).collect();
            ctx.put_digraph(&io.output, &out)?;
            if !check_stretch(&ug, &h, k) {
                return Err(Error::Violation("stretch exceeds k".into()));
            }
            Ok(())
        }
        Reduce::IndepDp(io) => {
            let g = read_digraph(&io.input)?;
            let (out, log) = make_independent_dp(&g, ctx.seed)?;
            note(&io.output, format!("{} rewrites, {} perturbation attempts", log.rewrites.len() - 1, log.perturb_attempts));
            for r in &log.rewrites {
                note(&io.output, format!("  {r:?}"));
            }
            ctx.put_digraph(&io.output, &out)
        }
        Reduce::IndepRp(io) => {
            let g = read_digraph(&io.input)?;
            let r = make_independent_rp(&g)?;
            note(&io.output, format!("{} components, {} tree edges, {} demands inside one component", r.instance.node_count, r.tree_edges.len(), r.dropped_inside));
            for w in &r.log.rewrites {
                note(&io.output, format!("  {w:?}"));
            }
            ctx.put_digraph(&io.output, &r.instance)
        }
    }
}

fn run_verify(ctx: &Ctx, kind: Verify) -> Result<()> {
    match kind {
        Verify::Independence { input, mode } => {
            check_independence(&read_digraph(&input)?, mode.into())?;
            println!("independent");
            Ok(())
        }
        Verify::UniqueShortest { input } => {
            let g = read_digraph(&input)?;
            let adj = g.adjacency();
            let w: Vec<_> = g.edges.iter().map(|e| e.2.clone()).collect();
            let mut rows = Vec::new();
            let mut bad = 0;
            for (i, &(s, t)) in g.demands.iter().enumerate() {
                let c = count_shortest_paths(&adj, &w, s, t);
                let count = if c.count >= 2 { "2+".to_string() } else { c.count.to_string() };
                let dist = c.distance.clone().map_or("inf".into(), |d| d.to_string());
                println!("demand {i} ({s},{t}) distance {dist} count {count}");
                bad += usize::from(c.count != 1);
                rows.push(vec![
                    i.into(),
                    s.into(),
                    t.into(),
                    c.distance.map_or(Cell::from("inf"), Cell::from),
                    count.into(),
                ]);
            }
            ctx.records(&["demand", "s", "t", "distance", "count"], &rows)?;
            if bad > 0 {
                return Err(Error::Violation(format!("{bad} demands without a unique shortest path")));
            }
            Ok(())
        }
        Verify::PreserverSize { input, mode } => {
            let size = preserver_size(&read_digraph(&input)?, mode.into())?;
            println!("{size}");
            ctx.records(&["preserver_size"], &[vec![size.into()]])
        }
    }
}

fn run_gap(ctx: &Ctx, kind: Gap) -> Result<()> {
    match kind {
        Gap::Multicut { system, d, output } => {
            let s = read_system(&system)?;
            let (parts, cov) = partition_paths(&s, d, ctx.seed)?;
            note(&output, format!("coverage per part {:?}, {} parts cover n/4", cov.per_part, cov.large_parts));
            let g = build_product(&build_gs(&s, &parts)?, &build_h(d, ctx.seed)?)?;
            write_text(&output, &(ctx.header() + &g.serialize()))
        }
        Gap::CheckLongPaths { input } => {
            let g = GapInstance::parse(&read_text(&input)?)?;
            let r = check_long_paths(&g)?;
            let min = r.min_nonterminals.map_or("none".into(), |m| m.to_string());
            println!("connected demands {} of {}", r.connected_demands, g.demands.len());
            println!("min nonterminals {min} (d' = {})", r.d_prime);
            println!("fractional value {}", r.fractional_value);
            Ok(())
        }
        Gap::MulticutExact { input, limit } => {
            let g = GapInstance::parse(&read_text(&input)?)?;
            let cut = brute_force_vertex_multicut(&g, limit)?;
            let packing = disjoint_path_packing(&g);
            println!("multicut {} cut {:?}", cut.size, cut.cut);
            println!("disjoint route packing {packing}");
            let frac = Ratio::new(g.params.big_n as u64, g.params.d_prime.max(1) as u64);
            println!("ratio to N/d' = {frac}: {}", Ratio::from_integer(cut.size as u64) / frac);
            if cut.size < packing {
                return Err(Error::Violation("multicut below the packing bound".into()));
            }
            Ok(())
        }
        Gap::Dsf { system, lambda } => {
            let s = read_system(&system)?;
            let r = clean_source_restricted(&s, lambda, ctx.seed)?;
            let dsf = build_dsf_instance(&r.system, &r.sources)?;
            let deg = r.system.degrees();
            for (k, &(x, y)) in dsf.demands.iter().enumerate() {
                println!("source {x} sink {y} degree {} disjoint routes {}", deg[x], dsf.disjoint_routes[k]);
            }
            Ok(())
        }
        Gap::NodeSplit { io } => {
            let g = GapInstance::parse(&read_text(&io.input)?)?;
            let (split, _) = node_split(&g.to_digraph());
            ctx.put_digraph(&io.output, &split)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Violation(_) | Error::Precondition(_) => 1,
        Error::Input(_) | Error::Parse { .. } | Error::Budget { .. } => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
