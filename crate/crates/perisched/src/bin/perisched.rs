//! Command-line front end: instance generation, solving, evaluation,
//! packing dumps, SVG rendering and the benchmark harness.
//!
//! Exit codes: 0 ok, 1 usage error, 2 no feasible result, 3 internal error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use perisched::bench::{bench_corpus, rows_to_csv, run_method, summarize, BenchConfig, Method};
use perisched::criteria::{
    compute_criteria, render_ratio, utilization, CriteriaReport, Criterion, Rat,
};
use perisched::instgen::{
    gen_3partition, gen_general, gen_theory, gen_topology, GenConfig, Generated, TheoryConfig,
    TheoryKind, TopConfig, TopologyKind,
};
use perisched::io::{parse_instance, parse_schedule, write_instance, write_packing, write_schedule, write_trace};
use perisched::model::{Instance, Time};
use perisched::packing::{pack_instance, PackOutcome2, DEFAULT_PACK_BUDGET};
use perisched::render::{render_gantt, render_packing};
use perisched::search::SearchConfig;

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "perisched", version, about = "Periodic chain scheduling toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance corpus with witness schedules and a manifest.
    Gen(GenArgs),
    /// Solve one instance and write schedule, criteria and trace.
    Solve(SolveArgs),
    /// Recompute criteria for an instance/schedule pair.
    Eval(EvalArgs),
    /// Dump per-resource canonical packings.
    Pack(PackArgs),
    /// Render Gantt and packing views as SVG.
    Render(RenderArgs),
    /// Run a method matrix over a corpus directory.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Gen,
    Top,
    Theory,
    #[value(name = "3part")]
    ThreePart,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TopKindArg {
    Star,
    Triangle,
    Bridge,
    Line,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionArg {
    Dgsum,
    Dgmax,
    Dgalpha,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    out: PathBuf,
    /// Number of instances (seeds seed..seed+count).
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    base_period: Time,
    #[arg(long, default_value_t = 3)]
    num_periods: usize,
    /// Candidate consecutive period ratios.
    #[arg(long, value_delimiter = ',', default_values_t = [2u64, 3, 4])]
    ratios: Vec<Time>,
    #[arg(long, default_value_t = 5)]
    resources: usize,
    /// Minimum-utilization target in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    target_util: f64,
    /// Topology kind (top family).
    #[arg(long, value_enum, default_value_t = TopKindArg::Star)]
    kind: TopKindArg,
    #[arg(long, default_value_t = 20)]
    messages: usize,
    /// Scattering shape for the theory family.
    #[arg(long, default_value_t = false)]
    tree: bool,
    /// 3-partition: number of triples.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// 3-partition: bound B.
    #[arg(long, default_value_t = 8)]
    b: Time,
    /// 3-partition: comma-separated item sizes (3n of them).
    #[arg(long, value_delimiter = ',')]
    items: Option<Vec<Time>>,
    /// Enforce the classic B/4 < a_i < B/3 window.
    #[arg(long, default_value_t = false)]
    strict: bool,
}

#[derive(Args)]
struct SolverOpts {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 60.0)]
    time_limit_s: f64,
    /// Deterministic iteration cap (overrides wall-clock as primary stop).
    #[arg(long)]
    max_iters: Option<u64>,
    #[arg(long, value_enum, default_value_t = CriterionArg::Dgsum)]
    criterion: CriterionArg,
    /// Alpha values for alpha-degeneracy, e.g. --alpha 0.8 --alpha 0.5.
    #[arg(long = "alpha")]
    alphas: Vec<f64>,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    /// leftmost|predecessor[-warm|-flow], offset, johnson.
    #[arg(long, default_value = "predecessor-flow")]
    method: String,
    #[command(flatten)]
    solver: SolverOpts,
    /// Output directory; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    instance: PathBuf,
    schedule: PathBuf,
    #[arg(long = "alpha")]
    alphas: Vec<f64>,
}

#[derive(Args)]
struct PackArgs {
    instance: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    instance: PathBuf,
    /// Schedule to draw as a Gantt chart; omit to render the packing only.
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Repeatable; defaults to the full first-fit matrix.
    #[arg(long = "method")]
    methods: Vec<String>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Dataset tag in the output (defaults to the corpus dir name).
    #[arg(long)]
    dataset: Option<String>,
    /// Average over all instances instead of solved only.
    #[arg(long, default_value_t = false)]
    all_instances: bool,
    #[command(flatten)]
    solver: SolverOpts,
    /// Directory for the CSV; summary always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn internal(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INTERNAL,
        message: message.into(),
    }
}

fn seed_of(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("PERISCHED_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0)
}

fn ratio_arg(x: f64, what: &str) -> Result<Rat, Failure> {
    if !(0.0..=1.0).contains(&x) {
        return Err(usage(format!("{what} must be in [0, 1], got {x}")));
    }
    Ok(Rat::new((x * 1000.0).round() as u64, 1000))
}

fn read_instance(path: &Path) -> Result<Instance, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_out(path: &Path, content: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| internal(format!("mkdir {}: {e}", dir.display())))?;
    }
    std::fs::write(path, content).map_err(|e| internal(format!("write {}: {e}", path.display())))
}

fn solver_config(opts: &SolverOpts) -> Result<SearchConfig, Failure> {
    let alphas: Vec<Rat> = opts
        .alphas
        .iter()
        .map(|&a| ratio_arg(a, "--alpha"))
        .collect::<Result<_, _>>()?;
    let criterion = match opts.criterion {
        CriterionArg::Dgsum => Criterion::DgSum,
        CriterionArg::Dgmax => Criterion::DgMax,
        CriterionArg::Dgalpha => {
            if alphas.is_empty() {
                return Err(usage("--criterion dgalpha requires at least one --alpha"));
            }
            Criterion::DgAlphaSum(0)
        }
    };
    Ok(SearchConfig {
        time_limit_s: opts.time_limit_s,
        rng_seed: seed_of(opts.seed),
        criterion,
        alphas,
        max_iters: opts.max_iters,
        ..Default::default()
    })
}

fn report_text(instance: &Instance, report: &CriteriaReport) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let (per, max) = utilization(instance);
    let per: Vec<String> = per.iter().map(|&u| render_ratio(u, 2)).collect();
    let _ = writeln!(out, "utilization per-resource {}", per.join(" "));
    let _ = writeln!(out, "utilization max {}", render_ratio(max, 2));
    let _ = writeln!(out, "dg_sum {}", report.dg_sum);
    let _ = writeln!(out, "dg_max {}", report.dg_max);
    for (i, a) in report.alphas.iter().enumerate() {
        let _ = writeln!(
            out,
            "dg_alpha[{}] sum {} max {}",
            render_ratio(*a, 2),
            report.dg_alpha_sum[i],
            report.dg_alpha_max[i]
        );
    }
    let _ = writeln!(out, "phi_longest {}", render_ratio(report.phi_longest, 2));
    let _ = writeln!(out, "omega_longest {}", render_ratio(report.omega_longest, 2));
    for (k, c) in report.chains.iter().enumerate() {
        let _ = writeln!(out, "chain {} se {} dg {}", k + 1, c.se, c.dg);
    }
    out
}

fn cmd_gen(args: &GenArgs) -> Result<u8, Failure> {
    let seed0 = seed_of(args.seed);
    let target = ratio_arg(args.target_util, "--target-util")?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| internal(format!("mkdir {}: {e}", args.out.display())))?;
    let mut manifest = String::from("# file family seed\n");
    for i in 0..args.count {
        let seed = seed0 + i;
        let (tag, generated): (&str, Generated) = match args.family {
            Family::Gen => (
                "gen",
                gen_general(&GenConfig {
                    base_period: args.base_period,
                    num_periods: args.num_periods,
                    ratios: args.ratios.clone(),
                    resources: args.resources,
                    target_util: target,
                    seed,
                }),
            ),
            Family::Top => {
                let kind = match args.kind {
                    TopKindArg::Star => TopologyKind::Star {
                        leaves: args.resources.max(2),
                    },
                    TopKindArg::Triangle => TopologyKind::Triangle,
                    TopKindArg::Bridge => TopologyKind::Bridge,
                    TopKindArg::Line => TopologyKind::StubbedLine {
                        switches: args.resources.max(2),
                    },
                };
                let out = gen_topology(&TopConfig {
                    kind,
                    base_period: args.base_period,
                    num_periods: args.num_periods,
                    ratios: args.ratios.clone(),
                    messages: args.messages,
                    target_util: target,
                    seed,
                })
                .map_err(|e| usage(e.to_string()))?;
                ("top", out)
            }
            Family::Theory => (
                "theory",
                gen_theory(&TheoryConfig {
                    kind: if args.tree {
                        TheoryKind::Tree
                    } else {
                        TheoryKind::Line
                    },
                    resources: args.resources,
                    base_period: args.base_period,
                    num_periods: args.num_periods,
                    ratios: args.ratios.clone(),
                    target_util: target,
                    seed,
                }),
            ),
            Family::ThreePart => {
                let items = args
                    .items
                    .clone()
                    .ok_or_else(|| usage("--items is required for the 3part family"))?;
                let instance = gen_3partition(args.n, args.b, &items, args.strict)
                    .map_err(|e| usage(e.to_string()))?;
                (
                    "3part",
                    Generated {
                        instance,
                        witness: None,
                        filler_chains: 0,
                    },
                )
            }
        };
        let name = format!("{tag}-{seed:04}");
        let inst_path = args.out.join(format!("{name}.inst"));
        write_out(&inst_path, &write_instance(&generated.instance))?;
        if let Some(witness) = &generated.witness {
            write_out(
                &args.out.join(format!("{name}.witness")),
                &write_schedule(&generated.instance, witness),
            )?;
        }
        manifest.push_str(&format!("{name}.inst {tag} {seed}\n"));
        if args.family == Family::ThreePart {
            break; // items define one gadget, not a seeded family
        }
    }
    write_out(&args.out.join("manifest.txt"), &manifest)?;
    Ok(EXIT_OK)
}

fn cmd_solve(args: &SolveArgs) -> Result<u8, Failure> {
    let instance = read_instance(&args.instance)?;
    let method = Method::parse(&args.method).map_err(|e| usage(e.to_string()))?;
    let config = solver_config(&args.solver)?;
    let outcome = run_method(&instance, method, &config);
    let Some(schedule) = outcome.schedule else {
        let why = if outcome.shape_mismatch {
            "method does not apply to this instance shape"
        } else {
            "no feasible schedule found within the budget"
        };
        return Err(Failure {
            code: EXIT_INFEASIBLE,
            message: why.into(),
        });
    };
    let report = outcome.report.expect("feasible result carries a report");
    let schedule_text = write_schedule(&instance, &schedule);
    let criteria_text = report_text(&instance, &report);
    match &args.out {
        Some(dir) => {
            let stem = args
                .instance
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "instance".into());
            write_out(&dir.join(format!("{stem}.sched")), &schedule_text)?;
            write_out(&dir.join(format!("{stem}.criteria")), &criteria_text)?;
            write_out(&dir.join(format!("{stem}.trace")), &write_trace(&outcome.trace))?;
            println!("{criteria_text}");
        }
        None => {
            println!("{schedule_text}");
            println!("{criteria_text}");
        }
    }
    Ok(EXIT_OK)
}

fn cmd_eval(args: &EvalArgs) -> Result<u8, Failure> {
    let instance = read_instance(&args.instance)?;
    let text = std::fs::read_to_string(&args.schedule)
        .map_err(|e| usage(format!("cannot read {}: {e}", args.schedule.display())))?;
    let schedule = parse_schedule(&instance, &text)
        .map_err(|e| usage(format!("{}: {e}", args.schedule.display())))?;
    let alphas: Vec<Rat> = args
        .alphas
        .iter()
        .map(|&a| ratio_arg(a, "--alpha"))
        .collect::<Result<_, _>>()?;
    match compute_criteria(&instance, &schedule, &alphas) {
        Ok(report) => {
            println!("{}", report_text(&instance, &report));
            Ok(EXIT_OK)
        }
        Err(verdict) => Err(Failure {
            code: EXIT_INFEASIBLE,
            message: format!("schedule is infeasible: {verdict:?}"),
        }),
    }
}

fn cmd_pack(args: &PackArgs) -> Result<u8, Failure> {
    let instance = read_instance(&args.instance)?;
    let per_resource = match pack_instance(&instance, DEFAULT_PACK_BUDGET) {
        PackOutcome2::Packed(p) => p,
        PackOutcome2::Unsat(m) => {
            return Err(Failure {
                code: EXIT_INFEASIBLE,
                message: format!("resource {} admits no canonical packing", m + 1),
            })
        }
        PackOutcome2::Unknown(m) => {
            return Err(Failure {
                code: EXIT_INFEASIBLE,
                message: format!("packing search exhausted its budget on resource {}", m + 1),
            })
        }
    };
    let flat: Vec<(usize, perisched::packing::PlacedRect)> = per_resource
        .iter()
        .enumerate()
        .flat_map(|(m, rects)| rects.iter().map(move |r| (m, r.clone())))
        .collect();
    let text = write_packing(&instance, &flat);
    match &args.out {
        Some(dir) => {
            let stem = args
                .instance
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "instance".into());
            write_out(&dir.join(format!("{stem}.pack")), &text)?;
        }
        None => println!("{text}"),
    }
    Ok(EXIT_OK)
}

fn cmd_render(args: &RenderArgs) -> Result<u8, Failure> {
    let instance = read_instance(&args.instance)?;
    let stem = args
        .instance
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into());
    if let Some(schedule_path) = &args.schedule {
        let text = std::fs::read_to_string(schedule_path)
            .map_err(|e| usage(format!("cannot read {}: {e}", schedule_path.display())))?;
        let schedule = parse_schedule(&instance, &text)
            .map_err(|e| usage(format!("{}: {e}", schedule_path.display())))?;
        write_out(
            &args.out.join(format!("{stem}-gantt.svg")),
            &render_gantt(&instance, &schedule),
        )?;
    }
    if let PackOutcome2::Packed(per_resource) = pack_instance(&instance, DEFAULT_PACK_BUDGET) {
        write_out(
            &args.out.join(format!("{stem}-packing.svg")),
            &render_packing(&instance, &per_resource),
        )?;
    } else if args.schedule.is_none() {
        return Err(Failure {
            code: EXIT_INFEASIBLE,
            message: "nothing to render: no schedule given and packing failed".into(),
        });
    }
    Ok(EXIT_OK)
}

fn cmd_bench(args: &BenchArgs) -> Result<u8, Failure> {
    let methods: Vec<Method> = if args.methods.is_empty() {
        ["leftmost", "predecessor", "predecessor-warm", "predecessor-flow"]
            .iter()
            .map(|t| Method::parse(t).unwrap())
            .collect()
    } else {
        args.methods
            .iter()
            .map(|t| Method::parse(t).map_err(|e| usage(e.to_string())))
            .collect::<Result<_, _>>()?
    };
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&args.corpus)
        .map_err(|e| usage(format!("cannot read corpus {}: {e}", args.corpus.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "inst"))
        .collect();
    entries.sort();
    if entries.is_empty() {
        return Err(usage(format!(
            "corpus {} contains no .inst files",
            args.corpus.display()
        )));
    }
    let mut corpus = Vec::new();
    for path in entries {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        corpus.push((id, read_instance(&path)?));
    }
    let dataset = args.dataset.clone().unwrap_or_else(|| {
        args.corpus
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "corpus".into())
    });
    let config = BenchConfig {
        methods,
        search: solver_config(&args.solver)?,
        jobs: args.jobs.unwrap_or(1),
        solved_only: !args.all_instances,
    };
    let rows = bench_corpus(&dataset, &corpus, &config);
    print!("{}", summarize(&rows));
    if let Some(dir) = &args.out {
        write_out(&dir.join(format!("{dataset}.csv")), &rows_to_csv(&rows))?;
    }
    if rows.iter().all(|r| r.solved == 0) {
        return Err(Failure {
            code: EXIT_INFEASIBLE,
            message: "no method solved any instance".into(),
        });
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successes; anything else is usage.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_OK)
            };
        }
    };
    let result = match &cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Pack(args) => cmd_pack(args),
        Command::Render(args) => cmd_render(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("perisched: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
