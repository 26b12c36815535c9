use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rigidity::generators::{self, GridSpec};
use rigidity::model::json::{any_framework_to_json, parse_framework, LoadError, ModeRequest};
use rigidity::model::AnyFramework;
use rigidity::numeric::DEFAULT_RANK_TOL;
use rigidity::report::{display_flex, report_json, serialize_report, AnalysisOptions, ReportError};
use rigidity::svg::{render_svg, SvgOptions};

const EXIT_OTHER: u8 = 1;
const EXIT_SCHEMA: u8 = 2;
const EXIT_UNSUPPORTED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "rigidity",
    version,
    about = "Rigidity analysis of bar-and-joint frameworks in normed spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a framework document and print the JSON report.
    Analyze(AnalyzeArgs),
    /// Print a framework document for a named example or family.
    Generate {
        #[command(subcommand)]
        which: Generate,
        /// Write to this file instead of stdout.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Draw a framework as SVG.
    Render(RenderArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Exact,
    Float,
}

impl From<ModeArg> for ModeRequest {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Auto => ModeRequest::Auto,
            ModeArg::Exact => ModeRequest::Exact,
            ModeArg::Float => ModeRequest::Float,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    input: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Relative rank tolerance (float mode).
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also draw the framework.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Draw a nontrivial flex in the SVG.
    #[arg(long)]
    flex_arrows: bool,
    /// Add wall-clock timing to the report (breaks byte-identical output).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct RenderArgs {
    input: PathBuf,
    #[arg(long)]
    svg: PathBuf,
    #[arg(long)]
    flex_arrows: bool,
    /// Pixels per unit length.
    #[arg(long, default_value_t = 100.0)]
    scale: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    tol: f64,
}

#[derive(Subcommand)]
enum Generate {
    /// One bar from (0,0) to (1,1) in the l_inf plane.
    SingleBar,
    /// Seven-vertex l_inf framework with two coincident vertices.
    SevenVertex,
    /// K4 on (+-1, +-1) in the l_inf plane.
    LinfK4,
    /// K4 on the unit square in the l_p plane.
    K4Square {
        #[arg(long, default_value_t = 4.0)]
        p: f64,
    },
    /// Euclidean braced square with two mid-edge vertices.
    BracedSquare,
    /// 4x4 grid with four corner braces.
    Fig5i {
        #[arg(long, default_value_t = 4.0)]
        p: f64,
    },
    /// 4x4 grid with anti-diagonal braces.
    Fig5ii {
        #[arg(long, default_value_t = 4.0)]
        p: f64,
    },
    /// Doubly-braced m x n grid.
    Grid {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// Brace cells as "i,j;i,j;...".
        #[arg(long, default_value = "")]
        braces: String,
        #[arg(long, default_value_t = 4.0)]
        p: f64,
    },
    /// Seeded K4 plus a vertex on the segment v1 v2.
    Colinear {
        #[arg(long, default_value_t = 4.0)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Put v1 and v2 at equal height (t = 1/2); otherwise t = 1/3.
        #[arg(long)]
        axis_aligned: bool,
    },
}

fn load(path: &Path, mode: ModeArg) -> Result<AnyFramework> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_framework(&text, mode.into())?)
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn svg_for(fw: &AnyFramework, flex_arrows: bool, tol: f64, scale: f64) -> String {
    let opts = SvgOptions {
        scale,
        ..SvgOptions::default()
    };
    match fw {
        AnyFramework::Exact(f) => {
            let flex = flex_arrows.then(|| display_flex(f, tol)).flatten();
            render_svg(f, flex.as_deref(), &opts)
        }
        AnyFramework::Float(f) => {
            let flex = flex_arrows.then(|| display_flex(f, tol)).flatten();
            render_svg(f, flex.as_deref(), &opts)
        }
    }
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let fw = load(&args.input, args.mode)?;
    let opts = AnalysisOptions {
        tol: args.tol,
        seed: args.seed,
        timing: args.timing,
    };
    let report = report_json(&fw, &opts)?;
    write_or_print(args.json.as_deref(), &serialize_report(&report))?;
    if let Some(path) = &args.svg {
        let svg = svg_for(&fw, args.flex_arrows, args.tol, SvgOptions::default().scale);
        fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn generate(which: &Generate) -> Result<AnyFramework> {
    let fw = match which {
        Generate::SingleBar => generators::gen_fixture("linf_single_bar", 0.0)?,
        Generate::SevenVertex => generators::gen_fixture("linf_seven_vertex", 0.0)?,
        Generate::LinfK4 => generators::gen_fixture("linf_k4_square", 0.0)?,
        Generate::K4Square { p } => generators::gen_fixture("lp_k4_square", *p)?,
        Generate::BracedSquare => generators::gen_fixture("euclid_braced_square_midpoints", 0.0)?,
        Generate::Fig5i { p } => generators::gen_fixture("flexible_grid_fig5i", *p)?,
        Generate::Fig5ii { p } => generators::gen_fixture("stable_grid_fig5ii", *p)?,
        Generate::Grid { m, n, braces, p } => {
            AnyFramework::Float(generators::gen_grid(&GridSpec {
                m: *m,
                n: *n,
                braces: generators::parse_braces(braces)?,
                p: *p,
            })?)
        }
        Generate::Colinear {
            p,
            seed,
            axis_aligned,
        } => AnyFramework::Float(generators::colinear_augmentation(*p, *seed, *axis_aligned)?),
    };
    Ok(fw)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(args) => analyze(&args),
        Command::Generate { which, out } => {
            let fw = generate(&which)?;
            write_or_print(
                out.as_deref(),
                &serialize_report(&any_framework_to_json(&fw)),
            )
        }
        Command::Render(args) => {
            let fw = load(&args.input, args.mode)?;
            let svg = svg_for(&fw, args.flex_arrows, args.tol, args.scale);
            fs::write(&args.svg, svg).with_context(|| format!("writing {}", args.svg.display()))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<LoadError>() {
        return match e {
            LoadError::Json(_) | LoadError::Schema(_) => EXIT_SCHEMA,
            LoadError::Unsupported(_) => EXIT_UNSUPPORTED,
        };
    }
    if let Some(ReportError::Unsupported(_)) = err.downcast_ref::<ReportError>() {
        return EXIT_UNSUPPORTED;
    }
    EXIT_OTHER
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
