//! Subcommand definitions and implementations. Every command writes its
//! report to the given writer and returns the process exit code.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use lfdecouple::decouple::{
    decouple_polynomial_from_samples, decouple_rational_with, function_count, hadamard_product,
    reconstruct, AnchorPolicy, DecoupledModel, GridSpec, ModelKind, RationalOptions, SampleTensor,
    Which,
};
use lfdecouple::funcspec::{
    detect_degrees_with, parse, sample_grid, DetectOptions, Function, DEFAULT_PROBE_BUDGET,
    DEFAULT_SEED,
};
use lfdecouple::lagrange::NodeSet;
use lfdecouple::loewner::{default_left_nodes, DEFAULT_RANK_TOL};
use lfdecouple::numkit::rel_diff;
use lfdecouple::recursive::Recursion;
use lfdecouple::{Complex64, Error, Evaluator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exit::{self, usage};
use crate::input::{
    format_complex, format_point, parse_box, parse_degrees, parse_nodes, parse_values, parse_vars,
    SamplesFile,
};
use crate::model::{Metadata, ModelFile};

#[derive(Debug, Parser)]
#[command(
    name = "lfdecouple",
    version,
    about = "Decouple multivariate rational functions into single-variable vector functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect the degree of an expression in each variable.
    Detect(DetectArgs),
    /// Sample a function on a grid and write the decoupled model.
    Decouple(DecoupleArgs),
    /// Evaluate a model at given or random points.
    Eval(EvalArgs),
    /// Run consistency checks on a model file.
    Verify(VerifyArgs),
    /// List the decoupled single-variable functions of a model.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Expression, e.g. "x*y+x*z+y*z".
    #[arg(long)]
    pub expr: String,
    /// Comma-separated variable names, in order.
    #[arg(long)]
    pub vars: String,
    /// Relative singular-value threshold.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Loewner size of each probe.
    #[arg(long, default_value_t = DEFAULT_PROBE_BUDGET)]
    pub budget: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    Fail,
    Reanchor,
}

impl From<Policy> for AnchorPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Fail => AnchorPolicy::Fail,
            Policy::Reanchor => AnchorPolicy::Reanchor,
        }
    }
}

#[derive(Debug, Args)]
pub struct DecoupleArgs {
    /// Expression to sample.
    #[arg(long, required_unless_present = "samples", conflicts_with = "samples")]
    pub expr: Option<String>,
    /// JSON file with "shape", "nodes" and "values" (variable 1 slowest).
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Comma-separated variable names, in order.
    #[arg(long)]
    pub vars: Option<String>,
    /// Per-variable degrees d1,d2,...; each variable gets d+1 nodes.
    #[arg(long, conflicts_with = "auto")]
    pub degrees: Option<String>,
    /// Detect degrees from the expression (the default without --degrees).
    #[arg(long)]
    pub auto: bool,
    /// Right nodes per variable, e.g. "1,2;1:3". Overrides the degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub nodes: Option<String>,
    /// Left nodes per variable for --rational, same syntax as --nodes.
    #[arg(long = "left-nodes", requires = "rational", allow_hyphen_values = true)]
    pub left_nodes: Option<String>,
    /// Treat the function as rational and recover denominators from data.
    #[arg(long)]
    pub rational: bool,
    /// What to do when an anchor sample vanishes.
    #[arg(long, value_enum, default_value_t = Policy::Fail)]
    pub anchor_policy: Policy,
    /// Rank threshold for degree detection.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// One point, e.g. "1,2,3" or "0.5,1+2i".
    #[arg(
        long,
        required_unless_present = "random",
        conflicts_with = "random",
        allow_hyphen_values = true
    )]
    pub at: Option<String>,
    /// Number of random real points.
    #[arg(long)]
    pub random: Option<usize>,
    /// Bounds lo,hi of the random box, applied to every variable.
    #[arg(long = "box", default_value = "-1,1", allow_hyphen_values = true)]
    pub bounds: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Compare with an expression (default: the one stored in the model).
    #[arg(long, num_args = 0..=1)]
    pub compare_expr: Option<Option<String>>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Reference expression (default: the one stored in the model).
    #[arg(long)]
    pub expr: Option<String>,
    /// Random points per off-grid check.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    /// Greek function names.
    Text,
    /// ASCII only.
    #[value(alias = "latex-free-plain")]
    Plain,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = ExportFormat::Text)]
    pub format: ExportFormat,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Detect(a) => detect(a, out),
        Command::Decouple(a) => decouple(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Export(a) => export(a, out),
    }
}

fn join<T: ToString>(items: &[T], sep: &str) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

fn detect(args: DetectArgs, out: &mut dyn Write) -> Result<i32> {
    let f = parse(&args.expr, &parse_vars(&args.vars)?)?;
    let options = DetectOptions {
        budget: args.budget,
        tol: args.tol,
        seed: args.seed,
    };
    let degrees = detect_degrees_with(&f, options)?;
    writeln!(out, "degrees: {}", join(&degrees, " "))?;
    Ok(exit::OK)
}

/// Right nodes `1..=k` for `k = degree + 1`.
fn default_nodes(degrees: &[usize]) -> Result<Vec<NodeSet>> {
    degrees
        .iter()
        .map(|&d| {
            Ok(NodeSet::from_reals(
                &(1..=d + 1).map(|j| j as f64).collect::<Vec<_>>(),
            )?)
        })
        .collect()
}

/// Left nodes `−(κ−1)..0` with `κ = k`, or interleaved points when those
/// collide with the right nodes.
fn default_left(right: &NodeSet) -> Result<NodeSet> {
    let k = right.len();
    let candidate: Vec<Complex64> = (0..k)
        .map(|i| Complex64::new(i as f64 - (k - 1) as f64, 0.0))
        .collect();
    let mut union = right.as_slice().to_vec();
    union.extend_from_slice(&candidate);
    if NodeSet::new(union).is_ok() {
        Ok(NodeSet::new(candidate)?)
    } else {
        Ok(NodeSet::new(default_left_nodes(right.as_slice(), k))?)
    }
}

fn decouple(args: DecoupleArgs, out: &mut dyn Write) -> Result<i32> {
    let policy: AnchorPolicy = args.anchor_policy.into();
    let (model, left, expr) = match (&args.expr, &args.samples) {
        (Some(expr), None) => {
            let vars = parse_vars(
                args.vars
                    .as_deref()
                    .ok_or_else(|| usage("--vars is required with --expr"))?,
            )?;
            let f = parse(expr, &vars)?;
            let nodes = if let Some(spec) = &args.nodes {
                parse_nodes(spec)?
            } else {
                let degrees = match &args.degrees {
                    Some(d) => parse_degrees(d)?,
                    None => {
                        let options = DetectOptions {
                            tol: args.tol,
                            seed: args.seed,
                            ..DetectOptions::default()
                        };
                        let d = detect_degrees_with(&f, options)?;
                        writeln!(out, "degrees: {}", join(&d, " "))?;
                        d
                    }
                };
                if degrees.len() != vars.len() {
                    return Err(Error::Shape(format!(
                        "{} degrees for {} variables",
                        degrees.len(),
                        vars.len()
                    ))
                    .into());
                }
                default_nodes(&degrees)?
            };
            let grid = GridSpec::new(vars, nodes)?;
            let (model, left) = build_from_expr(&f, &grid, &args, policy)?;
            (model, left, Some(expr.clone()))
        }
        (None, Some(path)) => {
            if args.rational {
                return Err(usage(
                    "--rational needs function evaluations at left nodes; use --expr",
                ));
            }
            let file = SamplesFile::load(path)?;
            let nodes = file.node_sets()?;
            let vars = match (&args.vars, &file.variables) {
                (Some(v), _) => parse_vars(v)?,
                (None, Some(v)) => v.clone(),
                (None, None) => (1..=nodes.len()).map(|i| format!("x{i}")).collect(),
            };
            let grid = GridSpec::new(vars, nodes)?;
            let samples = SampleTensor::new(grid.shape().clone(), file.values())?;
            let model = decouple_polynomial_from_samples(samples, &grid, policy)?;
            (model, None, None)
        }
        _ => return Err(usage("give exactly one of --expr and --samples")),
    };

    let dims = model.grid().shape().dims().to_vec();
    let count = function_count(&dims);
    let evaluations = if model.evaluations() == 0 {
        model.grid_size()
    } else {
        model.evaluations()
    };
    let metadata = Metadata {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        ord_tol: args.tol,
        seed: args.seed,
        sample_count: evaluations,
        function_count: count,
        expr,
    };
    ModelFile::from_model(&model, left.as_deref(), metadata).save(&args.out)?;
    writeln!(
        out,
        "grid: {} = {} points",
        join(&dims, " x "),
        model.grid_size()
    )?;
    writeln!(out, "{evaluations} samples, {count} decoupled functions")?;
    writeln!(out, "model written to {}", args.out.display())?;
    Ok(exit::OK)
}

fn build_from_expr(
    f: &Function,
    grid: &GridSpec,
    args: &DecoupleArgs,
    policy: AnchorPolicy,
) -> Result<(DecoupledModel, Option<Vec<NodeSet>>)> {
    if !args.rational {
        let samples = sample_grid(f, grid)?;
        return Ok((
            decouple_polynomial_from_samples(samples, grid, policy)?,
            None,
        ));
    }
    let left = match &args.left_nodes {
        Some(spec) => parse_nodes(spec)?,
        None => grid
            .nodes()
            .iter()
            .map(default_left)
            .collect::<Result<Vec<_>>>()?,
    };
    let options = RationalOptions {
        anchor_policy: policy,
        ..RationalOptions::default()
    };
    let model = decouple_rational_with(f, grid, &left, options)?;
    Ok((model, Some(left)))
}

fn load(path: &Path) -> Result<(ModelFile, DecoupledModel)> {
    let file = ModelFile::load(path)?;
    let model = file.to_model()?;
    Ok((file, model))
}

fn reference_expr(file: &ModelFile, given: Option<String>) -> Option<Result<Function>> {
    given
        .or_else(|| file.metadata.expr.clone())
        .map(|src| Ok(parse(&src, &file.variables)?))
}

fn random_points(seed: u64, count: usize, n: usize, lo: f64, hi: f64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..n)
                .map(|_| Complex64::new(rng.gen_range(lo..hi), 0.0))
                .collect()
        })
        .collect()
}

fn eval(args: EvalArgs, out: &mut dyn Write) -> Result<i32> {
    let (file, model) = load(&args.model)?;
    let n = model.grid().ndim();
    let points = match (&args.at, args.random) {
        (Some(at), _) => {
            let p = parse_values(at)?;
            if p.len() != n {
                return Err(Error::Shape(format!(
                    "--at has {} coordinates, model has {n} variables",
                    p.len()
                ))
                .into());
            }
            vec![p]
        }
        (None, Some(count)) => {
            let (lo, hi) = parse_box(&args.bounds)?;
            random_points(args.seed, count, n, lo, hi)
        }
        (None, None) => return Err(usage("give --at or --random")),
    };
    let reference =
        match args.compare_expr {
            None => None,
            Some(given) => Some(reference_expr(&file, given).ok_or_else(|| {
                usage("--compare-expr needs an expression; the model stores none")
            })??),
        };
    let mut worst: f64 = 0.0;
    for p in &points {
        let value = reconstruct(&model, p)?;
        if args.at.is_some() {
            writeln!(out, "{}", format_complex(value))?;
        } else if reference.is_none() {
            writeln!(out, "{} -> {}", format_point(p), format_complex(value))?;
        }
        if let Some(f) = &reference {
            worst = worst.max(rel_diff(value, f.evaluate(p)?));
        }
    }
    if reference.is_some() {
        writeln!(
            out,
            "max relative error: {worst:.3e} over {} points",
            points.len()
        )?;
    }
    Ok(exit::OK)
}

/// Looks up stored grid samples; any point off the grid is an error.
struct GridLookup<'a> {
    model: &'a DecoupledModel,
}

impl Evaluator for GridLookup<'_> {
    fn eval(&self, point: &[Complex64]) -> lfdecouple::Result<Complex64> {
        let grid = self.model.grid();
        let index = point
            .iter()
            .zip(grid.nodes())
            .map(|(&x, nodes)| nodes.as_slice().iter().position(|&z| z == x))
            .collect::<Option<Vec<usize>>>()
            .ok_or_else(|| Error::Shape(format!("point {point:?} is not on the grid")))?;
        Ok(self.model.samples().get(&index))
    }
}

struct Report<'a> {
    out: &'a mut dyn Write,
    failed: usize,
}

impl Report<'_> {
    fn check(&mut self, name: &str, measured: f64, tol: f64) -> Result<()> {
        let ok = measured <= tol;
        if !ok {
            self.failed += 1;
        }
        let verdict = if ok { "PASS" } else { "FAIL" };
        writeln!(
            self.out,
            "{verdict} {name}: {measured:.3e} (tolerance {tol:e})"
        )?;
        Ok(())
    }

    fn fail(&mut self, name: &str, why: &str) -> Result<()> {
        self.failed += 1;
        writeln!(self.out, "FAIL {name}: {why}")?;
        Ok(())
    }

    fn skip(&mut self, name: &str, why: &str) -> Result<()> {
        writeln!(self.out, "SKIP {name}: {why}")?;
        Ok(())
    }
}

/// Real box spanned by each variable's nodes, widened when degenerate.
fn node_box_points(model: &DecoupledModel, trials: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds: Vec<(f64, f64)> = model
        .grid()
        .nodes()
        .iter()
        .map(|n| {
            let re = n.as_slice().iter().map(|z| z.re);
            let lo = re.clone().fold(f64::INFINITY, f64::min);
            let hi = re.fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 1.0, lo + 1.0)
            }
        })
        .collect();
    (0..trials)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| Complex64::new(rng.gen_range(lo..hi), 0.0))
                .collect()
        })
        .collect()
}

fn max_over<I: IntoIterator<Item = Result<f64>>>(items: I) -> Result<f64> {
    items.into_iter().try_fold(0.0f64, |acc, x| Ok(acc.max(x?)))
}

fn verify(args: VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let (file, model) = load(&args.model)?;
    let grid = model.grid();
    let mut report = Report { out, failed: 0 };

    let normalization = model
        .num_stack()
        .anchor_deviation(grid)
        .max(model.den_stack().anchor_deviation(grid));
    report.check("normalization", normalization, 1e-12)?;

    let telescoped = model.telescoped_values();
    let telescoping = telescoped
        .iter()
        .zip(model.samples().values())
        .map(|(&a, &b)| rel_diff(a, b))
        .fold(0.0, f64::max);
    report.check("telescoping", telescoping, 1e-11)?;

    let interpolation = max_over(grid.shape().indices().map(|index| {
        let value = reconstruct(&model, &grid.point(&index))?;
        Ok(rel_diff(value, model.samples().get(&index)))
    }));
    match interpolation {
        Ok(v) => report.check("interpolation", v, 1e-11)?,
        Err(e) => report.fail("interpolation", &e.to_string())?,
    }

    let points = node_box_points(&model, args.trials, args.seed);
    if model.kind() == ModelKind::Polynomial {
        let unity = max_over(points.iter().map(|p| {
            let den: Complex64 = hadamard_product(&model, p, Which::Den)?.into_iter().sum();
            Ok((den - Complex64::new(1.0, 0.0)).norm())
        }));
        match unity {
            Ok(v) => report.check("partition of unity", v, 1e-12)?,
            Err(e) => report.fail("partition of unity", &e.to_string())?,
        }
    } else {
        report.skip("partition of unity", "rational model")?;
    }

    match reference_expr(&file, args.expr) {
        None => report.skip("off-grid", "no expression given or stored")?,
        Some(f) => {
            let f = f?;
            let off = max_over(
                points
                    .iter()
                    .map(|p| Ok(rel_diff(reconstruct(&model, p)?, f.evaluate(p)?))),
            );
            match off {
                Ok(v) => report.check("off-grid", v, 1e-10)?,
                Err(e) => report.fail("off-grid", &e.to_string())?,
            }
        }
    }

    if model.kind() == ModelKind::Polynomial {
        let lookup = GridLookup { model: &model };
        let rec = Recursion::new(&lookup, grid);
        let agreement = max_over(
            points
                .iter()
                .map(|p| Ok(rel_diff(rec.eval(p)?, reconstruct(&model, p)?))),
        );
        match agreement {
            Ok(v) => report.check("recursive vs direct", v, 1e-12)?,
            Err(e) => report.fail("recursive vs direct", &e.to_string())?,
        }
    } else {
        report.skip("recursive vs direct", "rational model")?;
    }

    if report.failed == 0 {
        writeln!(report.out, "all checks passed")?;
        Ok(exit::OK)
    } else {
        writeln!(report.out, "{} check(s) failed", report.failed)?;
        Ok(exit::FAILURE)
    }
}

const GREEK: [&str; 8] = ["φ", "ψ", "ω", "χ", "θ", "η", "ζ", "ξ"];
const ASCII: [&str; 8] = ["phi", "psi", "omega", "chi", "theta", "eta", "zeta", "xi"];

fn function_name(level: usize, format: ExportFormat) -> String {
    let names = match format {
        ExportFormat::Text => &GREEK,
        ExportFormat::Plain => &ASCII,
    };
    names
        .get(level)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("f{}", level + 1))
}

fn export(args: ExportArgs, out: &mut dyn Write) -> Result<i32> {
    let (_, model) = load(&args.model)?;
    let grid = model.grid();
    let shape = grid.shape();
    let vars = grid.variables();
    let nodes_line = vars
        .iter()
        .zip(grid.nodes())
        .map(|(v, n)| format!("{v} = ({})", format_point(n.as_slice())))
        .collect::<Vec<_>>()
        .join(", ");
    let anchors_line = vars
        .iter()
        .zip(grid.anchors())
        .map(|(v, a)| format!("{v}_{}", a + 1))
        .collect::<Vec<_>>()
        .join(", ");
    writeln!(out, "# nodes: {nodes_line}")?;
    writeln!(out, "# anchors: {anchors_line}")?;

    let sides: &[(Which, &str, &str)] = match model.kind() {
        ModelKind::Polynomial => &[(Which::Num, "", "f")],
        ModelKind::Rational => match args.format {
            ExportFormat::Text => &[(Which::Num, "\u{302}", "n"), (Which::Den, "", "d")],
            ExportFormat::Plain => &[(Which::Num, "_hat", "n"), (Which::Den, "", "d")],
        },
    };
    for l in 0..shape.ndim() {
        let k = shape.dims()[l];
        let anchor = grid.anchors()[l];
        for prefix in 0..shape.prefix_len(l) {
            let index = {
                let mut idx = vec![0; l];
                let mut rest = prefix;
                for m in (0..l).rev() {
                    idx[m] = rest % shape.dims()[m];
                    rest /= shape.dims()[m];
                }
                idx
            };
            let args_with = |middle: &str| -> String {
                (0..vars.len())
                    .map(|m| {
                        if m < l {
                            format!("{}_{}", vars[m], index[m] + 1)
                        } else if m == l {
                            middle.to_string()
                        } else {
                            format!("{}_{}", vars[m], grid.anchors()[m] + 1)
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            let subscript = if l == 0 {
                String::new()
            } else {
                format!("_{}", prefix + 1)
            };
            for &(which, mark, f) in sides {
                let name = format!("{}{mark}{subscript}", function_name(l, args.format));
                let mut rhs = format!("{f}({})", args_with(&vars[l]));
                if l > 0 {
                    let anchor_arg = format!("{}_{}", vars[l], anchor + 1);
                    rhs.push_str(&format!(" / {f}({})", args_with(&anchor_arg)));
                }
                let values = &model.stack(which).level(l)[prefix * k..(prefix + 1) * k];
                let values = values
                    .iter()
                    .map(|&z| format_complex(z))
                    .collect::<Vec<_>>();
                writeln!(
                    out,
                    "{name}({}) = {rhs}; at {}_1..{}_{k}: {}",
                    vars[l],
                    vars[l],
                    vars[l],
                    values.join(", ")
                )?;
            }
        }
    }
    Ok(exit::OK)
}

/// Exit code and message for an error returned by a command.
pub fn describe(error: &anyhow::Error) -> (i32, String) {
    let code = exit::code_for(error);
    let mut message = format!("error: {error:#}");
    if code == exit::ANCHOR {
        message.push_str("\nhint: pick other nodes or pass --anchor-policy reanchor");
    } else if code == exit::POLE {
        message.push_str("\nhint: move the nodes (--nodes, --left-nodes) away from poles");
    }
    (code, message)
}
