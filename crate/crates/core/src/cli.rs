//! Command-line front end.

use std::fs;
use std::io::{BufRead, Write};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::entropy::{
    hb_partition, jb_information, shannon_information, shannon_partition_entropy,
};
use crate::error::{Error, Result};
use crate::io::{
    export_dot, fmt_num, model_to_json, parse_model, parse_tree, tree_to_json, ModelFormat,
    ParseOptions,
};
use crate::model::{partition_by, refine_partition, DiagnosisModel};
use crate::oracle::{
    check_identities, generate_instance, InstanceSpec, PriorDistribution, VerificationReport,
};
use crate::planner::{
    build_tree, compare_criteria, diagnose_step, Criterion, Cursor, DiagnosisTree, Node,
    PlanReport, Step,
};

#[derive(Debug, Parser)]
#[command(
    name = "diagent",
    version,
    about = "Diagnostic entropy and greedy diagnosis trees"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Alphabet size: required by `gen`, optional for CSV models (inferred
    /// from the data when omitted).
    #[arg(long, global = true)]
    lambda: Option<u32>,
    /// Rescale priors to sum to one instead of rejecting them.
    #[arg(long, global = true)]
    renormalize: bool,
    /// Model file format; defaults to the file extension.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeasureArg {
    Shannon,
    Cb,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CriterionArg {
    Cb,
    Shannon,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PriorArg {
    Uniform,
    Random,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model document.
    Validate { model: String },
    /// Entropy of the partition induced by the given symptoms.
    Entropy {
        model: String,
        #[arg(long, value_enum, default_value = "both")]
        measure: MeasureArg,
        /// Logarithm base for the Shannon measure (default: lambda).
        #[arg(long)]
        base: Option<u32>,
        /// Symptoms already applied, comma separated.
        #[arg(long, value_delimiter = ',')]
        after: Vec<String>,
    },
    /// Information of one symptom, optionally given earlier symptoms.
    Info {
        model: String,
        #[arg(long)]
        symptom: String,
        #[arg(long, value_delimiter = ',')]
        after: Vec<String>,
        #[arg(long, value_enum, default_value = "both")]
        measure: MeasureArg,
        #[arg(long)]
        base: Option<u32>,
    },
    /// Build a greedy diagnosis tree and print its ledger.
    Plan {
        model: String,
        #[arg(long, value_enum, default_value = "cb")]
        criterion: CriterionArg,
        /// Write the tree document here.
        #[arg(long)]
        out: Option<String>,
        /// Write a graph description here.
        #[arg(long)]
        dot: Option<String>,
    },
    /// Walk a tree interactively, reading one symptom value per line.
    Diagnose { tree: String, model: String },
    /// Check every identity against brute-force oracles.
    Verify {
        model: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the report as JSON here.
        #[arg(long)]
        json: Option<String>,
    },
    /// Compare greedy trees under both criteria.
    Compare { model: String },
    /// Emit a random model document.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "random")]
        prior: PriorArg,
    },
}

/// Exit status of a verification run with at least one failing check.
pub const EXIT_VERIFY_FAILED: i32 = 3;

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run_cli<I, S>(
    args: I,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                2
            } else {
                let _ = write!(stdout, "{e}");
                0
            };
            return code;
        }
    };
    match run(cli, stdin, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli, stdin: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let g = &cli.global;
    match cli.command {
        Command::Validate { model } => {
            let m = load(&model, g, err)?;
            writeln!(
                out,
                "ok: {} conditions, {} symptoms, lambda {}",
                m.n(),
                m.t(),
                m.lambda()
            )?;
        }
        Command::Entropy {
            model,
            measure,
            base,
            after,
        } => {
            let m = load(&model, g, err)?;
            let applied = symptom_indices(&m, &after)?;
            let p = partition_by(&m, &applied)?;
            writeln!(out, "after: {}", join_names(&m, &applied))?;
            writeln!(out, "blocks: {}", p.len())?;
            if measure != MeasureArg::Cb {
                let base = base.unwrap_or(m.lambda());
                let h = shannon_partition_entropy(&p, &m, base)?;
                writeln!(out, "H (shannon, base {base}): {}", fmt_num(h.value))?;
            }
            if measure != MeasureArg::Shannon {
                writeln!(out, "H_B (cb): {}", fmt_num(hb_partition(&p).value))?;
            }
        }
        Command::Info {
            model,
            symptom,
            after,
            measure,
            base,
        } => {
            let m = load(&model, g, err)?;
            let applied = symptom_indices(&m, &after)?;
            let r = symptom_index(&m, &symptom)?;
            let before = partition_by(&m, &applied)?;
            let refined = refine_partition(&before, &m, r)?;
            writeln!(out, "symptom: {}", m.symptom_name(r))?;
            writeln!(out, "after: {}", join_names(&m, &applied))?;
            writeln!(out, "blocks: {} -> {}", before.len(), refined.len())?;
            if measure != MeasureArg::Cb {
                let base = base.unwrap_or(m.lambda());
                let j = shannon_information(&before, &refined, &m, base)?;
                writeln!(out, "J (shannon, base {base}): {}", fmt_num(j.value))?;
            }
            if measure != MeasureArg::Shannon {
                let j = jb_information(&before, &refined)?;
                writeln!(out, "J_B (cb): {}", fmt_num(j.value))?;
            }
        }
        Command::Plan {
            model,
            criterion,
            out: tree_path,
            dot,
        } => {
            let m = load(&model, g, err)?;
            let criterion = match criterion {
                CriterionArg::Cb => Criterion::combinatorial(),
                CriterionArg::Shannon => Criterion::shannon_for(&m),
            };
            let (tree, report) = build_tree(&m, criterion)?;
            write_report(out, &m, &report)?;
            write_paths(out, &m, &tree)?;
            if let Some(path) = tree_path {
                write_file(&path, &tree_to_json(&tree, &m))?;
            }
            if let Some(path) = dot {
                write_file(&path, &export_dot(&tree, &m))?;
            }
        }
        Command::Diagnose { tree, model } => {
            let m = load(&model, g, err)?;
            let text = read_file(&tree)?;
            let tree = parse_tree(&text, &m)?;
            diagnose(&tree, &m, stdin, out, err)?;
        }
        Command::Verify {
            model,
            trials,
            seed,
            json,
        } => {
            let m = load(&model, g, err)?;
            let report = check_identities(&m, trials, seed)?;
            writeln!(
                out,
                "model: n={} t={} lambda={} trials={} seed={}",
                report.n, report.t, report.lambda, report.trials, report.seed
            )?;
            let width = report
                .checks
                .iter()
                .map(|c| c.name.len())
                .max()
                .unwrap_or(0);
            for c in &report.checks {
                writeln!(
                    out,
                    "{:<width$}  {}  max {:<18}  tol {:<18}  evals {:>6}  violations {:>4}",
                    c.name,
                    if c.passed { "PASS" } else { "FAIL" },
                    fmt_num(c.max_deviation),
                    fmt_num(c.tolerance),
                    c.evaluations,
                    c.violations,
                )?;
            }
            let failed = report.checks.iter().filter(|c| !c.passed).count();
            if failed == 0 {
                writeln!(out, "all {} checks passed", report.checks.len())?;
            } else {
                writeln!(out, "{failed} of {} checks failed", report.checks.len())?;
            }
            if let Some(path) = json {
                let mut text =
                    serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
                text.push('\n');
                write_file(&path, &text)?;
            }
            return Ok(verify_status(&report));
        }
        Command::Compare { model } => {
            let m = load(&model, g, err)?;
            let c = compare_criteria(&m)?;
            writeln!(out, "{:<20}  {:<18}  shannon", "", "cb")?;
            let row = |out: &mut dyn Write, label: &str, a: String, b: String| -> Result<()> {
                writeln!(out, "{label:<20}  {a:<18}  {b}")?;
                Ok(())
            };
            let (a, b) = (&c.combinatorial, &c.shannon);
            let root = |r: &PlanReport| {
                r.steps
                    .first()
                    .map_or("-".to_string(), |s| m.symptom_name(s.symptom).to_string())
            };
            row(out, "root symptom", root(a), root(b))?;
            row(
                out,
                "expected tests",
                fmt_num(a.expected_test_count),
                fmt_num(b.expected_test_count),
            )?;
            row(
                out,
                "worst-case depth",
                a.worst_case_depth.to_string(),
                b.worst_case_depth.to_string(),
            )?;
            row(
                out,
                "leaves",
                a.leaf_count.to_string(),
                b.leaf_count.to_string(),
            )?;
            row(
                out,
                "ambiguous leaves",
                a.ambiguous_leaves.to_string(),
                b.ambiguous_leaves.to_string(),
            )?;
            row(
                out,
                "residual H_B",
                fmt_num(a.residual_cb),
                fmt_num(b.residual_cb),
            )?;
            row(
                out,
                "residual H",
                fmt_num(a.residual_shannon),
                fmt_num(b.residual_shannon),
            )?;
            match c.optimum {
                Some(v) => writeln!(out, "optimum expected tests: {}", fmt_num(v))?,
                None => writeln!(out, "optimum expected tests: n/a")?,
            }
        }
        Command::Gen { n, t, seed, prior } => {
            let lambda = g
                .lambda
                .ok_or_else(|| Error::InvalidSpec("gen needs --lambda".into()))?;
            let prior = match prior {
                PriorArg::Uniform => PriorDistribution::Uniform,
                PriorArg::Random => PriorDistribution::RandomSimplex,
            };
            let m = generate_instance(&InstanceSpec {
                n,
                t,
                lambda,
                prior,
                seed,
            })?;
            out.write_all(model_to_json(&m).as_bytes())?;
        }
    }
    Ok(0)
}

/// 0 when every identity held, [`EXIT_VERIFY_FAILED`] otherwise.
pub fn verify_status(report: &VerificationReport) -> i32 {
    if report.passed() {
        0
    } else {
        EXIT_VERIFY_FAILED
    }
}

fn load(path: &str, g: &GlobalOpts, err: &mut dyn Write) -> Result<DiagnosisModel> {
    let text = read_file(path)?;
    let format = match g.format {
        Some(FormatArg::Json) => ModelFormat::Json,
        Some(FormatArg::Csv) => ModelFormat::Csv,
        None => ModelFormat::from_path(path),
    };
    let options = ParseOptions {
        lambda: g.lambda,
        renormalize: g.renormalize,
    };
    let parsed = parse_model(&text, format, &options)?;
    for w in &parsed.warnings {
        writeln!(err, "warning: {w}")?;
    }
    Ok(parsed.model)
}

fn read_file(path: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))
}

fn write_file(path: &str, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{path}: {e}")))
}

fn symptom_index(m: &DiagnosisModel, name: &str) -> Result<usize> {
    m.symptom_index(name).ok_or_else(|| Error::UnknownName {
        kind: "symptom",
        name: name.to_string(),
    })
}

fn symptom_indices(m: &DiagnosisModel, names: &[String]) -> Result<Vec<usize>> {
    names.iter().map(|s| symptom_index(m, s.trim())).collect()
}

fn join_names(m: &DiagnosisModel, symptoms: &[usize]) -> String {
    if symptoms.is_empty() {
        return "-".to_string();
    }
    symptoms
        .iter()
        .map(|&r| m.symptom_name(r))
        .collect::<Vec<_>>()
        .join(",")
}

fn write_steps(out: &mut dyn Write, m: &DiagnosisModel, steps: &[Step]) -> Result<()> {
    writeln!(
        out,
        "  {:>4}  {:<12}  {:<18}  residual",
        "step", "symptom", "information"
    )?;
    for (k, s) in steps.iter().enumerate() {
        writeln!(
            out,
            "  {:>4}  {:<12}  {:<18}  {}",
            k + 1,
            m.symptom_name(s.symptom),
            fmt_num(s.information),
            fmt_num(s.residual)
        )?;
    }
    Ok(())
}

fn write_report(out: &mut dyn Write, m: &DiagnosisModel, r: &PlanReport) -> Result<()> {
    writeln!(out, "criterion: {}", r.criterion)?;
    writeln!(out, "initial entropy: {}", fmt_num(r.initial_entropy))?;
    writeln!(out, "tests (breadth-first):")?;
    write_steps(out, m, &r.steps)?;
    writeln!(out, "most probable path:")?;
    write_steps(out, m, &r.path_ledger)?;
    writeln!(out, "total information: {}", fmt_num(r.total_information))?;
    writeln!(out, "residual entropy: {}", fmt_num(r.residual_entropy))?;
    writeln!(out, "residual H_B: {}", fmt_num(r.residual_cb))?;
    writeln!(out, "residual H: {}", fmt_num(r.residual_shannon))?;
    writeln!(out, "expected tests: {}", fmt_num(r.expected_test_count))?;
    writeln!(out, "worst-case depth: {}", r.worst_case_depth)?;
    writeln!(
        out,
        "leaves: {} ({} ambiguous)",
        r.leaf_count, r.ambiguous_leaves
    )?;
    Ok(())
}

fn write_paths(out: &mut dyn Write, m: &DiagnosisModel, tree: &DiagnosisTree) -> Result<()> {
    writeln!(out, "paths:")?;
    for path in tree.paths() {
        let tests: Vec<String> = path
            .symptoms
            .iter()
            .zip(&path.values)
            .map(|(&r, v)| format!("{}={v}", m.symptom_name(r)))
            .collect();
        let Node::Leaf {
            members, status, ..
        } = tree.node(path.leaf)
        else {
            continue;
        };
        let names: Vec<&str> = members.iter().map(|&i| m.condition_name(i)).collect();
        writeln!(
            out,
            "  {} -> {} ({})",
            if tests.is_empty() {
                "-".to_string()
            } else {
                tests.join(" ")
            },
            names.join(", "),
            match status {
                crate::planner::LeafStatus::Resolved => "resolved",
                crate::planner::LeafStatus::Ambiguous => "ambiguous",
            }
        )?;
    }
    Ok(())
}

fn diagnose(
    tree: &DiagnosisTree,
    m: &DiagnosisModel,
    stdin: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let max = tree.lambda() - 1;
    let mut cursor = tree.start();
    let mut line = String::new();
    while let Cursor::Test(id) = cursor {
        let Node::Test { symptom, .. } = tree.node(id) else {
            unreachable!("cursor points at a test node");
        };
        write!(out, "{} [0-{max}]: ", m.symptom_name(*symptom))?;
        out.flush()?;
        line.clear();
        if stdin.read_line(&mut line)? == 0 {
            return Err(Error::Io("input ended before a leaf was reached".into()));
        }
        let value = match line.trim().parse::<u32>() {
            Ok(v) if v <= max => v,
            _ => {
                writeln!(
                    err,
                    "expected an integer in 0..={max}, got `{}`",
                    line.trim()
                )?;
                continue;
            }
        };
        cursor = diagnose_step(tree, m, id, value)?;
    }
    let Cursor::Leaf(id) = cursor else {
        unreachable!()
    };
    let Node::Leaf {
        members,
        posterior,
        status,
    } = tree.node(id)
    else {
        unreachable!("cursor points at a leaf");
    };
    let status = match status {
        crate::planner::LeafStatus::Resolved => "resolved",
        crate::planner::LeafStatus::Ambiguous => "ambiguous",
    };
    writeln!(out)?;
    writeln!(out, "{status}:")?;
    let mut ranked: Vec<(usize, f64)> = members
        .iter()
        .copied()
        .zip(posterior.iter().copied())
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (i, q) in ranked {
        writeln!(out, "  {}  {}", m.condition_name(i), fmt_num(q))?;
    }
    Ok(())
}
