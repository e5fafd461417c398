//! Batch front door: subcommands composing the library modules into
//! reproducible runs with persisted artifacts and machine-readable
//! reports.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage/input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::{Integer, Rational};

use sweepout::grid::{self, GridMode, PlanOverrides};
use sweepout::io::{self, GridArtifact, RunManifest};
use sweepout::precision;
use sweepout::random::{self, ProbabilityProfile};
use sweepout::rotation::{self, BinConstraint, RotationError};
use sweepout::sequences::{self, DomainPolicy, GrowthSpec};

#[derive(Parser)]
#[command(
    name = "sweepout",
    version,
    about = "Exact-arithmetic construction and verification of strong sweeping out"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output path (primary artifact; sibling files derive from it).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed for sampling subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel verification (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Precision cap in bits for enclosure refinement.
    #[arg(long, global = true)]
    precision_cap: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a sequence file.
    GenSeq {
        #[arg(long, value_enum)]
        kind: SeqKind,
        /// Slack parameter eta as a rational "p/q".
        #[arg(long, default_value = "1/1")]
        eta: String,
        /// First index (paper kind; must be >= 3).
        #[arg(long, default_value_t = 3)]
        n0: u64,
        /// Ratio rho as a rational "p/q" (ratio kind).
        #[arg(long, default_value = "3/1")]
        rho: String,
        /// First term (ratio kind).
        #[arg(long, default_value_t = 1)]
        start: u64,
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
    /// Check a sequence file against a growth condition.
    VerifyGrowth {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long, value_enum)]
        spec: SpecKind,
        #[arg(long, default_value = "1/1")]
        eta: String,
        #[arg(long, default_value = "2/1")]
        rho: String,
        /// Error on indices where the bound is undefined instead of
        /// skipping them.
        #[arg(long)]
        strict: bool,
    },
    /// Solve for a rotation number hitting prescribed bins.
    SolveRotation {
        #[arg(long)]
        q: u64,
        /// Constraint "a:target", repeatable, in increasing a.
        #[arg(long = "constraint")]
        constraints: Vec<String>,
    },
    /// Plan, partition, assign, and solve a sweep-out grid; write the
    /// artifact JSON.
    BuildGrid {
        #[arg(long)]
        seq: PathBuf,
        #[command(flatten)]
        grid: GridFlags,
    },
    /// Run the full pipeline and verify the coverage certificate.
    VerifySweepout {
        #[arg(long)]
        seq: PathBuf,
        /// Reuse a solved grid artifact instead of solving afresh.
        #[arg(long)]
        grid_file: Option<PathBuf>,
        #[command(flatten)]
        grid: GridFlags,
        /// Pseudo-random sample points per cube for direct block-average
        /// evaluation.
        #[arg(long, default_value_t = 3)]
        samples: u32,
    },
    /// Sample a random sub-lacunary index set.
    Random {
        #[arg(long, default_value = "1/2")]
        eta: String,
        #[arg(long)]
        tmax: u64,
    },
    /// Thin a draw into B/D/E and verify the structural invariants.
    Thin {
        #[arg(long)]
        draw: PathBuf,
        /// Override the draw's eta when building the interval grid.
        #[arg(long)]
        eta: Option<String>,
        /// Override the grid horizon (mismatches are rejected).
        #[arg(long)]
        grid_tmax: Option<u64>,
    },
    /// Exact counting-function density B(t)/A(t) at checkpoints.
    Density {
        #[arg(long)]
        draw: PathBuf,
        #[arg(long)]
        thin: PathBuf,
        /// Comma-separated checkpoints; default: powers of 10 up to t_max.
        #[arg(long)]
        checkpoints: Option<String>,
    },
}

#[derive(Args)]
struct GridFlags {
    #[arg(long, default_value = "2/1")]
    eta: String,
    #[arg(long, default_value = "1/2")]
    epsilon: String,
    #[arg(long = "c", default_value = "2/1")]
    c: String,
    #[arg(long, value_enum, default_value_t = ModeKind::Demo)]
    mode: ModeKind,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    block_length: Option<u64>,
    #[arg(long)]
    n1: Option<u64>,
}

#[derive(Copy, Clone, ValueEnum)]
enum SeqKind {
    Paper,
    Ratio,
}

#[derive(Copy, Clone, ValueEnum)]
enum SpecKind {
    Loglog,
    Ratio,
    Lacunary,
}

#[derive(Copy, Clone, ValueEnum)]
enum ModeKind {
    Demo,
    Full,
}

/// Failure carrying the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn verification(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(cap) = cli.common.precision_cap {
        precision::set_precision_cap(cap);
    }
    if cli.common.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.common.threads)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let started = Instant::now();
    match &cli.command {
        Command::GenSeq {
            kind,
            eta,
            n0,
            rho,
            start,
            count,
        } => cmd_gen_seq(&cli.common, *kind, eta, *n0, rho, *start, *count, started),
        Command::VerifyGrowth {
            seq,
            spec,
            eta,
            rho,
            strict,
        } => cmd_verify_growth(seq, *spec, eta, rho, *strict),
        Command::SolveRotation { q, constraints } => {
            cmd_solve_rotation(&cli.common, *q, constraints, started)
        }
        Command::BuildGrid { seq, grid } => cmd_build_grid(&cli.common, seq, grid, started),
        Command::VerifySweepout {
            seq,
            grid_file,
            grid,
            samples,
        } => cmd_verify_sweepout(&cli.common, seq, grid_file.as_deref(), grid, *samples, started),
        Command::Random { eta, tmax } => cmd_random(&cli.common, eta, *tmax, started),
        Command::Thin {
            draw,
            eta,
            grid_tmax,
        } => cmd_thin(&cli.common, draw, eta.as_deref(), *grid_tmax, started),
        Command::Density {
            draw,
            thin,
            checkpoints,
        } => cmd_density(&cli.common, draw, thin, checkpoints.as_deref(), started),
    }
}

fn rational_flag(s: &str, name: &str) -> Result<Rational, Failure> {
    io::parse_rational(s).map_err(|m| Failure::usage(format!("--{name}: {m}")))
}

fn require_out(common: &Common) -> Result<&Path, Failure> {
    common
        .out
        .as_deref()
        .ok_or_else(|| Failure::usage("--out is required for this subcommand"))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn finish_manifest(
    mut manifest: RunManifest,
    out: &Path,
    started: Instant,
) -> Result<(), Failure> {
    manifest.duration_ms = started.elapsed().as_millis();
    manifest.outputs.push(out.display().to_string());
    manifest.write(&manifest_path(out))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen_seq(
    common: &Common,
    kind: SeqKind,
    eta: &str,
    n0: u64,
    rho: &str,
    start: u64,
    count: usize,
    started: Instant,
) -> Result<(), Failure> {
    let out = require_out(common)?;
    let (seq, manifest) = match kind {
        SeqKind::Paper => {
            let eta_q = rational_flag(eta, "eta")?;
            let seq = sequences::generate_paper_example(&eta_q, n0, count)?;
            let manifest = RunManifest::new("gen-seq")
                .param("kind", "paper")
                .param("eta", eta)
                .param("n0", n0)
                .param("count", count);
            (seq, manifest)
        }
        SeqKind::Ratio => {
            let rho_q = rational_flag(rho, "rho")?;
            let seq =
                sequences::generate_ratio_sequence(&rho_q, &Integer::from(start), count)?;
            let manifest = RunManifest::new("gen-seq")
                .param("kind", "ratio")
                .param("rho", rho)
                .param("start", start)
                .param("count", count);
            (seq, manifest)
        }
    };
    io::write_sequence(out, &seq)?;
    println!(
        "wrote {} terms (indices {}..={}) to {}",
        seq.len(),
        seq.start_index(),
        seq.last_index(),
        out.display()
    );
    finish_manifest(manifest, out, started)
}

fn cmd_verify_growth(
    seq_path: &Path,
    spec: SpecKind,
    eta: &str,
    rho: &str,
    strict: bool,
) -> Result<(), Failure> {
    let seq = io::read_sequence(seq_path)?;
    let spec = match spec {
        SpecKind::Loglog => GrowthSpec::LogLogDeterministic {
            eta: rational_flag(eta, "eta")?,
        },
        SpecKind::Ratio => GrowthSpec::FixedRatio {
            rho: rational_flag(rho, "rho")?,
        },
        SpecKind::Lacunary => GrowthSpec::Lacunary {
            eta: rational_flag(eta, "eta")?,
        },
    };
    let policy = if strict {
        DomainPolicy::Strict
    } else {
        DomainPolicy::Permissive
    };
    let report = sequences::verify_growth(&seq, &spec, policy)?;
    if report.holds {
        println!("growth condition holds on all {} ratios", seq.len() - 1);
        Ok(())
    } else {
        Err(Failure::verification(format!(
            "growth condition violated first at index {}",
            report.first_violation.expect("violation recorded")
        )))
    }
}

fn cmd_solve_rotation(
    common: &Common,
    q: u64,
    raw: &[String],
    started: Instant,
) -> Result<(), Failure> {
    if q < 2 {
        return Err(Failure::usage("--q must be at least 2"));
    }
    let constraints: Vec<BinConstraint> = raw
        .iter()
        .map(|s| {
            let (a, target) = s
                .split_once(':')
                .ok_or_else(|| Failure::usage(format!("bad constraint {s:?}, want a:target")))?;
            let a: Integer = a
                .trim()
                .parse()
                .map_err(|e| Failure::usage(format!("bad a in {s:?}: {e}")))?;
            let target: u64 = target
                .trim()
                .parse()
                .map_err(|e| Failure::usage(format!("bad target in {s:?}: {e}")))?;
            Ok(BinConstraint::new(a, target))
        })
        .collect::<Result<_, Failure>>()?;
    let r = rotation::solve_rotation(&constraints, q).map_err(|e| match e {
        RotationError::Infeasible(_) | RotationError::VerificationFailed => {
            Failure::verification(e.to_string())
        }
        other => Failure::usage(other.to_string()),
    })?;
    let rendered = io::rational_to_string(r.value());
    println!("r = {rendered}");
    if let Some(out) = common.out.as_deref() {
        io::ensure_parent_and_write(out, &format!("{rendered}\n"))?;
        let manifest = RunManifest::new("solve-rotation")
            .param("q", q)
            .param("constraints", raw.join(","));
        finish_manifest(manifest, out, started)?;
    }
    Ok(())
}

/// Shared pipeline: plan, partition, assign, solve.
fn build_pipeline(
    seq_path: &Path,
    flags: &GridFlags,
) -> Result<
    (
        sweepout::sequences::IntegerSequence,
        sweepout::grid::GridParameters,
        sweepout::grid::IndexPartition,
        sweepout::grid::CubeAssignment,
    ),
    Failure,
> {
    let seq = io::read_sequence(seq_path)?;
    let eta = rational_flag(&flags.eta, "eta")?;
    let epsilon = rational_flag(&flags.epsilon, "epsilon")?;
    let c = rational_flag(&flags.c, "c")?;
    let mode = match flags.mode {
        ModeKind::Demo => GridMode::Demo,
        ModeKind::Full => GridMode::Full,
    };
    let overrides = PlanOverrides {
        q: flags.q,
        k: flags.k,
        block_length: flags.block_length,
        n1: flags.n1,
    };
    let params = grid::plan_parameters(&eta, &epsilon, &c, mode, &overrides)?;
    let n_total = match params.mode {
        GridMode::Demo => params.cube_count() * params.block_length,
        GridMode::Full => seq.last_index(),
    };
    let partition = grid::partition_indices(&params, n_total)?;
    let assignment = grid::assign_targets(&partition, &params, &seq)?;
    Ok((seq, params, partition, assignment))
}

fn cmd_build_grid(
    common: &Common,
    seq_path: &Path,
    flags: &GridFlags,
    started: Instant,
) -> Result<(), Failure> {
    let out = require_out(common)?;
    let (_seq, params, partition, assignment) = build_pipeline(seq_path, flags)?;
    let r = grid::solve_all_rotations(&assignment)?;
    let artifact =
        GridArtifact::from_parts(&params, &partition, &r, &seq_path.display().to_string());
    io::write_json(out, &artifact)?;
    println!(
        "grid Q={} K={} ({} cubes), rotation solved, artifact at {}",
        params.q,
        params.k,
        params.cube_count(),
        out.display()
    );
    let manifest = RunManifest::new("build-grid")
        .param("seq", seq_path.display().to_string())
        .param("eta", &flags.eta)
        .param("epsilon", &flags.epsilon)
        .param("c", &flags.c)
        .param("q", params.q)
        .param("k", params.k);
    finish_manifest(manifest, out, started)
}

fn cmd_verify_sweepout(
    common: &Common,
    seq_path: &Path,
    grid_file: Option<&Path>,
    flags: &GridFlags,
    samples: u32,
    started: Instant,
) -> Result<(), Failure> {
    let out = require_out(common)?;
    let (seq, params, partition, assignment, r) = match grid_file {
        Some(path) => {
            let artifact: GridArtifact = io::read_json(path)?;
            let params = artifact.parameters().map_err(Failure::usage)?;
            let partition = artifact.partition();
            let seq = io::read_sequence(seq_path)?;
            let assignment = grid::assign_targets(&partition, &params, &seq)?;
            let r = artifact.rotation_vector().map_err(Failure::usage)?;
            (seq, params, partition, assignment, r)
        }
        None => {
            let (seq, params, partition, assignment) = build_pipeline(seq_path, flags)?;
            let r = grid::solve_all_rotations(&assignment)?;
            (seq, params, partition, assignment, r)
        }
    };
    let bad = grid::BadSet::new(params.k, params.q);
    let report = grid::verify_sweepout(
        &seq,
        &params,
        &partition,
        &assignment,
        &r,
        &bad,
        samples,
        common.seed,
    )?;
    io::write_json(out, &report)?;
    io::write_cube_csv(&out.with_extension("csv"), &report)?;
    let manifest = RunManifest::new("verify-sweepout")
        .param("seq", seq_path.display().to_string())
        .param("q", params.q)
        .param("k", params.k)
        .param("samples", samples)
        .param("seed", common.seed);
    finish_manifest(manifest, out, started)?;
    if report.full_cover {
        println!(
            "full cover: all {} cubes certified; bad-set measure {} (~{:.4})",
            report.cube_reports.len(),
            report.bad_set_measure,
            report.bad_set_measure_approx
        );
        Ok(())
    } else {
        let bad_cube = report
            .cube_reports
            .iter()
            .find(|c| !c.pass)
            .expect("failed report names a cube");
        Err(Failure::verification(format!(
            "cube {} failed (witness {:?}); report at {}",
            bad_cube.cube_index,
            bad_cube.witness,
            out.display()
        )))
    }
}

fn cmd_random(common: &Common, eta: &str, tmax: u64, started: Instant) -> Result<(), Failure> {
    let out = require_out(common)?;
    let eta_q = rational_flag(eta, "eta")?;
    if eta_q <= 0 {
        return Err(Failure::usage("--eta must be positive"));
    }
    let profile = ProbabilityProfile::theorem3(eta_q.clone());
    let draw = random::sample_sequence(&profile, tmax, common.seed)?;
    io::write_draw(out, &draw, &eta_q)?;
    println!(
        "selected {} of {} indices, draw at {}",
        draw.selected.len(),
        tmax - draw.n_start + 1,
        out.display()
    );
    let manifest = RunManifest::new("random")
        .param("eta", eta)
        .param("tmax", tmax)
        .param("seed", common.seed);
    finish_manifest(manifest, out, started)
}

fn cmd_thin(
    common: &Common,
    draw_path: &Path,
    eta_override: Option<&str>,
    grid_tmax: Option<u64>,
    started: Instant,
) -> Result<(), Failure> {
    let out = require_out(common)?;
    let (draw, draw_eta) = io::read_draw(draw_path)?;
    let eta = match eta_override {
        Some(s) => rational_flag(s, "eta")?,
        None => draw_eta,
    };
    let grid = random::build_interval_grid(&eta, grid_tmax.unwrap_or(draw.t_max))?;
    let result = random::thin(&draw, &grid)?;
    io::write_thinning(out, &result)?;
    let report = random::verify_thinning(&result, &grid)?;
    println!(
        "B={} D={} E={} head={} truncated={}",
        result.b.len(),
        result.d.len(),
        result.e.len(),
        result.head_len,
        result.truncated.len()
    );
    let manifest = RunManifest::new("thin")
        .param("draw", draw_path.display().to_string())
        .param("eta", io::rational_to_string(&eta));
    finish_manifest(manifest, out, started)?;
    if report.all_ok {
        println!("thinning invariants verified");
        Ok(())
    } else {
        Err(Failure::verification(
            "thinning invariants failed verification".to_string(),
        ))
    }
}

fn cmd_density(
    common: &Common,
    draw_path: &Path,
    thin_path: &Path,
    checkpoints: Option<&str>,
    started: Instant,
) -> Result<(), Failure> {
    let out = require_out(common)?;
    let (draw, _) = io::read_draw(draw_path)?;
    let result = io::read_thinning(thin_path)?;
    let checkpoints: Vec<u64> = match checkpoints {
        Some(s) => s
            .split(',')
            .map(|c| {
                c.trim()
                    .parse()
                    .map_err(|e| Failure::usage(format!("bad checkpoint {c:?}: {e}")))
            })
            .collect::<Result<_, _>>()?,
        None => {
            let mut t = 10u64;
            let mut cps = Vec::new();
            while t < draw.t_max {
                cps.push(t);
                t = t.saturating_mul(10);
            }
            cps.push(draw.t_max);
            cps
        }
    };
    let rows = random::density_report(&draw, &result, &checkpoints);
    io::write_density_csv(out, &rows)?;
    for row in &rows {
        println!(
            "t={} A(t)={} B(t)={} ratio={}/{}",
            row.t, row.a_count, row.b_count, row.ratio_num, row.ratio_den
        );
    }
    let manifest = RunManifest::new("density")
        .param("draw", draw_path.display().to_string())
        .param("thin", thin_path.display().to_string());
    finish_manifest(manifest, out, started)
}
