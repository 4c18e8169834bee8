use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hypspec::cache::{SpectrumCache, CACHE_ENV};
use hypspec::formats::{read_group, read_spectrum, write_spectrum};
use hypspec::manifest::RunManifest;
use hypspec::parallel::ThreadedRunner;
use hypspec::report::{collar_row, write_collar_csv, write_convergence_csv, DegenerationSweep};
use hypspec::verify::{self, Suite, VerifyOptions};
use hypspec::{Error, Result};
use hypspec_core::constants::Constants;
use hypspec_core::hyperbolic::SurfaceSignature;
use hypspec_core::selberg::partial_zeta_log;
use hypspec_core::spectrum::{enumerate_spectrum_with, EnumerationBudget, LengthSpectrum};

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_INVALID_INPUT: u8 = 2;
const EXIT_INCOMPLETE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "hypspec",
    version,
    about = "Length spectra, Selberg zeta values and degeneration checks for hyperbolic surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate primitive closed geodesics up to a length cutoff.
    Spectrum {
        group_file: PathBuf,
        #[arg(long)]
        cutoff: f64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Cache directory (overrides the environment variable).
        #[arg(long, env = CACHE_ENV)]
        cache: Option<PathBuf>,
        /// Also write the spectrum file here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = EnumerationBudget::default().max_nodes)]
        max_nodes: u64,
    },
    /// Evaluate the partial Selberg zeta function of a spectrum file at real s > 1.
    Zeta {
        spectrum_file: PathBuf,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Refuse the spectrum unless it was computed for this group.
        #[arg(long)]
        group: Option<PathBuf>,
    },
    /// Normalization constants for a stable signature.
    Constants {
        #[arg(long)]
        g: u32,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        k: u32,
    },
    /// Synthetic degeneration sweep over L = log(1/|t|), written as CSV.
    Degenerate {
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long = "n-nodes", visible_alias = "n_nodes", default_value_t = 1)]
        n_nodes: usize,
        #[arg(long = "L-grid", value_delimiter = ',', default_value = "100,1000,10000")]
        l_grid: Vec<f64>,
        /// Seed for the synthetic cross terms; mandatory.
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Collar integrals over a grid of L = log(1/|t|), written as CSV.
    Collar {
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value_t = 0.1)]
        c: f64,
        #[arg(long = "L-grid", value_delimiter = ',', default_value = "9.21034037197618,13.8155105579643")]
        l_grid: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run invariant suites and print a CSV report.
    Verify {
        #[arg(long, default_value = "all", value_parser = Suite::NAMES)]
        suite: String,
        /// Shift zeta'(-1) by this amount before evaluating (fault injection).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        inject_zeta_prime_delta: f64,
        #[arg(long, default_value_t = 2)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    use hypspec_core::Error as Core;
    match e {
        Error::Core(Core::BudgetExhausted(_) | Core::NonConvergence { .. }) => EXIT_INCOMPLETE,
        _ => EXIT_INVALID_INPUT,
    }
}

/// 15 significant digits.
fn sig15(x: f64) -> String {
    format!("{x:.14e}")
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Io { path: p.into(), source: e })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_spectrum_summary(spec: &LengthSpectrum, path: &Path) {
    match spec.classes.first() {
        Some(c) => println!("systole {} (2*arccosh({}))", sig15(c.length), c.abs_trace / 2.0),
        None => println!("systole none"),
    }
    println!("classes {}", spec.len());
    println!("completeness {}", spec.completeness.as_str());
    println!("complete_below {}", sig15(spec.complete_below));
    println!("status {}", if spec.is_partial() { "PARTIAL" } else { "complete" });
    println!("file {}", path.display());
}

fn cmd_spectrum(
    group_file: &Path,
    cutoff: f64,
    workers: usize,
    cache: Option<&Path>,
    out: Option<&Path>,
    max_nodes: u64,
) -> Result<u8> {
    let grp = read_group(group_file)?;
    let cache = SpectrumCache::resolve(cache);
    let manifest = RunManifest::new("spectrum").with_input(group_file)?.with_tolerance("cutoff", cutoff);
    if let Some(spec) = cache.load(&grp, cutoff) {
        log::info!("cache hit for {}", hex::encode(grp.fingerprint()));
        if let Some(p) = out {
            write_spectrum(p, &spec, Some(&manifest))?;
        }
        print_spectrum_summary(&spec, &cache.path_for(&grp, cutoff));
        return Ok(0);
    }
    let budget = EnumerationBudget { max_nodes, ..Default::default() };
    let (spec, code) = match enumerate_spectrum_with(&grp, cutoff, &budget, &ThreadedRunner::new(workers)) {
        Ok(s) => (s, 0),
        Err(hypspec_core::Error::BudgetExhausted(partial)) => {
            eprintln!("error: node budget exhausted; spectrum complete below {}", sig15(partial.complete_below));
            (*partial, EXIT_INCOMPLETE)
        }
        Err(e) => return Err(e.into()),
    };
    let path = cache.store(&grp, &spec, Some(&manifest))?;
    if let Some(p) = out {
        write_spectrum(p, &spec, Some(&manifest))?;
    }
    print_spectrum_summary(&spec, &path);
    Ok(code)
}

fn cmd_zeta(spectrum_file: &Path, s: f64, tol: f64, group: Option<&Path>) -> Result<u8> {
    let expected = group.map(read_group).transpose()?.map(|g| g.fingerprint());
    let spec = read_spectrum(spectrum_file, expected.as_ref())?;
    let z = partial_zeta_log(&spec, s, tol)?;
    println!("s {s}");
    println!("log_Z {}", sig15(z.log_value));
    println!("log_truncation_bound {}", sig15(z.truncation_bound));
    match z.spectral_tail_bound {
        Some(b) => println!("log_spectral_tail_bound {} heuristic", sig15(b)),
        None => println!("log_spectral_tail_bound none"),
    }
    println!("cutoff {}", sig15(spec.cutoff));
    println!("classes {}", spec.len());
    Ok(0)
}

fn cmd_constants(g: u32, n: u32, k: u32) -> Result<u8> {
    let sig = SurfaceSignature::stable(g, n)?;
    let c = Constants::new();
    println!("g {g}");
    println!("n {n}");
    println!("k {k}");
    println!("log_C {}", sig15(c.log_c(sig)?));
    if k == 0 {
        println!("log_E1 {}", sig15(c.log_e1(sig)?));
    } else {
        println!("log_E{} {}", k + 1, sig15(c.log_e_higher(sig, k)?));
    }
    println!("C_k {}", sig15(c.torsion_constant(k)?));
    Ok(0)
}

fn cmd_degenerate(k: u32, n_nodes: usize, grid: &[f64], seed: u64, out: Option<&Path>, workers: usize) -> Result<u8> {
    let rows = DegenerationSweep::new(k, n_nodes, seed).run(grid, workers)?;
    let manifest = RunManifest::new("degenerate")
        .with_seed(seed)
        .with_tolerance("collar_rel_tol", hypspec::report::COLLAR_REL_TOL);
    let mut w = output(out)?;
    write_convergence_csv(&mut w, &manifest, &rows)?;
    Ok(0)
}

fn cmd_collar(k: u32, c: f64, grid: &[f64], out: Option<&Path>) -> Result<u8> {
    let rows = grid.iter().map(|&l| collar_row(l, c, k)).collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest::new("collar").with_tolerance("collar_rel_tol", hypspec::report::COLLAR_REL_TOL);
    let mut w = output(out)?;
    write_collar_csv(&mut w, &manifest, &rows)?;
    Ok(0)
}

fn cmd_verify(suite: &str, delta: f64, workers: usize, out: Option<&Path>) -> Result<u8> {
    let suite: Suite = suite.parse().map_err(|m: String| Error::Parse { line: 0, msg: m })?;
    let checks = verify::run(suite, &VerifyOptions { zeta_prime_delta: delta, workers })?;
    let mut manifest = RunManifest::new("verify");
    if delta != 0.0 {
        manifest = manifest.with_tolerance("injected_zeta_prime_delta", delta);
    }
    let mut w = output(out)?;
    verify::write_report(&mut w, &manifest, &checks)?;
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        eprintln!("{failed} of {} checks failed", checks.len());
        return Ok(EXIT_VERIFY_FAILED);
    }
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Spectrum { group_file, cutoff, workers, cache, out, max_nodes } => {
            cmd_spectrum(&group_file, cutoff, workers, cache.as_deref(), out.as_deref(), max_nodes)
        }
        Command::Zeta { spectrum_file, s, tol, group } => cmd_zeta(&spectrum_file, s, tol, group.as_deref()),
        Command::Constants { g, n, k } => cmd_constants(g, n, k),
        Command::Degenerate { k, n_nodes, l_grid, seed, out, workers } => {
            cmd_degenerate(k, n_nodes, &l_grid, seed, out.as_deref(), workers)
        }
        Command::Collar { k, c, l_grid, out } => cmd_collar(k, c, &l_grid, out.as_deref()),
        Command::Verify { suite, inject_zeta_prime_delta, workers, out } => {
            cmd_verify(&suite, inject_zeta_prime_delta, workers, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on usage errors, including a missing --seed.
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
