//! `ramified-dirac`: spectra, indices and regularity checks for Dirac
//! operators twisted by a ramified line bundle on the flat model.
//!
//! Exit codes: 0 success, 1 verification or computation failure, 2 bad configuration.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Command, RunError};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "ramified-dirac", version, about = "Spectral laboratory for ramified Dirac operators")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Configuration file.
    #[arg(short = 'c', long = "config")]
    config: PathBuf,
    /// Directory for CSV output.
    #[arg(short = 'o', long = "output", default_value = ".")]
    output: PathBuf,
    /// `section.key=value`, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalues in [-kappa_max, kappa_max] and the counting function.
    Spectrum(Common),
    /// Index of D_R; prints the integer.
    Index(Common),
    /// Green's form identity on random sections.
    Green(Common),
    /// N(Λ)/<Λ>^{2k} along the spectrum.
    Weyl(Common),
    /// Heat supertrace over the chiral sectors.
    Heat(Common),
    /// Acceptance suites; all of them unless one is named.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        suite: Option<String>,
    },
    /// Hardy quotients on Fourier truncations.
    Hardy(Common),
    /// Untwisted expansion of eigenfunctions near the origin.
    Expand(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common, suite) = match cli.command {
        Cmd::Spectrum(c) => (Command::Spectrum, c, None),
        Cmd::Index(c) => (Command::Index, c, None),
        Cmd::Green(c) => (Command::Green, c, None),
        Cmd::Weyl(c) => (Command::Weyl, c, None),
        Cmd::Heat(c) => (Command::Heat, c, None),
        Cmd::Verify { common, suite } => (Command::Verify, common, suite),
        Cmd::Hardy(c) => (Command::Hardy, c, None),
        Cmd::Expand(c) => (Command::Expand, c, None),
    };
    ExitCode::from(execute(cmd, common, suite))
}

fn execute(cmd: Command, common: Common, suite: Option<String>) -> u8 {
    let text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", common.config.display());
            return 2;
        }
    };
    let mut overrides = common.set;
    if let Some(s) = suite {
        overrides.push(format!("solver.suite={s}"));
    }
    let rc = match RunConfig::parse(&text, &overrides) {
        Ok(rc) => rc,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let out = match commands::run(cmd, &rc) {
        Ok(out) => out,
        Err(RunError::Config(m)) => {
            eprintln!("error: {m}");
            return 2;
        }
        Err(RunError::Failed(m)) => {
            eprintln!("error: {m}");
            return 1;
        }
    };
    let hash = output::config_hash(&rc.canonical);
    for f in &out.files {
        if let Err(e) = output::write_atomic(&common.output, &f.name, &f.render(cmd.name(), &hash)) {
            eprintln!("error: writing {}: {e}", f.name);
            return 1;
        }
    }
    for line in &out.stdout {
        println!("{line}");
    }
    if out.failures.is_empty() {
        0
    } else {
        for f in &out.failures {
            eprintln!("verification failed: {f}");
        }
        1
    }
}
