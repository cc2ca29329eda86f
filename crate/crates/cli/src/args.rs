use std::path::PathBuf;

use bruhat_core::{GeneratorSet, RingSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(
    name = "bruhat",
    version,
    about = "Double cosets B\\GL_n(A)/B over finite chain rings"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the orbit oracle.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Maximum number of flags the oracle may enumerate.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// Generator set for the orbit oracle.
    #[arg(long, global = true, value_enum)]
    pub generators: Option<Generators>,
    /// TOML file with any of the keys format, out, seed, threads, budget, generators.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generators {
    Full,
    Minimal,
}

impl From<Generators> for GeneratorSet {
    fn from(g: Generators) -> Self {
        match g {
            Generators::Full => GeneratorSet::Full,
            Generators::Minimal => GeneratorSet::Minimal,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    N2,
    N3,
    Bmb,
    #[value(name = "42")]
    FourTwo,
    Cases,
    Growth,
    All,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CountMethod {
    /// Closed form for n <= 3, oracle otherwise.
    Auto,
    Oracle,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Number of double cosets.
    Count {
        #[arg(long)]
        ring: RingSpec,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=6))]
        n: u32,
        #[arg(long, value_enum, default_value_t = CountMethod::Auto)]
        method: CountMethod,
    },
    /// One representative per double coset, from the orbit oracle.
    Enumerate {
        #[arg(long)]
        ring: RingSpec,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=6))]
        n: u32,
    },
    /// Permutation invariant, intersection numbers and intersection types.
    Invariants {
        #[arg(long)]
        ring: RingSpec,
        #[arg(long)]
        matrix: String,
    },
    /// Whether two matrices lie in the same double coset.
    Equiv {
        #[arg(long)]
        ring: RingSpec,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Canonical representative of the coset gB.
    Canonical {
        #[arg(long)]
        ring: RingSpec,
        #[arg(long)]
        matrix: String,
    },
    /// Run a verification suite.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
    },
    /// Fibre counts over a grid of rings and orders.
    Census {
        #[arg(long, value_delimiter = ',', default_value = "zpk")]
        flavors: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        p: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        k: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        n: Vec<usize>,
    },
}

/// Keys accepted in the `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub budget: Option<u64>,
    pub generators: Option<Generators>,
}
