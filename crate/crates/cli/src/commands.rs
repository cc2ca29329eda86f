use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use bruhat_core::classify::{classify, count_closed_form};
use bruhat_core::experiments::{census, verify, Suite, SuiteReport};
use bruhat_core::invariants::invariants;
use bruhat_core::oracle::{
    canonical_flag, double_cosets, equiv, flag_count_formula, in_m2_bullet, OrbitReport,
};
use bruhat_core::{Error, Flavor, Mat, OracleConfig, RingSpec};
use serde_json::{json, Value};

use crate::args::{Cli, Command, CountMethod, FileConfig, Format, GlobalArgs, SuiteArg};

pub enum Failure {
    /// Bad arguments; exit code 2.
    Usage(String),
    /// Computation failed or exceeded its budget; exit code 1.
    Compute(String),
    /// A verification suite reported failing checks; exit code 1.
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

struct Settings {
    format: Option<Format>,
    out: Option<PathBuf>,
    seed: u64,
    oracle: OracleConfig,
}

impl Settings {
    fn resolve(global: GlobalArgs) -> Result<Self, Failure> {
        let file = match &global.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let mut oracle = OracleConfig::default();
        if let Some(b) = global.budget.or(file.budget) {
            oracle.budget = b;
        }
        if let Some(t) = global.threads.or(file.threads) {
            if t == 0 {
                return Err(Failure::Usage("--threads must be at least 1".into()));
            }
            oracle.threads = t;
        }
        if let Some(g) = global.generators.or(file.generators) {
            oracle.generators = g.into();
        }
        Ok(Self {
            format: global.format.or(file.format),
            out: global.out.or(file.out),
            seed: global.seed.or(file.seed).unwrap_or(0),
            oracle,
        })
    }

    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(path) => fs::write(path, text)
                .map_err(|e| Failure::Compute(format!("{}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn parse_matrix(ring: RingSpec, text: &str, what: &str) -> Result<Mat, Failure> {
    let m = Mat::parse(ring, text).map_err(|e| Failure::Usage(format!("{what}: {e}")))?;
    if !m.is_square() {
        return Err(Failure::Usage(format!("{what}: matrix must be square")));
    }
    Ok(m)
}

fn parse_invertible(ring: RingSpec, text: &str, what: &str) -> Result<Mat, Failure> {
    let m = parse_matrix(ring, text, what)?;
    if !m.is_invertible() {
        return Err(Failure::Usage(format!("{what}: matrix is not invertible")));
    }
    Ok(m)
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let settings = Settings::resolve(cli.global)?;
    match cli.command {
        Command::Count { ring, n, method } => run_count(&settings, ring, n as usize, method),
        Command::Enumerate { ring, n } => run_enumerate(&settings, ring, n as usize),
        Command::Invariants { ring, matrix } => run_invariants(&settings, ring, &matrix),
        Command::Equiv { ring, n, a, b } => run_equiv(&settings, ring, n, &a, &b),
        Command::Canonical { ring, matrix } => run_canonical(&settings, ring, &matrix),
        Command::Verify { suite } => run_verify(&settings, suite),
        Command::Census { flavors, p, k, n } => run_census(&settings, &flavors, &p, &k, &n),
    }
}

fn run_count(
    settings: &Settings,
    ring: RingSpec,
    n: usize,
    method: CountMethod,
) -> Result<(), Failure> {
    let closed = match method {
        CountMethod::Auto => count_closed_form(ring.q() as u64, ring.k(), n),
        CountMethod::Oracle => None,
    };
    let (count, source) = match closed {
        Some(c) => (c, "closed_form"),
        None => (
            double_cosets(ring, n, &settings.oracle)?.num_cosets,
            "oracle",
        ),
    };
    let text = match settings.format_or(Format::Table) {
        Format::Table => format!("{count}\n"),
        Format::Json => pretty(&json!({ "ring": ring, "n": n, "count": count, "source": source })),
        Format::Csv => format!("ring,n,count,source\n\"{ring}\",{n},{count},{source}\n"),
    };
    settings.emit(&text)
}

fn labels_of(report: &OrbitReport) -> Result<Vec<Option<String>>, Failure> {
    report
        .representatives
        .iter()
        .map(|m| match report.n {
            2 | 3 => Ok(Some(classify(m)?.to_string())),
            _ => Ok(None),
        })
        .collect()
}

fn run_enumerate(settings: &Settings, ring: RingSpec, n: usize) -> Result<(), Failure> {
    let report = double_cosets(ring, n, &settings.oracle)?;
    let labels = labels_of(&report)?;
    let ws = report
        .representatives
        .iter()
        .map(bruhat_core::invariants::permutation_invariant)
        .collect::<Result<Vec<_>, _>>()?;
    let text = match settings.format_or(Format::Table) {
        Format::Json => {
            let mut v = serde_json::to_value(report.to_json()).expect("serializable");
            if n <= 3 {
                v["labels"] = json!(labels);
            }
            pretty(&v)
        }
        Format::Csv => {
            let mut s = String::from("index,W,orbit_size,label,representative\n");
            for (idx, m) in report.representatives.iter().enumerate() {
                let label = labels[idx].clone().unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{idx},\"{}\",{},\"{label}\",\"{m}\"",
                    ws[idx], report.orbit_sizes[idx]
                );
            }
            s
        }
        Format::Table => {
            let mut s = format!(
                "{ring}, n = {n}: {} double cosets, {} flags\n",
                report.num_cosets, report.flag_count
            );
            for (idx, m) in report.representatives.iter().enumerate() {
                let label = labels[idx].clone().unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{idx:>4}  {:<12} {:>8}  {label:<36} {m}",
                    ws[idx].to_string(),
                    report.orbit_sizes[idx]
                );
            }
            s
        }
    };
    settings.emit(&text)
}

fn run_invariants(settings: &Settings, ring: RingSpec, matrix: &str) -> Result<(), Failure> {
    let m = parse_invertible(ring, matrix, "--matrix")?;
    let inv = invariants(&m)?;
    let text = match settings.format_or(Format::Table) {
        Format::Json => pretty(&serde_json::to_value(&inv).expect("serializable")),
        Format::Csv => {
            let mut s = String::from("kind,key,value\n");
            let _ = writeln!(s, "W,,\"{}\"", inv.w);
            for (i, row) in inv.r.rows().iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    let _ = writeln!(s, "r,\"{},{}\",{x}", i + 1, j + 1);
                }
            }
            for (key, part) in &inv.profile {
                let _ = writeln!(s, "profile,\"{key}\",\"{part}\"");
            }
            s
        }
        Format::Table => {
            let mut s = format!("W: {}\nr:\n", inv.w);
            for row in inv.r.rows() {
                let cells: Vec<String> = row.iter().map(|x| format!("{x:>2}")).collect();
                let _ = writeln!(s, "  {}", cells.join(" "));
            }
            s.push_str("profile:\n");
            for (key, part) in &inv.profile {
                let _ = writeln!(s, "  ({key}): {part}");
            }
            s
        }
    };
    settings.emit(&text)
}

fn run_equiv(
    settings: &Settings,
    ring: RingSpec,
    n: Option<usize>,
    a: &str,
    b: &str,
) -> Result<(), Failure> {
    let (ma, mb) = (parse_matrix(ring, a, "--a")?, parse_matrix(ring, b, "--b")?);
    if ma.rows() != mb.rows() {
        return Err(Failure::Usage("--a and --b have different orders".into()));
    }
    if let Some(n) = n {
        if n != ma.rows() {
            return Err(Failure::Usage(format!(
                "--n {n} does not match {}x{} matrices",
                ma.rows(),
                ma.rows()
            )));
        }
    }
    let both_m2 = in_m2_bullet(&ma) && in_m2_bullet(&mb);
    if !both_m2 && !(ma.is_invertible() && mb.is_invertible()) {
        return Err(Failure::Usage(
            "matrices must both be invertible or both lie in M2-bullet".into(),
        ));
    }
    let result = equiv(&ma, &mb, &settings.oracle)?;
    let text = match settings.format_or(Format::Table) {
        Format::Json => pretty(
            &json!({ "ring": ring, "a": ma.to_string(), "b": mb.to_string(), "equivalent": result }),
        ),
        Format::Csv => format!("a,b,equivalent\n\"{ma}\",\"{mb}\",{result}\n"),
        Format::Table => format!("{result}\n"),
    };
    settings.emit(&text)
}

fn run_canonical(settings: &Settings, ring: RingSpec, matrix: &str) -> Result<(), Failure> {
    let m = parse_invertible(ring, matrix, "--matrix")?;
    let c = canonical_flag(&m)?;
    let text = match settings.format_or(Format::Table) {
        Format::Json => pretty(&serde_json::to_value(&c).expect("serializable")),
        Format::Csv => format!("input,canonical\n\"{m}\",\"{c}\"\n"),
        Format::Table => format!("{c}\n"),
    };
    settings.emit(&text)
}

fn run_verify(settings: &Settings, suite: SuiteArg) -> Result<(), Failure> {
    let suites: Vec<Suite> = match suite {
        SuiteArg::N2 => vec![Suite::N2],
        SuiteArg::N3 => vec![Suite::N3],
        SuiteArg::Bmb => vec![Suite::Bmb],
        SuiteArg::FourTwo => vec![Suite::FourTwo],
        SuiteArg::Cases => vec![Suite::Cases],
        SuiteArg::Growth => vec![Suite::Growth],
        SuiteArg::All => Suite::ALL.to_vec(),
    };
    let reports = suites
        .into_iter()
        .map(|s| verify(s, &settings.oracle, settings.seed))
        .collect::<Result<Vec<SuiteReport>, _>>()?;
    let text = match settings.format_or(Format::Table) {
        Format::Json => pretty(&serde_json::to_value(&reports).expect("serializable")),
        Format::Csv => {
            let mut s = String::from("suite,check,pass,detail\n");
            for r in &reports {
                for c in &r.checks {
                    let _ = writeln!(
                        s,
                        "{},\"{}\",{},\"{}\"",
                        r.suite,
                        c.name,
                        c.pass,
                        c.detail.replace('"', "'")
                    );
                }
            }
            s
        }
        Format::Table => {
            let mut s = String::new();
            for r in &reports {
                for c in &r.checks {
                    let status = if c.pass { "PASS" } else { "FAIL" };
                    if c.detail.is_empty() {
                        let _ = writeln!(s, "{status}  {:<6} {}", r.suite, c.name);
                    } else {
                        let _ = writeln!(s, "{status}  {:<6} {}: {}", r.suite, c.name, c.detail);
                    }
                }
                let passed = r.checks.iter().filter(|c| c.pass).count();
                let _ = writeln!(
                    s,
                    "suite {}: {passed}/{} checks passed",
                    r.suite,
                    r.checks.len()
                );
            }
            s
        }
    };
    settings.emit(&text)?;
    if reports.iter().all(SuiteReport::passed) {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn run_census(
    settings: &Settings,
    flavors: &[String],
    ps: &[u32],
    ks: &[u32],
    ns: &[usize],
) -> Result<(), Failure> {
    let flavors = flavors
        .iter()
        .map(|f| match f.as_str() {
            "zpk" => Ok(Flavor::Zpk),
            "fqtk" => Ok(Flavor::FqTk),
            other => Err(Failure::Usage(format!(
                "unknown flavor {other:?} (expected zpk or fqtk)"
            ))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    for &p in ps {
        for &k in ks {
            RingSpec::new(Flavor::Zpk, p, k).map_err(|e| Failure::Usage(e.to_string()))?;
            for &n in ns {
                if n == 0 || n > 6 {
                    return Err(Failure::Usage(format!("n = {n} outside 1..=6")));
                }
                let flags = flag_count_formula(p as u64, n, k);
                if flags > settings.oracle.budget {
                    eprintln!(
                        "skipping p={p} k={k} n={n}: {flags} flags exceed budget {}",
                        settings.oracle.budget
                    );
                }
            }
        }
    }
    let rows = census(&flavors, ps, ks, ns, &settings.oracle)?;
    let header = "flavor,p,k,n,fiber,count,total";
    let text = match settings.format_or(Format::Csv) {
        Format::Csv => format!(
            "{header}\n{}",
            rows.iter().map(|r| format!("{r}\n")).collect::<String>()
        ),
        Format::Json => {
            let keys: Vec<&str> = header.split(',').collect();
            let objects: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let obj = keys
                        .iter()
                        .zip(r.split(','))
                        .map(|(k, v)| {
                            let value = match *k {
                                "flavor" | "fiber" => json!(v),
                                _ => json!(v.parse::<u64>().expect("numeric column")),
                            };
                            (k.to_string(), value)
                        })
                        .collect::<serde_json::Map<_, _>>();
                    Value::Object(obj)
                })
                .collect();
            pretty(&Value::Array(objects))
        }
        Format::Table => {
            let mut s = String::new();
            for line in std::iter::once(header.to_string()).chain(rows) {
                let cells: Vec<String> = line.split(',').map(|c| format!("{c:>7}")).collect();
                let _ = writeln!(s, "{}", cells.join(" "));
            }
            s
        }
    };
    settings.emit(&text)
}
