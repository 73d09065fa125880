//! The `kroncirc` command line.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::builder::{self, Caps, Method};
use crate::circuit::Circuit;
use crate::decomp::Decomposition;
use crate::error::{Error, Result};
use crate::exponent::{self, ExponentQuery};
use crate::field::FieldSpec;
use crate::matrix::SparseMatrix;
use crate::partition::{self, Objective};
use crate::presets::{self, DecompContext};
use crate::rigidity::{self, PairMode};
use crate::{smx, verify};

#[derive(Parser, Debug)]
#[command(name = "kroncirc", version, about = "Sparse circuits for Kronecker power matrices")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Build a circuit and write it to a directory.
    Build(BuildArgs),
    /// Print decomposition statistics.
    Stats(DecompArgs),
    /// Check a stored circuit.
    Verify(VerifyArgs),
    #[command(subcommand)]
    Rigidity(RigidityCmd),
    #[command(subcommand)]
    Partition(PartitionCmd),
    /// Evaluate a closed-form exponent.
    Exponent(ExponentArgs),
    /// Exact per-layer expectation of the balancing random walk.
    Expect(ExpectArgs),
}

#[derive(Args, Debug, Clone)]
struct FieldArg {
    /// `Q` or `GF<p>`.
    #[arg(long, default_value = "Q")]
    field: String,
}

impl FieldArg {
    fn spec(&self) -> Result<FieldSpec> {
        FieldSpec::from_tag(&self.field)
    }
}

#[derive(Args, Debug)]
struct DecompArgs {
    /// Decomposition spec (`onehot:<base>`, `rigidity:wh:<k>`, `rigidity:kron2:<omega>:<k>`, `partition:auto`, `partition:r1-rows`, `file:<path>`).
    #[arg(long)]
    decomp: String,
    /// Base matrix spec, needed by `partition:auto`.
    #[arg(long)]
    base: Option<String>,
    #[arg(long)]
    max_parts: Option<usize>,
    #[command(flatten)]
    field: FieldArg,
}

impl DecompArgs {
    fn load(&self) -> Result<Decomposition> {
        let f = self.field.spec()?;
        let base = self.base.as_deref().map(|b| presets::parse_base(b, f)).transpose()?;
        let ctx = DecompContext { base, cache: std::env::var_os("KRONCIRC_CACHE").map(PathBuf::from), max_parts: self.max_parts };
        presets::parse_decomp(&self.decomp, f, &ctx)
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum BuildMethod {
    Imbalanced,
    OneSided,
    Auto,
    MixedProduct,
    Boost,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long, value_enum, default_value = "auto")]
    method: BuildMethod,
    /// Decomposition spec; required except for `mixed-product`.
    #[arg(long)]
    decomp: Option<String>,
    #[arg(long)]
    base: Option<String>,
    /// Kronecker exponent over the base (or decomposition base).
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long)]
    max_parts: Option<usize>,
    #[arg(long, default_value_t = 1 << 22)]
    max_terms: usize,
    #[arg(long, default_value_t = 1 << 28)]
    max_nnz: u128,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    field: FieldArg,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum VerifyMode {
    Exact,
    Random,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    mode: VerifyMode,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum RigidityCmd {
    /// Explicit rank-1 witness.
    Construct {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "2")]
        omega: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        field: FieldArg,
    },
    /// Exhaustive rank-1 search over a finite entry pool.
    Oracle {
        #[arg(long)]
        base: String,
        /// `hadamard` or `powers:<omega>:<n>`.
        #[arg(long, default_value = "hadamard")]
        pool: String,
        #[command(flatten)]
        field: FieldArg,
    },
    /// Polynomial-method split of `base^{⊗n}` with pattern window `[l, h]`.
    Poly {
        #[arg(long)]
        base: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        h: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        field: FieldArg,
    },
    /// Closed-form bounds against constructed change counts.
    Report {
        #[arg(long, default_value_t = 8)]
        max_k: usize,
        #[arg(long, default_value = "2")]
        omega: String,
        #[arg(long, value_enum, default_value = "text")]
        format: TableFormat,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Family {
    Wh,
    Kron2,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TableFormat {
    Text,
    Csv,
}

#[derive(Subcommand, Debug)]
enum PartitionCmd {
    /// Minimum `Σ√area` rectangle partition.
    Search {
        #[arg(long)]
        base: String,
        #[arg(long, default_value_t = 8)]
        max_parts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The inductive square/rectangle recurrence for `R_n`.
    Js {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Args, Debug)]
struct ExponentArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    changes: Option<f64>,
    #[arg(long)]
    alpha1: Option<f64>,
}

#[derive(Args, Debug)]
struct ExpectArgs {
    #[command(flatten)]
    decomp: DecompArgs,
    #[arg(long)]
    n: usize,
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) {
    use std::io::Write;
    let out = if json { serde_json::to_string_pretty(value).expect("serializable") } else { text() };
    let _ = writeln!(std::io::stdout().lock(), "{out}");
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.cmd {
        Cmd::Build(a) => build(a, cli.json),
        Cmd::Stats(a) => {
            let s = a.load()?.stats()?;
            emit(cli.json, &s, || {
                format!(
                    "alpha1: {:.6}\nalpha2: {:.6}\nG: {:.6}\nE: {:.6}\nbeta: {:.6}\nalpha2-alpha1: {:.6}\noriented: {}\none_sided: {}\nimbalanced: {}",
                    s.alpha1,
                    s.alpha2,
                    s.g,
                    s.e,
                    s.beta,
                    s.alpha2 - s.alpha1,
                    s.oriented,
                    s.one_sided,
                    s.imbalanced
                )
            });
            Ok(0)
        }
        Cmd::Verify(a) => verify_cmd(a, cli.json),
        Cmd::Rigidity(r) => rigidity_cmd(r, cli.json),
        Cmd::Partition(p) => partition_cmd(p, cli.json),
        Cmd::Exponent(a) => {
            let q = ExponentQuery {
                family: a.family.clone(),
                k: a.k,
                q: a.q,
                s: a.s,
                r: a.r,
                changes: a.changes,
                alpha1: a.alpha1,
            };
            let rep = exponent::exponent_calc(&q)?;
            emit(cli.json, &rep, || format!("{:.4}", rep.value));
            Ok(0)
        }
        Cmd::Expect(a) => {
            let d = a.decomp.load()?;
            let (ea, eb) = builder::process_expectation(&d, a.n)?;
            let v = json!({"n": a.n, "layer1": ea.to_string(), "layer2": eb.to_string()});
            emit(cli.json, &v, || format!("layer1: {ea}\nlayer2: {eb}"));
            Ok(0)
        }
    }
}

fn build(a: &BuildArgs, json: bool) -> Result<i32> {
    let f = a.field.spec()?;
    let caps = Caps { max_terms: a.max_terms, max_nnz: a.max_nnz };
    let base_arg = a.base.as_deref().map(|b| presets::parse_base(b, f)).transpose()?;
    let load = || -> Result<Decomposition> {
        let spec = a.decomp.as_deref().ok_or_else(|| Error::invalid("--decomp is required for this method"))?;
        let ctx = DecompContext {
            base: base_arg.clone(),
            cache: std::env::var_os("KRONCIRC_CACHE").map(PathBuf::from),
            max_parts: a.max_parts,
        };
        presets::parse_decomp(spec, f, &ctx)
    };
    let (circuit, base, stats) = match a.method {
        BuildMethod::MixedProduct => {
            let base = match &base_arg {
                Some(b) => b.clone(),
                None => load()?.base,
            };
            (builder::build_mixed_product(&base, a.n, a.depth)?, base, None)
        }
        BuildMethod::Boost => {
            let d = load()?;
            (builder::boost_depth(&d, a.n, a.depth, caps)?, d.base.clone(), Some(d.stats()?))
        }
        m => {
            if a.depth != 2 {
                return Err(Error::invalid("this method builds depth-2 circuits; use --method boost for more"));
            }
            let method = match m {
                BuildMethod::Imbalanced => Method::Imbalanced,
                BuildMethod::OneSided => Method::OneSided,
                _ => Method::Auto,
            };
            let d = load()?;
            let b = builder::build_depth2_with(&d, a.n, caps, method)?;
            (b.circuit, d.base.clone(), Some(b.stats))
        }
    };
    let circuit = circuit.with_param("base", smx::to_smx(&base)).with_param("power", a.n);
    if let Some(dir) = &a.out {
        circuit.write_dir(dir)?;
    }
    let rep = verify::size_report(&circuit, &base, a.n, stats.as_ref());
    emit(json, &rep, || {
        let mut s = format!(
            "depth: {}\nper_layer: {:?}\nsize: {}\nexponent: {:.4}\nmixed-product baseline: {}",
            circuit.depth(),
            rep.per_layer,
            rep.total,
            rep.exponent_raw,
            rep.baseline_total
        );
        if let Some(adj) = rep.exponent_slack_adjusted {
            s.push_str(&format!("\nexponent (slack-adjusted): {adj:.4}"));
        }
        if let Some(dir) = &a.out {
            s.push_str(&format!("\nwritten: {}", dir.display()));
        }
        s
    });
    Ok(0)
}

fn circuit_target(c: &Circuit) -> Result<(SparseMatrix, usize)> {
    let base = c
        .meta
        .params
        .get("base")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::parse("manifest params lack the base matrix"))?;
    let n = c
        .meta
        .params
        .get("power")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::parse("manifest params lack the power"))?;
    Ok((smx::from_smx(base)?, n as usize))
}

fn verify_cmd(a: &VerifyArgs, json: bool) -> Result<i32> {
    let c = Circuit::read_dir(&a.circuit)?;
    let (base, n) = circuit_target(&c)?;
    let rep = match a.mode {
        VerifyMode::Exact => verify::verify_exact(&c, &base, n)?,
        VerifyMode::Random => verify::verify_random(&c, &base, n, a.trials, a.seed)?,
    };
    emit(json, &rep, || {
        let mut s = format!(
            "mode: {:?}\npass: {}\nseed: {}\ntrials: {}\nper_layer: {:?}\nsize: {}\nexponent: {:.4}",
            rep.mode, rep.pass, rep.seed, rep.trials, rep.per_layer, rep.size, rep.exponent
        );
        if let Some(d) = &rep.discrepancy {
            s.push_str(&format!("\nmismatch at ({}, {}): expected {}, found {}", d.row, d.col, d.expected, d.found));
        }
        if let Some(t) = rep.failed_trial {
            s.push_str(&format!("\nfirst failing trial: {t}"));
        }
        if let Some(w) = &rep.warning {
            s.push_str(&format!("\nwarning: {w}"));
        }
        s
    });
    Ok(if rep.pass { 0 } else { 1 })
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn rigidity_cmd(r: &RigidityCmd, json: bool) -> Result<i32> {
    match r {
        RigidityCmd::Construct { family, k, omega, out, field } => {
            let f = field.spec()?;
            let (w, name, bound) = match family {
                Family::Wh => (rigidity::rank1_construct_wh(*k, f)?, format!("h{k}"), rigidity::rank1_change_bound(*k, PairMode::Wh)),
                Family::Kron2 => (
                    rigidity::rank1_construct_kron2(&f.parse(omega)?, *k)?,
                    format!("omega:{omega}^{k}"),
                    rigidity::rank1_change_bound(*k, PairMode::Generic),
                ),
            };
            if let Some(p) = out {
                write_json(p, &w.to_file(&name))?;
            }
            let v = json!({"target": name, "rank_bound": w.rank_bound, "changes": w.changes(), "closed_form": bound.to_string(), "verified": w.verify()?});
            emit(json, &v, || format!("target: {name}\nrank: {}\nchanges: {}\nclosed form: {bound}", w.rank_bound, w.changes()));
        }
        RigidityCmd::Oracle { base, pool, field } => {
            let f = field.spec()?;
            let m = presets::parse_base(base, f)?;
            let entries = if pool == "hadamard" {
                rigidity::hadamard_pool(f)
            } else if let Some(rest) = pool.strip_prefix("powers:") {
                let (om, n) = rest.split_once(':').ok_or_else(|| Error::parse("pool is powers:<omega>:<n>"))?;
                let n: usize = n.parse().map_err(|_| Error::parse("bad pool exponent"))?;
                rigidity::power_pool(&f.parse(om)?, n)?
            } else {
                return Err(Error::parse(format!("unknown pool '{pool}'")));
            };
            let o = rigidity::rank1_oracle(&m, &entries)?;
            let v = json!({"min_changes": o.min_changes, "candidates": o.candidates, "upper_bound_only": true});
            emit(json, &v, || format!("min changes (rank 1, restricted pool): {}\ncandidates: {}", o.min_changes, o.candidates));
        }
        RigidityCmd::Poly { base, n, l, h, out, field } => {
            let m = presets::parse_base(base, field.spec()?)?;
            let p = rigidity::polymethod_decomp(&m, *n, *l, *h)?;
            if let Some(path) = out {
                write_json(path, &p.witness.to_file(&format!("{base}^{n}")))?;
            }
            let v = json!({
                "rank_bound": p.witness.rank_bound,
                "changes": p.witness.changes(),
                "bad_pairs": p.bad_pairs,
                "union_bound": p.union_bound.to_string(),
            });
            emit(json, &v, || {
                format!(
                    "rank: {}\nchanges: {}\nbad pairs: {}\nunion bound: {}",
                    p.witness.rank_bound,
                    p.witness.changes(),
                    p.bad_pairs,
                    p.union_bound
                )
            });
        }
        RigidityCmd::Report { max_k, omega, format } => {
            let f = FieldSpec::Rational;
            let om = f.parse(omega)?;
            let mut rows = Vec::new();
            for k in 1..=*max_k {
                let g = rigidity::rank1_construct_kron2(&om, k)?.changes();
                let w = rigidity::rank1_construct_wh(k, f)?.changes();
                rows.push(json!({
                    "k": k,
                    "generic_bound": rigidity::rank1_change_bound(k, PairMode::Generic).to_string(),
                    "generic_measured": g,
                    "wh_bound": rigidity::rank1_change_bound(k, PairMode::Wh).to_string(),
                    "wh_measured": w,
                }));
            }
            let cols = ["k", "generic_bound", "generic_measured", "wh_bound", "wh_measured"];
            let cell = |r: &serde_json::Value, c: &str| match &r[c] {
                serde_json::Value::String(s) => s.clone(),
                v => v.to_string(),
            };
            emit(json, &rows, || {
                let mut out = Vec::new();
                match format {
                    TableFormat::Csv => {
                        out.push(cols.join(","));
                        for r in &rows {
                            out.push(cols.iter().map(|c| cell(r, c)).collect::<Vec<_>>().join(","));
                        }
                    }
                    TableFormat::Text => {
                        out.push(cols.iter().map(|c| format!("{c:>18}")).collect::<String>());
                        for r in &rows {
                            out.push(cols.iter().map(|c| format!("{:>18}", cell(r, c))).collect::<String>());
                        }
                    }
                }
                out.join("\n")
            });
        }
    }
    Ok(0)
}

fn partition_cmd(p: &PartitionCmd, json: bool) -> Result<i32> {
    match p {
        PartitionCmd::Search { base, max_parts, out } => {
            let m = presets::parse_base(base, FieldSpec::Rational)?;
            let cache = std::env::var_os("KRONCIRC_CACHE").map(PathBuf::from);
            let part = match cache {
                Some(dir) => presets::cached_partition(&m, *max_parts, Some(&dir))?,
                None => partition::partition_search(&m, *max_parts, Objective::Alpha1)?,
            };
            if let Some(path) = out {
                std::fs::write(path, part.to_json())?;
            }
            let v = json!({"objective": part.objective(), "parts": part.rects.len(), "rects": part.rects});
            emit(json, &v, || {
                let mut s = format!("objective: {:.4}\nparts: {}", part.objective(), part.rects.len());
                for r in &part.rects {
                    s.push_str(&format!("\n  rows {:?} x cols {:?}", r.rows, r.cols));
                }
                s
            });
        }
        PartitionCmd::Js { n } => {
            let r = partition::js_recurrence(*n)?;
            emit(json, &r, || {
                format!(
                    "s: {}\nr: {}\nsize bound 2(s+r): {}\nexact wires 2s+3r: {}",
                    r.state.s, r.state.r, r.size_bound, r.exact_wires
                )
            });
        }
    }
    Ok(0)
}
