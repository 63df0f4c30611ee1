//! Command-line front end. Reports go to stdout as JSON, tables as CSV.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::compression::{
    exact_factorize, margin_audit, min_infnorm_factor, residual_norm, AuditOptions, UMatrix, VMatrix,
};
use crate::conversion::{
    make_lemma4_network, make_theorem2_disjunction, make_theorem2_network, make_theorem2_witness, relu_to_threshold,
    theorem2_subset_unit, threshold2_to_relu, ConversionOptions, NormalForm, DEFAULT_MAX_FIRST_LAYER_UNITS,
};
use crate::error::{Error, Result};
use crate::io::{self, NetworkFile};
use crate::regions::region_count;
use crate::sampling::{hyperplane_points, normal_point};
use crate::training::rng::{stream_rng, VERIFY_STREAM};
use crate::training::{generate_dataset, generate_network, run_experiment, ExperimentOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_GUARD: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Largest `n` for which `witness` enumerates every subset pair.
pub const MAX_WITNESS_N: usize = 12;

#[derive(Debug, Parser)]
#[command(name = "rectex", version, about = "Rectifier and threshold network conversions, compression and experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Form {
    Dnf,
    Cnf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CompressMode {
    Exact,
    Lp,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a rectifier network into an equivalent three-layer threshold network.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "dnf")]
        form: Form,
        #[arg(long)]
        out: PathBuf,
        /// Allow more than `--max-units` first-layer units.
        #[arg(long)]
        force: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_FIRST_LAYER_UNITS)]
        max_units: usize,
    },
    /// Compare two networks on random and hyperplane points.
    Verify {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long = "dim-samples", alias = "samples", default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also test points on the hyperplanes of `a`'s first-layer units.
        #[arg(long)]
        boundary: bool,
        #[arg(long, default_value_t = 50)]
        boundary_points: usize,
        /// Also count disagreements outside the band `|unit(x)| < eps` of `a`'s first-layer units.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Replace each sign unit of a two-layer threshold network with a rectifier pair.
    Approximate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Factor a threshold-unit matrix V into rectifier units U.
    Compress {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: CompressMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the margin condition for hidden-layer equivalence on a data file.
    MarginAudit {
        #[arg(long)]
        v: PathBuf,
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Write the per-example table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave the constant feature out of the infinity norm.
        #[arg(long)]
        exclude_bias: bool,
    },
    /// Draw a random generator network and, optionally, a dataset labelled by it.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        total: usize,
        #[arg(long, default_value_t = 1_500)]
        test: usize,
    },
    /// Train rectifier and compressed-tanh networks on generated data.
    Experiment {
        #[arg(long, value_delimiter = ',', default_value = "3,10,50")]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "3,10")]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Directory for generator networks and datasets; defaults to `<out>.artifacts`.
        #[arg(long)]
        artifacts: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        total: usize,
        #[arg(long, default_value_t = 1_500)]
        test: usize,
        #[arg(long, default_value_t = 1000)]
        max_epochs: usize,
        #[arg(long, default_value_t = 50)]
        patience: usize,
    },
    /// Print the tightness network and a witness point for every subset hyperplane.
    Witness {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        lemma4: bool,
    },
    /// Number of regions cut out by n hyperplanes in general position in R^d.
    Regions {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        d: u64,
    },
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SizeGuard(_)
        | Error::Overflow(_)
        | Error::NotPowerOfTwo(_)
        | Error::InvalidArgument(_)
        | Error::IndexOutOfRange(_)
        | Error::RetryBudget(_) => EXIT_GUARD,
        Error::Solver(_) => EXIT_SOLVER,
        _ => EXIT_FAILURE,
    }
}

fn print_json(out: &mut dyn Write, v: &impl Serialize) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn report(out: &mut dyn Write, err: &mut dyn Write, r: Result<i32>) -> i32 {
    match r {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            let _ = out.flush();
            exit_code(&e)
        }
    }
}

/// Runs a parsed command, writing results to `out` and diagnostics to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let r = match cli.command {
        Command::Convert { input, form, out: path, force, max_units } => {
            convert(out, &input, form, &path, ConversionOptions { max_first_layer_units: max_units, force })
        }
        Command::Verify { a, b, samples, seed, boundary, boundary_points, eps } => {
            verify(out, &a, &b, samples, seed, if boundary { boundary_points } else { 0 }, eps)
        }
        Command::Approximate { input, eps, out: path } => approximate(out, &input, eps, &path),
        Command::Compress { input, mode, out: path } => compress(out, &input, mode, &path),
        Command::MarginAudit { v, u, data, out: path, exclude_bias } => {
            audit(out, err, &v, &u, &data, path.as_deref(), exclude_bias)
        }
        Command::Generate { n, d, seed, out: path, data, total, test } => {
            generate(out, n, d, seed, &path, data.as_deref(), total, test)
        }
        Command::Experiment { dims, ns, seed, out: path, artifacts, total, test, max_epochs, patience } => {
            let mut opts = ExperimentOptions { total, test, ..Default::default() };
            opts.base.max_epochs = max_epochs;
            opts.base.early_stop_patience = patience;
            experiment(out, &dims, &ns, seed, &path, artifacts, &opts)
        }
        Command::Witness { n, d, lemma4 } => witness(out, n, d.unwrap_or(n), lemma4),
        Command::Regions { n, d } => region_count(n, d).and_then(|r| {
            print_json(out, &json!({ "n": n, "d": d, "regions": r }))?;
            Ok(EXIT_OK)
        }),
    };
    report(out, err, r)
}

fn convert(
    out: &mut dyn Write,
    input: &std::path::Path,
    form: Form,
    path: &std::path::Path,
    opts: ConversionOptions,
) -> Result<i32> {
    let NetworkFile::Relu(net) = NetworkFile::load(input)? else {
        return Err(Error::InvalidNetwork("convert expects a relu network".into()));
    };
    let form = match form {
        Form::Dnf => NormalForm::Dnf,
        Form::Cnf => NormalForm::Cnf,
    };
    let (t, rep) = relu_to_threshold(&net, form, opts)?;
    NetworkFile::Threshold(t).save(path)?;
    print_json(out, &rep)?;
    Ok(EXIT_OK)
}

/// Every first-layer pre-activation is at least `eps` away from 0.
fn outside_band(units: &[crate::network::AffineUnit], x: &[f64], eps: f64) -> bool {
    units.iter().all(|u| u.apply(x).abs() >= eps)
}

fn verify(
    out: &mut dyn Write,
    a: &std::path::Path,
    b: &std::path::Path,
    samples: usize,
    seed: u64,
    boundary: usize,
    eps: Option<f64>,
) -> Result<i32> {
    let (na, nb) = (NetworkFile::load(a)?, NetworkFile::load(b)?);
    if na.dim() != nb.dim() {
        return Err(Error::DimensionMismatch { expected: na.dim(), got: nb.dim() });
    }
    let mut rng = stream_rng(seed, VERIFY_STREAM);
    let mut points: Vec<Vec<f64>> = (0..samples).map(|_| normal_point(&mut rng, na.dim())).collect();
    let units = na.first_layer_units();
    let on_planes = hyperplane_points(&units, boundary, &mut rng)?;
    let boundary_samples = on_planes.len();
    points.extend(on_planes);
    let (mut disagreements, mut first, mut outside, mut outside_dis) = (0usize, None, 0usize, 0usize);
    for x in &points {
        let differ = na.eval(x)? != nb.eval(x)?;
        if differ {
            disagreements += 1;
            first.get_or_insert_with(|| x.clone());
        }
        if let Some(eps) = eps {
            if outside_band(&units, x, eps) {
                outside += 1;
                outside_dis += usize::from(differ);
            }
        }
    }
    let mut rep = json!({
        "samples": samples,
        "boundary_samples": boundary_samples,
        "disagreements": disagreements,
        "first_disagreement_point": first,
    });
    if let Some(eps) = eps {
        rep["eps"] = json!(eps);
        rep["outside_band"] = json!(outside);
        rep["disagreements_outside_band"] = json!(outside_dis);
        rep["band_fraction"] = json!(1.0 - outside as f64 / points.len().max(1) as f64);
    }
    print_json(out, &rep)?;
    Ok(if disagreements == 0 { EXIT_OK } else { EXIT_FAILURE })
}

fn approximate(out: &mut dyn Write, input: &std::path::Path, eps: f64, path: &std::path::Path) -> Result<i32> {
    let NetworkFile::Threshold(t) = NetworkFile::load(input)? else {
        return Err(Error::InvalidNetwork("approximate expects a threshold network".into()));
    };
    let r = threshold2_to_relu(&t, eps)?;
    print_json(out, &json!({ "eps": eps, "threshold_units": t.layers()[0].outputs(), "relu_units": r.num_units() }))?;
    NetworkFile::Relu(r).save(path)?;
    Ok(EXIT_OK)
}

fn compress(out: &mut dyn Write, input: &std::path::Path, mode: CompressMode, path: &std::path::Path) -> Result<i32> {
    let v = VMatrix::new(io::load_matrix(input)?)?;
    match mode {
        CompressMode::Exact => match exact_factorize(&v) {
            Ok(u) => {
                io::save_matrix(path, u.matrix())?;
                print_json(out, &json!({ "mode": "exact", "n": u.n(), "d": u.dim(), "objective": 0.0 }))?;
                Ok(EXIT_OK)
            }
            Err(Error::NotFactorable { column, deviation }) => {
                print_json(
                    out,
                    &json!({ "mode": "exact", "error": "not_factorable", "column": column + 1, "deviation": deviation }),
                )?;
                Ok(EXIT_FAILURE)
            }
            Err(e) => Err(e),
        },
        CompressMode::Lp => {
            let fit = min_infnorm_factor(&v).map_err(|e| match e {
                Error::SizeGuard(m) => Error::Solver(m),
                e => e,
            })?;
            io::save_matrix(path, fit.u.matrix())?;
            print_json(
                out,
                &json!({
                    "mode": "lp",
                    "n": fit.u.n(),
                    "d": fit.u.dim(),
                    "objective": fit.objective,
                    "residual_norm": residual_norm(&v, &fit.u)?,
                    "duality_gap": fit.duality_gap,
                    "pivots": fit.pivots,
                }),
            )?;
            Ok(EXIT_OK)
        }
    }
}

fn audit(
    out: &mut dyn Write,
    err: &mut dyn Write,
    v: &std::path::Path,
    u: &std::path::Path,
    data: &std::path::Path,
    path: Option<&std::path::Path>,
    exclude_bias: bool,
) -> Result<i32> {
    let vm = VMatrix::new(io::load_matrix(v)?)?;
    let um = UMatrix::new(io::load_matrix(u)?)?;
    let points = io::load_augmented_points(data)?;
    let a = margin_audit(&vm, &um, &points, AuditOptions { include_bias_in_norm: !exclude_bias })?;
    match path {
        Some(p) => {
            io::write_audit(std::io::BufWriter::new(std::fs::File::create(p)?), &a)?;
            print_json(
                out,
                &json!({
                    "examples": a.records.len(),
                    "passing": a.passing(),
                    "residual_norm": a.residual_norm,
                    "violations": a.violations().iter().map(|i| i + 1).collect::<Vec<_>>(),
                }),
            )?;
        }
        None => io::write_audit(&mut *out, &a)?,
    }
    let violations = a.violations();
    for &i in &violations {
        writeln!(err, "violation at example {}: {:?}", i + 1, a.records[i])?;
    }
    Ok(if violations.is_empty() { EXIT_OK } else { EXIT_FAILURE })
}

#[allow(clippy::too_many_arguments)]
fn generate(
    out: &mut dyn Write,
    n: usize,
    d: usize,
    seed: u64,
    path: &std::path::Path,
    data: Option<&std::path::Path>,
    total: usize,
    test: usize,
) -> Result<i32> {
    let net = generate_network(n, d, seed)?;
    NetworkFile::Relu(net.clone()).save(path)?;
    let mut rep = json!({ "n": n, "d": d, "seed": seed, "positive_units": net.n1(), "negative_units": net.n2() });
    if let Some(dp) = data {
        let ds = generate_dataset(&net, total, test, seed)?;
        io::save_dataset(dp, &ds)?;
        let pos = ds.labels.iter().filter(|l| l.is_pos()).count();
        rep["examples"] = json!(ds.len());
        rep["positive_fraction"] = json!(pos as f64 / ds.len() as f64);
    }
    print_json(out, &rep)?;
    Ok(EXIT_OK)
}

fn experiment(
    out: &mut dyn Write,
    dims: &[usize],
    ns: &[usize],
    seed: u64,
    path: &std::path::Path,
    artifacts: Option<PathBuf>,
    opts: &ExperimentOptions,
) -> Result<i32> {
    let report = run_experiment(dims, ns, seed, opts)?;
    let dir = artifacts.unwrap_or_else(|| {
        let mut s = path.as_os_str().to_owned();
        s.push(".artifacts");
        PathBuf::from(s)
    });
    std::fs::create_dir_all(&dir)?;
    for g in &report.groups {
        NetworkFile::Relu(g.generator.clone()).save(dir.join(format!("generator_n{}_d{}.json", g.n, g.d)))?;
        io::save_dataset(dir.join(format!("data_n{}_d{}.csv", g.n, g.d)), &g.dataset)?;
    }
    let rows = report.rows();
    io::write_report(std::io::BufWriter::new(std::fs::File::create(path)?), &rows)?;
    print_json(out, &json!({ "rows": rows.len(), "report": path, "artifacts": dir }))?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct WitnessRecord {
    /// One-based coordinates in the subset.
    subset: Vec<usize>,
    point: Vec<f64>,
    positive_hyperplanes: usize,
    network_positive: bool,
    deletion_flips: bool,
    verified: bool,
}

fn witness(out: &mut dyn Write, n: usize, d: usize, lemma4: bool) -> Result<i32> {
    if lemma4 {
        let net = make_lemma4_network(n, d)?;
        print_json(out, &json!({ "network": NetworkFile::Threshold(net) }))?;
        return Ok(EXIT_OK);
    }
    if !(1..=MAX_WITNESS_N).contains(&n) {
        return Err(Error::SizeGuard(format!("witness enumeration needs 1 <= n <= {MAX_WITNESS_N}, got {n}")));
    }
    let net = make_theorem2_network(n, d)?;
    let planes = (1..1u64 << n).map(|s| theorem2_subset_unit(n, d, s)).collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(planes.len());
    for s in 1..1u64 << n {
        let x = make_theorem2_witness(n, d, s)?;
        let positive: Vec<usize> = planes.iter().enumerate().filter(|(_, p)| p.apply(&x) >= 0.0).map(|(i, _)| i).collect();
        let network_positive = net.eval(&x)?.is_pos();
        let deletion_flips = !make_theorem2_disjunction(n, d, Some(s))?.eval(&x)?.is_pos();
        let exactly_one = positive.len() == 1 && positive[0] as u64 + 1 == s;
        records.push(WitnessRecord {
            subset: (0..n).filter(|i| s >> i & 1 == 1).map(|i| i + 1).collect(),
            point: x,
            positive_hyperplanes: positive.len(),
            network_positive,
            deletion_flips,
            verified: exactly_one && network_positive && deletion_flips,
        });
    }
    let all = records.iter().all(|r| r.verified);
    print_json(
        out,
        &json!({ "network": NetworkFile::Relu(net), "witnesses": records, "all_verified": all }),
    )?;
    Ok(if all { EXIT_OK } else { EXIT_FAILURE })
}
