//! `fi`: FI prime enumeration, local densities, sieve weights and the majorant, the density
//! constants, lattices, exponential sums and the ternary scans from one binary.

mod report;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use fi_core::constants::{self, DEFAULT_C3_PANELS};
use fi_core::expsum::{self, ArcDecomposition, DfiParams, Type1Phase};
use fi_core::gaussian::GaussianInt;
use fi_core::lattice::{self, StarLattice};
use fi_core::sieve::{self, MajorantParams, MajorantTable, Sign};
use fi_core::ternary::{self, FiPrimeSet, ScanStrategy};
use fi_core::{buchstab, local, primes, FiError};
use num_complex::Complex64;
use report::{Format, Report};
use serde_json::Value;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "fi", version, about = "Sums of three Fouvry–Iwaniec primes: enumeration, sieves, constants and checks")]
struct Cli {
    /// Emit one JSON object tagged "schema":"fi/1".
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Emit CSV; columns are listed in each command's help.
    #[arg(long, global = true)]
    csv: bool,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for the FI prime cache; defaults to $FI_CACHE_DIR, then the user cache dir.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// FI primes up to a limit with one decomposition each. CSV columns: p,k,l.
    Enumerate {
        #[arg(long)]
        limit: u64,
        /// Also report Σ Λ^Λ(n) over n ≤ limit and its ratio to H·x.
        #[arg(long)]
        count: bool,
    },
    /// The local density Ξ(q, a). CSV columns: key,value.
    Xi {
        #[arg(long)]
        q: u64,
        #[arg(long, allow_negative_numbers = true)]
        a: i64,
        /// Count residues directly instead of using the product formula.
        #[arg(long)]
        brute_force: bool,
    },
    /// The Buchstab function ℬ(u). CSV columns: key,value.
    Buchstab {
        #[arg(long)]
        u: f64,
    },
    /// z-rough integers up to T against the Buchstab prediction. CSV columns: key,value.
    Rough {
        #[arg(long)]
        limit: u64,
        #[arg(long)]
        z: f64,
    },
    /// θ±, the ω weights and Λ⁺(n, x) at one n. CSV columns: key,value.
    Sieve {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value = "+", value_parser = parse_sign, allow_hyphen_values = true)]
        sign: Sign,
    },
    /// The three density integrals and α⁺. CSV columns: key,value.
    Constants {
        #[arg(long, default_value_t = sieve::XI)]
        xi: f64,
        #[arg(long, default_value_t = sieve::XI1)]
        xi1: f64,
        #[arg(long, default_value_t = sieve::DELTA0)]
        delta0: f64,
        /// Gauss–Legendre panels per smooth piece of the triple integral.
        #[arg(long, default_value_t = DEFAULT_C3_PANELS)]
        grid: usize,
    },
    /// Discriminant, reduced basis and annulus counts of Γ(l₁,d₁,l₂,d₂). CSV columns: key,value.
    Lattice {
        #[command(flatten)]
        lat: LatticeArgs,
        /// Count lattice points with M < |m|² ≤ M2, given as M,M2.
        #[arg(long, value_parser = parse_pair)]
        annulus: Option<(u64, u64)>,
    },
    /// Exponential sums. CSV columns: key,value.
    Expsum {
        #[command(subcommand)]
        kind: ExpsumCommand,
    },
    /// Sums of three FI primes for x ≡ 3 (mod 4) up to a limit. CSV columns: x,p1,p2,p3,status.
    VerifyTernary {
        #[arg(long)]
        limit: u64,
        /// Print only the x with no representation.
        #[arg(long)]
        exceptions_only: bool,
    },
    /// Three-term progressions of FI primes. CSV columns: p,q,r.
    #[command(name = "3ap")]
    ThreeAp {
        #[arg(long)]
        limit: u64,
    },
    /// L^q moment of the W-tricked exponential sum. CSV columns: key,value.
    Lq {
        #[arg(long)]
        x: u64,
        #[arg(long, default_value_t = 1)]
        b: u64,
        /// Override w = 0.1·log log x.
        #[arg(long, alias = "w-override")]
        w: Option<f64>,
        #[arg(long, default_value_t = 2.5)]
        q: f64,
        /// Grid size; defaults to 4N.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Major/minor arc classification of γ. CSV columns: key,value.
    Arcs {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = expsum::DESK_A_M)]
        a_m: f64,
    },
}

#[derive(Args, Debug, Clone, Copy)]
struct LatticeArgs {
    #[arg(long, value_parser = parse_gauss, allow_hyphen_values = true)]
    l1: GaussianInt,
    #[arg(long)]
    d1: u64,
    #[arg(long, value_parser = parse_gauss, allow_hyphen_values = true)]
    l2: GaussianInt,
    #[arg(long)]
    d2: u64,
}

#[derive(Subcommand, Debug)]
enum ExpsumCommand {
    /// S₀(γ, N) = Σ_{n≤N} e(γn).
    S0 {
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long)]
        n: u64,
    },
    /// The Type I sum with prime legs, ω = 1 or ω = log.
    Type1 {
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long)]
        d_i: u64,
        #[arg(long)]
        x: u64,
        #[arg(long, default_value_t = 1)]
        w: u64,
        #[arg(long, default_value_t = 1)]
        b: u64,
        /// Use e(γ·dn) instead of e(γ·n).
        #[arg(long)]
        phase_dn: bool,
        /// Weight each leg by log l instead of 1.
        #[arg(long)]
        log_weight: bool,
    },
    /// Σ e(ξ|m|²) over the lattice points of an annulus.
    Type2 {
        #[command(flatten)]
        lat: LatticeArgs,
        #[arg(long, allow_negative_numbers = true)]
        xi: f64,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        m_hi: u64,
    },
    /// Σ_{j≤J} min{K, ‖mult·γ·j‖⁻¹}.
    Minsum {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        j: u64,
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 1)]
        mult: i64,
    },
    /// DFI dissection of Λ^Λ(n)e(γn) for n ≤ x, or of the reference instance.
    Dfi {
        #[arg(long)]
        x: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
    },
}

fn parse_sign(s: &str) -> Result<Sign, String> {
    match s {
        "+" | "plus" => Ok(Sign::Plus),
        "-" | "minus" => Ok(Sign::Minus),
        _ => Err(format!("sign must be + or -, got {s}")),
    }
}

fn parse_pair(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated integers")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

fn parse_gauss(s: &str) -> Result<GaussianInt, String> {
    let (a, b) = s.split_once(',').ok_or("expected re,im")?;
    Ok(GaussianInt::new(
        a.trim().parse().map_err(|e| format!("{e}"))?,
        b.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

fn cache_dir(flag: &Option<PathBuf>) -> Option<PathBuf> {
    if let Some(d) = flag {
        return Some(d.clone());
    }
    if let Some(d) = std::env::var_os("FI_CACHE_DIR") {
        return Some(PathBuf::from(d));
    }
    if let Some(d) = std::env::var_os("XDG_CACHE_HOME") {
        return Some(PathBuf::from(d).join("fi"));
    }
    std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache").join("fi"))
}

/// FI primes through the cache when one is usable, directly otherwise.
fn fi_set(limit: u64, dir: &Option<PathBuf>) -> anyhow::Result<FiPrimeSet> {
    if let Some(dir) = cache_dir(dir) {
        let cached = std::fs::create_dir_all(&dir)
            .map_err(FiError::from)
            .and_then(|_| primes::load_or_build_fi_primes(&dir, limit));
        match cached {
            Ok(ps) => return Ok(FiPrimeSet::from_primes(limit, ps)?),
            Err(e) => eprintln!("fi: cache at {} unusable ({e}); computing directly", dir.display()),
        }
    }
    Ok(FiPrimeSet::new(limit)?)
}

fn complex_fields(r: Report, v: Complex64, bound: f64) -> Report {
    r.field("value_re", v.re)
        .field("value_im", v.im)
        .field("bound", bound)
        .field("ratio", if bound > 0.0 { v.norm() / bound } else { f64::NAN })
}

fn lattice_of(a: &LatticeArgs) -> anyhow::Result<StarLattice> {
    Ok(lattice::lattice_new(a.l1, a.d1, a.l2, a.d2)?)
}

fn run(cli: &Cli) -> anyhow::Result<Report> {
    Ok(match &cli.command {
        Command::Enumerate { limit, count } => {
            let set = fi_set(*limit, &cli.cache_dir)?;
            let rows = set
                .primes()
                .iter()
                .map(|&p| {
                    let d = primes::fi_decompositions(p)[0];
                    vec![p.into(), d.k.into(), d.l.into()]
                })
                .collect();
            let mut r = Report::new().field("limit", *limit).field("count", set.primes().len());
            if *count {
                let c = primes::fi_weighted_count(*limit)?;
                r = r
                    .field("weighted_sum", c.sum)
                    .field("h", c.h)
                    .field("ratio", c.ratio)
                    .field("multiplier", primes::FI_CONVENTION_MULTIPLIER);
            }
            r.table(vec!["p", "k", "l"], rows)
        }
        Command::Xi { q, a, brute_force } => {
            let v = if *brute_force { local::xi_brute_force(*q, *a)? } else { local::xi(*q, *a)? };
            let exact = local::format_rational(&v);
            let dec = local::to_f64(&v);
            let text = if v.is_integer() { exact.clone() } else { format!("{exact} {dec}") };
            Report::new().field("q", *q).field("a", *a).field("exact", exact).field("value", dec).text(text)
        }
        Command::Buchstab { u } => {
            let v = buchstab::buchstab_B(*u)?;
            Report::new().field("u", *u).field("value", v).text(v.to_string())
        }
        Command::Rough { limit, z } => {
            let c = buchstab::rough_count(*limit, *z)?;
            Report::new()
                .field("limit", *limit)
                .field("z", *z)
                .field("exact", c.exact)
                .field("predicted", c.predicted)
                .field("ratio", c.exact as f64 / c.predicted)
                .field("reliable", c.reliable)
        }
        Command::Sieve { x, n, sign } => {
            if *x > 1e14 {
                return Err(FiError::Capacity("sieve command needs x ≤ 1e14".into()).into());
            }
            let params = MajorantParams::new(*x)?;
            let inner = params.inner_sieve(params.d1)?;
            let table = MajorantTable::new(params)?;
            let mut r = Report::new()
                .field("x", *x)
                .field("n", *n)
                .field("sign", if *sign == Sign::Plus { "+" } else { "-" })
                .field("theta", inner.theta(*n, *sign))
                .field("theta_plus", inner.theta(*n, Sign::Plus))
                .field("theta_minus", inner.theta(*n, Sign::Minus));
            if (*n as f64) <= x.sqrt() && *n >= 1 {
                let w = table.weights(*n);
                r = r.field("omega1", w.w1).field("omega2", w.w2).field("omega3", w.w3).field("e2", w.e2);
            }
            let v = table.assemble(*n)?;
            r.field("lambda_lambda", primes::lambda_lambda(*n))
                .field("lambda1", v.lambda1)
                .field("lambda2", v.lambda2)
                .field("lambda3", v.lambda3)
                .field("e", v.e)
                .field("lambda_plus", v.total())
        }
        Command::Constants { xi, xi1, delta0, grid } => {
            let defaults = *xi == sieve::XI && *xi1 == sieve::XI1 && *delta0 == sieve::DELTA0;
            let a = constants::alpha_components(*xi1, *xi, *delta0, buchstab::default_buchstab(), *grid)?;
            if defaults
                && !(a.alpha_plus > constants::ALPHA_PLUS_FLOOR
                    && a.alpha_plus <= constants::ALPHA_PLUS_BOUND
                    && a.alpha_plus < 3.0 * constants::ALPHA_MINUS)
            {
                return Err(FiError::Assertion(format!("α⁺ = {} outside its band", a.alpha_plus)).into());
            }
            Report::new()
                .field("xi", *xi)
                .field("xi1", *xi1)
                .field("delta0", *delta0)
                .field("c1", a.c1)
                .field("c2", a.c2)
                .field("c3", a.c3)
                .field("alpha_plus", a.alpha_plus)
                .field("margin", 3.0 * constants::ALPHA_MINUS - a.alpha_plus)
        }
        Command::Lattice { lat, annulus } => {
            let l = lattice_of(lat)?;
            let b = lattice::reduced_basis(&l)?;
            let mut r = Report::new()
                .field("delta", l.delta)
                .field("b1", b.b1.to_string())
                .field("b2", b.b2.to_string())
                .field("det", b.det().abs() as u64);
            if let Some((m, m2)) = annulus {
                let pts = lattice::annulus_lattice_points(&l, &b, *m, *m2)?;
                r = r
                    .field("points", pts.points.len())
                    .field("l2_rows", pts.l2_set.len())
                    .field("expected", (*m2 - *m) as f64 * std::f64::consts::PI / l.delta as f64);
            }
            r
        }
        Command::Expsum { kind } => expsum_report(kind)?,
        Command::VerifyTernary { limit, exceptions_only } => {
            let set = fi_set(*limit, &cli.cache_dir)?;
            let exceptions = ternary::scan_exceptions_in(&set, *limit, ScanStrategy::Bitset)?;
            let mut rows = Vec::new();
            let mut ex = exceptions.iter().peekable();
            for x in (3..=*limit).step_by(4) {
                let is_ex = ex.peek() == Some(&&x);
                if is_ex {
                    ex.next();
                    rows.push(vec![x.into(), Value::Null, Value::Null, Value::Null, "exception".into()]);
                } else if !exceptions_only {
                    let w = ternary::find_representation(x, &set)?.ok_or_else(|| {
                        FiError::Assertion(format!("{x} has no witness but the sumset scan covers it"))
                    })?;
                    rows.push(vec![x.into(), w.p1.into(), w.p2.into(), w.p3.into(), Value::Null]);
                }
            }
            Report::new()
                .field("limit", *limit)
                .field("exceptions", exceptions.clone())
                .table(vec!["x", "p1", "p2", "p3", "status"], rows)
        }
        Command::ThreeAp { limit } => {
            let set = fi_set(*limit, &cli.cache_dir)?;
            if *limit < 5 {
                return Err(FiError::Domain("3AP search needs X ≥ 5".into()).into());
            }
            let aps = ternary::find_3aps_in(&set, *limit, None);
            Report::new()
                .field("limit", *limit)
                .field("count", aps.len())
                .table(vec!["p", "q", "r"], aps.iter().map(|&(p, q, r)| vec![p.into(), q.into(), r.into()]).collect())
        }
        Command::Lq { x, b, w, q, grid } => {
            let seq = ternary::wtrick_build(*x, *b, *w)?;
            let g = grid.unwrap_or(4 * seq.n.max(1) as usize);
            let m = ternary::lq_moment(&seq, *q, g)?;
            let parseval = ternary::lq_moment(&seq, 2.0, g)?;
            Report::new()
                .field("x", *x)
                .field("W", seq.big_w)
                .field("b", seq.b)
                .field("N", seq.n)
                .field("mean", seq.mean)
                .field("q", *q)
                .field("grid", g)
                .field("moment", m.moment)
                .field("ratio", m.ratio)
                .field("parseval_rel_err", (parseval.moment - parseval.l2).abs() / parseval.l2)
        }
        Command::Arcs { x, gamma, a_m } => {
            let arcs = ArcDecomposition::new(*x, *a_m)?;
            let class = arcs.classify(*gamma)?;
            let r = Report::new()
                .field("q_max", arcs.q_max)
                .field("radius", arcs.radius)
                .field("disjoint", arcs.disjoint());
            match class {
                expsum::ArcClass::Major { q, a } => r.field("class", "major").field("q", q).field("a", a),
                expsum::ArcClass::Minor => r.field("class", "minor"),
            }
        }
    })
}

fn expsum_report(kind: &ExpsumCommand) -> anyhow::Result<Report> {
    Ok(match kind {
        ExpsumCommand::S0 { gamma, n } => {
            let d = expsum::dist_to_int(*gamma);
            let bound = if d == 0.0 { *n as f64 } else { (*n as f64).min(0.5 / d) };
            complex_fields(Report::new(), expsum::s0(*gamma, *n), bound)
        }
        ExpsumCommand::Type1 { gamma, d_i, x, w, b, phase_dn, log_weight } => {
            let phase = if *phase_dn { Type1Phase::Product } else { Type1Phase::Cofactor };
            let one = |_: u64| 1.0;
            let lg = |l: u64| (l as f64).ln();
            let omega: &(dyn Fn(u64) -> f64 + Sync) = if *log_weight { &lg } else { &one };
            let v = expsum::type1_sum(*gamma, *d_i, omega, *w, *b, *x, phase)?;
            let trivial = expsum::type1_sum(0.0, *d_i, omega, *w, *b, *x, phase)?;
            complex_fields(Report::new(), Complex64::new(v, 0.0), trivial)
        }
        ExpsumCommand::Type2 { lat, xi, m, m_hi } => {
            let l = lattice_of(lat)?;
            let t = expsum::type2_lattice_sum(*xi, &l, *m, *m_hi)?;
            complex_fields(Report::new(), t.value, t.points as f64)
                .field("points", t.points)
                .field("basis_secs", t.basis_secs)
                .field("direct_secs", t.direct_secs)
        }
        ExpsumCommand::Minsum { gamma, j, k, mult } => {
            let v = expsum::min_sum(*gamma, *j, *k, *mult)?;
            // Denominator of the best approximation bounds the sum.
            let q = (1..=1_000_000u64)
                .find(|&q| expsum::dist_to_int(*gamma * q as f64) < 1e-12)
                .unwrap_or(1_000_000);
            complex_fields(Report::new(), Complex64::new(v, 0.0), expsum::min_sum_bound(q, *j, *k)).field("q", q)
        }
        ExpsumCommand::Dfi { x, gamma } => {
            let (c, params) = match x {
                None => expsum::dfi_reference_instance(),
                Some(n) => {
                    let table = primes::lambda_lambda_table(*n as u64)?;
                    let c = table.iter().enumerate().map(|(i, &v)| v * expsum::e(gamma * i as f64)).collect();
                    let nf = *n as f64;
                    let z = nf.sqrt() / 2.0;
                    (c, DfiParams { z, u1: 5.0, u2: nf.cbrt(), d_i: 10.0 * z, k: 3 })
                }
            };
            let d = expsum::dfi_decompose(&c, params).context("DFI dissection")?;
            let bound = d.bound(expsum::DFI_C);
            if d.residual.norm() > bound {
                return Err(FiError::Assertion(format!("DFI residual {} exceeds {bound}", d.residual.norm())).into());
            }
            complex_fields(Report::new(), d.residual, bound)
                .field("s_re", d.s.re)
                .field("type1_re", d.type1.re)
                .field("sieved_tail_re", d.sieved_tail.re)
                .field("bands_re", d.bands.iter().map(|b| b.re).collect::<Vec<_>>())
                .field("c", expsum::DFI_C)
        }
    })
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<FiError>() {
        Some(FiError::Assertion(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        let built = if n == 0 {
            Err(anyhow!("--threads must be at least 1"))
        } else {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| anyhow!(e))
        };
        if let Err(e) = built {
            eprintln!("fi: {e}");
            return ExitCode::from(1);
        }
    }
    let format = if cli.json {
        Format::Json
    } else if cli.csv {
        Format::Csv
    } else {
        Format::Text
    };
    match run(&cli) {
        Ok(r) => {
            print!("{}", r.render(format));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fi: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
