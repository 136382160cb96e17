mod args;
mod config;
mod error;

use std::ffi::OsString;
use std::io::Read;
use std::path::Path;
use std::process::ExitCode;

use boxball::harness::{
    correlation_experiment, diffusion_experiment, identity_audit, ldp_experiment, velocity_experiment, AuditSpec,
    CorrelationSpec, EnsembleSpec, ExperimentReport,
};
use boxball::qstat::{self, q_from_bernoulli, q_from_markov, QParams};
use boxball::sampler::{sample_mu, sample_nu, Method, SampleSpec};
use boxball::seat::{seat_decompose, SeatLabel};
use boxball::skip::{skip, skip_recentered};
use boxball::soliton::identify;
use boxball::{Configuration, Scalar};
use clap::{CommandFactory, Parser};
use serde::Serialize;
use serde_json::json;

use args::*;
use error::CliError;

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let argv = match with_config_file(argv) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    eprintln!("boxball: resolved {:?}", cli.command);
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(&CliError::Usage(format!("cannot start {n} threads: {e}")));
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("boxball: error: {e}");
    ExitCode::from(e.exit_code())
}

fn with_config_file(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config::config_path(&argv) else { return Ok(argv) };
    let file = config::file_flags(Path::new(&path))?;
    let names: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
    Ok(config::merge(argv, file, &names))
}

/// Runs the command; `Ok(false)` when a verdict failed.
fn run(cli: &Cli) -> Result<bool, CliError> {
    let json = cli.global.json;
    match &cli.command {
        Command::Evolve(a) => evolve(a, json),
        Command::Identify(a) => identify_cmd(a, json),
        Command::Linearize(a) => linearize(a, json),
        Command::Skip(a) => skip_cmd(a, json),
        Command::Qstat(a) => qstat_cmd(a, json),
        Command::Sample(a) => sample(a, json),
        Command::Velocity(a) => experiment(velocity_experiment(&ensemble_spec(a)?)?, &a.report, json),
        Command::Diffusion(a) => experiment(diffusion_experiment(&ensemble_spec(a)?)?, &a.report, json),
        Command::Ldp(a) => {
            let spec = ensemble_spec(&a.ensemble)?;
            experiment(ldp_experiment(&spec, &a.lambda)?, &a.ensemble.report, json)
        }
        Command::Correlate(a) => correlate(a, json),
        Command::Audit(a) => audit(a, json),
    }
}

fn read_config(input: &InputArgs) -> Result<Configuration, CliError> {
    let text = if input.input.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|source| CliError::Io { path: "<stdin>".into(), source })?;
        s
    } else {
        std::fs::read_to_string(&input.input).map_err(|source| CliError::Io { path: input.input.clone(), source })?
    };
    Ok(text.parse()?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn evolve(a: &EvolveArgs, json: bool) -> Result<bool, CliError> {
    let c = read_config(&a.input)?;
    let carrier = if a.carrier {
        let (lo, hi) = c.window();
        Some(c.carrier_profile(lo - 1, hi.max(lo))?.values)
    } else {
        None
    };
    let mut states = vec![c.clone()];
    let mut cur = c;
    for _ in 0..a.steps {
        cur = if a.inverse { cur.evolve_inverse() } else { cur.evolve() };
        if a.all {
            states.push(cur.clone());
        }
    }
    if !a.all {
        states = vec![cur];
    }
    if json {
        print_json(&json!({ "configurations": states, "carrier": carrier }))?;
    } else {
        if let Some(w) = carrier {
            let w: Vec<String> = w.iter().map(u32::to_string).collect();
            println!("carrier {}", w.join(" "));
        }
        for s in states {
            println!("{s}");
        }
    }
    Ok(true)
}

fn identify_cmd(a: &InputArgs, json: bool) -> Result<bool, CliError> {
    let set = identify(&read_config(a)?);
    let rows = set.to_records();
    if json {
        return print_json(&json!({ "census": set.census(), "solitons": rows })).map(|_| true);
    }
    println!("census {:?}", set.census());
    println!("k\tposition\tnatural\tvolume_index\tvolume\trepresentative\theads\ttails");
    for r in rows {
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{:?}\t{:?}",
            r.k, r.position, r.natural_index, r.volume_index, r.volume, r.volume_rep, r.heads, r.tails
        );
    }
    Ok(true)
}

fn label_text(l: SeatLabel) -> String {
    match l {
        SeatLabel::Record => "r".into(),
        SeatLabel::Up(k) => format!("u{k}"),
        SeatLabel::Down(k) => format!("d{k}"),
    }
}

fn linearize(a: &InputArgs, json: bool) -> Result<bool, CliError> {
    let c = read_config(a)?.recenter();
    let view = seat_decompose(&c);
    let (lo, hi) = view.range();
    let labels: Vec<(i64, String)> = (lo..=hi).map(|x| (x, label_text(view.label(x)))).collect();
    let slots = view.slots();
    let entries: Vec<(usize, i64, u64)> = slots.entries().collect();
    if json {
        let labels: Vec<_> = labels.iter().map(|(x, l)| json!({ "site": x, "label": l })).collect();
        let slots: Vec<_> = entries.iter().map(|(k, i, n)| json!({ "k": k, "slot": i, "count": n })).collect();
        return print_json(&json!({ "configuration": c, "labels": labels, "slots": slots })).map(|_| true);
    }
    println!("{c}");
    let text: Vec<String> = labels.iter().map(|(x, l)| format!("{x}:{l}")).collect();
    println!("labels {}", text.join(" "));
    for (k, i, n) in entries {
        println!("slot k={k} i={i} count={n}");
    }
    Ok(true)
}

fn skip_cmd(a: &SkipArgs, json: bool) -> Result<bool, CliError> {
    let c = read_config(&a.input)?;
    if a.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let (image, shift) = if a.recenter {
        (skip_recentered(&c, a.k), None)
    } else {
        let r = skip(&c, a.k);
        (r.image, Some(r.origin_shift))
    };
    if json {
        print_json(&json!({ "image": image, "origin_shift": shift }))?;
    } else {
        println!("{image}");
        if let Some(s) = shift {
            println!("origin shift {s}");
        }
    }
    Ok(true)
}

fn parse_scalar(s: &str) -> Result<Scalar, CliError> {
    Ok(Scalar::parse(s)?)
}

fn q_params(q: &QArgs, cut: &QCut) -> Result<QParams, CliError> {
    let params = if let Some(rho) = &q.bernoulli {
        q_from_bernoulli(parse_scalar(rho)?)?
    } else if let Some(ab) = &q.markov {
        q_from_markov(parse_scalar(&ab[0])?, parse_scalar(&ab[1])?)?
    } else if let Some(list) = &q.q {
        QParams::finite(list.iter().map(|s| parse_scalar(s)).collect::<Result<_, _>>()?)?
    } else {
        return Err(CliError::Usage("one of --bernoulli, --markov, --q is required".into()));
    };
    Ok(match cut.cut {
        Some(k) => qstat::cut(&params, k),
        None => params,
    })
}

/// A scalar as a float, with the exact value when it is short.
fn scalar_json(s: &Scalar) -> serde_json::Value {
    let exact = s.to_string();
    if s.is_exact() && exact.len() <= 40 {
        json!({ "value": s.to_f64(), "exact": exact })
    } else {
        json!({ "value": s.to_f64() })
    }
}

fn scalar_text(s: &Scalar) -> String {
    let exact = s.to_string();
    if s.is_exact() && exact.len() <= 40 && exact.contains('/') {
        format!("{:.10} ({exact})", s.to_f64())
    } else {
        format!("{:.10}", s.to_f64())
    }
}

fn qstat_cmd(a: &QstatArgs, json: bool) -> Result<bool, CliError> {
    let q = q_params(&a.q, &a.cut)?;
    if a.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let table = qstat::scalar_table(&q, a.k)?;
    let density = qstat::density(&q)?;
    let mut cgf = Vec::new();
    for &l in &a.lambda {
        cgf.push((l, qstat::u_cumulant(&q, a.k, l)?, qstat::lambda_y(&q, a.k, l)?));
    }
    let mut rates = Vec::new();
    for &u in &a.rate {
        rates.push((u, qstat::rate_function(&q, a.k, u)?));
    }
    if json {
        let rows: Vec<_> = table
            .rows
            .iter()
            .map(|r| {
                json!({
                    "k": r.k,
                    "q": scalar_json(&r.q),
                    "alpha": scalar_json(&r.alpha),
                    "r_bar": scalar_json(&r.r_bar),
                    "velocity": scalar_json(&r.velocity),
                    "blocked_diffusion": r.blocked_diffusion.as_ref().map(scalar_json),
                    "diffusion": r.diffusion.as_ref().map(scalar_json),
                    "unsupported": r.unsupported,
                })
            })
            .collect();
        let cgf: Vec<_> = cgf.iter().map(|(l, u, y)| json!({ "lambda": l, "u": u, "lambda_y": y })).collect();
        let rates: Vec<_> = rates.iter().map(|(u, i)| json!({ "speed": u, "rate": i })).collect();
        print_json(&json!({
            "q": boxball::harness::describe_q(&q),
            "density": scalar_json(&density),
            "domain_edge": qstat::domain_edge(&q, a.k),
            "sizes": rows,
            "cgf": cgf,
            "rate_function": rates,
        }))?;
        return Ok(true);
    }
    println!("q-sequence {}", boxball::harness::describe_q(&q));
    println!("density {}", scalar_text(&density));
    for r in &table.rows {
        println!("k={}", r.k);
        println!("  q {}", scalar_text(&r.q));
        println!("  alpha {}", scalar_text(&r.alpha));
        println!("  r_bar {}", scalar_text(&r.r_bar));
        println!("  velocity {}", scalar_text(&r.velocity));
        match (&r.blocked_diffusion, &r.diffusion) {
            (Some(g), Some(d)) => {
                println!("  blocked-step variance {}", scalar_text(g));
                println!("  diffusion {}", scalar_text(d));
            }
            _ => println!("  diffusion unsupported: {}", r.unsupported.as_deref().unwrap_or("")),
        }
    }
    for (l, u, y) in cgf {
        println!("lambda={l}: U={u:.12} Lambda_Y={y:.12}");
    }
    for (u, i) in rates {
        println!("rate at speed {u}: {i:.12}");
    }
    Ok(true)
}

fn method(m: MethodArg) -> Method {
    match m {
        MethodArg::SlotReconstruction => Method::SlotReconstruction,
        MethodArg::MarkovDirect => Method::MarkovDirect,
    }
}

fn sample(a: &SampleArgs, json: bool) -> Result<bool, CliError> {
    let q = q_params(&a.q, &a.cut)?;
    let spec = SampleSpec::new(q, a.records, a.seed.seed).with_left(a.left).with_method(method(a.seed.method));
    let c = if a.unconditioned { sample_mu(&spec, a.replica)? } else { sample_nu(&spec, a.replica)? };
    let text = c.to_string();
    match &a.out {
        Some(path) => write_file(path, &format!("{text}\n"))?,
        None if json => print_json(&json!({ "configuration": text, "seed": a.seed.seed, "replica": a.replica }))?,
        None => println!("{text}"),
    }
    Ok(true)
}

fn ensemble_spec(a: &EnsembleArgs) -> Result<EnsembleSpec, CliError> {
    let q = q_params(&a.q, &a.cut)?;
    let mut spec = EnsembleSpec::new(q, a.k, a.steps, a.replicas, a.seed.seed).with_method(method(a.seed.method));
    spec.tag = a.tag;
    Ok(spec)
}

fn experiment(report: ExperimentReport, out: &ReportArgs, json: bool) -> Result<bool, CliError> {
    if let Some(path) = &out.out {
        write_file(path, &report.to_json()?)?;
    }
    if let Some(path) = &out.csv {
        write_file(path, &report.series_csv())?;
    }
    if json {
        println!("{}", report.to_json()?);
    } else {
        print!("{}", report.summary());
    }
    Ok(report.passed())
}

fn correlate(a: &CorrelateArgs, json: bool) -> Result<bool, CliError> {
    let q = q_params(&a.q, &a.cut)?;
    let spec = CorrelationSpec {
        ensemble: EnsembleSpec::new(q, a.k, 0, a.replicas, a.seed.seed).with_method(method(a.seed.method)),
        sizes: a.sizes.clone(),
        exponent: a.exponent,
        u: a.u,
        v: a.v,
        threshold: a.threshold,
    };
    experiment(correlation_experiment(&spec)?, &a.report, json)
}

fn audit(a: &AuditArgs, json: bool) -> Result<bool, CliError> {
    let q = q_params(&a.q, &a.cut)?;
    let mut spec = AuditSpec::new(q, a.samples, a.steps, a.seed.seed);
    spec.method = method(a.seed.method);
    spec.sites = a.sites;
    let report = identity_audit(&spec)?;
    if let Some(summary) = report.audit.as_ref().filter(|s| !s.counterexamples.is_empty()) {
        write_file(&a.counterexample, &serde_json::to_string_pretty(&summary.counterexamples)?)?;
        eprintln!("boxball: counterexamples written to {}", a.counterexample.display());
    }
    experiment(report, &a.report, json)
}
