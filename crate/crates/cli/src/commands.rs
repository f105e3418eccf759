use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use fmanifold::catalog::{self, match_target, run_checks, run_suite, CatalogEntry, SuiteOptions, CHECK_IDS};
use fmanifold::connection::ConnKind;
use fmanifold::error::Error;
use fmanifold::legendre::{self, ExprField, LegendreTransformed};
use fmanifold::manifold::{sample_points, FieldSource, Manifold, ManifoldSpec, SamplePlan};
use fmanifold::ode;
use fmanifold::ode3d::{self, ClosedForm, OdeState3, F_NAMES};
use fmanifold::report::{discrepancy, Bundle, Check, Tolerances};
use fmanifold::C64;

use crate::output::{emit, render, table_csv, verdict, write_file};
use crate::{Failure, Format, RunConfig};

fn input_err(e: Error) -> Failure {
    Failure::input(e.to_string())
}

/// A catalog name, or else a path to a spec (or full entry) JSON file.
fn resolve(spec: &str) -> Result<CatalogEntry, Failure> {
    if catalog::names().contains(&spec) {
        return catalog::entry(spec).map_err(input_err);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Failure::input(format!("`{spec}` is neither a catalog entry nor a file; try `fman catalog list`")));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{spec}: {e}")))?;
    match ManifoldSpec::from_json(&text) {
        Ok(s) => Ok(CatalogEntry::from_spec(s)),
        Err(first) => serde_json::from_str::<CatalogEntry>(&text).map_err(|_| Failure::input(format!("{spec}: {first}"))),
    }
}

fn validate(cfg: &RunConfig) -> Result<(), Failure> {
    for (name, t) in [("atol", cfg.atol), ("rtol", cfg.rtol)] {
        if let Some(t) = t {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Failure::input(format!("--{name} must be positive, got {t}")));
            }
        }
    }
    if cfg.points == 0 {
        return Err(Failure::input("--points must be at least 1"));
    }
    Ok(())
}

fn options(cfg: &RunConfig) -> SuiteOptions {
    let d = SuiteOptions::default();
    SuiteOptions { seed: cfg.seed, points: cfg.points, tol: cfg.atol.unwrap_or(d.tol), params: cfg.param_map() }
}

fn stamp(b: &mut Bundle, cfg: &RunConfig, o: &SuiteOptions) {
    b.tolerances = Tolerances { atol: o.tol, rtol: cfg.rtol.unwrap_or(o.tol) };
}

pub fn verify(cfg: &RunConfig, spec: &str, checks: &[String]) -> Result<(), Failure> {
    validate(cfg)?;
    let e = resolve(spec)?;
    let o = options(cfg);
    Manifold::compile_with(&e.spec, &o.params).map_err(|err| Failure::input(format!("{}: {err}", e.spec.name)))?;
    let mut b = if checks.is_empty() { run_suite(&e, &o) } else { run_checks(&e, checks, &o).map_err(input_err)? };
    stamp(&mut b, cfg, &o);
    emit(cfg, &render(&b, cfg.format))?;
    verdict(&b)
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    /// The exact-pencil family with spectrum {1, -1/2, -1/2}.
    Pencil63,
    /// The q = 0 family with constants a, b.
    Q0,
}

/// Output is always CSV: z, real and imaginary parts of each F and of
/// I1..I8, and the running drift of I1 and I2.
#[derive(Args, Debug)]
pub struct OdeArgs {
    #[arg(long, value_enum, default_value_t = Init::Pencil63)]
    init: Init,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    b: f64,
    #[arg(long, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    /// Initial F at `--from` as 12 numbers `re,im` per component in the
    /// order F12,F21,F13,F31,F23,F32; replaces the closed-form start.
    #[arg(long, allow_hyphen_values = true)]
    state: Option<String>,
    /// Output rows strictly inside the span, besides both ends.
    #[arg(long, default_value_t = 9)]
    samples: usize,
    /// Largest accepted drift of I1 and I2.
    #[arg(long, default_value_t = 1e-7)]
    drift_tol: f64,
    /// Also write the report here, in the `--format` given.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn parse_state(s: &str) -> Result<[C64; 6], Failure> {
    let xs: Vec<f64> =
        s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| Failure::input(format!("--state: `{x}` is not a number")))).collect::<Result<_, _>>()?;
    if xs.len() != 12 {
        return Err(Failure::input(format!("--state needs 12 numbers, got {}", xs.len())));
    }
    Ok(std::array::from_fn(|k| C64::new(xs[2 * k], xs[2 * k + 1])))
}

pub fn ode(cfg: &RunConfig, a: &OdeArgs) -> Result<(), Failure> {
    validate(cfg)?;
    let family = match a.init {
        Init::Pencil63 => ClosedForm::Pencil,
        Init::Q0 => ClosedForm::Q0 { a: a.a, b: a.b },
    };
    let closed = a.state.is_none();
    let start = match &a.state {
        Some(s) => OdeState3::new(a.from, parse_state(s)?),
        None => family.state(a.from).map_err(input_err)?,
    };
    let d = ode::Tolerances::default();
    let tol = ode::Tolerances { rtol: cfg.rtol.unwrap_or(d.rtol), atol: cfg.atol.unwrap_or(d.atol), ..d };
    let step = (a.to - a.from) / (a.samples + 1) as f64;
    let outputs: Vec<f64> = (1..=a.samples).map(|k| a.from + step * k as f64).collect();
    let traj = match ode3d::integrate(&start, a.to, tol, &outputs) {
        Ok(t) => t,
        Err(e @ Error::SingularApproach { .. }) | Err(e @ Error::SingularPoint(_)) => return Err(input_err(e)),
        Err(e) => return Err(Failure::checks(format!("integration failed: {e}"))),
    };

    let mut header = vec!["z".to_string()];
    for n in F_NAMES {
        header.extend([format!("{n}_re"), format!("{n}_im")]);
    }
    for k in 1..=8 {
        header.extend([format!("I{k}_re"), format!("I{k}_im")]);
    }
    header.extend(["drift_I1".to_string(), "drift_I2".to_string()]);
    let rows: Vec<Vec<String>> = traj
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.z.to_string()];
            for x in r.f.iter().chain(&r.i) {
                row.extend([x.re.to_string(), x.im.to_string()]);
            }
            row.extend((0..2).map(|k| (r.i[k] - traj.initial[k]).norm().to_string()));
            row
        })
        .collect();

    let mut params = std::collections::BTreeMap::new();
    if a.init == Init::Q0 {
        params.extend([("a".to_string(), a.a), ("b".to_string(), a.b)]);
    }
    let label = if closed { format!("{:?}", a.init).to_lowercase() } else { "given state".into() };
    let mut b = Bundle::new(&format!("ode {label} from z = {} to z = {}", a.from, a.to), cfg.seed, traj.rows.len(), params);
    b.tolerances = Tolerances { atol: tol.atol, rtol: tol.rtol };
    let mut drift = Check::new("integral drift I1, I2", a.drift_tol);
    drift.record(traj.drift[0].max(traj.drift[1]), 0.0);
    drift.meta("drift_I1", traj.drift[0]);
    drift.meta("drift_I2", traj.drift[1]);
    b.reports.push(drift.finish());
    if closed {
        let mut end = Check::new("endpoint vs closed form", 1e-7);
        match family.state(a.to) {
            Ok(want) => {
                let (diff, scale) = discrepancy(&traj.end.f, &want.f);
                end.record(diff, scale);
            }
            Err(e) => end.fail_with(&e),
        }
        b.reports.push(end.finish());
    }

    emit(cfg, &table_csv(&header, &rows))?;
    for r in &b.reports {
        eprintln!("{}", r.line());
    }
    if let Some(p) = &a.report {
        write_file(p, &render(&b, cfg.format))?;
    }
    verdict(&b)
}

/// `ḡ` evaluated directly against the metric of `written`, entry by entry.
fn spec_reproduces(t: &LegendreTransformed, written: &Manifold, p: &[Vec<C64>], tol: f64, name: &str) -> fmanifold::report::Report {
    let mut chk = Check::new(name, tol);
    for u in p {
        chk.absorb((|| {
            let a = t.fields_at(u)?;
            let b = written.fields(u)?;
            let va: Vec<C64> = a.metric()?.data().iter().map(|x| x.val).collect();
            let vb: Vec<C64> = b.metric()?.data().iter().map(|x| x.val).collect();
            Ok(discrepancy(&va, &vb))
        })());
    }
    chk.finish()
}

/// First failure to build the transformed structure, typically a field
/// that is not invertible for the product.
fn transform_error(t: &LegendreTransformed, p: &[Vec<C64>]) -> Option<String> {
    p.iter().find_map(|u| t.fields_at(u).err()).map(|e| e.to_string())
}

pub fn legendre(cfg: &RunConfig, spec: &str, field: &str, components: Option<&str>, target: Option<&str>, spec_out: Option<&Path>) -> Result<(), Failure> {
    validate(cfg)?;
    let e = resolve(spec)?;
    let o = options(cfg);
    let m = Manifold::compile_with(&e.spec, &o.params).map_err(|err| Failure::input(format!("{}: {err}", e.spec.name)))?;
    let p = sample_points(&m, SamplePlan::new(o.seed, o.points)).map_err(input_err)?;
    let f = match components {
        Some(c) => ExprField::compile(&m, field, &c.split(';').map(str::trim).collect::<Vec<_>>()),
        None => legendre::named_field(&m, field, &e.legendre_fields),
    }
    .map_err(input_err)?;
    let tol = o.tol;
    let mut b = Bundle::new(&format!("{} by {field}", m.name()), o.seed, o.points, m.spec.params.clone());
    stamp(&mut b, cfg, &o);
    b.reports.push(legendre::check_flat_field(&m, ConnKind::Natural, &f, &p, tol));
    let t = LegendreTransformed::new(&m, &f, &p);
    let out_spec = legendre::transformed_spec(&m.spec, &f);
    let mut diagnostic = None;
    match (&t, &out_spec) {
        (Ok(t), Ok(_)) if transform_error(t, &p).is_some() => diagnostic = transform_error(t, &p),
        (Ok(t), Ok(s)) => {
            b.reports.extend(legendre::check_transform_metric(&m, &f, &p, tol));
            match Manifold::compile(s) {
                Ok(w) => {
                    b.reports.push(spec_reproduces(t, &w, &p, tol, "written spec reproduces the transformed metric"));
                    if field == "e" && components.is_none() {
                        b.reports.push(spec_reproduces(t, &m, &p, tol, "transform by e is the identity"));
                    }
                }
                Err(err) => diagnostic = Some(format!("transformed spec does not compile: {err}")),
            }
            if let Some(target) = target {
                if !catalog::names().contains(&target) {
                    return Err(Failure::input(format!("unknown target `{target}`")));
                }
                b.reports.push(match_target(&m, &f, target, &p, &o));
            }
            if e.has(catalog::Flag::Homogeneous) {
                b.reports.push(legendre::check_homogeneous_legendre(&m, &f, &p, tol));
            }
        }
        (Err(err), _) | (_, Err(err)) => diagnostic = Some(err.to_string()),
    }

    let spec_json = out_spec.as_ref().ok().map(ManifoldSpec::to_json);
    let text = match (spec_out, &spec_json) {
        (Some(path), Some(s)) => {
            write_file(path, &(s.clone() + "\n"))?;
            render(&b, cfg.format)
        }
        (None, Some(s)) if cfg.format == Format::Json => {
            let v = serde_json::json!({
                "spec": serde_json::from_str::<serde_json::Value>(s).expect("spec json round-trips"),
                "report": serde_json::to_value(&b).expect("bundle serializes"),
            });
            serde_json::to_string_pretty(&v).expect("value serializes") + "\n"
        }
        (None, Some(s)) if cfg.format == Format::Markdown => format!("{}\n## transformed spec\n\n```json\n{s}\n```\n", b.to_markdown()),
        _ => render(&b, cfg.format),
    };
    emit(cfg, &text)?;
    if let Some(d) = diagnostic {
        return Err(Failure::checks(d));
    }
    verdict(&b)
}

fn flag_names(e: &CatalogEntry) -> Vec<String> {
    e.flags.iter().map(|f| serde_json::to_value(f).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()).collect()
}

pub fn catalog_list(cfg: &RunConfig) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for name in catalog::names() {
        let e = catalog::entry(name).map_err(input_err)?;
        rows.push((name.to_string(), e.spec.n, flag_names(&e)));
    }
    let text = match cfg.format {
        Format::Json => {
            let v: Vec<_> = rows.iter().map(|(n, d, f)| serde_json::json!({"name": n, "n": d, "flags": f})).collect();
            serde_json::to_string_pretty(&v).expect("list serializes") + "\n"
        }
        Format::Markdown => {
            let mut s = String::from("| entry | n | claims |\n|---|---|---|\n");
            for (n, d, f) in &rows {
                s.push_str(&format!("| {n} | {d} | {} |\n", f.join(", ")));
            }
            s
        }
        Format::Csv => table_csv(
            &["entry".into(), "n".into(), "claims".into()],
            &rows.iter().map(|(n, d, f)| vec![n.clone(), d.to_string(), f.join(" ")]).collect::<Vec<_>>(),
        ),
    };
    emit(cfg, &text)
}

pub fn catalog_export(cfg: &RunConfig, name: &str, full: bool) -> Result<(), Failure> {
    let e = catalog::entry(name).map_err(input_err)?;
    let text = if full { e.to_json() } else { e.spec.to_json() };
    emit(cfg, &(text + "\n"))
}

pub fn catalog_checks(cfg: &RunConfig) -> Result<(), Failure> {
    emit(cfg, &(CHECK_IDS.join("\n") + "\n"))
}
