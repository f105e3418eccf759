use std::io::Write;
use std::path::Path;

use fmanifold::report::{Bundle, Expect};

use crate::{Failure, Format, RunConfig};

pub fn emit(cfg: &RunConfig, text: &str) -> Result<(), Failure> {
    match &cfg.out {
        Some(p) => write_file(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::input(format!("stdout: {e}")))
        }
    }
}

pub fn write_file(p: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display())))
}

fn csv_text(build: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    build(&mut w).expect("writing csv to memory");
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
}

pub fn bundle_csv(b: &Bundle) -> String {
    csv_text(|w| {
        w.write_record(["check", "verdict", "expect", "max_residual", "tolerance", "error"])?;
        for r in &b.reports {
            let expect = match r.expect {
                Expect::Pass => "pass",
                Expect::Fail => "fail",
                Expect::Info => "info",
            };
            w.write_record([
                r.name.as_str(),
                if r.pass { "pass" } else { "fail" },
                expect,
                &format!("{:e}", r.max_residual),
                &format!("{:e}", r.tolerance),
                r.error.as_deref().unwrap_or(""),
            ])?;
        }
        Ok(())
    })
}

pub fn render(b: &Bundle, f: Format) -> String {
    match f {
        Format::Json => b.to_json() + "\n",
        Format::Markdown => b.to_markdown(),
        Format::Csv => bundle_csv(b),
    }
}

pub fn table_csv(header: &[String], rows: &[Vec<String>]) -> String {
    csv_text(|w| {
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        Ok(())
    })
}

/// Exit 1 with the unexpected verdicts listed when a bundle is not as expected.
pub fn verdict(b: &Bundle) -> Result<(), Failure> {
    let bad: Vec<String> = b.reports.iter().filter(|r| !r.as_expected()).map(|r| r.line()).collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::checks(format!("{} check(s) not as expected:\n{}", bad.len(), bad.join("\n"))))
    }
}
