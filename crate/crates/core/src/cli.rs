//! Command line front end: `run`, `check-set`, `transform` and `selftest`.
//!
//! Exit codes: 0 when every requested check passes, 1 when a check or a
//! numerical step fails, 2 on configuration errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cauchy_green::{cauchy_transform_cells, dbar_residual, dbar_tolerance, ScalarField};
use crate::driver::run_with;
use crate::io::{self, Check};
use crate::planar_sets::{beh_check, holes, hull_and_h, rasterize, SetDescriptor, BEH_MARGIN_CELLS};
use crate::scenario::ScenarioFile;
use crate::selftest;
use crate::target_cp1::dist_cp1;
use crate::{Error, Result, C64};

#[derive(Debug, Parser)]
#[command(name = "arakelian", version, about = "Rational approximation of CP1-valued maps on Arakelian sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (TOML with [grid], [set], [map], [run]).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Directory for artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replaces the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override a scenario key, e.g. `--set run.epsilon=0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the approximation and write the map, step table and rasters.
    Run(Common),
    /// Report holes, hull and bounded exhaustion hulls of the scenario set.
    CheckSet(Common),
    /// Apply the Cauchy-Green transform to a CSV field (x, y, re, im).
    Transform {
        /// Input field; rows are placed on the scenario grid.
        field: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance property suite.
    Selftest {
        #[arg(long, default_value_t = 20240917)]
        seed: u64,
        /// Run only these criteria (1-9).
        #[arg(long)]
        only: Vec<u8>,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Config(_)
        | Error::Parse(_)
        | Error::InvalidGrid(_)
        | Error::InvalidDescriptor(_)
        | Error::EmptySet
        | Error::Io(_) => 2,
        _ => 1,
    }
}

/// Parse `argv` (including the program name) and execute; returns the exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let res = match cli.command {
        Command::Run(c) => cmd_run(&c),
        Command::CheckSet(c) => cmd_check_set(&c),
        Command::Transform { field, common } => cmd_transform(&field, &common),
        Command::Selftest { seed, only } => Ok(cmd_selftest(seed, &only)),
    };
    match res {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load(c: &Common) -> Result<ScenarioFile> {
    ScenarioFile::load(&c.scenario, &c.overrides)
}

fn write(out: Option<&Path>, name: &str, bytes: &[u8]) -> Result<()> {
    match out {
        Some(dir) => io::write_artifact(dir, name, bytes),
        None => Ok(()),
    }
}

fn print_checks(checks: &[Check]) -> bool {
    for c in checks {
        println!(
            "{:<4} {:<44} {:>12.4e}  tol {:.3e}",
            if c.pass { "ok" } else { "FAIL" },
            c.quantity,
            c.value,
            c.tolerance
        );
    }
    checks.iter().all(|c| c.pass)
}

fn cmd_run(c: &Common) -> Result<bool> {
    let file = load(c)?;
    let sc = file.scenario(c.seed)?;
    let (fmap, rep) = run_with(&sc, |_, r| {
        eprintln!(
            "step {}: degree {}, deviation {:.3e} (budget {:.3e}), dist_to_id {:.3e}, attempts {}",
            r.step, r.degree, r.deviation, r.budget, r.dist_to_id, r.attempts
        )
    })?;
    let mut checks: Vec<Check> = rep
        .steps
        .iter()
        .map(|s| Check::below(format!("step {} deviation", s.step), s.deviation, s.budget))
        .collect();
    checks.push(Check::below("final sup chordal error on E", rep.final_error, sc.epsilon));
    let ok = print_checks(&checks);
    println!("degree {}", rep.degree);

    let out = c.out.as_deref();
    if out.is_some() {
        let grid = sc.grid;
        let e = rasterize(&sc.set, &grid)?;
        let original = sc.f.sample(&grid);
        let err: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|cell| {
                if e.contains(cell) {
                    dist_cp1(&original.value(cell), &fmap.eval(grid.center(cell)))
                } else {
                    0.0
                }
            })
            .collect();
        write(out, "map.txt", fmap.to_text().as_bytes())?;
        write(out, "steps.csv", io::steps_csv(&rep.steps).as_bytes())?;
        write(out, "checks.csv", io::checks_csv(&checks).as_bytes())?;
        write(out, "set.pgm", &io::mask_pgm(&e))?;
        write(out, "error.pgm", &io::values_pgm(&grid, &err, &e))?;
    }
    Ok(ok)
}

fn cmd_check_set(c: &Common) -> Result<bool> {
    let file = load(c)?;
    let grid = file.grid()?;
    let e = rasterize(&file.set()?, &grid)?;
    let hs = holes(&e);
    let (hull, _) = hull_and_h(&e);
    let h = grid.spacing();
    println!("set: {} cells, {} component(s)", e.count(), e.components().len());
    println!("holes: {}", hs.len());
    for (i, hole) in hs.iter().enumerate() {
        println!("  hole {}: {} cells, area {:.4}, extent {:.4}", i + 1, hole.count(), hole.area(), hole.extent());
    }
    println!("hull: {} cells, area {:.4}, extent {:.4}", hull.count(), hull.area(), hull.extent());

    // discs about the origin at quarter steps of the usable window, and a few
    // seeded off-center discs
    let limit = grid.window_radius() - (BEH_MARGIN_CELLS as f64 + 1.0) * h;
    let seed = c.seed.or(file.run.as_ref().map(|r| r.seed)).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut discs: Vec<(C64, f64)> = (1..=4).map(|k| (C64::new(0.0, 0.0), limit * k as f64 / 4.0)).collect();
    for _ in 0..4 {
        let center = C64::from_polar(rng.gen_range(0.0..0.5 * limit), rng.gen_range(0.0..std::f64::consts::TAU));
        discs.push((center, rng.gen_range(0.1..0.5) * limit));
    }
    let mut checks = vec![Check::below("holes", hs.len() as f64, 0.5)];
    for (center, r) in discs {
        let rep = beh_check(&e, &SetDescriptor::disc(center, r))?;
        let name = format!("BEH disc ({:.2}, {:.2}) r={r:.2}: hole cells", center.re, center.im);
        checks.push(Check { quantity: name, value: rep.holes.count() as f64, tolerance: 0.0, pass: rep.passes });
    }
    let ok = print_checks(&checks);
    let out = c.out.as_deref();
    write(out, "set.pgm", &io::mask_pgm(&e))?;
    write(out, "hull.pgm", &io::mask_pgm(&hull))?;
    write(out, "components.csv", io::components_csv(&e).as_bytes())?;
    write(out, "checks.csv", io::checks_csv(&checks).as_bytes())?;
    Ok(ok)
}

fn cmd_transform(field: &Path, c: &Common) -> Result<bool> {
    let file = load(c)?;
    let grid = file.grid()?;
    let text = std::fs::read_to_string(field)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", field.display())))?;
    let g = io::field_from_csv(grid, &text)?;
    let all: Vec<usize> = (0..grid.len()).collect();
    let t = cauchy_transform_cells(&g, &all);
    let tg = ScalarField::new(crate::planar_sets::RasterSet::full(grid), t)?;
    let residual = dbar_residual(&g, &g.support().interior());
    let checks = [Check::below("dbar residual on int K", residual, dbar_tolerance(grid.spacing(), g.sup_norm()))];
    let csv = io::field_csv(&tg);
    match c.out.as_deref() {
        Some(dir) => {
            io::write_artifact(dir, "transform.csv", csv.as_bytes())?;
            io::write_artifact(dir, "checks.csv", io::checks_csv(&checks).as_bytes())?;
            Ok(print_checks(&checks))
        }
        None => {
            print!("{csv}");
            Ok(checks.iter().all(|c| c.pass))
        }
    }
}

fn cmd_selftest(seed: u64, only: &[u8]) -> bool {
    let ids: Vec<u8> = if only.is_empty() { selftest::CRITERIA.iter().map(|(i, _)| *i).collect() } else { only.to_vec() };
    let mut all = true;
    for id in ids {
        let o = selftest::run_criterion(id, seed);
        print!("{}", selftest::render(std::slice::from_ref(&o)));
        all &= o.passed();
    }
    println!("{}", if all { "all criteria pass" } else { "some criteria FAIL" });
    all
}
