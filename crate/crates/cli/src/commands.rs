use anyhow::{bail, ensure, Result};
use num_traits::Zero;
use polymorph::classify::{classify, finite_chain_theorem_check, ClassificationReport, TheoremCheck};
use polymorph::coarse::{discretize_correspondence, discretize_torus_auto, TorusDiscretization};
use polymorph::operator::{AxiomReport, ContractionReport};
use polymorph::sim::{DilationReport, TailProbeReport};
use polymorph::spectral::Eigenvalue;
use polymorph::symbolic::{
    lambda_density_check, lambda_truncation, quasi_determinism_diagnostic, verify_intertwining, DensityReport,
    IntertwiningReport, QuasiDeterminismReport,
};
use polymorph::{
    classify_contraction, compose, convex_combine, dilation_check, discretize, empirical_tail_probe, operator_of,
    refinement_consistency, sample, verify_axioms, MapSpec, Polymorphism, Rational, Scalar, ScalarRepr,
    SymbolicSystem, Tolerance, Window,
};
use serde::Serialize;

use crate::io::{emit, parse_partition, parse_scalars, parse_window, read_polymorphism, read_system, to_json};
use crate::{Cli, Command, Format, Global};

pub enum Outcome {
    Passed,
    Failed(String),
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let g = &cli.global;
    ensure!(
        g.tolerance.is_finite() && g.tolerance >= 0.0,
        "tolerance must be a nonnegative number"
    );
    let tol = Tolerance(g.tolerance);
    match &cli.command {
        Command::Compose { input } => {
            let ps = input.iter().map(|p| read_polymorphism(p)).collect::<Result<Vec<_>>>()?;
            let mut acc = ps[0].clone();
            for p in &ps[1..] {
                acc = compose(&acc, p)?;
            }
            write_polymorphism(g, &acc)
        }
        Command::Involute { input } => write_polymorphism(g, &read_polymorphism(input)?.involute()),
        Command::Convex { input, weights } => {
            let ps = input.iter().map(|p| read_polymorphism(p)).collect::<Result<Vec<_>>>()?;
            let ws: Vec<Rational> = parse_scalars(weights, "--weights")?;
            ensure!(
                ws.len() == ps.len(),
                "{} weights for {} polymorphisms",
                ws.len(),
                ps.len()
            );
            let terms: Vec<(Rational, Polymorphism<Rational>)> = ws.into_iter().zip(ps).collect();
            write_polymorphism(g, &convex_combine(&terms, tol)?)
        }
        Command::Classify { input, budget } => run_classify(g, &read_polymorphism(input)?, *budget, tol),
        Command::Factor { input, partition } => {
            let p = read_polymorphism(input)?;
            let part = parse_partition(partition, p.size())?;
            write_polymorphism(g, &p.factor(&part)?)
        }
        Command::Discretize { map, k, samples, seed } => run_discretize(g, map, *k, *samples, *seed),
        Command::RefineCheck { map, k } => run_refine(g, map, *k),
        Command::Intertwine { system, n, window } => run_intertwine(g, &read_system(system)?, *n, window.as_deref()),
        Command::Simulate {
            input,
            paths,
            length,
            seed,
            lags,
            f,
            g: gfun,
            target,
        } => {
            let p = read_polymorphism(input)?;
            let sim = SimConfig {
                paths: *paths,
                length: *length,
                seed: *seed,
                lags,
                f: f.as_deref(),
                g: gfun.as_deref(),
                target,
            };
            run_simulate(g, &p, &sim)
        }
    }
}

fn write_polymorphism(g: &Global, p: &Polymorphism<Rational>) -> Result<Outcome> {
    let text = match g.format {
        Format::Json => to_json(p)?,
        Format::Csv => p.nu_csv(),
    };
    emit(g, &text)?;
    Ok(Outcome::Passed)
}

fn json_only(g: &Global, what: &str) -> Result<()> {
    if g.format == Format::Csv {
        bail!("{what} has no CSV form; use --format json");
    }
    Ok(())
}

#[derive(Serialize)]
struct ClassifyOutput {
    #[serde(flatten)]
    report: ClassificationReport,
    class: String,
    contraction: ContractionReport<Rational>,
    spectrum: Vec<Eigenvalue>,
    axioms: AxiomReport,
    theorem: TheoremCheck,
}

fn run_classify(g: &Global, p: &Polymorphism<Rational>, budget: usize, tol: Tolerance) -> Result<Outcome> {
    json_only(g, "classify")?;
    let w = operator_of(p)?;
    let contraction = classify_contraction(&w, tol);
    let out = ClassifyOutput {
        report: classify(p, budget, tol)?,
        class: contraction.class.to_string(),
        spectrum: w.spectrum(),
        axioms: verify_axioms(&w, tol),
        theorem: finite_chain_theorem_check(p, budget, tol)?,
        contraction,
    };
    emit(g, &to_json(&out)?)?;
    Ok(if out.theorem.consistent {
        Outcome::Passed
    } else {
        Outcome::Failed(format!(
            "mixing = {} but prime = {}",
            out.theorem.mixing, out.theorem.prime
        ))
    })
}

#[derive(Serialize)]
struct DiscretizeOutput {
    map: String,
    resolution: u32,
    exact: bool,
    polymorphism: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    row_branch_weights: Option<Vec<Vec<ScalarRepr>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    col_branch_weights: Option<Vec<Vec<ScalarRepr>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    route_discrepancy: Option<ScalarRepr>,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<TorusDiscretization>,
}

fn reprs(rows: &[Vec<Rational>]) -> Vec<Vec<ScalarRepr>> {
    rows.iter().map(|r| r.iter().map(Scalar::to_repr).collect()).collect()
}

fn run_discretize(g: &Global, map: &str, k: u32, samples: usize, seed: u64) -> Result<Outcome> {
    let spec: MapSpec = map.parse()?;
    let mut out = DiscretizeOutput {
        map: spec.to_string(),
        resolution: k,
        exact: true,
        polymorphism: serde_json::Value::Null,
        row_branch_weights: None,
        col_branch_weights: None,
        route_discrepancy: None,
        estimate: None,
    };
    let mut outcome = Outcome::Passed;
    let csv = match &spec {
        MapSpec::Torus(m) => {
            let d = discretize_torus_auto(*m, k, samples, seed)?;
            out.exact = false;
            out.polymorphism = serde_json::to_value(&d.polymorphism)?;
            let csv = d.polymorphism.nu_csv();
            out.estimate = Some(d);
            csv
        }
        MapSpec::Correspondence(c) => {
            let d = discretize_correspondence(c, k)?;
            out.polymorphism = serde_json::to_value(&d.polymorphism)?;
            out.row_branch_weights = Some(reprs(&d.row_branch_weights));
            out.col_branch_weights = Some(reprs(&d.col_branch_weights));
            out.route_discrepancy = Some(d.route_discrepancy.to_repr());
            if !d.route_discrepancy.is_zero() {
                outcome = Outcome::Failed(format!("route discrepancy {}", d.route_discrepancy.render()));
            }
            d.polymorphism.nu_csv()
        }
        MapSpec::Interval(_) => {
            let p = discretize(&spec, k)?;
            out.polymorphism = serde_json::to_value(&p)?;
            p.nu_csv()
        }
    };
    let text = match g.format {
        Format::Json => to_json(&out)?,
        Format::Csv => csv,
    };
    emit(g, &text)?;
    Ok(outcome)
}

#[derive(Serialize)]
struct RefineLevel {
    k: u32,
    residual: ScalarRepr,
}

#[derive(Serialize)]
struct RefineOutput {
    map: String,
    levels: Vec<RefineLevel>,
    consistent: bool,
}

fn run_refine(g: &Global, map: &str, k: u32) -> Result<Outcome> {
    json_only(g, "refine-check")?;
    let spec: MapSpec = map.parse()?;
    ensure!(k >= 2, "refinement check needs k >= 2");
    let mut levels = Vec::new();
    let mut consistent = true;
    for level in 2..=k {
        let r = refinement_consistency(&spec, level)?;
        consistent &= r.is_zero();
        levels.push(RefineLevel {
            k: level,
            residual: r.to_repr(),
        });
    }
    let out = RefineOutput {
        map: spec.to_string(),
        levels,
        consistent,
    };
    emit(g, &to_json(&out)?)?;
    Ok(if consistent {
        Outcome::Passed
    } else {
        Outcome::Failed(format!("{map}: refinement residual is nonzero"))
    })
}

#[derive(Serialize)]
struct LambdaSummary {
    agreement_sites: Vec<i32>,
    route_residual: ScalarRepr,
}

#[derive(Serialize)]
struct LadderStep {
    n: usize,
    lambda: LambdaSummary,
    intertwining: IntertwiningReport<Rational>,
    holds: bool,
    density: DensityReport<Rational>,
    quasi_determinism: QuasiDeterminismReport<Rational>,
}

#[derive(Serialize)]
struct IntertwineOutput {
    system: SymbolicSystem<Rational>,
    window: Window,
    ladder: Vec<LadderStep>,
}

fn run_intertwine(g: &Global, sys: &SymbolicSystem<Rational>, n_max: usize, window: Option<&str>) -> Result<Outcome> {
    json_only(g, "intertwine")?;
    ensure!(n_max >= 1, "--N must be at least 1");
    let (lo, hi) = match window {
        Some(w) => parse_window(w)?,
        None => (-1, n_max as i32 + 2),
    };
    let window = Window::new(lo, hi)?;
    let mut ladder = Vec::new();
    let mut failures = Vec::new();
    for n in 1..=n_max {
        let t = lambda_truncation(sys, n, window)?;
        let r = verify_intertwining(sys, n, window)?;
        let qd_window = Window::new(-(n as i32) - 1, 1)?;
        let qd = quasi_determinism_diagnostic(sys, n, qd_window)?;
        if !r.holds() {
            failures.push(format!("intertwining at N = {n}"));
        }
        if !t.route_residual.is_zero() {
            failures.push(format!("truncation routes disagree at N = {n}"));
        }
        if !qd.reconstruction_holds {
            failures.push(format!("past reconstruction at horizon {n}"));
        }
        ladder.push(LadderStep {
            n,
            lambda: LambdaSummary {
                agreement_sites: t.agreement_sites.clone(),
                route_residual: t.route_residual.to_repr(),
            },
            holds: r.holds(),
            intertwining: r,
            density: lambda_density_check(sys, n),
            quasi_determinism: qd,
        });
    }
    let out = IntertwineOutput {
        system: sys.clone(),
        window,
        ladder,
    };
    emit(g, &to_json(&out)?)?;
    Ok(if failures.is_empty() {
        Outcome::Passed
    } else {
        Outcome::Failed(failures.join("; "))
    })
}

pub struct SimConfig<'a> {
    pub paths: usize,
    pub length: usize,
    pub seed: u64,
    pub lags: &'a [usize],
    pub f: Option<&'a str>,
    pub g: Option<&'a str>,
    pub target: &'a [usize],
}

#[derive(Serialize)]
struct SimulateOutput {
    paths: usize,
    length: usize,
    seed: u64,
    f: Vec<f64>,
    g: Vec<f64>,
    marginal_deviation: f64,
    dilation: Vec<DilationReport>,
    tail: Vec<TailProbeReport>,
}

fn observable(text: Option<&str>, m: usize, what: &str) -> Result<Vec<f64>> {
    match text {
        Some(t) => {
            let v: Vec<f64> = parse_scalars(t, what)?;
            ensure!(v.len() == m, "{what} has {} values for {m} atoms", v.len());
            Ok(v)
        }
        None => Ok((0..m).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect()),
    }
}

fn run_simulate(g: &Global, p: &Polymorphism<Rational>, cfg: &SimConfig<'_>) -> Result<Outcome> {
    let m = p.size();
    let f = observable(cfg.f, m, "--f")?;
    let gv = observable(cfg.g, m, "--g")?;
    let ens = sample(p, cfg.length, cfg.paths, cfg.seed)?;
    if g.format == Format::Csv {
        emit(g, &ens.to_csv())?;
        return Ok(Outcome::Passed);
    }
    let mut failures = Vec::new();
    let mut dilation = Vec::new();
    let mut tail = Vec::new();
    for &n in cfg.lags {
        let d = dilation_check(&ens, &f, &gv, n)?;
        if !d.passed {
            failures.push(format!("dilation at lag {n}"));
        }
        dilation.push(d);
        let t = empirical_tail_probe(&ens, n, cfg.target)?;
        if !t.passed {
            failures.push(format!("tail probe at lag {n}"));
        }
        tail.push(t);
    }
    let out = SimulateOutput {
        paths: cfg.paths,
        length: cfg.length,
        seed: cfg.seed,
        f,
        g: gv,
        marginal_deviation: ens.marginal_deviation(),
        dilation,
        tail,
    };
    emit(g, &to_json(&out)?)?;
    Ok(if failures.is_empty() {
        Outcome::Passed
    } else {
        Outcome::Failed(failures.join("; "))
    })
}
