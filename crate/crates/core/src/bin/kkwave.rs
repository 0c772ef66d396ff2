use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kkwave::config::RunConfig;
use kkwave::continuation::curve::{polyline_distance, BifurcationCurve, CurvePoint};
use kkwave::continuation::cycles::{self, CycleFamily, CycleStability, LimitCycle};
use kkwave::continuation::hopf::{self, HopfCurve};
use kkwave::equilibria::{self, FoldBranch, FoldCurveTrace};
use kkwave::export::{self, Header, OutputDir};
use kkwave::model::Param;
use kkwave::normalforms;
use kkwave::pde;

/// Bifurcation toolkit for traveling waves of the Kerner-Konhauser traffic model.
#[derive(Parser)]
#[command(name = "kkwave", version)]
struct Cli {
    /// Flat JSON config with dotted keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set pde.n=2048`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output root (defaults to $KKWAVE_OUTPUT_ROOT, then `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Select {
    MostStable,
    Last,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classified equilibria at (q_g, v_g).
    Equilibria {
        #[arg(long, allow_hyphen_values = true)]
        q_g: f64,
        #[arg(long, allow_hyphen_values = true)]
        v_g: f64,
        #[arg(long)]
        theta0: Option<f64>,
    },
    /// Both branches of the fold curve.
    Fold,
    /// The cusp point and its degenerate BT coefficients.
    Cusp,
    /// First Lyapunov coefficient by both routes at the interior equilibrium.
    Lyapunov {
        #[arg(long, allow_hyphen_values = true)]
        q_g: f64,
        #[arg(long, allow_hyphen_values = true)]
        v_g: f64,
        #[arg(long)]
        theta0: Option<f64>,
    },
    /// The curve ell1 = 0 between the fold branches.
    GhCurve,
    /// Continue a Hopf curve from the gamma- BT point at `q_g`, or through the
    /// Hopf point at (`q_g`, `theta0`).
    HopfContinue {
        #[arg(long)]
        q_g: f64,
        /// Start on the Hopf curve of this theta0 instead of at a BT point.
        #[arg(long)]
        theta0: Option<f64>,
    },
    /// Fixed-period cycle family seeded at the Hopf point (`q_g`, `theta0`),
    /// or homoclinic proxies from a BT point of that Hopf curve.
    Cycles {
        #[arg(long)]
        q_g: f64,
        #[arg(long)]
        theta0: Option<f64>,
        /// Period to hold fixed (z-units); defaults to the Hopf period.
        #[arg(long)]
        period: Option<f64>,
        /// Trace the families at `cycles.homoclinic_periods` from the gamma- BT point instead.
        #[arg(long)]
        homoclinic: bool,
        /// Member written to `selected.json`.
        #[arg(long, value_enum, default_value = "most-stable")]
        select: Select,
    },
    /// Run the PDE from a cycle JSON and assess traveling-wave persistence.
    Pde {
        #[arg(long)]
        cycle: PathBuf,
        #[arg(long)]
        m: Option<u32>,
        /// Simulated time (min).
        #[arg(long)]
        t_end_min: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Fold curves, cusp, GH curve and a fan of Hopf curves, with a manifest.
    Diagram,
}

/// Errors that map to exit code 2.
#[derive(Debug)]
struct DomainFailure(String);

impl std::fmt::Display for DomainFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DomainFailure {}

fn domain<T>(r: kkwave::Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        kkwave::Error::Io(io) => anyhow::Error::new(io),
        other => anyhow::Error::new(DomainFailure(other.to_string())),
    })
}

struct Ctx {
    cfg: RunConfig,
    header: Header,
    root: PathBuf,
}

impl Ctx {
    fn load(cli: &Cli) -> Result<Self> {
        let base = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                domain(RunConfig::from_json(&text))?
            }
            None => RunConfig::default(),
        };
        let cfg = domain(base.with_overrides(&cli.overrides))?;
        let root = cli
            .out
            .clone()
            .or_else(|| std::env::var_os("KKWAVE_OUTPUT_ROOT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
        let header = Header::new(cfg.hash(), cfg.theta_policy().label());
        Ok(Self { cfg, header, root })
    }

    fn dir(&self, name: &str) -> Result<OutputDir> {
        domain(OutputDir::create(self.root.join(name)))
    }

    fn theta0(&self, given: Option<f64>) -> f64 {
        given.unwrap_or(self.cfg.theta.value)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kkwave: {e:#}");
            if e.downcast_ref::<DomainFailure>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx::load(&cli)?;
    match cli.cmd {
        Cmd::Equilibria { q_g, v_g, theta0 } => cmd_equilibria(&ctx, q_g, v_g, theta0),
        Cmd::Fold => cmd_fold(&ctx),
        Cmd::Cusp => cmd_cusp(&ctx),
        Cmd::Lyapunov { q_g, v_g, theta0 } => cmd_lyapunov(&ctx, q_g, v_g, theta0),
        Cmd::GhCurve => cmd_gh_curve(&ctx),
        Cmd::HopfContinue { q_g, theta0 } => cmd_hopf_continue(&ctx, q_g, theta0),
        Cmd::Cycles {
            q_g,
            theta0,
            period,
            homoclinic,
            select,
        } => cmd_cycles(&ctx, q_g, theta0, period, homoclinic, select),
        Cmd::Pde { cycle, m, t_end_min, n } => cmd_pde(&ctx, &cycle, m, t_end_min, n),
        Cmd::Diagram => cmd_diagram(&ctx),
    }
}

fn report(path: &Path) {
    println!("{}", path.display());
}

fn cmd_equilibria(ctx: &Ctx, q_g: f64, v_g: f64, theta0: Option<f64>) -> Result<()> {
    let p = domain(ctx.cfg.params(q_g, v_g, theta0))?;
    let eqs = domain(equilibria::find_equilibria(&p, equilibria::default_interval(&p)))?;
    let csv = export::equilibria_csv(&ctx.header, &eqs);
    let mut out = ctx.dir("equilibria")?;
    out.write("equilibria.csv", "equilibria", &csv, None, Some(eqs.len()))?;
    domain(out.finish(&ctx.header))?;
    print!("{csv}");
    Ok(())
}

fn cmd_fold(ctx: &Ctx) -> Result<()> {
    let r = &ctx.cfg.fold;
    let fold = domain(equilibria::fold_curve(ctx.cfg.theta_policy(), (r.q_min, r.q_max), r.points))?;
    let mut out = ctx.dir("fold")?;
    let res = fold.points.iter().map(|p| p.residual).fold(0.0, f64::max);
    let path = out.write("fold.csv", "fold_curve", &export::fold_csv(&ctx.header, &fold), Some(res), Some(fold.points.len()))?;
    for (q, b, e) in &fold.failures {
        out.fail(format!("fold {} at q_g = {q}: {e}", b.label()));
    }
    domain(out.finish(&ctx.header))?;
    report(&path);
    Ok(())
}

#[derive(Serialize)]
struct CuspReport {
    cusp: equilibria::CuspPoint,
    dbt: normalforms::DbtData,
}

fn cmd_cusp(ctx: &Ctx) -> Result<()> {
    let cusp = domain(equilibria::cusp_point())?;
    let dbt = domain(normalforms::dbt_coefficients(&cusp))?;
    let json = domain(export::to_json(&ctx.header, &CuspReport { cusp, dbt }))?;
    let mut out = ctx.dir("cusp")?;
    out.write("cusp.json", "cusp", &json, Some(cusp.residual), Some(1))?;
    domain(out.finish(&ctx.header))?;
    print!("{json}");
    Ok(())
}

#[derive(Serialize)]
struct LyapunovReport {
    q_g: f64,
    v_g: f64,
    theta0: f64,
    v_c: f64,
    /// Trace of the linearization (zero on the Hopf curve).
    b: f64,
    ve1: f64,
    omega0: f64,
    ell1_closed_form: f64,
    ell1_g_coefficients: f64,
    relative_difference: f64,
}

fn cmd_lyapunov(ctx: &Ctx, q_g: f64, v_g: f64, theta0: Option<f64>) -> Result<()> {
    let p = domain(ctx.cfg.params(q_g, v_g, Some(ctx.theta0(theta0))))?;
    let e = domain(equilibria::interior_equilibrium(&p))?
        .ok_or_else(|| DomainFailure(format!("no interior equilibrium with v_e' > 1 at ({q_g}, {v_g})")))?;
    let a = domain(normalforms::lyapunov_l1(&p, e.v_c))?;
    let g = domain(normalforms::lyapunov_l1_via_g(&p, e.v_c))?;
    let rep = LyapunovReport {
        q_g,
        v_g,
        theta0: p.theta0,
        v_c: e.v_c,
        b: e.b,
        ve1: e.ve1,
        omega0: g.omega0,
        ell1_closed_form: a,
        ell1_g_coefficients: g.ell1,
        relative_difference: ((a - g.ell1) / a).abs(),
    };
    let json = domain(export::to_json(&ctx.header, &rep))?;
    let mut out = ctx.dir("lyapunov")?;
    out.write("lyapunov.json", "lyapunov", &json, Some(e.residual.abs()), Some(1))?;
    domain(out.finish(&ctx.header))?;
    print!("{json}");
    Ok(())
}

fn gh_residual(c: &BifurcationCurve) -> f64 {
    c.points
        .iter()
        .filter_map(|p| p.aux.get("ell1_residual"))
        .fold(0.0, |a, r| a.max(r.abs()))
}

fn cmd_gh_curve(ctx: &Ctx) -> Result<()> {
    let r = &ctx.cfg.gh;
    let gh = domain(normalforms::gh_curve((r.q_min, r.q_max), r.points))?;
    let mut out = ctx.dir("gh-curve")?;
    let path = out.write(
        "gh_curve.csv",
        "gh_curve",
        &export::curve_csv(&ctx.header, &gh),
        Some(gh_residual(&gh)),
        Some(gh.points.len()),
    )?;
    for f in &gh.failures {
        out.fail(f.clone());
    }
    domain(out.finish(&ctx.header))?;
    report(&path);
    Ok(())
}

fn hopf_residual(h: &HopfCurve) -> f64 {
    h.points.iter().map(|p| p.residual).fold(0.0, f64::max)
}

/// Hopf curve started at the `gamma-` BT point at `q_g`.
fn hopf_from_bt(ctx: &Ctx, trace: &FoldCurveTrace, q_g: f64) -> kkwave::Result<HopfCurve> {
    let (v_g, v_c, _) = trace.at(q_g, FoldBranch::LowerGammaMinus)?;
    hopf::continue_hopf((q_g, v_g, v_c), ctx.cfg.hopf.step, ctx.cfg.hopf.max_steps)
}

fn cmd_hopf_continue(ctx: &Ctx, q_g: f64, theta0: Option<f64>) -> Result<()> {
    let h = match theta0 {
        Some(t) => {
            let s = domain(hopf::hopf_point_at(t, q_g))?;
            domain(hopf::continue_hopf((s.q_g, s.v_g, s.v_c), ctx.cfg.hopf.step, ctx.cfg.hopf.max_steps))?
        }
        None => {
            let trace = domain(FoldCurveTrace::new(q_g.min(ctx.cfg.fold.q_min)))?;
            domain(hopf_from_bt(ctx, &trace, q_g))?
        }
    };
    let mut out = ctx.dir("hopf-continue")?;
    let path = out.write(
        "hopf_curve.csv",
        "hopf_curve",
        &export::curve_csv(&ctx.header, &h.curve),
        Some(hopf_residual(&h)),
        Some(h.curve.points.len()),
    )?;
    for f in &h.curve.failures {
        out.fail(f.clone());
    }
    domain(out.finish(&ctx.header))?;
    report(&path);
    Ok(())
}

#[derive(Serialize)]
struct MemberSummary {
    index: usize,
    q_g: f64,
    v_g: f64,
    period: f64,
    amplitude: f64,
    floquet_multiplier: f64,
    stability: CycleStability,
    closure: f64,
    axis_crossings: usize,
    road_length_m1_km: f64,
    road_length_m2_km: f64,
}

#[derive(Serialize)]
struct FamilySummary<'a> {
    period: f64,
    /// Road length convention: `L = m T / rho_max`.
    road_convention: &'static str,
    meta: &'a BTreeMap<String, String>,
    failures: &'a [String],
    members: Vec<MemberSummary>,
    selected: Option<usize>,
}

fn select_member(fam: &CycleFamily, select: Select) -> Option<usize> {
    match select {
        Select::Last => fam.cycles.len().checked_sub(1),
        Select::MostStable => (0..fam.cycles.len())
            .filter(|&i| fam.cycles[i].stability == CycleStability::Stable)
            .min_by(|&a, &b| fam.cycles[a].floquet_multiplier.total_cmp(&fam.cycles[b].floquet_multiplier)),
    }
}

fn write_family(ctx: &Ctx, out: &mut OutputDir, prefix: &str, fam: &CycleFamily, select: Select) -> Result<()> {
    let rho_max = ctx.cfg.constants.rho_max;
    let closure = fam.cycles.iter().map(|c| c.closure).fold(0.0, f64::max);
    out.write(
        &format!("{prefix}family.csv"),
        "cycle_family",
        &export::curve_csv(&ctx.header, &fam.curve),
        Some(closure),
        Some(fam.cycles.len()),
    )?;
    let mut members = Vec::with_capacity(fam.cycles.len());
    for (i, c) in fam.cycles.iter().enumerate() {
        out.write(
            &format!("{prefix}cycle_{i:03}.json"),
            "cycle",
            &domain(export::cycle_json(&ctx.header, c))?,
            Some(c.closure),
            Some(c.mesh.len()),
        )?;
        members.push(MemberSummary {
            index: i,
            q_g: c.params.q_g,
            v_g: c.params.v_g,
            period: c.period,
            amplitude: c.amplitude(),
            floquet_multiplier: c.floquet_multiplier,
            stability: c.stability,
            closure: c.closure,
            axis_crossings: c.axis_crossings(),
            road_length_m1_km: domain(cycles::resonant_road_length(c, 1, rho_max))?,
            road_length_m2_km: domain(cycles::resonant_road_length(c, 2, rho_max))?,
        });
    }
    let selected = select_member(fam, select);
    if let Some(i) = selected {
        out.write(
            &format!("{prefix}selected.json"),
            "cycle",
            &domain(export::cycle_json(&ctx.header, &fam.cycles[i]))?,
            Some(fam.cycles[i].closure),
            Some(fam.cycles[i].mesh.len()),
        )?;
    }
    let summary = FamilySummary {
        period: fam.period,
        road_convention: "L = m T / rho_max (km), one bump per period T",
        meta: &fam.curve.meta,
        failures: &fam.curve.failures,
        members,
        selected,
    };
    out.write(
        &format!("{prefix}summary.json"),
        "family_summary",
        &domain(export::to_json(&ctx.header, &summary))?,
        None,
        None,
    )?;
    for f in &fam.curve.failures {
        out.fail(format!("{prefix}{f}"));
    }
    Ok(())
}

fn cmd_cycles(ctx: &Ctx, q_g: f64, theta0: Option<f64>, period: Option<f64>, homoclinic: bool, select: Select) -> Result<()> {
    let h = domain(hopf::hopf_point_at(ctx.theta0(theta0), q_g))?;
    let p = domain(h.params())?;
    let opts = &ctx.cfg.shooting;
    let mut out = ctx.dir("cycles")?;
    if homoclinic {
        let hc = domain(hopf::continue_hopf((h.q_g, h.v_g, h.v_c), ctx.cfg.hopf.step, ctx.cfg.hopf.max_steps))?;
        let bt = [hc.bt_start, hc.bt_end]
            .into_iter()
            .flatten()
            .find(|b| b.branch == FoldBranch::LowerGammaMinus)
            .ok_or_else(|| DomainFailure("the Hopf curve has no gamma- BT endpoint".into()))?;
        let periods = ctx.cfg.cycles.homoclinic_periods.clone();
        let max_steps = ctx.cfg.cycles.max_steps;
        let fams: Vec<kkwave::Result<CycleFamily>> = std::thread::scope(|s| {
            let handles: Vec<_> = periods
                .iter()
                .map(|&t| s.spawn(move || cycles::homoclinic_approx(&bt, t, max_steps, opts)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        for (t, fam) in periods.iter().zip(fams) {
            match fam {
                Ok(f) => write_family(ctx, &mut out, &format!("T{t}/"), &f, select)?,
                Err(e) => out.fail(format!("homoclinic proxy at T = {t}: {e}")),
            }
        }
    } else {
        let seed = domain(cycles::cycle_from_hopf(&p, h.v_c, Param::VG, opts))?;
        let target = period.unwrap_or(2.0 * std::f64::consts::PI / h.omega0);
        let fam = domain(cycles::continue_cycle_fixed_period(&seed, target, ctx.cfg.cycles.max_steps, opts))?;
        write_family(ctx, &mut out, "", &fam, select)?;
    }
    let path = domain(out.finish(&ctx.header))?;
    report(&path);
    Ok(())
}

fn cmd_pde(ctx: &Ctx, cycle: &Path, m: Option<u32>, t_end_min: Option<f64>, n: Option<usize>) -> Result<()> {
    let text = fs::read_to_string(cycle).with_context(|| format!("reading {}", cycle.display()))?;
    let c: LimitCycle = domain(export::read_cycle(&text))?;
    let mut consts = ctx.cfg.constants;
    if (c.params.lambda - consts.lambda()).abs() > 1e-12 * consts.lambda() || (c.params.mu - consts.mu()).abs() > 1e-12 * consts.mu() {
        return Err(DomainFailure("cycle lambda/mu do not match the configured constants".into()).into());
    }
    // the PDE pressure coefficient follows the cycle's theta0
    consts.theta_0 = c.params.theta0 * consts.v_max * consts.v_max;
    let pc = &ctx.cfg.pde;
    let m = m.unwrap_or(pc.m);
    let n = n.unwrap_or(pc.n);
    let t_end = t_end_min.map_or(pc.t_end, |t| t / 60.0);
    let s0 = domain(pde::cycle_to_initial_condition(&c, &consts, m, n))?;
    let (_, rep, snaps) = domain(pde::run_and_report(&s0, &consts, t_end, c.params.v_g, &pc.options, &pc.verdict))?;
    let mut out = ctx.dir("pde")?;
    for (i, s) in snaps.iter().enumerate() {
        out.write(
            &format!("snapshots/snap_{i:04}.csv"),
            "snapshot",
            &export::snapshot_csv(&ctx.header, s0.length, s),
            None,
            Some(n),
        )?;
    }
    let path = out.write("report.json", "wave_report", &domain(export::report_json(&ctx.header, &rep))?, None, None)?;
    domain(out.finish(&ctx.header))?;
    report(&path);
    Ok(())
}

fn cmd_diagram(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.cfg;
    let mut out = ctx.dir("diagram")?;
    let q_floor = cfg.fold.q_min.min(cfg.gh.q_min).min(cfg.diagram.fan_q_min);
    let trace = domain(FoldCurveTrace::new(q_floor))?;

    let cusp = trace.cusp;
    match normalforms::dbt_coefficients(&cusp) {
        Ok(dbt) => {
            out.write(
                "cusp.json",
                "cusp",
                &domain(export::to_json(&ctx.header, &CuspReport { cusp, dbt }))?,
                Some(cusp.residual),
                Some(1),
            )?;
        }
        Err(e) => out.fail(format!("cusp: {e}")),
    }

    match equilibria::fold_curve(cfg.theta_policy(), (cfg.fold.q_min, cfg.fold.q_max), cfg.fold.points) {
        Ok(fold) => {
            let res = fold.points.iter().map(|p| p.residual).fold(0.0, f64::max);
            out.write("fold.csv", "fold_curve", &export::fold_csv(&ctx.header, &fold), Some(res), Some(fold.points.len()))?;
            for (q, b, e) in &fold.failures {
                out.fail(format!("fold {} at q_g = {q}: {e}", b.label()));
            }
        }
        Err(e) => out.fail(format!("fold: {e}")),
    }

    let gh = match normalforms::gh_curve_on(&trace, (cfg.gh.q_min, cfg.gh.q_max), cfg.gh.points) {
        Ok(gh) => {
            out.write(
                "gh_curve.csv",
                "gh_curve",
                &export::curve_csv(&ctx.header, &gh),
                Some(gh_residual(&gh)),
                Some(gh.points.len()),
            )?;
            for f in &gh.failures {
                out.fail(format!("gh curve: {f}"));
            }
            Some(gh)
        }
        Err(e) => {
            out.fail(format!("gh curve: {e}"));
            None
        }
    };

    let d = &cfg.diagram;
    let qs: Vec<f64> = (0..d.fan)
        .map(|i| {
            if d.fan == 1 {
                d.fan_q_min
            } else {
                d.fan_q_min + (d.fan_q_max - d.fan_q_min) * i as f64 / (d.fan - 1) as f64
            }
        })
        .collect();
    let fans: Vec<kkwave::Result<HopfCurve>> = std::thread::scope(|s| {
        let trace = &trace;
        let handles: Vec<_> = qs.iter().map(|&q| s.spawn(move || hopf_from_bt(ctx, trace, q))).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut gh_offset = 0.0f64;
    for (i, (q, h)) in qs.iter().zip(fans).enumerate() {
        match h {
            Ok(h) => {
                out.write(
                    &format!("hopf_{i:02}.csv"),
                    "hopf_curve",
                    &export::curve_csv(&ctx.header, &h.curve),
                    Some(hopf_residual(&h)),
                    Some(h.curve.points.len()),
                )?;
                if let Some(gh) = &gh {
                    for m in &h.gh {
                        gh_offset = gh_offset.max(polyline_distance(&CurvePoint::new(m.q_g, m.v_g), &gh.points));
                    }
                }
                for f in &h.curve.failures {
                    out.fail(format!("hopf curve from q_g = {q}: {f}"));
                }
            }
            Err(e) => out.fail(format!("hopf curve from q_g = {q}: {e}")),
        }
    }
    if gh.is_some() {
        out.write(
            "checks.json",
            "cross_checks",
            &domain(export::to_json(&ctx.header, &BTreeMap::from([("gh_marker_to_gh_curve", gh_offset)])))?,
            Some(gh_offset),
            None,
        )?;
    }
    let path = domain(out.finish(&ctx.header))?;
    report(&path);
    Ok(())
}
