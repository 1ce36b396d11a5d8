//! The four subcommands. Each returns whether every check passed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use projdyn::dynamics::{
    energy, integrate_constrained, integrate_free_tracked, AppellTracker, Channel, ConstrainedSystem,
    IntegratorOptions, PhaseState, Trajectory,
};
use projdyn::problems::{
    braden_energy, braden_system, jacobi_run, neumann_energy, neumann_system, orbit_exchange_report,
};
use projdyn::projective::{compare_trajectories, lambda_from_h, project_trajectory, Deviation};
use projdyn::screens::Screen;
use projdyn::suite::{
    run_criterion, Check, Criterion, B_SPHERE_TOL, CHAIN_TOL, ETA_DRIFT_TOL, MULTIPLIER_GAP_TOL,
    MULTIPLIER_SPREAD_TOL, STEP1_RESIDUAL_TOL,
};

use crate::config::{ProblemKind, RunConfig};
use crate::error::{domain, CliError};
use crate::output::{read_trajectory, write_json, write_trajectory};

/// Where a command writes its files.
#[derive(Clone, Debug)]
pub struct OutputPaths {
    pub dir: PathBuf,
    pub name: String,
}

impl OutputPaths {
    pub fn new(cfg: &RunConfig, out: Option<&Path>, default_name: &str) -> OutputPaths {
        let dir = out
            .map(Path::to_path_buf)
            .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        let name = cfg.output.name.clone().unwrap_or_else(|| default_name.to_string());
        OutputPaths { dir, name }
    }

    pub fn file(&self, suffix: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}.{ext}", self.name))
    }
}

#[derive(Serialize)]
struct StateOut {
    t: f64,
    q: Vec<f64>,
    p: Vec<f64>,
}

impl From<&PhaseState> for StateOut {
    fn from(s: &PhaseState) -> StateOut {
        StateOut {
            t: s.t,
            q: s.q.as_slice().to_vec(),
            p: s.p.as_slice().to_vec(),
        }
    }
}

#[derive(Serialize)]
struct IntegratorOut {
    method: String,
    rtol: f64,
    atol: f64,
    dt: f64,
    stabilize: bool,
}

impl From<&IntegratorOptions> for IntegratorOut {
    fn from(o: &IntegratorOptions) -> IntegratorOut {
        IntegratorOut {
            method: format!("{:?}", o.method),
            rtol: o.rtol,
            atol: o.atol,
            dt: o.dt,
            stabilize: o.stabilize,
        }
    }
}

#[derive(Serialize)]
struct DeviationOut {
    position: f64,
    velocity: f64,
    samples: usize,
    window: (f64, f64),
}

impl From<&Deviation> for DeviationOut {
    fn from(d: &Deviation) -> DeviationOut {
        DeviationOut {
            position: d.position,
            velocity: d.velocity,
            samples: d.samples,
            window: d.window,
        }
    }
}

#[derive(Serialize)]
struct CheckOut {
    name: String,
    value: f64,
    tolerance: f64,
    bound: &'static str,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl From<&Check> for CheckOut {
    fn from(c: &Check) -> CheckOut {
        CheckOut {
            name: c.name.clone(),
            value: c.value,
            tolerance: c.tolerance,
            bound: if c.lower_bound { "at_least" } else { "at_most" },
            passed: c.passed,
            error: c.error.clone(),
        }
    }
}

#[derive(Serialize)]
struct RunSummary {
    command: &'static str,
    problem: String,
    description: String,
    dim: usize,
    seed: u64,
    t_end: f64,
    initial_state: StateOut,
    final_state: StateOut,
    samples: usize,
    accepted_steps: usize,
    rejected_steps: usize,
    /// `energy`: max |E − E₀|; `eta`: max |η − η₀| / |η₀|; `screen`: max |h − 1|.
    drifts: BTreeMap<&'static str, f64>,
    integrator: IntegratorOut,
    csv: String,
}

fn drifts(traj: &Trajectory, on_screen: bool) -> BTreeMap<&'static str, f64> {
    let mut d = BTreeMap::new();
    if let Some(x) = traj.channel_drift(Channel::Energy) {
        d.insert("energy", x);
    }
    if let (Some(x), Some(eta)) = (traj.channel_drift(Channel::Eta), traj.channel(Channel::Eta)) {
        d.insert("eta", x / eta[0].abs());
    }
    if on_screen {
        if let Some(h) = traj.channel(Channel::H) {
            d.insert("screen", h.iter().map(|h| (h - 1.0).abs()).fold(0.0, f64::max));
        }
    }
    d
}

fn constrained_run(
    system: &ConstrainedSystem,
    state: &PhaseState,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory, CliError> {
    integrate_constrained(system, state, t_end, opts).map_err(domain)
}

fn with_energy<F>(mut traj: Trajectory, e: F) -> Result<Trajectory, CliError>
where
    F: Fn(&PhaseState) -> projdyn::Result<f64>,
{
    traj.record_channel(Channel::Energy, e).map_err(domain)?;
    Ok(traj)
}

/// Integrate the configured problem and write its CSV and summary.
pub fn simulate(cfg: &RunConfig, paths: &OutputPaths) -> Result<bool, CliError> {
    let problem = cfg.problem()?;
    let t_end = cfg.t_end()?;
    let opts = cfg.integrator()?;
    let (traj, on_screen) = match problem {
        ProblemKind::Free => {
            let (field, potential) = cfg.field()?;
            let tracker = match cfg.screen {
                Some(_) => Some(AppellTracker {
                    screen: cfg.screen()?,
                    tau_end: None,
                }),
                None => None,
            };
            let state = cfg.free_state()?;
            let mut traj = integrate_free_tracked(&field, &state, t_end, &opts, tracker.as_ref()).map_err(domain)?;
            if let Some((metric, u)) = potential {
                traj = with_energy(traj, |s| energy(&metric, &u, s))?;
            }
            (traj, false)
        }
        ProblemKind::Constrained | ProblemKind::Custom => {
            let (field, potential) = cfg.field()?;
            let screen = cfg.screen()?;
            let system = if problem == ProblemKind::Custom {
                if cfg.reaction.is_none() {
                    return Err(CliError::Config("custom problems need a [reaction]".into()));
                }
                ConstrainedSystem::new(field, screen.clone(), cfg.reaction()?)
            } else {
                ConstrainedSystem::central(field, screen.clone())
            }
            .map_err(|e| CliError::Config(e.to_string()))?;
            let state = cfg.state_on(&screen)?;
            let mut traj = constrained_run(&system, &state, t_end, &opts)?;
            if let Some((metric, u)) = potential {
                traj = with_energy(traj, |s| energy(&metric, &u, s))?;
            }
            (traj, true)
        }
        ProblemKind::Neumann => {
            let data = cfg.ellipsoid()?;
            let system = neumann_system(&data).map_err(|e| CliError::Config(e.to_string()))?;
            let state = cfg.state_on(&data.g_screen())?;
            let traj = constrained_run(&system, &state, t_end, &opts)?;
            (with_energy(traj, |s| neumann_energy(&data, s))?, true)
        }
        ProblemKind::Braden => {
            let data = cfg.ellipsoid()?;
            let eta = cfg.eta.unwrap_or(1.0);
            let system = braden_system(&data, eta).map_err(|e| CliError::Config(e.to_string()))?;
            let state = cfg.state_on(&data.b_screen())?;
            let traj = constrained_run(&system, &state, t_end, &opts)?;
            (with_energy(traj, |s| braden_energy(&data, eta, s))?, true)
        }
        ProblemKind::Jacobi => {
            let params = cfg.jacobi_params()?;
            let state = cfg.state_on(&params.data.a_screen())?;
            (jacobi_run(&params, &state, t_end, &opts).map_err(domain)?, true)
        }
    };

    let csv = paths.file("", "csv");
    write_trajectory(&csv, &traj, None)?;
    let summary = RunSummary {
        command: "simulate",
        problem: format!("{problem:?}").to_lowercase(),
        description: traj.meta.description.clone(),
        dim: traj.dim(),
        seed: cfg.seed(),
        t_end,
        initial_state: traj.first().into(),
        final_state: traj.last().into(),
        samples: traj.len(),
        accepted_steps: traj.meta.accepted_steps,
        rejected_steps: traj.meta.rejected_steps,
        drifts: drifts(&traj, on_screen),
        integrator: (&opts).into(),
        csv: csv.display().to_string(),
    };
    write_json(&paths.file("", "json"), &summary)?;
    println!(
        "simulate: {} samples to t = {} -> {}",
        traj.len(),
        traj.last().t,
        csv.display()
    );
    Ok(true)
}

#[derive(Serialize)]
struct ProjectSummary {
    command: &'static str,
    source: String,
    screen: &'static str,
    samples: usize,
    t_range: (f64, f64),
    tau_range: (f64, f64),
    #[serde(skip_serializing_if = "Option::is_none")]
    deviation: Option<DeviationOut>,
    csv: String,
}

/// Centrally project a run read from CSV onto the configured screen.
pub fn project(cfg: &RunConfig, paths: &OutputPaths) -> Result<bool, CliError> {
    let spec = cfg.project.as_ref().ok_or_else(|| CliError::Config("missing [project]".into()))?;
    let source = {
        let p = PathBuf::from(&spec.source);
        if p.is_absolute() {
            p
        } else {
            paths.dir.join(p)
        }
    };
    if !source.exists() {
        return Err(CliError::Config(format!("source run {} does not exist", source.display())));
    }
    let read = read_trajectory(&source)?;
    let (field, _) = cfg.field()?;
    let screen: Screen = cfg.screen()?;
    if field.dim() != read.samples[0].dim() {
        return Err(CliError::Config(format!(
            "source has dimension {}, configured field has {}",
            read.samples[0].dim(),
            field.dim()
        )));
    }
    // the CSV stores no accelerations: rebuild them from the field, plus the
    // reaction term when the source is a constrained run with a multiplier
    let reaction = cfg.reaction()?;
    let lambda = read.channels.iter().find(|(c, _)| *c == Channel::Lambda).map(|(_, v)| v);
    let accel = read
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let f = field.evaluate(&s.q)?;
            Ok(match lambda {
                Some(l) => f.add_scaled(l[i], &reaction.direction(&s.q)),
                None => f,
            })
        })
        .collect::<projdyn::Result<Vec<_>>>()
        .map_err(domain)?;
    let mut free = Trajectory::new(read.samples, accel).map_err(|e| CliError::Config(e.to_string()))?;
    free.meta.description = format!("run read from {}", source.display());
    let mut projected = project_trajectory(&free, &screen).map_err(domain)?;
    let lambda = lambda_from_h(&free, &field, &screen).map_err(domain)?;
    projected.path.set_channel(Channel::Lambda, lambda).map_err(domain)?;

    let deviation = if spec.reference {
        let opts = cfg.integrator()?;
        let system =
            ConstrainedSystem::central(field.clone(), screen.clone()).map_err(|e| CliError::Config(e.to_string()))?;
        let reference = constrained_run(&system, projected.path.first(), projected.path.last().t, &opts)?;
        write_trajectory(&paths.file("_reference", "csv"), &reference, None)?;
        Some(compare_trajectories(&projected, &reference, None).map_err(domain)?)
    } else {
        None
    };

    let csv = paths.file("", "csv");
    write_trajectory(&csv, &projected.path, Some(&projected.origin_t))?;
    let taus = projected.taus();
    let summary = ProjectSummary {
        command: "project",
        source: source.display().to_string(),
        screen: screen.label(),
        samples: taus.len(),
        t_range: (projected.origin_t[0], *projected.origin_t.last().unwrap()),
        tau_range: (taus[0], *taus.last().unwrap()),
        deviation: deviation.as_ref().map(Into::into),
        csv: csv.display().to_string(),
    };
    write_json(&paths.file("", "json"), &summary)?;
    match &deviation {
        Some(d) => println!("project: {} samples, deviation {:e} -> {}", taus.len(), d.position, csv.display()),
        None => println!("project: {} samples -> {}", taus.len(), csv.display()),
    }
    Ok(true)
}

#[derive(Serialize)]
struct CriterionOut {
    number: usize,
    key: &'static str,
    title: &'static str,
    passed: bool,
    checks: Vec<CheckOut>,
}

#[derive(Serialize)]
struct VerificationReport {
    command: &'static str,
    seed: u64,
    dim: usize,
    instances: usize,
    reduction_degree: f64,
    integrator: IntegratorOut,
    passed: bool,
    criteria: Vec<CriterionOut>,
}

fn selected_criteria(cfg: &RunConfig) -> Result<Vec<Criterion>, CliError> {
    match &cfg.verify.criteria {
        None => Ok(Criterion::ALL.to_vec()),
        Some(keys) => keys
            .iter()
            .map(|k| {
                Criterion::from_key(k).ok_or_else(|| {
                    let known: Vec<_> = Criterion::ALL.iter().map(|c| c.key()).collect();
                    CliError::Config(format!("unknown criterion `{k}`; known: {}", known.join(", ")))
                })
            })
            .collect(),
    }
}

/// Run the verification battery, one thread per criterion.
pub fn verify(cfg: &RunConfig, paths: &OutputPaths) -> Result<bool, CliError> {
    let opts = cfg.suite_options()?;
    let criteria = selected_criteria(cfg)?;
    let results: Vec<Vec<Check>> = std::thread::scope(|s| {
        let opts = &opts;
        let handles: Vec<_> = criteria.iter().map(|&c| s.spawn(move || run_criterion(c, opts))).collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread panicked")).collect()
    });

    let mut out = Vec::new();
    for (c, checks) in criteria.iter().zip(&results) {
        let passed = checks.iter().all(|k| k.passed);
        println!("{} criterion {}: {}", if passed { "PASS" } else { "FAIL" }, c.number(), c.title());
        for k in checks {
            println!("    {k}");
        }
        out.push(CriterionOut {
            number: c.number(),
            key: c.key(),
            title: c.title(),
            passed,
            checks: checks.iter().map(Into::into).collect(),
        });
    }
    let passed = out.iter().all(|c| c.passed);
    let report = VerificationReport {
        command: "verify",
        seed: opts.seed,
        dim: opts.dim,
        instances: opts.instances,
        reduction_degree: opts.reduction_degree,
        integrator: (&opts.integrator).into(),
        passed,
        criteria: out,
    };
    write_json(&paths.file("", "json"), &report)?;
    println!(
        "{} of {} criteria passed",
        report.criteria.iter().filter(|c| c.passed).count(),
        report.criteria.len()
    );
    Ok(passed)
}

#[derive(Serialize)]
struct CorrespondReport {
    command: &'static str,
    seed: u64,
    dim: usize,
    nu: f64,
    eta: f64,
    eta_drift: f64,
    jacobi_energy_drift: f64,
    b_residual: f64,
    step1_residual: f64,
    multiplier_gap: f64,
    multiplier_spread: f64,
    trajectory_deviation: DeviationOut,
    chain_deviation: DeviationOut,
    gauss_gap: f64,
    passed: bool,
    checks: Vec<CheckOut>,
}

/// Run the Jacobi to intermediate to Neumann chain and report the gaps.
pub fn correspond(cfg: &RunConfig, paths: &OutputPaths) -> Result<bool, CliError> {
    let params = cfg.jacobi_params()?;
    let t_end = cfg.t_end()?;
    let opts = cfg.integrator()?;
    let state = cfg.state_on(&params.data.a_screen())?;
    let r = orbit_exchange_report(&params, &state, t_end, &opts).map_err(domain)?;

    let checks = vec![
        Check::at_most("relative eta drift", r.eta_drift, ETA_DRIFT_TOL),
        Check::at_most("image on the B-sphere", r.b_residual, B_SPHERE_TOL),
        Check::at_most("image solves the intermediate equation", r.step1_residual, STEP1_RESIDUAL_TOL),
        Check::at_most("intermediate multiplier vs nu", r.multiplier_gap, MULTIPLIER_GAP_TOL),
        Check::at_most("intermediate multiplier spread", r.multiplier_spread, MULTIPLIER_SPREAD_TOL),
        Check::at_most("projected image vs Neumann run", r.chain_deviation.position, CHAIN_TOL),
    ];
    for c in &checks {
        println!("{c}");
    }
    let passed = checks.iter().all(|c| c.passed);

    write_trajectory(&paths.file("_jacobi", "csv"), &r.jacobi, None)?;
    write_trajectory(&paths.file("_intermediate", "csv"), &r.intermediate, None)?;
    write_trajectory(&paths.file("_projected", "csv"), &r.projected.path, Some(&r.projected.origin_t))?;
    write_trajectory(&paths.file("_neumann", "csv"), &r.neumann, None)?;
    let report = CorrespondReport {
        command: "correspond",
        seed: cfg.seed(),
        dim: params.data.dim(),
        nu: r.nu,
        eta: r.eta,
        eta_drift: r.eta_drift,
        jacobi_energy_drift: r.jacobi_energy_drift,
        b_residual: r.b_residual,
        step1_residual: r.step1_residual,
        multiplier_gap: r.multiplier_gap,
        multiplier_spread: r.multiplier_spread,
        trajectory_deviation: (&r.trajectory_deviation).into(),
        chain_deviation: (&r.chain_deviation).into(),
        gauss_gap: r.gauss_gap,
        passed,
        checks: checks.iter().map(Into::into).collect(),
    };
    write_json(&paths.file("", "json"), &report)?;
    Ok(passed)
}
