//! Command pipelines: revolution → connect → (backlund) → nets.

use cknet_core::acceptance;
use cknet_core::backlund::{self, AlphaSlice, BacklundParams, KEdge, PeriodicAlpha, Transform};
use cknet_core::connect::{self, Case, HsLaxData};
use cknet_core::lattice::{flatness_residual, Domain};
use cknet_core::nets::{self, ContactElementNet};
use cknet_core::revolution::{self, EllipticParams, Profile, ProfileOptions};
use cknet_core::Error;
use num_complex::Complex64 as C64;

use crate::config::{AlphaChoice, JobConfig, Mode, ProfileKind};
use crate::report::{Check, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Generate,
    Backlund,
    Double,
    Search,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Backlund => "backlund",
            Command::Double => "double",
            Command::Search => "search",
            Command::Check => "check",
        }
    }
}

/// A numeric failure and the stage it happened in.
#[derive(Debug, Clone, PartialEq)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.stage, self.error)
    }
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError>;
}

impl<T> Stage<T> for cknet_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError> {
        self.map_err(|error| StageError { stage, error })
    }
}

/// Artifacts of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub mesh: Option<ContactElementNet>,
}

pub const GAUSS_TOL: f64 = 1e-9;
pub const TRANSFORM_GAUSS_TOL: f64 = 1e-7;
pub const PAIR_TOL: f64 = 1e-9;
pub const FLATNESS_TOL: f64 = 1e-11;
pub const RECONSTRUCTION_TOL: f64 = 1e-8;
pub const CLOSING_TOL: f64 = 1e-10;
pub const PERIOD_TOL: f64 = 1e-8;
pub const POWER_TOL: f64 = 1e-9;
pub const UNITARY_TOL: f64 = 1e-10;

pub fn build_profile(cfg: &JobConfig) -> cknet_core::Result<Profile> {
    let s = &cfg.surface;
    let p = match s.kind {
        ProfileKind::Elliptic => {
            let params = match s.theta_step {
                Some(th) => EllipticParams::with_theta(th, s.kappa, s.j0)?,
                None => EllipticParams::standard(s.kappa, s.j0, 0.3)?,
            };
            revolution::profile_elliptic(&params, s.k_sign, s.j_range.unwrap_or(params.safe_range(s.k_sign)))?
        }
        ProfileKind::Trig | ProfileKind::Hyp => {
            let (j_min, j_max) = s.j_range.expect("validated");
            let step = s.theta_step.expect("validated");
            let opts = ProfileOptions { j_start: j_min, ..Default::default() };
            let n = (j_max - j_min) as usize;
            if s.kind == ProfileKind::Trig {
                revolution::profile_trig(&vec![(step / 2.0).tan(); n], s.a, s.b, &opts)?
            } else {
                revolution::profile_hyp(&vec![(step / 2.0).tanh(); n], s.a, s.b, &opts)?
            }
        }
    };
    Ok(match s.perturb {
        Some((j, eps)) if p.js().contains(&j) => p.perturb_b(j, eps),
        Some((j, _)) => return Err(Error::InvalidProfile(format!("perturb_j = {j} outside the profile"))),
        None => p,
    })
}

/// Max `|K − target|` over nondegenerate faces; degenerate faces are returned.
pub fn gauss_defect(net: &ContactElementNet, target: f64) -> (f64, Vec<(i32, i32)>) {
    let mut worst = 0.0f64;
    let mut degenerate = vec![];
    for (j, k) in net.domain().faces() {
        match nets::curvatures(net, j, k) {
            Ok((kk, _, _)) => worst = worst.max((kk - target).abs()),
            Err(_) => degenerate.push((j, k)),
        }
    }
    (worst, degenerate)
}

fn period_defect(net: &ContactElementNet, period: i32) -> Option<f64> {
    let d = net.domain();
    if d.k_max - d.k_min < period {
        return None;
    }
    let mut worst = 0.0f64;
    for j in d.j_min..=d.j_max {
        for k in d.k_min..=(d.k_max - period) {
            worst = worst.max(net.x.get(j, k + period).max_diff(*net.x.get(j, k)));
            worst = worst.max(net.n.get(j, k + period).max_diff(*net.n.get(j, k)));
        }
    }
    Some(worst)
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn generate(cfg: &JobConfig) -> Result<Outcome, StageError> {
    let mut rep = Report::new("generate", cfg.table.clone());
    let p = build_profile(cfg).stage("revolution")?;
    let th = cfg.rotation.theta;
    let count = cfg.rotation.k_count;
    let rc = revolution::build_rcnet(&p, th, count).stage("revolution")?;
    let (defect, degenerate) = gauss_defect(&rc, p.k_sign as f64);
    rep.push(Check::new("gaussian_constancy", defect, GAUSS_TOL));
    let mut from_profile = 0.0f64;
    for j in p.j_start..p.j_end() {
        let k = revolution::gauss_from_profile(&p, j).stage("revolution")?;
        from_profile = from_profile.max((k - p.k_sign as f64).abs());
    }
    rep.push(Check::new("gauss_from_profile", from_profile, 1e-12));
    rep.push(Check::new("conservation_drift", p.conservation_drift(), 1e-10));
    rep.degenerate_faces = degenerate;
    if !rep.pass {
        rep.notes.push("connect: skipped, the profile fails its invariants".into());
        return Ok(Outcome { report: rep, mesh: Some(rc) });
    }

    let case = Case::for_profile(&p).stage("connect")?;
    rep.results.insert("case".into(), case.number() as f64);
    let (conn, _) = connect::build_connection(&p, th, case, count, 0.0).stage("connect")?;
    let flat = flatness_residual(&conn);
    rep.push(Check::new("flatness", flat, FLATNESS_TOL));
    let mut mesh = rc;
    match connect::reconstruct(&conn, case) {
        Ok(net) => {
            let target = connect::reference_net(&p, th, count, case).stage("nets")?;
            let al = nets::rigid_align(&net, &target).stage("nets")?;
            rep.push(Check::new("reconstruction", al.residual, RECONSTRUCTION_TOL));
            if let Some(k0) = cfg.rotation.k0 {
                rep.push(Check::new("closing", connect::closing_residual(&conn, k0), CLOSING_TOL));
                match period_defect(&net, k0 as i32) {
                    Some(r) => rep.push(Check::new("rotation_period", r, PERIOD_TOL)),
                    None => rep.notes.push(format!("k_count too small to compare columns k0 = {k0} apart")),
                }
            }
            mesh = net;
        }
        Err(e) => {
            rep.push(Check::failed("reconstruction", RECONSTRUCTION_TOL));
            rep.notes.push(format!("nets: {e}; exporting the rc-net instead"));
        }
    }
    Ok(Outcome { report: rep, mesh: Some(mesh) })
}

struct Base {
    hs: HsLaxData,
    domain: Domain,
    frames: cknet_core::FrameFamily,
    net: ContactElementNet,
}

fn base(cfg: &JobConfig) -> Result<Base, StageError> {
    let p = build_profile(cfg).stage("revolution")?;
    if Case::for_profile(&p).stage("connect")? != Case::Three {
        return Err(StageError { stage: "connect", error: Error::CaseMismatch { case: 3, kappa: p.kappa } });
    }
    let (conn, data) = connect::build_ck_connection(&p, cfg.rotation.theta, 2, 0.0).stage("connect")?;
    let hs = connect::gauge_to_hs(&conn, &data).stage("connect")?.hs;
    let domain = Domain::new(hs.start, hs.j_end(), 0, cfg.rotation.k_count as i32 - 1).stage("backlund")?;
    let frames = backlund::base_frames(&hs, domain, 0.0).stage("backlund")?;
    let net = nets::sym(&frames, backlund::XI, 0.0).stage("nets")?;
    Ok(Base { hs, domain, frames, net })
}

fn resolve_alpha(
    hs: &HsLaxData,
    choice: AlphaChoice,
    rep: &mut Report,
) -> Result<(C64, Option<PeriodicAlpha>), StageError> {
    Ok(match choice {
        AlphaChoice::Real(a) => (C64::from(a), None),
        AlphaChoice::Imaginary(y) => (C64::new(std::f64::consts::FRAC_PI_2, y), None),
        AlphaChoice::Search { n0, p, slice } => {
            let found = backlund::find_periodic_alpha(hs, n0, p, KEdge::B, slice).stage("search")?;
            rep.push(Check::new("periodicity_matrix_power", found.residual, POWER_TOL));
            rep.results.insert("phase".into(), found.phase);
            rep.results.insert("n0".into(), n0 as f64);
            (found.alpha, Some(found))
        }
    })
}

fn record_alpha(rep: &mut Report, alpha: C64) {
    rep.results.insert("alpha_re".into(), alpha.re);
    rep.results.insert("alpha_im".into(), alpha.im);
}

fn period_checks(
    cfg: &JobConfig,
    net: &ContactElementNet,
    found: Option<PeriodicAlpha>,
    n0: Option<u32>,
    rep: &mut Report,
) {
    if let (Some(k0), Some(_), Some(n0)) = (cfg.rotation.k0, found, n0) {
        let period = k0 * n0 / gcd(k0, n0);
        rep.results.insert("period".into(), period as f64);
        match period_defect(net, period as i32) {
            Some(r) => rep.push(Check::new("transform_period", r, PERIOD_TOL)),
            None => rep.notes.push(format!("k_count too small to compare columns {period} apart")),
        }
    }
}

fn search_n0(choice: AlphaChoice) -> Option<u32> {
    match choice {
        AlphaChoice::Search { n0, .. } => Some(n0),
        _ => None,
    }
}

fn single(cfg: &JobConfig) -> Result<Outcome, StageError> {
    let mut rep = Report::new("backlund", cfg.table.clone());
    let choice = cfg.backlund.alpha.unwrap_or(AlphaChoice::Real(std::f64::consts::FRAC_PI_2));
    let b = base(cfg)?;
    let (alpha, found) = resolve_alpha(&b.hs, choice, &mut rep)?;
    record_alpha(&mut rep, alpha);
    if alpha.im != 0.0 {
        return Err(StageError {
            stage: "backlund",
            error: Error::NoRoot("a single transform needs real alpha".into()),
        });
    }
    let params = BacklundParams::single(alpha.re, cfg.backlund.seed);
    let s = backlund::propagate(&b.hs, &params, Transform::Tilde, b.domain).stage("backlund")?;
    let t = backlund::single_backlund(&b.frames, &b.hs, alpha.re, &s, 0.0).stage("nets")?;
    let c = backlund::check_pair(&b.net, &t, alpha.re);
    rep.push(Check::new("backlund_distance", c.distance, PAIR_TOL));
    rep.push(Check::new("backlund_angle", c.angle, PAIR_TOL));
    rep.push(Check::new("backlund_orthogonality", c.orthogonality, PAIR_TOL));
    let (defect, degenerate) = gauss_defect(&t, -1.0);
    rep.push(Check::new("gaussian_constancy", defect, TRANSFORM_GAUSS_TOL));
    rep.degenerate_faces = degenerate;
    period_checks(cfg, &t, found, search_n0(choice), &mut rep);
    Ok(Outcome { report: rep, mesh: Some(t) })
}

pub fn double(cfg: &JobConfig) -> Result<Outcome, StageError> {
    let mut rep = Report::new("double", cfg.table.clone());
    let choice = cfg.backlund.alpha.unwrap_or(AlphaChoice::Imaginary(0.5));
    let b = base(cfg)?;
    let (alpha, found) = resolve_alpha(&b.hs, choice, &mut rep)?;
    record_alpha(&mut rep, alpha);
    let params = BacklundParams::condition_c(alpha, C64::from_polar(1.0, cfg.backlund.seed));
    let st = backlund::propagate(&b.hs, &params, Transform::Tilde, b.domain).stage("backlund")?;
    let sh = backlund::propagate(&b.hs, &params, Transform::Hat, b.domain).stage("backlund")?;
    let db = backlund::double_backlund(&b.frames, &b.hs, &params, &st, &sh, 0.0).stage("nets")?;
    rep.push(Check::new("reality", db.complex.imag_residue(), backlund::DOUBLE_REALITY_TOL));
    let unit_n = db.net.n.values().iter().map(|n| (n.norm() - 1.0).abs()).fold(0.0, f64::max);
    rep.push(Check::new("unit_normals", unit_n, 1e-9));
    let unit_s = db.s_hat_tilde.values().iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max);
    rep.push(Check::new("unitary_permutability", unit_s, UNITARY_TOL));
    let (defect, degenerate) = gauss_defect(&db.net, -1.0);
    rep.push(Check::new("gaussian_constancy", defect, TRANSFORM_GAUSS_TOL));
    rep.degenerate_faces = degenerate;
    period_checks(cfg, &db.net, found, search_n0(choice), &mut rep);
    Ok(Outcome { report: rep, mesh: Some(db.net) })
}

pub fn search(cfg: &JobConfig) -> Result<Outcome, StageError> {
    let mut rep = Report::new("search", cfg.table.clone());
    let choice = match cfg.backlund.alpha {
        Some(c @ AlphaChoice::Search { .. }) => c,
        _ => AlphaChoice::Search { n0: 9, p: 1, slice: AlphaSlice::Imaginary { y_max: 3.0 } },
    };
    let b = base(cfg)?;
    let (alpha, found) = resolve_alpha(&b.hs, choice, &mut rep)?;
    record_alpha(&mut rep, alpha);
    if let Some(f) = found {
        rep.results.insert("target_phase".into(), f.target);
        rep.results.insert("bracket_lo".into(), f.bracket.0);
        rep.results.insert("bracket_hi".into(), f.bracket.1);
    }
    Ok(Outcome { report: rep, mesh: None })
}

pub fn check(cfg_table: crate::config::Table) -> Outcome {
    let mut rep = Report::new("check", cfg_table);
    for c in acceptance::run_all() {
        let mut entry = Check::new(format!("criterion_{}", c.id), c.residual, c.tol);
        entry.pass = c.ok;
        if !c.note.is_empty() {
            rep.notes.push(format!("criterion {}:{}", c.id, c.note));
        }
        rep.push(entry);
    }
    Outcome { report: rep, mesh: None }
}

/// Run `cmd`; the `backlund` command follows `backlund.mode` (default single).
pub fn run(cmd: Command, cfg: &JobConfig) -> Result<Outcome, StageError> {
    match cmd {
        Command::Generate => generate(cfg),
        Command::Backlund => match cfg.backlund.mode {
            Mode::Double => double(cfg),
            _ => single(cfg),
        },
        Command::Double => double(cfg),
        Command::Search => search(cfg),
        Command::Check => Ok(check(cfg.table.clone())),
    }
}
