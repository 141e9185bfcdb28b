//! Dataset-producing subcommands.

use std::path::PathBuf;

use magnon_probe::hybrid::{zero_detuning_tuning, CavityParams};
use magnon_probe::model::path_distance;
use magnon_probe::{
    couplings, diagonal_frequencies, effective_qubit, entanglement_entropy, epr_function,
    ground_state_entropy_closed_form, invert_rabi, schmidt_coefficients_auto, schrieffer_wolff, squeeze_params,
    transmon_spectrum, HybridParams, KittelModes, LogBase, MagnonDispersion, ModelParams, ProbeMode, SqueezeBranch,
    SqueezeParams, Wavevector,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, QubitSpec, RunConfig};
use crate::dataset::{col, Cell, Column, Dataset, Provenance};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Physics(String),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Options shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl RunOptions {
    pub fn out_dir(&self, cfg: &RunConfig) -> PathBuf {
        self.out.clone().unwrap_or_else(|| cfg.output.directory.clone())
    }

    /// Runs `f` on a pool of the requested size (all cores by default).
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R, CommandError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.workers {
            b = b.num_threads(n.max(1));
        }
        let pool = b.build().map_err(|e| CommandError::Pool(e.to_string()))?;
        Ok(pool.install(f))
    }
}

pub struct Output {
    pub dataset: Dataset,
    pub files: Vec<PathBuf>,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
}

fn emit(
    cfg: &RunConfig,
    opts: &RunOptions,
    command: &str,
    dataset: Dataset,
    summary: Vec<String>,
) -> Result<Output, CommandError> {
    let stem = format!("{command}-{}", dataset.provenance.config_hash);
    let files = dataset.write(&opts.out_dir(cfg), &stem, &cfg.output.formats)?;
    Ok(Output { dataset, files, summary })
}

fn field_runs(m: &ModelParams<f64>, compare: bool) -> Vec<ModelParams<f64>> {
    let mut runs = vec![*m];
    if compare && m.zeeman != 0.0 {
        runs.push(m.with_zeeman(0.0));
    }
    runs
}

fn k_norm(k: &Wavevector<f64>) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

fn k_cells(s: f64, k: &Wavevector<f64>) -> Vec<Cell> {
    vec![Cell::num(s), Cell::num(k[0]), Cell::num(k[1]), Cell::num(k[2])]
}

fn k_columns() -> Vec<Column> {
    vec![col("s", "1/a"), col("kx", "1/a"), col("ky", "1/a"), col("kz", "1/a")]
}

pub fn dispersion(cfg: &RunConfig, opts: &RunOptions) -> Result<Output, CommandError> {
    let model = cfg.model()?;
    let path = cfg.path()?;
    let s = path_distance(&path);
    let mut columns = k_columns();
    columns.extend([
        col("zeeman", "meV"),
        col("omega_a", "meV"),
        col("omega_b", "meV"),
        col("gamma_k", "1"),
        col("Gamma_re", "1"),
        col("Gamma_im", "1"),
        col("omega_alpha", "meV"),
        col("omega_beta", "meV"),
        col("splitting", "meV"),
        col("stable", "flag"),
    ]);
    let mut ds = Dataset::new(Provenance::new("probe.dispersion/v1", &cfg.hash("")), columns);
    let mut stable_rows = 0;
    let mut summary = Vec::new();
    for m in field_runs(&model, cfg.sweep.compare_zero_field) {
        let rows: Vec<(Vec<Cell>, bool)> = opts.install(|| {
            path.par_iter()
                .zip(s.par_iter())
                .map(|(k, &s)| {
                    let km = KittelModes::from_model(*k, &m);
                    let disp = km.check_stable().and_then(|_| diagonal_frequencies(&km)).ok();
                    let mut row = k_cells(s, k);
                    let gamma_k = magnon_probe::structure_factor(k, &m.lattice);
                    row.extend([
                        Cell::num(m.zeeman),
                        Cell::num(km.omega_a),
                        Cell::num(km.omega_b),
                        Cell::num(gamma_k),
                        Cell::num(km.gamma.re),
                        Cell::num(km.gamma.im),
                        Cell::opt(disp.map(|d| d.omega_alpha)),
                        Cell::opt(disp.map(|d| d.omega_beta)),
                        Cell::opt(disp.map(|d| d.omega_alpha - d.omega_beta)),
                        Cell::Flag(disp.is_some()),
                    ]);
                    (row, disp.is_some())
                })
                .collect()
        })?;
        let n_stable = rows.iter().filter(|r| r.1).count();
        summary.push(format!("μ_B B = {} meV: {n_stable}/{} k-points stable", m.zeeman, rows.len()));
        stable_rows += n_stable;
        for (row, _) in rows {
            ds.push(row);
        }
    }
    if stable_rows == 0 {
        return Err(CommandError::Physics("every k-point on the path is unstable".into()));
    }
    emit(cfg, opts, "dispersion", ds, summary)
}

fn pair_columns(cfg: &RunConfig, base: LogBase) -> Result<Vec<Column>, ConfigError> {
    if cfg.sweep.pairs.is_empty() {
        return Err(ConfigError::Invalid {
            field: "sweep.pairs".into(),
            reason: "list at least one [x, y] pair".into(),
        });
    }
    Ok(cfg.sweep.pairs.iter().map(|[x, y]| col(&format!("E_{x}_{y}"), base.unit())).collect())
}

fn pair_entropies(cfg: &RunConfig, sp: &SqueezeParams<f64>, base: LogBase) -> (Vec<Cell>, bool) {
    let mut ok = true;
    let cells = cfg
        .sweep
        .pairs
        .iter()
        .map(|&[x, y]| match schmidt_coefficients_auto(x, y, sp).and_then(|s| entanglement_entropy(&s, base)) {
            Ok(e) => Cell::num(e),
            Err(_) => {
                ok = false;
                Cell::Empty
            }
        })
        .collect();
    (cells, ok)
}

pub fn entanglement(cfg: &RunConfig, opts: &RunOptions) -> Result<Output, CommandError> {
    let base: LogBase = cfg.output.log_base.into();
    let pairs = pair_columns(cfg, base)?;
    let hash = cfg.hash("");
    let (ds, failed) = match (&cfg.sweep.r_grid, &cfg.sweep.epr_grid) {
        (Some(g), None) => {
            let mut columns = vec![col("r", "1"), col("epr_phi0", "1"), col("epr_phipi", "1")];
            columns.extend(pairs);
            columns.push(col("ok", "flag"));
            let mut ds = Dataset::new(Provenance::new("probe.entanglement.r/v1", &hash), columns);
            let rows: Vec<(Vec<Cell>, bool)> = opts.install(|| {
                g.points()
                    .par_iter()
                    .map(|&r| {
                        let pi = SqueezeParams::from_r_phi(r, std::f64::consts::PI);
                        let zero = SqueezeParams::from_r_phi(r, 0.0);
                        let mut row = vec![Cell::num(r), Cell::num(epr_function(&zero)), Cell::num(epr_function(&pi))];
                        let (cells, ok) = pair_entropies(cfg, &pi, base);
                        row.extend(cells);
                        row.push(Cell::Flag(ok));
                        (row, ok)
                    })
                    .collect()
            })?;
            let failed = rows.iter().filter(|r| !r.1).count();
            rows.into_iter().for_each(|(r, _)| ds.push(r));
            (ds, failed)
        }
        (None, Some(g)) => {
            let mut columns = vec![col("epr", "1"), col("phi", "rad"), col("r", "1"), col("nonlocal", "flag")];
            columns.extend(pairs);
            columns.push(col("ok", "flag"));
            let mut ds = Dataset::new(Provenance::new("probe.entanglement.epr/v1", &hash), columns);
            ds.provenance
                .notes
                .push("branch φ = π below Δ = 1, φ = 0 above; Δ = 1 is the local boundary (r = 0)".into());
            let rows: Vec<(Vec<Cell>, bool)> = opts.install(|| {
                g.points()
                    .par_iter()
                    .map(|&epr| {
                        let branch = if epr < 1.0 { SqueezeBranch::Pi } else { SqueezeBranch::Zero };
                        let r = 0.5 * epr.ln().abs();
                        let sp = SqueezeParams::from_r_phi(r, branch.phase());
                        let mut row = vec![Cell::num(epr), Cell::num(sp.phi), Cell::num(r), Cell::Flag(epr < 1.0)];
                        let (cells, ok) = pair_entropies(cfg, &sp, base);
                        row.extend(cells);
                        row.push(Cell::Flag(ok));
                        (row, ok)
                    })
                    .collect()
            })?;
            let failed = rows.iter().filter(|r| !r.1).count();
            rows.into_iter().for_each(|(r, _)| ds.push(r));
            (ds, failed)
        }
        _ => {
            return Err(ConfigError::Invalid {
                field: "sweep".into(),
                reason: "give exactly one of r_grid and epr_grid".into(),
            }
            .into())
        }
    };
    if failed == ds.rows().len() {
        return Err(CommandError::Physics("Schmidt truncation failed on every row".into()));
    }
    let summary = vec![format!("{} rows, {failed} with truncation failures", ds.rows().len())];
    emit(cfg, opts, "entanglement", ds, summary)
}

/// Effective Rabi data for one probe at one k.
#[derive(Debug, Clone, Copy)]
pub struct ProbeResult {
    pub f: f64,
    pub intensity: f64,
    pub dispersive_ratio: f64,
    pub omega_q: f64,
}

pub fn probe_at(
    k: &Wavevector<f64>,
    m: &ModelParams<f64>,
    disp: &MagnonDispersion<f64>,
    sp: &SqueezeParams<f64>,
    cavity: &CavityParams<f64>,
    qubit: QubitSpec,
    mode: ProbeMode,
) -> Result<ProbeResult, String> {
    let knorm = k_norm(k);
    let omega_mode = mode.frequency(disp);
    let mut cav = *cavity;
    let omega_q = match qubit {
        QubitSpec::Direct(w) => w,
        QubitSpec::Transmon { e_c, e_j } => transmon_spectrum(e_c, e_j).map_err(|e| e.to_string())?.omega_q,
        QubitSpec::ZeroDetuning => {
            let g = couplings(knorm, m.spin, sp, cavity, mode).g_mph;
            let (w, d) = zero_detuning_tuning(omega_mode, g, cavity.omega_c);
            cav.d = d;
            w
        }
    };
    let cp = couplings(knorm, m.spin, sp, &cav, mode);
    let h = HybridParams::from_couplings(omega_mode, cav.omega_c, omega_q, &cp);
    let dp = schrieffer_wolff(&h).map_err(|e| e.to_string())?;
    let ro = effective_qubit(&dp, 1).map_err(|e| e.to_string())?;
    Ok(ProbeResult { f: ro.f, intensity: ro.intensity, dispersive_ratio: dp.dispersive_ratio, omega_q })
}

pub fn rabi(cfg: &RunConfig, opts: &RunOptions) -> Result<Output, CommandError> {
    let model = cfg.model()?;
    let (cavity, qubit) = cfg.probe_setup()?;
    let path = cfg.path()?;
    let s = path_distance(&path);
    let base: LogBase = cfg.output.log_base.into();
    let selected: ProbeMode = cfg.probe_mode.into();
    let mut columns = k_columns();
    columns.extend([
        col("zeeman", "meV"),
        col("omega_alpha", "meV"),
        col("omega_beta", "meV"),
        col("r", "1"),
        col("phi", "rad"),
        col("epr", "1"),
        col("E_ground", base.unit()),
        col("f_alpha", "meV"),
        col("intensity_alpha", "1"),
        col("ratio_alpha", "1"),
        col("f_beta", "meV"),
        col("intensity_beta", "1"),
        col("ratio_beta", "1"),
        col("f_selected", "meV"),
        col("stable", "flag"),
        col("dispersive", "flag"),
    ]);
    let mut ds = Dataset::new(Provenance::new("probe.rabi/v1", &cfg.hash("")), columns);
    ds.provenance.notes.push("A0·|k| is treated as an energy (k in units of 1/lattice constant)".into());
    ds.provenance.notes.push(format!("f_selected follows probe_mode = {selected:?}"));
    if qubit == QubitSpec::ZeroDetuning {
        ds.provenance.notes.push("qubit retuned at every k: ω_q = ω_mode, d·ω_c = |g_mph|".into());
    }
    let mut good = 0;
    let mut summary = Vec::new();
    for m in field_runs(&model, cfg.sweep.compare_zero_field) {
        let rows: Vec<(Vec<Cell>, bool)> = opts.install(|| {
            path.par_iter()
                .zip(s.par_iter())
                .map(|(k, &s)| {
                    let km = KittelModes::from_model(*k, &m);
                    let mut row = k_cells(s, k);
                    row.push(Cell::num(m.zeeman));
                    let point = km
                        .check_stable()
                        .and_then(|_| diagonal_frequencies(&km))
                        .ok()
                        .zip(squeeze_params(km.gamma).ok());
                    let Some((disp, sp)) = point else {
                        row.extend(std::iter::repeat_n(Cell::Empty, 13));
                        row.extend([Cell::Flag(false), Cell::Flag(false)]);
                        return (row, false);
                    };
                    let alpha = probe_at(k, &m, &disp, &sp, &cavity, qubit, ProbeMode::Alpha).ok();
                    let beta = probe_at(k, &m, &disp, &sp, &cavity, qubit, ProbeMode::Beta).ok();
                    let sel = match selected {
                        ProbeMode::Alpha => alpha,
                        ProbeMode::Beta => beta,
                    };
                    row.extend([
                        Cell::num(disp.omega_alpha),
                        Cell::num(disp.omega_beta),
                        Cell::num(sp.r),
                        Cell::num(sp.phi),
                        Cell::num(epr_function(&sp)),
                        Cell::num(ground_state_entropy_closed_form(sp.r, base)),
                    ]);
                    for p in [alpha, beta] {
                        row.extend([
                            Cell::opt(p.map(|p| p.f)),
                            Cell::opt(p.map(|p| p.intensity)),
                            Cell::opt(p.map(|p| p.dispersive_ratio)),
                        ]);
                    }
                    row.push(Cell::opt(sel.map(|p| p.f)));
                    row.push(Cell::Flag(true));
                    row.push(Cell::Flag(sel.is_some_and(|p| p.dispersive_ratio <= 0.1)));
                    (row, sel.is_some())
                })
                .collect()
        })?;
        let n_ok = rows.iter().filter(|r| r.1).count();
        summary.push(format!("μ_B B = {} meV: {n_ok}/{} k-points with a valid probe", m.zeeman, rows.len()));
        good += n_ok;
        rows.into_iter().for_each(|(r, _)| ds.push(r));
    }
    if good == 0 {
        return Err(CommandError::Physics("no k-point gives a stable, non-resonant probe".into()));
    }
    emit(cfg, opts, "rabi", ds, summary)
}

pub fn invert(cfg: &RunConfig, opts: &RunOptions, f_override: Option<f64>) -> Result<Output, CommandError> {
    let inv = cfg
        .invert
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid { field: "invert".into(), reason: "section is required".into() })?;
    let f = f_override.or(inv.f_measured).ok_or_else(|| ConfigError::Invalid {
        field: "invert.f_measured".into(),
        reason: "give f_measured in the config or --f on the command line".into(),
    })?;
    if !(f > 0.0 && f.is_finite()) {
        return Err(ConfigError::Invalid { field: "f".into(), reason: format!("must be positive, got {f}") }.into());
    }
    let cavity = cfg.cavity()?;
    let base: LogBase = cfg.output.log_base.into();
    let mode: ProbeMode = cfg.probe_mode.into();
    let (lambda, omega_q) = match (inv.k, inv.lambda) {
        (Some(k), None) => {
            let m = cfg.model()?;
            let km = KittelModes::from_model(k, &m);
            let disp = km
                .check_stable()
                .and_then(|_| diagonal_frequencies(&km))
                .map_err(|e| CommandError::Physics(e.to_string()))?;
            let omega_q = match cfg.qubit()? {
                QubitSpec::ZeroDetuning => mode.frequency(&disp),
                QubitSpec::Direct(w) => w,
                QubitSpec::Transmon { e_c, e_j } => {
                    transmon_spectrum(e_c, e_j).map_err(|e| CommandError::Physics(e.to_string()))?.omega_q
                }
            };
            (cavity.a0 * k_norm(&k) * m.spin.sqrt(), omega_q)
        }
        (None, Some(l)) => {
            let omega_q = match cfg.qubit()? {
                QubitSpec::Direct(w) => w,
                QubitSpec::Transmon { e_c, e_j } => {
                    transmon_spectrum(e_c, e_j).map_err(|e| CommandError::Physics(e.to_string()))?.omega_q
                }
                QubitSpec::ZeroDetuning => {
                    return Err(ConfigError::Invalid {
                        field: "transmon.tune".into(),
                        reason: "zero-detuning tuning needs invert.k to fix the magnon frequency".into(),
                    }
                    .into())
                }
            };
            (l, omega_q)
        }
        _ => unreachable!("validated"),
    };
    let branch: SqueezeBranch = inv.branch.into();
    let result = invert_rabi(f, lambda, omega_q, cavity.omega_c, branch, base).map_err(|e| {
        let hint = match e {
            magnon_probe::HybridError::BranchInconsistent { branch: SqueezeBranch::Pi, epr } => format!(
                "{e}. Δ = {epr} > 1 cannot come from the φ = π branch: declare invert.branch = \"zero\" if the state is \
                 local, otherwise check λ, ω_q and ω_c against the measurement"
            ),
            magnon_probe::HybridError::BranchInconsistent { branch: SqueezeBranch::Zero, epr } => format!(
                "{e}. Δ = {epr} < 1 cannot come from the φ = 0 branch: declare invert.branch = \"pi\" if the state is \
                 nonlocal, otherwise check λ, ω_q and ω_c against the measurement"
            ),
            other => other.to_string(),
        };
        CommandError::Physics(hint)
    })?;
    let verdict = if result.epr < 1.0 {
        "nonlocal"
    } else if result.epr == 1.0 {
        "local boundary"
    } else {
        "local"
    };
    let columns = vec![
        col("f_measured", "meV"),
        col("lambda", "meV"),
        col("omega_q", "meV"),
        col("omega_c", "meV"),
        col("epr", "1"),
        col("r", "1"),
        col("r_linearized", "1"),
        col("E_ground", base.unit()),
        col("nonlocal", "flag"),
    ];
    let mut ds = Dataset::new(Provenance::new("probe.invert/v1", &cfg.hash(&format!("f={f:?}"))), columns);
    ds.provenance.notes.push(format!("verdict: {verdict}"));
    ds.push(vec![
        Cell::num(f),
        Cell::num(lambda),
        Cell::num(omega_q),
        Cell::num(cavity.omega_c),
        Cell::num(result.epr),
        Cell::num(result.r),
        Cell::num(result.r_linearized),
        Cell::num(result.ground_entropy),
        Cell::Flag(result.nonlocal),
    ]);
    let summary = vec![
        format!("EPR function Δ = {}", result.epr),
        format!("squeezing r = {} (linearised {})", result.r, result.r_linearized),
        format!("ground-state entropy = {} {}", result.ground_entropy, base.unit()),
        format!("verdict: {verdict}"),
    ];
    emit(cfg, opts, "invert", ds, summary)
}
