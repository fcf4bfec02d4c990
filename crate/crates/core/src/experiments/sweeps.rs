use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::table::{Cell, Provenance, ResultTable};
use crate::decoherence::{moment_mismatch, rho_parameters};
use crate::error::Result;
use crate::phase_space::{
    covariance, d_covariance, default_step, finite_diff_covariance, CovarianceMatrix, EnvParams,
    Param,
};
use crate::qfim::{compare_closed_form, compatibility, performance_ratio, qfim, KAPPA};
use crate::wigner::{wigner_grid, GridSpec, PhaseSpaceGrid};

/// `(Λ, T)` pairs quoted for the fullerene-in-air setup, in m⁻²s⁻¹ and K.
pub const THERMOMETRY_ANCHORS: [(f64, f64); 3] = [(3e15, 16.9e-3), (3e20, 36.5), (3e22, 786.0)];

const LAMBDA: (&str, &str) = ("lambda", "m^-2 s^-1");
const GAMMA: (&str, &str) = ("gamma", "1");
const TIME: (&str, &str) = ("t", "s");
const ERROR: (&str, &str) = ("error", "-");

fn provenance(cfg: &ScenarioConfig) -> Provenance {
    Provenance::new(cfg.hash())
}

fn nums(v: &[f64]) -> Vec<Cell> {
    v.iter().map(|&x| Cell::Num(x)).collect()
}

// key cells, then `width` value cells, then the error message
fn assemble(keys: Vec<Cell>, width: usize, values: Result<Vec<Cell>>) -> Vec<Cell> {
    let mut row = keys;
    match values {
        Ok(v) => {
            debug_assert_eq!(v.len(), width);
            row.extend(v);
            row.push(Cell::Text(String::new()));
        }
        Err(e) => {
            row.extend(std::iter::repeat(Cell::Missing).take(width));
            row.push(Cell::Text(e.to_string()));
        }
    }
    row
}

fn env(cfg: &ScenarioConfig, lambda: f64) -> Result<EnvParams> {
    EnvParams::new(lambda, cfg.gas()?)
}

fn triples(lambdas: &[f64], gammas: &[f64], times: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(lambdas.len() * gammas.len() * times.len());
    for &l in lambdas {
        for &g in gammas {
            for &t in times {
                out.push((l, g, t));
            }
        }
    }
    out
}

fn sweep_rows<F>(points: &[(f64, f64, f64)], width: usize, f: F) -> Vec<Vec<Cell>>
where
    F: Fn(f64, f64, f64) -> Result<Vec<Cell>> + Sync,
{
    points
        .par_iter()
        .map(|&(l, g, t)| assemble(nums(&[l, g, t]), width, f(l, g, t)))
        .collect()
}

fn fill(table: &mut ResultTable, rows: Vec<Vec<Cell>>) {
    for row in rows {
        table.push(row);
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter()
        .copied()
        .filter(|x| x.is_finite())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Performance ratio over `Λ × γ × t` contour grids.
pub fn run_ratio_sweep(cfg: &ScenarioConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let lambdas = cfg.lambdas()?;
    let mut table = ResultTable::new(
        "ratio",
        &[
            LAMBDA,
            GAMMA,
            TIME,
            ("f_gg", "1"),
            ("f_gl", "m^2 s"),
            ("f_ll", "m^4 s^2"),
            ("tilde_gg", "1"),
            ("tilde_ll", "m^4 s^2"),
            ("delta_i", "SI"),
            ("delta_s", "SI"),
            ("ratio", "1"),
            ("det_f", "m^4 s^2"),
            ("approximate", "bool"),
            ERROR,
        ],
        provenance(cfg),
    );
    let points = triples(&lambdas, &cfg.contour_gammas(), &cfg.contour_times());
    let rows = sweep_rows(&points, 10, |l, g, t| {
        let eval = qfim(&cfg.probe(g)?, &env(cfg, l)?, t)?;
        let f = eval.matrix;
        let r = performance_ratio(&f)?;
        let mut v = nums(&[
            f.f_gg, f.f_gl, f.f_ll, r.tilde_gg, r.tilde_ll, r.delta_i, r.delta_s, r.ratio, r.det_f,
        ]);
        v.push(Cell::Int(eval.approximate as i64));
        Ok(v)
    });
    fill(&mut table, rows);
    let ratio = table.column("ratio").unwrap_or_default();
    let lam = table.column("lambda").unwrap_or_default();
    for &l in &lambdas {
        let r: Vec<f64> = ratio
            .iter()
            .zip(&lam)
            .filter(|(_, &x)| x == l)
            .map(|(&r, _)| r)
            .collect();
        let above = r.iter().filter(|&&x| x > 1.0).count();
        table.summary.push(format!(
            "lambda={l:e} rows={} ratio_above_1={above} max_ratio={:e}",
            r.len(),
            max_of(&r)
        ));
    }
    table.summary.push(format!(
        "kappa={KAPPA:e} failed_rows={}",
        table.failed_rows()
    ));
    Ok(table)
}

/// QFIM against `γ` at the fixed time `t_fixed`, with the closed-form
/// columns alongside.
pub fn run_qfim_vs_gamma(cfg: &ScenarioConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let mut table = ResultTable::new(
        "qfim",
        &[
            LAMBDA,
            GAMMA,
            TIME,
            ("f_gg", "1"),
            ("f_gl", "m^2 s"),
            ("f_ll", "m^4 s^2"),
            ("f_ll_rel", "1"),
            ("tilde_gg", "1"),
            ("tilde_ll", "m^4 s^2"),
            ("cf_gg", "1"),
            ("cf_gl", "m^2 s"),
            ("cf_ll", "m^4 s^2"),
            ("rel_gg", "1"),
            ("rel_gl", "1"),
            ("rel_ll", "1"),
            ERROR,
        ],
        provenance(cfg),
    );
    let points = triples(&cfg.lambdas()?, &cfg.gammas(), &[cfg.t_fixed]);
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|&(l, g, t)| {
            let keys = nums(&[l, g, t]);
            let general = (|| {
                let probe = cfg.probe(g)?;
                let e = env(cfg, l)?;
                let f = qfim(&probe, &e, t)?.matrix;
                let r = performance_ratio(&f)?;
                Ok((probe, e, f, r))
            })();
            let (probe, e, f, r) = match general {
                Ok(v) => v,
                Err(err) => return assemble(keys, 12, Err(err)),
            };
            let mut row = keys;
            row.extend(nums(&[
                f.f_gg,
                f.f_gl,
                f.f_ll,
                f.f_ll * l * l,
                r.tilde_gg,
                r.tilde_ll,
            ]));
            match compare_closed_form(&probe, &e, t) {
                Ok(c) => {
                    row.extend(nums(&[
                        c.closed.f_gg,
                        c.closed.f_gl,
                        c.closed.f_ll,
                        c.rel_gg,
                        c.rel_gl,
                        c.rel_ll,
                    ]));
                    row.push(Cell::Text(String::new()));
                }
                Err(err) => {
                    row.extend(std::iter::repeat(Cell::Missing).take(6));
                    row.push(Cell::Text(format!("closed form: {err}")));
                }
            }
            row
        })
        .collect();
    fill(&mut table, rows);
    table.summary.push(format!(
        "t_fixed={:e} failed_rows={}",
        cfg.t_fixed,
        table.failed_rows()
    ));
    Ok(table)
}

/// Longest run of consecutive times where one `γ` strictly beats every
/// other member of the set on `F̃_ΛΛ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceWindow {
    pub lambda: f64,
    pub gamma: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
}

/// Dominance windows from a `tilde` table, one per `(Λ, γ)` that is
/// strictly best at one or more times.
pub fn dominance_windows(table: &ResultTable) -> Vec<DominanceWindow> {
    let (Some(l), Some(g), Some(t), Some(rank)) = (
        table.column("lambda"),
        table.column("gamma"),
        table.column("t"),
        table.column("rank"),
    ) else {
        return Vec::new();
    };
    // (Λ, t) blocks in row order, each with its unique winner if any
    let mut blocks: Vec<(f64, f64, Option<f64>)> = Vec::new();
    let mut i = 0;
    while i < l.len() {
        let mut j = i;
        let mut winners = Vec::new();
        while j < l.len() && l[j] == l[i] && t[j] == t[i] {
            if rank[j] == 1.0 {
                winners.push(g[j]);
            }
            j += 1;
        }
        let unique = (winners.len() == 1).then(|| winners[0]);
        blocks.push((l[i], t[i], unique));
        i = j;
    }
    let mut out: Vec<DominanceWindow> = Vec::new();
    let mut k = 0;
    while k < blocks.len() {
        let (lam, t0, win) = blocks[k];
        let mut end = k;
        while end + 1 < blocks.len() && blocks[end + 1].0 == lam && blocks[end + 1].2 == win {
            end += 1;
        }
        if let Some(gam) = win {
            let w = DominanceWindow {
                lambda: lam,
                gamma: gam,
                t_start: t0,
                t_end: blocks[end].1,
                points: end - k + 1,
            };
            match out.iter_mut().find(|o| o.lambda == lam && o.gamma == gam) {
                Some(o) if o.points < w.points => *o = w,
                Some(_) => {}
                None => out.push(w),
            }
        }
        k = end + 1;
    }
    out
}

/// `F̃_ΛΛ` against time for each `γ` in `gamma_set`, ranked at each time.
pub fn run_tilde_lambda_vs_time(cfg: &ScenarioConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let mut table = ResultTable::new(
        "tilde",
        &[
            LAMBDA,
            GAMMA,
            TIME,
            ("tilde_ll", "m^4 s^2"),
            ("tilde_ll_rel", "1"),
            ("rank", "1"),
            ("best_gamma", "1"),
            ERROR,
        ],
        provenance(cfg),
    );
    let mut points = Vec::new();
    for l in cfg.lambdas()? {
        for t in cfg.times() {
            points.push((l, t));
        }
    }
    let gammas = cfg.gamma_set.clone();
    let blocks: Vec<Vec<Vec<Cell>>> = points
        .par_iter()
        .map(|&(l, t)| {
            let values: Vec<Result<f64>> = gammas
                .iter()
                .map(|&g| {
                    let f = qfim(&cfg.probe(g)?, &env(cfg, l)?, t)?.matrix;
                    Ok(performance_ratio(&f)?.tilde_ll)
                })
                .collect();
            let ok: Vec<(f64, f64)> = gammas
                .iter()
                .zip(&values)
                .filter_map(|(&g, v)| v.as_ref().ok().map(|&v| (g, v)))
                .collect();
            let best = ok
                .iter()
                .copied()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(g, _)| g);
            gammas
                .iter()
                .zip(values)
                .map(|(&g, v)| {
                    let keys = nums(&[l, g, t]);
                    let v = v.map(|v| {
                        // strict ranking: ties share the better rank
                        let rank = 1 + ok.iter().filter(|(_, o)| *o > v).count();
                        vec![
                            Cell::Num(v),
                            Cell::Num(v * l * l),
                            Cell::Int(rank as i64),
                            best.map_or(Cell::Missing, Cell::Num),
                        ]
                    });
                    assemble(keys, 4, v)
                })
                .collect()
        })
        .collect();
    // rows grouped by (Λ, t) with γ varying fastest
    for block in blocks {
        fill(&mut table, block);
    }
    let windows = dominance_windows(&table);
    for w in &windows {
        table.summary.push(format!(
            "best_window lambda={:e} gamma={:e} t_start={:e} t_end={:e} points={}",
            w.lambda, w.gamma, w.t_start, w.t_end, w.points
        ));
    }
    table
        .summary
        .push(format!("failed_rows={}", table.failed_rows()));
    Ok(table)
}

/// One Wigner grid with its state.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerSnapshot {
    pub lambda: f64,
    pub gamma: f64,
    pub t: f64,
    pub covariance: CovarianceMatrix,
    pub grid: PhaseSpaceGrid,
}

impl WignerSnapshot {
    pub fn orientation_deg(&self) -> f64 {
        self.covariance.orientation().to_degrees()
    }

    pub fn name(&self) -> String {
        format!("wigner_t{:e}_g{:e}", self.t, self.gamma)
    }
}

/// Grids for every `(t, γ)` in `wigner_times × wigner_gammas` at
/// `wigner_lambda`.
pub fn run_wigner_snapshots(cfg: &ScenarioConfig) -> Result<Vec<WignerSnapshot>> {
    cfg.validate()?;
    let mut pairs = Vec::new();
    for &t in &cfg.wigner_times {
        for &g in &cfg.wigner_gammas {
            pairs.push((t, g));
        }
    }
    pairs
        .par_iter()
        .map(|&(t, g)| {
            let cov = covariance(&cfg.probe(g)?, &env(cfg, cfg.wigner_lambda)?, t)?;
            let spec = GridSpec::centred(&cov, cfg.grid_span, cfg.grid_points);
            Ok(WignerSnapshot {
                lambda: cfg.wigner_lambda,
                gamma: g,
                t,
                covariance: cov,
                grid: wigner_grid(&cov, &spec)?,
            })
        })
        .collect()
}

/// One row per snapshot: normalisation, orientation and span diagnostics.
pub fn snapshot_table(cfg: &ScenarioConfig, snaps: &[WignerSnapshot]) -> ResultTable {
    let mut table = ResultTable::new(
        "wigner",
        &[
            LAMBDA,
            GAMMA,
            TIME,
            ("sxx", "1"),
            ("sxp", "1"),
            ("spp", "1"),
            ("normalization", "1"),
            ("orientation", "deg"),
            ("min_value", "1"),
            ("span_sigmas", "1"),
            ("under_spanned", "bool"),
            ("grid", "-"),
        ],
        provenance(cfg),
    );
    for s in snaps {
        let mut row = nums(&[
            s.lambda,
            s.gamma,
            s.t,
            s.covariance.sxx,
            s.covariance.sxp,
            s.covariance.spp,
            s.grid.normalization,
            s.orientation_deg(),
            s.grid.min_value(),
            s.grid.span_sigmas,
        ]);
        row.push(Cell::Int(s.grid.under_spanned as i64));
        row.push(Cell::Text(s.name()));
        table.push(row);
        if s.grid.under_spanned {
            table.summary.push(format!(
                "warning: {} spans {:.2} sigma",
                s.name(),
                s.grid.span_sigmas
            ));
        }
    }
    table
}

/// Long-format `(x, p, W)` export of one grid.
pub fn grid_table(cfg: &ScenarioConfig, snap: &WignerSnapshot) -> ResultTable {
    let mut table = ResultTable::new(
        &snap.name(),
        &[
            ("x", "sqrt2 sigma0"),
            ("p", "sqrt2 hbar/sigma0"),
            ("w", "1"),
        ],
        provenance(cfg),
    );
    table.summary.push(format!(
        "lambda={:e} gamma={:e} t={:e} normalization={:e}",
        snap.lambda, snap.gamma, snap.t, snap.grid.normalization
    ));
    let (xs, ps) = (snap.grid.xs(), snap.grid.ps());
    for (i, x) in xs.iter().enumerate() {
        for (j, p) in ps.iter().enumerate() {
            table.push(nums(&[*x, *p, snap.grid.values[i][j]]));
        }
    }
    table
}

/// `det F` over `det_lambdas × gamma_set × t`.
pub fn run_det_sweep(cfg: &ScenarioConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let mut table = ResultTable::new(
        "det",
        &[
            LAMBDA,
            GAMMA,
            TIME,
            ("f_gg", "1"),
            ("f_gl", "m^2 s"),
            ("f_ll", "m^4 s^2"),
            ("det_f", "m^4 s^2"),
            ("det_rel", "1"),
            ERROR,
        ],
        provenance(cfg),
    );
    let points = triples(&cfg.det_lambdas, &cfg.gamma_set, &cfg.times());
    let rows = sweep_rows(&points, 5, |l, g, t| {
        let f = qfim(&cfg.probe(g)?, &env(cfg, l)?, t)?.matrix;
        let det = f.det();
        Ok(nums(&[
            f.f_gg,
            f.f_gl,
            f.f_ll,
            det,
            det / (f.f_gg * f.f_ll),
        ]))
    });
    fill(&mut table, rows);
    let det = table.column("det_f").unwrap_or_default();
    let positive = det.iter().filter(|&&d| d > 0.0).count();
    table.summary.push(format!(
        "rows={} det_positive={positive} failed_rows={}",
        det.len(),
        table.failed_rows()
    ));
    Ok(table)
}

/// SLD compatibility trace over `lambdas × γ-range × t`.
pub fn run_compat_check(cfg: &ScenarioConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let mut table = ResultTable::new(
        "compat",
        &[
            LAMBDA,
            GAMMA,
            TIME,
            ("trace", "m^2 s"),
            ("normalized", "1"),
            ("route_discrepancy", "1"),
            ERROR,
        ],
        provenance(cfg),
    );
    let points = triples(&cfg.lambdas()?, &cfg.gammas(), &cfg.times());
    let rows = sweep_rows(&points, 3, |l, g, t| {
        let c = compatibility(&cfg.probe(g)?, &env(cfg, l)?, t)?;
        Ok(nums(&[c.value, c.normalized, c.route_discrepancy]))
    });
    fill(&mut table, rows);
    table.summary.push(format!(
        "max_normalized={:e} max_route_discrepancy={:e} failed_rows={}",
        max_of(&table.column("normalized").unwrap_or_default()),
        max_of(&table.column("route_discrepancy").unwrap_or_default()),
        table.failed_rows()
    ));
    Ok(table)
}

fn matches(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs()
}

/// `T(Λ)` for the run's scattering constants and `Λ(T)` for
/// `thermo_temperatures`, with deviations from the quoted anchors.
pub fn run_thermometry(cfg: &ScenarioConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let gas = cfg.gas()?;
    let mut table = ResultTable::new(
        "thermo",
        &[
            ("direction", "-"),
            LAMBDA,
            ("temperature", "K"),
            ("reference", "-"),
            ("deviation", "%"),
            ("round_trip", "1"),
            ERROR,
        ],
        provenance(cfg),
    );
    for l in cfg.lambdas()? {
        let row = gas.temperature_of_lambda(l).and_then(|t| {
            let back = gas.lambda_of_temperature(t)?;
            let anchor = THERMOMETRY_ANCHORS.iter().find(|a| matches(l, a.0));
            Ok(vec![
                Cell::Num(t),
                anchor.map_or(Cell::Missing, |a| Cell::Num(a.1)),
                anchor.map_or(Cell::Missing, |a| Cell::Num(100.0 * (t - a.1) / a.1)),
                Cell::Num((back - l).abs() / l),
            ])
        });
        let mut r = vec![Cell::Text("lambda_to_t".into()), Cell::Num(l)];
        match row {
            Ok(v) => {
                r.extend(v);
                r.push(Cell::Text(String::new()));
            }
            Err(e) => {
                r.extend(std::iter::repeat(Cell::Missing).take(4));
                r.push(Cell::Text(e.to_string()));
            }
        }
        table.push(r);
    }
    for &temp in &cfg.thermo_temperatures {
        let row = gas.lambda_of_temperature(temp).and_then(|l| {
            let back = gas.temperature_of_lambda(l)?;
            let anchor = THERMOMETRY_ANCHORS.iter().find(|a| matches(temp, a.1));
            Ok((l, anchor, (back - temp).abs() / temp))
        });
        let r = match row {
            Ok((l, anchor, rt)) => vec![
                Cell::Text("t_to_lambda".into()),
                Cell::Num(l),
                Cell::Num(temp),
                anchor.map_or(Cell::Missing, |a| Cell::Num(a.0)),
                anchor.map_or(Cell::Missing, |a| Cell::Num(100.0 * (l - a.0) / a.0)),
                Cell::Num(rt),
                Cell::Text(String::new()),
            ],
            Err(e) => vec![
                Cell::Text("t_to_lambda".into()),
                Cell::Missing,
                Cell::Num(temp),
                Cell::Missing,
                Cell::Missing,
                Cell::Missing,
                Cell::Text(e.to_string()),
            ],
        };
        table.push(r);
    }
    let dev = table.column("deviation").unwrap_or_default();
    let worst = dev
        .iter()
        .filter(|x| x.is_finite())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    table
        .summary
        .push(format!("max_anchor_deviation_percent={worst:e}"));
    Ok(table)
}

/// The reference closed-form QFIM swept against the moment formula.
pub fn run_closed_form_report(cfg: &ScenarioConfig) -> Result<ResultTable> {
    const AGREE: f64 = 1e-6;
    cfg.validate()?;
    let mut table = ResultTable::new(
        "closed_form_report",
        &[
            LAMBDA,
            GAMMA,
            TIME,
            ("alpha", "SI"),
            ("f_gg", "1"),
            ("f_gl", "m^2 s"),
            ("f_ll", "m^4 s^2"),
            ("cf_gg", "1"),
            ("cf_gl", "m^2 s"),
            ("cf_ll", "m^4 s^2"),
            ("rel_gg", "1"),
            ("rel_gl", "1"),
            ("rel_ll", "1"),
            ("agree", "bool"),
            ERROR,
        ],
        provenance(cfg),
    );
    let points = triples(&cfg.lambdas()?, &cfg.gamma_set, &cfg.times());
    let rows = sweep_rows(&points, 11, |l, g, t| {
        let c = compare_closed_form(&cfg.probe(g)?, &env(cfg, l)?, t)?;
        let mut v = nums(&[
            c.alpha,
            c.general.f_gg,
            c.general.f_gl,
            c.general.f_ll,
            c.closed.f_gg,
            c.closed.f_gl,
            c.closed.f_ll,
            c.rel_gg,
            c.rel_gl,
            c.rel_ll,
        ]);
        v.push(Cell::Int(c.agrees(AGREE) as i64));
        Ok(v)
    });
    fill(&mut table, rows);
    let agree = table.column("agree").unwrap_or_default();
    let n_ok = agree.iter().filter(|&&a| a == 1.0).count();
    let mut rel: Vec<f64> = ["rel_gg", "rel_gl", "rel_ll"]
        .iter()
        .flat_map(|c| table.column(c).unwrap_or_default())
        .filter(|x| x.is_finite())
        .collect();
    rel.sort_by(f64::total_cmp);
    let median = rel.get(rel.len() / 2).copied().unwrap_or(f64::NAN);
    table.summary.push(format!(
        "tolerance={AGREE:e} rows={} agreeing={n_ok} median_rel={median:e} max_rel={:e} failed_rows={}",
        agree.len(),
        max_of(&rel),
        table.failed_rows()
    ));
    Ok(table)
}

/// Outcome of one invariant check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub closed_form: ResultTable,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self, cfg: &ScenarioConfig) -> ResultTable {
        let mut t = ResultTable::new(
            "validate",
            &[
                ("check", "-"),
                ("passed", "bool"),
                ("value", "1"),
                ("threshold", "1"),
            ],
            provenance(cfg),
        );
        for c in &self.checks {
            t.push(vec![
                Cell::Text(c.name.clone()),
                Cell::Int(c.passed as i64),
                Cell::Num(c.value),
                Cell::Num(c.threshold),
            ]);
        }
        t
    }
}

fn below(name: &str, value: f64, threshold: f64) -> Check {
    Check {
        name: name.to_string(),
        passed: value.is_finite() && value < threshold,
        value,
        threshold,
    }
}

fn worst<F>(points: &[(f64, f64, f64)], f: F) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> Result<f64> + Sync,
{
    let values = points
        .par_iter()
        .map(|&(l, g, t)| f(l, g, t))
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// The invariant suite on the configured grids.
pub fn validate(cfg: &ScenarioConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    let lambdas = cfg.lambdas()?;
    let times = cfg.times();
    let mut checks = Vec::new();

    // purity identity for a coherent probe without scattering
    let mut pure_times = times.clone();
    pure_times.insert(0, 0.0);
    let pure = triples(&[0.0], &cfg.gammas(), &pure_times);
    let coherent = cfg.probe(0.0)?.with_ell0(f64::INFINITY)?;
    checks.push(below(
        "purity_identity",
        worst(&pure, |l, g, t| {
            Ok((covariance(&coherent.with_gamma(g)?, &env(cfg, l)?, t)?.det() - 1.0).abs())
        })?,
        1e-10,
    ));

    let spot = triples(&lambdas, &cfg.gamma_set, &times);
    checks.push(below(
        "derivative_oracle",
        worst(&spot, |l, g, t| {
            let (p, e) = (cfg.probe(g)?, env(cfg, l)?);
            let mut m: f64 = 0.0;
            for which in Param::ALL {
                let exact = d_covariance(&p, &e, t, which)?;
                let fd = finite_diff_covariance(&p, &e, t, which, default_step(&p, &e, which))?;
                m = m.max(fd.rel_diff(&exact));
            }
            Ok(m)
        })?,
        1e-6,
    ));
    checks.push(below(
        "density_matrix_moments",
        worst(&spot, |l, g, t| {
            let (p, e) = (cfg.probe(g)?, env(cfg, l)?);
            Ok(moment_mismatch(
                &rho_parameters(&p, &e, t)?.covariance(),
                &covariance(&p, &e, t)?,
            ))
        })?,
        1e-6,
    ));

    let ratio = run_ratio_sweep(cfg)?;
    let r = ratio.column("ratio").unwrap_or_default();
    let over = r.iter().fold(0.0f64, |m, &x| m.max(x - KAPPA));
    checks.push(Check {
        name: "ratio_at_most_kappa".into(),
        passed: r.iter().all(|&x| x > 0.0 && x <= KAPPA + 1e-9) && ratio.failed_rows() == 0,
        value: over,
        threshold: 1e-9,
    });

    let det = run_det_sweep(cfg)?;
    let d = det.column("det_f").unwrap_or_default();
    checks.push(Check {
        name: "det_positive".into(),
        passed: d.iter().all(|&x| x > 0.0) && det.failed_rows() == 0,
        value: d.iter().copied().fold(f64::INFINITY, f64::min),
        threshold: 0.0,
    });

    let compat = run_compat_check(cfg)?;
    let failed = compat.failed_rows();
    let mut c = below(
        "compatibility_trace",
        max_of(&compat.column("normalized").unwrap_or_default()),
        1e-9,
    );
    c.passed &= failed == 0;
    checks.push(c);

    let thermo = run_thermometry(cfg)?;
    let dev = thermo.column("deviation").unwrap_or_default();
    let anchors = dev.iter().filter(|x| x.is_finite()).count();
    let mut c = below(
        "thermometry_anchors_percent",
        dev.iter()
            .filter(|x| x.is_finite())
            .fold(0.0f64, |m, x| m.max(x.abs())),
        2.0,
    );
    c.passed &= anchors > 0;
    checks.push(c);

    let snaps = run_wigner_snapshots(cfg)?;
    checks.push(below(
        "wigner_normalization",
        snaps
            .iter()
            .fold(0.0f64, |m, s| m.max((s.grid.normalization - 1.0).abs())),
        1e-3,
    ));

    let closed_form = run_closed_form_report(cfg)?;
    Ok(ValidationReport {
        checks,
        closed_form,
    })
}
