use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{GapMode, Problem, RunConfig};
use super::svg::phase_portrait;
use super::AppError;
use crate::dynamics::{assemble_components, ComponentOptions, Components, FamilyEnd, LimitComponent, OrbitFamily};
use crate::geometry::{Grid, Side};
use crate::limits::{
    coarea_weights, degenerate_value, orbit_label, predicted_limit, reduced_eigen, LimitCase, LimitOptions, Prediction,
};
use crate::pde::principal_eigenvalue;

/// Exact header line of `sweep.csv`.
pub const SWEEP_HEADER: &str = "A,lambda,residual,iters,gap";

/// Classification and predicted limit of one config.
#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub components: Components,
    pub prediction: Prediction,
}

/// One component with its limit value, as written to reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub kind: String,
    /// `None` stands for `+∞`.
    pub value: Option<f64>,
    pub case: LimitCase,
}

impl Analysis {
    pub fn predicted(&self) -> f64 {
        self.prediction.limit.value
    }

    pub fn summaries(&self) -> Vec<ComponentSummary> {
        self.components
            .components
            .iter()
            .zip(&self.prediction.components)
            .map(|(k, v)| ComponentSummary {
                kind: k.name().to_string(),
                value: v.value.is_finite().then_some(v.value),
                case: v.case,
            })
            .collect()
    }
}

/// Classify the limit set and evaluate the predicted limit.
pub fn analyze(cfg: &RunConfig) -> Result<Analysis, AppError> {
    let p = cfg.problem()?;
    analyze_problem(cfg, &p)
}

fn analyze_problem(cfg: &RunConfig, p: &Problem) -> Result<Analysis, AppError> {
    let opts = ComponentOptions {
        probe_lattice: cfg.probe_lattice,
        degenerate: p.degenerate.clone(),
        boundary_attractors: p.builtin.and_then(|b| b.boundary_attractor()).into_iter().collect(),
        ..Default::default()
    };
    let components = assemble_components(&p.field, &p.domain, &opts)?;
    let lopts = LimitOptions { family_stations: cfg.family_stations, degenerate_n: cfg.n.min(257) };
    let prediction = predicted_limit(&components.components, &p.c, &p.field, &lopts)?;
    Ok(Analysis { components, prediction })
}

#[derive(Serialize)]
struct ComponentsFile<'a> {
    predicted: f64,
    case: LimitCase,
    argmin: usize,
    components: Vec<ComponentEntry<'a>>,
    inflow: &'a crate::geometry::InflowReport,
    warnings: &'a [String],
    diagnostics: &'a [String],
}

#[derive(Serialize)]
struct ComponentEntry<'a> {
    limit: &'a crate::limits::PredictedLimit,
    #[serde(flatten)]
    component: &'a LimitComponent,
}

/// Write `components.json` and `phase.svg` into `out`.
pub fn write_analysis(cfg: &RunConfig, a: &Analysis, out: &Path) -> Result<(), AppError> {
    fs::create_dir_all(out)?;
    let file = ComponentsFile {
        predicted: a.predicted(),
        case: a.prediction.limit.case,
        argmin: a.prediction.argmin,
        components: a
            .components
            .components
            .iter()
            .zip(&a.prediction.components)
            .map(|(component, limit)| ComponentEntry { limit, component })
            .collect(),
        inflow: &a.components.inflow,
        warnings: &a.components.warnings,
        diagnostics: &a.components.diagnostics,
    };
    fs::write(out.join("components.json"), serde_json::to_string_pretty(&file)?)?;
    let p = cfg.problem()?;
    fs::write(out.join("phase.svg"), phase_portrait(&p, &a.components)?)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "A")]
    pub a: f64,
    pub lambda: Option<f64>,
    pub residual: Option<f64>,
    pub iters: Option<usize>,
    /// `|lambda - predicted|`.
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(&self) -> bool {
        self.lambda.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Pass,
    Fail,
    /// Outside the strict bound but inside the informational one.
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub status: VerdictStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateReport {
    pub label: String,
    pub case: LimitCase,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub predicted: f64,
    pub case: LimitCase,
    pub components: Vec<ComponentSummary>,
    pub table: Vec<SweepRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<DegenerateReport>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

/// Largest share of failed rows before the sweep itself fails.
const MAX_FAILED_SHARE: f64 = 0.25;

/// Verdicts from the table alone: row failures, gaps non-increasing over
/// the last half of the sweep, and the final gap against the configured bound.
pub fn verdicts(table: &[SweepRow], predicted: f64, cfg: &RunConfig) -> Vec<Verdict> {
    let mut out = Vec::new();
    let failed = table.iter().filter(|r| r.failed()).count();
    out.push(Verdict {
        name: "rows".into(),
        status: if (failed as f64) <= MAX_FAILED_SHARE * table.len() as f64 { VerdictStatus::Pass } else { VerdictStatus::Fail },
        detail: format!("{failed} of {} rows failed", table.len()),
    });
    let tail: Vec<f64> = table[table.len() / 2..].iter().filter_map(|r| r.gap).collect();
    let slack = 1e-9 * predicted.abs().max(1.0);
    let monotone = tail.windows(2).all(|w| w[1] <= w[0] + slack);
    out.push(Verdict {
        name: "gap_non_increasing".into(),
        status: if monotone { VerdictStatus::Pass } else { VerdictStatus::Fail },
        detail: format!("gaps over the last half: {tail:?}"),
    });
    if let Some(tol) = cfg.gap_tol {
        let last = table.iter().rev().find_map(|r| r.gap);
        let (status, detail) = match last {
            None => (VerdictStatus::Fail, "no successful rows".to_string()),
            Some(g) => {
                let (measure, what) = match cfg.gap_mode {
                    GapMode::Absolute => (g, "gap"),
                    GapMode::Relative => (g / predicted.abs(), "relative gap"),
                };
                let status = if measure <= tol {
                    VerdictStatus::Pass
                } else if cfg.informational_tol.is_some_and(|t| measure <= t) {
                    VerdictStatus::Informational
                } else {
                    VerdictStatus::Fail
                };
                (status, format!("final {what} {measure:.6e} against {tol:e}"))
            }
        };
        out.push(Verdict { name: "final_gap".into(), status, detail });
    }
    out
}

fn sweep_rows(cfg: &RunConfig, p: &Problem, predicted: f64) -> Result<Vec<SweepRow>, AppError> {
    let grid = Grid::build(&p.domain, cfg.n).map_err(|e| AppError::Config(e.to_string()))?;
    let mut rows: Vec<SweepRow> = cfg
        .a_list
        .par_iter()
        .map(|&a| match principal_eigenvalue(&grid, &p.field, a, &p.c, &cfg.bc, cfg.scheme, &cfg.solver) {
            Ok(r) => SweepRow {
                a,
                lambda: Some(r.eigen.lambda),
                residual: Some(r.eigen.residual_norm),
                iters: Some(r.eigen.iterations),
                gap: Some((r.eigen.lambda - predicted).abs()),
                error: None,
            },
            Err(e) => SweepRow { a, lambda: None, residual: None, iters: None, gap: None, error: Some(e.to_string()) },
        })
        .collect();
    rows.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(rows)
}

fn write_csv(rows: &[SweepRow], path: &Path) -> Result<(), AppError> {
    let mut s = String::new();
    s.push_str(SWEEP_HEADER);
    s.push('\n');
    let num = |v: Option<f64>| v.map_or("NaN".to_string(), |x| x.to_string());
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.a,
            num(r.lambda),
            num(r.residual),
            r.iters.map_or("NaN".to_string(), |i| i.to_string()),
            num(r.gap)
        );
    }
    fs::write(path, s)?;
    Ok(())
}

fn read_csv(path: &Path) -> Result<Vec<SweepRow>, AppError> {
    let text = fs::read_to_string(path).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    if lines.next() != Some(SWEEP_HEADER) {
        return Err(AppError::Config(format!("{}: unexpected header", path.display())));
    }
    let bad = |l: &str| AppError::Config(format!("{}: malformed row {l:?}", path.display()));
    let finite = |x: f64| x.is_finite().then_some(x);
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 5 {
                return Err(bad(l));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(l));
            let lambda = finite(num(f[1])?);
            Ok(SweepRow {
                a: num(f[0])?,
                lambda,
                residual: finite(num(f[2])?),
                iters: f[3].parse().ok(),
                gap: finite(num(f[4])?),
                error: lambda.is_none().then(|| "failed".to_string()),
            })
        })
        .collect()
}

fn finish_report(cfg: &RunConfig, a: &Analysis, table: Vec<SweepRow>, degenerate: Vec<DegenerateReport>) -> Report {
    let verdicts = verdicts(&table, a.predicted(), cfg);
    Report {
        predicted: a.predicted(),
        case: a.prediction.limit.case,
        components: a.summaries(),
        passed: verdicts.iter().all(|v| v.status != VerdictStatus::Fail),
        table,
        degenerate,
        verdicts,
    }
}

fn write_report(report: &Report, out: &Path) -> Result<(), AppError> {
    fs::create_dir_all(out)?;
    fs::write(out.join("report.json"), serde_json::to_string_pretty(report)?)?;
    Ok(())
}

fn check_rows(report: &Report) -> Result<(), AppError> {
    let failed = report.table.iter().filter(|r| r.failed()).count();
    if (failed as f64) > MAX_FAILED_SHARE * report.table.len() as f64 {
        let why: Vec<String> = report.table.iter().filter_map(|r| r.error.clone()).collect();
        return Err(AppError::Numerical(format!("{failed} of {} rows failed: {}", report.table.len(), why.join("; "))));
    }
    Ok(())
}

/// Analyze, then compute `lambda(A)` for every drift rate in parallel.
/// Writes `components.json`, `phase.svg`, `sweep.csv` and `report.json`
/// when `out` is given.
pub fn sweep(cfg: &RunConfig, out: Option<&Path>) -> Result<Report, AppError> {
    if cfg.a_list.is_empty() {
        return Err(AppError::Config("a_list is empty".into()));
    }
    let p = cfg.problem()?;
    let a = analyze_problem(cfg, &p)?;
    let table = sweep_rows(cfg, &p, a.predicted())?;
    let report = finish_report(cfg, &a, table, Vec::new());
    if let Some(out) = out {
        write_analysis(cfg, &a, out)?;
        write_csv(&report.table, &out.join("sweep.csv"))?;
        write_report(&report, out)?;
    }
    check_rows(&report)?;
    Ok(report)
}

/// Limit values of the declared degenerate regions plus the full sweep.
pub fn degenerate(cfg: &RunConfig, out: Option<&Path>) -> Result<Report, AppError> {
    let p = cfg.problem()?;
    if p.degenerate.is_empty() {
        return Err(AppError::Config("no degenerate region declared".into()));
    }
    let regions = p
        .degenerate
        .iter()
        .map(|r| {
            let v = degenerate_value(&p.c, r, cfg.n.min(257))?;
            Ok(DegenerateReport { label: r.label.clone(), case: v.case, value: v.value })
        })
        .collect::<Result<Vec<_>, AppError>>()?;
    let a = analyze_problem(cfg, &p)?;
    let table = if cfg.a_list.is_empty() { Vec::new() } else { sweep_rows(cfg, &p, a.predicted())? };
    let report = finish_report(cfg, &a, table, regions);
    if let Some(out) = out {
        write_analysis(cfg, &a, out)?;
        if !report.table.is_empty() {
            write_csv(&report.table, &out.join("sweep.csv"))?;
        }
        write_report(&report, out)?;
    }
    check_rows(&report)?;
    Ok(report)
}

/// Re-derive `report.json` from `sweep.csv` and `components.json` in `out`.
pub fn report(cfg: &RunConfig, out: &Path) -> Result<Report, AppError> {
    let table = read_csv(&out.join("sweep.csv"))?;
    let text = fs::read_to_string(out.join("components.json"))
        .map_err(|e| AppError::Config(format!("{}: {e}", out.join("components.json").display())))?;
    let comp: serde_json::Value = serde_json::from_str(&text)?;
    let predicted = comp["predicted"].as_f64().ok_or_else(|| AppError::Config("components.json has no predicted value".into()))?;
    let case: LimitCase = serde_json::from_value(comp["case"].clone())?;
    let components = comp["components"]
        .as_array()
        .map(|a| {
            a.iter()
                .map(|c| ComponentSummary {
                    kind: c["kind"].as_str().unwrap_or_default().to_string(),
                    value: c["limit"]["value"].as_f64(),
                    case: serde_json::from_value(c["limit"]["case"].clone()).unwrap_or(LimitCase::Unstable),
                })
                .collect()
        })
        .unwrap_or_default();
    let verdicts = verdicts(&table, predicted, cfg);
    let report = Report {
        predicted,
        case,
        components,
        passed: verdicts.iter().all(|v| v.status != VerdictStatus::Fail),
        table,
        degenerate: Vec::new(),
        verdicts,
    };
    write_report(&report, out)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReduceReport {
    pub family: OrbitFamily,
    pub stations: usize,
    pub lambda: f64,
    pub residual: f64,
    /// Same problem on every other station.
    pub lambda_coarse: f64,
    /// Rayleigh quotient minimized over grid functions constant on orbits.
    pub lambda_2d: Option<f64>,
    pub relative_difference_2d: Option<f64>,
    /// Eigenfunction at the stations, max-normalized.
    pub u: Vec<f64>,
}

/// Largest grid for the 2D constrained cross-check.
const REDUCE_CHECK_MAX_N: usize = 129;
/// Most hat functions spanning the orbit-constant subspace in the 2D check;
/// coarser grids get about one hat per four cells so every hat covers cells.
const REDUCE_CHECK_BASIS: usize = 33;

/// Dump the coarea reduction of the first closed-orbit family and solve the
/// reduced problem; cross-check against a 2D constrained minimization when
/// `n <= 129`.
pub fn reduce(cfg: &RunConfig, out: Option<&Path>) -> Result<(ReduceReport, Vec<crate::dynamics::LimitComponent>), AppError> {
    let p = cfg.problem()?;
    let a = analyze_problem(cfg, &p)?;
    let fam = a
        .components
        .components
        .iter()
        .find_map(|k| if let LimitComponent::ClosedOrbitFamily(f) = k { Some(f.clone()) } else { None })
        .ok_or_else(|| AppError::Config("no closed-orbit family in this configuration".into()))?;
    let w = coarea_weights(&p.field, &p.c, &fam, cfg.family_stations).map_err(AppError::from)?;
    let (fine, _) = reduced_eigen(&w, fam.outer)?;
    let (coarse, _) = reduced_eigen(&w.coarsen(), fam.outer)?;
    let lambda_2d = if cfg.n <= REDUCE_CHECK_MAX_N {
        let t_max = 10.0 * w.period.iter().copied().fold(0.0, f64::max);
        Some(constrained_2d(&p, &fam, cfg.n, t_max)?)
    } else {
        None
    };
    let report = ReduceReport {
        stations: w.len(),
        lambda: fine.lambda,
        residual: fine.residual_norm,
        lambda_coarse: coarse.lambda,
        relative_difference_2d: lambda_2d.map(|l| (l - fine.lambda).abs() / fine.lambda.abs().max(1.0)),
        lambda_2d,
        u: fine.u.clone(),
        family: fam,
    };
    if let Some(out) = out {
        fs::create_dir_all(out)?;
        let mut s = String::from("ell,kappa,mu,gamma\n");
        for k in 0..w.len() {
            let _ = writeln!(s, "{},{},{},{}", w.ell[k], w.kappa[k], w.mu[k], w.gamma[k]);
        }
        fs::write(out.join("weights.csv"), s)?;
        fs::write(out.join("reduce.json"), serde_json::to_string_pretty(&report)?)?;
    }
    Ok((report, a.components.components))
}

/// Smallest Rayleigh quotient of the cell-centered Neumann form
/// `sum w (φ_u - φ_v)^2 + sum c φ^2` over `φ = u(ell(x))`, `u` piecewise linear
/// in the transversal coordinate, restricted to cells on family orbits.
fn constrained_2d(p: &Problem, fam: &OrbitFamily, n: usize, t_max: f64) -> Result<f64, AppError> {
    let grid = Grid::build(&p.domain, n).map_err(|e| AppError::Config(e.to_string()))?;
    let labels: Vec<Option<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|u| orbit_label(&p.field, fam, grid.center(u), t_max, |x| p.domain.contains(x)))
        .collect::<Result<_, _>>()?;
    let m = (n / 4 + 1).clamp(5, REDUCE_CHECK_BASIS);
    let h = fam.ell_max / (m - 1) as f64;
    // Dirichlet outer end: drop the last hat function
    let dim = if fam.outer == FamilyEnd::Dirichlet { m - 1 } else { m };
    let hats = |l: f64| -> [(usize, f64); 2] {
        let s = (l / h).clamp(0.0, (m - 1) as f64);
        let k = (s.floor() as usize).min(m - 2);
        let t = s - k as f64;
        [(k, 1.0 - t), (k + 1, t)]
    };
    let mut stiff = DMatrix::<f64>::zeros(dim, dim);
    let mut mass = DMatrix::<f64>::zeros(dim, dim);
    let add = |mat: &mut DMatrix<f64>, a: &[(usize, f64)], b: &[(usize, f64)], w: f64| {
        for &(i, x) in a {
            for &(j, y) in b {
                if i < dim && j < dim {
                    mat[(i, j)] += w * x * y;
                }
            }
        }
    };
    for u in 0..grid.len() {
        let Some(lu) = labels[u] else { continue };
        let pu = hats(lu);
        let cu = p.c.eval(grid.center(u)).map_err(|e| AppError::Numerical(e.to_string()))?;
        add(&mut mass, &pu, &pu, 1.0);
        add(&mut stiff, &pu, &pu, cu);
        let (i, j) = grid.coords(u);
        for side in [Side::East, Side::North] {
            let Some(v) = grid.neighbor(i, j, side) else { continue };
            let Some(lv) = labels[v] else { continue };
            let hs = grid.spacing(side);
            let w = 1.0 / (hs * hs);
            let pv = hats(lv);
            let neg: Vec<(usize, f64)> = pv.iter().map(|&(k, x)| (k, -x)).collect();
            let diff: Vec<(usize, f64)> = pu.iter().copied().chain(neg).collect();
            add(&mut stiff, &diff, &diff, w);
        }
    }
    let chol = nalgebra::Cholesky::new(mass)
        .ok_or_else(|| AppError::Numerical("orbit-constant basis is degenerate on this grid".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| AppError::Numerical("singular mass factor".into()))?;
    let reduced = &linv * stiff * linv.transpose();
    let sym = (&reduced + reduced.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::from_json(text).unwrap()
    }

    #[test]
    fn constant_potential_sweep_is_flat() {
        let c = cfg(r#"{"field": {"b1": "0", "b2": "0"}, "c": "2.5", "domain": {"kind": "disk", "center": [0, 0], "radius": 1},
                        "a_list": [1, 10, 100], "n": 24, "gap_tol": 1e-8,
                        "degenerate": [{"domain": {"kind": "disk", "center": [0, 0], "radius": 0.999}}]}"#);
        let dir = tempfile::tempdir().unwrap();
        let r = degenerate(&c, Some(dir.path())).unwrap();
        assert_eq!(r.table.len(), 3);
        for row in &r.table {
            assert!((row.lambda.unwrap() - 2.5).abs() < 1e-8 && row.gap.unwrap() < 1e-8, "{row:?}");
        }
        assert!(r.passed, "{:?}", r.verdicts);
        let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(csv.lines().next(), Some(SWEEP_HEADER));
        // verdicts re-derived from the written table agree
        let again = report(&c, dir.path()).unwrap();
        assert_eq!(again.verdicts, r.verdicts);
        assert!(dir.path().join("phase.svg").exists());
    }

    #[test]
    fn verdicts_follow_the_table() {
        let c = cfg(r#"{"field": {"builtin": "rotation"}, "c": "0", "gap_tol": 0.1, "informational_tol": 0.2}"#);
        let row = |a: f64, g: f64| SweepRow { a, lambda: Some(g), residual: Some(0.0), iters: Some(1), gap: Some(g), error: None };
        let v = verdicts(&[row(1.0, 0.5), row(2.0, 0.3), row(3.0, 0.15)], 0.0, &c);
        assert_eq!(v.iter().map(|v| v.status).collect::<Vec<_>>(), vec![
            VerdictStatus::Pass,
            VerdictStatus::Pass,
            VerdictStatus::Informational
        ]);
        let v = verdicts(&[row(1.0, 0.5), row(2.0, 0.05), row(3.0, 0.06)], 0.0, &c);
        assert_eq!(v[1].status, VerdictStatus::Fail);
        let mut broken = row(4.0, 0.0);
        broken.lambda = None;
        broken.gap = None;
        let v = verdicts(&[row(1.0, 0.5), broken.clone(), broken.clone(), row(5.0, 0.01)], 0.0, &c);
        assert_eq!(v[0].status, VerdictStatus::Fail);
    }

    #[test]
    fn rotation_reduction_matches_the_constrained_grid_problem() {
        let c = cfg(r#"{"field": {"builtin": "rotation"}, "c": "x1^2", "n": 64, "family_stations": 65}"#);
        let (r, _) = reduce(&c, None).unwrap();
        let rel = r.relative_difference_2d.unwrap();
        assert!(rel < 0.02, "{} vs {:?}", r.lambda, r.lambda_2d);
    }

    #[test]
    fn config_errors_map_to_exit_code_four() {
        let c = cfg(r#"{"field": {"builtin": "rotation"}, "c": "0"}"#);
        let e = sweep(&c, None).unwrap_err();
        assert_eq!(e.exit_code(), 4);
    }
}
