//! Runs a resolved configuration and renders its outputs in memory.

use serde::Serialize;

use cbmlab_core::duality::{indicator_profile, mean_count_vs_pde, shiga_check};
use cbmlab_core::io::Table;
use cbmlab_core::particles::{cbm_ensemble, kingman_ensemble, simulate_cbm};
use cbmlab_core::pde::{kingman_rate, l1_norm};
use cbmlab_core::rates::{estimate_c1, log_times, rate_report, RateCase, RateRequest};
use cbmlab_core::spde::{spde_mean_check, MeanCheckOptions};
use cbmlab_core::trace::{make_cantor, minkowski_dim_fit, sausage_measure};
use cbmlab_core::{solve_pde, solve_spde, Error, InitialTrace, IntervalSet, Result};

use crate::config::*;

/// Files produced by a run plus the lines printed to stdout.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Vec<String>,
}

impl Outputs {
    fn table(&mut self, stem: &str, format: Format, table: &Table) {
        let body = match format {
            Format::Csv => table.to_csv(),
            Format::Json => table.to_json(),
        };
        self.files.push((format!("{stem}.{}", format.ext()), body.into_bytes()));
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut s = serde_json::to_string_pretty(value).expect("serialisable");
        s.push('\n');
        self.files.push((name.to_string(), s.into_bytes()));
    }

    fn say(&mut self, line: String) {
        self.summary.push(line);
    }
}

/// Sample grid values every `stride` nodes.
fn field_table(field: &cbmlab_core::Field, stride: usize, value: &str) -> Table {
    let mut t = Table::new(&["t", "x", value]);
    for (k, &time) in field.t_grid.iter().enumerate() {
        let row = field.row(k);
        for i in (0..field.nx).step_by(stride.max(1)) {
            t.push(vec![time.into(), field.x(i).into(), row[i].into()]);
        }
    }
    t
}

pub fn execute(config: &RunConfig) -> Result<Outputs> {
    let mut out = Outputs::default();
    let fmt = config.format;
    match &config.command {
        CommandConfig::Pde(run) => {
            let params = run.params.refined(run.level);
            let field = solve_pde(&run.trace, &params, &run.times)?;
            let mut l1 = Table::new(&["t", "l1", "sqrt_t_l1", "t_l1"]);
            for &t in &run.times {
                let m = l1_norm(&field, t)?;
                l1.push(vec![t.into(), m.into(), (t.sqrt() * m).into(), (t * m).into()]);
                out.say(format!("t={t} l1={m} sqrt_t_l1={}", t.sqrt() * m));
            }
            out.table("field", fmt, &field_table(&field, run.stride, "v"));
            out.table("l1", fmt, &l1);
        }
        CommandConfig::Spde(run) => {
            let f0 = indicator_profile(&run.params, run.window, run.eps);
            let field = solve_spde(&f0, &run.params, &run.times)?;
            out.table("field", fmt, &field_table(&field, 1, "u"));
            if let Some(mc) = &run.mean_check {
                let options = MeanCheckOptions {
                    reference: mc.reference,
                    threshold: mc.threshold,
                };
                for &t in &run.times {
                    let report = spde_mean_check(&f0, t, mc.runs, &run.params, &options)?;
                    let mut tab = Table::new(&["x", "mean", "se", "reference", "z"]);
                    for i in 0..report.mc_mean.len() {
                        tab.push(vec![
                            run.params.x(i).into(),
                            report.mc_mean[i].into(),
                            report.mc_se[i].into(),
                            report.reference[i].into(),
                            report.z[i].map_or("".into(), Into::into),
                        ]);
                    }
                    out.table(&format!("mean_check_t{t}"), fmt, &tab);
                    out.say(format!(
                        "t={t} runs={} max_z={} cells={}",
                        report.n_runs, report.max_z, report.cells_checked
                    ));
                }
            }
        }
        CommandConfig::Cbm(run) if run.replicas == 1 => {
            let r = simulate_cbm(&run.config)?;
            let mut tab = Table::new(&["t", "N"]);
            for (t, n) in r.times.iter().zip(&r.alive_counts) {
                tab.push(vec![(*t).into(), (*n).into()]);
            }
            out.table("counts", fmt, &tab);
            let mut ev = Table::new(&["time", "survivor", "killed"]);
            for e in &r.events {
                ev.push(vec![e.time.into(), e.survivor.into(), e.killed.into()]);
            }
            out.table("events", fmt, &ev);
            let mut wt = Table::new(&["lo", "hi", "t", "count"]);
            for (w, counts) in run.config.windows.iter().zip(&r.window_counts) {
                for (t, c) in r.report_times.iter().zip(counts) {
                    wt.push(vec![w.0.into(), w.1.into(), (*t).into(), (*c).into()]);
                }
            }
            out.table("windows", fmt, &wt);
            out.say(format!(
                "t={} alive={} merges={}",
                r.times[r.times.len() - 1],
                r.alive_counts[r.alive_counts.len() - 1],
                r.events.len()
            ));
        }
        CommandConfig::Cbm(run) => {
            let (counts, windows) = cbm_ensemble(&run.config, run.replicas)?;
            let mut tab = Table::new(&["t", "mean", "se"]);
            for k in 0..counts.times.len() {
                tab.push(vec![counts.times[k].into(), counts.mean[k].into(), counts.se[k].into()]);
            }
            out.table("counts", fmt, &tab);
            let mut wt = Table::new(&["lo", "hi", "t", "mean", "se"]);
            for (w, s) in run.config.windows.iter().zip(&windows) {
                for k in 0..s.times.len() {
                    wt.push(vec![
                        w.0.into(),
                        w.1.into(),
                        s.times[k].into(),
                        s.mean[k].into(),
                        s.se[k].into(),
                    ]);
                }
            }
            out.table("windows", fmt, &wt);
            let last = counts.mean.len() - 1;
            out.say(format!(
                "replicas={} t={} mean_alive={}",
                run.replicas, counts.times[last], counts.mean[last]
            ));
        }
        CommandConfig::Kingman(run) => {
            if run.times.iter().any(|&t| !(t > 0.0) || t > run.horizon) {
                return Err(Error::Parameter("times must lie in (0, horizon]".into()));
            }
            let s = kingman_ensemble(run.n, &run.times, config.seed, run.replicas)?;
            let mut tab = Table::new(&["t", "mean", "se", "target", "rel_err"]);
            let mut worst: f64 = 0.0;
            for k in 0..s.times.len() {
                let target = kingman_rate(s.times[k]);
                let rel = s.mean[k] / target - 1.0;
                worst = worst.max(rel.abs());
                tab.push(vec![
                    s.times[k].into(),
                    s.mean[k].into(),
                    s.se[k].into(),
                    target.into(),
                    rel.into(),
                ]);
            }
            out.table("counts", fmt, &tab);
            out.say(format!("n={} replicas={} max_rel_err_vs_2/t={worst}", run.n, run.replicas));
        }
        CommandConfig::Duality(DualityRun::Shiga(c)) => {
            let report = shiga_check(c)?;
            out.say(format!(
                "lhs={}±{} rhs={}±{} z={}",
                report.lhs_mean, report.lhs_se, report.rhs_mean, report.rhs_se, report.z
            ));
            out.json("duality.json", &report);
        }
        CommandConfig::Duality(DualityRun::MeanCount(m)) => {
            let rows = mean_count_vs_pde(&m.cbm, &m.trace, m.window, &m.times, m.replicas, &m.pde)?;
            let mut tab = Table::new(&["t", "mean_count", "count_se", "pde_integral", "ratio"]);
            for r in &rows {
                tab.push(vec![
                    r.t.into(),
                    r.mean_count.into(),
                    r.count_se.into(),
                    r.pde_integral.into(),
                    r.ratio.map_or("".into(), Into::into),
                ]);
                let ratio = r.ratio.map_or("n/a".to_string(), |x| x.to_string());
                out.say(format!("t={} mean_count={} pde={} ratio={ratio}", r.t, r.mean_count, r.pde_integral));
            }
            out.table("mean_count", fmt, &tab);
        }
        CommandConfig::Rates(RatesRun::C1 { params, levels }) => {
            let est = estimate_c1(params, levels)?;
            out.say(format!("c1={} estimates={:?}", est.extrapolated, est.estimates));
            out.json("c1.json", &est);
        }
        CommandConfig::Rates(run) => {
            let (trace, case, times, request_window, tolerance, t_check, c1, params) = match run {
                RatesRun::FiniteSet { points, t_check, tolerance, c1, params } => {
                    let set = IntervalSet::new(points.iter().map(|&p| (p, p)))?;
                    let count = set.len();
                    (
                        InitialTrace::singular(set),
                        RateCase::FiniteSet { count },
                        log_times(t_check / 100.0, *t_check, 9),
                        (0.0, 0.0),
                        *tolerance,
                        *t_check,
                        *c1,
                        params,
                    )
                }
                RatesRun::Interval { a, b, t_check, tolerance, params } => (
                    InitialTrace::singular(IntervalSet::new([(*a, *b)])?),
                    RateCase::Interval { length: b - a },
                    log_times(t_check / 100.0, *t_check, 9),
                    (0.0, 0.0),
                    *tolerance,
                    *t_check,
                    0.0,
                    params,
                ),
                RatesRun::Cantor { depth, window, points, tolerance, params } => {
                    if !(window.0 > 0.0 && window.1 > window.0) || *points < 2 {
                        return Err(Error::Parameter("invalid fit window".into()));
                    }
                    (
                        InitialTrace::singular(make_cantor(*depth)?),
                        RateCase::Cantor { depth: *depth },
                        log_times(window.0, window.1, *points),
                        *window,
                        *tolerance,
                        window.1,
                        0.0,
                        params,
                    )
                }
                RatesRun::C1 { .. } => unreachable!(),
            };
            if !(t_check > 0.0) {
                return Err(Error::Parameter("t_check must be positive".into()));
            }
            let field = solve_pde(&trace, params, &times)?;
            let request = RateRequest {
                case,
                t_check,
                window: request_window,
                tolerance,
                c1,
            };
            let verdict = rate_report(&request, &field, params.t_init)?;
            let mut tab = Table::new(&["case", "measured", "target", "tolerance", "pass"]);
            tab.push(vec![
                verdict.case.clone().into(),
                verdict.measured.into(),
                verdict.target.into(),
                verdict.tolerance.into(),
                verdict.pass.into(),
            ]);
            out.table("verdict", fmt, &tab);
            let mut l1 = Table::new(&["t", "l1"]);
            for &t in &times {
                l1.push(vec![t.into(), l1_norm(&field, t)?.into()]);
            }
            out.table("l1", fmt, &l1);
            out.say(format!(
                "{} measured={} target={} pass={}",
                verdict.case, verdict.measured, verdict.target, verdict.pass
            ));
        }
        CommandConfig::Cantor(run) => {
            let set = make_cantor(run.depth)?;
            let fit = minkowski_dim_fit(&set, &run.radii)?;
            let mut tab = Table::new(&["r", "measure"]);
            for &r in &run.radii {
                tab.push(vec![r.into(), sausage_measure(&set, r)?.into()]);
            }
            out.table("sausage", fmt, &tab);
            out.say(format!("depth={} dimension={} r2={}", run.depth, fit.exponent, fit.r_squared));
            out.json("fit.json", &fit);
        }
    }
    Ok(out)
}
