use crate::config::{Point, RunConfig};
use crate::manifest::RunManifest;
use crate::svg::{line_chart, Series};
use anyhow::{bail, Context, Result};
use std::collections::BTreeMap;
use std::path::Path;
use uavcomp_core::analytics::{
    handoff_prob, upper_bound_curve, with_handoffs_curve, write_curves_csv, CoverageCurve, InversionParams, NofadingCoverage,
};
use uavcomp_core::freqplan::{
    assign_bands, epsilon_star_with_moment, mean_sir_rate, pack_circles, reuse_factor, unit_disc_table, write_count_table_csv,
    write_plan_csv, Region,
};
use uavcomp_core::geometry::{build_delaunay, default_guard, sample_ppp, Rect};
use uavcomp_core::simulator::{
    curve_rows, run_coverage_trials_multi, run_handoff_trials_multi, write_results_csv, ChannelMode, ResultRow,
};

/// Named output files of a run, in creation order.
pub type Files = Vec<(String, Vec<u8>)>;

/// Radii of the unit-disc circle-count table.
pub const TABLE_EPS: [f64; 9] = [0.6, 0.5, 0.4, 0.3, 0.2, 0.15, 0.1, 0.05, 0.025];

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Results CSV with one extra trailing column.
fn with_column(rows: &[ResultRow], name: &str, extra: &[Option<f64>]) -> Result<Vec<u8>> {
    let base = String::from_utf8(csv_bytes(|b| write_results_csv(rows, b))?)?;
    let mut out = String::new();
    for (i, line) in base.lines().enumerate() {
        out.push_str(line);
        out.push(',');
        if i == 0 {
            out.push_str(name);
        } else if let Some(v) = extra[i - 1] {
            out.push_str(&format!("{v:.6}"));
        }
        out.push('\n');
    }
    Ok(out.into_bytes())
}

fn sweep_axis(cfg: &RunConfig) -> (&'static str, fn(&Point) -> f64) {
    if cfg.lambda_per_km2.len() > 1 {
        ("BS density (per km^2)", |p| p.lambda_per_km2)
    } else {
        ("UAV speed (m/s)", |p| p.v_mps)
    }
}

/// Legend text naming the swept values of `p`, leaving out the x-axis one.
fn point_label(cfg: &RunConfig, p: &Point, skip_axis: bool) -> String {
    let lambda_axis = skip_axis && cfg.lambda_per_km2.len() > 1;
    let speed_axis = skip_axis && !lambda_axis;
    let mut parts = Vec::new();
    if cfg.alpha.len() > 1 {
        parts.push(format!("a={}", p.alpha));
    }
    if cfg.m_antennas.len() > 1 {
        parts.push(format!("M={}", p.m_antennas));
    }
    if cfg.lambda_per_km2.len() > 1 && !lambda_axis {
        parts.push(format!("lambda={}", p.lambda_per_km2));
    }
    if cfg.v_mps.len() > 1 && !speed_axis {
        parts.push(format!("v={}", p.v_mps));
    }
    parts.join(" ")
}

/// Handoff rates of every configured scheme at every sweep point, with the analytic rate.
pub fn handoff_files(cfg: &RunConfig, name: &str) -> Result<Files> {
    let mut rows = Vec::new();
    let mut analytic = Vec::new();
    let (xlabel, axis) = sweep_axis(cfg);
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for p in cfg.points() {
        let sc = cfg.scenario(&p, cfg.schemes[0])?;
        let est = run_handoff_trials_multi(&sc, &cfg.schemes)?;
        let an = if cfg.analytic { Some(handoff_prob(&sc.analysis)?) } else { None };
        for (s, e) in cfg.schemes.iter().zip(&est) {
            rows.push(ResultRow {
                scheme: *s,
                lambda_per_km2: p.lambda_per_km2,
                v_mps: p.v_mps,
                gamma_db: None,
                beta: cfg.beta[0],
                freqplan: cfg.r_th,
                estimate: *e,
                seed: cfg.seed,
            });
            analytic.push(an);
            let key = format!("{} {}", s.as_str(), point_label(cfg, &p, true));
            series.entry(key.trim().to_string()).or_default().push((axis(&p), e.mean));
        }
        if let Some(a) = an {
            series.entry(format!("analytic {}", point_label(cfg, &p, true)).trim().to_string()).or_default().push((axis(&p), a));
        }
    }
    let csv = with_column(&rows, "analytic", &analytic)?;
    let series: Vec<Series> = series.into_iter().map(|(name, points)| Series { name, points }).collect();
    let svg = line_chart("Handoff probability", xlabel, "handoff probability", &series);
    Ok(vec![(format!("{name}.csv"), csv), (format!("{name}.svg"), svg.into_bytes())])
}

fn analytic_base(cfg: &RunConfig, p: &Point) -> Result<Option<CoverageCurve>> {
    if !cfg.analytic || cfg.r_th.is_some() {
        return Ok(None);
    }
    let a = cfg.analysis(p)?;
    Ok(Some(match cfg.channel {
        ChannelMode::NoFading => NofadingCoverage::new(&a, &InversionParams::default())?.curve(&a.gamma_grid)?,
        _ => upper_bound_curve(&a)?,
    }))
}

/// Empirical coverage per scheme, threshold and `β`, with the analytic curve combined with the analytic handoff rate.
pub fn coverage_files(cfg: &RunConfig, name: &str) -> Result<Files> {
    let gammas = cfg.gammas_linear();
    let mut rows = Vec::new();
    let mut extra = Vec::new();
    let mut curves = Vec::new();
    let mut series = Vec::new();
    for p in cfg.points() {
        let sc = cfg.scenario(&p, cfg.schemes[0])?;
        let base = analytic_base(cfg, &p)?;
        let p_hoff = match base {
            Some(_) => Some(handoff_prob(&sc.analysis)?),
            None => None,
        };
        let label = point_label(cfg, &p, false);
        if let Some(b) = &base {
            curves.push(b.clone());
        }
        for &beta in &cfg.beta {
            let emp = run_coverage_trials_multi(&sc, &cfg.schemes, &gammas, beta)?;
            let an = match (&base, p_hoff) {
                (Some(b), Some(ph)) => {
                    let c = with_handoffs_curve(b, ph, beta)?;
                    curves.push(c.clone());
                    series.push(Series { name: format!("analytic {label} b={beta}").replace("  ", " "), points: c.gamma_db.iter().copied().zip(c.value.iter().copied()).collect() });
                    Some(c.value)
                }
                _ => None,
            };
            for cu in &emp {
                for (i, r) in curve_rows(&sc, cu).into_iter().enumerate() {
                    rows.push(r);
                    extra.push(an.as_ref().map(|v| v[i]));
                }
                series.push(Series {
                    name: format!("{} {label} b={beta}", cu.scheme.as_str()).replace("  ", " "),
                    points: cu.gamma_db.iter().copied().zip(cu.estimates.iter().map(|e| e.mean)).collect(),
                });
            }
        }
    }
    let mut files = vec![(format!("{name}.csv"), with_column(&rows, "analytic", &extra)?)];
    if !curves.is_empty() {
        files.push((format!("{name}_analytic.csv"), csv_bytes(|b| write_curves_csv(&curves, b))?));
    }
    let svg = line_chart("Coverage probability", "SIR threshold (dB)", "coverage probability", &series);
    files.push((format!("{name}.svg"), svg.into_bytes()));
    Ok(files)
}

/// Interference radius and reuse factor per sweep point, a band plan on one layout, and the unit-disc table.
pub fn freqplan_files(cfg: &RunConfig, name: &str) -> Result<Files> {
    let Some(r_th) = cfg.r_th else {
        bail!("freqplan needs r_th (spectral-efficiency target in nat/s/Hz)");
    };
    let mut summary = String::from("lambda_per_km2,alpha,m_antennas,r_th,h_bar_m,epsilon_m,residual,reuse_factor\n");
    let mut plan_csv = None;
    for p in cfg.points() {
        let a = cfg.analysis(&p)?;
        let h = a.h_bar();
        let m1 = uavcomp_core::analytics::moment_m1_alpha(&a, h, false)?;
        let eps = epsilon_star_with_moment(&a, r_th, h, m1).with_context(|| format!("alpha={} lambda={}/km^2", p.alpha, p.lambda_per_km2))?;
        let residual = (mean_sir_rate(&a, eps, h, m1)? - r_th).abs() / r_th;
        let delta = reuse_factor(a.lambda, eps);
        summary.push_str(&format!("{},{},{},{},{},{:.6},{:.3e},{}\n", p.lambda_per_km2, p.alpha, p.m_antennas, r_th, h, eps, residual, delta));
        if plan_csv.is_none() {
            let layout = sample_ppp(a.lambda, Rect::centered(cfg.window_m), default_guard(a.lambda), cfg.seed)?;
            let tri = build_delaunay(&layout)?;
            let circles = pack_circles(&Region::Rect(layout.region()), eps)?;
            let plan = assign_bands(&tri, &circles)?;
            plan_csv = Some(csv_bytes(|b| write_plan_csv(&plan, b))?);
        }
    }
    let mut files = vec![(format!("{name}_summary.csv"), summary.into_bytes()), (format!("{name}_plan.csv"), plan_csv.expect("at least one sweep point"))];
    files.extend(table1_files()?);
    Ok(files)
}

/// Unit-disc circle counts and bounds as CSV and chart.
pub fn table1_files() -> Result<Files> {
    let rows = unit_disc_table(&TABLE_EPS)?;
    let table = csv_bytes(|b| write_count_table_csv(&rows, b))?;
    let series = vec![
        Series { name: "upper".into(), points: rows.iter().map(|r| (r.epsilon, r.upper.ln())).collect() },
        Series { name: "seamless".into(), points: rows.iter().map(|r| (r.epsilon, (r.seamless as f64).ln())).collect() },
        Series { name: "lattice".into(), points: rows.iter().map(|r| (r.epsilon, (r.lattice as f64).ln())).collect() },
        Series { name: "lower".into(), points: rows.iter().map(|r| (r.epsilon, r.lower.ln())).collect() },
    ];
    let svg = line_chart("Circles filling the unit disc", "circle radius", "ln(count)", &series);
    Ok(vec![("table1.csv".into(), table), ("table1.svg".into(), svg.into_bytes())])
}

/// Write `files` under `out` together with a manifest.
pub fn emit(out: &Path, command: &str, configs: &[&RunConfig], files: Files, started: u64) -> Result<RunManifest> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (name, bytes) in &files {
        let p = out.join(name);
        std::fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
    }
    let m = RunManifest::new(command, configs, files.iter().map(|f| f.0.clone()).collect(), started);
    m.write(&out.join("manifest.json"))?;
    Ok(m)
}

fn preset(text: &str, trials: Option<usize>) -> Result<RunConfig> {
    let mut t = text.to_string();
    if let Some(n) = trials {
        t.push_str(&format!("\ntrials = {n}\n"));
    }
    RunConfig::parse(&t)
}

pub const FIGURES: [&str; 7] = ["fig7", "fig8", "fig9", "fig10", "fig11", "fig12", "table1"];

/// Files and configs of a bundled reproduction preset.
pub fn reproduce_files(id: &str, trials: Option<usize>) -> Result<(Vec<RunConfig>, Files)> {
    let tr = trials.or(Some(100));
    Ok(match id {
        "fig7" => {
            let by_lambda = preset("lambda_per_km2 = 5,10,15,20,25,30\nv_mps = 20\nalpha = 3\n", tr)?;
            let by_speed = preset("lambda_per_km2 = 20\nv_mps = 10,20,30,40,50\nalpha = 3\n", tr)?;
            let mut f = handoff_files(&by_lambda, "fig7_lambda")?;
            f.extend(handoff_files(&by_speed, "fig7_speed")?);
            (vec![by_lambda, by_speed], f)
        }
        "fig8" => {
            let c = preset("alpha = 2.2,3\nm_antennas = 4,8\nbeta = 0.1,0.7\nv_mps = 20\nscheme = delaunay\nquad_tol = 1e-3\n", trials.or(Some(50)))?;
            let f = coverage_files(&c, "fig8")?;
            (vec![c], f)
        }
        "fig9" => {
            let c = preset("alpha = 2.2,2.6,3\nchannel = none\nbeta = 0.1\nv_mps = 9\nscheme = delaunay,voronoi_comp3\n", tr)?;
            let f = coverage_files(&c, "fig9")?;
            (vec![c], f)
        }
        "fig10" => {
            let base = "alpha = 2.6\nbeta = 0\nanalytic = false\nscheme = delaunay\n";
            let runs = [
                ("fig10_h30_70", "h1_m = 30\nh2_m = 70\n"),
                ("fig10_h50", "h1_m = 30\nh2_m = 70\nfixed_height_m = 50\n"),
                ("fig10_h100_150", "h1_m = 100\nh2_m = 150\n"),
                ("fig10_h125", "h1_m = 100\nh2_m = 150\nfixed_height_m = 125\n"),
            ];
            let mut cs = Vec::new();
            let mut f = Vec::new();
            for (name, extra) in runs {
                let c = preset(&format!("{base}{extra}"), tr)?;
                f.extend(coverage_files(&c, name)?);
                cs.push(c);
            }
            (cs, f)
        }
        "fig11" => {
            let planned = preset("alpha = 3\nr_th = 3.5\nbeta = 0.1\nv_mps = 20\nscheme = delaunay\nanalytic = false\n", tr)?;
            let open = preset("alpha = 3\nbeta = 0.1\nv_mps = 20\nscheme = delaunay\nanalytic = false\n", tr)?;
            let mut f = coverage_files(&planned, "fig11_planned")?;
            f.extend(coverage_files(&open, "fig11_unplanned")?);
            let low = preset("alpha = 2.2\nr_th = 0.8\n", tr)?;
            let mut notes = String::from("alpha,r_th,status\n3,3.5,ok\n");
            match freqplan_files(&low, "x") {
                Ok(_) => notes.push_str("2.2,0.8,ok\n"),
                Err(e) => notes.push_str(&format!("2.2,0.8,\"{}\"\n", format!("{e:#}").replace('"', "'"))),
            }
            f.push(("fig11_presets.csv".into(), notes.into_bytes()));
            (vec![planned, open, low], f)
        }
        "fig12" => {
            let c = preset("alpha = 2.6\nbeta = 0,0.5\nv_mps = 40\nscheme = delaunay,voronoi_comp3,voronoi_nocomp\nanalytic = false\n", tr)?;
            let f = coverage_files(&c, "fig12")?;
            (vec![c], f)
        }
        "table1" => (vec![RunConfig::defaults()], table1_files()?),
        other => bail!("unknown figure id '{other}' (expected one of {})", FIGURES.join(", ")),
    })
}
