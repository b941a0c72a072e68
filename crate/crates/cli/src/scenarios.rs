use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use pilotwave::conditional::{ewf_diagnostic, ewf_samples, run_cwf_pipeline, CorrelationMode, CwfSettings, EwfThresholds};
use pilotwave::measurement::{weak_value_protocol, PointerConfig, StrongMeasurement, WeakRun, WeakSettings};
use pilotwave::observables::{
    dwell_time, ensemble_expectation, ensemble_work, expected_dwell, gauss_current, local_expectation, total_current, two_time_correlation, Device,
    Estimate, LocalExpectationField, OperatorRep, RegionSpec,
};
use pilotwave::openquantum::{density_sanity, partial_trace_oracle, reduced_density, series_gap, unravel, CollisionSpec};
use pilotwave::trajectories::{count_crossings, quantile_histogram_l1, sample_initial, Ensemble};
use pilotwave::wavefield::{write_snapshot, Wavefunction};
use pilotwave::{Error, Result};
use serde_json::{json, Value};

use crate::build::{self, World};
use crate::config::{CollisionModel, EnsembleConfig, PointerSettings, ScenarioConfig, Task, TimeConfig};
use crate::output::{Cell, Col, Outcome, Table};

fn time_of(cfg: &ScenarioConfig) -> Result<TimeConfig> {
    cfg.time.ok_or_else(|| Error::Configuration(format!("kind '{}' needs a [time] section", cfg.kind)))
}

fn ensemble_of(cfg: &ScenarioConfig) -> Result<EnsembleConfig> {
    cfg.ensemble.ok_or_else(|| Error::Configuration(format!("kind '{}' needs an [ensemble] section", cfg.kind)))
}

fn keep(n: usize, time: &TimeConfig) -> bool {
    n.is_multiple_of(time.record_every) || n == time.steps
}

fn estimate_json(e: &Estimate) -> Value {
    json!({ "value": e.value, "std_error": e.std_error, "n": e.n, "flagged": e.flagged })
}

fn position_columns(dim: usize) -> Vec<(&'static str, Col)> {
    if dim == 1 {
        vec![("x", Col::F64)]
    } else {
        vec![("x", Col::F64), ("y", Col::F64)]
    }
}

fn position_cells(p: [f64; 2], dim: usize) -> Vec<Cell> {
    p[..dim].iter().map(|&v| Cell::F(v)).collect()
}

fn owned_table(name: &str, columns: &[(String, Col)]) -> Table {
    let cols: Vec<(&str, Col)> = columns.iter().map(|(n, c)| (n.as_str(), *c)).collect();
    Table::new(name, &cols)
}

fn trajectory_table(ens: &Ensemble, time: &TimeConfig) -> Table {
    let mut cols = vec![("xi", Col::U64), ("step", Col::U64), ("t", Col::F64)];
    cols.extend(position_columns(ens.dim));
    let mut t = Table::new("trajectories", &cols);
    for tr in &ens.trajectories {
        for (n, p) in tr.positions.iter().enumerate().filter(|(n, _)| keep(*n, time)) {
            let mut row = vec![tr.label.into(), n.into(), ens.time(n).into()];
            row.extend(position_cells(*p, ens.dim));
            t.push(row);
        }
    }
    t
}

fn ensemble_warnings(out: &mut Outcome, ens: &Ensemble) {
    if ens.failed_count() > 0 {
        out.warn(format!("{} trajectories entered low-density nodes and were dropped", ens.failed_count()));
    }
    if ens.reflection_count() > 0 {
        out.warn(format!("{} wall reflections were applied to trajectories", ens.reflection_count()));
    }
}

fn world_warnings(out: &mut Outcome, w: &World) {
    for msg in w.h0.warnings() {
        out.warn(msg.clone());
    }
}

fn evolve(cfg: &ScenarioConfig, w: &World) -> Result<Outcome> {
    let time = time_of(cfg)?;
    let dim = w.grid.dim();
    let mut cols = vec![("step", Col::U64), ("t", Col::F64), ("norm", Col::F64), ("energy", Col::F64), ("mean_x", Col::F64), ("var_x", Col::F64)];
    if dim == 2 {
        cols.extend([("mean_y", Col::F64), ("var_y", Col::F64)]);
    }
    let mut table = Table::new("observables", &cols);
    let n0 = w.psi0.norm();
    let e0 = w.h0.expectation(w.psi0.amplitudes()).re / w.psi0.norm_sqr();
    let (mut norm_drift, mut energy_drift) = (0.0f64, 0.0f64);
    let psi = w.propagate(cfg, &time, None, |n, psi| {
        let norm = psi.norm();
        let e = w.h0.expectation(psi.amplitudes()).re / psi.norm_sqr();
        norm_drift = norm_drift.max((norm - n0).abs());
        energy_drift = energy_drift.max((e - e0).abs() / e0.abs().max(f64::MIN_POSITIVE));
        if keep(n, &time) {
            let mut row = vec![n.into(), psi.time().into(), norm.into(), e.into(), psi.mean(0).into(), psi.variance(0).into()];
            if dim == 2 {
                row.extend([Cell::F(psi.mean(1)), Cell::F(psi.variance(1))]);
            }
            table.push(row);
        }
        Ok(())
    })?;
    let mut out = Outcome::default();
    world_warnings(&mut out, w);
    out.set("steps", time.steps);
    out.set("final_time", psi.time());
    out.set("norm_drift", norm_drift);
    out.set("energy_drift_relative", energy_drift);
    out.set("time_dependent", w.spec.potential.is_time_dependent());
    out.tables.push(table);
    out.files.push(("final_state.psi".into(), write_snapshot(&psi, &cfg.units)));
    Ok(out)
}

/// Deterministic, well-spread index pairs.
fn index_pairs(n: usize, count: usize) -> Vec<(usize, usize)> {
    if n < 2 {
        return Vec::new();
    }
    (0..count)
        .map(|k| {
            let a = (k * 7919) % n;
            let mut b = (k * 104_729 + n / 2 + 1) % n;
            if a == b {
                b = (b + 1) % n;
            }
            (a, b)
        })
        .collect()
}

fn trajectories(cfg: &ScenarioConfig, w: &World) -> Result<Outcome> {
    let time = time_of(cfg)?;
    let ec = ensemble_of(cfg)?;
    let mut ens = sample_initial(&w.psi0, ec.size, cfg.seed)?;
    let l1_initial = quantile_histogram_l1(&ens.positions_at(0), &w.psi0, 0, ec.histogram_bins);
    let psi = w.propagate(cfg, &time, Some((&mut ens, ec.substeps)), |_, _| Ok(()))?;
    let l1_final = quantile_histogram_l1(&ens.positions_at(time.steps), &psi, 0, ec.histogram_bins);
    let mut out = Outcome::default();
    world_warnings(&mut out, w);
    ensemble_warnings(&mut out, &ens);
    out.set("trajectories", ens.len());
    out.set("failed", ens.failed_count());
    out.set("histogram_l1_initial", l1_initial);
    out.set("histogram_l1_final", l1_final);
    out.set("histogram_l1_ratio", l1_final / l1_initial);
    if w.grid.dim() == 1 {
        let pairs = index_pairs(ens.len(), ec.crossing_pairs);
        out.set("crossing_pairs", pairs.len());
        out.set("crossings", count_crossings(&ens, &pairs));
    }
    out.tables.push(trajectory_table(&ens, &time));
    Ok(out)
}

fn cwf(cfg: &ScenarioConfig, w: &World, starts: &[[f64; 2]], mode: CorrelationMode) -> Result<Outcome> {
    let time = time_of(cfg)?;
    let mut out = Outcome::default();
    world_warnings(&mut out, w);
    if cfg.potential.absorber.is_some() {
        out.warn("the absorber is not applied to conditional-wavefunction runs");
    }
    let settings = CwfSettings { dt: time.dt, steps: time.steps, mode, record_every: 0 };
    let run = run_cwf_pipeline(&w.psi0, &w.spec, starts, &settings)?;
    let mut table = Table::new(
        "cwf_error",
        &[("label", Col::U64), ("step", Col::U64), ("t", Col::F64), ("y", Col::F64), ("error", Col::F64), ("norm", Col::F64)],
    );
    for tr in &run.traces {
        for (n, s) in tr.steps.iter().enumerate().filter(|(n, _)| keep(*n, &time)) {
            table.push(vec![tr.label.into(), n.into(), s.time.into(), s.y.into(), s.error.into(), s.norm.into()]);
        }
    }
    ensemble_warnings(&mut out, &run.ensemble);
    out.set("mode", if mode == CorrelationMode::Convective { "convective" } else { "channels" });
    out.set("max_error", run.max_error());
    out.set("trace_max_error", run.traces.iter().map(|t| t.max_error()).collect::<Vec<_>>());
    out.set("final_norm", run.final_state.norm());
    out.tables.push(table);
    Ok(out)
}

fn field_table(name: &str, field: &LocalExpectationField) -> Table {
    let dim = field.grid.dim();
    let mut cols = position_columns(dim);
    cols.extend([("re", Col::F64), ("im", Col::F64), ("flagged", Col::Bool)]);
    let mut t = Table::new(name, &cols);
    for k in 0..field.grid.len() {
        let mut row = position_cells(field.grid.point(k), dim);
        row.extend([Cell::F(field.complex[k].re), Cell::F(field.complex[k].im), Cell::B(field.flags[k])]);
        t.push(row);
    }
    t
}

/// State at `step`, stepping from ψ0 when needed.
fn state_at(cfg: &ScenarioConfig, w: &World, step: usize) -> Result<Wavefunction> {
    if step == 0 {
        return Ok(w.psi0.clone());
    }
    let time = TimeConfig { steps: step, ..time_of(cfg)? };
    w.propagate(cfg, &time, None, |_, _| Ok(()))
}

fn observable(cfg: &ScenarioConfig, w: &World, name: crate::config::OperatorName, step: usize) -> Result<Outcome> {
    let psi = state_at(cfg, w, step)?;
    let h = build::hamiltonian_at(cfg, &w.spec, &w.grid, psi.time())?;
    let op = build::operator(name, &w.grid, cfg, &h)?;
    let field = local_expectation(&psi, &op)?;
    let quadrature = op.expectation(psi.amplitudes()).re;
    let integral = field.weighted_integral(&psi).re;
    let mut out = Outcome::default();
    world_warnings(&mut out, w);
    let flagged = field.flags.iter().filter(|f| **f).count();
    if flagged > 0 {
        out.warn(format!("{flagged} low-density nodes are flagged in the local expectation field"));
    }
    out.set("operator", op.label.clone());
    out.set("time", psi.time());
    out.set("quadrature", quadrature);
    out.set("field_integral", integral);
    out.set("quadrature_difference", (quadrature - integral).abs());
    out.set("unflagged_variance", field.unflagged_variance());
    out.set("flagged_nodes", flagged);
    if let Some(ec) = cfg.ensemble {
        let ens = sample_initial(&psi, ec.size, cfg.seed)?;
        let est = ensemble_expectation(&ens, &field, 0)?;
        out.set("ensemble", estimate_json(&est));
        out.set("ensemble_within_4se", est.agrees_with(quadrature, 4.0));
    }
    out.tables.push(field_table("local_expectation", &field));
    Ok(out)
}

fn pointer_config(cfg: &ScenarioConfig, p: &PointerSettings) -> Result<PointerConfig> {
    let mut pc = PointerConfig::new(p.center, p.width, p.strength, p.window)?;
    if let Some(m) = p.mass {
        pc = pc.with_mass(m, p.steps)?;
    }
    pc.hbar = cfg.hbar();
    if let Some(s) = cfg.tolerances.pointer_separation {
        pc.min_separation = s;
    }
    if let Some(o) = cfg.tolerances.pointer_overlap {
        pc.max_overlap = o;
    }
    pc.validate()?;
    Ok(pc)
}

fn weak_json(run: &WeakRun) -> Value {
    json!({
        "strength": run.strength,
        "estimate": estimate_json(&run.estimate),
        "accepted": run.accepted,
        "acceptance_rate": run.acceptance_rate,
        "expected": run.expected,
        "bias": run.bias,
    })
}

fn weakvalue(cfg: &ScenarioConfig, w: &World) -> Result<Outcome> {
    let Task::WeakValue { operator, pointer, bin_center, bin_width, runs, comparison_factor, max_bin_width } = &cfg.task else {
        unreachable!("dispatched on kind")
    };
    let op = build::operator(*operator, &w.grid, cfg, &w.h0)?;
    let pc = pointer_config(cfg, pointer)?;
    let mut ws = WeakSettings::new(*bin_center, *bin_width, *runs, cfg.seed);
    ws.comparison_factor = *comparison_factor;
    ws.max_bin_width = *max_bin_width;
    if let Some(k) = cfg.tolerances.weakness {
        ws.weakness = k;
    }
    let rep = weak_value_protocol(&w.psi0, &op, &pc, &ws)?;
    let mut table =
        Table::new("weak_runs", &[("strength", Col::F64), ("run", Col::U64), ("z_b", Col::F64), ("z_x", Col::F64), ("accepted", Col::Bool)]);
    for run in [&rep.primary, &rep.comparison] {
        for r in &run.table {
            table.push(vec![run.strength.into(), r.run.into(), r.z_b.into(), r.z_x.into(), r.accepted.into()]);
        }
    }
    let est = rep.primary.estimate;
    let tolerance = 0.05 * rep.local_value.abs() + 4.0 * est.std_error;
    let mut out = Outcome::default();
    world_warnings(&mut out, w);
    out.set("local_value", rep.local_value);
    out.set("reference", rep.reference);
    out.set("primary", weak_json(&rep.primary));
    out.set("comparison", weak_json(&rep.comparison));
    out.set("bias_shrinks", rep.bias_shrinks);
    out.set("matches_local_value", (est.value - rep.local_value).abs() <= tolerance);
    out.tables.push(table);
    Ok(out)
}

fn matrix(rows: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

fn strongmeasure(cfg: &ScenarioConfig) -> Result<Outcome> {
    let Task::StrongMeasure { state, operator, pointer, runs, repeat } = &cfg.task else { unreachable!("dispatched on kind") };
    let psi = DVector::from_vec(state.clone());
    let norm = psi.norm();
    if !(norm > 0.0) {
        return Err(Error::Configuration("levels.state is zero".into()));
    }
    let psi = psi / Complex64::new(norm, 0.0);
    let b = OperatorRep::level_matrix(matrix(operator), "B")?;
    let pc = pointer_config(cfg, pointer)?;
    let setup = StrongMeasurement::prepare(&psi, &b, &pc)?;
    let records = (0..*runs as u64).map(|r| setup.sample(cfg.seed, r)).collect::<Result<Vec<_>>>()?;
    let k = setup.spaces.len();
    let born: Vec<f64> = setup.spaces.iter().map(|s| s.vectors.iter().map(|v| v.dotc(&psi).norm_sqr()).sum::<f64>()).collect();
    let mut counts = vec![0usize; k];
    for r in &records {
        counts[r.outcome] += 1;
    }
    let n = *runs as f64;
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let within = (0..k).all(|i| (freqs[i] - born[i]).abs() <= 4.0 * (born[i] * (1.0 - born[i]) / n).sqrt() + 1e-12);

    let mut table = Table::new(
        "outcomes",
        &[
            ("run", Col::U64),
            ("outcome", Col::U64),
            ("value", Col::F64),
            ("pointer", Col::F64),
            ("probability", Col::F64),
            ("repeat_outcome", Col::U64),
        ],
    );
    let mut repeated = 0usize;
    for (i, r) in records.iter().enumerate() {
        let again = if i < *repeat {
            let second = StrongMeasurement::prepare(&r.post, &b, &pc)?.sample(cfg.seed, *runs as u64 + r.run)?;
            repeated += usize::from(second.outcome == r.outcome);
            Cell::U(second.outcome as u64)
        } else {
            Cell::None
        };
        table.push(vec![r.run.into(), r.outcome.into(), r.value.into(), r.pointer.into(), r.probability.into(), again]);
    }
    let mut out = Outcome::default();
    out.set("eigenvalues", setup.spaces.iter().map(|s| s.value).collect::<Vec<_>>());
    out.set("born", born);
    out.set("envelope_probabilities", setup.probabilities.clone());
    out.set("frequencies", freqs);
    out.set("born_within_4se", within);
    out.set("envelope_overlap", setup.overlap);
    out.set("repeat_runs", *repeat);
    out.set("repeatability", if *repeat > 0 { repeated as f64 / *repeat as f64 } else { 1.0 });
    out.tables.push(table);
    Ok(out)
}

fn ensemble_run(
    cfg: &ScenarioConfig,
    w: &World,
    steps: usize,
    mut observer: impl FnMut(usize, &Wavefunction) -> Result<()>,
) -> Result<(TimeConfig, Ensemble, Wavefunction)> {
    let time = TimeConfig { steps, ..time_of(cfg)? };
    let ec = ensemble_of(cfg)?;
    let mut ens = sample_initial(&w.psi0, ec.size, cfg.seed)?;
    let psi = w.propagate(cfg, &time, Some((&mut ens, ec.substeps)), &mut observer)?;
    Ok((time, ens, psi))
}

fn correlate(cfg: &ScenarioConfig, w: &World) -> Result<Outcome> {
    let Task::Correlate { b, f, t1_step, t2_step } = cfg.task else { unreachable!("dispatched on kind") };
    let record_every = time_of(cfg)?.record_every;
    let b_op = build::operator(b, &w.grid, cfg, &w.h0)?;
    let f_op = build::operator(f, &w.grid, cfg, &w.h0)?;
    let mut f_field = None;
    let mut b_fields = Vec::new();
    let (_, ens, _) = ensemble_run(cfg, w, t2_step, |n, psi| {
        if n == t1_step {
            f_field = Some(local_expectation(psi, &f_op)?);
        }
        if n >= t1_step && ((n - t1_step).is_multiple_of(record_every) || n == t2_step) {
            b_fields.push((n, local_expectation(psi, &b_op)?));
        }
        Ok(())
    })?;
    let f_field = f_field.ok_or_else(|| Error::Evaluation("t1 was never reached".into()))?;
    let mut table = Table::new(
        "correlation",
        &[("t1", Col::F64), ("t2", Col::F64), ("value", Col::F64), ("std_error", Col::F64), ("n", Col::U64), ("flagged", Col::U64)],
    );
    let mut last = None;
    for (n, field) in &b_fields {
        let est = two_time_correlation(&ens, field, *n, &f_field, t1_step)?;
        table.push(vec![ens.time(t1_step).into(), ens.time(*n).into(), est.value.into(), est.std_error.into(), est.n.into(), est.flagged.into()]);
        last = Some(est);
    }
    let mut out = Outcome::default();
    world_warnings(&mut out, w);
    ensemble_warnings(&mut out, &ens);
    out.set("b", b_op.label.clone());
    out.set("f", f_op.label.clone());
    if let Some(est) = last {
        out.set("final", estimate_json(&est));
    }
    out.tables.push(table);
    Ok(out)
}

fn work(cfg: &ScenarioConfig, w: &World) -> Result<Outcome> {
    let Task::Work { from_step, to_step } = cfg.task else { unreachable!("dispatched on kind") };
    let mid = (from_step + to_step) / 2;
    let dt = time_of(cfg)?.dt;
    let mut fields: Vec<(usize, LocalExpectationField)> = Vec::new();
    let (_, ens, _) = ensemble_run(cfg, w, to_step, |n, psi| {
        if n == from_step || n == mid || n == to_step {
            let h = build::hamiltonian_at(cfg, &w.spec, &w.grid, n as f64 * dt)?;
            fields.push((n, local_expectation(psi, &OperatorRep::hamiltonian(&h)?)?));
        }
        Ok(())
    })?;
    let field = |s: usize| &fields.iter().find(|(n, _)| *n == s).expect("field stored for every work endpoint").1;
    let (per, est) = ensemble_work(&ens, field(from_step), from_step, field(to_step), to_step)?;
    let (first, _) = ensemble_work(&ens, field(from_step), from_step, field(mid), mid)?;
    let (second, _) = ensemble_work(&ens, field(mid), mid, field(to_step), to_step)?;
    let defect = (0..per.len()).filter_map(|i| Some((first[i]? + second[i]? - per[i]?).abs())).fold(0.0, f64::max);
    let mut table = Table::new("work", &[("xi", Col::U64), ("work", Col::F64)]);
    for (tr, wk) in ens.trajectories.iter().zip(&per) {
        table.push(vec![tr.label.into(), (*wk).into()]);
    }
    let mut out = Outcome::default();
    world_warnings(&mut out, w);
    ensemble_warnings(&mut out, &ens);
    out.set("work", estimate_json(&est));
    out.set("time_dependent", w.spec.potential.is_time_dependent());
    out.set("zero_within_4se", est.agrees_with(0.0, 4.0));
    out.set("telescoping_defect", defect);
    out.tables.push(table);
    Ok(out)
}

fn dwell(cfg: &ScenarioConfig, w: &World, region: &[(f64, f64)]) -> Result<Outcome> {
    let region = RegionSpec::new(region.to_vec(), &w.grid)?;
    let steps = time_of(cfg)?.steps;
    let mut occupancy = Vec::with_capacity(steps + 1);
    let (time, ens, _) = ensemble_run(cfg, w, steps, |_, psi| {
        occupancy.push(region.probability(psi));
        Ok(())
    })?;
    let report = expected_dwell(&ens, &occupancy, &region)?;
    let mut per = Table::new("dwell", &[("xi", Col::U64), ("dwell_time", Col::F64)]);
    for tr in &ens.trajectories {
        let v = (!tr.failed).then(|| dwell_time(tr, ens.dt, &region));
        per.push(vec![tr.label.into(), v.into()]);
    }
    let mut occ = Table::new("occupancy", &[("step", Col::U64), ("t", Col::F64), ("occupancy", Col::F64)]);
    for (n, p) in occupancy.iter().enumerate().filter(|(n, _)| keep(*n, &time)) {
        occ.push(vec![n.into(), ens.time(n).into(), (*p).into()]);
    }
    let mut out = Outcome::default();
    world_warnings(&mut out, w);
    ensemble_warnings(&mut out, &ens);
    for msg in &report.warnings {
        out.warn(msg.clone());
    }
    out.set("trajectory_estimate", estimate_json(&report.trajectory));
    out.set("density_estimate", report.density);
    out.set("relative_difference", report.relative_difference);
    out.set("final_occupancy", report.final_occupancy);
    out.tables.extend([per, occ]);
    Ok(out)
}

fn current(cfg: &ScenarioConfig, w: &World) -> Result<Outcome> {
    let Task::Current { length, permittivity, charge, surfaces } = &cfg.task else { unreachable!("dispatched on kind") };
    let device = Device::new(*length, *permittivity, *charge)?;
    let (_, ens, _) = ensemble_run(cfg, w, time_of(cfg)?.steps, |_, _| Ok(()))?;
    let rs = total_current(&ens, surfaces[0], &device)?;
    let gauss: Vec<_> = surfaces.iter().map(|&s| gauss_current(&ens, s, &device)).collect::<Result<_>>()?;
    let dt = ens.dt;
    let mut columns = vec![("t".to_string(), Col::F64), ("ramo_shockley".to_string(), Col::F64), ("ramo_shockley_se".to_string(), Col::F64)];
    columns.extend((0..surfaces.len()).map(|k| (format!("gauss_{k}"), Col::F64)));
    let mut table = owned_table("current", &columns);
    for n in 0..rs.times.len() {
        let mut row = vec![rs.times[n].into(), rs.mean[n].into(), rs.std_error[n].into()];
        row.extend(gauss.iter().map(|g| Cell::F(g.mean[n])));
        table.push(row);
    }
    let charges: Vec<f64> = (0..rs.per_trajectory.len()).map(|k| rs.transferred_charge(k, dt)).collect();
    let transferred = Estimate::from_samples(&charges, 0)?;
    let rs_total = rs.mean.iter().sum::<f64>() * dt;
    let scale = rs.mean.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let per_surface: Vec<Value> = surfaces
        .iter()
        .zip(&gauss)
        .map(|(s, g)| {
            let total = g.mean.iter().sum::<f64>() * dt;
            let pointwise = rs.mean.iter().zip(&g.mean).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            json!({
                "surface": s,
                "transferred_charge": total,
                "relative_charge_difference": (total - rs_total).abs() / rs_total.abs().max(f64::MIN_POSITIVE),
                "max_pointwise_difference_relative": pointwise / scale.max(f64::MIN_POSITIVE),
            })
        })
        .collect();
    let mut out = Outcome::default();
    world_warnings(&mut out, w);
    ensemble_warnings(&mut out, &ens);
    out.set("transferred_charge", estimate_json(&transferred));
    out.set("charge_relative_error", (transferred.value - charge).abs() / charge.abs());
    out.set("surfaces", per_surface);
    out.tables.push(table);
    Ok(out)
}

fn sigma_x(omega: f64) -> DMatrix<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    let w = Complex64::new(omega, 0.0);
    DMatrix::from_row_slice(2, 2, &[z, w, w, z])
}

fn collision_spec(cfg: &ScenarioConfig, model: &CollisionModel, interval: f64) -> Result<CollisionSpec> {
    let mut spec = match model {
        CollisionModel::PartialSwap { theta, drift } => CollisionSpec::partial_swap(*theta, interval, sigma_x(*drift))?,
        CollisionModel::Custom { ancilla, unitary, basis, hamiltonian } => {
            let d_a = ancilla.len();
            let d_s = unitary.len() / d_a;
            let basis = basis.as_deref().map(matrix).unwrap_or_else(|| DMatrix::identity(d_a, d_a));
            let drift = hamiltonian.as_deref().map(matrix).unwrap_or_else(|| DMatrix::zeros(d_s, d_s));
            CollisionSpec::new(DVector::from_vec(ancilla.clone()), matrix(unitary), basis, interval, drift)?
        }
    };
    spec.hbar = cfg.hbar();
    Ok(spec)
}

fn unravel_run(cfg: &ScenarioConfig) -> Result<Outcome> {
    let Task::Unravel { model, interval, recycle, records, horizon, state, oracle, oracle_cap } = &cfg.task else {
        unreachable!("dispatched on kind")
    };
    let spec = collision_spec(cfg, model, *interval)?.with_recycling(false);
    let psi0 = DVector::from_vec(state.clone());
    let recs = unravel(&spec, &psi0, *horizon, *records, cfg.seed)?;
    let rho = reduced_density(&recs)?;
    let d = spec.system_dim();

    let mut columns = vec![("step".to_string(), Col::U64), ("t".to_string(), Col::F64)];
    for i in 0..d {
        for j in 0..d {
            columns.push((format!("rho_{i}{j}_re"), Col::F64));
            columns.push((format!("rho_{i}{j}_im"), Col::F64));
        }
    }
    let mut density = owned_table("density", &columns);
    let (mut herm, mut trace, mut min_eig) = (0.0f64, 0.0f64, f64::INFINITY);
    for (n, (t, m)) in rho.times.iter().zip(&rho.states).enumerate() {
        let mut row = vec![n.into(), (*t).into()];
        for i in 0..d {
            for j in 0..d {
                row.extend([Cell::F(m[(i, j)].re), Cell::F(m[(i, j)].im)]);
            }
        }
        density.push(row);
        let (h, tr, e) = density_sanity(m);
        herm = herm.max(h);
        trace = trace.max(tr);
        min_eig = min_eig.min(e);
    }
    let mut noise = Table::new("noise", &[("run", Col::U64), ("step", Col::U64), ("t", Col::F64), ("outcome", Col::U64)]);
    for r in &recs {
        for (k, (o, t)) in r.noise.outcomes.iter().zip(&r.noise.times).enumerate() {
            noise.push(vec![r.noise.run.into(), (k + 1).into(), (*t).into(), (*o).into()]);
        }
    }
    let mut out = Outcome::default();
    out.set("records", *records);
    out.set("collisions", rho.times.len() - 1);
    out.set("hermiticity_defect", herm);
    out.set("trace_error", trace);
    out.set("min_eigenvalue", min_eig);
    out.tables.extend([density, noise]);

    if *oracle {
        let bound = 5.0 / (*records as f64).sqrt();
        let fresh = series_gap(&rho, &partial_trace_oracle(&spec, &psi0, *horizon, *oracle_cap)?)?;
        let recycled = if *recycle {
            let spec_r = spec.clone().with_recycling(true);
            Some(series_gap(&rho, &partial_trace_oracle(&spec_r, &psi0, *horizon, *oracle_cap)?)?)
        } else {
            None
        };
        let mut cols = vec![("step", Col::U64), ("t", Col::F64), ("trace_distance", Col::F64), ("bound", Col::F64)];
        if recycled.is_some() {
            cols.push(("recycled_trace_distance", Col::F64));
        }
        let mut table = Table::new("trace_distance", &cols);
        for (n, g) in fresh.iter().enumerate() {
            let mut row = vec![n.into(), rho.times[n].into(), (*g).into(), bound.into()];
            if let Some(r) = &recycled {
                row.push(r[n].into());
            }
            table.push(row);
        }
        let max_gap = fresh.iter().copied().fold(0.0, f64::max);
        out.set("bound", bound);
        out.set("max_trace_distance", max_gap);
        out.set("within_bound", fresh.iter().all(|g| *g <= bound));
        if let Some(r) = &recycled {
            let witness = r.iter().copied().fold(0.0, f64::max) / bound;
            out.set("recycled_max_trace_distance", r.iter().copied().fold(0.0, f64::max));
            out.set("non_markovian_witness", witness);
        }
        out.tables.push(table);
    } else if *recycle {
        out.warn("collision.recycle only affects oracle comparisons; pass --oracle to compute them");
    }
    Ok(out)
}

fn diagnose(cfg: &ScenarioConfig, w: &World, ys: &[f64], energy_scale: f64) -> Result<Outcome> {
    let psi = match cfg.time {
        Some(t) => state_at(cfg, w, t.steps)?,
        None => w.psi0.clone(),
    };
    let samples = ewf_samples(&psi, &w.spec, ys)?;
    let defaults = EwfThresholds::default();
    let tol = &cfg.tolerances;
    let thresholds = EwfThresholds {
        correlation: tol.ewf_correlation.unwrap_or(defaults.correlation),
        dispersion: tol.ewf_dispersion.unwrap_or(defaults.dispersion),
        support: tol.ewf_support.unwrap_or(defaults.support),
    };
    let report = ewf_diagnostic(&samples, energy_scale, thresholds)?;
    let mut table = Table::new(
        "correlation_potential",
        &[
            ("y", Col::F64),
            ("x", Col::F64),
            ("kinetic", Col::F64),
            ("quantum", Col::F64),
            ("divergence", Col::F64),
            ("density", Col::F64),
            ("flagged", Col::Bool),
        ],
    );
    let xs = w.grid.axis(0).coords();
    for (y, s) in ys.iter().zip(&samples) {
        let c = &s.correlation;
        for (i, x) in xs.iter().enumerate() {
            table.push(vec![
                (*y).into(),
                (*x).into(),
                c.kinetic[i].into(),
                c.quantum[i].into(),
                c.divergence[i].into(),
                s.density[i].into(),
                c.flags[i].into(),
            ]);
        }
    }
    let mut out = Outcome::default();
    world_warnings(&mut out, w);
    out.set("time", psi.time());
    out.set("correlation_metric", report.correlation_metric);
    out.set("dispersion_metric", report.dispersion_metric);
    out.set("energy_scale", report.energy_scale);
    out.set("effective_wavefunction", report.ewf);
    out.tables.push(table);
    Ok(out)
}

/// Runs a validated scenario; relative snapshot paths resolve against `base`.
pub fn execute(cfg: &ScenarioConfig, base: &Path) -> Result<Outcome> {
    match &cfg.task {
        Task::StrongMeasure { .. } => return strongmeasure(cfg),
        Task::Unravel { .. } => return unravel_run(cfg),
        _ => {}
    }
    let w = World::new(cfg, base)?;
    match &cfg.task {
        Task::Evolve => evolve(cfg, &w),
        Task::Trajectories => trajectories(cfg, &w),
        Task::Cwf { starts, mode } => cwf(cfg, &w, starts, *mode),
        Task::Observable { operator, step } => observable(cfg, &w, *operator, *step),
        Task::WeakValue { .. } => weakvalue(cfg, &w),
        Task::Correlate { .. } => correlate(cfg, &w),
        Task::Work { .. } => work(cfg, &w),
        Task::Dwell { region } => dwell(cfg, &w, region),
        Task::Current { .. } => current(cfg, &w),
        Task::Diagnose { ys, energy_scale } => diagnose(cfg, &w, ys, *energy_scale),
        Task::StrongMeasure { .. } | Task::Unravel { .. } => unreachable!("handled above"),
    }
}
