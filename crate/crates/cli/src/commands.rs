use anyhow::{bail, Result};
use serde::Serialize;
use serde_json::json;

use qsearch_core::bounds::scientific;
use qsearch_core::search::default_range;
use qsearch_core::{
    config_count, fidelity_histogram, lower_bound, run_fixed_config, run_trials, search::sweep_with, GateKind,
    ParameterizedCircuit, SearchPlan, TargetSource, TaskKind, TrialRecord,
};

use crate::output::{timings_csv, trials_jsonl, OutputDir};
use crate::spec::ExperimentSpec;

/// Exit status of a completed command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    NotFound,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsRow {
    pub task: TaskKind,
    pub kind: GateKind,
    pub n: usize,
    pub n_lb: u64,
    /// Exact number of configurations at `n_lb`.
    pub n_config: String,
    pub n_config_sci: String,
}

pub fn bounds_rows(tasks: &[TaskKind], kinds: &[GateKind], ns: &[usize]) -> Result<Vec<BoundsRow>> {
    let mut rows = Vec::new();
    for &task in tasks {
        for &kind in kinds {
            for &n in ns {
                let n_lb = lower_bound(task, kind, n)?;
                let count = config_count(n, n_lb as usize);
                rows.push(BoundsRow {
                    task,
                    kind,
                    n,
                    n_lb,
                    n_config: count.to_string(),
                    n_config_sci: scientific(&count),
                });
            }
        }
    }
    Ok(rows)
}

pub fn bounds_csv(rows: &[BoundsRow]) -> String {
    let mut out = String::from("task,kind,n,N_LB,N_config,N_config_sci\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.task.short_name(),
            r.kind.name(),
            r.n,
            r.n_lb,
            r.n_config,
            r.n_config_sci
        ));
    }
    out
}

fn trials_for(spec: &ExperimentSpec, plan: &SearchPlan, size: usize) -> Result<Vec<TrialRecord>> {
    Ok(match spec.config {
        Some(fixture) => run_fixed_config(plan, &fixture.config())?,
        None => run_trials(plan, size)?,
    })
}

fn single_size(spec: &ExperimentSpec, command: &str) -> Result<usize> {
    if let Some(fixture) = spec.config {
        let size = fixture.config().size();
        if spec.sizes.is_some_and(|r| r.single() != Some(size)) {
            bail!("configuration {:?} has N={size}, spec asks for {}", fixture, spec.sizes.unwrap());
        }
        return Ok(size);
    }
    match spec.sizes.and_then(|r| r.single()) {
        Some(size) => Ok(size),
        None => bail!("{command} needs a single circuit size (--sizes N)"),
    }
}

/// Index of the highest-fidelity trial; ties go to the lowest index.
fn best_trial(trials: &[TrialRecord]) -> Option<&TrialRecord> {
    trials.iter().fold(None, |best: Option<&TrialRecord>, t| match best {
        Some(b) if b.result.fidelity >= t.result.fidelity => Some(b),
        _ => Some(t),
    })
}

fn write_shared_target(out: &mut OutputDir, plan: &SearchPlan) -> Result<()> {
    if !matches!(plan.targets, TargetSource::PerTrialHaar) {
        let target = plan.target_for(0)?;
        out.write("target.json", (serde_json::to_string(&target.to_json())? + "\n").as_bytes())?;
    }
    Ok(())
}

pub fn synthesize(spec: &ExperimentSpec) -> Result<Outcome> {
    let size = single_size(spec, "synthesize")?;
    let plan = spec.plan()?;
    let mut out = OutputDir::create(&spec.output)?;
    let trials = trials_for(spec, &plan, size)?;
    out.write("trials.jsonl", trials_jsonl(size, &trials)?.as_bytes())?;
    out.write("timings.csv", timings_csv(size, &trials).as_bytes())?;

    let n_perfect = trials.iter().filter(|t| t.result.perfect).count();
    let best = best_trial(&trials);
    let found = best.is_some_and(|b| b.result.perfect);
    if let Some(b) = best.filter(|b| b.result.perfect) {
        let circuit = ParameterizedCircuit::new(b.config.clone(), b.result.params.clone())?;
        out.write("circuit.json", (circuit.to_json() + "\n").as_bytes())?;
        out.write("circuit.txt", circuit.to_text().as_bytes())?;
        let target = plan.target_for(b.trial_index)?;
        out.write("target.json", (serde_json::to_string(&target.to_json())? + "\n").as_bytes())?;
    }
    let summary = json!({
        "size": size,
        "n_samples": trials.len(),
        "n_perfect": n_perfect,
        "found": found,
        "best_trial": best.map(|b| b.trial_index),
        "best_fidelity": best.map(|b| b.result.fidelity),
    });
    out.write("summary.json", (serde_json::to_string_pretty(&summary)? + "\n").as_bytes())?;
    out.finish("synthesize", spec, summary)?;

    match best {
        Some(b) => println!(
            "N={size}: {n_perfect}/{} perfect, best 1-F={:.3e} (trial {})",
            trials.len(),
            b.result.infidelity(),
            b.trial_index
        ),
        None => println!("N={size}: no trials"),
    }
    Ok(if found { Outcome::Done } else { Outcome::NotFound })
}

pub fn sweep(spec: &ExperimentSpec) -> Result<Outcome> {
    if spec.config.is_some() {
        bail!("sweep samples configurations; a fixed configuration only works with synthesize or histogram");
    }
    let sizes = match spec.sizes {
        Some(r) => r.sizes(),
        None => default_range(spec.task, spec.kind, spec.n, 5)?,
    };
    let plan = spec.plan()?;
    let mut out = OutputDir::create(&spec.output)?;
    write_shared_target(&mut out, &plan)?;
    let mut timings = String::from("N,trial_index,wall_time_s\n");
    let result = sweep_with(&plan, &sizes, |size, trials| {
        out.write(&format!("trials_N{size}.jsonl"), trials_jsonl(size, trials)?.as_bytes())?;
        timings.push_str(timings_csv(size, trials).split_once('\n').map_or("", |(_, rest)| rest));
        let perfect = trials.iter().filter(|t| t.result.perfect).count();
        eprintln!("N={size}: {perfect}/{} perfect", trials.len());
        Ok::<(), anyhow::Error>(())
    })?;
    out.write("sweep.csv", result.to_csv().as_bytes())?;
    out.write("sweep.json", (serde_json::to_string_pretty(&result)? + "\n").as_bytes())?;
    out.write("timings.csv", timings.as_bytes())?;
    let summary = json!({
        "sizes": sizes,
        "n_min_perfect": result.n_min_perfect,
        "n_threshold": result.n_threshold,
    });
    out.finish("sweep", spec, summary)?;
    print!("{}", result.to_csv());
    println!(
        "N_min_perfect={} N_th={}",
        result.n_min_perfect.map_or("none".into(), |v| v.to_string()),
        result.n_threshold.map_or("none".into(), |v| v.to_string())
    );
    Ok(Outcome::Done)
}

pub fn histogram(spec: &ExperimentSpec, bins: usize) -> Result<Outcome> {
    let size = single_size(spec, "histogram")?;
    let plan = spec.plan()?;
    let mut out = OutputDir::create(&spec.output)?;
    write_shared_target(&mut out, &plan)?;
    let trials = trials_for(spec, &plan, size)?;
    let fidelities: Vec<f64> = trials.iter().map(|t| t.result.fidelity).collect();
    let hist = fidelity_histogram(&fidelities, bins)?;
    out.write("trials.jsonl", trials_jsonl(size, &trials)?.as_bytes())?;
    out.write("timings.csv", timings_csv(size, &trials).as_bytes())?;
    out.write("histogram.csv", hist.to_csv().as_bytes())?;
    let max_fidelity = fidelities.iter().copied().fold(f64::NAN, f64::max);
    let summary = json!({
        "size": size,
        "n_samples": trials.len(),
        "bins": bins,
        "max_fidelity": if max_fidelity.is_nan() { None } else { Some(max_fidelity) },
        "occupied_bins": hist.occupied_bins(),
    });
    out.finish("histogram", spec, summary)?;
    print!("{}", hist.to_csv());
    if !max_fidelity.is_nan() {
        println!("max F={max_fidelity:.6}");
    }
    Ok(Outcome::Done)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_table_rows() {
        let rows = bounds_rows(&[TaskKind::UnitarySynthesis], &[GateKind::Cnot], &[2, 3, 4, 5]).unwrap();
        let lbs: Vec<u64> = rows.iter().map(|r| r.n_lb).collect();
        assert_eq!(lbs, vec![3, 14, 61, 252]);
        assert_eq!(rows[0].n_config, "1");
        assert_eq!(rows[1].n_config_sci, "4.8e6");
        let csv = bounds_csv(&rows);
        assert!(csv.starts_with("task,kind,n,N_LB,N_config,N_config_sci\nu,cnot,2,3,1,1\n"));
    }
}
