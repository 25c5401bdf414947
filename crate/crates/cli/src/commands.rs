//! The four subcommands: design, simulate, bill, and the all-in-one report.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use hybridplan_core::billing::{self, UsageRecord};
use hybridplan_core::planner::{
    self, compute_u_max, design_hybrid_plan, plan_bounds, validate_hybrid_plan, FlatRatePlan,
    HybridPlan, UMaxMode,
};
use hybridplan_core::simulator::{
    extreme_case_scenarios, run_hybrid_observed, run_legacy_observed, DemandScenario,
    GroupContract, LegacyShaper, SimulationResult,
};
use hybridplan_core::units::{Money, TimeSpan};

use crate::docs::*;
use crate::error::CliError;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("parsing {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<ConfigDocument, CliError> {
    read_json(path)
}

fn month(config: &ConfigDocument) -> Result<TimeSpan, CliError> {
    TimeSpan::try_new(config.month_seconds)
        .map_err(|e| CliError::Config(format!("month_seconds: {e}")))
}

fn tiers(config: &ConfigDocument) -> (FlatRatePlan, FlatRatePlan) {
    (config.lower_plan.to_plan(), config.higher_plan.to_plan())
}

fn print_requirements(entries: &[RequirementEntryDoc]) {
    for entry in entries {
        println!(
            "  [{}] {:<55} {:>14.6} vs {:>14.6} {}",
            if entry.pass { "pass" } else { "FAIL" },
            entry.formula,
            entry.lhs,
            entry.rhs,
            entry.unit,
        );
    }
}

/// Derives the hybrid plan from the configured tier pair and writes the plan
/// document (plan + bounds).
pub fn cmd_design(config_path: &Path, out_path: &Path) -> Result<PlanDocument, CliError> {
    let config = load_config(config_path)?;
    let (lower, higher) = tiers(&config);
    let t_month = month(&config)?;

    let plan = design_hybrid_plan(&lower, &higher, t_month, config.n_policy, config.alpha_policy)?;
    let bounds = plan_bounds(&lower, &higher, plan.n_subscribers, t_month)?;
    let report = validate_hybrid_plan(&plan, &lower, &higher);

    let doc = PlanDocument {
        plan: HybridPlanDoc::from_plan(&plan),
        bounds: BoundsDoc::from_bounds(&bounds),
    };
    write_json(out_path, &doc)?;

    println!(
        "designed hybrid plan: N={}, base {} GBP/month + {:e} GBP/Mbit of excess, TGR {} Mbit/s",
        plan.n_subscribers,
        plan.base_price,
        plan.slope.value(),
        plan.token_generation_rate.value(),
    );
    println!(
        "subscriber window: {:.4} <= N <= {:.4} (integers [{}, {}])",
        bounds.subscriber_range.n_min,
        bounds.subscriber_range.n_max,
        bounds.subscriber_range.integer_min,
        bounds.subscriber_range.integer_max,
    );
    println!(
        "slope window at N={}: [{:e}, {:e}] GBP/Mbit, u_max {:e} Mbit",
        plan.n_subscribers,
        bounds.alpha_min.value(),
        bounds.alpha_max.value(),
        bounds.u_max.value(),
    );
    let entries: Vec<RequirementEntryDoc> = report
        .entries
        .iter()
        .map(RequirementEntryDoc::from_entry)
        .collect();
    print_requirements(&entries);
    println!("plan written to {}", out_path.display());
    Ok(doc)
}

fn csv_file_name(out_path: &Path, scenario: &str, mode: RunMode) -> String {
    let stem = out_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("results");
    let sanitized: String = scenario
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect();
    format!("{stem}.{sanitized}.{mode}.granted.csv")
}

/// Runs one scenario in one mode, streaming a decimated granted-rate time
/// series to `csv_path` while the simulation advances.
fn run_one(
    plan: &HybridPlan,
    group: &GroupContract,
    scenario: &DemandScenario,
    step: TimeSpan,
    mode: RunMode,
    csv_path: Option<&Path>,
    csv_max_rows: usize,
) -> Result<SimulationResult, CliError> {
    let n_steps = (scenario.horizon.value() / step.value()).round().max(1.0);
    let stride = (n_steps / csv_max_rows.max(1) as f64).ceil().max(1.0) as u64;

    let mut writer = match csv_path {
        Some(path) => {
            let mut writer = csv::Writer::from_path(path)
                .map_err(|e| CliError::Io(format!("creating {}: {e}", path.display())))?;
            let mut header = vec!["time_s".to_string()];
            header.extend(scenario.traces.iter().map(|t| t.subscriber_id.clone()));
            writer
                .write_record(&header)
                .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
            Some(writer)
        }
        None => None,
    };

    let mut row = 0u64;
    let observer = |time_s: f64, granted: &[f64]| {
        if let Some(writer) = writer.as_mut() {
            if row % stride == 0 {
                let mut record = vec![format!("{time_s}")];
                record.extend(granted.iter().map(|g| format!("{g}")));
                // I/O errors surface when the writer is flushed below.
                let _ = writer.write_record(&record);
            }
        }
        row += 1;
    };

    let result = match mode {
        RunMode::Hybrid => run_hybrid_observed(plan, group, scenario, step, observer)?,
        RunMode::Legacy => {
            let shapers = vec![
                LegacyShaper {
                    token_generation_rate: plan.token_generation_rate,
                    token_bucket_size: plan.token_bucket_size,
                };
                plan.n_subscribers as usize
            ];
            run_legacy_observed(group, &shapers, scenario, step, observer)?
        }
    };
    if let Some(mut writer) = writer {
        writer
            .flush()
            .map_err(|e| CliError::Io(format!("flushing granted-rate csv: {e}")))?;
    }
    Ok(result)
}

fn scenarios_to_run(
    config: &ConfigDocument,
    plan: &HybridPlan,
    group: &GroupContract,
    builtin_case: Option<u8>,
) -> Result<Vec<(String, DemandScenario)>, CliError> {
    match builtin_case {
        Some(1) => {
            let (case1, _) = extreme_case_scenarios(plan, group);
            Ok(vec![("case1".to_string(), case1)])
        }
        Some(2) => {
            let (_, case2) = extreme_case_scenarios(plan, group);
            Ok(vec![("case2".to_string(), case2)])
        }
        Some(other) => Err(CliError::Config(format!(
            "--builtin-case must be 1 or 2, got {other}"
        ))),
        None => {
            if config.scenarios.is_empty() {
                return Err(CliError::Config(
                    "no scenarios configured; add scenarios to the config or pass --builtin-case"
                        .to_string(),
                ));
            }
            config
                .scenarios
                .iter()
                .map(|doc| {
                    doc.to_scenario(config.month_seconds)
                        .map(|s| (doc.name.clone(), s))
                        .map_err(|e| {
                            CliError::Config(format!("scenario {:?}: {e}", doc.name))
                        })
                })
                .collect()
        }
    }
}

/// Simulates the configured (or built-in) scenarios against a designed plan
/// and writes usage records, QoS metrics and granted-rate time series.
pub fn cmd_simulate(
    config_path: &Path,
    plan_path: &Path,
    out_path: &Path,
    step_override: Option<f64>,
    mode: Mode,
    builtin_case: Option<u8>,
) -> Result<ResultsDocument, CliError> {
    let config = load_config(config_path)?;
    let plan_doc: PlanDocument = read_json(plan_path)?;
    let plan = plan_doc.plan.to_plan().map_err(CliError::Config)?;
    let group = config.group_contract();

    let step_s = step_override.unwrap_or(config.step_seconds);
    let step =
        TimeSpan::try_new(step_s).map_err(|e| CliError::Config(format!("step: {e}")))?;

    let runs = scenarios_to_run(&config, &plan, &group, builtin_case)?;
    let modes: &[RunMode] = match mode {
        Mode::Hybrid => &[RunMode::Hybrid],
        Mode::Legacy => &[RunMode::Legacy],
        Mode::Both => &[RunMode::Hybrid, RunMode::Legacy],
    };

    let out_dir = out_path.parent().map(PathBuf::from).unwrap_or_default();
    let mut scenario_docs = Vec::new();
    for (name, scenario) in &runs {
        for &run_mode in modes {
            let csv_name = csv_file_name(out_path, name, run_mode);
            let csv_path = out_dir.join(&csv_name);
            let result = run_one(
                &plan,
                &group,
                scenario,
                step,
                run_mode,
                Some(&csv_path),
                config.csv_max_rows,
            )?;
            for warning in &result.warnings {
                eprintln!("warning: {name} ({run_mode}): {warning}");
            }
            println!(
                "{name} ({run_mode}): group conformant {:.3e} Mbit, wasted {:.3e} Mbit",
                result.group_conformant_volume.value(),
                result.wasted_capacity_volume.value(),
            );
            for record in &result.usage_records {
                println!(
                    "  {}: conformant {:.6e} Mbit, excess {:.6e} Mbit",
                    record.subscriber_id,
                    record.conformant_volume.value(),
                    record.excess_volume.value(),
                );
            }
            scenario_docs.push(ScenarioResultDoc::from_result(
                name,
                run_mode,
                &result,
                Some(csv_name),
            ));
        }
    }

    let doc = ResultsDocument {
        n_subscribers: plan.n_subscribers,
        step_seconds: step.value(),
        scenarios: scenario_docs,
    };
    write_json(out_path, &doc)?;
    println!("results written to {}", out_path.display());
    Ok(doc)
}

fn bill_scenario(
    plan: &HybridPlan,
    lower: &FlatRatePlan,
    higher: &FlatRatePlan,
    records: &[UsageRecord],
) -> Result<(Vec<BillDoc>, Money, Vec<RequirementEntryDoc>), CliError> {
    let report = billing::check_requirements(plan, lower, higher, records)?;
    let bills = records
        .iter()
        .map(|record| {
            let bill = billing::bill(plan, record);
            BillDoc {
                subscriber_id: bill.subscriber_id,
                base_gbp: bill.base,
                usage_charge_gbp: bill.usage_charge,
                total_gbp: bill.total,
            }
        })
        .collect();
    let entries = report
        .entries
        .iter()
        .map(RequirementEntryDoc::from_entry)
        .collect();
    Ok((bills, report.revenue, entries))
}

/// Bills simulated usage and evaluates the revenue requirements.
pub fn cmd_bill(
    config_path: &Path,
    plan_path: &Path,
    results_path: &Path,
    out_path: &Path,
) -> Result<BillsDocument, CliError> {
    let config = load_config(config_path)?;
    let (lower, higher) = tiers(&config);
    let plan_doc: PlanDocument = read_json(plan_path)?;
    let plan = plan_doc.plan.to_plan().map_err(CliError::Config)?;
    let results: ResultsDocument = read_json(results_path)?;

    if results.n_subscribers != plan.n_subscribers {
        return Err(CliError::Config(format!(
            "plan covers {} subscribers but the results document was simulated for {}",
            plan.n_subscribers, results.n_subscribers
        )));
    }

    let exact_u_max = compute_u_max(&lower, &higher, plan.month_length, UMaxMode::Exact).ok();

    let plan_requirements: Vec<RequirementEntryDoc> = validate_hybrid_plan(&plan, &lower, &higher)
        .entries
        .iter()
        .map(RequirementEntryDoc::from_entry)
        .collect();

    let mut scenarios = Vec::new();
    for scenario in &results.scenarios {
        let records = scenario.to_usage_records().map_err(CliError::Config)?;
        if let Some(u_max) = exact_u_max {
            billing::validate_usage_bounds(&records, u_max)?;
        }
        let (bills, revenue, requirements) = bill_scenario(&plan, &lower, &higher, &records)?;
        println!("{} ({}): revenue {} GBP", scenario.name, scenario.mode, revenue);
        print_requirements(&requirements);
        scenarios.push(ScenarioBillsDoc {
            name: scenario.name.clone(),
            mode: scenario.mode,
            bills,
            revenue_gbp: revenue,
            higher_plan_price_gbp: higher.monthly_price,
            lower_plan_sum_gbp: lower.monthly_price * plan.n_subscribers,
            requirements,
        });
    }

    let doc = BillsDocument {
        plan_requirements,
        scenarios,
    };
    write_json(out_path, &doc)?;
    println!("bills written to {}", out_path.display());
    Ok(doc)
}

/// The whole pipeline in one invocation: design the plan, run both built-in
/// extreme cases plus any configured scenarios, and bill everything.
pub fn cmd_report(
    config_path: &Path,
    out_path: &Path,
    step_override: Option<f64>,
) -> Result<ReportDocument, CliError> {
    let config = load_config(config_path)?;
    let (lower, higher) = tiers(&config);
    let t_month = month(&config)?;

    let plan = design_hybrid_plan(&lower, &higher, t_month, config.n_policy, config.alpha_policy)?;
    let bounds = plan_bounds(&lower, &higher, plan.n_subscribers, t_month)?;
    let group = config.group_contract();
    let step_s = step_override.unwrap_or(config.step_seconds);
    let step =
        TimeSpan::try_new(step_s).map_err(|e| CliError::Config(format!("step: {e}")))?;

    let plan_requirements: Vec<RequirementEntryDoc> = validate_hybrid_plan(&plan, &lower, &higher)
        .entries
        .iter()
        .map(RequirementEntryDoc::from_entry)
        .collect();

    let (case1, case2) = extreme_case_scenarios(&plan, &group);
    let mut runs = vec![("case1".to_string(), case1), ("case2".to_string(), case2)];
    for doc in &config.scenarios {
        let scenario = doc
            .to_scenario(config.month_seconds)
            .map_err(|e| CliError::Config(format!("scenario {:?}: {e}", doc.name)))?;
        runs.push((doc.name.clone(), scenario));
    }

    println!(
        "plan: N={}, base {} GBP + {:e} GBP/Mbit, TGR {} Mbit/s",
        plan.n_subscribers,
        plan.base_price,
        plan.slope.value(),
        plan.token_generation_rate.value(),
    );
    let mut cases = Vec::new();
    for (name, scenario) in &runs {
        let result = run_one(&plan, &group, scenario, step, RunMode::Hybrid, None, 1)?;
        let records = result.usage_records.clone();
        let (bills, revenue, requirements) = bill_scenario(&plan, &lower, &higher, &records)?;
        println!("{name}: revenue {revenue} GBP");
        print_requirements(&requirements);
        cases.push(ReportCaseDoc {
            name: name.clone(),
            revenue_gbp: revenue,
            bills,
            requirements,
            usage_records: result
                .usage_records
                .iter()
                .map(|r| UsageRecordDoc {
                    subscriber_id: r.subscriber_id.clone(),
                    conformant_volume_mbit: r.conformant_volume.value(),
                    excess_volume_mbit: r.excess_volume.value(),
                    month_seconds: r.month_length.value(),
                })
                .collect(),
            qos: result
                .qos
                .iter()
                .map(|q| QosDoc {
                    subscriber_id: q.subscriber_id.clone(),
                    mean_granted_rate_mbps: q.mean_granted_rate.value(),
                    demand_satisfaction_ratio: q.demand_satisfaction_ratio,
                })
                .collect(),
        });
    }

    let doc = ReportDocument {
        plan: HybridPlanDoc::from_plan(&plan),
        bounds: BoundsDoc::from_bounds(&bounds),
        plan_requirements,
        cases,
    };
    write_json(out_path, &doc)?;
    println!("report written to {}", out_path.display());
    Ok(doc)
}
