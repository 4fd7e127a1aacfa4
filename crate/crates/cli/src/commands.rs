use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tutor_core::analytics::{export_plotdata, STUDENT_FEATURE_NAMES};
use tutor_core::cohortsim::{run_cohort, InteractionRecord, SimConfig};
use tutor_core::datagen::{gen_warm_start, WarmStartConfig};
use tutor_core::domain::Action;
use tutor_core::models::{
    early_warning_fit, LinearFit, LogisticConfig, LogisticFit, DEFAULT_RIDGE,
};
use tutor_core::policy::{train_policy, PolicyModel, TrainConfig};
use tutor_core::profiles::{run_rq3, Rq3Config};

use crate::error::{CliError, CliResult};
use crate::float::g17;
use crate::manifest::{
    manifest_name, read_json, sha256_file, write_document, Document, RunManifest, TOOL, VERSION,
};
use crate::reports::{run_rq1, run_rq2};
use crate::schema::{
    read_interactions, read_warm_start, write_interactions, write_table, write_warm_start, Preamble,
};
use crate::{Cli, Command};

pub const WARM_START_CSV: &str = "warmstart.csv";
pub const POLICY_JSON: &str = "policy.json";
pub const TRAIN_REPORT_JSON: &str = "train_report.json";
pub const INTERACTIONS_CSV: &str = "interactions.csv";
pub const EARLY_WARNING_JSON: &str = "early_warning.json";
pub const BUNDLE_JSON: &str = "bundle.json";

pub fn rq_report_name(rq: u8) -> String {
    format!("rq{rq}_report.json")
}

fn preamble(stage: &str, seed: u64) -> Preamble {
    vec![
        ("manifest".into(), manifest_name(stage)),
        ("seed".into(), seed.to_string()),
    ]
}

fn with_config(mut pre: Preamble, config: &impl Serialize) -> CliResult<Preamble> {
    let json = serde_json::to_string(config).map_err(|e| CliError::Data(e.to_string()))?;
    pre.push(("config".into(), json));
    Ok(pre)
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn require(path: &Path, produced_by: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "{} not found; run `{produced_by}` first",
            path.display()
        )))
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let out = cli.out_dir.as_path();
    ensure_dir(out)?;
    match &cli.command {
        Command::GenWarmstart { n } => gen_warmstart(out, cli.seed, *n),
        Command::TrainPolicy {
            input,
            epochs,
            lr,
            batch_size,
            temperature,
            hidden,
        } => {
            let cfg = TrainConfig {
                hidden_sizes: (hidden[0], hidden[1]),
                learning_rate: *lr,
                epochs: *epochs,
                batch_size: *batch_size,
                seed: cli.seed,
                temperature: *temperature,
                ..TrainConfig::default()
            };
            let input = input.clone().unwrap_or_else(|| out.join(WARM_START_CSV));
            train(out, &input, &cfg)
        }
        Command::Simulate {
            model,
            students,
            turns,
            temperature,
        } => {
            let cfg = SimConfig {
                n_students: *students,
                n_turns: *turns,
                seed: cli.seed,
                ..SimConfig::default()
            };
            let model = model.clone().unwrap_or_else(|| out.join(POLICY_JSON));
            simulate(out, &model, &cfg, *temperature)
        }
        Command::Analyze {
            rq,
            input,
            window,
            k,
            lambda,
            interaction_level,
        } => {
            let input = input.clone().unwrap_or_else(|| out.join(INTERACTIONS_CSV));
            let cfg = Rq3Config {
                k: *k,
                lambda: *lambda,
                window: *window,
                interaction_level: *interaction_level,
                ..Rq3Config::default()
            }
            .with_seed(cli.seed);
            analyze(out, &input, *rq, &cfg)
        }
        Command::EarlyWarning { input } => {
            let input = input.clone().unwrap_or_else(|| out.join(INTERACTIONS_CSV));
            early_warning(out, &input, cli.seed)
        }
        Command::Report { output } => {
            let output = output.clone().unwrap_or_else(|| out.join(BUNDLE_JSON));
            report(out, &output)
        }
    }
}

pub fn gen_warmstart(out: &Path, seed: u64, n: usize) -> CliResult<()> {
    let stage = "warmstart";
    let cfg = WarmStartConfig {
        n,
        seed,
        ..WarmStartConfig::default()
    };
    let records = gen_warm_start(&cfg)?;
    let path = out.join(WARM_START_CSV);
    write_warm_start(&path, &with_config(preamble(stage, seed), &cfg)?, &records)?;
    let mut m = RunManifest::new(stage, format!("gen-warmstart --n {n}"), seed, cfg)?;
    m.output(&path)?;
    m.write(out)
}

pub fn train(out: &Path, input: &Path, cfg: &TrainConfig) -> CliResult<()> {
    let stage = "train";
    require(input, "gen-warmstart")?;
    let records = read_warm_start(input)?;
    let (model, report) = train_policy(&records, cfg)?;
    let model_path = out.join(POLICY_JSON);
    let report_path = out.join(TRAIN_REPORT_JSON);
    write_document(&model_path, stage, &model)?;
    write_document(&report_path, stage, &report)?;
    let mut m = RunManifest::new(
        stage,
        format!("train-policy --epochs {}", cfg.epochs),
        cfg.seed,
        cfg,
    )?;
    m.input(input)?;
    m.output(&model_path)?;
    m.output(&report_path)?;
    m.write(out)
}

pub fn load_policy(path: &Path) -> CliResult<PolicyModel> {
    require(path, "train-policy")?;
    let doc: Document<PolicyModel> = read_json(path)?;
    doc.content
        .validate()
        .map_err(|e| CliError::schema(path, e.to_string()))?;
    Ok(doc.content)
}

pub fn simulate(
    out: &Path,
    model_path: &Path,
    cfg: &SimConfig,
    temperature: Option<f64>,
) -> CliResult<()> {
    let stage = "simulate";
    let mut policy = load_policy(model_path)?;
    if let Some(t) = temperature {
        policy = policy.with_temperature(t)?;
    }
    let log = run_cohort(cfg, &policy)?;
    let path = out.join(INTERACTIONS_CSV);
    write_interactions(
        &path,
        &with_config(preamble(stage, cfg.seed), cfg)?,
        &log.records,
    )?;
    #[derive(Serialize)]
    struct Config<'a> {
        sim: &'a SimConfig,
        temperature: f64,
    }
    let command = format!(
        "simulate --students {} --turns {}",
        cfg.n_students, cfg.n_turns
    );
    let mut m = RunManifest::new(
        stage,
        command,
        cfg.seed,
        Config {
            sim: cfg,
            temperature: policy.temperature,
        },
    )?;
    m.input(model_path)?;
    m.output(&path)?;
    m.write(out)
}

fn load_log(input: &Path) -> CliResult<Vec<InteractionRecord>> {
    require(input, "simulate")?;
    let records = read_interactions(input)?;
    if records.is_empty() {
        return Err(CliError::Data(format!(
            "{} has no interaction records",
            input.display()
        )));
    }
    Ok(records)
}

fn logistic_rows(label: &str, fit: &LogisticFit) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        label.to_string(),
        "intercept".to_string(),
        g17(fit.intercept),
    ]];
    for (name, c) in fit.feature_names.iter().zip(&fit.coefficients) {
        rows.push(vec![label.to_string(), name.clone(), g17(*c)]);
    }
    rows
}

fn linear_rows(label: &str, fit: &LinearFit) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        label.to_string(),
        "intercept".to_string(),
        g17(fit.intercept),
    ]];
    for (name, c) in fit.feature_names.iter().zip(&fit.coefficients) {
        rows.push(vec![label.to_string(), name.clone(), g17(*c)]);
    }
    rows
}

fn feature_table(
    path: &Path,
    pre: &Preamble,
    names: &[String],
    rows: Vec<(u32, Vec<f64>)>,
) -> CliResult<()> {
    let mut header = vec!["student_id"];
    header.extend(names.iter().map(|s| s.as_str()));
    let cells: Vec<Vec<String>> = rows
        .into_iter()
        .map(|(id, v)| {
            std::iter::once(id.to_string())
                .chain(v.into_iter().map(g17))
                .collect()
        })
        .collect();
    write_table(path, pre, &header, &cells)
}

pub fn analyze(out: &Path, input: &Path, rq: u8, cfg: &Rq3Config) -> CliResult<()> {
    let stage = format!("analyze_rq{rq}");
    let records = load_log(input)?;
    let pre = preamble(&stage, cfg.kmeans.seed);
    let logistic = LogisticConfig::default();
    let mut outputs: Vec<PathBuf> = Vec::new();
    let report_path = out.join(rq_report_name(rq));
    let mut command = format!("analyze --rq {rq} --window {}", cfg.window);
    let config = match rq {
        1 => {
            let report = run_rq1(&records, cfg.window, &logistic, DEFAULT_RIDGE)?;
            write_document(&report_path, &stage, &report)?;
            outputs.push(report_path);

            let p = out.join("rq1_features.csv");
            let rows = report
                .features
                .iter()
                .map(|f| (f.student_id, f.vector()))
                .collect();
            feature_table(&p, &pre, &report.feature_names, rows)?;
            outputs.push(p);
            let p = out.join("rq1_coefficients.csv");
            let mut rows = logistic_rows("final_correctness", &report.models.correctness.model);
            rows.extend(linear_rows("final_trust", &report.models.trust.model));
            write_table(&p, &pre, &["model", "feature", "coefficient"], &rows)?;
            outputs.push(p);
            outputs.extend(write_plotdata(out, &pre, &records)?);
            serde_json::json!({ "window": cfg.window, "logistic": logistic, "ridge": DEFAULT_RIDGE })
        }
        2 => {
            let report = run_rq2(&records, cfg.window, &logistic, DEFAULT_RIDGE)?;
            write_document(&report_path, &stage, &report)?;
            outputs.push(report_path);

            let p = out.join("rq2_features.csv");
            let rows = report
                .features
                .iter()
                .map(|f| (f.student_id, f.vector()))
                .collect();
            feature_table(&p, &pre, &report.feature_names, rows)?;
            outputs.push(p);
            let p = out.join("rq2_coefficients.csv");
            let mut rows = logistic_rows("final_correctness", &report.models.correctness.model);
            rows.extend(linear_rows("final_trust", &report.models.trust.model));
            write_table(&p, &pre, &["model", "feature", "coefficient"], &rows)?;
            outputs.push(p);
            serde_json::json!({ "window": cfg.window, "logistic": logistic, "ridge": DEFAULT_RIDGE })
        }
        3 => {
            command.push_str(&format!(" --k {} --lambda {}", cfg.k, cfg.lambda));
            if cfg.interaction_level {
                command.push_str(" --interaction-level");
            }
            let report = run_rq3(&records, cfg)?;
            write_document(&report_path, &stage, &report)?;
            outputs.push(report_path);
            outputs.extend(write_rq3_tables(out, &pre, &report)?);
            serde_json::to_value(cfg).map_err(|e| CliError::Data(e.to_string()))?
        }
        _ => return Err(CliError::Usage(format!("--rq must be 1, 2 or 3, got {rq}"))),
    };
    let mut m = RunManifest::new(&stage, command, cfg.kmeans.seed, config)?;
    m.input(input)?;
    for p in &outputs {
        m.output(p)?;
    }
    m.write(out)
}

fn write_plotdata(
    out: &Path,
    pre: &Preamble,
    records: &[InteractionRecord],
) -> CliResult<Vec<PathBuf>> {
    let plot = export_plotdata(records)?;
    let mut paths = Vec::new();

    let p = out.join("plot_turn_series.csv");
    let rows: Vec<Vec<String>> = plot
        .turn_series
        .iter()
        .map(|t| {
            vec![
                t.turn.to_string(),
                g17(t.mean_rt),
                g17(t.hint_rate),
                g17(t.mean_attempts),
                g17(t.correctness_rate),
                g17(t.mean_trust),
                t.n.to_string(),
            ]
        })
        .collect();
    let header = [
        "turn",
        "mean_rt",
        "hint_rate",
        "mean_attempts",
        "correctness_rate",
        "mean_trust",
        "n",
    ];
    write_table(&p, pre, &header, &rows)?;
    paths.push(p);

    let p = out.join("plot_question_type_rt.csv");
    let rows: Vec<Vec<String>> = plot
        .question_type_rt
        .iter()
        .map(|q| {
            vec![
                q.question_type.name().to_string(),
                q.turn.to_string(),
                g17(q.mean_rt),
                q.n.to_string(),
            ]
        })
        .collect();
    write_table(&p, pre, &["question_type", "turn", "mean_rt", "n"], &rows)?;
    paths.push(p);

    let p = out.join("plot_rt_samples.csv");
    let rows: Vec<Vec<String>> = plot
        .rt_samples
        .iter()
        .map(|(t, rt)| vec![t.to_string(), g17(*rt)])
        .collect();
    write_table(&p, pre, &["turn", "response_time"], &rows)?;
    paths.push(p);

    let p = out.join("plot_phase_points.csv");
    let rows: Vec<Vec<String>> = plot
        .phase_points
        .iter()
        .map(|(rt, tr, t)| vec![g17(*rt), g17(*tr), t.to_string()])
        .collect();
    write_table(&p, pre, &["response_time", "trust", "turn"], &rows)?;
    paths.push(p);
    Ok(paths)
}

fn write_rq3_tables(
    out: &Path,
    pre: &Preamble,
    r: &tutor_core::profiles::RQ3Report,
) -> CliResult<Vec<PathBuf>> {
    let mut paths = Vec::new();

    let p = out.join("rq3_profiles.csv");
    let mut header = vec!["profile_id", "size"];
    header.extend(STUDENT_FEATURE_NAMES);
    header.extend(["dominant_feedback", "dominant_frequency"]);
    let rows: Vec<Vec<String>> = r
        .profiles
        .iter()
        .map(|s| {
            let mut row = vec![s.profile_id.to_string(), s.size.to_string()];
            row.extend(s.means.iter().map(|v| g17(*v)));
            row.push(
                s.dominant_feedback
                    .map_or(String::new(), |a| a.name().to_string()),
            );
            row.push(g17(s.dominant_frequency));
            row
        })
        .collect();
    write_table(&p, pre, &header, &rows)?;
    paths.push(p);

    if let Some(radar) = &r.radar {
        let p = out.join("rq3_radar.csv");
        let mut header = vec!["profile_id"];
        header.extend(radar.feature_names.iter().map(|s| s.as_str()));
        let rows: Vec<Vec<String>> = radar
            .profile_ids
            .iter()
            .zip(&radar.values)
            .map(|(id, v)| {
                std::iter::once(id.to_string())
                    .chain(v.iter().map(|x| g17(*x)))
                    .collect()
            })
            .collect();
        write_table(&p, pre, &header, &rows)?;
        paths.push(p);
    }

    let p = out.join("rq3_pca.csv");
    let pca = &r.pca;
    let rows: Vec<Vec<String>> = (0..pca.actions.len())
        .map(|i| {
            vec![
                pca.student_ids[i].to_string(),
                pca.turns[i].to_string(),
                pca.actions[i].name().to_string(),
                g17(pca.fit.projection[[i, 0]]),
                g17(pca.fit.projection[[i, 1]]),
            ]
        })
        .collect();
    write_table(
        &p,
        pre,
        &["student_id", "turn", "action", "pc1", "pc2"],
        &rows,
    )?;
    paths.push(p);

    let p = out.join("rq3_responsiveness.csv");
    let mut header = vec!["student_id", "profile_id", "overall_mean_reward"];
    let score_cols: Vec<String> = Action::ALL
        .iter()
        .map(|a| format!("r_{}", a.name()))
        .collect();
    header.extend(score_cols.iter().map(|s| s.as_str()));
    header.extend(["best_feedback", "best_score"]);
    let rows: Vec<Vec<String>> = r
        .responsiveness
        .students
        .iter()
        .zip(&r.kmeans.assignments)
        .map(|(s, profile)| {
            let mut row = vec![
                s.student_id.to_string(),
                profile.to_string(),
                g17(s.overall_mean_reward),
            ];
            // empty cell for feedback the student never received
            row.extend(
                Action::ALL
                    .iter()
                    .map(|&a| s.score(a).map_or(String::new(), g17)),
            );
            row.push(s.best_feedback.name().to_string());
            row.push(g17(s.best_score));
            row
        })
        .collect();
    write_table(&p, pre, &header, &rows)?;
    paths.push(p);
    Ok(paths)
}

pub fn early_warning(out: &Path, input: &Path, seed: u64) -> CliResult<()> {
    let stage = "early_warning";
    let records = load_log(input)?;
    let cfg = LogisticConfig::default();
    let fit = early_warning_fit(&records, &cfg)?;
    let risk = fit.risk_scores(&records)?;
    let json = out.join(EARLY_WARNING_JSON);
    write_document(&json, stage, &fit)?;
    let csv = out.join("early_warning_risk.csv");
    let rows: Vec<Vec<String>> = risk
        .iter()
        .map(|r| {
            vec![
                r.student_id.to_string(),
                r.turn.to_string(),
                g17(r.p_correct),
                g17(r.risk),
            ]
        })
        .collect();
    write_table(
        &csv,
        &preamble(stage, seed),
        &["student_id", "turn", "p_correct", "risk"],
        &rows,
    )?;
    let mut m = RunManifest::new(stage, "early-warning".into(), seed, cfg)?;
    m.input(input)?;
    m.output(&json)?;
    m.output(&csv)?;
    m.write(out)
}

/// Stages a bundle requires, with the command that produces each.
pub const STAGES: [(&str, &str); 6] = [
    ("warmstart", "gen-warmstart"),
    ("train", "train-policy"),
    ("simulate", "simulate"),
    ("analyze_rq1", "analyze --rq 1"),
    ("analyze_rq2", "analyze --rq 2"),
    ("analyze_rq3", "analyze --rq 3"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub tool: String,
    pub version: String,
    /// gen-warmstart, train-policy, simulate and analyze (one manifest per question).
    pub stages: BTreeMap<String, serde_json::Value>,
    pub early_warning: Option<RunManifest>,
    pub reports: BTreeMap<String, serde_json::Value>,
}

fn load_manifest(out: &Path, stage: &str) -> CliResult<RunManifest> {
    let path = out.join(manifest_name(stage));
    let m: RunManifest = read_json(&path)?;
    for f in &m.outputs {
        let p = out.join(&f.file);
        let now = if p.is_file() {
            sha256_file(&p)?
        } else {
            String::new()
        };
        if now != f.sha256 {
            return Err(CliError::Data(format!(
                "{} changed or missing since stage {stage} wrote it; rerun `{stage}`",
                p.display()
            )));
        }
    }
    Ok(m)
}

fn report_value(out: &Path, name: &str) -> CliResult<serde_json::Value> {
    let doc: Document<serde_json::Value> = read_json(&out.join(name))?;
    Ok(doc.content)
}

pub fn report(out: &Path, output: &Path) -> CliResult<()> {
    let missing: Vec<String> = STAGES
        .iter()
        .filter(|(stage, _)| !out.join(manifest_name(stage)).is_file())
        .map(|(stage, cmd)| format!("{stage} (run `{cmd}`)"))
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Usage(format!(
            "missing stage outputs: {}",
            missing.join(", ")
        )));
    }
    let to_value =
        |m: RunManifest| serde_json::to_value(m).map_err(|e| CliError::Data(e.to_string()));
    let mut stages = BTreeMap::new();
    stages.insert(
        "gen-warmstart".to_string(),
        to_value(load_manifest(out, "warmstart")?)?,
    );
    stages.insert(
        "train-policy".to_string(),
        to_value(load_manifest(out, "train")?)?,
    );
    stages.insert(
        "simulate".to_string(),
        to_value(load_manifest(out, "simulate")?)?,
    );
    let mut analyze = serde_json::Map::new();
    for rq in 1..=3u8 {
        analyze.insert(
            format!("rq{rq}"),
            to_value(load_manifest(out, &format!("analyze_rq{rq}"))?)?,
        );
    }
    stages.insert("analyze".to_string(), serde_json::Value::Object(analyze));

    let mut reports = BTreeMap::new();
    reports.insert("train".to_string(), report_value(out, TRAIN_REPORT_JSON)?);
    for rq in 1..=3u8 {
        reports.insert(format!("rq{rq}"), report_value(out, &rq_report_name(rq))?);
    }
    let early_warning = if out.join(manifest_name("early_warning")).is_file() {
        reports.insert(
            "early_warning".to_string(),
            report_value(out, EARLY_WARNING_JSON)?,
        );
        Some(load_manifest(out, "early_warning")?)
    } else {
        None
    };
    let bundle = Bundle {
        tool: TOOL.into(),
        version: VERSION.into(),
        stages,
        early_warning,
        reports,
    };
    crate::manifest::write_json(output, &bundle)
}
