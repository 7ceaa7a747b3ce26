//! `align`: fit both corpora jointly and emit the learned correspondence.

use crate::config::{snapshot, ConfigFlags};
use crate::error::{io_error, CliError, Result};
use crate::io::{
    ensure_dir, fmt_f64, read_events_csv, read_matrix_csv, write_manifest, write_matrix_csv,
    write_params_json, write_pgm, RunManifest,
};
use clap::Args;
use hawkes_align::align::align;
use hawkes_align::metrics::{cosine_similarity, plan_entropy, top_k_accuracy, Correspondence};
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Source event CSV (with `<stem>.meta.json` sidecar).
    #[arg(long)]
    pub source: PathBuf,
    /// Target event CSV (with sidecar).
    #[arg(long)]
    pub target: PathBuf,
    /// Optional ground-truth correspondence (dense {0,1} matrix CSV);
    /// enables metrics.json.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Top-K size used for the accuracy metric.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigFlags,
}

pub fn run(args: &AlignArgs) -> Result<()> {
    let start = Instant::now();
    let config = args.config.resolve()?;
    let sequences_s = read_events_csv(&args.source)?;
    let sequences_t = read_events_csv(&args.target)?;
    ensure_dir(&args.out)?;

    let result = align(&sequences_s, &sequences_t, &config)?;
    let state = &result.state;

    write_matrix_csv(&args.out.join("plan.csv"), state.plan.matrix())?;
    write_pgm(&args.out.join("plan.pgm"), state.plan.matrix())?;
    write_params_json(&args.out.join("params_source.json"), &state.params_s)?;
    write_params_json(&args.out.join("params_target.json"), &state.params_t)?;

    let trace_path = args.out.join("trace.csv");
    let mut trace = String::from("round,nll_s,nll_t,fgw,total\n");
    for row in &state.objective_trace {
        trace.push_str(&format!(
            "{},{},{},{},{}\n",
            row.round,
            fmt_f64(row.nll_s),
            fmt_f64(row.nll_t),
            fmt_f64(row.fgw),
            fmt_f64(row.total)
        ));
    }
    fs::write(&trace_path, trace).map_err(|e| io_error(&trace_path, e))?;

    let mut outputs = vec![
        "plan.csv".to_string(),
        "plan.pgm".to_string(),
        "params_source.json".to_string(),
        "params_target.json".to_string(),
        "trace.csv".to_string(),
    ];

    if let Some(truth_path) = &args.truth {
        let truth_matrix = read_matrix_csv(truth_path)?;
        let truth = Correspondence::from_binary_matrix(&truth_matrix).map_err(CliError::from)?;
        let acc = top_k_accuracy(&truth, state.plan.matrix(), args.k)?;
        let sim = cosine_similarity(&truth, state.plan.matrix())?;
        let entropy = plan_entropy(state.plan.matrix());
        let metrics = serde_json::json!({
            "acc_k": acc,
            "k": args.k,
            "sim": sim,
            "entropy": entropy,
        });
        crate::io::write_json_pretty(&args.out.join("metrics.json"), &metrics)?;
        outputs.push("metrics.json".into());
        println!("acc_{} = {acc:.4}, sim = {sim:.4}, entropy = {entropy:.4}", args.k);
    } else {
        let entropy = plan_entropy(state.plan.matrix());
        println!(
            "aligned {}x{} types, plan entropy {entropy:.4}",
            state.plan.dims().0,
            state.plan.dims().1
        );
    }

    let mut manifest = RunManifest::new("align", config.seed);
    manifest.config = serde_json::to_value(snapshot(&config)).unwrap_or_default();
    manifest
        .inputs
        .insert("source".into(), args.source.display().to_string());
    manifest
        .inputs
        .insert("target".into(), args.target.display().to_string());
    if let Some(t) = &args.truth {
        manifest.inputs.insert("truth".into(), t.display().to_string());
    }
    manifest.outputs = outputs;
    manifest
        .timings_ms
        .insert("total".into(), start.elapsed().as_millis());
    write_manifest(&args.out, &manifest)?;
    Ok(())
}
