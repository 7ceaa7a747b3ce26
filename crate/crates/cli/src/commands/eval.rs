//! `eval`: score a stored transport plan against a ground truth.

use crate::error::{CliError, Result};
use crate::io::{read_matrix_csv, write_json_pretty};
use clap::Args;
use hawkes_align::metrics::{cosine_similarity, plan_entropy, top_k_accuracy, Correspondence};
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Transport plan (dense matrix CSV).
    #[arg(long)]
    pub plan: PathBuf,
    /// Ground-truth correspondence ({0,1} matrix CSV of the same shape).
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Also write the metrics JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let plan = read_matrix_csv(&args.plan)?;
    let truth_matrix = read_matrix_csv(&args.truth)?;
    let truth = Correspondence::from_binary_matrix(&truth_matrix).map_err(CliError::from)?;
    let acc = top_k_accuracy(&truth, &plan, args.k)?;
    let sim = cosine_similarity(&truth, &plan)?;
    let entropy = plan_entropy(&plan);
    let metrics = serde_json::json!({
        "acc_k": acc,
        "k": args.k,
        "sim": sim,
        "entropy": entropy,
    });
    println!("{}", serde_json::to_string_pretty(&metrics).unwrap());
    if let Some(path) = &args.out {
        write_json_pretty(path, &metrics)?;
    }
    Ok(())
}
