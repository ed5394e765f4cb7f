//! CSV and report writers. All output is deterministic: fixed column order,
//! shortest round-trip float formatting, no timestamps.

use std::io::Write;
use std::path::Path;

use crate::CliError;

/// `na` marks ratios whose denominator never fired (e.g. P_hd with no
/// handoff attempts).
pub fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "na".to_string(),
    }
}

/// One result row: a single replication or an aggregate (`seed` column holds
/// `mean` / `se` for aggregates).
#[derive(Debug, Clone)]
pub struct RunRow {
    pub seed: String,
    pub load: f64,
    pub policy: String,
    pub p_cb: Vec<Option<f64>>,
    pub p_hd: Vec<Option<f64>>,
    pub utility_raw: Option<f64>,
    pub normalized_utility: Option<f64>,
    pub events_simulated: Option<f64>,
}

pub fn runs_header(k: usize) -> String {
    let mut columns = vec!["seed".to_string(), "load".to_string(), "policy".to_string()];
    for i in 1..=k {
        columns.push(format!("p_cb_{i}"));
    }
    for i in 1..=k {
        columns.push(format!("p_hd_{i}"));
    }
    columns.push("utility_raw".to_string());
    columns.push("normalized_utility".to_string());
    columns.push("events_simulated".to_string());
    columns.join(",")
}

pub fn write_runs_csv(
    path: &Path,
    echo: &[(String, String)],
    k: usize,
    rows: &[RunRow],
) -> Result<(), CliError> {
    let mut out = String::new();
    for (key, value) in echo {
        out.push_str(&format!("# {key} = {value}\n"));
    }
    out.push_str(&runs_header(k));
    out.push('\n');
    for row in rows {
        let mut fields = vec![row.seed.clone(), row.load.to_string(), row.policy.clone()];
        fields.extend(row.p_cb.iter().map(|&v| fmt_opt(v)));
        fields.extend(row.p_hd.iter().map(|&v| fmt_opt(v)));
        fields.push(fmt_opt(row.utility_raw));
        fields.push(fmt_opt(row.normalized_utility));
        fields.push(fmt_opt(row.events_simulated));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

/// One load point of the policy comparison.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub load: f64,
    pub utility_ratio: Option<f64>,
    pub utility_gain: Option<f64>,
    pub p_cb_mdp: Vec<Option<f64>>,
    pub p_hd_mdp: Vec<Option<f64>>,
    pub p_cb_nag: Vec<Option<f64>>,
    pub p_hd_nag: Vec<Option<f64>>,
}

pub fn write_compare_csv(
    path: &Path,
    echo: &[(String, String)],
    k: usize,
    rows: &[CompareRow],
) -> Result<(), CliError> {
    let mut out = String::new();
    for (key, value) in echo {
        out.push_str(&format!("# {key} = {value}\n"));
    }
    let mut columns = vec![
        "load".to_string(),
        "utility_ratio".to_string(),
        "utility_gain".to_string(),
    ];
    for tag in ["mdp", "nag"] {
        for i in 1..=k {
            columns.push(format!("p_cb_{tag}_{i}"));
        }
        for i in 1..=k {
            columns.push(format!("p_hd_{tag}_{i}"));
        }
    }
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        let mut fields = vec![
            row.load.to_string(),
            fmt_opt(row.utility_ratio),
            fmt_opt(row.utility_gain),
        ];
        fields.extend(row.p_cb_mdp.iter().map(|&v| fmt_opt(v)));
        fields.extend(row.p_hd_mdp.iter().map(|&v| fmt_opt(v)));
        fields.extend(row.p_cb_nag.iter().map(|&v| fmt_opt(v)));
        fields.extend(row.p_hd_nag.iter().map(|&v| fmt_opt(v)));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", parent.display())))?;
    }
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(bytes)
        .map_err(|e| CliError::Io(format!("write to {} failed: {e}", path.display())))
}

/// Mean and standard error over the available (non-`na`) replications.
pub fn mean_se(values: &[Option<f64>]) -> (Option<f64>, Option<f64>) {
    let xs: Vec<f64> = values.iter().flatten().copied().collect();
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (Some(mean), None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some((var / n).sqrt()))
}
