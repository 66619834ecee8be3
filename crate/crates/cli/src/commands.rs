use std::path::{Path, PathBuf};

use effattn::adversarial::generate_adversarial;
use effattn::attention::{
    efficient_attention, efficient_attention_unvalidated, identifiability, AttentionMatrix,
    HiddenStates,
};
use effattn::harness::{
    run_experiment1, run_experiment2, run_experiment3, Dims, ExperimentConfig, ExperimentReport,
};
use effattn::linalg::{augment_ones, Tolerance};
use effattn::metrics::{MetricsReport, PredictionVector};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::io::{read_column, read_matrix, write_matrix};
use crate::manifest::SampleManifest;

fn load_pair(
    a_path: &Path,
    t_path: &Path,
    tol: &Tolerance,
) -> CliResult<(AttentionMatrix, HiddenStates)> {
    let a_raw = read_matrix(a_path)?;
    let a = AttentionMatrix::new(a_raw, tol)
        .map_err(|e| CliError::Parse(format!("{}: {e}", a_path.display())))?;
    let t_raw = read_matrix(t_path)?;
    if t_raw.rows() != a.dim() {
        return Err(CliError::Parse(format!(
            "shape mismatch: {} is {}x{} but {} has {} rows",
            a_path.display(),
            a.dim(),
            a.dim(),
            t_path.display(),
            t_raw.rows()
        )));
    }
    Ok((a, HiddenStates::new(t_raw)))
}

fn project_one(
    a: &AttentionMatrix,
    t: &HiddenStates,
    out_path: &Path,
    tol: &Tolerance,
    validate: bool,
    label: &str,
) -> CliResult<()> {
    let eff = if validate {
        efficient_attention(a, t, tol)?
    } else {
        efficient_attention_unvalidated(a, t, tol)?
    };
    write_matrix(out_path, &eff)?;
    let row_sum_err = eff
        .row_sums()
        .iter()
        .map(|s| (s - 1.0).abs())
        .fold(0.0f64, f64::max);
    let prod_err = a
        .matrix()
        .matmul(t.matrix())
        .map_err(CliError::from)?
        .sub(&eff.matmul(t.matrix()).map_err(CliError::from)?)
        .map_err(CliError::from)?
        .max_abs();
    println!(
        "{label}wrote {} ({}x{})",
        out_path.display(),
        eff.rows(),
        eff.cols()
    );
    println!("{label}max row-sum error: {row_sum_err:.3e}");
    println!("{label}min entry: {:.6e}", eff.min_entry());
    println!("{label}max |A_eff.T - A.T|: {prod_err:.3e}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_project(
    a_path: Option<PathBuf>,
    t_path: Option<PathBuf>,
    out: Option<PathBuf>,
    manifest: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    no_validate: bool,
    rank_tol: Option<f64>,
    check_tol: Option<f64>,
) -> CliResult<i32> {
    if let Some(manifest_path) = manifest {
        let out_dir =
            out_dir.ok_or_else(|| CliError::Usage("--manifest requires --out-dir".into()))?;
        let manifest = SampleManifest::load(&manifest_path)?;
        std::fs::create_dir_all(&out_dir)
            .map_err(|e| CliError::Parse(format!("cannot create {}: {e}", out_dir.display())))?;
        let tol = resolve_tolerance_with(
            rank_tol.or(manifest.tolerance.rank_rel),
            check_tol.or(manifest.tolerance.check_abs),
        )?;
        for entry in &manifest.entries {
            let (a, t) = load_pair(&entry.a_path, &entry.t_path, &tol)?;
            let out_path = out_dir.join(format!("{}_eff.csv", entry.id));
            project_one(
                &a,
                &t,
                &out_path,
                &tol,
                !no_validate,
                &format!("[{}] ", entry.id),
            )?;
        }
        return Ok(0);
    }
    let (Some(a_path), Some(t_path), Some(out)) = (a_path, t_path, out) else {
        return Err(CliError::Usage(
            "project needs either <A> <T> --out FILE or --manifest FILE --out-dir DIR".into(),
        ));
    };
    let tol = resolve_tolerance_with(rank_tol, check_tol)?;
    let (a, t) = load_pair(&a_path, &t_path, &tol)?;
    project_one(&a, &t, &out, &tol, !no_validate, "")?;
    Ok(0)
}

pub fn cmd_check(
    t_path: &Path,
    d_v: Option<usize>,
    rank_tol: Option<f64>,
    check_tol: Option<f64>,
) -> CliResult<i32> {
    let tol = resolve_tolerance_with(rank_tol, check_tol)?;
    let t = HiddenStates::new(read_matrix(t_path)?);
    let verdict = identifiability(&t, d_v, &tol).map_err(|e| match e {
        // an inconsistent --dv is an input problem, not a numerical one
        effattn::Error::Degenerate(msg) => CliError::Parse(msg),
        other => CliError::from(other),
    })?;
    println!(
        "{}",
        serde_json::to_string_pretty(&verdict).expect("verdict serializes")
    );
    Ok(if verdict.stochastic_identifiable {
        0
    } else {
        1
    })
}

#[derive(Serialize)]
struct AdversarialSidecar {
    seed: u64,
    lambda_used: f64,
    kernel_dim: usize,
    max_abs_diff: f64,
    kernel_membership_max_abs: f64,
    prediction_preservation_max_error: f64,
    row_sum_max_error: f64,
    min_entry: f64,
    efficient_projection_consistency: f64,
}

pub fn cmd_adversarial(
    a_path: &Path,
    t_path: &Path,
    seed: u64,
    out: &Path,
    rank_tol: Option<f64>,
    check_tol: Option<f64>,
) -> CliResult<i32> {
    let tol = resolve_tolerance_with(rank_tol, check_tol)?;
    let (a, t) = load_pair(a_path, t_path, &tol)?;
    let sample = generate_adversarial(&a, &t, seed, &tol)?;
    write_matrix(out, sample.adversarial.matrix())?;

    let diff = sample
        .adversarial
        .matrix()
        .sub(a.matrix())
        .map_err(CliError::from)?;
    let kernel_membership = diff
        .matmul(&augment_ones(t.matrix()))
        .map_err(CliError::from)?
        .max_abs();
    let pred_err = a
        .matrix()
        .matmul(t.matrix())
        .map_err(CliError::from)?
        .sub(
            &sample
                .adversarial
                .matrix()
                .matmul(t.matrix())
                .map_err(CliError::from)?,
        )
        .map_err(CliError::from)?
        .max_abs();
    let eff_a = efficient_attention_unvalidated(&a, &t, &tol)?;
    let eff_adv = efficient_attention_unvalidated(&sample.adversarial, &t, &tol)?;
    let sidecar = AdversarialSidecar {
        seed,
        lambda_used: sample.lambda_used,
        kernel_dim: identifiability(&t, None, &tol)?.kernel_dim,
        max_abs_diff: diff.max_abs(),
        kernel_membership_max_abs: kernel_membership,
        prediction_preservation_max_error: pred_err,
        row_sum_max_error: sample
            .adversarial
            .matrix()
            .row_sums()
            .iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0f64, f64::max),
        min_entry: sample.adversarial.matrix().min_entry(),
        efficient_projection_consistency: eff_a.sub(&eff_adv).map_err(CliError::from)?.max_abs(),
    };
    let sidecar_path = out.with_extension("json");
    std::fs::write(
        &sidecar_path,
        format!(
            "{}\n",
            serde_json::to_string_pretty(&sidecar).expect("sidecar serializes")
        ),
    )
    .map_err(|e| CliError::Parse(format!("cannot write {}: {e}", sidecar_path.display())))?;
    println!("wrote {} and {}", out.display(), sidecar_path.display());
    println!("lambda: {:.6e}", sample.lambda_used);
    println!("|A_adv - A|_inf: {:.6e}", sidecar.max_abs_diff);
    println!(
        "prediction preservation max error: {:.3e}",
        sidecar.prediction_preservation_max_error
    );
    Ok(0)
}

fn report_csv(report: &ExperimentReport) -> String {
    let mut header = String::from("dataset,n_samples");
    let mut row = format!("{},{}", report.dataset_label, report.n_samples);
    for (key, value) in &report.metrics {
        header.push(',');
        header.push_str(key);
        row.push(',');
        // same shortest-round-trip notation as the JSON twin
        row.push_str(&serde_json::to_string(value).expect("finite metric serializes"));
    }
    format!("{header}\n{row}\n")
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_experiment(
    which: u8,
    ds: usize,
    d: usize,
    dv: usize,
    dq: usize,
    n: usize,
    seed: u64,
    out: &Path,
    label: Option<String>,
    renormalize_complement: bool,
    rank_tol: Option<f64>,
    check_tol: Option<f64>,
) -> CliResult<i32> {
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let dims = Dims::new(ds, d, dv, dq).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut cfg = ExperimentConfig::new(dims, n, seed);
    cfg.tol = resolve_tolerance_with(rank_tol, check_tol)?;
    cfg.renormalize_complement = renormalize_complement;
    cfg.label = label;
    let report = match which {
        1 => run_experiment1(&cfg)?,
        2 => run_experiment2(&cfg)?,
        3 => run_experiment3(&cfg)?,
        _ => return Err(CliError::Usage(format!("unknown experiment {which}"))),
    };
    let json_path = out.with_extension("json");
    let csv_path = out.with_extension("csv");
    std::fs::write(
        &json_path,
        format!(
            "{}\n",
            serde_json::to_string_pretty(&report).expect("report serializes")
        ),
    )
    .map_err(|e| CliError::Parse(format!("cannot write {}: {e}", json_path.display())))?;
    std::fs::write(&csv_path, report_csv(&report))
        .map_err(|e| CliError::Parse(format!("cannot write {}: {e}", csv_path.display())))?;
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    for (key, value) in &report.metrics {
        println!("{key}: {value:.6e}");
    }
    Ok(0)
}

pub fn cmd_metrics(p_path: &Path, q_path: &Path) -> CliResult<i32> {
    let p = PredictionVector::new(read_column(p_path)?)
        .map_err(|e| CliError::Parse(format!("{}: {e}", p_path.display())))?;
    let q = PredictionVector::new(read_column(q_path)?)
        .map_err(|e| CliError::Parse(format!("{}: {e}", q_path.display())))?;
    let report = MetricsReport::compute(&p, &q).map_err(|e| match e {
        effattn::Error::Dimension(msg) | effattn::Error::Empty(msg) => CliError::Parse(msg),
        other => CliError::from(other),
    })?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    Ok(0)
}

/// Tolerance resolution: explicit values (flags or manifest) win, then the
/// `EFFATTN_TOL` environment variable (`RANK_REL:CHECK_ABS`, or a single
/// value for `check_abs`), then the defaults.
fn resolve_tolerance_with(rank: Option<f64>, check: Option<f64>) -> CliResult<Tolerance> {
    let mut rank_rel = Tolerance::DEFAULT_RANK_REL;
    let mut check_abs = Tolerance::DEFAULT_CHECK_ABS;
    if let Ok(value) = std::env::var("EFFATTN_TOL") {
        let parts: Vec<&str> = value.split(':').collect();
        let parse = |s: &str| -> CliResult<f64> {
            s.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("EFFATTN_TOL: cannot parse '{s}'")))
        };
        match parts.as_slice() {
            [one] => check_abs = parse(one)?,
            [a, b] => {
                rank_rel = parse(a)?;
                check_abs = parse(b)?;
            }
            _ => {
                return Err(CliError::Usage(format!(
                    "EFFATTN_TOL must be 'CHECK_ABS' or 'RANK_REL:CHECK_ABS', got '{value}'"
                )))
            }
        }
    }
    if let Some(r) = rank {
        rank_rel = r;
    }
    if let Some(c) = check {
        check_abs = c;
    }
    Tolerance::new(rank_rel, check_abs).map_err(|e| CliError::Usage(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_resolution_order() {
        // flags beat defaults (env var interplay is covered in the
        // integration suite to avoid cross-test env races)
        let t = resolve_tolerance_with(Some(1e-8), Some(1e-7)).unwrap();
        assert_eq!(t.rank_rel(), 1e-8);
        assert_eq!(t.check_abs(), 1e-7);
        let d = resolve_tolerance_with(None, None).unwrap();
        assert_eq!(d.rank_rel(), Tolerance::DEFAULT_RANK_REL);
        assert!(resolve_tolerance_with(Some(-1.0), None).is_err());
    }
}
