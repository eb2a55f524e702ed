//! The seven pipeline commands: featurize, fuse, train, curve, sweep,
//! bench, report. Each one reads its inputs, runs the corresponding library
//! machinery, and writes deterministic CSV/JSON outputs plus a manifest into
//! the output directory.

use crate::config::RunConfig;
use crate::output::{
    self, csv_cell, ensure_out_dir, out_path, write_csv, write_json, FusionArtifacts, Manifest,
};
use anyhow::{anyhow, bail, Context, Result};
use molfuse_core::bench::{self, SeparationMode};
use molfuse_core::dataio::{self, FeatureTable, LabelVector};
use molfuse_core::featurize;
use molfuse_core::fusion::{self, FusionMode, FusionSpec};
use molfuse_core::multiset;
use molfuse_core::regress::{self, CvReport};
use molfuse_core::smiles;
use molfuse_core::stats::{self, SummaryStats};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

fn load_tables(cfg: &RunConfig) -> Result<Vec<FeatureTable>> {
    let mut tables = Vec::with_capacity(cfg.inputs.len());
    for (name, path) in &cfg.inputs {
        let table = dataio::load_feature_table(path, name)
            .with_context(|| format!("loading feature table '{name}'"))?;
        tables.push(table);
    }
    Ok(dataio::align_to_first(&tables)?)
}

fn load_labels(cfg: &RunConfig) -> Result<LabelVector> {
    let path = cfg
        .labels_path
        .as_ref()
        .ok_or_else(|| anyhow!("config [labels] path is required"))?;
    let property = cfg
        .labels_property
        .as_ref()
        .ok_or_else(|| anyhow!("config [labels] property is required"))?;
    Ok(dataio::load_labels(path, property)?)
}

fn fusion_spec(cfg: &RunConfig) -> FusionSpec {
    FusionSpec {
        mode: cfg.fusion_mode.clone(),
        p: cfg.p,
        whiten: cfg.whiten,
        iva: cfg.iva_options(),
    }
}

/// `featurize`: turn SMILES and/or XYZ inputs into feature-table CSVs.
pub fn featurize(cfg: &RunConfig) -> Result<()> {
    if cfg.smiles.is_none() && cfg.xyz.is_none() {
        bail!("config [inputs] needs a 'smiles' or 'xyz' entry to featurize");
    }
    ensure_out_dir(&cfg.out)?;

    if let Some(smiles_path) = &cfg.smiles {
        let graphs = smiles::load_smiles_file(smiles_path)?;
        if graphs.is_empty() {
            bail!("{}: no molecules", smiles_path.display());
        }
        let vocab = featurize::build_bond_vocabulary(&graphs)?;
        let sob = featurize::sum_over_bonds(&graphs, &vocab, "sob")?;
        dataio::write_feature_table(&out_path(&cfg.out, "sob.csv"), &sob)?;

        let dmax = graphs.iter().map(|g| g.atoms.len()).max().unwrap_or(0);
        let we = featurize::we_table(&graphs, dmax, "we")?;
        dataio::write_feature_table(&out_path(&cfg.out, "we.csv"), &we)?;
        println!(
            "featurized {} molecules: sob d={} ({} bond types), we d={}",
            graphs.len(),
            sob.d(),
            vocab.len(),
            we.d()
        );
    }

    if let Some(xyz_path) = &cfg.xyz {
        let set = dataio::load_xyz_set(xyz_path)?;
        if set.molecules.is_empty() {
            bail!("{}: no molecules", xyz_path.display());
        }
        let dmax = set.max_atom_count();
        let cme = featurize::cme_table(&set, dmax, "cme")?;
        dataio::write_feature_table(&out_path(&cfg.out, "cme.csv"), &cme)?;
        println!("featurized {} geometries: cme d={}", set.molecules.len(), cme.d());
    }

    write_json(
        &out_path(&cfg.out, "manifest.json"),
        &Manifest::new("featurize", cfg.seed, &cfg.config_text),
    )
}

fn fused_table(
    fit: &fusion::FusionFit,
    tables: &[FeatureTable],
    spec: &FusionSpec,
) -> Result<FeatureTable> {
    let data = fit.transform(tables)?;
    let labels: Vec<String> = match &spec.mode {
        FusionMode::Single(name) => tables
            .iter()
            .find(|t| &t.name == name)
            .expect("validated by fit")
            .features
            .clone(),
        FusionMode::Regular => tables
            .iter()
            .flat_map(|t| t.features.iter().map(move |f| format!("{}:{f}", t.name)))
            .collect(),
        FusionMode::Ica | FusionMode::Iva => {
            let mut labels = Vec::with_capacity(data.nrows());
            for p in 0..spec.p {
                for name in fit.dataset_names.iter() {
                    labels.push(format!("s{}_{name}", p + 1));
                }
            }
            labels
        }
    };
    Ok(FeatureTable::new(
        "fused",
        labels,
        data,
        tables[0].molecule_ids.clone(),
    )?)
}

/// `fuse`: fit the configured fusion on the full dataset and write the fused
/// features plus reducer/demixing artifacts.
pub fn fuse(cfg: &RunConfig) -> Result<()> {
    cfg.check_paths(true, false)?;
    ensure_out_dir(&cfg.out)?;
    let tables = load_tables(cfg)?;
    let spec = fusion_spec(cfg);

    let fit = fusion::fit_fusion(&tables, &spec)?;
    let fused = fused_table(&fit, &tables, &spec)?;
    dataio::write_feature_table(&out_path(&cfg.out, "fused.csv"), &fused)?;
    write_json(
        &out_path(&cfg.out, "artifacts.json"),
        &FusionArtifacts::new(&spec, &tables, fit),
    )?;
    write_json(
        &out_path(&cfg.out, "manifest.json"),
        &Manifest::new("fuse", cfg.seed, &cfg.config_text),
    )?;
    println!(
        "fused {} tables -> {} features x {} molecules ({})",
        tables.len(),
        fused.d(),
        fused.n(),
        spec.describe(&tables)
    );
    Ok(())
}

fn write_report_files(dir: &Path, report: &CvReport) -> Result<()> {
    write_json(&out_path(dir, "report.json"), report)?;
    let rows: Vec<Vec<String>> = report
        .cells
        .iter()
        .map(|c| {
            vec![
                c.repeat.to_string(),
                c.fold.to_string(),
                csv_cell(c.test_mae),
                csv_cell(c.sigma),
                csv_cell(c.lambda),
            ]
        })
        .collect();
    write_csv(
        &out_path(dir, "cells.csv"),
        "repeat,fold,test_mae,sigma,lambda",
        &rows,
    )
}

/// `train`: the three-stage pipeline under nested cross-validation, plus a
/// full-data fusion fit for the interpretability artifacts.
pub fn train(cfg: &RunConfig) -> Result<CvReport> {
    cfg.check_paths(true, true)?;
    ensure_out_dir(&cfg.out)?;
    let tables = load_tables(cfg)?;
    let labels = load_labels(cfg)?;
    let spec = fusion_spec(cfg);

    let report = regress::nested_cv(&tables, &labels, &cfg.cv_config(), &spec)?;
    write_report_files(&cfg.out, &report)?;

    let full_fit = fusion::fit_fusion(&tables, &spec)?;
    write_json(
        &out_path(&cfg.out, "artifacts.json"),
        &FusionArtifacts::new(&spec, &tables, full_fit),
    )?;
    write_json(
        &out_path(&cfg.out, "manifest.json"),
        &Manifest::new("train", cfg.seed, &cfg.config_text),
    )?;
    println!(
        "{} on {} ({} molecules, fused dimension {}): MAE mean {:.6}, median {:.6} over {} cells",
        report.feature_set,
        report.property,
        report.n_used,
        report.feature_dimension,
        report.mae.mean,
        report.mae.median,
        report.cells.len()
    );
    Ok(report)
}

#[derive(Debug, Serialize)]
struct CurveFit {
    c: f64,
    alpha: f64,
    points: Vec<(usize, f64)>,
}

/// `curve`: learning curve over seeded subsamples plus a power-law fit.
pub fn curve(cfg: &RunConfig) -> Result<()> {
    cfg.check_paths(true, true)?;
    if cfg.curve_sizes.is_empty() {
        bail!("config [curve] sizes is required (comma-separated molecule counts)");
    }
    ensure_out_dir(&cfg.out)?;
    let tables = load_tables(cfg)?;
    let labels = load_labels(cfg)?;
    let spec = fusion_spec(cfg);
    let n = tables[0].n();

    let mut sizes = cfg.curve_sizes.clone();
    sizes.sort_unstable();
    if let Some(&too_big) = sizes.iter().find(|&&s| s > n) {
        bail!("curve size {too_big} exceeds the {n} available molecules");
    }

    let mut points = Vec::with_capacity(sizes.len());
    for (idx, &size) in sizes.iter().enumerate() {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1_000_000 + idx as u64);
        perm.shuffle(&mut rng);
        let chosen = &perm[..size];
        let sub_tables: Vec<FeatureTable> =
            tables.iter().map(|t| t.select_columns(chosen)).collect();
        let sub_labels = labels.select_to(&sub_tables[0].molecule_ids)?;
        let report = regress::nested_cv(&sub_tables, &sub_labels, &cfg.cv_config(), &spec)?;
        println!("curve point N={size}: mean MAE {:.6}", report.mae.mean);
        points.push((size, report.mae.mean));
    }

    let float_points: Vec<(f64, f64)> =
        points.iter().map(|&(s, m)| (s as f64, m)).collect();
    let (c, alpha) = regress::fit_learning_curve(&float_points)?;
    println!("power-law fit: mae = {c:.6} * N^{alpha:.4}");

    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|&(s, m)| vec![s.to_string(), csv_cell(m)])
        .collect();
    write_csv(&out_path(&cfg.out, "curve.csv"), "n,mae", &rows)?;
    write_json(
        &out_path(&cfg.out, "curve_fit.json"),
        &CurveFit { c, alpha, points },
    )?;
    write_json(
        &out_path(&cfg.out, "manifest.json"),
        &Manifest::new("curve", cfg.seed, &cfg.config_text),
    )
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (0..k).collect();
    if k == 0 || k > n {
        return out;
    }
    loop {
        out.push(combo.clone());
        // Advance to the next lexicographic combination.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if combo[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        combo[i] += 1;
        for j in (i + 1)..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result = 1usize;
    for i in 0..k {
        result = result * (n - i) / (i + 1);
    }
    result
}

#[derive(Debug, Serialize)]
struct SweepRow {
    members: String,
    mode: String,
    feature_dimension: usize,
    mae: SummaryStats,
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    k: usize,
    combinations: usize,
    regular: SummaryStats,
    iva: SummaryStats,
}

/// `sweep`: every k-subset of the input tables, trained with both the plain
/// concatenation and the IVA fusion.
pub fn sweep(cfg: &RunConfig) -> Result<()> {
    cfg.check_paths(true, true)?;
    ensure_out_dir(&cfg.out)?;
    let tables = load_tables(cfg)?;
    let labels = load_labels(cfg)?;
    let n_tables = tables.len();
    let k = cfg.sweep_k;
    if k == 0 || k > n_tables {
        bail!("sweep k = {k} must lie in 1..={n_tables}");
    }

    let combos = combinations(n_tables, k);
    assert_eq!(combos.len(), binomial(n_tables, k));

    let cv = cfg.cv_config();
    let iva_spec = FusionSpec::iva(cfg.p, cfg.iva_options());
    let regular_spec = FusionSpec::regular();

    let results: Vec<Result<(String, CvReport, CvReport)>> = combos
        .par_iter()
        .map(|combo| {
            let subset: Vec<FeatureTable> =
                combo.iter().map(|&i| tables[i].clone()).collect();
            let members = subset
                .iter()
                .map(|t| t.name.as_str())
                .collect::<Vec<_>>()
                .join("+");
            let regular = regress::nested_cv(&subset, &labels, &cv, &regular_spec)
                .with_context(|| format!("regular pipeline on {members}"))?;
            let iva = regress::nested_cv(&subset, &labels, &cv, &iva_spec)
                .with_context(|| format!("iva pipeline on {members}"))?;
            Ok((members, regular, iva))
        })
        .collect();

    let mut rows = Vec::new();
    let mut regular_means = Vec::new();
    let mut iva_means = Vec::new();
    let mut csv_rows = Vec::new();
    for result in results {
        let (members, regular, iva) = result?;
        regular_means.push(regular.mae.mean);
        iva_means.push(iva.mae.mean);
        for (mode, report) in [("regular", &regular), ("iva", &iva)] {
            csv_rows.push(vec![
                members.clone(),
                mode.to_string(),
                report.feature_dimension.to_string(),
                csv_cell(report.mae.mean),
                csv_cell(report.mae.std),
                csv_cell(report.mae.median),
                csv_cell(report.mae.q1),
                csv_cell(report.mae.q3),
            ]);
            rows.push(SweepRow {
                members: members.clone(),
                mode: mode.to_string(),
                feature_dimension: report.feature_dimension,
                mae: report.mae,
            });
        }
    }

    write_csv(
        &out_path(&cfg.out, "sweep.csv"),
        "members,mode,feature_dimension,mae_mean,mae_std,mae_median,mae_q1,mae_q3",
        &csv_rows,
    )?;
    let summary = SweepSummary {
        k,
        combinations: combos.len(),
        regular: SummaryStats::from_values(&regular_means),
        iva: SummaryStats::from_values(&iva_means),
    };
    write_json(&out_path(&cfg.out, "sweep_summary.json"), &summary)?;
    write_json(&out_path(&cfg.out, "sweep_rows.json"), &rows)?;
    write_json(
        &out_path(&cfg.out, "manifest.json"),
        &Manifest::new("sweep", cfg.seed, &cfg.config_text),
    )?;
    println!(
        "swept {} combinations of {k}: regular median MAE {:.6}, iva median MAE {:.6}",
        combos.len(),
        summary.regular.median,
        summary.iva.median
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct BenchSummary {
    trials: usize,
    per_mode: Vec<(String, SummaryStats)>,
    paired_ica_minus_iva: Option<PairedSummary>,
}

#[derive(Debug, Serialize)]
struct PairedSummary {
    mean_diff: f64,
    t_stat: f64,
    p_one_sided: f64,
    ci95: (f64, f64),
}

/// `bench`: the synthetic recovery benchmark over seeded trials and modes.
pub fn bench_command(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(&cfg.out)?;
    let b = &cfg.bench;
    if b.seeds == 0 || b.modes.is_empty() {
        bail!("bench needs at least one seed and one mode");
    }
    let opts = cfg.iva_options();

    struct TrialRow {
        trial: u64,
        seed: u64,
        mode: SeparationMode,
        jisi: f64,
        iterations: usize,
        converged: bool,
    }

    let trials: Vec<Result<Vec<TrialRow>>> = (0..b.seeds as u64)
        .into_par_iter()
        .map(|trial| {
            let seed = bench::trial_seed(cfg.seed, trial);
            let problem = bench::make_problem(b.k, b.p, b.n, b.rho, b.cond_bound, seed)
                .with_context(|| format!("generating trial {trial}"))?;
            let mut rows = Vec::with_capacity(b.modes.len());
            for &mode in &b.modes {
                let started = std::time::Instant::now();
                let result = bench::recovery_experiment(&problem, &opts, mode)
                    .with_context(|| format!("separating trial {trial} with {mode}"))?;
                eprintln!(
                    "trial {trial} {mode}: jISI {:.5} in {} iterations ({:.2}s)",
                    result.jisi,
                    result.demixing.iterations,
                    started.elapsed().as_secs_f64()
                );
                rows.push(TrialRow {
                    trial,
                    seed,
                    mode,
                    jisi: result.jisi,
                    iterations: result.demixing.iterations,
                    converged: result.demixing.converged,
                });
            }
            Ok(rows)
        })
        .collect();

    let mut csv_rows = Vec::new();
    let mut scores: Vec<(SeparationMode, Vec<f64>)> =
        b.modes.iter().map(|&m| (m, Vec::new())).collect();
    for trial_rows in trials {
        for row in trial_rows? {
            csv_rows.push(vec![
                row.trial.to_string(),
                row.seed.to_string(),
                row.mode.to_string(),
                csv_cell(row.jisi),
                row.iterations.to_string(),
                row.converged.to_string(),
            ]);
            scores
                .iter_mut()
                .find(|(m, _)| *m == row.mode)
                .expect("mode registered")
                .1
                .push(row.jisi);
        }
    }

    write_csv(
        &out_path(&cfg.out, "bench.csv"),
        "trial,seed,mode,jisi,iterations,converged",
        &csv_rows,
    )?;

    let per_mode: Vec<(String, SummaryStats)> = scores
        .iter()
        .map(|(m, v)| (m.to_string(), SummaryStats::from_values(v)))
        .collect();
    let paired = {
        let iva = scores.iter().find(|(m, _)| *m == SeparationMode::Iva);
        let ica = scores.iter().find(|(m, _)| *m == SeparationMode::Ica);
        match (iva, ica) {
            (Some((_, iva)), Some((_, ica))) if iva.len() == ica.len() && iva.len() >= 2 => {
                let diffs: Vec<f64> = ica.iter().zip(iva).map(|(a, b)| a - b).collect();
                let test = stats::paired_t_test_greater(&diffs);
                let ci = stats::paired_mean_ci(&diffs, 0.95);
                Some(PairedSummary {
                    mean_diff: test.mean_diff,
                    t_stat: test.t_stat,
                    p_one_sided: test.p_value,
                    ci95: ci,
                })
            }
            _ => None,
        }
    };
    let summary = BenchSummary {
        trials: b.seeds,
        per_mode,
        paired_ica_minus_iva: paired,
    };
    write_json(&out_path(&cfg.out, "bench_summary.json"), &summary)?;
    write_json(
        &out_path(&cfg.out, "manifest.json"),
        &Manifest::new("bench", cfg.seed, &cfg.config_text),
    )?;
    for (mode, s) in &summary.per_mode {
        println!("{mode}: median jISI {:.5}, mean {:.5}", s.median, s.mean);
    }
    Ok(())
}

/// `report`: per-dataset mixing-matrix weights from the artifacts of a
/// previous `train` or `fuse` run with an ICA/IVA mode.
pub fn report(cfg: &RunConfig) -> Result<()> {
    let artifacts: FusionArtifacts = output::read_json(&out_path(&cfg.out, "artifacts.json"))
        .context("mixing report needs artifacts.json from a previous train/fuse run")?;
    let demixing = artifacts.fit.demixing.as_ref().ok_or_else(|| {
        anyhow!(
            "mixing report requires an iva or ica run; artifacts were written by mode '{}'",
            artifacts.spec.mode
        )
    })?;

    for (k, name) in artifacts.dataset_names.iter().enumerate() {
        let reducer = &artifacts.fit.reducers[k];
        let a_hat = multiset::back_reconstruct(reducer, &demixing.w[k])?;
        let labels = &artifacts.feature_labels[k];
        let mut rows = Vec::new();
        for p in 0..reducer.p() {
            let mut weighted: Vec<(usize, f64)> = (0..reducer.d())
                .map(|d| (d, a_hat[[d, p]]))
                .collect();
            weighted.sort_by(|a, b| {
                b.1.abs()
                    .partial_cmp(&a.1.abs())
                    .expect("finite weights")
                    .then(a.0.cmp(&b.0))
            });
            for (d, weight) in weighted {
                rows.push(vec![
                    format!("s{}", p + 1),
                    labels[d].clone(),
                    csv_cell(weight),
                ]);
            }
        }
        let file = out_path(&cfg.out, &format!("mixing_{name}.csv"));
        write_csv(&file, "source,feature,weight", &rows)?;
        println!(
            "wrote {} ({}x{} weights)",
            file.display(),
            reducer.d(),
            reducer.p()
        );
    }
    Ok(())
}
