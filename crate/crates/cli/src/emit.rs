// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Output files. CSVs are deterministic for a fixed seed; only
//! `report.txt` carries the wall time.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qdiv_core::csv::{float, record};
use qdiv_core::propagation::{self, Verdict};

use crate::error::CliError;
use crate::run::RunRecord;
use crate::scenario::ModelSpec;

fn write(path: PathBuf, contents: &str, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
    written.push(path);
    Ok(())
}

fn lines<I: IntoIterator<Item = String>>(header: &[&str], rows: I) -> String {
    let mut out = record(header.iter().copied());
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

/// Per-interval verdicts (quantum) or per-chain verdict (classical).
pub fn verdicts_csv(rec: &RunRecord) -> Option<String> {
    if let Some(r) = &rec.divisibility {
        let header = ["s", "t", "domain_rank", "kernel_ok", "tp_on_domain", "cp", "p_div", "min_choi_eig", "au_margin", "method"];
        let rows = r.intervals.iter().map(|i| {
            record([
                float(i.s),
                float(i.t),
                i.domain_rank.to_string(),
                i.kernel_ok.to_string(),
                i.tp_on_domain.to_string(),
                i.cp.to_string(),
                i.p_div.to_string(),
                float(i.min_choi_eig),
                float(i.au_margin.unwrap_or(f64::NAN)),
                i.method.to_string(),
            ])
        });
        let mut out = lines(&header, rows);
        writeln!(out, "# verdict,{}", r.verdict).unwrap();
        return Some(out);
    }
    rec.classical.as_ref().map(|c| {
        let first = c.first_failure.map(|k| k.to_string()).unwrap_or_default();
        lines(
            &["p_div", "contraction_ok", "agree", "first_failure"],
            [record([c.p_div.to_string(), c.contraction_ok.to_string(), c.agree.to_string(), first])],
        )
    })
}

pub fn backflow_csv(rec: &RunRecord) -> Option<String> {
    let b = rec.backflow.as_ref()?;
    let rows = b.rows.iter().map(|r| {
        record([float(r.t), r.pair_id.to_string(), float(r.p1), b.config.ancilla_dim.to_string(), float(r.sigma)])
    });
    Some(lines(&["t", "pair_id", "p1", "ancilla_dim", "sigma"], rows))
}

pub fn certificates_csv(rec: &RunRecord) -> Option<String> {
    let c = rec.certificates.as_ref()?;
    let rows = c.iter().map(|r| {
        record([
            r.kind.name().to_string(),
            r.id.to_string(),
            float(r.parameter),
            float(r.s),
            float(r.t),
            r.feasible.to_string(),
            float(r.margin),
            r.detail.clone(),
        ])
    });
    Some(lines(&["kind", "id", "parameter", "s", "t", "feasible", "margin", "detail"], rows))
}

/// `(file name, contents)` for every plot-data table.
pub fn plotdata(rec: &RunRecord) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let Some(traj) = &rec.trajectory else { return out };
    let points = traj.grid.points();
    for c in &rec.tracked {
        let rows = points.iter().enumerate().map(|(k, &t)| record([float(t), float(c.norm[k]), float(c.sigma[k])]));
        let name = format!("norm_pair{}_p{}.csv", c.pair_id, (c.p1 * 10.0).round() as i64);
        out.push((name, lines(&["t", "norm", "sigma"], rows)));
    }
    if let Some(p) = &rec.image_profile {
        let rows = p.entries.iter().map(|e| record([float(e.t), e.dim.to_string()]));
        out.push(("image_dims.csv".into(), lines(&["t", "dim"], rows)));
    }
    if let Some(r) = &rec.divisibility {
        let rows = r.intervals.iter().map(|i| record([float(i.t), float(i.min_choi_eig), i.cp.to_string()]));
        out.push(("choi_min.csv".into(), lines(&["t", "min_choi_eig", "cp"], rows)));
    }
    out
}

fn yes_no(b: bool) -> &'static str {
    if b { "yes" } else { "no" }
}

pub fn report_text(rec: &RunRecord) -> String {
    let s = &rec.scenario;
    let mut r = String::new();
    let w = &mut r;
    writeln!(w, "qdiv {}", rec.version).unwrap();
    writeln!(w, "model: {}", s.model.name()).unwrap();
    writeln!(w, "seed: {}", s.sampler.seed).unwrap();
    if let ModelSpec::Quantum(_) = s.model {
        writeln!(w, "grid: t_end = {}, steps = {}", s.grid.t_end, s.grid.steps).unwrap();
    }
    let names: Vec<&str> = s.analyses.iter().map(|a| a.name()).collect();
    writeln!(w, "analyses: {}", if names.is_empty() { "none".to_string() } else { names.join(", ") }).unwrap();
    writeln!(w, "wall time: {:.3} s", rec.wall_time.as_secs_f64()).unwrap();

    if let Some(p) = &rec.image_profile {
        let mut dims: Vec<usize> = p.dims();
        dims.sort();
        dims.dedup();
        writeln!(w, "\n[image-profile]").unwrap();
        writeln!(w, "image dimensions seen: {dims:?} (qubit maps allow only 1, 2, 4)").unwrap();
        match p.first_violation {
            None => writeln!(w, "image non-increasing: yes").unwrap(),
            Some(t) => writeln!(w, "not image non-increasing: Im(L_t) leaves Im(L_s) first at t = {t}").unwrap(),
        }
    }

    if let Some(d) = &rec.divisibility {
        writeln!(w, "\n[divisibility]").unwrap();
        writeln!(w, "verdict: {}", d.verdict).unwrap();
        let basis = match d.verdict {
            Verdict::CpDivisible => "every propagator is CPTP on its domain (Choi test when invertible, two-state extendability otherwise)",
            Verdict::PDivisibleOnly => "propagators are positive and trace preserving but some fail complete positivity",
            Verdict::DivisibleNotP => "propagators exist on every domain but some are not positive",
            Verdict::NotDivisible => "some kernel of L_s is not annihilated by L_t, so no propagator exists",
        };
        writeln!(w, "basis: {basis}").unwrap();
        match d.first_non_invertible {
            Some((k, t)) => writeln!(w, "first non-invertible grid point: index {k}, t = {t}").unwrap(),
            None => writeln!(w, "map invertible at every grid point").unwrap(),
        }
        let m = d.min_choi_eig();
        if m.is_finite() {
            writeln!(w, "smallest Choi eigenvalue over invertible intervals: {m:.6e}").unwrap();
        }
        if let Some(i) = d.first_non_cp() {
            writeln!(w, "first non-CP interval: [{}, {}] via {}", i.s, i.t, i.method).unwrap();
        }
        if d.intervals.iter().any(|i| i.method == propagation::CpMethod::ChoiOfExtension) {
            writeln!(w, "warning: three-dimensional domains were judged by the Choi matrix of the zero extension").unwrap();
        }
    }

    if let Some(c) = &rec.classical {
        writeln!(w, "\n[divisibility]").unwrap();
        writeln!(w, "stochastic intermediate maps exist: {}", yes_no(c.p_div)).unwrap();
        writeln!(w, "L1 distinguishability never increases: {}", yes_no(c.contraction_ok)).unwrap();
        writeln!(w, "verdicts agree (classical divisibility is equivalent to contraction): {}", yes_no(c.agree)).unwrap();
        if let Some(k) = c.first_failure {
            writeln!(w, "first failing step: {k} -> {}", k + 1).unwrap();
        }
    }

    if let Some(b) = &rec.backflow {
        writeln!(w, "\n[backflow]").unwrap();
        writeln!(
            w,
            "pairs: {}, ancilla dimension: {}, biased: {}",
            b.config.n_pairs,
            b.config.ancilla_dim,
            yes_no(b.config.biased)
        )
        .unwrap();
        writeln!(w, "max sigma: {:.6e} (threshold {:.1e})", b.max_sigma, b.threshold).unwrap();
        writeln!(w, "backflow found: {}", yes_no(b.backflow_found())).unwrap();
        if let Some(a) = &b.argmax {
            writeln!(w, "argmax: pair {} at t = {} with p1 = {}", a.pair_id, a.t, a.pair.p1).unwrap();
        }
        if let Some(d) = &rec.divisibility {
            if d.verdict == Verdict::CpDivisible && b.config.ancilla_dim >= 2 && b.config.biased {
                writeln!(w, "CP-divisibility forbids biased backflow with a qubit ancilla: consistent = {}", yes_no(!b.backflow_found())).unwrap();
            }
        }
    }

    if let Some(c) = &rec.certificates {
        writeln!(w, "\n[certify]").unwrap();
        use crate::run::CertificateKind as K;
        let count = |k: K| c.iter().filter(|r| r.kind == k).count();
        let feasible = |k: K| c.iter().filter(|r| r.kind == k && r.feasible).count();
        writeln!(w, "two-state extendability of sampled pairs: {}/{} feasible", feasible(K::TwoState), count(K::TwoState)).unwrap();
        writeln!(
            w,
            "CPTP projectors onto random 3-dimensional density-spanned subspaces: {}/{} feasible (none may exist)",
            feasible(K::CptpProjector),
            count(K::CptpProjector)
        )
        .unwrap();
        for r in c.iter().filter(|r| r.kind == K::PtpProjector) {
            writeln!(w, "PTP projector at p = {}: {} ({})", r.parameter, if r.feasible { "exists" } else { "none" }, r.detail).unwrap();
        }
    }

    for n in &rec.notes {
        writeln!(w, "\nnote: {n}").unwrap();
    }
    writeln!(w, "\n[scenario]").unwrap();
    w.push_str(&s.to_string());
    r
}

/// Writes every output of the record under `dir` and returns the paths.
pub fn emit(rec: &RunRecord, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    write(dir.join("report.txt"), &report_text(rec), &mut written)?;
    if rec.write_trajectory {
        if let Some(traj) = &rec.trajectory {
            let csv = propagation::trajectory_csv(traj, rec.divisibility.as_ref(), rec.scenario.tolerances.rank);
            write(dir.join("trajectory.csv"), &csv, &mut written)?;
        }
    }
    if let Some(v) = verdicts_csv(rec) {
        write(dir.join("verdicts.csv"), &v, &mut written)?;
    }
    if let Some(b) = backflow_csv(rec) {
        write(dir.join("backflow.csv"), &b, &mut written)?;
    }
    if let Some(c) = certificates_csv(rec) {
        write(dir.join("certificates.csv"), &c, &mut written)?;
    }
    let plots = plotdata(rec);
    if !plots.is_empty() {
        let pd = dir.join("plotdata");
        fs::create_dir_all(&pd).map_err(|source| CliError::Io { path: pd.clone(), source })?;
        for (name, contents) in plots {
            write(pd.join(name), &contents, &mut written)?;
        }
    }
    Ok(written)
}
