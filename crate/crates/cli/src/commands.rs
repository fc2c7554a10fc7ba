use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bclab_core::finite_size::{abs_moment, finite_size_law, mc_estimate};
use bclab_core::harness::{
    mdp_rate_estimate, run_finite_size_asymptotics, weak_limit_distance, Estimator,
};
use bclab_core::model::free_energy;
use bclab_core::phase::{classify, first_order_k, second_order_k, verify_tricritical_conjectures, BETA_C};
use bclab_core::{thermo_magnetization, QuadratureConfig};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{req, CommandName, EstimatorName, Settings};

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path)
        .with_context(|| format!("output_path: cannot create {}", path.display()))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut f = BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn dispatch(name: CommandName, s: Settings) -> Result<()> {
    match name {
        CommandName::PhaseDiagram => phase_diagram(s),
        CommandName::Magnetize => magnetize(s),
        CommandName::FiniteSize => finite_size(s),
        CommandName::Mc => mc(s),
        CommandName::SequenceRun => sequence_run(s),
        CommandName::MdpCheck => mdp_check(s),
        CommandName::WeakLimit => weak_limit(s),
        CommandName::Conjectures => conjectures(s),
    }
}

fn phase_diagram(s: Settings) -> Result<()> {
    let (lo, hi) = (req(s.beta_min, "beta_min")?, req(s.beta_max, "beta_max")?);
    let points = req(s.points, "points")?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        bail!("beta_min/beta_max: need 0 < beta_min < beta_max");
    }
    let betas: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let rows = betas
        .par_iter()
        .map(|&b| {
            let k = second_order_k(b)?;
            let k1 = if b > BETA_C { Some(first_order_k(b)?) } else { None };
            Ok((b, k, k1))
        })
        .collect::<bclab_core::Result<Vec<_>>>()
        .context("phase-diagram")?;
    let mut w = csv_writer(&req(s.output_path, "output_path")?)?;
    w.write_record(["beta", "K_second_order", "K_first_order"])?;
    for (b, k, k1) in rows {
        w.write_record([num(b), num(k), k1.map(num).unwrap_or_default()])?;
    }
    w.flush()?;
    Ok(())
}

fn magnetize(s: Settings) -> Result<()> {
    let p = req(s.params, "params")?;
    let m = thermo_magnetization(p);
    let g = free_energy(p, m).context("magnetize")?;
    let out = json!({
        "beta": p.beta(),
        "kappa": p.kappa(),
        "m": m,
        "free_energy_at_m": g,
        "region": classify(p),
    });
    match s.output_path {
        Some(path) => write_json(&path, &out),
        None => {
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(())
        }
    }
}

fn finite_size(s: Settings) -> Result<()> {
    let p = req(s.params, "params")?;
    let ns = req(s.n_list, "n_list")?;
    let rows = ns
        .iter()
        .map(|&n| {
            let law = finite_size_law(n as usize, p)?;
            Ok((n, abs_moment(&law, 1.0, 0.0)))
        })
        .collect::<bclab_core::Result<Vec<_>>>()
        .context("finite-size")?;
    let m = thermo_magnetization(p);
    let mut w = csv_writer(&req(s.output_path, "output_path")?)?;
    w.write_record(["n", "beta", "kappa", "m_thermo", "e_finite"])?;
    for (n, e) in rows {
        w.write_record([n.to_string(), num(p.beta()), num(p.kappa()), num(m), num(e)])?;
    }
    w.flush()?;
    Ok(())
}

fn mc(s: Settings) -> Result<()> {
    let p = req(s.params, "params")?;
    let ns = req(s.n_list, "n_list")?;
    let sweeps = req(s.sweeps, "sweeps")?;
    let seed = req(s.seed, "seed")?;
    let burn_in = s.burn_in.unwrap_or(sweeps / 10);
    let rows = ns
        .par_iter()
        .map(|&n| mc_estimate(n as usize, p, sweeps, burn_in, seed ^ n).map(|e| (n, e)))
        .collect::<bclab_core::Result<Vec<_>>>()
        .context("mc")?;
    let mut w = csv_writer(&req(s.output_path, "output_path")?)?;
    w.write_record(["n", "beta", "kappa", "mean", "stderr", "sweeps", "seed"])?;
    for (n, e) in rows {
        w.write_record([
            n.to_string(),
            num(p.beta()),
            num(p.kappa()),
            num(e.mean),
            num(e.stderr),
            e.sweeps.to_string(),
            e.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn sequence_run(s: Settings) -> Result<()> {
    let spec = req(s.spec, "spec")?;
    let ns = req(s.n_list, "n_list")?;
    let estimator = match s.estimator.unwrap_or(EstimatorName::Exact) {
        EstimatorName::Exact => {
            for (key, set) in [
                ("sweeps", s.sweeps.is_some()),
                ("burn_in", s.burn_in.is_some()),
                ("seed", s.seed.is_some()),
            ] {
                if set {
                    bail!("{key}: only used with estimator mc");
                }
            }
            Estimator::Exact
        }
        EstimatorName::Mc => {
            let sweeps = req(s.sweeps, "sweeps")?;
            Estimator::MonteCarlo {
                sweeps,
                burn_in: s.burn_in.unwrap_or(sweeps / 10),
                seed: req(s.seed, "seed")?,
            }
        }
    };
    let report = run_finite_size_asymptotics(&spec, &ns, estimator, &QuadratureConfig::default())
        .context("sequence-run")?;
    let path = req(s.output_path, "output_path")?;
    let file = File::create(&path)
        .with_context(|| format!("output_path: cannot create {}", path.display()))?;
    report.write_csv(BufWriter::new(file))?;
    std::fs::write(sidecar_path(&path), report.constants_json())
        .context("output_path: writing JSON sidecar")?;
    Ok(())
}

fn mdp_check(s: Settings) -> Result<()> {
    let spec = req(s.spec, "spec")?;
    let report = mdp_rate_estimate(&spec, req(s.a, "a")?, &req(s.n_list, "n_list")?)
        .context("mdp-check")?;
    let path = req(s.output_path, "output_path")?;
    let mut w = csv_writer(&path)?;
    w.write_record(["n", "log_tail", "rate_est", "saturated"])?;
    for r in &report.rows {
        w.write_record([
            r.n.to_string(),
            num(r.log_tail),
            r.rate_est.map(num).unwrap_or_default(),
            r.saturated.to_string(),
        ])?;
    }
    w.flush()?;
    write_json(
        &sidecar_path(&path),
        &json!({ "a": report.a, "target": report.target, "speed": report.speed }),
    )
}

fn weak_limit(s: Settings) -> Result<()> {
    let spec = req(s.spec, "spec")?;
    let quad = QuadratureConfig::default();
    let rows = req(s.n_list, "n_list")?
        .into_iter()
        .map(|n| weak_limit_distance(&spec, n, &quad).map(|d| (n, d)))
        .collect::<bclab_core::Result<Vec<_>>>()
        .context("weak-limit")?;
    let mut w = csv_writer(&req(s.output_path, "output_path")?)?;
    w.write_record(["n", "distance"])?;
    for (n, d) in rows {
        w.write_record([n.to_string(), num(d)])?;
    }
    w.flush()?;
    Ok(())
}

fn conjectures(s: Settings) -> Result<()> {
    let check =
        verify_tricritical_conjectures(&req(s.h_list, "h_list")?).context("conjectures")?;
    let mut w = csv_writer(&req(s.output_path, "output_path")?)?;
    w.write_record(["h", "k1_prime_est", "k1_second_est", "k_prime_ref", "ell_c_ref"])?;
    for r in &check.rows {
        w.write_record([
            num(r.h),
            num(r.k1_prime_est),
            num(r.k1_second_est),
            num(check.k_prime_ref),
            num(check.ell_c_ref),
        ])?;
    }
    w.flush()?;
    Ok(())
}
