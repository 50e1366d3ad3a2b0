use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hilange_core::analysis::{bistability_curve, sideband_asymmetry};
use hilange_core::assembler::LinearLangevinSystem;
use hilange_core::models::{build_model, ModelId};
use hilange_core::spectral::{output_spectra, RunMetadata};
use hilange_core::timedomain::{integrate_ode, integrate_sde, truncation_convergence};
use hilange_core::verify::{self, Verdict};
use serde::Serialize;

use crate::config::{Integrator, RunConfig};

/// Outcome of a command that did not error.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Settings shared by every command after flags are merged into the config.
pub struct Session {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub tolerances: BTreeMap<String, f64>,
    /// Tolerance keys set by the config or a flag rather than defaulted.
    pub explicit: Vec<String>,
}

impl Session {
    fn write(&self, report: &mut Report, name: &str, contents: &str) -> Result<()> {
        let path = self.out.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        report.files.push(path);
        Ok(())
    }

    fn write_json<T: Serialize>(&self, report: &mut Report, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(report, name, &text)
    }

    fn model(&self) -> Result<ModelId> {
        self.cfg.model.ok_or_else(|| anyhow::anyhow!("config needs 'model'"))
    }

    fn tol(&self, key: &str) -> f64 {
        self.tolerances[key]
    }

    fn metadata(&self, model: &str) -> RunMetadata {
        let mut m = RunMetadata::new(model);
        m.seed = self.cfg.seed;
        m.tolerances = self.tolerances.clone();
        m.parameters = serde_json::to_value(&self.cfg.params).unwrap_or_default();
        m
    }

    fn system(&self) -> Result<LinearLangevinSystem> {
        let id = self.model()?;
        let mut sys = build_model(&id, &self.cfg.params).with_context(|| format!("building {id}"))?;
        for (k, v) in &self.cfg.noise {
            sys.noise_models.insert(k.clone(), v.clone());
        }
        sys.assess_stability(self.tol("stability"))?;
        Ok(sys)
    }
}

fn stability_warning(sys: &LinearLangevinSystem) -> Option<String> {
    let s = sys.stability()?;
    (!s.stable).then(|| format!("system is unstable: max Re(eig M) = {:e} exceeds {:e}", s.max_real_part, s.tolerance))
}

pub fn spectrum(ctx: &Session) -> Result<Report> {
    let mut report = Report::default();
    let grid = ctx.cfg.grid.clone().ok_or_else(|| anyhow::anyhow!("config needs 'grid'"))?;
    let sys = ctx.system()?;
    report.warnings.extend(stability_warning(&sys));
    let mut spec = output_spectra(&sys, &grid)?;
    let mut meta = ctx.metadata(&sys.provenance.model);
    meta.parameters = serde_json::json!({ "params": ctx.cfg.params, "grid": grid, "provenance": sys.provenance });
    spec.metadata = meta;
    ctx.write(&mut report, "spectrum.csv", &spec.to_csv())?;
    ctx.write_json(&mut report, "metadata.json", &spec.metadata)?;
    ctx.write_json(&mut report, "stability.json", &sys.stability())?;
    ctx.write_json(&mut report, "system.json", &sys)?;
    Ok(report)
}

pub fn stability(ctx: &Session) -> Result<Report> {
    let mut report = Report::default();
    let sys = ctx.system()?;
    report.warnings.extend(stability_warning(&sys));
    ctx.write_json(&mut report, "stability.json", &sys.stability())?;
    ctx.write_json(&mut report, "system.json", &sys)?;
    Ok(report)
}

pub fn timeseries(ctx: &Session) -> Result<Report> {
    let mut report = Report::default();
    let mut run = ctx.cfg.run.clone().ok_or_else(|| anyhow::anyhow!("config needs 'run'"))?;
    if let Some(seed) = ctx.cfg.seed {
        run.seed = seed;
    }
    if !ctx.cfg.orders.is_empty() {
        if !matches!(ctx.cfg.model, Some(ModelId::Diode(_)) | None) {
            bail!("'orders' applies to diode models only");
        }
        let table = truncation_convergence(&ctx.cfg.orders, &ctx.cfg.params, &run)?;
        report.warnings.extend(table.warnings());
        ctx.write(&mut report, "convergence.csv", &table.to_csv())?;
        ctx.write(&mut report, "convergence_series.csv", &table.series_csv())?;
        let mut meta = ctx.metadata("diode");
        meta.seed = None;
        meta.parameters = serde_json::json!({ "params": ctx.cfg.params, "run": run, "orders": ctx.cfg.orders });
        ctx.write_json(&mut report, "metadata.json", &meta)?;
        return Ok(report);
    }
    let sys = ctx.system()?;
    let ts = match ctx.cfg.integrator {
        Integrator::Sde => integrate_sde(&sys, &run)?,
        Integrator::Ode => integrate_ode(&sys, &run)?,
    };
    report.warnings.extend(ts.warnings.iter().cloned());
    ctx.write(&mut report, "timeseries.csv", &ts.to_csv())?;
    let mut meta = ts.metadata.clone();
    meta.tolerances = ctx.tolerances.clone();
    ctx.write_json(&mut report, "metadata.json", &meta)?;
    Ok(report)
}

pub fn verify_cmd(ctx: &Session) -> Result<Report> {
    let mut report = Report::default();
    let mut opts = ctx.cfg.verify.clone().unwrap_or_default();
    if ctx.explicit.iter().any(|k| k == "oracle") {
        opts.tolerance = ctx.tol("oracle");
    }
    let result = verify::run(&opts);
    ctx.write(&mut report, "verify.csv", &result.to_csv())?;
    ctx.write_json(&mut report, "verify.json", &result)?;
    eprintln!(
        "verify: {} pass, {} deviate, {} fail",
        result.count(Verdict::Pass),
        result.count(Verdict::Deviates),
        result.count(Verdict::Fail)
    );
    for c in result.checks.iter().filter(|c| c.verdict == Verdict::Fail) {
        report.warnings.push(format!("{} {}: {}", c.table, c.item, c.note));
    }
    Ok(report)
}

pub fn bistability(ctx: &Session) -> Result<Report> {
    let mut report = Report::default();
    let sweep = ctx.cfg.sweep.clone().ok_or_else(|| anyhow::anyhow!("config needs 'sweep'"))?;
    let curve = bistability_curve(&ctx.cfg.params, &sweep)?;
    ctx.write(&mut report, "bistability.csv", &curve.to_csv())?;
    ctx.write_json(&mut report, "bistability.json", &curve)?;
    Ok(report)
}

pub fn asymmetry(ctx: &Session) -> Result<Report> {
    let mut report = Report::default();
    let grid = ctx.cfg.grid.clone().ok_or_else(|| anyhow::anyhow!("config needs 'grid'"))?;
    let r = sideband_asymmetry(&ctx.cfg.params, &grid)?;
    let ratio = r.ratio.map(|x| x.to_string()).unwrap_or_default();
    let csv = format!(
        "pump_detuning,probe_plus,probe_minus,density_plus,density_minus,ratio\n{},{},{},{},{},{ratio}\n",
        r.pump_detuning, r.probe[0], r.probe[1], r.density_plus, r.density_minus
    );
    if r.ratio.is_none() {
        report.warnings.push("density at -Omega is below the ratio floor".into());
    }
    ctx.write(&mut report, "asymmetry.csv", &csv)?;
    ctx.write_json(&mut report, "asymmetry.json", &r)?;
    Ok(report)
}

pub fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}
