//! One function per model; each writes its artifacts through [`Output`]
//! and returns a JSON summary for stdout.

use rayon::prelude::*;
use serde_json::{json, Value};

use selfrepel_core::field::{
    export_slice, sample_continuum_field, sample_gaussian_lattice, sample_gibbs_lattice, write_snapshot, GibbsSpec,
};
use selfrepel_core::fock::analysis::{kv_variance, norm_growth_scan, ResolventOptions};
use selfrepel_core::fock::{FockSpace, Generator, MomentumGrid};
use selfrepel_core::model::check_conditions;
use selfrepel_core::polymer::simulate_polymer;
use selfrepel_core::presets::srbp_gauss_d3;
use selfrepel_core::record::{derive_seed, RunRecord};
use selfrepel_core::spectral::*;
use selfrepel_core::walk::simulate_tsaw;

use crate::config::{FieldSampler, FockSection, ModelKind, RunConfig, SpectralSection};
use crate::error::{CliError, CliResult};
use crate::output::Output;
use crate::report::{summarize, to_markdown};

/// Dispatches on the model and finalizes the manifest. A failure after the
/// output directory exists is recorded in the manifest before returning.
pub fn run(cfg: &RunConfig, command: &str, out_dir: &std::path::Path) -> CliResult<Value> {
    cfg.validate()?;
    let mut out = Output::create(out_dir, command, cfg.to_toml()?)?;
    let result = match cfg.model {
        ModelKind::Tsaw => run_tsaw(cfg, &mut out),
        ModelKind::Srbp => run_srbp(cfg, &mut out),
        ModelKind::Spectral => {
            let v = spectral_table(cfg.spectral.as_ref().unwrap_or(&SpectralSection::default()))?;
            out.write("spectral.json", serde_json::to_string_pretty(&v)?.as_bytes())?;
            Ok(v)
        }
        ModelKind::Fock => run_fock(cfg, &mut out),
        ModelKind::Field => run_field(cfg, &mut out),
    };
    match result {
        Ok(mut summary) => {
            let manifest = out.finish()?;
            if let Value::Object(m) = &mut summary {
                m.insert("manifest".into(), json!(manifest));
            }
            Ok(summary)
        }
        Err(e) => {
            out.fail(e.to_string());
            Err(e)
        }
    }
}

fn write_records(cfg: &RunConfig, out: &mut Output, records: &[RunRecord]) -> CliResult<Value> {
    for r in records {
        out.record_seed(r.replica, r.seed);
        out.write(&format!("records/replica-{:05}.json", r.replica), &serde_json::to_vec(r)?)?;
        out.write(&format!("series/replica-{:05}.csv", r.replica), r.to_csv().as_bytes())?;
    }
    let rep = summarize(records, cfg.estimators.burn_in)?;
    out.write("report.json", serde_json::to_string_pretty(&rep)?.as_bytes())?;
    out.write("report.md", to_markdown(&rep).as_bytes())?;
    Ok(json!({ "out": out.root(), "records": records.len(), "report": rep }))
}

fn run_tsaw(cfg: &RunConfig, out: &mut Output) -> CliResult<Value> {
    let rf = cfg.rate.as_ref().expect("validated").resolve()?;
    let walk = cfg.walk.as_ref().expect("validated");
    let records = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| simulate_tsaw(walk, &rf, derive_seed(cfg.seed, r), r))
        .collect::<Result<Vec<_>, _>>()?;
    write_records(cfg, out, &records)
}

fn run_srbp(cfg: &RunConfig, out: &mut Output) -> CliResult<Value> {
    let pc = cfg.polymer.as_ref().expect("validated");
    let records = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| simulate_polymer(pc, derive_seed(cfg.seed, r), r))
        .collect::<Result<Vec<_>, _>>()?;
    write_records(cfg, out, &records)
}

/// Named constants of the lattice and continuum kernels with grid metadata.
pub fn spectral_table(sec: &SpectralSection) -> CliResult<Value> {
    let d = sec.d;
    if d < 2 {
        return Err(CliError::Config("spectral constants need d >= 2".into()));
    }
    let avg_m: Vec<usize> = [16usize, 32, 64].iter().map(|&m| if d >= 4 { m / 4 } else { m }).collect();
    let averages: Vec<Value> = avg_m
        .iter()
        .map(|&m| Ok(json!({ "m": m, "value": gamma_kernel_average(d, m)? })))
        .collect::<CliResult<_>>()?;
    let avg_top = gamma_kernel_average(d, *avg_m.last().unwrap())?;
    // sup over a Fock grid with even side, which contains p = (pi, 0, ..., 0)
    let side = if d <= 3 { 8 } else { 4 };
    let grid = MomentumGrid::lattice(d, side, 1.0)?;
    let grid_sup = grid
        .ks
        .iter()
        .map(|k| grid.difference_symbol(0, k).norm() / grid.laplacian_symbol(k).sqrt())
        .fold(0.0, f64::max);
    let ir_ladder: Vec<usize> = if d == 2 { vec![64, 128, 256, 512] } else { vec![32, 64, 128] };
    let infrared = infrared_integral(|_| 1.0, d, &ir_ladder)?;
    let mut table = json!({
        "d": d,
        "ladder": sec.ladder,
        "gamma_kernel_average": avg_top,
        "gamma_kernel_average_by_m": averages,
        "halfinv_gradient_grid_sup": { "side": side, "value": grid_sup },
        "infrared": infrared,
    });
    if d >= 3 {
        let c0 = lattice_green(&vec![0; d], &sec.ladder)?;
        let mut e = vec![0; d];
        e[0] = 1;
        let ce = lattice_green(&e, &sec.ladder)?;
        let diff = c0.value - ce.value;
        table["C0"] = json!(c0);
        table["Ce"] = json!(ce);
        table["C0_minus_Ce"] = json!(diff);
        table["one_over_2d"] = json!(0.5 / d as f64);
        table["increment_variance"] = json!(2.0 * diff);
    }
    if d == 3 {
        let v = srbp_gauss_d3();
        table["potential"] = json!(v);
        table["rho_squared"] = json!(rho_squared(&v)?);
        table["variational_bound"] = json!(variational_bound_continuum(&v, 0)?);
        table["continuum_covariance_origin"] = json!(continuum_covariance(&v, 0.0)?);
    }
    Ok(table)
}

fn run_fock(cfg: &RunConfig, out: &mut Output) -> CliResult<Value> {
    let sec = cfg.fock.clone().unwrap_or_else(FockSection::default);
    let rf = cfg.rate.as_ref().expect("validated").resolve()?;
    if !rf.r_is_linear() {
        return Err(CliError::Core(selfrepel_core::Error::Unsupported(
            "the Fock generator is assembled for r(u) = u".into(),
        )));
    }
    let space = FockSpace::new(MomentumGrid::lattice(sec.d, sec.side, sec.theta)?, sec.n_max)?;
    let gen = Generator::new(&space, rf.gamma(), &rf.params().s_coeffs)?;
    let mut summary = json!({ "dim": space.dim(), "section": sec });
    if !sec.degrees.is_empty() {
        let table = norm_growth_scan(&space, Some(&gen), &sec.degrees, rf.gamma(), cfg.seed)?;
        out.write("norms.json", serde_json::to_string_pretty(&table)?.as_bytes())?;
        summary["norms"] = json!({
            "fits": table.fits,
            "odd_blocks_ok": table.odd_blocks_ok,
            "even_blocks_ok": table.even_blocks_ok,
            "not_converged": table.not_converged,
        });
    }
    if !sec.lambdas.is_empty() {
        let opts = ResolventOptions {
            lambdas: sec.lambdas.clone(),
            ..ResolventOptions::default()
        };
        let kv = kv_variance(&gen, 0, &opts)?;
        out.write("kv.json", serde_json::to_string_pretty(&kv)?.as_bytes())?;
        summary["kv"] = json!({
            "quadratic_variation_model": kv.quadratic_variation_model,
            "correction": kv.correction,
            "sigma2": kv.total(kv.quadratic_variation_model),
            "lambda_norm2_decreasing": kv.tilde.lambda_norm2_decreasing,
            "last_relative_change": kv.tilde.last_relative_change,
        });
    }
    Ok(summary)
}

fn run_field(cfg: &RunConfig, out: &mut Output) -> CliResult<Value> {
    let sec = cfg.field.as_ref().expect("validated");
    let seed = derive_seed(cfg.seed, 0);
    out.record_seed(0, seed);
    let sample = match sec.sampler {
        FieldSampler::Gaussian => sample_gaussian_lattice(sec.d, sec.l, sec.theta, seed)?,
        FieldSampler::Gibbs => {
            let rf = cfg
                .rate
                .as_ref()
                .ok_or_else(|| CliError::Config("the Gibbs sampler needs a [rate] section".into()))?
                .resolve()?;
            let spec = GibbsSpec::new(&rf, 1.0 / sec.theta, 0.5)?;
            sample_gibbs_lattice(sec.d, sec.l, &spec, None, seed)?
        }
        FieldSampler::Continuum => {
            let v = cfg.polymer.as_ref().map(|p| p.potential).unwrap_or_else(srbp_gauss_d3);
            let box_len = sec
                .box_len
                .ok_or_else(|| CliError::Config("the continuum sampler needs field.box_len".into()))?;
            sample_continuum_field(sec.d, box_len, sec.l, &v, seed)?.sample
        }
    };
    std::fs::create_dir_all(out.root())?;
    write_snapshot(&sample, &out.root().join("field.bin"))?;
    out.register("field.bin")?;
    out.register("field.bin.json")?;
    if sample.d >= 2 {
        export_slice(&sample, (0, 1), &vec![0; sample.d], &out.root().join("slice.csv"))?;
        out.register("slice.csv")?;
    }
    let torus = sample.torus()?;
    let n = sample.values.len() as f64;
    let mut inc2 = 0.0;
    for x in 0..sample.values.len() {
        inc2 += (sample.values[x] - sample.values[torus.neighbor(x, 0)]).powi(2);
    }
    Ok(json!({
        "out": out.root(),
        "sites": sample.values.len(),
        "mean_square_increment": inc2 / n,
    }))
}

/// All four standing conditions with their margins.
pub fn check_rates(cfg: &RunConfig) -> CliResult<Value> {
    let rate = cfg
        .rate
        .as_ref()
        .ok_or_else(|| CliError::Config("configuration has no rate function".into()))?;
    let rf = rate.resolve()?;
    let rep = check_conditions(&rf);
    let all = rep.ellipticity && rep.convexity && rep.gaussian_domination && rep.r_entire;
    Ok(json!({ "rate": rf.params(), "all_conditions": all, "report": rep }))
}
