use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use kscale_core::class_scale::{curve_from_evaluations, evaluate_at, Criterion, Evaluation, LabeledDataset};
use kscale_core::datasets::{
    cross_validate, embed_in_noise, gen_gaussian_mixture, gen_spiral_classes, gen_swiss_roll, Protocol,
};
use kscale_core::diffusion::{dm_embed, gaussian_kernel, scaled_kernel};
use kscale_core::intrinsic_dim::{danco, DancoConfig};
use kscale_core::manifold_scale::{manifold_vector_scaling, ManifoldConfig};
use kscale_core::numerics::pairwise_sq_dist;
use kscale_core::scale_baselines::{
    default_singer_grid, kernel_sum_curve, maxmin_scale, singer_range, std_inverse_scaling, std_scaling, zelnik_scales,
    Method, ScaleSelection,
};
use kscale_core::{Error, Matrix, Result as CoreResult, Rng};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{apply_config, Cli, Command, DimArgs, EmbedArgs, GenArgs, ScaleArgs, SweepArgs};
use crate::error::{CliError, CliResult};
use crate::io::{self, fmt_f64, load_labeled_csv, LabelColumn};
use crate::report::{
    to_json, CriterionArgmax, CriterionScores, GenParams, ScaleReport, SweepReport, TraceRow, VERSION,
};

/// Runs one parsed command; text meant for stdout goes to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::Gen(a) => gen(apply_config(a, cfg)?),
        Command::Scale(a) => scale(apply_config(a, cfg)?, stdout),
        Command::Embed(a) => embed(apply_config(a, cfg)?, stdout),
        Command::Dim(a) => dim(apply_config(a, cfg)?, stdout),
        Command::Sweep(a) => sweep(apply_config(a, cfg)?, stdout),
    }
}

fn echo<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("flag structs serialize")
}

fn emit(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => io::write_atomic(p, text.as_bytes()),
        None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn gen(args: GenArgs) -> CliResult<()> {
    let mut rng = Rng::new(args.seed);
    let (x, labels, params, theta, h, r) = match args.kind.as_str() {
        "swiss" | "swiss-noisy" => {
            let roll = gen_swiss_roll(args.n, &mut rng)?;
            if args.kind == "swiss" {
                (roll.y, None, json!({ "n": args.n }), Some(roll.theta), Some(roll.h), None)
            } else {
                let x = embed_in_noise(&roll.y, args.d1, args.d2, args.sigma_t, args.sigma_n, &mut rng)?;
                let params = json!({
                    "n": args.n, "d1": args.d1, "d2": args.d2,
                    "sigma_t": args.sigma_t, "sigma_n": args.sigma_n,
                });
                (x, None, params, Some(roll.theta), Some(roll.h), None)
            }
        }
        "mixture" => {
            let m =
                gen_gaussian_mixture(args.sigma_m, args.sigma_v, args.n_per_class, args.dim, args.classes, &mut rng)?;
            let labels: Vec<i64> = m.data.labels().iter().map(|&c| c as i64).collect();
            let params = json!({
                "sigma_m": args.sigma_m, "sigma_v": args.sigma_v, "n_per_class": args.n_per_class,
                "dim": args.dim, "classes": args.classes, "means": m.means,
            });
            (m.data.x().clone(), Some(labels), params, None, None, None)
        }
        "spiral" => {
            let s = gen_spiral_classes(args.nc, args.np, args.gap, args.sigma, &mut rng)?;
            let labels: Vec<i64> = s.data.labels().iter().map(|&c| c as i64).collect();
            let params = json!({ "nc": args.nc, "np": args.np, "gap": args.gap, "sigma": args.sigma });
            (s.data.x().clone(), Some(labels), params, None, None, Some(s.r))
        }
        other => return Err(CliError::Usage(format!("unknown dataset kind {other:?}"))),
    };
    io::save_labeled_csv(&args.out, &x, labels.as_deref())?;
    let sidecar = GenParams {
        kind: args.kind.clone(),
        seed: args.seed,
        rows: x.nrows(),
        columns: x.ncols(),
        labeled: labels.is_some(),
        params,
        theta,
        h,
        r,
        version: VERSION,
    };
    let mut side = args.out.clone().into_os_string();
    side.push(".params.json");
    io::write_atomic(Path::new(&side), to_json(&sidecar).as_bytes())
}

/// Every criterion at every grid point, grid points in parallel.
fn evaluate_grid(ds: &LabeledDataset, grid: &[f64], d: Option<usize>) -> CliResult<Vec<CoreResult<Evaluation>>> {
    let dist = pairwise_sq_dist(ds.x())?;
    let d = d.unwrap_or(ds.n_classes());
    Ok(grid.par_iter().map(|&e| evaluate_at(&dist, ds.labels(), e, d)).collect())
}

fn flag_strings(sel: &ScaleSelection) -> Vec<String> {
    sel.flags.iter().map(|f| f.to_string()).collect()
}

fn scale(args: ScaleArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let method =
        Method::from_name(&args.method).ok_or_else(|| CliError::Usage(format!("unknown method {:?}", args.method)))?;
    if method.is_supervised() && args.labels == LabelColumn::None {
        return Err(CliError::Usage(format!("method {} needs --labels", method.name())));
    }
    let table = load_labeled_csv(&args.input.input, args.input.header, args.labels)?;
    let mut report = ScaleReport {
        method: method.name().into(),
        epsilon: f64::NAN,
        range: None,
        scaling: None,
        local_sigmas: None,
        grid: Vec::new(),
        scores: Vec::new(),
        argmax_eps: None,
        accuracy: Vec::new(),
        seed: args.seed,
        config: echo(&args),
        flags: Vec::new(),
        trace: Vec::new(),
        d_hat: None,
        version: VERSION,
    };
    let mut curve = String::new();

    let baseline = |sel: ScaleSelection, report: &mut ScaleReport| {
        report.epsilon = sel.epsilon;
        report.range = sel.range.map(|(a, b)| [a, b]);
        report.flags = flag_strings(&sel);
        report.scaling = sel.scaling;
        report.local_sigmas = sel.local_sigmas;
    };
    match method {
        Method::Std | Method::StdInverse | Method::MaxMin | Method::Zelnik => {
            let x = &table.x;
            let sel = match method {
                Method::Std => std_scaling(x)?,
                Method::StdInverse => std_inverse_scaling(x)?,
                Method::MaxMin => maxmin_scale(x, args.c)?,
                _ => zelnik_scales(x, args.r)?,
            };
            let _ = write!(curve, "eps\n{}\n", fmt_f64(sel.epsilon));
            baseline(sel, &mut report);
        }
        Method::Singer => {
            let grid = match args.grid.explicit()? {
                Some(g) => g,
                None => default_singer_grid(&table.x)?,
            };
            let sel = singer_range(&kernel_sum_curve(&table.x, &grid)?)?;
            curve.push_str("eps,kernel_sum\n");
            for &(e, l) in sel.curve.as_deref().unwrap_or_default() {
                let _ = writeln!(curve, "{},{}", fmt_f64(e), fmt_f64(l));
                report.grid.push(e);
                report.scores.push(Some(l));
            }
            baseline(sel, &mut report);
        }
        Method::Manifold => {
            let cfg = ManifoldConfig {
                danco: DancoConfig { ell: args.ell, max_dim: args.max_dim },
                permute: !args.no_permute,
                d_hat: args.d_hat,
                grid_points: args.grid_points,
                ..ManifoldConfig::default()
            };
            let out = manifold_vector_scaling(&table.x, &Rng::new(args.seed), &cfg)?;
            curve.push_str("feature,a,eps,objective\n");
            for t in &out.trace {
                let _ =
                    writeln!(curve, "{},{},{},{}", t.feature, fmt_f64(t.a), fmt_f64(t.epsilon), fmt_f64(t.objective));
                report.trace.push(TraceRow { feature: t.feature, a: t.a, epsilon: t.epsilon, objective: t.objective });
            }
            report.epsilon = out.epsilon;
            report.scaling = Some(out.a);
            report.d_hat = Some(out.d_hat);
            report.flags = out.flags.iter().map(|f| f.to_string()).collect();
        }
        Method::RhoPsi | Method::Ge | Method::RhoP => {
            let criterion = match method {
                Method::RhoPsi => Criterion::RhoPsi,
                Method::Ge => Criterion::Ge,
                _ => Criterion::RhoP,
            };
            let (ds, _) = table.labeled()?;
            let grid = args.grid.resolve(ds.x())?;
            let evals = evaluate_grid(&ds, &grid, args.d)?;
            let c = curve_from_evaluations(criterion, &grid, &evals);
            let best = c
                .argmax
                .ok_or_else(|| Error::SelectionFailed(format!("{} failed at every grid point", criterion.name())))?;
            let _ = writeln!(curve, "eps,{}", criterion.name());
            for (e, s) in grid.iter().zip(&c.scores) {
                let _ = writeln!(curve, "{},{}", fmt_f64(*e), s.map_or("nan".into(), fmt_f64));
            }
            report.epsilon = grid[best];
            report.argmax_eps = Some(grid[best]);
            report.flags = c.flags[best].iter().map(|f| f.to_string()).collect();
            report.flags.extend(c.failures.iter().map(|(i, e)| format!("eps {} skipped: {e}", fmt_f64(grid[*i]))));
            report.grid = grid;
            report.scores = c.scores;
        }
    }
    if let Some(p) = &args.curve {
        io::write_atomic(p, curve.as_bytes())?;
    }
    emit(args.out.as_deref(), &to_json(&report), stdout)
}

fn embed(args: EmbedArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let table = load_labeled_csv(&args.input.input, args.input.header, args.labels)?;
    let kp = match &args.scaling {
        Some(a) => scaled_kernel(&table.x, a, args.eps)?,
        None => gaussian_kernel(&table.x, args.eps)?,
    };
    let emb = dm_embed(&kp, args.d)?;
    let text = io::matrix_csv(&emb.coords, table.labels.as_deref(), None);
    emit(args.out.as_deref(), &text, stdout)
}

fn dim(args: DimArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let table = load_labeled_csv(&args.input.input, args.input.header, args.labels)?;
    let cfg = DancoConfig { ell: args.ell, max_dim: args.max_dim };
    let est = danco(&table.x, &cfg, &Rng::new(args.seed))?;
    let mut text = format!("{}\nd,kl\n", est.d_hat);
    for (d, kl) in &est.kl_curve {
        let _ = writeln!(text, "{d},{}", fmt_f64(*kl));
    }
    emit(None, &text, stdout)
}

fn accuracy_at(points: &Matrix, labels: &[usize], protocol: Protocol, k: usize, seed: u64) -> Option<f64> {
    cross_validate(points, labels, protocol, k, &mut Rng::new(seed)).ok().map(|r| r.accuracy)
}

fn sweep(args: SweepArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let protocol = args.protocol()?;
    if args.labels == LabelColumn::None {
        return Err(CliError::Usage("sweep needs --labels".into()));
    }
    if args.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let (ds, _) = load_labeled_csv(&args.input.input, args.input.header, args.labels)?.labeled()?;
    let grid = args.grid.resolve(ds.x())?;
    let evals = evaluate_grid(&ds, &grid, args.d)?;
    let labels = ds.labels();
    let accuracy: Vec<Option<f64>> = if args.space == "ambient" {
        let a = accuracy_at(ds.x(), labels, protocol, args.k, args.seed);
        vec![a; grid.len()]
    } else {
        evals
            .par_iter()
            .map(|ev| {
                ev.as_ref().ok().and_then(|e| accuracy_at(&e.embedding.coords, labels, protocol, args.k, args.seed))
            })
            .collect()
    };

    let mut csv = String::from("eps,acc,rho_psi,ge,rho_p\n");
    let cell = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), fmt_f64);
    for ((e, ev), acc) in grid.iter().zip(&evals).zip(&accuracy) {
        let ev = ev.as_ref().ok();
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_f64(*e),
            cell(*acc),
            cell(ev.map(|v| v.rho_psi)),
            cell(ev.map(|v| v.ge)),
            cell(ev.map(|v| v.rho_p)),
        );
    }

    if let Some(path) = &args.report {
        let curves: Vec<_> = [Criterion::RhoPsi, Criterion::Ge, Criterion::RhoP]
            .into_iter()
            .map(|c| curve_from_evaluations(c, &grid, &evals))
            .collect();
        let acc_best = kscale_core::class_scale::argmax_first(&accuracy).map(|i| grid[i]);
        let mut flags: Vec<String> =
            curves[0].failures.iter().map(|(i, e)| format!("eps {} skipped: {e}", fmt_f64(grid[*i]))).collect();
        flags.extend(
            grid.iter()
                .zip(&evals)
                .zip(&accuracy)
                .filter(|((_, ev), acc)| ev.is_ok() && acc.is_none())
                .map(|((e, _), _)| format!("eps {}: cross-validation failed", fmt_f64(*e))),
        );
        let rep = SweepReport {
            method: "sweep",
            scores: CriterionScores {
                rho_psi: curves[0].scores.clone(),
                ge: curves[1].scores.clone(),
                rho_p: curves[2].scores.clone(),
            },
            argmax_eps: CriterionArgmax {
                rho_psi: curves[0].argmax_eps(),
                ge: curves[1].argmax_eps(),
                rho_p: curves[2].argmax_eps(),
                accuracy: acc_best,
            },
            grid: grid.clone(),
            accuracy: accuracy.clone(),
            seed: args.seed,
            config: echo(&args),
            flags,
            version: VERSION,
        };
        io::write_atomic(path, to_json(&rep).as_bytes())?;
    }
    emit(args.out.as_deref(), &csv, stdout)
}
