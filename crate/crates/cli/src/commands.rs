use std::path::{Path, PathBuf};

use clap::Parser;
use grasscomp_core::experiments::{
    angle_axis, compare_p, default_scale, figure_scenario, landscape_grid, make_scenario, probe_points, sweep_p,
    GroupAssignment, LandscapeGrid,
};
use grasscomp_core::grassmann::{orthonormalize, principal_angles, random_point, Distances};
use grasscomp_core::optimizer::{self, Objective, OptimizerConfig};
use grasscomp_core::partialcost::sample_mask;
use grasscomp_core::rng::SeedStream;
use grasscomp_core::{Error as CoreError, GroundTruth, Matrix, ObservationMask, SubspacePoint};

use crate::error::{CliError, CliResult};
use crate::format::{self, dense_to_string, num, Csv};
use crate::manifest::{read_manifest, Recorder};
use crate::problem::{load_problem, write_problem, ProblemMeta};
use crate::{
    AnglesArgs, Cli, Command, CompareArgs, Fixture, GenArgs, GridArgs, LandscapeArgs, OptimizeArgs, ReplayArgs,
    Setting, SweepArgs,
};

pub fn execute(cli: &Cli, argv: &[String]) -> CliResult<()> {
    if let Command::Replay(args) = &cli.command {
        return replay(cli, args);
    }
    let mut rec = Recorder::new(&cli.out_dir)?;
    rec.seeds.insert("root".into(), cli.seed);
    let name = match &cli.command {
        Command::Gen(a) => gen(cli, a, &mut rec).map(|_| "gen"),
        Command::Landscape(a) => landscape(cli, a, &mut rec).map(|_| "landscape"),
        Command::SweepP(a) => sweep(cli, a, &mut rec).map(|_| "sweep-p"),
        Command::CompareP(a) => compare(cli, a, &mut rec).map(|_| "compare-p"),
        Command::Optimize(a) => optimize(cli, a, &mut rec).map(|_| "optimize"),
        Command::Angles(a) => angles(a, &mut rec).map(|_| "angles"),
        Command::Replay(_) => unreachable!("handled above"),
    }?;
    let config = serde_json::to_value(cli).expect("arguments serialize");
    rec.finish(name, argv, config)?;
    Ok(())
}

fn example1() -> CliResult<(GroundTruth, ObservationMask, Vec<f64>)> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let u = SubspacePoint::new(Matrix::from_column_slice(3, 1, &[0.0, s, s]))?;
    let gt = GroundTruth::new(u, vec![std::f64::consts::SQRT_2], Matrix::from_element(1, 1, 1.0))?;
    let mask = ObservationMask::new(3, 1, vec![(1, 0), (2, 0)], None)?;
    // M = [0, 1, 1]ᵀ exactly
    Ok((gt, mask, vec![1.0, 1.0]))
}

fn gen(cli: &Cli, args: &GenArgs, rec: &mut Recorder) -> CliResult<()> {
    let seeds = SeedStream::new(cli.seed);
    if let Some(Fixture::Example1) = args.fixture {
        let (gt, mask, values) = example1()?;
        let meta = ProblemMeta {
            name: "example1".into(),
            m: 3,
            n: 1,
            r: 1,
            sigma: gt.sigma().to_vec(),
            p: None,
        };
        return write_problem(rec, &meta, &gt, Some((&mask, &values)));
    }

    let (name, gt) = match args.setting {
        Some(setting) => {
            let scenario = match setting {
                Setting::Figure => figure_scenario(),
                s => {
                    let which = match s {
                        Setting::One => 1,
                        Setting::Two => 2,
                        _ => 3,
                    };
                    make_scenario(which, cli.scale.unwrap_or_else(|| default_scale(which)))?
                }
            };
            (scenario.name.clone(), scenario.ground_truth(&seeds)?)
        }
        None => {
            let (Some(m), Some(n), Some(sigma)) = (args.m, args.n, args.sigma.clone()) else {
                return Err(CliError::precondition(
                    "gen needs --setting, --fixture, or --m, --n and --sigma",
                ));
            };
            if args.r.is_some_and(|r| r != sigma.len()) {
                return Err(CliError::precondition("--r must equal the number of singular values"));
            }
            let mut sigma = sigma;
            sigma.sort_by(|a, b| b.total_cmp(a));
            ("custom".to_string(), GroundTruth::random(m, n, sigma, &seeds)?)
        }
    };
    rec.seeds.insert("truth.u".into(), seeds.seed("truth.u"));
    rec.seeds.insert("truth.v".into(), seeds.seed("truth.v"));

    let (mask, p) = if let Some(p) = args.p {
        rec.seeds.insert("gen.mask".into(), seeds.seed("gen.mask"));
        (Some(sample_mask(gt.m(), gt.n(), p, seeds.seed("gen.mask"))?), Some(p))
    } else if let Some(path) = &args.mask {
        let (m, n, entries, _) =
            format::parse_mask(&format::read_text(path)?).map_err(|e| CliError::io(path, e))?;
        rec.input(path)?;
        if (m, n) != (gt.m(), gt.n()) {
            return Err(CliError::precondition(format!(
                "mask is {m} × {n} but the problem is {} × {}",
                gt.m(),
                gt.n()
            )));
        }
        (Some(ObservationMask::new(m, n, entries, None)?), None)
    } else {
        (None, None)
    };
    let values: Option<Vec<f64>> =
        mask.as_ref().map(|mask| mask.entries().iter().map(|&(i, j)| gt.entry(i, j)).collect());

    let meta = ProblemMeta {
        name,
        m: gt.m(),
        n: gt.n(),
        r: gt.rank(),
        sigma: gt.sigma().to_vec(),
        p,
    };
    write_problem(rec, &meta, &gt, mask.as_ref().zip(values.as_deref()))
}

fn groups(r: usize, grid: &GridArgs) -> CliResult<GroupAssignment> {
    match &grid.first {
        None => Ok(GroupAssignment::halves(r)?),
        Some(first) => {
            if first.iter().any(|&i| i == 0 || i > r) {
                return Err(CliError::precondition(format!("--first indices must lie in 1..={r}")));
            }
            let first: Vec<usize> = first.iter().map(|i| i - 1).collect();
            let second = (0..r).filter(|i| !first.contains(i)).collect();
            Ok(GroupAssignment::new(r, first, second)?)
        }
    }
}

fn axis(grid: &GridArgs) -> CliResult<Vec<f64>> {
    let range = 0.0..=std::f64::consts::FRAC_PI_2;
    if !range.contains(&grid.lo) || !range.contains(&grid.hi) || grid.lo > grid.hi || grid.grid == 0 {
        return Err(CliError::precondition("grid needs 0 ≤ lo ≤ hi ≤ π/2 and at least one point"));
    }
    Ok(angle_axis(grid.lo, grid.hi, grid.grid))
}

fn grid_csv(grid: &LandscapeGrid) -> String {
    let mut csv = Csv::new(&["theta1", "theta2", "cost"]);
    for (a, &t1) in grid.axis1.iter().enumerate() {
        for (b, &t2) in grid.axis2.iter().enumerate() {
            csv.row(&[num(t1), num(t2), num(grid.values[(a, b)])]);
        }
    }
    csv.into_string()
}

fn landscape(cli: &Cli, args: &LandscapeArgs, rec: &mut Recorder) -> CliResult<()> {
    let problem = load_problem(&args.problem, rec)?;
    let gt = &problem.gt;
    let seeds = SeedStream::new(cli.seed);
    let axis = axis(&args.grid)?;
    let groups = groups(gt.rank(), &args.grid)?;
    let grid = landscape_grid(gt, args.p, &axis, &axis, &groups, args.trials, &seeds)?;
    rec.write("landscape.csv", &grid_csv(&grid))
}

fn sweep(cli: &Cli, args: &SweepArgs, rec: &mut Recorder) -> CliResult<()> {
    let problem = load_problem(&args.problem, rec)?;
    let gt = &problem.gt;
    let seeds = SeedStream::new(cli.seed);
    let points = probe_points(gt, args.points, &seeds)?;
    let rows = sweep_p(gt, &points, &args.p, args.trials, &seeds)?;

    let mut probes = Csv::new(&["point", "angles"]);
    for (k, x) in points.iter().enumerate() {
        let theta = principal_angles(x, gt.u())?;
        let angles: Vec<String> = theta.as_slice().iter().map(|&t| num(t)).collect();
        probes.row(&[k.to_string(), angles.join(" ")]);
    }
    rec.write("probes.csv", &probes.into_string())?;

    let mut csv = Csv::new(&["point", "p", "mean", "std", "trials"]);
    for row in &rows {
        csv.row(&[row.point.to_string(), num(row.p), num(row.mean), num(row.std), row.trials.to_string()]);
    }
    rec.write("sweep.csv", &csv.into_string())
}

fn compare(cli: &Cli, args: &CompareArgs, rec: &mut Recorder) -> CliResult<()> {
    let problem = load_problem(&args.problem, rec)?;
    let gt = &problem.gt;
    let seeds = SeedStream::new(cli.seed);
    let axis = axis(&args.grid)?;
    let groups = groups(gt.rank(), &args.grid)?;
    let cmp = compare_p(gt, &axis, &axis, &groups, &args.p, args.trials, &seeds)?;
    for (k, grid) in cmp.grids.iter().enumerate() {
        rec.write(&format!("landscape_{k}_p{}.csv", grid.p), &grid_csv(grid))?;
    }
    let mut csv = Csv::new(&["p", "max_rel_deviation", "max_shape_deviation"]);
    for &(p, dev, shape) in &cmp.deviations {
        csv.row(&[num(p), num(dev), num(shape)]);
    }
    let report = csv.into_string();
    print!("{report}");
    rec.write("deviations.csv", &report)
}

fn optimize(cli: &Cli, args: &OptimizeArgs, rec: &mut Recorder) -> CliResult<()> {
    let problem = load_problem(&args.problem, rec)?;
    let gt = &problem.gt;
    let seeds = SeedStream::new(cli.seed);
    let objective = if args.partial {
        let observed = problem
            .observed
            .as_ref()
            .ok_or_else(|| CliError::precondition("--partial needs a mask.txt in the problem directory"))?;
        Objective::Partial(observed)
    } else {
        Objective::Full(gt)
    };
    let x0 = if args.from_truth {
        gt.u().clone()
    } else if let Some(path) = &args.init {
        let a = format::read_dense(path)?;
        rec.input(path)?;
        SubspacePoint::new(a)?
    } else {
        rec.seeds.insert("optimize.init".into(), seeds.seed("optimize.init"));
        random_point(gt.m(), gt.rank(), seeds.seed("optimize.init"))?
    };
    let defaults = OptimizerConfig::for_truth(gt);
    let config = OptimizerConfig {
        step_size: args.eta,
        max_iters: args.max_iters,
        grad_tol: args.grad_tol.unwrap_or(defaults.grad_tol),
        cost_tol: args.cost_tol,
        record_angles: true,
    };
    let trace = optimizer::run(objective, &x0, &config)?;

    let mut csv = Csv::new(&["iter", "cost", "grad_norm", "max_angle", "incoherence"]);
    for r in &trace.records {
        csv.row(&[
            r.iter.to_string(),
            num(r.cost),
            num(r.grad_norm),
            num(r.max_angle().unwrap_or(f64::NAN)),
            num(r.incoherence),
        ]);
    }
    rec.write("trace.csv", &csv.into_string())?;
    rec.write("x_final.txt", &dense_to_string(trace.final_point.rep()))?;
    let status = serde_json::json!({
        "status": trace.status.as_str(),
        "iterations": trace.records.len() - 1,
        "final_cost": num(trace.final_cost()),
        "incoherence": "(m/r)·max_i ‖row_i(X)‖²",
        "incoherence_source": trace.incoherence_source,
    });
    rec.write("status.json", &(serde_json::to_string_pretty(&status).expect("json") + "\n"))?;
    println!(
        "{} after {} iterations, cost {}",
        trace.status.as_str(),
        trace.records.len() - 1,
        num(trace.final_cost())
    );
    Ok(())
}

fn load_point(path: &Path, fix: bool, rec: &mut Recorder) -> CliResult<SubspacePoint> {
    let a = format::read_dense(path)?;
    rec.input(path)?;
    if fix {
        return Ok(orthonormalize(&a)?);
    }
    SubspacePoint::new(a).map_err(|e| match e {
        CoreError::NotOrthonormal { .. } => {
            CliError::precondition(format!("{}: {e}; pass --orthonormalize to fix it", path.display()))
        }
        e => e.into(),
    })
}

fn angles(args: &AnglesArgs, rec: &mut Recorder) -> CliResult<()> {
    let x = load_point(&args.x, args.orthonormalize, rec)?;
    let y = load_point(&args.y, args.orthonormalize, rec)?;
    let theta = principal_angles(&x, &y)?;
    let d = Distances::from_angles(&theta);
    let listed: Vec<String> = theta.as_slice().iter().map(|&t| num(t)).collect();
    let report = format!(
        "angles {}\narc {}\nchordal {}\nprojection {}\n",
        listed.join(" "),
        num(d.arc),
        num(d.chordal),
        num(d.projection)
    );
    print!("{report}");
    rec.write("angles.txt", &report)
}

fn absolute(path: &Path) -> CliResult<PathBuf> {
    if path.is_absolute() {
        return Ok(path.to_path_buf());
    }
    let cwd = std::env::current_dir().map_err(|e| CliError::io(Path::new("."), e))?;
    Ok(cwd.join(path))
}

/// `argv` with every `--out-dir` replaced by `target`.
fn retarget(argv: &[String], target: &Path) -> Vec<String> {
    let mut out = Vec::with_capacity(argv.len() + 2);
    let mut skip = false;
    for arg in argv {
        if skip {
            skip = false;
        } else if arg == "--out-dir" {
            skip = true;
        } else if !arg.starts_with("--out-dir=") {
            out.push(arg.clone());
        }
    }
    out.push("--out-dir".into());
    out.push(target.display().to_string());
    out
}

fn replay(cli: &Cli, args: &ReplayArgs) -> CliResult<()> {
    let recorded = read_manifest(&args.manifest)?;
    let target = absolute(&cli.out_dir)?;
    let argv = retarget(&recorded.argv, &target);
    let full = std::iter::once("grasscomp".to_string()).chain(argv.iter().cloned());
    let inner = Cli::try_parse_from(full).map_err(|e| CliError::io(&args.manifest, e))?;
    if matches!(inner.command, Command::Replay(_)) {
        return Err(CliError::precondition("a replay manifest cannot itself be replayed"));
    }
    std::env::set_current_dir(&recorded.cwd).map_err(|e| CliError::io(&recorded.cwd, e))?;
    execute(&inner, &argv)?;

    let replayed = read_manifest(&target.join(crate::manifest::MANIFEST_FILE))?;
    let mut mismatched = Vec::new();
    for (name, digest) in &recorded.outputs {
        if replayed.outputs.get(name) != Some(digest) {
            mismatched.push(name.clone());
        }
    }
    if !mismatched.is_empty() {
        return Err(CliError::ReplayMismatch(mismatched.join(", ")));
    }
    println!("replayed {}: {} files identical", recorded.command, recorded.outputs.len());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retarget_replaces_every_form() {
        let argv: Vec<String> = ["gen", "--out-dir", "a", "--seed", "3", "--out-dir=b"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(retarget(&argv, Path::new("/t")), ["gen", "--seed", "3", "--out-dir", "/t"]);
    }

    #[test]
    fn example1_fixture_is_exact() {
        let (gt, mask, values) = example1().unwrap();
        assert_eq!(mask.len(), 2);
        assert_eq!(values, [1.0, 1.0]);
        assert!((gt.entry(1, 0) - 1.0).abs() < 1e-15);
    }
}
