use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use rcp::compress::{PowerScheme, SketchDistribution};
use rcp::diagnostics::{self, BenchSpec};
use rcp::synthetic::{self, NoiseSpec, TOY_VIDEO_FRAMES, TOY_VIDEO_GRID};
use rcp::{decompose, io, DecomposeConfig, FitTrace, InitStrategy};

use crate::args::{
    BenchArgs, BoundArgs, DecomposeArgs, Distribution, Init, ReconstructArgs, Scheme, SynthArgs,
};

/// Outcome of a command that ran to completion.
pub enum Status {
    Done,
    NotConverged,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn emit_csv(out: Option<&Path>, csv: &str) -> Result<()> {
    match out {
        Some(path) => write_text(path, csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

pub fn synth(args: &SynthArgs) -> Result<Status> {
    let (clean, truth) = if args.toy_video {
        let (grid, frames) = match args.shape.as_deref() {
            None => (TOY_VIDEO_GRID, TOY_VIDEO_FRAMES),
            Some(&[g, h, f]) if g == h => (g, f),
            Some(other) => bail!("--toy-video expects --shape GRID,GRID,FRAMES, got {other:?}"),
        };
        synthetic::toy_video(grid, frames, args.seed)?
    } else {
        let shape = args.shape.as_deref().context("--shape is required")?;
        let rank = args
            .rank
            .context("--rank is required unless --toy-video is given")?;
        synthetic::random_lowrank(shape, rank, args.seed)?
    };
    let tensor = match args.snr {
        Some(snr) => synthetic::add_noise(
            &clean,
            NoiseSpec {
                snr,
                seed: args.seed,
            },
        )?,
        None => clean,
    };
    io::write_tensor(&args.out, &tensor)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    if let Some(path) = &args.truth {
        io::write_kruskal(path, &truth)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    if let Some(path) = &args.csv_export {
        write_text(path, &io::tensor_to_csv(&tensor))?;
    }
    Ok(Status::Done)
}

fn decompose_config(args: &DecomposeArgs) -> Result<DecomposeConfig> {
    let mut cfg = DecomposeConfig::new(args.rank)
        .method(args.method.name())
        .randomized(!args.deterministic)
        .tol(args.tol)
        .max_iter(args.max_iter)
        .seed(args.seed)
        .init(match args.init {
            Init::Eigen => InitStrategy::Eigen,
            Init::Random => InitStrategy::Random,
        });
    if let Some(p) = args.oversample {
        cfg = cfg.oversampling(p);
    }
    if let Some(q) = args.power_iters {
        cfg = cfg.power_iterations(q);
    }
    if let Some(modes) = &args.modes {
        ensure!(modes.iter().all(|&m| m >= 1), "--modes are one-based");
        cfg = cfg.compress_modes(modes.iter().map(|m| m - 1).collect());
    }
    if let Some(s) = args.scheme {
        cfg.compress.scheme = match s {
            Scheme::Lu => PowerScheme::Lu,
            Scheme::Qr => PowerScheme::Qr,
        };
    }
    if let Some(d) = args.distribution {
        cfg.compress.distribution = match d {
            Distribution::Gaussian => SketchDistribution::Gaussian,
            Distribution::Uniform => SketchDistribution::Uniform,
        };
    }
    Ok(cfg)
}

fn trace_csv(trace: &FitTrace) -> String {
    let mut out = String::from("iteration,fit,seconds\n");
    for r in &trace.records {
        let _ = writeln!(out, "{},{:.17e},{:.6}", r.iteration, r.fit, r.seconds);
    }
    out
}

pub fn decompose_cmd(args: &DecomposeArgs) -> Result<Status> {
    let cfg = decompose_config(args)?;
    let x = io::read_tensor(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))?;
    if let Some(modes) = &args.modes {
        ensure!(
            modes.iter().all(|&m| m <= x.order()),
            "--modes {modes:?} out of range for an order-{} tensor",
            x.order()
        );
    }
    let (model, trace) = decompose(&x, &cfg)?;
    io::write_kruskal(&args.out, &model)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    if let Some(path) = &args.trace {
        write_text(path, &trace_csv(&trace))?;
    }
    println!(
        "method={} randomized={} rank={} iters={} seconds={:.6} error={:.6e}",
        cfg.method, cfg.randomized, cfg.rank, trace.iterations, trace.seconds, trace.relative_error
    );
    Ok(if trace.converged {
        Status::Done
    } else {
        Status::NotConverged
    })
}

pub fn reconstruct(args: &ReconstructArgs) -> Result<Status> {
    let model = io::read_kruskal(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))?;
    io::write_tensor(&args.out, &model.reconstruct())
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    Ok(Status::Done)
}

pub fn bound(args: &BoundArgs) -> Result<Status> {
    let reports = diagnostics::validate_bound_sweep(
        &args.shape,
        args.rank,
        &args.ks,
        args.p,
        args.trials,
        args.seed,
    )?;
    emit_csv(args.out.as_deref(), &diagnostics::bound_csv(&reports))?;
    Ok(Status::Done)
}

fn parse_shape(s: &str) -> Result<Vec<usize>> {
    s.split([',', 'x'])
        .map(|d| {
            d.trim()
                .parse::<usize>()
                .with_context(|| format!("bad extent `{d}` in shape `{s}`"))
        })
        .collect()
}

pub fn bench(args: &BenchArgs) -> Result<Status> {
    let shapes = args
        .shapes
        .iter()
        .map(|s| parse_shape(s))
        .collect::<Result<Vec<_>>>()?;
    let mut specs = Vec::new();
    for shape in &shapes {
        for &rank in &args.ranks {
            for method in &args.methods {
                for seed in args.seed..args.seed + args.seeds {
                    let mut spec = BenchSpec::new(shape.clone(), rank, method.name(), seed);
                    spec.oversampling = args.oversample;
                    spec.power_iterations = args.power_iters;
                    spec.snr = args.snr;
                    spec.tol = args.tol;
                    spec.max_iter = args.max_iter;
                    spec.repeat = if args.repeat { 3 } else { 1 };
                    specs.push(spec);
                }
            }
        }
    }
    let records = diagnostics::bench_sweep(&specs, args.parallel);
    for r in records
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|f| (r, f)))
    {
        eprintln!(
            "warning: {} rank {} {}: {}",
            r.0.method,
            r.0.rank,
            if r.0.randomized {
                "randomized"
            } else {
                "deterministic"
            },
            r.1
        );
    }
    emit_csv(args.out.as_deref(), &diagnostics::bench_csv(&records))?;
    Ok(Status::Done)
}
