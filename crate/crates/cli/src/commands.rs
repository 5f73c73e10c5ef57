//! One function per CLI verb. All print CSV or short status lines to stdout;
//! errors bubble up to main for the exit code.

use crate::config::RunConfig;
use crate::plot::line_plot;
use dnsp_core::imaging::{
    make_training_pairs, read_pgm, synth_phantom, write_pgm, gaussian_blur,
};
use dnsp_core::metrics::{psnr, ssim, MetricConfig};
use dnsp_core::network::{read_checkpoint, write_checkpoint};
use dnsp_core::priors::sharpness;
use dnsp_core::training::{infer, subsample_pairs, train};
use dnsp_core::verify::{run_suite, Suite};
use dnsp_core::{Error, Result};
use std::path::Path;

pub fn synth(count: usize, size: usize, seed: u64, out_dir: &Path, quiet: bool) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    for i in 0..count {
        let img = synth_phantom(seed.wrapping_add(i as u64), size)?;
        let path = out_dir.join(format!("phantom_{i:04}.pgm"));
        write_pgm(&img, &path, 255)?;
        if !quiet {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

pub fn train_cmd(cfg: &RunConfig, data_dir: &Path, out_dir: &Path, quiet: bool) -> Result<()> {
    let mut paths: Vec<_> = std::fs::read_dir(data_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map_or(false, |e| e == "pgm"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Configuration(format!(
            "no .pgm images found in {}",
            data_dir.display()
        )));
    }
    let images: Result<Vec<_>> = paths.iter().map(|p| read_pgm(p)).collect();
    let pairs = make_training_pairs(&images?, &cfg.degradation, cfg.patch, cfg.stride)?;
    let pairs = subsample_pairs(&pairs, cfg.fraction, cfg.hp.seed)?;
    if !quiet {
        println!(
            "training on {} patch pairs from {} images ({} skipped as too small)",
            pairs.pairs.len(),
            paths.len(),
            pairs.skipped
        );
    }

    std::fs::create_dir_all(out_dir)?;
    cfg.write_into(out_dir)?;
    let (params, report) = train(&pairs, None, &cfg.layer_specs()?, &cfg.hp)?;
    write_checkpoint(&params, &out_dir.join("model.ckpt"))?;
    std::fs::write(out_dir.join("train_report.csv"), report.to_csv())?;
    if !quiet {
        if let Some(last) = report.epochs.last() {
            println!(
                "epoch {}: mse {:.6} total {:.6}",
                report.epochs.len(),
                last.mean_loss.mse,
                last.mean_loss.total
            );
        }
        println!("wrote {}", out_dir.join("model.ckpt").display());
    }
    Ok(())
}

pub fn infer_cmd(
    checkpoint: &Path,
    input: &Path,
    scale: usize,
    output: &Path,
    quiet: bool,
) -> Result<()> {
    let params = read_checkpoint(checkpoint)?;
    let x = read_pgm(input)?;
    let y = infer(&x, &params, scale)?;
    write_pgm(&y, output, 255)?;
    if !quiet {
        println!("{}x{} -> {}x{}", x.rows(), x.cols(), y.rows(), y.cols());
    }
    Ok(())
}

pub fn eval_cmd(paths: &[std::path::PathBuf]) -> Result<()> {
    let cfg = MetricConfig::default();
    println!("sr,gt,psnr,ssim");
    let mut sums = (0.0, 0.0);
    let mut ok = 0usize;
    let mut failed = false;
    for pair in paths.chunks(2) {
        let (sr, gt) = (&pair[0], &pair[1]);
        let result = (|| -> Result<(f64, f64)> {
            let a = read_pgm(sr)?;
            let b = read_pgm(gt)?;
            Ok((psnr(&a, &b, &cfg)?, ssim(&a, &b, &cfg)?))
        })();
        match result {
            Ok((p, s)) => {
                println!("{},{},{p},{s}", sr.display(), gt.display());
                sums.0 += p;
                sums.1 += s;
                ok += 1;
            }
            Err(e) => {
                println!("{},{},error,{e}", sr.display(), gt.display());
                failed = true;
            }
        }
    }
    if ok > 0 {
        println!("mean,,{},{}", sums.0 / ok as f64, sums.1 / ok as f64);
    }
    if failed {
        return Err(Error::Configuration("one or more pairs failed".into()));
    }
    Ok(())
}

pub fn blur_sweep(image: &Path, sigmas: &[f64], svg: Option<&Path>) -> Result<()> {
    let img = read_pgm(image)?;
    println!("sigma,variance_of_laplacian");
    let mut points = Vec::new();
    for &sigma in sigmas {
        let v = sharpness(&gaussian_blur(&img, sigma)?)?;
        println!("{sigma},{v}");
        points.push((sigma, v));
    }
    if let Some(path) = svg {
        std::fs::write(path, line_plot(&points, "blur sigma", "variance of Laplacian"))?;
    }
    Ok(())
}

pub fn verify_cmd(suite: Suite) -> Result<()> {
    let results = run_suite(suite)?;
    let mut failed = false;
    for r in &results {
        let status = if r.passed() { "pass" } else { "FAIL" };
        println!("{status}  {:<55} worst {:.3e} (threshold {:.0e})", r.name, r.worst, r.threshold);
        if !r.passed() {
            println!("      {}", r.detail);
            failed = true;
        }
    }
    if failed {
        return Err(Error::Numeric("verification suite failed".into()));
    }
    Ok(())
}
