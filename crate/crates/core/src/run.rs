//! One complete composition run: load inputs, build the fitness context,
//! evolve, and write images, trace and manifest to the output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::{RunConfig, Weighting};
use crate::error::{Error, Result};
use crate::evolution::{run_ga, TraceRow};
use crate::fitness::FitnessContext;
use crate::raster::{load_pair, RgbImage};
use crate::region::build_grid;
use crate::saliency::{image_signature_saliency, saliency_weights, uniform_weights};

pub const TRACE_FILE: &str = "trace.csv";
pub const MANIFEST_FILE: &str = "run_manifest.cfg";

/// File name of the `slot`-th final individual.
pub fn population_file(slot: usize) -> String {
    format!("pop_{slot}.png")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlotResult {
    pub fitness: f64,
    pub constraint: usize,
    pub count_s: usize,
    pub count_t: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub bound: usize,
    pub slots: Vec<SlotResult>,
}

/// Whether every pixel of `x` equals the source or the target pixel.
pub fn is_mixture(x: &RgbImage, source: &RgbImage, target: &RgbImage) -> bool {
    x.same_dims(source)
        && x.same_dims(target)
        && x
            .pixels()
            .iter()
            .zip(source.pixels().iter().zip(target.pixels()))
            .all(|(p, (s, t))| p == s || p == t)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    let (src_path, tgt_path) = match (&cfg.source, &cfg.target) {
        (Some(s), Some(t)) => (s, t),
        _ => return Err(crate::ConfigError::MissingInput("source and target".into()).into()),
    };
    let (source, target) = load_pair(src_path, tgt_path)?;
    let (m, n) = source.dims();
    let grid = build_grid(m, n, cfg.l)?;

    let saliency = if cfg.weighting == Weighting::Saliency || cfg.dump_saliency {
        Some((
            image_signature_saliency(&source, cfg.sigma_frac)?,
            image_signature_saliency(&target, cfg.sigma_frac)?,
        ))
    } else {
        None
    };
    let weights = match (&cfg.weighting, &saliency) {
        (Weighting::Saliency, Some((sal_s, sal_t))) => saliency_weights(&grid, sal_s, sal_t)?,
        _ => uniform_weights(&grid, cfg.w_s, cfg.w_t)?,
    };

    let mut ga = cfg.ga.clone();
    ga.bound = cfg.bound.resolve(m, n);
    ga.validate()?;
    let ctx = FitnessContext::new(source, target, cfg.features.clone(), grid, weights, cfg.metric)?;

    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(io_err(out))?;
    if let (true, Some((sal_s, sal_t))) = (cfg.dump_saliency, &saliency) {
        sal_s.save_png(&out.join("saliency_S.png"))?;
        sal_t.save_png(&out.join("saliency_T.png"))?;
    }

    let trace_path = out.join(TRACE_FILE);
    let mut trace = BufWriter::new(File::create(&trace_path).map_err(io_err(&trace_path))?);
    writeln!(trace, "{}", TraceRow::CSV_HEADER).map_err(io_err(&trace_path))?;
    let population = run_ga(&ctx, &ga, |row| writeln!(trace, "{}", row.to_csv()).map_err(io_err(&trace_path)))?;
    trace.flush().map_err(io_err(&trace_path))?;

    let mut slots = Vec::with_capacity(population.len());
    for (k, ind) in population.iter().enumerate() {
        if !is_mixture(ind.image(), ctx.source(), ctx.target()) {
            return Err(Error::NotAMixture(k));
        }
        ind.image().save_png(&out.join(population_file(k)))?;
        slots.push(SlotResult {
            fitness: ind.fitness(),
            constraint: ind.constraint_value(),
            count_s: ind.count_s(),
            count_t: ind.count_t(),
        });
    }

    let mut manifest = String::from("# resolved configuration; feed back with --config to reproduce\n");
    manifest.push_str(&cfg.to_config_text());
    manifest.push_str(&format!("# sha256 source {}\n", sha256_file(src_path)?));
    manifest.push_str(&format!("# sha256 target {}\n", sha256_file(tgt_path)?));
    manifest.push_str(&format!("# image {m}x{n}, {} regions, bound {}\n", ctx.grid().len(), ga.bound));
    for (k, s) in slots.iter().enumerate() {
        manifest.push_str(&format!(
            "# slot {k}: fitness {:?}, constraint {}, c_S {}, c_T {}\n",
            s.fitness, s.constraint, s.count_s, s.count_t
        ));
    }
    let manifest_path = out.join(MANIFEST_FILE);
    fs::write(&manifest_path, manifest).map_err(io_err(&manifest_path))?;

    Ok(RunSummary {
        out_dir: out.clone(),
        bound: ga.bound,
        slots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn write_inputs(dir: &Path, rows: usize, cols: usize) -> (PathBuf, PathBuf) {
        let s = RgbImage::from_fn(rows, cols, |i, j| [(i * 7 % 256) as u8, (j * 5 % 256) as u8, ((i * j) % 251) as u8]).unwrap();
        let t = RgbImage::from_fn(rows, cols, |i, j| [255 - (j * 3 % 200) as u8, 40, ((i + 2 * j) % 256) as u8]).unwrap();
        let (a, b) = (dir.join("s.png"), dir.join("t.png"));
        s.save_png(&a).unwrap();
        t.save_png(&b).unwrap();
        (a, b)
    }

    fn overrides(a: &Path, b: &Path, out: &Path) -> Vec<(String, String)> {
        [
            ("source", a.display().to_string()),
            ("target", b.display().to_string()),
            ("out_dir", out.display().to_string()),
            ("generations", "40".into()),
            ("l", "5".into()),
            ("t_cr", "200".into()),
            ("dump_saliency", "true".into()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    #[test]
    fn writes_all_outputs_and_reproduces_from_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = write_inputs(dir.path(), 24, 30);
        let out1 = dir.path().join("one");
        let cfg = parse_config("", &overrides(&a, &b, &out1)).unwrap();
        let summary = run(&cfg).unwrap();
        assert_eq!(summary.slots.len(), 4);
        assert_eq!(summary.bound, 24 * 30 / 4);
        for name in ["trace.csv", "run_manifest.cfg", "saliency_S.png", "saliency_T.png"] {
            assert!(out1.join(name).is_file(), "{name}");
        }
        let trace = fs::read_to_string(out1.join(TRACE_FILE)).unwrap();
        assert_eq!(trace.lines().count(), 41);

        let manifest = fs::read_to_string(out1.join(MANIFEST_FILE)).unwrap();
        let out2 = dir.path().join("two");
        let again = parse_config(&manifest, &[("out_dir".into(), out2.display().to_string())]).unwrap();
        run(&again).unwrap();
        for k in 0..4 {
            let f = population_file(k);
            assert_eq!(fs::read(out1.join(&f)).unwrap(), fs::read(out2.join(&f)).unwrap());
        }
        assert_eq!(trace, fs::read_to_string(out2.join(TRACE_FILE)).unwrap());
    }

    #[test]
    fn mismatched_inputs_are_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let (a, _) = write_inputs(dir.path(), 24, 30);
        let c = dir.path().join("c.png");
        RgbImage::filled(20, 30, [1, 2, 3]).unwrap().save_png(&c).unwrap();
        let cfg = parse_config("", &overrides(&a, &c, &dir.path().join("o"))).unwrap();
        let err = run(&cfg).unwrap_err();
        assert!(err.is_validation(), "{err}");
    }

    #[test]
    fn mixture_check() {
        let s = RgbImage::filled(2, 2, [0, 0, 0]).unwrap();
        let t = RgbImage::filled(2, 2, [9, 9, 9]).unwrap();
        let mut x = s.clone();
        x.set(1, 1, [9, 9, 9]);
        assert!(is_mixture(&x, &s, &t));
        x.set(0, 1, [5, 5, 5]);
        assert!(!is_mixture(&x, &s, &t));
    }
}
