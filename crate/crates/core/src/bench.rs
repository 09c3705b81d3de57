//! Pairwise benchmark over image collections.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::compare::{run_compare, CompareConfig};
use crate::error::{Error, Result};
use crate::io::{load_measure, InputFormat};
use crate::measure::DiscreteMeasure;
use crate::report::{DistanceReport, Method};
use crate::synth::{generate_image, image_measure, ImageClass};

/// A labelled image measure.
#[derive(Clone, Debug)]
pub struct Image {
    pub class: String,
    pub name: String,
    pub measure: DiscreteMeasure,
}

/// `per_class` synthetic images of every class, `size x size` pixels.
pub fn synthetic_images(per_class: usize, size: usize, seed: u64) -> Result<Vec<Image>> {
    let mut out = Vec::with_capacity(per_class * ImageClass::ALL.len());
    for class in ImageClass::ALL {
        for i in 0..per_class {
            let values = generate_image(class, size, seed.wrapping_add(i as u64))?;
            out.push(Image {
                class: class.name().to_string(),
                name: format!("{class}-{i}"),
                measure: image_measure(&values, size, size)?,
            });
        }
    }
    Ok(out)
}

fn csv_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.is_file() && p.extension().is_some_and(|e| e == "csv"));
    files.sort();
    Ok(files)
}

/// CSV images of a directory. Each subdirectory is a class; files directly
/// inside `dir` form a class named after `dir`.
pub fn load_image_dir(dir: &Path) -> Result<Vec<Image>> {
    let mut groups = vec![(dir.to_path_buf(), csv_files(dir)?)];
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    subdirs.retain(|p| p.is_dir());
    subdirs.sort();
    for sub in subdirs {
        let files = csv_files(&sub)?;
        groups.push((sub, files));
    }
    let mut out = Vec::new();
    for (group, files) in groups {
        let class = group.file_name().map_or_else(|| group.display().to_string(), |n| n.to_string_lossy().into_owned());
        for f in files {
            log::debug!("loading {}", f.display());
            out.push(Image {
                class: class.clone(),
                name: f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                measure: load_measure(&f, InputFormat::CsvImage)?,
            });
        }
    }
    if out.is_empty() {
        return Err(Error::invalid(format!("no .csv images under {}", dir.display())));
    }
    Ok(out)
}

/// Index pairs `(a, b)`, `a < b`, of images in the same class.
pub fn intra_class_pairs(images: &[Image]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for a in 0..images.len() {
        for b in a + 1..images.len() {
            if images[a].class == images[b].class {
                pairs.push((a, b));
            }
        }
    }
    pairs
}

/// Reports of one image pair.
#[derive(Clone, Debug)]
pub struct PairResult {
    pub first: usize,
    pub second: usize,
    pub reports: Vec<DistanceReport>,
}

/// Compares every pair on `workers` threads (0 uses all cores); each comparison runs single-threaded.
pub fn run_pairs(images: &[Image], pairs: &[(usize, usize)], cfg: &CompareConfig, workers: usize) -> Result<Vec<PairResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let inner = CompareConfig {
        threads: 1,
        ..cfg.clone()
    };
    pool.install(|| {
        pairs
            .par_iter()
            .map(|&(a, b)| {
                let cmp = run_compare(&images[a].measure, &images[b].measure, &inner)?;
                Ok(PairResult {
                    first: a,
                    second: b,
                    reports: cmp.reports,
                })
            })
            .collect()
    })
}

/// Mean and median relative error of one method and hub count.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorSummary {
    pub method: Method,
    pub kappa: Option<usize>,
    pub pairs: usize,
    pub mean: f64,
    pub median: f64,
}

/// Summaries in order of first appearance. Pairs without a relative error are skipped.
pub fn summarize(results: &[PairResult]) -> Vec<ErrorSummary> {
    let mut keys: Vec<(Method, Option<usize>)> = Vec::new();
    for r in results.iter().flat_map(|p| &p.reports) {
        if r.method != Method::Exact && !keys.contains(&(r.method, r.kappa)) {
            keys.push((r.method, r.kappa));
        }
    }
    keys.into_iter()
        .filter_map(|(method, kappa)| {
            let mut errs: Vec<f64> = results
                .iter()
                .flat_map(|p| &p.reports)
                .filter(|r| r.method == method && r.kappa == kappa)
                .filter_map(|r| r.rel_error)
                .filter(|e| e.is_finite())
                .collect();
            if errs.is_empty() {
                return None;
            }
            errs.sort_by(f64::total_cmp);
            let n = errs.len();
            let median = if n % 2 == 1 {
                errs[n / 2]
            } else {
                0.5 * (errs[n / 2 - 1] + errs[n / 2])
            };
            Some(ErrorSummary {
                method,
                kappa,
                pairs: n,
                mean: errs.iter().sum::<f64>() / n as f64,
                median,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_stay_within_classes() {
        let images = synthetic_images(3, 4, 0).unwrap();
        assert_eq!(images.len(), 30);
        let pairs = intra_class_pairs(&images);
        assert_eq!(pairs.len(), 30);
        assert!(pairs.iter().all(|&(a, b)| images[a].class == images[b].class));
    }

    #[test]
    fn summary_statistics() {
        let mk = |e: f64| {
            let mut r = DistanceReport::new(Method::Multiscale, 2.0, 1.0, std::time::Duration::ZERO);
            r.kappa = Some(4);
            r.rel_error = Some(e);
            r
        };
        let results: Vec<PairResult> = [0.01, 0.03, 0.02, 0.10]
            .iter()
            .map(|&e| PairResult {
                first: 0,
                second: 1,
                reports: vec![mk(e)],
            })
            .collect();
        let s = summarize(&results);
        assert_eq!(s.len(), 1);
        assert!((s[0].mean - 0.04).abs() < 1e-15);
        assert!((s[0].median - 0.025).abs() < 1e-15);
    }
}
