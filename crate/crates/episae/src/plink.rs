//! PLINK 1 binary filesets on disk.

use std::fs;
use std::path::{Path, PathBuf};

use episae_core::genotype::{parse_bed, parse_bim, parse_fam, write_bed, write_bim, write_fam};
use episae_core::Dataset;

use crate::Error;

/// `prefix` with `.ext` appended (the prefix may itself contain dots).
pub fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn read_text(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(prefix: &Path) -> Result<Dataset, Error> {
    let fam_path = with_ext(prefix, "fam");
    let bim_path = with_ext(prefix, "bim");
    let bed_path = with_ext(prefix, "bed");
    let format = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Format { path, source }
    };
    let samples = parse_fam(&read_text(&fam_path)?).map_err(format(&fam_path))?;
    let variants = parse_bim(&read_text(&bim_path)?).map_err(format(&bim_path))?;
    let raw = fs::read(&bed_path).map_err(|e| Error::io(&bed_path, e))?;
    let g = parse_bed(&raw, samples.len(), variants.len()).map_err(format(&bed_path))?;
    Dataset::new(samples, variants, g).map_err(format(prefix))
}

pub fn write_dataset(prefix: &Path, dataset: &Dataset) -> Result<(), Error> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let write = |ext: &str, bytes: &[u8]| {
        let path = with_ext(prefix, ext);
        fs::write(&path, bytes).map_err(|e| Error::io(path, e))
    };
    write("bed", &write_bed(&dataset.genotypes))?;
    write("bim", write_bim(&dataset.variants).as_bytes())?;
    write("fam", write_fam(&dataset.samples).as_bytes())
}

/// Keeps samples with a known phenotype; returns how many were dropped.
pub fn drop_missing_phenotypes(dataset: &Dataset) -> (Dataset, usize) {
    let keep: Vec<usize> =
        (0..dataset.n_samples()).filter(|&i| dataset.samples[i].phenotype.label().is_some()).collect();
    let dropped = dataset.n_samples() - keep.len();
    if dropped == 0 {
        (dataset.clone(), 0)
    } else {
        (dataset.select_samples(&keep), dropped)
    }
}
