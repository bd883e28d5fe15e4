//! PLINK 1 binary genotype layout (`.bed` + `.bim` + `.fam`).
//!
//! Only variant-major `.bed` files are accepted. Genotypes are stored as
//! minor-allele counts: `0` is homozygous for allele2 (major), `2` is
//! homozygous for allele1 (minor).

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

pub const BED_MAGIC: [u8; 3] = [0x6C, 0x1B, 0x01];

/// Chromosome code used for X in the PLINK numbering.
pub const CHROM_X: u8 = 23;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GenotypeIoError {
    #[error("bad .bed header: expected 6c 1b 01 (variant-major)")]
    BadMagic,
    #[error("bed payload is {actual} bytes, expected {expected} for {n_samples} samples x {n_variants} variants")]
    LengthMismatch { expected: usize, actual: usize, n_samples: usize, n_variants: usize },
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("duplicate variant id {0:?}")]
    DuplicateVariantId(String),
    #[error("variant panels differ: {0}")]
    VariantMismatch(String),
    #[error("duplicate sample {family_id} {individual_id}")]
    DuplicateSample { family_id: String, individual_id: String },
    #[error("genotype matrix is {rows}x{cols} but metadata has {samples} samples and {variants} variants")]
    DimensionMismatch { rows: usize, cols: usize, samples: usize, variants: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Genotype {
    HomMajor = 0,
    Het = 1,
    HomMinor = 2,
    Missing = 3,
}

impl Genotype {
    /// Minor-allele count, `None` when missing.
    #[inline]
    pub fn dosage(self) -> Option<u8> {
        match self {
            Genotype::Missing => None,
            g => Some(g as u8),
        }
    }

    #[inline]
    pub fn is_missing(self) -> bool {
        self == Genotype::Missing
    }

    #[inline]
    pub fn from_dosage(d: u8) -> Genotype {
        match d {
            0 => Genotype::HomMajor,
            1 => Genotype::Het,
            2 => Genotype::HomMinor,
            _ => Genotype::Missing,
        }
    }

    #[inline]
    fn from_bed_bits(bits: u8) -> Genotype {
        match bits & 0b11 {
            0b00 => Genotype::HomMinor,
            0b01 => Genotype::Missing,
            0b10 => Genotype::Het,
            _ => Genotype::HomMajor,
        }
    }

    #[inline]
    fn bed_bits(self) -> u8 {
        match self {
            Genotype::HomMinor => 0b00,
            Genotype::Missing => 0b01,
            Genotype::Het => 0b10,
            Genotype::HomMajor => 0b11,
        }
    }
}

/// Dense `[sample][variant]` genotype matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenotypeMatrix {
    n_samples: usize,
    n_variants: usize,
    codes: Vec<Genotype>,
}

impl GenotypeMatrix {
    pub fn new(n_samples: usize, n_variants: usize, codes: Vec<Genotype>) -> Self {
        assert_eq!(codes.len(), n_samples * n_variants, "genotype code count mismatch");
        GenotypeMatrix { n_samples, n_variants, codes }
    }

    pub fn filled(n_samples: usize, n_variants: usize, g: Genotype) -> Self {
        GenotypeMatrix { n_samples, n_variants, codes: vec![g; n_samples * n_variants] }
    }

    #[inline]
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    #[inline]
    pub fn n_variants(&self) -> usize {
        self.n_variants
    }

    #[inline]
    pub fn get(&self, sample: usize, variant: usize) -> Genotype {
        self.codes[sample * self.n_variants + variant]
    }

    #[inline]
    pub fn set(&mut self, sample: usize, variant: usize, g: Genotype) {
        self.codes[sample * self.n_variants + variant] = g;
    }

    #[inline]
    pub fn row(&self, sample: usize) -> &[Genotype] {
        &self.codes[sample * self.n_variants..(sample + 1) * self.n_variants]
    }

    pub fn codes(&self) -> &[Genotype] {
        &self.codes
    }

    /// Copy of one variant's calls across all samples.
    pub fn column(&self, variant: usize) -> Vec<Genotype> {
        (0..self.n_samples).map(|i| self.get(i, variant)).collect()
    }

    pub fn select_samples(&self, idx: &[usize]) -> GenotypeMatrix {
        let mut codes = Vec::with_capacity(idx.len() * self.n_variants);
        for &i in idx {
            codes.extend_from_slice(self.row(i));
        }
        GenotypeMatrix { n_samples: idx.len(), n_variants: self.n_variants, codes }
    }

    pub fn select_variants(&self, idx: &[usize]) -> GenotypeMatrix {
        let mut codes = Vec::with_capacity(idx.len() * self.n_samples);
        for i in 0..self.n_samples {
            let row = self.row(i);
            codes.extend(idx.iter().map(|&j| row[j]));
        }
        GenotypeMatrix { n_samples: self.n_samples, n_variants: idx.len(), codes }
    }

    /// Counts of (hom_major, het, hom_minor, missing).
    pub fn code_counts(&self) -> [usize; 4] {
        let mut c = [0usize; 4];
        for &g in &self.codes {
            c[g as usize] += 1;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantRecord {
    pub chromosome: u8,
    pub variant_id: String,
    /// Morgans.
    pub genetic_distance: f64,
    pub bp_position: u64,
    /// Minor allele (counted).
    pub allele1: String,
    /// Major allele.
    pub allele2: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sex {
    Unknown = 0,
    Male = 1,
    Female = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phenotype {
    Control,
    Case,
    Missing,
}

impl Phenotype {
    /// Case → 1, control → 0.
    pub fn label(self) -> Option<u8> {
        match self {
            Phenotype::Case => Some(1),
            Phenotype::Control => Some(0),
            Phenotype::Missing => None,
        }
    }

    pub fn from_label(y: u8) -> Phenotype {
        if y == 1 {
            Phenotype::Case
        } else {
            Phenotype::Control
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    pub family_id: String,
    pub individual_id: String,
    pub paternal_id: String,
    pub maternal_id: String,
    pub sex: Sex,
    pub phenotype: Phenotype,
}

impl SampleRecord {
    pub fn new(family_id: &str, individual_id: &str, sex: Sex, phenotype: Phenotype) -> Self {
        SampleRecord {
            family_id: family_id.to_string(),
            individual_id: individual_id.to_string(),
            paternal_id: "0".to_string(),
            maternal_id: "0".to_string(),
            sex,
            phenotype,
        }
    }

    /// `FID:IID`, used for deterministic tie-breaking.
    pub fn key(&self) -> String {
        format!("{}:{}", self.family_id, self.individual_id)
    }
}

/// Genotypes with their sample and variant metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<SampleRecord>,
    pub variants: Vec<VariantRecord>,
    pub genotypes: GenotypeMatrix,
}

impl Dataset {
    pub fn new(
        samples: Vec<SampleRecord>,
        variants: Vec<VariantRecord>,
        genotypes: GenotypeMatrix,
    ) -> Result<Self, GenotypeIoError> {
        if genotypes.n_samples() != samples.len() || genotypes.n_variants() != variants.len() {
            return Err(GenotypeIoError::DimensionMismatch {
                rows: genotypes.n_samples(),
                cols: genotypes.n_variants(),
                samples: samples.len(),
                variants: variants.len(),
            });
        }
        Ok(Dataset { samples, variants, genotypes })
    }

    pub fn empty() -> Self {
        Dataset { samples: Vec::new(), variants: Vec::new(), genotypes: GenotypeMatrix::new(0, 0, Vec::new()) }
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn n_variants(&self) -> usize {
        self.variants.len()
    }

    pub fn phenotype_labels(&self) -> Vec<Option<u8>> {
        self.samples.iter().map(|s| s.phenotype.label()).collect()
    }

    pub fn select_samples(&self, idx: &[usize]) -> Dataset {
        Dataset {
            samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
            variants: self.variants.clone(),
            genotypes: self.genotypes.select_samples(idx),
        }
    }

    pub fn select_variants(&self, idx: &[usize]) -> Dataset {
        Dataset {
            samples: self.samples.clone(),
            variants: idx.iter().map(|&j| self.variants[j].clone()).collect(),
            genotypes: self.genotypes.select_variants(idx),
        }
    }
}

#[inline]
fn bytes_per_variant(n_samples: usize) -> usize {
    n_samples.div_ceil(4)
}

pub fn parse_bed(raw: &[u8], n_samples: usize, n_variants: usize) -> Result<GenotypeMatrix, GenotypeIoError> {
    if raw.len() < 3 || raw[..3] != BED_MAGIC {
        return Err(GenotypeIoError::BadMagic);
    }
    let stride = bytes_per_variant(n_samples);
    let expected = stride * n_variants;
    let payload = &raw[3..];
    if payload.len() != expected {
        return Err(GenotypeIoError::LengthMismatch { expected, actual: payload.len(), n_samples, n_variants });
    }
    let mut g = GenotypeMatrix::filled(n_samples, n_variants, Genotype::Missing);
    if stride == 0 {
        return Ok(g);
    }
    for (j, block) in payload.chunks_exact(stride).enumerate() {
        for i in 0..n_samples {
            let bits = block[i / 4] >> (2 * (i % 4));
            g.set(i, j, Genotype::from_bed_bits(bits));
        }
    }
    Ok(g)
}

pub fn write_bed(g: &GenotypeMatrix) -> Vec<u8> {
    let stride = bytes_per_variant(g.n_samples());
    let mut out = Vec::with_capacity(3 + stride * g.n_variants());
    out.extend_from_slice(&BED_MAGIC);
    for j in 0..g.n_variants() {
        let start = out.len();
        out.resize(start + stride, 0);
        for i in 0..g.n_samples() {
            out[start + i / 4] |= g.get(i, j).bed_bits() << (2 * (i % 4));
        }
    }
    out
}

fn non_empty_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

fn six_fields(line_no: usize, line: &str) -> Result<[&str; 6], GenotypeIoError> {
    let f: Vec<&str> = line.split_whitespace().collect();
    <[&str; 6]>::try_from(f.as_slice()).map_err(|_| GenotypeIoError::MalformedLine {
        line: line_no,
        reason: format!("expected 6 fields, found {}", f.len()),
    })
}

pub fn parse_fam(text: &str) -> Result<Vec<SampleRecord>, GenotypeIoError> {
    let mut out = Vec::new();
    for (line_no, line) in non_empty_lines(text) {
        let [fid, iid, pat, mat, sex, pheno] = six_fields(line_no, line)?;
        let sex = match sex {
            "1" => Sex::Male,
            "2" => Sex::Female,
            _ => Sex::Unknown,
        };
        let phenotype = match pheno {
            "1" => Phenotype::Control,
            "2" => Phenotype::Case,
            "0" | "-9" => Phenotype::Missing,
            other => {
                return Err(GenotypeIoError::MalformedLine {
                    line: line_no,
                    reason: format!("phenotype {other:?} is not 1, 2, 0 or -9"),
                })
            }
        };
        out.push(SampleRecord {
            family_id: fid.to_string(),
            individual_id: iid.to_string(),
            paternal_id: pat.to_string(),
            maternal_id: mat.to_string(),
            sex,
            phenotype,
        });
    }
    Ok(out)
}

pub fn write_fam(samples: &[SampleRecord]) -> String {
    let mut s = String::new();
    for r in samples {
        let pheno = match r.phenotype {
            Phenotype::Control => "1",
            Phenotype::Case => "2",
            Phenotype::Missing => "-9",
        };
        let _ = writeln!(
            s,
            "{} {} {} {} {} {}",
            r.family_id, r.individual_id, r.paternal_id, r.maternal_id, r.sex as u8, pheno
        );
    }
    s
}

/// PLINK chromosome coding: 1–22, X=23, Y=24, XY=25, MT=26, 0 unknown.
pub fn parse_chromosome(token: &str) -> Option<u8> {
    let t = token.strip_prefix("chr").or_else(|| token.strip_prefix("CHR")).unwrap_or(token);
    match t {
        "X" | "x" => Some(23),
        "Y" | "y" => Some(24),
        "XY" | "xy" => Some(25),
        "MT" | "M" | "mt" | "m" => Some(26),
        _ => t.parse::<u8>().ok().filter(|&c| c <= 26),
    }
}

pub fn parse_bim(text: &str) -> Result<Vec<VariantRecord>, GenotypeIoError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (line_no, line) in non_empty_lines(text) {
        let [chrom, id, cm, bp, a1, a2] = six_fields(line_no, line)?;
        let bad = |reason: String| GenotypeIoError::MalformedLine { line: line_no, reason };
        let chromosome = parse_chromosome(chrom).ok_or_else(|| bad(format!("unknown chromosome {chrom:?}")))?;
        let genetic_distance = cm.parse::<f64>().map_err(|_| bad(format!("bad genetic distance {cm:?}")))?;
        let bp_position = bp.parse::<u64>().map_err(|_| bad(format!("bad position {bp:?}")))?;
        if a1 == a2 && a1 != "0" {
            return Err(bad(format!("allele1 and allele2 are both {a1:?}")));
        }
        if !seen.insert(id) {
            return Err(GenotypeIoError::DuplicateVariantId(id.to_string()));
        }
        out.push(VariantRecord {
            chromosome,
            variant_id: id.to_string(),
            genetic_distance,
            bp_position,
            allele1: a1.to_string(),
            allele2: a2.to_string(),
        });
    }
    Ok(out)
}

pub fn write_bim(variants: &[VariantRecord]) -> String {
    let mut s = String::new();
    for v in variants {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}",
            v.chromosome, v.variant_id, v.genetic_distance, v.bp_position, v.allele1, v.allele2
        );
    }
    s
}

fn same_locus(a: &VariantRecord, b: &VariantRecord) -> bool {
    a.variant_id == b.variant_id
        && a.chromosome == b.chromosome
        && a.bp_position == b.bp_position
        && a.allele1 == b.allele1
        && a.allele2 == b.allele2
}

/// Stacks the samples of `b` under those of `a`.
///
/// Both panels must contain the same variants (compared after sorting by
/// id); `b`'s columns are reordered to `a`'s variant order. A dataset with
/// no samples and no variants acts as the identity.
pub fn merge_datasets(a: &Dataset, b: &Dataset) -> Result<Dataset, GenotypeIoError> {
    if b.n_samples() == 0 && b.n_variants() == 0 {
        return Ok(a.clone());
    }
    if a.n_samples() == 0 && a.n_variants() == 0 {
        return Ok(b.clone());
    }
    if a.n_variants() != b.n_variants() {
        return Err(GenotypeIoError::VariantMismatch(format!("{} variants vs {}", a.n_variants(), b.n_variants())));
    }
    let mut order_a: Vec<usize> = (0..a.n_variants()).collect();
    let mut order_b = order_a.clone();
    order_a.sort_by(|&i, &j| a.variants[i].variant_id.cmp(&a.variants[j].variant_id));
    order_b.sort_by(|&i, &j| b.variants[i].variant_id.cmp(&b.variants[j].variant_id));
    // b column feeding each of a's columns
    let mut b_for_a = vec![0usize; a.n_variants()];
    for (&ia, &ib) in order_a.iter().zip(&order_b) {
        let (va, vb) = (&a.variants[ia], &b.variants[ib]);
        if !same_locus(va, vb) {
            return Err(GenotypeIoError::VariantMismatch(format!(
                "{} ({} {}) vs {} ({} {})",
                va.variant_id, va.allele1, va.allele2, vb.variant_id, vb.allele1, vb.allele2
            )));
        }
        b_for_a[ia] = ib;
    }
    let mut keys = BTreeSet::new();
    for s in a.samples.iter().chain(&b.samples) {
        if !keys.insert((s.family_id.as_str(), s.individual_id.as_str())) {
            return Err(GenotypeIoError::DuplicateSample {
                family_id: s.family_id.clone(),
                individual_id: s.individual_id.clone(),
            });
        }
    }
    let b_aligned = b.genotypes.select_variants(&b_for_a);
    let mut codes = a.genotypes.codes().to_vec();
    codes.extend_from_slice(b_aligned.codes());
    let n = a.n_samples() + b.n_samples();
    let mut samples = a.samples.clone();
    samples.extend(b.samples.iter().cloned());
    Ok(Dataset { samples, variants: a.variants.clone(), genotypes: GenotypeMatrix::new(n, a.n_variants(), codes) })
}
