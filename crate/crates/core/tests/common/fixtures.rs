//! A small cohort with exactly one planted violation per QC stage.

use episae_core::genotype::{Dataset, Genotype, GenotypeMatrix, Phenotype, SampleRecord, Sex, VariantRecord, CHROM_X};
use episae_core::rng::substream;
use rand::seq::SliceRandom;
use rand::Rng;

pub const N_SAMPLES: usize = 200;
pub const N_FEMALES: usize = 100;
/// Rare, common and population-differentiated autosomal blocks.
pub const BLOCK: usize = 1000;
pub const N_X: usize = 20;

pub const SEX_MISMATCH: usize = 101;
pub const HIGH_MISSING: usize = 102;
pub const HET_OUTLIER: usize = 103;
pub const ANCESTRY_OUTLIER: usize = 104;
pub const DUPLICATE_OF: usize = 105;
pub const DUPLICATE: usize = 106;

/// Variants inside the common block.
pub const MISSING_VARIANT: usize = BLOCK + 10;
pub const MONOMORPHIC_VARIANT: usize = BLOCK + 20;
pub const HWE_VARIANT: usize = BLOCK + 30;

pub const PLANTED: [usize; 5] = [SEX_MISMATCH, HIGH_MISSING, HET_OUTLIER, ANCESTRY_OUTLIER, DUPLICATE];

pub fn sample_key(i: usize) -> String {
    format!("FAM{i:03}:S{i:03}")
}

pub fn variant_id(j: usize) -> String {
    format!("v{j:04}")
}

fn hwe_counts(n: usize, q: f64) -> [usize; 3] {
    let hom = (n as f64 * q * q).round() as usize;
    let het = (2.0 * n as f64 * q * (1.0 - q)).round() as usize;
    [n - hom - het, het, hom]
}

fn fill_exact(g: &mut GenotypeMatrix, rows: &[usize], j: usize, q: f64, rng: &mut impl Rng) {
    let [_, het, hom] = hwe_counts(rows.len(), q);
    let mut order = rows.to_vec();
    order.shuffle(rng);
    for (k, &i) in order.iter().enumerate() {
        let code = if k < hom {
            Genotype::HomMinor
        } else if k < hom + het {
            Genotype::Het
        } else {
            Genotype::HomMajor
        };
        g.set(i, j, code);
    }
}

/// Females are cases and males controls. Everything else is drawn so that
/// no unplanted sample or variant crosses a default threshold.
pub fn qc_fixture(seed: u64) -> Dataset {
    let mut rng = substream(seed, "qc-fixture");
    let n_auto = 3 * BLOCK;
    let m = n_auto + N_X;
    let mut g = GenotypeMatrix::filled(N_SAMPLES, m, Genotype::HomMajor);
    let ordinary: Vec<usize> = (0..N_SAMPLES).filter(|i| !PLANTED.contains(i)).collect();
    let cases: Vec<usize> = ordinary.iter().copied().filter(|&i| i < N_FEMALES).collect();
    let controls: Vec<usize> = ordinary.iter().copied().filter(|&i| i >= N_FEMALES).collect();
    for j in 0..n_auto {
        for stratum in [&cases, &controls] {
            if j < BLOCK {
                fill_exact(&mut g, stratum, j, 0.0625, &mut rng);
            } else if j < 2 * BLOCK {
                fill_exact(&mut g, stratum, j, 0.5, &mut rng);
            } else {
                for pop in 0..2 {
                    let rows: Vec<usize> = stratum.iter().copied().filter(|i| i % 2 == pop).collect();
                    fill_exact(&mut g, &rows, j, [0.35, 0.65][pop], &mut rng);
                }
            }
        }
    }
    for j in n_auto..m {
        for i in 0..N_SAMPLES {
            let hom = if rng.gen_bool(0.5) { Genotype::HomMajor } else { Genotype::HomMinor };
            g.set(i, j, hom);
        }
    }
    // females: 18 of 20 X calls heterozygous
    for i in 0..N_FEMALES {
        for j in n_auto..m - 2 {
            g.set(i, j, Genotype::Het);
        }
    }
    let copy_row = |g: &mut GenotypeMatrix, from: usize, to: usize| {
        for j in 0..m {
            let c = g.get(from, j);
            g.set(to, j, c);
        }
    };

    copy_row(&mut g, 107, SEX_MISMATCH);
    for j in n_auto..n_auto + N_X / 2 {
        g.set(SEX_MISMATCH, j, Genotype::Het);
    }

    copy_row(&mut g, 108, HIGH_MISSING);
    let mut common: Vec<usize> =
        (BLOCK..2 * BLOCK).filter(|j| ![MISSING_VARIANT, MONOMORPHIC_VARIANT, HWE_VARIANT].contains(j)).collect();
    common.shuffle(&mut rng);
    for &j in common.iter().take(m / 10) {
        g.set(HIGH_MISSING, j, Genotype::Missing);
    }

    copy_row(&mut g, 109, HET_OUTLIER);
    for j in BLOCK..2 * BLOCK {
        g.set(HET_OUTLIER, j, Genotype::Het);
    }

    // rare alleles everywhere, no heterozygosity elsewhere, so the
    // heterozygosity rate stays typical
    copy_row(&mut g, 110, ANCESTRY_OUTLIER);
    for j in 0..n_auto {
        let code = if j < BLOCK {
            Genotype::Het
        } else if j % 2 == 0 {
            Genotype::HomMajor
        } else {
            Genotype::HomMinor
        };
        g.set(ANCESTRY_OUTLIER, j, code);
    }

    copy_row(&mut g, DUPLICATE_OF, DUPLICATE);

    let mut with_miss = controls.clone();
    with_miss.retain(|&i| i != DUPLICATE_OF);
    g.set(with_miss[0], MISSING_VARIANT, Genotype::Missing);
    g.set(with_miss[1], MISSING_VARIANT, Genotype::Missing);
    for i in 0..N_SAMPLES {
        g.set(i, MONOMORPHIC_VARIANT, Genotype::HomMajor);
    }
    for (k, &i) in controls.iter().enumerate() {
        let code = if k % 2 == 0 { Genotype::HomMajor } else { Genotype::HomMinor };
        g.set(i, HWE_VARIANT, code);
    }

    let samples = (0..N_SAMPLES)
        .map(|i| {
            let (sex, ph) =
                if i < N_FEMALES { (Sex::Female, Phenotype::Case) } else { (Sex::Male, Phenotype::Control) };
            SampleRecord::new(&format!("FAM{i:03}"), &format!("S{i:03}"), sex, ph)
        })
        .collect();
    let variants = (0..m)
        .map(|j| VariantRecord {
            chromosome: if j < n_auto { 1 + (j % 22) as u8 } else { CHROM_X },
            variant_id: variant_id(j),
            genetic_distance: 0.0,
            bp_position: 1000 * (j as u64 + 1),
            allele1: "A".into(),
            allele2: "G".into(),
        })
        .collect();
    Dataset::new(samples, variants, g).unwrap()
}
