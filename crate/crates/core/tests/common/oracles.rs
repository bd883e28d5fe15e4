// Independent reference computations used to check the library.

/// O(n²) Mann-Whitney probability that a random case outscores a random
/// control, counting ties as one half.
pub fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                num += 1.0;
            } else if si == sj {
                num += 0.5;
            }
        }
    }
    num / pairs
}

/// Scans every distinct score as a threshold (predict positive at `>=`)
/// and returns the smallest one reaching the maximal F1, with F1 compared
/// as an exact fraction.
pub fn exhaustive_f1_threshold(scores: &[f64], labels: &[u8]) -> f64 {
    let mut cands: Vec<f64> = scores.to_vec();
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let mut best: Option<(u64, u64, f64)> = None;
    for &t in &cands {
        let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
        for (&s, &y) in scores.iter().zip(labels) {
            match (s >= t, y == 1) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        let (num, den) = (2 * tp, 2 * tp + fp + fn_);
        let better = match best {
            None => true,
            Some((bn, bd, _)) => (num as u128) * (bd as u128) > (bn as u128) * (den.max(1) as u128),
        };
        if better {
            best = Some((num, den.max(1), t));
        }
    }
    best.unwrap().2
}

fn ln_gamma_lanczos(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Upper tail of chi-square(df): series for the lower regularized gamma
/// when `x < a + 1`, otherwise a continued fraction (modified Lentz).
pub fn chi2_tail(x: f64, df: u32) -> f64 {
    let a = df as f64 / 2.0;
    let z = x / 2.0;
    let front = (a * z.ln() - z - ln_gamma_lanczos(a)).exp();
    if z < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = 1.0;
        while term.abs() > sum.abs() * 1e-17 {
            term *= z / (a + n);
            sum += term;
            n += 1.0;
        }
        1.0 - front * sum
    } else {
        let tiny = 1e-300;
        let mut b = z + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        front * h
    }
}

/// Genotype-stratified counts: `cases[x]`, `controls[x]` for x = 0, 1, 2.
pub fn stratified_loglik(cases: [u32; 3], controls: [u32; 3], b0: f64, b1: f64) -> f64 {
    let mut ll = 0.0;
    for x in 0..3 {
        let eta = b0 + b1 * x as f64;
        // log sigmoid and log(1 - sigmoid) without cancellation
        let log_p = -(1.0 + (-eta).exp()).ln();
        let log_q = -(1.0 + eta.exp()).ln();
        ll += cases[x] as f64 * log_p + controls[x] as f64 * log_q;
    }
    ll
}

/// Grid search over [-6, 6]² at step 0.01, then compass search with the
/// step halved down to 1e-12.
pub fn brute_force_logistic(cases: [u32; 3], controls: [u32; 3]) -> (f64, f64) {
    let f = |b0: f64, b1: f64| stratified_loglik(cases, controls, b0, b1);
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for i in -600..=600 {
        for j in -600..=600 {
            let (b0, b1) = (i as f64 * 0.01, j as f64 * 0.01);
            let v = f(b0, b1);
            if v > best.2 {
                best = (b0, b1, v);
            }
        }
    }
    let (mut b0, mut b1, mut v) = best;
    let mut step = 0.01;
    while step > 1e-12 {
        let mut moved = false;
        for (d0, d1) in
            [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)]
        {
            let (c0, c1) = (b0 + d0 * step, b1 + d1 * step);
            let cv = f(c0, c1);
            if cv > v {
                b0 = c0;
                b1 = c1;
                v = cv;
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (b0, b1)
}

/// Kolmogorov distance between the empirical CDF of `p` and U(0, 1).
pub fn ks_distance(p: &[f64]) -> f64 {
    let mut s = p.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| ((i as f64 + 1.0) / n - v).abs().max((v - i as f64 / n).abs()))
        .fold(0.0, f64::max)
}

/// Pearson chi-square of an r x c table and its degrees of freedom, over
/// rows and columns with a nonzero margin.
pub fn table_chi2(table: &[Vec<f64>]) -> (f64, u32) {
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..table[0].len()).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let total: f64 = rows.iter().sum();
    let mut x = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, &o) in r.iter().enumerate() {
            let e = rows[i] * cols[j] / total;
            if e > 0.0 {
                x += (o - e) * (o - e) / e;
            }
        }
    }
    let nr = rows.iter().filter(|&&v| v > 0.0).count() as u32;
    let nc = cols.iter().filter(|&&v| v > 0.0).count() as u32;
    (x, (nr - 1) * (nc - 1))
}
