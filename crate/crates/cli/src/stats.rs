//! Statistics helpers for the games and benchmarks: least-squares fit
//! quality, two-sample chi-square homogeneity, and binomial tail bounds.

/// Coefficient of determination for the best-fit line through `points`.
pub fn linear_r2(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = points
        .iter()
        .map(|p| {
            let fit = mean_y + slope * (p.0 - mean_x);
            (p.1 - fit).powi(2)
        })
        .sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if ss_tot == 0.0 {
        return 1.0;
    }
    1.0 - ss_res / ss_tot
}

/// Two-sample chi-square statistic for homogeneity of two histograms over the
/// same categories. Compare against a critical value with `k - 1` degrees of
/// freedom, where `k` is the number of categories observed in either sample.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let row_a: u64 = a.iter().sum();
    let row_b: u64 = b.iter().sum();
    let grand = (row_a + row_b) as f64;
    let mut stat = 0.0;
    for (&oa, &ob) in a.iter().zip(b) {
        let col = (oa + ob) as f64;
        if col == 0.0 {
            continue;
        }
        let ea = row_a as f64 * col / grand;
        let eb = row_b as f64 * col / grand;
        stat += (oa as f64 - ea).powi(2) / ea;
        stat += (ob as f64 - eb).powi(2) / eb;
    }
    stat
}

/// 99th percentile of the chi-square distribution via the Wilson-Hilferty
/// cube approximation, accurate to about 0.1 for the degrees of freedom the
/// harness uses.
pub fn chi_square_critical_99(df: usize) -> f64 {
    let z = 2.3263478740408408; // standard normal 99th percentile
    let d = df as f64;
    let t = 2.0 / (9.0 * d);
    d * (1.0 - t + z * t.sqrt()).powi(3)
}

/// One-sided 99% upper confidence bound on an event probability after
/// observing zero events in `trials` independent attempts: if the true rate
/// were above `ln(100) / trials`, zero events would occur with probability
/// below 1%.
pub fn zero_rate_ucb_99(trials: u64) -> f64 {
    (100.0f64).ln() / trials as f64
}

pub fn median(samples: &mut [f64]) -> f64 {
    assert!(!samples.is_empty());
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        (samples[mid - 1] + samples[mid]) / 2.0
    }
}
