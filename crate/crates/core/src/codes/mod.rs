//! Executable random-coding schemes measured by Monte Carlo.

pub mod binned;
pub mod point;
pub mod two_terminal;

/// True when the second and later values never rise above their predecessor
/// by more than `k_sigma` binomial standard deviations (rates paired with
/// the trial count used to estimate them).
pub fn monotone_nonincreasing_within(rates: &[f64], trials: usize, k_sigma: f64) -> bool {
    rates.windows(2).all(|w| {
        let sigma = (w[0] * (1.0 - w[0]) / trials as f64).sqrt();
        w[1] <= w[0] + k_sigma * sigma + 1e-12
    })
}
