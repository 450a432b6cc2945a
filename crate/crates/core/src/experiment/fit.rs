use crate::error::{Error, Result};

/// Least-squares slope of `log(error)` against `log(horizon / N)`.
pub fn fit_rate(points: &[(usize, f64)], horizon: f64) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid("a rate needs at least two resolutions"));
    }
    if let Some(&(n, e)) = points.iter().find(|&&(n, e)| n == 0 || !(e > 0.0 && e.is_finite())) {
        return Err(Error::invalid(format!("cannot fit a rate through N = {n}, error = {e}")));
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (horizon / n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, e)| e.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("a rate needs distinct resolutions"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degenerate_inputs() {
        assert!(fit_rate(&[(16, 0.1)], 1.0).is_err());
        assert!(fit_rate(&[(16, 0.1), (32, 0.0)], 1.0).is_err());
        assert!(fit_rate(&[(16, 0.1), (16, 0.2)], 1.0).is_err());
    }

    proptest! {
        #[test]
        fn recovers_exact_power_laws(rate in 0.1f64..3.0, c in 0.01f64..10.0, horizon in 0.5f64..2.0) {
            let pts: Vec<(usize, f64)> = [8usize, 16, 32, 64]
                .iter()
                .map(|&n| (n, c * (horizon / n as f64).powf(rate)))
                .collect();
            prop_assert!((fit_rate(&pts, horizon).unwrap() - rate).abs() < 1e-10);
        }
    }
}
