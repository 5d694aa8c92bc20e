use crate::error::{Error, Result};

/// `|value - reference| / |reference|`.
pub fn relative_error(value: f64, reference: f64) -> Result<f64> {
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((value - reference).abs() / reference.abs())
}

/// `log₂(err_coarse / err_fine)` for step counts `fine = 2·coarse`.
pub fn error_order(coarse: (usize, f64), fine: (usize, f64)) -> Result<f64> {
    let ((n_c, e_c), (n_f, e_f)) = (coarse, fine);
    if n_f != 2 * n_c {
        return Err(Error::NotDoubling {
            coarse: n_c,
            fine: n_f,
        });
    }
    if !(e_c > 0.0 && e_f > 0.0) {
        return Err(Error::NonPositiveError {
            coarse: e_c,
            fine: e_f,
        });
    }
    Ok((e_c / e_f).log2())
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (divisor `n - 1`); 0 for a single value.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}
