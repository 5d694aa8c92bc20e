use super::{ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};

/// Gradients smaller than this are compared in absolute terms.
pub const DEFAULT_GRAD_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct ParamDeviation {
    pub name: String,
    pub max_rel_deviation: f64,
    pub worst_index: usize,
    pub tape_grad: f64,
    pub numeric_grad: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub per_param: Vec<ParamDeviation>,
    pub loss: f64,
}

impl GradCheckReport {
    pub fn max_rel_deviation(&self) -> f64 {
        self.per_param
            .iter()
            .map(|p| p.max_rel_deviation)
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_deviation() <= tolerance
    }
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_deviation(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares tape gradients of the scalar built by `f` against central
/// differences with step `step` for every entry of every parameter in
/// `store`. Parameter values are restored afterwards and gradients left
/// holding the tape result.
pub fn finite_diff_check<F>(store: &mut ParamStore, step: f64, floor: f64, mut f: F) -> Result<GradCheckReport>
where
    F: FnMut(&mut Tape, &ParamStore) -> Result<Var>,
{
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::Config(format!("finite-difference step must be positive, got {step}")));
    }
    store.zero_grad();
    let loss = {
        let mut tape = Tape::new();
        let out = f(&mut tape, store)?;
        let loss = tape.value(out).item().unwrap_or(f64::NAN);
        tape.backward(out, store)?;
        loss
    };
    let mut eval = |store: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new();
        let out = f(&mut tape, store)?;
        tape.value(out)
            .item()
            .ok_or_else(|| Error::NonScalarLoss {
                shape: tape.shape(out).to_vec(),
            })
    };


    let ids: Vec<ParamId> = store.iter().map(|(id, _)| id).collect();
    let mut per_param = Vec::with_capacity(ids.len());
    for id in ids {
        let n = store.value(id).len();
        let mut worst = ParamDeviation {
            name: store.get(id).name.clone(),
            max_rel_deviation: 0.0,
            worst_index: 0,
            tape_grad: 0.0,
            numeric_grad: 0.0,
        };
        for k in 0..n {
            let original = store.value(id).data()[k];
            store.value_mut(id).data_mut()[k] = original + step;
            let plus = eval(store);
            store.value_mut(id).data_mut()[k] = original - step;
            let minus = eval(store);
            store.value_mut(id).data_mut()[k] = original;
            let numeric = (plus? - minus?) / (2.0 * step);
            let analytic = store.grad(id).data()[k];
            let dev = relative_deviation(analytic, numeric, floor);
            if dev > worst.max_rel_deviation || k == 0 {
                worst.max_rel_deviation = dev.max(worst.max_rel_deviation);
                worst.worst_index = k;
                worst.tape_grad = analytic;
                worst.numeric_grad = numeric;
            }
        }
        per_param.push(worst);
    }
    Ok(GradCheckReport { per_param, loss })
}
