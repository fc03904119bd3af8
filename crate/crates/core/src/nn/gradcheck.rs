use super::{Gradients, NnError, ParamSet};

/// Denominator floor for the relative error, so that entries whose true
/// gradient is ~0 are judged on absolute error instead.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub entries_checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares analytic gradients against central finite differences on every
/// entry of every parameter.
///
/// `loss` evaluates the scalar loss at the current parameters and, when given
/// a gradient store, also writes its analytic gradients into it.
pub fn grad_check<F>(
    params: &mut ParamSet<f64>,
    eps: f64,
    mut loss: F,
) -> Result<GradCheckReport, NnError>
where
    F: FnMut(&ParamSet<f64>, Option<&mut Gradients<f64>>) -> Result<f64, NnError>,
{
    let mut analytic = Gradients::new();
    loss(params, Some(&mut analytic))?;

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        entries_checked: 0,
    };
    let names: Vec<String> = params.names().map(str::to_string).collect();
    for name in names {
        let len = params.value(&name)?.len();
        for i in 0..len {
            let orig = params.value(&name)?.data()[i];
            params.value_mut(&name)?.data_mut()[i] = orig + eps;
            let up = loss(params, None)?;
            params.value_mut(&name)?.data_mut()[i] = orig - eps;
            let down = loss(params, None)?;
            params.value_mut(&name)?.data_mut()[i] = orig;

            let numeric = (up - down) / (2.0 * eps);
            let a = analytic.get(&name).map_or(0.0, |g| g.data()[i]);
            let err = relative_error(a, numeric);
            report.entries_checked += 1;
            if err > report.max_rel_error || report.worst_param.is_empty() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst_param = name.clone();
                report.worst_index = i;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}
