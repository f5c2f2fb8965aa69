use nalgebra::DMatrix;

use super::panel::CompanyPanel;
use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::scalar::Scalar;

/// Observed required returns and dividend growth rates, raw and in logs.
///
/// Row `t - 1` of the `T x m` matrices holds the transition from date
/// `t - 1` to date `t`. `log_dividends` keeps all `T + 1` dates.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePanel<T: Scalar> {
    pub log_required: DMatrix<T>,
    pub log_growth: DMatrix<T>,
    pub log_dividends: DMatrix<T>,
    pub raw_required: DMatrix<T>,
    pub raw_growth: DMatrix<T>,
}

impl<T: Scalar> RatePanel<T> {
    /// Number of transitions `T`.
    pub fn n_transitions(&self) -> usize {
        self.log_required.nrows()
    }
}

/// `k_t = (P_t + d_t) / P_{t-1} - 1`, `g_t = d_t / d_{t-1} - 1` and their
/// `ln(1 + .)` transforms.
pub fn compute_rates<T: Scalar>(panel: &CompanyPanel<T>) -> Result<RatePanel<T>> {
    let rows = panel.n_rows();
    let m = panel.n_companies();
    if rows < 2 {
        return Err(Error::InsufficientData { rows, needed: 2 });
    }
    let p = panel.prices();
    let d = panel.dividends();
    let t_len = rows - 1;

    let mut log_required = DMatrix::zeros(t_len, m);
    let mut log_growth = DMatrix::zeros(t_len, m);
    let mut raw_required = DMatrix::zeros(t_len, m);
    let mut raw_growth = DMatrix::zeros(t_len, m);
    let log_dividends = d.map(|x| x.ln());

    for t in 1..rows {
        for i in 0..m {
            let gross_k = (p[(t, i)] + d[(t, i)]) / p[(t - 1, i)];
            let gross_g = d[(t, i)] / d[(t - 1, i)];
            for gross in [gross_k, gross_g] {
                if !(gross > T::zero()) {
                    return Err(Error::NonPositiveGross {
                        company: panel.company_ids()[i].clone(),
                        row: t,
                        value: gross.to_f64_lossy(),
                    });
                }
            }
            raw_required[(t - 1, i)] = gross_k - T::one();
            raw_growth[(t - 1, i)] = gross_g - T::one();
            log_required[(t - 1, i)] = gross_k.ln();
            // Difference of logs keeps the cumulative-sum identity exact.
            log_growth[(t - 1, i)] = log_dividends[(t, i)] - log_dividends[(t - 1, i)];
        }
    }

    Ok(RatePanel {
        log_required,
        log_growth,
        log_dividends,
        raw_required,
        raw_growth,
    })
}

/// VAR observations `y_1..y_T` with columns `[k̃ | g̃ | macro]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarInput<T: Scalar> {
    /// `T x n` observation matrix; row `t - 1` is `y_t`.
    pub observations: DMatrix<T>,
    pub layout: Layout,
    pub company_ids: Vec<String>,
    pub macro_ids: Vec<String>,
}

impl<T: Scalar> VarInput<T> {
    pub fn n_obs(&self) -> usize {
        self.observations.nrows()
    }
}

/// Stack rates and macro covariates into the VAR observation matrix.
/// Macro values at dates `1..=T` line up with the rates of the same date.
pub fn assemble_var_input<T: Scalar>(
    rates: &RatePanel<T>,
    panel: &CompanyPanel<T>,
) -> Result<VarInput<T>> {
    let m = panel.n_companies();
    let ell = panel.n_macro();
    let t_len = rates.n_transitions();
    if panel.n_rows() != t_len + 1 {
        return Err(Error::LengthMismatch(format!(
            "panel has {} rows but rates have {} transitions",
            panel.n_rows(),
            t_len
        )));
    }
    if rates.log_required.ncols() != m || rates.log_growth.shape() != (t_len, m) {
        return Err(Error::LengthMismatch(format!(
            "rate blocks {:?}/{:?} do not match {m} companies",
            rates.log_required.shape(),
            rates.log_growth.shape()
        )));
    }
    let layout = Layout::new(m, ell);
    let mut obs = DMatrix::zeros(t_len, layout.n());
    obs.view_mut((0, 0), (t_len, m)).copy_from(&rates.log_required);
    obs.view_mut((0, m), (t_len, m)).copy_from(&rates.log_growth);
    if ell > 0 {
        obs.view_mut((0, 2 * m), (t_len, ell))
            .copy_from(&panel.macro_data().rows(1, t_len));
    }
    Ok(VarInput {
        observations: obs,
        layout,
        company_ids: panel.company_ids().to_vec(),
        macro_ids: panel.macro_ids().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{read_panel, PanelSchema};
    use approx::assert_relative_eq;

    fn one_company(prices: &[f64], divs: &[f64]) -> CompanyPanel<f64> {
        let mut csv = String::from("date,company,price,dividend\n");
        for (k, (p, d)) in prices.iter().zip(divs).enumerate() {
            csv.push_str(&format!("{}-01-01,X,{p},{d}\n", 2000 + k));
        }
        read_panel(csv.as_bytes(), None, &PanelSchema::default()).unwrap()
    }

    #[test]
    fn required_return_up_move() {
        let r = compute_rates(&one_company(&[100.0, 102.0], &[1.0, 2.0])).unwrap();
        assert_relative_eq!(r.raw_required[(0, 0)], 0.04, epsilon = 1e-15);
        assert_relative_eq!(r.log_required[(0, 0)], 1.04f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn flat_dividend_zero_growth() {
        let r = compute_rates(&one_company(&[100.0, 102.0], &[2.0, 2.0])).unwrap();
        assert_eq!(r.raw_growth[(0, 0)], 0.0);
        assert_eq!(r.log_growth[(0, 0)], 0.0);
    }

    #[test]
    fn required_return_down_move() {
        // (95 + 1) / 100 - 1 = -0.04
        let r = compute_rates(&one_company(&[100.0, 95.0], &[1.0, 1.0])).unwrap();
        assert_relative_eq!(r.raw_required[(0, 0)], -0.04, epsilon = 1e-15);
        assert_relative_eq!(r.log_required[(0, 0)], 0.96f64.ln(), epsilon = 1e-15);
        assert!(r.log_required[(0, 0)] < 0.0);
    }

    #[test]
    fn layout_single_company() {
        let panel = one_company(&[100.0, 102.0, 105.0], &[1.0, 2.0, 2.0]);
        let rates = compute_rates(&panel).unwrap();
        let input = assemble_var_input(&rates, &panel).unwrap();
        assert_eq!(input.observations.shape(), (2, 2));
        assert_eq!(input.observations[(1, 0)], rates.log_required[(1, 0)]);
        assert_eq!(input.observations[(1, 1)], rates.log_growth[(1, 0)]);
    }

    #[test]
    fn layout_two_companies_one_macro() {
        let panel_csv = "date,company,price,dividend\n\
            2000-01-01,A,100,1\n2000-01-01,B,50,2\n\
            2001-01-01,A,103,1.1\n2001-01-01,B,52,2.1\n\
            2002-01-01,A,101,1.2\n2002-01-01,B,55,2.0\n";
        let macro_csv = "date,gdp\n2000-01-01,0.1\n2001-01-01,0.2\n2002-01-01,0.3\n";
        let panel: CompanyPanel<f64> = read_panel(
            panel_csv.as_bytes(),
            Some(macro_csv.as_bytes()),
            &PanelSchema::default(),
        )
        .unwrap();
        let rates = compute_rates(&panel).unwrap();
        let input = assemble_var_input(&rates, &panel).unwrap();
        assert_eq!(input.layout.n(), 5);
        assert_eq!(input.observations.column(4).as_slice(), &[0.2, 0.3]);
        assert_eq!(input.observations[(0, 3)], rates.log_growth[(0, 1)]);

        let swapped = panel.reorder_companies(&["B", "A"]).unwrap();
        let input2 = assemble_var_input(&compute_rates(&swapped).unwrap(), &swapped).unwrap();
        assert_eq!(input2.company_ids, vec!["B".to_string(), "A".to_string()]);
        assert_eq!(input2.observations.column(0), input.observations.column(1));
        assert_eq!(input2.observations.column(2), input.observations.column(3));
        assert_eq!(input2.observations.column(4), input.observations.column(4));
    }

    #[test]
    fn mismatched_lengths() {
        let panel = one_company(&[100.0, 102.0, 105.0], &[1.0, 2.0, 2.0]);
        let short = one_company(&[100.0, 102.0], &[1.0, 2.0]);
        let rates = compute_rates(&short).unwrap();
        assert!(matches!(
            assemble_var_input(&rates, &panel),
            Err(Error::LengthMismatch(_))
        ));
    }
}
