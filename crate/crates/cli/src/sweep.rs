//! SNR sweeps: every requested (snr, user, method) cell evaluated into CSV
//! rows with a deterministic sort order, so identical configs produce
//! byte-identical files regardless of worker count.

use rayon::prelude::*;
use statbeam_core::channel::{Beamformer, BeamformerSet};
use statbeam_core::design::{
    design_common_basis, design_high_snr_m2, design_low_snr, fixed_point_design_restarts,
    DEFAULT_FIXED_POINT_RESTARTS,
};
use statbeam_core::montecarlo::mc_ergodic_rate;
use statbeam_core::rates::{asymptotic_sinr, ergodic_rate_general, high_snr_rate_m2};
use statbeam_core::{channel, CovarianceMatrix};

use crate::config::{MethodTag, ScenarioConfig};

/// Sweeps stop the fixed-point solver at the acceptance tolerance rather
/// than machine precision; 500 sweeps bounds the worst case.
pub const FIXED_POINT_TOL: f64 = 1e-6;
pub const FIXED_POINT_MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub user: usize,
    pub method: MethodTag,
    pub rate_nats: f64,
    pub stderr: Option<f64>,
    pub sum_rate_nats: f64,
}

/// A (snr, method) cell that produced no rows, or a note about one that did.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepWarning {
    pub snr_db: f64,
    pub method: MethodTag,
    pub detail: String,
    /// True when the cell's rows are missing from the output.
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<SweepWarning>,
}

impl SweepOutput {
    /// Every requested row was produced.
    pub fn is_complete(&self) -> bool {
        self.warnings.iter().all(|w| !w.skipped)
    }
}

fn canonical_beams(m: usize) -> BeamformerSet {
    let vectors = (0..m)
        .map(|k| {
            let mut v = nalgebra::DVector::zeros(m);
            v[k] = num_complex::Complex64::new(1.0, 0.0);
            Beamformer::new(v).expect("basis vectors are unit norm")
        })
        .collect();
    BeamformerSet::new(vectors).expect("one beam per antenna")
}

enum CellOutcome {
    Rates { per_user: Vec<f64>, stderr: Option<Vec<f64>> },
    Skip(String),
}

fn evaluate_cell(
    config: &ScenarioConfig,
    sigmas: &[CovarianceMatrix],
    beams: &BeamformerSet,
    method: MethodTag,
    rho: f64,
) -> CellOutcome {
    let m = config.users;
    let rate_set = |ws: &BeamformerSet| -> Result<Vec<f64>, statbeam_core::Error> {
        (0..m).map(|i| ergodic_rate_general(&sigmas[i], ws, i, rho)).collect()
    };
    let result = match method {
        MethodTag::ClosedForm => rate_set(beams).map(|r| (r, None)),
        MethodTag::MonteCarlo => (0..m)
            .map(|i| mc_ergodic_rate(sigmas, beams, i, rho, config.mc_samples, config.seed))
            .collect::<Result<Vec<_>, _>>()
            .map(|estimates| {
                let rates = estimates.iter().map(|e| e.mean).collect();
                let errs = estimates.iter().map(|e| e.stderr).collect();
                (rates, Some(errs))
            }),
        MethodTag::LowSnr => (0..m)
            .map(|i| asymptotic_sinr(sigmas, beams, i, rho).map(|s| s.signal))
            .collect::<Result<Vec<_>, _>>()
            .map(|r| (r, None)),
        MethodTag::HighSnr => {
            if m != 2 {
                return CellOutcome::Skip(format!("two-user asymptote, scenario has {m} users"));
            }
            (0..2)
                .map(|i| {
                    channel::link_statistics(&sigmas[i], beams.get(i), beams.get(1 - i))
                        .and_then(|stats| high_snr_rate_m2(&stats))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(|r| (r, None))
        }
        MethodTag::LargeM => (0..m)
            .map(|i| asymptotic_sinr(sigmas, beams, i, rho).map(|s| s.rate))
            .collect::<Result<Vec<_>, _>>()
            .map(|r| (r, None)),
        MethodTag::DesignLowSnr => {
            design_low_snr(sigmas).and_then(|d| rate_set(&d.ws)).map(|r| (r, None))
        }
        MethodTag::DesignHighSnr => {
            if m != 2 {
                return CellOutcome::Skip(format!("two-user design, scenario has {m} users"));
            }
            design_high_snr_m2(&sigmas[0], &sigmas[1])
                .and_then(|d| rate_set(&d.ws))
                .map(|r| (r, None))
        }
        MethodTag::DesignCommonBasis => {
            if m != 2 {
                return CellOutcome::Skip(format!("two-user design, scenario has {m} users"));
            }
            design_common_basis(&sigmas[0], &sigmas[1])
                .and_then(|d| rate_set(&d.ws))
                .map(|r| (r, None))
        }
        MethodTag::DesignFixedPoint => fixed_point_design_restarts(
            sigmas,
            rho,
            FIXED_POINT_TOL,
            FIXED_POINT_MAX_ITER,
            DEFAULT_FIXED_POINT_RESTARTS,
            config.seed,
        )
        .and_then(|d| rate_set(&d.ws))
        .map(|r| (r, None)),
    };
    match result {
        Ok((per_user, stderr)) => CellOutcome::Rates { per_user, stderr },
        Err(e) => CellOutcome::Skip(e.to_string()),
    }
}

pub fn run_sweep(config: &ScenarioConfig) -> anyhow::Result<SweepOutput> {
    config.validate()?;
    let sigmas = config.build_covariances()?;
    let beams = canonical_beams(config.users);

    let cells: Vec<(f64, MethodTag)> = config
        .snr_grid_db
        .iter()
        .flat_map(|&snr| config.methods.iter().map(move |&m| (snr, m)))
        .collect();

    let outcomes: Vec<(f64, MethodTag, CellOutcome)> = cells
        .par_iter()
        .map(|&(snr_db, method)| {
            let rho = 10f64.powf(snr_db / 10.0);
            (snr_db, method, evaluate_cell(config, &sigmas, &beams, method, rho))
        })
        .collect();

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (snr_db, method, outcome) in outcomes {
        match outcome {
            CellOutcome::Rates { per_user, stderr } => {
                let sum: f64 = per_user.iter().sum();
                for (user, &rate) in per_user.iter().enumerate() {
                    rows.push(SweepRow {
                        snr_db,
                        user,
                        method,
                        rate_nats: rate,
                        stderr: stderr.as_ref().map(|e| e[user]),
                        sum_rate_nats: sum,
                    });
                }
            }
            CellOutcome::Skip(detail) => {
                warnings.push(SweepWarning { snr_db, method, detail, skipped: true });
            }
        }
    }
    rows.sort_by(|a, b| {
        a.snr_db
            .total_cmp(&b.snr_db)
            .then(a.user.cmp(&b.user))
            .then(a.method.cmp(&b.method))
    });
    warnings.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db).then(a.method.cmp(&b.method)));
    Ok(SweepOutput { rows, warnings })
}

/// 12 significant digits, enough to round-trip comparisons between runs.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn render_csv(output: &SweepOutput) -> String {
    let mut text = String::new();
    text.push_str("# ergodic two-term rates in nats per channel use\n");
    text.push_str("# rho = 10^(snr_db/10) is the total transmit power, split evenly over the beams\n");
    text.push_str("# closed-form, monte-carlo, low-snr, high-snr and large-M rows evaluate the canonical basis beams e_1..e_M\n");
    text.push_str("# design-* rows evaluate that design's beams through the closed-form ergodic rate\n");
    text.push_str("# users are 0-indexed; stderr is empty for methods without sampling error\n");
    text.push_str("snr_db,user,method,rate_nats,stderr,sum_rate_nats\n");
    for row in &output.rows {
        let stderr = row.stderr.map(fmt_float).unwrap_or_default();
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_float(row.snr_db),
            row.user,
            row.method,
            fmt_float(row.rate_nats),
            stderr,
            fmt_float(row.sum_rate_nats),
        ));
    }
    for w in &output.warnings {
        let kind = if w.skipped { "skipped" } else { "note" };
        text.push_str(&format!(
            "# warning: snr_db={} method={} {kind}: {}\n",
            fmt_float(w.snr_db),
            w.method,
            w.detail
        ));
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CovarianceSpec;
    use statbeam_core::rates::ergodic_rate_m2;

    fn config_with(
        users: usize,
        covariances: Vec<CovarianceSpec>,
        methods: Vec<MethodTag>,
    ) -> ScenarioConfig {
        ScenarioConfig {
            users,
            covariances,
            snr_grid_db: vec![0.0],
            mc_samples: 20_000,
            seed: 7,
            methods,
        }
    }

    fn identity_spec(dim: usize) -> CovarianceSpec {
        let eye = nalgebra::DMatrix::identity(dim, dim);
        CovarianceSpec::Inline(CovarianceMatrix::new(eye).unwrap())
    }

    #[test]
    fn identical_users_get_identical_closed_form_rows() {
        let config = config_with(
            2,
            vec![identity_spec(2), identity_spec(2)],
            vec![MethodTag::ClosedForm],
        );
        let out = run_sweep(&config).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert!(out.is_complete());
        assert_eq!(out.rows[0].rate_nats, out.rows[1].rate_nats);
        assert_eq!(out.rows[0].sum_rate_nats, 2.0 * out.rows[0].rate_nats);
    }

    #[test]
    fn monte_carlo_rows_agree_with_closed_form() {
        let config = ScenarioConfig {
            snr_grid_db: vec![0.0, 10.0],
            ..config_with(
                2,
                vec![
                    CovarianceSpec::RandomSpectrum { eigenvalues: vec![2.0, 0.7], seed: 3 },
                    CovarianceSpec::ExponentialCorrelation { r: 0.6, scale: 1.1 },
                ],
                vec![MethodTag::ClosedForm, MethodTag::MonteCarlo],
            )
        };
        let out = run_sweep(&config).unwrap();
        assert_eq!(out.rows.len(), 8);
        // sorted as (snr, user, method): each chunk of two is (closed, mc)
        for pair in out.rows.chunks(2) {
            assert_eq!(pair[0].method, MethodTag::ClosedForm);
            assert_eq!(pair[1].method, MethodTag::MonteCarlo);
            let err = pair[1].stderr.unwrap();
            assert!(
                (pair[0].rate_nats - pair[1].rate_nats).abs() <= 3.0 * err,
                "closed {} mc {} stderr {}",
                pair[0].rate_nats,
                pair[1].rate_nats,
                err
            );
        }
    }

    #[test]
    fn two_user_methods_skip_when_users_is_three() {
        let config = config_with(
            3,
            vec![identity_spec(3), identity_spec(3), identity_spec(3)],
            vec![MethodTag::ClosedForm, MethodTag::HighSnr, MethodTag::DesignHighSnr],
        );
        let out = run_sweep(&config).unwrap();
        assert_eq!(out.rows.len(), 3);
        assert_eq!(out.warnings.len(), 2);
        assert!(!out.is_complete());
        let csv = render_csv(&out);
        assert!(csv.contains("# warning: snr_db=0.00000000000e0 method=high-snr skipped"), "{csv}");
    }

    #[test]
    fn high_snr_design_dominates_low_snr_design_at_sixty_db() {
        let config = ScenarioConfig {
            snr_grid_db: vec![60.0],
            ..config_with(
                2,
                vec![
                    CovarianceSpec::RandomSpectrum { eigenvalues: vec![1.9, 0.9], seed: 103 },
                    CovarianceSpec::RandomSpectrum { eigenvalues: vec![2.4, 1.2], seed: 104 },
                ],
                vec![MethodTag::DesignLowSnr, MethodTag::DesignHighSnr],
            )
        };
        let out = run_sweep(&config).unwrap();
        let sum_of = |tag: MethodTag| {
            out.rows.iter().find(|r| r.method == tag).map(|r| r.sum_rate_nats).unwrap()
        };
        assert!(sum_of(MethodTag::DesignHighSnr) >= sum_of(MethodTag::DesignLowSnr) - 1e-9);
    }

    #[test]
    fn common_basis_design_rows_match_closed_form_on_commuting_pair() {
        let config = config_with(
            2,
            vec![
                CovarianceSpec::ExponentialCorrelation { r: 0.5, scale: 1.0 },
                CovarianceSpec::ExponentialCorrelation { r: 0.8, scale: 1.3 },
            ],
            vec![MethodTag::DesignCommonBasis],
        );
        let out = run_sweep(&config).unwrap();
        assert!(out.is_complete());
        // beams are the shared eigenvectors; recompute the rate directly
        let sigmas = config.build_covariances().unwrap();
        let design = design_common_basis(&sigmas[0], &sigmas[1]).unwrap();
        let expect = ergodic_rate_m2(&sigmas[0], design.ws.get(0), design.ws.get(1), 1.0).unwrap();
        assert!((out.rows[0].rate_nats - expect).abs() <= 1e-9);
    }

    #[test]
    fn non_commuting_pair_skips_common_basis_with_reason() {
        let config = config_with(
            2,
            vec![
                CovarianceSpec::RandomSpectrum { eigenvalues: vec![2.0, 0.7], seed: 1 },
                CovarianceSpec::RandomSpectrum { eigenvalues: vec![3.0, 1.1], seed: 2 },
            ],
            vec![MethodTag::DesignCommonBasis],
        );
        let out = run_sweep(&config).unwrap();
        assert!(out.rows.is_empty());
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].detail.contains("eigenbasis"), "{}", out.warnings[0].detail);
    }

    #[test]
    fn rows_sort_by_snr_then_user_then_method() {
        let config = ScenarioConfig {
            snr_grid_db: vec![10.0, -5.0],
            ..config_with(
                2,
                vec![identity_spec(2), identity_spec(2)],
                vec![MethodTag::LargeM, MethodTag::ClosedForm],
            )
        };
        let out = run_sweep(&config).unwrap();
        let key: Vec<(f64, usize, MethodTag)> =
            out.rows.iter().map(|r| (r.snr_db, r.user, r.method)).collect();
        let mut sorted = key.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        assert_eq!(key, sorted);
        assert_eq!(out.rows[0].snr_db, -5.0);
    }

    #[test]
    fn rendered_csv_is_stable_across_runs() {
        let config = ScenarioConfig {
            snr_grid_db: vec![0.0, 20.0],
            ..config_with(
                2,
                vec![
                    CovarianceSpec::RandomSpectrum { eigenvalues: vec![2.5, 1.2], seed: 109 },
                    CovarianceSpec::RandomSpectrum { eigenvalues: vec![1.7, 0.9], seed: 110 },
                ],
                vec![
                    MethodTag::ClosedForm,
                    MethodTag::MonteCarlo,
                    MethodTag::LowSnr,
                    MethodTag::HighSnr,
                    MethodTag::LargeM,
                    MethodTag::DesignLowSnr,
                    MethodTag::DesignHighSnr,
                    MethodTag::DesignFixedPoint,
                ],
            )
        };
        let first = render_csv(&run_sweep(&config).unwrap());
        let second = render_csv(&run_sweep(&config).unwrap());
        assert_eq!(first, second);
        assert_eq!(first.matches('\n').count(), 6 + 2 * 2 * 8);
    }

    #[test]
    fn float_format_has_twelve_significant_digits()
    {
        assert_eq!(fmt_float(0.0), "0.00000000000e0");
        assert_eq!(fmt_float(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt_float(-12345.6789), "-1.23456789000e4");
    }
}
