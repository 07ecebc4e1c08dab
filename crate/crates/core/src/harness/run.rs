//! Suite execution. Suites run concurrently; each captures its own errors.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::curvature::{evaluate, harmonic_frame, wp_suite, CurvatureReport, Evaluator};
use crate::dolbeault::bkn_defect;
use crate::error::{Error, Result};
use crate::family::identities::identity_suite;
use crate::family::{FamilyDescriptor, FamilyPoint};
use crate::forms::PQForm;
use crate::linalg::{max_abs, CMat};
use crate::oracle::curvature_by_differences;

use super::config::{ExperimentConfig, ResolvedTolerances, Suite};
use super::report::{Check, RunReport, SuiteResult};

/// Entrywise disagreement relative to the larger tensor, floored at rounding level of the Gram
/// so that two vanishing tensors agree.
pub fn relative_gap(a: &CMat, b: &CMat, gram: &CMat) -> f64 {
    scaled_gap(a, b, f64::EPSILON * max_abs(gram))
}

/// Disagreement with the oracle in units of max(|R|, |H|): difference quotients resolve R only
/// to a fraction of H, so a vanishing curvature is compared on the scale of the metric.
pub fn oracle_gap(a: &CMat, b: &CMat, gram: &CMat) -> f64 {
    scaled_gap(a, b, max_abs(gram))
}

fn scaled_gap(a: &CMat, b: &CMat, floor: f64) -> f64 {
    let scale = max_abs(a).max(max_abs(b)).max(floor);
    if scale == 0.0 {
        0.0
    } else {
        max_abs(&(a - b)) / scale
    }
}

fn label(evaluator: Evaluator, p: usize, q: usize) -> String {
    format!("{evaluator} ({p},{q})")
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    family: FamilyDescriptor,
    point: FamilyPoint,
    tolerances: ResolvedTolerances,
}

/// Runs the configured suites. Configuration problems are errors; everything else is recorded
/// in the report.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let family = config.family()?;
    let mut suites = config.suites.clone();
    suites.sort();
    suites.dedup();

    let setup = family.at(config.base_point());
    let results: Vec<(SuiteResult, f64)> = match setup {
        Ok(point) => {
            let tolerances = config.tolerances.resolve(family.backend(), config.tolerance_scale);
            let ctx = Context { config, family: family.clone(), point, tolerances };
            suites
                .par_iter()
                .map(|&suite| {
                    let start = Instant::now();
                    let result = ctx.run_suite(suite);
                    (result, start.elapsed().as_secs_f64())
                })
                .collect()
        }
        Err(e) => suites.iter().map(|&s| (SuiteResult::new(s).finish(Err(Error::Precondition(format!("fiber setup: {e}")))), 0.0)).collect(),
    };

    let timing = config.timing.then(|| results.iter().map(|(r, t)| (r.suite.name().to_string(), *t)).collect::<BTreeMap<_, _>>());
    let suites: Vec<SuiteResult> = results.into_iter().map(|(r, _)| r).collect();
    Ok(RunReport {
        name: config.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        tolerance_scale: config.tolerance_scale,
        passed: suites.iter().all(|s| s.passed),
        suites,
        timing,
        config: config.clone(),
    })
}

impl Context<'_> {
    fn run_suite(&self, suite: Suite) -> SuiteResult {
        let mut result = SuiteResult::new(suite);
        let outcome = match suite {
            Suite::Identities => self.identities(&mut result),
            Suite::Curvature => self.curvature(&mut result),
            Suite::Oracle => self.oracle(&mut result),
            Suite::Wp => self.wp(&mut result),
        };
        result.finish(outcome)
    }

    fn identities(&self, out: &mut SuiteResult) -> Result<()> {
        let seeds: Vec<u64> = (0..self.config.identities.seeds).map(|k| self.config.seed.wrapping_add(k)).collect();
        let reports = seeds.par_iter().map(|&seed| identity_suite(&self.family, self.config.base_point(), seed)).collect::<Result<Vec<_>>>()?;
        let multi = reports.len() > 1;
        for report in &reports {
            for check in &report.checks {
                let name = if multi { format!("{} [seed {}]", check.name, report.seed) } else { check.name.clone() };
                let tolerance = check.tolerance * self.tolerances.scale;
                out.checks.push(match (check.defect, &check.skip_reason) {
                    (Some(defect), _) => Check::bound(name, defect, tolerance),
                    (None, reason) => Check {
                        name,
                        value: None,
                        tolerance,
                        passed: reason.is_some(),
                        note: Some(format!("skipped: {}", reason.as_deref().unwrap_or("no reason recorded"))),
                    },
                });
            }
        }
        out.identities = reports;
        self.bkn_checks(&mut out.checks, &seeds)
    }

    /// The Bochner-Kodaira-Nakano defect of random forms in each configured bidegree.
    fn bkn_checks(&self, out: &mut Vec<Check>, seeds: &[u64]) -> Result<()> {
        let multi = seeds.len() > 1;
        for &[p, q] in &self.config.bidegrees {
            for &seed in seeds {
                let name = if multi { format!("bkn ({p},{q}) [seed {seed}]") } else { format!("bkn ({p},{q})") };
                let defect = PQForm::random(self.point.space(), p, q, seed).and_then(|psi| bkn_defect(&psi));
                out.push(match defect {
                    Ok(d) => Check::bound(name, d, self.tolerances.bkn),
                    Err(e) => Check::failed(name, &e),
                });
            }
        }
        Ok(())
    }

    /// Reports of every applicable evaluator at (p, q) on `point`, in evaluator order.
    fn evaluate_all(&self, point: &FamilyPoint, p: usize, q: usize) -> Result<Vec<CurvatureReport>> {
        let frame = harmonic_frame(point, p, q)?;
        let data = point.horizontal_data()?;
        Evaluator::ALL
            .iter()
            .filter(|ev| ev.applicability(point, p, q).is_ok())
            .map(|&ev| crate::curvature::evaluate_with(ev, point, &data, &frame))
            .collect()
    }

    fn expectation_checks(&self, out: &mut Vec<Check>, source: &str, p: usize, q: usize, normalized: Option<f64>) {
        for e in self.config.expect.iter().filter(|e| e.bidegree == [p, q]) {
            let name = format!("{source} expected R/|psi|^2 = {}", e.normalized);
            out.push(match normalized {
                Some(v) => Check::bound(name, (v - e.normalized).abs(), e.tolerance * self.tolerances.scale),
                None => Check::verdict(name, false, "frame has rank above one"),
            });
        }
    }

    fn curvature(&self, out: &mut SuiteResult) -> Result<()> {
        let t = self.tolerances;
        for &[p, q] in &self.config.bidegrees {
            let reports = match self.evaluate_all(&self.point, p, q) {
                Ok(r) => r,
                Err(e) => {
                    out.checks.push(Check::failed(format!("evaluate ({p},{q})"), &e));
                    continue;
                }
            };
            for r in &reports {
                let name = label(r.evaluator, p, q);
                out.checks.push(Check::bound(format!("{name} hermitian"), r.hermitian_defect(), t.hermitian));
                out.checks.push(Check::bound(format!("{name} bookkeeping"), r.bookkeeping_defect(), t.bookkeeping));
                self.expectation_checks(&mut out.checks, &name, p, q, r.normalized);
            }
            if let Some((first, rest)) = reports.split_first() {
                let gram = first.gram.to_matrix();
                for other in rest {
                    let gap = relative_gap(&first.value_matrix(), &other.value_matrix(), &gram);
                    out.checks.push(Check::bound(format!("{} ~ {} ({p},{q})", first.evaluator, other.evaluator), gap, t.agreement));
                }
            }
            self.gauge_checks(&mut out.checks, p, q, &reports);
            out.curvature.extend(reports);
        }
        Ok(())
    }

    fn gauge_checks(&self, out: &mut Vec<Check>, p: usize, q: usize, reference: &[CurvatureReport]) {
        let base = self.family.kaehler_shift();
        for &beta in &self.config.curvature.gauge {
            let shifted = self.family.with_kaehler_shift(base + beta).and_then(|f| f.at(self.config.base_point()));
            let point = match shifted {
                Ok(point) => point,
                Err(e) => {
                    out.push(Check::failed(format!("gauge beta={beta}"), &e));
                    continue;
                }
            };
            let channel = (|| -> Result<f64> {
                let before = self.point.horizontal_data()?.geodesic_curvature;
                let after = point.horizontal_data()?.geodesic_curvature;
                Ok((after - before - beta).abs())
            })();
            match channel {
                Ok(v) => out.push(Check::bound(format!("gauge beta={beta} c(omega) shift ({p},{q})"), v, 1e-12 * beta.abs().max(1.0) * self.tolerances.scale)),
                Err(e) => out.push(Check::failed(format!("gauge beta={beta} c(omega) shift ({p},{q})"), &e)),
            }
            for r in reference {
                let name = format!("gauge beta={beta} {}", label(r.evaluator, p, q));
                if let Err(reason) = r.evaluator.applicability(&point, p, q) {
                    out.push(Check::verdict(name, true, format!("skipped: {reason}")));
                    continue;
                }
                match evaluate(r.evaluator, &point, p, q) {
                    Ok(g) => out.push(Check::bound(name, max_abs(&(g.value_matrix() - r.value_matrix())), self.tolerances.gauge)),
                    Err(e) => out.push(Check::failed(name, &e)),
                }
            }
        }
    }

    fn oracle(&self, out: &mut SuiteResult) -> Result<()> {
        let t = self.tolerances;
        for &[p, q] in &self.config.bidegrees {
            let estimate = match curvature_by_differences(&self.family, self.config.base_point(), self.config.oracle.step, p, q) {
                Ok(e) => e,
                Err(e) => {
                    out.checks.push(Check::failed(format!("oracle ({p},{q})"), &e));
                    continue;
                }
            };
            let fd = estimate.value_matrix();
            let gram = estimate.gram.to_matrix();
            let scale = max_abs(&fd).max(max_abs(&gram));
            let error = if scale == 0.0 { 0.0 } else { estimate.error / scale };
            out.checks.push(Check::bound(format!("oracle ({p},{q}) richardson error"), error, t.oracle));
            self.expectation_checks(&mut out.checks, "oracle", p, q, estimate.normalized);
            match self.evaluate_all(&self.point, p, q) {
                Ok(reports) => {
                    for r in &reports {
                        let gap = oracle_gap(&r.value_matrix(), &fd, &gram);
                        out.checks.push(Check::bound(format!("oracle ~ {}", label(r.evaluator, p, q)), gap, t.oracle));
                    }
                }
                Err(e) => out.checks.push(Check::failed(format!("evaluate ({p},{q})"), &e)),
            }
            out.oracle.push(estimate);
        }
        Ok(())
    }

    fn wp(&self, out: &mut SuiteResult) -> Result<()> {
        let t = self.tolerances;
        let report = wp_suite(&self.family, self.config.base_point())?;
        let scale = report.direct_norm.abs().max(1.0);
        out.checks.push(Check::bound("wp norm ~ direct pairing", (report.wp_norm - report.direct_norm).abs() / scale, t.wp_norm));
        out.checks.push(Check::bound("reversed ordering = -wp norm", (report.reversed_ordering + report.wp_norm).abs() / scale, t.wp_norm));
        for power in &report.flat_powers {
            out.checks.push(Check::bound(format!("flat power q={} curvature", power.q), power.value.abs(), t.wp));
            out.checks.push(Check::bound(format!("flat power q={} harmonicity", power.q), power.harmonicity_defect, t.wp));
        }
        out.checks.push(Check::bound("harmonic projection drop", report.harmonic_drop.abs(), t.wp));
        let verdict = if report.semi_positive { "semi-positive" } else { "not semi-positive" };
        out.checks.push(Check::verdict("flat power semi-positivity", report.semi_positive, verdict));
        out.wp = Some(report);
        Ok(())
    }
}
