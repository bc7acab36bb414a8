use serde::{Deserialize, Serialize};

use super::ModelSpec;
use crate::ratelang::{RateExpr, Var};

/// Points per axis for the totality and sign checks.
const GRID: usize = 401;
/// Points for profile checks.
const PROFILE_GRID: usize = 1001;
const TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonPositiveHorizon,
    NonPositiveWeight,
    WeightSum,
    RateNotFinite,
    NegativeRate,
    ProfileDependsOnTime,
    ProfileNotFinite,
    ProfileAtZero,
    ProfileAtOne,
    ProfileIncreasing,
    ProfileOutOfRange,
    MassIdentity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Offending type, `None` for model-wide constraints.
    pub type_index: Option<usize>,
    pub y: Option<f64>,
    pub t: Option<f64>,
    /// Size of the violation (how far from admissible).
    pub magnitude: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_accepted(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        self.violations
            .iter()
            .map(|v| {
                let who = v.type_index.map_or("model".to_string(), |a| format!("type {a}"));
                let mut at = String::new();
                if let Some(y) = v.y {
                    at.push_str(&format!(" y={y}"));
                }
                if let Some(t) = v.t {
                    at.push_str(&format!(" t={t}"));
                }
                format!("{who}: {:?}{at} (magnitude {:e})", v.kind, v.magnitude)
            })
            .collect::<Vec<_>>()
            .join("; ")
    }

    fn push(&mut self, kind: ViolationKind, type_index: Option<usize>, y: Option<f64>, t: Option<f64>, magnitude: f64) {
        self.violations.push(Violation {
            kind,
            type_index,
            y,
            t,
            magnitude,
        });
    }
}

fn node(i: usize, n: usize) -> f64 {
    i as f64 / (n - 1) as f64
}

/// Checks every hypothesis the solver and simulator rely on. Each kind of
/// violation is reported once per type, at its worst grid point.
pub fn validate_model(m: &ModelSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let horizon = m.horizon;
    if !(horizon > 0.0 && horizon.is_finite()) {
        report.push(ViolationKind::NonPositiveHorizon, None, None, None, horizon.abs());
    }

    let mut weight_sum = 0.0;
    for (a, ty) in m.types.iter().enumerate() {
        if !(ty.weight > 0.0) {
            report.push(ViolationKind::NonPositiveWeight, Some(a), None, None, ty.weight.abs());
        }
        weight_sum += ty.weight;
        if horizon > 0.0 && horizon.is_finite() {
            check_rate(&mut report, a, &ty.rate, horizon);
        }
        check_profile(&mut report, a, &ty.profile, &ty.profile_dy);
    }
    if (weight_sum - 1.0).abs() > TOL {
        report.push(ViolationKind::WeightSum, None, None, None, (weight_sum - 1.0).abs());
    }

    // sum_a r_a rho_a(y) = 1 - y
    if report
        .violations
        .iter()
        .all(|v| v.kind != ViolationKind::ProfileNotFinite)
    {
        let mut worst: Option<(f64, f64)> = None;
        for i in 0..PROFILE_GRID {
            let y = node(i, PROFILE_GRID);
            let mix: f64 = m.types.iter().map(|ty| ty.weight * ty.profile.value(y, 0.0)).sum();
            let err = (mix - (1.0 - y)).abs();
            if err > TOL && worst.is_none_or(|(_, e)| err > e) {
                worst = Some((y, err));
            }
        }
        if let Some((y, err)) = worst {
            report.push(ViolationKind::MassIdentity, None, Some(y), None, err);
        }
    }
    report
}

fn check_rate(report: &mut ValidationReport, a: usize, rate: &RateExpr, horizon: f64) {
    let mut negative: Option<(f64, f64, f64)> = None;
    for i in 0..GRID {
        let y = node(i, GRID);
        for j in 0..GRID {
            let t = horizon * node(j, GRID);
            match rate.eval(y, t) {
                Err(_) => {
                    report.push(ViolationKind::RateNotFinite, Some(a), Some(y), Some(t), f64::INFINITY);
                    return;
                }
                Ok(v) if v < 0.0 && negative.is_none_or(|(_, _, w)| v < w) => negative = Some((y, t, v)),
                Ok(_) => {}
            }
        }
    }
    if let Some((y, t, v)) = negative {
        report.push(ViolationKind::NegativeRate, Some(a), Some(y), Some(t), -v);
    }
}

fn check_profile(report: &mut ValidationReport, a: usize, profile: &RateExpr, profile_dy: &RateExpr) {
    if profile.depends_on(Var::T) {
        report.push(ViolationKind::ProfileDependsOnTime, Some(a), None, None, f64::NAN);
    }
    for i in 0..PROFILE_GRID {
        let y = node(i, PROFILE_GRID);
        if profile.eval(y, 0.0).is_err() || profile_dy.eval(y, 0.0).is_err() {
            report.push(ViolationKind::ProfileNotFinite, Some(a), Some(y), None, f64::INFINITY);
            return;
        }
    }
    let at0 = profile.value(0.0, 0.0);
    if (at0 - 1.0).abs() > TOL {
        report.push(
            ViolationKind::ProfileAtZero,
            Some(a),
            Some(0.0),
            None,
            (at0 - 1.0).abs(),
        );
    }
    let at1 = profile.value(1.0, 0.0);
    if at1.abs() > TOL {
        report.push(ViolationKind::ProfileAtOne, Some(a), Some(1.0), None, at1.abs());
    }
    let mut increasing: Option<(f64, f64)> = None;
    let mut out_of_range: Option<(f64, f64)> = None;
    for i in 0..PROFILE_GRID {
        let y = node(i, PROFILE_GRID);
        let d = profile_dy.value(y, 0.0);
        if d > TOL && increasing.is_none_or(|(_, w)| d > w) {
            increasing = Some((y, d));
        }
        let v = profile.value(y, 0.0);
        let excess = (-v).max(v - 1.0);
        if excess > TOL && out_of_range.is_none_or(|(_, w)| excess > w) {
            out_of_range = Some((y, excess));
        }
    }
    if let Some((y, d)) = increasing {
        report.push(ViolationKind::ProfileIncreasing, Some(a), Some(y), None, d);
    }
    if let Some((y, e)) = out_of_range {
        report.push(ViolationKind::ProfileOutOfRange, Some(a), Some(y), None, e);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{presets, ModelFile, TypeEntry};

    fn model(types: &[(&str, &str, f64)]) -> ModelSpec {
        let file = ModelFile {
            types: types
                .iter()
                .map(|(r, p, w)| TypeEntry {
                    rate: r.to_string(),
                    profile: p.to_string(),
                    weight: *w,
                })
                .collect(),
            horizon: 1.0,
        };
        ModelSpec::from_file(&file).unwrap()
    }

    fn kinds(r: &ValidationReport) -> Vec<ViolationKind> {
        r.violations.iter().map(|v| v.kind).collect()
    }

    #[test]
    fn identity_profile_is_accepted() {
        assert!(validate_model(&model(&[("1", "1-y", 1.0)])).is_accepted());
    }

    #[test]
    fn two_type_mixture_is_accepted() {
        let m = model(&[("1", "(1-y)*(1-y)", 0.5), ("2", "2*(1-y)-(1-y)*(1-y)", 0.5)]);
        let r = validate_model(&m);
        assert!(r.is_accepted(), "{}", r.summary());
        assert!(validate_model(&ModelSpec::from_file(&presets::two_type_space_time(2.0)).unwrap()).is_accepted());
    }

    #[test]
    fn boundary_violation_is_reported() {
        let r = validate_model(&model(&[("1", "1-0.9*y", 1.0)]));
        assert!(!r.is_accepted());
        let v = r
            .violations
            .iter()
            .find(|v| v.kind == ViolationKind::ProfileAtOne)
            .unwrap();
        assert_eq!(v.type_index, Some(0));
        assert!((v.magnitude - 0.1).abs() < 1e-12);
        // 1 - 0.9y also breaks the mass identity
        assert!(kinds(&r).contains(&ViolationKind::MassIdentity));
    }

    #[test]
    fn negative_rates_and_bad_weights() {
        let r = validate_model(&model(&[("y-0.5", "1-y", 0.7)]));
        let ks = kinds(&r);
        assert!(ks.contains(&ViolationKind::NegativeRate));
        assert!(ks.contains(&ViolationKind::WeightSum));
        let neg = &r.violations[ks.iter().position(|k| *k == ViolationKind::NegativeRate).unwrap()];
        assert_eq!(neg.y, Some(0.0));
        assert!((neg.magnitude - 0.5).abs() < 1e-12);
    }

    #[test]
    fn profile_shape_violations() {
        let r = validate_model(&model(&[("1", "1-y+0.5*sin(6.283185307179586*y)", 1.0)]));
        assert!(kinds(&r).contains(&ViolationKind::ProfileIncreasing));
        let r = validate_model(&model(&[("1", "1-y+0*t", 1.0)]));
        // 0*t is folded in the derivative but the profile still mentions t
        assert!(kinds(&r).contains(&ViolationKind::ProfileDependsOnTime));
        let r = validate_model(&model(&[("1/(y-0.5)", "1-y", 1.0)]));
        assert!(kinds(&r).contains(&ViolationKind::RateNotFinite));
    }
}
