use super::rule::RuleBase;

/// Points of the defuzzification grid over the pitch range.
pub const DEFUZZ_POINTS: usize = 1001;

/// Mamdani inference: each rule clips its consequent triangle at the
/// antecedent degree, clipped sets combine by max, and the crisp pitch is the
/// centroid on a fixed grid. With no rule firing the pitch is the bottom of
/// the pitch range.
pub fn infer_pitch(rb: &RuleBase, v: f64) -> f64 {
    let pitch = rb.pitch_scale();
    let (lo, hi) = (pitch.lo(), pitch.hi());
    let fired: Vec<_> = rb
        .rules()
        .iter()
        .map(|r| {
            (
                rb.wind_scale().membership(v, r.antecedent),
                pitch.triangle(r.consequent),
            )
        })
        .filter(|(a, _)| *a > 0.0)
        .collect();
    if fired.is_empty() {
        return lo;
    }
    let step = (hi - lo) / (DEFUZZ_POINTS - 1) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..DEFUZZ_POINTS {
        let y = lo + i as f64 * step;
        let mu = fired
            .iter()
            .map(|(a, tri)| tri.degree(y).min(*a))
            .fold(0.0, f64::max);
        num += mu * y;
        den += mu;
    }
    if den > 0.0 {
        (num / den).clamp(lo, hi)
    } else {
        lo
    }
}

/// Whether any rule fires at `v`.
pub fn fires(rb: &RuleBase, v: f64) -> bool {
    rb.rules()
        .iter()
        .any(|r| rb.wind_scale().membership(v, r.antecedent) > 0.0)
}
