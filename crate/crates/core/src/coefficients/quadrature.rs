//! Small fixed quadrature rules.

/// Composite Simpson nodes and weights on `[a, b]` with `count` (odd) nodes.
pub(crate) fn simpson(a: f64, b: f64, count: usize) -> Vec<(f64, f64)> {
    assert!(count >= 3 && count % 2 == 1, "simpson needs an odd node count >= 3");
    let h = (b - a) / (count - 1) as f64;
    (0..count)
        .map(|i| {
            let w = if i == 0 || i == count - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (a + i as f64 * h, w * h / 3.0)
        })
        .collect()
}

/// Three-point Gauss–Legendre on each of `panels` equal panels of `[a, b]`.
pub(crate) fn gauss3(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    const X: f64 = 0.774_596_669_241_483_4; // sqrt(3/5)
    let width = (b - a) / panels as f64;
    let half = 0.5 * width;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * width;
            half * (5.0 / 9.0 * f(mid - half * X) + 8.0 / 9.0 * f(mid) + 5.0 / 9.0 * f(mid + half * X))
        })
        .sum()
}
