//! Quadrature rules on triangles (barycentric points) and intervals.

/// Point in barycentric coordinates with a weight relative to the element area.
#[derive(Debug, Clone, Copy)]
pub struct TriPoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleRule {
    /// Edge midpoints, exact for degree 2.
    EdgeMidpoint,
    /// Seven-point rule, exact for degree 5. Used for error norms.
    Degree5,
}

impl TriangleRule {
    pub fn points(self) -> Vec<TriPoint> {
        match self {
            TriangleRule::EdgeMidpoint => vec![
                TriPoint { bary: [0.5, 0.5, 0.0], weight: 1.0 / 3.0 },
                TriPoint { bary: [0.0, 0.5, 0.5], weight: 1.0 / 3.0 },
                TriPoint { bary: [0.5, 0.0, 0.5], weight: 1.0 / 3.0 },
            ],
            TriangleRule::Degree5 => {
                let s15 = 15f64.sqrt();
                let (a1, b1) = ((9.0 - 2.0 * s15) / 21.0, (6.0 + s15) / 21.0);
                let (a2, b2) = ((9.0 + 2.0 * s15) / 21.0, (6.0 - s15) / 21.0);
                let (w1, w2) = ((155.0 + s15) / 1200.0, (155.0 - s15) / 1200.0);
                vec![
                    TriPoint { bary: [1.0 / 3.0; 3], weight: 9.0 / 40.0 },
                    TriPoint { bary: [a1, b1, b1], weight: w1 },
                    TriPoint { bary: [b1, a1, b1], weight: w1 },
                    TriPoint { bary: [b1, b1, a1], weight: w1 },
                    TriPoint { bary: [a2, b2, b2], weight: w2 },
                    TriPoint { bary: [b2, a2, b2], weight: w2 },
                    TriPoint { bary: [b2, b2, a2], weight: w2 },
                ]
            }
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    const G1: [(f64, f64); 1] = [(0.0, 2.0)];
    const G2: [(f64, f64); 2] = [(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)];
    const G3: [(f64, f64); 3] = [
        (-0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
        (0.0, 0.888_888_888_888_888_9),
        (0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
    ];
    const G5: [(f64, f64); 5] = [
        (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.0, 0.568_888_888_888_888_9),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.906_179_845_938_664, 0.236_926_885_056_189_1),
    ];
    match n {
        1 => &G1,
        2 => &G2,
        3 => &G3,
        5 => &G5,
        _ => panic!("no {n}-point Gauss rule tabulated"),
    }
}

/// Nodes and weights mapped to `[a, b]`.
pub fn gauss_on(a: f64, b: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    gauss_legendre(n).iter().map(move |&(x, w)| (mid + half * x, half * w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate_monomial(rule: TriangleRule, p: i32, q: i32) -> f64 {
        // reference triangle (0,0),(1,0),(0,1): x = l1, y = l2, area 1/2
        rule.points()
            .iter()
            .map(|pt| 0.5 * pt.weight * pt.bary[1].powi(p) * pt.bary[2].powi(q))
            .sum()
    }

    fn exact_monomial(p: i32, q: i32) -> f64 {
        // p! q! / (p + q + 2)!
        let fact = |n: i32| (1..=n).map(f64::from).product::<f64>();
        fact(p) * fact(q) / fact(p + q + 2)
    }

    #[test]
    fn triangle_rules_exactness() {
        for (rule, deg) in [(TriangleRule::EdgeMidpoint, 2), (TriangleRule::Degree5, 5)] {
            let wsum: f64 = rule.points().iter().map(|p| p.weight).sum();
            assert!((wsum - 1.0).abs() < 1e-15);
            for p in 0..=deg {
                for q in 0..=deg - p {
                    let got = integrate_monomial(rule, p, q);
                    assert!((got - exact_monomial(p, q)).abs() < 1e-15, "{rule:?} x^{p} y^{q}");
                }
            }
        }
        assert!((integrate_monomial(TriangleRule::EdgeMidpoint, 3, 0) - exact_monomial(3, 0)).abs() > 1e-6);
    }

    #[test]
    fn gauss_exactness() {
        for (n, deg) in [(1, 1), (2, 3), (3, 5), (5, 9)] {
            for p in 0..=deg {
                let got: f64 = gauss_on(0.0, 2.0, n).map(|(t, w)| w * t.powi(p)).sum();
                let exact = 2f64.powi(p + 1) / (p + 1) as f64;
                assert!((got - exact).abs() < 1e-13 * exact.max(1.0), "n={n} p={p}");
            }
        }
    }
}
