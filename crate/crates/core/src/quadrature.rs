//! Triangle quadrature rules in barycentric coordinates.

/// `(weight, barycentric coordinates)`; weights sum to one.
pub type Rule = &'static [(f64, [f64; 3])];

/// Edge-midpoint rule, exact for quadratics.
pub const MIDPOINT3: Rule = &[
    (1.0 / 3.0, [0.5, 0.5, 0.0]),
    (1.0 / 3.0, [0.0, 0.5, 0.5]),
    (1.0 / 3.0, [0.5, 0.0, 0.5]),
];

const A1: f64 = 0.059_715_871_789_769_82;
const B1: f64 = 0.470_142_064_105_115_1;
const A2: f64 = 0.797_426_985_353_087_3;
const B2: f64 = 0.101_286_507_323_456_3;
const W0: f64 = 0.225;
const W1: f64 = 0.132_394_152_788_506_2;
const W2: f64 = 0.125_939_180_544_827_2;

/// Seven-point rule, exact for polynomials of degree five.
pub const DEGREE5: Rule = &[
    (W0, [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]),
    (W1, [A1, B1, B1]),
    (W1, [B1, A1, B1]),
    (W1, [B1, B1, A1]),
    (W2, [A2, B2, B2]),
    (W2, [B2, A2, B2]),
    (W2, [B2, B2, A2]),
];

pub fn map(bary: [f64; 3], p: [[f64; 2]; 3]) -> [f64; 2] {
    [
        bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
        bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for rule in [MIDPOINT3, DEGREE5] {
            let s: f64 = rule.iter().map(|(w, _)| w).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn degree5_is_exact_on_monomials() {
        // reference triangle (0,0),(1,0),(0,1): integral of x^a y^b = a! b! / (a+b+2)!
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                let q: f64 = DEGREE5
                    .iter()
                    .map(|(w, bc)| {
                        let p = map(*bc, tri);
                        w * 0.5 * p[0].powi(a as i32) * p[1].powi(b as i32)
                    })
                    .sum();
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-14, "x^{a} y^{b}: {q} vs {exact}");
            }
        }
    }
}
