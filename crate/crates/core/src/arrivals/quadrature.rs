//! 12-point Gauss–Legendre rule; exact for polynomials up to degree 23.

const NODES: [f64; 6] = [
    0.125_233_408_511_468_915_472_441_4,
    0.367_831_498_998_180_193_752_691_5,
    0.587_317_954_286_617_447_296_702_4,
    0.769_902_674_194_304_687_036_893_8,
    0.904_117_256_370_474_856_678_465_9,
    0.981_560_634_246_719_250_690_549_1,
];

const WEIGHTS: [f64; 6] = [
    0.249_147_045_813_402_785_000_562_4,
    0.233_492_536_538_354_808_760_849_9,
    0.203_167_426_723_065_921_749_064_5,
    0.160_078_328_543_346_226_334_652_5,
    0.106_939_325_995_318_430_960_254_7,
    0.047_175_336_386_511_827_194_616_0,
];

/// Calls `visit(x, w)` for each quadrature point of [a, b].
pub(crate) fn for_each_point(a: f64, b: f64, mut visit: impl FnMut(f64, f64)) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for (x, w) in NODES.iter().zip(WEIGHTS) {
        visit(mid - half * x, half * w);
        visit(mid + half * x, half * w);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_to_degree_23() {
        let mut s = 0.0;
        for_each_point(0.0, 2.0, |x, w| s += w * x.powi(23));
        assert!((s - 2f64.powi(24) / 24.0).abs() < 1e-9 * 2f64.powi(24) / 24.0);
        let mut total = 0.0;
        for_each_point(-1.0, 1.0, |_, w| total += w);
        assert!((total - 2.0).abs() < 1e-15);
    }
}
