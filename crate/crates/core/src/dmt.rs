//! Diversity-multiplexing tradeoff curves with exact rational breakpoints.
//!
//! A [`DmtCurve`] is a continuous, non-increasing piecewise-linear function of
//! the multiplexing gain `r ≥ 0`. It is stored in canonical form (no collinear
//! interior breakpoints, nothing after the first zero) so that structural
//! equality is functional equality. Beyond its last breakpoint a curve is 0.

use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::{Error, Result};

pub type Rational = Ratio<i64>;

fn q(n: i64) -> Rational {
    Rational::from_integer(n)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DmtCurve {
    breakpoints: Vec<(Rational, Rational)>,
}

impl DmtCurve {
    /// Validates and canonicalizes a breakpoint list.
    ///
    /// Requires the first breakpoint at `r = 0`, strictly increasing `r`,
    /// non-increasing `d ≥ 0`, and a final `d = 0`.
    pub fn new(points: Vec<(Rational, Rational)>) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("DMT curve: {msg}")));
        let Some(first) = points.first() else {
            return bad("no breakpoints");
        };
        if !first.0.is_zero() {
            return bad("first breakpoint must be at r = 0");
        }
        if points.iter().any(|p| p.1.is_negative()) {
            return bad("negative diversity");
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return bad("r must be strictly increasing");
            }
            if w[1].1 > w[0].1 {
                return bad("d must be non-increasing");
            }
        }
        if !points.last().unwrap().1.is_zero() {
            return bad("last breakpoint must have d = 0");
        }
        Ok(DmtCurve {
            breakpoints: canonicalize(points),
        })
    }

    pub fn breakpoints(&self) -> &[(Rational, Rational)] {
        &self.breakpoints
    }

    /// Smallest `r` with `d(r) = 0`.
    pub fn zero_point(&self) -> Rational {
        self.breakpoints.last().unwrap().0
    }

    /// Exact value at `r` (clamped to `d(0)` for `r < 0`).
    pub fn eval(&self, r: Rational) -> Rational {
        let bp = &self.breakpoints;
        if r <= bp[0].0 {
            return bp[0].1;
        }
        for w in bp.windows(2) {
            let ((r0, d0), (r1, d1)) = (w[0], w[1]);
            if r <= r1 {
                return d0 + (d1 - d0) * (r - r0) / (r1 - r0);
            }
        }
        Rational::zero()
    }

    pub fn eval_f64(&self, r: f64) -> f64 {
        let bp: Vec<(f64, f64)> = self.breakpoints.iter().map(|&(a, b)| (to_f64(a), to_f64(b))).collect();
        if r <= bp[0].0 {
            return bp[0].1;
        }
        for w in bp.windows(2) {
            let ((r0, d0), (r1, d1)) = (w[0], w[1]);
            if r <= r1 {
                return d0 + (d1 - d0) * (r - r0) / (r1 - r0);
            }
        }
        0.0
    }
}

impl fmt::Display for DmtCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.breakpoints.iter().map(|(r, d)| format!("({r}, {d})")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

pub fn to_f64(x: Rational) -> f64 {
    x.to_f64().expect("rational is finite")
}

fn canonicalize(points: Vec<(Rational, Rational)>) -> Vec<(Rational, Rational)> {
    let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(points.len());
    for p in points {
        if out.last().is_some_and(|l| l.1.is_zero()) {
            break;
        }
        while out.len() >= 2 {
            let (a, b) = (out[out.len() - 2], out[out.len() - 1]);
            // collinear iff the slopes a→b and b→p agree
            if (b.1 - a.1) * (p.0 - b.0) == (p.1 - b.1) * (b.0 - a.0) {
                out.pop();
            } else {
                break;
            }
        }
        out.push(p);
    }
    out
}

/// Optimal point-to-point DMT of an `m × n` channel: the piecewise-linear
/// interpolation of `(r, (m − r)(n − r))` for `r = 0, …, min(m, n)`.
pub fn dmt_ptp(m: u32, n: u32) -> Result<DmtCurve> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("antenna counts must be positive".into()));
    }
    let (m, n) = (m as i64, n as i64);
    DmtCurve::new((0..=m.min(n)).map(|r| (q(r), q((m - r) * (n - r)))).collect())
}

/// `r ↦ c(a·r)`.
pub fn scale_arg(c: &DmtCurve, a: Rational) -> Result<DmtCurve> {
    if !a.is_positive() {
        return Err(Error::InvalidParameter(format!("argument scale {a} must be positive")));
    }
    DmtCurve::new(c.breakpoints.iter().map(|&(r, d)| (r / a, d)).collect())
}

/// Exact pointwise minimum, with every segment crossing inserted as a breakpoint.
pub fn pointwise_min(a: &DmtCurve, b: &DmtCurve) -> DmtCurve {
    let mut xs: Vec<Rational> = a
        .breakpoints
        .iter()
        .chain(&b.breakpoints)
        .map(|p| p.0)
        .collect();
    xs.sort();
    xs.dedup();
    let mut pts = Vec::with_capacity(2 * xs.len());
    for (i, &x0) in xs.iter().enumerate() {
        let diff0 = a.eval(x0) - b.eval(x0);
        pts.push((x0, a.eval(x0).min(b.eval(x0))));
        if let Some(&x1) = xs.get(i + 1) {
            let diff1 = a.eval(x1) - b.eval(x1);
            if (diff0.is_positive() && diff1.is_negative()) || (diff0.is_negative() && diff1.is_positive()) {
                let x = x0 + (x1 - x0) * diff0 / (diff0 - diff1);
                pts.push((x, a.eval(x)));
            }
        }
    }
    DmtCurve::new(pts).expect("minimum of valid curves is valid")
}

/// System parameters: `K` helpers with `n_t` antennas each, `n_r` at the newcomer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemeParams {
    pub k: u32,
    pub n_t: u32,
    pub n_r: u32,
}

impl SchemeParams {
    pub fn new(k: u32, n_t: u32, n_r: u32) -> Result<Self> {
        if k == 0 || n_t == 0 || n_r == 0 {
            return Err(Error::InvalidParameter(format!(
                "K, n_t, n_r must be positive (got {k}, {n_t}, {n_r})"
            )));
        }
        Ok(SchemeParams { k, n_t, n_r })
    }

    /// Smallest odd integer `≥ K`.
    pub fn k_odd(&self) -> u32 {
        self.k | 1
    }
}

/// `min{ d*_{n_t,n_r}(r), d*_{K n_t, n_r}(K r) }`.
pub fn dmt_optimal_mac(p: SchemeParams) -> Result<DmtCurve> {
    let single = dmt_ptp(p.n_t, p.n_r)?;
    let joint = scale_arg(&dmt_ptp(p.k * p.n_t, p.n_r)?, q(p.k as i64))?;
    Ok(pointwise_min(&single, &joint))
}

/// Pair scheme: `min{ d*_{1,2}(K r / 2), d*_{2,2}(K r) }`.
pub fn dmt_proposed(p: SchemeParams) -> Result<DmtCurve> {
    if p.n_t != 1 || p.n_r != 2 {
        return Err(Error::InvalidParameter(format!(
            "pair scheme is defined for n_t = 1, n_r = 2 (got {}, {})",
            p.n_t, p.n_r
        )));
    }
    let k = p.k as i64;
    let single = scale_arg(&dmt_ptp(1, 2)?, Rational::new(k, 2))?;
    let joint = scale_arg(&dmt_ptp(2, 2)?, q(k))?;
    Ok(pointwise_min(&single, &joint))
}

/// TDMA: each helper alone at multiplexing gain `K r`, `d*_{1,n_r}(K r)`.
pub fn dmt_tdma(p: SchemeParams) -> Result<DmtCurve> {
    if p.n_t != 1 {
        return Err(Error::InvalidParameter(format!("TDMA baseline needs n_t = 1, got {}", p.n_t)));
    }
    scale_arg(&dmt_ptp(1, p.n_r)?, q(p.k as i64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fig1Row {
    pub r: Rational,
    pub d_optimal: Rational,
    pub d_proposed: Rational,
    pub d_tdma: Rational,
}

/// The three curves for `n_t = 1`, `n_r = 2` sampled on `grid` uniformly spaced
/// points covering `[0, r_max]`, `r_max` the largest zero point.
pub fn emit_fig1(k: u32, grid: usize) -> Result<Vec<Fig1Row>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need K >= 2, got {k}")));
    }
    if grid < 2 {
        return Err(Error::InvalidParameter(format!("grid needs at least 2 points, got {grid}")));
    }
    let p = SchemeParams::new(k, 1, 2)?;
    let (opt, prop, tdma) = (dmt_optimal_mac(p)?, dmt_proposed(p)?, dmt_tdma(p)?);
    let r_max = opt.zero_point().max(prop.zero_point()).max(tdma.zero_point());
    let last = (grid - 1) as i64;
    Ok((0..grid as i64)
        .map(|i| {
            let r = r_max * Rational::new(i, last);
            Fig1Row {
                r,
                d_optimal: opt.eval(r),
                d_proposed: prop.eval(r),
                d_tdma: tdma.eval(r),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rq(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn pts(v: &[(i64, i64, i64, i64)]) -> Vec<(Rational, Rational)> {
        v.iter().map(|&(a, b, c, d)| (rq(a, b), rq(c, d))).collect()
    }

    /// Direct evaluation of the point-to-point DMT, independent of `DmtCurve`.
    fn ptp_direct(m: f64, n: f64, r: f64) -> f64 {
        if r >= m.min(n) {
            return 0.0;
        }
        let k = r.floor();
        let d0 = (m - k) * (n - k);
        let d1 = (m - k - 1.0) * (n - k - 1.0);
        d0 + (d1 - d0) * (r - k)
    }

    #[test]
    fn ptp_examples() {
        assert_eq!(dmt_ptp(1, 2).unwrap().breakpoints(), &pts(&[(0, 1, 2, 1), (1, 1, 0, 1)])[..]);
        assert_eq!(
            dmt_ptp(2, 2).unwrap().breakpoints(),
            &pts(&[(0, 1, 4, 1), (1, 1, 1, 1), (2, 1, 0, 1)])[..]
        );
        assert_eq!(dmt_ptp(2, 2).unwrap().eval(rq(1, 2)), rq(5, 2));
        assert!(dmt_ptp(0, 2).is_err());
    }

    #[test]
    fn scale_examples() {
        let c = dmt_ptp(1, 2).unwrap();
        assert_eq!(scale_arg(&c, q(10)).unwrap().zero_point(), rq(1, 10));
        assert_eq!(scale_arg(&c, q(1)).unwrap(), c);
        assert_eq!(scale_arg(&c, q(5)).unwrap().eval(rq(1, 10)), q(1));
        assert!(scale_arg(&c, q(0)).is_err());
    }

    #[test]
    fn invalid_curves_rejected() {
        assert!(DmtCurve::new(vec![]).is_err());
        assert!(DmtCurve::new(pts(&[(1, 1, 1, 1), (2, 1, 0, 1)])).is_err());
        assert!(DmtCurve::new(pts(&[(0, 1, 1, 1), (1, 1, 2, 1), (2, 1, 0, 1)])).is_err());
        assert!(DmtCurve::new(pts(&[(0, 1, 1, 1), (0, 1, 0, 1)])).is_err());
        assert!(DmtCurve::new(pts(&[(0, 1, 1, 1), (1, 1, 1, 2)])).is_err());
    }

    #[test]
    fn canonical_form_drops_redundant_points() {
        let c = DmtCurve::new(pts(&[(0, 1, 2, 1), (1, 2, 1, 1), (1, 1, 0, 1)])).unwrap();
        assert_eq!(c, dmt_ptp(1, 2).unwrap());
    }

    #[test]
    fn optimal_mac_k10() {
        let p = SchemeParams::new(10, 1, 2).unwrap();
        let c = dmt_optimal_mac(p).unwrap();
        assert_eq!(
            c.breakpoints(),
            &[(q(0), q(2)), (rq(2, 11), rq(18, 11)), (rq(1, 5), q(0))][..]
        );
        assert_eq!(c.eval(rq(1, 10)), rq(9, 5));
        // independent check: line intersection of 2 − 2r and 18 − 90r
        let cross = (18.0 - 2.0) / (90.0 - 2.0);
        assert!((cross - 2.0 / 11.0).abs() < 1e-15);
        for i in 0..=10_000 {
            let r = 0.25 * i as f64 / 10_000.0;
            let direct = ptp_direct(1.0, 2.0, r).min(ptp_direct(10.0, 2.0, 10.0 * r));
            assert!((c.eval_f64(r) - direct).abs() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn optimal_mac_single_user_is_ptp() {
        let p = SchemeParams::new(1, 1, 2).unwrap();
        assert_eq!(dmt_optimal_mac(p).unwrap(), dmt_ptp(1, 2).unwrap());
    }

    #[test]
    fn proposed_k10() {
        let p = SchemeParams::new(10, 1, 2).unwrap();
        let c = dmt_proposed(p).unwrap();
        assert_eq!(c.breakpoints(), &[(q(0), q(2)), (rq(1, 5), q(0))][..]);
        assert_eq!(c.eval(rq(1, 10)), q(1));
        assert_eq!(c.eval(rq(1, 20)), rq(3, 2));
        assert_eq!(c.eval(rq(1, 5)), q(0));
        for i in 0..=10_000 {
            let r = 0.25 * i as f64 / 10_000.0;
            let direct = ptp_direct(1.0, 2.0, 5.0 * r).min(ptp_direct(2.0, 2.0, 10.0 * r));
            assert!((c.eval_f64(r) - direct).abs() < 1e-12);
        }
        let k2 = dmt_proposed(SchemeParams::new(2, 1, 2).unwrap()).unwrap();
        assert_eq!(k2.eval(q(0)), q(2));
        assert!(dmt_proposed(SchemeParams::new(2, 1, 1).unwrap()).is_err());
    }

    #[test]
    fn tdma_examples() {
        let c = dmt_tdma(SchemeParams::new(10, 1, 2).unwrap()).unwrap();
        assert_eq!(c.breakpoints(), &[(q(0), q(2)), (rq(1, 10), q(0))][..]);
        assert_eq!(c.eval(q(0)), q(2));
        assert_eq!(dmt_tdma(SchemeParams::new(1, 1, 2).unwrap()).unwrap(), dmt_ptp(1, 2).unwrap());
    }

    #[test]
    fn fig1_ordering() {
        let rows = emit_fig1(10, 201).unwrap();
        assert_eq!(rows.len(), 201);
        assert_eq!(rows[0].r, q(0));
        assert_eq!(rows.last().unwrap().r, rq(1, 5));
        for row in &rows {
            assert!(row.d_tdma <= row.d_proposed);
            assert!(row.d_proposed <= row.d_optimal);
            if row.r > q(0) && row.r < rq(1, 5) {
                assert!(row.d_tdma < row.d_proposed);
            }
        }
        assert_eq!((rows[0].d_optimal, rows[0].d_proposed, rows[0].d_tdma), (q(2), q(2), q(2)));
        assert!(emit_fig1(1, 10).is_err());
        assert!(emit_fig1(10, 1).is_err());
    }

    #[test]
    fn k_odd() {
        assert_eq!(SchemeParams::new(10, 1, 2).unwrap().k_odd(), 11);
        assert_eq!(SchemeParams::new(3, 1, 2).unwrap().k_odd(), 3);
    }

    fn arb_curve() -> impl Strategy<Value = DmtCurve> {
        prop::collection::vec((1i64..6, 1i64..5, 0i64..6), 1..5).prop_map(|steps| {
            let total: i64 = steps.iter().map(|s| s.2).sum::<i64>() + 1;
            let mut d = q(total);
            let mut r = q(0);
            let mut v = vec![(r, d)];
            for (num, den, drop) in steps {
                r += rq(num, den);
                d -= q(drop);
                v.push((r, d));
            }
            v.push((r + q(1), q(0)));
            DmtCurve::new(v).unwrap()
        })
    }

    proptest! {
        #[test]
        fn min_is_commutative_associative_idempotent(a in arb_curve(), b in arb_curve(), c in arb_curve()) {
            prop_assert_eq!(pointwise_min(&a, &b), pointwise_min(&b, &a));
            prop_assert_eq!(
                pointwise_min(&pointwise_min(&a, &b), &c),
                pointwise_min(&a, &pointwise_min(&b, &c))
            );
            prop_assert_eq!(pointwise_min(&a, &a), a.clone());
        }

        #[test]
        fn min_is_below_both(a in arb_curve(), b in arb_curve(), num in 0i64..400) {
            let r = rq(num, 40);
            let m = pointwise_min(&a, &b);
            prop_assert_eq!(m.eval(r), a.eval(r).min(b.eval(r)));
        }

        #[test]
        fn scale_composes(c in arb_curve(), a in 1i64..9, b in 1i64..9, ad in 1i64..5) {
            let x = rq(a, ad);
            let y = q(b);
            prop_assert_eq!(
                scale_arg(&scale_arg(&c, x).unwrap(), y).unwrap(),
                scale_arg(&c, x * y).unwrap()
            );
        }

        #[test]
        fn scheme_ordering(k in 2u32..40, num in 0i64..1000) {
            let p = SchemeParams::new(k, 1, 2).unwrap();
            let r = rq(num, 1000);
            let (t, pr, o) = (dmt_tdma(p).unwrap(), dmt_proposed(p).unwrap(), dmt_optimal_mac(p).unwrap());
            prop_assert!(t.eval(r) <= pr.eval(r));
            prop_assert!(pr.eval(r) <= o.eval(r));
        }
    }
}
