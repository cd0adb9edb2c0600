//! Quick invariant and oracle-equivalence checks, shared by the `selftest`
//! subcommand and the acceptance harness.

use std::f64::consts::PI;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ststore::algebra::{FieldElement, GaussianInt, MINIMAL_POLY};
use ststore::channel::{draw_session, transmit, SnrPoint};
use ststore::decoder::{brute_force_ml, session_problem, sphere_decode};
use ststore::dmt::{dmt_optimal_mac, dmt_proposed, dmt_tdma, Rational, SchemeParams};
use ststore::encoder::{build_pair_codeword, DispersionBasis};
use ststore::lift::{lift, Fragment};
use ststore::rng::trial_rng;

pub type Check = Result<String, String>;

fn random_element(rng: &mut ChaCha8Rng, bound: i64) -> FieldElement {
    let mut g = || GaussianInt::new(rng.random_range(-bound..=bound), rng.random_range(-bound..=bound));
    FieldElement::new(g(), g(), g())
}

fn close(a: num_complex::Complex64, b: num_complex::Complex64, scale: f64) -> bool {
    (a - b).norm() <= 1e-9 * (1.0 + scale)
}

/// Roots of the minimal polynomial, then `cases` random elements through
/// `τ³ = id`, ring homomorphism of every embedding, the `τ`/embedding shift
/// and Gaussian-integral trace and norm.
pub fn check_algebra(cases: usize, seed: u64) -> Check {
    for (j, rho) in MINIMAL_POLY.roots().iter().enumerate() {
        let expected = 2.0 * (2.0 * PI * (j + 1) as f64 / 7.0).cos();
        if (rho - expected).abs() > 1e-12 || MINIMAL_POLY.eval(*rho).abs() > 1e-12 {
            return Err(format!("root {j} is {rho}, expected {expected}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let x = random_element(&mut rng, 50);
        let y = random_element(&mut rng, 50);
        let fail = |what: &str| Err(format!("case {case}: {what} for x = {x}, y = {y}"));
        let e = |v: ststore::Result<FieldElement>| v.map_err(|err| err.to_string());
        if e(x.apply_tau(3))? != x {
            return fail("tau^3 != id");
        }
        let sum = e(x.checked_add(&y))?;
        let prod = e(x.checked_mul(&y))?;
        let tx = e(x.apply_tau(1))?;
        for j in 0..3 {
            let (sx, sy) = (x.embed(j).unwrap(), y.embed(j).unwrap());
            let scale = sx.norm() * sy.norm() + sx.norm() + sy.norm();
            if !close(sum.embed(j).unwrap(), sx + sy, scale) {
                return fail("embedding not additive");
            }
            if !close(prod.embed(j).unwrap(), sx * sy, scale) {
                return fail("embedding not multiplicative");
            }
            if !close(tx.embed(j).unwrap(), x.embed((j + 1) % 3).unwrap(), scale) {
                return fail("tau does not shift embeddings");
            }
        }
        if let Err(err) = x.trace_norm() {
            return fail(&format!("trace/norm not in Z[i]: {err}"));
        }
    }
    Ok(format!("{cases} random cases"))
}

/// Sphere decoder against the brute-force oracle on noisy pair sessions at
/// `m = 2`: identical coordinates and metrics within `1e-9`.
pub fn check_decoder_oracle(instances: u64, snr_db: f64, seed: u64) -> Check {
    let basis = DispersionBasis::algebraic(2, 2).map_err(|e| e.to_string())?;
    let snr = SnrPoint::from_db(snr_db).map_err(|e| e.to_string())?;
    let mut nodes = 0u64;
    for t in 0..instances {
        let mut rng = trial_rng(seed, t);
        let p1 = lift(&Fragment::from_index(rng.random_range(0..64), 2).unwrap()).unwrap();
        let p2 = lift(&Fragment::from_index(rng.random_range(0..64), 2).unwrap()).unwrap();
        let x = build_pair_codeword(&p1, &p2, 2).map_err(|e| e.to_string())?;
        let (chan, noise) = draw_session(&mut rng, 2, 1, 2, 3);
        let y = transmit(&x, &chan, &noise, snr).map_err(|e| e.to_string())?;
        let problem = session_problem(&y, &chan, &basis, snr, 2).map_err(|e| e.to_string())?;
        let sd = sphere_decode(&problem).map_err(|e| e.to_string())?;
        let bf = brute_force_ml(&problem).map_err(|e| e.to_string())?;
        if sd.coordinates != bf.coordinates || (sd.metric - bf.metric).abs() > 1e-9 {
            return Err(format!("instance {t}: sphere {:?} vs oracle {:?}", sd, bf));
        }
        nodes += sd.visited_nodes;
    }
    Ok(format!(
        "{instances} instances, 0 mismatches, mean visited nodes {:.1}",
        nodes as f64 / instances as f64
    ))
}

/// The three curves for `K = 10`, `n_t = 1`, `n_r = 2` against hand-derived breakpoints.
pub fn check_fig1() -> Check {
    let q = |n: i64, d: i64| Ratio::new(n, d);
    let p = SchemeParams::new(10, 1, 2).map_err(|e| e.to_string())?;
    let expect = |name: &str, got: &[(Rational, Rational)], want: &[(Rational, Rational)]| {
        if got == want {
            Ok(())
        } else {
            Err(format!("{name}: got {got:?}, want {want:?}"))
        }
    };
    let opt = dmt_optimal_mac(p).map_err(|e| e.to_string())?;
    let prop = dmt_proposed(p).map_err(|e| e.to_string())?;
    let tdma = dmt_tdma(p).map_err(|e| e.to_string())?;
    expect("d_opt", opt.breakpoints(), &[(q(0, 1), q(2, 1)), (q(2, 11), q(18, 11)), (q(1, 5), q(0, 1))])?;
    expect("d_proposed", prop.breakpoints(), &[(q(0, 1), q(2, 1)), (q(1, 5), q(0, 1))])?;
    expect("d_tdma", tdma.breakpoints(), &[(q(0, 1), q(2, 1)), (q(1, 10), q(0, 1))])?;
    for i in 0..=200 {
        let r = q(i, 1000);
        let (a, b, c) = (tdma.eval(r), prop.eval(r), opt.eval(r));
        if !(a <= b && b <= c) {
            return Err(format!("ordering fails at r = {r}"));
        }
        if r <= q(2, 11) && c != q(2, 1) - q(2, 1) * r {
            return Err(format!("d_opt off the 2 - 2r segment at r = {r}"));
        }
        if r >= q(2, 11) && c != (q(18, 1) - q(90, 1) * r).max(q(0, 1)) {
            return Err(format!("d_opt off the 18 - 90r segment at r = {r}"));
        }
        if b != (q(2, 1) - q(10, 1) * r).max(q(0, 1)) {
            return Err(format!("d_proposed is not 2 - 10r at r = {r}"));
        }
    }
    Ok("exact breakpoints and ordering".into())
}

/// Runs the quick suite, printing one line per check; `true` if all passed.
pub fn run_all() -> bool {
    let checks = [
        ("algebra invariants", check_algebra(2000, 7)),
        ("sphere decoder vs ML oracle", check_decoder_oracle(200, 10.0, 7)),
        ("DMT curves", check_fig1()),
    ];
    let mut ok = true;
    for (name, outcome) in checks {
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                ok = false;
                println!("FAIL {name}: {why}");
            }
        }
    }
    ok
}
