use lcpow::rat::{rat, Rat};
use lcpow::saddle::{concavity_integral, psi_sweep, SaddleConfig};
use lcpow::sequences::{certify_growth, generate, sigma_partial_sum_bounds, SeriesSpec};
use num_traits::Zero;
use std::time::Instant;

#[test]
fn probe() {
    let t = Instant::now();
    let rep = sigma_partial_sum_bounds(100_000, 256).unwrap();
    println!(
        "partial sums: lower {:.3e} at {}, upper {:.3e} at {} ({:.1}s)",
        rep.min_lower_margin,
        rep.min_lower_margin_at,
        rep.min_upper_margin,
        rep.min_upper_margin_at,
        t.elapsed().as_secs_f64()
    );

    // psi'(0) finite differences on geometric at r = 1/2, A = 1.
    let f = generate(&SeriesSpec::parse("geometric").unwrap(), 4_000).unwrap();
    let cert = certify_growth(&f, &rat(1, 1), &Rat::zero()).unwrap();
    let sweep = psi_sweep(&f, &cert, &rat(1, 2), &[5e-4, 1e-3], 192).unwrap();
    for s in &sweep.samples {
        println!("theta {:.1e}: psi {:.12e} fd-err {:.3e}", s.theta, s.psi, (s.psi / s.theta - 1.0).abs());
    }

    // Quadrature stability at sigma-shifted (10, 50).
    let fs = generate(&SeriesSpec::parse("sigma-shifted").unwrap(), 2_000).unwrap();
    let cs = certify_growth(&fs, &rat(17, 10), &Rat::zero()).unwrap();
    let mut c1 = SaddleConfig::new(10, 50);
    c1.quadrature.abs_tolerance = 1e-8;
    let mut c2 = c1.clone();
    c2.quadrature.abs_tolerance = 1e-10;
    let a1 = concavity_integral(&fs, &cs, &c1, 50.0).unwrap();
    let a2 = concavity_integral(&fs, &cs, &c2, 50.0).unwrap();
    println!(
        "quadrature: t1 {:.12e} t2 {:.12e} rel {:.3e} panels {} -> {}",
        a1.total,
        a2.total,
        ((a1.total - a2.total) / a2.total).abs(),
        a1.panels,
        a2.panels
    );
}
