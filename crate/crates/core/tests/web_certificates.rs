//! End-to-end certificate runs on the quadratic showcase map z^2 - 6,
//! whose repelling fixed point 3 has multiplier 6 and whose filled-in set
//! is a Cantor dust on the real line.

use num_complex::Complex64;
use uqrweb_core::geom::point::Point;
use uqrweb_core::geom::sample::SamplePolicy;
use uqrweb_core::growth::mu_threshold;
use uqrweb_core::linearizer::LinearizerModel;
use uqrweb_core::maps::MapSpec;
use uqrweb_core::web::{
    certify_web_with, fast_escape_test, julia_enclosing_curve, winding_number, CertifyOptions,
    Verdict,
};

fn flagship() -> LinearizerModel {
    LinearizerModel::planar(
        MapSpec::quadratic(Complex64::new(-6.0, 0.0)),
        Complex64::new(3.0, 0.0),
        Complex64::new(6.0, 0.0),
        None,
    )
    .unwrap()
}

fn chosen_mu() -> f64 {
    mu_threshold(2, 1.0, 6.0).unwrap().chosen_mu
}

#[test]
fn the_full_certificate_chain_passes_four_levels() {
    let l = flagship();
    let mu = chosen_mu();
    let cert = certify_web_with(&l, 20.0, mu, 4, &CertifyOptions::default()).unwrap();

    assert_eq!(cert.verdict, Verdict::Pass);
    assert_eq!(cert.offending_level, None);
    assert_eq!(cert.levels.len(), 4);

    for level in &cert.levels {
        assert!(level.passed(), "level {} failed", level.m);
        // each boundary winds once around the origin in stored coordinates
        assert_eq!(
            winding_number(&level.boundary, Point::planar(0.0, 0.0)).unwrap(),
            1
        );
        // and its vertices sit strictly inside the annulus A(r_m, r_m^mu)
        let ln_lo = level.boundary.min_norm().ln() + level.ln_boundary_rescale;
        let ln_hi = level.boundary.max_norm().ln() + level.ln_boundary_rescale;
        assert!(ln_lo > level.ln_r_m, "level {} dips below r_m", level.m);
        assert!(ln_hi < mu * level.ln_r_m, "level {} tops r_m^mu", level.m);
    }

    // heights and powers grow with the level, and consecutive boundaries
    // nest: the outermost point of one stays under the innermost of the next
    for pair in cert.levels.windows(2) {
        assert!(pair[0].ln_r_m < pair[1].ln_r_m);
        assert!(pair[0].p_exponent < pair[1].p_exponent);
        let ln_outer = pair[0].boundary.max_norm().ln() + pair[0].ln_boundary_rescale;
        let ln_inner = pair[1].boundary.min_norm().ln() + pair[1].ln_boundary_rescale;
        assert!(
            ln_outer < ln_inner,
            "boundaries {} and {} fail to nest",
            pair[0].m,
            pair[1].m
        );
    }

    // the first height is the multiplier magnitude times the measured max
    // modulus at 20, which for z^2 - 6 is a hair over 6 * 406
    let r1 = cert.levels[0].r_m;
    assert!(r1 > 200.0 && r1 < 3000.0, "r_1 = {r1}");

    // the JSON rendering carries the verdict, the levels, and the caveat
    let json = cert.to_json().unwrap();
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["verdict"], "Pass");
    assert_eq!(value["levels"].as_array().unwrap().len(), 4);
    assert!(value["sample_policy"]["caveat"]
        .as_str()
        .unwrap()
        .contains("polyline resolution"));
}

#[test]
fn certificates_survive_doubled_sampling() {
    let l = flagship();
    let mu = chosen_mu();
    let lean = CertifyOptions {
        curve_depth: 3,
        ball_samples: 64,
        image_samples: 8,
        tower: SamplePolicy::with_samples(256),
    };
    let rich = CertifyOptions {
        curve_depth: 3,
        ball_samples: 128,
        image_samples: 16,
        tower: SamplePolicy::with_samples(512),
    };
    let a = certify_web_with(&l, 20.0, mu, 3, &lean).unwrap();
    let b = certify_web_with(&l, 20.0, mu, 3, &rich).unwrap();
    assert!(a.passed());
    assert!(b.passed());
    for (x, y) in a.levels.iter().zip(&b.levels) {
        // the same annuli up to refinement noise, realized by the same powers
        assert!((x.ln_r_m - y.ln_r_m).abs() < 1e-3 * (1.0 + x.ln_r_m.abs()));
        assert_eq!(x.p_exponent, y.p_exponent);
    }
}

#[test]
fn membership_is_monotone_in_the_threshold() {
    let map = MapSpec::quadratic(Complex64::new(-6.0, 0.0));
    let probes = [
        Point::planar(10.0, 0.0),
        Point::planar(12.0, 3.0),
        Point::planar(0.0, 0.0),
        Point::planar(3.2, 0.0),
    ];
    for x in probes {
        let tight = fast_escape_test(&map, x, 8.0, 16, 4).unwrap();
        let loose = fast_escape_test(&map, x, 4.0, 16, 4).unwrap();
        // a bigger threshold only raises the tower, so membership there
        // implies membership at the smaller one
        if tight.member_a_r {
            assert!(loose.member_a_r, "monotonicity broke at {x:?}");
        }
        if tight.member_a {
            assert!(loose.member_a, "offset monotonicity broke at {x:?}");
        }
        for (hi, lo) in tight.ln_tower.iter().zip(&loose.ln_tower) {
            assert!(hi > lo);
        }
    }
}

#[test]
fn enclosing_curves_shrink_geometrically() {
    let c = Complex64::new(-6.0, 0.0);
    let x0 = Point::planar(3.0, 0.0);
    let mut prev = julia_enclosing_curve(c, 1, x0).unwrap().diameter();
    for k in 2..=4 {
        let diam = julia_enclosing_curve(c, k, x0).unwrap().diameter();
        assert!(
            diam < 0.62 * prev,
            "depth {k}: diameter {diam} against previous {prev}"
        );
        prev = diam;
    }
}
