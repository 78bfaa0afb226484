//! Acceptance gate: one line per criterion, non-zero exit if any fails.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};
use std::process::ExitCode;
use std::time::Instant;

use chentype::chen::{
    a2_mu_sq_roots, class_b_alpha_sq_roots, class_b_cubic, closed_form_fields, condition_residuals,
    laplace_samples, minimal_radius_bisect, one_type_fit, order_two_fit, resolve_auto_radius,
    solve_type_coefficients, spectral_decomposition, special_radii, type_pde_residual, CenterChoice,
    LaplaceSample, RadiusLabel, TypeCoefficients, TypeVerdict,
};
use chentype::embedding::{
    shape_operator_of_embedding, sigma, weingarten_fd, CanonicalTriple, HorizontalVector, SpaceFormPoint,
};
use chentype::hypersurface::{scalar_invariants, shape_operator, curvature_deviation, Chart, Family, FamilySpec};
use chentype::laplace::{laplace_beltrami, position_field, FdConfig};
use chentype::quaternion::{trace_metric, QMatrix, QVector};
use chentype::sampling::{gaussian, horizontal_unit, quadric_point, rng};
use nalgebra::DVector;

const SAMPLES: usize = 10;
const SEED: u64 = 2024;

type Outcome = Result<String, String>;

fn spec(f: Family, m: usize, k: usize, r: f64) -> FamilySpec {
    FamilySpec::new(f, m, k, r).expect("legal spec")
}

fn check(ok: bool, what: String) -> Outcome {
    if ok {
        Ok(what)
    } else {
        Err(what)
    }
}

/// Collects sub-checks; the criterion passes iff all of them do.
#[derive(Default)]
struct Tally {
    notes: Vec<String>,
    failed: bool,
}

impl Tally {
    fn add(&mut self, ok: bool, note: String) {
        if !ok {
            self.failed = true;
            self.notes.push(format!("FAILED {note}"));
        } else {
            self.notes.push(note);
        }
    }

    fn finish(self) -> Outcome {
        check(!self.failed, self.notes.join("; "))
    }
}

fn samples(sp: FamilySpec, depth: usize) -> Vec<LaplaceSample> {
    laplace_samples(sp, SEED, SAMPLES, depth, &FdConfig::default()).expect("samples")
}

fn embedding_identities() -> Outcome {
    let triple = CanonicalTriple::standard();
    let (mut e7, mut e8, mut e9, mut e10) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut count = 0;
    for c in [1.0, -1.0] {
        let mut r = rng(SEED + c as u64);
        for _ in 0..200 {
            let z = quadric_point(&mut r, 2, c, 1.0);
            let p = SpaceFormPoint::new(z.clone()).unwrap();
            let mut vecs: Vec<QVector> = (0..4).map(|_| horizontal_unit(&mut r, &z).scale(1.0 + 0.5 * gaussian(&mut r))).collect();
            let w = vecs.pop().unwrap();
            let v = vecs.pop().unwrap();
            let y = vecs.pop().unwrap();
            let x = vecs.pop().unwrap();
            let h = |a: &QVector| HorizontalVector::new(z.clone(), a.clone()).unwrap();
            let sxy = sigma(&p, &h(&x), &h(&y)).value;
            let svw = sigma(&p, &h(&v), &h(&w)).value;

            let centered = p.centered();
            e7 = e7.max((trace_metric(&centered, &centered).unwrap() - c * 2.0 / 6.0).abs());

            let j = |q: usize, a: &QVector| triple.apply(q, a);
            let mut want8 = 2.0 * x.dot(&y) * v.dot(&w) + x.dot(&v) * y.dot(&w) + x.dot(&w) * y.dot(&v);
            for q in 1..=3 {
                want8 += j(q, &x).dot(&v) * j(q, &y).dot(&w) + j(q, &x).dot(&w) * j(q, &y).dot(&v);
            }
            e8 = e8.max((trace_metric(&sxy, &svw).unwrap() - c * want8).abs());

            let fd9 = weingarten_fd(&p, &sxy, &v);
            e9 = e9.max((&fd9 - &shape_operator_of_embedding(&triple, &x, &y, &v)).max_abs());

            e10 = e10.max((trace_metric(&sxy, &p.p).unwrap() + x.dot(&y)).abs());
            e10 = e10.max(trace_metric(&sxy, &QMatrix::identity(3, c)).unwrap().abs());
            for q in 1..=3 {
                let sj = sigma(&p, &h(&j(q, &x)), &h(&j(q, &y))).value;
                e10 = e10.max(sj.max_diff(&sxy));
            }
            count += 1;
        }
    }
    check(
        e7 <= 1e-8 && e8 <= 1e-8 && e10 <= 1e-8 && e9 <= 1e-7,
        format!("{count} samples; quadric {e7:.1e}, sigma products {e8:.1e}, Weingarten {e9:.1e}, sigma relations {e10:.1e}"),
    )
}

fn curvature_cells() -> Vec<FamilySpec> {
    let mut out = vec![];
    for r in [0.4, FRAC_PI_4, 1.2] {
        out.push(spec(Family::P1k, 2, 0, r));
        out.push(spec(Family::P1k, 2, 1, r));
        out.push(spec(Family::P1k, 3, 1, r));
    }
    for r in [0.2, 0.45, 0.7] {
        out.push(spec(Family::P2, 2, 0, r));
    }
    for r in [0.4, 1.0, 1.8] {
        out.push(spec(Family::H1k, 2, 0, r));
        out.push(spec(Family::H1k, 2, 1, r));
        out.push(spec(Family::H2, 2, 0, r));
    }
    out.push(spec(Family::H3, 2, 0, 0.0));
    out
}

fn principal_curvature_table() -> Outcome {
    let mut worst = 0.0f64;
    let mut mismatched = vec![];
    let cells = curvature_cells();
    for sp in &cells {
        let chart = Chart::new(*sp, SEED);
        let frame = shape_operator(&chart, &vec![0.0; chart.n()]).unwrap();
        match curvature_deviation(&frame, sp) {
            Some(d) => worst = worst.max(d),
            None => mismatched.push(sp.to_string()),
        }
    }
    check(
        worst <= 1e-6 && mismatched.is_empty(),
        format!("{} cells, worst curvature error {worst:.1e}, multiplicity mismatches {mismatched:?}", cells.len()),
    )
}

fn beltrami_check() -> Outcome {
    let cfg = FdConfig::default();
    let mut t = Tally::default();
    for sp in [
        spec(Family::P1k, 2, 0, 0.9),
        spec(Family::P1k, 2, 1, 0.6),
        spec(Family::P1k, 3, 1, 0.7),
        spec(Family::P2, 2, 0, 0.35),
        spec(Family::H1k, 2, 0, 0.8),
        spec(Family::H1k, 2, 1, 0.8),
        spec(Family::H2, 2, 0, 0.6),
        spec(Family::H3, 2, 0, 0.0),
    ] {
        let mut worst = 0.0f64;
        for i in 0..SAMPLES as u64 {
            let chart = Chart::new(sp, SEED + i);
            let u = vec![0.0; chart.n()];
            let fd = laplace_beltrami(&position_field(&chart), &chart, &u, &cfg).unwrap();
            let cf = closed_form_fields(&shape_operator(&chart, &u).unwrap()).unwrap();
            let closed = DVector::from_vec(cf.laplacian.to_reals());
            worst = worst.max((&fd - &closed).amax() / closed.amax());
        }
        t.add(worst <= 1e-6, format!("{sp} {worst:.1e}"));
    }
    t.finish()
}

fn close(x: Option<f64>, want: f64, tol: f64) -> bool {
    x.is_some_and(|v| (v - want).abs() <= tol)
}

fn eigen_pair(tc: &TypeCoefficients, want: [f64; 2], tol: f64) -> bool {
    let mut got = tc.eigenvalues.clone();
    got.sort_by(f64::total_cmp);
    let mut want = want.to_vec();
    want.sort_by(f64::total_cmp);
    got.len() == 2 && got.iter().zip(&want).all(|(g, w)| (g - w).abs() <= tol)
}

fn sphere_two_type() -> Outcome {
    let sp = spec(Family::P1k, 2, 0, FRAC_PI_4);
    let tc = solve_type_coefficients(&sp);
    let mut t = Tally::default();
    t.add(
        close(tc.a, 52.0, 1e-9) && close(tc.b, 640.0, 1e-9) && eigen_pair(&tc, [32.0, 20.0], 1e-9),
        format!("a={:?} b={:?} λ={:?}", tc.a, tc.b, tc.eigenvalues),
    );
    let pde = type_pde_residual(&samples(sp, 2), &tc, &CenterChoice::Estimated).unwrap();
    t.add(pde <= 1e-4, format!("PDE {pde:.1e}"));
    let chart = Chart::new(sp, SEED);
    let s = scalar_invariants(&shape_operator(&chart, &[0.0; 7]).unwrap());
    let rep = condition_residuals(&s, 52.0, 640.0);
    t.add(rep.pass && rep.max_scalar_residual() <= 1e-9, format!("conditions {:.1e}", rep.max_scalar_residual()));
    t.finish()
}

fn one_type() -> Outcome {
    let mut t = Tally::default();
    let sp = spec(Family::P1k, 2, 0, FRAC_PI_3);
    let smp = samples(sp, 1);
    let fit = one_type_fit(&smp).unwrap();
    let tc = solve_type_coefficients(&sp);
    let pde = type_pde_residual(&smp, &tc, &CenterChoice::Estimated).unwrap();
    t.add(
        tc.verdict == TypeVerdict::OneType && fit.residual <= 1e-4 && pde <= 1e-4,
        format!("π/3 fit {:.1e} (λ={:.6}), closed {pde:.1e}", fit.residual, fit.coefficients[0]),
    );
    for r in [0.5, FRAC_PI_4, 1.2] {
        let fit = one_type_fit(&samples(spec(Family::P1k, 2, 0, r), 1)).unwrap();
        t.add(fit.residual > 1e-2, format!("r={r:.3} {:.1e}", fit.residual));
    }
    for sp in [
        spec(Family::H1k, 2, 0, 0.5),
        spec(Family::H1k, 2, 0, 1.0),
        spec(Family::H1k, 2, 1, 0.7),
        spec(Family::H2, 2, 0, 0.6),
        spec(Family::H3, 2, 0, 0.0),
    ] {
        let fit = one_type_fit(&samples(sp, 1)).unwrap();
        t.add(fit.residual > 1e-2, format!("{sp} {:.1e}", fit.residual));
    }
    t.finish()
}

fn a2_radii() -> Outcome {
    let mut t = Tally::default();
    let radii = resolve_auto_radius(Family::P1k, 3, 1, "two-type").unwrap();
    let want_a = 1.0f64.atan();
    let want_b = (1.0 / (7.0f64 / 9.0).sqrt()).atan();
    t.add(
        radii.len() == 2 && radii.iter().any(|r| (r - want_a).abs() < 1e-14) && radii.iter().any(|r| (r - want_b).abs() < 1e-14),
        format!("radii {radii:?}"),
    );
    for (r, want) in [(want_a, [32.0, 28.0]), (want_b, [256.0 / 7.0, 256.0 / 9.0])] {
        let sp = spec(Family::P1k, 3, 1, r);
        let tc = solve_type_coefficients(&sp);
        let pde = type_pde_residual(&samples(sp, 2), &tc, &CenterChoice::Estimated).unwrap();
        t.add(
            eigen_pair(&tc, want, 1e-9) && pde <= 1e-4,
            format!("r={r:.6} λ={:?} PDE {pde:.1e}", tc.eigenvalues),
        );
    }
    let mut legal = 0;
    for m in 3..=6 {
        for k in 1..m - 1 {
            let (kk, ll) = ((4 * k + 3) as f64, (4 * (m - k - 1) + 3) as f64);
            legal += a2_mu_sq_roots(kk, ll, -1.0).iter().filter(|(_, x)| *x > 1.0).count();
            for r in [0.3, 1.0, 2.5] {
                if solve_type_coefficients(&spec(Family::H1k, m, k, r)).verdict != TypeVerdict::NotTwoType {
                    legal += 1;
                }
            }
        }
    }
    t.add(legal == 0, format!("hyperbolic admissible roots {legal}"));
    t.finish()
}

fn class_b() -> Outcome {
    let mut t = Tally::default();
    let radii = resolve_auto_radius(Family::P2, 2, 0, "two-type").unwrap();
    let want_i = 0.5 * 2.0f64.sqrt().atan();
    let want_ii = 0.5 * (1.0 / ((3.0 + 369.0f64.sqrt()) / 30.0).sqrt()).atan();
    t.add(
        radii.len() == 2 && (radii[0] - want_ii).abs() < 1e-14 && (radii[1] - want_i).abs() < 1e-14,
        format!("radii {radii:?}"),
    );
    let roots = class_b_alpha_sq_roots(2, 1.0);
    t.add(
        roots.iter().filter(|(_, x)| *x > 0.0).count() == 2 && (roots[0].1 - 2.0).abs() < 1e-15,
        format!("α² roots {:?}", roots.map(|r| r.1)),
    );
    let tc = solve_type_coefficients(&spec(Family::P2, 2, 0, want_i));
    t.add(
        close(tc.a, 42.0, 1e-9) && close(tc.b, 432.0, 1e-9) && eigen_pair(&tc, [24.0, 18.0], 1e-9),
        format!("α²=2: a={:?} b={:?} λ={:?}", tc.a, tc.b, tc.eigenvalues),
    );
    for r in [want_i, want_ii] {
        let sp = spec(Family::P2, 2, 0, r);
        let pde = type_pde_residual(&samples(sp, 2), &solve_type_coefficients(&sp), &CenterChoice::Quadric).unwrap();
        t.add(pde <= 1e-4, format!("mass-symmetric PDE r={r:.6} {pde:.1e}"));
    }
    let r = 0.9 * FRAC_PI_6;
    let sp = spec(Family::P2, 2, 0, r);
    let tc = solve_type_coefficients(&sp);
    let smp = samples(sp, 3);
    let cubic = type_pde_residual(&smp, &tc, &CenterChoice::Quadric).unwrap();
    let alpha = 2.0 / (2.0 * r).tan();
    let (p, q, rr) = class_b_cubic(2, 1.0, alpha * alpha);
    t.add(
        tc.verdict == TypeVerdict::ThreeType && tc.p == Some(p) && tc.q == Some(q) && tc.r == Some(rr) && cubic <= 1e-3,
        format!("cubic at r={r:.6} {cubic:.1e}"),
    );
    let fit = order_two_fit(&smp).unwrap();
    t.add(fit.residual > 1e-2, format!("best order-2 fit {:.1e}", fit.residual));
    t.finish()
}

fn horosphere() -> Outcome {
    let mut t = Tally::default();
    let sp = spec(Family::H3, 2, 0, 0.0);
    let smp = samples(sp, 2);
    let d2: Vec<&DVector<f64>> = smp.iter().map(|s| s.d2.as_ref().unwrap()).collect();
    let scale = d2.iter().fold(0.0f64, |m, v| m.max(v.amax()));
    let spread = d2.iter().fold(0.0f64, |m, v| m.max((*v - d2[0]).amax())) / scale;
    t.add(spread <= 1e-5, format!("spread {spread:.1e}"));
    let mut worst = 0.0f64;
    let mut norm = f64::INFINITY;
    for (i, v) in d2.iter().enumerate() {
        let chart = Chart::new(sp, SEED + i as u64);
        let cf = closed_form_fields(&shape_operator(&chart, &[0.0; 7]).unwrap()).unwrap();
        let want = cf.sums.xi.scale(96.0).axpy(48.0, &cf.sums.sigma_xi);
        let want = DVector::from_vec(want.to_reals());
        worst = worst.max((*v - &want).amax() / want.amax());
        norm = norm.min(v.norm());
    }
    t.add(worst <= 1e-5 && norm >= 1.0, format!("vs 48[2ξ+σ(ξ,ξ)] {worst:.1e}, min norm {norm:.2}"));
    let fit = one_type_fit(&smp).unwrap();
    t.add(fit.residual > 1e-2, format!("1-type fit {:.1e}", fit.residual));
    t.add(
        solve_type_coefficients(&sp).verdict == TypeVerdict::InfiniteType,
        "verdict infinite-type".to_string(),
    );
    t.finish()
}

fn worst_center_offset(sp: FamilySpec) -> f64 {
    let tc = solve_type_coefficients(&sp);
    (0..3)
        .map(|i| {
            let chart = Chart::new(sp, SEED + i);
            spectral_decomposition(&chart, &vec![0.0; chart.n()], &tc).unwrap()
        })
        .fold(0.0f64, |m, d| m.max(d.center_offset()).max(d.reconstruction_residual()))
}

fn least_center_offset(sp: FamilySpec) -> f64 {
    let tc = solve_type_coefficients(&sp);
    (0..3)
        .map(|i| {
            let chart = Chart::new(sp, SEED + i);
            spectral_decomposition(&chart, &vec![0.0; chart.n()], &tc).unwrap().center_offset()
        })
        .fold(f64::INFINITY, f64::min)
}

fn mass_symmetry() -> Outcome {
    let mut t = Tally::default();
    let sphere = worst_center_offset(spec(Family::P1k, 4, 0, 2.0f64.atan()));
    t.add(sphere <= 1e-8, format!("sphere m=4 {sphere:.1e}"));
    let a = worst_center_offset(spec(Family::P1k, 3, 1, FRAC_PI_4));
    t.add(a <= 1e-6, format!("A2 case (a) {a:.1e}"));
    for m in 3..=4 {
        for k in 1..m - 1 {
            let radius = special_radii(Family::P1k, m, k)
                .unwrap()
                .into_iter()
                .find(|s| s.label == RadiusLabel::TwoTypeB)
                .unwrap()
                .radius;
            let b = least_center_offset(spec(Family::P1k, m, k, radius));
            t.add(b > 1e-3, format!("A2 case (b) m={m} k={k} {b:.1e}"));
        }
    }
    t.finish()
}

fn minimality() -> Outcome {
    let mut t = Tally::default();
    let mut worst = 0.0f64;
    for (f, m, k) in [
        (Family::P1k, 2, 0),
        (Family::P1k, 3, 0),
        (Family::P1k, 4, 0),
        (Family::P1k, 3, 2),
        (Family::P1k, 3, 1),
        (Family::P1k, 4, 1),
        (Family::P1k, 5, 2),
        (Family::P2, 2, 0),
        (Family::P2, 3, 0),
    ] {
        let closed = special_radii(f, m, k)
            .unwrap()
            .into_iter()
            .find(|s| s.label == RadiusLabel::Minimal)
            .map(|s| s.radius);
        let root = minimal_radius_bisect(f, m, k).unwrap();
        match (closed, root) {
            (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
            _ => worst = f64::INFINITY,
        }
    }
    t.add(worst <= 1e-10, format!("f-roots vs closed forms {worst:.1e}"));
    let sp = spec(Family::P1k, 3, 1, FRAC_PI_4);
    let chart = Chart::new(sp, SEED);
    let frame = shape_operator(&chart, &[0.0; 11]).unwrap();
    let f = scalar_invariants(&frame).f;
    let spectrum: Vec<usize> = frame.spectrum.iter().map(|(_, k)| *k).collect();
    let equal = spectrum == [4, 3, 4]
        && (frame.spectrum[0].0 + 1.0).abs() < 1e-9
        && (frame.spectrum[2].0 - 1.0).abs() < 1e-9;
    t.add(f.abs() <= 1e-9 && equal, format!("|f| {:.1e}, spectrum {:?}", f.abs(), frame.spectrum));
    let tc = solve_type_coefficients(&sp);
    let pde = type_pde_residual(&samples(sp, 2), &tc, &CenterChoice::Estimated).unwrap();
    t.add(tc.verdict == TypeVerdict::TwoType && pde <= 1e-4, format!("2-type PDE {pde:.1e}"));
    t.finish()
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("embedding identities", embedding_identities),
        ("principal curvature table", principal_curvature_table),
        ("Beltrami formula", beltrami_check),
        ("sphere 2-type", sphere_two_type),
        ("1-type inclusion and exclusion", one_type),
        ("A2 two-type radii", a2_radii),
        ("class B", class_b),
        ("horosphere", horosphere),
        ("mass-symmetry", mass_symmetry),
        ("minimality", minimality),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name} ({secs:.1}s): {detail}", i + 1);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
