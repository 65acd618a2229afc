//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Run with `cargo test -p ebcert-core --test acceptance`.

use std::time::Instant;

use ebcert_core::algebra::{bilinear_residual, multiplicative_domain, MatrixAlgebra};
use ebcert_core::certify::{certify, ppt_check, schur_normal_form, EbCertificate};
use ebcert_core::channel::ChoiClass;
use ebcert_core::numerics::{
    c64, frobenius, ginibre, hermitian_eig, identity, outer, random_hermitian_in_span,
    random_isometry_with, random_unit_vector, random_unitary, rng_from_seed, singular_values,
    ComplexMatrix, ComplexVector, ToleranceConfig,
};
use ebcert_core::zoo::{
    depolarizing, random_channel, random_projection_choi_channel, random_unit_vectors,
    random_unitary_mixture, schur_channel, schur_complement_channel, twirl_external,
    twirl_internal, werner_holevo, CorrelationMatrix, ProjectionChoiFamily,
};
use ebcert_core::{Error, KrausChannel};
use rand::seq::SliceRandom;
use rand::Rng;

const RESIDUAL_BOUND: f64 = 1e-8;
const GRAM_MODULI_BOUND: f64 = 1e-7;
const ALPHA_BOUND: f64 = 1e-9;
const RUNTIME_BUDGET_SECS: f64 = 30.0;
const WITNESS_SEARCH_ZERO: f64 = 1e-6;

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

type Check = fn() -> Outcome;

fn main() {
    let checks: [(&str, Check); 8] = [
        ("EB rank equals Choi rank on Schur-complement channels", criterion_1),
        ("Schur normal form recovers Gram moduli under twirls", criterion_2),
        ("projection Choi iff complement is unital", criterion_3),
        ("Werner-Holevo, depolarizing and identity Choi data", criterion_4),
        ("brute-force witness search agrees with certify", criterion_5),
        ("multiplicative-domain properties", criterion_6),
        ("structure recognition under unitary conjugation", criterion_7),
        ("invariance under Kraus permutation and re-dilation", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        if !outcome.pass {
            failed += 1;
        }
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {} [{verdict}] {name}: {}", i + 1, outcome.detail);
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(0xa1);
    let mut bad = Vec::new();
    let mut worst = 0.0_f64;
    for case in 0..100u64 {
        let n = rng.random_range(2..=8);
        let m = rng.random_range(2..=8);
        let ch = schur_complement_channel(&random_unit_vectors(n, m, 1000 + case), &tol()).unwrap();
        match certify(&ch, &tol()) {
            Ok(cert) => {
                worst = worst.max(cert.residuals.max());
                if cert.eb_rank != n || cert.choi_rank != n || cert.residuals.max() > RESIDUAL_BOUND {
                    bad.push(format!("case {case} ({n}x{m}): eb_rank {} choi_rank {}", cert.eb_rank, cert.choi_rank));
                }
            }
            Err(e) => bad.push(format!("case {case} ({n}x{m}): {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = bad.is_empty() && secs < RUNTIME_BUDGET_SECS;
    Outcome::new(
        pass,
        format!(
            "100 instances, {} failures, worst residual {worst:.2e} (bound {RESIDUAL_BOUND:.0e}), {secs:.2}s (budget {RUNTIME_BUDGET_SECS}s){}",
            bad.len(),
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    )
}

/// Index `k` maximizing `|⟨basis_k, v⟩|` for every certificate vector.
fn recover_permutation(cert: &EbCertificate, frame: &ComplexMatrix) -> Option<Vec<usize>> {
    let n = frame.nrows();
    let perm: Vec<usize> = cert
        .v
        .iter()
        .map(|v| {
            let coords = frame * v;
            (0..n).max_by(|&a, &b| coords[a].norm().total_cmp(&coords[b].norm())).unwrap()
        })
        .collect();
    let mut seen = vec![false; n];
    for &k in &perm {
        if std::mem::replace(&mut seen[k], true) {
            return None;
        }
    }
    Some(perm)
}

fn gram_moduli_error(
    channel: &KrausChannel,
    frame: &ComplexMatrix,
    gram: &ComplexMatrix,
) -> Result<f64, String> {
    let cert = certify(channel, &tol()).map_err(|e| e.to_string())?;
    let nf = schur_normal_form(&cert, channel, &tol()).map_err(|e| e.to_string())?;
    let perm = recover_permutation(&cert, frame).ok_or("certificate vectors do not single out a basis")?;
    let n = gram.nrows();
    let mut err = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            err = err.max((nf.c[(i, j)].norm() - gram[(perm[i], perm[j])].norm()).abs());
        }
    }
    Ok(err)
}

fn criterion_2() -> Outcome {
    let mut rng = rng_from_seed(0xa2);
    let mut worst = 0.0_f64;
    let mut bad = Vec::new();
    for case in 0..50u64 {
        let n = rng.random_range(2..=6);
        let m = rng.random_range(2..=6);
        let us = random_unit_vectors(n, m, 2000 + case);
        let gram = ComplexMatrix::from_fn(n, n, |i, j| us[i].dotc(&us[j]));
        let ch = schur_complement_channel(&us, &tol()).unwrap();
        let (inner, v) = twirl_internal(&ch, 3000 + case).unwrap();
        let (outer_twirl, _) = twirl_external(&ch, 4000 + case).unwrap();
        let runs = [
            ("plain", &ch, identity(n)),
            ("internal", &inner, v),
            ("external", &outer_twirl, identity(n)),
        ];
        for (label, channel, frame) in runs {
            match gram_moduli_error(channel, &frame, &gram) {
                Ok(e) => {
                    worst = worst.max(e);
                    if e > GRAM_MODULI_BOUND {
                        bad.push(format!("case {case} {label}: error {e:.2e}"));
                    }
                }
                Err(e) => bad.push(format!("case {case} {label}: {e}")),
            }
        }
    }
    Outcome::new(
        bad.is_empty(),
        format!(
            "50 instances x 3 variants, worst |C| error {worst:.2e} (bound {GRAM_MODULI_BOUND:.0e}), {} failures{}",
            bad.len(),
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    )
}

fn mixed_fixtures(count: usize) -> Vec<(String, KrausChannel)> {
    let t = tol();
    let mut out = Vec::with_capacity(count);
    let mut rng = rng_from_seed(0xa3);
    let mut k = 0u64;
    while out.len() < count {
        k += 1;
        let n = rng.random_range(2..=4);
        let m = rng.random_range(2..=4);
        let fixture = match k % 10 {
            0 => ("schur-complement", schur_complement_channel(&random_unit_vectors(n, m, k), &t).unwrap()),
            1 => ("werner-holevo", werner_holevo(n, &t).unwrap()),
            2 => ("depolarizing", depolarizing(n, &t).unwrap()),
            3 => ("identity", KrausChannel::identity(n)),
            4 => ("random", random_channel(n, m, rng.random_range(1..=5).max(n.div_ceil(m)), k, &t).unwrap()),
            5 => ("unitary-mixture", random_unitary_mixture(n, rng.random_range(1..=4), k, &t).unwrap()),
            6 => (
                "projection-choi",
                random_projection_choi_channel(n, m.max(n), k, ProjectionChoiFamily::Generic, &t).unwrap(),
            ),
            7 => (
                "projection-choi-eb",
                random_projection_choi_channel(n, m, k, ProjectionChoiFamily::EntanglementBreaking, &t).unwrap(),
            ),
            8 => ("schur", schur_channel(&CorrelationMatrix::random(n, rng.random_range(1..=n), k, &t).unwrap(), &t).unwrap()),
            _ => {
                let base = schur_complement_channel(&random_unit_vectors(n, m, k), &t).unwrap();
                ("twirled-schur-complement", twirl_internal(&base, k).unwrap().0)
            }
        };
        out.push((fixture.0.to_string(), fixture.1));
    }
    out
}

fn criterion_3() -> Outcome {
    let fixtures = mixed_fixtures(200);
    let mut disagreements = Vec::new();
    let mut projections = 0;
    for (name, ch) in &fixtures {
        let class = ch.choi(&tol()).unwrap().classification;
        let residual = ch.complement(&tol()).unwrap().identity_residual();
        let is_projection = class == ChoiClass::Projection;
        projections += is_projection as usize;
        if is_projection != (residual <= RESIDUAL_BOUND) {
            disagreements.push(format!("{name}: {class}, residual {residual:.2e}"));
        }
    }
    Outcome::new(
        disagreements.is_empty(),
        format!(
            "200 fixtures ({projections} projection), {} disagreements{}",
            disagreements.len(),
            disagreements.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut bad = Vec::new();
    let mut check = |label: String, ch: KrausChannel, alpha: f64, rank: usize, scaled: bool| {
        let report = ch.choi(&tol()).unwrap();
        let got = report.alpha();
        let class_ok = match report.classification {
            ChoiClass::ScaledProjection { .. } => scaled,
            ChoiClass::Projection => !scaled,
            ChoiClass::Other => false,
        };
        let alpha_ok = got.is_some_and(|a| (a - alpha).abs() <= ALPHA_BOUND);
        if !class_ok || !alpha_ok || report.choi_rank != rank {
            bad.push(format!(
                "{label}: class {}, alpha {got:?} (want {alpha}), rank {} (want {rank})",
                report.classification, report.choi_rank
            ));
        }
    };
    for d in 2..=5 {
        check(format!("werner-holevo({d})"), werner_holevo(d, &tol()).unwrap(), 2.0 / (d + 1) as f64, d * (d + 1) / 2, true);
    }
    for n in 2..=4 {
        check(format!("depolarizing({n})"), depolarizing(n, &tol()).unwrap(), 1.0 / n as f64, n * n, true);
    }
    for n in 2..=4 {
        check(format!("identity({n})"), KrausChannel::identity(n), n as f64, 1, true);
    }
    Outcome::new(
        bad.is_empty(),
        format!(
            "4 Werner-Holevo, 3 depolarizing, 3 identity; {} mismatches{}",
            bad.len(),
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    )
}

/// Downhill simplex minimizer; returns the best point and value.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, start: &[f64], step: f64, iters: usize) -> (Vec<f64>, f64) {
    let k = start.len();
    let mut simplex: Vec<Vec<f64>> = (0..=k)
        .map(|i| {
            let mut p = start.to_vec();
            if i > 0 {
                p[i - 1] += step;
            }
            p
        })
        .collect();
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    for _ in 0..iters {
        let mut order: Vec<usize> = (0..=k).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if values[k] - values[0] < 1e-15 {
            break;
        }
        let centroid: Vec<f64> = (0..k).map(|c| simplex[..k].iter().map(|p| p[c]).sum::<f64>() / k as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..k).map(|c| centroid[c] + t * (simplex[k][c] - centroid[c])).collect() };
        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            (simplex[k], values[k]) = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < values[k - 1] {
            (simplex[k], values[k]) = (reflected, fr);
        } else {
            let contracted = along(if fr < values[k] { -0.5 } else { 0.5 });
            let fc = f(&contracted);
            if fc < values[k].min(fr) {
                (simplex[k], values[k]) = (contracted, fc);
            } else {
                for i in 1..=k {
                    simplex[i] = (0..k).map(|c| simplex[0][c] + 0.5 * (simplex[i][c] - simplex[0][c])).collect();
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=k).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    (simplex[best].clone(), values[best])
}

/// Sum over an orthonormal basis `{w_i}` of everything but the top singular
/// value of `K(w̄_i)`; zero exactly when `{w_i}` is a rank-one witness.
fn witness_defect(kraus: &[ComplexMatrix], basis: &ComplexMatrix) -> f64 {
    (0..basis.ncols())
        .map(|i| {
            let k = kraus
                .iter()
                .enumerate()
                .fold(ComplexMatrix::zeros(kraus[0].nrows(), kraus[0].ncols()), |acc, (j, kj)| {
                    acc + kj * basis[(j, i)].conj()
                });
            singular_values(&k).iter().skip(1).sum::<f64>()
        })
        .sum()
}

/// Orthonormal basis of `C^2` from `(θ, φ)`; every basis is of this form up to column phases.
fn qubit_basis(p: &[f64]) -> ComplexMatrix {
    let (s, c) = p[0].sin_cos();
    let e = c64(p[1].cos(), p[1].sin());
    ComplexMatrix::from_row_slice(2, 2, &[c64(c, 0.0), -e.conj() * s, e * s, c64(c, 0.0)])
}

fn qubit_witness_search(kraus: &[ComplexMatrix]) -> f64 {
    let f = |p: &[f64]| witness_defect(kraus, &qubit_basis(p));
    let mut grid = Vec::new();
    for a in 0..=48 {
        for b in 0..96 {
            let p = [a as f64 * std::f64::consts::FRAC_PI_2 / 48.0, b as f64 * std::f64::consts::TAU / 96.0];
            grid.push((f(&p), p));
        }
    }
    grid.sort_by(|x, y| x.0.total_cmp(&y.0));
    grid.iter()
        .take(6)
        .map(|(_, p)| nelder_mead(&f, p, 0.05, 4000).1)
        .fold(f64::INFINITY, f64::min)
}

/// Unitary `exp(iH)` from the 9 real parameters of a Hermitian `H`.
fn qutrit_unitary(p: &[f64]) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(3, 3);
    h[(0, 0)] = c64(p[0], 0.0);
    h[(1, 1)] = c64(p[1], 0.0);
    h[(2, 2)] = c64(p[2], 0.0);
    for (k, (i, j)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
        h[(i, j)] = c64(p[3 + 2 * k], p[4 + 2 * k]);
        h[(j, i)] = h[(i, j)].conj();
    }
    let eig = hermitian_eig(&h, &tol()).unwrap();
    let phases = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
        3,
        eig.values.iter().map(|&x| c64(x.cos(), x.sin())),
    ));
    &eig.vectors * phases * eig.vectors.adjoint()
}

fn qutrit_witness_search(kraus: &[ComplexMatrix], seed: u64) -> f64 {
    let f = |p: &[f64]| witness_defect(kraus, &qutrit_unitary(p));
    let mut rng = rng_from_seed(seed);
    (0..12)
        .map(|_| {
            let start: Vec<f64> = (0..9).map(|_| rng.random_range(-3.0..3.0)).collect();
            nelder_mead(&f, &start, 0.5, 6000).1
        })
        .fold(f64::INFINITY, f64::min)
}

fn criterion_5() -> Outcome {
    let mut disagreements = Vec::new();
    let (mut eb, mut not_eb, mut ppt_confirmed) = (0, 0, 0);
    let mut worst_eb_defect = 0.0_f64;
    for case in 0..20u64 {
        let family = if case % 2 == 0 { ProjectionChoiFamily::Generic } else { ProjectionChoiFamily::EntanglementBreaking };
        let ch = random_projection_choi_channel(2, 2, 5000 + case, family, &tol()).unwrap();
        let minimal = ch.minimal_kraus(&tol()).unwrap();
        let defect = qubit_witness_search(minimal.kraus());
        let brute_eb = defect <= WITNESS_SEARCH_ZERO;
        let verdict = certify(&ch, &tol());
        let certified = match &verdict {
            Ok(_) => true,
            Err(Error::NotEntanglementBreaking(_)) => false,
            Err(e) => {
                disagreements.push(format!("case {case}: certify errored: {e}"));
                continue;
            }
        };
        if certified {
            eb += 1;
            worst_eb_defect = worst_eb_defect.max(defect);
        } else {
            not_eb += 1;
            if !ppt_check(&ch, &tol()).unwrap().is_ppt {
                ppt_confirmed += 1;
            }
        }
        if brute_eb != certified {
            disagreements.push(format!("case {case} ({family:?}): search defect {defect:.2e}, certified {certified}"));
        }
    }
    // the 2x2 class has no refutable members, so refutations are exercised on qutrits
    let mut qutrit_refuted = 0;
    let mut qutrit_npt = 0;
    let mut qutrit_min_defect = f64::INFINITY;
    for case in 0..3u64 {
        let ch = random_projection_choi_channel(3, 3, 6000 + case, ProjectionChoiFamily::Generic, &tol()).unwrap();
        let defect = qutrit_witness_search(ch.minimal_kraus(&tol()).unwrap().kraus(), 7000 + case);
        qutrit_min_defect = qutrit_min_defect.min(defect);
        match certify(&ch, &tol()) {
            Err(Error::NotEntanglementBreaking(_)) => {
                qutrit_refuted += 1;
                qutrit_npt += !ppt_check(&ch, &tol()).unwrap().is_ppt as usize;
                if defect <= WITNESS_SEARCH_ZERO {
                    disagreements.push(format!("qutrit case {case}: refuted but search defect {defect:.2e}"));
                }
            }
            Ok(_) if defect > WITNESS_SEARCH_ZERO => {
                disagreements.push(format!("qutrit case {case}: certified but search defect {defect:.2e}"));
            }
            Ok(_) => {}
            Err(e) => disagreements.push(format!("qutrit case {case}: {e}")),
        }
    }
    Outcome::new(
        disagreements.is_empty(),
        format!(
            "20 qubit instances: {eb} EB (worst search defect {worst_eb_defect:.1e}), {not_eb} not EB ({ppt_confirmed} NPT-confirmed); \
             3 qutrit instances: {qutrit_refuted} refuted, {qutrit_npt} NPT-confirmed, min search defect {qutrit_min_defect:.2e}; {} disagreements{}",
            disagreements.len(),
            disagreements.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    )
}

fn unital_fixtures() -> Vec<(String, KrausChannel)> {
    let t = tol();
    let mut rng = rng_from_seed(0xa6);
    (0..100u64)
        .map(|k| {
            let d = rng.random_range(2..=4);
            match k % 5 {
                0 => ("unitary-conjugation".to_string(), KrausChannel::new(vec![random_unitary(d, k)], &t).unwrap()),
                1 => ("depolarizing".to_string(), depolarizing(d, &t).unwrap()),
                2 => ("unitary-mixture".to_string(), random_unitary_mixture(d, rng.random_range(2..=4), k, &t).unwrap()),
                3 => (
                    "schur".to_string(),
                    schur_channel(&CorrelationMatrix::random(d, rng.random_range(1..=d), k, &t).unwrap(), &t).unwrap(),
                ),
                _ => {
                    let ch = schur_complement_channel(&random_unit_vectors(d, d, k), &t).unwrap();
                    ("complement-adjoint".to_string(), ch.complement(&t).unwrap().adjoint().into_channel(&t).unwrap())
                }
            }
        })
        .collect()
}

fn projection_residual(psi: &KrausChannel, p: &ComplexMatrix) -> f64 {
    let q = psi.apply(p).unwrap();
    frobenius(&(&q * &q - &q))
}

/// Spectral projections of a random Hermitian element of `alg`.
fn projections_in(alg: &MatrixAlgebra, seed: u64) -> Vec<ComplexMatrix> {
    let h = random_hermitian_in_span(alg.basis(), seed).unwrap();
    let eig = hermitian_eig(&h, &tol()).unwrap();
    let d = alg.ambient_dim();
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=d {
        if k == d || (eig.values[k - 1] - eig.values[k]).abs() > 1e-6 {
            let p = (start..k).fold(ComplexMatrix::zeros(d, d), |acc, i| acc + outer(&eig.vector(i), &eig.vector(i)));
            out.push(p);
            start = k;
        }
    }
    out
}

fn criterion_6() -> Outcome {
    let mut bad = Vec::new();
    let mut worst = 0.0_f64;
    let (mut inside, mut outside, mut outside_detected) = (0, 0, 0);
    let mut cd_dim = None;
    let mut conj_dims_ok = true;
    for (k, (name, psi)) in unital_fixtures().into_iter().enumerate() {
        let d = psi.input_dim();
        let alg = match multiplicative_domain(&psi, &tol()) {
            Ok(a) => a,
            Err(e) => {
                bad.push(format!("{name} #{k}: {e}"));
                continue;
            }
        };
        let closure = alg.closure_residuals();
        worst = worst.max(closure.max());
        if closure.max() > RESIDUAL_BOUND {
            bad.push(format!("{name} #{k}: closure {closure:?}"));
        }
        let mut rng = rng_from_seed(0x600 + k as u64);
        for a in alg.basis() {
            for _ in 0..10 {
                let x = ginibre(d, d, &mut rng);
                let r = bilinear_residual(&psi, a, &x).unwrap();
                worst = worst.max(r);
                if r > RESIDUAL_BOUND {
                    bad.push(format!("{name} #{k}: bilinear residual {r:.2e}"));
                }
            }
        }
        for p in projections_in(&alg, 0x700 + k as u64) {
            inside += 1;
            let r = projection_residual(&psi, &p);
            worst = worst.max(r);
            if r > RESIDUAL_BOUND {
                bad.push(format!("{name} #{k}: image of an in-domain projection off by {r:.2e}"));
            }
        }
        if alg.dim() < d * d {
            let u = random_unit_vector(d, &mut rng);
            let p = outer(&u, &u);
            if alg.projection_residual(&p) > 1e-3 {
                outside += 1;
                outside_detected += (projection_residual(&psi, &p) > RESIDUAL_BOUND) as usize;
            }
        }
        match name.as_str() {
            "depolarizing" if cd_dim.is_none_or(|x| x == 1) => cd_dim = Some(alg.dim()),
            "unitary-conjugation" => conj_dims_ok &= alg.dim() == d * d,
            _ => {}
        }
    }
    if cd_dim != Some(1) {
        bad.push(format!("completely depolarizing domain dimension {cd_dim:?}"));
    }
    if !conj_dims_ok {
        bad.push("unitary-conjugation domain is not all of M_d".into());
    }
    if outside_detected != outside {
        bad.push(format!("{} of {outside} out-of-domain projections mapped to projections", outside - outside_detected));
    }
    Outcome::new(
        bad.is_empty(),
        format!(
            "100 fixtures, worst residual {worst:.2e} (bound {RESIDUAL_BOUND:.0e}), {inside} in-domain projections, \
             {outside_detected}/{outside} out-of-domain projections detected; {} failures{}",
            bad.len(),
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    )
}

fn criterion_7() -> Outcome {
    type Blocks = Vec<(usize, usize)>;
    let cases: [(&str, Blocks, Blocks); 5] = [
        ("diagonal", vec![(1, 1); 4], vec![(1, 1); 4]),
        ("full", vec![(1, 4)], vec![(1, 4)]),
        ("I_2 (x) M_2", vec![(2, 2)], vec![(2, 2)]),
        ("M_2 + M_3", vec![(1, 2), (1, 3)], vec![(1, 3), (1, 2)]),
        ("I_3 (x) M_1 + M_2", vec![(3, 1), (1, 2)], vec![(1, 2), (3, 1)]),
    ];
    let mut bad = Vec::new();
    let mut runs = 0;
    for (name, blocks, expected) in &cases {
        let alg = MatrixAlgebra::standard_form(blocks);
        let d = alg.ambient_dim();
        for k in 0..20u64 {
            let u = random_unitary(d, 0x7000 + k);
            let conj = alg.conjugate(&u).unwrap();
            let t = tol().with_seed(0x8000 + 97 * k);
            runs += 1;
            match conj.structure(&t) {
                Ok(s) if &s.pairs() == expected => {}
                Ok(s) => bad.push(format!("{name} #{k}: {:?}", s.pairs())),
                Err(e) => bad.push(format!("{name} #{k}: {e}")),
            }
        }
    }
    Outcome::new(
        bad.is_empty(),
        format!(
            "5 algebras x 20 conjugations ({runs} runs), {} mismatches{}",
            bad.len(),
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    )
}

#[derive(Debug, PartialEq)]
enum Verdict {
    Certified(usize),
    Refuted(Vec<(usize, usize)>),
    OutOfScope,
}

fn verdict(ch: &KrausChannel) -> Result<Verdict, Error> {
    match certify(ch, &tol()) {
        Ok(c) => Ok(Verdict::Certified(c.eb_rank)),
        Err(Error::NotEntanglementBreaking(s)) => Ok(Verdict::Refuted(s.pairs())),
        Err(Error::OutOfScope(_)) => Ok(Verdict::OutOfScope),
        Err(e) => Err(e),
    }
}

fn criterion_8() -> Outcome {
    let t = tol();
    let mut rng = rng_from_seed(0xa8);
    let mut flips = Vec::new();
    let mut tally = [0usize; 3];
    for k in 0..50u64 {
        let n = rng.random_range(2..=4);
        let m = rng.random_range(2..=4);
        let ch = match k % 5 {
            0 | 1 => schur_complement_channel(&random_unit_vectors(n, m, k), &t).unwrap(),
            2 => random_projection_choi_channel(n, m, k, ProjectionChoiFamily::EntanglementBreaking, &t).unwrap(),
            3 => random_projection_choi_channel(n, m.max(n), k, ProjectionChoiFamily::Generic, &t).unwrap(),
            _ => random_channel(n, m, rng.random_range(1..=4).max(n.div_ceil(m)), k, &t).unwrap(),
        };
        let base = match verdict(&ch) {
            Ok(v) => v,
            Err(e) => {
                flips.push(format!("#{k}: {e}"));
                continue;
            }
        };
        tally[match base {
            Verdict::Certified(_) => 0,
            Verdict::Refuted(_) => 1,
            Verdict::OutOfScope => 2,
        }] += 1;

        let mut order: Vec<usize> = (0..ch.kraus().len()).collect();
        order.shuffle(&mut rng);
        let permuted = ch.permuted(&order).unwrap();

        let minimal = ch.minimal_kraus(&t).unwrap();
        let r = minimal.kraus().len();
        let w = random_isometry_with(r + rng.random_range(1..=3), r, &mut rng);
        let redilated = minimal.remix(&w).unwrap();

        for (label, variant) in [("permuted", permuted), ("re-dilated", redilated)] {
            match verdict(&variant) {
                Ok(v) if v == base => {}
                Ok(v) => flips.push(format!("#{k} {label}: {base:?} became {v:?}")),
                Err(e) => flips.push(format!("#{k} {label}: {e}")),
            }
        }
    }
    Outcome::new(
        flips.is_empty(),
        format!(
            "50 instances ({} certified, {} refuted, {} out of scope) x 2 variants, {} flips{}",
            tally[0],
            tally[1],
            tally[2],
            flips.len(),
            flips.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    )
}
