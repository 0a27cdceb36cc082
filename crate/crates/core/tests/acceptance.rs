//! Acceptance gate: one test per shipped guarantee, each ending in a single
//! `acceptance check N: pass` line. Shared fixtures (the default sweep and
//! the eight desk-scale solutions) are computed once per process.

use std::sync::LazyLock;
use std::time::{Duration, Instant};

use morseham_core::constants::{
    K_MAX, NEG_EIG_TOL, ORACLE_NODES, RNG_SEED, SINGULAR_CUTOFF_REL, SPECTRAL_NODES,
    TEST_FN_COUNT, TIE_TOL,
};
use morseham_core::domain::Domain;
use morseham_core::harness::{sweep, SweepConfig};
use morseham_core::model::HamiltonianModel;
use morseham_core::morse::{
    angular_cutoff, beltrami_eigenvalue, beltrami_multiplicity, beltrami_multiplicity_oracle,
};
use morseham_core::nodal::{extract_nodal_data, verify_profile};
use morseham_core::oracle::{
    coupled_spectrum, derivative_pair_check, quad_form_identity_gap, test_function_estimates,
};
use morseham_core::report::{load_report, RunReport, SweepRow};
use morseham_core::shooting::{find_solution, RadialSolution, ShootParams};
use morseham_core::sturm::{eigen_solve, singular_spectrum, SturmProblem};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PI: f64 = std::f64::consts::PI;

struct SweepFixture {
    rows: Vec<SweepRow>,
    reports: Vec<RunReport>,
    elapsed: Duration,
    _dir: tempfile::TempDir,
}

/// The default grid: p = q in {2, 3}, N in {2, 3}, m in {1, 2}, unit ball.
static SWEEP: LazyLock<SweepFixture> = LazyLock::new(|| {
    let dir = tempfile::tempdir().unwrap();
    let config = SweepConfig::default_grid();
    let started = Instant::now();
    let rows = sweep(&config, dir.path(), 0).unwrap();
    let elapsed = started.elapsed();
    let reports = (0..rows.len())
        .map(|i| load_report(&dir.path().join(format!("cell_{i:03}/report.json"))).unwrap())
        .collect();
    SweepFixture { rows, reports, elapsed, _dir: dir }
});

/// The eight solutions behind the default sweep, at full resolution.
static SOLUTIONS: LazyLock<Vec<RadialSolution>> = LazyLock::new(|| {
    let mut out = Vec::new();
    for pq in [2.0, 3.0] {
        let model = HamiltonianModel::lane_emden(pq, pq).unwrap();
        for dim in [2u32, 3] {
            let domain = Domain::ball(1.0, dim).unwrap();
            for m in [1usize, 2] {
                out.push(find_solution(&model, &domain, m, 1, &ShootParams::default()).unwrap());
            }
        }
    }
    out
});

fn cubic_ball_solution(m: usize) -> &'static RadialSolution {
    SOLUTIONS
        .iter()
        .find(|s| {
            s.m == m && s.domain.dim == 3 && s.model.lane_emden_exponents() == Some((3.0, 3.0))
        })
        .expect("fixture covers (3,3), N=3, m=1,2")
}

#[test]
fn acceptance_check_01_closed_form_spectra() {
    let started = Instant::now();
    let zero = |_: f64| 0.0;

    let ball = Domain::ball(1.0, 3).unwrap();
    let res = eigen_solve(&SturmProblem::regular(&ball, &zero), 5, SPECTRAL_NODES).unwrap();
    for (k, pair) in res.pairs.iter().enumerate() {
        let exact = (((k + 1) as f64) * PI).powi(2);
        let rel = (pair.value - exact).abs() / exact;
        assert!(rel <= 1e-6, "ball k={}: value {} vs {exact}, rel {rel:e}", k + 1, pair.value);
    }

    let annulus = Domain::annulus(0.5, 1.0, 3).unwrap();
    let res = eigen_solve(&SturmProblem::regular(&annulus, &zero), 5, SPECTRAL_NODES).unwrap();
    for (k, pair) in res.pairs.iter().enumerate() {
        let exact = (2.0 * ((k + 1) as f64) * PI).powi(2);
        let rel = (pair.value - exact).abs() / exact;
        assert!(rel <= 1e-6, "annulus k={}: value {} vs {exact}, rel {rel:e}", k + 1, pair.value);
    }

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(5), "closed-form spectra took {elapsed:?}");
    println!(
        "acceptance check 1: pass - zero-potential spectra match k^2 pi^2 (ball) and (2k pi)^2 \
         (annulus) within 1e-6 relative in {elapsed:.2?}"
    );
}

#[test]
fn acceptance_check_02_decoupling_oracle() {
    for m in [1usize, 2] {
        let sol = cubic_ball_solution(m);
        for singular in [false, true] {
            let spec = coupled_spectrum(sol, singular, K_MAX, ORACLE_NODES).unwrap();
            assert!(
                spec.union_gap <= 1e-8,
                "m={m} singular={singular}: coupled vs merged scalar gap {:e}",
                spec.union_gap
            );
        }
        let reg = coupled_spectrum(sol, false, K_MAX, ORACLE_NODES).unwrap();
        let norm = |xs: &[f64]| xs.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut negatives = 0usize;
        for (value, (phi, psi)) in reg.values.iter().zip(&reg.vectors) {
            if *value >= -NEG_EIG_TOL {
                continue;
            }
            let diff: Vec<f64> = phi.iter().zip(psi).map(|(a, b)| a - b).collect();
            let rel = norm(&diff) / norm(phi);
            assert!(rel <= 1e-6, "m={m} eigenvalue {value}: |phi - psi| / |phi| = {rel:e}");
            negatives += 1;
        }
        assert!(negatives >= 1, "m={m}: no negative coupled eigenvalue to test");
    }
    println!(
        "acceptance check 2: pass - coupled pencil spectra equal merged scalar spectra to 1e-8 \
         and negative eigenvectors are diagonal to 1e-6 (m=1,2)"
    );
}

#[test]
fn acceptance_check_03_convexity_consequence() {
    let fx = &*SWEEP;
    let mut convex_runs = 0usize;
    for (row, report) in fx.rows.iter().zip(&fx.reports) {
        assert_eq!(row.status, "ok", "cell (p={}, q={}, N={}, m={})", row.p, row.q, row.dim, row.m);
        let morse = report.morse.as_ref().unwrap();
        if !morse.convexity.convex {
            continue;
        }
        let spectra = report.spectra.as_ref().unwrap();
        assert!(
            spectra.b_pointwise_min >= -1e-12,
            "cell (p={}, q={}, N={}, m={}): min b = {:e}",
            row.p,
            row.q,
            row.dim,
            row.m,
            spectra.b_pointwise_min
        );
        assert_eq!(
            spectra.b.negative_count, 0,
            "cell (p={}, q={}, N={}, m={}): negative b-eigenvalues",
            row.p, row.q, row.dim, row.m
        );
        convex_runs += 1;
    }
    assert_eq!(convex_runs, 8, "every default-sweep model scans convex");
    println!(
        "acceptance check 3: pass - b >= -1e-12 pointwise and zero negative b-eigenvalues on \
         all {convex_runs} convex sweep runs"
    );
}

#[test]
fn acceptance_check_04_index_counting_consistency() {
    for (row, report) in SWEEP.rows.iter().zip(&SWEEP.reports) {
        let spectra = report.spectra.as_ref().unwrap();
        let morse = report.morse.as_ref().unwrap();
        assert!(spectra.a.stable_negative_count, "regular count unstable across grids");
        // Two independent routes: inertia of the regular pencil vs certified
        // below-threshold eigenvalues of the singular-weight problem.
        assert_eq!(
            spectra.a.negative_count,
            morse.lambda_hats.len(),
            "cell (p={}, q={}, N={}, m={}): regular {} vs singular {}",
            row.p,
            row.q,
            row.dim,
            row.m,
            spectra.a.negative_count,
            morse.lambda_hats.len()
        );
    }
    println!(
        "acceptance check 4: pass - negative regular and singular a-eigenvalue counts agree on \
         all 8 sweep runs"
    );
}

#[test]
fn acceptance_check_05_index_bounds_over_sweep() {
    let fx = &*SWEEP;
    assert_eq!(fx.rows.len(), 8, "default grid is 2 models x 2 dims x 2 zone counts");
    for row in &fx.rows {
        let tag = format!("cell (p={}, q={}, N={}, m={})", row.p, row.q, row.dim, row.m);
        assert_eq!(row.status, "ok", "{tag}");
        assert_eq!(row.uno, Some(true), "{tag}");
        assert_eq!(row.due, Some(true), "{tag}");
        let m_lin_rad = row.m_lin_rad.unwrap() as u64;
        let m_lin = row.m_lin.unwrap();
        let m = row.m as u64;
        let n = u64::from(row.dim);
        assert!(m_lin_rad >= m, "{tag}: m_lin_rad {m_lin_rad} < m {m}");
        assert!(
            m_lin >= m_lin_rad + (m - 1) * n && m_lin_rad + (m - 1) * n >= m + (m - 1) * n,
            "{tag}: m_lin {m_lin}, m_lin_rad {m_lin_rad}"
        );
        if row.m == 2 {
            assert_eq!(row.tre, Some(true), "{tag}");
            let hat_1 = row.lambda_hats[0];
            let margin = -(f64::from(row.dim) - 1.0) - hat_1;
            assert!(margin > 0.0, "{tag}: lambda_hat_1 = {hat_1} not strictly below -(N-1)");
            assert!(row.margin_tre.unwrap() > 0.0, "{tag}");
        }
    }
    assert!(fx.elapsed < Duration::from_secs(300), "sweep took {:?}", fx.elapsed);
    println!(
        "acceptance check 5: pass - radial and full index bounds hold on all 8 sweep runs, \
         first singular eigenvalue strictly below -(N-1) on m=2 runs, sweep in {:.2?}",
        fx.elapsed
    );
}

#[test]
fn acceptance_check_06_profile_structure() {
    for sol in SOLUTIONS.iter() {
        let tag = format!("solution ({}, N={}, m={})", sol.model, sol.domain.dim, sol.m);
        let data = extract_nodal_data(sol).unwrap();
        let report = verify_profile(&data, sol.m, sol.first_sign);
        assert!(report.all_pass, "{tag}: {report:?}");
        for name in ["zones_intersect", "zeros_interlace"] {
            let check = report.checks.iter().find(|c| c.name == name).unwrap();
            assert!(check.margin > 0.0, "{tag}: {name} margin {:e}", check.margin);
        }
    }
    println!(
        "acceptance check 6: pass - every profile check passes on all 8 solutions with \
         positive intersection and interlacing margins"
    );
}

#[test]
fn acceptance_check_07_quadratic_form_identities() {
    for sol in SOLUTIONS.iter() {
        let gap = quad_form_identity_gap(sol, TEST_FN_COUNT);
        assert!(
            gap <= 1e-10,
            "solution ({}, N={}, m={}): worst relative identity gap {gap:e}",
            sol.model,
            sol.domain.dim,
            sol.m
        );
    }
    println!(
        "acceptance check 7: pass - diagonal and antidiagonal quadratic-form identities hold \
         to 1e-10 relative for {TEST_FN_COUNT} deterministic test functions per solution"
    );
}

#[test]
fn acceptance_check_08_sphere_combinatorics() {
    // Exact multiplicities against an independent binomial evaluation.
    let binom = |n: u32, k: u32| -> BigUint {
        let mut acc = BigUint::from(1u32);
        for i in 0..u64::from(k) {
            acc = acc * BigUint::from(u64::from(n) - i) / BigUint::from(i + 1);
        }
        acc
    };
    for dim in 2u32..=10 {
        for j in 0u32..=30 {
            let expected = if j >= 2 {
                binom(dim + j - 1, j) - binom(dim + j - 3, j - 2)
            } else {
                binom(dim + j - 1, j)
            };
            let expected = u64::try_from(expected).unwrap();
            assert_eq!(beltrami_multiplicity(dim, j), expected, "N={dim} j={j}");
            assert_eq!(beltrami_multiplicity_oracle(dim, j), expected, "N={dim} j={j}");
        }
    }

    // Closed-form cutoff degree vs direct enumeration, off ties.
    let mut rng = ChaCha8Rng::seed_from_u64(RNG_SEED);
    let mut checked = 0usize;
    while checked < 10_000 {
        let dim = rng.random_range(2u32..=10);
        let lambda_hat = -rng.random_range(1e-6..60.0);
        let cutoff = angular_cutoff(dim, lambda_hat, TIE_TOL);
        if !cutoff.exact {
            continue;
        }
        let mut enumerated = None;
        let mut j = 0u32;
        while (beltrami_eigenvalue(dim, j) as f64) < -lambda_hat {
            enumerated = Some(j);
            j += 1;
        }
        assert_eq!(cutoff.enumerated, enumerated, "N={dim} lambda_hat={lambda_hat}");
        assert_eq!(
            cutoff.enumerated,
            Some(cutoff.closed_form),
            "N={dim} lambda_hat={lambda_hat}"
        );
        checked += 1;
    }
    println!(
        "acceptance check 8: pass - multiplicities match the harmonic-polynomial dimension \
         exactly (N=2..10, j=0..30); closed-form cutoff matches enumeration on 10^4 off-tie \
         samples"
    );
}

#[test]
fn acceptance_check_09_derivative_identity() {
    for m in [1usize, 2] {
        let sol = cubic_ball_solution(m);
        let pair = derivative_pair_check(sol).unwrap();
        assert!(
            pair.residual <= 1e-5,
            "m={m}: residual {:e} on {} intervals",
            pair.residual,
            pair.intervals
        );
        assert!(
            (3.5..=4.5).contains(&pair.convergence_ratio),
            "m={m}: defect ratio {} per grid doubling",
            pair.convergence_ratio
        );
    }
    println!(
        "acceptance check 9: pass - derivative-pair identity residual <= 1e-5 with ~4x decay \
         per grid doubling (m=1,2)"
    );
}

#[test]
fn acceptance_check_10_test_function_estimates() {
    for sol in SOLUTIONS.iter() {
        let tag = format!("solution ({}, N={}, m={})", sol.model, sol.domain.dim, sol.m);
        let checks = test_function_estimates(sol).unwrap();
        assert!(checks.all_pass, "{tag}: {checks:?}");
        assert_eq!(checks.nodal.len(), sol.m, "{tag}");
        for nodal in &checks.nodal {
            assert!(nodal.q_lin < 0.0, "{tag}: zone {} has Q_lin {:e}", nodal.zone, nodal.q_lin);
        }
        assert_eq!(checks.derivative.len(), sol.m - 1, "{tag}");
        for deriv in &checks.derivative {
            assert!(
                deriv.pass,
                "{tag}: interval {} stable sum {:e}",
                deriv.interval, deriv.stable_sum
            );
        }
    }
    println!(
        "acceptance check 10: pass - nodal truncations are strictly negative and derivative \
         truncations meet the weighted bound on all 8 solutions"
    );
}

#[test]
fn acceptance_check_11_hardy_floor() {
    let zero = |_: f64| 0.0;
    for dim in [3u32, 4] {
        let ball = Domain::ball(1.0, dim).unwrap();
        let hardy = ball.hardy_threshold();
        let spec = singular_spectrum(&ball, &zero, 3, SPECTRAL_NODES).unwrap();
        assert!(spec.below_threshold.is_empty(), "N={dim}: {:?}", spec.below_threshold);
        let rel = (spec.values[0] - hardy).abs() / hardy;
        assert!(rel <= 0.02, "N={dim}: extrapolated floor {} vs {hardy}", spec.values[0]);

        // Monotone in the cutoff: shrinking eps grows the domain, so the
        // lowest eigenvalue must decrease while staying above the floor.
        let eps = SINGULAR_CUTOFF_REL * ball.r_out();
        let lowest_at = |cut: f64| {
            let problem = SturmProblem::singular(&ball, cut, &zero);
            eigen_solve(&problem, 1, SPECTRAL_NODES).unwrap().pairs[0].value
        };
        let coarse = lowest_at(eps);
        let fine = lowest_at(0.5 * eps);
        assert!(fine < coarse, "N={dim}: {fine} not below {coarse}");
        assert!(fine > hardy && coarse > hardy, "N={dim}: cutoff values must stay above {hardy}");
    }
    println!(
        "acceptance check 11: pass - zero-potential singular spectra on N=3,4 balls have no \
         below-threshold values; extrapolated floor within 2% of the Hardy constant and \
         monotone in the cutoff"
    );
}
