fn main() {
    use morseham_core::domain::Domain;
    use morseham_core::model::HamiltonianModel;
    use morseham_core::shooting::*;
    let domain = Domain::ball(1.0, 3).unwrap();
    let m33 = HamiltonianModel::lane_emden(3.0, 3.0).unwrap();
    for m in [1usize, 2, 3] {
        let t = std::time::Instant::now();
        let s = find_solution(&m33, &domain, m, 1, &ShootParams::default()).unwrap();
        println!("ball N=3 m={m}: alpha={:.10} res={:.3e} bc={:.3e} ({} ms)",
            s.alpha, s.residual_norm, s.bc_defect, t.elapsed().as_millis());
    }
    let a2 = Domain::annulus(0.5, 1.0, 2).unwrap();
    let m22 = HamiltonianModel::lane_emden(2.0, 2.0).unwrap();
    for m in [1usize, 2] {
        let t = std::time::Instant::now();
        match find_solution(&m22, &a2, m, 1, &ShootParams::default()) {
            Ok(s) => println!("annulus N=2 p=q=2 m={m}: res={:.3e} ({} ms)", s.residual_norm, t.elapsed().as_millis()),
            Err(e) => println!("annulus N=2 m={m} err: {e}"),
        }
    }
}
