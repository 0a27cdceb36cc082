//! Probe: derivative-pair defect decay across grid doublings for LE(3,3)
//! N=3 ball solutions.

use morseham_core::domain::Domain;
use morseham_core::model::HamiltonianModel;
use morseham_core::oracle::derivative_pair_residual;
use morseham_core::shooting::{find_solution, ShootParams};

fn main() {
    let model = HamiltonianModel::lane_emden(3.0, 3.0).unwrap();
    let domain = Domain::ball(1.0, 3).unwrap();
    for m in [1usize, 2] {
        let sol = find_solution(&model, &domain, m, 1, &ShootParams::default()).unwrap();
        println!("m={m}:");
        let mut prev = f64::NAN;
        let mut intervals = 2048usize;
        while intervals <= 1 << 19 {
            let d = derivative_pair_residual(&sol, intervals).unwrap();
            println!("  intervals={intervals:>7}  defect={d:.6e}  ratio={:.3}", prev / d);
            prev = d;
            intervals *= 2;
        }
    }
}
