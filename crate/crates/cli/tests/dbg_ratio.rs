use tomo_core::designs::{sample_settings, Design};
use tomo_core::fisher::{asymptotic_mse, fisher_design, weight_matrix, DesignMse};
use tomo_core::rng::derive_seed;
use tomo_core::states::{eigen_chart, equal_eigenvalue_state, haar_unitary, random_rank_r_state};

fn tr_ratio(rho: &tomo_core::states::DensityMatrix, r: usize, seed: u64) -> (f64, f64) {
    let chart = eigen_chart(rho, r).unwrap();
    let g = weight_matrix(&chart);
    let full = Design::full_pauli(4).unwrap();
    let tr_full = match asymptotic_mse(&fisher_design(&chart, &full).unwrap(), &g, 1).unwrap() {
        DesignMse::Value(v) => v,
        _ => panic!(),
    };
    let mut acc = 0.0;
    let designs = 10;
    for di in 0..designs {
        let design = sample_settings(4, 20, false, derive_seed(seed, di)).unwrap();
        match asymptotic_mse(&fisher_design(&chart, &design).unwrap(), &g, 1).unwrap() {
            DesignMse::Value(v) => acc += v,
            _ => panic!("non-identifiable"),
        }
    }
    (acc / designs as f64, tr_full)
}

#[test]
fn ratio_by_ensemble() {
    for r in [2usize, 3] {
        let mut ratios_g = vec![];
        let mut ratios_e = vec![];
        for si in 0..6u64 {
            let rho = random_rank_r_state(16, r, derive_seed(100 + r as u64, si)).unwrap();
            let (red, full) = tr_ratio(&rho, r, derive_seed(200, si));
            ratios_g.push(red / full);
            let u = haar_unitary(16, derive_seed(300 + r as u64, si)).unwrap();
            let rho0 = equal_eigenvalue_state(16, r, Some(&u)).unwrap();
            let (red, full) = tr_ratio(&rho0, r, derive_seed(400, si));
            ratios_e.push(red / full);
        }
        let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
        println!("r={r}: ginibre mean ratio {:.3}, equal-eig mean ratio {:.3}",
                 mean(&ratios_g), mean(&ratios_e));
    }
}
