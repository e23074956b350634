use sclab_core::chain::ChainModel;
use sclab_core::codes::two_terminal::{run_rd_experiment, Epsilons, RdProblem, ReconstructionMap};
use sclab_core::prob::ProbabilityTable;

#[test]
#[ignore]
fn probe_sw_exactness() {
    let source = ProbabilityTable::dsbs(0.1).unwrap();
    let model = ChainModel::with_identity_aux(&source, 1).unwrap();
    let psi = ReconstructionMap::identity_blocks(2, 2, 1).unwrap();
    for (typ, s1, s4) in [
        (0.20f64, 0.125f64, 0.125f64),
        (0.25, 0.125, 0.125),
        (0.25, 0.1875, 0.125),
        (0.30, 0.125, 0.125),
        (0.50, 0.25, 0.25),
    ] {
        let eps = Epsilons { typicality: typ, sizing1: s1, sizing4: s4 };
        let t0 = std::time::Instant::now();
        let points = run_rd_experiment(
            RdProblem::SlepianWolf, &model, &psi, None, &eps, &[16], 4000, 11, 1 << 26,
        );
        match points {
            Ok(points) => {
                let p = &points[0];
                println!(
                    "eps'={typ} e1={s1} e4={s4}: exact={:.4} success={:.4} symErr={:.4} r=({:.3},{:.3}) ({} ms)",
                    1.0 - p.error_rate, p.success_rate, p.measured_d, p.r1, p.r2,
                    t0.elapsed().as_millis()
                );
            }
            Err(e) => println!("eps'={typ} e1={s1} e4={s4}: {e}"),
        }
    }
}
