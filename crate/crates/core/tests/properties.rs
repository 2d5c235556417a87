mod common;

use common::{check_closed_evolution, check_open_evolution, check_scan_determinism, DeviceCase};
use cqad::engine::Method;
use proptest::prelude::*;

prop_compose! {
    fn device_case()(
        fock in 2usize..=4,
        levels in 2usize..=3,
        g_hz in 20e3..600e3f64,
        detuning_hz in -2e6..2e6f64,
        qubit_t1 in 0.3e-6..5e-6f64,
        t2_fraction in 0.2..1.0f64,
        mech_t1 in 5e-6..1e-3f64,
        qubit_pop in 0.0..0.3f64,
        mech_pop in 0.0..0.5f64,
        duration in 0.05e-6..3e-6f64,
        state_seed in any::<u64>(),
    ) -> DeviceCase {
        DeviceCase { fock, levels, g_hz, detuning_hz, qubit_t1, t2_fraction, mech_t1, qubit_pop, mech_pop, duration, state_seed }
    }
}

fn method() -> impl Strategy<Value = Method> {
    prop_oneof![Just(Method::RungeKutta), Just(Method::Exponential)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn open_evolution_stays_physical(case in device_case(), m in method()) {
        prop_assert_eq!(check_open_evolution(&case, m), Ok(()));
    }

    #[test]
    fn closed_evolution_conserves_excitations_and_purity(case in device_case(), m in method()) {
        prop_assert_eq!(check_closed_evolution(&case, m), Ok(()));
    }

    #[test]
    fn scans_do_not_depend_on_worker_count(master in any::<u64>(), n in 1usize..12) {
        prop_assert_eq!(check_scan_determinism(master, n, &[1, 2, 5]), Ok(()));
    }
}
