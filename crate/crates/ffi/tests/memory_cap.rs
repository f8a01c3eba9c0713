use std::ptr;

use mplab_ffi::*;

#[test]
fn capped_allocation_reports_resource_limit() {
    unsafe {
        let mut psi = ptr::null_mut();
        mplab_set_memory_cap(1 << 10);
        let s = mplab_ising_ground_state(8, true, &mut psi);
        mplab_set_memory_cap(mplab::qcore::DEFAULT_MEMORY_CAP);
        assert_eq!(s, MplabStatus::ResourceLimit);
        assert!(psi.is_null());
        assert_eq!(mplab_ising_ground_state(8, true, &mut psi), MplabStatus::Ok);
        mplab_state_free(psi);
    }
}
