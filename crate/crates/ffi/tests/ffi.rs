use std::ffi::{CStr, CString};
use std::ptr;

use coded_shuffle_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cs_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn golden_run_through_the_c_abi() {
    unsafe {
        let cfg = cs_config_new(3, 6, 2, 3);
        assert!(!cfg.is_null());
        let mut report = ptr::null_mut();
        assert_eq!(cs_run(cfg, &mut report), CsStatus::Ok);
        let mut loads = CsLoads::default();
        assert_eq!(cs_report_loads(report, &mut loads), CsStatus::Ok);
        assert_eq!(loads.uplink_bits, 192);
        assert_eq!(loads.downlink_bits, 128);
        assert_eq!(loads.l_u, 0.5);
        assert_eq!(loads.l_d, 1.0 / 3.0);
        assert_eq!(loads.padding_bits_up + loads.padding_bits_down, 0);
        let mut users = 0;
        assert_eq!(cs_report_verified_users(report, &mut users), CsStatus::Ok);
        assert_eq!(users, 3);
        cs_report_free(report);
        cs_config_free(cfg);
    }
}

#[test]
fn setters_change_the_run() {
    unsafe {
        let cfg = cs_config_new(3, 6, 1, 2);
        let mu = CString::new("2/3").unwrap();
        assert_eq!(cs_config_set_mu(cfg, mu.as_ptr()), CsStatus::Ok);
        assert_eq!(cs_config_set_baseline(cfg, CsBaseline::Uncoded), CsStatus::Ok);
        assert_eq!(cs_config_set_value_bits(cfg, 32), CsStatus::Ok);
        assert_eq!(cs_config_set_seed(cfg, 11), CsStatus::Ok);
        let mut report = ptr::null_mut();
        assert_eq!(cs_run(cfg, &mut report), CsStatus::Ok);
        let mut loads = CsLoads::default();
        cs_report_loads(report, &mut loads);
        assert_eq!((loads.l_u, loads.l_d), (1.0, 1.0));
        cs_report_free(report);

        assert_eq!(cs_config_set_baseline(cfg, CsBaseline::Coded), CsStatus::Ok);
        assert_eq!(cs_config_set_downlink(cfg, CsDownlink::Forward), CsStatus::Ok);
        assert_eq!(cs_run(cfg, &mut report), CsStatus::Ok);
        cs_report_loads(report, &mut loads);
        assert_eq!(loads.l_d, loads.l_u);
        cs_report_free(report);

        assert_eq!(cs_config_set_placement(cfg, CsPlacement::Decentralized), CsStatus::Ok);
        assert_eq!(cs_config_set_downlink(cfg, CsDownlink::Random), CsStatus::Ok);
        assert_eq!(cs_run(cfg, &mut report), CsStatus::Ok);
        cs_report_free(report);
        cs_config_free(cfg);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        assert!(cs_config_new(3, 6, 1, 0).is_null());
        assert!(last_error().contains("denominator"));

        let cfg = cs_config_new(3, 7, 2, 3);
        let mut report = ptr::null_mut();
        assert_eq!(cs_run(cfg, &mut report), CsStatus::InvalidConfig);
        assert!(report.is_null());
        assert!(last_error().contains("file count 7"));

        let bad = CString::new("banana").unwrap();
        assert_eq!(cs_config_set_mu(cfg, bad.as_ptr()), CsStatus::InvalidArgument);
        assert_eq!(cs_config_set_mu(cfg, ptr::null()), CsStatus::NullPointer);
        assert_eq!(cs_run(ptr::null(), &mut report), CsStatus::NullPointer);
        assert_eq!(cs_run(cfg, ptr::null_mut()), CsStatus::NullPointer);
        assert_eq!(cs_config_set_seed(ptr::null_mut(), 1), CsStatus::NullPointer);
        cs_config_free(cfg);
        cs_config_free(ptr::null_mut());
        cs_report_free(ptr::null_mut());
    }
}

#[test]
fn theory_entry_points() {
    let (mut u, mut d, mut delta) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(cs_theory_centralized(4, 3, 8, &mut u, &mut d), CsStatus::Ok);
        assert_eq!((u, d), (2.0, 13.0 / 12.0));
        assert_eq!(cs_theory_centralized(4, 1, 8, &mut u, &mut d), CsStatus::InvalidArgument);
        assert_eq!(cs_theory_decentralized(4, 1, 2, &mut u, &mut d, &mut delta), CsStatus::Ok);
        assert_eq!((d, delta), (11.0 / 16.0, 1.0 / 16.0));
        assert!((u - 58.0 / 48.0).abs() < 1e-15);
        assert_eq!(
            cs_theory_decentralized(4, 1, 0, &mut u, &mut d, &mut delta),
            CsStatus::InvalidArgument
        );
        let v = CStr::from_ptr(cs_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/coded_shuffle.h")).unwrap();
    for name in [
        "cs_last_error",
        "cs_version",
        "cs_config_new",
        "cs_config_free",
        "cs_config_set_value_bits",
        "cs_config_set_seed",
        "cs_config_set_placement",
        "cs_config_set_downlink",
        "cs_config_set_baseline",
        "cs_config_set_mu",
        "cs_run",
        "cs_report_free",
        "cs_report_loads",
        "cs_report_verified_users",
        "cs_theory_centralized",
        "cs_theory_decentralized",
        "typedef struct CsConfig CsConfig;",
        "typedef struct CsReport CsReport;",
        "CS_STATUS_VERIFICATION_FAILED = 3",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
