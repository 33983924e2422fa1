use std::ffi::{CStr, CString};
use std::ptr;

use hicontrast_ffi::*;

const GEOMETRY: &str = r#"{"outer": {"kind": "rectangle", "x0": 0, "y0": 0, "x1": 1, "y1": 1},
    "inclusions": [{"kind": "disk", "cx": 0.5, "cy": 0.5, "r": 0.2}], "target_h": 0.08}"#;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = hc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn mesh() -> *mut HcMesh {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { hc_mesh_generate(c(GEOMETRY).as_ptr(), &mut m) }, HcStatus::Ok);
    m
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(hc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn mesh_round_trip() {
    let m = mesh();
    let (mut nodes, mut tris, mut incl) = (0, 0, 0);
    assert_eq!(unsafe { hc_mesh_sizes(m, &mut nodes, &mut tris, &mut incl) }, HcStatus::Ok);
    assert!(nodes > 0 && tris > nodes && incl == 1);
    let mut xy = vec![0.0; 2 * nodes];
    assert_eq!(unsafe { hc_mesh_coordinates(m, xy.as_mut_ptr(), xy.len()) }, HcStatus::Ok);
    assert!(xy.iter().all(|v| (0.0..=1.0).contains(v)));
    assert_eq!(unsafe { hc_mesh_coordinates(m, xy.as_mut_ptr(), 3) }, HcStatus::InvalidArgument);

    let dir = tempfile::tempdir().unwrap();
    let path = c(dir.path().join("m.json").to_str().unwrap());
    assert_eq!(unsafe { hc_mesh_save(m, path.as_ptr()) }, HcStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { hc_mesh_load(path.as_ptr(), &mut loaded) }, HcStatus::Ok);
    let mut again = 0;
    assert_eq!(unsafe { hc_mesh_sizes(loaded, &mut again, ptr::null_mut(), ptr::null_mut()) }, HcStatus::Ok);
    assert_eq!(again, nodes);
    unsafe {
        hc_mesh_free(loaded);
        hc_mesh_free(m);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { hc_mesh_generate(c("{").as_ptr(), &mut m) }, HcStatus::Parse);
    assert!(m.is_null());
    assert!(last_error().starts_with("geometry:"), "{}", last_error());

    let outside = GEOMETRY.replace("\"cx\": 0.5", "\"cx\": 0.95");
    assert_eq!(unsafe { hc_mesh_generate(c(&outside).as_ptr(), &mut m) }, HcStatus::Geometry);
    assert_eq!(unsafe { hc_mesh_generate(ptr::null(), &mut m) }, HcStatus::NullPointer);
    assert_eq!(unsafe { hc_mesh_generate(c(GEOMETRY).as_ptr(), ptr::null_mut()) }, HcStatus::NullPointer);

    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { hc_mesh_load(c("/nonexistent/m.json").as_ptr(), &mut loaded) }, HcStatus::Io);
    unsafe { hc_mesh_free(ptr::null_mut()) };
}

#[test]
fn expansion_matches_the_direct_solve() {
    let m = mesh();
    let mut p = ptr::null_mut();
    let source = c(r#"{"kind": "constant", "value": 1}"#);
    assert_eq!(unsafe { hc_pressure_new(m, source.as_ptr(), ptr::null(), 0.0, &mut p) }, HcStatus::Ok);
    unsafe { hc_mesh_free(m) };

    let mut n = 0;
    assert_eq!(unsafe { hc_pressure_field_len(p, &mut n) }, HcStatus::Ok);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { hc_pressure_expand(p, 4, &mut s) }, HcStatus::Ok);
    let mut count = 0;
    assert_eq!(unsafe { hc_series_num_terms(s, &mut count) }, HcStatus::Ok);
    assert_eq!(count, 5);

    let mut direct = vec![0.0; n];
    assert_eq!(unsafe { hc_pressure_solve_direct(p, 100.0, direct.as_mut_ptr(), n) }, HcStatus::Ok);
    let mut errors = Vec::new();
    for order in 0..=4 {
        let mut sum = vec![0.0; n];
        assert_eq!(unsafe { hc_series_partial_sum(s, order, 100.0, sum.as_mut_ptr(), n) }, HcStatus::Ok);
        let mut e = 0.0;
        assert_eq!(
            unsafe { hc_pressure_relative_h1_error(p, direct.as_ptr(), sum.as_ptr(), n, &mut e) },
            HcStatus::Ok
        );
        errors.push(e);
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0] || w[1] < 1e-12), "{errors:?}");
    assert!(errors[2] < 1e-4, "{errors:?}");

    let mut u0 = vec![0.0; n];
    assert_eq!(unsafe { hc_series_term(s, 0, u0.as_mut_ptr(), n) }, HcStatus::Ok);
    let mut s0 = vec![0.0; n];
    assert_eq!(unsafe { hc_series_partial_sum(s, 0, 7.0, s0.as_mut_ptr(), n) }, HcStatus::Ok);
    assert_eq!(u0, s0);

    assert_eq!(unsafe { hc_series_term(s, 9, u0.as_mut_ptr(), n) }, HcStatus::InvalidArgument);
    assert!(last_error().contains("term 9"));
    assert_eq!(unsafe { hc_series_partial_sum(s, 5, 10.0, u0.as_mut_ptr(), n) }, HcStatus::InvalidArgument);
    assert_eq!(unsafe { hc_pressure_solve_direct(p, -1.0, u0.as_mut_ptr(), n) }, HcStatus::Validation);
    unsafe {
        hc_series_free(s);
        hc_pressure_free(p);
    }
}

#[test]
fn bad_function_descriptions_are_parse_errors() {
    let m = mesh();
    let mut p = ptr::null_mut();
    let bad = c(r#"{"kind": "cubic"}"#);
    assert_eq!(unsafe { hc_pressure_new(m, bad.as_ptr(), ptr::null(), 0.0, &mut p) }, HcStatus::Parse);
    assert!(p.is_null());
    unsafe { hc_mesh_free(m) };
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/hicontrast.h")).unwrap();
    for name in ["hc_mesh_generate", "hc_pressure_expand", "hc_series_partial_sum", "hc_last_error", "HC_STATUS_OK"] {
        assert!(header.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"hicontrast.h\"\nint main(void) { HcMesh *m = 0; return hc_mesh_generate(\"{}\", &m) == HC_STATUS_OK; }\n",
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I", concat!(env!("CARGO_MANIFEST_DIR"), "/include")])
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "header does not compile"),
        Err(e) => eprintln!("no C compiler available ({e}); skipped compile check"),
    }
}
