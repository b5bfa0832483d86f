use std::ffi::{CStr, CString};
use std::ptr;

use ttpar_ffi::*;

fn last_error() -> String {
    let p = ttpar_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn random(dims: &[usize], ranks: &[usize], seed: u64) -> *mut TtparTensor {
    let mut t = ptr::null_mut();
    let s = unsafe { ttpar_tensor_random(dims.len(), dims.as_ptr(), ranks.as_ptr(), seed, &mut t) };
    assert_eq!(s, TtparStatus::TtparOk);
    t
}

fn dims_ranks(t: *const TtparTensor) -> (Vec<usize>, Vec<usize>) {
    let n = unsafe { ttpar_tensor_order(t) };
    let mut d = vec![0; n];
    let mut r = vec![0; n + 1];
    unsafe {
        assert_eq!(ttpar_tensor_dims(t, d.as_mut_ptr(), n), TtparStatus::TtparOk);
        assert_eq!(ttpar_tensor_ranks(t, r.as_mut_ptr(), n + 1), TtparStatus::TtparOk);
    }
    (d, r)
}

/// All entries, first index fastest.
fn entries(t: *const TtparTensor) -> Vec<f64> {
    let (dims, _) = dims_ranks(t);
    let total: usize = dims.iter().product();
    let mut idx = vec![0usize; dims.len()];
    let mut out = Vec::with_capacity(total);
    for _ in 0..total {
        let mut v = 0.0;
        assert_eq!(unsafe { ttpar_tensor_entry(t, idx.as_ptr(), idx.len(), &mut v) }, TtparStatus::TtparOk);
        out.push(v);
        for n in 0..dims.len() {
            idx[n] += 1;
            if idx[n] < dims[n] {
                break;
            }
            idx[n] = 0;
        }
    }
    out
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    d / b.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn arithmetic_through_handles() {
    let x = random(&[4, 5, 3], &[1, 2, 3, 1], 1);
    let y = random(&[4, 5, 3], &[1, 3, 2, 1], 2);
    let (ex, ey) = (entries(x), entries(y));
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(ttpar_add(x, y, &mut s), TtparStatus::TtparOk);
        assert_eq!(dims_ranks(s).1, vec![1, 5, 5, 1]);
        let want: Vec<f64> = ex.iter().zip(&ey).map(|(a, b)| a + b).collect();
        assert!(rel(&entries(s), &want) < 1e-14);

        let mut h = ptr::null_mut();
        assert_eq!(ttpar_hadamard(x, y, &mut h), TtparStatus::TtparOk);
        let want: Vec<f64> = ex.iter().zip(&ey).map(|(a, b)| a * b).collect();
        assert!(rel(&entries(h), &want) < 1e-14);

        let mut d = 0.0;
        assert_eq!(ttpar_dot(x, y, &mut d), TtparStatus::TtparOk);
        let want: f64 = ex.iter().zip(&ey).map(|(a, b)| a * b).sum();
        assert!((d - want).abs() < 1e-12 * want.abs().max(1.0));

        let nrm = ex.iter().map(|a| a * a).sum::<f64>().sqrt();
        for m in [TTPAR_NORM_INNERPROD, TTPAR_NORM_SYMMETRIC, TTPAR_NORM_ORTHO] {
            let mut v = 0.0;
            assert_eq!(ttpar_norm(x, m, &mut v), TtparStatus::TtparOk);
            assert!((v - nrm).abs() < 1e-12 * nrm);
        }

        let mut sc = ptr::null_mut();
        assert_eq!(ttpar_scale(x, -2.0, &mut sc), TtparStatus::TtparOk);
        let want: Vec<f64> = ex.iter().map(|a| -2.0 * a).collect();
        assert_eq!(entries(sc), want);

        for t in [x, y, s, h, sc] {
            ttpar_tensor_free(t);
        }
    }
}

#[test]
fn rounding_and_orthonormalization_on_simulated_ranks() {
    let x = random(&[6, 7, 5, 6], &[1, 3, 4, 2, 1], 3);
    let ex = entries(x);
    unsafe {
        let mut twice = ptr::null_mut();
        assert_eq!(ttpar_add(x, x, &mut twice), TtparStatus::TtparOk);
        for v in [TTPAR_ROUND_LRL, TTPAR_ROUND_LRLI, TTPAR_ROUND_RLR, TTPAR_ROUND_RLRI] {
            for np in [1, 3] {
                let mut z = ptr::null_mut();
                let mut bound = -1.0;
                assert_eq!(ttpar_round(twice, 1e-10, v, 0, np, &mut z, &mut bound), TtparStatus::TtparOk);
                assert_eq!(dims_ranks(z).1, vec![1, 3, 4, 2, 1]);
                assert!(bound >= 0.0);
                let want: Vec<f64> = ex.iter().map(|a| 2.0 * a).collect();
                assert!(rel(&entries(z), &want) < 1e-10);
                ttpar_tensor_free(z);
            }
        }
        let mut capped = ptr::null_mut();
        assert_eq!(
            ttpar_round(twice, 1e-10, TTPAR_ROUND_LRLI, 2, 2, &mut capped, ptr::null_mut()),
            TtparStatus::TtparOk
        );
        assert!(dims_ranks(capped).1.iter().all(|&r| r <= 2));

        for dir in [TTPAR_DIR_LEFT, TTPAR_DIR_RIGHT] {
            let mut o = ptr::null_mut();
            assert_eq!(ttpar_orthonormalize(x, dir, 4, &mut o), TtparStatus::TtparOk);
            assert!(rel(&entries(o), &ex) < 1e-12);
            ttpar_tensor_free(o);
        }
        ttpar_tensor_free(capped);
        ttpar_tensor_free(twice);
        ttpar_tensor_free(x);
    }
}

#[test]
fn cores_round_trip_and_files() {
    // rank-one train: entry (i, j) = u_i * v_j
    let u = [1.0, 2.0, 3.0];
    let v = [0.5, -1.0];
    let data: Vec<f64> = u.iter().chain(&v).copied().collect();
    let mut t = ptr::null_mut();
    unsafe {
        let s = ttpar_tensor_from_cores(2, [3, 2].as_ptr(), [1, 1, 1].as_ptr(), data.as_ptr(), data.len(), &mut t);
        assert_eq!(s, TtparStatus::TtparOk);
    }
    assert_eq!(entries(t), vec![0.5, 1.0, 1.5, -1.0, -2.0, -3.0]);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("t.tt").to_str().unwrap()).unwrap();
    let mut back = ptr::null_mut();
    unsafe {
        assert_eq!(ttpar_tensor_save(t, path.as_ptr()), TtparStatus::TtparOk);
        assert_eq!(ttpar_tensor_load(path.as_ptr(), &mut back), TtparStatus::TtparOk);
    }
    assert_eq!(entries(back), entries(t));
    let mut copy = ptr::null_mut();
    unsafe {
        assert_eq!(ttpar_tensor_clone(back, &mut copy), TtparStatus::TtparOk);
        ttpar_tensor_free(back);
    }
    assert_eq!(entries(copy), vec![0.5, 1.0, 1.5, -1.0, -2.0, -3.0]);
    unsafe {
        ttpar_tensor_free(copy);
        ttpar_tensor_free(t);
    }
}

#[test]
fn cost_model_values() {
    let mut c = TtparCost::default();
    let s = unsafe { ttpar_cost_estimate(TTPAR_OP_DOT, 0, 8, 256, 32, 4, 0, -1.0, -1.0, -1.0, &mut c) };
    assert_eq!(s, TtparStatus::TtparOk);
    assert_eq!(c.leading_flops, 4.0 * 8.0 * 256.0 * 32f64.powi(3) / 4.0);
    assert!(c.seconds > 0.0);
    let mut sp = 0.0;
    let s = unsafe {
        ttpar_predicted_speedup(TTPAR_OP_ROUND, TTPAR_ROUND_LRLI, 50, 200, 50, 8, 25, -1.0, -1.0, -1.0, &mut sp)
    };
    assert_eq!(s, TtparStatus::TtparOk);
    assert!(sp > 6.4 && sp <= 8.0, "{sp}");
}

#[test]
fn errors_map_to_status_codes() {
    ttpar_clear_error();
    assert!(ttpar_last_error().is_null());
    let x = random(&[4, 5], &[1, 2, 1], 1);
    let y = random(&[4, 6], &[1, 2, 1], 2);
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(ttpar_add(x, y, &mut out), TtparStatus::TtparShape);
        assert!(out.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(ttpar_add(ptr::null(), y, &mut out), TtparStatus::TtparNullPointer);
        assert!(last_error().contains("null"));
        assert_eq!(ttpar_add(x, y, ptr::null_mut()), TtparStatus::TtparShape);
        assert_eq!(ttpar_add(x, x, ptr::null_mut()), TtparStatus::TtparNullPointer);

        let mut v = 0.0;
        assert_eq!(ttpar_norm(x, 42, &mut v), TtparStatus::TtparInvalidArgument);
        assert_eq!(ttpar_round(x, 1e-8, 9, 0, 1, &mut out, ptr::null_mut()), TtparStatus::TtparInvalidArgument);
        assert_eq!(ttpar_round(x, -1.0, TTPAR_ROUND_LRL, 0, 1, &mut out, ptr::null_mut()), TtparStatus::TtparContract);
        assert_eq!(
            ttpar_round(x, 1e-8, TTPAR_ROUND_LRL, 0, 0, &mut out, ptr::null_mut()),
            TtparStatus::TtparInvalidArgument
        );
        assert_eq!(ttpar_orthonormalize(x, 5, 1, &mut out), TtparStatus::TtparInvalidArgument);

        assert_eq!(ttpar_tensor_entry(x, [4, 0].as_ptr(), 2, &mut v), TtparStatus::TtparBounds);
        let mut small = [0usize; 1];
        assert_eq!(ttpar_tensor_dims(x, small.as_mut_ptr(), 1), TtparStatus::TtparInvalidArgument);

        let data = [1.0; 5];
        let s = ttpar_tensor_from_cores(2, [3, 2].as_ptr(), [1, 1, 1].as_ptr(), data.as_ptr(), 4, &mut out);
        assert_eq!(s, TtparStatus::TtparInvalidArgument);
        let s = ttpar_tensor_from_cores(2, [3, 2].as_ptr(), [1, 2, 1].as_ptr(), data.as_ptr(), 5, &mut out);
        assert_eq!(s, TtparStatus::TtparInvalidArgument);

        let missing = CString::new("/nonexistent/dir/x.tt").unwrap();
        assert_eq!(ttpar_tensor_load(missing.as_ptr(), &mut out), TtparStatus::TtparIo);
        assert_eq!(ttpar_tensor_load(ptr::null(), &mut out), TtparStatus::TtparNullPointer);

        let mut c = TtparCost::default();
        assert_eq!(
            ttpar_cost_estimate(99, 0, 1, 1, 1, 1, 0, -1.0, -1.0, -1.0, &mut c),
            TtparStatus::TtparInvalidArgument
        );
        assert_eq!(
            ttpar_cost_estimate(TTPAR_OP_DOT, 0, 0, 1, 1, 1, 0, -1.0, -1.0, -1.0, &mut c),
            TtparStatus::TtparContract
        );

        assert_eq!(ttpar_tensor_order(ptr::null()), 0);
        ttpar_tensor_free(ptr::null_mut());
        ttpar_tensor_free(x);
        ttpar_tensor_free(y);
    }
    let v = unsafe { CStr::from_ptr(ttpar_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
