//! Symmetric eigendecomposition through LAPACK's divide-and-conquer driver.
//!
//! The nalgebra pure-Rust solver scales poorly past a few hundred rows; the
//! spectator lattice needs dimensions in the thousands. Falls back to
//! nalgebra if LAPACK reports a failure.

use nalgebra::DMatrix;
use num_complex::Complex64;

extern "C" {
    fn zheevd_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        w: *mut f64,
        work: *mut Complex64,
        lwork: *const i32,
        rwork: *mut f64,
        lrwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
    fn dsyevd_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
}

/// Eigenvalues (ascending) and matching eigenvector columns of a real
/// symmetric matrix.
pub fn symmetric_eigh(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "symmetric_eigh needs a square matrix");
    if n == 0 {
        return (Vec::new(), a);
    }
    let mut vectors = a.clone();
    let mut values = vec![0.0_f64; n];
    let n_i = n as i32;
    let (jobz, uplo) = (b'V', b'L');
    let mut info: i32 = 0;

    // workspace query
    let mut work_query = [0.0_f64];
    let mut iwork_query = [0_i32];
    let lwork_query: i32 = -1;
    unsafe {
        dsyevd_(
            &jobz,
            &uplo,
            &n_i,
            vectors.as_mut_slice().as_mut_ptr(),
            &n_i,
            values.as_mut_ptr(),
            work_query.as_mut_ptr(),
            &lwork_query,
            iwork_query.as_mut_ptr(),
            &lwork_query,
            &mut info,
        );
    }
    if info == 0 {
        let lwork = work_query[0] as i32;
        let liwork = iwork_query[0];
        let mut work = vec![0.0_f64; lwork.max(1) as usize];
        let mut iwork = vec![0_i32; liwork.max(1) as usize];
        unsafe {
            dsyevd_(
                &jobz,
                &uplo,
                &n_i,
                vectors.as_mut_slice().as_mut_ptr(),
                &n_i,
                values.as_mut_ptr(),
                work.as_mut_ptr(),
                &lwork,
                iwork.as_mut_ptr(),
                &liwork,
                &mut info,
            );
        }
    }
    if info != 0 {
        let eig = a.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let mut vals = Vec::with_capacity(n);
        let mut vecs = DMatrix::zeros(n, n);
        for (c, &k) in order.iter().enumerate() {
            vals.push(eig.eigenvalues[k]);
            vecs.set_column(c, &eig.eigenvectors.column(k));
        }
        return (vals, vecs);
    }
    (values, vectors)
}

/// Eigenvalues (ascending) and matching eigenvector columns of a complex
/// Hermitian matrix.
pub fn hermitian_eigh(a: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "hermitian_eigh needs a square matrix");
    if n == 0 {
        return (Vec::new(), a);
    }
    let mut vectors = a.clone();
    let mut values = vec![0.0_f64; n];
    let n_i = n as i32;
    let (jobz, uplo) = (b'V', b'L');
    let mut info: i32 = 0;

    // workspace query
    let mut work_query = [Complex64::new(0.0, 0.0)];
    let mut rwork_query = [0.0_f64];
    let mut iwork_query = [0_i32];
    let lwork_query: i32 = -1;
    unsafe {
        zheevd_(
            &jobz,
            &uplo,
            &n_i,
            vectors.as_mut_slice().as_mut_ptr(),
            &n_i,
            values.as_mut_ptr(),
            work_query.as_mut_ptr(),
            &lwork_query,
            rwork_query.as_mut_ptr(),
            &lwork_query,
            iwork_query.as_mut_ptr(),
            &lwork_query,
            &mut info,
        );
    }
    if info == 0 {
        let lwork = work_query[0].re as i32;
        let lrwork = rwork_query[0] as i32;
        let liwork = iwork_query[0];
        let mut work = vec![Complex64::new(0.0, 0.0); lwork.max(1) as usize];
        let mut rwork = vec![0.0_f64; lrwork.max(1) as usize];
        let mut iwork = vec![0_i32; liwork.max(1) as usize];
        unsafe {
            zheevd_(
                &jobz,
                &uplo,
                &n_i,
                vectors.as_mut_slice().as_mut_ptr(),
                &n_i,
                values.as_mut_ptr(),
                work.as_mut_ptr(),
                &lwork,
                rwork.as_mut_ptr(),
                &lrwork,
                iwork.as_mut_ptr(),
                &liwork,
                &mut info,
            );
        }
    }
    if info != 0 {
        let eig = a.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let mut vals = Vec::with_capacity(n);
        let mut vecs = DMatrix::zeros(n, n);
        for (c, &k) in order.iter().enumerate() {
            vals.push(eig.eigenvalues[k]);
            vecs.set_column(c, &eig.eigenvectors.column(k));
        }
        return (vals, vecs);
    }
    (values, vectors)
}
