use std::io::Write;

use simt_core::matrix::load_matrix_market;
use simt_core::{CsrMatrix, Error};

fn write_tmp(name: &str, body: &str) -> std::path::PathBuf {
    let path = std::env::temp_dir().join(format!("simt-market-{}-{name}.mtx", std::process::id()));
    std::fs::File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
    path
}

#[test]
fn loads_general_identity_from_disk() {
    let p = write_tmp("eye", "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 1.0\n2 2 1.0\n");
    let a: CsrMatrix<f64> = load_matrix_market(&p).unwrap();
    assert_eq!(a, CsrMatrix::identity(2));
    std::fs::remove_file(p).unwrap();
}

#[test]
fn symmetric_file_is_expanded() {
    let p = write_tmp("sym", "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 2.0\n2 1 5.0\n2 2 3.0\n");
    let a: CsrMatrix<f64> = load_matrix_market(&p).unwrap();
    assert_eq!(a.get(0, 1), 5.0);
    assert_eq!(a.get(1, 0), 5.0);
    assert_eq!(a.nnz(), 4);
    assert!(a.is_symmetric());
    std::fs::remove_file(p).unwrap();
}

#[test]
fn out_of_bounds_and_duplicates() {
    let p = write_tmp("oob", "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
    assert!(matches!(load_matrix_market::<f64>(&p), Err(Error::IndexOutOfBounds { row: 3, col: 1, .. })));
    std::fs::remove_file(p).unwrap();
    let p = write_tmp("dup", "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1.0\n1 2 2.0\n");
    assert!(matches!(load_matrix_market::<f64>(&p), Err(Error::DuplicateEntry { .. })));
    std::fs::remove_file(p).unwrap();
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(
        load_matrix_market::<f64>("/nonexistent/simt/matrix.mtx"),
        Err(Error::Io(_))
    ));
}
