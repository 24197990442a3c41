use eva_core::store::{read_store, write_store, StoreReader};
use eva_core::synthetic::{generate_cell, preset};
use eva_core::Error;

#[test]
fn reader_yields_first_cell_before_reading_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cells.eva");
    let spec = preset("precip-homogeneous").unwrap();
    let cells: Vec<_> = (0..5).map(|c| generate_cell(&spec, c, 50, 3).unwrap()).collect();
    write_store(&path, &cells).unwrap();
    let size = std::fs::metadata(&path).unwrap().len();

    let mut reader = StoreReader::new(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(reader.cell_count(), 5);
    let first = reader.next().unwrap().unwrap();
    assert_eq!(first, cells[0]);
    assert!(reader.offset() * 4 < size, "first cell consumed {} of {size} bytes", reader.offset());
    let rest: Vec<_> = reader.collect::<Result<_, _>>().unwrap();
    assert_eq!(rest, cells[1..]);
    assert_eq!(read_store(&path).unwrap(), cells);
}

#[test]
fn truncated_store_reports_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cells.eva");
    let spec = preset("precip-homogeneous").unwrap();
    let cells: Vec<_> = (0..2).map(|c| generate_cell(&spec, c, 5, 3).unwrap()).collect();
    write_store(&path, &cells).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
    let mut reader = StoreReader::open(&path).unwrap();
    assert!(reader.next().unwrap().is_ok());
    match reader.next().unwrap() {
        Err(Error::Format { offset, message }) => {
            assert!(offset > 0 && offset <= bytes.len() as u64);
            assert!(message.contains("truncated"), "{message}");
        }
        other => panic!("expected a format error, got {other:?}"),
    }
    assert!(read_store(&path).is_err());
}
