mod common;

use snsradar::iq::{read_iq, write_iq, IqCapture, IqError};
use snsradar::pipeline::{ingest, simulate, symbols_from_capture, symbols_to_capture};

#[test]
fn ingest_of_written_capture_matches_simulation() {
    let s = common::bundled("fig8.scn");
    let cap = simulate::<f64>(&s, 0, true).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let iq_path = dir.path().join("rx.iq");
    let sym_path = dir.path().join("symbols.iq");
    write_iq(&iq_path, &IqCapture::from_signal(cap.rx_sub.as_ref().unwrap(), 77e9)).unwrap();
    write_iq(&sym_path, &symbols_to_capture(&cap.symbols)).unwrap();

    let iq = read_iq(&iq_path).unwrap();
    assert_eq!(iq.sample_rate_hz, 125e6);
    assert_eq!(iq.samples.len(), 2560 / 8);
    let symbols = symbols_from_capture::<f64>(&read_iq(&sym_path).unwrap(), &s.radar).unwrap();
    let a = ingest(&iq, &symbols, &s).unwrap();
    let b = ingest(&iq, &cap.symbols, &s).unwrap();
    // the symbol file stores f32, so only sub-1e-6 drift is allowed
    for (a, b) in symbols.entries().iter().zip(cap.symbols.entries()) {
        assert!((a - b).norm() < 1e-6);
    }
    assert_eq!(a.post.detected_bins(), b.post.detected_bins());
    assert!((a.post.floor_dbm - b.post.floor_dbm).abs() < 1e-3);
    let bin = s.targets.targets[0].nearest_bin(&s.radar);
    assert_eq!(a.post.detected_bins(), vec![bin]);
    assert!((a.post.floor_dbm + 41.0).abs() < 1.5, "{}", a.post.floor_dbm);
}

#[test]
fn truncated_capture_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.iq");
    let c = IqCapture {
        sample_rate_hz: 1.0,
        center_freq_hz: 0.0,
        samples: vec![Default::default(); 10],
    };
    write_iq(&path, &c).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
    let err = read_iq(&path).unwrap_err();
    assert!(matches!(err, IqError::PayloadLengthMismatch { expected: 80, actual: 72 }));
    assert!(err.to_string().contains("payload length mismatch"));
}

#[test]
fn symbol_file_of_wrong_size_is_rejected() {
    let s = common::bundled("fig8.scn");
    let c = IqCapture {
        sample_rate_hz: 0.0,
        center_freq_hz: 0.0,
        samples: vec![Default::default(); 100],
    };
    assert!(symbols_from_capture::<f64>(&c, &s.radar).is_err());
}
