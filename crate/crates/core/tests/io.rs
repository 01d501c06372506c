mod common;

use subsearch::imaging::annotate;
use subsearch::{load_image, save_image, Annotation, Error, Image};

#[test]
fn png_round_trip_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scene.png");
    let img = common::random_image(&mut common::rng(1), 17, 23, 3);
    save_image(&img, &path, &[]).unwrap();
    assert_eq!(load_image(&path).unwrap(), img);
}

#[test]
fn gray_png_loads_as_rgb() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gray.png");
    let gray = common::random_image(&mut common::rng(2), 5, 6, 1);
    save_image(&gray, &path, &[]).unwrap();
    assert_eq!(load_image(&path).unwrap(), gray.to_rgb());
}

#[test]
fn missing_file_is_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_image(dir.path().join("absent.png")).unwrap_err();
    assert!(matches!(err, Error::NotFound { .. }), "{err}");
}

#[test]
fn truncated_file_is_a_decode_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cut.png");
    let bytes = Image::filled(20, 20, [1, 2, 3]).unwrap().to_png_bytes().unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert!(matches!(load_image(&path), Err(Error::Decode(_))));
    std::fs::write(&path, b"not an image").unwrap();
    assert!(matches!(load_image(&path), Err(Error::Decode(_))));
}

#[test]
fn zero_extent_rejected() {
    assert!(matches!(
        Image::from_raw(0, 4, 3, vec![]),
        Err(Error::EmptyImage { rows: 0, cols: 4 })
    ));
    assert!(matches!(Image::filled(3, 0, [0, 0, 0]), Err(Error::EmptyImage { .. })));
}

#[test]
fn saved_annotation_changes_only_the_outline() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("boxed.png");
    let img = Image::filled(12, 15, [255, 255, 255]).unwrap();
    let color = [255, 0, 0];
    let rect = Annotation::Rect {
        x: 2,
        y: 3,
        h: 4,
        w: 5,
        color,
    };
    save_image(&img, &path, std::slice::from_ref(&rect)).unwrap();
    let saved = load_image(&path).unwrap();
    assert_eq!(saved, annotate(&img, &[rect]));
    for x in 0..12 {
        for y in 0..15 {
            let inside = (2..6).contains(&x) && (3..8).contains(&y);
            let border = inside && (x == 2 || x == 5 || y == 3 || y == 7);
            let expected: &[u8] = if border { &color } else { &[255, 255, 255] };
            assert_eq!(saved.pixel(x, y), expected, "pixel ({x}, {y})");
        }
    }
}
