//! Ingestion and emission of detections, embeddings, ground truth, and
//! tracks, plus the optional confidence-rescaling preprocessing step.
//!
//! All parsers reject malformed input instead of repairing it; errors carry
//! line or byte positions. File formats:
//!
//! * Detections (`<seq>.det.csv`): `frame,x,y,w,h,confidence,class_id[,embedding_row]`
//!   per line, boxes as `(left, top, width, height)`. The `embedding_row`
//!   column indexes into the sidecar and is optional (-1 or absent means
//!   no embedding).
//! * Embedding sidecar (`<seq>.emb`): magic `EMB1`, `dim` as u32 LE,
//!   `count` as u64 LE, then `count * dim` f32 LE values row-major.
//! * Tracks and ground truth (`<seq>.trk.csv` / `<seq>.gt.csv`):
//!   `frame,id,x,y,w,h,confidence,-1,-1,-1`; ground truth ids are
//!   ground-truth identities and its confidence field is ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use crate::affinity::Embedding;
use crate::error::{Error, Result};
use crate::geom::{BBox, FrameIndex, TrackId};
use crate::tracker::{BoxSource, Detection, Track};

/// Confidence rescaling lifts the scores of this many top detections per
/// frame...
pub const RESCALE_TOP_K: usize = 50;
/// ...by this factor, clipping at 1.
pub const RESCALE_FACTOR: f64 = 1.25;

const SIDECAR_MAGIC: &[u8; 4] = b"EMB1";
const SIDECAR_HEADER_LEN: usize = 16;

/// One parsed detection line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionRecord {
    pub frame: FrameIndex,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub confidence: f64,
    /// Class label, -1 if absent. Passed through untouched.
    pub class_id: i32,
    /// Row index into the embedding sidecar, -1 if absent.
    pub embedding_row: i64,
}

impl DetectionRecord {
    pub fn bbox(&self) -> BBox {
        BBox::new(self.x, self.y, self.w, self.h)
    }
}

/// Detections grouped by frame, original file order preserved within a
/// frame. Frames may be sparse.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionFile {
    pub frames: BTreeMap<FrameIndex, Vec<DetectionRecord>>,
}

impl DetectionFile {
    pub fn total(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    pub fn frame_range(&self) -> Option<(FrameIndex, FrameIndex)> {
        let first = *self.frames.keys().next()?;
        let last = *self.frames.keys().next_back()?;
        Some((first, last))
    }
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn parse_field<T: std::str::FromStr>(
    raw: &str,
    what: &str,
    path: &Path,
    line: usize,
) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Parse {
        path: path_str(path),
        line,
        msg: format!("invalid {what}: {raw:?}"),
    })
}

/// Parses a detection CSV. Rows with out-of-range confidence or
/// non-positive size are rejected with the offending line number.
pub fn parse_detections(path: &Path) -> Result<DetectionFile> {
    let text = fs::read_to_string(path)?;
    let mut out = DetectionFile::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 7 && fields.len() != 8 {
            return Err(Error::Parse {
                path: path_str(path),
                line,
                msg: format!("expected 7 or 8 fields, got {}", fields.len()),
            });
        }
        let frame: u64 = parse_field(fields[0], "frame", path, line)?;
        let x: f64 = parse_field(fields[1], "x", path, line)?;
        let y: f64 = parse_field(fields[2], "y", path, line)?;
        let w: f64 = parse_field(fields[3], "w", path, line)?;
        let h: f64 = parse_field(fields[4], "h", path, line)?;
        let confidence: f64 = parse_field(fields[5], "confidence", path, line)?;
        let class_id: i32 = parse_field(fields[6], "class_id", path, line)?;
        let embedding_row: i64 = if fields.len() == 8 {
            parse_field(fields[7], "embedding_row", path, line)?
        } else {
            -1
        };
        if ![x, y, w, h, confidence].iter().all(|v| v.is_finite()) {
            return Err(Error::Parse {
                path: path_str(path),
                line,
                msg: "non-finite value".into(),
            });
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::Range {
                path: path_str(path),
                line,
                msg: format!("box size must be positive, got {w}x{h}"),
            });
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::Range {
                path: path_str(path),
                line,
                msg: format!("confidence must be in [0, 1], got {confidence}"),
            });
        }
        if embedding_row < -1 {
            return Err(Error::Range {
                path: path_str(path),
                line,
                msg: format!("embedding_row must be -1 or non-negative, got {embedding_row}"),
            });
        }
        out.frames.entry(frame).or_default().push(DetectionRecord {
            frame,
            x,
            y,
            w,
            h,
            confidence,
            class_id,
            embedding_row,
        });
    }
    Ok(out)
}

/// Writes a detection CSV in file order (by frame, then insertion order).
pub fn write_detections(dets: &DetectionFile, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for records in dets.frames.values() {
        for r in records {
            writeln!(
                w,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
                r.frame, r.x, r.y, r.w, r.h, r.confidence, r.class_id, r.embedding_row
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Loaded embedding sidecar: rows normalized and shareable across workers.
#[derive(Debug, Clone)]
pub struct EmbeddingSidecar {
    dim: u32,
    rows: Vec<Arc<Embedding>>,
}

impl EmbeddingSidecar {
    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, row: usize) -> Option<&Arc<Embedding>> {
        self.rows.get(row)
    }
}

/// Loads and validates a sidecar file. Rejects bad magic, length
/// mismatches, zero-norm rows, and (when given) an unexpected dimension.
pub fn load_sidecar(path: &Path, expected_dim: Option<u32>) -> Result<EmbeddingSidecar> {
    let bytes = fs::read(path)?;
    if bytes.len() < SIDECAR_HEADER_LEN {
        return Err(Error::Format {
            path: path_str(path),
            msg: format!(
                "file too short for header: expected at least {SIDECAR_HEADER_LEN} bytes, got {}",
                bytes.len()
            ),
        });
    }
    if &bytes[0..4] != SIDECAR_MAGIC {
        return Err(Error::Format {
            path: path_str(path),
            msg: format!("bad magic {:?}, expected \"EMB1\"", &bytes[0..4]),
        });
    }
    let dim = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let expected_len = SIDECAR_HEADER_LEN as u128 + 4 * dim as u128 * count as u128;
    if bytes.len() as u128 != expected_len {
        return Err(Error::Format {
            path: path_str(path),
            msg: format!(
                "length mismatch: dim={dim} count={count} requires {expected_len} bytes, got {}",
                bytes.len()
            ),
        });
    }
    if let Some(expected) = expected_dim {
        if dim != expected {
            return Err(Error::DimensionMismatch {
                expected: expected as usize,
                got: dim as usize,
            });
        }
    }
    let mut rows = Vec::with_capacity(count as usize);
    let mut offset = SIDECAR_HEADER_LEN;
    for row in 0..count {
        let mut values = Vec::with_capacity(dim as usize);
        for _ in 0..dim {
            values.push(f32::from_le_bytes(
                bytes[offset..offset + 4].try_into().unwrap(),
            ));
            offset += 4;
        }
        let emb = Embedding::from_f32(&values).map_err(|_| Error::DegenerateVector {
            detail: format!("sidecar row {row} has zero or non-finite norm"),
        })?;
        rows.push(Arc::new(emb));
    }
    Ok(EmbeddingSidecar { dim, rows })
}

/// Writes a sidecar file; values are stored as f32 little-endian.
pub fn write_sidecar<'a>(
    dim: u32,
    rows: impl IntoIterator<Item = &'a [f64]>,
    path: &Path,
) -> Result<()> {
    let mut payload: Vec<u8> = Vec::new();
    let mut count: u64 = 0;
    for row in rows {
        assert_eq!(row.len(), dim as usize, "sidecar row dimension mismatch");
        for &v in row {
            payload.extend_from_slice(&(v as f32).to_le_bytes());
        }
        count += 1;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(SIDECAR_MAGIC)?;
    w.write_all(&dim.to_le_bytes())?;
    w.write_all(&count.to_le_bytes())?;
    w.write_all(&payload)?;
    w.flush()?;
    Ok(())
}

/// Lifts the confidence of the 50 highest-scoring detections per frame by
/// a factor of 1.25, clipped at 1. Ties break by file order.
pub fn rescale_scores(dets: &mut DetectionFile) {
    for records in dets.frames.values_mut() {
        let mut order: Vec<usize> = (0..records.len()).collect();
        // Stable sort: equal confidences keep file order.
        order.sort_by(|&a, &b| records[b].confidence.total_cmp(&records[a].confidence));
        for &i in order.iter().take(RESCALE_TOP_K) {
            let c = &mut records[i].confidence;
            *c = (*c * RESCALE_FACTOR).min(1.0);
        }
    }
}

/// Identity-labelled boxes grouped per frame, as used by the evaluator.
/// `(frame, id)` pairs are unique.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackSet {
    frames: BTreeMap<FrameIndex, BTreeMap<TrackId, BBox>>,
}

impl TrackSet {
    pub fn insert(&mut self, frame: FrameIndex, id: TrackId, bbox: BBox) -> Result<()> {
        if self.frames.entry(frame).or_default().insert(id, bbox).is_some() {
            return Err(Error::Spec(format!(
                "duplicate (frame {frame}, id {id}) entry"
            )));
        }
        Ok(())
    }

    pub fn frames(&self) -> &BTreeMap<FrameIndex, BTreeMap<TrackId, BBox>> {
        &self.frames
    }

    pub fn frame(&self, frame: FrameIndex) -> Option<&BTreeMap<TrackId, BBox>> {
        self.frames.get(&frame)
    }

    /// Total number of boxes across all frames.
    pub fn total_boxes(&self) -> u64 {
        self.frames.values().map(|m| m.len() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Distinct identities present anywhere in the set.
    pub fn track_ids(&self) -> Vec<TrackId> {
        let mut ids: Vec<TrackId> = self
            .frames
            .values()
            .flat_map(|m| m.keys().copied())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Converts finalized tracks into the evaluator's frame-indexed form.
pub fn tracks_to_set(tracks: &[Track]) -> TrackSet {
    let mut set = TrackSet::default();
    for t in tracks {
        for b in &t.boxes {
            set.insert(b.frame, t.id, b.bbox)
                .expect("tracker output has unique (frame, id) pairs");
        }
    }
    set
}

/// Writes finalized tracks as CSV rows sorted by (frame, id). Predicted
/// boxes here are interior gap fills; trailing predictions were already
/// rolled back at finalization.
pub fn write_tracks(tracks: &[Track], path: &Path) -> Result<()> {
    let mut rows: Vec<(FrameIndex, TrackId, BBox, f64)> = Vec::new();
    for t in tracks {
        for b in &t.boxes {
            debug_assert!(matches!(
                b.source,
                BoxSource::Detected | BoxSource::Predicted | BoxSource::Interpolated
            ));
            rows.push((b.frame, t.id, b.bbox, b.confidence));
        }
    }
    rows.sort_by_key(|&(frame, id, _, _)| (frame, id));
    let mut out = String::new();
    for (frame, id, b, conf) in rows {
        writeln!(
            out,
            "{frame},{id},{:.6},{:.6},{:.6},{:.6},{conf:.6},-1,-1,-1",
            b.x, b.y, b.w, b.h
        )
        .expect("string write cannot fail");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Parses a 10-column track/ground-truth CSV into a [`TrackSet`].
/// The confidence and world-coordinate placeholder fields are ignored.
pub fn parse_ground_truth(path: &Path) -> Result<TrackSet> {
    let text = fs::read_to_string(path)?;
    let mut set = TrackSet::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::Parse {
                path: path_str(path),
                line,
                msg: format!("expected 10 fields, got {}", fields.len()),
            });
        }
        let frame: u64 = parse_field(fields[0], "frame", path, line)?;
        let id: u64 = parse_field(fields[1], "track id", path, line)?;
        let x: f64 = parse_field(fields[2], "x", path, line)?;
        let y: f64 = parse_field(fields[3], "y", path, line)?;
        let w: f64 = parse_field(fields[4], "w", path, line)?;
        let h: f64 = parse_field(fields[5], "h", path, line)?;
        // Remaining fields (confidence + placeholders) must parse but are
        // otherwise ignored.
        for (f, what) in fields[6..].iter().zip(["confidence", "wx", "wy", "wz"]) {
            let _: f64 = parse_field(f, what, path, line)?;
        }
        if ![x, y, w, h].iter().all(|v| v.is_finite()) {
            return Err(Error::Parse {
                path: path_str(path),
                line,
                msg: "non-finite value".into(),
            });
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::Range {
                path: path_str(path),
                line,
                msg: format!("box size must be positive, got {w}x{h}"),
            });
        }
        set.insert(frame, id, BBox::new(x, y, w, h))
            .map_err(|_| Error::Parse {
                path: path_str(path),
                line,
                msg: format!("duplicate (frame {frame}, id {id}) row"),
            })?;
    }
    Ok(set)
}

/// Writes a [`TrackSet`] in the same 10-column shape (confidence fixed at 1).
pub fn write_track_set(set: &TrackSet, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (frame, boxes) in set.frames() {
        for (id, b) in boxes {
            writeln!(
                out,
                "{frame},{id},{:.6},{:.6},{:.6},{:.6},1.000000,-1,-1,-1",
                b.x, b.y, b.w, b.h
            )
            .expect("string write cannot fail");
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Resolves detection records against an optional sidecar into tracker
/// inputs. Records with `embedding_row = -1` stay embedding-free; rows out
/// of sidecar range are rejected.
pub fn assemble_inputs(
    dets: &DetectionFile,
    sidecar: Option<&EmbeddingSidecar>,
) -> Result<BTreeMap<FrameIndex, Vec<Detection>>> {
    let mut out: BTreeMap<FrameIndex, Vec<Detection>> = BTreeMap::new();
    for (&frame, records) in &dets.frames {
        let mut list = Vec::with_capacity(records.len());
        for r in records {
            let mut det = Detection::new(r.bbox(), r.confidence);
            det.class_id = r.class_id;
            if r.embedding_row >= 0 {
                if let Some(sc) = sidecar {
                    let emb = sc.get(r.embedding_row as usize).ok_or_else(|| Error::Format {
                        path: "<sidecar>".into(),
                        msg: format!(
                            "frame {frame}: embedding row {} out of range (count {})",
                            r.embedding_row,
                            sc.len()
                        ),
                    })?;
                    det.embedding = Some(emb.clone());
                }
                // Without a sidecar the reference silently degrades to the
                // IOU-only path; the CLI surfaces a warning.
            }
            list.push(det);
        }
        out.insert(frame, list);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    #[test]
    fn empty_detection_file() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.det.csv");
        fs::write(&path, "").unwrap();
        let parsed = parse_detections(&path).unwrap();
        assert!(parsed.frames.is_empty());
    }

    #[test]
    fn sparse_frames_grouped() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("s.det.csv");
        fs::write(
            &path,
            "1,10,20,30,40,0.9,1,0\n1,50,60,30,40,0.8,1,1\n3,10,20,30,40,0.7,1,-1\n",
        )
        .unwrap();
        let parsed = parse_detections(&path).unwrap();
        assert_eq!(parsed.frames.len(), 2);
        assert_eq!(parsed.frames[&1].len(), 2);
        assert_eq!(parsed.frames[&3].len(), 1);
        assert!(!parsed.frames.contains_key(&2));
        assert_eq!(parsed.frames[&1][1].embedding_row, 1);
    }

    #[test]
    fn seven_field_rows_have_no_embedding() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("s.det.csv");
        fs::write(&path, "1,10,20,30,40,0.9,2\n").unwrap();
        let parsed = parse_detections(&path).unwrap();
        assert_eq!(parsed.frames[&1][0].embedding_row, -1);
        assert_eq!(parsed.frames[&1][0].class_id, 2);
    }

    #[test]
    fn zero_width_names_the_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("s.det.csv");
        fs::write(&path, "1,10,20,30,40,0.9,1\n2,10,20,0,40,0.9,1\n").unwrap();
        match parse_detections(&path) {
            Err(Error::Range { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_confidence_rejected_not_clamped() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("s.det.csv");
        fs::write(&path, "1,10,20,30,40,1.2,1\n").unwrap();
        assert!(matches!(
            parse_detections(&path),
            Err(Error::Range { line: 1, .. })
        ));
    }

    #[test]
    fn malformed_row_names_the_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("s.det.csv");
        fs::write(&path, "1,10,20,30,40,0.9,1\nnot-a-frame,1,2,3,4,0.5,1\n").unwrap();
        match parse_detections(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn sidecar_empty_is_valid() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("e.emb");
        write_sidecar(4, std::iter::empty(), &path).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len(), 16);
        let sc = load_sidecar(&path, Some(4)).unwrap();
        assert!(sc.is_empty());
        assert_eq!(sc.dim(), 4);
    }

    #[test]
    fn sidecar_truncation_reports_byte_counts() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.emb");
        let row = [1.0f64, 0.0, 0.0, 0.0];
        write_sidecar(4, [row.as_slice()], &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        fs::write(&path, &bytes).unwrap();
        match load_sidecar(&path, None) {
            Err(Error::Format { msg, .. }) => {
                assert!(msg.contains("32"), "message should cite byte counts: {msg}");
                assert!(msg.contains("29"), "message should cite byte counts: {msg}");
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("r.emb");
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| {
                let v: Vec<f64> = (0..2048).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / norm).collect()
            })
            .collect();
        write_sidecar(2048, rows.iter().map(|r| r.as_slice()), &path).unwrap();
        let sc = load_sidecar(&path, Some(2048)).unwrap();
        assert_eq!(sc.len(), 3);
        for (row, emb) in rows.iter().zip((0..3).map(|i| sc.get(i).unwrap())) {
            for (a, b) in row.iter().zip(emb.values()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn sidecar_zero_row_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("z.emb");
        let rows = [vec![1.0, 0.0], vec![0.0, 0.0]];
        write_sidecar(2, rows.iter().map(|r| r.as_slice()), &path).unwrap();
        match load_sidecar(&path, None) {
            Err(Error::DegenerateVector { detail }) => assert!(detail.contains("row 1")),
            other => panic!("expected degenerate vector error, got {other:?}"),
        }
    }

    #[test]
    fn sidecar_bad_magic_and_dim_mismatch() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.emb");
        write_sidecar(4, std::iter::empty(), &path).unwrap();
        assert!(matches!(
            load_sidecar(&path, Some(8)),
            Err(Error::DimensionMismatch { expected: 8, got: 4 })
        ));
        let mut bytes = fs::read(&path).unwrap();
        bytes[0] = b'X';
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_sidecar(&path, None), Err(Error::Format { .. })));
    }

    fn rec(frame: u64, conf: f64) -> DetectionRecord {
        DetectionRecord {
            frame,
            x: 0.0,
            y: 0.0,
            w: 10.0,
            h: 10.0,
            confidence: conf,
            class_id: -1,
            embedding_row: -1,
        }
    }

    #[test]
    fn rescale_examples() {
        let mut dets = DetectionFile::default();
        dets.frames.insert(1, vec![rec(1, 0.9), rec(1, 0.6)]);
        rescale_scores(&mut dets);
        assert_eq!(dets.frames[&1][0].confidence, 1.0);
        assert_eq!(dets.frames[&1][1].confidence, 0.75);
    }

    #[test]
    fn rescale_leaves_rank_51_unchanged() {
        let mut dets = DetectionFile::default();
        // 60 detections: 50 at 0.5, then 10 at 0.4 (ranks 51-60).
        let mut rows: Vec<DetectionRecord> = (0..50).map(|_| rec(1, 0.5)).collect();
        rows.extend((0..10).map(|_| rec(1, 0.4)));
        dets.frames.insert(1, rows);
        rescale_scores(&mut dets);
        for r in &dets.frames[&1][..50] {
            assert_eq!(r.confidence, 0.625);
        }
        for r in &dets.frames[&1][50..] {
            assert_eq!(r.confidence, 0.4);
        }
    }

    #[test]
    fn rescale_tie_break_by_file_order() {
        let mut dets = DetectionFile::default();
        let mut rows: Vec<DetectionRecord> = (0..51).map(|_| rec(1, 0.5)).collect();
        rows.push(rec(1, 0.8));
        dets.frames.insert(1, rows);
        rescale_scores(&mut dets);
        let rows = &dets.frames[&1];
        // The 0.8 row ranks first, then the first 49 ties by file order.
        assert_eq!(rows[51].confidence, 1.0);
        for r in &rows[..49] {
            assert_eq!(r.confidence, 0.625);
        }
        assert_eq!(rows[49].confidence, 0.5);
        assert_eq!(rows[50].confidence, 0.5);
    }

    #[test]
    fn rescale_applied_twice_multiplies() {
        let mut dets = DetectionFile::default();
        dets.frames.insert(1, vec![rec(1, 0.5)]);
        rescale_scores(&mut dets);
        rescale_scores(&mut dets);
        // 0.5 * 1.25 * 1.25 = 0.78125: the operation is not idempotent.
        assert_eq!(dets.frames[&1][0].confidence, 0.78125);
    }

    #[test]
    fn track_set_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.trk.csv");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut set = TrackSet::default();
        for id in 1..=100u64 {
            let start = rng.random_range(0..20);
            for f in start..start + 10 {
                let b = BBox::new(
                    rng.random_range(-50.0..900.0),
                    rng.random_range(-50.0..500.0),
                    rng.random_range(5.0..120.0),
                    rng.random_range(5.0..90.0),
                );
                set.insert(f, id, b).unwrap();
            }
        }
        write_track_set(&set, &path).unwrap();
        let parsed = parse_ground_truth(&path).unwrap();
        assert_eq!(parsed.total_boxes(), set.total_boxes());
        for (frame, boxes) in set.frames() {
            for (id, b) in boxes {
                let p = parsed.frame(*frame).unwrap()[id];
                assert!((p.x - b.x).abs() < 1e-6);
                assert!((p.y - b.y).abs() < 1e-6);
                assert!((p.w - b.w).abs() < 1e-6);
                assert!((p.h - b.h).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn duplicate_ground_truth_row_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("g.gt.csv");
        fs::write(
            &path,
            "1,7,10,20,30,40,1,-1,-1,-1\n1,7,11,21,30,40,1,-1,-1,-1\n",
        )
        .unwrap();
        match parse_ground_truth(&path) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("duplicate"));
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn assemble_rejects_out_of_range_embedding_row() {
        let dir = tempdir().unwrap();
        let sc_path = dir.path().join("s.emb");
        write_sidecar(2, [[1.0, 0.0].as_slice()], &sc_path).unwrap();
        let sc = load_sidecar(&sc_path, None).unwrap();
        let mut dets = DetectionFile::default();
        let mut r = rec(1, 0.5);
        r.embedding_row = 3;
        dets.frames.insert(1, vec![r]);
        match assemble_inputs(&dets, Some(&sc)) {
            Err(Error::Format { msg, .. }) => {
                assert!(msg.contains("row 3"), "{msg}");
                assert!(msg.contains("count 1"), "{msg}");
            }
            other => panic!("expected format error, got {other:?}"),
        }
        // Without a sidecar the row index is ignored and the detection
        // simply carries no embedding.
        let inputs = assemble_inputs(&dets, None).unwrap();
        assert!(inputs[&1][0].embedding.is_none());
    }

    #[test]
    fn empty_track_list_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("e.trk.csv");
        write_tracks(&[], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "");
        assert!(parse_ground_truth(&path).unwrap().is_empty());
    }
}
