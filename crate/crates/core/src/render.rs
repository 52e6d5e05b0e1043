//! Binary PGM (P5) images of cumulative viewsheds: covered posts white,
//! uncovered black, row 0 at the top.

use std::fs;
use std::path::{Path, PathBuf};

use crate::bits;
use crate::error::{Error, Result};
use crate::siting::{CumulativeShed, SitingResult};
use crate::viewshed::Viewshed;

pub fn encode_pgm(cum: &CumulativeShed) -> Vec<u8> {
    let (nrows, ncols) = (cum.nrows(), cum.ncols());
    let header = format!("P5\n{ncols} {nrows}\n255\n");
    let mut out = Vec::with_capacity(header.len() + nrows * ncols);
    out.extend_from_slice(header.as_bytes());
    out.extend((0..nrows * ncols).map(|i| if bits::get(cum.words(), i) { 255u8 } else { 0 }));
    out
}

pub fn render_cumshed(cum: &CumulativeShed, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(cum)).map_err(|e| Error::io(path, e))
}

/// 1, 2, 4, ... below `n`, then `n` itself; the empty schedule for `n = 0`.
pub fn power_of_two_schedule(n: usize) -> Vec<usize> {
    let mut s: Vec<usize> = std::iter::successors(Some(1usize), |&k| k.checked_mul(2))
        .take_while(|&k| k < n)
        .collect();
    if n > 0 {
        s.push(n);
    }
    s
}

/// One image per schedule entry `k`, showing the union of the first `k`
/// selected viewsheds, written as `cumshed_<k>.pgm` in `dir`. Entries past
/// the number of selections show the final state.
pub fn render_snapshots(
    result: &SitingResult,
    viewsheds: &[Viewshed],
    nrows: usize,
    ncols: usize,
    schedule: &[usize],
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParam(
            "snapshot schedule must be strictly ascending".into(),
        ));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut cum = CumulativeShed::new(nrows, ncols);
    let mut applied = 0usize;
    let mut written = Vec::with_capacity(schedule.len());
    for &k in schedule {
        if k > result.selected.len() {
            log::warn!(
                "snapshot {k} exceeds the {} transmitters sited; showing the final state",
                result.selected.len()
            );
        }
        let upto = k.min(result.selected.len());
        for s in &result.selected[applied..upto] {
            let v = viewsheds
                .get(s.index)
                .ok_or_else(|| Error::InvalidParam(format!("selection refers to missing viewshed {}", s.index)))?;
            cum.union(v)?;
        }
        applied = upto;
        let path = dir.join(format!("cumshed_{k}.pgm"));
        render_cumshed(&cum, &path)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::siting::{site, SiteParams};
    use crate::terrain::GridPoint;
    use crate::viewshed::Window;

    fn payload(bytes: &[u8], nrows: usize, ncols: usize) -> &[u8] {
        let header = format!("P5\n{ncols} {nrows}\n255\n");
        assert!(bytes.starts_with(header.as_bytes()));
        &bytes[header.len()..]
    }

    #[test]
    fn empty_and_full() {
        let e = encode_pgm(&CumulativeShed::new(2, 2));
        assert_eq!(payload(&e, 2, 2), &[0, 0, 0, 0]);
        let f = encode_pgm(&CumulativeShed::full(2, 2));
        assert_eq!(payload(&f, 2, 2), &[255, 255, 255, 255]);
    }

    #[test]
    fn checkerboard() {
        let mut cum = CumulativeShed::new(4, 4);
        for r in 0..4 {
            for c in 0..4 {
                if (r + c) % 2 == 0 {
                    cum.cover(GridPoint::new(r, c));
                }
            }
        }
        let img = encode_pgm(&cum);
        let expect: Vec<u8> = (0..16)
            .map(|i| if (i / 4 + i % 4) % 2 == 0 { 255 } else { 0 })
            .collect();
        assert_eq!(payload(&img, 4, 4), &expect[..]);
    }

    #[test]
    fn unwritable_path() {
        assert!(render_cumshed(&CumulativeShed::new(2, 2), "/nonexistent/dir/x.pgm").is_err());
    }

    fn square(row0: usize, col0: usize, side: usize) -> Viewshed {
        let window = Window {
            row0,
            col0,
            height: side,
            width: side,
        };
        let mut v = Viewshed::empty(GridPoint::new(row0, col0), side, window);
        for r in row0..row0 + side {
            for c in col0..col0 + side {
                v.set(GridPoint::new(r, c));
            }
        }
        v
    }

    #[test]
    fn snapshots_whiten_and_clamp() {
        let sheds = vec![square(0, 0, 10), square(12, 12, 8), square(5, 5, 6)];
        let p = SiteParams {
            target_coverage: 1.0,
            ..SiteParams::default()
        };
        let res = site(&sheds, 20, 20, &p).unwrap();
        assert_eq!(res.selected.len(), 3);

        let dir = tempfile::tempdir().unwrap();
        let files = render_snapshots(&res, &sheds, 20, 20, &[1, 2, 4], dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        let imgs: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
        for w in imgs.windows(2) {
            assert!(w[0].iter().zip(&w[1]).all(|(a, b)| a <= b));
        }
        let white = |img: &[u8]| payload(img, 20, 20).iter().filter(|&&v| v == 255).count();
        // first two picks are the disjoint 10x10 and 8x8 squares
        assert_eq!(white(&imgs[0]), 100);
        assert_eq!(white(&imgs[1]), 100 + 64);
        assert_eq!(white(&imgs[2]) as u64, res.covered);

        assert!(render_snapshots(&res, &sheds, 20, 20, &[2, 1], dir.path()).is_err());
    }

    #[test]
    fn schedule_shape() {
        assert_eq!(power_of_two_schedule(1300).len(), 12);
        assert_eq!(power_of_two_schedule(1300)[10..], [1024, 1300]);
        assert_eq!(power_of_two_schedule(4), vec![1, 2, 4]);
        assert!(power_of_two_schedule(0).is_empty());
    }
}
