//! Spatial-temporal vectors of shape-based points.

use super::DescriptorError;
use crate::stip::Stip;

/// `(x, y, z, f)` offset from the sequence origin, each scaled to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StvDescriptor {
    pub values: [f64; 4],
}

/// Component-wise minimum of the points, `None` for an empty set.
pub fn stv_origin(stips: &[Stip]) -> Option<[f64; 4]> {
    let mut it = stips.iter().map(Stip::as_f64);
    let first = it.next()?;
    Some(it.fold(first, |mut o, v| {
        for d in 0..4 {
            o[d] = o[d].min(v[d]);
        }
        o
    }))
}

/// Offsets from [`stv_origin`], each dimension divided by its largest
/// offset. Dimensions with no spread become 0.
pub fn stv(stips: &[Stip]) -> Result<Vec<StvDescriptor>, DescriptorError> {
    let origin = stv_origin(stips).ok_or(DescriptorError::EmptyStipSet)?;
    let raw: Vec<[f64; 4]> = stips
        .iter()
        .map(|s| {
            let v = s.as_f64();
            std::array::from_fn(|d| v[d] - origin[d])
        })
        .collect();
    let mut max = [0.0f64; 4];
    for v in &raw {
        for d in 0..4 {
            max[d] = max[d].max(v[d]);
        }
    }
    Ok(raw
        .into_iter()
        .map(|v| StvDescriptor {
            values: std::array::from_fn(|d| if max[d] > 0.0 { v[d] / max[d] } else { 0.0 }),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stip::StipKind;
    use proptest::prelude::*;

    fn s(x: usize, y: usize, z: u32, f: usize) -> Stip {
        Stip {
            x,
            y,
            z,
            f,
            kind: StipKind::Shape,
        }
    }

    #[test]
    fn two_point_example() {
        let pts = [s(2, 3, 4, 1), s(5, 1, 7, 2)];
        assert_eq!(stv_origin(&pts), Some([2.0, 1.0, 4.0, 1.0]));
        let d = stv(&pts).unwrap();
        assert_eq!(d[0].values, [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(d[1].values, [1.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn single_point_and_empty_set() {
        assert_eq!(stv(&[s(9, 9, 900, 3)]).unwrap()[0].values, [0.0; 4]);
        assert!(matches!(stv(&[]), Err(DescriptorError::EmptyStipSet)));
    }

    fn point_set() -> impl Strategy<Value = Vec<Stip>> {
        prop::collection::vec((0usize..300, 0usize..300, 500u32..5000, 0usize..100), 1..40)
            .prop_map(|v| v.into_iter().map(|(x, y, z, f)| s(x, y, z, f)).collect())
    }

    proptest! {
        #[test]
        fn translation_invariant(pts in point_set()) {
            let moved: Vec<Stip> = pts.iter().map(|p| s(p.x + 10, p.y + 10, p.z + 10, p.f + 3)).collect();
            prop_assert_eq!(stv(&pts).unwrap(), stv(&moved).unwrap());
        }

        #[test]
        fn range_and_maximum(pts in point_set()) {
            let d = stv(&pts).unwrap();
            for dim in 0..4 {
                let vals: Vec<f64> = d.iter().map(|v| v.values[dim]).collect();
                prop_assert!(vals.iter().all(|&v| (0.0..=1.0).contains(&v)));
                let spread = pts.iter().any(|p| p.as_f64()[dim] != pts[0].as_f64()[dim]);
                let max = vals.iter().cloned().fold(0.0, f64::max);
                prop_assert_eq!(max, if spread { 1.0 } else { 0.0 });
            }
        }
    }
}
