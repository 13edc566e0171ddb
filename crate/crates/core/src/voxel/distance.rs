/// L1 distance between two z-projection count maps. For occlusion-filled
/// volumes of equal side this equals their voxel Hamming distance.
pub fn projected_l1_distance(a: &[u16], b: &[u16]) -> u64 {
    assert_eq!(a.len(), b.len(), "projection maps must have equal size");
    a.iter().zip(b).map(|(p, q)| p.abs_diff(*q) as u64).sum()
}

/// Same as [`projected_l1_distance`] but gives up once the partial sum
/// exceeds `bound`, returning `None`.
pub(crate) fn l1_bounded(a: &[u16], b: &[u16], bound: u64) -> Option<u64> {
    let mut acc = 0u64;
    for (ca, cb) in a.chunks(64).zip(b.chunks(64)) {
        acc += ca.iter().zip(cb).map(|(p, q)| p.abs_diff(*q) as u64).sum::<u64>();
        if acc > bound {
            return None;
        }
    }
    Some(acc)
}
