//! Orbit labels: the canonical description of a tuple orbit.
//!
//! A label of arity `k` assigns a color to every pair of positions. Equal
//! positions carry the equality color, so the equality pattern is implicit.
//! The colors are packed four bits per pair into a `u128`, with the pairs in
//! lexicographic order from the most significant nibble down. Comparing
//! codes therefore compares the pair color sequences lexicographically.

use std::fmt;

/// Largest supported arity of a label, and the default enumeration cap.
pub const MAX_ARITY: usize = 8;

/// Largest number of colors in a palette, counting `=` and `N`.
pub const MAX_COLORS: usize = 16;

const SLOTS: usize = MAX_ARITY * (MAX_ARITY - 1) / 2;

/// Index of a color in a palette. `0` is `=`, `1` is `N`, real colors follow.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Color(pub u8);

impl Color {
    pub const EQ: Color = Color(0);
    pub const NULL: Color = Color(1);

    pub fn is_real(self) -> bool {
        self.0 >= 2
    }

    pub fn is_eq(self) -> bool {
        self.0 == 0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[inline]
pub(crate) fn slot(i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < MAX_ARITY);
    i * (2 * MAX_ARITY - i - 1) / 2 + (j - i - 1)
}

#[inline]
pub(crate) fn shift(i: usize, j: usize) -> u32 {
    (4 * (SLOTS - 1 - slot(i, j))) as u32
}

/// Pack pair colors in lexicographic pair order.
#[inline]
pub(crate) fn pack(arity: usize, color: impl Fn(usize, usize) -> Color) -> u128 {
    let mut code = 0u128;
    for i in 0..arity {
        for j in i + 1..arity {
            code |= (color(i, j).0 as u128) << shift(i, j);
        }
    }
    code
}

/// Canonical representative of an orbit of `arity`-tuples.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrbitLabel {
    arity: u8,
    code: u128,
}

impl OrbitLabel {
    /// Builds a label from a pair coloring. The caller guarantees that the
    /// equality color describes an equivalence relation and that colors are
    /// constant across equal positions.
    pub(crate) fn from_pairs(arity: usize, color: impl Fn(usize, usize) -> Color) -> Self {
        debug_assert!(arity <= MAX_ARITY);
        OrbitLabel {
            arity: arity as u8,
            code: pack(arity, color),
        }
    }

    pub(crate) fn from_code(arity: usize, code: u128) -> Self {
        OrbitLabel {
            arity: arity as u8,
            code,
        }
    }

    pub(crate) fn code(&self) -> u128 {
        self.code
    }

    /// Builds a label from a class assignment per position and a coloring of
    /// class pairs. Class ids may be arbitrary; `class_color` is only asked
    /// about pairs of distinct class ids and must not return `=`.
    pub fn from_classes(classes: &[usize], class_color: impl Fn(usize, usize) -> Color) -> Self {
        Self::from_pairs(classes.len(), |i, j| {
            if classes[i] == classes[j] {
                Color::EQ
            } else {
                class_color(classes[i], classes[j])
            }
        })
    }

    /// Label whose positions are pairwise distinct, with the given pair colors.
    pub fn injective(arity: usize, color: impl Fn(usize, usize) -> Color) -> Self {
        Self::from_classes(&(0..arity).collect::<Vec<_>>(), color)
    }

    /// The binary label of an orbital.
    pub fn orbital(c: Color) -> Self {
        OrbitLabel::from_pairs(2, |_, _| c)
    }

    pub fn arity(&self) -> usize {
        self.arity as usize
    }

    /// Color of the pair of positions `(i, j)`, zero-based.
    #[inline]
    pub fn color(&self, i: usize, j: usize) -> Color {
        if i == j {
            return Color::EQ;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        Color(((self.code >> shift(a, b)) & 0xf) as u8)
    }

    /// The orbital of a binary label.
    pub fn as_orbital(&self) -> Option<Color> {
        (self.arity == 2).then(|| self.color(0, 1))
    }

    /// Restricted-growth equality partition.
    pub fn partition(&self) -> Vec<usize> {
        let k = self.arity();
        let mut part = vec![usize::MAX; k];
        let mut next = 0;
        for p in 0..k {
            if part[p] != usize::MAX {
                continue;
            }
            part[p] = next;
            for q in p + 1..k {
                if self.color(p, q).is_eq() {
                    part[q] = next;
                }
            }
            next += 1;
        }
        part
    }

    /// Number of equality classes.
    pub fn classes(&self) -> usize {
        self.partition().iter().max().map_or(0, |m| m + 1)
    }

    /// Restriction to the given zero-based positions, which may repeat.
    pub fn restrict(&self, coords: &[usize]) -> OrbitLabel {
        OrbitLabel::from_pairs(coords.len(), |a, b| self.color(coords[a], coords[b]))
    }

    /// Colors between classes of the partition, keyed by class pairs in
    /// lexicographic order.
    pub fn class_edges(&self) -> Vec<(usize, usize, Color)> {
        let part = self.partition();
        let m = self.classes();
        let mut reps = vec![0; m];
        for (p, &c) in part.iter().enumerate().rev() {
            reps[c] = p;
        }
        let mut out = Vec::new();
        for a in 0..m {
            for b in a + 1..m {
                out.push((a, b, self.color(reps[a], reps[b])));
            }
        }
        out
    }

    /// The quotient structure on equality classes.
    pub fn quotient(&self) -> crate::template::ColoredStructure {
        let m = self.classes();
        let mut s = crate::template::ColoredStructure::empty(m);
        for (a, b, c) in self.class_edges() {
            s.set(a, b, c);
        }
        s
    }

    /// Builds a label from a restricted-growth partition and class edge
    /// colors. Missing class pairs are an error, as are `=` edges.
    pub fn from_partition(partition: &[usize], edges: &[(usize, usize, Color)]) -> Result<Self, String> {
        if partition.len() > MAX_ARITY {
            return Err(format!("arity {} exceeds {}", partition.len(), MAX_ARITY));
        }
        let mut next = 0;
        for &p in partition {
            if p > next {
                return Err("partition is not in restricted-growth form".into());
            }
            if p == next {
                next += 1;
            }
        }
        let m = next;
        let mut cc = vec![None; m * m];
        for &(a, b, c) in edges {
            if a >= m || b >= m || a == b {
                return Err(format!("edge ({a},{b}) does not join two classes"));
            }
            if c.is_eq() {
                return Err(format!("edge ({a},{b}) uses the equality color"));
            }
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            if cc[a * m + b].replace(c).is_some_and(|old| old != c) {
                return Err(format!("edge ({a},{b}) colored twice"));
            }
        }
        for a in 0..m {
            for b in a + 1..m {
                if cc[a * m + b].is_none() {
                    return Err(format!("class pair ({a},{b}) has no color"));
                }
            }
        }
        Ok(OrbitLabel::from_classes(partition, |a, b| {
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            cc[a * m + b].unwrap()
        }))
    }

    /// Relabels positions: position `i` of the result is position `perm[i]`
    /// of `self`. Same as `restrict` with a permutation.
    pub fn permute(&self, perm: &[usize]) -> OrbitLabel {
        self.restrict(perm)
    }

    /// Pair colors in lexicographic pair order.
    pub fn pair_colors(&self) -> Vec<Color> {
        let k = self.arity();
        let mut out = Vec::with_capacity(k * (k.saturating_sub(1)) / 2);
        for i in 0..k {
            for j in i + 1..k {
                out.push(self.color(i, j));
            }
        }
        out
    }
}

impl fmt::Debug for OrbitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (n, c) in self.pair_colors().iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            match c.0 {
                0 => write!(f, "=")?,
                1 => write!(f, "N")?,
                x => write!(f, "c{}", x - 2)?,
            }
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: Color = Color(2);
    const N: Color = Color::NULL;

    #[test]
    fn slots_are_lexicographic_and_fit() {
        let mut prev = None;
        for i in 0..MAX_ARITY {
            for j in i + 1..MAX_ARITY {
                let s = slot(i, j);
                if let Some(p) = prev {
                    assert_eq!(s, p + 1);
                }
                prev = Some(s);
            }
        }
        assert_eq!(prev, Some(SLOTS - 1));
        const { assert!(4 * SLOTS <= 128) };
    }

    #[test]
    fn partition_and_edges_round_trip() {
        let l = OrbitLabel::from_partition(&[0, 1, 1, 2], &[(0, 1, E), (0, 2, N), (1, 2, N)]).unwrap();
        assert_eq!(l.partition(), vec![0, 1, 1, 2]);
        assert_eq!(l.color(1, 2), Color::EQ);
        assert_eq!(l.color(0, 2), E);
        assert_eq!(l.color(3, 2), N);
        assert_eq!(l.class_edges(), vec![(0, 1, E), (0, 2, N), (1, 2, N)]);
        let again = OrbitLabel::from_partition(&l.partition(), &l.class_edges()).unwrap();
        assert_eq!(again, l);
    }

    #[test]
    fn bad_partitions_are_rejected() {
        assert!(OrbitLabel::from_partition(&[1, 0], &[]).is_err());
        assert!(OrbitLabel::from_partition(&[0, 1], &[]).is_err());
        assert!(OrbitLabel::from_partition(&[0, 1], &[(0, 1, Color::EQ)]).is_err());
    }

    #[test]
    fn restriction_reads_off_pairs() {
        let l = OrbitLabel::injective(4, |i, j| if (i, j) == (0, 1) { E } else { N });
        assert_eq!(l.restrict(&[0, 1]), OrbitLabel::orbital(E));
        assert_eq!(l.restrict(&[2, 3]), OrbitLabel::orbital(N));
        assert_eq!(l.restrict(&[1, 1]), OrbitLabel::orbital(Color::EQ));
        assert_eq!(l.restrict(&[0, 1, 2, 3]), l);
    }

    #[test]
    fn ordering_puts_equality_first() {
        let eq = OrbitLabel::orbital(Color::EQ);
        let n = OrbitLabel::orbital(N);
        let e = OrbitLabel::orbital(E);
        assert!(eq < n && n < e);
    }
}
