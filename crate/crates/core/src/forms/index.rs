//! Strictly increasing multi-indices, stored as bitmasks, and the sign bookkeeping of
//! wedge products of coordinate differentials.

/// Masks of all k-element subsets of {0..n}, ordered lexicographically by their increasing tuples.
pub fn subsets(n: usize, k: usize) -> Vec<u8> {
    fn rec(start: usize, n: usize, k: usize, acc: u8, out: &mut Vec<u8>) {
        if k == 0 {
            out.push(acc);
            return;
        }
        for i in start..n {
            rec(i + 1, n, k - 1, acc | (1 << i), out);
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, 0, &mut out);
    }
    out
}

/// Increasing tuple of a mask.
pub fn members(mask: u8) -> Vec<usize> {
    (0..8).filter(|i| mask & (1 << i) != 0).collect()
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of elements of `mask` strictly below `index`.
pub fn rank_below(mask: u8, index: usize) -> usize {
    (mask & ((1u8 << index) - 1)).count_ones() as usize
}

/// Sign of moving a new factor with `index` from the front of the sorted block `mask` to its
/// sorted position, together with the enlarged mask; `None` if the factor already occurs.
pub fn insert_front(mask: u8, index: usize) -> Option<(f64, u8)> {
    if mask & (1 << index) != 0 {
        return None;
    }
    let sign = if rank_below(mask, index) % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, mask | (1 << index)))
}

/// One coordinate differential: dz^i or dz̄^i.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Holo(usize),
    Anti(usize),
}

/// Rewrites a wedge word of differentials as ± dz^A ∧ dz̄^B with A, B increasing.
/// Returns `None` if a differential repeats (the word vanishes).
pub fn canonicalize(word: &[Slot]) -> Option<(f64, u8, u8)> {
    // Sort key: holomorphic slots first, then by index. Count inversions for the sign.
    let key = |s: &Slot| match *s {
        Slot::Holo(i) => i,
        Slot::Anti(i) => 16 + i,
    };
    let keys: Vec<usize> = word.iter().map(key).collect();
    let mut inversions = 0usize;
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            if keys[i] == keys[j] {
                return None;
            }
            if keys[i] > keys[j] {
                inversions += 1;
            }
        }
    }
    let mut holo = 0u8;
    let mut anti = 0u8;
    for s in word {
        match *s {
            Slot::Holo(i) => holo |= 1 << i,
            Slot::Anti(i) => anti |= 1 << i,
        }
    }
    Some((if inversions % 2 == 0 { 1.0 } else { -1.0 }, holo, anti))
}

/// The word dz^A ∧ dz̄^B of a stored component.
pub fn word_of(holo: u8, anti: u8) -> Vec<Slot> {
    members(holo).into_iter().map(Slot::Holo).chain(members(anti).into_iter().map(Slot::Anti)).collect()
}

/// Component layout of (p,q)-forms in dimension n: index = holo_position · C(n,q) + anti_position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub dim: usize,
    pub p: usize,
    pub q: usize,
    holo: Vec<u8>,
    anti: Vec<u8>,
    holo_pos: [usize; 256],
    anti_pos: [usize; 256],
}

impl Layout {
    pub fn new(dim: usize, p: usize, q: usize) -> Self {
        let holo = subsets(dim, p);
        let anti = subsets(dim, q);
        let mut holo_pos = [usize::MAX; 256];
        let mut anti_pos = [usize::MAX; 256];
        for (i, &m) in holo.iter().enumerate() {
            holo_pos[m as usize] = i;
        }
        for (i, &m) in anti.iter().enumerate() {
            anti_pos[m as usize] = i;
        }
        Self { dim, p, q, holo, anti, holo_pos, anti_pos }
    }

    pub fn len(&self) -> usize {
        self.holo.len() * self.anti.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn component(&self, holo: u8, anti: u8) -> usize {
        self.holo_pos[holo as usize] * self.anti.len() + self.anti_pos[anti as usize]
    }

    /// (holomorphic mask, antiholomorphic mask) of a component.
    pub fn masks(&self, comp: usize) -> (u8, u8) {
        (self.holo[comp / self.anti.len()], self.anti[comp % self.anti.len()])
    }

    pub fn components(&self) -> impl Iterator<Item = (usize, u8, u8)> + '_ {
        (0..self.len()).map(move |c| {
            let (a, b) = self.masks(c);
            (c, a, b)
        })
    }
}
