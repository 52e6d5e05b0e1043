//! Bit streams packed LSB-first into 64-bit words: bit `i` lives in
//! `words[i / 64]` at position `i % 64`.

#[inline]
pub fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

#[inline]
fn low_mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

#[inline]
pub fn get(words: &[u64], i: usize) -> bool {
    words[i / 64] >> (i % 64) & 1 == 1
}

#[inline]
pub fn set(words: &mut [u64], i: usize) {
    words[i / 64] |= 1 << (i % 64);
}

/// `len <= 64` bits starting at bit `offset`, right-aligned.
#[inline]
pub fn read(words: &[u64], offset: usize, len: usize) -> u64 {
    debug_assert!(len <= 64);
    if len == 0 {
        return 0;
    }
    let w = offset / 64;
    let s = offset % 64;
    let mut v = words[w] >> s;
    if s != 0 && s + len > 64 {
        v |= words[w + 1] << (64 - s);
    }
    v & low_mask(len)
}

/// ORs the low `len <= 64` bits of `value` into the stream at `offset`.
#[inline]
pub fn or(words: &mut [u64], offset: usize, len: usize, value: u64) {
    debug_assert!(len <= 64);
    if len == 0 {
        return;
    }
    let value = value & low_mask(len);
    let w = offset / 64;
    let s = offset % 64;
    words[w] |= value << s;
    if s != 0 && s + len > 64 {
        words[w + 1] |= value >> (64 - s);
    }
}

pub fn popcount(words: &[u64]) -> u64 {
    words.iter().map(|w| w.count_ones() as u64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn read_matches_bit_loop(words in proptest::collection::vec(any::<u64>(), 3), offset in 0usize..128, len in 0usize..=64) {
            let v = read(&words, offset, len);
            for k in 0..64 {
                let expect = k < len && get(&words, offset + k);
                prop_assert_eq!(v >> k & 1 == 1, expect);
            }
        }

        #[test]
        fn or_matches_bit_loop(value in any::<u64>(), offset in 0usize..128, len in 0usize..=64) {
            let mut words = vec![0u64; 3];
            or(&mut words, offset, len, value);
            for i in 0..192 {
                let expect = i >= offset && i < offset + len && value >> (i - offset) & 1 == 1;
                prop_assert_eq!(get(&words, i), expect);
            }
        }
    }
}
